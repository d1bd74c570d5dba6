use super::*;
use crate::corpus;
use crate::molgraph::randomize_smiles;

fn mol(s: &str) -> MolGraph {
    parse_smiles(s).unwrap_or_else(|e| panic!("bad SMILES {s:?}: {e}"))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn validity_counts_parse_failures() {
    let v = validity(&strings(&["C", "C(", "CC"]));
    assert_eq!(v.n_samples, 3);
    assert_eq!(v.n_valid, 2);
    assert!((v.fraction() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn validity_of_empty_input_is_flagged_zero() {
    let v = validity(&[]);
    assert_eq!(v.n_samples, 0);
    assert_eq!(v.fraction(), 0.0);
}

#[test]
fn validity_matches_reparse_oracle() {
    let mut samples = corpus::synthesize(300, 71);
    samples.push("C(".to_string());
    samples.push("c1cc".to_string());
    let v = validity(&samples);
    let oracle = samples.iter().filter(|s| parse_smiles(s).is_ok()).count();
    assert_eq!(v.n_valid, oracle);
}

#[test]
fn uniqueness_collapses_duplicates() {
    let copies: Vec<MolGraph> = (0..100).map(|_| mol("CCO")).collect();
    assert!((uniqueness(&copies) - 0.01).abs() < 1e-12);
    let distinct: Vec<MolGraph> = ["C", "CC", "CCC", "CCCC"].iter().map(|s| mol(s)).collect();
    assert_eq!(uniqueness(&distinct), 1.0);
}

#[test]
fn uniqueness_matches_set_oracle() {
    let graphs: Vec<MolGraph> = corpus::synthesize(500, 72)
        .iter()
        .map(|s| mol(s))
        .collect();
    let oracle: std::collections::HashSet<String> =
        graphs.iter().map(canonical_smiles).collect();
    let want = oracle.len() as f64 / graphs.len() as f64;
    assert!((uniqueness(&graphs) - want).abs() < 1e-12);
}

#[test]
fn novelty_edges() {
    let graphs: Vec<MolGraph> = ["CCO", "CC"].iter().map(|s| mol(s)).collect();
    let training: std::collections::HashSet<String> =
        graphs.iter().map(canonical_smiles).collect();
    assert_eq!(novelty(&graphs, &training), 0.0);
    let disjoint: std::collections::HashSet<String> =
        [canonical_smiles(&mol("c1ccccc1"))].into_iter().collect();
    assert_eq!(novelty(&graphs, &disjoint), 1.0);
}

#[test]
fn tanimoto_identities() {
    let x = Fingerprint::for_molecule(&mol("CC(=O)Nc1ccccc1"));
    assert_eq!(tanimoto(&x, &x), 1.0);
    let empty = Fingerprint::from_bits(&[]);
    assert_eq!(tanimoto(&empty, &empty), 1.0);
    let a = Fingerprint::from_bits(&[1, 5, 9]);
    let b = Fingerprint::from_bits(&[2, 6, 10]);
    assert_eq!(tanimoto(&a, &b), 0.0);
}

#[test]
fn tanimoto_matches_popcount_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let bits_a: Vec<usize> = (0..rng.random_range(0..200))
            .map(|_| rng.random_range(0..FP_BITS))
            .collect();
        let bits_b: Vec<usize> = (0..rng.random_range(0..200))
            .map(|_| rng.random_range(0..FP_BITS))
            .collect();
        let a = Fingerprint::from_bits(&bits_a);
        let b = Fingerprint::from_bits(&bits_b);
        let set_a: std::collections::HashSet<usize> = bits_a.into_iter().collect();
        let set_b: std::collections::HashSet<usize> = bits_b.into_iter().collect();
        let inter = set_a.intersection(&set_b).count() as f64;
        let union = set_a.union(&set_b).count() as f64;
        let want = if union == 0.0 { 1.0 } else { inter / union };
        assert!((tanimoto(&a, &b) - want).abs() < 1e-15);
    }
}

#[test]
fn fingerprints_are_isomorphism_invariant() {
    for s in corpus::synthesize(60, 73) {
        let g = mol(&s);
        let reference = Fingerprint::for_molecule(&g);
        for seed in 0..5 {
            let reparsed = mol(&randomize_smiles(&g, seed));
            assert_eq!(
                Fingerprint::for_molecule(&reparsed),
                reference,
                "{s} seed {seed}"
            );
        }
    }
}

#[test]
fn internal_diversity_edges() {
    let copies: Vec<MolGraph> = (0..10).map(|_| mol("CCO")).collect();
    let d = internal_diversity(&copies, 1000, 0);
    assert_eq!(d.value, 0.0);
    assert!(!d.subsampled);

    // Methane and water share no fingerprint bits, so diversity is 1.
    let pair = vec![mol("C"), mol("O")];
    let fa = Fingerprint::for_molecule(&pair[0]);
    let fb = Fingerprint::for_molecule(&pair[1]);
    assert_eq!(tanimoto(&fa, &fb), 0.0, "fixture assumption");
    assert_eq!(internal_diversity(&pair, 1000, 0).value, 1.0);
}

#[test]
fn internal_diversity_matches_brute_force() {
    let graphs: Vec<MolGraph> = corpus::synthesize(100, 74)
        .iter()
        .map(|s| mol(s))
        .collect();
    let got = internal_diversity(&graphs, 1000, 0);
    assert!(!got.subsampled);
    let fps: Vec<Fingerprint> = graphs.iter().map(Fingerprint::for_molecule).collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..fps.len() {
        for j in (i + 1)..fps.len() {
            sum += tanimoto(&fps[i], &fps[j]);
            pairs += 1;
        }
    }
    let want = 1.0 - sum / pairs as f64;
    assert!((got.value - want).abs() < 1e-12);
    assert!((0.0..=1.0).contains(&got.value));
}

#[test]
fn internal_diversity_subsampling_is_seeded() {
    let graphs: Vec<MolGraph> = corpus::synthesize(80, 75)
        .iter()
        .map(|s| mol(s))
        .collect();
    let a = internal_diversity(&graphs, 40, 9);
    let b = internal_diversity(&graphs, 40, 9);
    assert_eq!(a, b);
    assert!(a.subsampled);
    assert_eq!(a.used, 40);
}

#[test]
fn fragmented_pct_counts_components() {
    let graphs = vec![mol("CC.O"), mol("CCO")];
    assert!((fragmented_pct(&graphs) - 0.5).abs() < 1e-12);
}

#[test]
fn encode_decode_corpus_is_never_fragmented() {
    use crate::fragmenter::FragmentationScheme;
    use crate::safecodec::{decode, encode, BlockOrder};
    let graphs: Vec<MolGraph> = corpus::synthesize(50, 76)
        .iter()
        .map(|s| {
            let g = mol(s);
            decode(&encode(&g, FragmentationScheme::Brics, BlockOrder::Canonical).unwrap())
                .unwrap()
        })
        .collect();
    assert_eq!(fragmented_pct(&graphs), 0.0);
}

#[test]
fn match_constraint_by_construction() {
    let scaffold = mol("[*]c1ccc([*])cc1");
    let built = vec![mol("Cc1ccc(C)cc1"), mol("CCc1ccc(O)cc1")];
    let c = Constraint::Scaffold(scaffold);
    assert_eq!(match_constraint(&built, &c).unwrap(), 1.0);
    let missing = vec![mol("C1CCCCC1"), mol("CCO")];
    assert_eq!(match_constraint(&missing, &c).unwrap(), 0.0);
}

#[test]
fn match_constraint_fragment_pair() {
    let a = mol("[*]C");
    let b = mol("[*]O");
    let c = Constraint::FragmentPair(a, b);
    let graphs = vec![mol("CCO"), mol("CC")];
    assert_eq!(match_constraint(&graphs, &c).unwrap(), 0.5);
}

#[test]
fn moses_filter_rules() {
    assert_eq!(
        moses_filter(&mol("[NH4+].[O-]C(=O)C")),
        Err(FilterFailure::ChargedAtom)
    );
    assert_eq!(moses_filter(&mol("c1ccccc1")), Ok(()));
    assert_eq!(
        moses_filter(&mol("C1CCCCCCCCCCC1")),
        Err(FilterFailure::LargeRing { size: 12 })
    );
    assert_eq!(moses_filter(&mol("C1CCCCCCC1")), Ok(()), "8-ring passes");
    assert_eq!(
        moses_filter(&mol("C1CCCCCCCC1")),
        Err(FilterFailure::LargeRing { size: 9 })
    );
    assert_eq!(
        moses_filter(&mol("[*]c1ccccc1")),
        Err(FilterFailure::DisallowedElement)
    );
}

#[test]
fn synthesized_corpus_passes_the_filter() {
    let graphs: Vec<MolGraph> = corpus::synthesize(500, 77)
        .iter()
        .map(|s| mol(s))
        .collect();
    assert!(filter_pass(&graphs) >= 0.99);
}

#[test]
fn mol_weight_values() {
    assert!((mol_weight(&mol("C")) - 16.04).abs() <= 0.01);
    assert!((mol_weight(&mol("O")) - 18.02).abs() <= 0.01);
}

#[test]
fn empty_report_is_zeroed() {
    let report = build_report(&[], &Default::default(), None).unwrap();
    assert_eq!(report.n_samples, 0);
    assert_eq!(report.n_valid, 0);
    assert_eq!(report.validity, 0.0);
    assert_eq!(report.uniqueness, 0.0);
    assert_eq!(report.novelty, 0.0);
    assert_eq!(report.int_div, 0.0);
    assert_eq!(report.fragmented_pct, 0.0);
}

#[test]
fn report_matches_hand_computation_on_fixture() {
    // Ten samples: one syntax error, one valence error, one duplicate of
    // a training molecule, one fragmented pair, six misc valid.
    let training: std::collections::HashSet<String> =
        [canonical_smiles(&mol("CCO"))].into_iter().collect();
    let samples = strings(&[
        "CCO",       // valid, in training
        "C(",        // invalid syntax
        "O(C)(C)C",  // invalid valence
        "CC.O",      // valid, fragmented
        "c1ccccc1",  // valid
        "CC(=O)N",   // valid
        "CCN",       // valid
        "CCN",       // duplicate of the one above
        "ClCCl",     // valid
        "N#CC",      // valid
    ]);
    let report = build_report(&samples, &training, None).unwrap();
    assert_eq!(report.n_samples, 10);
    assert_eq!(report.n_valid, 8);
    assert!((report.validity - 0.8).abs() < 1e-12);
    // 7 distinct canonicals over 8 valid graphs.
    assert!((report.uniqueness - 7.0 / 8.0).abs() < 1e-12);
    // 1 of 7 distinct canonicals is in the training set.
    assert!((report.novelty - 6.0 / 7.0).abs() < 1e-12);
    assert!((report.fragmented_pct - 1.0 / 8.0).abs() < 1e-12);
    assert_eq!(report.filter_pass, Some(1.0));
    assert_eq!(report.tanimoto_power, 1);

    let weights: Vec<f64> = validity(&samples).graphs.iter().map(mol_weight).collect();
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    assert!((report.mol_weight_mean - mean).abs() < 1e-9);
}

#[test]
fn report_round_trips_through_json() {
    let samples = strings(&["CCO", "CC", "bad("]);
    let report = build_report(&samples, &Default::default(), None).unwrap();
    let json = serde_json::to_string_pretty(&report).unwrap();
    let back: MetricsReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}

#[test]
fn aggregate_mean_and_std() {
    let samples_a = strings(&["CCO", "CC"]);
    let samples_b = strings(&["CCO", "C("]);
    let a = build_report(&samples_a, &Default::default(), None).unwrap();
    let b = build_report(&samples_b, &Default::default(), None).unwrap();
    let agg = Aggregate::from_reports(&[a.clone(), b.clone()]);
    assert_eq!(agg.runs, 2);
    let want_mean = (a.validity + b.validity) / 2.0;
    assert!((agg.validity.mean - want_mean).abs() < 1e-12);
    let want_std =
        (((a.validity - want_mean).powi(2) + (b.validity - want_mean).powi(2)) / 2.0).sqrt();
    assert!((agg.validity.std - want_std).abs() < 1e-12);

    let single = Aggregate::from_reports(&[a]);
    assert_eq!(single.validity.std, 0.0, "single run has zero std");

    let row = agg.csv_row("smiles-run");
    assert!(row.starts_with("smiles-run,2,"));
    assert_eq!(
        row.split(',').count(),
        Aggregate::csv_header().split(',').count()
    );
}
