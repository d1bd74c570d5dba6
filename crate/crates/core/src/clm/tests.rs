use super::*;
use crate::corpus;
use crate::molgraph::parse_smiles;
use crate::safecodec::{encode, BlockOrder};
use crate::fragmenter::FragmentationScheme;

fn train_lines(lines: &[&str], order: usize) -> NGramModel {
    let corpus: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    NGramModel::train(&corpus, Notation::Smiles, order, SmoothingParams::default()).unwrap()
}

#[test]
fn tokenize_two_letter_elements() {
    let toks = tokenize("Clc1", Notation::Smiles).unwrap();
    let surfaces: Vec<&str> = toks.iter().map(|t| t.surface.as_str()).collect();
    assert_eq!(surfaces, ["Cl", "c", "1"]);
    assert_eq!(toks[0].kind, TokenKind::Atom);
    assert_eq!(toks[2].kind, TokenKind::Digit);
}

#[test]
fn tokenize_percent_digits() {
    let toks = tokenize("C%12C", Notation::Smiles).unwrap();
    let surfaces: Vec<&str> = toks.iter().map(|t| t.surface.as_str()).collect();
    assert_eq!(surfaces, ["C", "%12", "C"]);
    assert_eq!(toks[1].kind, TokenKind::PercentDigit);
}

#[test]
fn tokenize_bracket_atom_is_single_token() {
    let toks = tokenize("[nH]", Notation::Smiles).unwrap();
    assert_eq!(toks.len(), 1);
    assert_eq!(toks[0].surface, "[nH]");
    assert_eq!(toks[0].kind, TokenKind::BracketAtom);
}

#[test]
fn tokenize_errors() {
    assert_eq!(
        tokenize("[nH", Notation::Smiles).unwrap_err(),
        TokenizeError::UnterminatedBracket { pos: 0 }
    );
    assert_eq!(
        tokenize("C%1", Notation::Smiles).unwrap_err(),
        TokenizeError::MalformedPercent { pos: 1 }
    );
    assert!(matches!(
        tokenize("C/C", Notation::Smiles),
        Err(TokenizeError::UnexpectedChar { ch: '/', .. })
    ));
}

#[test]
fn tokenizer_is_lossless_on_corpus() {
    for line in corpus::synthesize(100, 51) {
        let toks = tokenize(&line, Notation::Smiles).unwrap();
        assert_eq!(detokenize(&toks), line);
    }
}

#[test]
fn vocabulary_is_deterministic_and_has_specials() {
    let lines = ["CCO", "c1ccccc1", "Clc1ccccc1"];
    let a = Vocabulary::build(lines.iter().copied(), Notation::Smiles).unwrap();
    let b = Vocabulary::build(lines.iter().copied(), Notation::Smiles).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.surface(a.bos_id()), BOS_TOKEN);
    assert_eq!(a.surface(a.eos_id()), EOS_TOKEN);
    assert_eq!(a.surface(a.unk_id()), UNK_TOKEN);
    assert!(a.id("Cl").is_some());
    assert!(a.id("Br").is_none());
}

#[test]
fn smiles_vocabulary_size_is_in_a_plausible_band() {
    let corpus = corpus::synthesize(2000, 52);
    let vocab =
        Vocabulary::build(corpus.iter().map(String::as_str), Notation::Smiles).unwrap();
    // Fixed token set per representation; drug-like SMILES land in the
    // few-dozen range.
    assert!(
        (15..=45).contains(&vocab.len()),
        "vocab size {}",
        vocab.len()
    );
}

#[test]
fn safe_vocabulary_is_larger_than_smiles() {
    let corpus = corpus::synthesize(400, 53);
    let smiles_vocab =
        Vocabulary::build(corpus.iter().map(String::as_str), Notation::Smiles).unwrap();
    let safe_lines: Vec<String> = corpus
        .iter()
        .map(|s| {
            let g = parse_smiles(s).unwrap();
            encode(&g, FragmentationScheme::Brics, BlockOrder::Canonical)
                .unwrap()
                .text()
                .to_string()
        })
        .collect();
    let safe_vocab =
        Vocabulary::build(safe_lines.iter().map(String::as_str), Notation::Safe).unwrap();
    // Cross-fragment digits and the block separator enlarge the SAFE set.
    assert!(
        safe_vocab.len() > smiles_vocab.len(),
        "safe {} vs smiles {}",
        safe_vocab.len(),
        smiles_vocab.len()
    );
}

#[test]
fn empty_corpus_is_rejected() {
    assert!(matches!(
        NGramModel::train(&[], Notation::Smiles, 2, SmoothingParams::default()),
        Err(TrainError::EmptyCorpus)
    ));
}

#[test]
fn bad_order_and_discount_are_rejected() {
    let corpus = vec!["CC".to_string()];
    assert!(matches!(
        NGramModel::train(&corpus, Notation::Smiles, 1, SmoothingParams::default()),
        Err(TrainError::OrderOutOfRange { order: 1 })
    ));
    assert!(matches!(
        NGramModel::train(&corpus, Notation::Smiles, 2, SmoothingParams { discount: 1.5 }),
        Err(TrainError::BadDiscount { .. })
    ));
}

/// Hand-computed absolute-discount probabilities for the corpus {"CC"}
/// at order 2, discount 0.75.
///
/// Vocabulary: bos, eos, unk, C; prediction alphabet {eos, unk, C},
/// uniform base 1/3. Unigram counts C:2, eos:1 over 3 events:
///   P1(C)   = (2-.75)/3 + (.75*2/3)(1/3) = 0.583333...
///   P1(eos) = (1-.75)/3 + (.75*2/3)(1/3) = 0.25
///   P1(unk) =              (.75*2/3)(1/3) = 0.166666...
/// Context [bos] (count C:1):
///   P(C|bos)   = (1-.75)/1 + .75*(1/1)*P1(C) = 0.6875
///   P(eos|bos) =             .75*P1(eos)     = 0.1875
/// Context [C] (counts C:1, eos:1):
///   P(C|C)   = (1-.75)/2 + (.75*2/2)*P1(C)   = 0.5625
///   P(eos|C) = (1-.75)/2 + (.75*2/2)*P1(eos) = 0.3125
#[test]
fn hand_computed_bigram_probabilities() {
    let model = train_lines(&["CC"], 2);
    let v = model.vocab();
    let (bos, eos, unk) = (v.bos_id(), v.eos_id(), v.unk_id());
    let c = v.id("C").unwrap();

    let close = |got: f64, want: f64| (got - want).abs() < 1e-12;
    let after_bos = model.next_distribution(&[bos]);
    assert!(close(after_bos[c as usize], 0.6875), "{after_bos:?}");
    assert!(close(after_bos[eos as usize], 0.1875));
    assert!(close(after_bos[unk as usize], 0.125));

    let after_c = model.next_distribution(&[bos, c]);
    assert!(close(after_c[c as usize], 0.5625), "{after_c:?}");
    assert!(close(after_c[eos as usize], 0.3125));

    assert!(close(model.log2_prob(&[bos], c), 0.6875f64.log2()));
}

#[test]
fn greedy_sampling_reproduces_the_training_string() {
    let model = train_lines(&["CC"], 3);
    let out = sample(
        &model,
        &SamplerConfig {
            temperature: 0.0,
            ..Default::default()
        },
    );
    assert_eq!(out.text, "CC");
    assert!(!out.truncated);
}

#[test]
fn duplicated_corpus_cancels_in_conditionals_up_to_smoothing() {
    // The maximum-likelihood ratios are invariant under corpus
    // duplication; the residual difference is the discount term, so with
    // a near-zero discount the distributions must coincide tightly, and
    // at the default discount the argmax must be unchanged.
    let base: Vec<String> = corpus::synthesize(50, 54);
    let doubled: Vec<String> = base.iter().chain(base.iter()).cloned().collect();
    let tiny = SmoothingParams { discount: 0.01 };
    let m1 = NGramModel::train(&base, Notation::Smiles, 3, tiny).unwrap();
    let m2 = NGramModel::train(&doubled, Notation::Smiles, 3, tiny).unwrap();
    let d1 = NGramModel::train(&base, Notation::Smiles, 3, SmoothingParams::default()).unwrap();
    let d2 = NGramModel::train(&doubled, Notation::Smiles, 3, SmoothingParams::default()).unwrap();
    assert_eq!(m1.vocab(), m2.vocab());
    let v = m1.vocab();
    let argmax = |d: &[f64]| {
        d.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    };
    for line in base.iter().take(20) {
        let mut ids = vec![v.bos_id()];
        ids.extend(v.encode(line).unwrap());
        for j in 1..ids.len() {
            let p1 = m1.next_distribution(&ids[..j]);
            let p2 = m2.next_distribution(&ids[..j]);
            for t in 0..p1.len() {
                assert!(
                    (p1[t] - p2[t]).abs() < 0.02,
                    "{line} at {j}, token {t}: {} vs {}",
                    p1[t],
                    p2[t]
                );
            }
            let q1 = d1.next_distribution(&ids[..j]);
            let q2 = d2.next_distribution(&ids[..j]);
            assert_eq!(argmax(&q1), argmax(&q2), "{line} at {j}");
        }
    }
}

#[test]
fn distributions_sum_to_one_on_random_contexts() {
    let corpus = corpus::synthesize(200, 55);
    let model =
        NGramModel::train(&corpus, Notation::Smiles, 4, SmoothingParams::default()).unwrap();
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let n = model.vocab().len() as u32;
    for _ in 0..1000 {
        let len = rng.random_range(0..6usize);
        let ctx: Vec<u32> = (0..len).map(|_| rng.random_range(0..n)).collect();
        let dist = model.next_distribution(&ctx);
        let sum: f64 = dist.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "ctx {ctx:?} sums to {sum}");
        assert!(dist
            .iter()
            .enumerate()
            .all(|(i, &p)| p > 0.0 || i as u32 == model.vocab().bos_id()));
    }
}

#[test]
fn sampling_is_seed_deterministic() {
    let corpus = corpus::synthesize(100, 56);
    let model =
        NGramModel::train(&corpus, Notation::Smiles, 4, SmoothingParams::default()).unwrap();
    let cfg = SamplerConfig {
        seed: 1234,
        ..Default::default()
    };
    assert_eq!(sample(&model, &cfg), sample(&model, &cfg));
    let other = SamplerConfig { seed: 1235, ..cfg };
    assert_ne!(sample(&model, &cfg).text, sample(&model, &other).text);
}

#[test]
fn complete_preserves_the_prompt_prefix() {
    let corpus: Vec<String> = corpus::synthesize(150, 57)
        .iter()
        .map(|s| {
            let g = parse_smiles(s).unwrap();
            encode(&g, FragmentationScheme::Brics, BlockOrder::Canonical)
                .unwrap()
                .text()
                .to_string()
        })
        .collect();
    let model =
        NGramModel::train(&corpus, Notation::Safe, 4, SmoothingParams::default()).unwrap();
    let scaffold = parse_smiles("[*]c1ccccc1").unwrap();
    let prompt = crate::safecodec::scaffold_prompt(&scaffold).unwrap();
    for seed in 0..20 {
        let cfg = SamplerConfig {
            seed,
            ..Default::default()
        };
        let out = complete(&model, &prompt, &cfg).unwrap();
        assert!(out.text.starts_with(&prompt.text), "{}", out.text);
    }
}

#[test]
fn out_of_vocabulary_prompt_is_rejected() {
    let model = train_lines(&["CC", "CO"], 2);
    let scaffold = parse_smiles("[*]c1ccc(Br)cc1").unwrap();
    let prompt = crate::safecodec::scaffold_prompt(&scaffold).unwrap();
    match complete(&model, &prompt, &SamplerConfig::default()) {
        Err(ClmError::OutOfVocabularyPrompt { .. }) => {}
        other => panic!("expected OOV rejection, got {other:?}"),
    }
}

#[test]
fn eos_forced_completion_returns_prompt_unchanged() {
    // A prompt equal to a full training string: greedy continuation
    // should immediately emit eos, returning the prompt verbatim.
    let model = train_lines(&["CC.CC"], 4);
    let prompt = crate::safecodec::Prompt {
        text: "CC.CC".to_string(),
        open_digits: Default::default(),
        task: crate::safecodec::PromptTask::Decorate,
    };
    let cfg = SamplerConfig {
        temperature: 0.0,
        ..Default::default()
    };
    let out = complete(&model, &prompt, &cfg).unwrap();
    assert_eq!(out.text, "CC.CC");
}

#[test]
fn decorate_zero_samples_is_empty() {
    let model = train_lines(&["CC"], 2);
    let scaffold = parse_smiles("[*]C").unwrap();
    let out = decorate(&model, &scaffold, &SamplerConfig::default(), 0).unwrap();
    assert!(out.is_empty());
}

#[test]
fn decorate_never_drops_samples() {
    let corpus: Vec<String> = corpus::synthesize(200, 58)
        .iter()
        .map(|s| {
            let g = parse_smiles(s).unwrap();
            encode(&g, FragmentationScheme::Brics, BlockOrder::Canonical)
                .unwrap()
                .text()
                .to_string()
        })
        .collect();
    let model =
        NGramModel::train(&corpus, Notation::Safe, 5, SmoothingParams::default()).unwrap();
    let scaffold = parse_smiles("[*]c1ccc([*])cc1").unwrap();
    let n = 200;
    let samples = decorate(&model, &scaffold, &SamplerConfig::default(), n).unwrap();
    assert_eq!(samples.len(), n);
    // Every valid, digit-closing completion preserves the scaffold.
    for s in &samples {
        if s.valid && s.closed_all_digits {
            assert!(s.constraint_matched, "sample {:?}", s.text);
        }
        if s.valid {
            assert!(s.closed_all_digits, "valid implies closed: {:?}", s.text);
        }
    }
}

#[test]
fn link_two_single_atom_fragments() {
    let corpus: Vec<String> = corpus::synthesize(150, 59)
        .iter()
        .map(|s| {
            let g = parse_smiles(s).unwrap();
            encode(&g, FragmentationScheme::Hr, BlockOrder::Canonical)
                .unwrap()
                .text()
                .to_string()
        })
        .collect();
    let model =
        NGramModel::train(&corpus, Notation::Safe, 4, SmoothingParams::default()).unwrap();
    let a = parse_smiles("[*]C").unwrap();
    let b = parse_smiles("[*]O").unwrap();
    let samples = link(&model, &a, &b, &SamplerConfig::default(), 150).unwrap();
    assert_eq!(samples.len(), 150);
    for s in &samples {
        if !s.valid {
            continue;
        }
        let g = parse_smiles(&s.text).unwrap();
        if g.component_count() == 1 {
            // Connected output must contain both fragment atoms.
            assert!(s.constraint_matched, "{}", s.text);
        }
    }
}

#[test]
fn model_json_round_trip_preserves_behavior() {
    let corpus = corpus::synthesize(80, 60);
    let model =
        NGramModel::train(&corpus, Notation::Smiles, 4, SmoothingParams::default()).unwrap();
    let json = model.to_json();
    let loaded = NGramModel::from_json(&json).unwrap();
    assert_eq!(loaded.order(), model.order());
    assert_eq!(loaded.vocab(), model.vocab());
    let cfg = SamplerConfig {
        seed: 7,
        ..Default::default()
    };
    for i in 0..20 {
        let c = SamplerConfig {
            seed: crate::corpus::mix(cfg.seed, i),
            ..cfg
        };
        assert_eq!(sample(&model, &c), sample(&loaded, &c));
    }
    assert_eq!(json, loaded.to_json(), "serialization is canonical");
}

#[test]
fn more_training_data_improves_held_out_perplexity() {
    let all = corpus::synthesize(1200, 61);
    let (held_out, rest) = all.split_at(200);
    let small = rest[..200].to_vec();
    let large = rest.to_vec();
    let held: Vec<String> = held_out.to_vec();
    let m_small =
        NGramModel::train(&small, Notation::Smiles, 4, SmoothingParams::default()).unwrap();
    let m_large =
        NGramModel::train(&large, Notation::Smiles, 4, SmoothingParams::default()).unwrap();
    let p_small = m_small.perplexity(&held).unwrap();
    let p_large = m_large.perplexity(&held).unwrap();
    assert!(
        p_large < p_small,
        "large {p_large:.3} should beat small {p_small:.3}"
    );
}

#[test]
fn truncation_is_recorded() {
    let model = train_lines(&["CCCCCCCC"], 2);
    let cfg = SamplerConfig {
        max_tokens: 3,
        temperature: 0.0,
        ..Default::default()
    };
    let out = sample(&model, &cfg);
    assert!(out.truncated);
    assert_eq!(out.text.len(), 3);
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tokenizer_round_trips_token_soup(
            parts in proptest::collection::vec(
                proptest::sample::select(vec![
                    "C", "c", "N", "n", "O", "S", "Cl", "Br", "F", "[nH]", "[*]",
                    "(", ")", ".", "-", "=", "#", "1", "2", "9", "%10", "%23",
                ]),
                0..30,
            )
        ) {
            let text: String = parts.concat();
            let toks = tokenize(&text, Notation::Safe).unwrap();
            prop_assert_eq!(detokenize(&toks), text);
        }
    }
}

#[test]
fn nearly_all_samples_terminate_within_the_token_budget() {
    let corpus = corpus::synthesize(2000, 62);
    let model =
        NGramModel::train(&corpus, Notation::Smiles, 4, SmoothingParams::default()).unwrap();
    let n = 1000;
    let mut terminated = 0usize;
    for i in 0..n {
        let cfg = SamplerConfig {
            seed: crate::corpus::mix(7, i as u64),
            ..Default::default()
        };
        if !sample(&model, &cfg).truncated {
            terminated += 1;
        }
    }
    assert!(
        terminated as f64 / n as f64 >= 0.99,
        "only {terminated}/{n} terminated before max_tokens"
    );
}
