//! Independent oracle for canonicalization: on small graphs, canonical
//! string equality must coincide exactly with brute-force graph
//! isomorphism over all atom bijections.

use safekit::molgraph::{canonical_smiles, parse_smiles, BondOrder, MolGraph};

/// Exhaustive isomorphism test: tries every atom bijection that preserves
/// element, aromaticity, charge, hydrogen count, and all bonds with their
/// orders. Only for small graphs.
fn brute_force_isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    if a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let n = a.atom_count();
    assert!(n <= 8, "oracle is exponential; keep fixtures small");
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| mapping_ok(a, b, p))
}

fn permutations(perm: &mut Vec<usize>, k: usize, found: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if k == perm.len() {
        return found(perm);
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        if permutations(perm, k + 1, found) {
            perm.swap(k, i);
            return true;
        }
        perm.swap(k, i);
    }
    false
}

fn mapping_ok(a: &MolGraph, b: &MolGraph, p: &[usize]) -> bool {
    for i in 0..a.atom_count() {
        let x = a.atom(i);
        let y = b.atom(p[i]);
        if x.element != y.element
            || x.aromatic != y.aromatic
            || x.formal_charge != y.formal_charge
            || a.hydrogen_count(i) != b.hydrogen_count(p[i])
        {
            return false;
        }
    }
    let bond_order_of = |g: &MolGraph, x: usize, y: usize| -> Option<BondOrder> {
        g.bond_between(x, y).map(|bi| g.bond(bi).order)
    };
    for bond in a.bonds() {
        if bond_order_of(b, p[bond.a], p[bond.b]) != Some(bond.order) {
            return false;
        }
    }
    true
}

#[test]
fn canonical_equality_coincides_with_brute_force_isomorphism() {
    // Small molecules with deliberate near-misses: same formula different
    // connectivity, spiro vs fused, heteroatom placement, bond orders.
    let fixtures = [
        "CCO", "OCC", "COC", "CCC", "CC(C)C", "CCCC", "C1CC1C", "CC1CC1", "C1CCC1",
        "C1CC11CC1", "C1CC2CC12", "c1ccncc1", "c1cnccc1", "c1ccoc1", "c1ccsc1",
        "CC(=O)N", "CC(N)=O", "CNC=O", "N#CC", "CC#N", "C=CC", "CC=C", "CCC=O",
        "OC=O", "C(=O)O", "FC(F)F", "ClCCl", "CC(F)C", "CC(C)F", "[nH]1cccc1",
        "c1cc[nH]c1", "CC.O", "C.CO", "CCO.C",
    ];
    let graphs: Vec<(&str, MolGraph)> = fixtures
        .iter()
        .map(|s| (*s, parse_smiles(s).unwrap()))
        .collect();
    let mut pairs = 0usize;
    let mut isomorphic_pairs = 0usize;
    for i in 0..graphs.len() {
        for j in i..graphs.len() {
            let (sa, ga) = &graphs[i];
            let (sb, gb) = &graphs[j];
            if ga.atom_count() > 8 || gb.atom_count() > 8 {
                continue;
            }
            let oracle = brute_force_isomorphic(ga, gb);
            let canonical = canonical_smiles(ga) == canonical_smiles(gb);
            assert_eq!(
                canonical, oracle,
                "canonical equality disagrees with brute force for {sa:?} vs {sb:?}"
            );
            pairs += 1;
            if oracle {
                isomorphic_pairs += 1;
            }
        }
    }
    assert!(pairs > 400, "fixture family too small: {pairs}");
    // Sanity: the family contains both positives and negatives beyond the
    // diagonal.
    assert!(isomorphic_pairs > fixtures.len(), "{isomorphic_pairs}");
}

#[test]
fn canonical_collisions_share_all_graph_invariants() {
    // Two molecules mapping to one canonical string must agree on every
    // canonical-independent invariant (they are the same molecule, since
    // the string re-parses to a unique graph).
    let corpus = safekit::corpus::synthesize(2000, 91);
    let profile = |g: &MolGraph| {
        let mut atoms: Vec<(String, usize, i8, bool)> = (0..g.atom_count())
            .map(|i| {
                let a = g.atom(i);
                (
                    a.element.symbol().to_string(),
                    g.degree(i),
                    a.formal_charge,
                    a.aromatic,
                )
            })
            .collect();
        atoms.sort();
        let mut orders: Vec<BondOrder> = g.bonds().iter().map(|b| b.order).collect();
        orders.sort();
        (atoms, orders, format!("{:.4}", g.mol_weight()))
    };
    let mut by_canonical: std::collections::HashMap<String, String> = Default::default();
    for s in &corpus {
        let g = parse_smiles(s).unwrap();
        let c = canonical_smiles(&g);
        if let Some(prev) = by_canonical.get(&c) {
            let a = parse_smiles(prev).unwrap();
            assert_eq!(
                profile(&a),
                profile(&g),
                "canonical collision between {prev:?} and {s:?}"
            );
        } else {
            by_canonical.insert(c, s.clone());
        }
    }
}
