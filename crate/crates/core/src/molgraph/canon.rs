//! Canonical atom ranking and canonical SMILES.
//!
//! Ranking is iterative neighborhood refinement: atoms start from an
//! invariant tuple (element, charge, degree, aromaticity, ring flag,
//! hydrogen count) and are repeatedly re-ranked by their sorted neighbor
//! ranks until the partition stabilizes. Remaining ties are broken by
//! branching over every member of the first tied class and keeping the
//! lexicographically smallest serialization, which keeps the result
//! independent of input atom order.

use super::{writer, BondOrder, Element, MolGraph};

/// Deterministic canonical SMILES: isomorphic graphs yield identical
/// strings, so the output doubles as a deduplication key.
pub fn canonical_smiles(g: &MolGraph) -> String {
    canonical(g).0
}

/// The atom visit order behind [`canonical_smiles`] (atom indices in
/// emission priority order).
pub fn canonical_order(g: &MolGraph) -> Vec<usize> {
    canonical(g).1
}

fn canonical(g: &MolGraph) -> (String, Vec<usize>) {
    let ranks = initial_ranks(g);
    let mut best: Option<(String, Vec<usize>)> = None;
    resolve(g, ranks, &mut best);
    best.expect("at least one canonical candidate")
}

fn resolve(g: &MolGraph, mut ranks: Vec<u32>, best: &mut Option<(String, Vec<usize>)>) {
    refine(g, &mut ranks);
    match first_tied_class(&ranks) {
        None => {
            let order = order_from_ranks(&ranks);
            let s = writer::write_smiles(g, Some(&order));
            if best.as_ref().is_none_or(|(b, _)| s < *b) {
                *best = Some((s, order));
            }
        }
        Some(class) => {
            for &atom in &class {
                let mut split = ranks.clone();
                // Promote one member ahead of its class and re-rank.
                for (i, r) in split.iter_mut().enumerate() {
                    let bumped = i != atom && ranks[i] == ranks[atom];
                    *r = ranks[i] * 2 + u32::from(bumped);
                }
                densify(&mut split);
                resolve(g, split, best);
            }
        }
    }
}

type AtomKey = (u8, i8, usize, bool, bool, u8);

fn initial_ranks(g: &MolGraph) -> Vec<u32> {
    let ring = g.ring_membership();
    let mut keys: Vec<(usize, AtomKey)> = (0..g.atom_count())
        .map(|i| {
            let a = g.atom(i);
            (
                i,
                (
                    element_code(a.element),
                    a.formal_charge,
                    g.degree(i),
                    a.aromatic,
                    ring.atom_in_ring[i],
                    g.hydrogen_count(i),
                ),
            )
        })
        .collect();
    keys.sort_by_key(|&(_, key)| key);
    let mut ranks = vec![0u32; g.atom_count()];
    let mut rank = 0u32;
    for w in 0..keys.len() {
        if w > 0 && keys[w].1 != keys[w - 1].1 {
            rank += 1;
        }
        ranks[keys[w].0] = rank;
    }
    ranks
}

fn element_code(e: Element) -> u8 {
    match e {
        Element::C => 0,
        Element::N => 1,
        Element::O => 2,
        Element::S => 3,
        Element::F => 4,
        Element::Cl => 5,
        Element::Br => 6,
        Element::H => 7,
        Element::Star => 8,
    }
}

fn bond_class(order: BondOrder) -> u8 {
    match order {
        BondOrder::Single => 0,
        BondOrder::Double => 1,
        BondOrder::Triple => 2,
        BondOrder::Aromatic => 3,
    }
}

/// One round of neighborhood refinement until the partition stops
/// splitting.
fn refine(g: &MolGraph, ranks: &mut Vec<u32>) {
    let n = g.atom_count();
    loop {
        let class_count = count_classes(ranks);
        let mut keys: Vec<(u32, Vec<(u8, u32)>)> = Vec::with_capacity(n);
        for i in 0..n {
            let mut nbrs: Vec<(u8, u32)> = g
                .neighbors(i)
                .iter()
                .map(|&(nbr, bi)| (bond_class(g.bond(bi).order), ranks[nbr]))
                .collect();
            nbrs.sort_unstable();
            keys.push((ranks[i], nbrs));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
        let mut rank = 0u32;
        let mut new_ranks = vec![0u32; n];
        for w in 0..n {
            if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
                rank += 1;
            }
            new_ranks[idx[w]] = rank;
        }
        *ranks = new_ranks;
        if count_classes(ranks) == class_count {
            return;
        }
    }
}

fn count_classes(ranks: &[u32]) -> usize {
    let mut seen: Vec<u32> = ranks.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

fn densify(ranks: &mut [u32]) {
    let mut sorted: Vec<u32> = ranks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for r in ranks.iter_mut() {
        *r = sorted.binary_search(r).unwrap() as u32;
    }
}

/// Lowest-ranked class with more than one member, if any.
fn first_tied_class(ranks: &[u32]) -> Option<Vec<usize>> {
    let mut by_rank: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, &r) in ranks.iter().enumerate() {
        by_rank.entry(r).or_default().push(i);
    }
    by_rank.into_values().find(|class| class.len() > 1)
}

fn order_from_ranks(ranks: &[u32]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by_key(|&i| ranks[i]);
    order
}
