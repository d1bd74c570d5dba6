//! Corpus file I/O and a seeded generator of drug-like molecules.
//!
//! The generator assembles molecules from ring systems, linkers and
//! capping groups the way lead-like screening compounds are built, tuned
//! to land in the same property envelope as the MOSES benchmark set
//! (mean molecular weight around 307 Da, C/N/O/S/F/Cl/Br/H only, no
//! charges, no macrocycles). It exists so benchmark-scale corpora can be
//! produced deterministically without shipping datasets.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::molgraph::{
    canonical_smiles, parse_smiles, Atom, BondOrder, Element, MolError, MolGraph,
};

/// Reads a `.smi` file: one SMILES per line, an optional
/// whitespace-separated ID column is ignored, blank lines skipped.
pub fn read_smi(path: &Path) -> std::io::Result<Vec<String>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let token = line.split_whitespace().next().unwrap_or("");
        if !token.is_empty() {
            out.push(token.to_string());
        }
    }
    Ok(out)
}

/// Writes one SMILES per line.
pub fn write_smi(path: &Path, lines: &[String]) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Incremental molecule assembly from SMILES pieces.
#[derive(Debug, Default)]
pub struct Assembler {
    atoms: Vec<Atom>,
    bonds: Vec<(usize, usize, BondOrder)>,
}

impl Assembler {
    pub fn new() -> Assembler {
        Assembler::default()
    }

    /// Appends a parsed piece; returns the index offset of its first atom.
    pub fn add_piece(&mut self, smiles: &str) -> Result<usize, MolError> {
        let piece = parse_smiles(smiles)?;
        let offset = self.atoms.len();
        self.atoms.extend_from_slice(piece.atoms());
        for bond in piece.bonds() {
            self.bonds
                .push((bond.a + offset, bond.b + offset, bond.order));
        }
        Ok(offset)
    }

    pub fn element(&self, idx: usize) -> Element {
        self.atoms[idx].element
    }

    /// Single bond between two already-added atoms. A bracket-specified
    /// hydrogen on either endpoint is consumed by the new bond, so `[nH]`
    /// ring positions can be substituted.
    pub fn bond(&mut self, a: usize, b: usize) {
        for &atom in &[a, b] {
            if let Some(h) = self.atoms[atom].explicit_h {
                if h > 0 {
                    self.atoms[atom].explicit_h = Some(h - 1);
                }
            }
        }
        self.bonds.push((a, b, BondOrder::Single));
    }

    pub fn finish(self) -> Result<MolGraph, MolError> {
        MolGraph::from_parts(self.atoms, self.bonds)
    }
}

/// Joins two fragments by bonding the hosts of one wildcard from each and
/// dropping those wildcard atoms. Used to reassemble molecules from
/// attachment-marked fragments.
pub fn join_at_wildcards(a: &MolGraph, b: &MolGraph) -> Result<MolGraph, MolError> {
    let star_a = first_open_wildcard(a)
        .ok_or_else(|| MolError::structure("left fragment has no open wildcard"))?;
    let star_b = first_open_wildcard(b)
        .ok_or_else(|| MolError::structure("right fragment has no open wildcard"))?;
    let host_a = a.neighbors(star_a)[0].0;
    let host_b = b.neighbors(star_b)[0].0;

    let map_a = index_map(a.atom_count(), star_a, 0);
    let map_b = index_map(b.atom_count(), star_b, a.atom_count() - 1);

    let mut atoms = Vec::with_capacity(a.atom_count() + b.atom_count() - 2);
    for (i, atom) in a.atoms().iter().enumerate() {
        if i != star_a {
            atoms.push(*atom);
        }
    }
    for (i, atom) in b.atoms().iter().enumerate() {
        if i != star_b {
            atoms.push(*atom);
        }
    }
    let mut bonds = Vec::new();
    for bond in a.bonds() {
        if bond.a != star_a && bond.b != star_a {
            bonds.push((map_a[bond.a], map_a[bond.b], bond.order));
        }
    }
    for bond in b.bonds() {
        if bond.a != star_b && bond.b != star_b {
            bonds.push((map_b[bond.a], map_b[bond.b], bond.order));
        }
    }
    bonds.push((map_a[host_a], map_b[host_b], BondOrder::Single));
    MolGraph::from_parts(atoms, bonds)
}

fn first_open_wildcard(g: &MolGraph) -> Option<usize> {
    (0..g.atom_count()).find(|&i| g.atom(i).is_wildcard() && g.degree(i) == 1)
}

fn index_map(n: usize, skipped: usize, offset: usize) -> Vec<usize> {
    let mut map = vec![0usize; n];
    let mut next = offset;
    for (i, slot) in map.iter_mut().enumerate() {
        if i == skipped {
            continue;
        }
        *slot = next;
        next += 1;
    }
    map
}

struct RingTemplate {
    smiles: &'static str,
    attach: &'static [usize],
    weight: u32,
}

struct LinkTemplate {
    /// `None` links two rings with a direct single bond.
    smiles: Option<&'static str>,
    a: usize,
    b: usize,
    weight: u32,
}

struct CapTemplate {
    smiles: &'static str,
    attach: usize,
    weight: u32,
}

const RINGS: &[RingTemplate] = &[
    RingTemplate { smiles: "c1ccccc1", attach: &[0, 1, 2, 3, 4, 5], weight: 24 },
    RingTemplate { smiles: "c1ccncc1", attach: &[0, 1, 2, 4, 5], weight: 11 },
    RingTemplate { smiles: "c1cncnc1", attach: &[0, 1, 3, 5], weight: 6 },
    RingTemplate { smiles: "c1cc[nH]n1", attach: &[0, 1, 2, 3], weight: 6 },
    RingTemplate { smiles: "c1c[nH]cn1", attach: &[0, 1, 2, 3], weight: 4 },
    RingTemplate { smiles: "c1ccsc1", attach: &[0, 1, 2, 4], weight: 4 },
    RingTemplate { smiles: "c1ccoc1", attach: &[0, 1, 2, 4], weight: 3 },
    RingTemplate { smiles: "c1cscn1", attach: &[0, 1, 3], weight: 4 },
    RingTemplate { smiles: "c1ncnc2[nH]ccc12", attach: &[0, 2, 4, 6, 7], weight: 3 },
    RingTemplate { smiles: "c1ccc2[nH]ccc2c1", attach: &[0, 1, 2, 4, 5, 6, 8], weight: 3 },
    RingTemplate { smiles: "C1CCNCC1", attach: &[1, 3], weight: 10 },
    RingTemplate { smiles: "C1CNCCN1", attach: &[2, 5], weight: 10 },
    RingTemplate { smiles: "C1COCCN1", attach: &[5], weight: 7 },
    RingTemplate { smiles: "C1CCNC1", attach: &[3], weight: 6 },
    RingTemplate { smiles: "C1CNC1", attach: &[2], weight: 3 },
    RingTemplate { smiles: "C1CC1", attach: &[0], weight: 3 },
    RingTemplate { smiles: "C1CCCCC1", attach: &[0, 2], weight: 2 },
];

const LINKS: &[LinkTemplate] = &[
    LinkTemplate { smiles: None, a: 0, b: 0, weight: 12 },
    LinkTemplate { smiles: Some("O"), a: 0, b: 0, weight: 10 },
    // ring1-O-CH2-CH2-O-ring2
    LinkTemplate { smiles: Some("OCCO"), a: 0, b: 3, weight: 4 },
    LinkTemplate { smiles: Some("C"), a: 0, b: 0, weight: 1 },
    LinkTemplate { smiles: Some("N"), a: 0, b: 0, weight: 9 },
    LinkTemplate { smiles: Some("CO"), a: 0, b: 1, weight: 2 },
    LinkTemplate { smiles: Some("CN"), a: 0, b: 1, weight: 2 },
    // ring1-C(=O)-N(H)-ring2
    LinkTemplate { smiles: Some("NC=O"), a: 1, b: 0, weight: 1 },
    // ring1-CH2-NH-C(=O)-ring2
    LinkTemplate { smiles: Some("CNC=O"), a: 0, b: 2, weight: 1 },
    // ring1-C(=O)-O-ring2
    LinkTemplate { smiles: Some("OC=O"), a: 1, b: 0, weight: 2 },
    // ring1-S(=O)(=O)-N(H)-ring2
    LinkTemplate { smiles: Some("NS(=O)=O"), a: 1, b: 0, weight: 1 },
    LinkTemplate { smiles: Some("S"), a: 0, b: 0, weight: 1 },
];

const CAPS: &[CapTemplate] = &[
    CapTemplate { smiles: "C", attach: 0, weight: 10 },
    CapTemplate { smiles: "F", attach: 0, weight: 7 },
    CapTemplate { smiles: "Cl", attach: 0, weight: 7 },
    CapTemplate { smiles: "Br", attach: 0, weight: 2 },
    CapTemplate { smiles: "OC", attach: 0, weight: 12 },
    CapTemplate { smiles: "OCC", attach: 0, weight: 7 },
    CapTemplate { smiles: "O", attach: 0, weight: 2 },
    CapTemplate { smiles: "N", attach: 0, weight: 2 },
    CapTemplate { smiles: "C(F)(F)F", attach: 0, weight: 1 },
    CapTemplate { smiles: "C#N", attach: 0, weight: 4 },
    CapTemplate { smiles: "CC#N", attach: 0, weight: 1 },
];

/// Deterministically generates `count` drug-like molecules as canonical
/// SMILES. The same `(count, seed)` pair always yields the same corpus.
pub fn synthesize(count: usize, seed: u64) -> Vec<String> {
    (0..count)
        .map(|i| synthesize_one(mix(seed, i as u64)))
        .collect()
}

fn synthesize_one(seed: u64) -> String {
    for attempt in 0..32u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, attempt));
        if let Ok(g) = build_molecule(&mut rng) {
            return canonical_smiles(&g);
        }
    }
    // Valence-violating draws are rare; fall back to a trivially valid
    // molecule so the corpus length is exact.
    "Cc1ccccc1".to_string()
}

fn build_molecule(rng: &mut ChaCha8Rng) -> Result<MolGraph, MolError> {
    let n_rings = *weighted_pick(rng, &[(2usize, 6), (3, 14)]);
    let mut asm = Assembler::new();
    // Remaining substitutable positions, as global atom indices.
    let mut open: Vec<Vec<usize>> = Vec::new();

    for _ in 0..n_rings {
        let ring = weighted_pick_by(rng, RINGS, |r| r.weight);
        let offset = asm.add_piece(ring.smiles)?;
        open.push(ring.attach.iter().map(|&p| p + offset).collect());
    }

    for i in 1..n_rings {
        let link = weighted_pick_by(rng, LINKS, |l| l.weight);
        match link.smiles {
            // Heteroatoms bond to carbon ring positions only; a direct
            // ring-ring link needs at least one carbon side.
            None => {
                let from = draw(rng, &mut open[i - 1], &asm, false)
                    .ok_or_else(|| MolError::structure("ring out of positions"))?;
                let need_c = asm.element(from) != Element::C;
                let to = draw(rng, &mut open[i], &asm, need_c)
                    .ok_or_else(|| MolError::structure("ring out of positions"))?;
                asm.bond(from, to);
            }
            Some(s) => {
                let offset = asm.add_piece(s)?;
                let end_a = link.a + offset;
                let end_b = link.b + offset;
                let from = draw(rng, &mut open[i - 1], &asm, asm.element(end_a) != Element::C)
                    .ok_or_else(|| MolError::structure("ring out of positions"))?;
                let to = draw(rng, &mut open[i], &asm, asm.element(end_b) != Element::C)
                    .ok_or_else(|| MolError::structure("ring out of positions"))?;
                asm.bond(from, end_a);
                asm.bond(end_b, to);
            }
        }
    }

    let n_caps = *weighted_pick(rng, &[(1usize, 2), (2, 8), (3, 11)]);
    for _ in 0..n_caps {
        let cap = weighted_pick_by(rng, CAPS, |c| c.weight);
        let first = parse_smiles(cap.smiles).expect("cap template parses");
        let need_c = first.atom(cap.attach).element != Element::C;
        let mut flat: Vec<(usize, usize)> = Vec::new();
        for (ri, positions) in open.iter().enumerate() {
            for (pi, &pos) in positions.iter().enumerate() {
                if !need_c || asm.element(pos) == Element::C {
                    flat.push((ri, pi));
                }
            }
        }
        if flat.is_empty() {
            continue;
        }
        let (ri, pi) = flat[rng.random_range(0..flat.len())];
        let pos = open[ri].remove(pi);
        let offset = asm.add_piece(cap.smiles)?;
        asm.bond(pos, cap.attach + offset);
    }

    asm.finish()
}

fn draw(
    rng: &mut ChaCha8Rng,
    positions: &mut Vec<usize>,
    asm: &Assembler,
    need_carbon: bool,
) -> Option<usize> {
    let candidates: Vec<usize> = (0..positions.len())
        .filter(|&i| !need_carbon || asm.element(positions[i]) == Element::C)
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let idx = candidates[rng.random_range(0..candidates.len())];
    Some(positions.remove(idx))
}

fn weighted_pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [(T, u32)]) -> &'a T {
    let total: u32 = items.iter().map(|(_, w)| w).sum();
    let mut roll = rng.random_range(0..total);
    for (item, w) in items {
        if roll < *w {
            return item;
        }
        roll -= w;
    }
    unreachable!("weights are positive")
}

fn weighted_pick_by<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T], weight: impl Fn(&T) -> u32) -> &'a T {
    let total: u32 = items.iter().map(&weight).sum();
    let mut roll = rng.random_range(0..total);
    for item in items {
        let w = weight(item);
        if roll < w {
            return item;
        }
        roll -= w;
    }
    unreachable!("weights are positive")
}

/// SplitMix64 step, used to derive independent per-item seeds.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
