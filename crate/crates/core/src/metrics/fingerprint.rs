//! Circular neighborhood fingerprints and Tanimoto similarity.

use crate::molgraph::{BondOrder, MolGraph};

pub const FP_BITS: usize = 2048;
pub const FP_RADIUS: usize = 2;
const FP_WORDS: usize = FP_BITS / 64;

/// Fixed-size bit fingerprint built by iterative neighbor hashing of atom
/// environments (radius 2 by default). Isomorphic graphs yield identical
/// fingerprints: only order-invariant atom properties and sorted neighbor
/// digests feed the hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fingerprint {
    words: [u64; FP_WORDS],
}

impl Fingerprint {
    pub fn for_molecule(g: &MolGraph) -> Fingerprint {
        let n = g.atom_count();
        let mut fp = Fingerprint {
            words: [0; FP_WORDS],
        };
        let mut env: Vec<u64> = (0..n)
            .map(|i| {
                let a = g.atom(i);
                let seed = (element_code(&a.element) as u64)
                    | (u64::from(a.aromatic) << 8)
                    | ((a.formal_charge as u8 as u64) << 9)
                    | ((g.degree(i) as u64) << 17)
                    | ((g.hydrogen_count(i) as u64) << 25);
                mix64(seed.wrapping_add(0x9e3779b97f4a7c15))
            })
            .collect();
        for &h in &env {
            fp.set(h);
        }
        for _ in 0..FP_RADIUS {
            let mut next = Vec::with_capacity(n);
            for i in 0..n {
                let mut nbrs: Vec<u64> = g
                    .neighbors(i)
                    .iter()
                    .map(|&(nbr, bi)| mix64(env[nbr] ^ bond_code(g.bond(bi).order)))
                    .collect();
                nbrs.sort_unstable();
                let mut h = mix64(env[i]);
                for nb in nbrs {
                    h = mix64(h.wrapping_mul(0x100000001b3).wrapping_add(nb));
                }
                next.push(h);
            }
            env = next;
            for &h in &env {
                fp.set(h);
            }
        }
        fp
    }

    fn set(&mut self, hash: u64) {
        let bit = (hash % FP_BITS as u64) as usize;
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Test-support constructor from explicit bit positions.
    pub fn from_bits(bits: &[usize]) -> Fingerprint {
        let mut fp = Fingerprint {
            words: [0; FP_WORDS],
        };
        for &b in bits {
            fp.words[b / 64] |= 1u64 << (b % 64);
        }
        fp
    }
}

/// |a AND b| / |a OR b|; defined as 1.0 when both fingerprints are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let mut inter = 0u32;
    let mut union = 0u32;
    for (wa, wb) in a.words.iter().zip(b.words.iter()) {
        inter += (wa & wb).count_ones();
        union += (wa | wb).count_ones();
    }
    if union == 0 {
        1.0
    } else {
        f64::from(inter) / f64::from(union)
    }
}

fn element_code(e: &crate::molgraph::Element) -> u8 {
    use crate::molgraph::Element::*;
    match e {
        C => 1,
        N => 2,
        O => 3,
        S => 4,
        F => 5,
        Cl => 6,
        Br => 7,
        H => 8,
        Star => 9,
    }
}

fn bond_code(order: BondOrder) -> u64 {
    match order {
        BondOrder::Single => 0x01,
        BondOrder::Double => 0x02,
        BondOrder::Triple => 0x03,
        BondOrder::Aromatic => 0x04,
    }
}

/// SplitMix64 finalizer; fixed constants keep fingerprints stable across
/// builds and platforms.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
