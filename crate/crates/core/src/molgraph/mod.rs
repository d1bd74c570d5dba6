//! Attributed molecular graph with a SMILES parser, writer, canonicalizer
//! and randomized-order serializer.
//!
//! A [`MolGraph`] is immutable after construction: [`MolGraph::from_parts`]
//! validates every structural invariant (distinct endpoints, no duplicate
//! bonds, valence limits) and precomputes ring membership, implicit
//! hydrogen counts and the connected-component count. All operations on a
//! built graph are pure functions.

mod canon;
mod parser;
mod rings;
mod writer;

use std::fmt;

use thiserror::Error;

pub use canon::{canonical_order, canonical_smiles};
pub use parser::parse_smiles;
pub use rings::smallest_ring_through_bond;
pub use writer::{randomize_smiles, write_smiles};

pub(crate) use writer::{render_digit, write_pieces, Piece};

/// Chemical elements supported by the toolkit, plus the `*` wildcard used
/// for attachment points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    C,
    N,
    O,
    S,
    F,
    Cl,
    Br,
    H,
    /// The `*` attachment-point wildcard. Valence-unconstrained.
    Star,
}

impl Element {
    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::S => "S",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::H => "H",
            Element::Star => "*",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Element> {
        Some(match s {
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "S" => Element::S,
            "F" => Element::F,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "H" => Element::H,
            "*" => Element::Star,
            _ => return None,
        })
    }

    /// Permitted valences, lowest first. `Star` is unconstrained and
    /// returns an empty slice.
    pub fn valences(self) -> &'static [u8] {
        match self {
            Element::C => &[4],
            Element::N => &[3],
            Element::O => &[2],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::H => &[1],
            Element::Star => &[],
        }
    }

    /// Elements that may carry the aromatic flag.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self, Element::C | Element::N | Element::O | Element::S)
    }

    /// Standard atomic mass in daltons.
    pub fn atomic_mass(self) -> f64 {
        match self {
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::S => 32.06,
            Element::F => 18.998,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::H => 1.008,
            Element::Star => 0.0,
        }
    }
}

/// One atom of a molecular graph. The atom's index is its position in
/// [`MolGraph::atoms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogen count fixed by a bracket expression (`[nH]`, `[CH3]`).
    /// `None` means hydrogens are implicit via the valence table.
    pub explicit_h: Option<u8>,
}

impl Atom {
    pub fn new(element: Element) -> Atom {
        Atom {
            element,
            aromatic: false,
            formal_charge: 0,
            explicit_h: None,
        }
    }

    pub fn aromatic(element: Element) -> Atom {
        Atom {
            element,
            aromatic: true,
            formal_charge: 0,
            explicit_h: None,
        }
    }

    pub fn wildcard() -> Atom {
        Atom {
            element: Element::Star,
            aromatic: false,
            formal_charge: 0,
            explicit_h: Some(0),
        }
    }

    pub fn is_wildcard(&self) -> bool {
        self.element == Element::Star
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's valence. Aromatic bonds count 1; the
    /// extra pi electron is handled per atom (see `pi_increment`).
    pub fn valence_units(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

/// A bond between two atoms. `in_ring` is computed at construction time:
/// a bond is in a ring iff it lies on at least one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
}

impl Bond {
    /// The endpoint opposite to `atom`.
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Errors from parsing or constructing molecular graphs. Every input
/// string yields either a graph or exactly one of these.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MolError {
    #[error("syntax error{}: {msg}", pos.map(|p| format!(" at {p}")).unwrap_or_default())]
    Syntax { pos: Option<usize>, msg: String },
    #[error("ring closure {digit} opened but never closed")]
    UnclosedRing { digit: u16 },
    #[error("valence {valence} exceeds limits for {} at atom {atom}", element.symbol())]
    Valence {
        atom: usize,
        element: Element,
        valence: u8,
    },
    #[error("unknown element {symbol:?}")]
    UnknownElement { symbol: String },
}

impl MolError {
    pub(crate) fn syntax(pos: usize, msg: impl Into<String>) -> MolError {
        MolError::Syntax {
            pos: Some(pos),
            msg: msg.into(),
        }
    }

    pub(crate) fn structure(msg: impl Into<String>) -> MolError {
        MolError::Syntax {
            pos: None,
            msg: msg.into(),
        }
    }
}

/// An attributed molecular graph: the single source of truth every
/// notation in this toolkit parses into and serializes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per-atom list of (neighbor atom index, bond index).
    adjacency: Vec<Vec<(usize, usize)>>,
    implicit_h: Vec<u8>,
    component_count: usize,
}

impl MolGraph {
    /// Builds and validates a graph from atoms and bonds.
    ///
    /// Checks endpoints, duplicate bonds, aromatic-bond endpoints and the
    /// valence table, then computes adjacency, ring flags, implicit
    /// hydrogens and the component count.
    pub fn from_parts(
        atoms: Vec<Atom>,
        bonds: Vec<(usize, usize, BondOrder)>,
    ) -> Result<MolGraph, MolError> {
        let n = atoms.len();
        if n == 0 {
            return Err(MolError::structure("empty molecule"));
        }
        for atom in &atoms {
            if atom.aromatic && !atom.element.can_be_aromatic() {
                return Err(MolError::structure(format!(
                    "element {} cannot be aromatic",
                    atom.element.symbol()
                )));
            }
        }

        let mut seen_pairs = std::collections::HashSet::with_capacity(bonds.len());
        let mut built = Vec::with_capacity(bonds.len());
        for &(a, b, order) in &bonds {
            if a >= n || b >= n {
                return Err(MolError::structure(format!(
                    "bond endpoint {} out of range",
                    a.max(b)
                )));
            }
            if a == b {
                return Err(MolError::structure(format!("self-bond on atom {a}")));
            }
            if !seen_pairs.insert((a.min(b), a.max(b))) {
                return Err(MolError::structure(format!(
                    "duplicate bond between atoms {a} and {b}"
                )));
            }
            if order == BondOrder::Aromatic && !(atoms[a].aromatic && atoms[b].aromatic) {
                return Err(MolError::structure(format!(
                    "aromatic bond between non-aromatic atoms {a} and {b}"
                )));
            }
            built.push(Bond {
                a,
                b,
                order,
                in_ring: false,
            });
        }

        let mut adjacency = vec![Vec::new(); n];
        for (bi, bond) in built.iter().enumerate() {
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }

        rings::mark_ring_bonds(&adjacency, &mut built);

        let mut implicit_h = Vec::with_capacity(n);
        for (ai, atom) in atoms.iter().enumerate() {
            implicit_h.push(compute_implicit_h(atom, ai, &adjacency, &built)?);
        }

        let component_count = count_components(&adjacency);

        Ok(MolGraph {
            atoms,
            bonds: built,
            adjacency,
            implicit_h,
            component_count,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Neighbors of atom `i` as (neighbor index, bond index) pairs, in
    /// insertion order.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub(crate) fn adjacency_slice(&self) -> &[Vec<(usize, usize)>] {
        &self.adjacency
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(nbr, _)| nbr == b)
            .map(|&(_, bi)| bi)
    }

    /// Hydrogens attached to atom `i`: the bracket-specified count when
    /// present, otherwise the count derived from the valence table.
    pub fn hydrogen_count(&self, i: usize) -> u8 {
        match self.atoms[i].explicit_h {
            Some(h) => h,
            None => self.implicit_h[i],
        }
    }

    /// Number of connected components (cached at construction).
    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// True iff the graph has more than one connected component.
    pub fn is_fragmented(&self) -> bool {
        self.component_count > 1
    }

    /// Per-atom and per-bond ring flags. An atom is in a ring iff it is
    /// incident to at least one ring bond.
    pub fn ring_membership(&self) -> RingMembership {
        let bond_in_ring: Vec<bool> = self.bonds.iter().map(|b| b.in_ring).collect();
        let mut atom_in_ring = vec![false; self.atoms.len()];
        for bond in &self.bonds {
            if bond.in_ring {
                atom_in_ring[bond.a] = true;
                atom_in_ring[bond.b] = true;
            }
        }
        RingMembership {
            atom_in_ring,
            bond_in_ring,
        }
    }

    pub fn atom_in_ring(&self, i: usize) -> bool {
        self.adjacency[i]
            .iter()
            .any(|&(_, bi)| self.bonds[bi].in_ring)
    }

    /// Sum of atomic masses including implicit hydrogens, in daltons.
    pub fn mol_weight(&self) -> f64 {
        let mut total = 0.0;
        for (i, atom) in self.atoms.iter().enumerate() {
            total += atom.element.atomic_mass();
            total += f64::from(self.hydrogen_count(i)) * Element::H.atomic_mass();
        }
        total
    }

    /// Heavy (non-hydrogen, non-wildcard) atom count.
    pub fn heavy_atom_count(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| !matches!(a.element, Element::H | Element::Star))
            .count()
    }

    /// Atom indices of each connected component, in index order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut comp = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &(nbr, _) in &self.adjacency[v] {
                    if comp[nbr] == usize::MAX {
                        comp[nbr] = id;
                        members.push(nbr);
                        stack.push(nbr);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// Ring flags computed by cycle-edge detection.
#[derive(Debug, Clone)]
pub struct RingMembership {
    pub atom_in_ring: Vec<bool>,
    pub bond_in_ring: Vec<bool>,
}

impl fmt::Display for MolGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_smiles(self, None))
    }
}

/// Extra pi valence unit for aromatic atoms.
///
/// Aromatic bonds are counted as order 1; aromatic C always contributes
/// one additional pi unit, and two-connected aromatic N without an
/// explicit hydrogen does too (pyridine-type). Pyrrole-type N, aromatic O
/// and aromatic S donate a lone pair instead and get no increment.
fn pi_increment(atom: &Atom, heavy_degree: usize) -> u8 {
    if !atom.aromatic {
        return 0;
    }
    match atom.element {
        Element::C => 1,
        Element::N if atom.explicit_h.unwrap_or(0) == 0 && heavy_degree == 2 => 1,
        _ => 0,
    }
}

fn compute_implicit_h(
    atom: &Atom,
    index: usize,
    adjacency: &[Vec<(usize, usize)>],
    bonds: &[Bond],
) -> Result<u8, MolError> {
    if atom.element == Element::Star {
        return Ok(0);
    }
    let bond_sum: u8 = adjacency[index]
        .iter()
        .map(|&(_, bi)| bonds[bi].order.valence_units())
        .sum();
    let degree = adjacency[index].len();
    let effective = bond_sum + pi_increment(atom, degree) + atom.explicit_h.unwrap_or(0);

    let valence_err = || MolError::Valence {
        atom: index,
        element: atom.element,
        valence: effective,
    };

    if atom.formal_charge != 0 {
        // Charged atoms parse so the MOSES filter can reject them; hydrogens
        // must come from the bracket, and the limit is relaxed by |charge|.
        let max = atom
            .element
            .valences()
            .last()
            .copied()
            .unwrap_or(u8::MAX)
            .saturating_add(atom.formal_charge.unsigned_abs());
        if effective > max {
            return Err(valence_err());
        }
        return Ok(0);
    }

    if atom.explicit_h.is_some() {
        let max = atom.element.valences().last().copied().unwrap_or(u8::MAX);
        if effective > max {
            return Err(valence_err());
        }
        return Ok(0);
    }

    // Lowest permitted valence >= the explicit valence fixes the implicit
    // hydrogen count.
    for &v in atom.element.valences() {
        if v >= effective {
            return Ok(v - effective);
        }
    }
    Err(valence_err())
}

fn count_components(adjacency: &[Vec<(usize, usize)>]) -> usize {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &(nbr, _) in &adjacency[v] {
                if !seen[nbr] {
                    seen[nbr] = true;
                    stack.push(nbr);
                }
            }
        }
    }
    count
}

/// True when two graphs are isomorphic as attributed molecular graphs.
///
/// Compares cheap invariants first, then canonical serializations.
pub fn graph_isomorphic(a: &MolGraph, b: &MolGraph) -> bool {
    if a.atom_count() != b.atom_count()
        || a.bond_count() != b.bond_count()
        || a.component_count() != b.component_count()
    {
        return false;
    }
    canonical_smiles(a) == canonical_smiles(b)
}
