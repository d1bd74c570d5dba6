//! SMILES serialization under a caller-chosen atom priority order.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{compute_implicit_h, Atom, BondOrder, Element, MolGraph};

/// Output fragment of the piece-level writer. `Attachment` stands for a
/// suppressed degree-1 wildcard atom; the SAFE codec renders it as a
/// ring-closure digit on the host atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Piece {
    Text(String),
    Attachment { star: usize, host: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct WriteOutput {
    pub pieces: Vec<Piece>,
    /// Ring-closure digits consumed while writing (attachment digits must
    /// avoid these).
    pub ring_digits_used: BTreeSet<u16>,
}

/// Serializes a molecule to SMILES.
///
/// `order`, when given, is a permutation of atom indices: the DFS starts
/// at the earliest-listed atom of each component and visits neighbors in
/// listed order. The output re-parses to a graph isomorphic to the input.
pub fn write_smiles(g: &MolGraph, order: Option<&[usize]>) -> String {
    let out = write_pieces(g, order, false);
    let mut s = String::new();
    for piece in &out.pieces {
        match piece {
            Piece::Text(t) => s.push_str(t),
            Piece::Attachment { .. } => unreachable!("plain writer keeps wildcards"),
        }
    }
    s
}

/// Serialization from a seeded-random DFS root and neighbor order. The
/// same seed always yields the same string.
pub fn randomize_smiles(g: &MolGraph, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..g.atom_count()).collect();
    perm.shuffle(&mut rng);
    write_smiles(g, Some(&perm))
}

struct Closure {
    bond: usize,
    digit: u16,
}

/// Piece-level writer. With `suppress_stars`, degree-1 wildcard atoms on
/// single bonds are dropped from traversal and reported as `Attachment`
/// pieces anchored to their neighbor.
pub(crate) fn write_pieces(
    g: &MolGraph,
    order: Option<&[usize]>,
    suppress_stars: bool,
) -> WriteOutput {
    let n = g.atom_count();
    let mut rank = vec![0usize; n];
    match order {
        Some(perm) => {
            assert_eq!(perm.len(), n, "order must be a permutation of all atoms");
            for (pos, &atom) in perm.iter().enumerate() {
                rank[atom] = pos;
            }
        }
        None => {
            for (i, r) in rank.iter_mut().enumerate() {
                *r = i;
            }
        }
    }

    let suppressed: Vec<bool> = (0..n)
        .map(|i| {
            suppress_stars
                && g.atom(i).is_wildcard()
                && g.degree(i) == 1
                && g.bond(g.neighbors(i)[0].1).order == BondOrder::Single
        })
        .collect();

    let mut sorted_nbrs: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut nbrs = g.neighbors(i).to_vec();
        nbrs.sort_by_key(|&(nbr, _)| rank[nbr]);
        sorted_nbrs.push(nbrs);
    }

    // Plan pass: a depth-first search visiting neighbors in rank order.
    // Non-tree edges then connect an atom to an ancestor, so every ring
    // closure opens at an atom emitted before the one that closes it.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut parent_bond = vec![usize::MAX; n];
    let mut ring_open: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut ring_close: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut attachments: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closures: Vec<Closure> = Vec::new();
    let mut bond_done = vec![false; g.bond_count()];

    let mut roots: Vec<usize> = (0..n).filter(|&i| !suppressed[i]).collect();
    roots.sort_by_key(|&i| rank[i]);

    for &root in &roots {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        // Frames: (atom, position in its sorted neighbor list).
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut next)) = frames.last_mut() {
            if *next >= sorted_nbrs[v].len() {
                frames.pop();
                continue;
            }
            let (nbr, bi) = sorted_nbrs[v][*next];
            *next += 1;
            if suppressed[nbr] {
                attachments[v].push(nbr);
                continue;
            }
            if bond_done[bi] {
                continue;
            }
            bond_done[bi] = true;
            if !visited[nbr] {
                visited[nbr] = true;
                parent_bond[nbr] = bi;
                children[v].push(nbr);
                frames.push((nbr, 0));
            } else {
                let id = closures.len();
                closures.push(Closure { bond: bi, digit: 0 });
                ring_open[nbr].push(id);
                ring_close[v].push(id);
            }
        }
    }

    let mut emitter = Emitter {
        g,
        children: &children,
        parent_bond: &parent_bond,
        ring_open: &ring_open,
        ring_close: &ring_close,
        attachments: &attachments,
        closures,
        pieces: Vec::new(),
        free_digits: BinaryHeap::new(),
        next_digit: 1,
        ring_digits_used: BTreeSet::new(),
    };

    let mut seen = vec![false; n];
    let mut first = true;
    for &root in &roots {
        if seen[root] {
            continue;
        }
        mark_component(root, &children, &mut seen);
        if !first {
            emitter.pieces.push(Piece::Text(".".to_string()));
        }
        first = false;
        emitter.emit(root, None);
    }

    WriteOutput {
        pieces: emitter.pieces,
        ring_digits_used: emitter.ring_digits_used,
    }
}

fn mark_component(root: usize, children: &[Vec<usize>], seen: &mut [bool]) {
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        stack.extend(children[v].iter().copied());
    }
}

struct Emitter<'g> {
    g: &'g MolGraph,
    children: &'g [Vec<usize>],
    parent_bond: &'g [usize],
    ring_open: &'g [Vec<usize>],
    ring_close: &'g [Vec<usize>],
    attachments: &'g [Vec<usize>],
    closures: Vec<Closure>,
    pieces: Vec<Piece>,
    free_digits: BinaryHeap<Reverse<u16>>,
    next_digit: u16,
    ring_digits_used: BTreeSet<u16>,
}

impl<'g> Emitter<'g> {
    fn emit(&mut self, v: usize, via_bond: Option<usize>) {
        if let Some(bi) = via_bond {
            self.push_bond_symbol(bi);
        }
        self.pieces.push(Piece::Text(atom_token(self.g, v)));

        // Digits that close here were opened at an ancestor; emit them
        // first, then open new ones.
        for &id in &self.ring_close[v] {
            let digit = self.closures[id].digit;
            debug_assert!(digit != 0, "closure digit used before allocation");
            self.free_digits.push(Reverse(digit));
            self.pieces.push(Piece::Text(render_digit(digit)));
        }
        for &id in &self.ring_open[v] {
            let digit = self.alloc_digit();
            self.closures[id].digit = digit;
            let bond = self.closures[id].bond;
            self.push_bond_symbol(bond);
            self.pieces.push(Piece::Text(render_digit(digit)));
        }
        for &star in &self.attachments[v] {
            self.pieces.push(Piece::Attachment { star, host: v });
        }

        let kids: &'g [usize] = &self.children[v];
        for (i, &child) in kids.iter().enumerate() {
            let last = i + 1 == kids.len();
            if !last {
                self.pieces.push(Piece::Text("(".to_string()));
            }
            self.emit(child, Some(self.parent_bond[child]));
            if !last {
                self.pieces.push(Piece::Text(")".to_string()));
            }
        }
    }

    fn push_bond_symbol(&mut self, bi: usize) {
        let bond = self.g.bond(bi);
        let sym = bond_symbol(
            bond.order,
            self.g.atom(bond.a).aromatic,
            self.g.atom(bond.b).aromatic,
        );
        if !sym.is_empty() {
            self.pieces.push(Piece::Text(sym.to_string()));
        }
    }

    fn alloc_digit(&mut self) -> u16 {
        let d = match self.free_digits.pop() {
            Some(Reverse(d)) => d,
            None => {
                let d = self.next_digit;
                self.next_digit += 1;
                d
            }
        };
        assert!(d <= 99, "ring closure digits exhausted");
        self.ring_digits_used.insert(d);
        d
    }
}

pub(crate) fn render_digit(d: u16) -> String {
    if d <= 9 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}

fn bond_symbol(order: BondOrder, a_aromatic: bool, b_aromatic: bool) -> &'static str {
    match order {
        BondOrder::Single => {
            if a_aromatic && b_aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => "",
    }
}

fn atom_token(g: &MolGraph, i: usize) -> String {
    let atom = g.atom(i);
    if atom.is_wildcard() {
        return "[*]".to_string();
    }
    let h_total = g.hydrogen_count(i);
    if atom.formal_charge == 0 && atom.element != Element::H && bare_matches(g, i, h_total) {
        let sym = atom.element.symbol();
        return if atom.aromatic {
            sym.to_ascii_lowercase()
        } else {
            sym.to_string()
        };
    }
    bracket_token(atom, h_total)
}

/// True when re-parsing the bare symbol reproduces this atom's hydrogen
/// count, so no bracket is needed.
fn bare_matches(g: &MolGraph, i: usize, h_total: u8) -> bool {
    let bare = Atom {
        explicit_h: None,
        ..*g.atom(i)
    };
    match compute_implicit_h(&bare, i, g.adjacency_slice(), g.bonds()) {
        Ok(h) => h == h_total,
        Err(_) => false,
    }
}

fn bracket_token(atom: &Atom, h_total: u8) -> String {
    let mut s = String::from("[");
    let sym = atom.element.symbol();
    if atom.aromatic {
        s.push_str(&sym.to_ascii_lowercase());
    } else {
        s.push_str(sym);
    }
    match h_total {
        0 => {}
        1 => s.push('H'),
        n => {
            s.push('H');
            s.push_str(&n.to_string());
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}
