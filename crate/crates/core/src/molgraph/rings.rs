//! Cycle-edge detection and ring-size queries.

use super::{Bond, MolGraph};

/// Flags every bond that lies on at least one cycle.
///
/// A bond is on a cycle iff it is not a bridge, so this runs an iterative
/// bridge-finding DFS (lowpoint method) and inverts the result.
pub(super) fn mark_ring_bonds(adjacency: &[Vec<(usize, usize)>], bonds: &mut [Bond]) {
    let n = adjacency.len();
    if bonds.is_empty() {
        return;
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0usize;
    // Stack frames: (vertex, incoming bond index, next neighbor position).
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(&mut (v, in_bond, ref mut next)) = stack.last_mut() {
            if *next < adjacency[v].len() {
                let (nbr, bi) = adjacency[v][*next];
                *next += 1;
                if bi == in_bond {
                    continue;
                }
                if disc[nbr] == usize::MAX {
                    disc[nbr] = timer;
                    low[nbr] = timer;
                    timer += 1;
                    stack.push((nbr, bi, 0));
                } else {
                    low[v] = low[v].min(disc[nbr]);
                    // Back edge: it and everything it spans is cyclic.
                    if disc[nbr] < disc[v] {
                        bonds[bi].in_ring = true;
                    }
                }
            } else {
                stack.pop();
                if let Some(&mut (parent, _, _)) = stack.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] <= disc[parent] {
                        bonds[in_bond].in_ring = true;
                    }
                }
            }
        }
    }
}

/// Length of the smallest cycle containing `bond_idx`, or `None` for an
/// acyclic bond. BFS from one endpoint to the other with the bond removed.
pub fn smallest_ring_through_bond(g: &MolGraph, bond_idx: usize) -> Option<usize> {
    let bond = g.bond(bond_idx);
    if !bond.in_ring {
        return None;
    }
    let n = g.atom_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    dist[bond.a] = 0;
    queue.push_back(bond.a);
    while let Some(v) = queue.pop_front() {
        if v == bond.b {
            return Some(dist[v] + 1);
        }
        for &(nbr, bi) in g.neighbors(v) {
            if bi == bond_idx || dist[nbr] != usize::MAX {
                continue;
            }
            dist[nbr] = dist[v] + 1;
            queue.push_back(nbr);
        }
    }
    None
}
