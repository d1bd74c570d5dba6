//! The shipping rule table and the procedural environment checks behind
//! it.
//!
//! Two-atom patterns carry the cheap element/ring/degree part of each
//! rule; anything that depends on surrounding bonds (acyl carbons, lactam
//! nitrogens, the BRICS L-environments) is checked here, keyed by
//! rule_id. BRICS rule ids name their environment pair (`L3-L16`), so a
//! fidelity fix is an edit to the pair list or an L-class predicate.

use super::FragmentationScheme;
use crate::molgraph::{BondOrder, Element, MolGraph};

/// `scheme <TAB> rule_id <TAB> pattern`, one rule per line.
pub const BUILTIN_RULE_TABLE: &str = include_str!("rules.tsv");

pub(super) fn describe(scheme: FragmentationScheme, rule_id: &str) -> String {
    match scheme {
        FragmentationScheme::Hr => "exhaustive acyclic single-bond slice".to_string(),
        FragmentationScheme::Mmpa => "matched-pair cut from a neutral carbon".to_string(),
        FragmentationScheme::Rotatable => "rotatable bond".to_string(),
        FragmentationScheme::Recap => format!("RECAP {rule_id} bond"),
        FragmentationScheme::Brics => format!("BRICS environment pair {rule_id}"),
    }
}

/// Environment gate for one oriented candidate bond `a-b`. The pattern
/// already matched; this applies what the pattern cannot express.
pub(super) fn environment_ok(
    scheme: FragmentationScheme,
    rule_id: &str,
    g: &MolGraph,
    a: usize,
    b: usize,
) -> bool {
    match scheme {
        FragmentationScheme::Hr => true,
        FragmentationScheme::Rotatable => !has_triple(g, a) && !has_triple(g, b),
        FragmentationScheme::Mmpa => mmpa_carbon_ok(g, a),
        FragmentationScheme::Recap => recap_ok(rule_id, g, a, b),
        FragmentationScheme::Brics => brics_ok(rule_id, g, a, b),
    }
}

fn recap_ok(rule_id: &str, g: &MolGraph, a: usize, b: usize) -> bool {
    match rule_id {
        // a = carbonyl C, b = amide N
        "amide" => is_acyl(g, a) && amide_like_nitrogen(g, b),
        // a = carbonyl C, b = ester O
        "ester" => is_acyl(g, a) && is_ether_oxygen(g, b),
        // a = any C, b = amine N (not amide or sulfonamide)
        "amine" => {
            carbon_side_ok(g, a)
                && amide_like_nitrogen(g, b)
                && !adjacent_to_acyl_or_sulfonyl(g, b)
                && g.neighbors(b)
                    .iter()
                    .all(|&(nbr, _)| g.atom(nbr).element == Element::C)
        }
        // a = urea N, b = urea carbonyl C
        "urea" => amide_like_nitrogen(g, a) && is_urea_carbon(g, b),
        // a = any carbon, b = ether O
        "ether" => carbon_side_ok(g, a) && is_ether_oxygen(g, b),
        // Double bonds are never cut; kept for the classical rule count.
        "olefin" => true,
        "quaternary_n" => true,
        // a = aromatic n, b = aliphatic C
        "aromatic_n_aliphatic_c" => {
            g.atom(a).formal_charge == 0 && carbon_side_ok(g, b) && !g.atom(b).aromatic
        }
        // a = lactam N, b = aliphatic C on the exocyclic side
        "lactam_n_aliphatic_c" => {
            is_lactam_nitrogen(g, a) && carbon_side_ok(g, b) && !g.atom(b).aromatic
        }
        "biaryl" => true,
        // a = sulfonamide N, b = sulfonyl S
        "sulfonamide" => amide_like_nitrogen(g, a) && is_sulfonyl(g, b),
        _ => false,
    }
}

/// Nitrogen acceptable to the RECAP N-side rules: the BRICS amine class
/// (L5), so every RECAP cut stays inside the BRICS set.
fn amide_like_nitrogen(g: &MolGraph, i: usize) -> bool {
    plain_nitrogen(g, i, 2)
        && g.neighbors(i)
            .iter()
            .all(|&(nbr, _)| matches!(g.atom(nbr).element, Element::C | Element::S))
        && !is_lactam_nitrogen(g, i)
}

fn brics_ok(rule_id: &str, g: &MolGraph, a: usize, b: usize) -> bool {
    let Some((la, lb)) = parse_pair(rule_id) else {
        return false;
    };
    l_class(la, g, a) && l_class(lb, g, b)
}

fn parse_pair(rule_id: &str) -> Option<(u8, u8)> {
    let (a, b) = rule_id.split_once('-')?;
    let parse = |s: &str| s.strip_prefix('L')?.parse::<u8>().ok();
    Some((parse(a)?, parse(b)?))
}

/// The sixteen BRICS chemical environments, restricted to this toolkit's
/// element set.
fn l_class(class: u8, g: &MolGraph, i: usize) -> bool {
    let atom = g.atom(i);
    match class {
        // Acyl carbon: C(=O) with three heavy neighbors.
        1 => !atom.aromatic && atom.element == Element::C && g.degree(i) == 3 && is_acyl(g, i),
        // Ester oxygen: two-connected O next to an acyl carbon.
        2 => {
            is_ether_oxygen(g, i)
                && g.neighbors(i)
                    .iter()
                    .any(|&(nbr, _)| !g.atom(nbr).aromatic && is_acyl(g, nbr))
        }
        // Ether oxygen.
        3 => is_ether_oxygen(g, i),
        // Saturated-side carbon: non-terminal, no double bond.
        4 => saturated_linker_carbon(g, i),
        // Amine nitrogen: non-terminal, bonded only to C/S, no multiple
        // bonds, not a lactam nitrogen.
        5 => {
            plain_nitrogen(g, i, 2)
                && g.neighbors(i).iter().all(|&(nbr, _)| {
                    matches!(g.atom(nbr).element, Element::C | Element::S)
                })
                && !is_lactam_nitrogen(g, i)
        }
        // Acyclic acyl carbon (aryl/alkyl ketones, amides).
        6 => {
            !atom.aromatic
                && atom.element == Element::C
                && g.degree(i) == 3
                && !g.atom_in_ring(i)
                && is_acyl(g, i)
        }
        // Olefinic carbon. Pairs only across the double bond itself, so
        // the acyclic-single-bond filter keeps this class inert.
        7 => {
            !atom.aromatic
                && atom.element == Element::C
                && matches!(g.degree(i), 2 | 3)
                && g.neighbors(i).iter().any(|&(nbr, bi)| {
                    g.bond(bi).order == BondOrder::Double && g.atom(nbr).element == Element::C
                })
        }
        // Acyclic all-single carbon chain atom.
        8 => {
            !atom.aromatic
                && atom.element == Element::C
                && !g.atom_in_ring(i)
                && g.degree(i) >= 2
                && g.neighbors(i)
                    .iter()
                    .all(|&(_, bi)| g.bond(bi).order == BondOrder::Single)
        }
        // Aromatic nitrogen.
        9 => atom.aromatic && atom.element == Element::N && atom.formal_charge == 0,
        // Lactam nitrogen.
        10 => is_lactam_nitrogen(g, i),
        // Thioether sulfur.
        11 => !atom.aromatic && atom.element == Element::S && g.degree(i) == 2,
        // Sulfonyl sulfur.
        12 => is_sulfonyl(g, i),
        // Ring carbon adjacent to an in-ring heteroatom.
        13 => {
            !atom.aromatic
                && atom.element == Element::C
                && ring_neighbors(g, i).any(|nbr| {
                    matches!(g.atom(nbr).element, Element::N | Element::O | Element::S)
                })
        }
        // Aromatic carbon adjacent to an aromatic heteroatom.
        14 => {
            atom.aromatic
                && atom.element == Element::C
                && g.neighbors(i).iter().any(|&(nbr, _)| {
                    g.atom(nbr).aromatic
                        && matches!(g.atom(nbr).element, Element::N | Element::O | Element::S)
                })
        }
        // Ring carbon with two in-ring carbon neighbors.
        15 => {
            !atom.aromatic
                && atom.element == Element::C
                && ring_neighbors(g, i)
                    .filter(|&nbr| g.atom(nbr).element == Element::C)
                    .count()
                    >= 2
        }
        // Aromatic carbon with two aromatic carbon neighbors.
        16 => {
            atom.aromatic
                && atom.element == Element::C
                && g.neighbors(i)
                    .iter()
                    .filter(|&&(nbr, _)| g.atom(nbr).aromatic && g.atom(nbr).element == Element::C)
                    .count()
                    >= 2
        }
        _ => false,
    }
}

fn ring_neighbors<'g>(g: &'g MolGraph, i: usize) -> impl Iterator<Item = usize> + 'g {
    g.neighbors(i)
        .iter()
        .filter(|&&(_, bi)| g.bond(bi).in_ring)
        .map(|&(nbr, _)| nbr)
}

fn has_triple(g: &MolGraph, i: usize) -> bool {
    g.neighbors(i)
        .iter()
        .any(|&(_, bi)| g.bond(bi).order == BondOrder::Triple)
}

/// Carbon with a double-bonded oxygen neighbor.
fn is_acyl(g: &MolGraph, i: usize) -> bool {
    g.atom(i).element == Element::C
        && g.neighbors(i).iter().any(|&(nbr, bi)| {
            g.bond(bi).order == BondOrder::Double && g.atom(nbr).element == Element::O
        })
}

fn is_urea_carbon(g: &MolGraph, i: usize) -> bool {
    is_acyl(g, i)
        && g.neighbors(i)
            .iter()
            .filter(|&&(nbr, _)| g.atom(nbr).element == Element::N)
            .count()
            >= 2
}

/// Two-connected neutral aliphatic oxygen.
fn is_ether_oxygen(g: &MolGraph, i: usize) -> bool {
    let atom = g.atom(i);
    atom.element == Element::O && !atom.aromatic && atom.formal_charge == 0 && g.degree(i) == 2
}

/// Neutral aliphatic nitrogen with at least `min_degree` heavy neighbors
/// and no multiple bonds.
fn plain_nitrogen(g: &MolGraph, i: usize, min_degree: usize) -> bool {
    let atom = g.atom(i);
    atom.element == Element::N
        && !atom.aromatic
        && atom.formal_charge == 0
        && g.degree(i) >= min_degree
        && g.neighbors(i)
            .iter()
            .all(|&(_, bi)| g.bond(bi).order == BondOrder::Single)
}

fn adjacent_to_acyl_or_sulfonyl(g: &MolGraph, i: usize) -> bool {
    g.neighbors(i).iter().any(|&(nbr, _)| {
        (!g.atom(nbr).aromatic && is_acyl(g, nbr)) || is_sulfonyl(g, nbr)
    })
}

fn is_sulfonyl(g: &MolGraph, i: usize) -> bool {
    g.atom(i).element == Element::S
        && g.degree(i) == 4
        && g.neighbors(i)
            .iter()
            .filter(|&&(nbr, bi)| {
                g.bond(bi).order == BondOrder::Double && g.atom(nbr).element == Element::O
            })
            .count()
            == 2
}

/// Non-terminal aliphatic carbon without double bonds (BRICS L4).
fn saturated_linker_carbon(g: &MolGraph, i: usize) -> bool {
    let atom = g.atom(i);
    atom.element == Element::C
        && !atom.aromatic
        && g.degree(i) >= 2
        && g.neighbors(i)
            .iter()
            .all(|&(_, bi)| g.bond(bi).order != BondOrder::Double)
}

/// In-ring nitrogen bonded in-ring to a carbonyl ring carbon.
fn is_lactam_nitrogen(g: &MolGraph, i: usize) -> bool {
    let atom = g.atom(i);
    atom.element == Element::N
        && !atom.aromatic
        && ring_neighbors(g, i).any(|nbr| {
            g.atom(nbr).element == Element::C && g.atom_in_ring(nbr) && is_acyl(g, nbr)
        })
}

/// mmpdb cut eligibility for the first matched side: any carbon with no
/// double or triple bond to a heteroatom.
fn mmpa_carbon_ok(g: &MolGraph, i: usize) -> bool {
    g.atom(i).element == Element::C
        && g.neighbors(i).iter().all(|&(nbr, bi)| {
            let multiple = matches!(g.bond(bi).order, BondOrder::Double | BondOrder::Triple);
            !(multiple && g.atom(nbr).element != Element::C)
        })
}

/// The carbon side accepted by RECAP heteroatom rules: an aromatic
/// carbon, or a saturated non-terminal carbon that is in a ring or fully
/// single-bonded (matching the BRICS classes it must stay inside).
fn carbon_side_ok(g: &MolGraph, i: usize) -> bool {
    let atom = g.atom(i);
    if atom.element != Element::C {
        return false;
    }
    if atom.aromatic {
        return true;
    }
    saturated_linker_carbon(g, i)
        && (g.atom_in_ring(i)
            || g.neighbors(i)
                .iter()
                .all(|&(_, bi)| g.bond(bi).order == BondOrder::Single))
}
