//! SMILES parser for the toolkit's element subset.
//!
//! Supported: bare organic-subset atoms (`C N O S F Cl Br`, aromatic
//! `c n o s`, wildcard `*`), bracket atoms with hydrogen counts, formal
//! charges and (ignored) atom maps, bond symbols `- = # :`, branches,
//! ring-closure digits including the `%nn` two-digit form, and `.`
//! separators. Ring closures resolve across `.` separators, which is what
//! makes SAFE strings decodable by a plain SMILES parser.
//!
//! Stereochemistry (`/ \ @`) and isotopes are rejected with a syntax
//! error.

use std::collections::HashMap;

use super::{Atom, BondOrder, Element, MolError, MolGraph};

struct PendingRing {
    atom: usize,
    order: Option<BondOrder>,
}

/// Parses a SMILES string into a validated [`MolGraph`].
pub fn parse_smiles(text: &str) -> Result<MolGraph, MolError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(MolError::structure("empty SMILES input"));
    }
    let bytes = text.as_bytes();
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::new();
    let mut branch_stack: Vec<usize> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending_bond: Option<BondOrder> = None;
    let mut rings: HashMap<u16, PendingRing> = HashMap::new();

    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                let from = prev.ok_or_else(|| MolError::syntax(i, "branch before any atom"))?;
                if pending_bond.is_some() {
                    return Err(MolError::syntax(i, "bond symbol before branch open"));
                }
                branch_stack.push(from);
                i += 1;
            }
            b')' => {
                if pending_bond.is_some() {
                    return Err(MolError::syntax(i, "dangling bond symbol before ')'"));
                }
                prev = Some(
                    branch_stack
                        .pop()
                        .ok_or_else(|| MolError::syntax(i, "unmatched ')'"))?,
                );
                i += 1;
            }
            b'.' => {
                if pending_bond.is_some() {
                    return Err(MolError::syntax(i, "dangling bond symbol before '.'"));
                }
                if !branch_stack.is_empty() {
                    return Err(MolError::syntax(i, "'.' inside a branch"));
                }
                if prev.is_none() {
                    return Err(MolError::syntax(i, "'.' before any atom"));
                }
                prev = None;
                i += 1;
            }
            b'-' | b'=' | b'#' | b':' => {
                if pending_bond.is_some() {
                    return Err(MolError::syntax(i, "two bond symbols in a row"));
                }
                if prev.is_none() {
                    return Err(MolError::syntax(i, "bond symbol before any atom"));
                }
                pending_bond = Some(match c {
                    b'-' => BondOrder::Single,
                    b'=' => BondOrder::Double,
                    b'#' => BondOrder::Triple,
                    _ => BondOrder::Aromatic,
                });
                i += 1;
            }
            b'/' | b'\\' | b'@' => {
                return Err(MolError::syntax(i, "stereochemistry is not supported"));
            }
            b'0'..=b'9' => {
                let digit = u16::from(c - b'0');
                close_or_open_ring(
                    digit,
                    i,
                    &mut rings,
                    &mut bonds,
                    &atoms,
                    prev,
                    &mut pending_bond,
                )?;
                i += 1;
            }
            b'%' => {
                if i + 2 >= bytes.len()
                    || !bytes[i + 1].is_ascii_digit()
                    || !bytes[i + 2].is_ascii_digit()
                {
                    return Err(MolError::syntax(i, "'%' must be followed by two digits"));
                }
                let digit = u16::from(bytes[i + 1] - b'0') * 10 + u16::from(bytes[i + 2] - b'0');
                close_or_open_ring(
                    digit,
                    i,
                    &mut rings,
                    &mut bonds,
                    &atoms,
                    prev,
                    &mut pending_bond,
                )?;
                i += 3;
            }
            b'[' => {
                let (atom, len) = parse_bracket_atom(bytes, i)?;
                attach_atom(atom, &mut atoms, &mut bonds, &mut prev, &mut pending_bond, i)?;
                i += len;
            }
            _ => {
                let (atom, len) = parse_bare_atom(bytes, i)?;
                attach_atom(atom, &mut atoms, &mut bonds, &mut prev, &mut pending_bond, i)?;
                i += len;
            }
        }
    }

    if pending_bond.is_some() {
        return Err(MolError::syntax(bytes.len(), "dangling bond symbol at end"));
    }
    if !branch_stack.is_empty() {
        return Err(MolError::syntax(bytes.len(), "unmatched '('"));
    }
    if let Some(&digit) = rings.keys().min() {
        return Err(MolError::UnclosedRing { digit });
    }

    MolGraph::from_parts(atoms, bonds)
}

fn attach_atom(
    atom: Atom,
    atoms: &mut Vec<Atom>,
    bonds: &mut Vec<(usize, usize, BondOrder)>,
    prev: &mut Option<usize>,
    pending_bond: &mut Option<BondOrder>,
    pos: usize,
) -> Result<(), MolError> {
    let idx = atoms.len();
    atoms.push(atom);
    if let Some(from) = *prev {
        let order = pending_bond
            .take()
            .unwrap_or_else(|| default_order(&atoms[from], &atoms[idx]));
        bonds.push((from, idx, order));
    } else if pending_bond.is_some() {
        return Err(MolError::syntax(pos, "bond symbol before component start"));
    }
    *prev = Some(idx);
    Ok(())
}

/// A bond written without a symbol is aromatic when both atoms are
/// aromatic, single otherwise.
fn default_order(a: &Atom, b: &Atom) -> BondOrder {
    if a.aromatic && b.aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

fn close_or_open_ring(
    digit: u16,
    pos: usize,
    rings: &mut HashMap<u16, PendingRing>,
    bonds: &mut Vec<(usize, usize, BondOrder)>,
    atoms: &[Atom],
    prev: Option<usize>,
    pending_bond: &mut Option<BondOrder>,
) -> Result<(), MolError> {
    let here = prev.ok_or_else(|| MolError::syntax(pos, "ring digit before any atom"))?;
    let order_here = pending_bond.take();
    match rings.remove(&digit) {
        Some(open) => {
            if open.atom == here {
                return Err(MolError::syntax(pos, "ring closure bonds atom to itself"));
            }
            let order = match (open.order, order_here) {
                (Some(a), Some(b)) if a != b => {
                    return Err(MolError::syntax(
                        pos,
                        format!("ring {digit} bond symbols disagree"),
                    ));
                }
                (Some(a), _) => a,
                (None, Some(b)) => b,
                (None, None) => default_order(&atoms[open.atom], &atoms[here]),
            };
            bonds.push((open.atom, here, order));
        }
        None => {
            rings.insert(
                digit,
                PendingRing {
                    atom: here,
                    order: order_here,
                },
            );
        }
    }
    Ok(())
}

fn parse_bare_atom(bytes: &[u8], i: usize) -> Result<(Atom, usize), MolError> {
    // Two-letter symbols take precedence.
    if bytes[i] == b'C' && bytes.get(i + 1) == Some(&b'l') {
        return Ok((Atom::new(Element::Cl), 2));
    }
    if bytes[i] == b'B' && bytes.get(i + 1) == Some(&b'r') {
        return Ok((Atom::new(Element::Br), 2));
    }
    let atom = match bytes[i] {
        b'C' => Atom::new(Element::C),
        b'N' => Atom::new(Element::N),
        b'O' => Atom::new(Element::O),
        b'S' => Atom::new(Element::S),
        b'F' => Atom::new(Element::F),
        b'c' => Atom::aromatic(Element::C),
        b'n' => Atom::aromatic(Element::N),
        b'o' => Atom::aromatic(Element::O),
        b's' => Atom::aromatic(Element::S),
        b'*' => Atom::wildcard(),
        other => {
            let symbol = (other as char).to_string();
            return if other.is_ascii_alphabetic() {
                Err(MolError::UnknownElement { symbol })
            } else {
                Err(MolError::syntax(i, format!("unexpected character {symbol:?}")))
            };
        }
    };
    Ok((atom, 1))
}

/// Parses `[<element>(H<n>)?(charge)?(:<map>)?]` starting at `bytes[start] == b'['`.
/// Returns the atom and total token length. Atom maps are accepted and
/// discarded.
fn parse_bracket_atom(bytes: &[u8], start: usize) -> Result<(Atom, usize), MolError> {
    let close = bytes[start..]
        .iter()
        .position(|&b| b == b']')
        .ok_or_else(|| MolError::syntax(start, "unterminated bracket atom"))?
        + start;
    let inner = &bytes[start + 1..close];
    if inner.is_empty() {
        return Err(MolError::syntax(start, "empty bracket atom"));
    }
    let mut j = 0usize;

    if inner[0].is_ascii_digit() {
        return Err(MolError::syntax(start, "isotopes are not supported"));
    }

    // Element symbol.
    let (mut atom, used) = if inner[j] == b'*' {
        (Atom::wildcard(), 1)
    } else if inner[j] == b'C' && inner.get(j + 1) == Some(&b'l') {
        (Atom::new(Element::Cl), 2)
    } else if inner[j] == b'B' && inner.get(j + 1) == Some(&b'r') {
        (Atom::new(Element::Br), 2)
    } else {
        let atom = match inner[j] {
            b'C' => Atom::new(Element::C),
            b'N' => Atom::new(Element::N),
            b'O' => Atom::new(Element::O),
            b'S' => Atom::new(Element::S),
            b'F' => Atom::new(Element::F),
            b'H' => Atom::new(Element::H),
            b'c' => Atom::aromatic(Element::C),
            b'n' => Atom::aromatic(Element::N),
            b'o' => Atom::aromatic(Element::O),
            b's' => Atom::aromatic(Element::S),
            b'@' => return Err(MolError::syntax(start, "stereochemistry is not supported")),
            other => {
                return Err(MolError::UnknownElement {
                    symbol: (other as char).to_string(),
                })
            }
        };
        (atom, 1)
    };
    j += used;
    if atom.element != Element::Star {
        atom.explicit_h = Some(0);
    }

    match inner.get(j) {
        Some(b'@') => return Err(MolError::syntax(start, "stereochemistry is not supported")),
        // A trailing lowercase letter means a two-letter element symbol
        // outside the supported set.
        Some(&b) if b.is_ascii_lowercase() => {
            return Err(MolError::UnknownElement {
                symbol: format!("{}{}", inner[j - used] as char, b as char),
            });
        }
        _ => {}
    }

    // Hydrogen count.
    if inner.get(j) == Some(&b'H') {
        j += 1;
        let mut h: u8 = 1;
        if let Some(d) = inner.get(j).filter(|b| b.is_ascii_digit()) {
            h = d - b'0';
            j += 1;
        }
        atom.explicit_h = Some(h);
    }

    // Formal charge.
    if let Some(&sign) = inner.get(j).filter(|&&b| b == b'+' || b == b'-') {
        j += 1;
        let unit: i8 = if sign == b'+' { 1 } else { -1 };
        let mut charge = unit;
        if let Some(d) = inner.get(j).filter(|b| b.is_ascii_digit()) {
            charge = unit * ((d - b'0') as i8);
            j += 1;
        } else {
            while inner.get(j) == Some(&sign) {
                charge += unit;
                j += 1;
            }
        }
        atom.formal_charge = charge;
    }

    // Atom map, accepted and ignored.
    if inner.get(j) == Some(&b':') {
        j += 1;
        let digits = inner[j..].iter().take_while(|b| b.is_ascii_digit()).count();
        if digits == 0 {
            return Err(MolError::syntax(start, "':' in bracket without map number"));
        }
        j += digits;
    }

    if j != inner.len() {
        return Err(MolError::syntax(
            start,
            format!(
                "unexpected {:?} in bracket atom",
                inner[j..].iter().map(|&b| b as char).collect::<String>()
            ),
        ));
    }
    if atom.aromatic && !atom.element.can_be_aromatic() {
        return Err(MolError::UnknownElement {
            symbol: atom.element.symbol().to_ascii_lowercase(),
        });
    }
    Ok((atom, close - start + 1))
}
