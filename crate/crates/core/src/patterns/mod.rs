//! SMARTS-subset queries and subgraph matching.
//!
//! The pattern language covers exactly what the disconnection rule tables
//! and scaffold constraints need: element symbols (aromatic via
//! lowercase), `a`/`A` aromaticity, `R`/`!R` ring membership, `D<n>`
//! degree, formal charges, the `*` wildcard, `!` negation and `;`
//! conjunction inside brackets, bond orders `- = # : ~` and bond
//! ring-ness `@`/`!@`. Recursive SMARTS and OR-lists are out of scope and
//! rejected as [`PatternError::UnsupportedPrimitive`].
//!
//! Matching is backtracking subgraph isomorphism with candidates ordered
//! by the rarest atom pattern. [`match_all`] enumerates injective
//! mappings; [`has_substructure`] answers the scaffold match-constraint
//! question, where `[*]` attachment points match any heavy atom and two
//! attachment points may be satisfied by the same target atom (a
//! completion may close both open digits on one atom, which still
//! preserves the scaffold).

use thiserror::Error;

use crate::molgraph::{BondOrder, Element, MolGraph};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unsupported pattern primitive: {what}")]
    UnsupportedPrimitive { what: String },
    #[error("query graph must be connected and non-empty")]
    Disconnected,
}

/// A negated primitive inside a bracket expression, e.g. `[!R;!D1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Negated {
    Element(Element),
    Aromatic,
    Aliphatic,
    Ring,
    Degree(u8),
}

/// Conjunctive constraints on one query atom.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtomPattern {
    pub wildcard: bool,
    pub element: Option<Element>,
    pub aromatic: Option<bool>,
    pub in_ring: Option<bool>,
    pub degree: Option<u8>,
    pub charge: Option<i8>,
    pub negations: Vec<Negated>,
}

impl AtomPattern {
    pub fn wildcard() -> AtomPattern {
        AtomPattern {
            wildcard: true,
            ..Default::default()
        }
    }

    /// True when target atom `i` satisfies every constraint.
    pub fn matches(&self, g: &MolGraph, i: usize) -> bool {
        let atom = g.atom(i);
        if self.wildcard {
            // Attachment points stand for any heavy atom.
            return atom.element != Element::H;
        }
        if let Some(el) = self.element {
            if atom.element != el {
                return false;
            }
        }
        if let Some(arom) = self.aromatic {
            if atom.aromatic != arom {
                return false;
            }
        }
        if let Some(ring) = self.in_ring {
            if g.atom_in_ring(i) != ring {
                return false;
            }
        }
        if let Some(d) = self.degree {
            if g.degree(i) != usize::from(d) {
                return false;
            }
        }
        if let Some(c) = self.charge {
            if atom.formal_charge != c {
                return false;
            }
        }
        for neg in &self.negations {
            let hit = match *neg {
                Negated::Element(el) => atom.element == el,
                Negated::Aromatic => atom.aromatic,
                Negated::Aliphatic => !atom.aromatic,
                Negated::Ring => g.atom_in_ring(i),
                Negated::Degree(d) => g.degree(i) == usize::from(d),
            };
            if hit {
                return false;
            }
        }
        true
    }
}

/// Bond-order constraint. SMARTS semantics: an unwritten bond means
/// "single or aromatic", `~` means any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OrderConstraint {
    #[default]
    Any,
    Exact(BondOrder),
    SingleOrAromatic,
}

impl OrderConstraint {
    fn matches(self, order: BondOrder) -> bool {
        match self {
            OrderConstraint::Any => true,
            OrderConstraint::Exact(want) => order == want,
            OrderConstraint::SingleOrAromatic => {
                matches!(order, BondOrder::Single | BondOrder::Aromatic)
            }
        }
    }
}

/// Constraints on one query bond.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BondPattern {
    pub order: OrderConstraint,
    pub in_ring: Option<bool>,
}

impl BondPattern {
    /// True when target bond `bond_idx` satisfies every constraint.
    pub fn matches(&self, g: &MolGraph, bond_idx: usize) -> bool {
        let bond = g.bond(bond_idx);
        if !self.order.matches(bond.order) {
            return false;
        }
        if let Some(ring) = self.in_ring {
            if bond.in_ring != ring {
                return false;
            }
        }
        true
    }
}

/// A connected, non-empty pattern graph.
#[derive(Debug, Clone)]
pub struct QueryGraph {
    atoms: Vec<AtomPattern>,
    bonds: Vec<(usize, usize, BondPattern)>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// Injective map from query atom indices to target atom indices;
/// position `q` holds the target of query atom `q`.
pub type MatchMapping = Vec<usize>;

impl QueryGraph {
    pub fn new(
        atoms: Vec<AtomPattern>,
        bonds: Vec<(usize, usize, BondPattern)>,
    ) -> Result<QueryGraph, PatternError> {
        if atoms.is_empty() {
            return Err(PatternError::Disconnected);
        }
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (bi, &(a, b, _)) in bonds.iter().enumerate() {
            adjacency[a].push((b, bi));
            adjacency[b].push((a, bi));
        }
        let q = QueryGraph {
            atoms,
            bonds,
            adjacency,
        };
        if !q.is_connected() {
            return Err(PatternError::Disconnected);
        }
        Ok(q)
    }

    /// Converts a molecule into a query: element, aromaticity and charge
    /// become constraints, `[*]` atoms become wildcards, and bonds touching
    /// a wildcard accept any order.
    pub fn from_molgraph(g: &MolGraph) -> Result<QueryGraph, PatternError> {
        let atoms: Vec<AtomPattern> = g
            .atoms()
            .iter()
            .map(|a| {
                if a.is_wildcard() {
                    AtomPattern::wildcard()
                } else {
                    AtomPattern {
                        element: Some(a.element),
                        aromatic: Some(a.aromatic),
                        charge: Some(a.formal_charge),
                        ..Default::default()
                    }
                }
            })
            .collect();
        let bonds = g
            .bonds()
            .iter()
            .map(|b| {
                let touches_star = g.atom(b.a).is_wildcard() || g.atom(b.b).is_wildcard();
                let order = if touches_star {
                    OrderConstraint::Any
                } else {
                    OrderConstraint::Exact(b.order)
                };
                (
                    b.a,
                    b.b,
                    BondPattern {
                        order,
                        in_ring: None,
                    },
                )
            })
            .collect();
        QueryGraph::new(atoms, bonds)
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[AtomPattern] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[(usize, usize, BondPattern)] {
        &self.bonds
    }

    fn is_connected(&self) -> bool {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(nbr, _) in &self.adjacency[v] {
                if !seen[nbr] {
                    seen[nbr] = true;
                    count += 1;
                    stack.push(nbr);
                }
            }
        }
        count == n
    }
}

/// Complete enumeration of injective query-to-target mappings, in
/// deterministic order.
pub fn match_all(q: &QueryGraph, g: &MolGraph) -> Vec<MatchMapping> {
    Search::new(q, g, false).run(None)
}

/// True iff the query is embedded somewhere in `g`.
///
/// Wildcard atoms match any heavy atom; distinct wildcards may share a
/// target atom (but never overlap a non-wildcard image), so a scaffold
/// whose two open attachment points were closed onto one atom still
/// counts as preserved.
pub fn has_substructure(q: &QueryGraph, g: &MolGraph) -> bool {
    !Search::new(q, g, true).run(Some(1)).is_empty()
}

struct Search<'a> {
    q: &'a QueryGraph,
    g: &'a MolGraph,
    relaxed_wildcards: bool,
    /// Query atoms in placement order: rarest pattern first, then
    /// connectivity-preserving BFS.
    order: Vec<usize>,
    mapping: Vec<usize>,
    used: Vec<bool>,
    wildcard_claims: Vec<u16>,
    results: Vec<MatchMapping>,
    limit: usize,
}

impl<'a> Search<'a> {
    fn new(q: &'a QueryGraph, g: &'a MolGraph, relaxed_wildcards: bool) -> Search<'a> {
        let nq = q.atom_count();
        let candidate_counts: Vec<usize> = (0..nq)
            .map(|qi| (0..g.atom_count()).filter(|&ti| q.atoms[qi].matches(g, ti)).count())
            .collect();
        let start = (0..nq)
            .min_by_key(|&qi| (candidate_counts[qi], qi))
            .expect("non-empty query");

        let mut order = vec![start];
        let mut placed = vec![false; nq];
        placed[start] = true;
        while order.len() < nq {
            // Next: adjacent to something placed, rarest first.
            let next = (0..nq)
                .filter(|&qi| !placed[qi])
                .filter(|&qi| q.adjacency[qi].iter().any(|&(nbr, _)| placed[nbr]))
                .min_by_key(|&qi| (candidate_counts[qi], qi))
                .expect("query graph is connected");
            placed[next] = true;
            order.push(next);
        }

        Search {
            q,
            g,
            relaxed_wildcards,
            order,
            mapping: vec![usize::MAX; nq],
            used: vec![false; g.atom_count()],
            wildcard_claims: vec![0; g.atom_count()],
            results: Vec::new(),
            limit: usize::MAX,
        }
    }

    fn run(mut self, limit: Option<usize>) -> Vec<MatchMapping> {
        self.limit = limit.unwrap_or(usize::MAX);
        self.place(0);
        self.results
    }

    fn place(&mut self, depth: usize) {
        if self.results.len() >= self.limit {
            return;
        }
        if depth == self.order.len() {
            self.results.push(self.mapping.clone());
            return;
        }
        let qi = self.order[depth];
        let is_wild = self.relaxed_wildcards && self.q.atoms[qi].wildcard;
        for ti in 0..self.g.atom_count() {
            if self.used[ti] {
                continue;
            }
            if !is_wild && self.relaxed_wildcards && self.wildcard_claims[ti] > 0 {
                continue;
            }
            if !self.q.atoms[qi].matches(self.g, ti) {
                continue;
            }
            if !self.bonds_consistent(qi, ti) {
                continue;
            }
            self.mapping[qi] = ti;
            if is_wild {
                self.wildcard_claims[ti] += 1;
            } else {
                self.used[ti] = true;
            }
            self.place(depth + 1);
            self.mapping[qi] = usize::MAX;
            if is_wild {
                self.wildcard_claims[ti] -= 1;
            } else {
                self.used[ti] = false;
            }
            if self.results.len() >= self.limit {
                return;
            }
        }
    }

    fn bonds_consistent(&self, qi: usize, ti: usize) -> bool {
        for &(q_nbr, q_bond) in &self.q.adjacency[qi] {
            let t_nbr = self.mapping[q_nbr];
            if t_nbr == usize::MAX {
                continue;
            }
            match self.g.bond_between(ti, t_nbr) {
                Some(t_bond) => {
                    if !self.q.bonds[q_bond].2.matches(self.g, t_bond) {
                        return false;
                    }
                }
                None => return false,
            }
        }
        true
    }
}

/// Parses a pattern string into a [`QueryGraph`].
pub fn parse_pattern(text: &str) -> Result<QueryGraph, PatternError> {
    let text = text.trim();
    let bytes = text.as_bytes();
    let mut atoms: Vec<AtomPattern> = Vec::new();
    let mut bonds: Vec<(usize, usize, BondPattern)> = Vec::new();
    let mut branch_stack: Vec<usize> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending = PendingBond::default();
    let mut rings: std::collections::HashMap<u16, (usize, PendingBond)> = Default::default();

    let syntax = |pos: usize, msg: &str| PatternError::Syntax {
        pos,
        msg: msg.to_string(),
    };

    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'$' | b',' => {
                return Err(PatternError::UnsupportedPrimitive {
                    what: format!("'{}'", c as char),
                })
            }
            b'(' => {
                let from = prev.ok_or_else(|| syntax(i, "branch before any atom"))?;
                branch_stack.push(from);
                i += 1;
            }
            b')' => {
                prev = Some(
                    branch_stack
                        .pop()
                        .ok_or_else(|| syntax(i, "unmatched ')'"))?,
                );
                i += 1;
            }
            b'-' | b'=' | b'#' | b':' | b'~' => {
                if pending.order.is_some() || pending.any_order {
                    return Err(syntax(i, "two bond order symbols in a row"));
                }
                match c {
                    b'-' => pending.order = Some(BondOrder::Single),
                    b'=' => pending.order = Some(BondOrder::Double),
                    b'#' => pending.order = Some(BondOrder::Triple),
                    b':' => pending.order = Some(BondOrder::Aromatic),
                    _ => pending.any_order = true,
                }
                i += 1;
            }
            b'@' => {
                pending.in_ring = Some(true);
                i += 1;
            }
            b'!' if bytes.get(i + 1) == Some(&b'@') => {
                pending.in_ring = Some(false);
                i += 2;
            }
            b'0'..=b'9' | b'%' => {
                let here = prev.ok_or_else(|| syntax(i, "ring digit before any atom"))?;
                let (digit, len) = if c == b'%' {
                    if i + 2 >= bytes.len() {
                        return Err(syntax(i, "'%' needs two digits"));
                    }
                    (
                        u16::from(bytes[i + 1] - b'0') * 10 + u16::from(bytes[i + 2] - b'0'),
                        3,
                    )
                } else {
                    (u16::from(c - b'0'), 1)
                };
                match rings.remove(&digit) {
                    Some((open_atom, open_bond)) => {
                        let merged = open_bond.merge(pending.take());
                        bonds.push((open_atom, here, merged.into_bond_pattern()));
                    }
                    None => {
                        rings.insert(digit, (here, pending.take()));
                    }
                }
                i += len;
            }
            b'[' => {
                let close = bytes[i..]
                    .iter()
                    .position(|&b| b == b']')
                    .ok_or_else(|| syntax(i, "unterminated bracket"))?
                    + i;
                let pat = parse_bracket_pattern(&text[i + 1..close], i)?;
                attach(pat, &mut atoms, &mut bonds, &mut prev, &mut pending);
                i = close + 1;
            }
            _ => {
                let (pat, len) = parse_bare_pattern(bytes, i)?;
                attach(pat, &mut atoms, &mut bonds, &mut prev, &mut pending);
                i += len;
            }
        }
    }
    if !branch_stack.is_empty() {
        return Err(syntax(bytes.len(), "unmatched '('"));
    }
    if let Some((&digit, _)) = rings.iter().next() {
        return Err(syntax(bytes.len(), &format!("ring digit {digit} never closed")));
    }
    QueryGraph::new(atoms, bonds)
}

#[derive(Debug, Clone, Copy, Default)]
struct PendingBond {
    order: Option<BondOrder>,
    any_order: bool,
    in_ring: Option<bool>,
}

impl PendingBond {
    fn take(&mut self) -> PendingBond {
        std::mem::take(self)
    }

    fn merge(self, other: PendingBond) -> PendingBond {
        PendingBond {
            order: self.order.or(other.order),
            any_order: self.any_order || other.any_order,
            in_ring: self.in_ring.or(other.in_ring),
        }
    }

    /// An unwritten bond means single-or-aromatic; `~` matches any order.
    fn into_bond_pattern(self) -> BondPattern {
        let order = if self.any_order {
            OrderConstraint::Any
        } else {
            match self.order {
                Some(o) => OrderConstraint::Exact(o),
                None => OrderConstraint::SingleOrAromatic,
            }
        };
        BondPattern {
            order,
            in_ring: self.in_ring,
        }
    }
}

fn attach(
    pat: AtomPattern,
    atoms: &mut Vec<AtomPattern>,
    bonds: &mut Vec<(usize, usize, BondPattern)>,
    prev: &mut Option<usize>,
    pending: &mut PendingBond,
) {
    let idx = atoms.len();
    atoms.push(pat);
    if let Some(from) = *prev {
        let bp = pending.take().into_bond_pattern();
        bonds.push((from, idx, bp));
    }
    *prev = Some(idx);
}

fn parse_bare_pattern(bytes: &[u8], i: usize) -> Result<(AtomPattern, usize), PatternError> {
    if bytes[i] == b'C' && bytes.get(i + 1) == Some(&b'l') {
        return Ok((element_pattern(Element::Cl, false), 2));
    }
    if bytes[i] == b'B' && bytes.get(i + 1) == Some(&b'r') {
        return Ok((element_pattern(Element::Br, false), 2));
    }
    let pat = match bytes[i] {
        b'C' => element_pattern(Element::C, false),
        b'N' => element_pattern(Element::N, false),
        b'O' => element_pattern(Element::O, false),
        b'S' => element_pattern(Element::S, false),
        b'F' => element_pattern(Element::F, false),
        b'c' => element_pattern(Element::C, true),
        b'n' => element_pattern(Element::N, true),
        b'o' => element_pattern(Element::O, true),
        b's' => element_pattern(Element::S, true),
        b'a' => AtomPattern {
            aromatic: Some(true),
            ..Default::default()
        },
        b'A' => AtomPattern {
            aromatic: Some(false),
            ..Default::default()
        },
        b'*' => AtomPattern::wildcard(),
        other => {
            return Err(PatternError::UnsupportedPrimitive {
                what: format!("'{}'", other as char),
            })
        }
    };
    Ok((pat, 1))
}

/// One `;`-conjunction bracket expression, e.g. `N;!D1;!R` or `!H;+0`.
fn parse_bracket_pattern(inner: &str, pos: usize) -> Result<AtomPattern, PatternError> {
    let mut pat = AtomPattern::default();
    let mut saw_wildcard = false;
    for term in inner.split(';') {
        if term.is_empty() {
            return Err(PatternError::Syntax {
                pos,
                msg: "empty term in bracket".to_string(),
            });
        }
        let (negated, body) = match term.strip_prefix('!') {
            Some(rest) => (true, rest),
            None => (false, term),
        };
        apply_primitive(&mut pat, body, negated, pos, &mut saw_wildcard)?;
    }
    if saw_wildcard && pat != AtomPattern::wildcard() {
        return Err(PatternError::Syntax {
            pos,
            msg: "'*' cannot be combined with other constraints".to_string(),
        });
    }
    Ok(pat)
}

fn apply_primitive(
    pat: &mut AtomPattern,
    body: &str,
    negated: bool,
    pos: usize,
    saw_wildcard: &mut bool,
) -> Result<(), PatternError> {
    let syntax = |msg: String| PatternError::Syntax { pos, msg };
    if body == "*" {
        if negated {
            return Err(syntax("'!*' is not a valid primitive".to_string()));
        }
        *saw_wildcard = true;
        pat.wildcard = true;
        return Ok(());
    }
    if body == "a" {
        if negated {
            pat.negations.push(Negated::Aromatic);
        } else {
            pat.aromatic = Some(true);
        }
        return Ok(());
    }
    if body == "A" {
        if negated {
            pat.negations.push(Negated::Aliphatic);
        } else {
            pat.aromatic = Some(false);
        }
        return Ok(());
    }
    if body == "R" {
        if negated {
            pat.in_ring = Some(false);
        } else {
            pat.in_ring = Some(true);
        }
        return Ok(());
    }
    if let Some(num) = body.strip_prefix('D') {
        let d: u8 = num
            .parse()
            .map_err(|_| syntax(format!("bad degree {num:?}")))?;
        if negated {
            pat.negations.push(Negated::Degree(d));
        } else {
            pat.degree = Some(d);
        }
        return Ok(());
    }
    if body.starts_with('+') || body.starts_with('-') {
        if negated {
            return Err(syntax("negated charges are not supported".to_string()));
        }
        let charge: i8 = if body == "+" {
            1
        } else if body == "-" {
            -1
        } else {
            body.parse()
                .map_err(|_| syntax(format!("bad charge {body:?}")))?
        };
        pat.charge = Some(charge);
        return Ok(());
    }
    // Element symbol, lowercase meaning aromatic.
    let aromatic = body.chars().next().is_some_and(|c| c.is_ascii_lowercase());
    let canonical = if aromatic {
        let mut s = body.to_string();
        s[..1].make_ascii_uppercase();
        s
    } else {
        body.to_string()
    };
    match Element::from_symbol(&canonical) {
        Some(el) => {
            if negated {
                pat.negations.push(Negated::Element(el));
            } else {
                pat.element = Some(el);
                if aromatic {
                    pat.aromatic = Some(true);
                } else if !el.can_be_aromatic() {
                    // F, Cl, Br, H are never aromatic; leave unconstrained.
                } else {
                    pat.aromatic = Some(false);
                }
            }
            Ok(())
        }
        None => Err(PatternError::UnsupportedPrimitive {
            what: format!("{body:?}"),
        }),
    }
}

fn element_pattern(el: Element, aromatic: bool) -> AtomPattern {
    AtomPattern {
        element: Some(el),
        aromatic: Some(aromatic),
        ..Default::default()
    }
}
