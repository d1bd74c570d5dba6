//! Bond-disconnection schemes and attachment-labeled fragmentation.
//!
//! Five schemes are supported: exhaustive Hussain-Rea slicing (HR), the
//! BRICS environments of Degen et al., the classical RECAP bond types,
//! the mmpdb matched-pair cut rule (MMPA) and rotatable bonds
//! (ROTATABLE). Whatever a rule says, only acyclic single bonds are ever
//! cut; the eligibility filter enforces that globally.
//!
//! Rules live in a tab-separated table (`scheme <TAB> rule_id <TAB>
//! pattern`) parsed by the [`crate::patterns`] module. Chemical
//! environment nuance that a two-atom pattern cannot express (acyl
//! carbons, lactam nitrogens, BRICS L-classes) is applied procedurally,
//! keyed by `rule_id`, inside the rules module.

mod rules;

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::molgraph::{Atom, BondOrder, MolError, MolGraph};
use crate::patterns::{parse_pattern, PatternError, QueryGraph};

pub use rules::BUILTIN_RULE_TABLE;

/// The five bond-disconnection algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragmentationScheme {
    Hr,
    Brics,
    Recap,
    Mmpa,
    Rotatable,
}

impl FragmentationScheme {
    pub const ALL: [FragmentationScheme; 5] = [
        FragmentationScheme::Hr,
        FragmentationScheme::Brics,
        FragmentationScheme::Recap,
        FragmentationScheme::Mmpa,
        FragmentationScheme::Rotatable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FragmentationScheme::Hr => "hr",
            FragmentationScheme::Brics => "brics",
            FragmentationScheme::Recap => "recap",
            FragmentationScheme::Mmpa => "mmpa",
            FragmentationScheme::Rotatable => "rotatable",
        }
    }

    pub fn parse(s: &str) -> Option<FragmentationScheme> {
        match s.to_ascii_lowercase().as_str() {
            "hr" => Some(FragmentationScheme::Hr),
            "brics" => Some(FragmentationScheme::Brics),
            "recap" => Some(FragmentationScheme::Recap),
            "mmpa" => Some(FragmentationScheme::Mmpa),
            "rotatable" => Some(FragmentationScheme::Rotatable),
            _ => None,
        }
    }
}

impl fmt::Display for FragmentationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One disconnection rule: a two-atom bond query plus (possibly) a
/// procedural environment check keyed by `rule_id`.
#[derive(Debug, Clone)]
pub struct DisconnectionRule {
    pub scheme: FragmentationScheme,
    pub rule_id: String,
    pub bond_query: QueryGraph,
    pub description: String,
}

#[derive(Debug, Error)]
pub enum RuleTableError {
    #[error("line {line}: expected `scheme<TAB>rule_id<TAB>pattern`")]
    Malformed { line: usize },
    #[error("line {line}: unknown scheme {scheme:?}")]
    UnknownScheme { line: usize, scheme: String },
    #[error("line {line}: bond query must have exactly two atoms and one bond")]
    NotABondQuery { line: usize },
    #[error("line {line}: {source}")]
    BadPattern {
        line: usize,
        #[source]
        source: PatternError,
    },
}

/// An immutable set of disconnection rules, loaded once at startup.
#[derive(Debug)]
pub struct RuleTable {
    by_scheme: HashMap<FragmentationScheme, Vec<DisconnectionRule>>,
}

impl RuleTable {
    /// Parses `scheme <TAB> rule_id <TAB> pattern` lines. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str) -> Result<RuleTable, RuleTableError> {
        let mut by_scheme: HashMap<FragmentationScheme, Vec<DisconnectionRule>> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = trimmed.split('\t');
            let (scheme, rule_id, pattern) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), Some(c)) if cols.next().is_none() => (a, b, c),
                _ => return Err(RuleTableError::Malformed { line }),
            };
            let scheme = FragmentationScheme::parse(scheme).ok_or_else(|| {
                RuleTableError::UnknownScheme {
                    line,
                    scheme: scheme.to_string(),
                }
            })?;
            let bond_query =
                parse_pattern(pattern).map_err(|source| RuleTableError::BadPattern {
                    line,
                    source,
                })?;
            if bond_query.atom_count() != 2 || bond_query.bonds().len() != 1 {
                return Err(RuleTableError::NotABondQuery { line });
            }
            by_scheme
                .entry(scheme)
                .or_default()
                .push(DisconnectionRule {
                    scheme,
                    rule_id: rule_id.to_string(),
                    bond_query,
                    description: rules::describe(scheme, rule_id),
                });
        }
        Ok(RuleTable { by_scheme })
    }

    /// The shipping rule set.
    pub fn builtin() -> &'static RuleTable {
        static TABLE: OnceLock<RuleTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            RuleTable::parse(BUILTIN_RULE_TABLE).expect("builtin rule table is well-formed")
        })
    }

    pub fn rules_for(&self, scheme: FragmentationScheme) -> &[DisconnectionRule] {
        self.by_scheme.get(&scheme).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Bond indices eligible for cutting: sorted, deduplicated, all acyclic
/// single bonds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CutSet(Vec<usize>);

impl CutSet {
    pub fn new(mut bonds: Vec<usize>) -> CutSet {
        bonds.sort_unstable();
        bonds.dedup();
        CutSet(bonds)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bonds(&self) -> &[usize] {
        &self.0
    }
}

/// All bonds of `g` matching any of the scheme's rules, restricted to
/// acyclic single bonds. Deterministic.
pub fn eligible_bonds(g: &MolGraph, scheme: FragmentationScheme) -> CutSet {
    eligible_bonds_with(g, scheme, RuleTable::builtin())
}

pub fn eligible_bonds_with(
    g: &MolGraph,
    scheme: FragmentationScheme,
    table: &RuleTable,
) -> CutSet {
    let mut out = Vec::new();
    for (bi, bond) in g.bonds().iter().enumerate() {
        if bond.order != BondOrder::Single || bond.in_ring {
            continue;
        }
        let hit = table.rules_for(scheme).iter().any(|rule| {
            rule_matches_bond(rule, g, bond.a, bond.b) || rule_matches_bond(rule, g, bond.b, bond.a)
        });
        if hit {
            out.push(bi);
        }
    }
    CutSet::new(out)
}

fn rule_matches_bond(rule: &DisconnectionRule, g: &MolGraph, a: usize, b: usize) -> bool {
    let atoms = rule.bond_query.atoms();
    let (_, _, bond_pattern) = rule.bond_query.bonds()[0];
    if !atoms[0].matches(g, a) || !atoms[1].matches(g, b) {
        return false;
    }
    let bi = g.bond_between(a, b).expect("endpoints are bonded");
    if !bond_pattern.matches(g, bi) {
        return false;
    }
    rules::environment_ok(rule.scheme, &rule.rule_id, g, a, b)
}

/// Where a fragment attaches: the wildcard atom standing in for a cut
/// bond stub.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FragAtom {
    pub fragment: usize,
    pub atom: usize,
}

/// A pair of attachment markers created by one cut; rejoining them with a
/// single bond restores the original bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttachmentPair {
    pub a: FragAtom,
    pub b: FragAtom,
}

/// Fragments with paired wildcard attachment markers. Reassembling all
/// pairs reproduces a graph isomorphic to the fragmented input.
#[derive(Debug, Clone)]
pub struct FragmentSet {
    pub fragments: Vec<MolGraph>,
    pub pairs: Vec<AttachmentPair>,
}

#[derive(Debug, Error)]
pub enum FragmenterError {
    #[error("cut {bond} is not an acyclic single bond of the molecule")]
    InvalidCut { bond: usize },
    #[error("fragmentation failed: {source}")]
    FragmentationFailure {
        #[source]
        source: MolError,
    },
}

/// Removes every cut bond, replacing both stubs with paired wildcard
/// atoms. Fragments are enumerated in order of their smallest original
/// atom index.
pub fn fragment(g: &MolGraph, cuts: &CutSet) -> Result<FragmentSet, FragmenterError> {
    for &bi in cuts.bonds() {
        let ok = bi < g.bond_count()
            && g.bond(bi).order == BondOrder::Single
            && !g.bond(bi).in_ring;
        if !ok {
            return Err(FragmenterError::InvalidCut { bond: bi });
        }
    }
    let cut_flags: Vec<bool> = {
        let mut f = vec![false; g.bond_count()];
        for &bi in cuts.bonds() {
            f[bi] = true;
        }
        f
    };

    // Extended atom list: originals, then two stars per cut.
    let mut atoms: Vec<Atom> = g.atoms().to_vec();
    let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::new();
    let mut star_pairs: Vec<(usize, usize)> = Vec::new();
    for (bi, bond) in g.bonds().iter().enumerate() {
        if cut_flags[bi] {
            let star_a = atoms.len();
            atoms.push(Atom::wildcard());
            let star_b = atoms.len();
            atoms.push(Atom::wildcard());
            bonds.push((bond.a, star_a, BondOrder::Single));
            bonds.push((bond.b, star_b, BondOrder::Single));
            star_pairs.push((star_a, star_b));
        } else {
            bonds.push((bond.a, bond.b, bond.order));
        }
    }

    // Connected components over the cut graph, in smallest-atom order.
    let total = atoms.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for &(a, b, _) in &bonds {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut comp = vec![usize::MAX; total];
    let mut n_comp = 0usize;
    for start in 0..total {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = n_comp;
        n_comp += 1;
        let mut stack = vec![start];
        comp[start] = id;
        while let Some(v) = stack.pop() {
            for &nbr in &adj[v] {
                if comp[nbr] == usize::MAX {
                    comp[nbr] = id;
                    stack.push(nbr);
                }
            }
        }
    }

    let mut local_index = vec![usize::MAX; total];
    let mut frag_atoms: Vec<Vec<Atom>> = vec![Vec::new(); n_comp];
    let mut frag_bonds: Vec<Vec<(usize, usize, BondOrder)>> = vec![Vec::new(); n_comp];
    for i in 0..total {
        let c = comp[i];
        local_index[i] = frag_atoms[c].len();
        frag_atoms[c].push(atoms[i]);
    }
    for &(a, b, order) in &bonds {
        let c = comp[a];
        frag_bonds[c].push((local_index[a], local_index[b], order));
    }

    let mut fragments = Vec::with_capacity(n_comp);
    for (fa, fb) in frag_atoms.into_iter().zip(frag_bonds) {
        let frag = MolGraph::from_parts(fa, fb)
            .map_err(|source| FragmenterError::FragmentationFailure { source })?;
        fragments.push(frag);
    }
    let pairs = star_pairs
        .into_iter()
        .map(|(sa, sb)| AttachmentPair {
            a: FragAtom {
                fragment: comp[sa],
                atom: local_index[sa],
            },
            b: FragAtom {
                fragment: comp[sb],
                atom: local_index[sb],
            },
        })
        .collect();

    Ok(FragmentSet { fragments, pairs })
}

/// Joins every attachment pair back with a single bond. Test oracle for
/// the reassembly-identity invariant, and the decoder for fragment sets.
pub fn reassemble(set: &FragmentSet) -> Result<MolGraph, MolError> {
    let mut offsets = Vec::with_capacity(set.fragments.len());
    let mut total = 0usize;
    for frag in &set.fragments {
        offsets.push(total);
        total += frag.atom_count();
    }
    // Global indices, skipping the paired star atoms.
    let mut is_star = vec![false; total];
    for pair in &set.pairs {
        for fa in [pair.a, pair.b] {
            is_star[offsets[fa.fragment] + fa.atom] = true;
        }
    }
    let mut remap = vec![usize::MAX; total];
    let mut atoms = Vec::new();
    for (fi, frag) in set.fragments.iter().enumerate() {
        for (ai, atom) in frag.atoms().iter().enumerate() {
            let gi = offsets[fi] + ai;
            if !is_star[gi] {
                remap[gi] = atoms.len();
                atoms.push(*atom);
            }
        }
    }
    let mut bonds = Vec::new();
    for (fi, frag) in set.fragments.iter().enumerate() {
        for bond in frag.bonds() {
            let ga = offsets[fi] + bond.a;
            let gb = offsets[fi] + bond.b;
            if !is_star[ga] && !is_star[gb] {
                bonds.push((remap[ga], remap[gb], bond.order));
            }
        }
    }
    for pair in &set.pairs {
        let host = |fa: FragAtom| -> Result<usize, MolError> {
            let frag = &set.fragments[fa.fragment];
            let (nbr, _) = *frag
                .neighbors(fa.atom)
                .first()
                .ok_or_else(|| MolError::structure("attachment marker has no host"))?;
            Ok(remap[offsets[fa.fragment] + nbr])
        };
        bonds.push((host(pair.a)?, host(pair.b)?, BondOrder::Single));
    }
    MolGraph::from_parts(atoms, bonds)
}

/// Histogram and mean of fragments per molecule over a corpus; molecules
/// failing fragmentation are excluded and counted separately.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FragmentStats {
    pub histogram: std::collections::BTreeMap<usize, usize>,
    pub mean: f64,
    pub molecules: usize,
    pub failures: usize,
}

pub fn fragment_count_stats<'a>(
    corpus: impl IntoIterator<Item = &'a MolGraph>,
    scheme: FragmentationScheme,
) -> FragmentStats {
    let mut stats = FragmentStats::default();
    let mut total = 0usize;
    for g in corpus {
        let cuts = eligible_bonds(g, scheme);
        match fragment(g, &cuts) {
            Ok(set) => {
                let count = set.fragments.len();
                *stats.histogram.entry(count).or_insert(0) += 1;
                total += count;
                stats.molecules += 1;
            }
            Err(_) => stats.failures += 1,
        }
    }
    if stats.molecules > 0 {
        stats.mean = total as f64 / stats.molecules as f64;
    }
    stats
}
