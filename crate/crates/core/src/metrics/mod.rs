//! Generative-model evaluation: validity, uniqueness, novelty, internal
//! diversity, fragmentation percentage, substructure match-constraint and
//! the MOSES curation filter, assembled into per-run reports.
//!
//! Denominator discipline: validity is computed over all samples; every
//! other metric is computed over the valid set, and each report records
//! both counts.

mod fingerprint;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fingerprint::{tanimoto, Fingerprint, FP_BITS, FP_RADIUS};

use crate::molgraph::{
    canonical_smiles, parse_smiles, smallest_ring_through_bond, Element, MolGraph,
};
use crate::patterns::{has_substructure, PatternError, QueryGraph};

/// Parsed validity over a sample set. The fraction's denominator is all
/// samples; `graphs` holds only the parses that succeeded.
#[derive(Debug, Clone)]
pub struct Validity {
    pub n_samples: usize,
    pub n_valid: usize,
    pub graphs: Vec<MolGraph>,
}

impl Validity {
    pub fn fraction(&self) -> f64 {
        if self.n_samples == 0 {
            0.0
        } else {
            self.n_valid as f64 / self.n_samples as f64
        }
    }
}

/// Parses every sample; a sample is valid iff it parses with no syntax or
/// valence error.
pub fn validity(samples: &[String]) -> Validity {
    let mut graphs = Vec::new();
    for s in samples {
        if let Ok(g) = parse_smiles(s) {
            graphs.push(g);
        }
    }
    Validity {
        n_samples: samples.len(),
        n_valid: graphs.len(),
        graphs,
    }
}

/// Distinct canonical strings over the valid set.
pub fn uniqueness(graphs: &[MolGraph]) -> f64 {
    if graphs.is_empty() {
        return 0.0;
    }
    let distinct: HashSet<String> = graphs.iter().map(canonical_smiles).collect();
    distinct.len() as f64 / graphs.len() as f64
}

/// Fraction of distinct canonical strings absent from the training set.
pub fn novelty(graphs: &[MolGraph], training_canonical: &HashSet<String>) -> f64 {
    let distinct: HashSet<String> = graphs.iter().map(canonical_smiles).collect();
    if distinct.is_empty() {
        return 0.0;
    }
    let novel = distinct
        .iter()
        .filter(|c| !training_canonical.contains(*c))
        .count();
    novel as f64 / distinct.len() as f64
}

/// Internal diversity: 1 - mean pairwise Tanimoto over fingerprints
/// (first power). Sets larger than `sample_cap` are reduced to a seeded
/// subsample, recorded in the result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntDiv {
    pub value: f64,
    pub subsampled: bool,
    pub used: usize,
}

pub fn internal_diversity(graphs: &[MolGraph], sample_cap: usize, seed: u64) -> IntDiv {
    let fps: Vec<Fingerprint> = if graphs.len() > sample_cap {
        let mut idx: Vec<usize> = (0..graphs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx.truncate(sample_cap);
        idx.sort_unstable();
        idx.iter().map(|&i| Fingerprint::for_molecule(&graphs[i])).collect()
    } else {
        graphs.iter().map(Fingerprint::for_molecule).collect()
    };
    let n = fps.len();
    if n < 2 {
        return IntDiv {
            value: 0.0,
            subsampled: graphs.len() > sample_cap,
            used: n,
        };
    }
    let mut sum = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += tanimoto(&fps[i], &fps[j]);
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    IntDiv {
        value: 1.0 - sum / pairs,
        subsampled: graphs.len() > sample_cap,
        used: n,
    }
}

/// Fraction of graphs with more than one connected component.
pub fn fragmented_pct(graphs: &[MolGraph]) -> f64 {
    if graphs.is_empty() {
        return 0.0;
    }
    let fragmented = graphs.iter().filter(|g| g.component_count() > 1).count();
    fragmented as f64 / graphs.len() as f64
}

/// A fragment-constrained design target.
#[derive(Debug, Clone)]
pub enum Constraint {
    Scaffold(MolGraph),
    FragmentPair(MolGraph, MolGraph),
}

impl Constraint {
    fn queries(&self) -> Result<Vec<QueryGraph>, PatternError> {
        match self {
            Constraint::Scaffold(s) => Ok(vec![QueryGraph::from_molgraph(s)?]),
            Constraint::FragmentPair(a, b) => Ok(vec![
                QueryGraph::from_molgraph(a)?,
                QueryGraph::from_molgraph(b)?,
            ]),
        }
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Fraction of valid graphs preserving the constraint: the scaffold as a
/// substructure, or both fragments for a pair.
pub fn match_constraint(graphs: &[MolGraph], constraint: &Constraint) -> Result<f64, MetricsError> {
    if graphs.is_empty() {
        return Ok(0.0);
    }
    let queries = constraint.queries()?;
    let matched = graphs
        .iter()
        .filter(|g| queries.iter().all(|q| has_substructure(q, g)))
        .count();
    Ok(matched as f64 / graphs.len() as f64)
}

/// Why a molecule fails the MOSES curation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterFailure {
    ChargedAtom,
    DisallowedElement,
    /// Smallest ring through some bond exceeds the limit.
    LargeRing {
        size: usize,
    },
}

/// Ring-size cutoff: rings larger than this fail the filter.
pub const DEFAULT_MAX_RING_SIZE: usize = 8;

/// MOSES-style curation: no formal charges, elements restricted to
/// C/N/S/O/F/Cl/Br/H, no ring larger than [`DEFAULT_MAX_RING_SIZE`].
pub fn moses_filter(g: &MolGraph) -> Result<(), FilterFailure> {
    moses_filter_with(g, DEFAULT_MAX_RING_SIZE)
}

pub fn moses_filter_with(g: &MolGraph, max_ring: usize) -> Result<(), FilterFailure> {
    for atom in g.atoms() {
        if atom.formal_charge != 0 {
            return Err(FilterFailure::ChargedAtom);
        }
        if atom.element == Element::Star {
            return Err(FilterFailure::DisallowedElement);
        }
    }
    for bi in 0..g.bond_count() {
        if let Some(size) = smallest_ring_through_bond(g, bi) {
            if size > max_ring {
                return Err(FilterFailure::LargeRing { size });
            }
        }
    }
    Ok(())
}

/// Fraction of graphs passing [`moses_filter`].
pub fn filter_pass(graphs: &[MolGraph]) -> f64 {
    if graphs.is_empty() {
        return 0.0;
    }
    let pass = graphs.iter().filter(|g| moses_filter(g).is_ok()).count();
    pass as f64 / graphs.len() as f64
}

/// Sum of standard atomic masses including implicit hydrogens.
pub fn mol_weight(g: &MolGraph) -> f64 {
    g.mol_weight()
}

/// Knobs for report assembly; defaults match the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub int_div_cap: usize,
    pub int_div_seed: u64,
    pub max_ring_size: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            int_div_cap: 1000,
            int_div_seed: 0,
            max_ring_size: DEFAULT_MAX_RING_SIZE,
        }
    }
}

/// One run's metrics. Fractions are in [0, 1];
/// uniqueness/novelty/diversity/fragmentation/match are over the valid
/// set only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub n_valid: usize,
    pub validity: f64,
    pub uniqueness: f64,
    pub novelty: f64,
    pub int_div: f64,
    pub fragmented_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub match_constraint: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub filter_pass: Option<f64>,
    pub mol_weight_mean: f64,
    pub mol_weight_std: f64,
    /// Tanimoto exponent used for int_div (this toolkit reports the
    /// first-power variant).
    pub tanimoto_power: u8,
    pub int_div_sample_cap: usize,
    pub int_div_subsampled: bool,
    pub int_div_seed: u64,
}

/// Composes every metric over one sample file.
pub fn build_report(
    samples: &[String],
    training_canonical: &HashSet<String>,
    constraint: Option<&Constraint>,
) -> Result<MetricsReport, MetricsError> {
    build_report_with(samples, training_canonical, constraint, ReportConfig::default())
}

pub fn build_report_with(
    samples: &[String],
    training_canonical: &HashSet<String>,
    constraint: Option<&Constraint>,
    config: ReportConfig,
) -> Result<MetricsReport, MetricsError> {
    let v = validity(samples);
    let int_div = internal_diversity(&v.graphs, config.int_div_cap, config.int_div_seed);
    let weights: Vec<f64> = v.graphs.iter().map(mol_weight).collect();
    let (mw_mean, mw_std) = mean_std(&weights);
    let match_frac = match constraint {
        Some(c) => Some(match_constraint(&v.graphs, c)?),
        None => None,
    };
    Ok(MetricsReport {
        n_samples: v.n_samples,
        n_valid: v.n_valid,
        validity: v.fraction(),
        uniqueness: uniqueness(&v.graphs),
        novelty: novelty(&v.graphs, training_canonical),
        int_div: int_div.value,
        fragmented_pct: fragmented_pct(&v.graphs),
        match_constraint: match_frac,
        filter_pass: Some(filter_pass(&v.graphs)),
        mol_weight_mean: mw_mean,
        mol_weight_std: mw_std,
        tanimoto_power: 1,
        int_div_sample_cap: config.int_div_cap,
        int_div_subsampled: int_div.subsampled,
        int_div_seed: config.int_div_seed,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation of each metric across seeds, in
/// benchmark-table column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub validity: MeanStd,
    pub uniqueness: MeanStd,
    pub novelty: MeanStd,
    pub int_div: MeanStd,
    pub fragmented_pct: MeanStd,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub match_constraint: Option<MeanStd>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub filter_pass: Option<MeanStd>,
    pub mol_weight: MeanStd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    pub fn from_reports(reports: &[MetricsReport]) -> Aggregate {
        let collect = |f: &dyn Fn(&MetricsReport) -> f64| -> MeanStd {
            let values: Vec<f64> = reports.iter().map(f).collect();
            let (mean, std) = mean_std(&values);
            MeanStd { mean, std }
        };
        let optional = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Option<MeanStd> {
            let values: Option<Vec<f64>> = reports.iter().map(f).collect();
            values.map(|v| {
                let (mean, std) = mean_std(&v);
                MeanStd { mean, std }
            })
        };
        Aggregate {
            runs: reports.len(),
            validity: collect(&|r| r.validity),
            uniqueness: collect(&|r| r.uniqueness),
            novelty: collect(&|r| r.novelty),
            int_div: collect(&|r| r.int_div),
            fragmented_pct: collect(&|r| r.fragmented_pct),
            match_constraint: optional(&|r| r.match_constraint),
            filter_pass: optional(&|r| r.filter_pass),
            mol_weight: collect(&|r| r.mol_weight_mean),
        }
    }

    /// CSV columns follow the benchmark-table layout: validity, uniqueness,
    /// novelty, internal diversity, fragmented; extras trail.
    pub fn csv_header() -> &'static str {
        "label,runs,validity_mean,validity_std,uniqueness_mean,uniqueness_std,\
         novelty_mean,novelty_std,int_div_mean,int_div_std,fragmented_mean,fragmented_std,\
         match_constraint_mean,match_constraint_std,filter_pass_mean,filter_pass_std,\
         mol_weight_mean,mol_weight_std"
    }

    pub fn csv_row(&self, label: &str) -> String {
        let opt = |m: &Option<MeanStd>| match m {
            Some(v) => format!("{:.6},{:.6}", v.mean, v.std),
            None => ",".to_string(),
        };
        format!(
            "{label},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{:.6}",
            self.runs,
            self.validity.mean,
            self.validity.std,
            self.uniqueness.mean,
            self.uniqueness.std,
            self.novelty.mean,
            self.novelty.std,
            self.int_div.mean,
            self.int_div.std,
            self.fragmented_pct.mean,
            self.fragmented_pct.std,
            opt(&self.match_constraint),
            opt(&self.filter_pass),
            self.mol_weight.mean,
            self.mol_weight.std,
        )
    }
}

#[cfg(test)]
mod tests;
