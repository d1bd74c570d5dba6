//! Seeded sampling, prompt completion, and the decoration/linking design
//! loops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{NGramModel, StrictEncodeError};
use crate::corpus::mix;
use crate::molgraph::{parse_smiles, MolGraph};
use crate::patterns::{has_substructure, PatternError, QueryGraph};
use crate::safecodec::{linker_prompt, scaffold_prompt, Prompt, SafeError, SafeString};

/// Decoding parameters. `max_tokens` bounds every generation; reaching it
/// is a normal, recorded outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub temperature: f64,
    pub max_tokens: usize,
    pub seed: u64,
    pub stop_on_eos: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            temperature: 1.0,
            max_tokens: 256,
            seed: 0,
            stop_on_eos: true,
        }
    }
}

/// One sampled string and whether the token budget cut it off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub text: String,
    pub truncated: bool,
}

#[derive(Debug, Error)]
pub enum ClmError {
    #[error("prompt token {token:?} is not in the model vocabulary")]
    OutOfVocabularyPrompt { token: String },
    #[error(transparent)]
    Prompt(#[from] SafeError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Autoregressive temperature sampling from an empty context. The same
/// seed always yields the same output.
pub fn sample(model: &NGramModel, config: &SamplerConfig) -> Generated {
    let prefix = [model.vocab().bos_id()];
    let (ids, truncated) = generate(model, &prefix, config);
    Generated {
        text: model.vocab().decode(&ids),
        truncated,
    }
}

/// Emits the prompt verbatim and samples a continuation after it; the
/// output always begins with the exact prompt surface.
pub fn complete(
    model: &NGramModel,
    prompt: &Prompt,
    config: &SamplerConfig,
) -> Result<Generated, ClmError> {
    let prompt_ids = model
        .vocab()
        .encode_strict(&prompt.text)
        .map_err(|e| match e {
            StrictEncodeError::OutOfVocabulary { token } => {
                ClmError::OutOfVocabularyPrompt { token }
            }
            StrictEncodeError::Tokenize(err) => ClmError::OutOfVocabularyPrompt {
                token: err.to_string(),
            },
        })?;
    let mut prefix = vec![model.vocab().bos_id()];
    prefix.extend(&prompt_ids);
    let (ids, truncated) = generate(model, &prefix, config);
    let continuation = model.vocab().decode(&ids[prompt_ids.len() + 1..]);
    Ok(Generated {
        text: format!("{}{}", prompt.text, continuation),
        truncated,
    })
}

fn generate(model: &NGramModel, prefix: &[u32], config: &SamplerConfig) -> (Vec<u32>, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let eos = model.vocab().eos_id();
    let mut ids = prefix.to_vec();
    let mut truncated = true;
    for _ in 0..config.max_tokens {
        let dist = model.next_distribution(&ids);
        let next = draw(&dist, config.temperature, &mut rng);
        ids.push(next);
        if config.stop_on_eos && next == eos {
            truncated = false;
            break;
        }
    }
    (ids, truncated)
}

/// Temperature-shaped draw; temperature below 1e-6 degenerates to argmax
/// with lowest-id tie-breaking.
fn draw(dist: &[f64], temperature: f64, rng: &mut ChaCha8Rng) -> u32 {
    if temperature < 1e-6 {
        let mut best = 0usize;
        for (i, &p) in dist.iter().enumerate() {
            if p > dist[best] {
                best = i;
            }
        }
        return best as u32;
    }
    let inv = 1.0 / temperature;
    let weights: Vec<f64> = dist
        .iter()
        .map(|&p| if p > 0.0 { p.powf(inv) } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut roll = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        roll -= w;
        if roll <= 0.0 && w > 0.0 {
            return i as u32;
        }
    }
    // Floating-point tail: fall back to the last positive weight.
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("distribution has positive mass") as u32
}

/// One scored design sample. Nothing is dropped: callers receive exactly
/// `n_samples` records and every denominator stays explicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSample {
    pub text: String,
    /// The decoded molecule, present iff the sample is valid.
    pub graph: Option<MolGraph>,
    pub valid: bool,
    pub fragmented: bool,
    pub constraint_matched: bool,
    pub closed_all_digits: bool,
    pub truncated: bool,
}

/// Samples `n_samples` scaffold decorations and flags each one.
pub fn decorate(
    model: &NGramModel,
    scaffold: &MolGraph,
    config: &SamplerConfig,
    n_samples: usize,
) -> Result<Vec<DesignSample>, ClmError> {
    let prompt = scaffold_prompt(scaffold)?;
    let query = QueryGraph::from_molgraph(scaffold)?;
    run_design(model, &prompt, &[query], config, n_samples)
}

/// Samples `n_samples` linked designs for a fragment pair and flags each
/// one; the constraint requires both fragments as substructures.
pub fn link(
    model: &NGramModel,
    frag_a: &MolGraph,
    frag_b: &MolGraph,
    config: &SamplerConfig,
    n_samples: usize,
) -> Result<Vec<DesignSample>, ClmError> {
    let prompt = linker_prompt(frag_a, frag_b)?;
    let queries = [
        QueryGraph::from_molgraph(frag_a)?,
        QueryGraph::from_molgraph(frag_b)?,
    ];
    run_design(model, &prompt, &queries, config, n_samples)
}

fn run_design(
    model: &NGramModel,
    prompt: &Prompt,
    constraints: &[QueryGraph],
    config: &SamplerConfig,
    n_samples: usize,
) -> Result<Vec<DesignSample>, ClmError> {
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let per_sample = SamplerConfig {
            seed: mix(config.seed, i as u64),
            ..*config
        };
        let generated = complete(model, prompt, &per_sample)?;
        out.push(score_design(&generated, constraints));
    }
    Ok(out)
}

fn score_design(generated: &Generated, constraints: &[QueryGraph]) -> DesignSample {
    let closed_all_digits = SafeString::parse(&generated.text).is_closed();
    match parse_smiles(&generated.text) {
        Ok(g) => {
            let matched = constraints.iter().all(|q| has_substructure(q, &g));
            DesignSample {
                text: generated.text.clone(),
                valid: true,
                fragmented: g.component_count() > 1,
                constraint_matched: matched,
                closed_all_digits,
                truncated: generated.truncated,
                graph: Some(g),
            }
        }
        Err(_) => DesignSample {
            text: generated.text.clone(),
            graph: None,
            valid: false,
            fragmented: false,
            constraint_matched: false,
            closed_all_digits,
            truncated: generated.truncated,
        },
    }
}
