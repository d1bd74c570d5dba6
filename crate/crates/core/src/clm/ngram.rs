//! Interpolated n-gram model with absolute-discount smoothing.
//!
//! Count tables are kept for every context length up to `order - 1`. The
//! conditional probability at context length k interpolates the
//! discounted maximum-likelihood estimate with the (k-1)-order
//! distribution; the base case mixes the unigram counts with a uniform
//! distribution over the prediction alphabet (everything except bos).
//! Every probability is therefore strictly positive and each conditional
//! sums to one exactly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Notation, TokenizeError, Vocabulary};

const MODEL_FORMAT_VERSION: u32 = 1;

/// Smoothing parameters: one absolute discount shared by all orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub discount: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams { discount: 0.75 }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be between 2 and 8, got {order}")]
    OrderOutOfRange { order: usize },
    #[error("discount must be in (0, 1), got {discount}")]
    BadDiscount { discount: f64 },
    #[error("vocabulary has {size} tokens; the packed-context limit is 256")]
    VocabularyTooLarge { size: usize },
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error("model file: {0}")]
    BadModelFile(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    total: u32,
    counts: Vec<(u16, u32)>,
}

impl ContextCounts {
    fn add(&mut self, token: u16) {
        self.total += 1;
        match self.counts.binary_search_by_key(&token, |&(t, _)| t) {
            Ok(i) => self.counts[i].1 += 1,
            Err(i) => self.counts.insert(i, (token, 1)),
        }
    }

    fn count(&self, token: u16) -> u32 {
        self.counts
            .binary_search_by_key(&token, |&(t, _)| t)
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    fn distinct(&self) -> u32 {
        self.counts.len() as u32
    }
}

/// Token-level autoregressive model over a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct NGramModel {
    vocab: Vocabulary,
    order: usize,
    discount: f64,
    /// `tables[k]` maps packed contexts of length `k` to counts.
    tables: Vec<HashMap<u64, ContextCounts>>,
}

fn pack(ctx: &[u32]) -> u64 {
    debug_assert!(ctx.len() <= 7);
    let mut key = 1u64;
    for &t in ctx {
        key = (key << 8) | u64::from(t as u8);
    }
    key
}

impl NGramModel {
    /// Trains count tables for all orders up to `order` over bos/eos
    /// wrapped sequences.
    pub fn train(
        corpus: &[String],
        notation: Notation,
        order: usize,
        smoothing: SmoothingParams,
    ) -> Result<NGramModel, TrainError> {
        if corpus.is_empty() {
            return Err(TrainError::EmptyCorpus);
        }
        if !(2..=8).contains(&order) {
            return Err(TrainError::OrderOutOfRange { order });
        }
        if !(smoothing.discount > 0.0 && smoothing.discount < 1.0) {
            return Err(TrainError::BadDiscount {
                discount: smoothing.discount,
            });
        }
        let vocab = Vocabulary::build(corpus.iter().map(String::as_str), notation)?;
        if vocab.len() > 256 {
            return Err(TrainError::VocabularyTooLarge { size: vocab.len() });
        }
        let mut model = NGramModel {
            vocab,
            order,
            discount: smoothing.discount,
            tables: vec![HashMap::new(); order],
        };
        for line in corpus {
            let mut ids = vec![model.vocab.bos_id()];
            ids.extend(model.vocab.encode(line)?);
            ids.push(model.vocab.eos_id());
            for j in 1..ids.len() {
                let next = ids[j] as u16;
                for k in 0..=(model.order - 1).min(j) {
                    let key = pack(&ids[j - k..j]);
                    model.tables[k].entry(key).or_default().add(next);
                }
            }
        }
        Ok(model)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Every token the model may predict: the whole vocabulary except
    /// bos. `unk` stays predictable so held-out lines with unseen tokens
    /// keep finite perplexity.
    pub fn alphabet_size(&self) -> usize {
        self.vocab.len() - 1
    }

    fn predictable(&self, id: u32) -> bool {
        id != self.vocab.bos_id()
    }

    /// Distribution over the full vocabulary (zero at bos) given the
    /// trailing context. Sums to one within floating-point error.
    pub fn next_distribution(&self, context: &[u32]) -> Vec<f64> {
        let n = self.vocab.len();
        let base = 1.0 / self.alphabet_size() as f64;
        let mut dist: Vec<f64> = (0..n as u32)
            .map(|id| if self.predictable(id) { base } else { 0.0 })
            .collect();
        let max_k = (self.order - 1).min(context.len());
        for k in 0..=max_k {
            let suffix = &context[context.len() - k..];
            let Some(entry) = self.tables[k].get(&pack(suffix)) else {
                break;
            };
            let total = f64::from(entry.total);
            let lambda = self.discount * f64::from(entry.distinct()) / total;
            for (id, p) in dist.iter_mut().enumerate() {
                if self.predictable(id as u32) {
                    *p *= lambda;
                }
            }
            for &(tok, c) in &entry.counts {
                dist[tok as usize] += (f64::from(c) - self.discount) / total;
            }
        }
        dist
    }

    /// log2 P(token | context).
    pub fn log2_prob(&self, context: &[u32], token: u32) -> f64 {
        let max_k = (self.order - 1).min(context.len());
        self.prob_at(max_k, context, token).log2()
    }

    fn prob_at(&self, k: usize, context: &[u32], token: u32) -> f64 {
        let base = if self.predictable(token) {
            1.0 / self.alphabet_size() as f64
        } else {
            return f64::MIN_POSITIVE;
        };
        let suffix = &context[context.len() - k..];
        match self.tables[k].get(&pack(suffix)) {
            None => {
                if k == 0 {
                    base
                } else {
                    self.prob_at(k - 1, context, token)
                }
            }
            Some(entry) => {
                let total = f64::from(entry.total);
                let lambda = self.discount * f64::from(entry.distinct()) / total;
                let lower = if k == 0 {
                    base
                } else {
                    self.prob_at(k - 1, context, token)
                };
                let c = f64::from(entry.count(token as u16));
                let discounted = if c > 0.0 { (c - self.discount) / total } else { 0.0 };
                discounted + lambda * lower
            }
        }
    }

    /// Per-token perplexity (base 2) over held-out lines, with bos/eos
    /// wrapping; out-of-vocabulary tokens are scored as `unk`.
    pub fn perplexity(&self, lines: &[String]) -> Result<f64, TokenizeError> {
        let mut log_sum = 0.0f64;
        let mut count = 0usize;
        for line in lines {
            let mut ids = vec![self.vocab.bos_id()];
            ids.extend(self.vocab.encode(line)?);
            ids.push(self.vocab.eos_id());
            for j in 1..ids.len() {
                log_sum += self.log2_prob(&ids[..j], ids[j]);
                count += 1;
            }
        }
        Ok((-(log_sum / count as f64)).exp2())
    }

    /// Serializes the model as versioned JSON with deterministic table
    /// ordering.
    pub fn to_json(&self) -> String {
        let mut tables = Vec::with_capacity(self.tables.len());
        for (k, table) in self.tables.iter().enumerate() {
            let mut entries: Vec<ModelContext> = table
                .iter()
                .map(|(&key, counts)| ModelContext {
                    context: unpack(key, k),
                    counts: counts.counts.clone(),
                })
                .collect();
            entries.sort_by(|a, b| a.context.cmp(&b.context));
            tables.push(entries);
        }
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            notation: self.vocab.notation(),
            order: self.order,
            discount: self.discount,
            vocabulary: self.vocab.tokens()[3..].to_vec(),
            tables,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<NGramModel, TrainError> {
        let file: ModelFile =
            serde_json::from_str(json).map_err(|e| TrainError::BadModelFile(e.to_string()))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(TrainError::BadModelFile(format!(
                "unsupported version {}",
                file.version
            )));
        }
        if !(2..=8).contains(&file.order) {
            return Err(TrainError::OrderOutOfRange { order: file.order });
        }
        let vocab = Vocabulary::build(
            file.vocabulary.iter().map(String::as_str),
            file.notation,
        )
        .map_err(|e| TrainError::BadModelFile(e.to_string()))?;
        if vocab.len() > 256 {
            return Err(TrainError::VocabularyTooLarge { size: vocab.len() });
        }
        if vocab.tokens()[3..] != file.vocabulary[..] {
            return Err(TrainError::BadModelFile(
                "vocabulary is not in canonical order".to_string(),
            ));
        }
        if file.tables.len() != file.order {
            return Err(TrainError::BadModelFile(format!(
                "expected {} tables, found {}",
                file.order,
                file.tables.len()
            )));
        }
        let mut tables = vec![HashMap::new(); file.order];
        for (k, entries) in file.tables.iter().enumerate() {
            for entry in entries {
                if entry.context.len() != k {
                    return Err(TrainError::BadModelFile(format!(
                        "table {k} holds a context of length {}",
                        entry.context.len()
                    )));
                }
                let total = entry.counts.iter().map(|&(_, c)| c).sum();
                let mut counts = entry.counts.clone();
                counts.sort_by_key(|&(t, _)| t);
                tables[k].insert(pack(&entry.context.iter().map(|&t| u32::from(t)).collect::<Vec<_>>()), ContextCounts { total, counts });
            }
        }
        Ok(NGramModel {
            vocab,
            order: file.order,
            discount: file.discount,
            tables,
        })
    }
}

fn unpack(key: u64, len: usize) -> Vec<u16> {
    let mut out = vec![0u16; len];
    let mut k = key;
    for slot in out.iter_mut().rev() {
        *slot = (k & 0xff) as u16;
        k >>= 8;
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    notation: Notation,
    order: usize,
    discount: f64,
    /// Corpus tokens only; specials are reconstructed on load.
    vocabulary: Vec<String>,
    tables: Vec<Vec<ModelContext>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelContext {
    context: Vec<u16>,
    counts: Vec<(u16, u32)>,
}
