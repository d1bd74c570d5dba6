//! Token-level autoregressive language modeling over SMILES/SAFE strings.
//!
//! The tokenizer applies maximal-munch rules (bracket atoms, `Cl`/`Br`,
//! `%nn` are single tokens, everything else one character) and is
//! lossless: concatenating token surfaces reproduces the input. The
//! modeling backend is an interpolated n-gram with absolute-discount
//! smoothing; neural architectures are out of scope, and the model
//! interface (train / next-token distribution / log-probability) is the
//! extension point a future backend would implement.

mod ngram;
mod sampler;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ngram::{NGramModel, SmoothingParams, TrainError};
pub use sampler::{
    complete, decorate, link, sample, ClmError, DesignSample, Generated, SamplerConfig,
};

/// Which line notation a vocabulary or model was built for. Tokenization
/// rules are shared (SAFE is a SMILES sub-grammar); the tag keeps
/// corpora, vocabularies and models from being mixed by accident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notation {
    Smiles,
    Safe,
}

impl Notation {
    pub fn parse(s: &str) -> Option<Notation> {
        match s.to_ascii_lowercase().as_str() {
            "smiles" => Some(Notation::Smiles),
            "safe" => Some(Notation::Safe),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Notation::Smiles => "smiles",
            Notation::Safe => "safe",
        }
    }
}

impl fmt::Display for Notation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Atom,
    BracketAtom,
    Bond,
    Digit,
    PercentDigit,
    BranchOpen,
    BranchClose,
    Dot,
    Bos,
    Eos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("unterminated bracket atom at {pos}")]
    UnterminatedBracket { pos: usize },
    #[error("'%' at {pos} must be followed by two digits")]
    MalformedPercent { pos: usize },
    #[error("unexpected character {ch:?} at {pos}")]
    UnexpectedChar { pos: usize, ch: char },
}

/// Splits a line into tokens. The `notation` parameter tags the caller's
/// intent; SAFE shares the SMILES token rules.
pub fn tokenize(text: &str, _notation: Notation) -> Result<Vec<Token>, TokenizeError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        let (surface, kind, len) = match c {
            b'[' => {
                let close = bytes[i..]
                    .iter()
                    .position(|&b| b == b']')
                    .ok_or(TokenizeError::UnterminatedBracket { pos: i })?;
                (text[i..i + close + 1].to_string(), TokenKind::BracketAtom, close + 1)
            }
            b'C' if bytes.get(i + 1) == Some(&b'l') => ("Cl".to_string(), TokenKind::Atom, 2),
            b'B' if bytes.get(i + 1) == Some(&b'r') => ("Br".to_string(), TokenKind::Atom, 2),
            b'%' => {
                if i + 2 < bytes.len() && bytes[i + 1].is_ascii_digit() && bytes[i + 2].is_ascii_digit()
                {
                    (text[i..i + 3].to_string(), TokenKind::PercentDigit, 3)
                } else {
                    return Err(TokenizeError::MalformedPercent { pos: i });
                }
            }
            b'0'..=b'9' => ((c as char).to_string(), TokenKind::Digit, 1),
            b'-' | b'=' | b'#' | b':' => ((c as char).to_string(), TokenKind::Bond, 1),
            b'(' => ("(".to_string(), TokenKind::BranchOpen, 1),
            b')' => (")".to_string(), TokenKind::BranchClose, 1),
            b'.' => (".".to_string(), TokenKind::Dot, 1),
            b'*' => ("*".to_string(), TokenKind::Atom, 1),
            c if c.is_ascii_alphabetic() => ((c as char).to_string(), TokenKind::Atom, 1),
            other => {
                return Err(TokenizeError::UnexpectedChar {
                    pos: i,
                    ch: other as char,
                })
            }
        };
        out.push(Token { surface, kind });
        i += len;
    }
    Ok(out)
}

/// Concatenates token surfaces, skipping bos/eos markers.
pub fn detokenize(tokens: &[Token]) -> String {
    tokens
        .iter()
        .filter(|t| !matches!(t.kind, TokenKind::Bos | TokenKind::Eos))
        .map(|t| t.surface.as_str())
        .collect()
}

pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";

/// An ordered token set closed over its training corpus, with reserved
/// bos/eos/unk entries at the front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    notation: Notation,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Collects the distinct tokens of a corpus, sorted for determinism.
    pub fn build<'a>(
        lines: impl IntoIterator<Item = &'a str>,
        notation: Notation,
    ) -> Result<Vocabulary, TokenizeError> {
        let mut seen: std::collections::BTreeSet<String> = Default::default();
        for line in lines {
            for token in tokenize(line, notation)? {
                seen.insert(token.surface);
            }
        }
        let mut tokens: Vec<String> = vec![
            BOS_TOKEN.to_string(),
            EOS_TOKEN.to_string(),
            UNK_TOKEN.to_string(),
        ];
        tokens.extend(seen);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            notation,
            tokens,
            index,
        })
    }

    pub fn notation(&self) -> Notation {
        self.notation
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn bos_id(&self) -> u32 {
        0
    }

    pub fn eos_id(&self) -> u32 {
        1
    }

    pub fn unk_id(&self) -> u32 {
        2
    }

    pub fn id(&self, surface: &str) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Token ids for a line, without bos/eos. Unknown surfaces map to
    /// `unk`.
    pub fn encode(&self, line: &str) -> Result<Vec<u32>, TokenizeError> {
        Ok(tokenize(line, self.notation)?
            .into_iter()
            .map(|t| self.id(&t.surface).unwrap_or(self.unk_id()))
            .collect())
    }

    /// Like [`Vocabulary::encode`] but reports the first out-of-vocabulary
    /// token instead of mapping it to `unk`.
    pub fn encode_strict(&self, line: &str) -> Result<Vec<u32>, StrictEncodeError> {
        let tokens = tokenize(line, self.notation).map_err(StrictEncodeError::Tokenize)?;
        tokens
            .into_iter()
            .map(|t| {
                self.id(&t.surface)
                    .ok_or_else(|| StrictEncodeError::OutOfVocabulary {
                        token: t.surface.clone(),
                    })
            })
            .collect()
    }

    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter()
            .map(|&id| self.surface(id))
            .filter(|s| *s != BOS_TOKEN && *s != EOS_TOKEN)
            .collect()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum StrictEncodeError {
    #[error(transparent)]
    Tokenize(TokenizeError),
    #[error("token {token:?} is not in the vocabulary")]
    OutOfVocabulary { token: String },
}

#[cfg(test)]
mod tests;
