//! Toolkit for the SAFE (Sequential Attachment-based Fragment Embedding)
//! molecular line notation.
//!
//! The crate is organized around [`molgraph::MolGraph`], an attributed
//! molecular graph that every other module consumes or produces:
//!
//! * [`molgraph`] — SMILES parsing, writing, canonicalization and
//!   randomized serialization.
//! * [`patterns`] — a SMARTS-subset query language and subgraph matcher.
//! * [`fragmenter`] — the five bond-disconnection schemes (HR, BRICS,
//!   RECAP, MMPA, ROTATABLE) and attachment-labeled fragmentation.
//! * [`safecodec`] — conversion between molecules and SAFE strings,
//!   fragment-order randomization, and constrained-generation prompts.
//! * [`clm`] — tokenizer, n-gram language model and seeded sampling for
//!   de novo and prompt-constrained generation.
//! * [`metrics`] — validity/uniqueness/novelty/diversity/fragmentation
//!   metrics, substructure match-constraint checks and report assembly.
//! * [`corpus`] — `.smi`/`.safe` file I/O and a seeded generator for
//!   drug-like benchmark corpora.

pub mod clm;
pub mod corpus;
pub mod fragmenter;
pub mod metrics;
pub mod molgraph;
pub mod patterns;
pub mod safecodec;

pub use molgraph::{canonical_smiles, parse_smiles, MolGraph};
