//! Conversion between molecules and SAFE strings.
//!
//! A SAFE string writes a molecule as dot-separated fragment blocks whose
//! inter-fragment bonds are encoded as shared ring-closure digits, so any
//! SMILES parser decodes it. Encoding fragments a molecule with a chosen
//! disconnection scheme, serializes each fragment with its attachment
//! wildcards turned into digits, and joins the blocks; decoding is plain
//! SMILES parsing.
//!
//! Prompts for constrained generation are SAFE prefixes with open
//! (unpaired) digits: a scaffold block for decoration, or two fragment
//! blocks for linker design.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fragmenter::{self, FragmentationScheme, FragmenterError};
use crate::molgraph::{
    canonical_order, canonical_smiles, parse_smiles, MolError, MolGraph, Piece,
};

/// Block ordering for [`encode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOrder {
    /// Blocks sorted by (heavy atoms descending, canonical fragment
    /// string); the reproducible training-corpus form.
    Canonical,
    /// Seeded random block order with freshly assigned digits.
    Randomized(u64),
}

#[derive(Debug, Error)]
pub enum SafeError {
    #[error("molecule must be connected to encode")]
    Disconnected,
    #[error(transparent)]
    Fragmentation(#[from] FragmenterError),
    #[error("scaffold has no attachment points")]
    NoAttachmentPoints,
    #[error("fragment {index} must carry exactly one attachment point, found {count}")]
    BadAttachmentCount { index: usize, count: usize },
    #[error(transparent)]
    Parse(#[from] MolError),
}

/// A SAFE string: dot-separated fragment blocks plus the digits that
/// stitch blocks together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafeString {
    text: String,
    blocks: Vec<String>,
    /// Attachment digit -> its occurrences as (block index, byte offset
    /// within block). Two occurrences for a closed attachment, one for an
    /// open prompt digit. Intra-block ring closures are not listed.
    attachment_digits: BTreeMap<u16, Vec<(usize, usize)>>,
}

impl SafeString {
    /// Splits a SAFE text into blocks and classifies its digits without
    /// requiring the string to decode (prompt prefixes have open digits).
    pub fn parse(text: &str) -> SafeString {
        let text = text.trim().to_string();
        let mut blocks: Vec<String> = Vec::new();
        let mut block_start = 0usize;
        let bytes = text.as_bytes();
        let mut in_bracket = false;
        // digit -> (block, offset) of the pending open occurrence
        let mut open: HashMap<u16, (usize, usize)> = HashMap::new();
        let mut attachments: BTreeMap<u16, Vec<(usize, usize)>> = BTreeMap::new();
        let mut i = 0usize;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                b'[' => in_bracket = true,
                b']' => in_bracket = false,
                b'.' if !in_bracket => {
                    blocks.push(text[block_start..i].to_string());
                    block_start = i + 1;
                }
                b'0'..=b'9' | b'%' if !in_bracket => {
                    let block_idx = blocks.len();
                    let offset = i - block_start;
                    let (digit, len) = if c == b'%' {
                        if i + 2 >= bytes.len() {
                            i += 1;
                            continue;
                        }
                        let d = u16::from(bytes[i + 1].wrapping_sub(b'0')) * 10
                            + u16::from(bytes[i + 2].wrapping_sub(b'0'));
                        (d, 3)
                    } else {
                        (u16::from(c - b'0'), 1)
                    };
                    match open.remove(&digit) {
                        Some((open_block, open_offset)) => {
                            if open_block != block_idx {
                                attachments
                                    .entry(digit)
                                    .or_default()
                                    .extend([(open_block, open_offset), (block_idx, offset)]);
                            }
                        }
                        None => {
                            open.insert(digit, (block_idx, offset));
                        }
                    }
                    i += len;
                    continue;
                }
                _ => {}
            }
            i += 1;
        }
        blocks.push(text[block_start..].to_string());
        if blocks.last().is_some_and(|b| b.is_empty()) {
            // Prompt texts end with a block separator.
            blocks.pop();
        }
        for (digit, pos) in open {
            attachments.entry(digit).or_default().push(pos);
        }
        SafeString {
            text,
            blocks,
            attachment_digits: attachments,
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Fragment substrings split on top-level `.`.
    pub fn blocks(&self) -> &[String] {
        &self.blocks
    }

    pub fn attachment_digits(&self) -> &BTreeMap<u16, Vec<(usize, usize)>> {
        &self.attachment_digits
    }

    /// Digits that appear exactly once.
    pub fn open_digits(&self) -> BTreeSet<u16> {
        self.attachment_digits
            .iter()
            .filter(|(_, occ)| occ.len() == 1)
            .map(|(&d, _)| d)
            .collect()
    }

    /// A SAFE string is closed when every attachment digit is paired;
    /// closed strings decode to a connected molecule.
    pub fn is_closed(&self) -> bool {
        self.open_digits().is_empty()
    }
}

impl std::fmt::Display for SafeString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

/// Encodes a connected molecule as a SAFE string under the given
/// fragmentation scheme.
pub fn encode(
    g: &MolGraph,
    scheme: FragmentationScheme,
    order: BlockOrder,
) -> Result<SafeString, SafeError> {
    if g.component_count() != 1 {
        return Err(SafeError::Disconnected);
    }
    let cuts = fragmenter::eligible_bonds(g, scheme);
    let set = fragmenter::fragment(g, &cuts)?;

    let mut blocks: Vec<RenderedBlock> = set
        .fragments
        .iter()
        .enumerate()
        .map(|(idx, frag)| RenderedBlock::render(frag, idx))
        .collect();

    match order {
        BlockOrder::Canonical => {
            blocks.sort_by(|a, b| {
                b.heavy_atoms
                    .cmp(&a.heavy_atoms)
                    .then_with(|| a.sort_key.cmp(&b.sort_key))
            });
        }
        BlockOrder::Randomized(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            blocks.shuffle(&mut rng);
        }
    }

    // Attachment bookkeeping: star (fragment, atom) -> pair id, and
    // whether both hosts of a pair are aromatic (the digit then needs an
    // explicit single-bond marker).
    let mut pair_of_star: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pair_marker: Vec<bool> = Vec::with_capacity(set.pairs.len());
    for (pid, pair) in set.pairs.iter().enumerate() {
        pair_of_star.insert((pair.a.fragment, pair.a.atom), pid);
        pair_of_star.insert((pair.b.fragment, pair.b.atom), pid);
        let arom = |fa: fragmenter::FragAtom| {
            let frag = &set.fragments[fa.fragment];
            let host = frag.neighbors(fa.atom)[0].0;
            frag.atom(host).aromatic
        };
        pair_marker.push(arom(pair.a) && arom(pair.b));
    }

    let text = assemble(&blocks, |frag_idx, star| {
        let pid = pair_of_star[&(frag_idx, star)];
        (pid, pair_marker[pid])
    });
    Ok(SafeString::parse(&text))
}

/// Same blocks as [`encode`] in seeded-random order with freshly assigned
/// digits; decodes to the same molecule.
pub fn randomize_safe(
    g: &MolGraph,
    scheme: FragmentationScheme,
    seed: u64,
) -> Result<SafeString, SafeError> {
    encode(g, scheme, BlockOrder::Randomized(seed))
}

/// Decodes a SAFE string; exactly SMILES parsing.
pub fn decode(s: &SafeString) -> Result<MolGraph, MolError> {
    parse_smiles(&s.text)
}

/// True iff the molecule has more than one connected component (a
/// fragmented generation).
pub fn is_fragmented(g: &MolGraph) -> bool {
    g.component_count() > 1
}

/// Constrained-generation task kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptTask {
    Decorate,
    Link,
}

/// A SAFE prefix with open attachment digits, ready for completion by a
/// language model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub open_digits: BTreeSet<u16>,
    pub task: PromptTask,
}

/// Builds a decoration prompt: the scaffold as one SAFE block whose
/// wildcards become open digits, followed by a block separator.
pub fn scaffold_prompt(scaffold: &MolGraph) -> Result<Prompt, SafeError> {
    let stars = open_star_count(scaffold);
    if stars == 0 {
        return Err(SafeError::NoAttachmentPoints);
    }
    let block = RenderedBlock::render(scaffold, 0);
    let mut next_star_pair = 0usize;
    let text = assemble(std::slice::from_ref(&block), |_, star| {
        let pid = next_star_pair;
        next_star_pair += 1;
        let host = scaffold.neighbors(star)[0].0;
        (pid, scaffold.atom(host).aromatic)
    });
    let parsed = SafeString::parse(&(text + "."));
    Ok(Prompt {
        open_digits: parsed.open_digits(),
        text: parsed.text,
        task: PromptTask::Decorate,
    })
}

/// Builds a linker prompt: both fragments as SAFE blocks with distinct
/// open digits; the model must generate a block closing both.
pub fn linker_prompt(frag_a: &MolGraph, frag_b: &MolGraph) -> Result<Prompt, SafeError> {
    for (index, frag) in [frag_a, frag_b].into_iter().enumerate() {
        let count = open_star_count(frag);
        if count != 1 {
            return Err(SafeError::BadAttachmentCount { index, count });
        }
    }
    let blocks = [
        RenderedBlock::render(frag_a, 0),
        RenderedBlock::render(frag_b, 1),
    ];
    let frags = [frag_a, frag_b];
    let text = assemble(&blocks, |frag_idx, star| {
        let host = frags[frag_idx].neighbors(star)[0].0;
        (frag_idx, frags[frag_idx].atom(host).aromatic)
    });
    let parsed = SafeString::parse(&(text + "."));
    Ok(Prompt {
        open_digits: parsed.open_digits(),
        text: parsed.text,
        task: PromptTask::Link,
    })
}

fn open_star_count(g: &MolGraph) -> usize {
    (0..g.atom_count())
        .filter(|&i| g.atom(i).is_wildcard() && g.degree(i) == 1)
        .count()
}

struct RenderedBlock {
    frag_idx: usize,
    pieces: Vec<Piece>,
    ring_digits: BTreeSet<u16>,
    heavy_atoms: usize,
    sort_key: String,
}

impl RenderedBlock {
    fn render(frag: &MolGraph, frag_idx: usize) -> RenderedBlock {
        let order = canonical_order(frag);
        let out = crate::molgraph::write_pieces(frag, Some(&order), true);
        RenderedBlock {
            frag_idx,
            pieces: out.pieces,
            ring_digits: out.ring_digits_used,
            heavy_atoms: frag.heavy_atom_count(),
            sort_key: canonical_smiles(frag),
        }
    }
}

/// Joins rendered blocks with `.`, assigning attachment digits in scan
/// order starting from the lowest digit unused by any block's internal
/// ring closures. `classify` maps a wildcard to its pair id and whether
/// the digit needs an explicit `-` marker.
fn assemble(
    blocks: &[RenderedBlock],
    mut classify: impl FnMut(usize, usize) -> (usize, bool),
) -> String {
    let used: BTreeSet<u16> = blocks.iter().flat_map(|b| b.ring_digits.iter().copied()).collect();
    let mut free = (1u16..100).filter(|d| !used.contains(d));
    let mut digit_of_pair: HashMap<usize, u16> = HashMap::new();
    let mut out = String::new();
    for (i, block) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        for piece in &block.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Attachment { star, .. } => {
                    let (pair, marker) = classify(block.frag_idx, *star);
                    let digit = *digit_of_pair
                        .entry(pair)
                        .or_insert_with(|| free.next().expect("attachment digits exhausted"));
                    if marker {
                        out.push('-');
                    }
                    out.push_str(&crate::molgraph::render_digit(digit));
                }
            }
        }
    }
    out
}

/// Sidecar manifest written beside `.safe` corpus files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SafeManifest {
    pub scheme: String,
    pub order: String,
    pub seed: u64,
    /// Randomized variants per molecule (augmentation only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub augmentation: Option<u32>,
    pub input_count: usize,
    pub written: usize,
    pub discarded: usize,
    pub discards: Vec<DiscardRecord>,
}

/// One dropped input line and why.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DiscardRecord {
    pub line: usize,
    pub reason: String,
}
