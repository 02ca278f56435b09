//! Position-dependent label statistics of a tokenized corpus and the
//! conditioning of the resulting `P_C`.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::LmMatrix;
use crate::{Error, Result};

pub const DEFAULT_VOCAB_CAP: usize = 10_000;
/// Corpus fractions at which the growth curve is sampled.
pub const GROWTH_FRACTIONS: [f64; 4] = [0.1, 0.25, 0.5, 1.0];

/// What to do with a line longer than `N` tokens. Shorter lines are always
/// dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthPolicy {
    /// Keep the first `N` tokens.
    Truncate,
    Discard,
}

impl FromStr for LengthPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncate" => Ok(Self::Truncate),
            "discard" => Ok(Self::Discard),
            other => Err(Error::Parse(format!("unknown length policy `{other}`"))),
        }
    }
}

impl fmt::Display for LengthPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Truncate => "truncate",
            Self::Discard => "discard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub seq_len: usize,
    pub policy: LengthPolicy,
    pub vocab_cap: usize,
}

impl IngestOptions {
    pub fn new(seq_len: usize, policy: LengthPolicy) -> Self {
        Self { seq_len, policy, vocab_cap: DEFAULT_VOCAB_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    seq_len: usize,
    policy: LengthPolicy,
    lines_read: usize,
    discarded_short: usize,
    discarded_long: usize,
    sequences: Vec<Vec<usize>>,
    lm_matrix: LmMatrix,
    sigma_min_by_prefix: Vec<(f64, f64)>,
}

/// Reads a corpus file; see [`ingest_reader`].
pub fn ingest(path: impl AsRef<Path>, seq_len: usize, policy: LengthPolicy) -> Result<CorpusStats> {
    ingest_with(path, IngestOptions::new(seq_len, policy))
}

pub fn ingest_with(path: impl AsRef<Path>, options: IngestOptions) -> Result<CorpusStats> {
    ingest_reader(BufReader::new(File::open(path)?), options)
}

pub fn ingest_str(text: &str, options: IngestOptions) -> Result<CorpusStats> {
    ingest_reader(text.as_bytes(), options)
}

/// One whitespace-tokenized sequence per line. Label ids follow the first
/// appearance of each token among the kept (possibly truncated) sequences.
pub fn ingest_reader<R: BufRead>(reader: R, options: IngestOptions) -> Result<CorpusStats> {
    let IngestOptions { seq_len, policy, vocab_cap } = options;
    if seq_len == 0 {
        return Err(Error::InvalidConfig("sequence length must be at least 1".into()));
    }
    let mut vocab = Vec::new();
    let mut index = HashMap::new();
    let mut sequences = Vec::new();
    let (mut lines_read, mut discarded_short, mut discarded_long) = (0, 0, 0);
    for line in reader.lines() {
        let line = line?;
        lines_read += 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < seq_len {
            discarded_short += 1;
            continue;
        }
        if tokens.len() > seq_len && policy == LengthPolicy::Discard {
            discarded_long += 1;
            continue;
        }
        let mut ids = Vec::with_capacity(seq_len);
        for &tok in &tokens[..seq_len] {
            let id = match index.get(tok) {
                Some(&id) => id,
                None => {
                    if vocab.len() == vocab_cap {
                        return Err(Error::VocabTooLarge { size: vocab.len() + 1, cap: vocab_cap });
                    }
                    index.insert(tok.to_owned(), vocab.len());
                    vocab.push(tok.to_owned());
                    vocab.len() - 1
                }
            };
            ids.push(id);
        }
        sequences.push(ids);
    }
    if sequences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let lm_matrix = empirical_lm(&sequences, seq_len, vocab.len())?;
    let sigma_min_by_prefix = GROWTH_FRACTIONS
        .iter()
        .map(|&f| {
            let take = prefix_len(sequences.len(), f);
            let sigma = if take == sequences.len() {
                lm_matrix.sigma_min()
            } else {
                empirical_lm(&sequences[..take], seq_len, vocab.len())?.sigma_min()
            };
            Ok((f, sigma))
        })
        .collect::<Result<_>>()?;
    Ok(CorpusStats {
        vocab,
        index,
        seq_len,
        policy,
        lines_read,
        discarded_short,
        discarded_long,
        sequences,
        lm_matrix,
        sigma_min_by_prefix,
    })
}

fn prefix_len(total: usize, fraction: f64) -> usize {
    ((total as f64 * fraction).ceil() as usize).clamp(1, total)
}

fn empirical_lm(sequences: &[Vec<usize>], seq_len: usize, vocab_size: usize) -> Result<LmMatrix> {
    let mut counts = vec![vec![0usize; vocab_size]; seq_len];
    for s in sequences {
        for (n, &c) in s.iter().enumerate() {
            counts[n][c] += 1;
        }
    }
    let total = sequences.len() as f64;
    let rows: Vec<Vec<f64>> = counts.iter().map(|r| r.iter().map(|&k| k as f64 / total).collect()).collect();
    LmMatrix::from_rows(&rows)
}

impl CorpusStats {
    /// Tokens in label-id order.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn label_id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn policy(&self) -> LengthPolicy {
        self.policy
    }

    pub fn sequence_count(&self) -> usize {
        self.sequences.len()
    }

    /// Kept sequences as label ids.
    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    pub fn lm_matrix(&self) -> &LmMatrix {
        &self.lm_matrix
    }

    /// `(fraction, sigma_min)` of `P_C` estimated from leading fractions of
    /// the kept sequences, over the full vocabulary.
    pub fn sigma_min_by_prefix(&self) -> &[(f64, f64)] {
        &self.sigma_min_by_prefix
    }

    pub fn report(&self) -> CorpusReport {
        let lm = &self.lm_matrix;
        CorpusReport {
            vocab_size: self.vocab.len(),
            seq_len: self.seq_len,
            policy: self.policy,
            lines_read: self.lines_read,
            discarded_short: self.discarded_short,
            discarded_long: self.discarded_long,
            sequence_count: self.sequences.len(),
            sigma_min: lm.sigma_min(),
            pinv_l1: lm.induced_l1(),
            rank: lm.rank(),
            full_rank: lm.is_full_rank(),
            singular_values: lm.singular_values().to_vec(),
            vocab: self.vocab.clone(),
            growth_curve: self.sigma_min_by_prefix.clone(),
        }
    }
}

/// JSON-facing summary of [`CorpusStats`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub vocab_size: usize,
    pub seq_len: usize,
    pub policy: LengthPolicy,
    pub lines_read: usize,
    pub discarded_short: usize,
    pub discarded_long: usize,
    pub sequence_count: usize,
    pub sigma_min: f64,
    /// Induced l1 norm of the (truncated) pseudo-inverse.
    pub pinv_l1: f64,
    pub rank: usize,
    pub full_rank: bool,
    pub singular_values: Vec<f64>,
    pub vocab: Vec<String>,
    pub growth_curve: Vec<(f64, f64)>,
}
