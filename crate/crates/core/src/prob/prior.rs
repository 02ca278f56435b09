use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{normalize_checked, SeqSpace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Dense,
    PositionUnigram,
    Bigram,
}

/// A distribution over label sequences `C^N`.
///
/// `Dense` stores every sequence probability; the factorized variants store
/// a position-dependent unigram per position or an initial distribution plus
/// a time-homogeneous transition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "PriorRepr")]
pub enum LabelPrior {
    Dense { c_size: usize, seq_len: usize, probs: Vec<f64> },
    PositionUnigram { tables: Vec<Vec<f64>> },
    Bigram { seq_len: usize, initial: Vec<f64>, transition: Vec<Vec<f64>> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PriorRepr {
    Dense { c_size: usize, seq_len: usize, probs: Vec<f64> },
    PositionUnigram { tables: Vec<Vec<f64>> },
    Bigram { seq_len: usize, initial: Vec<f64>, transition: Vec<Vec<f64>> },
}

impl TryFrom<PriorRepr> for LabelPrior {
    type Error = Error;

    fn try_from(r: PriorRepr) -> Result<Self> {
        match r {
            PriorRepr::Dense { c_size, seq_len, probs } => Self::dense(c_size, seq_len, probs),
            PriorRepr::PositionUnigram { tables } => Self::position_unigram(tables),
            PriorRepr::Bigram { seq_len, initial, transition } => Self::bigram(seq_len, initial, transition),
        }
    }
}

/// Read-only Markov-chain view of a factorized prior.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Chain<'a> {
    Unigram(&'a [Vec<f64>]),
    Bigram { initial: &'a [f64], transition: &'a [Vec<f64>] },
}

impl Chain<'_> {
    #[inline]
    pub(crate) fn initial(&self, c: usize) -> f64 {
        match self {
            Chain::Unigram(tables) => tables[0][c],
            Chain::Bigram { initial, .. } => initial[c],
        }
    }

    /// Probability of label `next` at position `n >= 1` given `prev` at `n - 1`.
    #[inline]
    pub(crate) fn transition(&self, n: usize, prev: usize, next: usize) -> f64 {
        match self {
            Chain::Unigram(tables) => tables[n][next],
            Chain::Bigram { transition, .. } => transition[prev][next],
        }
    }
}

impl LabelPrior {
    pub fn dense(c_size: usize, seq_len: usize, mut probs: Vec<f64>) -> Result<Self> {
        let space = SeqSpace::new(c_size, seq_len, usize::MAX)?;
        if c_size == 0 || seq_len == 0 || probs.len() != space.count() {
            return Err(Error::ShapeMismatch(format!(
                "dense prior needs {} entries, got {}",
                space.count(),
                probs.len()
            )));
        }
        normalize_checked("dense prior", &mut probs, false)?;
        Ok(Self::Dense { c_size, seq_len, probs })
    }

    pub fn position_unigram(mut tables: Vec<Vec<f64>>) -> Result<Self> {
        let c_size = tables.first().map_or(0, Vec::len);
        if c_size == 0 {
            return Err(Error::ShapeMismatch("position-unigram prior is empty".into()));
        }
        for (n, t) in tables.iter_mut().enumerate() {
            if t.len() != c_size {
                return Err(Error::ShapeMismatch(format!(
                    "position {} has {} labels, expected {c_size}",
                    n + 1,
                    t.len()
                )));
            }
            normalize_checked(&format!("unigram at position {}", n + 1), t, false)?;
        }
        Ok(Self::PositionUnigram { tables })
    }

    pub fn bigram(seq_len: usize, mut initial: Vec<f64>, mut transition: Vec<Vec<f64>>) -> Result<Self> {
        let c_size = initial.len();
        if c_size == 0 || seq_len == 0 {
            return Err(Error::ShapeMismatch("bigram prior is empty".into()));
        }
        if transition.len() != c_size || transition.iter().any(|r| r.len() != c_size) {
            return Err(Error::ShapeMismatch(format!("bigram transition must be {c_size}x{c_size}")));
        }
        normalize_checked("bigram initial", &mut initial, false)?;
        for (c, row) in transition.iter_mut().enumerate() {
            normalize_checked(&format!("bigram transition row {c}"), row, false)?;
        }
        Ok(Self::Bigram { seq_len, initial, transition })
    }

    pub fn kind(&self) -> PriorKind {
        match self {
            Self::Dense { .. } => PriorKind::Dense,
            Self::PositionUnigram { .. } => PriorKind::PositionUnigram,
            Self::Bigram { .. } => PriorKind::Bigram,
        }
    }

    pub fn c_size(&self) -> usize {
        match self {
            Self::Dense { c_size, .. } => *c_size,
            Self::PositionUnigram { tables } => tables[0].len(),
            Self::Bigram { initial, .. } => initial.len(),
        }
    }

    pub fn seq_len(&self) -> usize {
        match self {
            Self::Dense { seq_len, .. } | Self::Bigram { seq_len, .. } => *seq_len,
            Self::PositionUnigram { tables } => tables.len(),
        }
    }

    pub fn is_factorized(&self) -> bool {
        !matches!(self, Self::Dense { .. })
    }

    pub(crate) fn chain(&self) -> Option<Chain<'_>> {
        match self {
            Self::Dense { .. } => None,
            Self::PositionUnigram { tables } => Some(Chain::Unigram(tables)),
            Self::Bigram { initial, transition, .. } => Some(Chain::Bigram { initial, transition }),
        }
    }

    fn space(&self) -> SeqSpace {
        SeqSpace::new(self.c_size(), self.seq_len(), usize::MAX).expect("uncapped space")
    }

    /// Probability of one label sequence.
    pub fn prob(&self, c_seq: &[usize]) -> f64 {
        match self {
            Self::Dense { probs, .. } => probs[self.space().encode(c_seq)],
            _ => {
                let chain = self.chain().expect("factorized");
                let mut p = chain.initial(c_seq[0]);
                for n in 1..c_seq.len() {
                    p *= chain.transition(n, c_seq[n - 1], c_seq[n]);
                }
                p
            }
        }
    }

    /// Table over `C^N` in mixed-radix order.
    pub fn dense_probs(&self, cap: usize) -> Result<Vec<f64>> {
        let space = SeqSpace::new(self.c_size(), self.seq_len(), cap)?;
        Ok(match self {
            Self::Dense { probs, .. } => probs.clone(),
            _ => space.iter().map(|c| self.prob(&c)).collect(),
        })
    }

    pub fn to_dense(&self, cap: usize) -> Result<Self> {
        let probs = self.dense_probs(cap)?;
        Ok(Self::Dense { c_size: self.c_size(), seq_len: self.seq_len(), probs })
    }

    /// The `N x |C|` table of position marginals `pr_n(c)`.
    pub fn position_marginals(&self) -> Vec<Vec<f64>> {
        let (c_size, seq_len) = (self.c_size(), self.seq_len());
        match self {
            Self::Dense { probs, .. } => {
                let space = self.space();
                let mut out = vec![vec![0.0; c_size]; seq_len];
                let mut seq = vec![0; seq_len];
                for (i, &p) in probs.iter().enumerate() {
                    space.decode_into(i, &mut seq);
                    for (n, &c) in seq.iter().enumerate() {
                        out[n][c] += p;
                    }
                }
                out
            }
            Self::PositionUnigram { tables } => tables.clone(),
            Self::Bigram { initial, transition, .. } => {
                let mut out = Vec::with_capacity(seq_len);
                out.push(initial.clone());
                for n in 1..seq_len {
                    let prev = &out[n - 1];
                    let next = (0..c_size).map(|c| (0..c_size).map(|b| prev[b] * transition[b][c]).sum()).collect();
                    out.push(next);
                }
                out
            }
        }
    }

    /// Draws one label sequence (ancestrally for factorized priors).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match self {
            Self::Dense { probs, .. } => self.space().decode(sample_index(probs, rng)),
            _ => {
                let chain = self.chain().expect("factorized");
                let c_size = self.c_size();
                let mut seq = Vec::with_capacity(self.seq_len());
                let first: Vec<f64> = (0..c_size).map(|c| chain.initial(c)).collect();
                seq.push(sample_index(&first, rng));
                for n in 1..self.seq_len() {
                    let prev = seq[n - 1];
                    let row: Vec<f64> = (0..c_size).map(|c| chain.transition(n, prev, c)).collect();
                    seq.push(sample_index(&row, rng));
                }
                seq
            }
        }
    }
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last index with positive mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}
