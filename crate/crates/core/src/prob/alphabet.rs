use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

/// Observation alphabet size, label alphabet size and sequence length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetRepr")]
pub struct Alphabet {
    x_size: usize,
    c_size: usize,
    seq_len: usize,
    enumeration_cap: usize,
}

#[derive(Deserialize)]
struct AlphabetRepr {
    x_size: usize,
    c_size: usize,
    seq_len: usize,
    #[serde(default = "default_cap")]
    enumeration_cap: usize,
}

impl TryFrom<AlphabetRepr> for Alphabet {
    type Error = Error;

    fn try_from(r: AlphabetRepr) -> Result<Self> {
        Alphabet::with_cap(r.x_size, r.c_size, r.seq_len, r.enumeration_cap)
    }
}

impl Alphabet {
    pub fn new(x_size: usize, c_size: usize, seq_len: usize) -> Result<Self> {
        Self::with_cap(x_size, c_size, seq_len, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(x_size: usize, c_size: usize, seq_len: usize, cap: usize) -> Result<Self> {
        if c_size == 0 || seq_len == 0 {
            return Err(Error::InvalidAlphabet(format!("sizes must be positive (|C| = {c_size}, N = {seq_len})")));
        }
        if x_size <= c_size {
            return Err(Error::InvalidAlphabet(format!("|X| = {x_size} must exceed |C| = {c_size}")));
        }
        SeqSpace::new(x_size, seq_len, cap)?;
        SeqSpace::new(c_size, seq_len, cap)?;
        Ok(Self { x_size, c_size, seq_len, enumeration_cap: cap })
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn c_size(&self) -> usize {
        self.c_size
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn enumeration_cap(&self) -> usize {
        self.enumeration_cap
    }

    /// All observation sequences `X^N`.
    pub fn x_space(&self) -> SeqSpace {
        SeqSpace { base: self.x_size, len: self.seq_len, count: self.x_size.pow(self.seq_len as u32) }
    }

    /// All label sequences `C^N`.
    pub fn c_space(&self) -> SeqSpace {
        SeqSpace { base: self.c_size, len: self.seq_len, count: self.c_size.pow(self.seq_len as u32) }
    }

    pub fn check_x_seq(&self, x_seq: &[usize]) -> Result<()> {
        check_seq("observation", x_seq, self.x_size, self.seq_len)
    }

    pub fn check_c_seq(&self, c_seq: &[usize]) -> Result<()> {
        check_seq("label", c_seq, self.c_size, self.seq_len)
    }
}

fn check_seq(what: &str, seq: &[usize], base: usize, len: usize) -> Result<()> {
    if seq.len() != len {
        return Err(Error::LengthMismatch { left: seq.len(), right: len });
    }
    if let Some((n, &s)) = seq.iter().enumerate().find(|(_, &s)| s >= base) {
        return Err(Error::IndexOutOfRange(format!("{what} id {s} at position {} (alphabet size {base})", n + 1)));
    }
    Ok(())
}

/// The set `base^len` of fixed-length sequences, indexed in mixed radix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqSpace {
    base: usize,
    len: usize,
    count: usize,
}

impl SeqSpace {
    pub fn new(base: usize, len: usize, cap: usize) -> Result<Self> {
        let requested = (base as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
        if requested > cap as u128 {
            return Err(Error::EnumerationCapExceeded { requested, cap });
        }
        Ok(Self { base, len, count: requested as usize })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = index % self.base;
            index /= self.base;
        }
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len];
        self.decode_into(index, &mut out);
        out
    }

    pub fn encode(&self, seq: &[usize]) -> usize {
        seq.iter().fold(0, |acc, &s| acc * self.base + s)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.count).map(move |i| self.decode(i))
    }
}
