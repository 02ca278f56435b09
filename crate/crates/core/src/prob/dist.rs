use rand::Rng;
use serde::{Deserialize, Serialize};

use super::prior::{sample_index, Chain};
use super::{Alphabet, ConditionalTable, LabelPrior, SeqSpace, DERIVED_TOL};
use crate::{Error, Result};

/// A dense distribution over `base^N` together with its position marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDist {
    space: SeqSpace,
    probs: Vec<f64>,
    position_marginals: Vec<Vec<f64>>,
}

impl SequenceDist {
    pub fn from_probs(base: usize, seq_len: usize, probs: Vec<f64>) -> Result<Self> {
        let space = SeqSpace::new(base, seq_len, usize::MAX)?;
        if probs.len() != space.count() {
            return Err(Error::ShapeMismatch(format!(
                "sequence distribution needs {} entries, got {}",
                space.count(),
                probs.len()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !(*p >= 0.0)) {
            return Err(Error::NegativeEntry { location: format!("sequence {i}"), value: probs[i] });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DERIVED_TOL {
            return Err(Error::NotNormalized { what: "sequence distribution".into(), sum });
        }
        let mut position_marginals = vec![vec![0.0; base]; seq_len];
        let mut seq = vec![0; seq_len];
        for (i, &p) in probs.iter().enumerate() {
            space.decode_into(i, &mut seq);
            for (n, &s) in seq.iter().enumerate() {
                position_marginals[n][s] += p;
            }
        }
        Ok(Self { space, probs, position_marginals })
    }

    pub fn space(&self) -> SeqSpace {
        self.space
    }

    pub fn base(&self) -> usize {
        self.space.base()
    }

    pub fn seq_len(&self) -> usize {
        self.space.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, seq: &[usize]) -> f64 {
        self.probs[self.space.encode(seq)]
    }

    /// `N x base` table of `p_n(s)`.
    pub fn position_marginals(&self) -> &[Vec<f64>] {
        &self.position_marginals
    }

    pub(crate) fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::AlphabetMismatch(format!(
                "{}^{} vs {}^{}",
                self.base(),
                self.seq_len(),
                other.base(),
                other.seq_len()
            )));
        }
        Ok(())
    }
}

/// Per-position observation model `p_n(x|c)`.
///
/// `Shared` is the structure constraint: one table for every position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Emission {
    Shared(ConditionalTable),
    PerPosition(Vec<ConditionalTable>),
}

impl Emission {
    #[inline]
    pub fn prob(&self, n: usize, x: usize, c: usize) -> f64 {
        match self {
            Emission::Shared(t) => t.get(x, c),
            Emission::PerPosition(ts) => ts[n].get(x, c),
        }
    }

    fn table(&self, n: usize) -> &ConditionalTable {
        match self {
            Emission::Shared(t) => t,
            Emission::PerPosition(ts) => &ts[n],
        }
    }
}

/// Joint distribution `pr(c, x) = pr(c) * prod_n p_n(x_n | c_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr")]
pub struct JointDist {
    alphabet: Alphabet,
    prior: LabelPrior,
    cond: Emission,
}

#[derive(Deserialize)]
struct JointRepr {
    alphabet: Alphabet,
    prior: LabelPrior,
    cond: Emission,
}

impl TryFrom<JointRepr> for JointDist {
    type Error = Error;

    fn try_from(r: JointRepr) -> Result<Self> {
        Self::new(r.alphabet, r.prior, r.cond)
    }
}

impl JointDist {
    pub fn new(alphabet: Alphabet, prior: LabelPrior, cond: Emission) -> Result<Self> {
        if prior.c_size() != alphabet.c_size() || prior.seq_len() != alphabet.seq_len() {
            return Err(Error::ShapeMismatch(format!(
                "prior covers {}^{}, alphabet needs {}^{}",
                prior.c_size(),
                prior.seq_len(),
                alphabet.c_size(),
                alphabet.seq_len()
            )));
        }
        match &cond {
            Emission::Shared(t) => t.check_alphabet(&alphabet)?,
            Emission::PerPosition(ts) => {
                if ts.len() != alphabet.seq_len() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} position tables for N = {}",
                        ts.len(),
                        alphabet.seq_len()
                    )));
                }
                ts.iter().try_for_each(|t| t.check_alphabet(&alphabet))?;
            }
        }
        Ok(Self { alphabet, prior, cond })
    }

    /// A joint satisfying the structure constraint.
    pub fn structured(alphabet: Alphabet, prior: LabelPrior, cond: ConditionalTable) -> Result<Self> {
        Self::new(alphabet, prior, Emission::Shared(cond))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn prior(&self) -> &LabelPrior {
        &self.prior
    }

    pub fn emission(&self) -> &Emission {
        &self.cond
    }

    /// The shared conditional, when the structure constraint holds.
    pub fn cond(&self) -> Option<&ConditionalTable> {
        match &self.cond {
            Emission::Shared(t) => Some(t),
            Emission::PerPosition(_) => None,
        }
    }

    pub fn is_structured(&self) -> bool {
        matches!(self.cond, Emission::Shared(_))
    }

    pub fn joint_prob(&self, c_seq: &[usize], x_seq: &[usize]) -> f64 {
        let emit: f64 = (0..c_seq.len()).map(|n| self.cond.prob(n, x_seq[n], c_seq[n])).product();
        self.prior.prob(c_seq) * emit
    }

    /// Materialized joint over `C^N x X^N`, indexed `c_index * |X|^N + x_index`.
    pub fn dense_joint(&self) -> Result<Vec<f64>> {
        let (cs, xs) = (self.alphabet.c_space(), self.alphabet.x_space());
        let requested = cs.count() as u128 * xs.count() as u128;
        let cap = self.alphabet.enumeration_cap();
        if requested > cap as u128 {
            return Err(Error::EnumerationCapExceeded { requested, cap });
        }
        let mut out = Vec::with_capacity(requested as usize);
        for c in cs.iter() {
            for x in xs.iter() {
                out.push(self.joint_prob(&c, &x));
            }
        }
        Ok(out)
    }

    /// Every position joint `pr_n(c, x_1^N)`, by forward-backward for
    /// factorized priors and enumeration for dense ones.
    pub fn position_joints(&self) -> Result<PositionJoints> {
        let xs = self.alphabet.x_space();
        let (n_len, c_size) = (self.alphabet.seq_len(), self.alphabet.c_size());
        let mut data = vec![0.0; xs.count() * n_len * c_size];
        match self.prior.chain() {
            Some(chain) => {
                let mut fb = ForwardBackward::new(n_len, c_size);
                let mut x = vec![0; n_len];
                for (xi, block) in data.chunks_mut(n_len * c_size).enumerate() {
                    xs.decode_into(xi, &mut x);
                    fb.run(chain, &self.cond, &x);
                    for n in 0..n_len {
                        for c in 0..c_size {
                            block[n * c_size + c] = fb.alpha[n][c] * fb.beta[n][c];
                        }
                    }
                }
            }
            None => {
                let LabelPrior::Dense { probs, .. } = &self.prior else { unreachable!() };
                let cs = self.alphabet.c_space();
                let mut c = vec![0; n_len];
                let mut x = vec![0; n_len];
                for (ci, &pc) in probs.iter().enumerate() {
                    if pc == 0.0 {
                        continue;
                    }
                    cs.decode_into(ci, &mut c);
                    for xi in 0..xs.count() {
                        xs.decode_into(xi, &mut x);
                        let mut w = pc;
                        for n in 0..n_len {
                            w *= self.cond.prob(n, x[n], c[n]);
                        }
                        let block = &mut data[xi * n_len * c_size..(xi + 1) * n_len * c_size];
                        for n in 0..n_len {
                            block[n * c_size + c[n]] += w;
                        }
                    }
                }
            }
        }
        Ok(PositionJoints { space: xs, c_size, data })
    }

    /// `pr(x_1^N)`, the observation marginal.
    pub fn marginal_x(&self) -> Result<SequenceDist> {
        let xs = self.alphabet.x_space();
        let n_len = self.alphabet.seq_len();
        let probs = match self.prior.chain() {
            Some(chain) => {
                let mut fb = ForwardBackward::new(n_len, self.alphabet.c_size());
                let mut x = vec![0; n_len];
                (0..xs.count())
                    .map(|xi| {
                        xs.decode_into(xi, &mut x);
                        fb.forward(chain, &self.cond, &x)
                    })
                    .collect()
            }
            None => self.position_joints()?.marginals(),
        };
        SequenceDist::from_probs(self.alphabet.x_size(), n_len, probs)
    }

    /// Single position joint `pr_n(c, x_1^N)` with `n` 0-based.
    pub fn position_joint(&self, n: usize, c: usize, x_seq: &[usize]) -> Result<f64> {
        let n_len = self.alphabet.seq_len();
        if n >= n_len {
            return Err(Error::IndexOutOfRange(format!("position {} of {n_len}", n + 1)));
        }
        if c >= self.alphabet.c_size() {
            return Err(Error::IndexOutOfRange(format!("label {c} of {}", self.alphabet.c_size())));
        }
        self.alphabet.check_x_seq(x_seq)?;
        match self.prior.chain() {
            Some(chain) => {
                let mut fb = ForwardBackward::new(n_len, self.alphabet.c_size());
                fb.run(chain, &self.cond, x_seq);
                Ok(fb.alpha[n][c] * fb.beta[n][c])
            }
            None => {
                let xi = self.alphabet.x_space().encode(x_seq);
                Ok(self.position_joints()?.get(xi, n, c))
            }
        }
    }

    /// Draws `(c_1^N, x_1^N)`: labels from the prior, then each `x_n` from
    /// its position's conditional.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
        let c = self.prior.sample(rng);
        let x = c.iter().enumerate().map(|(n, &cn)| sample_index(&self.cond.table(n).column(cn), rng)).collect();
        (c, x)
    }
}

/// Scratch buffers for linear-space forward-backward over a label chain.
struct ForwardBackward {
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

impl ForwardBackward {
    fn new(n_len: usize, c_size: usize) -> Self {
        Self { alpha: vec![vec![0.0; c_size]; n_len], beta: vec![vec![0.0; c_size]; n_len] }
    }

    /// Fills `alpha` and returns `sum_c alpha[N-1][c]`.
    fn forward(&mut self, chain: Chain<'_>, cond: &Emission, x: &[usize]) -> f64 {
        let c_size = self.alpha[0].len();
        for c in 0..c_size {
            self.alpha[0][c] = chain.initial(c) * cond.prob(0, x[0], c);
        }
        for n in 1..x.len() {
            let (done, rest) = self.alpha.split_at_mut(n);
            let prev = &done[n - 1];
            for (c, slot) in rest[0].iter_mut().enumerate() {
                let s: f64 = (0..c_size).map(|b| prev[b] * chain.transition(n, b, c)).sum();
                *slot = s * cond.prob(n, x[n], c);
            }
        }
        self.alpha[x.len() - 1].iter().sum()
    }

    fn run(&mut self, chain: Chain<'_>, cond: &Emission, x: &[usize]) {
        self.forward(chain, cond, x);
        let n_len = x.len();
        let c_size = self.beta[0].len();
        self.beta[n_len - 1].iter_mut().for_each(|b| *b = 1.0);
        for n in (0..n_len - 1).rev() {
            let (head, tail) = self.beta.split_at_mut(n + 1);
            let next = &tail[0];
            for (c, slot) in head[n].iter_mut().enumerate() {
                *slot =
                    (0..c_size).map(|d| chain.transition(n + 1, c, d) * cond.prob(n + 1, x[n + 1], d) * next[d]).sum();
            }
        }
    }
}

/// Table of `p_n(c, x_1^N)` for every observation sequence, position and label.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionJoints {
    space: SeqSpace,
    c_size: usize,
    data: Vec<f64>,
}

impl PositionJoints {
    pub fn space(&self) -> SeqSpace {
        self.space
    }

    pub fn seq_len(&self) -> usize {
        self.space.len()
    }

    pub fn c_size(&self) -> usize {
        self.c_size
    }

    #[inline]
    pub fn get(&self, x_index: usize, n: usize, c: usize) -> f64 {
        self.data[(x_index * self.seq_len() + n) * self.c_size + c]
    }

    /// The label vector `(p_n(c, x))_c` at one sequence and position.
    pub fn at(&self, x_index: usize, n: usize) -> &[f64] {
        let start = (x_index * self.seq_len() + n) * self.c_size;
        &self.data[start..start + self.c_size]
    }

    /// Multiplies every label's joint at `(x_index, n)` by `factor`.
    pub fn scale(&mut self, x_index: usize, n: usize, factor: f64) {
        let start = (x_index * self.seq_len() + n) * self.c_size;
        self.data[start..start + self.c_size].iter_mut().for_each(|v| *v *= factor);
    }

    /// Sequence probabilities recovered by summing labels at position 0.
    pub fn marginals(&self) -> Vec<f64> {
        (0..self.space.count()).map(|xi| self.at(xi, 0).iter().sum()).collect()
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.space != other.space || self.c_size != other.c_size {
            return Err(Error::AlphabetMismatch("position joint tables differ in shape".into()));
        }
        Ok(())
    }
}

/// Observation marginal of the structured joint `(prior, cond)`.
pub fn marginal_x(alphabet: &Alphabet, prior: &LabelPrior, cond: &ConditionalTable) -> Result<SequenceDist> {
    JointDist::structured(*alphabet, prior.clone(), cond.clone())?.marginal_x()
}

/// `pr_n(c, x_1^N)` of the structured joint `(prior, cond)`, `n` 0-based.
pub fn position_joint(
    alphabet: &Alphabet,
    prior: &LabelPrior,
    cond: &ConditionalTable,
    n: usize,
    c: usize,
    x_seq: &[usize],
) -> Result<f64> {
    JointDist::structured(*alphabet, prior.clone(), cond.clone())?.position_joint(n, c, x_seq)
}
