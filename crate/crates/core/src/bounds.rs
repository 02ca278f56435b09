//! Quantities in the bound chain
//!
//! ```text
//! delta_bar <= d_bar <= N^2 * ||P_C^+||_1 * sum_x |pr(x) - q(x)|
//! delta_bar^2 <= 2 N^4 ||P_C^+||_1^2 * KL(pr(x) || q(x))
//! ```
//!
//! together with the two local inequalities they rest on and the
//! language-model matrix `P_C` with its SVD-based left-inverse.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decision::mismatch_from_joints;
use crate::prob::{ConditionalTable, JointDist, LabelPrior, PositionJoints, SequenceDist};
use crate::{Error, Result};

/// Singular values at or below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;
/// Slack allowed on every link of the chain.
pub const CHAIN_TOLERANCE: f64 = 1e-9;

/// The `N x |C|` matrix of position-dependent label unigrams `pr_n(c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmMatrix {
    matrix: DMatrix<f64>,
    singular_values: Vec<f64>,
    sigma_min: f64,
    rank: usize,
    pinv: DMatrix<f64>,
    induced_l1: f64,
    induced_l2: f64,
}

impl LmMatrix {
    /// Builds the matrix from rows of position unigrams.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 || rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::ShapeMismatch("language-model matrix rows are ragged or empty".into()));
        }
        for (n, r) in rows.iter().enumerate() {
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > crate::prob::DERIVED_TOL || r.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::NotNormalized { what: format!("row {}", n + 1), sum });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let matrix = DMatrix::from_row_slice(n_rows, n_cols, &flat);
        let svd = matrix.clone().svd(true, true);
        let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));

        let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let cutoff = RANK_TOLERANCE * largest;
        let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();

        // pinv = V * diag(1/s) * U^T over the retained singular values
        let mut pinv = DMatrix::zeros(n_cols, n_rows);
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff {
                pinv += (v_t.row(k).transpose() * u.column(k).transpose()) / s;
            }
        }

        let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
        singular_values.sort_by(|a, b| b.total_cmp(a));
        // a wide matrix has n_cols - n_rows structural zero singular values
        let sigma_min = if n_rows < n_cols { 0.0 } else { *singular_values.last().unwrap() };
        let induced_l1 = max_abs_column_sum(&pinv);
        let induced_l2 = singular_values.iter().filter(|&&s| s > cutoff).map(|s| 1.0 / s).fold(0.0, f64::max);
        Ok(Self { matrix, singular_values, sigma_min, rank, pinv, induced_l1, induced_l2 })
    }

    /// `P_C` of a label prior.
    pub fn from_prior(prior: &LabelPrior) -> Result<Self> {
        Self::from_rows(&prior.position_marginals())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn seq_len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn c_size(&self) -> usize {
        self.matrix.ncols()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.c_size()
    }

    /// The (truncated) pseudo-inverse; a left-inverse when full rank.
    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    /// Induced l1 norm of the pseudo-inverse.
    pub fn induced_l1(&self) -> f64 {
        self.induced_l1
    }

    /// Induced l2 norm of the pseudo-inverse, `1 / sigma_min` when full rank.
    pub fn induced_l2(&self) -> f64 {
        self.induced_l2
    }

    pub fn induced_norm(&self, p: LpNorm) -> f64 {
        match p {
            LpNorm::L1 => self.induced_l1,
            LpNorm::L2 => self.induced_l2,
        }
    }

    fn require_full_rank(&self) -> Result<()> {
        if !self.is_full_rank() {
            return Err(Error::RankDeficientInput { rank: self.rank, columns: self.c_size() });
        }
        Ok(())
    }
}

pub fn build_lm_matrix(prior: &LabelPrior) -> Result<LmMatrix> {
    LmMatrix::from_prior(prior)
}

fn max_abs_column_sum(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpNorm {
    L1,
    L2,
}

impl LpNorm {
    fn distance<'a>(self, pairs: impl Iterator<Item = (&'a f64, &'a f64)>) -> f64 {
        match self {
            LpNorm::L1 => pairs.map(|(a, b)| (a - b).abs()).sum(),
            LpNorm::L2 => pairs.map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
        }
    }
}

/// `(1/N) sum_n sum_x sum_c |pr_n(c, x) - q_n(c, x)|`.
pub fn d_bar(true_dist: &JointDist, model_dist: &JointDist) -> Result<f64> {
    if true_dist.alphabet() != model_dist.alphabet() {
        return Err(Error::AlphabetMismatch("true and model alphabets differ".into()));
    }
    d_bar_from_joints(&true_dist.position_joints()?, &model_dist.position_joints()?)
}

pub fn d_bar_from_joints(truth: &PositionJoints, model: &PositionJoints) -> Result<f64> {
    truth.check_same_shape(model)?;
    let n_len = truth.seq_len();
    let mut total = 0.0;
    for xi in 0..truth.space().count() {
        for n in 0..n_len {
            total += truth.at(xi, n).iter().zip(model.at(xi, n)).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
    }
    Ok(total / n_len as f64)
}

/// `sum_x |p(x) - q(x)|` over whole sequences.
pub fn l1_marginal_distance(p: &SequenceDist, q: &SequenceDist) -> Result<f64> {
    p.check_same_space(q)?;
    Ok(LpNorm::L1.distance(p.probs().iter().zip(q.probs())))
}

/// `N^2 * ||P_C^+||_1 * l1_marg`.
pub fn theorem1_rhs(lm: &LmMatrix, l1_marg: f64, n_len: usize) -> Result<f64> {
    lm.require_full_rank()?;
    Ok((n_len * n_len) as f64 * lm.induced_l1() * l1_marg)
}

/// `2 * N^4 * ||P_C^+||_1^2`.
pub fn pinsker_beta(lm: &LmMatrix, n_len: usize) -> Result<f64> {
    lm.require_full_rank()?;
    Ok(2.0 * (n_len as f64).powi(4) * lm.induced_l1().powi(2))
}

/// `(d_cond_p, d_pos_p)`: lp distances between the conditional tables and
/// between the position marginals of the observation distributions.
pub fn lemma1_distances(
    true_cond: &ConditionalTable,
    model_cond: &ConditionalTable,
    true_pos: &SequenceDist,
    model_pos: &SequenceDist,
    p: LpNorm,
) -> Result<(f64, f64)> {
    if true_cond.x_size() != model_cond.x_size() || true_cond.c_size() != model_cond.c_size() {
        return Err(Error::AlphabetMismatch("conditional tables differ in shape".into()));
    }
    true_pos.check_same_space(model_pos)?;
    if true_pos.base() != true_cond.x_size() {
        return Err(Error::AlphabetMismatch("observation alphabets differ".into()));
    }
    let (a, b) = (true_cond.rows(), model_cond.rows());
    let d_cond = p.distance(a.iter().flatten().zip(b.iter().flatten()));
    let d_pos =
        p.distance(true_pos.position_marginals().iter().flatten().zip(model_pos.position_marginals().iter().flatten()));
    Ok((d_cond, d_pos))
}

/// `(|prod pr - prod q|, telescoped upper bound)` for one sequence pair.
pub fn lemma2_gap(
    true_cond: &ConditionalTable,
    model_cond: &ConditionalTable,
    c_seq: &[usize],
    x_seq: &[usize],
) -> Result<(f64, f64)> {
    if c_seq.len() != x_seq.len() {
        return Err(Error::LengthMismatch { left: c_seq.len(), right: x_seq.len() });
    }
    let pr: Vec<f64> = c_seq.iter().zip(x_seq).map(|(&c, &x)| true_cond.get(x, c)).collect();
    let q: Vec<f64> = c_seq.iter().zip(x_seq).map(|(&c, &x)| model_cond.get(x, c)).collect();
    let lhs = (pr.iter().product::<f64>() - q.iter().product::<f64>()).abs();
    let rhs = (0..pr.len())
        .map(|j| {
            let before: f64 = pr[..j].iter().product();
            let after: f64 = q[j + 1..].iter().product();
            before * after * (pr[j] - q[j]).abs()
        })
        .sum();
    Ok((lhs, rhs))
}

/// `KL(p || q)`; `+inf` when `p` puts mass where `q` has none.
pub fn kl_marginal(p: &SequenceDist, q: &SequenceDist) -> Result<f64> {
    p.check_same_space(q)?;
    let mut kl = 0.0;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// Every bound quantity for one `(pr, q)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub seed: u64,
    pub x_size: usize,
    pub c_size: usize,
    pub seq_len: usize,
    pub sigma_min: f64,
    pub full_rank: bool,
    pub pinv_l1: f64,
    pub pinv_l2: f64,
    pub l1_marginal: f64,
    pub d_bar: f64,
    pub delta_bar: f64,
    /// `None` when the matrix is rank deficient.
    pub theorem1_rhs: Option<f64>,
    pub kl: f64,
    pub beta: Option<f64>,
    /// `(d_cond, d_pos)` for p = 1 and p = 2; `None` unless both sides are structured.
    pub lemma1_l1: Option<(f64, f64)>,
    pub lemma1_l2: Option<(f64, f64)>,
    /// Whether the theorem's preconditions hold for this pair.
    pub theorem_applies: bool,
    pub eq1_ok: bool,
    pub theorem1_ok: bool,
    pub pinsker_ok: bool,
}

impl BoundReport {
    /// Evaluates the chain for `(true_dist, model_dist)`. The theorem links are
    /// only checked when both joints are structured, share the label prior,
    /// and `P_C` has full column rank.
    pub fn evaluate(seed: u64, true_dist: &JointDist, model_dist: &JointDist) -> Result<Self> {
        if true_dist.alphabet() != model_dist.alphabet() {
            return Err(Error::AlphabetMismatch("true and model alphabets differ".into()));
        }
        let alphabet = true_dist.alphabet();
        let n_len = alphabet.seq_len();
        let (tj, mj) = (true_dist.position_joints()?, model_dist.position_joints()?);
        let true_marg = SequenceDist::from_probs(alphabet.x_size(), n_len, tj.marginals())?;
        let model_marg = SequenceDist::from_probs(alphabet.x_size(), n_len, mj.marginals())?;
        let lm = LmMatrix::from_prior(true_dist.prior())?;

        let delta_bar = mismatch_from_joints(&tj, &mj)?.averaged;
        let d_bar = d_bar_from_joints(&tj, &mj)?;
        let l1_marginal = l1_marginal_distance(&true_marg, &model_marg)?;
        let kl = kl_marginal(&true_marg, &model_marg)?;
        let theorem1_rhs = theorem1_rhs(&lm, l1_marginal, n_len).ok();
        let beta = pinsker_beta(&lm, n_len).ok();

        let (lemma1_l1, lemma1_l2) = match (true_dist.cond(), model_dist.cond()) {
            (Some(tc), Some(mc)) => (
                Some(lemma1_distances(tc, mc, &true_marg, &model_marg, LpNorm::L1)?),
                Some(lemma1_distances(tc, mc, &true_marg, &model_marg, LpNorm::L2)?),
            ),
            _ => (None, None),
        };

        let theorem_applies = true_dist.is_structured()
            && model_dist.is_structured()
            && true_dist.prior() == model_dist.prior()
            && lm.is_full_rank();
        let eq1_ok = delta_bar <= d_bar + CHAIN_TOLERANCE;
        let theorem1_ok = match theorem1_rhs {
            Some(rhs) if theorem_applies => d_bar <= rhs + CHAIN_TOLERANCE,
            _ => true,
        };
        let pinsker_ok = match beta {
            Some(b) if theorem_applies && kl.is_finite() => delta_bar * delta_bar <= b * kl + CHAIN_TOLERANCE,
            _ => true,
        };

        Ok(Self {
            seed,
            x_size: alphabet.x_size(),
            c_size: alphabet.c_size(),
            seq_len: n_len,
            sigma_min: lm.sigma_min(),
            full_rank: lm.is_full_rank(),
            pinv_l1: lm.induced_l1(),
            pinv_l2: lm.induced_l2(),
            l1_marginal,
            d_bar,
            delta_bar,
            theorem1_rhs,
            kl,
            beta,
            lemma1_l1,
            lemma1_l2,
            theorem_applies,
            eq1_ok,
            theorem1_ok,
            pinsker_ok,
        })
    }

    pub fn chain_ok(&self) -> bool {
        self.eq1_ok && self.theorem1_ok && self.pinsker_ok
    }

    pub fn row(&self) -> BoundRow {
        BoundRow {
            seed: self.seed,
            x_size: self.x_size,
            c_size: self.c_size,
            seq_len: self.seq_len,
            sigma_min: self.sigma_min,
            pinv_l1: self.pinv_l1,
            l1_marginal: self.l1_marginal,
            d_bar: self.d_bar,
            delta_bar: self.delta_bar,
            theorem1_rhs: self.theorem1_rhs,
            kl: self.kl,
            beta: self.beta,
            chain_ok: u8::from(self.chain_ok()),
        }
    }
}

/// One CSV row of a bound report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub seed: u64,
    pub x_size: usize,
    pub c_size: usize,
    pub seq_len: usize,
    pub sigma_min: f64,
    pub pinv_l1: f64,
    pub l1_marginal: f64,
    pub d_bar: f64,
    pub delta_bar: f64,
    pub theorem1_rhs: Option<f64>,
    pub kl: f64,
    pub beta: Option<f64>,
    pub chain_ok: u8,
}

pub fn write_bound_csv<'a, W: Write>(out: W, reports: impl IntoIterator<Item = &'a BoundReport>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r.row())?;
    }
    w.flush()?;
    Ok(())
}
