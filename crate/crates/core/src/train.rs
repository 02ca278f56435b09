//! Sequence-level cross-entropy training of a generative conditional
//! `q_theta(x|c)` from unlabeled observation sequences and a label LM.
//!
//! The loss is
//!
//! ```text
//! L(theta) = -(1/S) sum_s log sum_c p_LM(c) prod_n q_theta(x_{s,n} | c_n)
//! ```
//!
//! with `q_theta(.|c)` a softmax over each column of a logit table. The sum
//! over label sequences is a forward recursion for factorized LMs, and the
//! gradient comes from the label posteriors of a forward-backward pass.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bounds::kl_marginal;
use crate::bounds::BoundReport;
use crate::decision::mismatch_from_joints;
use crate::prob::{
    rng_from_seed, sample_conditional, Alphabet, ConditionalTable, JointDist, LabelPrior, PositionJoints, SeqSpace,
    SequenceDist, DEFAULT_ENUMERATION_CAP,
};
use crate::{Error, Result};

/// Gradient sup-norm below which training stops.
pub const GRAD_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_MAX_ITERS: usize = 5000;
pub const DEFAULT_SMOOTHING: f64 = 1e-12;
/// Halvings of the step before an iteration is declared stalled.
const MAX_HALVINGS: usize = 60;

/// Column-softmax logits `theta[x, c]`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    x_size: usize,
    c_size: usize,
    logits: Vec<f64>,
}

impl ModelParams {
    pub fn new(x_size: usize, c_size: usize, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != x_size * c_size || x_size == 0 || c_size == 0 {
            return Err(Error::ShapeMismatch(format!("{} logits for a {x_size}x{c_size} table", logits.len())));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("logits must be finite".into()));
        }
        Ok(Self { x_size, c_size, logits })
    }

    /// Logits drawn from `scale * N(0, 1)`.
    pub fn random(x_size: usize, c_size: usize, seed: u64, scale: f64) -> Self {
        let mut rng = rng_from_seed(seed);
        let logits = (0..x_size * c_size)
            .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        Self { x_size, c_size, logits }
    }

    /// Logits reproducing `cond`; zero entries map to a very negative logit.
    pub fn from_conditional(cond: &ConditionalTable) -> Self {
        let logits = cond.rows().into_iter().flatten().map(|p| p.max(1e-300).ln()).collect();
        Self { x_size: cond.x_size(), c_size: cond.c_size(), logits }
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn c_size(&self) -> usize {
        self.c_size
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// `log q(x|c)`, row-major.
    pub fn log_conditional(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.logits.len()];
        for c in 0..self.c_size {
            let column: Vec<f64> = (0..self.x_size).map(|x| self.logits[x * self.c_size + c]).collect();
            let norm = log_sum_exp(&column);
            for x in 0..self.x_size {
                out[x * self.c_size + c] = column[x] - norm;
            }
        }
        out
    }

    pub fn conditional(&self) -> ConditionalTable {
        let logq = self.log_conditional();
        let columns: Vec<Vec<f64>> =
            (0..self.c_size).map(|c| (0..self.x_size).map(|x| logq[x * self.c_size + c].exp()).collect()).collect();
        ConditionalTable::from_columns_unchecked(&columns)
    }

    fn step(&self, grad: &[f64], size: f64) -> Self {
        let logits = self.logits.iter().zip(grad).map(|(t, g)| t - size * g).collect();
        Self { x_size: self.x_size, c_size: self.c_size, logits }
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Log-domain view of an LM.
enum LmLogs {
    Chain { initial: Vec<f64>, transitions: Vec<Vec<f64>> },
    Dense { space: SeqSpace, log_probs: Vec<f64> },
}

impl LmLogs {
    fn new(lm: &LabelPrior) -> Result<Self> {
        let c_size = lm.c_size();
        let n_len = lm.seq_len();
        Ok(match lm {
            LabelPrior::Dense { probs, .. } => {
                let space = SeqSpace::new(c_size, n_len, DEFAULT_ENUMERATION_CAP)?;
                Self::Dense { space, log_probs: probs.iter().map(|p| p.ln()).collect() }
            }
            _ => {
                let chain = lm.chain().expect("factorized");
                let initial = (0..c_size).map(|c| chain.initial(c).ln()).collect();
                let transitions = (0..n_len)
                    .map(|n| {
                        if n == 0 {
                            return Vec::new();
                        }
                        let mut t = vec![0.0; c_size * c_size];
                        for b in 0..c_size {
                            for c in 0..c_size {
                                t[b * c_size + c] = chain.transition(n, b, c).ln();
                            }
                        }
                        t
                    })
                    .collect();
                Self::Chain { initial, transitions }
            }
        })
    }

    /// `log p(x)` and the label posteriors `gamma[n][c]`.
    fn posterior(&self, logq: &[f64], c_size: usize, x: &[usize], want_gamma: bool) -> (f64, Vec<Vec<f64>>) {
        let n_len = x.len();
        let emit = |n: usize, c: usize| logq[x[n] * c_size + c];
        match self {
            LmLogs::Chain { initial, transitions, .. } => {
                let mut alpha = vec![vec![0.0; c_size]; n_len];
                for c in 0..c_size {
                    alpha[0][c] = initial[c] + emit(0, c);
                }
                let mut buf = vec![0.0; c_size];
                for n in 1..n_len {
                    for c in 0..c_size {
                        for b in 0..c_size {
                            buf[b] = alpha[n - 1][b] + transitions[n][b * c_size + c];
                        }
                        alpha[n][c] = log_sum_exp(&buf) + emit(n, c);
                    }
                }
                let logp = log_sum_exp(&alpha[n_len - 1]);
                if !want_gamma {
                    return (logp, Vec::new());
                }
                let mut beta = vec![vec![0.0; c_size]; n_len];
                for n in (0..n_len - 1).rev() {
                    for b in 0..c_size {
                        for c in 0..c_size {
                            buf[c] = transitions[n + 1][b * c_size + c] + emit(n + 1, c) + beta[n + 1][c];
                        }
                        beta[n][b] = log_sum_exp(&buf);
                    }
                }
                let gamma = (0..n_len)
                    .map(|n| (0..c_size).map(|c| (alpha[n][c] + beta[n][c] - logp).exp()).collect())
                    .collect();
                (logp, gamma)
            }
            LmLogs::Dense { space, log_probs } => {
                let mut seq = vec![0; n_len];
                let scores: Vec<f64> = log_probs
                    .iter()
                    .enumerate()
                    .map(|(i, &lp)| {
                        if lp == f64::NEG_INFINITY {
                            return lp;
                        }
                        space.decode_into(i, &mut seq);
                        lp + (0..n_len).map(|n| emit(n, seq[n])).sum::<f64>()
                    })
                    .collect();
                let logp = log_sum_exp(&scores);
                let mut gamma = vec![vec![0.0; c_size]; n_len];
                if want_gamma {
                    for (i, s) in scores.iter().enumerate() {
                        let w = (s - logp).exp();
                        space.decode_into(i, &mut seq);
                        for n in 0..n_len {
                            gamma[n][seq[n]] += w;
                        }
                    }
                }
                (logp, gamma)
            }
        }
    }
}

fn check_lm(params: &ModelParams, lm: &LabelPrior) -> Result<()> {
    if lm.c_size() != params.c_size {
        return Err(Error::ShapeMismatch(format!("LM has {} labels, model has {}", lm.c_size(), params.c_size)));
    }
    Ok(())
}

fn check_x_seq(params: &ModelParams, lm: &LabelPrior, x_seq: &[usize]) -> Result<()> {
    if x_seq.len() != lm.seq_len() {
        return Err(Error::LengthMismatch { left: x_seq.len(), right: lm.seq_len() });
    }
    if let Some(&x) = x_seq.iter().find(|&&x| x >= params.x_size) {
        return Err(Error::IndexOutOfRange(format!("observation id {x} of {}", params.x_size)));
    }
    Ok(())
}

/// `log sum_c p_LM(c) prod_n q_theta(x_n|c_n)`.
pub fn forward_logprob(params: &ModelParams, lm: &LabelPrior, x_seq: &[usize]) -> Result<f64> {
    check_lm(params, lm)?;
    check_x_seq(params, lm, x_seq)?;
    let logs = LmLogs::new(lm)?;
    Ok(logs.posterior(&params.log_conditional(), params.c_size, x_seq, false).0)
}

/// Label posteriors `gamma[n][c] = p(c_n = c | x)` under `(lm, q_theta)`.
pub fn label_posteriors(params: &ModelParams, lm: &LabelPrior, x_seq: &[usize]) -> Result<Vec<Vec<f64>>> {
    check_lm(params, lm)?;
    check_x_seq(params, lm, x_seq)?;
    let logs = LmLogs::new(lm)?;
    Ok(logs.posterior(&params.log_conditional(), params.c_size, x_seq, true).1)
}

/// Unlabeled training sequences, grouped into distinct sequences with
/// empirical weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x_size: usize,
    seq_len: usize,
    sequences: Vec<Vec<usize>>,
    weights: Vec<f64>,
    size: usize,
}

impl Dataset {
    pub fn from_sequences(x_size: usize, sequences: &[Vec<usize>]) -> Result<Self> {
        let seq_len = sequences.first().map(Vec::len).ok_or_else(|| Error::InvalidConfig("dataset is empty".into()))?;
        let mut counts: BTreeMap<&[usize], usize> = BTreeMap::new();
        for (i, s) in sequences.iter().enumerate() {
            if s.len() != seq_len {
                return Err(Error::LengthMismatch { left: s.len(), right: seq_len });
            }
            if let Some(&x) = s.iter().find(|&&x| x >= x_size) {
                return Err(Error::IndexOutOfRange(format!("observation id {x} in sequence {}", i + 1)));
            }
            *counts.entry(s).or_default() += 1;
        }
        let size = sequences.len();
        let (sequences, weights) = counts.into_iter().map(|(s, k)| (s.to_vec(), k as f64 / size as f64)).unzip();
        Ok(Self { x_size, seq_len, sequences, weights, size })
    }

    /// Uses a whole distribution as the "empirical" one (infinite data).
    pub fn from_distribution(dist: &SequenceDist) -> Self {
        let space = dist.space();
        let (sequences, weights) =
            dist.probs().iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, &p)| (space.decode(i), p)).unzip();
        Self { x_size: dist.base(), seq_len: dist.seq_len(), sequences, weights, size: 0 }
    }

    /// Parses one sequence per line of space-separated observation ids.
    pub fn parse(text: &str, x_size: usize) -> Result<Self> {
        let sequences = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                line.split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sequences(x_size, &sequences)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    /// Number of raw sequences, or 0 for a distribution-backed dataset.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Distinct sequences and their empirical weights.
    pub fn support(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.sequences.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    /// The empirical distribution as a dense table over `X^N`.
    pub fn empirical(&self, cap: usize) -> Result<SequenceDist> {
        let space = SeqSpace::new(self.x_size, self.seq_len, cap)?;
        let mut probs = vec![0.0; space.count()];
        for (s, w) in self.support() {
            probs[space.encode(s)] += w;
        }
        SequenceDist::from_probs(self.x_size, self.seq_len, probs)
    }
}

/// Formats sequences one per line, space separated.
pub fn format_sequences(sequences: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for s in sequences {
        let line: Vec<String> = s.iter().map(ToString::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lm: LabelPrior,
    pub dataset: Dataset,
    pub step_size: f64,
    pub max_iters: usize,
    pub smoothing_epsilon: f64,
    /// Seed for random initialization.
    pub seed: u64,
    /// Ground truth for KL and mismatch tracking.
    pub eval_reference: Option<JointDist>,
}

impl TrainConfig {
    pub fn new(lm: LabelPrior, dataset: Dataset) -> Self {
        Self {
            lm,
            dataset,
            step_size: 1.0,
            max_iters: DEFAULT_MAX_ITERS,
            smoothing_epsilon: DEFAULT_SMOOTHING,
            seed: 0,
            eval_reference: None,
        }
    }

    fn validate(&self, params: &ModelParams) -> Result<()> {
        check_lm(params, &self.lm)?;
        if self.dataset.seq_len != self.lm.seq_len() {
            return Err(Error::LengthMismatch { left: self.dataset.seq_len, right: self.lm.seq_len() });
        }
        if self.dataset.x_size != params.x_size {
            return Err(Error::ShapeMismatch("dataset and model observation alphabets differ".into()));
        }
        if !(self.step_size > 0.0) || !(self.smoothing_epsilon >= 0.0) {
            return Err(Error::InvalidConfig("step size must be positive, smoothing non-negative".into()));
        }
        if let Some(r) = &self.eval_reference {
            if r.alphabet().x_size() != params.x_size || r.alphabet().c_size() != params.c_size {
                return Err(Error::AlphabetMismatch("reference alphabet differs from the model".into()));
            }
        }
        Ok(())
    }
}

/// Loss and, optionally, its gradient in one pass over the data.
fn loss_and_gradient(params: &ModelParams, config: &TrainConfig, want_grad: bool) -> Result<(f64, Vec<f64>)> {
    config.validate(params)?;
    let logs = LmLogs::new(&config.lm)?;
    let logq = params.log_conditional();
    let (x_size, c_size) = (params.x_size, params.c_size);
    let log_eps = config.smoothing_epsilon.ln();
    let mut loss = 0.0;
    // expected counts E[#(x, c)] and label occupancies E[#c]
    let mut counts = vec![0.0; x_size * c_size];
    let mut occupancy = vec![0.0; c_size];
    for (x, w) in config.dataset.support() {
        let (logp, gamma) = logs.posterior(&logq, c_size, x, want_grad);
        let smoothed = ln_add_exp(logp, log_eps);
        loss -= w * smoothed;
        if want_grad {
            let scale = w * (logp - smoothed).exp();
            for (n, g) in gamma.iter().enumerate() {
                for (c, &gc) in g.iter().enumerate() {
                    counts[x[n] * c_size + c] += scale * gc;
                    occupancy[c] += scale * gc;
                }
            }
        }
    }
    let mut grad = Vec::new();
    if want_grad {
        let q: Vec<f64> = logq.iter().map(|v| v.exp()).collect();
        grad = (0..x_size * c_size).map(|i| -(counts[i] - occupancy[i % c_size] * q[i])).collect();
    }
    Ok((loss, grad))
}

/// Sequence-level cross-entropy of the dataset under `q_theta`.
pub fn ce_loss(params: &ModelParams, config: &TrainConfig) -> Result<f64> {
    Ok(loss_and_gradient(params, config, false)?.0)
}

/// Exact gradient of [`ce_loss`] with respect to the logits, row-major.
pub fn ce_gradient(params: &ModelParams, config: &TrainConfig) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(params, config, true)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub loss: f64,
    pub grad_inf_norm: f64,
    pub kl: Option<f64>,
    pub delta_bar: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GradientTolerance,
    MaxIters,
    /// No step size down to `step_size / 2^60` decreased the loss.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrajectory {
    pub points: Vec<TrajectoryPoint>,
    pub stop: StopReason,
}

impl TrainTrajectory {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].loss <= w[0].loss)
    }
}

#[derive(Debug, Clone)]
pub enum Init {
    Params(ModelParams),
    /// Gaussian logits with the given scale, seeded by `TrainConfig::seed`.
    Random {
        scale: f64,
    },
}

struct Evaluator {
    alphabet: Alphabet,
    truth: PositionJoints,
    true_marginal: SequenceDist,
}

impl Evaluator {
    fn new(reference: &JointDist) -> Result<Self> {
        let truth = reference.position_joints()?;
        let true_marginal = reference.marginal_x()?;
        Ok(Self { alphabet: *reference.alphabet(), truth, true_marginal })
    }

    fn eval(&self, lm: &LabelPrior, params: &ModelParams) -> Result<(f64, f64)> {
        let model = JointDist::structured(self.alphabet, lm.clone(), params.conditional())?;
        let joints = model.position_joints()?;
        let marginal = SequenceDist::from_probs(self.alphabet.x_size(), self.alphabet.seq_len(), joints.marginals())?;
        let kl = kl_marginal(&self.true_marginal, &marginal)?;
        let delta = mismatch_from_joints(&self.truth, &joints)?.averaged;
        Ok((kl, delta))
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, g| m.max(g.abs()))
}

/// Gradient descent with a backtracking step: on a loss increase the step
/// is halved and retried; after an accepted step it returns to
/// `config.step_size`. One trajectory point is recorded per iteration.
pub fn train(config: &TrainConfig, init: Init) -> Result<(ModelParams, TrainTrajectory)> {
    let (x_size, c_size) = (config.dataset.x_size, config.lm.c_size());
    let mut params = match init {
        Init::Params(p) => p,
        Init::Random { scale } => ModelParams::random(x_size, c_size, config.seed, scale),
    };
    config.validate(&params)?;
    let evaluator = config.eval_reference.as_ref().map(Evaluator::new).transpose()?;

    let (mut loss, mut grad) = loss_and_gradient(&params, config, true)?;
    if !loss.is_finite() {
        return Err(Error::DivergenceDetected { iteration: 0 });
    }
    let mut points = Vec::new();
    let mut stop = StopReason::MaxIters;
    for iter in 0..=config.max_iters {
        let grad_inf_norm = inf_norm(&grad);
        let (kl, delta_bar) = match &evaluator {
            Some(e) => {
                let (kl, d) = e.eval(&config.lm, &params)?;
                (Some(kl), Some(d))
            }
            None => (None, None),
        };
        points.push(TrajectoryPoint { iter, loss, grad_inf_norm, kl, delta_bar });
        if grad_inf_norm < GRAD_TOLERANCE {
            stop = StopReason::GradientTolerance;
            break;
        }
        if iter == config.max_iters {
            break;
        }
        let mut step = config.step_size;
        let mut accepted = None;
        let mut saw_finite = false;
        for _ in 0..MAX_HALVINGS {
            let candidate = params.step(&grad, step);
            let candidate_loss = ce_loss(&candidate, config)?;
            saw_finite |= candidate_loss.is_finite();
            if candidate_loss <= loss {
                accepted = Some((candidate, candidate_loss));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((p, l)) => {
                params = p;
                loss = l;
                grad = loss_and_gradient(&params, config, true)?.1;
                if params.logits.iter().any(|v| !v.is_finite()) {
                    return Err(Error::DivergenceDetected { iteration: iter + 1 });
                }
            }
            None if !saw_finite => return Err(Error::DivergenceDetected { iteration: iter + 1 }),
            None => {
                stop = StopReason::Stalled;
                break;
            }
        }
    }
    Ok((params, TrainTrajectory { points, stop }))
}

/// `s_count` i.i.d. observation sequences from `true_dist`.
pub fn generate_dataset(true_dist: &JointDist, s_count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng_from_seed(seed);
    (0..s_count).map(|_| true_dist.sample(&mut rng).1).collect()
}

/// Data block of a training experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// `size` sequences sampled from the ground truth.
    Sampled { size: usize, seed: u64 },
    /// The exact ground-truth marginal.
    Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    Random { seed: u64, scale: f64 },
    GroundTruth,
}

/// Synthetic ground truth: an explicit label LM and either an explicit or a
/// Dirichlet-sampled conditional table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSpec {
    pub alphabet: Alphabet,
    pub prior: LabelPrior,
    #[serde(default)]
    pub cond: Option<ConditionalTable>,
    #[serde(default)]
    pub cond_seed: u64,
    #[serde(default = "one")]
    pub cond_concentration: f64,
}

fn one() -> f64 {
    1.0
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}

/// A complete synthetic training run, as read from a JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExperiment {
    pub ground_truth: GroundTruthSpec,
    pub dataset: DatasetSpec,
    pub init: InitSpec,
    pub step_size: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_smoothing")]
    pub smoothing_epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub truth: JointDist,
    /// Sampled sequences in draw order; `None` for population training.
    pub sequences: Option<Vec<Vec<usize>>>,
    pub params: ModelParams,
    pub trajectory: TrainTrajectory,
    pub final_report: BoundReport,
}

impl TrainExperiment {
    pub fn ground_truth(&self) -> Result<JointDist> {
        let g = &self.ground_truth;
        let cond = match &g.cond {
            Some(c) => c.clone(),
            None => sample_conditional(&g.alphabet, g.cond_seed, g.cond_concentration)?,
        };
        JointDist::structured(g.alphabet, g.prior.clone(), cond)
    }

    pub fn run(&self) -> Result<ExperimentOutput> {
        let truth = self.ground_truth()?;
        let alphabet = *truth.alphabet();
        let (dataset, sequences, seed_for_init) = match &self.dataset {
            DatasetSpec::Sampled { size, seed } => {
                if *size == 0 {
                    return Err(Error::InvalidConfig("dataset size must be positive".into()));
                }
                let seqs = generate_dataset(&truth, *size, *seed);
                (Dataset::from_sequences(alphabet.x_size(), &seqs)?, Some(seqs), *seed)
            }
            DatasetSpec::Population => (Dataset::from_distribution(&truth.marginal_x()?), None, 0),
        };
        let (init, seed) = match &self.init {
            InitSpec::Random { seed, scale } => (Init::Random { scale: *scale }, *seed),
            InitSpec::GroundTruth => {
                (Init::Params(ModelParams::from_conditional(truth.cond().expect("structured"))), seed_for_init)
            }
        };
        let config = TrainConfig {
            lm: truth.prior().clone(),
            dataset,
            step_size: self.step_size,
            max_iters: self.max_iters,
            smoothing_epsilon: self.smoothing_epsilon,
            seed,
            eval_reference: Some(truth.clone()),
        };
        let (params, trajectory) = train(&config, init)?;
        let model = JointDist::structured(alphabet, truth.prior().clone(), params.conditional())?;
        let final_report = BoundReport::evaluate(seed, &truth, &model)?;
        Ok(ExperimentOutput { truth, sequences, params, trajectory, final_report })
    }
}
