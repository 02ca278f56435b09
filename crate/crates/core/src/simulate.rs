//! Monte-Carlo verification of the bound chain and constructive witnesses
//! for the necessity of its two preconditions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{l1_marginal_distance, BoundReport, LmMatrix};
use crate::decision::mismatch;
use crate::prob::{
    derive_seed, dirichlet, rng_from_seed, sample_conditional_with, sample_prior_with, Alphabet, ConditionalTable,
    Emission, JointDist, LabelPrior, PriorKind,
};
use crate::{Error, Result};

/// Consecutive rejected draws after which a simulation gives up.
pub const STARVATION_WINDOW: usize = 100_000;
/// Smallest mismatch a counterexample must exhibit.
pub const MIN_WITNESS_DELTA: f64 = 0.01;
/// Largest marginal l1 distance that still counts as an exact match.
pub const EXACT_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub alphabet: Alphabet,
    pub samples: usize,
    pub sigma_min_floor: f64,
    pub pinv_l1_cap: f64,
    pub master_seed: u64,
    /// Fraction of model tables drawn as `(1 - l) * true + l * random` with
    /// `l` log-uniform in `[1e-3, 1]`; the rest are independent draws.
    pub interpolation_fraction: f64,
    /// Dirichlet concentration of the dense label prior over `C^N`.
    pub prior_concentration: f64,
    /// Dirichlet concentration of each conditional column.
    pub cond_concentration: f64,
    /// Use the true conditional as the model (zero-distance sanity runs).
    pub exact_model: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            alphabet: Alphabet::new(4, 3, 3).expect("valid default alphabet"),
            samples: 10_000,
            sigma_min_floor: 0.01,
            pinv_l1_cap: 2.0,
            master_seed: 0,
            interpolation_fraction: 0.5,
            prior_concentration: 0.1,
            cond_concentration: 1.0,
            exact_model: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.samples == 0 {
            return bad("samples must be positive");
        }
        if !(self.sigma_min_floor >= 0.0) {
            return bad("sigma_min_floor must be non-negative");
        }
        if !(self.pinv_l1_cap > 0.0) {
            return bad("pinv_l1_cap must be positive");
        }
        if !(0.0..=1.0).contains(&self.interpolation_fraction) {
            return bad("interpolation_fraction must lie in [0, 1]");
        }
        if !(self.prior_concentration > 0.0) || !(self.cond_concentration > 0.0) {
            return bad("concentrations must be positive");
        }
        Ok(())
    }
}

/// One accepted simulation point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRecord {
    pub index: usize,
    pub instance_seed: u64,
    /// Prior draws needed to pass both filters.
    pub iterations: usize,
    /// Interpolation weight, when the model was built by interpolation.
    pub lambda: Option<f64>,
    pub report: BoundReport,
}

/// A simulation point together with the distributions that produced it.
#[derive(Debug, Clone)]
pub struct SimInstance {
    pub record: SimRecord,
    pub true_dist: JointDist,
    pub model_dist: JointDist,
}

/// Regenerates instance `index` of a simulation. Every instance has its own
/// seed derived from the master seed, so results do not depend on the order
/// or parallelism of evaluation.
pub fn simulate_instance(config: &SimConfig, index: usize) -> Result<SimInstance> {
    let alphabet = config.alphabet;
    let instance_seed = derive_seed(config.master_seed, index as u64);
    let mut rng = rng_from_seed(instance_seed);

    let mut iterations = 0;
    let prior = loop {
        iterations += 1;
        let prior = sample_prior_with(&mut rng, &alphabet, PriorKind::Dense, config.prior_concentration)?;
        let lm = LmMatrix::from_prior(&prior)?;
        if lm.is_full_rank() && lm.sigma_min() > config.sigma_min_floor && lm.induced_l1() <= config.pinv_l1_cap {
            break prior;
        }
        if iterations >= STARVATION_WINDOW {
            return Err(Error::FilterStarvation { accepted: 0, draws: iterations });
        }
    };

    let (x, c) = (alphabet.x_size(), alphabet.c_size());
    let true_cond = sample_conditional_with(&mut rng, x, c, config.cond_concentration)?;
    let (model_cond, lambda) = if config.exact_model {
        (true_cond.clone(), None)
    } else if rng.random::<f64>() < config.interpolation_fraction {
        let lambda = 10f64.powf(rng.random_range(-3.0..=0.0));
        let other = sample_conditional_with(&mut rng, x, c, config.cond_concentration)?;
        (true_cond.interpolate(&other, lambda)?, Some(lambda))
    } else {
        (sample_conditional_with(&mut rng, x, c, config.cond_concentration)?, None)
    };

    let true_dist = JointDist::structured(alphabet, prior.clone(), true_cond)?;
    let model_dist = JointDist::structured(alphabet, prior, model_cond)?;
    let report = BoundReport::evaluate(instance_seed, &true_dist, &model_dist)?;
    Ok(SimInstance { record: SimRecord { index, instance_seed, iterations, lambda, report }, true_dist, model_dist })
}

/// Lazily evaluated simulation records in index order.
pub fn records(config: &SimConfig) -> impl Iterator<Item = Result<SimRecord>> + '_ {
    (0..config.samples).map(move |i| simulate_instance(config, i).map(|s| s.record))
}

/// Runs the whole simulation in parallel; records come back in index order.
pub fn run_bound_simulation(config: &SimConfig) -> Result<Vec<SimRecord>> {
    config.validate()?;
    (0..config.samples).into_par_iter().map(|i| simulate_instance(config, i).map(|s| s.record)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolatedCondition {
    RankDeficient,
    StructureBroken,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub l1_marginal: f64,
    pub delta_bar: f64,
    pub violated_condition: ViolatedCondition,
    pub sigma_min: f64,
    pub lm_rank: usize,
    pub full_rank: bool,
    pub structured: bool,
    pub epsilon: f64,
}

/// An exact-match pair `pr(x) = q(x)` whose decision rules still disagree.
///
/// Serializes as the instance JSON of the true distribution plus
/// `model_cond` and a `certificate` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    #[serde(flatten)]
    pub true_dist: JointDist,
    pub model_cond: ConditionalTable,
    pub certificate: Certificate,
}

impl Counterexample {
    pub fn model_dist(&self) -> Result<JointDist> {
        JointDist::structured(*self.true_dist.alphabet(), self.true_dist.prior().clone(), self.model_cond.clone())
    }

    /// Recomputes the certificate from the stored distributions.
    pub fn verify(&self) -> Result<Certificate> {
        evaluate_witness(&self.true_dist, &self.model_cond, self.certificate.violated_condition, self.certificate.epsilon)
    }
}

fn evaluate_witness(
    true_dist: &JointDist,
    model_cond: &ConditionalTable,
    violated: ViolatedCondition,
    epsilon: f64,
) -> Result<Certificate> {
    let model = JointDist::structured(*true_dist.alphabet(), true_dist.prior().clone(), model_cond.clone())?;
    let l1_marginal = l1_marginal_distance(&true_dist.marginal_x()?, &model.marginal_x()?)?;
    let delta_bar = mismatch(true_dist, &model)?.averaged;
    let lm = LmMatrix::from_prior(true_dist.prior())?;
    Ok(Certificate {
        l1_marginal,
        delta_bar,
        violated_condition: violated,
        sigma_min: lm.sigma_min(),
        lm_rank: lm.rank(),
        full_rank: lm.is_full_rank(),
        structured: true_dist.is_structured(),
        epsilon,
    })
}

/// Accepts a candidate witness only if it is an exact match with mismatch
/// above [`MIN_WITNESS_DELTA`] and violates exactly the targeted condition.
pub fn certify(
    true_dist: JointDist,
    model_cond: ConditionalTable,
    violated: ViolatedCondition,
    epsilon: f64,
) -> Result<Option<Counterexample>> {
    let certificate = evaluate_witness(&true_dist, &model_cond, violated, epsilon)?;
    let only_target = match violated {
        ViolatedCondition::RankDeficient => !certificate.full_rank && certificate.structured,
        ViolatedCondition::StructureBroken => certificate.full_rank && !certificate.structured,
    };
    let ok = only_target && certificate.l1_marginal <= EXACT_MATCH_TOL && certificate.delta_bar > MIN_WITNESS_DELTA;
    Ok(ok.then_some(Counterexample { true_dist, model_cond, certificate }))
}

/// Perturbation sizes to try below a validity bound: from 0.1 upward by
/// doubling (capped at the bound), then from 0.05 downward by halving.
fn epsilon_schedule(eps_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = 0.1;
    while e < eps_max {
        out.push(e);
        e *= 2.0;
    }
    if eps_max.is_finite() && eps_max > 0.0 {
        out.push(eps_max);
    }
    let mut e = 0.05;
    for _ in 0..10 {
        if e < eps_max {
            out.push(e);
        }
        e *= 0.5;
    }
    out
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn normalize_inf(v: &mut [f64]) -> bool {
    let m = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if m < 1e-6 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= m);
    true
}

/// Builds the table rows with `cond + f(x, c)` added, or `None` if an entry
/// goes negative beyond rounding.
fn perturbed(cond: &ConditionalTable, delta: impl Fn(usize, usize) -> f64) -> Option<ConditionalTable> {
    let mut rows = cond.rows();
    for (x, row) in rows.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v += delta(x, c);
            if *v < -1e-12 {
                return None;
            }
            *v = v.max(0.0);
        }
    }
    ConditionalTable::from_rows(&rows, false).ok()
}

/// `q = cond + eps * v` on observation row `plus` and `- eps * v` on row `minus`.
pub fn rank_perturbation(
    cond: &ConditionalTable,
    null_vector: &[f64],
    plus: usize,
    minus: usize,
    eps: f64,
) -> Option<ConditionalTable> {
    perturbed(cond, |x, c| {
        if x == plus {
            eps * null_vector[c]
        } else if x == minus {
            -eps * null_vector[c]
        } else {
            0.0
        }
    })
}

/// Searches for an exact-match witness with a rank-deficient `P_C`.
///
/// The prior is a position-dependent unigram whose rows are all equal, so
/// `P_C` has rank one. Moving mass between two observation rows along a
/// null vector of `P_C` leaves every position marginal `q_n(x)`, and hence
/// `q(x_1^N)`, unchanged.
pub fn find_rank_counterexample(alphabet: &Alphabet, rng_seed: u64, max_tries: usize) -> Result<Counterexample> {
    let (x_size, c_size, n_len) = (alphabet.x_size(), alphabet.c_size(), alphabet.seq_len());
    if c_size < 2 {
        return Err(Error::InvalidAlphabet("a rank counterexample needs |C| >= 2".into()));
    }
    let mut rng = rng_from_seed(rng_seed);
    for _ in 0..max_tries {
        let unigram = dirichlet(&mut rng, c_size, 1.0)?;
        let prior = LabelPrior::position_unigram(vec![unigram; n_len])?;
        let lm = LmMatrix::from_prior(&prior)?;
        let true_cond = sample_conditional_with(&mut rng, x_size, c_size, 1.0)?;

        // project a random direction onto the null space of P_C
        let w = nalgebra::DVector::from_vec(random_direction(&mut rng, c_size));
        let row_part = lm.pinv() * (lm.matrix() * &w);
        let mut v: Vec<f64> = (w - row_part).iter().copied().collect();
        let plus = rng.random_range(0..x_size);
        let minus = (plus + rng.random_range(1..x_size)) % x_size;
        if !normalize_inf(&mut v) {
            continue;
        }

        let true_dist = JointDist::structured(*alphabet, prior, true_cond)?;
        let cond = true_dist.cond().expect("structured");
        for (p, m) in [(plus, minus), (minus, plus)] {
            let eps_max = (0..c_size)
                .map(|c| match v[c] {
                    d if d > 0.0 => cond.get(m, c) / d,
                    d if d < 0.0 => cond.get(p, c) / -d,
                    _ => f64::INFINITY,
                })
                .fold(f64::INFINITY, f64::min);
            for eps in epsilon_schedule(eps_max) {
                let Some(q) = rank_perturbation(cond, &v, p, m, eps) else { continue };
                if let Some(ce) = certify(true_dist.clone(), q, ViolatedCondition::RankDeficient, eps)? {
                    return Ok(ce);
                }
            }
        }
    }
    Err(Error::NotFound { tries: max_tries })
}

/// Position-dependent conditionals `q_hat + eps * a (x) w_n`.
pub fn structure_perturbation(
    model_cond: &ConditionalTable,
    obs_direction: &[f64],
    label_directions: &[Vec<f64>],
    eps: f64,
) -> Option<Vec<ConditionalTable>> {
    label_directions.iter().map(|w| perturbed(model_cond, |x, c| eps * obs_direction[x] * w[c])).collect()
}

/// Searches for an exact-match witness whose true joint breaks the
/// structure constraint while `P_C` keeps full column rank.
///
/// With a position-dependent unigram prior `u_n`, the true conditionals
/// `pr_n(x|c) = q_hat(x|c) + eps * a(x) * w_n(c)` with `sum_x a(x) = 0` and
/// `u_n . w_n = 0` reproduce the model marginal `q_n(x)` at every position.
pub fn find_structure_counterexample(alphabet: &Alphabet, rng_seed: u64, max_tries: usize) -> Result<Counterexample> {
    let (x_size, c_size, n_len) = (alphabet.x_size(), alphabet.c_size(), alphabet.seq_len());
    if c_size < 2 || n_len < 2 {
        return Err(Error::InvalidAlphabet("a structure counterexample needs |C| >= 2 and N >= 2".into()));
    }
    if n_len < c_size {
        return Err(Error::InvalidAlphabet(format!(
            "P_C cannot have full column rank with N = {n_len} < |C| = {c_size}"
        )));
    }
    let mut rng = rng_from_seed(rng_seed);
    for _ in 0..max_tries {
        let tables = (0..n_len).map(|_| dirichlet(&mut rng, c_size, 1.0)).collect::<Result<Vec<_>>>()?;
        let prior = LabelPrior::position_unigram(tables.clone())?;
        let lm = LmMatrix::from_prior(&prior)?;
        let model_cond = sample_conditional_with(&mut rng, x_size, c_size, 1.0)?;
        let mut a = random_direction(&mut rng, x_size);
        let mean = a.iter().sum::<f64>() / x_size as f64;
        a.iter_mut().for_each(|v| *v -= mean);
        let mut ws: Vec<Vec<f64>> = tables
            .iter()
            .map(|u| {
                let mut w = random_direction(&mut rng, c_size);
                let coef = dot(&w, u) / dot(u, u);
                w.iter_mut().zip(u).for_each(|(wi, ui)| *wi -= coef * ui);
                w
            })
            .collect();
        if !lm.is_full_rank() || lm.sigma_min() < 0.05 || !normalize_inf(&mut a) {
            continue;
        }
        if !ws.iter_mut().all(|w| normalize_inf(w)) {
            continue;
        }

        let mut eps_max = f64::INFINITY;
        for w in &ws {
            for (x, &ax) in a.iter().enumerate() {
                for (c, &wc) in w.iter().enumerate() {
                    if ax * wc < 0.0 {
                        eps_max = eps_max.min(model_cond.get(x, c) / -(ax * wc));
                    }
                }
            }
        }
        for eps in epsilon_schedule(eps_max) {
            let Some(conds) = structure_perturbation(&model_cond, &a, &ws, eps) else { continue };
            let true_dist = JointDist::new(*alphabet, prior.clone(), Emission::PerPosition(conds))?;
            if let Some(ce) = certify(true_dist, model_cond.clone(), ViolatedCondition::StructureBroken, eps)? {
                return Ok(ce);
            }
        }
    }
    Err(Error::NotFound { tries: max_tries })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
