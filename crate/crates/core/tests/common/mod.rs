//! Brute-force reference computations by direct enumeration. Nothing here
//! calls the library's dynamic programs.

#![allow(dead_code)]

use rand::Rng;
use seqbound::prob::{
    rng_from_seed, sample_conditional_with, sample_prior_with, Alphabet, ConditionalTable, Emission, JointDist,
    LabelPrior, PriorKind,
};
use seqbound::train::ModelParams;

/// All sequences over `0..base` of length `len`, position 0 most significant.
pub fn all_seqs(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; len];
    loop {
        out.push(cur.clone());
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < base {
                break;
            }
            cur[i] = 0;
        }
    }
}

pub fn prior_prob(prior: &LabelPrior, c: &[usize]) -> f64 {
    match prior {
        LabelPrior::Dense { c_size, probs, .. } => probs[c.iter().fold(0, |acc, &v| acc * c_size + v)],
        LabelPrior::PositionUnigram { tables } => c.iter().enumerate().map(|(n, &v)| tables[n][v]).product(),
        LabelPrior::Bigram { initial, transition, .. } => {
            c.windows(2).map(|w| transition[w[0]][w[1]]).product::<f64>() * initial[c[0]]
        }
    }
}

pub fn emission_prob(e: &Emission, n: usize, x: usize, c: usize) -> f64 {
    match e {
        Emission::Shared(t) => t.rows()[x][c],
        Emission::PerPosition(ts) => ts[n].rows()[x][c],
    }
}

pub fn joint_prob(d: &JointDist, c: &[usize], x: &[usize]) -> f64 {
    prior_prob(d.prior(), c) * (0..c.len()).map(|n| emission_prob(d.emission(), n, x[n], c[n])).product::<f64>()
}

pub fn marginal(d: &JointDist, x: &[usize]) -> f64 {
    let a = d.alphabet();
    all_seqs(a.c_size(), a.seq_len()).iter().map(|c| joint_prob(d, c, x)).sum()
}

/// `pr_n(c, x)` for every `n` and `c`, as `[n][c]`.
pub fn position_joints(d: &JointDist, x: &[usize]) -> Vec<Vec<f64>> {
    let a = d.alphabet();
    let mut out = vec![vec![0.0; a.c_size()]; a.seq_len()];
    for c in all_seqs(a.c_size(), a.seq_len()) {
        let p = joint_prob(d, &c, x);
        for n in 0..a.seq_len() {
            out[n][c[n]] += p;
        }
    }
    out
}

pub fn d_bar(truth: &JointDist, model: &JointDist) -> f64 {
    let a = truth.alphabet();
    let mut total = 0.0;
    for x in all_seqs(a.x_size(), a.seq_len()) {
        let (p, q) = (position_joints(truth, &x), position_joints(model, &x));
        for n in 0..a.seq_len() {
            for c in 0..a.c_size() {
                total += (p[n][c] - q[n][c]).abs();
            }
        }
    }
    total / a.seq_len() as f64
}

/// Averaged mismatch with lowest-index tie breaking.
pub fn delta_bar(truth: &JointDist, model: &JointDist) -> f64 {
    let a = truth.alphabet();
    let argmax = |v: &[f64]| {
        let mut best = 0;
        for i in 1..v.len() {
            if v[i] > v[best] {
                best = i;
            }
        }
        best
    };
    let mut total = 0.0;
    for x in all_seqs(a.x_size(), a.seq_len()) {
        let (p, q) = (position_joints(truth, &x), position_joints(model, &x));
        for n in 0..a.seq_len() {
            total += p[n][argmax(&p[n])] - p[n][argmax(&q[n])];
        }
    }
    total / a.seq_len() as f64
}

/// Column softmax of the logits, computed directly.
pub fn softmax_table(params: &ModelParams) -> Vec<Vec<f64>> {
    let (xs, cs) = (params.x_size(), params.c_size());
    let th = params.logits();
    let mut q = vec![vec![0.0; cs]; xs];
    for c in 0..cs {
        let z: f64 = (0..xs).map(|x| th[x * cs + c].exp()).sum();
        for x in 0..xs {
            q[x][c] = th[x * cs + c].exp() / z;
        }
    }
    q
}

pub fn forward_logprob(params: &ModelParams, lm: &LabelPrior, x: &[usize]) -> f64 {
    let q = softmax_table(params);
    all_seqs(params.c_size(), x.len())
        .iter()
        .map(|c| prior_prob(lm, c) * (0..x.len()).map(|n| q[x[n]][c[n]]).product::<f64>())
        .sum::<f64>()
        .ln()
}

pub fn random_kind<R: Rng>(rng: &mut R) -> PriorKind {
    [PriorKind::Dense, PriorKind::PositionUnigram, PriorKind::Bigram][rng.random_range(0..3)]
}

/// A random small alphabet with `|C|^N <= 1000` and `|X|^N <= 1296`.
pub fn random_alphabet<R: Rng>(rng: &mut R) -> Alphabet {
    loop {
        let c = rng.random_range(1..=3);
        let x: usize = rng.random_range(c + 1..=c + 2);
        let n = rng.random_range(1..=4);
        if x.pow(n as u32) <= 1296 {
            return Alphabet::new(x, c, n).unwrap();
        }
    }
}

/// Random joint with a prior of the given kind and either a shared or a
/// per-position emission.
pub fn random_joint(alphabet: Alphabet, kind: PriorKind, per_position: bool, seed: u64) -> JointDist {
    let mut rng = rng_from_seed(seed);
    let prior = sample_prior_with(&mut rng, &alphabet, kind, 1.0).unwrap();
    let emission = if per_position {
        Emission::PerPosition(
            (0..alphabet.seq_len())
                .map(|_| sample_conditional_with(&mut rng, alphabet.x_size(), alphabet.c_size(), 1.0).unwrap())
                .collect(),
        )
    } else {
        Emission::Shared(sample_conditional_with(&mut rng, alphabet.x_size(), alphabet.c_size(), 1.0).unwrap())
    };
    JointDist::new(alphabet, prior, emission).unwrap()
}

pub fn random_cond(alphabet: &Alphabet, seed: u64) -> ConditionalTable {
    sample_conditional_with(&mut rng_from_seed(seed), alphabet.x_size(), alphabet.c_size(), 1.0).unwrap()
}
