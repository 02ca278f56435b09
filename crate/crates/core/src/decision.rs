//! Bayes and model-based decision rules and the classification error
//! mismatch between them.

use serde::{Deserialize, Serialize};

use crate::prob::{JointDist, PositionJoints};
use crate::{Error, Result};

/// Position-wise argmax rule over the position joints of a source
/// distribution. Ties go to the lowest label id.
#[derive(Debug, Clone)]
pub struct DecisionRule {
    joints: PositionJoints,
}

impl DecisionRule {
    pub fn new(source: &JointDist) -> Result<Self> {
        Ok(Self { joints: source.position_joints()? })
    }

    pub fn from_joints(joints: PositionJoints) -> Self {
        Self { joints }
    }

    pub fn joints(&self) -> &PositionJoints {
        &self.joints
    }

    pub fn decide(&self, x_seq: &[usize]) -> Result<Vec<usize>> {
        let space = self.joints.space();
        if x_seq.len() != space.len() {
            return Err(Error::LengthMismatch { left: x_seq.len(), right: space.len() });
        }
        if let Some(&x) = x_seq.iter().find(|&&x| x >= space.base()) {
            return Err(Error::IndexOutOfRange(format!("observation id {x}")));
        }
        Ok(self.decide_index(space.encode(x_seq)))
    }

    pub fn decide_index(&self, x_index: usize) -> Vec<usize> {
        (0..self.joints.seq_len()).map(|n| argmax_lowest(self.joints.at(x_index, n))).collect()
    }
}

pub fn decide(rule: &DecisionRule, x_seq: &[usize]) -> Result<Vec<usize>> {
    rule.decide(x_seq)
}

/// Index of the maximum; the first one wins on exact ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Averaged Hamming distance between two label sequences.
pub fn hamming_error(c_seq: &[usize], c_ref: &[usize]) -> Result<f64> {
    if c_seq.len() != c_ref.len() {
        return Err(Error::LengthMismatch { left: c_seq.len(), right: c_ref.len() });
    }
    if c_seq.is_empty() {
        return Ok(0.0);
    }
    let wrong = c_seq.iter().zip(c_ref).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / c_seq.len() as f64)
}

/// Per-position error mismatch and its average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub local: Vec<f64>,
    pub averaged: f64,
}

/// Exact classification error mismatch of `model_dist`'s decision rule
/// against the Bayes rule of `true_dist`, evaluated under `true_dist`.
pub fn mismatch(true_dist: &JointDist, model_dist: &JointDist) -> Result<MismatchReport> {
    if true_dist.alphabet() != model_dist.alphabet() {
        return Err(Error::AlphabetMismatch("true and model alphabets differ".into()));
    }
    mismatch_from_joints(&true_dist.position_joints()?, &model_dist.position_joints()?)
}

pub fn mismatch_from_joints(truth: &PositionJoints, model: &PositionJoints) -> Result<MismatchReport> {
    truth.check_same_shape(model)?;
    let n_len = truth.seq_len();
    let mut local = vec![0.0; n_len];
    for xi in 0..truth.space().count() {
        for (n, slot) in local.iter_mut().enumerate() {
            let t = truth.at(xi, n);
            let bayes = argmax_lowest(t);
            let chosen = argmax_lowest(model.at(xi, n));
            *slot += t[bayes] - t[chosen];
        }
    }
    let averaged = local.iter().sum::<f64>() / n_len as f64;
    Ok(MismatchReport { local, averaged })
}
