//! Alphabets, dense probability tables, and the factorized joint and
//! marginal distributions built from them.
//!
//! Positions are 0-based in code and 1-based in user-facing messages.
//! Sequences are enumerated in mixed-radix order with position 0 as the most
//! significant digit.

mod alphabet;
mod dist;
mod prior;
mod sample;
mod table;

pub use alphabet::{Alphabet, SeqSpace, DEFAULT_ENUMERATION_CAP};
pub use dist::{marginal_x, position_joint, Emission, JointDist, PositionJoints, SequenceDist};
pub use prior::{LabelPrior, PriorKind};
pub use sample::{
    derive_seed, dirichlet, rng_from_seed, sample_conditional, sample_conditional_with, sample_prior,
    sample_prior_with, SimRng,
};
pub use table::{make_conditional, ConditionalTable};

/// Tolerance for normalization checks on constructed tables.
pub const CONSTRUCTION_TOL: f64 = 1e-10;
/// Tolerance for normalization of derived quantities.
pub const DERIVED_TOL: f64 = 1e-9;
/// Column or row sums further than this from 1 are rejected unless the
/// caller asks for normalization.
pub const ACCEPT_TOL: f64 = 1e-6;

/// Validates a probability vector and rescales it unless it already sums to
/// 1 within the construction tolerance.
pub(crate) fn normalize_checked(what: &str, values: &mut [f64], normalize: bool) -> crate::Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(crate::Error::NegativeEntry { location: format!("{what}[{i}]"), value: v });
        }
    }
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 {
        return Err(crate::Error::NotNormalized { what: what.to_string(), sum });
    }
    if !normalize && (sum - 1.0).abs() > ACCEPT_TOL {
        return Err(crate::Error::NotNormalized { what: what.to_string(), sum });
    }
    if normalize || (sum - 1.0).abs() > CONSTRUCTION_TOL {
        values.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}
