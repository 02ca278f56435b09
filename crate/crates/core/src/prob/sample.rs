use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::{Alphabet, ConditionalTable, LabelPrior, PriorKind};
use crate::{Error, Result};

/// The generator behind every seeded sampler in the crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a master seed and an index into an independent per-item seed
/// (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One draw from the symmetric Dirichlet distribution of dimension `k`.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize, concentration: f64) -> Result<Vec<f64>> {
    if !(concentration > 0.0) || !concentration.is_finite() {
        return Err(Error::InvalidConfig(format!("concentration {concentration} must be positive")));
    }
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    loop {
        let mut draw: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draw.iter().sum();
        // small concentrations can underflow every component
        if sum > 0.0 && sum.is_finite() {
            draw.iter_mut().for_each(|v| *v /= sum);
            return Ok(draw);
        }
    }
}

/// Conditional table with independent symmetric-Dirichlet columns.
pub fn sample_conditional(alphabet: &Alphabet, rng_seed: u64, concentration: f64) -> Result<ConditionalTable> {
    sample_conditional_with(&mut rng_from_seed(rng_seed), alphabet.x_size(), alphabet.c_size(), concentration)
}

pub fn sample_conditional_with<R: Rng + ?Sized>(
    rng: &mut R,
    x_size: usize,
    c_size: usize,
    concentration: f64,
) -> Result<ConditionalTable> {
    let columns = (0..c_size).map(|_| dirichlet(rng, x_size, concentration)).collect::<Result<Vec<_>>>()?;
    Ok(ConditionalTable::from_columns_unchecked(&columns))
}

/// Random prior of the requested family with unit Dirichlet concentration.
pub fn sample_prior(alphabet: &Alphabet, kind: PriorKind, rng_seed: u64) -> Result<LabelPrior> {
    sample_prior_with(&mut rng_from_seed(rng_seed), alphabet, kind, 1.0)
}

pub fn sample_prior_with<R: Rng + ?Sized>(
    rng: &mut R,
    alphabet: &Alphabet,
    kind: PriorKind,
    concentration: f64,
) -> Result<LabelPrior> {
    let (c, n) = (alphabet.c_size(), alphabet.seq_len());
    match kind {
        PriorKind::Dense => {
            let space = alphabet.c_space();
            let probs = dirichlet(rng, space.count(), concentration)?;
            Ok(LabelPrior::Dense { c_size: c, seq_len: n, probs })
        }
        PriorKind::PositionUnigram => {
            let tables = (0..n).map(|_| dirichlet(rng, c, concentration)).collect::<Result<_>>()?;
            Ok(LabelPrior::PositionUnigram { tables })
        }
        PriorKind::Bigram => {
            let initial = dirichlet(rng, c, concentration)?;
            let transition = (0..c).map(|_| dirichlet(rng, c, concentration)).collect::<Result<_>>()?;
            Ok(LabelPrior::Bigram { seq_len: n, initial, transition })
        }
    }
}
