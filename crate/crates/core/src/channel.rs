//! BPSK over an additive white Gaussian noise channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::codec::Codeword;
use crate::factor::{DiscreteFactor, VariableId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("noise variance must be positive and finite, got {0}")]
    BadVariance(f64),
    #[error("bit energy must be positive and finite, got {0}")]
    BadEnergy(f64),
    #[error("code rate must lie in (0, 1), got {0}")]
    BadRate(f64),
    #[error("SNR must be finite, got {0}")]
    BadSnr(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    sigma2: f64,
    eb: f64,
    rate: f64,
}

impl ChannelConfig {
    pub fn new(sigma2: f64, eb: f64, rate: f64) -> Result<Self, ChannelError> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(ChannelError::BadVariance(sigma2));
        }
        if !(eb.is_finite() && eb > 0.0) {
            return Err(ChannelError::BadEnergy(eb));
        }
        if !(rate > 0.0 && rate < 1.0) {
            return Err(ChannelError::BadRate(rate));
        }
        Ok(Self { sigma2, eb, rate })
    }

    /// Unit bit energy and the noise variance that gives `snr_db` at `rate`.
    pub fn from_snr_db(snr_db: f64, rate: f64) -> Result<Self, ChannelError> {
        if !snr_db.is_finite() {
            return Err(ChannelError::BadSnr(snr_db));
        }
        let eb = 1.0;
        Self::new(eb / (2.0 * rate * 10f64.powf(snr_db / 10.0)), eb, rate)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn eb(&self) -> f64 {
        self.eb
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Rate-compensated SNR, `10 log10(Eb / (2 R sigma^2))`.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.eb / (2.0 * self.rate * self.sigma2)).log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedVector {
    pub samples: Vec<f64>,
}

/// BPSK symbol of a bit: 0 maps to +1, 1 to -1.
pub fn bpsk(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Adds independent zero-mean Gaussian noise of variance `sigma2` to each
/// symbol. The noise depends only on `seed`.
pub fn transmit(c: &Codeword, cfg: &ChannelConfig, seed: u64) -> ReceivedVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = cfg.sigma2.sqrt();
    let samples = c
        .bits
        .iter()
        .map(|&b| {
            let g: f64 = rng.sample(StandardNormal);
            bpsk(b) + sigma * g
        })
        .collect();
    ReceivedVector { samples }
}

/// `P(b = 0 | x)` for equiprobable bits, i.e. the logistic function of the
/// log-likelihood ratio `2x / sigma^2`.
pub fn prob_zero(x: f64, sigma2: f64) -> f64 {
    let llr = 2.0 * x / sigma2;
    if llr >= 0.0 {
        1.0 / (1.0 + (-llr).exp())
    } else {
        let e = llr.exp();
        e / (1.0 + e)
    }
}

/// Normalized binary likelihood factor for bit `n` of the received vector.
/// The less likely state is clamped to the smallest normal float so that no
/// state is ever exactly zero; the two probabilities always sum to one.
pub fn likelihood_evidence(x: &ReceivedVector, cfg: &ChannelConfig) -> Vec<DiscreteFactor> {
    x.samples
        .iter()
        .enumerate()
        .map(|(n, &xn)| {
            let small = prob_zero(-xn.abs(), cfg.sigma2).max(f64::MIN_POSITIVE);
            let large = 1.0 - small;
            let (p0, p1) = if xn >= 0.0 { (large, small) } else { (small, large) };
            DiscreteFactor::binary_unary(VariableId::from(n), p0, p1).expect("finite positive likelihoods")
        })
        .collect()
}
