//! BPSK over AWGN.
//!
//! SNR is `Es / N0` with unit symbol energy: `sigma^2 = 10^(-snr_db / 10)`.
//! Bit 0 maps to `+1`, bit 1 to `-1`, and positive LLRs favor bit 0.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrConfig {
    pub snr_db: f64,
}

impl SnrConfig {
    pub fn new(snr_db: f64) -> Result<Self> {
        let cfg = SnrConfig { snr_db };
        if !snr_db.is_finite() || !(cfg.sigma2() > 0.0) || !cfg.sigma2().is_finite() {
            return Err(Error::config(format!("unusable SNR {snr_db} dB")));
        }
        Ok(cfg)
    }

    /// Noise variance per real dimension.
    pub fn sigma2(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

pub fn bpsk_symbol(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Modulates `bits` and adds white Gaussian noise of variance `sigma^2`.
pub fn transmit<R: Rng + ?Sized>(bits: &[u8], snr: &SnrConfig, rng: &mut R) -> Vec<f64> {
    let sigma = snr.sigma2().sqrt();
    bits.iter()
        .map(|&b| {
            let n: f64 = rng.sample(StandardNormal);
            bpsk_symbol(b) + sigma * n
        })
        .collect()
}

/// Noise-free modulation.
pub fn transmit_noiseless(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| bpsk_symbol(b)).collect()
}

/// `2 y / sigma^2`.
pub fn channel_llr(received: &[f64], snr: &SnrConfig) -> Vec<f64> {
    let scale = 2.0 / snr.sigma2();
    received.iter().map(|&y| scale * y).collect()
}

pub fn hard_decision(received: &[f64]) -> Vec<u8> {
    received.iter().map(|&y| u8::from(y < 0.0)).collect()
}
