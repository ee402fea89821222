//! Image-quality and information metrics.

use crate::bitcodec::PixelImage;
use crate::{Error, Result};

/// Minimum sample count accepted by [`mi_gain_empirical`].
pub const MI_MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub ber: f64,
    pub ed: f64,
    /// `f64::INFINITY` for identical images.
    pub psnr: f64,
}

impl MetricReport {
    pub fn compare(sent_bits: &[u8], recovered_bits: &[u8], a: &PixelImage, b: &PixelImage) -> Result<Self> {
        Ok(MetricReport {
            ber: ber(sent_bits, recovered_bits)?,
            ed: euclidean_distance(a, b)?,
            psnr: psnr(a, b)?,
        })
    }
}

/// Fraction of differing positions.
pub fn ber(sent: &[u8], recovered: &[u8]) -> Result<f64> {
    if sent.len() != recovered.len() {
        return Err(Error::dim(format!(
            "BER over {} vs {} bits",
            sent.len(),
            recovered.len()
        )));
    }
    if sent.is_empty() {
        return Ok(0.0);
    }
    let errors = sent.iter().zip(recovered).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / sent.len() as f64)
}

fn squared_error(a: &PixelImage, b: &PixelImage) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!(
            "image shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum())
}

/// Un-normalized L2 distance over all samples on the 0..=255 scale.
pub fn euclidean_distance(a: &PixelImage, b: &PixelImage) -> Result<f64> {
    Ok(squared_error(a, b)?.sqrt())
}

pub fn mse(a: &PixelImage, b: &PixelImage) -> Result<f64> {
    let n = a.data().len().max(1) as f64;
    Ok(squared_error(a, b)? / n)
}

/// `10 log10(255^2 / MSE)`, infinite for identical images.
pub fn psnr(a: &PixelImage, b: &PixelImage) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Mutual information of a binary pair estimated from its 2x2 histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitMutualInformation {
    pub bits: f64,
    /// One side was constant, so the estimate was forced to 0.
    pub degenerate: bool,
}

/// Plug-in estimate of `I(X; Y)` in bits for binary sequences.
pub fn bit_mutual_information(x: &[u8], y: &[u8]) -> Result<BitMutualInformation> {
    if x.len() != y.len() {
        return Err(Error::dim(format!(
            "mutual information over {} vs {} samples",
            x.len(),
            y.len()
        )));
    }
    let mut joint = [[0u64; 2]; 2];
    for (&a, &b) in x.iter().zip(y) {
        joint[(a & 1) as usize][(b & 1) as usize] += 1;
    }
    let n = x.len() as f64;
    let px = [
        (joint[0][0] + joint[0][1]) as f64 / n,
        (joint[1][0] + joint[1][1]) as f64 / n,
    ];
    let py = [
        (joint[0][0] + joint[1][0]) as f64 / n,
        (joint[0][1] + joint[1][1]) as f64 / n,
    ];
    if x.is_empty() || px.contains(&0.0) || py.contains(&0.0) {
        return Ok(BitMutualInformation {
            bits: 0.0,
            degenerate: true,
        });
    }
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let p = count as f64 / n;
            mi += p * (p / (px[i] * py[j])).log2();
        }
    }
    Ok(BitMutualInformation {
        bits: mi.max(0.0),
        degenerate: false,
    })
}

/// `I(X; X_S)`, `I(X; X_C)` and their difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiGain {
    pub mi_semantic: f64,
    pub mi_channel_only: f64,
    pub gain: f64,
    pub degenerate: bool,
}

/// Mutual-information gain of the semantic receiver over channel-only decoding.
pub fn mi_gain_empirical(sent: &[u8], semantic: &[u8], channel_only: &[u8]) -> Result<MiGain> {
    if sent.len() < MI_MIN_SAMPLES {
        return Err(Error::dim(format!(
            "mutual information needs at least {MI_MIN_SAMPLES} bits, got {}",
            sent.len()
        )));
    }
    let s = bit_mutual_information(sent, semantic)?;
    let c = bit_mutual_information(sent, channel_only)?;
    Ok(MiGain {
        mi_semantic: s.bits,
        mi_channel_only: c.bits,
        gain: s.bits - c.bits,
        degenerate: s.degenerate || c.degenerate,
    })
}
