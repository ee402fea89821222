//! The turbo receiver.
//!
//! Each outer round runs sum-product decoding on every block with the fixed
//! channel LLRs plus the current a priori LLRs, hard-decides the message bits
//! into an image, passes that image through the semantic codec, and turns the
//! codec output back into a priori LLRs of magnitude `alpha` on the message
//! positions for the next round. With `alpha = 0` this is plain LDPC
//! decoding repeated `T` times.

use rayon::prelude::*;

use crate::autoencoder::{Chw, SemanticCodec};
use crate::bitcodec::{dequantize_bits, frame_image, quantize_image, FrameLayout, PixelImage};
use crate::ldpc::{bp_decode, encode, BpOutput, SystematicCode};
use crate::metrics::{ber, euclidean_distance, psnr};
use crate::phy::{channel_llr, transmit, transmit_noiseless, SnrConfig};
use crate::rng::{substream, Component};
use crate::{Error, Result};

/// Which codeword positions receive semantic a priori information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AprioriScope {
    /// Message positions only; parity and padding get 0.
    SystematicOnly,
    /// Also the parity bits of the re-encoded semantic estimate.
    AllBits,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurboConfig {
    pub outer_rounds: usize,
    pub inner_bp_iters: usize,
    pub apriori_magnitude: f64,
    pub apply_apriori_to: AprioriScope,
    /// Stop once the channel-decoded image repeats; later trace rounds copy
    /// the last one.
    pub early_stop: bool,
}

impl Default for TurboConfig {
    fn default() -> Self {
        TurboConfig {
            outer_rounds: 7,
            inner_bp_iters: 10,
            apriori_magnitude: 0.75,
            apply_apriori_to: AprioriScope::SystematicOnly,
            early_stop: false,
        }
    }
}

impl TurboConfig {
    /// The no-SemantIC reference: same schedule, zero a priori.
    pub fn baseline(&self) -> Self {
        TurboConfig {
            apriori_magnitude: 0.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_rounds == 0 || self.inner_bp_iters == 0 {
            return Err(Error::config("turbo rounds and BP iterations must be at least 1"));
        }
        if !(self.apriori_magnitude >= 0.0) || !self.apriori_magnitude.is_finite() {
            return Err(Error::config(format!(
                "a priori magnitude {} must be finite and non-negative",
                self.apriori_magnitude
            )));
        }
        Ok(())
    }
}

/// An image encoded into LDPC codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittedImage {
    pub shape: Chw,
    pub layout: FrameLayout,
    pub codewords: Vec<Vec<u8>>,
}

/// Quantizes, frames into `k`-bit messages and encodes every block.
pub fn encode_image(img: &PixelImage, code: &SystematicCode) -> Result<TransmittedImage> {
    if code.k() == 0 {
        return Err(Error::config("code carries no message bits"));
    }
    let frame = frame_image(&quantize_image(img), code.k())?;
    let codewords = frame
        .blocks()
        .map(|m| encode(code, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(TransmittedImage {
        shape: img.shape(),
        layout: frame.layout(),
        codewords,
    })
}

/// Channel LLRs of every block of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedImage {
    pub shape: Chw,
    pub layout: FrameLayout,
    pub channel_llr: Vec<Vec<f64>>,
}

/// Sends every codeword through BPSK/AWGN. Block `b` of image `i` always
/// draws from substream `(seed, i, b)`, so paired runs see identical noise.
pub fn transmit_image(
    tx: &TransmittedImage,
    snr: &SnrConfig,
    seed: u64,
    image_index: u64,
    noiseless: bool,
) -> ReceivedImage {
    let channel_llr = tx
        .codewords
        .iter()
        .enumerate()
        .map(|(b, cw)| {
            let y = if noiseless {
                transmit_noiseless(cw)
            } else {
                let mut rng = substream(seed, Component::Channel, image_index, b as u64);
                transmit(cw, snr, &mut rng)
            };
            channel_llr(&y, snr)
        })
        .collect();
    ReceivedImage {
        shape: tx.shape,
        layout: tx.layout,
        channel_llr,
    }
}

/// Hard decision (bit 1 iff LLR < 0) on the message positions of every block,
/// padding removed, dequantized.
pub fn posterior_to_image(
    posteriors: &[Vec<f64>],
    code: &SystematicCode,
    layout: &FrameLayout,
    shape: Chw,
) -> Result<PixelImage> {
    if posteriors.len() != layout.block_count {
        return Err(Error::dim(format!(
            "{} posterior blocks for a frame of {}",
            posteriors.len(),
            layout.block_count
        )));
    }
    if layout.block_size != code.k() {
        return Err(Error::dim(format!(
            "frame blocks of {} bits, code has k = {}",
            layout.block_size,
            code.k()
        )));
    }
    let mut bits = Vec::with_capacity(layout.block_count * layout.block_size);
    for p in posteriors {
        if p.len() != code.n() {
            return Err(Error::dim(format!("posterior of {} values, n = {}", p.len(), code.n())));
        }
        bits.extend(code.message_positions().iter().map(|&i| u8::from(p[i] < 0.0)));
    }
    bits.truncate(layout.original_bit_count);
    dequantize_bits(&bits, shape)
}

/// Maps a denoised image to per-block a priori LLRs: `alpha * (1 - 2b)` on
/// every payload message bit, zero on padding (and on parity in
/// systematic-only mode).
pub fn image_to_apriori(
    denoised: &PixelImage,
    code: &SystematicCode,
    layout: &FrameLayout,
    cfg: &TurboConfig,
) -> Result<Vec<Vec<f64>>> {
    let bits = quantize_image(denoised);
    if bits.len() != layout.original_bit_count || layout.block_size != code.k() {
        return Err(Error::dim(format!(
            "image of {} bits does not match frame of {} bits in {}-bit blocks (k = {})",
            bits.len(),
            layout.original_bit_count,
            layout.block_size,
            code.k()
        )));
    }
    let frame = frame_image(&bits, layout.block_size)?;
    let alpha = cfg.apriori_magnitude;
    let llr = |b: u8| if b == 0 { alpha } else { -alpha };
    let mut out = Vec::with_capacity(layout.block_count);
    for (i, block) in frame.blocks().enumerate() {
        let payload = layout.payload_in_block(i);
        let mut prior = vec![0.0; code.n()];
        if cfg.apply_apriori_to == AprioriScope::AllBits {
            let cw = encode(code, block)?;
            for &p in code.parity_positions() {
                prior[p] = llr(cw[p]);
            }
        }
        for (j, &p) in code.message_positions().iter().enumerate().take(payload) {
            prior[p] = llr(block[j]);
        }
        out.push(prior);
    }
    Ok(out)
}

/// Metrics of one outer round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Channel-decoded image vs. source.
    pub ber: f64,
    pub ed: f64,
    pub psnr: f64,
    /// Semantic-decoder output vs. source; absent when the stage is disabled.
    pub ed_sem: Option<f64>,
    pub psnr_sem: Option<f64>,
    pub bp_converged: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    pub rounds: Vec<RoundRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboOutcome {
    /// Channel-decoded image after the last round.
    pub final_image: PixelImage,
    /// Codec output after the last round.
    pub semantic_image: Option<PixelImage>,
    pub trace: IterationTrace,
    /// Channel-decoded image of every round.
    pub round_images: Vec<PixelImage>,
    pub round_semantic_images: Vec<PixelImage>,
}

fn decode_blocks(
    rx: &ReceivedImage,
    code: &SystematicCode,
    apriori: &[Vec<f64>],
    previous: Option<(&[Vec<f64>], &[BpOutput])>,
    iters: usize,
) -> Result<Vec<BpOutput>> {
    rx.channel_llr
        .par_iter()
        .zip(apriori.par_iter())
        .enumerate()
        .map(|(b, (ch, ap))| {
            // decoding is a pure function of its inputs
            if let Some((prev_ap, prev_out)) = previous {
                if prev_ap[b] == *ap {
                    return Ok(prev_out[b].clone());
                }
            }
            bp_decode(code.parity(), ch, ap, iters)
        })
        .collect()
}

/// Runs `T` outer rounds. `reference` is the source image, used only for the
/// trace metrics. Passing `None` for the codec disables the semantic stage,
/// which is only valid with `alpha = 0`.
pub fn run_turbo_decode(
    rx: &ReceivedImage,
    code: &SystematicCode,
    codec: Option<&SemanticCodec>,
    cfg: &TurboConfig,
    reference: &PixelImage,
) -> Result<TurboOutcome> {
    cfg.validate()?;
    if codec.is_none() && cfg.apriori_magnitude > 0.0 {
        return Err(Error::config("semantic a priori requested without a loaded codec"));
    }
    if rx.channel_llr.len() != rx.layout.block_count {
        return Err(Error::dim(format!(
            "{} received blocks for a frame of {}",
            rx.channel_llr.len(),
            rx.layout.block_count
        )));
    }
    if reference.shape() != rx.shape {
        return Err(Error::dim(format!(
            "reference image {:?} vs received shape {:?}",
            reference.shape(),
            rx.shape
        )));
    }
    let sent_bits = quantize_image(reference);
    let mut apriori = vec![vec![0.0; code.n()]; rx.layout.block_count];
    let mut previous: Option<(Vec<Vec<f64>>, Vec<BpOutput>)> = None;
    let mut trace = IterationTrace::default();
    let mut round_images: Vec<PixelImage> = Vec::new();
    let mut round_semantic_images = Vec::new();

    for round in 1..=cfg.outer_rounds {
        if cfg.early_stop && round_images.len() >= 2 {
            let n = round_images.len();
            if round_images[n - 1] == round_images[n - 2] {
                let mut last = trace.rounds.last().cloned().expect("at least one round ran");
                last.round = round;
                trace.rounds.push(last);
                round_images.push(round_images[n - 1].clone());
                if let Some(s) = round_semantic_images.last().cloned() {
                    round_semantic_images.push(s);
                }
                continue;
            }
        }
        let outputs = decode_blocks(
            rx,
            code,
            &apriori,
            previous.as_ref().map(|(a, o)| (a.as_slice(), o.as_slice())),
            cfg.inner_bp_iters,
        )?;
        let posteriors: Vec<Vec<f64>> = outputs.iter().map(|o| o.posterior.clone()).collect();
        let image = posterior_to_image(&posteriors, code, &rx.layout, rx.shape)?;
        let decoded_bits = quantize_image(&image);

        let (ed_sem, psnr_sem, next) = match codec {
            Some(codec) => {
                let sem = codec.denoise_image(&image)?;
                let metrics = (euclidean_distance(reference, &sem)?, psnr(reference, &sem)?);
                let next = image_to_apriori(&sem, code, &rx.layout, cfg)?;
                round_semantic_images.push(sem);
                (Some(metrics.0), Some(metrics.1), next)
            }
            None => (None, None, apriori.clone()),
        };

        trace.rounds.push(RoundRecord {
            round,
            ber: ber(&sent_bits, &decoded_bits)?,
            ed: euclidean_distance(reference, &image)?,
            psnr: psnr(reference, &image)?,
            ed_sem,
            psnr_sem,
            bp_converged: outputs.iter().map(|o| o.converged).collect(),
        });
        round_images.push(image);
        previous = Some((std::mem::replace(&mut apriori, next), outputs));
    }

    Ok(TurboOutcome {
        final_image: round_images.last().cloned().expect("outer_rounds >= 1"),
        semantic_image: round_semantic_images.last().cloned(),
        trace,
        round_images,
        round_semantic_images,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::build_default_codec;
    use crate::ldpc::{construct_regular_code, systematize, CodeSpec};

    fn code() -> SystematicCode {
        systematize(&construct_regular_code(&CodeSpec::default()).unwrap())
    }

    fn small_image() -> PixelImage {
        let data = (0..3 * 8 * 8).map(|i| (i * 37 % 256) as u8).collect();
        PixelImage::new(3, 8, 8, data).unwrap()
    }

    #[test]
    fn posterior_sign_rule() {
        let code = code();
        let layout = FrameLayout::for_bits(8, code.k()).unwrap();
        let post = vec![vec![5.0; 900]];
        let img = posterior_to_image(&post, &code, &layout, (1, 1, 1)).unwrap();
        assert_eq!(img.data(), &[0]);
        let mut tie = vec![-5.0; 900];
        tie[code.message_positions()[0]] = 0.0;
        let img = posterior_to_image(&[tie], &code, &layout, (1, 1, 1)).unwrap();
        assert_eq!(img.data(), &[0b0111_1111]);
        assert!(posterior_to_image(&[], &code, &layout, (1, 1, 1)).is_err());
    }

    #[test]
    fn apriori_sign_map_and_zero_positions() {
        let code = code();
        let img = small_image();
        let tx = encode_image(&img, &code).unwrap();
        let cfg = TurboConfig::default();
        let prior = image_to_apriori(&img, &code, &tx.layout, &cfg).unwrap();
        let bits = quantize_image(&img);
        for (b, block) in prior.iter().enumerate() {
            for &p in code.parity_positions() {
                assert_eq!(block[p], 0.0);
            }
            for (j, &p) in code.message_positions().iter().enumerate() {
                let g = b * code.k() + j;
                let expect = if g >= bits.len() {
                    0.0
                } else if bits[g] == 0 {
                    0.75
                } else {
                    -0.75
                };
                assert_eq!(block[p], expect);
            }
        }
        let zero = image_to_apriori(&img, &code, &tx.layout, &cfg.baseline()).unwrap();
        assert!(zero.iter().flatten().all(|&v| v == 0.0));
        assert!(image_to_apriori(&PixelImage::filled(3, 4, 4, 0), &code, &tx.layout, &cfg).is_err());
    }

    #[test]
    fn all_bits_scope_covers_parity() {
        let code = code();
        let img = small_image();
        let tx = encode_image(&img, &code).unwrap();
        let cfg = TurboConfig { apply_apriori_to: AprioriScope::AllBits, ..TurboConfig::default() };
        let prior = image_to_apriori(&img, &code, &tx.layout, &cfg).unwrap();
        for (block, cw) in prior.iter().zip(&tx.codewords) {
            for &p in code.parity_positions() {
                assert_eq!(block[p], if cw[p] == 0 { 0.75 } else { -0.75 });
            }
        }
    }

    #[test]
    fn noiseless_link_is_exact_every_round() {
        let code = code();
        let img = small_image();
        let tx = encode_image(&img, &code).unwrap();
        let rx = transmit_image(&tx, &SnrConfig::new(0.0).unwrap(), 1, 0, true);
        let codec = build_default_codec(3).unwrap();
        let out = run_turbo_decode(&rx, &code, None, &TurboConfig::default().baseline(), &img).unwrap();
        assert_eq!(out.final_image, img);
        assert_eq!(out.trace.rounds.len(), 7);
        assert!(out.trace.rounds.iter().all(|r| r.ber == 0.0 && r.psnr.is_infinite()));
        // an untrained codec cannot undo a noiseless first round
        let small_codec_err = run_turbo_decode(&rx, &code, Some(&codec), &TurboConfig::default(), &img);
        assert!(small_codec_err.is_err(), "8x8 image does not fit the 96x96 codec");
    }

    #[test]
    fn missing_codec_with_alpha_is_a_config_error() {
        let code = code();
        let img = small_image();
        let tx = encode_image(&img, &code).unwrap();
        let rx = transmit_image(&tx, &SnrConfig::new(0.0).unwrap(), 1, 0, false);
        let r = run_turbo_decode(&rx, &code, None, &TurboConfig::default(), &img);
        assert!(matches!(r, Err(Error::Config(_))));
        let bad = TurboConfig { outer_rounds: 0, ..TurboConfig::default() };
        assert!(bad.validate().is_err());
    }
}
