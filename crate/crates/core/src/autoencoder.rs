//! The semantic auto-encoder: a two-layer strided conv encoder mirrored by a
//! two-layer transposed conv decoder, trained as a denoiser on clean targets.
//!
//! Default architecture on `3 x 96 x 96` inputs:
//!
//! | layer | filters | kernel | stride | output       | activation |
//! |-------|---------|--------|--------|--------------|------------|
//! | conv  | 27      | 4x4    | 2      | 27 x 47 x 47 | relu       |
//! | conv  | 16      | 3x3    | 2      | 16 x 23 x 23 | relu       |
//! | tconv | 27      | 3x3    | 2      | 27 x 47 x 47 | relu       |
//! | tconv | 3       | 4x4    | 2      | 3 x 96 x 96  | sigmoid    |
//!
//! That is 10,441 parameters, about 41.8 kB as 32-bit floats.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bitcodec::PixelImage;
use crate::nncore::{
    adam_step, load_weights, mse_loss, save_weights, Activation, AdamConfig, ConvLayerSpec, LayerKind,
    LayerState, Sequential, Shape4, Tensor4,
};
use crate::rng::{substream, Component};
use crate::{Error, Result};

/// `(channels, height, width)`
pub type Chw = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticCodecSpec {
    pub encoder_layers: Vec<ConvLayerSpec>,
    pub decoder_layers: Vec<ConvLayerSpec>,
    pub input_shape: Chw,
    pub latent_shape: Chw,
}

fn propagate(layers: &[ConvLayerSpec], from: Chw) -> Result<Chw> {
    let mut shape = from;
    for l in layers {
        let (h, w) = l.output_hw(shape.1, shape.2)?;
        shape = (l.filters, h, w);
    }
    Ok(shape)
}

impl SemanticCodecSpec {
    /// Checks that the decoder maps the latent back onto the input shape.
    pub fn new(encoder_layers: Vec<ConvLayerSpec>, decoder_layers: Vec<ConvLayerSpec>, input_shape: Chw) -> Result<Self> {
        if encoder_layers.is_empty() || decoder_layers.is_empty() {
            return Err(Error::config("codec needs encoder and decoder layers"));
        }
        if encoder_layers.iter().any(|l| l.kind != LayerKind::Conv)
            || decoder_layers.iter().any(|l| l.kind != LayerKind::TransposedConv)
        {
            return Err(Error::config("encoder must be conv layers, decoder transposed conv layers"));
        }
        let latent_shape = propagate(&encoder_layers, input_shape)?;
        let restored = propagate(&decoder_layers, latent_shape)?;
        if restored != input_shape {
            return Err(Error::dim(format!(
                "decoder maps latent {latent_shape:?} to {restored:?}, expected {input_shape:?}"
            )));
        }
        Ok(SemanticCodecSpec {
            encoder_layers,
            decoder_layers,
            input_shape,
            latent_shape,
        })
    }

    pub fn default_spec() -> Self {
        Self::new(
            vec![
                ConvLayerSpec::conv(27, 4, 2, Activation::Relu),
                ConvLayerSpec::conv(16, 3, 2, Activation::Relu),
            ],
            vec![
                ConvLayerSpec::tconv(27, 3, 2, Activation::Relu),
                ConvLayerSpec::tconv(3, 4, 2, Activation::Sigmoid),
            ],
            (3, 96, 96),
        )
        .expect("default codec geometry is consistent")
    }

    /// Latent size over input size.
    pub fn compression_ratio(&self) -> f64 {
        let (a, b, c) = self.latent_shape;
        let (x, y, z) = self.input_shape;
        (a * b * c) as f64 / (x * y * z) as f64
    }

    fn layers(&self) -> impl Iterator<Item = &ConvLayerSpec> {
        self.encoder_layers.iter().chain(&self.decoder_layers)
    }
}

/// A codec architecture together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticCodec {
    spec: SemanticCodecSpec,
    model: Sequential<f32>,
}

impl SemanticCodec {
    /// Fresh fan-in scaled uniform initialization.
    pub fn new(spec: SemanticCodecSpec, seed: u64) -> Result<Self> {
        let mut rng = substream(seed, Component::WeightInit, 0, 0);
        let mut in_c = spec.input_shape.0;
        let mut layers = Vec::new();
        for l in spec.layers() {
            layers.push(LayerState::init_uniform(*l, in_c, &mut rng)?);
            in_c = l.filters;
        }
        Ok(SemanticCodec {
            model: Sequential::new(layers)?,
            spec,
        })
    }

    /// Wraps loaded parameters, splitting encoder and decoder at the first
    /// transposed conv layer.
    pub fn from_model(model: Sequential<f32>, input_shape: Chw) -> Result<Self> {
        let split = model
            .layers
            .iter()
            .position(|l| l.spec.kind == LayerKind::TransposedConv)
            .ok_or_else(|| Error::config("model has no decoder layers"))?;
        let specs: Vec<ConvLayerSpec> = model.layers.iter().map(|l| l.spec).collect();
        let spec = SemanticCodecSpec::new(specs[..split].to_vec(), specs[split..].to_vec(), input_shape)?;
        if model.layers[0].in_channels != input_shape.0 {
            return Err(Error::dim(format!(
                "model expects {} input channels, codec input has {}",
                model.layers[0].in_channels, input_shape.0
            )));
        }
        Ok(SemanticCodec { spec, model })
    }

    pub fn load(path: impl AsRef<Path>, input_shape: Chw) -> Result<Self> {
        Self::from_model(load_weights(path)?, input_shape)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_weights(&self.model, path)
    }

    pub fn spec(&self) -> &SemanticCodecSpec {
        &self.spec
    }

    pub fn model(&self) -> &Sequential<f32> {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut Sequential<f32> {
        &mut self.model
    }

    pub fn param_count(&self) -> usize {
        self.model.param_count()
    }

    fn expect_input(&self, shape: Shape4) -> Result<()> {
        let (c, h, w) = self.spec.input_shape;
        if (shape.c, shape.h, shape.w) != (c, h, w) {
            return Err(Error::dim(format!(
                "codec expects (n,{c},{h},{w}) input, got {shape}"
            )));
        }
        Ok(())
    }

    /// Latent features of `x`.
    pub fn encode(&self, x: &Tensor4<f32>) -> Result<Tensor4<f32>> {
        self.expect_input(x.shape())?;
        let mut y = x.clone();
        for l in &self.model.layers[..self.spec.encoder_layers.len()] {
            y = l.forward(&y)?;
        }
        Ok(y)
    }

    /// Encoder then decoder, with the output clamped to `[0, 1]`.
    pub fn forward(&self, x: &Tensor4<f32>) -> Result<Tensor4<f32>> {
        self.expect_input(x.shape())?;
        let y = self.model.forward(x)?;
        if !y.all_finite() {
            return Err(Error::Numeric("codec produced non-finite output".into()));
        }
        Ok(y.map(|v| v.clamp(0.0, 1.0)))
    }

    /// Runs one 8-bit image through the codec and re-quantizes the result.
    pub fn denoise_image(&self, img: &PixelImage) -> Result<PixelImage> {
        let out = self.forward(&images_to_tensor(&[img])?)?;
        tensor_to_image(&out, 0)
    }
}

pub fn build_default_codec(seed: u64) -> Result<SemanticCodec> {
    SemanticCodec::new(SemanticCodecSpec::default_spec(), seed)
}

/// The semantic stage `F_S` on image-domain input.
pub fn codec_forward(codec: &SemanticCodec, image: &Tensor4<f32>) -> Result<Tensor4<f32>> {
    codec.forward(image)
}

/// Stacks 8-bit images into a `[0, 1]` tensor.
pub fn images_to_tensor(images: &[&PixelImage]) -> Result<Tensor4<f32>> {
    let first = images
        .first()
        .ok_or_else(|| Error::dim("no images to stack"))?
        .shape();
    let mut data = Vec::with_capacity(images.len() * first.0 * first.1 * first.2);
    for img in images {
        if img.shape() != first {
            return Err(Error::dim(format!(
                "mixed image shapes {:?} and {:?}",
                first,
                img.shape()
            )));
        }
        data.extend(img.data().iter().map(|&v| v as f32 / 255.0));
    }
    Tensor4::from_vec(Shape4::new(images.len(), first.0, first.1, first.2), data)
}

/// Sample `i` of a `[0, 1]` tensor rounded back to 8 bits.
pub fn tensor_to_image(t: &Tensor4<f32>, i: usize) -> Result<PixelImage> {
    let s = t.shape();
    if i >= s.n {
        return Err(Error::dim(format!("sample {i} out of range for {s}")));
    }
    let data = t
        .sample(i)
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    PixelImage::new(s.c, s.h, s.w, data)
}

/// Noise injected at the codec input during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorruptionSpec {
    None,
    /// Per image, draw `p` uniformly from `[low, high]` and flip every bit of
    /// the 8-bit quantized pixels independently with probability `p`.
    BitFlip { low: f64, high: f64 },
    /// Additive `N(0, sigma^2)` on the `[0, 1]` scale, then clamp.
    Gaussian { sigma: f64 },
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        CorruptionSpec::BitFlip {
            low: 0.001,
            high: 0.05,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CorruptionSpec::None => Ok(()),
            CorruptionSpec::BitFlip { low, high } => {
                if (0.0..=high).contains(&low) && high <= 0.5 {
                    Ok(())
                } else {
                    Err(Error::config(format!("bit-flip range ({low}, {high}) must satisfy 0 <= low <= high <= 0.5")))
                }
            }
            CorruptionSpec::Gaussian { sigma } => {
                if sigma >= 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config(format!("gaussian sigma {sigma} must be >= 0")))
                }
            }
        }
    }
}

/// Flips each bit of `bytes` with probability `p`, skipping ahead by
/// geometric gaps so the cost scales with the number of flips.
pub fn flip_bits<R: Rng + ?Sized>(bytes: &mut [u8], p: f64, rng: &mut R) {
    if p <= 0.0 {
        return;
    }
    let total = bytes.len() * 8;
    if p >= 1.0 {
        bytes.iter_mut().for_each(|b| *b = !*b);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut pos = 0usize;
    loop {
        let u: f64 = rng.gen();
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !gap.is_finite() || gap >= (total - pos) as f64 {
            break;
        }
        pos += gap as usize;
        bytes[pos / 8] ^= 0x80 >> (pos % 8);
        pos += 1;
        if pos >= total {
            break;
        }
    }
}

/// Applies `spec` to every sample of a `[0, 1]` tensor.
pub fn corrupt_for_training<R: Rng + ?Sized>(image: &Tensor4<f32>, spec: &CorruptionSpec, rng: &mut R) -> Tensor4<f32> {
    let mut out = image.clone();
    let n = image.shape().n;
    match *spec {
        CorruptionSpec::None => {}
        CorruptionSpec::BitFlip { low, high } => {
            for i in 0..n {
                let p = if high > low { rng.gen_range(low..=high) } else { low };
                let sample = out.sample_mut(i);
                let mut bytes: Vec<u8> = sample.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
                flip_bits(&mut bytes, p, rng);
                for (v, b) in sample.iter_mut().zip(bytes) {
                    *v = b as f32 / 255.0;
                }
            }
        }
        CorruptionSpec::Gaussian { sigma } => {
            for v in out.data_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v = (*v + (sigma * z) as f32).clamp(0.0, 1.0);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingProfile {
    /// 2,000 images, 20 epochs.
    Desk,
    /// 50,000 images, 200 epochs.
    Paper,
}

impl TrainingProfile {
    pub fn train_images(self) -> usize {
        match self {
            TrainingProfile::Desk => 2_000,
            TrainingProfile::Paper => 50_000,
        }
    }

    pub fn epochs(self) -> usize {
        match self {
            TrainingProfile::Desk => 20,
            TrainingProfile::Paper => 200,
        }
    }
}

impl std::str::FromStr for TrainingProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(TrainingProfile::Desk),
            "paper" => Ok(TrainingProfile::Paper),
            other => Err(Error::config(format!("unknown profile {other:?} (desk|paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub corruption: CorruptionSpec,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.003,
            batch_size: 64,
            epochs: 200,
            corruption: CorruptionSpec::default(),
            seed: 1,
        }
    }
}

impl TrainingConfig {
    pub fn for_profile(profile: TrainingProfile, seed: u64) -> Self {
        TrainingConfig {
            epochs: profile.epochs(),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::config("batch size and epoch count must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        self.corruption.validate()
    }
}

/// Mean training loss per epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epoch_losses: Vec<f64>,
}

impl TrainingLog {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,mean_loss")?;
        for (i, l) in self.epoch_losses.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, l)?;
        }
        Ok(())
    }
}

/// Minimizes `mse(codec(corrupt(x)), x)` with Adam.
///
/// Shuffles every epoch and keeps the final partial batch. The optional
/// callback sees `(epoch, mean_loss)` after each epoch.
pub fn train(
    codec: &mut SemanticCodec,
    dataset: &[PixelImage],
    cfg: &TrainingConfig,
    mut on_epoch: Option<&mut dyn FnMut(usize, f64)>,
) -> Result<TrainingLog> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::config("training dataset is empty"));
    }
    let adam = AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let mut shuffle_rng = substream(cfg.seed, Component::Training, 0, 0);
    let mut corrupt_rng = substream(cfg.seed, Component::Corruption, 0, 0);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut log = TrainingLog::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let imgs: Vec<&PixelImage> = batch.iter().map(|&i| &dataset[i]).collect();
            let clean = images_to_tensor(&imgs)?;
            codec.expect_input(clean.shape())?;
            let noisy = corrupt_for_training(&clean, &cfg.corruption, &mut corrupt_rng);
            let model = &mut codec.model;
            let cache = model.forward_cached(&noisy)?;
            let (loss, grad) = mse_loss(&cache.output, &clean)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("training loss became {loss}")));
            }
            model.backward(&cache, &grad)?;
            adam_step(&mut model.layers, &adam);
            total += loss * batch.len() as f64;
        }
        let mean = total / dataset.len() as f64;
        log.epoch_losses.push(mean);
        if let Some(cb) = on_epoch.as_mut() {
            cb(epoch + 1, mean);
        }
    }
    Ok(log)
}
