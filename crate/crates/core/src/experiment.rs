//! Paired Monte-Carlo experiments: the semantic receiver and the α = 0
//! baseline decode the same channel realization of every image.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::autoencoder::SemanticCodec;
use crate::bitcodec::{quantize_image, PixelImage};
use crate::dataio::write_image;
use crate::ldpc::{CodeSpec, SystematicCode};
use crate::metrics::{mi_gain_empirical, MiGain};
use crate::phy::SnrConfig;
use crate::semantic_turbo::{encode_image, run_turbo_decode, transmit_image, TurboConfig, TurboOutcome};
use crate::{Error, Result};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "SEMANTIC_TURBO_THREADS";

pub const ROW_HEADER: &str = "snr_db,image_idx,round,ber_ic,ber_noic,ed_ic,ed_noic,psnr_ic,psnr_noic,ed_sem,psnr_sem";
pub const AGGREGATE_HEADER: &str =
    "snr_db,images,round,ber_ic,ber_noic,ed_ic,ed_noic,psnr_ic,psnr_noic,ed_sem,psnr_sem,mi_s,mi_c,mi_gain";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub snr_db: Vec<f64>,
    pub images: usize,
    pub turbo: TurboConfig,
    pub code: CodeSpec,
    /// Skip the semantic run; IC columns are left empty.
    pub baseline_only: bool,
    /// Replace the AWGN channel by exact ±1 symbols.
    pub noiseless: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 2024,
            snr_db: snr_range(-5.0, 8.0, 1.0).expect("static range"),
            images: 20,
            turbo: TurboConfig::default(),
            code: CodeSpec::default(),
            baseline_only: false,
            noiseless: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::config("SNR list is empty"));
        }
        if self.images == 0 {
            return Err(Error::config("image count must be at least 1"));
        }
        for &s in &self.snr_db {
            SnrConfig::new(s)?;
        }
        self.code.validate()?;
        self.turbo.validate()
    }
}

/// Inclusive arithmetic range `from, from + step, ..., <= to`.
pub fn snr_range(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !from.is_finite() || !to.is_finite() || to < from {
        return Err(Error::config(format!("bad SNR range {from}..{to} step {step}")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

/// One CSV row: metrics of both receivers after one outer round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRow {
    pub snr_db: f64,
    pub image_idx: usize,
    pub round: usize,
    pub ber_ic: Option<f64>,
    pub ber_noic: f64,
    pub ed_ic: Option<f64>,
    pub ed_noic: f64,
    pub psnr_ic: Option<f64>,
    pub psnr_noic: f64,
    pub ed_sem: Option<f64>,
    pub psnr_sem: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageResult {
    pub image_idx: usize,
    pub rows: Vec<RoundRow>,
    pub ic: Option<TurboOutcome>,
    pub noic: TurboOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub images: Vec<ImageResult>,
    /// Pooled over all images of the point; absent in baseline-only runs.
    pub mi: Option<MiGain>,
}

/// Per-SNR means at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub snr_db: f64,
    pub images: usize,
    pub round: usize,
    pub ber_ic: Option<f64>,
    pub ber_noic: f64,
    pub ed_ic: Option<f64>,
    pub ed_noic: f64,
    pub psnr_ic: Option<f64>,
    pub psnr_noic: f64,
    pub ed_sem: Option<f64>,
    pub psnr_sem: Option<f64>,
    pub mi: Option<MiGain>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(v.into_iter()))
}

impl PointResult {
    pub fn rows(&self) -> impl Iterator<Item = &RoundRow> {
        self.images.iter().flat_map(|i| i.rows.iter())
    }

    /// Means over images of the rows of round `round` (1-based).
    pub fn aggregate(&self, round: usize) -> Result<AggregateRow> {
        let rows: Vec<&RoundRow> = self.rows().filter(|r| r.round == round).collect();
        if rows.is_empty() {
            return Err(Error::config(format!("no rows for round {round}")));
        }
        Ok(AggregateRow {
            snr_db: self.snr_db,
            images: rows.len(),
            round,
            ber_ic: mean_opt(rows.iter().map(|r| r.ber_ic)),
            ber_noic: mean(rows.iter().map(|r| r.ber_noic)),
            ed_ic: mean_opt(rows.iter().map(|r| r.ed_ic)),
            ed_noic: mean(rows.iter().map(|r| r.ed_noic)),
            psnr_ic: mean_opt(rows.iter().map(|r| r.psnr_ic)),
            psnr_noic: mean(rows.iter().map(|r| r.psnr_noic)),
            ed_sem: mean_opt(rows.iter().map(|r| r.ed_sem)),
            psnr_sem: mean_opt(rows.iter().map(|r| r.psnr_sem)),
            mi: self.mi,
        })
    }

    /// Aggregate at the last round.
    pub fn final_aggregate(&self) -> Result<AggregateRow> {
        let last = self.rows().map(|r| r.round).max().unwrap_or(0);
        self.aggregate(last)
    }
}

/// Encodes, transmits and decodes one image with both receivers.
pub fn simulate_image(
    code: &SystematicCode,
    codec: Option<&SemanticCodec>,
    image: &PixelImage,
    image_idx: usize,
    snr_db: f64,
    cfg: &ExperimentConfig,
) -> Result<ImageResult> {
    let snr = SnrConfig::new(snr_db)?;
    let tx = encode_image(image, code)?;
    let rx = transmit_image(&tx, &snr, cfg.master_seed, image_idx as u64, cfg.noiseless);
    let noic = run_turbo_decode(&rx, code, None, &cfg.turbo.baseline(), image)?;
    let ic = if cfg.baseline_only {
        None
    } else {
        let codec = codec.ok_or_else(|| Error::config("semantic run requested without model weights"))?;
        Some(run_turbo_decode(&rx, code, Some(codec), &cfg.turbo, image)?)
    };
    let rows = noic
        .trace
        .rounds
        .iter()
        .enumerate()
        .map(|(i, base)| {
            let sem = ic.as_ref().map(|o| &o.trace.rounds[i]);
            RoundRow {
                snr_db,
                image_idx,
                round: base.round,
                ber_ic: sem.map(|r| r.ber),
                ber_noic: base.ber,
                ed_ic: sem.map(|r| r.ed),
                ed_noic: base.ed,
                psnr_ic: sem.map(|r| r.psnr),
                psnr_noic: base.psnr,
                ed_sem: sem.and_then(|r| r.ed_sem),
                psnr_sem: sem.and_then(|r| r.psnr_sem),
            }
        })
        .collect();
    Ok(ImageResult { image_idx, rows, ic, noic })
}

/// Runs every image at one SNR. Images are processed in parallel; results
/// keep image order.
pub fn simulate_point(
    code: &SystematicCode,
    codec: Option<&SemanticCodec>,
    images: &[PixelImage],
    snr_db: f64,
    cfg: &ExperimentConfig,
) -> Result<PointResult> {
    let results = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| simulate_image(code, codec, img, i, snr_db, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mi = if cfg.baseline_only {
        None
    } else {
        let mut sent = Vec::new();
        let mut sem = Vec::new();
        let mut chan = Vec::new();
        for (r, img) in results.iter().zip(images) {
            sent.extend(quantize_image(img));
            sem.extend(quantize_image(&r.ic.as_ref().expect("semantic run present").final_image));
            chan.extend(quantize_image(&r.noic.final_image));
        }
        Some(mi_gain_empirical(&sent, &sem, &chan)?)
    };
    Ok(PointResult { snr_db, images: results, mi })
}

/// One [`simulate_point`] per configured SNR on a shared image set.
pub fn sweep(
    code: &SystematicCode,
    codec: Option<&SemanticCodec>,
    images: &[PixelImage],
    cfg: &ExperimentConfig,
) -> Result<Vec<PointResult>> {
    cfg.validate()?;
    if images.len() < cfg.images {
        return Err(Error::config(format!(
            "{} images requested, {} available",
            cfg.images,
            images.len()
        )));
    }
    let images = &images[..cfg.images];
    cfg.snr_db
        .iter()
        .map(|&s| simulate_point(code, codec, images, s, cfg))
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn write_rows_csv<W: Write>(mut out: W, points: &[PointResult]) -> Result<()> {
    writeln!(out, "{ROW_HEADER}")?;
    for r in points.iter().flat_map(|p| p.rows()) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt(r.snr_db),
            r.image_idx,
            r.round,
            fmt_opt(r.ber_ic),
            fmt(r.ber_noic),
            fmt_opt(r.ed_ic),
            fmt(r.ed_noic),
            fmt_opt(r.psnr_ic),
            fmt(r.psnr_noic),
            fmt_opt(r.ed_sem),
            fmt_opt(r.psnr_sem),
        )?;
    }
    Ok(())
}

/// Writes the last-round aggregate of every SNR point.
pub fn write_aggregate_csv<W: Write>(mut out: W, points: &[PointResult]) -> Result<()> {
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for p in points {
        let a = p.final_aggregate()?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(a.snr_db),
            a.images,
            a.round,
            fmt_opt(a.ber_ic),
            fmt(a.ber_noic),
            fmt_opt(a.ed_ic),
            fmt(a.ed_noic),
            fmt_opt(a.psnr_ic),
            fmt(a.psnr_noic),
            fmt_opt(a.ed_sem),
            fmt_opt(a.psnr_sem),
            fmt_opt(a.mi.map(|m| m.mi_semantic)),
            fmt_opt(a.mi.map(|m| m.mi_channel_only)),
            fmt_opt(a.mi.map(|m| m.gain)),
        )?;
    }
    Ok(())
}

/// Path of the aggregate file next to a per-round CSV: `x.csv` -> `x.agg.csv`.
pub fn aggregate_path(csv: &Path) -> std::path::PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}.agg.csv"))
}

/// Writes `src`, and per round `noIC`, `IC` and `Sem` images of every image.
pub fn dump_images(dir: &Path, point: &PointResult, sources: &[PixelImage]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let tag = format!("snr{}", fmt(point.snr_db));
    for res in &point.images {
        let base = format!("{tag}_img{}", res.image_idx);
        write_image(&sources[res.image_idx], dir.join(format!("{base}_src.png")))?;
        for (r, img) in res.noic.round_images.iter().enumerate() {
            write_image(img, dir.join(format!("{base}_iter{}_noIC.png", r + 1)))?;
        }
        if let Some(ic) = &res.ic {
            for (r, img) in ic.round_images.iter().enumerate() {
                write_image(img, dir.join(format!("{base}_iter{}_IC.png", r + 1)))?;
            }
            for (r, img) in ic.round_semantic_images.iter().enumerate() {
                write_image(img, dir.join(format!("{base}_iter{}_Sem.png", r + 1)))?;
            }
        }
    }
    Ok(())
}

/// Reads the worker cap from [`THREADS_ENV`]; unset means no cap.
pub fn thread_cap_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Parses flat `key = value` text. `#` starts a comment; blank lines are
/// skipped; later keys override earlier ones.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            return Err(Error::config(format!("line {}: empty key", lineno + 1)));
        }
        out.retain(|(old, _)| *old != k);
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}
