//! CIFAR-10 binary ingestion, integer-factor resizing and PNG output.
//!
//! A CIFAR-10 record is 3073 bytes: one label byte followed by the red, green
//! and blue 32x32 planes in row-major order. Labels are read and dropped.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::bitcodec::PixelImage;
use crate::rng::{substream, Component};
use crate::{Error, Result};

pub const CIFAR_SIDE: usize = 32;
/// Upscaling from CIFAR-10 side length to the codec's 96x96 input.
pub const CODEC_UPSCALE: usize = 3;
pub const CIFAR_RECORD_BYTES: usize = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE;
pub const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const TEST_FILE: &str = "test_batch.bin";
const RECORDS_PER_FILE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSource {
    pub dir: PathBuf,
    pub split: Split,
}

impl DatasetSource {
    pub fn new(dir: impl Into<PathBuf>, split: Split) -> Self {
        DatasetSource {
            dir: dir.into(),
            split,
        }
    }

    /// Batch files of the split, in reading order. Missing trailing training
    /// batches are allowed; the first file of each split is required.
    fn files(&self) -> Result<Vec<PathBuf>> {
        let names: &[&str] = match self.split {
            Split::Train => &TRAIN_FILES,
            Split::Test => &[TEST_FILE],
        };
        let first = self.dir.join(names[0]);
        if !first.is_file() {
            return Err(Error::format(
                0,
                format!("missing dataset file {}", first.display()),
            ));
        }
        Ok(names
            .iter()
            .map(|n| self.dir.join(n))
            .take_while(|p| p.is_file())
            .collect())
    }
}

/// Reads up to `limit` images (32x32) in file order.
pub fn read_cifar10(source: &DatasetSource, limit: Option<usize>) -> Result<Vec<PixelImage>> {
    let limit = limit.unwrap_or(usize::MAX);
    let mut images = Vec::new();
    for path in source.files()? {
        if images.len() >= limit {
            break;
        }
        let len = fs::metadata(&path)?.len();
        if len % CIFAR_RECORD_BYTES as u64 != 0 {
            return Err(Error::format(
                len - len % CIFAR_RECORD_BYTES as u64,
                format!(
                    "{} is not a whole number of {CIFAR_RECORD_BYTES}-byte records",
                    path.display()
                ),
            ));
        }
        let mut reader = BufReader::new(File::open(&path)?);
        let mut record = [0u8; CIFAR_RECORD_BYTES];
        for _ in 0..len / CIFAR_RECORD_BYTES as u64 {
            if images.len() >= limit {
                break;
            }
            reader.read_exact(&mut record)?;
            images.push(PixelImage::new(3, CIFAR_SIDE, CIFAR_SIDE, record[1..].to_vec())?);
        }
    }
    Ok(images)
}

/// Nearest-neighbor upscaling: `out(y, x) = in(y / factor, x / factor)`.
pub fn resize_nn(img: &PixelImage, factor: usize) -> Result<PixelImage> {
    if factor == 0 {
        return Err(Error::config("resize factor must be a positive integer"));
    }
    let (c, h, w) = img.shape();
    let (oh, ow) = (h * factor, w * factor);
    let mut data = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                data.push(img.get(ch, y / factor, x / factor));
            }
        }
    }
    PixelImage::new(c, oh, ow, data)
}

/// Writes a 3-channel (RGB) or 1-channel (gray) image as 8-bit PNG.
pub fn write_image(img: &PixelImage, path: impl AsRef<Path>) -> Result<()> {
    let (c, h, w) = img.shape();
    let color = match c {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        _ => return Err(Error::dim(format!("cannot write a {c}-channel image as PNG"))),
    };
    let mut interleaved = Vec::with_capacity(c * h * w);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                interleaved.push(img.get(ch, y, x));
            }
        }
    }
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = png::Encoder::new(file, w as u32, h as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writer
        .write_image_data(&interleaved)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(())
}

/// Reads an 8-bit RGB or grayscale PNG back into channel-major form.
pub fn read_png(path: impl AsRef<Path>) -> Result<PixelImage> {
    let decoder = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(0, e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(0, e.to_string()))?;
    let c = match (info.color_type, info.bit_depth) {
        (png::ColorType::Rgb, png::BitDepth::Eight) => 3,
        (png::ColorType::Grayscale, png::BitDepth::Eight) => 1,
        other => return Err(Error::format(0, format!("unsupported PNG layout {other:?}"))),
    };
    let (h, w) = (info.height as usize, info.width as usize);
    let mut img = PixelImage::filled(c, h, w, 0);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                img.set(ch, y, x, buf[(y * w + x) * c + ch]);
            }
        }
    }
    Ok(img)
}

/// Renders one procedural 32x32 scene: a two-color gradient background with
/// a few flat ellipses and rectangles and mild sensor noise.
pub fn synthetic_scene<R: Rng + ?Sized>(rng: &mut R) -> PixelImage {
    let s = CIFAR_SIDE as f64;
    let mut color = || [rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0)];
    let (c0, c1) = (color(), color());
    let mut rgb = vec![[0.0f64; 3]; CIFAR_SIDE * CIFAR_SIDE];
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (dx, dy) = (angle.cos(), angle.sin());
    for y in 0..CIFAR_SIDE {
        for x in 0..CIFAR_SIDE {
            let t = (((x as f64 - s / 2.0) * dx + (y as f64 - s / 2.0) * dy) / s + 0.5).clamp(0.0, 1.0);
            for ch in 0..3 {
                rgb[y * CIFAR_SIDE + x][ch] = c0[ch] + (c1[ch] - c0[ch]) * t;
            }
        }
    }
    for _ in 0..rng.gen_range(1..=3) {
        let fill = [rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0)];
        let (cx, cy) = (rng.gen_range(4.0..s - 4.0), rng.gen_range(4.0..s - 4.0));
        let (rx, ry) = (rng.gen_range(3.0..11.0), rng.gen_range(3.0..11.0));
        let ellipse = rng.gen_bool(0.5);
        for y in 0..CIFAR_SIDE {
            for x in 0..CIFAR_SIDE {
                let (u, v) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                let inside = if ellipse { u * u + v * v <= 1.0 } else { u.abs() <= 1.0 && v.abs() <= 1.0 };
                if inside {
                    rgb[y * CIFAR_SIDE + x] = fill;
                }
            }
        }
    }
    let mut img = PixelImage::filled(3, CIFAR_SIDE, CIFAR_SIDE, 0);
    for y in 0..CIFAR_SIDE {
        for x in 0..CIFAR_SIDE {
            for ch in 0..3 {
                let v = rgb[y * CIFAR_SIDE + x][ch] + rng.gen_range(-3.0..3.0);
                img.set(ch, y, x, v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    img
}

fn write_records(path: &Path, images: &[PixelImage], labels: &[u8]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (img, &label) in images.iter().zip(labels) {
        out.write_all(&[label])?;
        out.write_all(img.data())?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a CIFAR-10-layout dataset of synthetic scenes for offline use.
///
/// Training records are spread over `data_batch_*.bin` files of at most
/// 10,000 records each (so at most 50,000 training images).
pub fn write_synthetic_cifar10(dir: impl AsRef<Path>, train: usize, test: usize, seed: u64) -> Result<()> {
    let dir = dir.as_ref();
    if train == 0 || test == 0 || train > RECORDS_PER_FILE * TRAIN_FILES.len() {
        return Err(Error::config(format!(
            "synthetic dataset needs 1..=50000 training and >=1 test images, got {train} / {test}"
        )));
    }
    fs::create_dir_all(dir)?;
    let make = |split: u64, count: usize| {
        (0..count)
            .map(|i| {
                let mut rng = substream(seed, Component::Synthetic, i as u64, split);
                let label = rng.gen_range(0..10u8);
                (synthetic_scene(&mut rng), label)
            })
            .unzip::<_, _, Vec<_>, Vec<_>>()
    };
    let (images, labels) = make(0, train);
    for (f, (imgs, labs)) in images
        .chunks(RECORDS_PER_FILE)
        .zip(labels.chunks(RECORDS_PER_FILE))
        .enumerate()
    {
        write_records(&dir.join(TRAIN_FILES[f]), imgs, labs)?;
    }
    let (images, labels) = make(1, test);
    write_records(&dir.join(TEST_FILE), &images, &labels)
}

/// Loads a split and upscales every image by `factor`.
pub fn load_scaled(source: &DatasetSource, limit: Option<usize>, factor: usize) -> Result<Vec<PixelImage>> {
    read_cifar10(source, limit)?
        .iter()
        .map(|img| resize_nn(img, factor))
        .collect()
}
