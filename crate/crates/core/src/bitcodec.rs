//! Pixel/bit quantization and LDPC block framing.
//!
//! Bytes are emitted MSB-first in natural binary, channel-major then
//! row-major. Framing zero-pads the bit stream up to a whole number of
//! `k`-bit LDPC messages; padding never enters BER or image metrics.

use crate::{Error, Result};

/// 8-bit image stored channel-major, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PixelImage {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl PixelImage {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::dim(format!(
                "image {channels}x{height}x{width} needs {} samples, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(PixelImage {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: u8) -> Self {
        PixelImage {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> u8 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: u8) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn bit_count(&self) -> usize {
        self.data.len() * 8
    }
}

/// Expands every byte MSB-first into one `0`/`1` entry per bit.
pub fn quantize_image(img: &PixelImage) -> Vec<u8> {
    bytes_to_bits(img.data())
}

pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for shift in (0..8).rev() {
            bits.push((b >> shift) & 1);
        }
    }
    bits
}

pub fn bits_to_bytes(bits: &[u8]) -> Result<Vec<u8>> {
    if bits.len() % 8 != 0 {
        return Err(Error::dim(format!(
            "bit count {} is not a multiple of 8",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect())
}

/// Inverse of [`quantize_image`] for an image of the given shape.
pub fn dequantize_bits(bits: &[u8], shape: (usize, usize, usize)) -> Result<PixelImage> {
    let (c, h, w) = shape;
    if bits.len() != c * h * w * 8 {
        return Err(Error::dim(format!(
            "{} bits do not match image {c}x{h}x{w} ({} bits)",
            bits.len(),
            c * h * w * 8
        )));
    }
    PixelImage::new(c, h, w, bits_to_bytes(bits)?)
}

/// A bit stream zero-padded to `block_count * block_size` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFrame {
    bits: Vec<u8>,
    original_bit_count: usize,
    block_size: usize,
}

/// Framing metadata without the payload, as known to a receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub original_bit_count: usize,
    pub block_size: usize,
    pub block_count: usize,
}

impl FrameLayout {
    pub fn for_bits(bit_count: usize, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::config("block size must be at least 1"));
        }
        Ok(FrameLayout {
            original_bit_count: bit_count,
            block_size,
            block_count: bit_count.div_ceil(block_size),
        })
    }

    /// Number of payload (non-padding) bits carried by block `i`.
    pub fn payload_in_block(&self, i: usize) -> usize {
        self.original_bit_count
            .saturating_sub(i * self.block_size)
            .min(self.block_size)
    }
}

impl BitFrame {
    pub fn layout(&self) -> FrameLayout {
        FrameLayout {
            original_bit_count: self.original_bit_count,
            block_size: self.block_size,
            block_count: self.block_count(),
        }
    }

    pub fn original_bit_count(&self) -> usize {
        self.original_bit_count
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn block_count(&self) -> usize {
        self.bits.len() / self.block_size
    }

    pub fn padded_bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn block(&self, i: usize) -> &[u8] {
        &self.bits[i * self.block_size..(i + 1) * self.block_size]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks_exact(self.block_size)
    }

    pub fn payload_in_block(&self, i: usize) -> usize {
        self.layout().payload_in_block(i)
    }
}

/// Splits `bits` into `k`-bit blocks, zero-padding the last one.
pub fn frame_image(bits: &[u8], k: usize) -> Result<BitFrame> {
    if k == 0 {
        return Err(Error::config("block size must be at least 1"));
    }
    let blocks = bits.len().div_ceil(k);
    let mut padded = Vec::with_capacity(blocks * k);
    padded.extend_from_slice(bits);
    padded.resize(blocks * k, 0);
    Ok(BitFrame {
        bits: padded,
        original_bit_count: bits.len(),
        block_size: k,
    })
}

/// Drops the padding.
pub fn deframe(frame: &BitFrame) -> Vec<u8> {
    frame.bits[..frame.original_bit_count].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_expansion() {
        assert_eq!(bytes_to_bits(&[0]), vec![0; 8]);
        assert_eq!(bytes_to_bits(&[170]), vec![1, 0, 1, 0, 1, 0, 1, 0]);
        assert_eq!(bits_to_bytes(&[1; 8]).unwrap(), vec![255]);
        let img = PixelImage::filled(3, 96, 96, 9);
        assert_eq!(quantize_image(&img).len(), 221_184);
    }

    #[test]
    fn msb_flip_moves_pixel_by_128() {
        let img = PixelImage::new(1, 1, 1, vec![37]).unwrap();
        let mut bits = quantize_image(&img);
        bits[0] ^= 1;
        assert_eq!(dequantize_bits(&bits, (1, 1, 1)).unwrap().data(), &[165]);
    }

    #[test]
    fn all_byte_values_round_trip() {
        let bytes: Vec<u8> = (0..=255).collect();
        let img = PixelImage::new(1, 16, 16, bytes).unwrap();
        assert_eq!(dequantize_bits(&quantize_image(&img), (1, 16, 16)).unwrap(), img);
    }

    #[test]
    fn length_mismatch() {
        assert!(dequantize_bits(&[0; 16], (1, 1, 1)).is_err());
        assert!(bits_to_bytes(&[0; 7]).is_err());
    }

    #[test]
    fn framing_arithmetic() {
        let f = frame_image(&vec![1; 221_184], 301).unwrap();
        assert_eq!(f.block_count(), 735);
        assert_eq!(f.padded_bits().len(), 221_235);
        assert!(f.padded_bits()[221_184..].iter().all(|&b| b == 0));
        assert_eq!(f.payload_in_block(734), 221_184 - 734 * 301);

        let f = frame_image(&[1; 7], 7).unwrap();
        assert_eq!(f.block_count(), 1);
        assert_eq!(f.payload_in_block(0), 7);

        let f = frame_image(&[], 5).unwrap();
        assert_eq!(f.block_count(), 0);
        assert!(deframe(&f).is_empty());

        assert!(frame_image(&[1], 0).is_err());
    }

    proptest! {
        #[test]
        fn frame_deframe_identity(
            bits in prop::collection::vec(0u8..2, 0..10_000),
            k in prop::sample::select(vec![1usize, 7, 300, 301]),
        ) {
            let f = frame_image(&bits, k).unwrap();
            prop_assert_eq!(f.padded_bits().len() % k, 0);
            prop_assert_eq!(deframe(&f), bits);
        }
    }
}
