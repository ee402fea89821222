use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semantic_turbo::bitcodec::{
    bits_to_bytes, bytes_to_bits, deframe, dequantize_bits, frame_image, quantize_image, PixelImage,
};
use semantic_turbo::metrics::{ber, bit_mutual_information, euclidean_distance, mi_gain_empirical, psnr, psnr_from_mse};
use semantic_turbo::phy::{channel_llr, hard_decision, transmit, SnrConfig};
use semantic_turbo::rng::{substream, Component};

const SAMPLES: usize = 1_000_000;

/// Standard normal tail, via the complementary error function series of
/// Abramowitz-Stegun 7.1.26 (|error| < 1.5e-7).
fn q_function(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.327_591_1 * z);
    let poly = t * (0.254_829_592 + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    0.5 * poly * (-z * z).exp()
}

#[test]
fn uncoded_ber_at_zero_db_matches_q_of_one() {
    let snr = SnrConfig::new(0.0).unwrap();
    let mut rng = substream(1, Component::Channel, 0, 0);
    let bits: Vec<u8> = (0..SAMPLES).map(|i| (i % 2) as u8).collect();
    let y = transmit(&bits, &snr, &mut rng);
    let errors = ber(&bits, &hard_decision(&y)).unwrap();
    let expect = q_function(1.0);
    assert!((expect - 0.158_655).abs() < 1e-5);
    assert!((errors - expect).abs() < 0.002, "{errors} vs {expect}");
}

#[test]
fn noise_variance_matches_sigma2() {
    for snr_db in [-5.0, 0.0, 8.0] {
        let snr = SnrConfig::new(snr_db).unwrap();
        let mut rng = substream(2, Component::Channel, 0, 0);
        let y = transmit(&vec![0u8; SAMPLES], &snr, &mut rng);
        let var = y.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() / SAMPLES as f64;
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        assert!((snr.sigma2() - sigma2).abs() < 1e-12);
        assert!((var / sigma2 - 1.0).abs() < 0.01, "snr {snr_db}: {var} vs {sigma2}");
    }
}

/// Empirical `P(bit = 0 | LLR ~ L)` against the logistic curve, binned.
#[test]
fn llrs_are_calibrated() {
    let snr = SnrConfig::new(0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bits: Vec<u8> = (0..SAMPLES).map(|_| rng.gen_range(0..2)).collect();
    let mut ch = substream(3, Component::Channel, 0, 0);
    let llr = channel_llr(&transmit(&bits, &snr, &mut ch), &snr);
    let width = 0.25;
    let mut zeros = vec![0usize; 32];
    let mut total = vec![0usize; 32];
    for (&b, &l) in bits.iter().zip(&llr) {
        if l.abs() < 4.0 {
            let k = ((l + 4.0) / width) as usize;
            total[k] += 1;
            zeros[k] += usize::from(b == 0);
        }
    }
    for k in 0..32 {
        let centre = -4.0 + (k as f64 + 0.5) * width;
        let expect = 1.0 / (1.0 + (-centre).exp());
        let got = zeros[k] as f64 / total[k] as f64;
        assert!((got - expect).abs() < 0.02, "bin {centre}: {got} vs {expect}");
    }
}

#[test]
fn llr_sign_follows_received_sign() {
    let snr = SnrConfig::new(-3.0).unwrap();
    let mut rng = substream(4, Component::Channel, 0, 0);
    let y = transmit(&vec![1u8; 10_000], &snr, &mut rng);
    for (l, v) in channel_llr(&y, &snr).iter().zip(&y) {
        assert_eq!(l.is_sign_negative(), v.is_sign_negative());
    }
}

fn binary_entropy(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[test]
fn bsc_mutual_information_matches_capacity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<u8> = (0..SAMPLES).map(|_| rng.gen_range(0..2)).collect();
    let y: Vec<u8> = x.iter().map(|&b| b ^ u8::from(rng.gen_bool(0.11))).collect();
    let mi = bit_mutual_information(&x, &y).unwrap();
    let capacity = 1.0 - binary_entropy(0.11);
    assert!((capacity - 0.5).abs() < 0.001);
    assert!((mi.bits - capacity).abs() < 0.01, "{} vs {capacity}", mi.bits);
    assert!(!mi.degenerate);
}

#[test]
fn mi_gain_is_the_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x: Vec<u8> = (0..20_000).map(|_| rng.gen_range(0..2)).collect();
    let s: Vec<u8> = x.iter().map(|&b| b ^ u8::from(rng.gen_bool(0.05))).collect();
    let c: Vec<u8> = x.iter().map(|&b| b ^ u8::from(rng.gen_bool(0.2))).collect();
    let g = mi_gain_empirical(&x, &s, &c).unwrap();
    assert_eq!(g.gain, g.mi_semantic - g.mi_channel_only);
    assert!(g.gain > 0.0);
    assert!(mi_gain_empirical(&x[..100], &s[..100], &c[..100]).is_err());
}

#[test]
fn metric_closed_forms() {
    let a = PixelImage::filled(3, 96, 96, 10);
    let b = PixelImage::filled(3, 96, 96, 11);
    assert!((euclidean_distance(&a, &b).unwrap() - 27_648f64.sqrt()).abs() < 1e-9);
    assert!((psnr_from_mse(1.0) - 20.0 * 255f64.log10()).abs() < 1e-12);
    assert_eq!(psnr_from_mse(255.0 * 255.0), 0.0);
    assert!(psnr(&a, &a).unwrap().is_infinite());
    let mut c = a.clone();
    c.set(1, 5, 5, 255);
    assert_eq!(euclidean_distance(&a, &c).unwrap(), 245.0);
    let mut bits = vec![0u8; 300];
    bits[0] = 1;
    bits[100] = 1;
    bits[299] = 1;
    assert!((ber(&vec![0; 300], &bits).unwrap() - 0.01).abs() < 1e-15);
}

#[test]
fn every_byte_round_trips_through_bits() {
    let bytes: Vec<u8> = (0..=255).collect();
    let bits = bytes_to_bits(&bytes);
    assert_eq!(bits.len(), 256 * 8);
    assert_eq!(&bits[8 * 0x80..8 * 0x81], &[1, 0, 0, 0, 0, 0, 0, 0]);
    assert_eq!(bits_to_bytes(&bits).unwrap(), bytes);
}

proptest! {
    #[test]
    fn frame_round_trip(len in 0usize..10_000, k in prop::sample::select(vec![1usize, 7, 300, 301]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2)).collect();
        let frame = frame_image(&bits, k).unwrap();
        prop_assert_eq!(frame.padded_bits().len() % k, 0);
        prop_assert_eq!(deframe(&frame), bits);
    }

    #[test]
    fn ber_over_payload_ignores_padding(len in 1usize..3_000, k in 1usize..400, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sent: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2)).collect();
        let recv: Vec<u8> = sent.iter().map(|&b| b ^ u8::from(rng.gen_bool(0.1))).collect();
        let fs = frame_image(&sent, k).unwrap();
        let mut padded = frame_image(&recv, k).unwrap().padded_bits().to_vec();
        // corrupt padding: must not matter once deframed
        for b in padded.iter_mut().skip(len) {
            *b ^= 1;
        }
        let errors_in_payload = fs.padded_bits()[..len].iter().zip(&padded[..len]).filter(|(a, b)| a != b).count();
        prop_assert_eq!(ber(&sent, &recv).unwrap(), errors_in_payload as f64 / len as f64);
    }

    #[test]
    fn metrics_are_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = PixelImage::new(3, 4, 4, (0..48).map(|_| rng.gen()).collect()).unwrap();
        let b = PixelImage::new(3, 4, 4, (0..48).map(|_| rng.gen()).collect()).unwrap();
        prop_assert_eq!(euclidean_distance(&a, &b).unwrap(), euclidean_distance(&b, &a).unwrap());
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        let (qa, qb) = (quantize_image(&a), quantize_image(&b));
        prop_assert_eq!(ber(&qa, &qb).unwrap(), ber(&qb, &qa).unwrap());
        prop_assert_eq!(dequantize_bits(&qa, (3, 4, 4)).unwrap(), a);
    }

    #[test]
    fn psnr_decreases_with_mse(m1 in 1e-6f64..1e5, d in 1e-6f64..1e4) {
        prop_assert!(psnr_from_mse(m1) > psnr_from_mse(m1 + d));
    }

    #[test]
    fn mutual_information_is_bounded(seed in any::<u64>(), p in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<u8> = (0..20_000).map(|_| u8::from(rng.gen_bool(0.3))).collect();
        let y: Vec<u8> = x.iter().map(|&b| b ^ u8::from(rng.gen_bool(p))).collect();
        let mi = bit_mutual_information(&x, &y).unwrap().bits;
        let h = |v: &[u8]| binary_entropy(v.iter().filter(|&&b| b == 1).count() as f64 / v.len() as f64);
        prop_assert!(mi >= 0.0);
        prop_assert!(mi <= h(&x).min(h(&y)) + 0.01);
    }
}
