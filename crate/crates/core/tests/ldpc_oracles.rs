use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semantic_turbo::ldpc::{
    bp_decode, construct_regular_code, encode, parse_alist, syndrome_check, systematize, to_alist, CodeSpec,
    ParityMatrix, SystematicCode, LLR_CLIP,
};

fn toy() -> SystematicCode {
    systematize(&construct_regular_code(&CodeSpec { n: 6, dv: 2, dc: 3, seed: 3 }).unwrap())
}

fn default_code() -> SystematicCode {
    systematize(&construct_regular_code(&CodeSpec::default()).unwrap())
}

fn all_words(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..1u32 << n).map(move |m| (0..n).map(|i| ((m >> i) & 1) as u8).collect())
}

fn correlation(word: &[u8], llr: &[f64]) -> f64 {
    word.iter().zip(llr).map(|(&b, l)| if b == 0 { *l } else { -l }).sum()
}

fn ml_score(h: &ParityMatrix, llr: &[f64]) -> f64 {
    all_words(h.n())
        .filter(|w| syndrome_check(h, w).unwrap())
        .map(|w| correlation(&w, llr))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn toy_code_codewords_all_satisfy_checks() {
    let code = toy();
    let h = code.parity();
    let words: Vec<Vec<u8>> = all_words(6).filter(|w| syndrome_check(h, w).unwrap()).collect();
    assert_eq!(words.len(), 1 << code.k());
    for msg in all_words(code.k()) {
        let cw = encode(&code, &msg).unwrap();
        assert!(words.contains(&cw));
        assert_eq!(code.extract_message(&cw), msg);
    }
}

#[test]
fn single_flip_with_strong_evidence_is_ml_corrected() {
    let code = toy();
    for msg in all_words(code.k()) {
        let cw = encode(&code, &msg).unwrap();
        for flip in 0..6 {
            let llr: Vec<f64> = cw
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let mag = if i == flip { 1.0 } else { 6.0 };
                    let sign = if (b == 1) != (i == flip) { -1.0 } else { 1.0 };
                    sign * mag
                })
                .collect();
            let out = bp_decode(code.parity(), &llr, &[0.0; 6], 20).unwrap();
            assert!(out.converged);
            assert_eq!(out.hard_bits, cw, "msg {msg:?} flip {flip}");
            assert_eq!(correlation(&out.hard_bits, &llr), ml_score(code.parity(), &llr));
        }
    }
}

#[test]
fn a_priori_on_systematic_bits_resolves_parity() {
    let code = toy();
    let mut prior = [0.0; 6];
    for &p in code.message_positions() {
        prior[p] = 8.0;
    }
    let out = bp_decode(code.parity(), &[0.0; 6], &prior, 20).unwrap();
    assert!(out.converged);
    assert_eq!(out.hard_bits, vec![0; 6]);
}

/// Whenever BP reports convergence its output is a codeword, so the
/// comparison with ML is over valid words.
#[test]
fn converged_outputs_are_codewords() {
    let code = toy();
    for w in all_words(6) {
        let llr: Vec<f64> = w.iter().map(|&b| if b == 1 { -2.0 } else { 2.0 }).collect();
        let out = bp_decode(code.parity(), &llr, &[0.0; 6], 20).unwrap();
        assert_eq!(out.converged, syndrome_check(code.parity(), &out.hard_bits).unwrap());
    }
}

/// On a single parity check the graph is a tree and sum-product is exact.
#[test]
fn single_check_posteriors_are_exact_marginals() {
    let h = ParityMatrix::from_rows(3, vec![vec![0, 1, 2]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let llr: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let out = bp_decode(&h, &llr, &[0.0; 3], 1).unwrap();
        for i in 0..3 {
            let (mut p0, mut p1) = (0.0, 0.0);
            for w in all_words(3).filter(|w| syndrome_check(&h, w).unwrap()) {
                let p = (0.5 * correlation(&w, &llr)).exp();
                if w[i] == 0 {
                    p0 += p
                } else {
                    p1 += p
                }
            }
            let exact = (p0 / p1).ln();
            assert!((out.posterior[i] - exact).abs() < 1e-9, "{} vs {exact}", out.posterior[i]);
        }
    }
}

/// Scaling consistent evidence cannot flip the first-iteration decision:
/// every check message then agrees in sign with its variable.
#[test]
fn scaling_codeword_consistent_evidence_keeps_the_decision() {
    let code = default_code();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let msg: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2)).collect();
        let cw = encode(&code, &msg).unwrap();
        let llr: Vec<f64> = cw
            .iter()
            .map(|&b| rng.gen_range(0.1..6.0) * if b == 1 { -1.0 } else { 1.0 })
            .collect();
        let doubled: Vec<f64> = llr.iter().map(|v| 2.0 * v).collect();
        let a = bp_decode(code.parity(), &llr, &vec![0.0; 900], 1).unwrap();
        let b = bp_decode(code.parity(), &doubled, &vec![0.0; 900], 1).unwrap();
        assert_eq!(a.hard_bits, cw);
        assert_eq!(b.hard_bits, cw);
    }
}

/// Sum-product is not scale-invariant in general: the check rule
/// `2 atanh(tanh(a/2) tanh(b/2))` grows faster than linearly in the input
/// scale, so doubling can let extrinsic evidence overturn a channel sign.
#[test]
fn scaling_inconsistent_evidence_can_change_the_decision() {
    let code = toy();
    let llr = [-0.7, -1.7, 2.0, -1.3, 2.5, 1.3];
    let doubled: Vec<f64> = llr.iter().map(|v| 2.0 * v).collect();
    let a = bp_decode(code.parity(), &llr, &[0.0; 6], 1).unwrap();
    let b = bp_decode(code.parity(), &doubled, &[0.0; 6], 1).unwrap();
    assert_ne!(a.hard_bits, b.hard_bits);
}

#[test]
fn random_messages_encode_to_codewords() {
    let code = default_code();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let msg: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2)).collect();
        let cw = encode(&code, &msg).unwrap();
        assert!(syndrome_check(code.parity(), &cw).unwrap());
        assert_eq!(code.extract_message(&cw), msg);
    }
}

#[test]
fn alist_round_trip_of_default_code() {
    let h = construct_regular_code(&CodeSpec::default()).unwrap();
    let text = to_alist(&h);
    assert!(text.starts_with("900 600\n2 3\n"));
    assert_eq!(parse_alist(&text).unwrap(), h);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn construction_is_regular(seed in any::<u64>(), blocks in 2usize..40) {
        let n = 3 * blocks;
        let h = construct_regular_code(&CodeSpec { n, dv: 2, dc: 3, seed }).unwrap();
        prop_assert_eq!(h.m(), 2 * blocks);
        prop_assert!(h.rows().iter().all(|r| r.len() == 3));
        prop_assert!(h.cols().iter().all(|c| c.len() == 2));
        prop_assert_eq!(h.ones(), 2 * n);
    }

    #[test]
    fn messages_never_exceed_the_clip(seed in any::<u64>(), scale in 0.1f64..500.0, iters in 1usize..20) {
        let h = construct_regular_code(&CodeSpec { n: 60, dv: 2, dc: 3, seed: 1 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let llr: Vec<f64> = (0..60).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let prior: Vec<f64> = (0..60).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let out = bp_decode(&h, &llr, &prior, iters).unwrap();
        prop_assert!(out.max_message <= LLR_CLIP);
        prop_assert!(out.posterior.iter().all(|v| v.is_finite()));
    }
}
