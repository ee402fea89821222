use super::matrix::ParityMatrix;
use crate::{Error, Result};

/// Bound on every message magnitude exchanged on the Tanner graph.
pub const LLR_CLIP: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutput {
    /// Intrinsic LLR plus all incoming check messages.
    pub posterior: Vec<f64>,
    /// Bit 1 iff the posterior is negative (ties decide 0).
    pub hard_bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest check-to-variable or variable-to-check magnitude seen.
    pub max_message: f64,
}

fn clip(x: f64) -> f64 {
    x.clamp(-LLR_CLIP, LLR_CLIP)
}

/// `2 atanh(p)` for a product of `tanh(x/2)` terms, saturating at the clip.
fn check_message(p: f64) -> f64 {
    if p.abs() >= 1.0 {
        LLR_CLIP.copysign(p)
    } else {
        clip(2.0 * p.atanh())
    }
}

fn hard(llr: &[f64], out: &mut [u8]) {
    for (b, &l) in out.iter_mut().zip(llr) {
        *b = u8::from(l < 0.0);
    }
}

fn satisfied(h: &ParityMatrix, bits: &[u8]) -> bool {
    h.rows()
        .iter()
        .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]) == 0)
}

/// Flooding sum-product decoding.
///
/// The variable-node intrinsic is `channel_llr + apriori_llr`. Messages start
/// from the intrinsic on every call, and decoding stops as soon as the hard
/// decision satisfies all checks or after `max_iters` iterations.
pub fn bp_decode(
    h: &ParityMatrix,
    channel_llr: &[f64],
    apriori_llr: &[f64],
    max_iters: usize,
) -> Result<BpOutput> {
    let n = h.n();
    if channel_llr.len() != n || apriori_llr.len() != n {
        return Err(Error::dim(format!(
            "LLR vectors of {} and {} values for code length {n}",
            channel_llr.len(),
            apriori_llr.len()
        )));
    }
    if let Some(bad) = channel_llr.iter().chain(apriori_llr).find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite input LLR {bad}")));
    }

    let intrinsic: Vec<f64> = channel_llr.iter().zip(apriori_llr).map(|(c, a)| c + a).collect();

    // Edges are numbered check by check.
    let mut row_start = Vec::with_capacity(h.m() + 1);
    let mut edge_var = Vec::with_capacity(h.ones());
    row_start.push(0);
    for row in h.rows() {
        edge_var.extend_from_slice(row);
        row_start.push(edge_var.len());
    }
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let mut to_check: Vec<f64> = edge_var.iter().map(|&v| clip(intrinsic[v])).collect();
    let mut to_var = vec![0.0f64; edge_var.len()];
    let mut max_message = to_check.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut posterior = intrinsic.clone();
    let mut hard_bits = vec![0u8; n];
    hard(&posterior, &mut hard_bits);

    let max_dc = h.rows().iter().map(Vec::len).max().unwrap_or(0);
    let mut fwd = vec![0.0; max_dc];
    let mut tanhs = vec![0.0; max_dc];

    let mut converged = satisfied(h, &hard_bits) && max_iters == 0;
    let mut iterations = 0;
    for it in 1..=max_iters {
        for r in 0..h.m() {
            let (s, e) = (row_start[r], row_start[r + 1]);
            let d = e - s;
            for i in 0..d {
                tanhs[i] = (0.5 * to_check[s + i]).tanh();
            }
            // leave-one-out products without division
            let mut acc = 1.0;
            for i in 0..d {
                fwd[i] = acc;
                acc *= tanhs[i];
            }
            acc = 1.0;
            for i in (0..d).rev() {
                let m = if d == 1 { 0.0 } else { check_message(fwd[i] * acc) };
                max_message = max_message.max(m.abs());
                to_var[s + i] = m;
                acc *= tanhs[i];
            }
        }
        for v in 0..n {
            let total = intrinsic[v] + var_edges[v].iter().map(|&e| to_var[e]).sum::<f64>();
            posterior[v] = total;
            for &e in &var_edges[v] {
                let m = clip(total - to_var[e]);
                max_message = max_message.max(m.abs());
                to_check[e] = m;
            }
        }
        hard(&posterior, &mut hard_bits);
        iterations = it;
        if satisfied(h, &hard_bits) {
            converged = true;
            break;
        }
    }

    Ok(BpOutput {
        posterior,
        hard_bits,
        converged,
        iterations,
        max_message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{construct_regular_code, encode, systematize, CodeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Jacobian-logarithm form of the pairwise check rule.
    fn boxplus_oracle(a: f64, b: f64) -> f64 {
        let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
        sign * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
    }

    #[test]
    fn single_check_extrinsic_matches_jacobian_form() {
        let h = ParityMatrix::from_rows(3, vec![vec![0, 1, 2]]).unwrap();
        for &(a, b, c) in &[(0.3, -1.2, 2.0), (2.0, 2.0, 2.0), (-4.5, -0.1, 7.0), (15.0, -9.0, 0.0)] {
            let out = bp_decode(&h, &[a, b, c], &[0.0; 3], 1).unwrap();
            let expect = [a + boxplus_oracle(b, c), b + boxplus_oracle(a, c), c + boxplus_oracle(a, b)];
            for (p, e) in out.posterior.iter().zip(expect) {
                assert!((p - e).abs() < 1e-9, "{p} vs {e}");
            }
        }
    }

    #[test]
    fn saturated_product_hits_the_clip() {
        assert_eq!(check_message(1.0), LLR_CLIP);
        assert_eq!(check_message(-1.0), -LLR_CLIP);
        assert_eq!(check_message(0.0), 0.0);
    }

    #[test]
    fn noiseless_word_converges_in_one_iteration() {
        let code = systematize(&construct_regular_code(&CodeSpec::default()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let msg: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2)).collect();
        let cw = encode(&code, &msg).unwrap();
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 50.0 } else { -50.0 }).collect();
        let out = bp_decode(code.parity(), &llr, &vec![0.0; 900], 10).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.hard_bits, cw);
        assert!(out.max_message <= LLR_CLIP);
    }

    #[test]
    fn a_priori_alone_drives_systematic_bits() {
        let code = systematize(&construct_regular_code(&CodeSpec { n: 6, dv: 2, dc: 3, seed: 3 }).unwrap());
        let mut prior = vec![0.0; 6];
        for &p in code.message_positions() {
            prior[p] = 10.0;
        }
        let out = bp_decode(code.parity(), &[0.0; 6], &prior, 20).unwrap();
        assert!(out.converged);
        assert_eq!(out.hard_bits, vec![0; 6]);
    }

    #[test]
    fn input_validation() {
        let h = construct_regular_code(&CodeSpec { n: 6, dv: 2, dc: 3, seed: 3 }).unwrap();
        assert!(matches!(bp_decode(&h, &[0.0; 5], &[0.0; 6], 5), Err(Error::Dimension(_))));
        let mut bad = [0.0; 6];
        bad[2] = f64::NAN;
        assert!(matches!(bp_decode(&h, &bad, &[0.0; 6], 5), Err(Error::Numeric(_))));
    }

    #[test]
    fn messages_stay_clipped() {
        let code = systematize(&construct_regular_code(&CodeSpec::default()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let llr: Vec<f64> = (0..900).map(|_| rng.gen_range(-400.0..400.0)).collect();
        let prior: Vec<f64> = (0..900).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let out = bp_decode(code.parity(), &llr, &prior, 30).unwrap();
        assert!(out.max_message <= LLR_CLIP);
        assert!(out.posterior.iter().all(|v| v.is_finite()));
    }
}
