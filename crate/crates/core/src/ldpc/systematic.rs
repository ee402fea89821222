use super::matrix::ParityMatrix;
use crate::{Error, Result};

/// Systematic encoder derived from a parity-check matrix by GF(2)
/// Gauss-Jordan elimination.
///
/// Message bits occupy the non-pivot columns verbatim; each pivot column is
/// the XOR of a fixed subset of message bits.
#[derive(Debug, Clone)]
pub struct SystematicCode {
    parity: ParityMatrix,
    message_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    column_permutation: Vec<usize>,
    /// For each entry of `parity_positions`: bitset over message indices.
    parity_rules: Vec<Vec<u64>>,
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Reduced row echelon form. Returns the pivot column of each leading row.
fn eliminate(h: &ParityMatrix) -> (Vec<Vec<u64>>, Vec<usize>) {
    let n = h.n();
    let w = words(n);
    let mut rows: Vec<Vec<u64>> = h
        .rows()
        .iter()
        .map(|row| {
            let mut bits = vec![0u64; w];
            for &c in row {
                bits[c / 64] ^= 1 << (c % 64);
            }
            bits
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        if r == rows.len() {
            break;
        }
        let (word, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (r..rows.len()).find(|&i| rows[i][word] & bit != 0) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[word] & bit != 0 {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

pub(crate) fn gf2_rank(h: &ParityMatrix) -> usize {
    eliminate(h).1.len()
}

/// Derives the systematic encoder; rank deficiency just enlarges `k`.
pub fn systematize(h: &ParityMatrix) -> SystematicCode {
    let n = h.n();
    let (rows, pivots) = eliminate(h);
    let mut is_pivot = vec![false; n];
    pivots.iter().for_each(|&p| is_pivot[p] = true);
    let message_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let mut message_index = vec![usize::MAX; n];
    for (i, &c) in message_positions.iter().enumerate() {
        message_index[c] = i;
    }
    let k = message_positions.len();
    let parity_rules = rows
        .iter()
        .map(|row| {
            let mut rule = vec![0u64; words(k)];
            for &c in &message_positions {
                if row[c / 64] >> (c % 64) & 1 == 1 {
                    let i = message_index[c];
                    rule[i / 64] |= 1 << (i % 64);
                }
            }
            rule
        })
        .collect();
    let column_permutation = message_positions.iter().chain(&pivots).copied().collect();
    SystematicCode {
        parity: h.clone(),
        message_positions,
        parity_positions: pivots,
        column_permutation,
        parity_rules,
    }
}

impl SystematicCode {
    pub fn parity(&self) -> &ParityMatrix {
        &self.parity
    }

    pub fn n(&self) -> usize {
        self.parity.n()
    }

    pub fn k(&self) -> usize {
        self.message_positions.len()
    }

    pub fn rank(&self) -> usize {
        self.parity_positions.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    /// Codeword positions that carry message bits, in message order.
    pub fn message_positions(&self) -> &[usize] {
        &self.message_positions
    }

    pub fn parity_positions(&self) -> &[usize] {
        &self.parity_positions
    }

    /// Message positions followed by parity positions; a bijection on `0..n`.
    pub fn column_permutation(&self) -> &[usize] {
        &self.column_permutation
    }

    /// Reads the message bits back out of a codeword.
    pub fn extract_message(&self, codeword: &[u8]) -> Vec<u8> {
        self.message_positions.iter().map(|&p| codeword[p]).collect()
    }
}

/// Maps `k` message bits to an `n`-bit codeword.
pub fn encode(code: &SystematicCode, message: &[u8]) -> Result<Vec<u8>> {
    if message.len() != code.k() {
        return Err(Error::dim(format!(
            "message of {} bits, code expects k = {}",
            message.len(),
            code.k()
        )));
    }
    let mut packed = vec![0u64; words(message.len())];
    for (i, &b) in message.iter().enumerate() {
        if b & 1 == 1 {
            packed[i / 64] |= 1 << (i % 64);
        }
    }
    let mut word = vec![0u8; code.n()];
    for (&p, &b) in code.message_positions.iter().zip(message) {
        word[p] = b & 1;
    }
    for (&p, rule) in code.parity_positions.iter().zip(&code.parity_rules) {
        let ones: u32 = rule.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
        word[p] = (ones & 1) as u8;
    }
    Ok(word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{construct_regular_code, syndrome_check, CodeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> SystematicCode {
        systematize(&construct_regular_code(&CodeSpec { n: 6, dv: 2, dc: 3, seed: 3 }).unwrap())
    }

    #[test]
    fn default_code_dimension() {
        let code = systematize(&construct_regular_code(&CodeSpec::default()).unwrap());
        assert!(code.rank() <= 599);
        assert!((301..=320).contains(&code.k()), "k = {}", code.k());
        let mut perm = code.column_permutation().to_vec();
        perm.sort_unstable();
        assert_eq!(perm, (0..900).collect::<Vec<_>>());
    }

    #[test]
    fn full_rank_square_has_no_message() {
        let h = ParityMatrix::from_rows(4, vec![vec![2], vec![0], vec![3], vec![1]]).unwrap();
        let code = systematize(&h);
        assert_eq!(code.k(), 0);
        assert_eq!(encode(&code, &[]).unwrap(), vec![0; 4]);
    }

    #[test]
    fn random_messages_satisfy_checks() {
        let code = systematize(&construct_regular_code(&CodeSpec::default()).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let msg: Vec<u8> = (0..code.k()).map(|_| rng.gen_range(0..2)).collect();
            let cw = encode(&code, &msg).unwrap();
            assert!(syndrome_check(code.parity(), &cw).unwrap());
            assert_eq!(code.extract_message(&cw), msg);
        }
        assert_eq!(encode(&code, &vec![0; code.k()]).unwrap(), vec![0; 900]);
        assert!(encode(&code, &[0; 3]).is_err());
    }

    #[test]
    fn toy_code_exhaustive() {
        let code = toy();
        let k = code.k();
        assert!(k >= 3);
        let mut words = std::collections::HashSet::new();
        for m in 0..(1u32 << k) {
            let msg: Vec<u8> = (0..k).map(|i| (m >> i & 1) as u8).collect();
            let cw = encode(&code, &msg).unwrap();
            assert!(syndrome_check(code.parity(), &cw).unwrap());
            words.insert(cw);
        }
        assert_eq!(words.len(), 1 << k);
        // every satisfying word of length 6 is produced by the encoder
        let all = (0..64u32)
            .map(|w| (0..6).map(|i| (w >> i & 1) as u8).collect::<Vec<_>>())
            .filter(|w| syndrome_check(code.parity(), w).unwrap())
            .count();
        assert_eq!(all, 1 << k);
    }

    #[test]
    fn codewords_are_closed_under_xor() {
        let code = toy();
        let a = encode(&code, &[1, 0, 1][..code.k().min(3)].iter().copied().chain(std::iter::repeat(0)).take(code.k()).collect::<Vec<_>>()).unwrap();
        let b = encode(&code, &vec![1; code.k()]).unwrap();
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert!(syndrome_check(code.parity(), &sum).unwrap());
    }
}
