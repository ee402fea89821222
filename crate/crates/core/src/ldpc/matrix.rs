use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Parameters of a regular code: every bit sits in `dv` checks, every check
/// covers `dc` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeSpec {
    pub n: usize,
    pub dv: usize,
    pub dc: usize,
    pub seed: u64,
}

impl Default for CodeSpec {
    fn default() -> Self {
        CodeSpec {
            n: 900,
            dv: 2,
            dc: 3,
            seed: 2024,
        }
    }
}

impl CodeSpec {
    pub fn checks(&self) -> usize {
        self.n * self.dv / self.dc
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dv == 0 || self.dc < 2 {
            return Err(Error::config(format!("degenerate code {self:?}")));
        }
        if (self.n * self.dv) % self.dc != 0 {
            return Err(Error::config(format!(
                "n*dv = {} is not divisible by dc = {}",
                self.n * self.dv,
                self.dc
            )));
        }
        if self.dc > self.n {
            return Err(Error::config("row weight exceeds code length"));
        }
        Ok(())
    }
}

/// Sparse GF(2) parity-check matrix with row and column adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityMatrix {
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityMatrix {
    /// Builds from per-row column lists. Column lists are derived.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &c in row {
                if c >= n {
                    return Err(Error::dim(format!("column {c} out of range for n = {n}")));
                }
                if cols[c].last() == Some(&r) {
                    return Err(Error::config(format!("duplicate edge ({r}, {c})")));
                }
                cols[c].push(r);
            }
        }
        Ok(ParityMatrix { n, rows, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Number of pairs of checks sharing two or more bits (4-cycles in the
    /// Tanner graph, counted per check pair).
    pub fn four_cycles(&self) -> usize {
        let mut count = 0;
        let mut seen = vec![usize::MAX; self.m()];
        let mut hits = vec![0usize; self.m()];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                for &other in &self.cols[c] {
                    if other <= r {
                        continue;
                    }
                    if seen[other] != r {
                        seen[other] = r;
                        hits[other] = 0;
                    }
                    hits[other] += 1;
                    if hits[other] == 2 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        super::systematic::gf2_rank(self)
    }
}

const CONSTRUCTION_ROUNDS: usize = 100;

/// Gallager-style construction: `dv` stacked random column permutations, each
/// sliced into rows of `dc` consecutive entries.
///
/// Any draw with a repeated edge is rejected. Up to 100 draws are tried to
/// find one without 4-cycles; otherwise the draw with the fewest is kept.
pub fn construct_regular_code(spec: &CodeSpec) -> Result<ParityMatrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut best: Option<(usize, ParityMatrix)> = None;
    let mut attempts = 0;
    while attempts < CONSTRUCTION_ROUNDS * 100 {
        attempts += 1;
        let mut sockets = Vec::with_capacity(spec.n * spec.dv);
        for _ in 0..spec.dv {
            let mut perm: Vec<usize> = (0..spec.n).collect();
            perm.shuffle(&mut rng);
            sockets.extend(perm);
        }
        let mut rows: Vec<Vec<usize>> = sockets.chunks(spec.dc).map(<[usize]>::to_vec).collect();
        let mut duplicate = false;
        for row in &mut rows {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                duplicate = true;
                break;
            }
        }
        if duplicate {
            continue;
        }
        let h = ParityMatrix::from_rows(spec.n, rows)?;
        let cycles = h.four_cycles();
        if best.as_ref().is_none_or(|(c, _)| cycles < *c) {
            best = Some((cycles, h));
        }
        if cycles == 0 || attempts >= CONSTRUCTION_ROUNDS {
            break;
        }
    }
    best.map(|(_, h)| h).ok_or_else(|| {
        Error::config(format!(
            "no duplicate-free ({}, {}) code of length {} found",
            spec.dv, spec.dc, spec.n
        ))
    })
}

/// `true` iff every check is satisfied by `bits`.
pub fn syndrome_check(h: &ParityMatrix, bits: &[u8]) -> Result<bool> {
    if bits.len() != h.n() {
        return Err(Error::dim(format!(
            "word of {} bits for code length {}",
            bits.len(),
            h.n()
        )));
    }
    Ok(h
        .rows()
        .iter()
        .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)) == 0))
}
