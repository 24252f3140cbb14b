//! Reference computations that share no code with the library's lattice routines.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Zero};

use fss_core::complex::FilteredComplex;
use fss_core::linalg::IntMatrix;
use fss_core::synth::{random_complex, SynthParams, SynthRng};

/// Determinant by Bareiss fraction-free elimination.
pub fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Rank over Q by Bareiss fraction-free row echelon form.
pub fn rational_rank(m: &IntMatrix) -> usize {
    let mut a = m.to_dense();
    let rows = a.len();
    let cols = m.cols();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..rows {
            for j in c + 1..cols {
                let v = (&a[i][j] * &a[rank][c] - &a[i][c] * &a[rank][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[rank][c].clone();
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// `dim_Q HF_j` from ranks of the mod-8 graded boundary.
pub fn hf_ranks_over_q(c: &FilteredComplex) -> [usize; 8] {
    let d = c.boundary_matrix();
    let mut out = [0; 8];
    for j in 0..8u8 {
        let here = c.indices_in_degree(j);
        let below = c.indices_in_degree((j + 7) % 8);
        let above = c.indices_in_degree((j + 1) % 8);
        let out_rank = rational_rank(&d.select(&below, &here));
        let in_rank = rational_rank(&d.select(&here, &above));
        out[j as usize] = here.len() - out_rank - in_rank;
    }
    out
}

/// `dim_Q I_n` from ranks of the sf-preserving part of the boundary.
pub fn graded_rank_over_q(c: &FilteredComplex, n: i64) -> usize {
    let d = c.boundary_matrix();
    let here = c.indices_with_sf(n);
    let below = c.indices_with_sf(n - 1);
    let above = c.indices_with_sf(n + 1);
    here.len() - rational_rank(&d.select(&below, &here)) - rational_rank(&d.select(&here, &above))
}

/// Parameters for corpus instance `i`: at most 40 generators and sf-span at most 48.
pub fn corpus_params(i: u64) -> SynthParams {
    let mut rng = SynthRng::new(0x5eed_0000 + i);
    let n_survivors = rng.range(0, 8) as usize;
    let n_pairs = rng.range(0, 16) as usize;
    SynthParams {
        seed: i,
        n_survivors,
        n_pairs,
        n_mixing_moves: rng.range(0, 40) as usize,
        sf_span: rng.range(1, 48),
        coeff_bound: rng.range(1, 4) as u64,
    }
}

pub fn corpus(count: u64) -> Vec<FilteredComplex> {
    (0..count)
        .map(|i| random_complex(&corpus_params(i)).expect("corpus parameters are valid"))
        .collect()
}

pub fn random_matrix(rng: &mut SynthRng, rows: usize, cols: usize, bound: i64) -> IntMatrix {
    let dense: Vec<Vec<i64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.range(-bound, bound)).collect())
        .collect();
    IntMatrix::from_rows(&dense)
}
