//! Seeded generation of valid filtered complexes and cap operators.
//!
//! The random source is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`; a value in `0..n` is taken from one `next_u64` draw `x` as
//! `(x * n) >> 64` in 128-bit arithmetic. Nothing else touches the stream, so a given
//! seed produces the same output on every platform.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::cap::{CapEntry, CapOperator, CohClass};
use crate::complex::{BoundaryEntry, FilteredComplex, Generator};
use crate::linalg::{kernel_lattice, IntMatrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthParams {
    pub seed: u64,
    pub n_survivors: usize,
    pub n_pairs: usize,
    pub n_mixing_moves: usize,
    /// Spectral flows are drawn from `0..=sf_span`.
    pub sf_span: i64,
    /// Pair coefficients are drawn from `1..=coeff_bound`.
    pub coeff_bound: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            n_survivors: 4,
            n_pairs: 4,
            n_mixing_moves: 8,
            sf_span: 16,
            coeff_bound: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.sf_span < 1 {
            return Err(SynthError::InvalidParams(format!(
                "sf_span must be at least 1, got {}",
                self.sf_span
            )));
        }
        if self.coeff_bound < 1 {
            return Err(SynthError::InvalidParams(
                "coeff_bound must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Thin wrapper fixing how draws are taken from the stream.
pub struct SynthRng(ChaCha8Rng);

impl SynthRng {
    pub fn new(seed: u64) -> Self {
        SynthRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform-ish value in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        ((self.0.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Value in `lo..=hi`.
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi, "empty range");
        lo + self.below((hi - lo) as u64 + 1) as i64
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// A complex in band `r = 0`: survivors plus acyclic pairs `x → y`, then
/// `n_mixing_moves` basis changes `e_a ↦ e_a + c·e_b`.
///
/// A pair has `sf(y) = sf(x) - 1 + 8k` and a coefficient in `1..=coeff_bound`.
/// Chern-Simons values are the distinct fractions `i/(N+1)`, swapped within each
/// `k = 0` pair so that `cs(x) > cs(y)`. A move requires `sf(b) ≡ sf(a) mod 8` and
/// `sf(b) ≥ sf(a)`, and `cs(b) < cs(a)` when the two spectral flows agree; these keep
/// every validity rule intact, so no output needs to be rejected.
pub fn random_complex(p: &SynthParams) -> Result<FilteredComplex, SynthError> {
    p.validate()?;
    let mut rng = SynthRng::new(p.seed);
    let span = p.sf_span;

    // pairs hold (x, y, k, coefficient) as positions into `sfs`
    let mut sfs: Vec<i64> = Vec::new();
    let mut pairs: Vec<(usize, usize, i64, BigInt)> = Vec::new();
    for _ in 0..p.n_survivors {
        sfs.push(rng.range(0, span));
    }
    for _ in 0..p.n_pairs {
        let max_k = (span + 1) / 8;
        let k = rng.range(0, max_k);
        // sf(y) = sf(x) - 1 + 8k with both in [0, span]
        let lo = (1 - 8 * k).max(0);
        let hi = (span + 1 - 8 * k).min(span);
        let (k, lo, hi) = if lo <= hi { (k, lo, hi) } else { (0, 1, span) };
        let sx = rng.range(lo, hi);
        let coeff = BigInt::from(rng.range(1, p.coeff_bound as i64));
        let x = sfs.len();
        sfs.push(sx);
        sfs.push(sx - 1 + 8 * k);
        pairs.push((x, x + 1, k, coeff));
    }

    let total = sfs.len();
    let mut slots: Vec<usize> = (1..=total).collect();
    rng.shuffle(&mut slots);
    for (x, y, k, _) in &pairs {
        if *k == 0 && slots[*x] < slots[*y] {
            slots.swap(*x, *y);
        }
    }
    let denom = BigInt::from(total + 1);
    let cs: Vec<BigRational> = slots
        .iter()
        .map(|&s| BigRational::new(BigInt::from(s), denom.clone()))
        .collect();

    let mut d = IntMatrix::zeros(total, total);
    for (x, y, _, coeff) in &pairs {
        d.set(*y, *x, coeff.clone());
    }

    for _ in 0..p.n_mixing_moves {
        if total < 2 {
            break;
        }
        let a = rng.below(total as u64) as usize;
        let b = rng.below(total as u64) as usize;
        let c = rng.range(1, p.coeff_bound as i64) * if rng.below(2) == 0 { 1 } else { -1 };
        let (a, b) = if sfs[a] == sfs[b] && cs[b] > cs[a] {
            (b, a)
        } else {
            (a, b)
        };
        let diff = sfs[b] - sfs[a];
        if a == b || diff < 0 || diff % 8 != 0 {
            continue;
        }
        apply_move(&mut d, a, b, &BigInt::from(c));
    }

    let mut order: Vec<usize> = (0..total).collect();
    rng.shuffle(&mut order);
    let width = total.to_string().len();
    let mut ids = vec![String::new(); total];
    for (rank, &i) in order.iter().enumerate() {
        ids[i] = format!("g{rank:0width$}");
    }
    let generators = order
        .iter()
        .map(|&i| Generator::new(ids[i].clone(), sfs[i], cs[i].clone()))
        .collect();
    let boundary = d
        .iter()
        .map(|(row, col, v)| BoundaryEntry::new(ids[col].clone(), ids[row].clone(), v.clone()))
        .collect();
    let complex = FilteredComplex::new(BigRational::zero(), generators, boundary)
        .expect("ids are distinct and every entry refers to a generator");
    debug_assert!(complex.validate().is_valid(), "{}", complex.validate());
    Ok(complex)
}

/// Boundary after the basis change `e_a ↦ e_a + c·e_b`: `P⁻¹ ∂ P` with `P = I + c·E_{ba}`.
fn apply_move(d: &mut IntMatrix, a: usize, b: usize, c: &BigInt) {
    let n = d.rows();
    let col_b: Vec<(usize, BigInt)> = (0..n).map(|i| (i, d.get(i, b))).collect();
    for (i, v) in col_b {
        if !v.is_zero() {
            d.add_to(i, a, &(c * v));
        }
    }
    let row_a: Vec<(usize, BigInt)> = (0..n).map(|j| (j, d.get(a, j))).collect();
    for (j, v) in row_a {
        if !v.is_zero() {
            d.add_to(b, j, &(-(c * v)));
        }
    }
}

/// A cap operator of class `cls` on `c` satisfying the degree pattern and `∂U = U∂`.
///
/// The admissible operators form the integer kernel of a linear system; the result is a
/// random combination of kernel basis vectors with every entry at most `coeff_bound` in
/// absolute value, falling back to zero when no draw meets the bound.
pub fn random_cap(c: &FilteredComplex, cls: CohClass, seed: u64, coeff_bound: u64) -> CapOperator {
    if cls.is_unit() {
        return CapOperator::unit();
    }
    let shift = cls.shift();
    let sf = c.sf_values();
    let n = c.len();
    let mut unknowns: Vec<(usize, usize)> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let slack = shift - (sf[a] - sf[b]);
            if slack >= 0 && slack % 8 == 0 {
                unknowns.push((b, a));
            }
        }
    }
    if unknowns.is_empty() {
        return CapOperator::zero(cls);
    }
    let var: BTreeMap<(usize, usize), usize> = unknowns
        .iter()
        .enumerate()
        .map(|(i, &rc)| (rc, i))
        .collect();

    // (∂U - U∂)[t][a] = Σ_b ∂[t][b]·U[b][a] - Σ_s U[t][s]·∂[s][a]
    let d = c.boundary_matrix();
    let mut equations: BTreeMap<(usize, usize), BTreeMap<usize, BigInt>> = BTreeMap::new();
    for (t, b, v) in d.iter() {
        for (&(bb, a), &idx) in var.range((b, 0)..(b + 1, 0)) {
            debug_assert_eq!(bb, b);
            *equations
                .entry((t, a))
                .or_default()
                .entry(idx)
                .or_insert_with(BigInt::zero) += v;
        }
    }
    for (s, a, v) in d.iter() {
        for (&(t, ss), &idx) in &var {
            if ss == s {
                *equations
                    .entry((t, a))
                    .or_default()
                    .entry(idx)
                    .or_insert_with(BigInt::zero) -= v;
            }
        }
    }
    let mut system = IntMatrix::zeros(equations.len(), unknowns.len());
    for (row, coeffs) in equations.values().enumerate() {
        for (&col, v) in coeffs {
            system.set(row, col, v.clone());
        }
    }
    let basis = kernel_lattice(&system).columns();
    if basis.is_empty() {
        return CapOperator::zero(cls);
    }

    let bound = BigInt::from(coeff_bound);
    let fits = |x: &[BigInt]| x.iter().all(|v| v.abs() <= bound);
    let mut rng = SynthRng::new(seed);
    let mut chosen = None;
    for _ in 0..16 {
        let mut x = vec![BigInt::zero(); unknowns.len()];
        for v in &basis {
            let w = rng.range(-1, 1);
            if w != 0 {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += vi * w;
                }
            }
        }
        if fits(&x) && x.iter().any(|v| !v.is_zero()) {
            chosen = Some(x);
            break;
        }
    }
    if chosen.is_none() {
        let start = rng.below(basis.len() as u64) as usize;
        chosen = (0..basis.len())
            .map(|i| &basis[(start + i) % basis.len()])
            .find(|v| fits(v))
            .cloned();
    }
    let Some(x) = chosen else {
        return CapOperator::zero(cls);
    };

    let ids: Vec<&str> = c.generators().iter().map(|g| g.id.as_str()).collect();
    let entries = unknowns
        .iter()
        .zip(x)
        .filter(|(_, v)| !v.is_zero())
        .map(|(&(b, a), v)| CapEntry::new(ids[a], ids[b], v))
        .collect();
    CapOperator::new(cls, entries)
}
