//! Grading and energy bookkeeping for trajectories between flat connections.
//!
//! Nothing here computes analytic data: spectral invariants, Pontryagin integrals
//! and Chern-Simons values are supplied by the caller as exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::complex::Generator;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("{value} is congruent to the band endpoint {r} mod 1, so {r} is not a regular value")]
    NotRegularValue {
        value: Box<BigRational>,
        r: Box<BigRational>,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Analytic data attached to a flat connection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatConnectionData {
    /// `dim H^0 + dim H^1` of the twisted de Rham complex.
    pub h: u64,
    /// ρ-invariant of the odd signature operator at zero.
    pub rho0: BigRational,
    /// Chern-Simons value modulo one, in `[0, 1)`.
    pub cs_mod1: BigRational,
}

impl FlatConnectionData {
    pub fn new(h: u64, rho0: BigRational, cs_mod1: BigRational) -> Result<Self, GeometryError> {
        if cs_mod1.is_negative() || cs_mod1 >= BigRational::one() {
            return Err(GeometryError::InvalidInput(format!(
                "cs_mod1 = {cs_mod1} is outside [0, 1)"
            )));
        }
        Ok(FlatConnectionData { h, rho0, cs_mod1 })
    }
}

/// Index of the anti-self-duality operator on the cylinder from `alpha` to `beta`:
///
/// `-2·p1 - (h_β + ρ_β(0))/2 + (-h_α + ρ_α(0))/2`.
///
/// The value is an integer for geometric inputs; synthetic inputs may give a fraction.
pub fn aps_index(
    p1_integral: &BigRational,
    alpha: &FlatConnectionData,
    beta: &FlatConnectionData,
) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    let h_a = BigRational::from_integer(BigInt::from(alpha.h));
    let h_b = BigRational::from_integer(BigInt::from(beta.h));
    -(&two * p1_integral) - (h_b + &beta.rho0) / &two + (-h_a + &alpha.rho0) / &two
}

/// The lift of `cs_mod1` lying in the open interval `(r, r+1)`.
pub fn lift_cs(cs_mod1: &BigRational, r: &BigRational) -> Result<BigRational, GeometryError> {
    let diff = cs_mod1 - r;
    if diff.is_integer() {
        return Err(GeometryError::NotRegularValue {
            value: Box::new(cs_mod1.clone()),
            r: Box::new(r.clone()),
        });
    }
    // shift = ceil(r - cs); r < cs + shift < r + 1 because r - cs is not an integer.
    let shift = (-diff).ceil();
    Ok(cs_mod1 + shift)
}

/// A trajectory class between two generators of one band, with the extra lift
/// discrepancy `shift_k` and the divisors it is cut down by.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryClass {
    pub source: Generator,
    pub target: Generator,
    pub shift_k: u64,
    /// Number of point divisors `V_y` (each worth 3 dimensions).
    pub point_divisors: u32,
    /// Number of three-manifold divisors `V_Y` (each worth 1 dimension).
    pub threemanifold_divisors: u32,
}

impl TrajectoryClass {
    /// Dimension of the moduli space before quotienting by translation: `sf(a) - sf(b)`.
    pub fn index(&self) -> i64 {
        self.source.sf - self.target.sf
    }

    /// `3k + l` for `k` point divisors and `l` three-manifold divisors.
    pub fn divisor_degree(&self) -> i64 {
        3 * self.point_divisors as i64 + self.threemanifold_divisors as i64
    }

    pub fn energy(&self) -> BigRational {
        trajectory_energy(&self.source, &self.target, self.shift_k)
    }

    pub fn bubble_budget(&self) -> u64 {
        bubble_budget(&self.source, &self.target, self.shift_k)
    }

    pub fn chain_length_bound(&self) -> Result<i64, GeometryError> {
        chain_length_bound(self.index(), self.divisor_degree())
    }
}

/// `cs(a) - cs(b) + shift_k`; positive for a realizable trajectory class.
pub fn trajectory_energy(a: &Generator, b: &Generator, shift_k: u64) -> BigRational {
    &a.cs - &b.cs + BigRational::from_integer(BigInt::from(shift_k))
}

/// Number of unit-energy bubbles the trajectory energy could pay for.
///
/// Energy that is not positive admits none.
pub fn bubble_budget(a: &Generator, b: &Generator, shift_k: u64) -> u64 {
    let e = trajectory_energy(a, b, shift_k);
    if !e.is_positive() {
        return 0;
    }
    e.floor().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Upper bound on the number of unbroken pieces in a chain connection of total index
/// `index` cut down by divisors of total degree `divisor_degree`.
///
/// Each piece needs `sf` drop at least `1 + (its divisor degree)`; summing gives
/// `index ≥ pieces + divisor_degree`. Nonpositive values mean the cut-down set is empty.
pub fn chain_length_bound(index: i64, divisor_degree: i64) -> Result<i64, GeometryError> {
    if index < 1 {
        return Err(GeometryError::InvalidInput(format!(
            "index must be at least 1, got {index}"
        )));
    }
    if divisor_degree < 0 {
        return Err(GeometryError::InvalidInput(format!(
            "divisor degree must be nonnegative, got {divisor_degree}"
        )));
    }
    Ok(index - divisor_degree)
}
