use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::smith::{reduce, Track};
use super::{primitive, IntMatrix, LinalgError};

/// Isomorphism type of a finitely generated abelian group: `Z^free_rank ⊕ Z/t_1 ⊕ … ⊕ Z/t_s`
/// with every `t_i ≥ 2` and `t_i | t_{i+1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AbelianInvariants {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbelianInvariants {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn free(rank: usize) -> Self {
        AbelianInvariants {
            free_rank: rank,
            torsion: Vec::new(),
        }
    }

    /// Normalizes arbitrary cyclic orders (zeros and units allowed, any order) into
    /// invariant-factor form.
    pub fn from_orders(free_rank: usize, orders: &[BigInt]) -> Self {
        let n = orders.len();
        let diag = IntMatrix::diagonal(n, n, orders);
        let parts = reduce(
            &diag,
            Track {
                u: false,
                u_inv: false,
                v: false,
            },
        );
        let mut out = AbelianInvariants::free(free_rank);
        for d in parts.diagonal {
            if d.is_zero() {
                out.free_rank += 1;
            } else if d > BigInt::one() {
                out.torsion.push(d);
            }
        }
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    /// Number of cyclic summands.
    pub fn num_generators(&self) -> usize {
        self.free_rank + self.torsion.len()
    }

    pub fn direct_sum(&self, other: &AbelianInvariants) -> AbelianInvariants {
        let orders: Vec<BigInt> = self.torsion.iter().chain(&other.torsion).cloned().collect();
        AbelianInvariants::from_orders(self.free_rank + other.free_rank, &orders)
    }

    /// Orders of the cyclic generators in the order representatives are listed:
    /// torsion first, then `0` for each free summand.
    pub fn generator_orders(&self) -> Vec<BigInt> {
        self.torsion
            .iter()
            .cloned()
            .chain(std::iter::repeat_n(BigInt::zero(), self.free_rank))
            .collect()
    }

    pub fn is_divisibility_chain(&self) -> bool {
        self.torsion.iter().all(|t| t > &BigInt::one())
            && self.torsion.windows(2).all(|w| w[1].is_multiple_of(&w[0]))
    }
}

impl fmt::Display for AbelianInvariants {
    /// `Z/2 ⊕ Z/6 ⊕ Z^3`, `Z` for rank one, `0` for the trivial group.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = self.torsion.iter().map(|t| format!("Z/{t}")).collect();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".into()),
            r => parts.push(format!("Z^{r}")),
        }
        write!(f, "{}", parts.join(" ⊕ "))
    }
}

/// Basis of `{x ∈ Z^cols : M·x = 0}`, one primitive column per basis vector.
pub fn kernel_lattice(m: &IntMatrix) -> IntMatrix {
    let parts = reduce(
        m,
        Track {
            u: false,
            u_inv: false,
            v: true,
        },
    );
    let rank = parts.rank();
    let v = parts.v.expect("tracked");
    let cols: Vec<Vec<BigInt>> = v
        .columns()
        .into_iter()
        .skip(rank)
        .map(|mut c| {
            primitive(&mut c);
            c
        })
        .collect();
    IntMatrix::from_columns(m.cols(), &cols)
}

/// Rank of an integer matrix.
pub fn rank(m: &IntMatrix) -> usize {
    reduce(
        m,
        Track {
            u: false,
            u_inv: false,
            v: false,
        },
    )
    .rank()
}

/// Exact solver for membership in, and coordinates with respect to, a lattice basis.
#[derive(Clone, Debug)]
struct LatticeBasis {
    /// Columns form a basis of the lattice.
    basis: IntMatrix,
    /// `U` from `U·N·V = D` of the original spanning set `N`.
    u: IntMatrix,
    /// Nonzero invariant factors of `N`.
    factors: Vec<BigInt>,
}

impl LatticeBasis {
    fn new(span: &IntMatrix) -> Self {
        let parts = reduce(
            span,
            Track {
                u: true,
                u_inv: false,
                v: true,
            },
        );
        let r = parts.rank();
        let v = parts.v.expect("tracked");
        let nv = span.mul(&v);
        let keep: Vec<usize> = (0..r).collect();
        let all_rows: Vec<usize> = (0..span.rows()).collect();
        LatticeBasis {
            basis: nv.select(&all_rows, &keep),
            u: parts.u.expect("tracked"),
            factors: parts.diagonal[..r].to_vec(),
        }
    }

    fn rank(&self) -> usize {
        self.factors.len()
    }

    /// Coordinates `y` with `basis·y = x`, or `None` if `x` is outside the lattice.
    fn coordinates(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        let w = self.u.mul_vec(x);
        let r = self.rank();
        if w[r..].iter().any(|v| !v.is_zero()) {
            return None;
        }
        let mut y = Vec::with_capacity(r);
        for (wi, d) in w[..r].iter().zip(&self.factors) {
            let (q, rem) = wi.div_rem(d);
            if !rem.is_zero() {
                return None;
            }
            y.push(q);
        }
        Some(y)
    }
}

/// The quotient `span(numerator) / span(denominator)` with a chosen generating set.
///
/// Generators are listed torsion first (in divisibility order), then free. Class
/// coordinates of torsion generators are reduced into `[0, order)`.
#[derive(Clone, Debug)]
pub struct Subquotient {
    ambient: usize,
    numerator: LatticeBasis,
    denominator: IntMatrix,
    /// Change of coordinates from numerator-basis coordinates to quotient coordinates.
    to_quotient: IntMatrix,
    /// Indices (into quotient coordinates) of the nontrivial cyclic summands.
    kept: Vec<usize>,
    orders: Vec<BigInt>,
    representatives: Vec<Vec<BigInt>>,
    invariants: AbelianInvariants,
}

impl Subquotient {
    pub fn new(numerator: &IntMatrix, denominator: &IntMatrix) -> Result<Self, LinalgError> {
        assert_eq!(numerator.rows(), denominator.rows(), "ambient mismatch");
        let ambient = numerator.rows();
        let num = LatticeBasis::new(numerator);
        let r = num.rank();
        let mut coords = Vec::with_capacity(denominator.cols());
        for (j, col) in denominator.columns().into_iter().enumerate() {
            match num.coordinates(&col) {
                Some(y) => coords.push(y),
                None => return Err(LinalgError::ContainmentViolation { column: j }),
            }
        }
        let rel = IntMatrix::from_columns(r, &coords);
        let parts = reduce(
            &rel,
            Track {
                u: true,
                u_inv: true,
                v: false,
            },
        );
        let to_quotient = parts.u.expect("tracked");
        let from_quotient = parts.u_inv.expect("tracked");
        // Diagonal has min(r, q) entries; coordinates past it are free.
        let mut diag = parts.diagonal;
        diag.resize(r, BigInt::zero());

        let mut torsion_idx = Vec::new();
        let mut free_idx = Vec::new();
        for (i, d) in diag.iter().enumerate() {
            if d.is_zero() {
                free_idx.push(i);
            } else if !d.is_one() {
                torsion_idx.push(i);
            }
        }
        let kept: Vec<usize> = torsion_idx.iter().chain(&free_idx).copied().collect();
        let orders: Vec<BigInt> = kept.iter().map(|&i| diag[i].clone()).collect();
        let all_rows: Vec<usize> = (0..r).collect();
        let gens = num.basis.mul(&from_quotient.select(&all_rows, &kept));
        let invariants = AbelianInvariants {
            free_rank: free_idx.len(),
            torsion: torsion_idx.iter().map(|&i| diag[i].clone()).collect(),
        };
        Ok(Subquotient {
            ambient,
            numerator: num,
            denominator: denominator.clone(),
            to_quotient,
            kept,
            orders,
            representatives: gens.columns(),
            invariants,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn invariants(&self) -> &AbelianInvariants {
        &self.invariants
    }

    /// Ambient vectors whose classes generate the quotient, one per cyclic summand.
    pub fn representatives(&self) -> &[Vec<BigInt>] {
        &self.representatives
    }

    /// Order of each representative's class (`0` for free generators).
    pub fn orders(&self) -> &[BigInt] {
        &self.orders
    }

    /// Basis of the numerator lattice (as columns).
    pub fn numerator_basis(&self) -> &IntMatrix {
        &self.numerator.basis
    }

    /// Spanning set of the denominator lattice as given (columns).
    pub fn denominator(&self) -> &IntMatrix {
        &self.denominator
    }

    pub fn contains(&self, x: &[BigInt]) -> bool {
        self.numerator.coordinates(x).is_some()
    }

    /// Class of `x` in quotient coordinates, or `None` if `x` is not in the numerator.
    pub fn classify(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        let y = self.numerator.coordinates(x)?;
        let z = self.to_quotient.mul_vec(&y);
        Some(
            self.kept
                .iter()
                .zip(&self.orders)
                .map(|(&i, d)| reduce_mod(&z[i], d))
                .collect(),
        )
    }
}

/// Reduces into `[0, d)` for `d > 0`; leaves the value unchanged for `d = 0`.
pub fn reduce_mod(x: &BigInt, d: &BigInt) -> BigInt {
    if d.is_zero() {
        x.clone()
    } else {
        x.mod_floor(d)
    }
}

/// Reduces each row of a map matrix modulo the order of the corresponding target generator.
pub fn reduce_rows(m: &IntMatrix, orders: &[BigInt]) -> IntMatrix {
    let mut out = IntMatrix::zeros(m.rows(), m.cols());
    for (i, j, v) in m.iter() {
        out.set(i, j, reduce_mod(v, &orders[i]));
    }
    out
}

/// Invariants and representatives of `span(numerator) / span(denominator)`.
pub fn subquotient_invariants(
    numerator: &IntMatrix,
    denominator: &IntMatrix,
) -> Result<(AbelianInvariants, Vec<Vec<BigInt>>), LinalgError> {
    let q = Subquotient::new(numerator, denominator)?;
    Ok((q.invariants.clone(), q.representatives.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn kernel_of_zero_matrix_is_everything() {
        let k = kernel_lattice(&IntMatrix::zeros(2, 3));
        assert_eq!(k.cols(), 3);
        assert_eq!(rank(&k), 3);
        assert_eq!(k, IntMatrix::identity(3));
    }

    #[test]
    fn kernel_of_identity_is_empty() {
        assert_eq!(kernel_lattice(&IntMatrix::identity(2)).cols(), 0);
    }

    #[test]
    fn kernel_is_saturated() {
        // Enumerating small integer vectors: the solutions of 2x - 4y = 0 are t·(2, 1).
        let mut hits = Vec::new();
        for x in -6i64..=6 {
            for y in -6i64..=6 {
                if 2 * x - 4 * y == 0 && (x, y) != (0, 0) {
                    hits.push((x, y));
                }
            }
        }
        assert!(hits.iter().all(|&(x, y)| x == 2 * y));
        let k = kernel_lattice(&IntMatrix::from_rows(&[vec![2, -4]]));
        assert_eq!(k.columns(), vec![ints(&[2, 1])]);
    }

    #[test]
    fn cyclic_quotient_of_rank_one() {
        let num = IntMatrix::from_rows(&[vec![1]]);
        let den = IntMatrix::from_rows(&[vec![2]]);
        let (inv, reps) = subquotient_invariants(&num, &den).unwrap();
        assert_eq!(
            inv,
            AbelianInvariants {
                free_rank: 0,
                torsion: ints(&[2])
            }
        );
        assert_eq!(reps.len(), 1);
    }

    #[test]
    fn empty_denominator_gives_free_lattice() {
        let num = IntMatrix::from_rows(&[vec![1, 0], vec![1, 2], vec![0, 0]]);
        let (inv, reps) = subquotient_invariants(&num, &IntMatrix::zeros(3, 0)).unwrap();
        assert_eq!(inv, AbelianInvariants::free(2));
        assert_eq!(reps.len(), 2);
    }

    #[test]
    fn quotient_by_diagonal_and_three_e2() {
        // Relations e1+e2 and 3e2 in Z^2: determinant 3, so the quotient is Z/3.
        let num = IntMatrix::identity(2);
        let den = IntMatrix::from_rows(&[vec![1, 0], vec![1, 3]]);
        let (inv, _) = subquotient_invariants(&num, &den).unwrap();
        assert_eq!(
            inv,
            AbelianInvariants {
                free_rank: 0,
                torsion: ints(&[3])
            }
        );
    }

    #[test]
    fn containment_violation_is_reported() {
        let num = IntMatrix::from_rows(&[vec![2], vec![0]]);
        let den = IntMatrix::from_rows(&[vec![1], vec![0]]);
        assert_eq!(
            Subquotient::new(&num, &den).unwrap_err(),
            LinalgError::ContainmentViolation { column: 0 }
        );
    }

    #[test]
    fn classify_reduces_torsion() {
        let num = IntMatrix::identity(2);
        let den = IntMatrix::from_rows(&[vec![4], vec![0]]);
        let q = Subquotient::new(&num, &den).unwrap();
        assert_eq!(
            q.invariants(),
            &AbelianInvariants {
                free_rank: 1,
                torsion: ints(&[4])
            }
        );
        let c = q.classify(&ints(&[9, 2])).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c[0] >= BigInt::zero() && c[0] < BigInt::from(4));
        assert_eq!(q.classify(&ints(&[4, 0])).unwrap(), ints(&[0, 0]));
        for (rep, class) in q
            .representatives()
            .iter()
            .zip([ints(&[1, 0]), ints(&[0, 1])])
        {
            assert_eq!(q.classify(rep).unwrap(), class);
        }
    }

    #[test]
    fn invariant_normalization() {
        let inv = AbelianInvariants::from_orders(1, &ints(&[2, 3, 1, 0]));
        assert_eq!(
            inv,
            AbelianInvariants {
                free_rank: 2,
                torsion: ints(&[6])
            }
        );
        assert_eq!(inv.to_string(), "Z/6 ⊕ Z^2");
        assert!(inv.is_divisibility_chain());
        assert_eq!(AbelianInvariants::free(1).to_string(), "Z");
        assert_eq!(AbelianInvariants::zero().to_string(), "0");
    }
}
