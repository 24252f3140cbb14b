//! Smith normal form over the integers.
//!
//! The reduction is a pivoted Euclidean elimination. Each step picks the entry of
//! smallest absolute value in the unreduced block (ties broken by lowest `(row, col)`),
//! clears its row and column with floor-division steps, and repeats until the pivot
//! divides everything that remains. The elementary operations are replayed on the
//! transform matrices so that `U·M·V = D` holds exactly.
//!
//! Working storage is dense below 64×64 and row-sparse (with column occupancy sets)
//! above. Both back ends share one elimination routine.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::IntMatrix;

const DENSE_LIMIT: usize = 64;

/// Unimodular diagonalization `U·M·V = D` of an integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    /// The `min(rows, cols)` diagonal entries of `D`: nonnegative, nonzero ones first,
    /// each nonzero entry dividing the next.
    pub diagonal: Vec<BigInt>,
}

impl SmithDecomposition {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().take_while(|d| !d.is_zero()).count()
    }

    pub fn invariant_factors(&self) -> &[BigInt] {
        &self.diagonal[..self.rank()]
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let parts = reduce(
        m,
        Track {
            u: true,
            u_inv: false,
            v: true,
        },
    );
    SmithDecomposition {
        u: parts.u.expect("tracked"),
        d: IntMatrix::diagonal(m.rows(), m.cols(), &parts.diagonal),
        v: parts.v.expect("tracked"),
        diagonal: parts.diagonal,
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Track {
    pub u: bool,
    pub u_inv: bool,
    pub v: bool,
}

pub(crate) struct SmithParts {
    pub diagonal: Vec<BigInt>,
    pub u: Option<IntMatrix>,
    pub u_inv: Option<IntMatrix>,
    pub v: Option<IntMatrix>,
}

impl SmithParts {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().take_while(|d| !d.is_zero()).count()
    }
}

pub(crate) fn reduce(m: &IntMatrix, track: Track) -> SmithParts {
    if m.rows() >= DENSE_LIMIT || m.cols() >= DENSE_LIMIT {
        run::<Sparse>(m, track)
    } else {
        run::<Dense>(m, track)
    }
}

fn run<W: Work>(m: &IntMatrix, track: Track) -> SmithParts {
    let (r, c) = (m.rows(), m.cols());
    let mut red = Reducer {
        m: W::from_matrix(m),
        u: track.u.then(|| W::from_matrix(&IntMatrix::identity(r))),
        u_inv: track.u_inv.then(|| W::from_matrix(&IntMatrix::identity(r))),
        v: track.v.then(|| W::from_matrix(&IntMatrix::identity(c))),
    };
    red.eliminate();
    let diagonal = (0..r.min(c))
        .map(|i| red.m.get(i, i).cloned().unwrap_or_else(BigInt::zero))
        .collect();
    SmithParts {
        diagonal,
        u: red.u.map(|w| w.to_matrix()),
        u_inv: red.u_inv.map(|w| w.to_matrix()),
        v: red.v.map(|w| w.to_matrix()),
    }
}

/// Elementary-operation interface shared by the dense and sparse back ends.
trait Work: Sized {
    fn from_matrix(m: &IntMatrix) -> Self;
    fn to_matrix(&self) -> IntMatrix;
    fn get(&self, i: usize, j: usize) -> Option<&BigInt>;
    /// `row[t] += f * row[s]`
    fn row_axpy(&mut self, t: usize, s: usize, f: &BigInt);
    /// `col[t] += f * col[s]`
    fn col_axpy(&mut self, t: usize, s: usize, f: &BigInt);
    fn swap_rows(&mut self, a: usize, b: usize);
    fn swap_cols(&mut self, a: usize, b: usize);
    fn negate_row(&mut self, i: usize);
    fn negate_col(&mut self, j: usize);
    /// Rows `>= from` with a nonzero in column `j`.
    fn col_support(&self, j: usize, from: usize) -> Vec<usize>;
    /// Columns `>= from` with a nonzero in row `i`.
    fn row_support(&self, i: usize, from: usize) -> Vec<usize>;
    /// Position of the smallest-magnitude entry in the block `[from.., from..]`.
    fn min_entry(&self, from: usize) -> Option<(usize, usize)>;
    /// A row `>= from` holding an entry in a column `>= from` not divisible by `d`.
    fn non_divisible_row(&self, from: usize, d: &BigInt) -> Option<usize>;
}

struct Reducer<W> {
    m: W,
    u: Option<W>,
    u_inv: Option<W>,
    v: Option<W>,
}

impl<W: Work> Reducer<W> {
    fn row_axpy(&mut self, t: usize, s: usize, f: &BigInt) {
        self.m.row_axpy(t, s, f);
        if let Some(u) = &mut self.u {
            u.row_axpy(t, s, f);
        }
        if let Some(ui) = &mut self.u_inv {
            ui.col_axpy(s, t, &-f);
        }
    }

    fn col_axpy(&mut self, t: usize, s: usize, f: &BigInt) {
        self.m.col_axpy(t, s, f);
        if let Some(v) = &mut self.v {
            v.col_axpy(t, s, f);
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.m.swap_rows(a, b);
        if let Some(u) = &mut self.u {
            u.swap_rows(a, b);
        }
        if let Some(ui) = &mut self.u_inv {
            ui.swap_cols(a, b);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.m.swap_cols(a, b);
        if let Some(v) = &mut self.v {
            v.swap_cols(a, b);
        }
    }

    fn negate_row(&mut self, i: usize) {
        self.m.negate_row(i);
        if let Some(u) = &mut self.u {
            u.negate_row(i);
        }
        if let Some(ui) = &mut self.u_inv {
            ui.negate_col(i);
        }
    }

    fn eliminate(&mut self) {
        let mut t = 0;
        while let Some((pi, pj)) = self.m.min_entry(t) {
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            loop {
                let pivot = self.m.get(t, t).expect("pivot is nonzero").clone();
                let mut dirty = false;
                for i in self.m.col_support(t, t + 1) {
                    let q = self.m.get(i, t).expect("support").div_floor(&pivot);
                    if !q.is_zero() {
                        self.row_axpy(i, t, &-q);
                    }
                    dirty |= self.m.get(i, t).is_some();
                }
                for j in self.m.row_support(t, t + 1) {
                    let q = self.m.get(t, j).expect("support").div_floor(&pivot);
                    if !q.is_zero() {
                        self.col_axpy(j, t, &-q);
                    }
                    dirty |= self.m.get(t, j).is_some();
                }
                if dirty {
                    // Remainders are strictly smaller than the pivot; move the smallest in.
                    let mut best: Option<(BigInt, usize, usize)> = None;
                    let cands = self
                        .m
                        .row_support(t, t + 1)
                        .into_iter()
                        .map(|j| (t, j))
                        .chain(self.m.col_support(t, t + 1).into_iter().map(|i| (i, t)));
                    for (i, j) in cands {
                        let a = self.m.get(i, j).expect("support").abs();
                        let better = match &best {
                            None => true,
                            Some((b, bi, bj)) => (&a, i, j) < (b, *bi, *bj),
                        };
                        if better {
                            best = Some((a, i, j));
                        }
                    }
                    let (_, i, j) = best.expect("dirty implies a remainder");
                    self.swap_rows(t, i);
                    self.swap_cols(t, j);
                    continue;
                }
                if let Some(i) = self.m.non_divisible_row(t + 1, &pivot) {
                    self.row_axpy(t, i, &BigInt::one());
                    continue;
                }
                break;
            }
            if self.m.get(t, t).expect("pivot").is_negative() {
                self.negate_row(t);
            }
            t += 1;
        }
    }
}

struct Dense {
    rows: usize,
    cols: usize,
    a: Vec<Vec<BigInt>>,
}

impl Work for Dense {
    fn from_matrix(m: &IntMatrix) -> Self {
        Dense {
            rows: m.rows(),
            cols: m.cols(),
            a: m.to_dense(),
        }
    }

    fn to_matrix(&self) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.rows, self.cols);
        for (i, row) in self.a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    out.set(i, j, v.clone());
                }
            }
        }
        out
    }

    fn get(&self, i: usize, j: usize) -> Option<&BigInt> {
        let v = &self.a[i][j];
        (!v.is_zero()).then_some(v)
    }

    fn row_axpy(&mut self, t: usize, s: usize, f: &BigInt) {
        for j in 0..self.cols {
            if !self.a[s][j].is_zero() {
                let delta = f * &self.a[s][j];
                self.a[t][j] += delta;
            }
        }
    }

    fn col_axpy(&mut self, t: usize, s: usize, f: &BigInt) {
        for row in &mut self.a {
            if !row[s].is_zero() {
                let delta = f * &row[s];
                row[t] += delta;
            }
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        self.a.swap(a, b);
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for row in &mut self.a {
            row.swap(a, b);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for v in &mut self.a[i] {
            *v = -&*v;
        }
    }

    fn negate_col(&mut self, j: usize) {
        for row in &mut self.a {
            row[j] = -&row[j];
        }
    }

    fn col_support(&self, j: usize, from: usize) -> Vec<usize> {
        (from..self.rows)
            .filter(|&i| !self.a[i][j].is_zero())
            .collect()
    }

    fn row_support(&self, i: usize, from: usize) -> Vec<usize> {
        (from..self.cols)
            .filter(|&j| !self.a[i][j].is_zero())
            .collect()
    }

    fn min_entry(&self, from: usize) -> Option<(usize, usize)> {
        let mut best: Option<(BigInt, usize, usize)> = None;
        for i in from..self.rows {
            for j in from..self.cols {
                let v = &self.a[i][j];
                if v.is_zero() {
                    continue;
                }
                if best
                    .as_ref()
                    .is_none_or(|(b, _, _)| v.magnitude() < b.magnitude())
                {
                    best = Some((v.abs(), i, j));
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }

    fn non_divisible_row(&self, from: usize, d: &BigInt) -> Option<usize> {
        (from..self.rows).find(|&i| {
            (from..self.cols).any(|j| !self.a[i][j].is_zero() && !self.a[i][j].is_multiple_of(d))
        })
    }
}

struct Sparse {
    rows: Vec<BTreeMap<usize, BigInt>>,
    occupancy: Vec<BTreeSet<usize>>,
}

impl Sparse {
    fn put(&mut self, i: usize, j: usize, v: BigInt) {
        if v.is_zero() {
            self.rows[i].remove(&j);
            self.occupancy[j].remove(&i);
        } else {
            self.rows[i].insert(j, v);
            self.occupancy[j].insert(i);
        }
    }
}

impl Work for Sparse {
    fn from_matrix(m: &IntMatrix) -> Self {
        let mut w = Sparse {
            rows: vec![BTreeMap::new(); m.rows()],
            occupancy: vec![BTreeSet::new(); m.cols()],
        };
        for (i, j, v) in m.iter() {
            w.put(i, j, v.clone());
        }
        w
    }

    fn to_matrix(&self) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.rows.len(), self.occupancy.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, v) in row {
                out.set(i, j, v.clone());
            }
        }
        out
    }

    fn get(&self, i: usize, j: usize) -> Option<&BigInt> {
        self.rows[i].get(&j)
    }

    fn row_axpy(&mut self, t: usize, s: usize, f: &BigInt) {
        let src: Vec<(usize, BigInt)> = self.rows[s].iter().map(|(&j, v)| (j, v * f)).collect();
        for (j, delta) in src {
            let cur = self.rows[t].get(&j).cloned().unwrap_or_else(BigInt::zero);
            self.put(t, j, cur + delta);
        }
    }

    fn col_axpy(&mut self, t: usize, s: usize, f: &BigInt) {
        let src: Vec<usize> = self.occupancy[s].iter().copied().collect();
        for i in src {
            let delta = &self.rows[i][&s] * f;
            let cur = self.rows[i].get(&t).cloned().unwrap_or_else(BigInt::zero);
            self.put(i, t, cur + delta);
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        let cols: BTreeSet<usize> = self.rows[a]
            .keys()
            .chain(self.rows[b].keys())
            .copied()
            .collect();
        self.rows.swap(a, b);
        for j in cols {
            let occ = &mut self.occupancy[j];
            occ.remove(&a);
            occ.remove(&b);
            if self.rows[a].contains_key(&j) {
                occ.insert(a);
            }
            if self.rows[b].contains_key(&j) {
                occ.insert(b);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        let rows: BTreeSet<usize> = self.occupancy[a]
            .union(&self.occupancy[b])
            .copied()
            .collect();
        for i in rows {
            let va = self.rows[i].remove(&a);
            let vb = self.rows[i].remove(&b);
            if let Some(v) = va {
                self.rows[i].insert(b, v);
            }
            if let Some(v) = vb {
                self.rows[i].insert(a, v);
            }
        }
        self.occupancy.swap(a, b);
    }

    fn negate_row(&mut self, i: usize) {
        for v in self.rows[i].values_mut() {
            *v = -&*v;
        }
    }

    fn negate_col(&mut self, j: usize) {
        let rows: Vec<usize> = self.occupancy[j].iter().copied().collect();
        for i in rows {
            let v = self.rows[i].get_mut(&j).expect("occupancy");
            *v = -&*v;
        }
    }

    fn col_support(&self, j: usize, from: usize) -> Vec<usize> {
        self.occupancy[j].range(from..).copied().collect()
    }

    fn row_support(&self, i: usize, from: usize) -> Vec<usize> {
        self.rows[i].range(from..).map(|(&j, _)| j).collect()
    }

    fn min_entry(&self, from: usize) -> Option<(usize, usize)> {
        let mut best: Option<(&BigInt, usize, usize)> = None;
        for (i, row) in self.rows.iter().enumerate().skip(from) {
            for (&j, v) in row.range(from..) {
                if best.is_none_or(|(b, _, _)| v.magnitude() < b.magnitude()) {
                    best = Some((v, i, j));
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }

    fn non_divisible_row(&self, from: usize, d: &BigInt) -> Option<usize> {
        (from..self.rows.len()).find(|&i| {
            self.rows[i]
                .range(from..)
                .any(|(_, v)| !v.is_multiple_of(d))
        })
    }
}
