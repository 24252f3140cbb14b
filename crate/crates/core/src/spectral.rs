//! The spectral sequence of the 8-step filtration `F_n C_j = ⊕_{m ≥ 0} C_{n+8m}`.
//!
//! Pages are computed directly from the filtered complex with the subquotient formulas
//!
//! ```text
//! Z^k_n = { x ∈ F_n C_j : ∂x ∈ F_{n-1+8k} C_{j-1} }
//! E^k_n = Z^k_n / (Z^{k-1}_{n+8} + ∂ Z^{k-1}_{n+1-8(k-1)})
//! ```
//!
//! with `Z^{-1}_n = F_n`. The differential `d^k : E^k_n → E^k_{n+8k-1}` is induced by `∂`
//! on representatives. Bidegrees are `(n, j)` with `j = n mod 8`, so every page is
//! periodic in `j` by construction.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::complex::{residue, total_homology_mod8, ComplexError, FilteredComplex, HomologyTable};
use crate::linalg::{kernel_lattice, reduce_rows, AbelianInvariants, IntMatrix, Subquotient};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("representative of E^{k}_{n} does not map into the target of d^{k}")]
    RepresentativeMismatch { k: u32, n: i64 },
    #[error("page {k} was not computed from this complex")]
    PageMismatch { k: u32 },
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

/// One group `E^k_{n,j}` with representatives in generator coordinates.
#[derive(Clone, Debug)]
pub struct PageGroup {
    pub n: i64,
    pub invariants: AbelianInvariants,
    pub representatives: Vec<Vec<BigInt>>,
    quotient: Subquotient,
}

impl PageGroup {
    fn new(n: i64, quotient: Subquotient) -> Self {
        PageGroup {
            n,
            invariants: quotient.invariants().clone(),
            representatives: quotient.representatives().to_vec(),
            quotient,
        }
    }

    pub fn j(&self) -> u8 {
        residue(self.n)
    }

    pub fn dim_q(&self) -> usize {
        self.invariants.free_rank
    }

    pub fn orders(&self) -> &[BigInt] {
        self.quotient.orders()
    }

    /// Class of `x ∈ Z^k_n` in this group, or `None` when `x ∉ Z^k_n`.
    pub fn classify(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        self.quotient.classify(x)
    }
}

/// Page `E^k`: groups for every `n` carrying a generator, and (once filled) the
/// matrices of `d^k` keyed by source `n`.
#[derive(Clone, Debug)]
pub struct Page {
    pub k: u32,
    groups: BTreeMap<i64, PageGroup>,
    differentials: BTreeMap<i64, IntMatrix>,
    filled: bool,
}

impl Page {
    pub fn groups(&self) -> impl Iterator<Item = &PageGroup> {
        self.groups.values()
    }

    pub fn group(&self, n: i64) -> Option<&PageGroup> {
        self.groups.get(&n)
    }

    /// Group at bidegree `(n, j)`; `j` is read mod 8 and must agree with `n`.
    pub fn group_at(&self, n: i64, j: i64) -> Option<&PageGroup> {
        if residue(n) != residue(j) {
            return None;
        }
        self.group(n)
    }

    pub fn invariants(&self, n: i64) -> AbelianInvariants {
        self.group(n)
            .map_or_else(AbelianInvariants::zero, |g| g.invariants.clone())
    }

    /// Nontrivial groups only.
    pub fn invariants_map(&self) -> BTreeMap<i64, AbelianInvariants> {
        self.groups
            .iter()
            .filter(|(_, g)| !g.invariants.is_trivial())
            .map(|(&n, g)| (n, g.invariants.clone()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.groups.values().all(|g| g.invariants.is_trivial())
    }

    /// `n + 8k - 1`.
    pub fn differential_target(&self, n: i64) -> i64 {
        n + 8 * self.k as i64 - 1
    }

    pub fn has_differentials(&self) -> bool {
        self.filled
    }

    /// Matrix of `d^k` out of `E^k_n` (rows: target generators), when both ends are nontrivial.
    pub fn differential(&self, n: i64) -> Option<&IntMatrix> {
        self.differentials.get(&n)
    }

    pub fn differentials(&self) -> impl Iterator<Item = (i64, &IntMatrix)> {
        self.differentials.iter().map(|(&n, m)| (n, m))
    }

    /// Source of the first nonzero differential, in increasing `n`.
    pub fn first_nonzero_differential(&self) -> Option<i64> {
        self.differentials
            .iter()
            .find(|(_, m)| !m.is_zero())
            .map(|(&n, _)| n)
    }
}

/// Smallest `k` with `8k - 1 > span`; from that page on every differential vanishes.
pub fn stable_page_index(sf_span: i64) -> u32 {
    let mut k = 0u32;
    while 8 * k as i64 - 1 <= sf_span {
        k += 1;
    }
    k
}

/// Lattice computations on the filtration of one complex.
pub(crate) struct Filtration<'a> {
    complex: &'a FilteredComplex,
    boundary: IntMatrix,
}

impl<'a> Filtration<'a> {
    pub(crate) fn new(complex: &'a FilteredComplex) -> Self {
        Filtration {
            complex,
            boundary: complex.boundary_matrix(),
        }
    }

    fn gens(&self) -> usize {
        self.complex.len()
    }

    fn positions(&self, pred: impl Fn(i64) -> bool) -> Vec<usize> {
        self.complex
            .generators()
            .iter()
            .enumerate()
            .filter(|(_, g)| pred(g.sf))
            .map(|(i, _)| i)
            .collect()
    }

    /// Generators spanning `F_n`.
    fn level(&self, n: i64) -> Vec<usize> {
        self.positions(|sf| sf >= n && (sf - n).rem_euclid(8) == 0)
    }

    /// `Z^k_n` as columns in generator coordinates (`k ≤ 0` gives all of `F_n`).
    pub(crate) fn cycles(&self, k: i64, n: i64) -> IntMatrix {
        let cols = self.level(n);
        let rows = if k <= 0 {
            Vec::new()
        } else {
            self.positions(|sf| {
                sf >= n - 1 && sf < n - 1 + 8 * k && (sf - (n - 1)).rem_euclid(8) == 0
            })
        };
        let basis = if rows.is_empty() {
            IntMatrix::identity(cols.len())
        } else {
            kernel_lattice(&self.boundary.select(&rows, &cols))
        };
        crate::complex::embed_columns(&basis, &cols, self.gens())
    }

    /// `Z^{k-1}_{n+8} + ∂ Z^{k-1}_{n+1-8(k-1)}` as a spanning set.
    pub(crate) fn boundaries(&self, k: i64, n: i64) -> IntMatrix {
        let lower = self.cycles(k - 1, n + 8);
        let hit = self.boundary.mul(&self.cycles(k - 1, n + 1 - 8 * (k - 1)));
        lower.hstack(&hit)
    }

    pub(crate) fn group(&self, k: i64, n: i64) -> Subquotient {
        Subquotient::new(&self.cycles(k, n), &self.boundaries(k, n))
            .expect("boundaries lie in cycles for a filtered complex")
    }

    pub(crate) fn apply_boundary(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.boundary.mul_vec(x)
    }
}

/// Groups of `E^k` computed directly from the subquotient formula. Differentials are
/// left empty; see [`page_differential`].
pub fn compute_page(c: &FilteredComplex, k: u32) -> Result<Page, SpectralError> {
    c.ensure_valid()?;
    Ok(groups_only(c, k))
}

fn groups_only(c: &FilteredComplex, k: u32) -> Page {
    let filt = Filtration::new(c);
    let groups: BTreeMap<i64, PageGroup> = c
        .sf_levels()
        .into_par_iter()
        .map(|n| (n, PageGroup::new(n, filt.group(k as i64, n))))
        .collect();
    Page {
        k,
        groups,
        differentials: BTreeMap::new(),
        filled: false,
    }
}

/// Fills in `d^k` on a page computed from `c`, by pushing representatives through `∂`.
pub fn page_differential(c: &FilteredComplex, page: &Page) -> Result<Page, SpectralError> {
    if page.groups.keys().copied().ne(c.sf_levels()) {
        return Err(SpectralError::PageMismatch { k: page.k });
    }
    let filt = Filtration::new(c);
    let mut out = page.clone();
    out.differentials.clear();
    for (&n, src) in &page.groups {
        if src.invariants.is_trivial() {
            continue;
        }
        let m = page.differential_target(n);
        let Some(dst) = page.groups.get(&m) else {
            continue;
        };
        if dst.invariants.is_trivial() {
            continue;
        }
        let mut cols = Vec::with_capacity(src.representatives.len());
        for rep in &src.representatives {
            let image = filt.apply_boundary(rep);
            match dst.classify(&image) {
                Some(class) => cols.push(class),
                None => return Err(SpectralError::RepresentativeMismatch { k: page.k, n }),
            }
        }
        let matrix = IntMatrix::from_columns(dst.representatives.len(), &cols);
        out.differentials.insert(n, matrix);
    }
    out.filled = true;
    Ok(out)
}

/// Page with differentials, in one call.
pub fn page_with_differentials(c: &FilteredComplex, k: u32) -> Result<Page, SpectralError> {
    let page = compute_page(c, k)?;
    page_differential(c, &page)
}

/// `d^k ∘ d^k`, reduced modulo the orders of the target generators, for each source `n`
/// where both maps are present.
pub fn differential_squares(page: &Page) -> BTreeMap<i64, IntMatrix> {
    let mut out = BTreeMap::new();
    for (&n, first) in &page.differentials {
        let mid = page.differential_target(n);
        let Some(second) = page.differentials.get(&mid) else {
            continue;
        };
        let target = page.differential_target(mid);
        let orders = page.groups[&target].orders();
        out.insert(n, reduce_rows(&second.mul(first), orders));
    }
    out
}

/// Homology of `(E^k, d^k)` computed from the page's own presentations and
/// differential matrices (without going back to the chain level).
pub fn homology_of_page(page: &Page) -> Result<BTreeMap<i64, AbelianInvariants>, SpectralError> {
    if !page.filled {
        return Err(SpectralError::Inconsistent(format!(
            "page {} has no differentials",
            page.k
        )));
    }
    let shift = 8 * page.k as i64 - 1;
    let mut out = BTreeMap::new();
    for (&n, group) in &page.groups {
        let orders = group.orders();
        let g = orders.len();
        if g == 0 {
            out.insert(n, AbelianInvariants::zero());
            continue;
        }
        let relations = torsion_relations(orders);
        let numerator = match page.differentials.get(&n) {
            Some(d_out) => {
                let t_orders = page.groups[&(n + shift)].orders();
                let stacked = d_out.hstack(&torsion_relations(t_orders));
                let ker = kernel_lattice(&stacked);
                let top: Vec<usize> = (0..g).collect();
                let all: Vec<usize> = (0..ker.cols()).collect();
                ker.select(&top, &all)
            }
            None => IntMatrix::identity(g),
        };
        let denominator = match page.differentials.get(&(n - shift)) {
            Some(d_in) => d_in.hstack(&relations),
            None => relations,
        };
        let q = Subquotient::new(&numerator, &denominator).map_err(|_| {
            SpectralError::Inconsistent(format!(
                "d^{} ∘ d^{} ≠ 0 at n = {}",
                page.k,
                page.k,
                n - shift
            ))
        })?;
        out.insert(n, q.invariants().clone());
    }
    Ok(out)
}

/// Square matrix whose columns are `order_i · e_i` for the torsion generators.
fn torsion_relations(orders: &[BigInt]) -> IntMatrix {
    IntMatrix::diagonal(orders.len(), orders.len(), orders)
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub stable_k: u32,
    pub e_infinity: Page,
    /// `⊕_{n ≡ j} E^∞_{n,j}` for each `j` with a nontrivial sum.
    pub assembled: BTreeMap<u8, AbelianInvariants>,
    pub hf_direct: HomologyTable<u8>,
    /// Whether `dim_Q` of the assembled sum equals `dim_Q HF_j`, for `j = 0..8`.
    pub agree_over_q: [bool; 8],
}

impl ConvergenceReport {
    pub fn all_agree(&self) -> bool {
        self.agree_over_q.iter().all(|&b| b)
    }
}

pub fn e_infinity(c: &FilteredComplex) -> Result<ConvergenceReport, SpectralError> {
    c.ensure_valid()?;
    let stable_k = stable_page_index(c.sf_span());
    let page = page_differential(c, &groups_only(c, stable_k))?;
    let mut assembled: BTreeMap<u8, AbelianInvariants> = BTreeMap::new();
    for g in page.groups() {
        let entry = assembled.entry(g.j()).or_default();
        *entry = entry.direct_sum(&g.invariants);
    }
    assembled.retain(|_, inv| !inv.is_trivial());
    let hf_direct = total_homology_mod8(c)?;
    let mut agree_over_q = [false; 8];
    for j in 0..8u8 {
        let lhs = assembled.get(&j).map_or(0, |i| i.free_rank);
        agree_over_q[j as usize] = lhs == hf_direct.invariants(j).free_rank;
    }
    Ok(ConvergenceReport {
        stable_k,
        e_infinity: page,
        assembled,
        hf_direct,
        agree_over_q,
    })
}

/// Location of the first nonvanishing higher differential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollapseWitness {
    pub k: u32,
    pub n: i64,
    pub j: u8,
    pub matrix: IntMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollapseReport {
    pub collapsed: bool,
    pub stable_k: u32,
    pub witness: Option<CollapseWitness>,
    /// `Σ_m rank I_{j+8m}` for each `j`.
    pub graded_ranks: [usize; 8],
    /// `rank HF_j` for each `j`.
    pub hf_ranks: [usize; 8],
}

/// Decides whether `d^k = 0` for all `1 ≤ k ≤ stable_k`.
///
/// When the sequence collapses the rank identity `Σ_m rank I_{j+8m} = rank HF_j` is
/// checked and a failure is reported as an internal inconsistency.
pub fn collapse_detect(c: &FilteredComplex) -> Result<CollapseReport, SpectralError> {
    c.ensure_valid()?;
    let stable_k = stable_page_index(c.sf_span());
    let mut witness = None;
    for k in 1..=stable_k {
        let page = page_differential(c, &groups_only(c, k))?;
        if let Some(n) = page.first_nonzero_differential() {
            witness = Some(CollapseWitness {
                k,
                n,
                j: residue(n),
                matrix: page.differential(n).expect("present").clone(),
            });
            break;
        }
    }
    let e1 = groups_only(c, 1);
    let hf = total_homology_mod8(c)?;
    let mut graded_ranks = [0usize; 8];
    let mut hf_ranks = [0usize; 8];
    for g in e1.groups() {
        graded_ranks[g.j() as usize] += g.dim_q();
    }
    for j in 0..8u8 {
        hf_ranks[j as usize] = hf.invariants(j).free_rank;
    }
    let collapsed = witness.is_none();
    if collapsed && graded_ranks != hf_ranks {
        return Err(SpectralError::Inconsistent(format!(
            "no higher differentials but graded ranks {graded_ranks:?} differ from HF ranks {hf_ranks:?}"
        )));
    }
    Ok(CollapseReport {
        collapsed,
        stable_k,
        witness,
        graded_ranks,
        hf_ranks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{graded_homology, BoundaryEntry, Generator};
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn d1demo() -> FilteredComplex {
        FilteredComplex::new(
            q(0, 1),
            vec![
                Generator::new("a", 0, q(1, 3)),
                Generator::new("b", 7, q(2, 3)),
            ],
            vec![BoundaryEntry::new("a", "b", 1)],
        )
        .unwrap()
    }

    fn sigma235() -> FilteredComplex {
        FilteredComplex::new(
            q(0, 1),
            vec![
                Generator::new("a_alpha", 1, q(1, 4)),
                Generator::new("a_beta", 5, q(3, 4)),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn stabilization_bound() {
        assert_eq!(stable_page_index(0), 1);
        assert_eq!(stable_page_index(6), 1);
        assert_eq!(stable_page_index(7), 2);
        assert_eq!(stable_page_index(48), 7);
    }

    #[test]
    fn page_zero_is_the_chain_group() {
        let c = d1demo();
        let e0 = compute_page(&c, 0).unwrap();
        assert_eq!(e0.invariants(0), AbelianInvariants::free(1));
        assert_eq!(e0.invariants(7), AbelianInvariants::free(1));
        assert_eq!(e0.invariants(3), AbelianInvariants::zero());
    }

    #[test]
    fn d1demo_pages() {
        let c = d1demo();
        let e1 = page_with_differentials(&c, 1).unwrap();
        assert_eq!(e1.invariants(0), AbelianInvariants::free(1));
        assert_eq!(e1.invariants(7), AbelianInvariants::free(1));
        assert_eq!(e1.group_at(0, 0).unwrap().n, 0);
        assert!(e1.group_at(0, 1).is_none());
        assert_eq!(e1.differential(0), Some(&IntMatrix::from_rows(&[vec![1]])));
        let e2 = compute_page(&c, 2).unwrap();
        assert!(e2.is_zero());
        let h = homology_of_page(&e1).unwrap();
        assert!(h.values().all(AbelianInvariants::is_trivial));
    }

    #[test]
    fn sigma235_collapses() {
        let c = sigma235();
        let e1 = page_with_differentials(&c, 1).unwrap();
        assert_eq!(
            e1.invariants_map(),
            graded_homology(&c).unwrap().invariants_map()
        );
        assert!(e1.differentials().all(|(_, m)| m.is_zero()));
        let report = collapse_detect(&c).unwrap();
        assert!(report.collapsed);
        let conv = e_infinity(&c).unwrap();
        assert!(conv.all_agree());
        assert_eq!(conv.assembled[&1], AbelianInvariants::free(1));
        assert_eq!(conv.assembled[&5], AbelianInvariants::free(1));
    }

    #[test]
    fn d1demo_collapse_witness() {
        let report = collapse_detect(&d1demo()).unwrap();
        assert!(!report.collapsed);
        let w = report.witness.unwrap();
        assert_eq!((w.k, w.n, w.j), (1, 0, 0));
        let conv = e_infinity(&d1demo()).unwrap();
        assert!(conv.e_infinity.is_zero());
        assert!(conv.hf_direct.is_zero());
        assert!(conv.all_agree());
    }

    #[test]
    fn empty_complex() {
        let c = FilteredComplex::empty(q(0, 1));
        assert!(collapse_detect(&c).unwrap().collapsed);
        assert!(e_infinity(&c).unwrap().assembled.is_empty());
    }

    #[test]
    fn far_pages_have_zero_differentials() {
        let c = d1demo();
        let page = page_with_differentials(&c, 5).unwrap();
        assert!(page.differentials().all(|(_, m)| m.is_zero()));
    }

    #[test]
    fn torsion_survives_on_pages() {
        // x(sf 0) -> y(sf 7) with coefficient 3: d^1 is multiplication by 3.
        let c = FilteredComplex::new(
            q(0, 1),
            vec![
                Generator::new("x", 0, q(1, 3)),
                Generator::new("y", 7, q(2, 3)),
            ],
            vec![BoundaryEntry::new("x", "y", 3)],
        )
        .unwrap();
        let e1 = page_with_differentials(&c, 1).unwrap();
        assert_eq!(e1.differential(0), Some(&IntMatrix::from_rows(&[vec![3]])));
        let e2 = compute_page(&c, 2).unwrap();
        assert_eq!(e2.invariants(0), AbelianInvariants::zero());
        assert_eq!(
            e2.invariants(7),
            AbelianInvariants {
                free_rank: 0,
                torsion: vec![BigInt::from(3)]
            }
        );
        assert_eq!(homology_of_page(&e1).unwrap()[&7], e2.invariants(7));
    }

    #[test]
    fn mismatched_page_is_rejected() {
        let page = compute_page(&d1demo(), 1).unwrap();
        assert!(matches!(
            page_differential(&sigma235(), &page),
            Err(SpectralError::PageMismatch { k: 1 })
        ));
    }
}
