//! Filtered Floer chain complexes over one Chern-Simons band `(r, r+1)`.
//!
//! A generator carries the spectral flow `sf` of its preferred lift and the lifted
//! Chern-Simons value `cs`. A boundary entry `a → b` must drop the spectral flow by
//! `1 - 8k` for some `k ≥ 0`; the `k = 0` part is the band-preserving differential
//! whose homology is the integer-graded group `I_n`, and the full boundary computes
//! the mod-8 graded Floer homology `HF_j`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::linalg::{kernel_lattice, AbelianInvariants, IntMatrix, Subquotient};

/// Residue of a spectral-flow value in `Z/8`.
#[inline]
pub fn residue(sf: i64) -> u8 {
    sf.rem_euclid(8) as u8
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub id: String,
    pub sf: i64,
    pub cs: BigRational,
}

impl Generator {
    pub fn new(id: impl Into<String>, sf: i64, cs: BigRational) -> Self {
        Generator {
            id: id.into(),
            sf,
            cs,
        }
    }

    /// Floer degree `j = sf mod 8`.
    pub fn degree(&self) -> u8 {
        residue(self.sf)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryEntry {
    pub from: String,
    pub to: String,
    pub coeff: BigInt,
}

impl BoundaryEntry {
    pub fn new(from: impl Into<String>, to: impl Into<String>, coeff: impl Into<BigInt>) -> Self {
        BoundaryEntry {
            from: from.into(),
            to: to.into(),
            coeff: coeff.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ComplexError {
    #[error("duplicate generator id `{0}`")]
    DuplicateId(String),
    #[error("boundary entry refers to unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("complex fails validation: {0}")]
    InvalidComplex(ValidationReport),
}

/// One violated rule, with the offending data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    CsOutsideBand {
        id: String,
        cs: BigRational,
    },
    ZeroCoefficient {
        from: String,
        to: String,
    },
    RepeatedEntry {
        from: String,
        to: String,
    },
    /// `sf(from) - sf(to)` is not of the form `1 - 8k` with `k ≥ 0`.
    DegreeRule {
        from: String,
        to: String,
        drop: i64,
    },
    /// A band-preserving (`k = 0`) entry whose source does not have larger `cs`.
    Monotonicity {
        from: String,
        to: String,
    },
    /// `(∂∘∂)(from)` has coefficient `value` on `to`.
    BoundarySquare {
        from: String,
        to: String,
        value: BigInt,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::CsOutsideBand { id, cs } => {
                write!(f, "generator {id}: cs {cs} not inside the open band")
            }
            Violation::ZeroCoefficient { from, to } => {
                write!(f, "boundary {from} -> {to}: zero coefficient")
            }
            Violation::RepeatedEntry { from, to } => {
                write!(f, "boundary {from} -> {to}: entry listed more than once")
            }
            Violation::DegreeRule { from, to, drop } => write!(
                f,
                "boundary {from} -> {to}: sf drop {drop} is not 1 - 8k with k >= 0"
            ),
            Violation::Monotonicity { from, to } => write!(
                f,
                "boundary {from} -> {to}: band-preserving entry needs cs({from}) > cs({to})"
            ),
            Violation::BoundarySquare { from, to, value } => {
                write!(
                    f,
                    "boundary squared: {from} -> {to} has coefficient {value}"
                )
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilteredComplex {
    band_r: BigRational,
    generators: Vec<Generator>,
    boundary: Vec<BoundaryEntry>,
    index: HashMap<String, usize>,
}

impl FilteredComplex {
    /// Builds a complex, rejecting duplicate ids and dangling boundary references.
    /// Everything else is checked by [`FilteredComplex::validate`].
    pub fn new(
        band_r: BigRational,
        generators: Vec<Generator>,
        boundary: Vec<BoundaryEntry>,
    ) -> Result<Self, ComplexError> {
        let mut index = HashMap::with_capacity(generators.len());
        for (i, g) in generators.iter().enumerate() {
            if index.insert(g.id.clone(), i).is_some() {
                return Err(ComplexError::DuplicateId(g.id.clone()));
            }
        }
        for e in &boundary {
            for id in [&e.from, &e.to] {
                if !index.contains_key(id) {
                    return Err(ComplexError::UnknownGenerator(id.clone()));
                }
            }
        }
        Ok(FilteredComplex {
            band_r,
            generators,
            boundary,
            index,
        })
    }

    pub fn empty(band_r: BigRational) -> Self {
        FilteredComplex::new(band_r, Vec::new(), Vec::new()).expect("empty complex")
    }

    pub fn band_r(&self) -> &BigRational {
        &self.band_r
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn boundary_entries(&self) -> &[BoundaryEntry] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn generator(&self, id: &str) -> Option<&Generator> {
        self.position(id).map(|i| &self.generators[i])
    }

    pub fn sf_values(&self) -> Vec<i64> {
        self.generators.iter().map(|g| g.sf).collect()
    }

    /// `(min sf, max sf)`, or `None` for the empty complex.
    pub fn sf_range(&self) -> Option<(i64, i64)> {
        let min = self.generators.iter().map(|g| g.sf).min()?;
        let max = self.generators.iter().map(|g| g.sf).max()?;
        Some((min, max))
    }

    pub fn sf_span(&self) -> i64 {
        self.sf_range().map_or(0, |(lo, hi)| hi - lo)
    }

    /// Square matrix of the full boundary: column `a` holds `∂(a)`.
    pub fn boundary_matrix(&self) -> IntMatrix {
        let n = self.len();
        let mut m = IntMatrix::zeros(n, n);
        for e in &self.boundary {
            let a = self.index[&e.from];
            let b = self.index[&e.to];
            m.add_to(b, a, &e.coeff);
        }
        m
    }

    /// Number `k` with `sf(to) = sf(from) - 1 + 8k`, when the drop has that form.
    pub fn lift_shift(&self, e: &BoundaryEntry) -> Option<i64> {
        let a = self.generator(&e.from)?;
        let b = self.generator(&e.to)?;
        let excess = b.sf - a.sf + 1;
        (excess >= 0 && excess % 8 == 0).then_some(excess / 8)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let upper = &self.band_r + BigRational::one();
        for g in &self.generators {
            if g.cs <= self.band_r || g.cs >= upper {
                violations.push(Violation::CsOutsideBand {
                    id: g.id.clone(),
                    cs: g.cs.clone(),
                });
            }
        }
        let mut seen = HashMap::new();
        for e in &self.boundary {
            let key = (e.from.clone(), e.to.clone());
            if seen.insert(key, ()).is_some() {
                violations.push(Violation::RepeatedEntry {
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            }
            if e.coeff.is_zero() {
                violations.push(Violation::ZeroCoefficient {
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            }
            let a = &self.generators[self.index[&e.from]];
            let b = &self.generators[self.index[&e.to]];
            match self.lift_shift(e) {
                None => violations.push(Violation::DegreeRule {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    drop: a.sf - b.sf,
                }),
                Some(0) if a.cs <= b.cs => violations.push(Violation::Monotonicity {
                    from: e.from.clone(),
                    to: e.to.clone(),
                }),
                Some(_) => {}
            }
        }
        let d = self.boundary_matrix();
        for (b, a, v) in d.mul(&d).iter() {
            violations.push(Violation::BoundarySquare {
                from: self.generators[a].id.clone(),
                to: self.generators[b].id.clone(),
                value: v.clone(),
            });
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<(), ComplexError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(ComplexError::InvalidComplex(report))
        }
    }

    /// Positions of generators with the given spectral flow, in input order.
    pub fn indices_with_sf(&self, sf: i64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.generators[i].sf == sf)
            .collect()
    }

    /// Positions of generators in Floer degree `j`.
    pub fn indices_in_degree(&self, j: u8) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.generators[i].degree() == j)
            .collect()
    }

    /// Distinct spectral-flow values, ascending.
    pub fn sf_levels(&self) -> Vec<i64> {
        let mut v = self.sf_values();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Component of the boundary with lift discrepancy `k`, as a family of matrices
/// `∂_k : C_n → C_{n-1+8k}` keyed by the source degree `n`.
///
/// Rows and columns follow the input order of the generators at each level.
/// Levels whose matrix would be empty (no source or no target generators) are omitted.
pub fn boundary_component(
    c: &FilteredComplex,
    k: u32,
) -> Result<BTreeMap<i64, IntMatrix>, ComplexError> {
    c.ensure_valid()?;
    let d = c.boundary_matrix();
    let mut out = BTreeMap::new();
    for n in c.sf_levels() {
        let cols = c.indices_with_sf(n);
        let rows = c.indices_with_sf(n - 1 + 8 * k as i64);
        if rows.is_empty() {
            continue;
        }
        out.insert(n, d.select(&rows, &cols));
    }
    Ok(out)
}

/// One homology group with representative cycles (ambient coordinates indexed by
/// generator position).
#[derive(Clone, Debug)]
pub struct HomologyGroup {
    pub invariants: AbelianInvariants,
    pub representatives: Vec<Vec<BigInt>>,
    pub(crate) quotient: Subquotient,
}

impl HomologyGroup {
    pub(crate) fn from_quotient(quotient: Subquotient) -> Self {
        HomologyGroup {
            invariants: quotient.invariants().clone(),
            representatives: quotient.representatives().to_vec(),
            quotient,
        }
    }

    /// Class of a cycle in generator coordinates, or `None` if it is not a cycle.
    pub fn classify(&self, x: &[BigInt]) -> Option<Vec<BigInt>> {
        self.quotient.classify(x)
    }

    pub fn orders(&self) -> &[BigInt] {
        self.quotient.orders()
    }
}

/// Homology keyed by degree; trivial groups are omitted.
#[derive(Clone, Debug)]
pub struct HomologyTable<K: Ord> {
    pub groups: BTreeMap<K, HomologyGroup>,
}

impl<K: Ord + Copy> HomologyTable<K> {
    pub fn get(&self, key: K) -> Option<&HomologyGroup> {
        self.groups.get(&key)
    }

    pub fn invariants(&self, key: K) -> AbelianInvariants {
        self.groups
            .get(&key)
            .map_or_else(AbelianInvariants::zero, |g| g.invariants.clone())
    }

    pub fn invariants_map(&self) -> BTreeMap<K, AbelianInvariants> {
        self.groups
            .iter()
            .map(|(k, g)| (*k, g.invariants.clone()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Homology of the map `∂` restricted to `cols → rows`, relative to the image of
/// `∂` restricted to `incoming → cols`. All vectors live in generator coordinates.
pub(crate) fn local_homology(
    d: &IntMatrix,
    n_gens: usize,
    cols: &[usize],
    rows: &[usize],
    incoming: &[usize],
) -> Subquotient {
    let block = d.select(rows, cols);
    let kernel = if rows.is_empty() {
        IntMatrix::identity(cols.len())
    } else {
        kernel_lattice(&block)
    };
    let numerator = embed_columns(&kernel, cols, n_gens);
    let all: Vec<usize> = (0..n_gens).collect();
    // Image of the incoming generators, projected onto `cols`.
    let image = d.select(&all, incoming);
    let mut keep = vec![false; n_gens];
    for &i in cols {
        keep[i] = true;
    }
    let mut denominator = IntMatrix::zeros(n_gens, incoming.len());
    for (i, j, v) in image.iter() {
        if keep[i] {
            denominator.set(i, j, v.clone());
        }
    }
    Subquotient::new(&numerator, &denominator).expect("boundaries are cycles when ∂² = 0")
}

/// Lifts columns expressed on the generator subset `positions` to full generator coordinates.
pub(crate) fn embed_columns(m: &IntMatrix, positions: &[usize], n_gens: usize) -> IntMatrix {
    let mut out = IntMatrix::zeros(n_gens, m.cols());
    for (i, j, v) in m.iter() {
        out.set(positions[i], j, v.clone());
    }
    out
}

/// `I_n`: homology of `(C_n, ∂_0)` for every `n` with a generator.
pub fn graded_homology(c: &FilteredComplex) -> Result<HomologyTable<i64>, ComplexError> {
    c.ensure_valid()?;
    let d0 = leading_boundary(c);
    let n_gens = c.len();
    let mut groups = BTreeMap::new();
    for n in c.sf_levels() {
        let q = local_homology(
            &d0,
            n_gens,
            &c.indices_with_sf(n),
            &c.indices_with_sf(n - 1),
            &c.indices_with_sf(n + 1),
        );
        if !q.invariants().is_trivial() {
            groups.insert(n, HomologyGroup::from_quotient(q));
        }
    }
    Ok(HomologyTable { groups })
}

/// `HF_j`: homology of the full boundary on `C_j = ⊕_{n ≡ j} C_n`.
pub fn total_homology_mod8(c: &FilteredComplex) -> Result<HomologyTable<u8>, ComplexError> {
    c.ensure_valid()?;
    let d = c.boundary_matrix();
    let n_gens = c.len();
    let mut groups = BTreeMap::new();
    for j in 0..8u8 {
        let cols = c.indices_in_degree(j);
        if cols.is_empty() {
            continue;
        }
        let q = local_homology(
            &d,
            n_gens,
            &cols,
            &c.indices_in_degree((j + 7) % 8),
            &c.indices_in_degree((j + 1) % 8),
        );
        if !q.invariants().is_trivial() {
            groups.insert(j, HomologyGroup::from_quotient(q));
        }
    }
    Ok(HomologyTable { groups })
}

/// Boundary matrix keeping only the band-preserving (`k = 0`) entries.
pub(crate) fn leading_boundary(c: &FilteredComplex) -> IntMatrix {
    let n = c.len();
    let mut m = IntMatrix::zeros(n, n);
    for e in c.boundary_entries() {
        if c.lift_shift(e) == Some(0) {
            m.add_to(c.index[&e.to], c.index[&e.from], &e.coeff);
        }
    }
    m
}

/// Moves the complex to the band `(r+1, r+2)`: every `cs` rises by one and every
/// `sf` drops by eight, so that `I_m` of the result equals `I_{m+8}` of the input.
pub fn relift(c: &FilteredComplex) -> Result<FilteredComplex, ComplexError> {
    c.ensure_valid()?;
    let one = BigRational::one();
    let generators = c
        .generators
        .iter()
        .map(|g| Generator {
            id: g.id.clone(),
            sf: g.sf - 8,
            cs: &g.cs + &one,
        })
        .collect();
    FilteredComplex::new(&c.band_r + &one, generators, c.boundary.clone())
}
