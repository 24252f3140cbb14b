//! Cap-product operators `ω∩` for classes `ω = ν^k ∪ μ(Y)^l` and the maps they induce
//! on `I_*`, on every page `E^k`, and on `HF_*`.
//!
//! A class of degree `p = 3k + l` acts by chain-level counts that lower the spectral
//! flow by `p + 1 - 8m` (`m ≥ 0`). The unit class is special: it acts as the identity
//! with no shift and carries no entries.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::complex::{
    graded_homology, residue, total_homology_mod8, ComplexError, FilteredComplex, HomologyTable,
};
use crate::linalg::{reduce_rows, IntMatrix};
use crate::spectral::{page_with_differentials, Filtration, Page, SpectralError};

/// The class `ν^nu_exp ∪ μ(Y)^mu_exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CohClass {
    nu_exp: u32,
    mu_exp: u8,
}

impl CohClass {
    pub const UNIT: CohClass = CohClass {
        nu_exp: 0,
        mu_exp: 0,
    };
    pub const NU: CohClass = CohClass {
        nu_exp: 1,
        mu_exp: 0,
    };
    pub const MU: CohClass = CohClass {
        nu_exp: 0,
        mu_exp: 1,
    };

    pub fn new(nu_exp: u32, mu_exp: u32) -> Result<Self, CapError> {
        if mu_exp > 1 {
            return Err(CapError::InvalidClass(format!(
                "mu(Y) is an exterior generator; exponent {mu_exp} is not allowed"
            )));
        }
        Ok(CohClass {
            nu_exp,
            mu_exp: mu_exp as u8,
        })
    }

    pub fn nu_exp(&self) -> u32 {
        self.nu_exp
    }

    pub fn mu_exp(&self) -> u32 {
        self.mu_exp as u32
    }

    pub fn degree(&self) -> i64 {
        class_degree(self)
    }

    pub fn is_unit(&self) -> bool {
        *self == CohClass::UNIT
    }

    /// Amount by which the operator lowers the spectral flow at leading order.
    pub fn shift(&self) -> i64 {
        if self.is_unit() {
            0
        } else {
            self.degree() + 1
        }
    }

    /// Cup product in `Sym(ν) ⊗ Λ(μ(Y))`; `None` when it vanishes (`μ(Y)² = 0`).
    pub fn cup(&self, other: &CohClass) -> Option<CohClass> {
        let mu = self.mu_exp + other.mu_exp;
        (mu <= 1).then_some(CohClass {
            nu_exp: self.nu_exp + other.nu_exp,
            mu_exp: mu,
        })
    }
}

impl fmt::Display for CohClass {
    /// `1`, `nu`, `mu`, `nu^2`, `nu*mu`, `nu^3*mu`, ...
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nu = match self.nu_exp {
            0 => None,
            1 => Some("nu".to_string()),
            e => Some(format!("nu^{e}")),
        };
        let mu = (self.mu_exp == 1).then(|| "mu".to_string());
        match (nu, mu) {
            (None, None) => write!(f, "1"),
            (Some(a), None) | (None, Some(a)) => write!(f, "{a}"),
            (Some(a), Some(b)) => write!(f, "{a}*{b}"),
        }
    }
}

/// `3·nu_exp + mu_exp`.
pub fn class_degree(cls: &CohClass) -> i64 {
    3 * cls.nu_exp as i64 + cls.mu_exp as i64
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CapEntry {
    pub from: String,
    pub to: String,
    pub coeff: BigInt,
}

impl CapEntry {
    pub fn new(from: impl Into<String>, to: impl Into<String>, coeff: impl Into<BigInt>) -> Self {
        CapEntry {
            from: from.into(),
            to: to.into(),
            coeff: coeff.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapOperator {
    pub cls: CohClass,
    pub entries: Vec<CapEntry>,
}

impl CapOperator {
    pub fn new(cls: CohClass, entries: Vec<CapEntry>) -> Self {
        CapOperator { cls, entries }
    }

    pub fn zero(cls: CohClass) -> Self {
        CapOperator::new(cls, Vec::new())
    }

    pub fn unit() -> Self {
        CapOperator::zero(CohClass::UNIT)
    }

    /// Entrywise sum of two operators of the same class.
    pub fn add(&self, other: &CapOperator) -> Result<CapOperator, CapError> {
        if self.cls != other.cls {
            return Err(CapError::ClassMismatch(self.cls, other.cls));
        }
        let mut acc: BTreeMap<(String, String), BigInt> = BTreeMap::new();
        for e in self.entries.iter().chain(&other.entries) {
            *acc.entry((e.from.clone(), e.to.clone()))
                .or_insert_with(BigInt::zero) += &e.coeff;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|((from, to), coeff)| CapEntry { from, to, coeff })
            .collect();
        Ok(CapOperator::new(self.cls, entries))
    }

    /// Square matrix over the generators of `c`; column `a` holds `U(a)`.
    /// The unit class gives the identity.
    pub fn chain_matrix(&self, c: &FilteredComplex) -> Result<IntMatrix, CapError> {
        if self.cls.is_unit() {
            return Ok(IntMatrix::identity(c.len()));
        }
        let mut m = IntMatrix::zeros(c.len(), c.len());
        for e in &self.entries {
            let a = c
                .position(&e.from)
                .ok_or_else(|| CapError::UnknownGenerator(e.from.clone()))?;
            let b = c
                .position(&e.to)
                .ok_or_else(|| CapError::UnknownGenerator(e.to.clone()))?;
            m.add_to(b, a, &e.coeff);
        }
        Ok(m)
    }

    /// The operator as a matrix bound to the generator list of `c`.
    pub fn to_chain(&self, c: &FilteredComplex) -> Result<ChainOperator, CapError> {
        Ok(ChainOperator {
            ids: c.generators().iter().map(|g| g.id.clone()).collect(),
            matrix: self.chain_matrix(c)?,
            shift: self.cls.shift(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CapError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid class: {0}")]
    InvalidClass(String),
    #[error("cap entry refers to unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("cap operator fails validation: {0}")]
    CapInvalid(CapReport),
    #[error("induced map is not well defined at {level}")]
    WellDefinednessFailure { level: String },
    #[error("operators are bound to different complexes")]
    ComplexMismatch,
    #[error("cannot add operators of classes {0} and {1}")]
    ClassMismatch(CohClass, CohClass),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CapViolation {
    UnknownGenerator {
        id: String,
    },
    ZeroCoefficient {
        from: String,
        to: String,
    },
    RepeatedEntry {
        from: String,
        to: String,
    },
    /// `sf(from) - sf(to)` is not `p + 1 - 8m` with `m ≥ 0`.
    FiltrationShift {
        from: String,
        to: String,
        drop: i64,
        shift: i64,
    },
    /// The unit class acts as the identity and takes no entries.
    UnitWithEntries,
    /// `(∂U - U∂)(from)` has coefficient `value` on `to`.
    ChainMap {
        from: String,
        to: String,
        value: BigInt,
    },
}

impl fmt::Display for CapViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapViolation::UnknownGenerator { id } => write!(f, "unknown generator {id}"),
            CapViolation::ZeroCoefficient { from, to } => {
                write!(f, "entry {from} -> {to}: zero coefficient")
            }
            CapViolation::RepeatedEntry { from, to } => {
                write!(f, "entry {from} -> {to}: listed more than once")
            }
            CapViolation::FiltrationShift {
                from,
                to,
                drop,
                shift,
            } => write!(
                f,
                "entry {from} -> {to}: sf drop {drop} is not {shift} - 8m with m >= 0"
            ),
            CapViolation::UnitWithEntries => write!(f, "unit class must not carry entries"),
            CapViolation::ChainMap { from, to, value } => {
                write!(
                    f,
                    "chain-map law fails: (dU - Ud)({from}) has {value} on {to}"
                )
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CapReport {
    pub violations: Vec<CapViolation>,
}

impl CapReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for CapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks the degree pattern, the filtration shift `p + 1` and the chain-map law `∂U = U∂`.
pub fn validate_cap(u: &CapOperator, c: &FilteredComplex) -> CapReport {
    let mut violations = Vec::new();
    if u.cls.is_unit() {
        if !u.entries.is_empty() {
            violations.push(CapViolation::UnitWithEntries);
        }
        return CapReport { violations };
    }
    let shift = u.cls.shift();
    let mut seen = HashSet::new();
    let mut dangling = false;
    for e in &u.entries {
        if !seen.insert((e.from.as_str(), e.to.as_str())) {
            violations.push(CapViolation::RepeatedEntry {
                from: e.from.clone(),
                to: e.to.clone(),
            });
        }
        if e.coeff.is_zero() {
            violations.push(CapViolation::ZeroCoefficient {
                from: e.from.clone(),
                to: e.to.clone(),
            });
        }
        let (Some(a), Some(b)) = (c.generator(&e.from), c.generator(&e.to)) else {
            for id in [&e.from, &e.to] {
                if c.generator(id).is_none() {
                    violations.push(CapViolation::UnknownGenerator { id: id.clone() });
                }
            }
            dangling = true;
            continue;
        };
        let drop = a.sf - b.sf;
        let slack = shift - drop;
        if slack < 0 || slack % 8 != 0 {
            violations.push(CapViolation::FiltrationShift {
                from: e.from.clone(),
                to: e.to.clone(),
                drop,
                shift,
            });
        }
    }
    if !dangling {
        let m = u.chain_matrix(c).expect("ids checked");
        let d = c.boundary_matrix();
        let defect = d.mul(&m).sub(&m.mul(&d));
        for (b, a, v) in defect.iter() {
            violations.push(CapViolation::ChainMap {
                from: c.generators()[a].id.clone(),
                to: c.generators()[b].id.clone(),
                value: v.clone(),
            });
        }
    }
    CapReport { violations }
}

fn ensure_valid(u: &CapOperator, c: &FilteredComplex) -> Result<(), CapError> {
    c.ensure_valid()?;
    let report = validate_cap(u, c);
    if report.is_valid() {
        Ok(())
    } else {
        Err(CapError::CapInvalid(report))
    }
}

/// Lattice form of the filtration-shift law: `U(F_n C_j) ⊆ F_{n-shift} C_{j-shift}`
/// for every level `n` of the complex.
pub fn filtration_shift_holds(u: &CapOperator, c: &FilteredComplex) -> Result<bool, CapError> {
    let m = u.chain_matrix(c)?;
    let shift = u.cls.shift();
    let sf = c.sf_values();
    for n in c.sf_levels() {
        let target = n - shift;
        for (a, &sa) in sf.iter().enumerate() {
            if sa < n || (sa - n).rem_euclid(8) != 0 {
                continue;
            }
            for (b, x) in m
                .iter()
                .filter(|&(_, col, _)| col == a)
                .map(|(b, _, x)| (b, x))
            {
                if !x.is_zero() && (sf[b] < target || (sf[b] - target).rem_euclid(8) != 0) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Matrix of an induced map between two groups, in the generators chosen for each.
/// Rows belonging to torsion generators are reduced modulo their order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedMap<K> {
    pub source: K,
    pub target: K,
    pub matrix: IntMatrix,
}

fn leading_part(u: &CapOperator, c: &FilteredComplex) -> Result<IntMatrix, CapError> {
    if u.cls.is_unit() {
        return Ok(IntMatrix::identity(c.len()));
    }
    let shift = u.cls.shift();
    let leading: Vec<CapEntry> = u
        .entries
        .iter()
        .filter(|e| {
            let a = c.generator(&e.from).map(|g| g.sf);
            let b = c.generator(&e.to).map(|g| g.sf);
            matches!((a, b), (Some(a), Some(b)) if a - b == shift)
        })
        .cloned()
        .collect();
    CapOperator::new(u.cls, leading).chain_matrix(c)
}

fn induced_on_table<K: Ord + Copy + fmt::Display>(
    table: &HomologyTable<K>,
    matrix: &IntMatrix,
    target_of: impl Fn(K) -> K,
    level: &str,
) -> Result<Vec<InducedMap<K>>, CapError> {
    let mut out = Vec::new();
    for (&key, src) in &table.groups {
        let tkey = target_of(key);
        let Some(dst) = table.get(tkey) else { continue };
        let mut cols = Vec::with_capacity(src.representatives.len());
        for rep in &src.representatives {
            let image = matrix.mul_vec(rep);
            let class = dst
                .classify(&image)
                .ok_or_else(|| CapError::WellDefinednessFailure {
                    level: format!("{level} degree {key}"),
                })?;
            cols.push(class);
        }
        out.push(InducedMap {
            source: key,
            target: tkey,
            matrix: IntMatrix::from_columns(dst.representatives.len(), &cols),
        });
    }
    Ok(out)
}

/// `ω∩ : I_n → I_{n-p-1}` for every `n` where both groups are nontrivial.
/// Pairs that are absent induce the zero map.
pub fn induced_graded_map(
    u: &CapOperator,
    c: &FilteredComplex,
) -> Result<Vec<InducedMap<i64>>, CapError> {
    ensure_valid(u, c)?;
    let table = graded_homology(c)?;
    let shift = u.cls.shift();
    induced_on_table(&table, &leading_part(u, c)?, |n| n - shift, "I")
}

/// `ω∩ : HF_j → HF_{j-p-1}` for every `j` where both groups are nontrivial.
pub fn induced_hf_map(
    u: &CapOperator,
    c: &FilteredComplex,
) -> Result<Vec<InducedMap<u8>>, CapError> {
    ensure_valid(u, c)?;
    let table = total_homology_mod8(c)?;
    let shift = u.cls.shift();
    induced_on_table(
        &table,
        &u.chain_matrix(c)?,
        |j| residue(j as i64 - shift),
        "HF",
    )
}

/// Result of checking `d^k ∘ (ω∩) = (ω∩) ∘ d^k` on a page.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommutationCertificate {
    /// Source degrees `n` at which the square was compared.
    pub checked: Vec<i64>,
    /// Source degrees where the two composites differ.
    pub failures: Vec<i64>,
}

impl CommutationCertificate {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The action of `ω∩` on one page.
#[derive(Clone, Debug)]
pub struct PageAction {
    pub k: u32,
    pub shift: i64,
    pub page: Page,
    /// `E^k_n → E^k_{n-shift}` keyed by `n`, present where both groups are nontrivial.
    pub maps: BTreeMap<i64, IntMatrix>,
    pub certificate: CommutationCertificate,
}

impl PageAction {
    pub fn map(&self, n: i64) -> Option<&IntMatrix> {
        self.maps.get(&n)
    }

    pub fn is_zero(&self) -> bool {
        self.maps.values().all(IntMatrix::is_zero)
    }
}

/// Induced map on `E^k`, after verifying that `U` carries `Z^k` into `Z^k` and the
/// boundary lattice into the boundary lattice at every level.
pub fn induced_page_map(
    u: &CapOperator,
    c: &FilteredComplex,
    k: u32,
) -> Result<PageAction, CapError> {
    ensure_valid(u, c)?;
    let page = page_with_differentials(c, k)?;
    let m = u.chain_matrix(c)?;
    let shift = u.cls.shift();
    let filt = Filtration::new(c);
    let kk = k as i64;

    for n in c.sf_levels() {
        let target = filt.group(kk, n - shift);
        let fail = || CapError::WellDefinednessFailure {
            level: format!("E^{k}_{n}"),
        };
        for x in filt.cycles(kk, n).columns() {
            if !target.contains(&m.mul_vec(&x)) {
                return Err(fail());
            }
        }
        for y in filt.boundaries(kk, n).columns() {
            match target.classify(&m.mul_vec(&y)) {
                Some(class) if class.iter().all(Zero::is_zero) => {}
                _ => return Err(fail()),
            }
        }
    }

    let mut maps = BTreeMap::new();
    for src in page.groups() {
        if src.invariants.is_trivial() {
            continue;
        }
        let Some(dst) = page.group(src.n - shift) else {
            continue;
        };
        if dst.invariants.is_trivial() {
            continue;
        }
        let cols: Vec<Vec<BigInt>> = src
            .representatives
            .iter()
            .map(|rep| dst.classify(&m.mul_vec(rep)).expect("checked above"))
            .collect();
        maps.insert(
            src.n,
            IntMatrix::from_columns(dst.representatives.len(), &cols),
        );
    }

    let certificate = certify(&page, &maps, shift);
    Ok(PageAction {
        k,
        shift,
        page,
        maps,
        certificate,
    })
}

fn certify(page: &Page, maps: &BTreeMap<i64, IntMatrix>, shift: i64) -> CommutationCertificate {
    let mut cert = CommutationCertificate::default();
    for src in page.groups() {
        if src.invariants.is_trivial() {
            continue;
        }
        let n = src.n;
        let corner = page.differential_target(n - shift);
        cert.checked.push(n);
        let Some(dst) = page.group(corner).filter(|g| !g.invariants.is_trivial()) else {
            continue;
        };
        let rows = dst.representatives.len();
        let cols = src.representatives.len();
        let compose = |first: Option<&IntMatrix>, second: Option<&IntMatrix>| match (first, second)
        {
            (Some(a), Some(b)) => reduce_rows(&b.mul(a), dst.orders()),
            _ => IntMatrix::zeros(rows, cols),
        };
        let down_then_across = compose(maps.get(&n), page.differential(n - shift));
        let across_then_down =
            compose(page.differential(n), maps.get(&page.differential_target(n)));
        if down_then_across != across_then_down {
            cert.failures.push(n);
        }
    }
    cert
}

/// A chain-level operator bound to a specific generator list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainOperator {
    pub ids: Vec<String>,
    pub matrix: IntMatrix,
    /// Filtration shift of the operator.
    pub shift: i64,
}

/// Bookkeeping for the plain composite `U1 ∘ U2` against the cup-product class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composition {
    pub operator: ChainOperator,
    /// `shift(U1) + shift(U2)`.
    pub composed_shift: i64,
    pub cup_class: Option<CohClass>,
    /// Shift a cap operator of the cup class would have.
    pub cup_shift: Option<i64>,
    /// Whether the composite could be the cap operator of the cup class on degree grounds.
    pub shifts_match: bool,
}

/// `shift(a) + shift(b)`: the grading drop of applying `b∩` then `a∩`.
pub fn composed_shift(a: &CohClass, b: &CohClass) -> i64 {
    a.shift() + b.shift()
}

/// Applies `second` then `first`.
pub fn compose(
    first: (&CohClass, &ChainOperator),
    second: (&CohClass, &ChainOperator),
) -> Result<Composition, CapError> {
    let (c1, u1) = first;
    let (c2, u2) = second;
    if u1.ids != u2.ids {
        return Err(CapError::ComplexMismatch);
    }
    let composed_shift = u1.shift + u2.shift;
    let cup_class = c1.cup(c2);
    let cup_shift = cup_class.map(|c| c.shift());
    Ok(Composition {
        operator: ChainOperator {
            ids: u1.ids.clone(),
            matrix: u1.matrix.mul(&u2.matrix),
            shift: composed_shift,
        },
        composed_shift,
        cup_class,
        cup_shift,
        shifts_match: cup_shift == Some(composed_shift),
    })
}
