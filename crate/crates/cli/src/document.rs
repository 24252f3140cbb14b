//! The `.fss` text format.
//!
//! One record per line, `#` starts a comment line, fields are `key=value` pairs:
//!
//! ```text
//! band_r 0/1
//! generator id=a_alpha sf=1 cs=1/4
//! boundary from=a to=b coeff=1
//! cap name=nu nu_exp=1 mu_exp=0
//! entry cap=nu from=a_beta to=a_alpha coeff=2
//! ```
//!
//! Rationals are always written `num/den`. Emission uses this field order and keeps the
//! record order of the document, so `parse(emit(doc)) == doc`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::json;

use fss_core::cap::{CapEntry, CapOperator, CohClass};
use fss_core::complex::{BoundaryEntry, FilteredComplex, Generator};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapSpec {
    pub name: String,
    pub cls: CohClass,
    pub entries: Vec<CapEntry>,
}

impl CapSpec {
    pub fn operator(&self) -> CapOperator {
        CapOperator::new(self.cls, self.entries.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub band_r: BigRational,
    pub generators: Vec<Generator>,
    pub boundary: Vec<BoundaryEntry>,
    pub caps: Vec<CapSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("line {line}: {message}")]
    Parse {
        line: usize,
        field: Option<String>,
        message: String,
    },
    #[error("line {line}: duplicate {what} `{id}`")]
    DuplicateId {
        line: usize,
        what: &'static str,
        id: String,
    },
}

impl DocumentError {
    fn parse(line: usize, field: Option<&str>, message: impl Into<String>) -> Self {
        DocumentError::Parse {
            line,
            field: field.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn line(&self) -> usize {
        match self {
            DocumentError::Parse { line, .. } | DocumentError::DuplicateId { line, .. } => *line,
        }
    }
}

/// `num/den` with `den > 0`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let (n, d) = s.split_once('/')?;
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if !d.is_positive() || s.contains('+') {
        return None;
    }
    Some(BigRational::new(n, d))
}

pub fn format_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

struct Fields<'a> {
    line: usize,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn new(line: usize, tokens: &[&'a str], allowed: &[&str]) -> Result<Self, DocumentError> {
        let mut map = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok.split_once('=').ok_or_else(|| {
                DocumentError::parse(line, None, format!("expected key=value, got `{tok}`"))
            })?;
            if !allowed.contains(&k) {
                return Err(DocumentError::parse(
                    line,
                    Some(k),
                    format!("unknown field `{k}`"),
                ));
            }
            if v.is_empty() {
                return Err(DocumentError::parse(
                    line,
                    Some(k),
                    format!("empty value for `{k}`"),
                ));
            }
            if map.insert(k, v).is_some() {
                return Err(DocumentError::parse(
                    line,
                    Some(k),
                    format!("field `{k}` given twice"),
                ));
            }
        }
        for k in allowed {
            if !map.contains_key(k) {
                return Err(DocumentError::parse(
                    line,
                    Some(k),
                    format!("missing field `{k}`"),
                ));
            }
        }
        Ok(Fields { line, map })
    }

    fn str(&self, k: &str) -> &'a str {
        self.map[k]
    }

    fn int<T: std::str::FromStr>(&self, k: &str) -> Result<T, DocumentError> {
        self.map[k].parse().map_err(|_| {
            DocumentError::parse(
                self.line,
                Some(k),
                format!("`{}` is not an integer", self.map[k]),
            )
        })
    }

    fn rational(&self, k: &str) -> Result<BigRational, DocumentError> {
        parse_rational(self.map[k]).ok_or_else(|| {
            DocumentError::parse(
                self.line,
                Some(k),
                format!("`{}` is not a rational of the form num/den", self.map[k]),
            )
        })
    }
}

pub fn parse(text: &str) -> Result<Document, DocumentError> {
    let mut band_r: Option<BigRational> = None;
    let mut generators = Vec::new();
    let mut boundary = Vec::new();
    let mut caps: Vec<CapSpec> = Vec::new();
    let mut gen_lines: HashMap<String, usize> = HashMap::new();
    let mut cap_index: HashMap<String, usize> = HashMap::new();
    // (line, from, to) of every reference, checked once all generators are known
    let mut references: Vec<(usize, String, String)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let (kind, rest) = (tokens[0], &tokens[1..]);
        match kind {
            "band_r" => {
                if band_r.is_some() {
                    return Err(DocumentError::parse(
                        line,
                        Some("band_r"),
                        "band_r given twice",
                    ));
                }
                let [value] = rest else {
                    return Err(DocumentError::parse(
                        line,
                        Some("band_r"),
                        "expected `band_r num/den`",
                    ));
                };
                band_r = Some(parse_rational(value).ok_or_else(|| {
                    DocumentError::parse(
                        line,
                        Some("band_r"),
                        format!("`{value}` is not a rational of the form num/den"),
                    )
                })?);
            }
            "generator" => {
                let f = Fields::new(line, rest, &["id", "sf", "cs"])?;
                let id = f.str("id").to_string();
                if gen_lines.insert(id.clone(), line).is_some() {
                    return Err(DocumentError::DuplicateId {
                        line,
                        what: "generator",
                        id,
                    });
                }
                generators.push(Generator::new(id, f.int("sf")?, f.rational("cs")?));
            }
            "boundary" => {
                let f = Fields::new(line, rest, &["from", "to", "coeff"])?;
                let e = BoundaryEntry::new(f.str("from"), f.str("to"), f.int::<BigInt>("coeff")?);
                references.push((line, e.from.clone(), e.to.clone()));
                boundary.push(e);
            }
            "cap" => {
                let f = Fields::new(line, rest, &["name", "nu_exp", "mu_exp"])?;
                let name = f.str("name").to_string();
                let mu: u32 = f.int("mu_exp")?;
                if mu > 1 {
                    return Err(DocumentError::parse(
                        line,
                        Some("mu_exp"),
                        "mu_exp must be 0 or 1",
                    ));
                }
                let cls = CohClass::new(f.int("nu_exp")?, mu).expect("exponents checked");
                if cap_index.insert(name.clone(), caps.len()).is_some() {
                    return Err(DocumentError::DuplicateId {
                        line,
                        what: "cap",
                        id: name,
                    });
                }
                caps.push(CapSpec {
                    name,
                    cls,
                    entries: Vec::new(),
                });
            }
            "entry" => {
                let f = Fields::new(line, rest, &["cap", "from", "to", "coeff"])?;
                let &idx = cap_index.get(f.str("cap")).ok_or_else(|| {
                    DocumentError::parse(
                        line,
                        Some("cap"),
                        format!("cap `{}` is not declared above", f.str("cap")),
                    )
                })?;
                let e = CapEntry::new(f.str("from"), f.str("to"), f.int::<BigInt>("coeff")?);
                references.push((line, e.from.clone(), e.to.clone()));
                caps[idx].entries.push(e);
            }
            other => {
                return Err(DocumentError::parse(
                    line,
                    None,
                    format!("unknown record `{other}`"),
                ));
            }
        }
    }

    for (line, from, to) in references {
        for (field, id) in [("from", &from), ("to", &to)] {
            if !gen_lines.contains_key(id) {
                return Err(DocumentError::parse(
                    line,
                    Some(field),
                    format!("unknown generator `{id}`"),
                ));
            }
        }
    }
    let band_r =
        band_r.ok_or_else(|| DocumentError::parse(1, Some("band_r"), "missing band_r record"))?;
    Ok(Document {
        band_r,
        generators,
        boundary,
        caps,
    })
}

impl Document {
    pub fn from_complex(c: &FilteredComplex, caps: Vec<CapSpec>) -> Self {
        Document {
            band_r: c.band_r().clone(),
            generators: c.generators().to_vec(),
            boundary: c.boundary_entries().to_vec(),
            caps,
        }
    }

    /// The complex the document describes. References were checked while parsing.
    pub fn complex(&self) -> FilteredComplex {
        FilteredComplex::new(
            self.band_r.clone(),
            self.generators.clone(),
            self.boundary.clone(),
        )
        .expect("ids are unique and references resolved")
    }

    pub fn cap(&self, name: &str) -> Option<&CapSpec> {
        self.caps.iter().find(|c| c.name == name)
    }

    pub fn emit(&self) -> String {
        let mut out = String::new();
        writeln!(out, "band_r {}", format_rational(&self.band_r)).unwrap();
        for g in &self.generators {
            writeln!(
                out,
                "generator id={} sf={} cs={}",
                g.id,
                g.sf,
                format_rational(&g.cs)
            )
            .unwrap();
        }
        for e in &self.boundary {
            writeln!(
                out,
                "boundary from={} to={} coeff={}",
                e.from, e.to, e.coeff
            )
            .unwrap();
        }
        for cap in &self.caps {
            writeln!(
                out,
                "cap name={} nu_exp={} mu_exp={}",
                cap.name,
                cap.cls.nu_exp(),
                cap.cls.mu_exp()
            )
            .unwrap();
            for e in &cap.entries {
                writeln!(
                    out,
                    "entry cap={} from={} to={} coeff={}",
                    cap.name, e.from, e.to, e.coeff
                )
                .unwrap();
            }
        }
        out
    }

    /// The same records as [`Document::emit`], one JSON object each.
    pub fn emit_json(&self) -> Vec<serde_json::Value> {
        let mut out = vec![json!({"record": "band_r", "value": format_rational(&self.band_r)})];
        for g in &self.generators {
            out.push(json!({"record": "generator", "id": g.id, "sf": g.sf, "cs": format_rational(&g.cs)}));
        }
        for e in &self.boundary {
            out.push(json!({"record": "boundary", "from": e.from, "to": e.to, "coeff": e.coeff.to_string()}));
        }
        for cap in &self.caps {
            out.push(json!({
                "record": "cap",
                "name": cap.name,
                "nu_exp": cap.cls.nu_exp(),
                "mu_exp": cap.cls.mu_exp(),
            }));
            for e in &cap.entries {
                out.push(json!({
                    "record": "entry",
                    "cap": cap.name,
                    "from": e.from,
                    "to": e.to,
                    "coeff": e.coeff.to_string(),
                }));
            }
        }
        out
    }
}

/// `1`, `nu`, `mu`, `nu^2`, `nu*mu`, `nu^2*mu`, ... as printed by [`CohClass`].
pub fn parse_class(s: &str) -> Option<CohClass> {
    let mut nu = 0u32;
    let mut mu = 0u32;
    if s == "1" {
        return Some(CohClass::UNIT);
    }
    for factor in s.split('*') {
        match factor {
            "mu" => mu += 1,
            "nu" => nu += 1,
            f => {
                let e: u32 = f.strip_prefix("nu^")?.parse().ok()?;
                nu += e;
            }
        }
    }
    if nu.is_zero() && mu == 0 {
        return None;
    }
    CohClass::new(nu, mu).ok()
}
