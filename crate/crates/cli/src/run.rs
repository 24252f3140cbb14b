use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};

use fss_core::cap::{
    induced_graded_map, induced_hf_map, induced_page_map, validate_cap, CapError, CohClass,
};
use fss_core::complex::{
    graded_homology, relift, residue, total_homology_mod8, ComplexError, FilteredComplex,
};
use fss_core::linalg::{AbelianInvariants, IntMatrix};
use fss_core::spectral::{
    collapse_detect, page_with_differentials, stable_page_index, SpectralError,
};
use fss_core::synth::{random_cap, random_complex, SynthError, SynthParams};

use crate::document::{parse, parse_class, CapSpec, Document, DocumentError};

#[derive(Parser, Debug)]
#[command(
    name = "fss",
    version,
    about = "Filtered Floer complexes: homology, spectral sequence pages and cap actions"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Coefficients for reported groups and maps.
    #[arg(long, global = true, value_enum, default_value = "Z")]
    over: Ring,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Ring {
    #[value(name = "Z")]
    Z,
    #[value(name = "Q")]
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every rule on the complex and its cap operators.
    Validate { file: PathBuf },
    /// Graded homology I_n and Z/8-graded HF_j.
    Homology { file: PathBuf },
    /// Spectral sequence pages E^1..E^K with their differentials.
    Pages {
        file: PathBuf,
        /// Last page to compute; defaults to the stabilization bound.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        max_k: Option<u32>,
    },
    /// Whether all higher differentials vanish, with the first obstruction if not.
    Collapse { file: PathBuf },
    /// Maps induced by a named cap operator on I, on every page and on HF.
    Capact {
        file: PathBuf,
        #[arg(long = "class")]
        class: String,
    },
    /// Move the complex to the next band and print the result.
    Relift { file: PathBuf },
    /// Print a random valid document.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        survivors: usize,
        #[arg(long, default_value_t = 4)]
        pairs: usize,
        #[arg(long, default_value_t = 8)]
        moves: usize,
        #[arg(long, default_value_t = 16)]
        sf_span: i64,
        #[arg(long, default_value_t = 3)]
        coeff_bound: u64,
        /// Add a random cap operator of this class (`nu`, `mu`, `nu^2`, `nu*mu`, ...).
        #[arg(long = "cap")]
        caps: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("{summary}")]
    Validation {
        summary: String,
        violations: Vec<String>,
    },
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Document(_) => 2,
            CliError::Validation { .. } => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn to_json(&self) -> Value {
        let message = self.to_string();
        match self {
            CliError::Usage(_) => json!({"error": "usage", "message": message}),
            CliError::Io { path, .. } => json!({"error": "io", "path": path, "message": message}),
            CliError::Document(DocumentError::Parse { line, field, .. }) => {
                json!({"error": "parse", "line": line, "field": field, "message": message})
            }
            CliError::Document(DocumentError::DuplicateId { line, id, .. }) => {
                json!({"error": "duplicate_id", "line": line, "id": id, "message": message})
            }
            CliError::Validation { violations, .. } => {
                json!({"error": "validation", "message": message, "violations": violations})
            }
            CliError::Internal(_) => json!({"error": "internal", "message": message}),
        }
    }
}

impl From<ComplexError> for CliError {
    fn from(e: ComplexError) -> Self {
        match e {
            ComplexError::InvalidComplex(report) => CliError::Validation {
                summary: "complex fails validation".into(),
                violations: report.violations.iter().map(ToString::to_string).collect(),
            },
            other => CliError::Validation {
                summary: other.to_string(),
                violations: Vec::new(),
            },
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Complex(c) => c.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<CapError> for CliError {
    fn from(e: CapError) -> Self {
        match e {
            CapError::Complex(c) => c.into(),
            CapError::Spectral(s) => s.into(),
            CapError::CapInvalid(report) => CliError::Validation {
                summary: "cap operator fails validation".into(),
                violations: report.violations.iter().map(ToString::to_string).collect(),
            },
            CapError::InvalidClass(m) | CapError::UnknownGenerator(m) => CliError::Validation {
                summary: m,
                violations: Vec::new(),
            },
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Lines of a report, each with a text and a JSON rendering.
#[derive(Default, Debug)]
pub struct Report {
    lines: Vec<(String, Value)>,
}

impl Report {
    fn push(&mut self, text: String, value: Value) {
        self.lines.push((text, value));
    }

    fn render(&self, format: Format) -> String {
        let mut out = String::new();
        for (text, value) in &self.lines {
            match format {
                Format::Text => out.push_str(text),
                Format::JsonLines => out.push_str(&value.to_string()),
            }
            out.push('\n');
        }
        out
    }

    fn document(doc: &Document) -> Report {
        Report {
            lines: doc
                .emit()
                .lines()
                .map(str::to_string)
                .zip(doc.emit_json())
                .collect(),
        }
    }
}

fn group_text(g: &AbelianInvariants, ring: Ring) -> String {
    match ring {
        Ring::Z => g.to_string(),
        Ring::Q => match g.free_rank {
            0 => "0".into(),
            1 => "Q".into(),
            r => format!("Q^{r}"),
        },
    }
}

fn group_json(g: &AbelianInvariants, ring: Ring) -> Value {
    let mut v = json!({"group": group_text(g, ring), "rank": g.free_rank});
    if ring == Ring::Z {
        v["torsion"] = json!(g
            .torsion
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>());
    }
    v
}

/// Over Q only the free generators on each side survive.
fn map_matrix(m: &IntMatrix, src: &[BigInt], dst: &[BigInt], ring: Ring) -> IntMatrix {
    match ring {
        Ring::Z => m.clone(),
        Ring::Q => {
            let rows: Vec<usize> = (0..m.rows()).filter(|&i| dst[i].is_zero()).collect();
            let cols: Vec<usize> = (0..m.cols()).filter(|&j| src[j].is_zero()).collect();
            m.select(&rows, &cols)
        }
    }
}

fn matrix_json(m: &IntMatrix) -> Value {
    json!(m
        .to_dense()
        .iter()
        .map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn load(path: &Path) -> Result<Document, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(parse(&text)?)
}

/// The complex, after checking it and every cap operator in the document.
fn checked(doc: &Document) -> Result<FilteredComplex, CliError> {
    let c = doc.complex();
    c.ensure_valid()?;
    for cap in &doc.caps {
        let report = validate_cap(&cap.operator(), &c);
        if !report.is_valid() {
            return Err(CliError::Validation {
                summary: format!("cap `{}` fails validation", cap.name),
                violations: report.violations.iter().map(ToString::to_string).collect(),
            });
        }
    }
    Ok(c)
}

fn validate(doc: &Document, report: &mut Report) -> Option<CliError> {
    let c = doc.complex();
    let mut violations = Vec::new();
    let cr = c.validate();
    let verdict = if cr.is_valid() { "valid" } else { "invalid" };
    report.push(
        format!("complex: {verdict}"),
        json!({"kind": "complex", "valid": cr.is_valid()}),
    );
    for v in &cr.violations {
        report.push(
            format!("  violation: {v}"),
            json!({"kind": "violation", "scope": "complex", "message": v.to_string()}),
        );
        violations.push(v.to_string());
    }
    for cap in &doc.caps {
        let r = validate_cap(&cap.operator(), &c);
        let verdict = if r.is_valid() { "valid" } else { "invalid" };
        report.push(
            format!("cap {} ({}): {verdict}", cap.name, cap.cls),
            json!({"kind": "cap", "name": cap.name, "class": cap.cls.to_string(), "valid": r.is_valid()}),
        );
        for v in &r.violations {
            report.push(
                format!("  violation: {v}"),
                json!({"kind": "violation", "scope": cap.name, "message": v.to_string()}),
            );
            violations.push(format!("cap {}: {v}", cap.name));
        }
    }
    (!violations.is_empty()).then(|| CliError::Validation {
        summary: "document fails validation".into(),
        violations,
    })
}

fn homology(c: &FilteredComplex, ring: Ring, report: &mut Report) -> Result<(), CliError> {
    let graded = graded_homology(c)?;
    let hf = total_homology_mod8(c)?;
    report.push(
        format!("band r = {}", crate::document::format_rational(c.band_r())),
        json!({"kind": "band", "r": crate::document::format_rational(c.band_r())}),
    );
    for n in c.sf_levels() {
        let g = graded.invariants(n);
        let mut v = json!({"kind": "graded", "n": n, "j": residue(n)});
        merge(&mut v, group_json(&g, ring));
        report.push(format!("I_{n} = {}", group_text(&g, ring)), v);
    }
    for j in 0..8u8 {
        let g = hf.invariants(j);
        let mut v = json!({"kind": "hf", "j": j});
        merge(&mut v, group_json(&g, ring));
        report.push(format!("HF_{j} = {}", group_text(&g, ring)), v);
    }
    Ok(())
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn pages(
    c: &FilteredComplex,
    max_k: Option<u32>,
    ring: Ring,
    report: &mut Report,
) -> Result<(), CliError> {
    let stable = stable_page_index(c.sf_span());
    let last = max_k.unwrap_or(stable);
    report.push(
        format!("stable page: E^{stable} (sf span {})", c.sf_span()),
        json!({"kind": "stable", "k": stable, "sf_span": c.sf_span()}),
    );
    report.push(
        format!("pages computed: E^1 to E^{last}"),
        json!({"kind": "computed", "first": 1, "last": last}),
    );
    for k in 1..=last {
        let page = page_with_differentials(c, k)?;
        for g in page.groups() {
            let mut v = json!({"kind": "page_group", "k": k, "n": g.n, "j": g.j()});
            merge(&mut v, group_json(&g.invariants, ring));
            report.push(
                format!("E^{k}_{} = {}", g.n, group_text(&g.invariants, ring)),
                v,
            );
        }
        for (n, m) in page.differentials() {
            let t = page.differential_target(n);
            let src = page.group(n).expect("source present").orders();
            let dst = page.group(t).expect("target present").orders();
            let m = map_matrix(m, src, dst, ring);
            report.push(
                format!("d^{k}: E^{k}_{n} → E^{k}_{t}: {m}"),
                json!({"kind": "differential", "k": k, "source": n, "target": t, "matrix": matrix_json(&m)}),
            );
        }
    }
    Ok(())
}

fn collapse(c: &FilteredComplex, report: &mut Report) -> Result<(), CliError> {
    let r = collapse_detect(c)?;
    match &r.witness {
        None => report.push(
            "collapse: true".into(),
            json!({"kind": "collapse", "collapsed": true}),
        ),
        Some(w) => {
            report.push(
                format!("collapse: false, witness d^{} at ({},{})", w.k, w.n, w.j),
                json!({"kind": "collapse", "collapsed": false, "k": w.k, "n": w.n, "j": w.j}),
            );
            report.push(
                format!("witness matrix: {}", w.matrix),
                json!({"kind": "witness", "matrix": matrix_json(&w.matrix)}),
            );
        }
    }
    report.push(
        format!("stable page: E^{}", r.stable_k),
        json!({"kind": "stable", "k": r.stable_k}),
    );
    for j in 0..8 {
        report.push(
            format!(
                "j = {j}: rank ⊕I = {}, rank HF = {}",
                r.graded_ranks[j], r.hf_ranks[j]
            ),
            json!({"kind": "ranks", "j": j, "graded": r.graded_ranks[j], "hf": r.hf_ranks[j]}),
        );
    }
    Ok(())
}

fn capact(
    doc: &Document,
    c: &FilteredComplex,
    name: &str,
    ring: Ring,
    report: &mut Report,
) -> Result<(), CliError> {
    let spec = doc.cap(name).ok_or_else(|| {
        CliError::Usage(format!("no cap operator named `{name}` in the document"))
    })?;
    let u = spec.operator();
    report.push(
        format!("class {} = {}, degree {}, shift {}", spec.name, spec.cls, spec.cls.degree(), spec.cls.shift()),
        json!({"kind": "class", "name": spec.name, "class": spec.cls.to_string(), "degree": spec.cls.degree(), "shift": spec.cls.shift()}),
    );

    let graded = graded_homology(c)?;
    for m in induced_graded_map(&u, c)? {
        let mx = map_matrix(
            &m.matrix,
            graded.get(m.source).expect("nontrivial").orders(),
            graded.get(m.target).expect("nontrivial").orders(),
            ring,
        );
        report.push(
            format!("I_{} → I_{}: {mx}", m.source, m.target),
            json!({"kind": "graded_map", "source": m.source, "target": m.target, "matrix": matrix_json(&mx)}),
        );
    }

    for k in 1..=stable_page_index(c.sf_span()) {
        let act = induced_page_map(&u, c, k)?;
        for (n, m) in &act.maps {
            let t = n - act.shift;
            let mx = map_matrix(
                m,
                act.page.group(*n).expect("present").orders(),
                act.page.group(t).expect("present").orders(),
                ring,
            );
            report.push(
                format!("E^{k}_{n} → E^{k}_{t}: {mx}"),
                json!({"kind": "page_map", "k": k, "source": n, "target": t, "matrix": matrix_json(&mx)}),
            );
        }
        if !act.certificate.holds() {
            return Err(CliError::Internal(format!(
                "d^{k} does not commute with the cap action at n = {:?}",
                act.certificate.failures
            )));
        }
        report.push(
            format!("certificate d^{k}: pass"),
            json!({"kind": "certificate", "k": k, "holds": true, "checked": act.certificate.checked}),
        );
    }

    let hf = total_homology_mod8(c)?;
    for m in induced_hf_map(&u, c)? {
        let mx = map_matrix(
            &m.matrix,
            hf.get(m.source).expect("nontrivial").orders(),
            hf.get(m.target).expect("nontrivial").orders(),
            ring,
        );
        report.push(
            format!("HF_{} → HF_{}: {mx}", m.source, m.target),
            json!({"kind": "hf_map", "source": m.source, "target": m.target, "matrix": matrix_json(&mx)}),
        );
    }
    Ok(())
}

fn synth(params: SynthParams, caps: &[String]) -> Result<Document, CliError> {
    let c = random_complex(&params)?;
    let mut specs: Vec<CapSpec> = Vec::new();
    for name in caps {
        let cls: CohClass =
            parse_class(name).ok_or_else(|| CliError::Usage(format!("unknown class `{name}`")))?;
        let name = cls.to_string();
        if specs.iter().any(|s| s.name == name) {
            continue;
        }
        let u = random_cap(&c, cls, params.seed, params.coeff_bound);
        // the unit class is never written with entries
        specs.push(CapSpec {
            name,
            cls,
            entries: u.entries,
        });
    }
    Ok(Document::from_complex(&c, specs))
}

fn execute(cli: &Cli) -> (Report, Option<CliError>) {
    let mut report = Report::default();
    let result = (|| -> Result<Option<CliError>, CliError> {
        match &cli.command {
            Command::Validate { file } => {
                let doc = load(file)?;
                return Ok(validate(&doc, &mut report));
            }
            Command::Homology { file } => homology(&checked(&load(file)?)?, cli.over, &mut report)?,
            Command::Pages { file, max_k } => {
                pages(&checked(&load(file)?)?, *max_k, cli.over, &mut report)?
            }
            Command::Collapse { file } => collapse(&checked(&load(file)?)?, &mut report)?,
            Command::Capact { file, class } => {
                let doc = load(file)?;
                let c = checked(&doc)?;
                capact(&doc, &c, class, cli.over, &mut report)?;
            }
            Command::Relift { file } => {
                let doc = load(file)?;
                let lifted = relift(&checked(&doc)?)?;
                report = Report::document(&Document::from_complex(&lifted, doc.caps.clone()));
            }
            Command::Synth {
                seed,
                survivors,
                pairs,
                moves,
                sf_span,
                coeff_bound,
                caps,
            } => {
                let params = SynthParams {
                    seed: *seed,
                    n_survivors: *survivors,
                    n_pairs: *pairs,
                    n_mixing_moves: *moves,
                    sf_span: *sf_span,
                    coeff_bound: *coeff_bound,
                };
                report = Report::document(&synth(params, caps)?);
            }
        }
        Ok(None)
    })();
    match result {
        Ok(err) => (report, err),
        Err(e) => (Report::default(), Some(e)),
    }
}

/// Runs the command line `args` (program name first), writing the report to `out` and
/// one JSON object per error to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let usage = CliError::Usage(e.to_string().trim_end().to_string());
            let _ = writeln!(err, "{}", usage.to_json());
            return usage.exit_code();
        }
    };
    let (report, error) = execute(&cli);
    let _ = out.write_all(report.render(cli.format).as_bytes());
    match error {
        None => 0,
        Some(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}
