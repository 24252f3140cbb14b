use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;

use fss_cli::{parse, run};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn fss(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["fss"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn temp_doc(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".fss").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn error_json(err: &str) -> Value {
    serde_json::from_str(err.lines().next().expect("one error line")).unwrap()
}

#[test]
fn shipped_documents_round_trip() {
    for name in ["sigma235.fss", "d1demo.fss"] {
        let text = std::fs::read_to_string(data(name)).unwrap();
        let doc = parse(&text).unwrap();
        assert_eq!(parse(&doc.emit()).unwrap(), doc);
        assert_eq!(parse(&doc.emit()).unwrap().emit(), doc.emit());
    }
}

#[test]
fn sigma235_homology() {
    let path = data("sigma235.fss");
    let (code, out, _) = fss(&["homology", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.contains(&"I_1 = Z"));
    assert!(lines.contains(&"I_5 = Z"));
    for j in 0..8 {
        let expect = if j == 1 || j == 5 { "Z" } else { "0" };
        assert!(lines.contains(&format!("HF_{j} = {expect}").as_str()));
    }
}

#[test]
fn sigma235_cap_action() {
    let path = data("sigma235.fss");
    let (code, out, _) = fss(&["capact", path.to_str().unwrap(), "--class", "nu"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l == "HF_5 → HF_1: [2]"));
    assert!(out.lines().any(|l| l == "I_5 → I_1: [2]"));
    assert!(out.lines().any(|l| l == "E^1_5 → E^1_1: [2]"));
    assert!(out.lines().any(|l| l == "certificate d^1: pass"));

    let (code, out, _) = fss(&["capact", path.to_str().unwrap(), "--class", "mu"]);
    assert_eq!(code, 0);
    assert!(out
        .lines()
        .filter(|l| l.contains('→'))
        .all(|l| l.ends_with("[0]")));
}

#[test]
fn d1demo_collapse_witness() {
    let path = data("d1demo.fss");
    let (code, out, _) = fss(&["collapse", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(
        out.lines().next(),
        Some("collapse: false, witness d^1 at (0,0)")
    );
    let (_, out, _) = fss(&["collapse", data("sigma235.fss").to_str().unwrap()]);
    assert_eq!(out.lines().next(), Some("collapse: true"));
}

#[test]
fn pages_report_bound_and_range() {
    let path = data("d1demo.fss");
    let (code, out, _) = fss(&["pages", path.to_str().unwrap(), "--max-k", "3"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "stable page: E^2 (sf span 7)");
    assert_eq!(lines[1], "pages computed: E^1 to E^3");
    assert!(lines.contains(&"d^1: E^1_0 → E^1_7: [1]"));
    assert!(lines.contains(&"E^2_0 = 0"));
}

#[test]
fn rational_coefficients() {
    let doc = temp_doc("band_r 0/1\ngenerator id=a sf=1 cs=2/3\ngenerator id=b sf=0 cs=1/3\nboundary from=a to=b coeff=2\n");
    let p = doc.path().to_str().unwrap();
    let (_, over_z, _) = fss(&["homology", p]);
    assert!(over_z.lines().any(|l| l == "I_0 = Z/2"));
    let (_, over_q, _) = fss(&["homology", p, "--over", "Q"]);
    assert!(over_q.lines().any(|l| l == "I_0 = 0"));
}

#[test]
fn exit_codes() {
    let malformed = temp_doc("band_r 0/1\ngenerator id=a sf=one cs=1/2\n");
    let (code, out, err) = fss(&["homology", malformed.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    let e = error_json(&err);
    assert_eq!(e["error"], "parse");
    assert_eq!(e["line"], 2);
    assert_eq!(e["field"], "sf");

    let float = temp_doc("band_r 0/1\ngenerator id=a sf=1 cs=0.5\n");
    assert_eq!(fss(&["homology", float.path().to_str().unwrap()]).0, 2);

    let dup = temp_doc("band_r 0/1\ngenerator id=a sf=1 cs=1/2\ngenerator id=a sf=2 cs=1/3\n");
    let (code, _, err) = fss(&["homology", dup.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(error_json(&err)["error"], "duplicate_id");

    let off_band = temp_doc("band_r 1/2\ngenerator id=a sf=1 cs=1/2\n");
    let (code, _, err) = fss(&["homology", off_band.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    assert_eq!(error_json(&err)["error"], "validation");
    let (code, out, _) = fss(&["validate", off_band.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(out.starts_with("complex: invalid"));

    let bad_cap = temp_doc(
        "band_r 0/1\ngenerator id=a_alpha sf=1 cs=1/4\ngenerator id=a_beta sf=5 cs=3/4\n\
         cap name=mu nu_exp=0 mu_exp=1\nentry cap=mu from=a_beta to=a_alpha coeff=1\n",
    );
    assert_eq!(
        fss(&["capact", bad_cap.path().to_str().unwrap(), "--class", "mu"]).0,
        3
    );

    assert_eq!(fss(&["homology", "/nonexistent/file.fss"]).0, 1);
    assert_eq!(fss(&["frobnicate"]).0, 1);
    assert_eq!(
        fss(&[
            "pages",
            data("d1demo.fss").to_str().unwrap(),
            "--max-k",
            "0"
        ])
        .0,
        1
    );
    assert_eq!(
        fss(&[
            "capact",
            data("sigma235.fss").to_str().unwrap(),
            "--class",
            "pi"
        ])
        .0,
        1
    );
}

#[test]
fn empty_document_is_valid() {
    let empty = temp_doc("# nothing here\nband_r 0/1\n");
    let (code, out, _) = fss(&["homology", empty.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out
        .lines()
        .filter(|l| l.starts_with("HF_"))
        .all(|l| l.ends_with("= 0")));
    assert_eq!(fss(&["collapse", empty.path().to_str().unwrap()]).0, 0);
}

#[test]
fn json_lines_are_json() {
    let path = data("sigma235.fss");
    for cmd in ["homology", "pages", "collapse", "relift", "validate"] {
        let (code, out, _) = fss(&[cmd, path.to_str().unwrap(), "--format", "json-lines"]);
        assert_eq!(code, 0);
        for line in out.lines() {
            serde_json::from_str::<Value>(line).unwrap();
        }
    }
}

#[test]
fn relift_output_parses_and_shifts() {
    let path = data("sigma235.fss");
    let (code, out, _) = fss(&["relift", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let lifted = parse(&out).unwrap();
    assert_eq!(lifted.generators[0].sf, -7);
    let f = temp_doc(&out);
    let (_, hom, _) = fss(&["homology", f.path().to_str().unwrap()]);
    assert!(hom.lines().any(|l| l == "I_-7 = Z"));
    assert!(hom.lines().any(|l| l == "HF_5 = Z"));
}

#[test]
fn binary_output_is_byte_identical() {
    let bin = env!("CARGO_BIN_EXE_fss");
    let synth = Command::new(bin)
        .args([
            "synth", "--seed", "9", "--pairs", "6", "--moves", "20", "--cap", "nu", "--cap",
            "nu*mu",
        ])
        .output()
        .unwrap();
    assert!(synth.status.success());
    let f = temp_doc(std::str::from_utf8(&synth.stdout).unwrap());
    for args in [
        vec!["pages"],
        vec!["capact", "--class", "nu"],
        vec!["capact", "--class", "nu*mu", "--over", "Q"],
        vec!["homology", "--format", "json-lines"],
    ] {
        let mut full = vec![args[0], f.path().to_str().unwrap()];
        full.extend_from_slice(&args[1..]);
        let a = Command::new(bin).args(&full).output().unwrap();
        let b = Command::new(bin)
            .args(&full)
            .env("RAYON_NUM_THREADS", "1")
            .output()
            .unwrap();
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesized_documents_round_trip(seed in any::<u64>(), pairs in 0usize..8) {
        let seed_s = seed.to_string();
        let pairs_s = pairs.to_string();
        let (code, out, _) = fss(&["synth", "--seed", &seed_s, "--pairs", &pairs_s, "--cap", "nu", "--cap", "mu"]);
        prop_assert_eq!(code, 0);
        let doc = parse(&out).unwrap();
        prop_assert_eq!(doc.emit(), out.clone());
        prop_assert_eq!(parse(&doc.emit()).unwrap(), doc);
        let f = temp_doc(&out);
        let (code, _, _) = fss(&["validate", f.path().to_str().unwrap()]);
        prop_assert_eq!(code, 0);
        let again = fss(&["synth", "--seed", &seed_s, "--pairs", &pairs_s, "--cap", "nu", "--cap", "mu"]).1;
        prop_assert_eq!(again, out);
    }
}
