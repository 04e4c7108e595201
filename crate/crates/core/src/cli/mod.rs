//! Command implementations behind the `asymptotica` binary. Each command returns an
//! [`Outcome`] holding the exit code, the JSON document and a short human summary.

pub mod json;
mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use report::{
    analyze_bytes, analyze_channel, load_channel, sha256_hex, AnalysisReport, AnalyzeOptions, ChoiEffrosFragment,
    InputInfo, PropertiesFragment, SpectrumFragment, StageTiming, Verdict,
};

use crate::channel::{Channel, Picture, Repr};
use crate::error::{Error, Result};
use crate::spectral;
use crate::structure::analyze_structure;
use crate::tolerance::Tolerances;
use crate::unfolder::{compare_roundtrip, random_unfold_spec, GroundTruth, RoundTripReport, Synthesis, UnfoldSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STRUCTURAL: i32 = 3;

/// Tolerances for the round-trip comparison.
pub const ROUNDTRIP_TOL: f64 = 1e-6;
pub const ATTRACTOR_SPAN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Option<String>,
    pub summary: String,
}

impl Outcome {
    fn input_error(e: &Error) -> Self {
        Self { code: EXIT_INPUT, stdout: None, summary: format!("error: {e}") }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Validation(format!("cannot write {}: {e}", path.display())))
}

/// Tolerances from an optional JSON config file (missing keys keep their defaults).
pub fn load_tolerances(config: Option<&Path>) -> Result<Tolerances> {
    match config {
        None => Ok(Tolerances::default()),
        Some(p) => {
            let text = String::from_utf8(read(p)?).map_err(|e| Error::Validation(e.to_string()))?;
            let tol: Tolerances = serde_json::from_str(&text)?;
            let all = [tol.mat, tol.eig, tol.cluster, tol.per, tol.supp, tol.faith, tol.alg];
            if all.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return Err(Error::Validation("tolerances must be positive and finite".into()));
            }
            Ok(tol)
        }
    }
}

pub fn cmd_analyze(path: &Path, out: Option<&Path>, opts: &AnalyzeOptions) -> Outcome {
    let report = match read(path).and_then(|b| analyze_bytes(&b, opts)) {
        Ok(r) => r,
        Err(e) => return Outcome::input_error(&e),
    };
    let text = match json::to_string_17(&report) {
        Ok(t) => t,
        Err(e) => return Outcome::input_error(&e),
    };
    let mut summary = analysis_summary(&report);
    let stdout = match out {
        Some(p) => {
            if let Err(e) = write(p, &text) {
                return Outcome::input_error(&e);
            }
            summary.push_str(&format!("\nreport written to {}", p.display()));
            None
        }
        None => Some(text),
    };
    let code = if report.verdict.passed { EXIT_OK } else { EXIT_STRUCTURAL };
    Outcome { code, stdout, summary }
}

fn analysis_summary(r: &AnalysisReport) -> String {
    let mut lines = vec![format!("input sha256 {} (d = {})", r.input.sha256, r.input.dim)];
    if let Some(s) = &r.spectrum {
        lines.push(format!(
            "peripheral eigenvalues: {}, attractor dimension {}, subleading modulus {:.6}",
            s.peripheral_eigenvalues.len(),
            s.attractor_dim,
            s.subleading_modulus
        ));
    }
    if let Some(s) = &r.structure {
        let blocks: Vec<String> = s.blocks.iter().map(|b| format!("({},{})", b.d1, b.d2)).collect();
        lines.push(format!("H0 = {}, H1 = {}, blocks {}", s.h0_dim, s.h1_dim, blocks.join(" ")));
    }
    if let Some(c) = &r.choi_effros {
        lines.push(format!(
            "N* dimension {}, peripherally automorphic {}",
            c.nstar_dim, c.peripherally_automorphic
        ));
    }
    if r.verdict.passed {
        lines.push("all structural checks passed".into());
    } else {
        lines.push(format!("FAILED: {}", r.verdict.failing.join(", ")));
    }
    lines.join("\n")
}

/// Spectrum fragment only.
pub fn cmd_spectrum(path: &Path, tol: &Tolerances) -> Outcome {
    let run = || -> Result<SpectrumFragment> {
        let c = load_channel(&read(path)?, tol)?;
        let c = if c.picture() == Picture::Heisenberg { c } else { c.adjoint() };
        let spec = spectral::spectrum(&c, tol)?;
        let pp = spec.peripheral_projection()?;
        let checks = vec![
            crate::Check::new("pp_idempotent", pp.idempotency_defect(), tol.alg),
            crate::Check::new("pp_unital", pp.unital_defect(), tol.alg),
        ];
        Ok(SpectrumFragment {
            entries: spec.entries(),
            peripheral_eigenvalues: spec.peripheral_values().iter().map(|z| [z.re, z.im]).collect(),
            subleading_modulus: spec.subleading_modulus(),
            fixed_dim: spec.fixed_point_basis()?.len(),
            attractor_dim: spec.attractor_basis()?.len(),
            decay: spectral::nonperipheral_decay(&c, &spec, &pp, 16),
            checks,
        })
    };
    match run().and_then(|f| Ok((json::to_string_17(&f)?, f))) {
        Ok((text, f)) => {
            let passed = f.checks.iter().all(|k| k.passed);
            Outcome {
                code: if passed { EXIT_OK } else { EXIT_STRUCTURAL },
                stdout: Some(text),
                summary: format!("{} eigenvalue clusters, {} peripheral", f.entries.len(), f.peripheral_eigenvalues.len()),
            }
        }
        Err(e) if e.is_input_error() => Outcome::input_error(&e),
        Err(e) => Outcome { code: EXIT_STRUCTURAL, stdout: None, summary: format!("spectrum failed: {e}") },
    }
}

/// Default sidecar location next to a channel file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "channel".into());
    out.with_file_name(format!("{stem}.truth.json"))
}

fn read_spec(path: &Path) -> Result<UnfoldSpec> {
    let text = String::from_utf8(read(path)?).map_err(|e| Error::Validation(e.to_string()))?;
    UnfoldSpec::from_json_str(&text)
}

pub fn cmd_synthesize(spec: &Path, out: &Path, truth: Option<&Path>, rotate: bool, tol: &Tolerances) -> Outcome {
    let run = || -> Result<PathBuf> {
        let spec = read_spec(spec)?;
        spec.validate(tol)?;
        let syn = if rotate { Synthesis::rotated(spec, tol)? } else { Synthesis::new(spec, tol)? };
        write(out, &json::to_string_17(&syn.channel.to_json_value(Repr::Super)?)?)?;
        let truth_path = truth.map(Path::to_path_buf).unwrap_or_else(|| sidecar_path(out));
        write(&truth_path, &json::to_string_17(&syn.truth)?)?;
        Ok(truth_path)
    };
    match run() {
        Ok(t) => Outcome {
            code: EXIT_OK,
            stdout: None,
            summary: format!("channel written to {}, ground truth to {}", out.display(), t.display()),
        },
        Err(e) if e.is_input_error() => Outcome::input_error(&e),
        Err(e) => Outcome { code: EXIT_STRUCTURAL, stdout: None, summary: format!("synthesis failed: {e}") },
    }
}

/// Where round-trip items come from.
#[derive(Debug, Clone)]
pub enum RoundTripSource {
    Spec(PathBuf),
    Random { count: usize, d_max: usize, seed: u64 },
    /// An existing channel file checked against a ground-truth sidecar.
    Sidecar { channel: PathBuf, truth: PathBuf },
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripOutcome {
    pub label: String,
    pub passed: bool,
    pub report: Option<RoundTripReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripSummary {
    pub count: usize,
    pub passed_count: usize,
    pub passed: bool,
    pub items: Vec<RoundTripOutcome>,
}

/// Analyze `channel` and compare with `truth`.
pub fn roundtrip_one(label: String, truth: &GroundTruth, channel: &Channel, tol: &Tolerances, seed: u64) -> RoundTripOutcome {
    let run = || -> Result<RoundTripReport> {
        let spec = spectral::spectrum(channel, tol)?;
        let pp = spec.peripheral_projection()?;
        let s = analyze_structure(channel, &spec, &pp, tol, seed)?;
        Ok(compare_roundtrip(truth, &s, &spec.attractor_basis()?, ROUNDTRIP_TOL, ATTRACTOR_SPAN_TOL))
    };
    match run() {
        Ok(r) => RoundTripOutcome { label, passed: r.passed, report: Some(r), error: None },
        Err(e) => RoundTripOutcome { label, passed: false, report: None, error: Some(e.to_string()) },
    }
}

fn synthesize_and_compare(label: String, spec: UnfoldSpec, tol: &Tolerances, seed: u64) -> RoundTripOutcome {
    match Synthesis::rotated(spec, tol) {
        Ok(syn) => roundtrip_one(label, &syn.truth, &syn.channel, tol, seed),
        Err(e) => RoundTripOutcome { label, passed: false, report: None, error: Some(e.to_string()) },
    }
}

pub fn cmd_roundtrip(source: &RoundTripSource, jobs: usize, tol: &Tolerances, seed: u64) -> Outcome {
    let items = match source {
        RoundTripSource::Spec(p) => match read_spec(p).and_then(|s| s.validate(tol).map(|_| s)) {
            Ok(spec) => vec![synthesize_and_compare(p.display().to_string(), spec, tol, seed)],
            Err(e) => return Outcome::input_error(&e),
        },
        RoundTripSource::Sidecar { channel, truth } => {
            let loaded = read(channel).and_then(|b| load_channel(&b, tol)).and_then(|c| {
                let text = String::from_utf8(read(truth)?).map_err(|e| Error::Validation(e.to_string()))?;
                let t: GroundTruth = serde_json::from_str(&text)?;
                t.spec.validate(tol)?;
                if t.frame.shape() != (c.dim(), c.dim()) || t.spec.dim() != c.dim() {
                    return Err(Error::Validation("sidecar does not match the channel dimension".into()));
                }
                Ok((c, t))
            });
            match loaded {
                Ok((c, t)) => {
                    let c = if c.picture() == Picture::Heisenberg { c } else { c.adjoint() };
                    vec![roundtrip_one(channel.display().to_string(), &t, &c, tol, seed)]
                }
                Err(e) => return Outcome::input_error(&e),
            }
        }
        RoundTripSource::Random { count, d_max, seed: s } => {
            let work = |i: usize| {
                let spec_seed = s.wrapping_add(i as u64);
                synthesize_and_compare(format!("random seed {spec_seed}"), random_unfold_spec(*d_max, spec_seed), tol, seed)
            };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build();
            match pool {
                Ok(pool) => pool.install(|| (0..*count).into_par_iter().map(work).collect()),
                Err(_) => (0..*count).map(work).collect(),
            }
        }
    };
    let passed_count = items.iter().filter(|i| i.passed).count();
    let summary_doc = RoundTripSummary { count: items.len(), passed_count, passed: passed_count == items.len(), items };
    let mut lines = Vec::new();
    for item in &summary_doc.items {
        match (&item.report, &item.error) {
            (Some(r), _) => {
                let margins: Vec<String> = r.items.iter().map(|k| format!("{} {:.2e}", k.name, k.value)).collect();
                let verdict = if item.passed { "pass".to_string() } else {
                    let names: Vec<&str> = r.failures().iter().map(|k| k.name.as_str()).collect();
                    format!("MISMATCH in {}", names.join(", "))
                };
                lines.push(format!("{}: {verdict} [{}]", item.label, margins.join("; ")));
            }
            (None, Some(e)) => lines.push(format!("{}: MISMATCH analysis failed: {e}", item.label)),
            _ => {}
        }
    }
    lines.push(format!("{}/{} round trips passed", passed_count, summary_doc.count));
    match json::to_string_17(&summary_doc) {
        Ok(text) => Outcome {
            code: if summary_doc.passed { EXIT_OK } else { EXIT_STRUCTURAL },
            stdout: Some(text),
            summary: lines.join("\n"),
        },
        Err(e) => Outcome::input_error(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_roundtrip_is_order_stable_under_parallelism() {
        let tol = Tolerances::default();
        let src = RoundTripSource::Random { count: 6, d_max: 5, seed: 40 };
        let a = cmd_roundtrip(&src, 1, &tol, 0);
        let b = cmd_roundtrip(&src, 3, &tol, 0);
        assert_eq!(a.code, EXIT_OK, "{}", a.summary);
        assert_eq!(a.stdout, b.stdout);
    }

    #[test]
    fn sidecar_naming() {
        assert_eq!(sidecar_path(Path::new("/tmp/x/ch.json")), PathBuf::from("/tmp/x/ch.truth.json"));
    }

    #[test]
    fn missing_files_are_input_errors() {
        let tol = Tolerances::default();
        assert_eq!(cmd_spectrum(Path::new("/nonexistent.json"), &tol).code, EXIT_INPUT);
        let o = cmd_analyze(Path::new("/nonexistent.json"), None, &AnalyzeOptions::default());
        assert_eq!(o.code, EXIT_INPUT);
    }
}
