//! The analysis pipeline and its report.

use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::channel::{schwarz_falsify, Channel, ChannelFile, FalsificationReport, Flags, Picture};
use crate::choieffros::{
    dfa_definition_check, dfa_nstar, kernel_ideal, lambda_isomorphism_defect, peripherally_automorphic, verify_cstar,
    CstarReport, DefinitionReport, StarAlgebra,
};
use crate::error::{Error, Result};
use crate::spectral::{self, DecayCheck, SpectrumEntry};
use crate::structure::{
    analyze_structure, faithful_closed_form_defect, peripheral_eigvec_check, pp_locality_defect,
    schrodinger_correspondence, AppendixReport, CorrespondenceReport, StructureFragment,
};
use crate::tolerance::{Check, Tolerances};

/// Knobs of one analysis run.
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub seed: u64,
    pub tol: Tolerances,
    pub schwarz_trials: usize,
    pub cstar_trials: usize,
    pub dfa_n_max: usize,
    pub dfa_trials: usize,
    pub timings: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: Tolerances::default(),
            schwarz_trials: 200,
            cstar_trials: 64,
            dfa_n_max: 8,
            dfa_trials: 64,
            timings: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub sha256: String,
    pub dim: usize,
    pub picture: Picture,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertiesFragment {
    pub flags: Flags,
    pub schwarz: FalsificationReport,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumFragment {
    pub entries: Vec<SpectrumEntry>,
    pub peripheral_eigenvalues: Vec<[f64; 2]>,
    pub subleading_modulus: f64,
    pub fixed_dim: usize,
    pub attractor_dim: usize,
    pub decay: DecayCheck,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChoiEffrosFragment {
    pub attractor_dim: usize,
    pub nstar_dim: usize,
    pub ideal_dim: usize,
    pub faithful: bool,
    pub nstar_equals_attractor: bool,
    pub peripherally_automorphic: bool,
    pub star_vs_product: f64,
    pub p11_multiplicativity: f64,
    pub lambda_isomorphism_defect: f64,
    pub cstar: CstarReport,
    pub correspondence: CorrespondenceReport,
    pub definition: DefinitionReport,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub passed: bool,
    /// `stage.check` names, or `stage: error` for a stage that could not complete.
    pub failing: Vec<String>,
}

/// Complete result of `analyze`.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub input: InputInfo,
    pub properties: Option<PropertiesFragment>,
    pub spectrum: Option<SpectrumFragment>,
    pub structure: Option<StructureFragment>,
    pub choi_effros: Option<ChoiEffrosFragment>,
    pub appendix: Option<AppendixReport>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub timings: Option<Vec<StageTiming>>,
    pub verdict: Verdict,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse a channel file. Errors here are input errors.
pub fn load_channel(bytes: &[u8], tol: &Tolerances) -> Result<Channel> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Validation(format!("file is not UTF-8: {e}")))?;
    let file: ChannelFile = serde_json::from_str(text)?;
    file.into_channel(tol)
}

pub fn analyze_bytes(bytes: &[u8], opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let c = load_channel(bytes, &opts.tol)?;
    Ok(analyze_channel(&c, sha256_hex(bytes), opts))
}

struct Timer {
    enabled: bool,
    last: Instant,
    stages: Vec<StageTiming>,
}

impl Timer {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        if self.enabled {
            self.stages.push(StageTiming { stage: stage.into(), seconds: (now - self.last).as_secs_f64() });
        }
        self.last = now;
    }
}

/// Run every stage on `c` (converted to the Heisenberg picture). Never fails: a stage that
/// errors is named in the verdict and later stages are skipped.
pub fn analyze_channel(c: &Channel, digest: String, opts: &AnalyzeOptions) -> AnalysisReport {
    let mut rep = AnalysisReport {
        input: InputInfo { sha256: digest, dim: c.dim(), picture: c.picture() },
        properties: None,
        spectrum: None,
        structure: None,
        choi_effros: None,
        appendix: None,
        tolerances: opts.tol,
        seed: opts.seed,
        timings: None,
        verdict: Verdict { passed: false, failing: Vec::new() },
    };
    let mut timer = Timer { enabled: opts.timings, last: Instant::now(), stages: Vec::new() };
    if let Err((stage, e)) = run(c, opts, &mut rep, &mut timer) {
        rep.verdict.failing.push(format!("{stage}: {e}"));
    }
    let mut failing: Vec<String> = Vec::new();
    let mut collect = |stage: &str, checks: &[Check]| {
        failing.extend(checks.iter().filter(|k| !k.passed).map(|k| format!("{stage}.{}", k.name)));
    };
    if let Some(p) = &rep.properties {
        collect("properties", &p.checks);
    }
    if let Some(s) = &rep.spectrum {
        collect("spectrum", &s.checks);
    }
    if let Some(s) = &rep.structure {
        collect("structure", &s.checks);
    }
    if let Some(s) = &rep.choi_effros {
        collect("choi_effros", &s.checks);
    }
    if let Some(a) = &rep.appendix {
        if !a.passed {
            failing.push("appendix.eigenvector_formulas".into());
        }
    }
    failing.append(&mut rep.verdict.failing);
    rep.verdict = Verdict { passed: failing.is_empty(), failing };
    if opts.timings {
        rep.timings = Some(timer.stages);
    }
    rep
}

type Staged<T> = std::result::Result<T, (&'static str, Error)>;

fn at<T>(stage: &'static str, r: Result<T>) -> Staged<T> {
    r.map_err(|e| (stage, e))
}

fn run(input: &Channel, opts: &AnalyzeOptions, rep: &mut AnalysisReport, timer: &mut Timer) -> Staged<()> {
    let tol = &opts.tol;
    let mut c = match input.picture() {
        Picture::Heisenberg => input.clone(),
        Picture::Schrodinger => input.adjoint(),
    }
    .with_tolerances(tol);

    let schwarz = schwarz_falsify(&c, opts.schwarz_trials, opts.seed, 1e-8);
    c.record_schwarz(&schwarz);
    let flags = *c.flags();
    let checks = vec![
        Check::new("unital", flags.unital_defect, tol.mat),
        Check::at_least("schwarz_margin", schwarz.worst_margin, -1e-8),
    ];
    let unital = flags.unital;
    rep.properties = Some(PropertiesFragment { flags, schwarz, checks });
    timer.lap("properties");
    if !unital {
        return Err(("properties", Error::Structural("the Heisenberg map is not unital".into())));
    }

    let spec = at("spectrum", spectral::spectrum(&c, tol))?;
    let pp = at("spectrum", spec.peripheral_projection())?;
    let attractor = at("spectrum", spec.attractor_basis())?;
    let fixed = at("spectrum", spec.fixed_point_basis())?;
    let mut checks = vec![
        Check::new("pp_idempotent", pp.idempotency_defect(), tol.alg),
        Check::new("pp_unital", pp.unital_defect(), tol.alg),
    ];
    if flags.cp {
        checks.push(Check::at_least("pp_choi_min_eig", pp.choi_min_eig(), -tol.alg));
    }
    let decay = spectral::nonperipheral_decay(&c, &spec, &pp, 16);
    rep.spectrum = Some(SpectrumFragment {
        entries: spec.entries(),
        peripheral_eigenvalues: spec.peripheral_values().iter().map(|z| [z.re, z.im]).collect(),
        subleading_modulus: spec.subleading_modulus(),
        fixed_dim: fixed.len(),
        attractor_dim: attractor.len(),
        decay,
        checks,
    });
    timer.lap("spectrum");

    let s = at("structure", analyze_structure(&c, &spec, &pp, tol, opts.seed))?;
    let mut frag = s.fragment();
    let locality = pp_locality_defect(&pp, &s.split, 8, opts.seed);
    frag.checks.push(Check::new("pp_locality", locality, tol.mat.max(tol.mat * pp.superop.norm_fro())));
    if s.split.is_faithful() {
        let defect = at("structure", faithful_closed_form_defect(&pp, &s.wolf))?;
        frag.checks.push(Check::new("faithful_closed_form", defect, tol.alg));
    }
    rep.structure = Some(frag);
    timer.lap("structure");

    let alg = at("choi_effros", StarAlgebra::new(&pp, &attractor, tol))?;
    let cstar = at("choi_effros", verify_cstar(&alg, Some(&c), opts.cstar_trials, opts.seed, tol))?;
    let auto = at("choi_effros", peripherally_automorphic(&pp, &s.attractor, tol))?;
    let lam = lambda_isomorphism_defect(&pp, &s.attractor, opts.cstar_trials, opts.seed);
    let ideal = at("choi_effros", kernel_ideal(&pp, &s.split, tol))?;
    let dfa = at("choi_effros", dfa_nstar(&s.attractor, &ideal, tol))?;
    let definition =
        at("choi_effros", dfa_definition_check(&c, &pp, &dfa, opts.dfa_n_max, opts.dfa_trials, opts.seed, tol))?;
    let correspondence = at("choi_effros", schrodinger_correspondence(&c, &s.attractor, tol))?;
    let mut checks = dfa.checks.clone();
    checks.extend([
        Check::new("star_closure", alg.closure_defect, tol.alg),
        Check::new("star_unit", alg.unit_defect, tol.alg),
        Check::new("star_involution", alg.involution_defect, tol.alg),
        Check::new("cstar_associativity", cstar.associativity, tol.alg),
        Check::new("cstar_unit", cstar.unit, tol.alg),
        Check::new("cstar_involution", cstar.involution, tol.alg),
        Check::new("cstar_identity", cstar.cstar_identity, tol.alg),
        Check::new("star_automorphism", cstar.automorphism.unwrap_or(0.0), tol.alg),
        Check::new("lambda_isomorphism", lam, tol.alg),
        Check::new("dfa_definition", definition.worst_member_defect, tol.alg),
        Check::new("schrodinger_correspondence", correspondence.span_distance, tol.alg),
    ]);
    rep.choi_effros = Some(ChoiEffrosFragment {
        attractor_dim: alg.dim(),
        nstar_dim: dfa.nstar_dim(),
        ideal_dim: ideal.basis.len(),
        faithful: s.split.is_faithful(),
        nstar_equals_attractor: dfa.equals_attractor,
        peripherally_automorphic: auto.peripherally_automorphic,
        star_vs_product: auto.star_vs_product,
        p11_multiplicativity: auto.p11_multiplicativity,
        lambda_isomorphism_defect: lam,
        cstar,
        correspondence,
        definition,
        checks,
    });
    timer.lap("choi_effros");

    let appendix = at("appendix", peripheral_eigvec_check(&s.split, &s.block_maps, &spec, tol))?;
    rep.appendix = Some(appendix);
    timer.lap("appendix");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{amplitude_damping_kraus, transpose_map, Repr};

    fn quick() -> AnalyzeOptions {
        AnalyzeOptions { schwarz_trials: 20, cstar_trials: 8, dfa_trials: 8, dfa_n_max: 3, timings: false, ..Default::default() }
    }

    #[test]
    fn amplitude_damping_report() {
        let c = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Schrodinger).unwrap();
        let r = analyze_channel(&c, String::new(), &quick());
        assert!(r.verdict.passed, "{:?}", r.verdict.failing);
        let s = r.structure.unwrap();
        assert_eq!((s.h0_dim, s.h1_dim, s.attractor_dim), (1, 1, 1));
        let sp = r.spectrum.unwrap();
        assert_eq!(sp.peripheral_eigenvalues.len(), 1);
        assert!((sp.peripheral_eigenvalues[0][0] - 1.0).abs() < 1e-12);
        assert!(r.choi_effros.unwrap().peripherally_automorphic);
    }

    #[test]
    fn identity_report_is_faithful() {
        let c = Channel::identity(3, Picture::Heisenberg);
        let r = analyze_channel(&c, String::new(), &quick());
        assert!(r.verdict.passed, "{:?}", r.verdict.failing);
        let ce = r.choi_effros.unwrap();
        assert!(ce.faithful && ce.nstar_equals_attractor);
        assert_eq!(ce.attractor_dim, 9);
    }

    #[test]
    fn non_unital_map_names_the_invariant() {
        // a Schrödinger channel read as a Heisenberg map is trace preserving but not unital
        let c = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Heisenberg).unwrap().adjoint();
        let file = c.to_json_value(Repr::Super).unwrap().to_string().replace("schrodinger", "heisenberg");
        let r = analyze_bytes(file.as_bytes(), &quick()).unwrap();
        assert!(!r.verdict.passed);
        assert!(r.verdict.failing.iter().any(|f| f.contains("unital")), "{:?}", r.verdict.failing);
    }

    #[test]
    fn transpose_is_flagged_by_schwarz_falsifier() {
        let r = analyze_channel(&transpose_map(2, Picture::Heisenberg), String::new(), &quick());
        assert!(r.verdict.failing.iter().any(|f| f == "properties.schwarz_margin"), "{:?}", r.verdict.failing);
    }

    #[test]
    fn malformed_input_is_an_input_error() {
        let e = analyze_bytes(b"{not json", &quick()).unwrap_err();
        assert!(e.is_input_error());
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
