//! Experiment specifications, figure presets, runs with artifacts, and sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{InteractionMatrix, ModelError, ModelParams, SurfaceTensions, TripleWell};
use crate::flow::{self, FlowConfig, FlowError, InitMode, RunReport};
use crate::io::{self, IoError};
use crate::morphology::{self, ClassifyThresholds, CoreShellKind, MorphologyReport, MorphologyTag};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown preset '{name}'; known presets: {known}")]
    UnknownPreset { name: String, known: String },
    #[error("unknown sweep parameter '{0}'")]
    UnknownParameter(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Fs(#[from] std::io::Error),
}

/// Morphology every two-species component must show.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpectedMorphology {
    DoubleBubble,
    CoreShell,
    CoreShellConcentric,
}

impl ExpectedMorphology {
    pub fn matches(&self, tag: MorphologyTag) -> bool {
        match self {
            ExpectedMorphology::DoubleBubble => tag == MorphologyTag::DoubleBubble,
            ExpectedMorphology::CoreShell => matches!(tag, MorphologyTag::CoreShell(_)),
            ExpectedMorphology::CoreShellConcentric => {
                tag == MorphologyTag::CoreShell(CoreShellKind::Concentric)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Checks {
    pub expect: Option<ExpectedMorphology>,
    pub min_components: usize,
    /// Largest `L02/(L02+L12)` allowed on two-species components.
    pub max_insulation: Option<f64>,
    /// Junction angles must lie within this many degrees of the given triple.
    pub junction_angles: Option<([f64; 3], f64)>,
    /// Energy increases are fatal.
    pub strict_energy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub params: ModelParams,
    pub flow: FlowConfig,
    pub n: usize,
    pub init: InitMode,
    pub thresholds: ClassifyThresholds,
    pub checks: Checks,
}

pub const PRESETS: [&str; 17] = [
    "figure2a", "figure2b", "figure2c", "figure2d", "figure2e", "figure2f", "figure3a", "figure3b",
    "figure3c", "figure3d", "figure3e", "figure3f", "figure4a", "figure4b", "figure4c", "figure5",
    "figure7",
];

/// Interface width and grid shared by all presets.
pub const PRESET_EPSILON: f64 = 0.01;
pub const PRESET_N: usize = 256;
pub const PRESET_BLOCK: usize = 8;

fn base_flow() -> FlowConfig {
    FlowConfig {
        dt: 0.05,
        max_steps: 20_000,
        energy_tolerance: 1e-9,
        window: 100,
        ..FlowConfig::default()
    }
}

fn spec_for(
    name: &str,
    sigma02: f64,
    masses: (f64, f64),
    gamma: (f64, f64, f64),
) -> Result<ExperimentSpec, ExperimentError> {
    let sigma = SurfaceTensions::new(1.0, sigma02, 1.0)?;
    let gamma = InteractionMatrix::new(gamma.0, gamma.1, gamma.2)?;
    let params = ModelParams::new(sigma, gamma, PRESET_EPSILON, masses.0, masses.1)?;
    let regime = crate::energy::classify_regime(&sigma);
    let mut checks = Checks {
        strict_energy: true,
        ..Checks::default()
    };
    if regime.is_core_shell() {
        checks.expect = Some(ExpectedMorphology::CoreShell);
        checks.max_insulation = Some(0.05);
    } else {
        checks.expect = Some(ExpectedMorphology::DoubleBubble);
    }
    if sigma02 == 1.0 {
        checks.junction_angles = Some(([2.0 * std::f64::consts::PI / 3.0; 3], 5.0));
    }
    Ok(ExperimentSpec {
        name: name.to_owned(),
        params,
        flow: base_flow(),
        n: PRESET_N,
        init: InitMode::Blocks { block: PRESET_BLOCK },
        thresholds: ClassifyThresholds::default(),
        checks,
    })
}

pub fn preset(name: &str) -> Result<ExperimentSpec, ExperimentError> {
    let series = [1.0, 1.6, 1.8, 1.9, 2.0, 3.0];
    let letter = |s: &str| s.bytes().next().map(|b| (b as i64 - b'a' as i64) as usize);
    if let Some(rest) = name.strip_prefix("figure2") {
        if let Some(&s02) = letter(rest).and_then(|i| series.get(i)).filter(|_| rest.len() == 1) {
            return spec_for(name, s02, (0.12, 0.04), (0.0, 0.0, 0.0));
        }
    }
    if let Some(rest) = name.strip_prefix("figure3") {
        if let Some(&s02) = letter(rest).and_then(|i| series.get(i)).filter(|_| rest.len() == 1) {
            return spec_for(name, s02, (0.04, 0.12), (0.0, 0.0, 0.0));
        }
    }
    let mut spec = match name {
        "figure4a" => spec_for(name, 1.0, (0.10, 0.05), (16000.0, 0.0, 54000.0))?,
        "figure4b" => spec_for(name, 1.5, (0.10, 0.05), (16000.0, 0.0, 54000.0))?,
        "figure4c" => spec_for(name, 2.0, (0.10, 0.05), (16000.0, 0.0, 54000.0))?,
        "figure5" => spec_for(name, 2.0, (0.12, 0.04), (4000.0, 0.0, 20000.0))?,
        "figure7" => spec_for(name, 2.0, (0.12, 0.06), (20000.0, 0.0, 100000.0))?,
        _ => {
            let mut ranked: Vec<&str> = PRESETS.to_vec();
            ranked.sort_by_key(|p| edit_distance(p, name));
            return Err(ExperimentError::UnknownPreset {
                name: name.to_owned(),
                known: ranked[..3].join(", "),
            });
        }
    };
    // Nonlocal presets: many droplets, each should be a concentric core
    // shell when Γ12 < Γ11.
    if spec.params.gamma.g12 < spec.params.gamma.g11 && crate::energy::classify_regime(&spec.params.sigma).is_core_shell() {
        spec.checks.expect = Some(ExpectedMorphology::CoreShellConcentric);
        spec.checks.min_components = 3;
    }
    spec.checks.junction_angles = None;
    Ok(spec)
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for j in 0..b.len() {
            let cur = row[j + 1];
            row[j + 1] = (prev + usize::from(ca != b[j])).min(row[j] + 1).min(cur + 1);
            prev = cur;
        }
    }
    row[b.len()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub run: RunReport,
    pub morphology: MorphologyReport,
    pub assertions: Vec<AssertionOutcome>,
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
}

fn check(name: &str, passed: bool, detail: String) -> AssertionOutcome {
    AssertionOutcome {
        name: name.to_owned(),
        passed,
        detail,
    }
}

/// Evaluates the spec's checks against a run and its final morphology.
pub fn evaluate(spec: &ExperimentSpec, run: &RunReport, m: &MorphologyReport) -> Vec<AssertionOutcome> {
    let mut out = Vec::new();
    out.push(check(
        "mass_conservation",
        run.max_mass_drift == 0.0,
        format!("max drift {:e}", run.max_mass_drift),
    ));
    if spec.checks.strict_energy {
        out.push(check(
            "energy_non_increasing",
            run.violations.is_empty(),
            format!("{} violating steps", run.violations.len()),
        ));
    }
    if let Some(e) = spec.checks.expect {
        // Lattice presets judge every component; local presets tolerate
        // single-species satellites.
        let judged: Vec<MorphologyTag> = if e == ExpectedMorphology::CoreShellConcentric {
            m.components.iter().map(|c| c.tag).collect()
        } else {
            m.mixed().map(|c| c.tag).collect()
        };
        let ok = !judged.is_empty() && judged.iter().all(|t| e.matches(*t));
        let names: Vec<String> = m.tags().iter().map(|t| t.name()).collect();
        out.push(check("morphology", ok, format!("expected {e:?}, got [{}]", names.join(", "))));
    }
    if spec.checks.min_components > 0 {
        out.push(check(
            "component_count",
            m.components.len() >= spec.checks.min_components,
            format!("{} components, need {}", m.components.len(), spec.checks.min_components),
        ));
    }
    if let Some(limit) = spec.checks.max_insulation {
        let worst = m.mixed().filter_map(|c| c.insulation()).fold(0.0, f64::max);
        let any = m.mixed().count() > 0;
        out.push(check(
            "core_insulation",
            any && worst < limit,
            format!("max L02/(L02+L12) = {worst:.4}, limit {limit}"),
        ));
    }
    if let Some((target, tol)) = spec.checks.junction_angles {
        let j = m.junction_angles();
        let worst = j
            .iter()
            .flat_map(|t| t.iter().zip(target.iter()).map(|(a, b)| (a - b).abs().to_degrees()))
            .fold(0.0, f64::max);
        out.push(check(
            "junction_angles",
            !j.is_empty() && worst <= tol,
            format!("{} junctions, max deviation {worst:.2} deg, tolerance {tol}", j.len()),
        ));
    }
    out
}

/// Flow, analysis, checks and (with `out`) artifacts.
pub fn run_experiment(spec: &ExperimentSpec, out: Option<&Path>) -> Result<ExperimentOutcome, ExperimentError> {
    let mut cfg = spec.flow.clone();
    cfg.strict = cfg.strict || spec.checks.strict_energy;
    // A strict run must finish to report, so violations are collected instead.
    let strict_requested = cfg.strict;
    cfg.strict = false;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let state = flow::init_random(&spec.params, spec.n, spec.init, cfg.seed)?;
    let (state, run) = flow::run_with_output(state, &cfg, &spec.params, out)?;
    let morphology = morphology::analyze(&state.u, spec.params.epsilon, &spec.thresholds);
    let mut checks = spec.checks.clone();
    checks.strict_energy = strict_requested;
    let assertions = evaluate(&ExperimentSpec { checks, ..spec.clone() }, &run, &morphology);
    let passed = assertions.iter().all(|a| a.passed);
    let mut artifacts = run.snapshots.clone();
    if let Some(dir) = out {
        let p = dir.join("energy.csv");
        io::write_energy_csv(&p, &run.energies)?;
        artifacts.push(p);
        let p = dir.join("final.tdf");
        io::write_density(&p, &state.u)?;
        artifacts.push(p);
        let p = dir.join("final.ppm");
        io::write_composite_ppm(&p, &state.u)?;
        artifacts.push(p);
        for (name, f) in [("u1.pgm", &state.u.u1), ("u2.pgm", &state.u.u2)] {
            let p = dir.join(name);
            io::write_pgm(&p, f)?;
            artifacts.push(p);
        }
        let p = dir.join("morphology.json");
        fs::write(&p, serde_json::to_string_pretty(&morphology).expect("serializable"))?;
        artifacts.push(p);
        let p = dir.join("spec.toml");
        fs::write(&p, spec_to_toml(spec)?)?;
        artifacts.push(p);
    }
    let outcome = ExperimentOutcome {
        name: spec.name.clone(),
        run,
        morphology,
        assertions,
        passed,
        artifacts,
    };
    if let Some(dir) = out {
        let summary = serde_json::json!({
            "name": outcome.name,
            "passed": outcome.passed,
            "reason": outcome.run.reason.as_str(),
            "steps": outcome.run.energies.last().map(|r| r.step),
            "final_energy": outcome.run.energies.last().map(|r| r.total),
            "wall_seconds": outcome.run.wall_seconds,
            "assertions": outcome.assertions,
        });
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&summary).expect("serializable"))?;
    }
    Ok(outcome)
}

/// Plain-text configuration layout.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: Option<String>,
    pub preset: Option<String>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub masses: Option<MassesSection>,
    pub sigma: Option<SigmaSection>,
    pub gamma: Option<GammaSection>,
    #[serde(rename = "Gamma")]
    pub big_gamma: Option<GammaSection>,
    pub flow: Option<FlowConfig>,
    pub init: Option<InitMode>,
    pub checks: Option<Checks>,
    pub thresholds: Option<ClassifyThresholds>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassesSection {
    pub m1: f64,
    pub m2: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSection {
    pub s01: f64,
    pub s02: f64,
    pub s12: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSection {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

/// Builds a spec from TOML text; a `preset` key supplies the defaults.
pub fn spec_from_toml(text: &str) -> Result<ExperimentSpec, ExperimentError> {
    let c: ConfigFile = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut spec = match &c.preset {
        Some(p) => preset(p)?,
        None => {
            let sigma = c.sigma.ok_or_else(|| ExperimentError::Config("missing [sigma]".into()))?;
            let masses = c.masses.ok_or_else(|| ExperimentError::Config("missing [masses]".into()))?;
            let s = SurfaceTensions::new(sigma.s01, sigma.s02, sigma.s12)?;
            let params = ModelParams::new(s, InteractionMatrix::zero(), c.epsilon.unwrap_or(PRESET_EPSILON), masses.m1, masses.m2)?;
            ExperimentSpec {
                name: c.name.clone().unwrap_or_else(|| "custom".into()),
                params,
                flow: base_flow(),
                n: PRESET_N,
                init: InitMode::Blocks { block: PRESET_BLOCK },
                thresholds: ClassifyThresholds::default(),
                checks: Checks {
                    strict_energy: true,
                    ..Checks::default()
                },
            }
        }
    };
    let p = &mut spec.params;
    if let Some(s) = c.sigma {
        p.sigma = SurfaceTensions::new(s.s01, s.s02, s.s12)?;
        p.well = TripleWell::for_tensions(&p.sigma);
    }
    if let Some(m) = c.masses {
        p.m1 = m.m1;
        p.m2 = m.m2;
    }
    if let Some(e) = c.epsilon {
        p.epsilon = e;
    }
    if let Some(eta) = c.eta {
        *p = p.with_eta(eta)?;
    }
    match (c.gamma, c.big_gamma) {
        (Some(_), Some(_)) => return Err(ExperimentError::Config("give either [gamma] or [Gamma], not both".into())),
        (Some(g), None) => p.gamma = InteractionMatrix::new(g.g11, g.g12, g.g22)?,
        (None, Some(g)) => *p = p.with_big_gamma(InteractionMatrix::new(g.g11, g.g12, g.g22)?)?,
        (None, None) => {}
    }
    p.validate()?;
    if let Some(name) = c.name {
        spec.name = name;
    }
    if let Some(f) = c.flow {
        spec.flow = f;
    }
    if let Some(seed) = c.seed {
        spec.flow.seed = seed;
    }
    if let Some(n) = c.n {
        spec.n = n;
    }
    if let Some(i) = c.init {
        spec.init = i;
    }
    if let Some(ch) = c.checks {
        spec.checks = ch;
    }
    if let Some(t) = c.thresholds {
        spec.thresholds = t;
    }
    spec.flow.validate()?;
    Ok(spec)
}

pub fn spec_to_toml(spec: &ExperimentSpec) -> Result<String, ExperimentError> {
    let p = &spec.params;
    let c = ConfigFile {
        name: Some(spec.name.clone()),
        preset: None,
        epsilon: Some(p.epsilon),
        eta: p.eta,
        n: Some(spec.n),
        seed: Some(spec.flow.seed),
        masses: Some(MassesSection { m1: p.m1, m2: p.m2 }),
        sigma: Some(SigmaSection {
            s01: p.sigma.s01,
            s02: p.sigma.s02,
            s12: p.sigma.s12,
        }),
        gamma: Some(GammaSection {
            g11: p.gamma.g11,
            g12: p.gamma.g12,
            g22: p.gamma.g22,
        }),
        big_gamma: None,
        flow: Some(spec.flow.clone()),
        init: Some(spec.init),
        checks: Some(spec.checks.clone()),
        thresholds: Some(spec.thresholds),
    };
    toml::to_string(&c).map_err(|e| ExperimentError::Config(e.to_string()))
}

pub const SWEEP_PARAMETERS: [&str; 11] = [
    "sigma.s01", "sigma.s02", "sigma.s12", "gamma.g11", "gamma.g12", "gamma.g22", "masses.m1", "masses.m2",
    "epsilon", "seed", "n",
];

/// Copy of `spec` with one parameter replaced.
pub fn with_parameter(spec: &ExperimentSpec, param: &str, value: f64) -> Result<ExperimentSpec, ExperimentError> {
    let mut s = spec.clone();
    let p = &mut s.params;
    let mut retension = |s01: f64, s02: f64, s12: f64| -> Result<(), ExperimentError> {
        p.sigma = SurfaceTensions::new(s01, s02, s12)?;
        p.well = TripleWell::for_tensions(&p.sigma);
        Ok(())
    };
    let sg = spec.params.sigma;
    match param {
        "sigma.s01" => retension(value, sg.s02, sg.s12)?,
        "sigma.s02" => retension(sg.s01, value, sg.s12)?,
        "sigma.s12" => retension(sg.s01, sg.s02, value)?,
        "gamma.g11" => s.params.gamma.g11 = value,
        "gamma.g12" => s.params.gamma.g12 = value,
        "gamma.g22" => s.params.gamma.g22 = value,
        "masses.m1" => s.params.m1 = value,
        "masses.m2" => s.params.m2 = value,
        "epsilon" => s.params.epsilon = value,
        "seed" => s.flow.seed = value as u64,
        "n" => s.n = value as usize,
        _ => return Err(ExperimentError::UnknownParameter(param.to_owned())),
    }
    s.params.validate()?;
    InteractionMatrix::new(s.params.gamma.g11, s.params.gamma.g12, s.params.gamma.g22)?;
    if param.starts_with("sigma") {
        let core = crate::energy::classify_regime(&s.params.sigma).is_core_shell();
        if s.checks.expect.is_some() {
            s.checks.expect = Some(if core {
                if s.checks.expect == Some(ExpectedMorphology::CoreShellConcentric) {
                    ExpectedMorphology::CoreShellConcentric
                } else {
                    ExpectedMorphology::CoreShell
                }
            } else {
                ExpectedMorphology::DoubleBubble
            });
            s.checks.max_insulation = core.then_some(0.05);
        }
        if s.params.sigma != SurfaceTensions::symmetric() {
            s.checks.junction_angles = None;
        }
    }
    s.name = format!("{}_{}_{}", spec.name, param.replace('.', "_"), value);
    Ok(s)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub classification: Option<String>,
    pub components: Option<usize>,
    pub final_energy: Option<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

/// Dominant tag among two-species components, or among all components.
pub fn summary_tag(m: &MorphologyReport) -> Option<MorphologyTag> {
    let mixed: Vec<MorphologyTag> = m.mixed().map(|c| c.tag).collect();
    let pool = if mixed.is_empty() { m.tags() } else { mixed };
    let mut best: Option<(MorphologyTag, usize)> = None;
    for t in &pool {
        let c = pool.iter().filter(|x| *x == t).count();
        if best.map_or(true, |(_, b)| c > b) {
            best = Some((*t, c));
        }
    }
    best.map(|(t, _)| t)
}

/// Thread cap from `TD_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("TD_THREADS").ok()?.parse().ok().filter(|&n: &usize| n > 0)
}

/// One run per value in parallel; failures are recorded per row.
pub fn sweep(spec: &ExperimentSpec, param: &str, values: &[f64], out: Option<&Path>) -> Result<Vec<SweepRow>, ExperimentError> {
    if !SWEEP_PARAMETERS.contains(&param) {
        return Err(ExperimentError::UnknownParameter(param.to_owned()));
    }
    let work = |&value: &f64| -> SweepRow {
        let attempt = || -> Result<ExperimentOutcome, ExperimentError> {
            let s = with_parameter(spec, param, value)?;
            let dir = out.map(|d| d.join(&s.name));
            run_experiment(&s, dir.as_deref())
        };
        match attempt() {
            Ok(o) => SweepRow {
                value,
                classification: summary_tag(&o.morphology).map(|t| t.name()),
                components: Some(o.morphology.components.len()),
                final_energy: o.run.energies.last().map(|r| r.total),
                passed: o.passed,
                error: None,
            },
            Err(e) => SweepRow {
                value,
                classification: None,
                components: None,
                final_energy: None,
                passed: false,
                error: Some(e.to_string()),
            },
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_cap() {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| ExperimentError::Config(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| values.par_iter().map(work).collect());
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("sweep.csv"), sweep_csv(param, &rows))?;
    }
    Ok(rows)
}

pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("{param},classification,components,final_energy,passed,error\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.value,
            r.classification.clone().unwrap_or_default(),
            r.components.map(|c| c.to_string()).unwrap_or_default(),
            r.final_energy.map(|e| format!("{e:e}")).unwrap_or_default(),
            r.passed,
            r.error.clone().unwrap_or_default().replace(',', ";"),
        ));
    }
    s
}

/// Rank of a tag along the double-bubble to core-shell progression.
pub fn progression_rank(tag: &str) -> Option<u8> {
    if tag == "DoubleBubble" {
        Some(0)
    } else if tag.starts_with("CoreShell") {
        Some(1)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_examples() {
        let s = preset("figure2e").unwrap();
        assert_eq!(s.params.sigma.s02, 2.0);
        assert_eq!((s.params.m1, s.params.m2), (0.12, 0.04));
        let s = preset("figure7").unwrap();
        assert_eq!((s.params.gamma.g11, s.params.gamma.g12, s.params.gamma.g22), (20000.0, 0.0, 100000.0));
        assert_eq!((s.params.m1, s.params.m2), (0.12, 0.06));
        let s = preset("figure3b").unwrap();
        assert_eq!((s.params.m1, s.params.m2), (0.04, 0.12));
        assert_eq!(s.params.sigma.s02, 1.6);
        for name in PRESETS {
            assert!(preset(name).is_ok(), "{name}");
        }
    }

    #[test]
    fn unknown_preset_suggests_names() {
        match preset("figure2g") {
            Err(ExperimentError::UnknownPreset { known, .. }) => assert!(known.contains("figure2")),
            other => panic!("{other:?}"),
        }
        assert!(preset("figure22a").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let s = preset("figure5").unwrap();
        let text = spec_to_toml(&s).unwrap();
        let back = spec_from_toml(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn toml_overrides_and_big_gamma() {
        let text = r#"
            preset = "figure2a"
            epsilon = 0.02
            eta = 0.1
            seed = 7
            [Gamma]
            g11 = 1.0
            g12 = 0.0
            g22 = 2.0
        "#;
        let s = spec_from_toml(text).unwrap();
        assert_eq!(s.params.epsilon, 0.02);
        assert_eq!(s.flow.seed, 7);
        let f = crate::energy::droplet_factor(0.1);
        assert!((s.params.gamma.g22 - 2.0 / f).abs() < 1e-9 * s.params.gamma.g22);
        assert!(spec_from_toml("[Gamma]\ng11=1\ng12=0\ng22=1\n[sigma]\ns01=1\ns02=1\ns12=1\n[masses]\nm1=0.1\nm2=0.1").is_err());
        assert!(spec_from_toml("bogus = 1").is_err());
    }

    #[test]
    fn parameter_paths() {
        let s = preset("figure2a").unwrap();
        let t = with_parameter(&s, "sigma.s02", 2.0).unwrap();
        assert_eq!(t.checks.expect, Some(ExpectedMorphology::CoreShell));
        assert_eq!(t.params.well, TripleWell::for_tensions(&t.params.sigma));
        assert!(with_parameter(&s, "sigma.bogus", 1.0).is_err());
        assert!(sweep(&s, "sigma.s02", &[], None).unwrap().is_empty());
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("figure5", "figure5"), 0);
        assert_eq!(edit_distance("figure5", "figure7"), 1);
        assert_eq!(edit_distance("", "abc"), 3);
    }
}
