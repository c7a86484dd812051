//! Mass-constrained L² gradient flow with a stabilized semi-implicit scheme.
//!
//! Time is scaled so the flow reads
//! `∂u = ε² B Δu - ∇W(u) - 2ε γ G∗u + λ`, where `B` is the gradient
//! metric in `(u1, u2)` and `λ` keeps both means fixed. The Laplacian and a
//! stabilizing `S(u^{n+1} - u^n)` are implicit; `∇W` and the nonlocal force
//! are explicit. Each Fourier mode then needs one 2×2 solve.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{energy_from_spectra, EnergyParts, ModelError, ModelParams, PhaseDensity};
use crate::grid::{laplace_symbol, GridError, GridField, Spectral};
use crate::io::{self, EnergyRecord, IoError};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("non-finite value after step {step} ({field})")]
    NonFinite { step: usize, field: &'static str },
    #[error("energy increased at step {step}: {before:e} -> {after:e}")]
    EnergyIncrease { step: usize, before: f64, after: f64 },
    #[error("masses ({0}, {1}) cannot be matched within the clipping slack")]
    InfeasibleMasses(f64, f64),
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub dt: f64,
    /// `None` selects [`default_stabilizer`].
    pub stabilizer: Option<f64>,
    pub max_steps: usize,
    /// Stop once the mean relative decrease per step over `window` falls below this.
    pub energy_tolerance: f64,
    pub window: usize,
    pub seed: u64,
    /// Write a snapshot every this many steps (0 disables).
    pub snapshot_every: usize,
    /// Augmented penalty `ρ` on the mass defect; 0 is pure projection.
    pub penalty: f64,
    /// Energy increases beyond `1e-12` abort the run.
    pub strict: bool,
    /// Steps before this index are exempt from the monotonicity check.
    pub monotone_from: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            stabilizer: None,
            max_steps: 200_000,
            energy_tolerance: 1e-9,
            window: 100,
            seed: 0,
            snapshot_every: 0,
            penalty: 0.0,
            strict: false,
            monotone_from: 0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FlowError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if let Some(s) = self.stabilizer {
            if !(s >= 0.0) {
                return Err(FlowError::Config(format!("stabilizer must be >= 0, got {s}")));
            }
        }
        if self.window == 0 {
            return Err(FlowError::Config("window must be at least 1".into()));
        }
        if !(self.penalty >= 0.0) {
            return Err(FlowError::Config("penalty must be >= 0".into()));
        }
        Ok(())
    }
}

/// Absolute tolerance on per-step energy increases.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Slack used when bounding the well's curvature.
pub const HESSIAN_SLACK: f64 = 0.05;

/// Bound on the Lipschitz constant of the explicit force: the well's Hessian
/// norm over the widened simplex plus the nonlocal operator norm `2ε ρ(γ)/(4π²)`.
pub fn default_stabilizer(p: &ModelParams) -> f64 {
    let nonlocal = 2.0 * p.epsilon * p.gamma.spectral_radius() / (4.0 * std::f64::consts::PI.powi(2));
    p.well.max_hessian_norm(HESSIAN_SLACK) + nonlocal
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitMode {
    /// `M_i` plus uniform noise of the given amplitude, clipped to the simplex.
    Noise { amplitude: f64 },
    /// Blocks of `block × block` cells labelled pure 0, 1 or 2 in
    /// proportions `1 - M1 - M2`, `M1`, `M2`, randomly placed.
    Blocks { block: usize },
}

impl Default for InitMode {
    fn default() -> Self {
        InitMode::Noise { amplitude: 0.05 }
    }
}

/// Pointwise slack accepted after the mean correction.
pub const INIT_SLACK: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct FlowState {
    pub u: PhaseDensity,
    pub t: f64,
    pub step: usize,
    pub lambda: [f64; 2],
    pub history: Vec<EnergyRecord>,
}

impl FlowState {
    /// Wraps a density with its initial energy record.
    pub fn new(u: PhaseDensity, p: &ModelParams) -> Result<Self, FlowError> {
        let e = crate::energy::diffuse_energy(&u, p)?;
        let drift = mass_drift(&u, p);
        Ok(Self {
            u,
            t: 0.0,
            step: 0,
            lambda: [0.0; 2],
            history: vec![record(0, 0.0, e, drift)],
        })
    }

    pub fn energy(&self) -> f64 {
        self.history.last().map(|r| r.total).unwrap_or(f64::NAN)
    }
}

fn record(step: usize, time: f64, e: EnergyParts, drift: [f64; 2]) -> EnergyRecord {
    EnergyRecord {
        step,
        time,
        total: e.total(),
        gradient: e.gradient,
        well: e.well,
        nonlocal: e.nonlocal,
        mass1_drift: drift[0],
        mass2_drift: drift[1],
    }
}

/// Compensated sum, so mean defects are resolved below one ulp of the mean.
fn accurate_mean(v: &[f64]) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &x in v {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    (s + c) / v.len() as f64
}

fn mass_drift(u: &PhaseDensity, p: &ModelParams) -> [f64; 2] {
    [accurate_mean(u.u1.data()) - p.m1, accurate_mean(u.u2.data()) - p.m2]
}

/// Shifts `v` so its compensated mean equals `target`.
fn pin_mean(v: &mut [f64], target: f64) {
    for _ in 0..4 {
        let d = target - accurate_mean(v);
        if d == 0.0 {
            return;
        }
        for x in v.iter_mut() {
            *x += d;
        }
    }
}

pub fn init_random(p: &ModelParams, n: usize, mode: InitMode, seed: u64) -> Result<FlowState, FlowError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    match mode {
        InitMode::Noise { amplitude } => {
            for k in 0..n * n {
                let x = p.m1 + amplitude * rng.gen_range(-1.0..=1.0);
                let y = p.m2 + amplitude * rng.gen_range(-1.0..=1.0);
                let (x, y) = (x.max(0.0), y.max(0.0));
                let s = x + y;
                let f = if s > 1.0 { 1.0 / s } else { 1.0 };
                a[k] = x * f;
                b[k] = y * f;
            }
        }
        InitMode::Blocks { block } => {
            if block == 0 || n % block != 0 {
                return Err(FlowError::Config(format!("block {block} must divide n = {n}")));
            }
            let nb = n / block;
            // Exact label counts keep the mean correction below one block.
            let total = nb * nb;
            let c1 = (p.m1 * total as f64).round() as usize;
            let c2 = (p.m2 * total as f64).round() as usize;
            let mut labels: Vec<u8> = (0..total)
                .map(|k| if k < c1 { 1 } else if k < c1 + c2 { 2 } else { 0 })
                .collect();
            labels.shuffle(&mut rng);
            for i in 0..n {
                for j in 0..n {
                    match labels[(i / block) * nb + j / block] {
                        1 => a[i * n + j] = 1.0,
                        2 => b[i * n + j] = 1.0,
                        _ => {}
                    }
                }
            }
        }
    }
    pin_mean(&mut a, p.m1);
    pin_mean(&mut b, p.m2);
    let u = PhaseDensity::new(GridField::new(n, a)?, GridField::new(n, b)?)?;
    if !u.within_slack(INIT_SLACK) {
        return Err(FlowError::InfeasibleMasses(p.m1, p.m2));
    }
    FlowState::new(u, p)
}

/// Precomputed per-resolution data for [`Stepper::step`].
pub struct Stepper {
    n: usize,
    dt: f64,
    s: f64,
    penalty: f64,
    spec: Spectral,
    sym: Vec<f64>,
    /// Inverse of `(1 + dt S) I + dt ε² |k|²-symbol · B` per mode, as `(a, b, c)`
    /// for the symmetric matrix `[[a, b], [b, c]]`.
    inv: Vec<[f64; 3]>,
    params: ModelParams,
    buf: Vec<Complex64>,
    hat: Vec<Complex64>,
}

impl Stepper {
    pub fn new(n: usize, cfg: &FlowConfig, p: &ModelParams) -> Result<Self, FlowError> {
        cfg.validate()?;
        p.validate()?;
        if !p.well.metric_is_positive() {
            return Err(ModelError::IndefiniteMetric(p.well.weights).into());
        }
        let s = cfg.stabilizer.unwrap_or_else(|| default_stabilizer(p));
        let spec = Spectral::new(n)?;
        let sym = laplace_symbol(n);
        let b = p.well.metric();
        let e2 = p.epsilon * p.epsilon;
        let inv = sym
            .iter()
            .map(|&q| {
                let d = 1.0 + cfg.dt * s;
                let m00 = d + cfg.dt * e2 * q * b[0][0];
                let m01 = cfg.dt * e2 * q * b[0][1];
                let m11 = d + cfg.dt * e2 * q * b[1][1];
                let det = m00 * m11 - m01 * m01;
                [m11 / det, -m01 / det, m00 / det]
            })
            .collect();
        Ok(Self {
            n,
            dt: cfg.dt,
            s,
            penalty: cfg.penalty,
            spec,
            sym,
            inv,
            params: *p,
            buf: vec![Complex64::new(0.0, 0.0); n * n],
            hat: vec![Complex64::new(0.0, 0.0); n * n],
        })
    }

    pub fn stabilizer(&self) -> f64 {
        self.s
    }

    /// Raw transforms of two real fields from one complex transform of `f + i g`.
    fn packed_forward(&mut self, f: &[f64], g: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        for k in 0..n * n {
            self.buf[k] = Complex64::new(f[k], g[k]);
        }
        self.spec.forward(&mut self.buf);
        let mut hf = vec![Complex64::new(0.0, 0.0); n * n];
        let mut hg = vec![Complex64::new(0.0, 0.0); n * n];
        for a in 0..n {
            let ma = (n - a) % n;
            for b in 0..n {
                let mb = (n - b) % n;
                let z = self.buf[a * n + b];
                let zc = self.buf[ma * n + mb].conj();
                hf[a * n + b] = 0.5 * (z + zc);
                hg[a * n + b] = Complex64::new(0.0, -0.5) * (z - zc);
            }
        }
        (hf, hg)
    }

    /// One accepted step; returns the new energy breakdown.
    pub fn step(&mut self, state: &mut FlowState) -> Result<EnergyParts, FlowError> {
        let n = self.n;
        let nn = (n * n) as f64;
        let p = self.params;
        let (h1, h2) = self.packed_forward(state.u.u1.data(), state.u.u2.data());
        let mut f1 = vec![0.0; n * n];
        let mut f2 = vec![0.0; n * n];
        for (k, (&a, &b)) in state.u.u1.data().iter().zip(state.u.u2.data()).enumerate() {
            let (g1, g2) = p.well.grad(a, b);
            f1[k] = g1;
            f2[k] = g2;
        }
        let (w1, w2) = self.packed_forward(&f1, &f2);
        let d = 1.0 + self.dt * self.s;
        let g = p.gamma;
        let c = 2.0 * p.epsilon;
        let mut n1 = vec![Complex64::new(0.0, 0.0); n * n];
        let mut n2 = vec![Complex64::new(0.0, 0.0); n * n];
        for k in 1..n * n {
            let q = self.sym[k];
            let (g1, g2) = (h1[k] / q, h2[k] / q);
            let r1 = d * h1[k] - self.dt * (w1[k] + c * (g.g11 * g1 + g.g12 * g2));
            let r2 = d * h2[k] - self.dt * (w2[k] + c * (g.g12 * g1 + g.g22 * g2));
            let [ia, ib, ic] = self.inv[k];
            n1[k] = ia * r1 + ib * r2;
            n2[k] = ib * r1 + ic * r2;
        }
        // Zero mode: the multiplier cancels the mean force, so the mean stays M.
        // The augmented variant adds ρ times the incoming mass defect.
        let mean_force = [w1[0].re / nn, w2[0].re / nn];
        let defect = [h1[0].re / nn - p.m1, h2[0].re / nn - p.m2];
        state.lambda = [
            mean_force[0] - self.penalty * defect[0],
            mean_force[1] - self.penalty * defect[1],
        ];
        n1[0] = Complex64::new(p.m1 * nn, 0.0);
        n2[0] = Complex64::new(p.m2 * nn, 0.0);

        for k in 0..n * n {
            self.hat[k] = n1[k] + Complex64::new(0.0, 1.0) * n2[k];
        }
        self.spec.backward(&mut self.hat);
        let mut a = Vec::with_capacity(n * n);
        let mut b = Vec::with_capacity(n * n);
        for z in &self.hat {
            a.push(z.re / nn);
            b.push(z.im / nn);
        }
        let step = state.step + 1;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite { step, field: "u" });
        }
        pin_mean(&mut a, p.m1);
        pin_mean(&mut b, p.m2);
        state.u = PhaseDensity::new(GridField::new(n, a)?, GridField::new(n, b)?)?;
        let e = energy_from_spectra(&state.u, &n1, &n2, &self.sym, &p);
        if !e.total().is_finite() {
            return Err(FlowError::NonFinite { step, field: "energy" });
        }
        state.step = step;
        state.t += self.dt;
        let drift = mass_drift(&state.u, &p);
        state.history.push(record(step, state.t, e, drift));
        Ok(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Budget,
    Stationary,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Stationary => "stationary",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub energies: Vec<EnergyRecord>,
    pub reason: StopReason,
    pub wall_seconds: f64,
    pub snapshots: Vec<PathBuf>,
    /// Steps whose energy rose by more than [`MONOTONE_TOL`].
    pub violations: Vec<usize>,
    pub stabilizer: f64,
    pub max_mass_drift: f64,
}

fn stationary(h: &[EnergyRecord], window: usize, tol: f64) -> bool {
    if h.len() <= window {
        return false;
    }
    let last = h[h.len() - 1].total;
    let first = h[h.len() - 1 - window].total;
    (first - last) / (window as f64 * last.abs().max(f64::MIN_POSITIVE)) < tol
}

pub fn run(state: FlowState, cfg: &FlowConfig, p: &ModelParams) -> Result<(FlowState, RunReport), FlowError> {
    run_with_output(state, cfg, p, None)
}

/// Like [`run`], writing snapshots to `out` at the configured cadence.
pub fn run_with_output(
    mut state: FlowState,
    cfg: &FlowConfig,
    p: &ModelParams,
    out: Option<&Path>,
) -> Result<(FlowState, RunReport), FlowError> {
    let clock = Instant::now();
    let mut stepper = Stepper::new(state.u.n(), cfg, p)?;
    let mut snapshots = Vec::new();
    let mut violations = Vec::new();
    let mut reason = StopReason::Budget;
    for _ in 0..cfg.max_steps {
        let before = state.energy();
        let e = stepper.step(&mut state)?;
        if e.total() > before + MONOTONE_TOL && state.step >= cfg.monotone_from {
            if cfg.strict {
                return Err(FlowError::EnergyIncrease {
                    step: state.step,
                    before,
                    after: e.total(),
                });
            }
            violations.push(state.step);
        }
        if let Some(dir) = out {
            if cfg.snapshot_every > 0 && state.step % cfg.snapshot_every == 0 {
                let path = dir.join(format!("snapshot_{:07}.tdf", state.step));
                io::write_density(&path, &state.u)?;
                snapshots.push(path);
            }
        }
        if stationary(&state.history, cfg.window, cfg.energy_tolerance) {
            reason = StopReason::Stationary;
            break;
        }
    }
    let max_mass_drift = state
        .history
        .iter()
        .map(|r| r.mass1_drift.abs().max(r.mass2_drift.abs()))
        .fold(0.0, f64::max);
    let report = RunReport {
        energies: state.history.clone(),
        reason,
        wall_seconds: clock.elapsed().as_secs_f64(),
        snapshots,
        violations,
        stabilizer: stepper.stabilizer(),
        max_mass_drift,
    };
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{InteractionMatrix, SurfaceTensions, TripleWell};
    use std::f64::consts::PI;

    fn params(sigma: SurfaceTensions, gamma: InteractionMatrix, m1: f64, m2: f64) -> ModelParams {
        ModelParams::new(sigma, gamma, 0.04, m1, m2).unwrap()
    }

    fn base() -> ModelParams {
        params(
            SurfaceTensions::new(1.0, 1.3, 1.1).unwrap(),
            InteractionMatrix::new(30.0, 5.0, 60.0).unwrap(),
            0.2,
            0.1,
        )
    }

    fn cfg() -> FlowConfig {
        FlowConfig {
            dt: 0.05,
            max_steps: 20,
            ..FlowConfig::default()
        }
    }

    #[test]
    fn zero_noise_gives_uniform_state() {
        let p = base();
        let s = init_random(&p, 16, InitMode::Noise { amplitude: 0.0 }, 1).unwrap();
        assert!(s.u.u1.data().iter().all(|&v| v == p.m1));
        assert!(s.u.u2.data().iter().all(|&v| v == p.m2));
    }

    #[test]
    fn init_is_deterministic_and_mass_exact() {
        let p = base();
        for seed in 0..100 {
            let a = init_random(&p, 16, InitMode::default(), seed).unwrap();
            let b = init_random(&p, 16, InitMode::default(), seed).unwrap();
            assert_eq!(a.u, b.u);
            assert_eq!(mass_drift(&a.u, &p), [0.0, 0.0]);
        }
        let a = init_random(&p, 32, InitMode::Blocks { block: 4 }, 9).unwrap();
        assert_eq!(mass_drift(&a.u, &p), [0.0, 0.0]);
        assert!(init_random(&p, 32, InitMode::Blocks { block: 5 }, 9).is_err());
    }

    #[test]
    fn constants_are_fixed_points() {
        let p = base();
        let mut s = init_random(&p, 16, InitMode::Noise { amplitude: 0.0 }, 0).unwrap();
        let mut st = Stepper::new(16, &cfg(), &p).unwrap();
        for _ in 0..5 {
            st.step(&mut s).unwrap();
        }
        for (&a, &b) in s.u.u1.data().iter().zip(s.u.u2.data()) {
            assert!((a - p.m1).abs() < 1e-15 && (b - p.m2).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_mode_follows_scalar_recursion() {
        let mut p = params(SurfaceTensions::symmetric(), InteractionMatrix::zero(), 0.3, 0.3);
        p.well = TripleWell::gradient_only();
        // (1, -1) is the eigenvector of the metric with eigenvalue 1.
        let amp = 0.1;
        let (k1, k2) = (2.0, 1.0);
        let mode = move |x: f64, y: f64| amp * (2.0 * PI * (k1 * x + k2 * y)).cos();
        let u1 = GridField::from_fn(32, move |x, y| 0.3 + mode(x, y)).unwrap();
        let u2 = GridField::from_fn(32, move |x, y| 0.3 - mode(x, y)).unwrap();
        let mut s = FlowState::new(PhaseDensity::new(u1, u2).unwrap(), &p).unwrap();
        let c = FlowConfig {
            dt: 0.1,
            stabilizer: Some(3.0),
            ..cfg()
        };
        let mut st = Stepper::new(32, &c, &p).unwrap();
        let q = 4.0 * PI * PI * (k1 * k1 + k2 * k2);
        let e2 = p.epsilon * p.epsilon;
        let factor = (1.0 + c.dt * 3.0) / (1.0 + c.dt * 3.0 + c.dt * e2 * q);
        let mut want = amp;
        for _ in 0..10 {
            st.step(&mut s).unwrap();
            want *= factor;
            let got = GridField::from_fn(32, |x, y| 0.3 + want / amp * mode(x, y)).unwrap();
            for (a, b) in s.u.u1.data().iter().zip(got.data()) {
                assert!((a - b).abs() < 1e-12 * amp);
            }
        }
    }

    #[test]
    fn energy_decreases_and_mass_is_exact() {
        let p = base();
        let s = init_random(&p, 32, InitMode::Blocks { block: 4 }, 3).unwrap();
        let c = FlowConfig {
            max_steps: 60,
            strict: true,
            ..cfg()
        };
        let (out, rep) = run(s, &c, &p).unwrap();
        assert!(rep.violations.is_empty());
        assert_eq!(rep.max_mass_drift, 0.0);
        assert!(out.energy() < rep.energies[0].total);
    }

    #[test]
    fn empty_budget_returns_input() {
        let p = base();
        let s = init_random(&p, 16, InitMode::default(), 2).unwrap();
        let c = FlowConfig {
            max_steps: 0,
            ..cfg()
        };
        let (out, rep) = run(s.clone(), &c, &p).unwrap();
        assert_eq!(out.u, s.u);
        assert_eq!(rep.reason.as_str(), "budget");
        assert_eq!(rep.energies.len(), 1);
    }

    #[test]
    fn translation_equivariance() {
        let p = base();
        let s = init_random(&p, 32, InitMode::Blocks { block: 4 }, 5).unwrap();
        let shifted = FlowState::new(s.u.shifted(7, 3), &p).unwrap();
        let (a, _) = run(s, &cfg(), &p).unwrap();
        let (b, _) = run(shifted, &cfg(), &p).unwrap();
        let a = a.u.shifted(7, 3);
        for (x, y) in a.u1.data().iter().zip(b.u.u1.data()).chain(a.u2.data().iter().zip(b.u.u2.data())) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn species_swap_equivariance() {
        let p = base();
        let q = params(
            SurfaceTensions::new(p.sigma.s02, p.sigma.s01, p.sigma.s12).unwrap(),
            InteractionMatrix::new(p.gamma.g22, p.gamma.g12, p.gamma.g11).unwrap(),
            p.m2,
            p.m1,
        );
        let s = init_random(&p, 32, InitMode::Blocks { block: 4 }, 6).unwrap();
        let swapped = FlowState::new(PhaseDensity::new(s.u.u2.clone(), s.u.u1.clone()).unwrap(), &q).unwrap();
        let (a, _) = run(s, &cfg(), &p).unwrap();
        let (b, _) = run(swapped, &cfg(), &q).unwrap();
        for (x, y) in a.u.u1.data().iter().zip(b.u.u2.data()).chain(a.u.u2.data().iter().zip(b.u.u1.data())) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let p = base();
        let go = || {
            let s = init_random(&p, 16, InitMode::default(), 11).unwrap();
            run(s, &cfg(), &p).unwrap().1.energies
        };
        assert_eq!(go(), go());
    }

    #[test]
    fn rejects_bad_config() {
        let p = base();
        let bad = FlowConfig { dt: 0.0, ..cfg() };
        assert!(Stepper::new(16, &bad, &p).is_err());
        let bad = FlowConfig { window: 0, ..cfg() };
        assert!(bad.validate().is_err());
    }
}
