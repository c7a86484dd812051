//! Finite droplet configurations on the torus: the second-order functional
//! `F0`, descent on droplet positions, and the scale-`η` energy that bridges
//! back to diffuse simulations.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coreshell::{self, CoreShellError, CoreShellGeometry};
use crate::energy::{InteractionMatrix, SurfaceTensions};
use crate::ewald::{green_gradient, green_point, green_regular_part, EwaldError};
use crate::sharp::{self, MassPair, MassSplit, SharpError};

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("droplets {0} and {1} coincide")]
    Coincident(usize, usize),
    #[error("droplets {0} and {1} overlap at scale η = {2}")]
    Overlap(usize, usize, f64),
    #[error("need at least {0} droplets, got {1}")]
    TooFew(usize, usize),
    #[error("η must lie in (0, 1), got {0}")]
    BadEta(f64),
    #[error(transparent)]
    Sharp(#[from] SharpError),
    #[error(transparent)]
    CoreShell(#[from] CoreShellError),
    #[error(transparent)]
    Ewald(#[from] EwaldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Droplet {
    pub mass: MassPair,
    /// Centre on the torus `[-1/2, 1/2)²`.
    pub x: [f64; 2],
    /// Core offset along the first axis; 0 for single bubbles.
    pub t: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DropletConfig {
    pub droplets: Vec<Droplet>,
}

fn wrap(v: f64) -> f64 {
    v - v.round()
}

fn torus_delta(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [wrap(a[0] - b[0]), wrap(a[1] - b[1])]
}

fn torus_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = torus_delta(a, b);
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

impl DropletConfig {
    pub fn len(&self) -> usize {
        self.droplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.droplets.is_empty()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.droplets.iter().map(|d| d.x).collect()
    }

    pub fn split(&self) -> MassSplit {
        MassSplit {
            parts: self.droplets.iter().map(|d| d.mass).collect(),
        }
    }

    /// Droplets with the given masses and positions, each core at its
    /// `f0`-optimal offset.
    pub fn from_split(
        split: &MassSplit,
        positions: &[[f64; 2]],
        s: &SurfaceTensions,
        big: &InteractionMatrix,
    ) -> Result<Self, LatticeError> {
        assert_eq!(split.len(), positions.len());
        let droplets = split
            .parts
            .iter()
            .zip(positions)
            .map(|(m, x)| {
                let t = coreshell::f0(*m, s, big)?.t;
                Ok(Droplet {
                    mass: *m,
                    x: [wrap(x[0]), wrap(x[1])],
                    t,
                })
            })
            .collect::<Result<Vec<_>, LatticeError>>()?;
        let c = Self { droplets };
        c.validate()?;
        Ok(c)
    }

    /// `k` copies of `m` at seeded uniform positions.
    pub fn random_equal(
        k: usize,
        m: MassPair,
        seed: u64,
        s: &SurfaceTensions,
        big: &InteractionMatrix,
    ) -> Result<Self, LatticeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos: Vec<[f64; 2]> = (0..k)
            .map(|_| [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
            .collect();
        Self::from_split(&MassSplit { parts: vec![m; k] }, &pos, s, big)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        for (k, a) in self.droplets.iter().enumerate() {
            MassPair::new(a.mass.m1, a.mass.m2)?;
            for (l, b) in self.droplets.iter().enumerate().skip(k + 1) {
                if torus_dist(a.x, b.x) < 1e-12 {
                    return Err(LatticeError::Coincident(k, l));
                }
            }
        }
        Ok(())
    }
}

/// `Σ_{k≠ℓ} Σ_ij (Γ_ij/2) m_i^k m_j^ℓ G(x^k − x^ℓ)`.
pub fn pair_energy(c: &DropletConfig, big: &InteractionMatrix) -> Result<f64, LatticeError> {
    let mut e = 0.0;
    for (k, a) in c.droplets.iter().enumerate() {
        for b in c.droplets.iter().skip(k + 1) {
            // Both orders of the pair, each with weight 1/2.
            e += big.form(a.mass.as_array(), b.mass.as_array()) * green_point(torus_delta(a.x, b.x))?;
        }
    }
    Ok(e)
}

pub fn self_energy(c: &DropletConfig, s: &SurfaceTensions, big: &InteractionMatrix) -> Result<f64, LatticeError> {
    let mut e = 0.0;
    for d in &c.droplets {
        e += coreshell::f0(d.mass, s, big)?.value;
    }
    Ok(e)
}

/// The second-order droplet functional.
pub fn f0_total(c: &DropletConfig, s: &SurfaceTensions, big: &InteractionMatrix) -> Result<f64, LatticeError> {
    c.validate()?;
    Ok(self_energy(c, s, big)? + pair_energy(c, big)?)
}

/// Gradient of `F0` in each droplet position; self terms do not depend on
/// positions.
pub fn position_gradient(c: &DropletConfig, big: &InteractionMatrix) -> Result<Vec<[f64; 2]>, LatticeError> {
    c.validate()?;
    let n = c.len();
    let mut g = vec![[0.0; 2]; n];
    for k in 0..n {
        for l in k + 1..n {
            let (a, b) = (&c.droplets[k], &c.droplets[l]);
            let w = big.form(a.mass.as_array(), b.mass.as_array());
            let d = green_gradient(torus_delta(a.x, b.x))?;
            for i in 0..2 {
                g[k][i] += w * d[i];
                g[l][i] -= w * d[i];
            }
        }
    }
    Ok(g)
}

fn norm(g: &[[f64; 2]]) -> f64 {
    g.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    pub steps: usize,
    pub accepted: usize,
    pub pair_energy: f64,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Gradient norm at which position descent stops.
pub const POSITION_GRAD_TOL: f64 = 1e-8;

/// Default descent rate: `1e-2` over the mean droplet mass.
pub fn default_rate(c: &DropletConfig) -> f64 {
    let mean = c.droplets.iter().map(|d| d.mass.total()).sum::<f64>() / c.len().max(1) as f64;
    1e-2 / mean
}

/// Steepest descent on positions with periodic wrap and halving
/// backtracking; the pair energy never increases on an accepted step.
pub fn optimize_positions(
    c: &DropletConfig,
    big: &InteractionMatrix,
    steps: usize,
    rate: f64,
) -> Result<(DropletConfig, DescentReport), LatticeError> {
    let mut cur = c.clone();
    let mut e = pair_energy(&cur, big)?;
    let mut g = position_gradient(&cur, big)?;
    let mut alpha = rate;
    let mut accepted = 0;
    let mut taken = 0;
    while taken < steps && norm(&g) >= POSITION_GRAD_TOL {
        taken += 1;
        let mut ok = false;
        for _ in 0..60 {
            let mut trial = cur.clone();
            for (d, gk) in trial.droplets.iter_mut().zip(&g) {
                d.x = [wrap(d.x[0] - alpha * gk[0]), wrap(d.x[1] - alpha * gk[1])];
            }
            if trial.validate().is_ok() {
                let et = pair_energy(&trial, big)?;
                let dec = alpha * norm(&g).powi(2);
                if et <= e - 1e-4 * dec {
                    cur = trial;
                    e = et;
                    ok = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !ok {
            break;
        }
        accepted += 1;
        alpha *= 1.5;
        g = position_gradient(&cur, big)?;
    }
    let gn = norm(&g);
    Ok((
        cur,
        DescentReport {
            steps: taken,
            accepted,
            pair_energy: e,
            gradient_norm: gn,
            converged: gn < POSITION_GRAD_TOL,
        },
    ))
}

/// Mean and coefficient of variation of nearest-neighbour torus distances.
pub fn hexagonality(c: &DropletConfig) -> Result<(f64, f64), LatticeError> {
    let n = c.len();
    if n < 2 {
        return Err(LatticeError::TooFew(2, n));
    }
    c.validate()?;
    let nn: Vec<f64> = (0..n)
        .map(|k| {
            (0..n)
                .filter(|&l| l != k)
                .map(|l| torus_dist(c.droplets[k].x, c.droplets[l].x))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = nn.iter().sum::<f64>() / n as f64;
    let var = nn.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
    Ok((mean, var.sqrt() / mean))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

const DISK_RADIAL: usize = 6;
const DISK_ANGULAR: usize = 12;

/// Quadrature for smooth integrands over `B_r(c)`: Gauss in the radius,
/// trapezoid in the angle.
fn disk_rule(c: [f64; 2], r: f64) -> Vec<([f64; 2], f64)> {
    let gl = gauss_legendre(DISK_RADIAL);
    let mut out = Vec::with_capacity(DISK_RADIAL * DISK_ANGULAR);
    for (x, w) in gl {
        let rho = 0.5 * r * (x + 1.0);
        let wr = 0.5 * r * w * rho * 2.0 * PI / DISK_ANGULAR as f64;
        for j in 0..DISK_ANGULAR {
            let th = 2.0 * PI * (j as f64 + 0.5) / DISK_ANGULAR as f64;
            out.push(([c[0] + rho * th.cos(), c[1] + rho * th.sin()], wr));
        }
    }
    out
}

/// Phase regions of a droplet as signed disks: phase 1 is the outer disk
/// minus the core.
fn phase_disks(d: &Droplet) -> [Vec<([f64; 2], f64, f64)>; 2] {
    let [m1, m2] = d.mass.as_array();
    let r1 = ((m1 + m2) / PI).sqrt();
    let r2 = (m2 / PI).sqrt();
    let core = [d.t, 0.0];
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    if m1 > 0.0 {
        p1.push(([0.0, 0.0], r1, 1.0));
        if m2 > 0.0 {
            p1.push((core, r2, -1.0));
        }
    }
    if m2 > 0.0 {
        p2.push((if m1 > 0.0 { core } else { [0.0, 0.0] }, r2, 1.0));
    }
    [p1, p2]
}

/// `∫_{A_i}∫_{B_j} K(x − y)` for smooth `K`, with `A`, `B` in blown-up
/// coordinates.
fn smooth_pair_integral(
    a: &[([f64; 2], f64, f64)],
    b: &[([f64; 2], f64, f64)],
    k: &dyn Fn([f64; 2]) -> f64,
) -> f64 {
    let mut total = 0.0;
    for (ca, ra, sa) in a {
        let qa = disk_rule(*ca, *ra);
        for (cb, rb, sb) in b {
            let qb = disk_rule(*cb, *rb);
            let mut s = 0.0;
            for (x, wx) in &qa {
                for (y, wy) in &qb {
                    s += wx * wy * k([x[0] - y[0], x[1] - y[1]]);
                }
            }
            total += sa * sb * s;
        }
    }
    total
}

/// Log-kernel self-interactions `[I11, I12, I22]` of a droplet.
fn log_interactions(d: &Droplet) -> [f64; 3] {
    let [m1, m2] = d.mass.as_array();
    if m2 == 0.0 {
        return [coreshell::i22((m1 / PI).sqrt()), 0.0, 0.0];
    }
    if m1 == 0.0 {
        return [0.0, 0.0, coreshell::i22((m2 / PI).sqrt())];
    }
    let g = CoreShellGeometry::from_masses(m1, m2, d.t).expect("valid core shell");
    let a12 = coreshell::i12(&g);
    let a22 = coreshell::i22(g.r2);
    [coreshell::i_b1b1(&g) - 2.0 * a12 - a22, a12, a22]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleEnergy {
    pub e_eta: f64,
    pub f_eta: f64,
    /// Droplet energies `Σ e0(m^k)`.
    pub first_order: f64,
    pub phi_self: f64,
    pub phi_pair: f64,
}

/// Energy of the droplet configuration at length scale `η`, split into the
/// first-order part and the `|log η|⁻¹` remainder, and
/// `F_η = |log η| (E_η − ē0)`.
pub fn sharp_e_eta_and_remainder(
    c: &DropletConfig,
    eta: f64,
    s: &SurfaceTensions,
    big: &InteractionMatrix,
    ebar: f64,
) -> Result<ScaleEnergy, LatticeError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(LatticeError::BadEta(eta));
    }
    c.validate()?;
    let radius = |d: &Droplet| (d.mass.total() / PI).sqrt();
    for (k, a) in c.droplets.iter().enumerate() {
        for (l, b) in c.droplets.iter().enumerate().skip(k + 1) {
            if torus_dist(a.x, b.x) <= eta * (radius(a) + radius(b)) {
                return Err(LatticeError::Overlap(k, l, eta));
            }
        }
    }
    let mut first_order = 0.0;
    let mut phi_self = 0.0;
    let mut phi_pair = 0.0;
    let regular = |z: [f64; 2]| green_regular_part([eta * z[0], eta * z[1]]);
    for (k, a) in c.droplets.iter().enumerate() {
        first_order += sharp::e0(a.mass, s, big)?;
        let da = phase_disks(a);
        let logs = log_interactions(a);
        for (i, j, gij, lij) in [(0, 0, big.g11, logs[0]), (0, 1, big.g12, logs[1]), (1, 1, big.g22, logs[2])] {
            if gij == 0.0 {
                continue;
            }
            let mult = if i == j { 0.5 } else { 1.0 };
            phi_self += mult * gij * (lij + smooth_pair_integral(&da[i], &da[j], &regular));
        }
        for b in c.droplets.iter().skip(k + 1) {
            let db = phase_disks(b);
            let sep = torus_delta(a.x, b.x);
            let kernel = |z: [f64; 2]| green_point([sep[0] + eta * z[0], sep[1] + eta * z[1]]).expect("separated droplets");
            for i in 0..2 {
                for j in 0..2 {
                    let gij = big.get(i + 1, j + 1);
                    if gij != 0.0 && !da[i].is_empty() && !db[j].is_empty() {
                        // Ordered pairs (k, ℓ) and (ℓ, k) contribute equally.
                        phi_pair += gij * smooth_pair_integral(&da[i], &db[j], &kernel);
                    }
                }
            }
        }
    }
    let e_eta = first_order + (phi_self + phi_pair) / eta.ln().abs();
    Ok(ScaleEnergy {
        e_eta,
        f_eta: eta.ln().abs() * (e_eta - ebar),
        first_order,
        phi_self,
        phi_pair,
    })
}

/// Machine-readable summary of a configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDump {
    pub droplets: Vec<Droplet>,
    pub f0: f64,
    pub pair_energy: f64,
    pub gradient_norm: f64,
    pub nn_mean: Option<f64>,
    pub nn_cv: Option<f64>,
}

pub fn dump(c: &DropletConfig, s: &SurfaceTensions, big: &InteractionMatrix) -> Result<LatticeDump, LatticeError> {
    let hex = hexagonality(c).ok();
    Ok(LatticeDump {
        droplets: c.droplets.clone(),
        f0: f0_total(c, s, big)?,
        pair_energy: pair_energy(c, big)?,
        gradient_norm: norm(&position_gradient(c, big)?),
        nn_mean: hex.map(|h| h.0),
        nn_cv: hex.map(|h| h.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let q = gauss_legendre(6);
        let v: f64 = q.iter().map(|(x, w)| w * x.powi(10)).sum();
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
        assert!((q.iter().map(|p| p.1).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn disk_rule_area_and_moment() {
        let q = disk_rule([0.2, -0.1], 0.3);
        let area: f64 = q.iter().map(|p| p.1).sum();
        assert!((area - PI * 0.09).abs() < 1e-14);
        let m2: f64 = q.iter().map(|(x, w)| w * ((x[0] - 0.2).powi(2) + (x[1] + 0.1).powi(2))).sum();
        assert!((m2 - PI * 0.3f64.powi(4) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_droplet_has_no_pair_terms() {
        let s = SurfaceTensions::new(1.0, 2.0, 1.0).unwrap();
        let big = InteractionMatrix::new(30.0, 0.0, 60.0).unwrap();
        let m = MassPair::new(0.2, 0.1).unwrap();
        let c = DropletConfig::from_split(&MassSplit { parts: vec![m] }, &[[0.1, 0.3]], &s, &big).unwrap();
        assert_eq!(pair_energy(&c, &big).unwrap(), 0.0);
        let f = f0_total(&c, &s, &big).unwrap();
        assert!((f - coreshell::f0(m, &s, &big).unwrap().value).abs() < 1e-15);
        assert_eq!(position_gradient(&c, &big).unwrap(), vec![[0.0, 0.0]]);
    }

    #[test]
    fn hexagonality_needs_two() {
        let c = DropletConfig::default();
        assert_eq!(hexagonality(&c), Err(LatticeError::TooFew(2, 0)));
    }
}
