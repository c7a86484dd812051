//! Sharp-interface droplet energies in the core-shell regime `σ02 ≥ σ01 + σ12`.
//!
//! A droplet of masses `(m1, m2)` is a disk of phase 2 inside an annulus of
//! phase 1; its energy `e0` is perimeter plus `Σ Γ_ij m_i m_j / (4π)`. The
//! split problem `ē0(M)` distributes the total masses over finitely many such
//! droplets.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{classify_regime, InteractionMatrix, Regime, SurfaceTensions, REGIME_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum SharpError {
    #[error("closed-form droplet energy needs a core-shell regime, got {0:?}")]
    NotCoreShell(Regime),
    #[error("core-shell degenerate regime required, got {0:?}")]
    NotDegenerate(Regime),
    #[error("invalid masses ({0}, {1})")]
    BadMass(f64, f64),
    #[error("tensions {0:?} violate a strict triangle inequality")]
    NotTriangle([f64; 3]),
}

/// Droplet masses; both nonnegative with a positive sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassPair {
    pub m1: f64,
    pub m2: f64,
}

impl MassPair {
    pub fn new(m1: f64, m2: f64) -> Result<Self, SharpError> {
        if !(m1 >= 0.0 && m2 >= 0.0 && m1 + m2 > 0.0 && (m1 + m2).is_finite()) {
            return Err(SharpError::BadMass(m1, m2));
        }
        Ok(Self { m1, m2 })
    }

    pub fn total(&self) -> f64 {
        self.m1 + self.m2
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.m1, self.m2]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MassSplit {
    pub parts: Vec<MassPair>,
}

impl MassSplit {
    pub fn totals(&self) -> [f64; 2] {
        self.parts
            .iter()
            .fold([0.0, 0.0], |t, p| [t[0] + p.m1, t[1] + p.m2])
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

fn require_core_shell(s: &SurfaceTensions) -> Result<(), SharpError> {
    let r = classify_regime(s);
    if r.is_core_shell() {
        Ok(())
    } else {
        Err(SharpError::NotCoreShell(r))
    }
}

/// Perimeter and self-interaction of one droplet. A bare phase-2 disk costs
/// `σ01 + σ12` per length, which equals `σ02` in the degenerate regime and is
/// the continuous extension in the strict one.
fn e0_raw(m1: f64, m2: f64, s01: f64, s12: f64, g: &InteractionMatrix) -> f64 {
    if m1 <= 0.0 && m2 <= 0.0 {
        return 0.0;
    }
    let sp = PI.sqrt();
    2.0 * sp * (s01 * (m1 + m2).sqrt() + s12 * m2.sqrt()) + g.form([m1, m2], [m1, m2]) / (4.0 * PI)
}

/// Partial derivatives of `e0_raw`; `+∞` where a square root is singular.
fn e0_grad(m1: f64, m2: f64, s01: f64, s12: f64, g: &InteractionMatrix) -> [f64; 2] {
    let sp = PI.sqrt();
    let s = m1 + m2;
    let outer = if s > 0.0 { s01 * sp / s.sqrt() } else { f64::INFINITY };
    let inner = if m2 > 0.0 {
        s12 * sp / m2.sqrt()
    } else if s12 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    [
        outer + (g.g11 * m1 + g.g12 * m2) / (2.0 * PI),
        outer + inner + (g.g12 * m1 + g.g22 * m2) / (2.0 * PI),
    ]
}

fn e0_hess(m1: f64, m2: f64, s01: f64, s12: f64, g: &InteractionMatrix) -> [[f64; 2]; 2] {
    let sp = PI.sqrt();
    let c = -s01 * sp / (2.0 * (m1 + m2).powf(1.5));
    let d = if m2 > 0.0 { -s12 * sp / (2.0 * m2.powf(1.5)) } else { 0.0 };
    [
        [c + g.g11 / (2.0 * PI), c + g.g12 / (2.0 * PI)],
        [c + g.g12 / (2.0 * PI), c + d + g.g22 / (2.0 * PI)],
    ]
}

pub fn e0(m: MassPair, s: &SurfaceTensions, g: &InteractionMatrix) -> Result<f64, SharpError> {
    require_core_shell(s)?;
    MassPair::new(m.m1, m.m2)?;
    Ok(e0_raw(m.m1, m.m2, s.s01, s.s12, g))
}

/// Smallest total mass of any droplet in a minimizing split; `+∞` without
/// repulsion.
pub fn mass_lower_bound(big_m1: f64, big_m2: f64, s01: f64, g: &InteractionMatrix) -> f64 {
    let gs = g.g11 + 2.0 * g.g12 + g.g22;
    let mt = big_m1 + big_m2;
    if gs <= 0.0 {
        return f64::INFINITY;
    }
    32.0 * PI.powi(3) * s01 * s01 / ((1.0 + 2f64.sqrt()).powi(2) * gs * gs * mt * mt)
}

/// Cap on the number of droplets in a minimizing split.
pub fn component_bound(big_m1: f64, big_m2: f64, s01: f64, g: &InteractionMatrix) -> usize {
    let m = mass_lower_bound(big_m1, big_m2, s01, g);
    if !m.is_finite() {
        return 1;
    }
    ((big_m1 + big_m2) / m).ceil().max(1.0) as usize
}

/// Energy released by merging a phase-1 bubble and a phase-2 bubble into one
/// core shell, interaction terms aside.
pub fn merge_gain(m1: f64, m2: f64, s01: f64) -> f64 {
    2.0 * s01 * PI.sqrt() * (m1.sqrt() + m2.sqrt() - (m1 + m2).sqrt())
}

/// Perimeter of the inverted core shell (phase 1 inside) minus that of the
/// regular one.
pub fn annulus_orientation_gap(m1: f64, m2: f64, s: &SurfaceTensions) -> Result<f64, SharpError> {
    let r = classify_regime(s);
    if r != Regime::CoreShellDegenerate {
        return Err(SharpError::NotDegenerate(r));
    }
    MassPair::new(m1, m2)?;
    let sp = PI.sqrt();
    let regular = 2.0 * sp * (s.s12 * m2.sqrt() + s.s01 * (m1 + m2).sqrt());
    let inverted = 2.0 * sp * (s.s12 * m1.sqrt() + s.s02 * (m1 + m2).sqrt());
    Ok(inverted - regular)
}

/// Triple-junction angles; `theta[i]` is the angle of the sector of phase `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoungAngles {
    pub theta: [f64; 3],
    pub degenerate: bool,
}

/// Solves `sin θ1/σ02 = sin θ2/σ01 = sin θ0/σ12` with `Σθ = 2π`.
pub fn youngs_angles(s: &SurfaceTensions) -> Result<YoungAngles, SharpError> {
    // Phase i's sector faces the interface not touching i.
    let opposite = [s.s12, s.s02, s.s01];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| opposite[a].total_cmp(&opposite[b]));
    let (ia, ib, ic) = (order[0], order[1], order[2]);
    let (sa, sb, sc) = (opposite[ia], opposite[ib], opposite[ic]);
    let excess = sc - (sa + sb);
    if excess > REGIME_TOL * (sa + sb) {
        return Err(SharpError::NotTriangle([s.s01, s.s02, s.s12]));
    }
    let mut theta = [0.0; 3];
    if excess.abs() <= REGIME_TOL * (sa + sb) {
        theta[ia] = PI;
        theta[ib] = PI;
        theta[ic] = 0.0;
        return Ok(YoungAngles { theta, degenerate: true });
    }
    // Triangle angles α_i = π − θ_i obey the law of sines with ratio c; the
    // two smaller ones are acute.
    let h = |c: f64| ((c * sa).asin() + (c * sb).asin()).sin() / c - sc;
    let (mut lo, mut hi) = (0.0f64, 1.0 / sc);
    if h(hi) >= 0.0 {
        lo = hi;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mid == 0.0 || h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let c = if lo > 0.0 { lo } else { hi };
    let aa = (c * sa).min(1.0).asin();
    let ab = (c * sb).min(1.0).asin();
    theta[ia] = PI - aa;
    theta[ib] = PI - ab;
    theta[ic] = aa + ab;
    Ok(YoungAngles { theta, degenerate: false })
}

fn inner_cone_equation(a: f64) -> f64 {
    1.0 - a.sin() - (0.5 * PI * (2.0 * a).sin()).sqrt()
}

/// Root in `(0, π/2)` of `1 − sin α − √((π/2) sin 2α)`; the other zero sits at
/// `π/2` itself, so the bracket is `[0, π/4]`.
pub fn inner_cone_alpha0() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.25 * PI);
    while hi - lo > 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inner_cone_equation(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if inner_cone_equation(lo).abs() < inner_cone_equation(hi).abs() {
        lo
    } else {
        hi
    }
}

pub fn inner_cone_residual(a: f64) -> f64 {
    inner_cone_equation(a)
}

/// Derivative of the energy of a core shell `(η, M2)` next to a phase-1 disk
/// of mass `M1 − η`.
pub fn f1_prime(eta: f64, big_m: [f64; 2], s: &SurfaceTensions, g: &InteractionMatrix) -> f64 {
    let [m1, m2] = big_m;
    s.s01 * PI.sqrt() * (1.0 / (m2 + eta).sqrt() - 1.0 / (m1 - eta).sqrt())
        + (g.g11 * (2.0 * eta - m1) + g.g12 * m2) / (2.0 * PI)
}

/// Derivative of the energy of a core shell `(M1, η)` next to a phase-2 disk
/// of mass `M2 − η`.
pub fn f2_prime(eta: f64, big_m: [f64; 2], s: &SurfaceTensions, g: &InteractionMatrix) -> f64 {
    let [m1, m2] = big_m;
    PI.sqrt() * (s.s01 / (m1 + eta).sqrt() + s.s12 / eta.sqrt() - s.s02 / (m2 - eta).sqrt())
        + (g.g22 * (2.0 * eta - m2) + g.g12 * m1) / (2.0 * PI)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64], sb: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += sb * y;
    }
    out
}

fn poly_eval_c(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// All complex roots by Aberth–Ehrlich iteration; coefficients low to high.
fn poly_roots(p: &[f64]) -> Vec<Complex64> {
    let mut p = p.to_vec();
    while p.len() > 1 && p.last().map_or(false, |c| *c == 0.0) {
        p.pop();
    }
    let deg = p.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = p[deg];
    let radius = 1.0 + p[..deg].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * (k as f64 + 0.25) / deg as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (v, d) = poly_eval_c(&p, z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let repulse: Complex64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulse);
            z[i] -= w;
            moved = moved.max(w.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Coefficients (in `x = η/M1`, low to high) of the degree-8 polynomial whose
/// roots contain every zero of `f1_prime`.
pub fn squared_f1_polynomial(big_m: [f64; 2], s: &SurfaceTensions, g: &InteractionMatrix) -> Vec<f64> {
    let [m1, m2] = big_m;
    let a = [m1, -m1];
    let b = [m2, m1];
    let ab = poly_mul(&a, &b);
    let l = [g.g12 * m2 - g.g11 * m1, 2.0 * g.g11 * m1];
    let l2 = poly_mul(&l, &l);
    let k = 1.0 / (4.0 * PI.powi(3) * s.s01 * s.s01);
    let inner: Vec<f64> = poly_mul(&ab, &l2).iter().map(|c| c * k).collect();
    let inner = poly_add(&inner, &[m1 + m2], -1.0);
    let rhs = poly_mul(&inner, &inner);
    let lhs: Vec<f64> = ab.iter().map(|c| 4.0 * c).collect();
    poly_add(&lhs, &rhs, -1.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalMasses {
    /// Real roots of the squared polynomial in `(0, M1)`, spurious ones included.
    pub polynomial_roots: Vec<f64>,
    /// Zeros of `f1_prime` in `(0, M1)`.
    pub f1_roots: Vec<f64>,
    /// Zeros of `f2_prime` in `(0, M2)`.
    pub f2_roots: Vec<f64>,
}

/// Tolerance on the unsquared derivative when filtering polynomial roots.
pub const ROOT_FILTER_TOL: f64 = 1e-9;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() < f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Sign changes of `f` on a grid over `(lo, hi)`, refined by bisection.
fn bracketed_roots(f: impl Fn(f64) -> f64 + Copy, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..=samples)
        .map(|k| {
            // Cosine spacing resolves the singular ends.
            let s = 0.5 - 0.5 * (PI * k as f64 / samples as f64).cos();
            lo + (hi - lo) * s
        })
        .collect();
    let mut out = Vec::new();
    for w in xs.windows(2) {
        let (fa, fb) = (f(w[0]), f(w[1]));
        if fa == 0.0 {
            out.push(w[0]);
        } else if fa * fb < 0.0 {
            out.push(bisect(f, w[0], w[1]));
        }
    }
    out
}

pub fn coexistence_critical_masses(
    big_m1: f64,
    big_m2: f64,
    s: &SurfaceTensions,
    g: &InteractionMatrix,
) -> Result<CriticalMasses, SharpError> {
    require_core_shell(s)?;
    if !(big_m1 > 0.0 && big_m2 > 0.0) {
        return Err(SharpError::BadMass(big_m1, big_m2));
    }
    let bm = [big_m1, big_m2];
    let poly = squared_f1_polynomial(bm, s, g);
    let scale = poly.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let mut polynomial_roots: Vec<f64> = poly_roots(&poly)
        .into_iter()
        .filter(|z| z.im.abs() < 1e-6 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .filter(|x| *x > 0.0 && *x < 1.0)
        .map(|x| {
            // Polish on the real polynomial.
            let mut x = x;
            for _ in 0..5 {
                let (v, d) = poly_eval_c(&poly, Complex64::new(x, 0.0));
                if d.re == 0.0 || v.re.abs() <= 1e-300 * scale {
                    break;
                }
                let nx = x - v.re / d.re;
                if !(nx > 0.0 && nx < 1.0) {
                    break;
                }
                x = nx;
            }
            x * big_m1
        })
        .collect();
    polynomial_roots.sort_by(f64::total_cmp);
    polynomial_roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * big_m1);
    let f1 = |e: f64| f1_prime(e, bm, s, g);
    let mut f1_roots = Vec::new();
    for &r in &polynomial_roots {
        // Refine against the unsquared equation in a small window only, so a
        // spurious root cannot wander onto a genuine one.
        let w = 1e-6 * big_m1;
        let (a, b) = ((r - w).max(big_m1 * 1e-15), (r + w).min(big_m1 * (1.0 - 1e-15)));
        let x = if f1(a) * f1(b) < 0.0 { bisect(f1, a, b) } else { r };
        if f1(x).abs() < ROOT_FILTER_TOL && !f1_roots.iter().any(|y: &f64| (y - x).abs() < 1e-10 * big_m1) {
            f1_roots.push(x);
        }
    }
    let f2 = |e: f64| f2_prime(e, bm, s, g);
    let f2_roots = bracketed_roots(f2, 0.0, big_m2, 4000)
        .into_iter()
        .filter(|&x| x > 0.0 && x < big_m2 && f2(x).abs() < ROOT_FILTER_TOL)
        .collect();
    Ok(CriticalMasses {
        polynomial_roots,
        f1_roots,
        f2_roots,
    })
}

/// Zeros of `f1_prime` found directly by sign changes, for cross-checks.
pub fn f1_roots_by_scan(big_m: [f64; 2], s: &SurfaceTensions, g: &InteractionMatrix, samples: usize) -> Vec<f64> {
    bracketed_roots(|e| f1_prime(e, big_m, s, g), 0.0, big_m[0], samples)
        .into_iter()
        .filter(|&x| x > 0.0 && x < big_m[0])
        .collect()
}

struct SplitProblem {
    total: [f64; 2],
    s01: f64,
    s12: f64,
    g: InteractionMatrix,
}

type Split = Vec<[f64; 2]>;

/// Residual below which a split counts as stationary.
pub const EBAR_GRAD_TOL: f64 = 1e-10;
/// Largest droplet count the split search visits.
pub const EBAR_MAX_K: usize = 48;
/// Lattice resolution of the certification search.
pub const EBAR_LATTICE: usize = 64;
const DESCENT_ITERS: usize = 4000;
const RANDOM_STARTS: usize = 4;

impl SplitProblem {
    fn energy(&self, x: &[[f64; 2]]) -> f64 {
        x.iter().map(|m| e0_raw(m[0], m[1], self.s01, self.s12, &self.g)).sum()
    }

    fn grad(&self, x: &[[f64; 2]]) -> Split {
        x.iter().map(|m| e0_grad(m[0], m[1], self.s01, self.s12, &self.g)).collect()
    }

    /// KKT residual on the product of the two scaled simplices.
    fn residual(&self, x: &[[f64; 2]], g: &[[f64; 2]]) -> f64 {
        let mut res = 0.0f64;
        for i in 0..2 {
            if self.total[i] <= 0.0 {
                continue;
            }
            let act: Vec<f64> = x.iter().zip(g).filter(|(m, _)| m[i] > 0.0).map(|(_, d)| d[i]).collect();
            if act.is_empty() {
                return f64::INFINITY;
            }
            let lam = act.iter().sum::<f64>() / act.len() as f64;
            for d in &act {
                res = res.max((d - lam).abs());
            }
            for (m, d) in x.iter().zip(g) {
                if m[i] <= 0.0 && d[i].is_finite() {
                    res = res.max(lam - d[i]);
                }
            }
        }
        res
    }

    fn project(&self, y: &mut [[f64; 2]], free: &[[bool; 2]]) {
        for i in 0..2 {
            let idx: Vec<usize> = (0..y.len()).filter(|&k| free[k][i]).collect();
            for k in 0..y.len() {
                if !free[k][i] {
                    y[k][i] = 0.0;
                }
            }
            if self.total[i] <= 0.0 || idx.is_empty() {
                idx.iter().for_each(|&k| y[k][i] = 0.0);
                continue;
            }
            let mut u: Vec<f64> = idx.iter().map(|&k| y[k][i]).collect();
            u.sort_by(|a, b| b.total_cmp(a));
            let mut cum = 0.0;
            let mut theta = 0.0;
            for (j, v) in u.iter().enumerate() {
                cum += v;
                let t = (cum - self.total[i]) / (j + 1) as f64;
                if v - t > 0.0 {
                    theta = t;
                }
            }
            for &k in &idx {
                y[k][i] = (y[k][i] - theta).max(0.0);
            }
        }
    }

    fn descend(&self, mut x: Split) -> Split {
        let mut f = self.energy(&x);
        let mut alpha = f64::NAN;
        for _ in 0..DESCENT_ITERS {
            let g = self.grad(&x);
            if self.residual(&x, &g) < EBAR_GRAD_TOL {
                break;
            }
            let free: Vec<[bool; 2]> = x
                .iter()
                .zip(&g)
                .map(|(m, d)| [m[0] > 0.0 || d[0].is_finite(), m[1] > 0.0 || d[1].is_finite()])
                .collect();
            if alpha.is_nan() {
                let gmax = g.iter().flatten().filter(|v| v.is_finite()).fold(0.0f64, |a, v| a.max(v.abs()));
                alpha = 0.05 * (self.total[0] + self.total[1]) / gmax.max(1e-300);
            }
            let mut accepted = false;
            for _ in 0..60 {
                let mut y: Split = x
                    .iter()
                    .zip(&g)
                    .zip(&free)
                    .map(|((m, d), fr)| {
                        let mut v = *m;
                        for i in 0..2 {
                            if fr[i] {
                                v[i] -= alpha * d[i];
                            }
                        }
                        v
                    })
                    .collect();
                self.project(&mut y, &free);
                let step2: f64 = x.iter().zip(&y).map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sum();
                let fy = self.energy(&y);
                if fy <= f - 1e-4 * step2 / alpha {
                    x = y;
                    f = fy;
                    alpha *= 2.0;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        self.newton(x)
    }

    /// Newton iterations on the current face; improves the stationarity
    /// residual beyond what line searches can resolve.
    fn newton(&self, mut x: Split) -> Split {
        for _ in 0..40 {
            let g = self.grad(&x);
            let r0 = self.residual(&x, &g);
            if r0 < 1e-14 {
                break;
            }
            let vars: Vec<(usize, usize)> = (0..x.len())
                .flat_map(|k| (0..2).map(move |i| (k, i)))
                .filter(|&(k, i)| x[k][i] > 0.0)
                .collect();
            let species: Vec<usize> = (0..2).filter(|&i| vars.iter().any(|v| v.1 == i)).collect();
            let n = vars.len() + species.len();
            let mut a = vec![vec![0.0; n + 1]; n];
            for (p, &(k, i)) in vars.iter().enumerate() {
                let h = e0_hess(x[k][0], x[k][1], self.s01, self.s12, &self.g);
                for (q, &(l, j)) in vars.iter().enumerate() {
                    if l == k {
                        a[p][q] = h[i][j];
                    }
                }
                let c = vars.len() + species.iter().position(|&s| s == i).unwrap();
                a[p][c] = 1.0;
                a[c][p] = 1.0;
                a[p][n] = -g[k][i];
            }
            let Some(d) = solve_dense(a) else { break };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let mut y = x.clone();
                for (p, &(k, i)) in vars.iter().enumerate() {
                    y[k][i] += t * d[p];
                }
                if y.iter().flatten().all(|v| *v >= 0.0) && vars.iter().all(|&(k, i)| y[k][i] > 0.0) {
                    // Restore exact totals lost to rounding.
                    for i in 0..2 {
                        let s: f64 = y.iter().map(|m| m[i]).sum();
                        if s > 0.0 {
                            y.iter_mut().for_each(|m| m[i] *= self.total[i] / s);
                        }
                    }
                    let r = self.residual(&y, &self.grad(&y));
                    if r < r0 {
                        x = y;
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        x
    }

    /// Merges pairs while that lowers the energy, re-descending after each.
    fn merge_stable(&self, mut x: Split) -> Split {
        loop {
            x.retain(|m| m[0] + m[1] > 0.0);
            let e = |m: [f64; 2]| e0_raw(m[0], m[1], self.s01, self.s12, &self.g);
            let mut best: Option<(f64, usize, usize)> = None;
            for a in 0..x.len() {
                for b in a + 1..x.len() {
                    let joined = [x[a][0] + x[b][0], x[a][1] + x[b][1]];
                    let d = e(joined) - e(x[a]) - e(x[b]);
                    if d < -1e-14 * self.energy(&x).abs() && best.map_or(true, |bb| d < bb.0) {
                        best = Some((d, a, b));
                    }
                }
            }
            let Some((_, a, b)) = best else { return x };
            let joined = [x[a][0] + x[b][0], x[a][1] + x[b][1]];
            x[a] = joined;
            x.remove(b);
            x = self.descend(x);
        }
    }

    fn seeds(&self, k: usize) -> Vec<Split> {
        let [m1, m2] = self.total;
        let mut out = vec![vec![[m1 / k as f64, m2 / k as f64]; k]];
        if m2 > 0.0 && m1 > 0.0 {
            for b in 1..k {
                // k − b core shells, b phase-1 singles.
                let mut s = vec![[m1 / k as f64, m2 / (k - b) as f64]; k - b];
                s.extend(vec![[m1 / k as f64, 0.0]; b]);
                out.push(s);
                // k − b core shells, b phase-2 singles.
                let mut s = vec![[m1 / (k - b) as f64, m2 / k as f64]; k - b];
                s.extend(vec![[0.0, m2 / k as f64]; b]);
                out.push(s);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ k as u64);
        for _ in 0..RANDOM_STARTS.min(if k > 1 { RANDOM_STARTS } else { 0 }) {
            let w: Vec<[f64; 2]> = (0..k).map(|_| [rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5)]).collect();
            let sums = w.iter().fold([0.0, 0.0], |s, v| [s[0] + v[0], s[1] + v[1]]);
            out.push(w.iter().map(|v| [m1 * v[0] / sums[0], m2 * v[1] / sums[1]]).collect());
        }
        out
    }

    /// Exact minimum over splits whose masses lie on the lattice
    /// `(a·M1/L, b·M2/L)`, any number of droplets.
    fn lattice_search(&self, l: usize) -> (f64, Split) {
        let l1 = if self.total[0] > 0.0 { l } else { 0 };
        let l2 = if self.total[1] > 0.0 { l } else { 0 };
        let w = l2 + 1;
        let at = |a: usize, b: usize| a * w + b;
        let unit = [self.total[0] / l.max(1) as f64, self.total[1] / l.max(1) as f64];
        let cost: Vec<f64> = (0..=l1)
            .flat_map(|a| (0..=l2).map(move |b| (a, b)))
            .map(|(a, b)| e0_raw(a as f64 * unit[0], b as f64 * unit[1], self.s01, self.s12, &self.g))
            .collect();
        let mut v = vec![f64::INFINITY; (l1 + 1) * w];
        let mut choice = vec![(0usize, 0usize); (l1 + 1) * w];
        v[0] = 0.0;
        for a in 0..=l1 {
            for b in 0..=l2 {
                if a + b == 0 {
                    continue;
                }
                let mut best = f64::INFINITY;
                let mut arg = (0, 0);
                for a2 in 0..=a {
                    for b2 in 0..=b {
                        if a2 + b2 == 0 {
                            continue;
                        }
                        let c = cost[at(a2, b2)] + v[at(a - a2, b - b2)];
                        if c < best {
                            best = c;
                            arg = (a2, b2);
                        }
                    }
                }
                v[at(a, b)] = best;
                choice[at(a, b)] = arg;
            }
        }
        let mut split = Vec::new();
        let (mut a, mut b) = (l1, l2);
        while a + b > 0 {
            let (a2, b2) = choice[at(a, b)];
            split.push([a2 as f64 * unit[0], b2 as f64 * unit[1]]);
            a -= a2;
            b -= b2;
        }
        (v[at(l1, l2)], split)
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..=n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
    }
    let x: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn canonical(mut x: Split) -> Split {
    x.retain(|m| m[0] + m[1] > 0.0);
    x.sort_by(|a, b| (b[0] + b[1]).total_cmp(&(a[0] + a[1])).then(b[1].total_cmp(&a[1])));
    x
}

fn better(a: &(f64, Split), b: &(f64, Split)) -> bool {
    let tol = 1e-13 * a.0.abs().max(b.0.abs()).max(1.0);
    if (a.0 - b.0).abs() > tol {
        return a.0 < b.0;
    }
    let flat = |s: &Split| s.iter().flatten().copied().collect::<Vec<f64>>();
    flat(&a.1).partial_cmp(&flat(&b.1)) == Some(Ordering::Less)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ebar0 {
    pub value: f64,
    pub split: MassSplit,
    /// Number of droplets in the returned split.
    pub k_best: usize,
    pub k_bound: usize,
    /// Largest droplet count searched; below `k_bound` when capped.
    pub k_searched: usize,
    pub lattice_value: f64,
    /// `value − lattice_value`; positive only if the lattice beat the descent.
    pub certification_gap: f64,
    pub stationarity: f64,
}

/// Upper bound on `ē0(M)` by multi-start projected descent over droplet counts
/// `1..=N`, certified against an exact lattice search.
pub fn ebar0(big_m1: f64, big_m2: f64, s: &SurfaceTensions, g: &InteractionMatrix) -> Result<Ebar0, SharpError> {
    require_core_shell(s)?;
    MassPair::new(big_m1, big_m2)?;
    let prob = SplitProblem {
        total: [big_m1, big_m2],
        s01: s.s01,
        s12: s.s12,
        g: *g,
    };
    let k_bound = component_bound(big_m1, big_m2, s.s01, g);
    let k_searched = k_bound.min(EBAR_MAX_K);
    let mut starts: Vec<Split> = (1..=k_searched).flat_map(|k| prob.seeds(k)).collect();
    let (lattice_value, lattice_split) = prob.lattice_search(EBAR_LATTICE);
    starts.push(lattice_split);
    let results: Vec<(f64, Split)> = starts
        .into_par_iter()
        .map(|x0| {
            let x = canonical(prob.descend(x0));
            (prob.energy(&x), x)
        })
        .collect();
    let mut best = results[0].clone();
    for r in &results[1..] {
        if better(r, &best) {
            best = r.clone();
        }
    }
    let x = canonical(prob.merge_stable(best.1));
    let value = prob.energy(&x);
    let stationarity = prob.residual(&x, &prob.grad(&x));
    let parts = x.iter().map(|m| MassPair { m1: m[0], m2: m[1] }).collect::<Vec<_>>();
    Ok(Ebar0 {
        value,
        k_best: parts.len(),
        split: MassSplit { parts },
        k_bound,
        k_searched,
        lattice_value,
        certification_gap: value - lattice_value,
        stationarity,
    })
}

/// Evaluates `Σ e0` for an arbitrary split.
pub fn split_energy(split: &MassSplit, s: &SurfaceTensions, g: &InteractionMatrix) -> Result<f64, SharpError> {
    require_core_shell(s)?;
    Ok(split.parts.iter().map(|m| e0_raw(m.m1, m.m2, s.s01, s.s12, g)).sum())
}

pub const EBAR_CSV_HEADER: &str = "M1,M2,s01,s02,s12,G11,G12,G22,K,split,ebar0,certification_gap";

pub fn ebar0_csv_row(big_m: [f64; 2], s: &SurfaceTensions, g: &InteractionMatrix, r: &Ebar0) -> String {
    let split = r
        .split
        .parts
        .iter()
        .map(|p| format!("{:.6e}:{:.6e}", p.m1, p.m2))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "{},{},{},{},{},{},{},{},{},{},{:.12e},{:.3e}",
        big_m[0], big_m[1], s.s01, s.s02, s.s12, g.g11, g.g12, g.g22, r.k_best, split, r.value, r.certification_gap
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs() -> SurfaceTensions {
        SurfaceTensions::new(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn annulus_perimeter() {
        let v = e0(MassPair::new(3.0 * PI, PI).unwrap(), &cs(), &InteractionMatrix::zero()).unwrap();
        assert!((v - 6.0 * PI).abs() < 1e-12);
        let g = InteractionMatrix::new(0.0, 0.0, 4.0 * PI).unwrap();
        let v = e0(MassPair::new(0.0, PI).unwrap(), &cs(), &g).unwrap();
        assert!((v - (4.0 * PI + PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn rejects_double_bubble_regime() {
        let s = SurfaceTensions::symmetric();
        let r = e0(MassPair::new(1.0, 1.0).unwrap(), &s, &InteractionMatrix::zero());
        assert_eq!(r, Err(SharpError::NotCoreShell(Regime::DoubleBubble)));
    }

    #[test]
    fn bound_and_count() {
        let g = InteractionMatrix::new(1.0, 0.0, 0.0).unwrap();
        let m = mass_lower_bound(0.5, 0.5, 1.0, &g);
        assert!((m - 32.0 * PI.powi(3) / (1.0 + 2f64.sqrt()).powi(2)).abs() < 1e-12);
        assert!((mass_lower_bound(1.0, 1.0, 1.0, &g) - m / 4.0).abs() < 1e-12);
        assert_eq!(component_bound(1.0, 1.0, 1.0, &InteractionMatrix::zero()), 1);
        assert!(mass_lower_bound(1.0, 1.0, 1.0, &InteractionMatrix::zero()).is_infinite());
    }

    #[test]
    fn merge_gain_values() {
        assert_eq!(merge_gain(0.0, 0.7, 1.0), 0.0);
        assert!((merge_gain(1.0, 1.0, 1.0) - 2.0 * PI.sqrt() * (2.0 - 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn young_symmetric_and_degenerate() {
        let a = youngs_angles(&SurfaceTensions::symmetric()).unwrap();
        for t in a.theta {
            assert!((t - 2.0 * PI / 3.0).abs() < 1e-12);
        }
        let d = youngs_angles(&cs()).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.theta, [PI, 0.0, PI]);
    }

    #[test]
    fn alpha0_bracket() {
        let a = inner_cone_alpha0();
        assert!(inner_cone_residual(a).abs() < 1e-12);
        assert!(inner_cone_residual(0.1) > 0.0 && inner_cone_residual(0.3) < 0.0);
        assert!((a - 0.205).abs() < 0.01);
    }

    #[test]
    fn no_repulsion_keeps_one_droplet() {
        let r = ebar0(0.3, 0.1, &cs(), &InteractionMatrix::zero()).unwrap();
        assert_eq!(r.k_best, 1);
        assert!((r.split.parts[0].m1 - 0.3).abs() < 1e-12);
        assert!((r.split.parts[0].m2 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn squared_polynomial_has_degree_eight() {
        let g = InteractionMatrix::new(30.0, 5.0, 40.0).unwrap();
        let p = squared_f1_polynomial([0.4, 0.2], &cs(), &g);
        assert_eq!(p.len(), 9);
        assert!(p[8].abs() > 0.0);
    }
}
