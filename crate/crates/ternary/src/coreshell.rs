//! Logarithmic interaction integrals of core-shell droplets and the placement
//! of the inner disk.
//!
//! `I_ij = (1/2π) ∫_{A_i} ∫_{A_j} log(1/|x−y|)` with `A2 = B_{r2}(p)` and
//! `A1 = B_{r1}(0) \ A2`, `p = (t, 0)`. Integrals against a disk use the
//! harmonic mean-value property; what remains is a one- or two-dimensional
//! quadrature in polar coordinates centred at the singular point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{classify_regime, InteractionMatrix, Regime, SurfaceTensions};
use crate::ewald::green_regular_part_origin;
use crate::sharp::MassPair;

#[derive(Debug, Error, PartialEq)]
pub enum CoreShellError {
    #[error("radii must satisfy 0 < r2 < r1, got r1 = {0}, r2 = {1}")]
    BadRadii(f64, f64),
    #[error("offset {0} outside [0, {1}]")]
    BadOffset(f64, f64),
    #[error("placement needs a core-shell regime, got {0:?}")]
    NotCoreShell(Regime),
}

/// Relative accuracy targeted by every quadrature here.
pub const QUAD_TOL: f64 = 1e-8;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its 7-point Gauss companion.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    for i in 0..8 {
        if i == 7 {
            let v = f(c);
            k += GK_WEIGHTS[7] * v;
            g += GAUSS_WEIGHTS[3] * v;
        } else {
            let v = f(c - h * GK_NODES[i]) + f(c + h * GK_NODES[i]);
            k += GK_WEIGHTS[i] * v;
            if i % 2 == 1 {
                g += GAUSS_WEIGHTS[i / 2] * v;
            }
        }
    }
    (k * h, g * h)
}

/// Adaptive Gauss–Kronrod quadrature to absolute tolerance `tol`.
pub(crate) fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (k, g) = gk15(f, a, b);
        if (k - g).abs() <= tol || depth == 0 {
            return k;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, tol, 40)
}

/// `∫_0^R ρ log(1/ρ) dρ`.
fn radial_log_moment(r: f64) -> f64 {
    0.25 * r * r - 0.5 * r * r * r.ln()
}

/// Log potential `∫_{B_r(c)} log(1/|x−y|) dy` of a uniform disk.
fn disk_potential(r: f64, dist: f64) -> f64 {
    if dist >= r {
        PI * r * r * (1.0 / dist).ln()
    } else {
        PI * r * r * (1.0 / r).ln() + 0.5 * PI * (r * r - dist * dist)
    }
}

/// Disk self-interaction `(1/2π) ∬_{B_r × B_r} log(1/|x−y|)`.
pub fn i22(r: f64) -> f64 {
    assert!(r > 0.0);
    let tol = QUAD_TOL * 1e-3 * r.powi(4) * (1.0 + r.ln().abs());
    // Circle means reduce the inner integral to `2π s log(1/max(ρ, s))`.
    let inner = |rho: f64| {
        let near = integrate(&|s| 2.0 * PI * s * (1.0 / rho).ln(), 0.0, rho, tol);
        let far = integrate(&|s| 2.0 * PI * s * (1.0 / s).ln(), rho, r, tol);
        near + far
    };
    integrate(&|rho| inner(rho) * rho, 0.0, r, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreShellGeometry {
    pub r1: f64,
    pub r2: f64,
    pub t: f64,
}

impl CoreShellGeometry {
    pub fn new(r1: f64, r2: f64, t: f64) -> Result<Self, CoreShellError> {
        if !(r2 > 0.0 && r2 < r1 && r1.is_finite()) {
            return Err(CoreShellError::BadRadii(r1, r2));
        }
        let span = r1 - r2;
        if !(t.abs() <= span * (1.0 + 1e-14)) {
            return Err(CoreShellError::BadOffset(t, span));
        }
        Ok(Self { r1, r2, t: t.clamp(-span, span) })
    }

    /// Concentric shape with the given masses; requires both positive.
    pub fn from_masses(m1: f64, m2: f64, t: f64) -> Result<Self, CoreShellError> {
        Self::new(((m1 + m2) / PI).sqrt(), (m2 / PI).sqrt(), t)
    }

    pub fn max_offset(&self) -> f64 {
        self.r1 - self.r2
    }

    pub fn masses(&self) -> [f64; 2] {
        [PI * (self.r1 * self.r1 - self.r2 * self.r2), PI * self.r2 * self.r2]
    }

    /// Distance from `(t, 0)` to the outer circle in direction `φ`.
    fn reach(&self, phi: f64) -> f64 {
        let t = self.t;
        let s = phi.sin();
        -t * phi.cos() + (self.r1 * self.r1 - t * t * s * s).max(0.0).sqrt()
    }

    fn tol(&self) -> f64 {
        QUAD_TOL * 1e-3 * self.r1.powi(4) * (1.0 + self.r1.ln().abs())
    }
}

/// `∫_{B_{r1}(0)} log(1/|x − p|) dx` by polar quadrature about `p`.
pub fn outer_disk_potential_at_core(g: &CoreShellGeometry) -> f64 {
    let f = |phi: f64| radial_log_moment(g.reach(phi));
    // Even in φ.
    2.0 * integrate(&f, 0.0, PI, g.tol())
}

/// The core's potential on the shell is `m2 log(1/|x − p|)`, so `I12` is
/// `m2/2π` times the outer disk's potential at `p` minus the core's own
/// potential at its centre. The latter is not `I22`: the mean-value step
/// fails inside the core.
pub fn i12(g: &CoreShellGeometry) -> f64 {
    let m2 = PI * g.r2 * g.r2;
    m2 / (2.0 * PI) * (outer_disk_potential_at_core(g) - disk_potential(g.r2, 0.0))
}

/// Derivative of `I12` in the offset; the integrand `(x1 − t)/|x − p|²`
/// becomes `cos φ · R(φ)` in polar form, carrying the factor `m2` from `I12`.
pub fn di12_dt(g: &CoreShellGeometry) -> f64 {
    if g.t == 0.0 {
        return 0.0;
    }
    let m2 = PI * g.r2 * g.r2;
    let f = |phi: f64| phi.cos() * g.reach(phi);
    m2 / (2.0 * PI) * 2.0 * integrate(&f, 0.0, PI, g.tol())
}

pub fn i_b1b1(g: &CoreShellGeometry) -> f64 {
    i22(g.r1)
}

/// Shell self-interaction, integrated directly: the shell's potential is
/// the outer disk's minus the core's, integrated over the shell in polar
/// coordinates about the core centre.
pub fn i11(g: &CoreShellGeometry) -> f64 {
    let tol = g.tol();
    let pot = |x: f64, y: f64| {
        let d_out = (x * x + y * y).sqrt();
        let d_in = ((x - g.t).powi(2) + y * y).sqrt();
        disk_potential(g.r1, d_out) - disk_potential(g.r2, d_in)
    };
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        integrate(&|rho| rho * pot(g.t + rho * c, rho * s), g.r2, g.reach(phi), tol)
    };
    2.0 * integrate(&f, 0.0, PI, tol) / (2.0 * PI)
}

/// Which inner-disk placement minimizes the self-interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Concentric,
    Tangent,
    /// `Γ11 = Γ12`: the objective does not depend on the offset.
    OffsetIndifferent,
    /// One species only; the droplet is a disk.
    SingleBubble,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F0 {
    pub value: f64,
    pub t: f64,
    pub placement: Placement,
}

/// `Σ_ij (Γ_ij/2)[I_ij + m_i m_j R(0)]` for a core shell at offset `t`.
pub fn placement_objective(g: &CoreShellGeometry, big: &InteractionMatrix) -> f64 {
    let [m1, m2] = g.masses();
    let r0 = green_regular_part_origin();
    let (a11, a12, a22) = (i11(g), i12(g), i22(g.r2));
    0.5 * big.g11 * (a11 + m1 * m1 * r0) + big.g12 * (a12 + m1 * m2 * r0) + 0.5 * big.g22 * (a22 + m2 * m2 * r0)
}

/// Same objective with `I11` eliminated through
/// `I11 = I_{B1B1} − 2 I12 − I22`.
fn placement_objective_reduced(g: &CoreShellGeometry, big: &InteractionMatrix) -> f64 {
    let [m1, m2] = g.masses();
    let r0 = green_regular_part_origin();
    let (a12, a22) = (i12(g), i22(g.r2));
    let a11 = i_b1b1(g) - 2.0 * a12 - a22;
    0.5 * big.g11 * (a11 + m1 * m1 * r0) + big.g12 * (a12 + m1 * m2 * r0) + 0.5 * big.g22 * (a22 + m2 * m2 * r0)
}

/// Next-order self-energy of one droplet, minimized over the core offset.
pub fn f0(m: MassPair, s: &SurfaceTensions, big: &InteractionMatrix) -> Result<F0, CoreShellError> {
    let regime = classify_regime(s);
    if !regime.is_core_shell() {
        return Err(CoreShellError::NotCoreShell(regime));
    }
    let r0 = green_regular_part_origin();
    if m.m1 == 0.0 || m.m2 == 0.0 {
        let (mass, gamma) = if m.m2 == 0.0 { (m.m1, big.g11) } else { (m.m2, big.g22) };
        let r = (mass / PI).sqrt();
        return Ok(F0 {
            value: 0.5 * gamma * (i22(r) + mass * mass * r0),
            t: 0.0,
            placement: Placement::SingleBubble,
        });
    }
    let base = CoreShellGeometry::from_masses(m.m1, m.m2, 0.0)?;
    let (t, placement) = if big.g11 > big.g12 {
        (0.0, Placement::Concentric)
    } else if big.g11 < big.g12 {
        (base.max_offset(), Placement::Tangent)
    } else {
        (0.0, Placement::OffsetIndifferent)
    };
    let geom = CoreShellGeometry { t, ..base };
    Ok(F0 {
        value: placement_objective_reduced(&geom, big),
        t,
        placement,
    })
}

pub const F0_CSV_HEADER: &str = "m1,m2,G11,G12,G22,t,placement,f0";

pub fn f0_csv_row(m: MassPair, big: &InteractionMatrix, r: &F0) -> String {
    format!(
        "{},{},{},{},{},{:.12e},{:?},{:.12e}",
        m.m1, m.m2, big.g11, big.g12, big.g22, r.t, r.placement, r.value
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_on_polynomials() {
        let v = integrate(&|x| x.powi(9) - 3.0 * x * x, -1.0, 2.0, 1e-14);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn disk_self_interaction_small_disk_positive() {
        assert!(i22(0.2) > 0.0);
    }

    #[test]
    fn concentric_outer_potential() {
        let g = CoreShellGeometry::new(0.8, 0.3, 0.0).unwrap();
        let exact = PI * 0.64 * (0.5 - 0.8f64.ln());
        assert!((outer_disk_potential_at_core(&g) - exact).abs() < 1e-10);
        assert_eq!(di12_dt(&g), 0.0);
    }

    #[test]
    fn rejects_escaping_core() {
        assert!(CoreShellGeometry::new(1.0, 0.5, 0.6).is_err());
        assert!(CoreShellGeometry::new(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn dichotomy_tags() {
        let s = SurfaceTensions::new(1.0, 2.0, 1.0).unwrap();
        let m = MassPair::new(0.3, 0.1).unwrap();
        let a = f0(m, &s, &InteractionMatrix::new(5.0, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!(a.placement, Placement::Concentric);
        let b = f0(m, &s, &InteractionMatrix::new(1.0, 5.0, 2.0).unwrap()).unwrap();
        assert_eq!(b.placement, Placement::Tangent);
        let one = f0(MassPair::new(0.3, 0.0).unwrap(), &s, &InteractionMatrix::new(1.0, 5.0, 2.0).unwrap()).unwrap();
        assert_eq!(one.placement, Placement::SingleBubble);
    }
}
