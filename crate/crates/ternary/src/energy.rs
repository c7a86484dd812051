//! Model parameters, the triple-well potential, surface-tension calibration
//! and the diffuse energy.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, GridField, Spectral};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("surface tensions must be positive: {0:?}")]
    NonPositiveTension([f64; 3]),
    #[error("interaction coefficients must be nonnegative: {0:?}")]
    NegativeInteraction([f64; 3]),
    #[error("masses must satisfy 0 < M1, M2 and M1 + M2 < 1, got ({0}, {1})")]
    BadMasses(f64, f64),
    #[error("interface width must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("droplet scale must lie in (0, 1), got {0}")]
    BadEta(f64),
    #[error("droplet scale required")]
    MissingEta,
    #[error("gradient weights {0:?} do not give a positive metric on the simplex")]
    IndefiniteMetric([f64; 3]),
    #[error("geodesic calibration did not settle: last relative change {0}")]
    CalibrationNotConverged(f64),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTensions {
    pub s01: f64,
    pub s02: f64,
    pub s12: f64,
}

impl SurfaceTensions {
    pub fn new(s01: f64, s02: f64, s12: f64) -> Result<Self, ModelError> {
        if !(s01 > 0.0 && s02 > 0.0 && s12 > 0.0) {
            return Err(ModelError::NonPositiveTension([s01, s02, s12]));
        }
        Ok(Self { s01, s02, s12 })
    }

    pub fn symmetric() -> Self {
        Self {
            s01: 1.0,
            s02: 1.0,
            s12: 1.0,
        }
    }

    /// `σ_ij` for `i ≠ j` in `{0, 1, 2}`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.s01,
            (0, 2) => self.s02,
            (1, 2) => self.s12,
            _ => panic!("no tension for pair ({i}, {j})"),
        }
    }

    pub fn satisfies_triangle(&self, rel_tol: f64) -> bool {
        let [a, b, c] = [self.s01, self.s02, self.s12];
        let t = rel_tol * (a + b + c);
        a <= b + c + t && b <= a + c + t && c <= a + b + t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaWeights {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl BetaWeights {
    pub fn as_array(&self) -> [f64; 3] {
        [self.b0, self.b1, self.b2]
    }

    /// Inverse map: `σ01 = (β0+β1)/2`, `σ02 = (β0+β2)/2`, `σ12 = (β1+β2)/2`.
    pub fn tensions(&self) -> SurfaceTensions {
        SurfaceTensions {
            s01: 0.5 * (self.b0 + self.b1),
            s02: 0.5 * (self.b0 + self.b2),
            s12: 0.5 * (self.b1 + self.b2),
        }
    }
}

pub fn beta_weights(s: &SurfaceTensions) -> BetaWeights {
    BetaWeights {
        b0: s.s01 + s.s02 - s.s12,
        b1: s.s01 + s.s12 - s.s02,
        b2: s.s02 + s.s12 - s.s01,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    DoubleBubble,
    CoreShellDegenerate,
    CoreShellStrict,
    SingleBubblesDegenerate,
    SingleBubblesStrict,
    /// Phase 1 inside a shell of phase 2 (`β2 = 0`).
    InvertedCoreShellDegenerate,
    /// `β2 < 0`.
    InvertedCoreShellStrict,
}

impl Regime {
    pub fn is_core_shell(&self) -> bool {
        matches!(self, Regime::CoreShellDegenerate | Regime::CoreShellStrict)
    }
}

/// Relative tolerance for the equality cases of the triangle inequalities.
pub const REGIME_TOL: f64 = 1e-12;

pub fn classify_regime(s: &SurfaceTensions) -> Regime {
    let cmp = |big: f64, a: f64, b: f64| {
        let sum = a + b;
        if (big - sum).abs() <= REGIME_TOL * sum {
            Ordering::Equal
        } else if big > sum {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    };
    let c02 = cmp(s.s02, s.s01, s.s12);
    let c12 = cmp(s.s12, s.s01, s.s02);
    let c01 = cmp(s.s01, s.s02, s.s12);
    // Two equalities at once would force a tension to vanish.
    assert!(
        [c02, c12, c01]
            .iter()
            .filter(|c| **c != Ordering::Less)
            .count()
            <= 1,
        "inconsistent tensions {s:?}"
    );
    match (c02, c12, c01) {
        (Ordering::Equal, _, _) => Regime::CoreShellDegenerate,
        (Ordering::Greater, _, _) => Regime::CoreShellStrict,
        (_, Ordering::Equal, _) => Regime::SingleBubblesDegenerate,
        (_, Ordering::Greater, _) => Regime::SingleBubblesStrict,
        (_, _, Ordering::Equal) => Regime::InvertedCoreShellDegenerate,
        (_, _, Ordering::Greater) => Regime::InvertedCoreShellStrict,
        _ => Regime::DoubleBubble,
    }
}

/// Nonnegative symmetric interaction matrix stored as `(11, 12, 22)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl InteractionMatrix {
    pub fn new(g11: f64, g12: f64, g22: f64) -> Result<Self, ModelError> {
        if !(g11 >= 0.0 && g12 >= 0.0 && g22 >= 0.0) {
            return Err(ModelError::NegativeInteraction([g11, g12, g22]));
        }
        Ok(Self { g11, g12, g22 })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (1, 1) => self.g11,
            (1, 2) => self.g12,
            (2, 2) => self.g22,
            _ => panic!("no interaction for pair ({i}, {j})"),
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self {
            g11: self.g11 * f,
            g12: self.g12 * f,
            g22: self.g22 * f,
        }
    }

    /// Quadratic form `Σ_ij g_ij a_i b_j`.
    pub fn form(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.g11 * a[0] * b[0] + self.g12 * (a[0] * b[1] + a[1] * b[0]) + self.g22 * a[1] * b[1]
    }

    pub fn is_zero(&self) -> bool {
        self.g11 == 0.0 && self.g12 == 0.0 && self.g22 == 0.0
    }

    /// Largest eigenvalue of the symmetric 2×2 matrix.
    pub fn spectral_radius(&self) -> f64 {
        let tr = self.g11 + self.g22;
        let det = self.g11 * self.g22 - self.g12 * self.g12;
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        (0.5 * tr + disc).abs().max((0.5 * tr - disc).abs())
    }
}

/// `|log η| η³`, the factor with `Γ = |log η| η³ γ`.
pub fn droplet_factor(eta: f64) -> f64 {
    eta.ln().abs() * eta.powi(3)
}

/// Raw coefficients from rescaled ones: `γ = Γ / (|log η| η³)`.
pub fn gamma_from_big(big: &InteractionMatrix, eta: f64) -> InteractionMatrix {
    big.scaled(1.0 / droplet_factor(eta))
}

pub fn big_from_gamma(gamma: &InteractionMatrix, eta: f64) -> InteractionMatrix {
    gamma.scaled(droplet_factor(eta))
}

/// Local part of the diffuse model: per-phase gradient weights and the
/// triple-well potential in barycentric form with `u0 = 1 - u1 - u2`:
///
/// `W = Σ_i s_i u_i²(1-u_i)² + Σ_{i<j} c_ij u_i²u_j² + λ u0²u1²u2²
///      + κ Σ_i min(u_i, 0)⁴`.
///
/// Tensions follow from the geodesic distance in the metric
/// `√(2W) · (Σ_i w_i v_i²)^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleWell {
    /// Gradient weights `w_i` multiplying `|∇u_i|²`.
    pub weights: [f64; 3],
    /// Single-well coefficients `s_i`.
    pub single: [f64; 3],
    /// Pair coefficients `(c01, c02, c12)`.
    pub pair: [f64; 3],
    pub three_phase: f64,
    pub coercivity: f64,
}

/// `s_i = SINGLE_DEPTH · β_i` puts each edge geodesic exactly at `σ_ij`.
pub const SINGLE_DEPTH: f64 = 4.5;

fn f_single(u: f64) -> f64 {
    u * u * (1.0 - u) * (1.0 - u)
}

fn df_single(u: f64) -> f64 {
    2.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
}

fn d2f_single(u: f64) -> f64 {
    2.0 - 12.0 * u + 12.0 * u * u
}

impl TripleWell {
    /// Weighted multiwell realising `σ` exactly along the simplex edges:
    /// gradient weights `β` and single wells `(9/2) β_i u_i²(1-u_i)²`.
    pub fn for_tensions(s: &SurfaceTensions) -> Self {
        let b = beta_weights(s).as_array();
        let negative: f64 = b.iter().map(|v| (-v).max(0.0)).sum();
        Self {
            weights: b,
            single: b.map(|v| SINGLE_DEPTH * v),
            pair: [0.0; 3],
            three_phase: 0.0,
            coercivity: 8.0 * SINGLE_DEPTH * (1.0 + 2.0 * negative),
        }
    }

    /// Pairwise well `Σ c_ij u_i²u_j²` with unit gradient weights.
    pub fn pairwise(pair: [f64; 3]) -> Self {
        Self {
            weights: [1.0; 3],
            single: [0.0; 3],
            pair,
            three_phase: 0.0,
            coercivity: 8.0 * pair.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Unit gradient weights and no potential.
    pub fn gradient_only() -> Self {
        Self {
            weights: [1.0; 3],
            single: [0.0; 3],
            pair: [0.0; 3],
            three_phase: 0.0,
            coercivity: 0.0,
        }
    }

    /// Matrix of the gradient form in `(u1, u2)` coordinates.
    pub fn metric(&self) -> [[f64; 2]; 2] {
        let [w0, w1, w2] = self.weights;
        [[w0 + w1, w0], [w0, w0 + w2]]
    }

    pub fn metric_is_positive(&self) -> bool {
        let m = self.metric();
        m[0][0] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0
    }

    /// Length of a tangent vector `(v1, v2)`.
    pub fn metric_length(&self, v1: f64, v2: f64) -> f64 {
        let v0 = -v1 - v2;
        let q = self.weights[0] * v0 * v0 + self.weights[1] * v1 * v1 + self.weights[2] * v2 * v2;
        q.max(0.0).sqrt()
    }

    pub fn value(&self, u1: f64, u2: f64) -> f64 {
        let u = [1.0 - u1 - u2, u1, u2];
        let mut w = 0.0;
        for i in 0..3 {
            w += self.single[i] * f_single(u[i]);
            let m = u[i].min(0.0);
            w += self.coercivity * m * m * m * m;
        }
        w += self.pair[0] * u[0] * u[0] * u[1] * u[1];
        w += self.pair[1] * u[0] * u[0] * u[2] * u[2];
        w += self.pair[2] * u[1] * u[1] * u[2] * u[2];
        w += self.three_phase * (u[0] * u[1] * u[2]).powi(2);
        w
    }

    /// Partial derivatives in the three barycentric slots, treated as independent.
    fn partials(&self, u: [f64; 3]) -> [f64; 3] {
        let mut d = [0.0; 3];
        for i in 0..3 {
            let m = u[i].min(0.0);
            d[i] += self.single[i] * df_single(u[i]) + 4.0 * self.coercivity * m * m * m;
        }
        let [c01, c02, c12] = self.pair;
        d[0] += 2.0 * u[0] * (c01 * u[1] * u[1] + c02 * u[2] * u[2]);
        d[1] += 2.0 * u[1] * (c01 * u[0] * u[0] + c12 * u[2] * u[2]);
        d[2] += 2.0 * u[2] * (c02 * u[0] * u[0] + c12 * u[1] * u[1]);
        let l = self.three_phase;
        d[0] += 2.0 * l * u[0] * (u[1] * u[2]).powi(2);
        d[1] += 2.0 * l * u[1] * (u[0] * u[2]).powi(2);
        d[2] += 2.0 * l * u[2] * (u[0] * u[1]).powi(2);
        d
    }

    /// `(∂W/∂u1, ∂W/∂u2)` with `u0` eliminated.
    pub fn grad(&self, u1: f64, u2: f64) -> (f64, f64) {
        let d = self.partials([1.0 - u1 - u2, u1, u2]);
        (d[1] - d[0], d[2] - d[0])
    }

    /// Hessian in `(u1, u2)` with `u0` eliminated.
    pub fn hessian(&self, u1: f64, u2: f64) -> [[f64; 2]; 2] {
        let u = [1.0 - u1 - u2, u1, u2];
        // Barycentric Hessian H, then J^T H J with J = [[-1,-1],[1,0],[0,1]].
        let mut h = [[0.0; 3]; 3];
        for i in 0..3 {
            let m = u[i].min(0.0);
            h[i][i] += self.single[i] * d2f_single(u[i]) + 12.0 * self.coercivity * m * m;
        }
        let [c01, c02, c12] = self.pair;
        let mut add_pair = |i: usize, j: usize, c: f64| {
            h[i][i] += 2.0 * c * u[j] * u[j];
            h[j][j] += 2.0 * c * u[i] * u[i];
            h[i][j] += 4.0 * c * u[i] * u[j];
            h[j][i] += 4.0 * c * u[i] * u[j];
        };
        add_pair(0, 1, c01);
        add_pair(0, 2, c02);
        add_pair(1, 2, c12);
        let l = self.three_phase;
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            h[i][i] += 2.0 * l * (u[j] * u[k]).powi(2);
            let off = 4.0 * l * u[i] * u[j] * u[k] * u[k];
            h[i][j] += off;
            h[j][i] += off;
        }
        let jac = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let mut out = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..3 {
                    for j in 0..3 {
                        out[a][b] += jac[i][a] * h[i][j] * jac[j][b];
                    }
                }
            }
        }
        out
    }

    /// Largest spectral norm of the Hessian over the simplex widened by `slack`.
    pub fn max_hessian_norm(&self, slack: f64) -> f64 {
        let steps = 60;
        let lo = -slack;
        let hi = 1.0 + slack;
        let mut best: f64 = 0.0;
        for a in 0..=steps {
            let u1 = lo + (hi - lo) * a as f64 / steps as f64;
            for b in 0..=steps {
                let u2 = lo + (hi - lo) * b as f64 / steps as f64;
                if u1 + u2 > 1.0 + slack {
                    continue;
                }
                let h = self.hessian(u1, u2);
                let tr = 0.5 * (h[0][0] + h[1][1]);
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                let disc = (tr * tr - det).max(0.0).sqrt();
                best = best.max((tr + disc).abs()).max((tr - disc).abs());
            }
        }
        best
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Geodesic distances between the three wells on an `m`-cell grid over
/// `[-pad, 1+pad]²` in `(u1, u2)`, with edges to all coprime offsets of
/// radius ≤ 4. Returns `(σ01, σ02, σ12)`.
pub fn geodesic_tensions(well: &TripleWell, m: usize, pad: f64) -> [f64; 3] {
    let lo = -pad;
    let h = (1.0 + 2.0 * pad) / m as f64;
    let side = m + 1;
    let pos = |i: usize| lo + h * i as f64;
    let sqrt_w = |u1: f64, u2: f64| well.value(u1, u2).max(0.0).sqrt();
    let node_w: Vec<f64> = (0..side * side)
        .map(|k| sqrt_w(pos(k / side), pos(k % side)))
        .collect();
    let mut offsets = Vec::new();
    for di in -4i64..=4 {
        for dj in -4i64..=4 {
            if (di, dj) != (0, 0) && gcd(di.unsigned_abs(), dj.unsigned_abs()) == 1 {
                offsets.push((di, dj));
            }
        }
    }
    let index = |v: f64| ((v - lo) / h).round() as usize;
    let vertex = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
    let mut out = [0.0; 3];
    for (slot, (a, b)) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
        let src = index(vertex[a].0) * side + index(vertex[a].1);
        let dst = index(vertex[b].0) * side + index(vertex[b].1);
        let mut dist = vec![f64::INFINITY; side * side];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Item(0.0, src));
        while let Some(Item(d, k)) = heap.pop() {
            if d > dist[k] {
                continue;
            }
            if k == dst {
                break;
            }
            let (i, j) = ((k / side) as i64, (k % side) as i64);
            for &(di, dj) in &offsets {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= side as i64 || nj >= side as i64 {
                    continue;
                }
                let nk = ni as usize * side + nj as usize;
                let mid = sqrt_w(pos(i as usize) + 0.5 * di as f64 * h, pos(j as usize) + 0.5 * dj as f64 * h);
                // Simpson rule for √W along the straight edge.
                let avg = (node_w[k] + 4.0 * mid + node_w[nk]) / 6.0;
                let len = well.metric_length(di as f64 * h, dj as f64 * h);
                let nd = d + std::f64::consts::SQRT_2 * avg * len;
                if nd < dist[nk] {
                    dist[nk] = nd;
                    heap.push(Item(nd, nk));
                }
            }
        }
        out[slot] = dist[dst];
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Path energy `√2 ∫ √W |ζ'|` of the straight segment between two wells.
pub fn straight_path_energy(well: &TripleWell, a: usize, b: usize, samples: usize) -> f64 {
    let vertex = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
    let (p, q) = (vertex[a], vertex[b]);
    let len = well.metric_length(q.0 - p.0, q.1 - p.1);
    // composite Simpson with an even number of panels
    let n = samples + samples % 2;
    let f = |t: f64| well.value(p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)).max(0.0).sqrt();
    let mut s = f(0.0) + f(1.0);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 / n as f64);
    }
    std::f64::consts::SQRT_2 * len * s / (3.0 * n as f64)
}

/// Surface tensions of a well by graph geodesics, refining the grid until
/// successive levels agree to 0.5%.
pub fn calibrate_sigma(well: &TripleWell) -> Result<SurfaceTensions, ModelError> {
    if !well.metric_is_positive() {
        return Err(ModelError::IndefiniteMetric(well.weights));
    }
    let pad = 0.1;
    let mut prev = geodesic_tensions(well, 30, pad);
    let mut change = f64::INFINITY;
    for m in [60, 120, 240] {
        let cur = geodesic_tensions(well, m, pad);
        change = (0..3)
            .map(|i| (cur[i] - prev[i]).abs() / cur[i].abs().max(1e-300))
            .fold(0.0, f64::max);
        prev = cur;
        if change <= 0.005 {
            let s = SurfaceTensions::new(prev[0], prev[1], prev[2])?;
            debug_assert!(s.satisfies_triangle(1e-12));
            return Ok(s);
        }
    }
    Err(ModelError::CalibrationNotConverged(change))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: SurfaceTensions,
    /// Raw coefficients `γ_ij` entering the diffuse energy.
    pub gamma: InteractionMatrix,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub m1: f64,
    pub m2: f64,
    pub well: TripleWell,
}

impl ModelParams {
    pub fn new(
        sigma: SurfaceTensions,
        gamma: InteractionMatrix,
        epsilon: f64,
        m1: f64,
        m2: f64,
    ) -> Result<Self, ModelError> {
        let p = Self {
            sigma,
            gamma,
            epsilon,
            eta: None,
            m1,
            m2,
            well: TripleWell::for_tensions(&sigma),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        SurfaceTensions::new(self.sigma.s01, self.sigma.s02, self.sigma.s12)?;
        InteractionMatrix::new(self.gamma.g11, self.gamma.g12, self.gamma.g22)?;
        if !(self.m1 > 0.0 && self.m2 > 0.0 && self.m1 + self.m2 < 1.0) {
            return Err(ModelError::BadMasses(self.m1, self.m2));
        }
        if !(self.epsilon > 0.0) {
            return Err(ModelError::BadEpsilon(self.epsilon));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(ModelError::BadEta(eta));
            }
        }
        Ok(())
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self, ModelError> {
        self.eta = Some(eta);
        self.validate()?;
        Ok(self)
    }

    /// Sets `γ` from rescaled `Γ` at the configured `η`.
    pub fn with_big_gamma(mut self, big: InteractionMatrix) -> Result<Self, ModelError> {
        let eta = self.eta.ok_or(ModelError::MissingEta)?;
        self.gamma = gamma_from_big(&big, eta);
        Ok(self)
    }

    pub fn big_gamma(&self) -> Result<InteractionMatrix, ModelError> {
        let eta = self.eta.ok_or(ModelError::MissingEta)?;
        Ok(big_from_gamma(&self.gamma, eta))
    }

    pub fn beta(&self) -> BetaWeights {
        beta_weights(&self.sigma)
    }

    pub fn masses(&self) -> [f64; 2] {
        [self.m1, self.m2]
    }
}

/// The pair `(u1, u2)`; `u0 = 1 - u1 - u2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDensity {
    pub u1: GridField,
    pub u2: GridField,
}

impl PhaseDensity {
    pub fn new(u1: GridField, u2: GridField) -> Result<Self, ModelError> {
        if u1.n() != u2.n() {
            return Err(GridError::ResolutionMismatch(u1.n(), u2.n()).into());
        }
        Ok(Self { u1, u2 })
    }

    pub fn n(&self) -> usize {
        self.u1.n()
    }

    pub fn u0(&self) -> GridField {
        let data = self
            .u1
            .data()
            .iter()
            .zip(self.u2.data())
            .map(|(a, b)| 1.0 - a - b)
            .collect();
        GridField::new(self.n(), data).expect("finite inputs")
    }

    pub fn means(&self) -> [f64; 2] {
        [self.u1.mean(), self.u2.mean()]
    }

    pub fn shifted(&self, da: usize, db: usize) -> Self {
        Self {
            u1: self.u1.shifted(da, db),
            u2: self.u2.shifted(da, db),
        }
    }

    /// True when all samples lie in the simplex widened by `slack`.
    pub fn within_slack(&self, slack: f64) -> bool {
        self.u1.data().iter().zip(self.u2.data()).all(|(&a, &b)| {
            a >= -slack && b >= -slack && a <= 1.0 + slack && b <= 1.0 + slack && a + b <= 1.0 + slack
        })
    }
}

/// Diffuse energy split into its three terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub gradient: f64,
    pub well: f64,
    pub nonlocal: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.gradient + self.well + self.nonlocal
    }
}

/// Energy from precomputed raw (unnormalized) transforms of `u1`, `u2`.
pub(crate) fn energy_from_spectra(
    u: &PhaseDensity,
    h1: &[rustfft::num_complex::Complex64],
    h2: &[rustfft::num_complex::Complex64],
    sym: &[f64],
    p: &ModelParams,
) -> EnergyParts {
    let n = u.n();
    let norm = 1.0 / ((n * n) as f64 * (n * n) as f64);
    let [w0, w1, w2] = p.well.weights;
    let (mut d11, mut d12, mut d22) = (0.0, 0.0, 0.0);
    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
    for k in 0..n * n {
        let s = sym[k];
        if s == 0.0 {
            continue;
        }
        let a = h1[k];
        let b = h2[k];
        let aa = a.norm_sqr();
        let bb = b.norm_sqr();
        let ab = (a * b.conj()).re;
        d11 += s * aa;
        d22 += s * bb;
        d12 += s * ab;
        g11 += aa / s;
        g22 += bb / s;
        g12 += ab / s;
    }
    // Σ w_i |∇u_i|² with ∇u0 = -∇u1 - ∇u2.
    let dir = w1 * d11 + w2 * d22 + w0 * (d11 + 2.0 * d12 + d22);
    let gradient = 0.5 * 0.5 * p.epsilon * p.epsilon * dir * norm;
    let mut wsum = 0.0;
    for (a, b) in u.u1.data().iter().zip(u.u2.data()) {
        wsum += p.well.value(*a, *b);
    }
    let well = 0.5 * wsum / (n * n) as f64;
    let g = &p.gamma;
    let nonlocal =
        0.5 * p.epsilon * (g.g11 * g11 + 2.0 * g.g12 * g12 + g.g22 * g22) * norm;
    EnergyParts {
        gradient,
        well,
        nonlocal,
    }
}

/// `E = ½∫[(ε²/2) Σ w_i|∇u_i|² + W(u)] + Σ_ij (εγ_ij/2) ∬ G u_i u_j`.
pub fn diffuse_energy(u: &PhaseDensity, p: &ModelParams) -> Result<EnergyParts, ModelError> {
    let n = u.n();
    let spec = Spectral::new(n)?;
    let to_c = |f: &GridField| -> Vec<rustfft::num_complex::Complex64> {
        f.data()
            .iter()
            .map(|&v| rustfft::num_complex::Complex64::new(v, 0.0))
            .collect()
    };
    let mut h1 = to_c(&u.u1);
    let mut h2 = to_c(&u.u2);
    spec.forward(&mut h1);
    spec.forward(&mut h2);
    Ok(energy_from_spectra(u, &h1, &h2, &crate::grid::laplace_symbol(n), p))
}

/// Diffuse energy in sharp-interface units: the local part scaled by `2/ε`
/// (its limit is `Σ σ_ij H¹`) and the nonlocal part by `1/ε`.
pub fn sharp_normalized_energy(u: &PhaseDensity, p: &ModelParams) -> Result<f64, ModelError> {
    let e = diffuse_energy(u, p)?;
    Ok((2.0 * (e.gradient + e.well) + e.nonlocal) / p.epsilon)
}

/// `E_η = E / η` with `γ = Γ/(|log η| η³)` already carried by `p`.
pub fn droplet_energy_diffuse(u: &PhaseDensity, p: &ModelParams) -> Result<f64, ModelError> {
    let eta = p.eta.ok_or(ModelError::MissingEta)?;
    Ok(sharp_normalized_energy(u, p)? / eta)
}
