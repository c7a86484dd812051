//! Segmentation, periodic components, interface lengths, junction angles and
//! morphology classification of simulated states.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::PhaseDensity;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelField {
    n: usize,
    labels: Vec<u8>,
}

impl LabelField {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, a: usize, b: usize) -> u8 {
        self.labels[(a % self.n) * self.n + b % self.n]
    }

    /// Pixel fractions of labels 0, 1, 2.
    pub fn fractions(&self) -> [f64; 3] {
        let mut c = [0usize; 3];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        let t = self.labels.len() as f64;
        [c[0] as f64 / t, c[1] as f64 / t, c[2] as f64 / t]
    }
}

/// Pointwise argmax of `(u0, u1, u2)`, ties to the lower label.
pub fn segment(u: &PhaseDensity) -> LabelField {
    let labels = u
        .u1
        .data()
        .iter()
        .zip(u.u2.data())
        .map(|(&a, &b)| {
            let z = 1.0 - a - b;
            let mut best = 0u8;
            let mut val = z;
            if a > val {
                best = 1;
                val = a;
            }
            if b > val {
                best = 2;
            }
            best
        })
        .collect();
    LabelField { n: u.n(), labels }
}

/// A 4-connected periodic cluster of non-background pixels.
#[derive(Clone, Debug)]
pub struct Component {
    pub pixels: Vec<usize>,
    /// Pixel coordinates unwrapped relative to the first pixel, in grid units.
    pub unwrapped: Vec<[i64; 2]>,
}

/// Periodic 4-connected labelling of `label != 0`; returns the components
/// and a per-pixel component index (`usize::MAX` for background).
pub fn components(l: &LabelField) -> (Vec<Component>, Vec<usize>) {
    let n = l.n;
    let mut owner = vec![usize::MAX; n * n];
    let mut out = Vec::new();
    for start in 0..n * n {
        if l.labels[start] == 0 || owner[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = Component {
            pixels: Vec::new(),
            unwrapped: Vec::new(),
        };
        let mut queue = VecDeque::new();
        owner[start] = id;
        queue.push_back((start, [(start / n) as i64, (start % n) as i64]));
        while let Some((k, pos)) = queue.pop_front() {
            comp.pixels.push(k);
            comp.unwrapped.push(pos);
            for (da, db) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let a = (pos[0] + da).rem_euclid(n as i64) as usize;
                let b = (pos[1] + db).rem_euclid(n as i64) as usize;
                let nk = a * n + b;
                if l.labels[nk] != 0 && owner[nk] == usize::MAX {
                    owner[nk] = id;
                    queue.push_back((nk, [pos[0] + da, pos[1] + db]));
                }
            }
        }
        out.push(comp);
    }
    (out, owner)
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn phases(u: &PhaseDensity, k: usize) -> [f64; 3] {
    let a = u.u1.data()[k];
    let b = u.u2.data()[k];
    [1.0 - a - b, a, b]
}

/// A piece of the `u_i = u_j` contour inside one grid cell.
#[derive(Clone, Copy, Debug)]
struct Segment {
    pair: usize,
    /// Endpoints in grid units, relative to the cell's lower corner `(a, b)`.
    p: [f64; 2],
    q: [f64; 2],
    cell: (usize, usize),
    /// Fraction of the segment where phases `i, j` dominate the third one.
    valid: f64,
}

fn bilinear(c: &[[f64; 3]; 4], x: f64, y: f64) -> [f64; 3] {
    // corners: (0,0), (1,0), (1,1), (0,1) in (a, b) offsets
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = c[0][i] * (1.0 - x) * (1.0 - y)
            + c[1][i] * x * (1.0 - y)
            + c[2][i] * x * y
            + c[3][i] * (1.0 - x) * y;
    }
    out
}

/// Marching squares over all cells for the three pairwise level sets.
fn contour_segments(u: &PhaseDensity, l: &LabelField) -> Vec<Segment> {
    let n = u.n();
    let corners = [(0usize, 0usize), (1, 0), (1, 1), (0, 1)];
    let pos = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let idx: Vec<usize> = corners
                .iter()
                .map(|(da, db)| ((a + da) % n) * n + (b + db) % n)
                .collect();
            let mut present = [false; 3];
            for &k in &idx {
                present[l.labels[k] as usize] = true;
            }
            let c = [phases(u, idx[0]), phases(u, idx[1]), phases(u, idx[2]), phases(u, idx[3])];
            for (pi, &(i, j)) in PAIRS.iter().enumerate() {
                if !(present[i] && present[j]) {
                    continue;
                }
                let phi: Vec<f64> = c.iter().map(|v| v[i] - v[j]).collect();
                let mut pts = Vec::with_capacity(4);
                for e in 0..4 {
                    let (s, t) = (phi[e], phi[(e + 1) % 4]);
                    // Ties count as phase i, matching the segmentation.
                    if (s >= 0.0) != (t >= 0.0) {
                        let w = s / (s - t);
                        let (p0, p1) = (pos[e], pos[(e + 1) % 4]);
                        pts.push([p0[0] + w * (p1[0] - p0[0]), p0[1] + w * (p1[1] - p0[1])]);
                    }
                }
                let mut segs = Vec::new();
                if pts.len() == 2 {
                    segs.push((pts[0], pts[1]));
                } else if pts.len() == 4 {
                    // Saddle: join by the sign of the cell-centre value.
                    let centre = phi.iter().sum::<f64>() / 4.0;
                    if (centre >= 0.0) == (phi[0] >= 0.0) {
                        segs.push((pts[0], pts[3]));
                        segs.push((pts[1], pts[2]));
                    } else {
                        segs.push((pts[0], pts[1]));
                        segs.push((pts[2], pts[3]));
                    }
                }
                let k = 3 - i - j;
                for (p, q) in segs {
                    let valid = if present[k] {
                        let samples = 8;
                        let good = (0..samples)
                            .filter(|s| {
                                let t = (*s as f64 + 0.5) / samples as f64;
                                let v = bilinear(&c, p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]));
                                v[i].max(v[j]) >= v[k]
                            })
                            .count();
                        good as f64 / samples as f64
                    } else {
                        1.0
                    };
                    if valid > 0.0 {
                        out.push(Segment {
                            pair: pi,
                            p,
                            q,
                            cell: (a, b),
                            valid,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Interface lengths `(L01, L02, L12)` of the whole field, in torus units.
pub fn interface_lengths(u: &PhaseDensity, l: &LabelField) -> [f64; 3] {
    let h = 1.0 / u.n() as f64;
    let mut out = [0.0; 3];
    for s in contour_segments(u, l) {
        out[s.pair] += s.valid * h * ((s.q[0] - s.p[0]).hypot(s.q[1] - s.p[1]));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoreShellKind {
    Concentric,
    Tangent,
    Offset,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MorphologyTag {
    SingleBubble(u8),
    CoreShell(CoreShellKind),
    DoubleBubble,
}

impl MorphologyTag {
    pub fn name(&self) -> String {
        match self {
            MorphologyTag::SingleBubble(i) => format!("SingleBubble({i})"),
            MorphologyTag::CoreShell(k) => format!("CoreShell({})", format!("{k:?}").to_lowercase()),
            MorphologyTag::DoubleBubble => "DoubleBubble".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyThresholds {
    /// Largest `L02/(L02+L12)` for an insulated core.
    pub insulation: f64,
    pub concentric: f64,
    pub tangent: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            insulation: 0.05,
            concentric: 0.15,
            tangent: 0.85,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// Area fractions of phases 1 and 2.
    pub masses: [f64; 2],
    pub center: [f64; 2],
    /// `(L01, L02, L12)`.
    pub lengths: [f64; 3],
    pub tag: MorphologyTag,
    /// `t/(r1 - r2)` for two-species components.
    pub offset_ratio: Option<f64>,
    /// Sector angles `(θ0, θ1, θ2)` at triple junctions of this component.
    pub junctions: Vec<[f64; 3]>,
}

impl ComponentReport {
    pub fn insulation(&self) -> Option<f64> {
        let s = self.lengths[1] + self.lengths[2];
        (self.masses[0] > 0.0 && self.masses[1] > 0.0 && s > 0.0).then(|| self.lengths[1] / s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorphologyReport {
    pub n: usize,
    pub fractions: [f64; 3],
    pub lengths: [f64; 3],
    pub components: Vec<ComponentReport>,
    pub thresholds: ClassifyThresholds,
}

impl MorphologyReport {
    pub fn tags(&self) -> Vec<MorphologyTag> {
        self.components.iter().map(|c| c.tag).collect()
    }

    pub fn junction_angles(&self) -> Vec<[f64; 3]> {
        self.components.iter().flat_map(|c| c.junctions.iter().cloned()).collect()
    }

    /// Components containing both species.
    pub fn mixed(&self) -> impl Iterator<Item = &ComponentReport> {
        self.components
            .iter()
            .filter(|c| c.masses[0] > 0.0 && c.masses[1] > 0.0)
    }
}

/// Tag from measured masses, lengths and offset ratio.
pub fn classify(masses: [f64; 2], lengths: [f64; 3], offset_ratio: Option<f64>, th: &ClassifyThresholds) -> MorphologyTag {
    match (masses[0] > 0.0, masses[1] > 0.0) {
        (true, false) => return MorphologyTag::SingleBubble(1),
        (false, true) => return MorphologyTag::SingleBubble(2),
        (false, false) => return MorphologyTag::SingleBubble(0),
        _ => {}
    }
    let s = lengths[1] + lengths[2];
    if s > 0.0 && lengths[1] < th.insulation * s {
        let r = offset_ratio.unwrap_or(0.0);
        let kind = if r <= th.concentric {
            CoreShellKind::Concentric
        } else if r >= th.tangent {
            CoreShellKind::Tangent
        } else {
            CoreShellKind::Offset
        };
        MorphologyTag::CoreShell(kind)
    } else {
        MorphologyTag::DoubleBubble
    }
}

/// Least-squares `t = c0 + c1 s + c2 s²`.
fn quadratic_fit(st: &[(f64, f64)]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for &(s, t) in st {
        let b = [1.0, s, s * s];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += b[i] * b[j];
            }
            r[i] += b[i] * t;
        }
    }
    // Cramer's rule on the 3×3 normal equations.
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(&a);
    if det.abs() < 1e-9 * a[0][0].powi(3).max(1e-300) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = r[i];
        }
        *o = det3(&m) / det;
    }
    Some(out)
}

fn sym_eig_major(sxx: f64, sxy: f64, syy: f64) -> [f64; 2] {
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    [theta.cos(), theta.sin()]
}

/// Triple-junction sector angles. Returns `(component index, [θ0, θ1, θ2])`
/// with `θ_k` the opening of phase `k`.
pub fn junction_angles(u: &PhaseDensity, l: &LabelField, epsilon: f64) -> Vec<(usize, [f64; 3])> {
    let n = u.n();
    let h = 1.0 / n as f64;
    let (_, owner) = components(l);
    // Cells holding all three labels, clustered periodically.
    let mut triple = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let mut present = [false; 3];
            for (da, db) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                present[l.get(a + da, b + db) as usize] = true;
            }
            if present.iter().all(|&p| p) {
                triple.push([a as f64 + 0.5, b as f64 + 0.5]);
            }
        }
    }
    let wrap = |d: f64| d - (d / n as f64).round() * n as f64;
    let merge = (2.0 * epsilon / h).max(3.0);
    let mut clusters: Vec<(Vec<[f64; 2]>, [f64; 2])> = Vec::new();
    for p in triple {
        match clusters.iter_mut().find(|(_, c)| wrap(p[0] - c[0]).hypot(wrap(p[1] - c[1])) <= merge) {
            Some((pts, c)) => {
                let d = [wrap(p[0] - c[0]), wrap(p[1] - c[1])];
                pts.push([c[0] + d[0], c[1] + d[1]]);
                let k = pts.len() as f64;
                *c = [pts.iter().map(|q| q[0]).sum::<f64>() / k, pts.iter().map(|q| q[1]).sum::<f64>() / k];
            }
            None => clusters.push((vec![p], p)),
        }
    }
    let segs = contour_segments(u, l);
    // Crossing points of valid segments, as absolute grid coordinates.
    let points: Vec<(usize, [f64; 2])> = segs
        .iter()
        .filter(|s| s.valid >= 1.0)
        .map(|s| {
            let m = [0.5 * (s.p[0] + s.q[0]), 0.5 * (s.p[1] + s.q[1])];
            (s.pair, [s.cell.0 as f64 + m[0], s.cell.1 as f64 + m[1]])
        })
        .collect();
    let outer = 4.0 * epsilon / h;
    let inner = epsilon / h;
    let mut out = Vec::new();
    for (_, c0) in clusters {
        let mut centre = c0;
        let mut dirs = [[0.0; 2]; 3];
        let mut ok = false;
        for _ in 0..3 {
            let mut lines = Vec::new();
            ok = true;
            for pair in 0..3 {
                let pts: Vec<[f64; 2]> = points
                    .iter()
                    .filter(|(p, _)| *p == pair)
                    .map(|(_, q)| [wrap(q[0] - centre[0]), wrap(q[1] - centre[1])])
                    .filter(|d| {
                        let r = d[0].hypot(d[1]);
                        r >= inner && r <= outer
                    })
                    .collect();
                if pts.len() < 4 {
                    ok = false;
                    break;
                }
                let k = pts.len() as f64;
                let m = [pts.iter().map(|p| p[0]).sum::<f64>() / k, pts.iter().map(|p| p[1]).sum::<f64>() / k];
                let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
                for p in &pts {
                    let (x, y) = (p[0] - m[0], p[1] - m[1]);
                    sxx += x * x;
                    sxy += x * y;
                    syy += y * y;
                }
                let mut d = sym_eig_major(sxx, sxy, syy);
                if d[0] * m[0] + d[1] * m[1] < 0.0 {
                    d = [-d[0], -d[1]];
                }
                // Refine the TLS line by a quadratic t(s) in its frame, so the
                // branch tangent at the junction is free of curvature bias.
                let nrm = [-d[1], d[0]];
                let st: Vec<(f64, f64)> = pts
                    .iter()
                    .map(|p| (p[0] * d[0] + p[1] * d[1], p[0] * nrm[0] + p[1] * nrm[1]))
                    .collect();
                let (anchor, tangent) = match quadratic_fit(&st) {
                    Some([a0, a1, _]) => {
                        let t = [d[0] + a1 * nrm[0], d[1] + a1 * nrm[1]];
                        let len = t[0].hypot(t[1]);
                        ([a0 * nrm[0], a0 * nrm[1]], [t[0] / len, t[1] / len])
                    }
                    None => (m, d),
                };
                dirs[pair] = tangent;
                lines.push((anchor, tangent));
            }
            if !ok {
                break;
            }
            // Least-squares intersection of the three branch lines.
            let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (m, d) in &lines {
                let nrm = [-d[1], d[0]];
                let off = nrm[0] * m[0] + nrm[1] * m[1];
                a11 += nrm[0] * nrm[0];
                a12 += nrm[0] * nrm[1];
                a22 += nrm[1] * nrm[1];
                b1 += nrm[0] * off;
                b2 += nrm[1] * off;
            }
            let det = a11 * a22 - a12 * a12;
            if det.abs() < 1e-12 {
                break;
            }
            let shift = [(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det];
            if shift[0].hypot(shift[1]) > outer {
                ok = false;
                break;
            }
            centre = [centre[0] + shift[0], centre[1] + shift[1]];
        }
        if !ok {
            continue;
        }
        let ang = dirs.map(|d| d[1].atan2(d[0]).rem_euclid(2.0 * PI));
        // Sector between the two branches bounding phase k; branch pairs
        // are (01, 02, 12), phase 0 lies between 01 and 02 etc.
        let bounding = [(0usize, 1usize), (0, 2), (1, 2)];
        let mut theta = [0.0; 3];
        for (k, &(x, y)) in bounding.iter().enumerate() {
            let other = 3 - x - y;
            let ccw = (ang[y] - ang[x]).rem_euclid(2.0 * PI);
            let to_other = (ang[other] - ang[x]).rem_euclid(2.0 * PI);
            theta[k] = if to_other < ccw { 2.0 * PI - ccw } else { ccw };
        }
        let a = (centre[0].round() as i64).rem_euclid(n as i64) as usize;
        let b = (centre[1].round() as i64).rem_euclid(n as i64) as usize;
        let mut comp = owner[a * n + b];
        if comp == usize::MAX {
            // The centre pixel may be background; take any nearby owned pixel.
            'search: for r in 1..4i64 {
                for da in -r..=r {
                    for db in -r..=r {
                        let aa = (a as i64 + da).rem_euclid(n as i64) as usize;
                        let bb = (b as i64 + db).rem_euclid(n as i64) as usize;
                        if owner[aa * n + bb] != usize::MAX {
                            comp = owner[aa * n + bb];
                            break 'search;
                        }
                    }
                }
            }
        }
        out.push((comp, theta));
    }
    out
}

/// Full analysis of one state.
pub fn analyze(u: &PhaseDensity, epsilon: f64, th: &ClassifyThresholds) -> MorphologyReport {
    let n = u.n();
    let h = 1.0 / n as f64;
    let l = segment(u);
    let (comps, owner) = components(&l);
    let mut lengths = vec![[0.0; 3]; comps.len()];
    let mut total = [0.0; 3];
    for s in contour_segments(u, &l) {
        let len = s.valid * h * (s.q[0] - s.p[0]).hypot(s.q[1] - s.p[1]);
        total[s.pair] += len;
        let (a, b) = s.cell;
        let id = [(0, 0), (1, 0), (1, 1), (0, 1)]
            .iter()
            .map(|(da, db)| owner[((a + da) % n) * n + (b + db) % n])
            .find(|&o| o != usize::MAX);
        if let Some(id) = id {
            lengths[id][s.pair] += len;
        }
    }
    let mut junctions = vec![Vec::new(); comps.len()];
    for (c, t) in junction_angles(u, &l, epsilon) {
        if c != usize::MAX {
            junctions[c].push(t);
        }
    }
    let mut reports = Vec::with_capacity(comps.len());
    for (id, c) in comps.iter().enumerate() {
        let mut count = [0usize; 2];
        let mut sum_all = [0.0; 2];
        let mut sum2 = [0.0; 2];
        for (&k, p) in c.pixels.iter().zip(&c.unwrapped) {
            let lab = l.labels[k] as usize;
            count[lab - 1] += 1;
            sum_all[0] += p[0] as f64;
            sum_all[1] += p[1] as f64;
            if lab == 2 {
                sum2[0] += p[0] as f64;
                sum2[1] += p[1] as f64;
            }
        }
        let area = (n * n) as f64;
        let masses = [count[0] as f64 / area, count[1] as f64 / area];
        let tot = c.pixels.len() as f64;
        let centroid = [sum_all[0] / tot, sum_all[1] / tot];
        let offset_ratio = if count[0] > 0 && count[1] > 0 {
            let c2 = [sum2[0] / count[1] as f64, sum2[1] / count[1] as f64];
            let t = h * (c2[0] - centroid[0]).hypot(c2[1] - centroid[1]);
            let r1 = ((masses[0] + masses[1]) / PI).sqrt();
            let r2 = (masses[1] / PI).sqrt();
            Some(t / (r1 - r2))
        } else {
            None
        };
        let wrapc = |v: f64| (v + 0.5).rem_euclid(1.0) - 0.5;
        let center = [wrapc(-0.5 + h * centroid[0]), wrapc(-0.5 + h * centroid[1])];
        let tag = classify(masses, lengths[id], offset_ratio, th);
        reports.push(ComponentReport {
            masses,
            center,
            lengths: lengths[id],
            tag,
            offset_ratio,
            junctions: std::mem::take(&mut junctions[id]),
        });
    }
    MorphologyReport {
        n,
        fractions: l.fractions(),
        lengths: total,
        components: reports,
        thresholds: *th,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridField;

    /// Smooth indicator of a disk with a two-pixel transition.
    fn disk(n: usize, c: [f64; 2], r: f64) -> GridField {
        let w = 1.0 / n as f64;
        GridField::from_fn(n, |x, y| {
            let dx = x - c[0] - (x - c[0]).round();
            let dy = y - c[1] - (y - c[1]).round();
            0.5 * (1.0 - ((dx.hypot(dy) - r) / w).tanh())
        })
        .unwrap()
    }

    fn pair(u1: GridField, u2: GridField) -> PhaseDensity {
        PhaseDensity::new(u1, u2).unwrap()
    }

    #[test]
    fn segmentation_examples() {
        let n = 16;
        let one = pair(GridField::constant(n, 1.0).unwrap(), GridField::zeros(n).unwrap());
        assert!(segment(&one).labels().iter().all(|&l| l == 1));
        let flat = pair(GridField::constant(n, 0.12).unwrap(), GridField::constant(n, 0.04).unwrap());
        assert!(segment(&flat).labels().iter().all(|&l| l == 0));
        let tie = pair(GridField::constant(n, 0.5).unwrap(), GridField::zeros(n).unwrap());
        assert!(segment(&tie).labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn disk_area_matches() {
        let n = 128;
        let r = 0.2;
        let u = pair(disk(n, [0.1, -0.05], r), GridField::zeros(n).unwrap());
        let f = segment(&u).fractions();
        assert!((f[1] - PI * r * r).abs() < 2.0 * PI * r / n as f64);
    }

    #[test]
    fn periodic_components() {
        let n = 64;
        let a = disk(n, [-0.25, -0.25], 0.1);
        let b = disk(n, [0.25, 0.2], 0.1);
        let two = pair(GridField::new(n, a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect()).unwrap(), GridField::zeros(n).unwrap());
        assert_eq!(components(&segment(&two)).0.len(), 2);
        let seam = pair(disk(n, [0.5, 0.5], 0.15), GridField::zeros(n).unwrap());
        assert_eq!(components(&segment(&seam)).0.len(), 1);
    }

    #[test]
    fn disk_perimeter_within_one_percent() {
        let n = 256;
        for r in [0.1, 0.25] {
            let u = pair(disk(n, [0.013, -0.021], r), GridField::zeros(n).unwrap());
            let l = interface_lengths(&u, &segment(&u));
            let want = 2.0 * PI * r;
            assert!((l[0] - want).abs() < 0.01 * want, "{} vs {want}", l[0]);
            assert!(l[1] == 0.0 && l[2] == 0.0);
        }
    }

    /// Ellipse with semi-axes `a, b` rotated by `phi`.
    fn ellipse(n: usize, a: f64, b: f64, phi: f64) -> GridField {
        let w = 1.0 / n as f64;
        let (c, s) = (phi.cos(), phi.sin());
        GridField::from_fn(n, |x, y| {
            let (p, q) = (c * x + s * y, -s * x + c * y);
            let rho = ((p / a).powi(2) + (q / b).powi(2)).sqrt();
            let g = (rho - 1.0) * b;
            0.5 * (1.0 - (g / w).tanh())
        })
        .unwrap()
    }

    #[test]
    fn lengths_are_rotation_consistent() {
        let n = 256;
        let base = pair(ellipse(n, 0.3, 0.15, 0.0), GridField::zeros(n).unwrap());
        let rot = pair(ellipse(n, 0.3, 0.15, PI / 6.0), GridField::zeros(n).unwrap());
        let l0 = interface_lengths(&base, &segment(&base))[0];
        let l1 = interface_lengths(&rot, &segment(&rot))[0];
        assert!((l0 - l1).abs() < 0.01 * l0, "{l0} vs {l1}");
    }

    fn annulus(n: usize, centre: [f64; 2], r1: f64, core: [f64; 2], r2: f64) -> PhaseDensity {
        let outer = disk(n, centre, r1);
        let inner = disk(n, core, r2);
        let u1 = GridField::new(n, outer.data().iter().zip(inner.data()).map(|(o, i)| (o - i).max(0.0)).collect()).unwrap();
        pair(u1, inner)
    }

    #[test]
    fn concentric_annulus_length_ratio() {
        let n = 256;
        // masses (3π, π) scaled by s²: radii 2s and s
        let s = 0.1;
        let u = annulus(n, [0.0, 0.0], 2.0 * s, [0.0, 0.0], s);
        let rep = analyze(&u, 0.01, &ClassifyThresholds::default());
        assert_eq!(rep.components.len(), 1);
        let c = &rep.components[0];
        assert!((c.lengths[0] / c.lengths[2] - 2.0).abs() < 0.04);
        assert_eq!(c.tag, MorphologyTag::CoreShell(CoreShellKind::Concentric));
        assert!(c.junctions.is_empty());
        let sum = c.masses[0] + c.masses[1];
        assert!((sum - rep.fractions[1] - rep.fractions[2]).abs() < 1e-15);
    }

    #[test]
    fn tangent_and_offset_cores() {
        let n = 256;
        let (r1, r2) = (0.2, 0.1);
        let u = annulus(n, [0.0, 0.0], r1, [r1 - r2 - 2.0 / n as f64, 0.0], r2);
        let rep = analyze(&u, 0.01, &ClassifyThresholds::default());
        assert_eq!(rep.components[0].tag, MorphologyTag::CoreShell(CoreShellKind::Tangent));
        let u = annulus(n, [0.0, 0.0], r1, [0.5 * (r1 - r2), 0.0], r2);
        let rep = analyze(&u, 0.01, &ClassifyThresholds::default());
        assert_eq!(rep.components[0].tag, MorphologyTag::CoreShell(CoreShellKind::Offset));
    }

    /// Symmetric double bubble from three circular arcs meeting at 120°.
    fn double_bubble(n: usize, r: f64) -> PhaseDensity {
        // Two equal disks of radius r with centres 2 r cos(60°) = r apart.
        let d = r;
        let a = [-d / 2.0, 0.0];
        let b = [d / 2.0, 0.0];
        let w = 1.0 / n as f64;
        let field = |c: [f64; 2], other: [f64; 2]| {
            GridField::from_fn(n, move |x, y| {
                // inside own disk and on own side of the separating line
                let da = (x - c[0]).hypot(y - c[1]) - r;
                let g = da.max(-x * (c[0] - other[0]).signum());
                0.5 * (1.0 - (g / w).tanh())
            })
            .unwrap()
        };
        pair(field(a, b), field(b, a))
    }

    #[test]
    fn symmetric_double_bubble_angles() {
        let n = 256;
        let u = double_bubble(n, 0.15);
        let rep = analyze(&u, 0.01, &ClassifyThresholds::default());
        assert_eq!(rep.components.len(), 1);
        assert_eq!(rep.components[0].tag, MorphologyTag::DoubleBubble);
        let j = rep.junction_angles();
        assert_eq!(j.len(), 2, "{j:?}");
        for t in j {
            assert!((t.iter().sum::<f64>() - 2.0 * PI).abs() < 2f64.to_radians());
            for a in t {
                assert!((a - 2.0 * PI / 3.0).abs() < 3f64.to_radians(), "{t:?}");
            }
        }
    }

    #[test]
    fn classify_rules() {
        let th = ClassifyThresholds::default();
        assert_eq!(classify([0.1, 0.0], [1.0, 0.0, 0.0], None, &th), MorphologyTag::SingleBubble(1));
        assert_eq!(classify([0.0, 0.1], [0.0, 1.0, 0.0], None, &th), MorphologyTag::SingleBubble(2));
        assert_eq!(classify([0.1, 0.1], [1.0, 0.5, 0.5], Some(0.0), &th), MorphologyTag::DoubleBubble);
        assert_eq!(
            classify([0.1, 0.1], [1.0, 0.01, 0.5], Some(0.9), &th),
            MorphologyTag::CoreShell(CoreShellKind::Tangent)
        );
    }

    #[test]
    fn classification_commutes_with_relabelling() {
        // Swapping species swaps single-bubble labels and leaves mixed tags alone.
        let th = ClassifyThresholds::default();
        let n = 128;
        let u = pair(disk(n, [0.2, 0.1], 0.1), disk(n, [-0.2, -0.2], 0.08));
        let v = pair(u.u2.clone(), u.u1.clone());
        let a = analyze(&u, 0.02, &th).tags();
        let b = analyze(&v, 0.02, &th).tags();
        let swap = |t: MorphologyTag| match t {
            MorphologyTag::SingleBubble(1) => MorphologyTag::SingleBubble(2),
            MorphologyTag::SingleBubble(2) => MorphologyTag::SingleBubble(1),
            x => x,
        };
        assert_eq!(a.into_iter().map(swap).collect::<Vec<_>>(), b);
    }
}
