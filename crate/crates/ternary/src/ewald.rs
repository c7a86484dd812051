//! Point values of the torus Green's function by Ewald splitting.
//!
//! With splitting parameter `xi`, the heat-kernel time is cut at `xi/(4π)`:
//!
//! `G(x) = Σ_{k≠0} exp(-π xi |k|²) cos(2π k·x) / (4π²|k|²)
//!        + (1/4π) Σ_n E1(π|x+n|²/xi) - xi/(4π)`.
//!
//! `xi = 1` balances the two sums.

use std::f64::consts::PI;

use thiserror::Error;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const TERM_CUTOFF: f64 = 1e-16;

#[derive(Debug, Error, PartialEq)]
pub enum EwaldError {
    #[error("Green's function is singular at lattice points")]
    Singular,
    #[error("splitting parameter must be positive, got {0}")]
    BadSplitting(f64),
}

/// Exponential integral `E1(z)` for `z > 0`.
pub fn exp_integral_e1(z: f64) -> f64 {
    assert!(z > 0.0);
    if z <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        let mut k = 1.0;
        loop {
            term *= -z / k;
            let add = -term / k;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
            k += 1.0;
        }
        -EULER_GAMMA - z.ln() + sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-z).exp()
    }
}

fn reciprocal_extent(xi: f64) -> i64 {
    // exp(-π xi k²) < 1e-16 once π xi k² > 37.
    (40.0 / (PI * xi)).sqrt().ceil() as i64 + 1
}

fn real_extent(xi: f64) -> i64 {
    (40.0 * xi / PI).sqrt().ceil() as i64 + 2
}

fn wrap(v: f64) -> f64 {
    v - v.round()
}

/// `R(0) = lim_{x→0} G(x) + (1/2π) log|x|` with the default splitting.
pub fn green_regular_part_origin() -> f64 {
    green_regular_part_origin_with(1.0).expect("positive splitting")
}

pub fn green_regular_part_origin_with(xi: f64) -> Result<f64, EwaldError> {
    if !(xi > 0.0) {
        return Err(EwaldError::BadSplitting(xi));
    }
    let lk = reciprocal_extent(xi);
    let lr = real_extent(xi);
    let mut recip = 0.0;
    for a in -lk..=lk {
        for b in -lk..=lk {
            let k2 = (a * a + b * b) as f64;
            if k2 == 0.0 {
                continue;
            }
            let t = (-PI * xi * k2).exp() / (4.0 * PI * PI * k2);
            if t > TERM_CUTOFF * 1e-3 {
                recip += t;
            }
        }
    }
    let mut real = 0.0;
    for a in -lr..=lr {
        for b in -lr..=lr {
            let r2 = (a * a + b * b) as f64;
            if r2 == 0.0 {
                continue;
            }
            let z = PI * r2 / xi;
            if z < 40.0 {
                real += exp_integral_e1(z);
            }
        }
    }
    Ok(recip + real / (4.0 * PI) + ((xi / PI).ln() - EULER_GAMMA) / (4.0 * PI) - xi / (4.0 * PI))
}

/// `G(x)` at a torus displacement; rejects lattice points.
pub fn green_point(x: [f64; 2]) -> Result<f64, EwaldError> {
    green_point_with(x, 1.0)
}

pub fn green_point_with(x: [f64; 2], xi: f64) -> Result<f64, EwaldError> {
    if !(xi > 0.0) {
        return Err(EwaldError::BadSplitting(xi));
    }
    let y = [wrap(x[0]), wrap(x[1])];
    if y[0] * y[0] + y[1] * y[1] < 1e-300 {
        return Err(EwaldError::Singular);
    }
    let lk = reciprocal_extent(xi);
    let lr = real_extent(xi);
    let mut recip = 0.0;
    for a in -lk..=lk {
        for b in -lk..=lk {
            let k2 = (a * a + b * b) as f64;
            if k2 == 0.0 {
                continue;
            }
            let w = (-PI * xi * k2).exp() / (4.0 * PI * PI * k2);
            recip += w * (2.0 * PI * (a as f64 * y[0] + b as f64 * y[1])).cos();
        }
    }
    let mut real = 0.0;
    for a in -lr..=lr {
        for b in -lr..=lr {
            let d0 = y[0] + a as f64;
            let d1 = y[1] + b as f64;
            let z = PI * (d0 * d0 + d1 * d1) / xi;
            if z < 40.0 {
                real += exp_integral_e1(z);
            }
        }
    }
    Ok(recip + real / (4.0 * PI) - xi / (4.0 * PI))
}

/// `E1(z) + log z`, accurate as `z → 0`.
fn e1_plus_log(z: f64) -> f64 {
    if z > 1.0 {
        return exp_integral_e1(z) + z.ln();
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut k = 1.0;
    loop {
        term *= -z / k;
        let add = -term / k;
        sum += add;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) || add == 0.0 {
            break;
        }
        k += 1.0;
    }
    -EULER_GAMMA + sum
}

/// Regular part `R(x) = G(x) + (1/2π) log|x|` for `|x| < 1/2`, without
/// cancellation near the origin; `R(0)` at `x = 0`.
pub fn green_regular_part(x: [f64; 2]) -> f64 {
    let xi = 1.0;
    let r2 = x[0] * x[0] + x[1] * x[1];
    assert!(r2 < 0.25, "regular part is only used inside the fundamental cell");
    let lk = reciprocal_extent(xi);
    let lr = real_extent(xi);
    let mut recip = 0.0;
    for a in -lk..=lk {
        for b in -lk..=lk {
            let k2 = (a * a + b * b) as f64;
            if k2 == 0.0 {
                continue;
            }
            let w = (-PI * xi * k2).exp() / (4.0 * PI * PI * k2);
            recip += w * (2.0 * PI * (a as f64 * x[0] + b as f64 * x[1])).cos();
        }
    }
    let mut real = 0.0;
    for a in -lr..=lr {
        for b in -lr..=lr {
            if a == 0 && b == 0 {
                continue;
            }
            let d0 = x[0] + a as f64;
            let d1 = x[1] + b as f64;
            let z = PI * (d0 * d0 + d1 * d1) / xi;
            if z < 40.0 {
                real += exp_integral_e1(z);
            }
        }
    }
    // The n = 0 image with log|x| folded in.
    let own = if r2 == 0.0 {
        -EULER_GAMMA
    } else {
        e1_plus_log(PI * r2 / xi)
    } + (xi / PI).ln();
    recip + (real + own) / (4.0 * PI) - xi / (4.0 * PI)
}

/// Gradient of `G` at a nonzero torus displacement.
pub fn green_gradient(x: [f64; 2]) -> Result<[f64; 2], EwaldError> {
    let xi = 1.0;
    let y = [wrap(x[0]), wrap(x[1])];
    if y[0] * y[0] + y[1] * y[1] < 1e-300 {
        return Err(EwaldError::Singular);
    }
    let lk = reciprocal_extent(xi);
    let lr = real_extent(xi);
    let mut g = [0.0; 2];
    for a in -lk..=lk {
        for b in -lk..=lk {
            let k2 = (a * a + b * b) as f64;
            if k2 == 0.0 {
                continue;
            }
            let w = (-PI * xi * k2).exp() / (4.0 * PI * PI * k2);
            let s = (2.0 * PI * (a as f64 * y[0] + b as f64 * y[1])).sin();
            g[0] -= w * s * 2.0 * PI * a as f64;
            g[1] -= w * s * 2.0 * PI * b as f64;
        }
    }
    for a in -lr..=lr {
        for b in -lr..=lr {
            let d0 = y[0] + a as f64;
            let d1 = y[1] + b as f64;
            let r2 = d0 * d0 + d1 * d1;
            let z = PI * r2 / xi;
            if z < 40.0 {
                // d/dx E1(π r²/xi) = -exp(-z)/z · 2π x/xi = -2 exp(-z) x / r².
                let f = -2.0 * (-z).exp() / r2 / (4.0 * PI);
                g[0] += f * d0;
                g[1] += f * d1;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridField, Spectral};

    #[test]
    fn e1_reference_values() {
        // Values from Abramowitz & Stegun table 5.1.
        assert!((exp_integral_e1(0.5) - 0.559_773_594_8).abs() < 1e-9);
        assert!((exp_integral_e1(1.0) - 0.219_383_934_4).abs() < 1e-9);
        assert!((exp_integral_e1(2.0) - 0.048_900_510_7).abs() < 1e-9);
        assert!((exp_integral_e1(5.0) - 0.001_148_295_6).abs() < 1e-9);
    }

    #[test]
    fn regular_part_is_splitting_independent() {
        let r1 = green_regular_part_origin_with(1.0).unwrap();
        for xi in [0.5, 0.8, 1.7, 2.5] {
            let r = green_regular_part_origin_with(xi).unwrap();
            assert!((r - r1).abs() < 1e-8, "xi={xi}: {r} vs {r1}");
        }
    }

    #[test]
    fn regular_part_matches_small_x_limit() {
        let r0 = green_regular_part_origin();
        // ΔR = 1 near the origin and R has the square's symmetry, so
        // G(x) + log|x|/2π = R(0) + |x|²/4 + O(|x|⁴).
        for r in [1e-2, 5e-3, 2.5e-3] {
            for (c, s) in [(1.0, 0.0), (0.6, 0.8)] {
                let g = green_point([r * c, r * s]).unwrap() + f64::ln(r) / (2.0 * PI);
                assert!((g - r0 - r * r / 4.0).abs() < 10.0 * r.powi(4) + 1e-13, "r={r}");
            }
        }
    }

    #[test]
    fn regular_part_agrees_with_point_values() {
        assert!((green_regular_part([0.0, 0.0]) - green_regular_part_origin()).abs() < 1e-14);
        for x in [[0.1f64, 0.2], [-0.3, 0.05], [1e-3, -2e-3], [0.2, -0.4]] {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let want = green_point(x).unwrap() + r.ln() / (2.0 * PI);
            assert!((green_regular_part(x) - want).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn point_values_are_even_and_splitting_independent() {
        for x in [[0.1, 0.2], [0.37, -0.05], [-0.25, 0.4]] {
            let g = green_point(x).unwrap();
            assert!((g - green_point([-x[0], -x[1]]).unwrap()).abs() < 1e-14);
            assert!((g - green_point_with(x, 2.0).unwrap()).abs() < 1e-10);
            assert!((g - green_point([x[0] + 1.0, x[1] - 2.0]).unwrap()).abs() < 1e-12);
        }
        assert_eq!(green_point([0.0, 0.0]), Err(EwaldError::Singular));
        assert_eq!(green_point([1.0, -1.0]), Err(EwaldError::Singular));
    }

    #[test]
    fn antipode_matches_truncated_spectral_sum() {
        // Σ_{k≠0} (-1)^{k1+k2}/(4π²|k|²) summed over a large square box.
        let n = 512;
        let mut s = 0.0;
        for a in 0..n {
            let k1 = crate::grid::frequency(n, a);
            for b in 0..n {
                let k2 = crate::grid::frequency(n, b);
                let q = (k1 * k1 + k2 * k2) as f64;
                if q > 0.0 {
                    let sign = if (k1 + k2) % 2 == 0 { 1.0 } else { -1.0 };
                    s += sign / (4.0 * PI * PI * q);
                }
            }
        }
        let g = green_point([0.5, 0.5]).unwrap();
        assert!((g - s).abs() < 1e-7, "{g} vs {s}");
    }

    #[test]
    fn matches_mollified_spectral_green() {
        // G + |x|²/4 is harmonic off the source, so a Gaussian of width w
        // shifts G by exactly -w²/2 outside its (numerical) support.
        let n = 512;
        let w = 1.0 / n as f64;
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            let d0 = wrap(a as f64 / n as f64);
            for b in 0..n {
                let d1 = wrap(b as f64 / n as f64);
                data[a * n + b] =
                    (-(d0 * d0 + d1 * d1) / (2.0 * w * w)).exp() / (2.0 * PI * w * w);
            }
        }
        let rho = GridField::new(n, data).unwrap();
        let g = Spectral::new(n)
            .unwrap()
            .apply_multiplier(&rho, crate::grid::green_symbol);
        for (a, b) in [(4usize, 0usize), (3, 3), (10, 0), (40, 17), (256, 256)] {
            let x = [a as f64 / n as f64, b as f64 / n as f64];
            let want = green_point(x).unwrap() - w * w / 2.0;
            let got = g.get(a, b);
            assert!((got - want).abs() < 1e-5, "{x:?}: {got} vs {want}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        for x in [[0.1, 0.2], [0.33, -0.41], [-0.02, 0.3]] {
            let g = green_gradient(x).unwrap();
            for i in 0..2 {
                let mut p = x;
                let mut m = x;
                p[i] += h;
                m[i] -= h;
                let fd = (green_point(p).unwrap() - green_point(m).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7 * (1.0 + fd.abs()));
            }
        }
    }
}
