//! Periodic real fields on the unit torus `[-1/2, 1/2)^2` and their Fourier
//! representation.
//!
//! Plane waves are `exp(2πi k·x)` with integer `k`, so `-Δ` has multiplier
//! `4π²|k|²`. Sample `(a, b)` sits at `x = (-1/2 + a/n, -1/2 + b/n)` and is
//! stored row-major at `a * n + b`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid resolution {0} must be even and at least 8")]
    InvalidResolution(usize),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
    #[error("helmholtz coefficient must be nonnegative, got {0}")]
    NegativeCoefficient(f64),
}

fn check_resolution(n: usize) -> Result<(), GridError> {
    if n < 8 || n % 2 != 0 {
        return Err(GridError::InvalidResolution(n));
    }
    Ok(())
}

/// Signed frequency of array index `a` on an `n`-point axis, in `[-n/2, n/2)`.
pub fn frequency(n: usize, a: usize) -> i64 {
    if a < n / 2 {
        a as i64
    } else {
        a as i64 - n as i64
    }
}

/// Array index holding signed frequency `k`.
pub fn index_of(n: usize, k: i64) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// `4π²|k|²` for every coefficient slot, row-major.
pub fn laplace_symbol(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        let k1 = frequency(n, a) as f64;
        for b in 0..n {
            let k2 = frequency(n, b) as f64;
            out.push(4.0 * PI * PI * (k1 * k1 + k2 * k2));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    n: usize,
    data: Vec<f64>,
}

impl GridField {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, GridError> {
        check_resolution(n)?;
        if data.len() != n * n {
            return Err(GridError::LengthMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { n, data })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self, GridError> {
        Self::new(n, vec![c; n * n])
    }

    pub fn zeros(n: usize) -> Result<Self, GridError> {
        Self::constant(n, 0.0)
    }

    /// Samples `f(x1, x2)` at the grid points.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self, GridError> {
        check_resolution(n)?;
        let mut data = Vec::with_capacity(n * n);
        for a in 0..n {
            let x1 = coord(n, a);
            for b in 0..n {
                data.push(f(x1, coord(n, b)));
            }
        }
        Self::new(n, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// `∫ f g` over the torus (unit area), by the rectangle rule.
    pub fn inner(&self, other: &GridField) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(x, y)| x * y).sum::<f64>()
            / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cyclic shift: the result at `(a, b)` is the input at `(a - da, b - db)`.
    pub fn shifted(&self, da: usize, db: usize) -> GridField {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                data[((a + da) % n) * n + (b + db) % n] = self.data[a * n + b];
            }
        }
        GridField { n, data }
    }
}

/// Coordinate of index `a` along one axis.
pub fn coord(n: usize, a: usize) -> f64 {
    -0.5 + a as f64 / n as f64
}

/// Fourier coefficients `c_k` with `f(x) = Σ c_k exp(2πi k·x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient at signed frequency `(k1, k2)`, each in `[-n/2, n/2)`.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[index_of(self.n, k1) * self.n + index_of(self.n, k2)]
    }

    /// Sum of `|c_k|²`, equal to `∫ f²` for the transform of a real field.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `∫ |∇f|²` from the coefficients.
    pub fn dirichlet(&self) -> f64 {
        let sym = laplace_symbol(self.n);
        self.coeffs
            .iter()
            .zip(&sym)
            .map(|(c, s)| s * c.norm_sqr())
            .sum()
    }
}

/// Cached 2D transform plan for one resolution. Unnormalized in both
/// directions; callers divide by `n²` once per round trip.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Result<Self, GridError> {
        check_resolution(n)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.apply(&self.fwd, buf);
    }

    pub fn backward(&self, buf: &mut [Complex64]) {
        self.apply(&self.inv, buf);
    }

    fn apply(&self, fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n * self.n);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        transpose(buf, self.n);
        fft.process_with_scratch(buf, &mut scratch);
        transpose(buf, self.n);
    }

    pub fn transform(&self, f: &GridField) -> Result<SpectralField, GridError> {
        if f.n != self.n {
            return Err(GridError::ResolutionMismatch(f.n, self.n));
        }
        let n = self.n;
        let mut buf: Vec<Complex64> = f.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        let scale = 1.0 / (n * n) as f64;
        // The grid starts at -1/2, which multiplies c_k by (-1)^(k1+k2).
        for a in 0..n {
            for b in 0..n {
                let s = if (frequency(n, a) + frequency(n, b)) % 2 == 0 {
                    scale
                } else {
                    -scale
                };
                buf[a * n + b] *= s;
            }
        }
        Ok(SpectralField { n, coeffs: buf })
    }

    pub fn inverse_transform(&self, s: &SpectralField) -> Result<GridField, GridError> {
        if s.n != self.n {
            return Err(GridError::ResolutionMismatch(s.n, self.n));
        }
        let n = self.n;
        let mut buf = s.coeffs.clone();
        for a in 0..n {
            for b in 0..n {
                if (frequency(n, a) + frequency(n, b)) % 2 != 0 {
                    buf[a * n + b] = -buf[a * n + b];
                }
            }
        }
        self.backward(&mut buf);
        GridField::new(n, buf.iter().map(|c| c.re).collect())
    }

    /// Applies a real Fourier multiplier indexed like the coefficient array.
    pub fn apply_multiplier(&self, f: &GridField, mult: impl Fn(f64) -> f64) -> GridField {
        assert_eq!(f.n, self.n);
        let n = self.n;
        let mut buf: Vec<Complex64> = f.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        let sym = laplace_symbol(n);
        let scale = 1.0 / (n * n) as f64;
        for (c, s) in buf.iter_mut().zip(&sym) {
            *c *= mult(*s) * scale;
        }
        self.backward(&mut buf);
        GridField {
            n,
            data: buf.iter().map(|c| c.re).collect(),
        }
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for a in 0..n {
        for b in (a + 1)..n {
            buf.swap(a * n + b, b * n + a);
        }
    }
}

pub fn transform(f: &GridField) -> Result<SpectralField, GridError> {
    Spectral::new(f.n)?.transform(f)
}

pub fn inverse_transform(s: &SpectralField) -> Result<GridField, GridError> {
    Spectral::new(s.n)?.inverse_transform(s)
}

/// Green multiplier: `1/(4π²|k|²)` off the origin, exactly zero at `k = 0`.
pub fn green_symbol(s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        1.0 / s
    }
}

/// `G * f` for the zero-mean Laplace Green's function of the torus.
pub fn green_convolve(f: &GridField) -> GridField {
    Spectral::new(f.n)
        .expect("validated resolution")
        .apply_multiplier(f, green_symbol)
}

/// `(I - aΔ)^{-1} f`, exact on each Fourier mode.
pub fn helmholtz_solve(f: &GridField, a: f64) -> Result<GridField, GridError> {
    if !(a >= 0.0) {
        return Err(GridError::NegativeCoefficient(a));
    }
    Ok(Spectral::new(f.n)?.apply_multiplier(f, |s| 1.0 / (1.0 + a * s)))
}

/// Spectral Laplacian `Δf`.
pub fn laplacian(f: &GridField) -> GridField {
    Spectral::new(f.n)
        .expect("validated resolution")
        .apply_multiplier(f, |s| -s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: usize, seed: u64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GridField::new(n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(GridField::zeros(7).is_err());
        assert!(GridField::zeros(6).is_err());
        assert!(GridField::new(8, vec![0.0; 63]).is_err());
        assert!(GridField::new(8, vec![f64::NAN; 64]).is_err());
    }

    #[test]
    fn constant_has_only_mean_mode() {
        let s = transform(&GridField::constant(16, 2.5).unwrap()).unwrap();
        for (i, c) in s.coeffs().iter().enumerate() {
            let want = if i == 0 { 2.5 } else { 0.0 };
            assert!((c.re - want).abs() < 1e-14 && c.im.abs() < 1e-14);
        }
    }

    #[test]
    fn single_cosine_has_two_modes() {
        let f = GridField::from_fn(16, |x, _| (2.0 * PI * x).cos()).unwrap();
        let s = transform(&f).unwrap();
        for k1 in -8..8 {
            for k2 in -8..8 {
                let c = s.coeff(k1, k2);
                if k2 == 0 && (k1 == 1 || k1 == -1) {
                    assert!((c.re - 0.5).abs() < 1e-14 && c.im.abs() < 1e-14);
                } else {
                    assert!(c.norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn round_trip() {
        let f = random_field(32, 1);
        let back = inverse_transform(&transform(&f).unwrap()).unwrap();
        let err = f
            .data()
            .iter()
            .zip(back.data())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-12 * f.max_abs());
    }

    #[test]
    fn hermitian_symmetry() {
        let s = transform(&random_field(16, 2)).unwrap();
        for k1 in -7..8 {
            for k2 in -7..8 {
                let d = s.coeff(k1, k2) - s.coeff(-k1, -k2).conj();
                assert!(d.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn parseval() {
        let f = random_field(32, 3);
        let s = transform(&f).unwrap();
        let grid = f.inner(&f);
        assert!((grid - s.energy()).abs() <= 1e-10 * grid);
    }

    #[test]
    fn green_of_constant_vanishes() {
        let g = green_convolve(&GridField::constant(16, 1.0).unwrap());
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn green_of_cosine() {
        let f = GridField::from_fn(32, |x, _| (2.0 * PI * x).cos()).unwrap();
        let g = green_convolve(&f);
        for (a, b) in g.data().iter().zip(f.data()) {
            assert!((a - b / (4.0 * PI * PI)).abs() < 1e-15);
        }
    }

    #[test]
    fn green_inverts_laplacian() {
        let f = random_field(32, 4);
        let g = green_convolve(&f);
        assert!(g.mean().abs() < 1e-15);
        let lap = laplacian(&g);
        let m = f.mean();
        let res = lap
            .data()
            .iter()
            .zip(f.data())
            .fold(0.0f64, |acc, (l, v)| acc.max((-l - (v - m)).abs()));
        assert!(res <= 1e-10);
    }

    #[test]
    fn green_is_self_adjoint() {
        let f = random_field(32, 5);
        let g = random_field(32, 6);
        let lhs = green_convolve(&f).inner(&g);
        let rhs = f.inner(&green_convolve(&g));
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300));
    }

    #[test]
    fn helmholtz_examples() {
        let c = GridField::constant(16, 3.0).unwrap();
        let out = helmholtz_solve(&c, 5.0).unwrap();
        assert!(out.data().iter().all(|v| (v - 3.0).abs() < 1e-14));

        let f = GridField::from_fn(16, |x, _| (2.0 * PI * x).cos()).unwrap();
        let out = helmholtz_solve(&f, 1.0).unwrap();
        for (o, v) in out.data().iter().zip(f.data()) {
            assert!((o - v / (1.0 + 4.0 * PI * PI)).abs() < 1e-14);
        }

        let f = random_field(32, 7);
        let a = 0.37;
        let out = helmholtz_solve(&f, a).unwrap();
        let lap = laplacian(&out);
        let res = out
            .data()
            .iter()
            .zip(lap.data())
            .zip(f.data())
            .fold(0.0f64, |m, ((o, l), v)| m.max((o - a * l - v).abs()));
        assert!(res <= 1e-10);
        assert!(helmholtz_solve(&f, -1.0).is_err());
    }

    #[test]
    fn shift_commutes_with_green() {
        let f = random_field(16, 8);
        let lhs = green_convolve(&f.shifted(3, 5));
        let rhs = green_convolve(&f).shifted(3, 5);
        for (a, b) in lhs.data().iter().zip(rhs.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
