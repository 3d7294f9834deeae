//! Periodic 2-D Fourier collocation grid.
//!
//! Grid functions live on the `N x N` points `(i h, j h)` of `(0, L)^2` and are
//! stored row-major with the x index first (`values[i * n + j]`). Fourier
//! coefficients use the same layout, position `p` holding wavenumber index
//! `k = p` for `p < ceil(N/2)` and `k = p - N` otherwise, so that
//!
//! ```text
//! f[i, j] = sum_{k, l} fhat[k, l] * exp(2 pi i (k x_i + l y_j) / L)
//! ```
//!
//! With this normalization the discrete Parseval identity reads
//! `||f||_2^2 = L^2 sum |fhat|^2`.
//!
//! For even `N` the Nyquist index `-N/2` gets a zero first-derivative multiplier,
//! while the Laplacian uses the full Nyquist wavenumber.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use rustfft::num_complex::Complex64 as Complex;

/// Batched square 2-D FFT of a fixed size.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Grid values to coefficients, scaled by `1/N^2`.
    pub fn forward(&self, buf: &mut [Complex], scratch: &mut Vec<Complex>) {
        self.run(&*self.forward, buf, scratch);
        let scale = 1.0 / (self.n * self.n) as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Coefficients to grid values (unnormalized synthesis).
    pub fn inverse(&self, buf: &mut [Complex], scratch: &mut Vec<Complex>) {
        self.run(&*self.inverse, buf, scratch);
    }

    fn run(&self, plan: &dyn Fft<f64>, buf: &mut [Complex], scratch: &mut Vec<Complex>) {
        let need = self.scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex::new(0.0, 0.0));
        }
        let scratch = &mut scratch[..need];
        plan.process_with_scratch(buf, scratch);
        transpose_square(buf, self.n);
        plan.process_with_scratch(buf, scratch);
        transpose_square(buf, self.n);
    }
}

fn transpose_square(buf: &mut [Complex], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Wavenumber index stored at array position `p` for an `n`-point axis.
pub fn freq_index(p: usize, n: usize) -> i64 {
    if p < n.div_ceil(2) {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

/// Array position of wavenumber index `k`, if representable on an `n`-point axis.
pub fn freq_position(k: i64, n: usize) -> Option<usize> {
    let lo = -((n / 2) as i64);
    let hi = n.div_ceil(2) as i64 - 1;
    if k < lo || k > hi {
        None
    } else if k >= 0 {
        Some(k as usize)
    } else {
        Some((k + n as i64) as usize)
    }
}

/// Caller-owned scratch for transforms.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    buf: Vec<Complex>,
    scratch: Vec<Complex>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Real grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    n: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self {
            n,
            values: vec![c; n * n],
        }
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    /// Samples `f(x, y)` at the collocation points of `grid`.
    pub fn from_fn(grid: &SpectralGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let h = grid.h();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self - other`, pointwise.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        check_len(self.n, other.values.len())?;
        Ok(Field {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            n: self.n,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// Fourier coefficients of a grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    n: usize,
    coeffs: Vec<Complex>,
}

impl SpectralField {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coeffs: vec![Complex::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<Complex>) -> Result<Self> {
        check_len(n, coeffs.len())?;
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex] {
        &mut self.coeffs
    }

    /// Coefficient at wavenumber indices `(k, l)`.
    pub fn at(&self, k: i64, l: i64) -> Option<Complex> {
        let p = freq_position(k, self.n)?;
        let q = freq_position(l, self.n)?;
        Some(self.coeffs[p * self.n + q])
    }

    /// Largest violation of `c(-k,-l) = conj(c(k,l))`. Unpaired Nyquist rows are skipped.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in 0..n {
                let (k, l) = (freq_index(p, n), freq_index(q, n));
                let (Some(pm), Some(qm)) = (freq_position(-k, n), freq_position(-l, n)) else {
                    continue;
                };
                let d = (self.coeffs[p * n + q] - self.coeffs[pm * n + qm].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Discrete norms of a grid function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub mean: f64,
}

/// Periodic `N x N` grid on `(0, L)^2` with its eigenvalue tables.
#[derive(Clone, Debug)]
pub struct SpectralGrid {
    n: usize,
    length: f64,
    h: f64,
    /// `2 pi k / L` per axis position, Nyquist included.
    wavenumber: Vec<f64>,
    /// First-derivative multiplier per axis position (Nyquist zeroed).
    deriv: Vec<f64>,
    /// Eigenvalues of `-Delta_N`, row-major.
    lambda: Vec<f64>,
    fft: Fft2,
}

impl SpectralGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(format!("N must be at least 4, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain length must be positive, got {length}"
            )));
        }
        let wavenumber: Vec<f64> = (0..n)
            .map(|p| 2.0 * PI * freq_index(p, n) as f64 / length)
            .collect();
        let deriv = (0..n)
            .map(|p| {
                if n.is_multiple_of(2) && p == n / 2 {
                    0.0
                } else {
                    wavenumber[p]
                }
            })
            .collect();
        let mut lambda = Vec::with_capacity(n * n);
        for p in 0..n {
            for q in 0..n {
                lambda.push(wavenumber[p] * wavenumber[p] + wavenumber[q] * wavenumber[q]);
            }
        }
        Ok(Self {
            n,
            length,
            h: length / n as f64,
            wavenumber,
            deriv,
            lambda,
            fft: Fft2::new(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumber
    }

    pub fn deriv_multipliers(&self) -> &[f64] {
        &self.deriv
    }

    /// Table of `lambda_{k,l} = (2 pi k / L)^2 + (2 pi l / L)^2`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `lambda` at wavenumber indices `(k, l)`.
    pub fn lambda_at(&self, k: i64, l: i64) -> Option<f64> {
        let p = freq_position(k, self.n)?;
        let q = freq_position(l, self.n)?;
        Some(self.lambda[p * self.n + q])
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn check_field(&self, f: &Field) -> Result<()> {
        check_len(self.n, f.values.len())
    }

    pub fn check_spectral(&self, f: &SpectralField) -> Result<()> {
        check_len(self.n, f.coeffs.len())
    }

    pub fn transform(&self, f: &Field) -> Result<SpectralField> {
        let mut out = SpectralField::zeros(self.n);
        self.transform_into(f, &mut out, &mut Workspace::new())?;
        Ok(out)
    }

    pub fn transform_into(
        &self,
        f: &Field,
        out: &mut SpectralField,
        ws: &mut Workspace,
    ) -> Result<()> {
        self.check_field(f)?;
        self.check_spectral(out)?;
        for (c, &v) in out.coeffs.iter_mut().zip(&f.values) {
            *c = Complex::new(v, 0.0);
        }
        self.fft.forward(&mut out.coeffs, &mut ws.scratch);
        Ok(())
    }

    pub fn inverse_transform(&self, f: &SpectralField) -> Result<Field> {
        let mut out = Field::zeros(self.n);
        self.inverse_into(f, &mut out, &mut Workspace::new())?;
        Ok(out)
    }

    /// Synthesis keeping the real part.
    pub fn inverse_into(&self, f: &SpectralField, out: &mut Field, ws: &mut Workspace) -> Result<()> {
        self.check_spectral(f)?;
        self.check_field(out)?;
        ws.buf.clear();
        ws.buf.extend_from_slice(&f.coeffs);
        self.fft.inverse(&mut ws.buf, &mut ws.scratch);
        for (v, c) in out.values.iter_mut().zip(&ws.buf) {
            *v = c.re;
        }
        Ok(())
    }

    pub fn apply_diagonal(&self, f: &SpectralField, m: &[f64]) -> Result<SpectralField> {
        self.check_spectral(f)?;
        check_len(self.n, m.len())?;
        Ok(SpectralField {
            n: self.n,
            coeffs: f.coeffs.iter().zip(m).map(|(c, &s)| c * s).collect(),
        })
    }

    /// Spectral x- and y-derivatives of `f`.
    pub fn grad_hat(&self, f: &SpectralField) -> (SpectralField, SpectralField) {
        let n = self.n;
        let mut dx = SpectralField::zeros(n);
        let mut dy = SpectralField::zeros(n);
        for p in 0..n {
            for q in 0..n {
                let c = f.coeffs[p * n + q];
                dx.coeffs[p * n + q] = Complex::new(-c.im, c.re) * self.deriv[p];
                dy.coeffs[p * n + q] = Complex::new(-c.im, c.re) * self.deriv[q];
            }
        }
        (dx, dy)
    }

    /// Spectral divergence of the pair `(fx, fy)`.
    pub fn div_hat(&self, fx: &SpectralField, fy: &SpectralField) -> SpectralField {
        let n = self.n;
        let mut out = SpectralField::zeros(n);
        for p in 0..n {
            for q in 0..n {
                let s = fx.coeffs[p * n + q] * self.deriv[p] + fy.coeffs[p * n + q] * self.deriv[q];
                out.coeffs[p * n + q] = Complex::new(-s.im, s.re);
            }
        }
        out
    }

    pub fn grad(&self, f: &Field) -> Result<(Field, Field)> {
        let fh = self.transform(f)?;
        let (dx, dy) = self.grad_hat(&fh);
        Ok((self.inverse_transform(&dx)?, self.inverse_transform(&dy)?))
    }

    pub fn div(&self, fx: &Field, fy: &Field) -> Result<Field> {
        let ax = self.transform(fx)?;
        let ay = self.transform(fy)?;
        self.inverse_transform(&self.div_hat(&ax, &ay))
    }

    pub fn laplacian(&self, f: &Field) -> Result<Field> {
        let fh = self.transform(f)?;
        let neg: Vec<f64> = self.lambda.iter().map(|l| -l).collect();
        self.inverse_transform(&self.apply_diagonal(&fh, &neg)?)
    }

    /// `<f, g> = h^2 sum f g`.
    pub fn inner(&self, f: &Field, g: &Field) -> Result<f64> {
        self.check_field(f)?;
        self.check_field(g)?;
        Ok(self.h * self.h * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>())
    }

    /// `L^2 sum |fhat|^2`, the spectral side of Parseval.
    pub fn spectral_norm_sq(&self, f: &SpectralField) -> Result<f64> {
        self.check_spectral(f)?;
        Ok(self.length * self.length * f.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>())
    }

    pub fn norms(&self, f: &Field) -> Result<Norms> {
        self.check_field(f)?;
        let h2 = self.h * self.h;
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        let mut linf = 0.0f64;
        let mut sum = 0.0;
        for &v in &f.values {
            l1 += v.abs();
            l2 += v * v;
            linf = linf.max(v.abs());
            sum += v;
        }
        Ok(Norms {
            l1: h2 * l1,
            l2: (h2 * l2).sqrt(),
            linf,
            mean: sum / (self.n * self.n) as f64,
        })
    }

    pub fn mean(&self, f: &Field) -> Result<f64> {
        Ok(self.norms(f)?.mean)
    }
}

fn check_len(n: usize, len: usize) -> Result<()> {
    if len != n * n {
        return Err(Error::DimensionMismatch { expected: n, found: len });
    }
    Ok(())
}
