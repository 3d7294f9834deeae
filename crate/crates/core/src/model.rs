//! No-slope-selection thin-film physics on a spectral grid.
//!
//! The flow is `u_t = -L_N u - f_N(u)` with `L_N = eps^2 Delta_N^2 - kappa Delta_N`
//! and `f_N(u) = div_N(grad_N u / (1 + |grad_N u|^2)) + kappa Delta_N u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etdphi::ratio_bound;
use crate::spectral::{freq_position, Complex, Fft2, Field, SpectralField, SpectralGrid, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub eps: f64,
    pub kappa: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub dealias: bool,
}

impl ModelParams {
    pub fn new(eps: f64, kappa: f64, a: f64) -> Self {
        Self {
            eps,
            kappa,
            a,
            dealias: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be nonnegative, got {}", self.kappa)));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::invalid(format!("A must be nonnegative, got {}", self.a)));
        }
        Ok(())
    }
}

/// `beta(v) = v / (1 + |v|^2)`.
pub fn beta(v: [f64; 2]) -> [f64; 2] {
    let d = 1.0 + v[0] * v[0] + v[1] * v[1];
    [v[0] / d, v[1] / d]
}

/// Evaluates `f_N` in coefficient space with reusable buffers.
///
/// The two gradient components are real, so they are synthesized together as
/// `gx + i gy` and the flux is analyzed the same way, two FFTs per call.
#[derive(Debug, Clone)]
pub struct NonlinearEvaluator {
    n: usize,
    /// Zero-padded transform for the 3/2 rule.
    padded: Option<Fft2>,
    buf: Vec<Complex>,
    scratch: Vec<Complex>,
    /// position in the work grid of each coefficient position
    map: Vec<usize>,
}

impl NonlinearEvaluator {
    pub fn new(grid: &SpectralGrid, dealias: bool) -> Self {
        let n = grid.n();
        let padded = dealias.then(|| Fft2::new((3 * n).div_ceil(2)));
        let m = padded.as_ref().map_or(n, |f| f.n());
        let axis: Vec<usize> = (0..n)
            .map(|p| freq_position(crate::spectral::freq_index(p, n), m).expect("padded grid covers base modes"))
            .collect();
        let mut map = Vec::with_capacity(n * n);
        for p in 0..n {
            for q in 0..n {
                map.push(axis[p] * m + axis[q]);
            }
        }
        Self {
            n,
            padded,
            buf: vec![Complex::new(0.0, 0.0); m * m],
            scratch: Vec::new(),
            map,
        }
    }

    pub fn dealiased(&self) -> bool {
        self.padded.is_some()
    }

    /// Writes the coefficients of `f_N(u)` into `out`.
    pub fn eval_hat(
        &mut self,
        grid: &SpectralGrid,
        u_hat: &SpectralField,
        kappa: f64,
        out: &mut SpectralField,
    ) -> Result<()> {
        grid.check_spectral(u_hat)?;
        grid.check_spectral(out)?;
        if grid.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: grid.len() });
        }
        let n = self.n;
        let fft = self.padded.as_ref().unwrap_or_else(|| grid.fft());
        let m = fft.n();
        let d = grid.deriv_multipliers();

        self.buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        let uc = u_hat.coeffs();
        for p in 0..n {
            for q in 0..n {
                let c = uc[p * n + q];
                let ic = Complex::new(-c.im, c.re);
                // gx_hat + i gy_hat
                let gx = ic * d[p];
                let gy = ic * d[q];
                self.buf[self.map[p * n + q]] = gx + Complex::new(-gy.im, gy.re);
            }
        }
        fft.inverse(&mut self.buf, &mut self.scratch);
        for z in self.buf.iter_mut() {
            let b = beta([z.re, z.im]);
            *z = Complex::new(b[0], b[1]);
        }
        fft.forward(&mut self.buf, &mut self.scratch);

        let lam = grid.lambda();
        let oc = out.coeffs_mut();
        for p in 0..n {
            for q in 0..n {
                let pos = self.map[p * n + q];
                let (pp, qq) = (pos / m, pos % m);
                let neg = ((m - pp) % m) * m + (m - qq) % m;
                let w = self.buf[pos];
                let wn = self.buf[neg].conj();
                let bx = (w + wn) * 0.5;
                let t = (w - wn) * 0.5;
                let by = Complex::new(t.im, -t.re);
                let s = bx * d[p] + by * d[q];
                oc[p * n + q] = Complex::new(-s.im, s.re) - uc[p * n + q] * (kappa * lam[p * n + q]);
            }
        }
        Ok(())
    }
}

/// `f_N(u)` on the grid.
pub fn nonlinear_f(grid: &SpectralGrid, u: &Field, p: &ModelParams) -> Result<Field> {
    let u_hat = grid.transform(u)?;
    let mut out = SpectralField::zeros(grid.n());
    NonlinearEvaluator::new(grid, p.dealias).eval_hat(grid, &u_hat, p.kappa, &mut out)?;
    grid.inverse_transform(&out)
}

/// Collocated flux `g_N(u) = beta(grad_N u) + kappa grad_N u`.
pub fn g_vector(grid: &SpectralGrid, u: &Field, p: &ModelParams) -> Result<(Field, Field)> {
    let (gx, gy) = grid.grad(u)?;
    let n = grid.n();
    let mut fx = Vec::with_capacity(n * n);
    let mut fy = Vec::with_capacity(n * n);
    for (&a, &b) in gx.values().iter().zip(gy.values()) {
        let q = beta([a, b]);
        fx.push(q[0] + p.kappa * a);
        fy.push(q[1] + p.kappa * b);
    }
    Ok((Field::from_values(n, fx)?, Field::from_values(n, fy)?))
}

/// Derived quantities of one field used by the energy and observables.
struct Derivatives {
    grad_sq: Vec<f64>,
    lap: Field,
}

fn derivatives(grid: &SpectralGrid, u: &Field) -> Result<Derivatives> {
    let mut ws = Workspace::new();
    let u_hat = grid.transform(u)?;
    let (dx, dy) = grid.grad_hat(&u_hat);
    let n = grid.n();
    let mut gx = Field::zeros(n);
    let mut gy = Field::zeros(n);
    grid.inverse_into(&dx, &mut gx, &mut ws)?;
    grid.inverse_into(&dy, &mut gy, &mut ws)?;
    let neg: Vec<f64> = grid.lambda().iter().map(|l| -l).collect();
    let mut lap = Field::zeros(n);
    grid.inverse_into(&grid.apply_diagonal(&u_hat, &neg)?, &mut lap, &mut ws)?;
    let grad_sq = gx.values().iter().zip(gy.values()).map(|(a, b)| a * a + b * b).collect();
    Ok(Derivatives { grad_sq, lap })
}

/// `E_N(u) = h^2 sum(-ln(1 + |grad u|^2) / 2) + eps^2/2 ||Delta_N u||^2`.
pub fn energy(grid: &SpectralGrid, u: &Field, p: &ModelParams) -> Result<f64> {
    let d = derivatives(grid, u)?;
    let h2 = grid.h() * grid.h();
    let log_part: f64 = d.grad_sq.iter().map(|g| -0.5 * g.ln_1p()).sum::<f64>() * h2;
    let lap_sq = grid.inner(&d.lap, &d.lap)?;
    Ok(log_part + 0.5 * p.eps * p.eps * lap_sq)
}

/// `||grad_N f||_2^2`.
pub fn grad_norm_sq(grid: &SpectralGrid, f: &Field) -> Result<f64> {
    let fh = grid.transform(f)?;
    let d = grid.deriv_multipliers();
    let n = grid.n();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            s += (d[p] * d[p] + d[q] * d[q]) * fh.coeffs()[p * n + q].norm_sqr();
        }
    }
    Ok(grid.length() * grid.length() * s)
}

/// `E_N(u^{n+1}) + gamma1 ||grad(u^{n+1} - u^n)||^2 + gamma3 ||grad(u^n - u^{n-1})||^2`.
pub fn modified_energy(
    grid: &SpectralGrid,
    u_np1: &Field,
    u_n: &Field,
    u_nm1: &Field,
    sc: &StabilityConstants,
    p: &ModelParams,
) -> Result<f64> {
    let e = energy(grid, u_np1, p)?;
    let d1 = grad_norm_sq(grid, &u_np1.sub(u_n)?)?;
    let d2 = grad_norm_sq(grid, &u_n.sub(u_nm1)?)?;
    Ok(e + sc.gamma1 * d1 + sc.gamma3 * d2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observables {
    pub t: f64,
    pub energy: f64,
    pub modified_energy: Option<f64>,
    pub roughness: f64,
    pub slope: f64,
    /// `roughness / slope`; `None` for a flat field.
    pub char_length: Option<f64>,
    pub mass_mean: f64,
}

/// Energy, roughness `h(t)`, average slope `m(t)`, length `h/m` and mean.
pub fn observables(grid: &SpectralGrid, u: &Field, p: &ModelParams, t: f64) -> Result<Observables> {
    let d = derivatives(grid, u)?;
    let count = grid.len() as f64;
    let mean = grid.mean(u)?;
    let var = u.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    let slope_sq = d.grad_sq.iter().sum::<f64>() / count;
    let h2 = grid.h() * grid.h();
    let energy = d.grad_sq.iter().map(|g| -0.5 * g.ln_1p()).sum::<f64>() * h2
        + 0.5 * p.eps * p.eps * grid.inner(&d.lap, &d.lap)?;
    let roughness = var.sqrt();
    let slope = slope_sq.sqrt();
    Ok(Observables {
        t,
        energy,
        modified_energy: None,
        roughness,
        slope,
        char_length: (slope > 0.0).then(|| roughness / slope),
        mass_mean: mean,
    })
}

/// Constants of the modified-energy stability estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityConstants {
    pub kappa: f64,
    pub eps: f64,
    pub kappa0: f64,
    pub kappa_star: f64,
    pub c4: f64,
    pub c5: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma0: f64,
    pub alpha0: f64,
    pub a_min: f64,
    /// `kappa >= 1/4`, required for the estimate.
    pub hypotheses_met: bool,
}

impl StabilityConstants {
    pub fn warning(&self) -> Option<String> {
        (!self.hypotheses_met).then(|| {
            format!(
                "kappa = {} < 1/4: kappa* = {} falls below kappa/2, the stability estimate does not apply",
                self.kappa, self.kappa_star
            )
        })
    }

    /// Does `a` meet the regularization requirement?
    pub fn admits(&self, a: f64) -> bool {
        self.hypotheses_met && a >= self.a_min
    }
}

pub fn stability_constants(p: &ModelParams) -> Result<StabilityConstants> {
    p.validate()?;
    let kappa = p.kappa;
    let c4 = ratio_bound();
    let k1 = 1.0 + kappa;
    let gamma1 = 1.5 * c4 * k1;
    let gamma2 = c4 * k1;
    let gamma3 = 0.5 * c4 * k1;
    let gamma0 = gamma1 + gamma2 + gamma3;
    let alpha0 = ((gamma0 + 0.5 * kappa) / (gamma0 - 0.5 * kappa)).ln();
    let a_min = (gamma0 - 0.25 * kappa).powi(4) / (alpha0 * alpha0) / (p.eps * p.eps);
    Ok(StabilityConstants {
        kappa,
        eps: p.eps,
        kappa0: 0.125,
        kappa_star: kappa - 0.125,
        c4,
        c5: c4,
        gamma1,
        gamma2,
        gamma3,
        gamma0,
        alpha0,
        a_min,
        hypotheses_met: kappa >= 0.25,
    })
}

/// Lower bound of the energy on `(0, L)^2`:
/// `L^2/2 (ln(4 eps^2 pi^2 / L^2) - 4 eps^2 pi^2 / L^2 + 1)`.
pub fn energy_lower_bound(eps: f64, length: f64) -> Result<f64> {
    if !(eps > 0.0 && length > 0.0) {
        return Err(Error::invalid("eps and L must be positive"));
    }
    let r = 4.0 * eps * eps * std::f64::consts::PI.powi(2) / (length * length);
    Ok(0.5 * length * length * (r.ln() - r + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityReport {
    pub kappa0: f64,
    pub min_eigenvalue: f64,
    pub argmin: (f64, f64),
    pub samples: usize,
}

impl ConvexityReport {
    pub fn convex(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol
    }
}

/// Smallest Hessian eigenvalue of `H(a,b) = ln(1 + a^2 + b^2)/2 + kappa0 (a^2 + b^2)/2`
/// over a `samples x samples` grid on `[-50, 50]^2`.
pub fn convexity_check(kappa0: f64, samples: usize) -> ConvexityReport {
    let samples = samples.max(2);
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for i in 0..samples {
        let a = -50.0 + 100.0 * i as f64 / (samples - 1) as f64;
        for j in 0..samples {
            let b = -50.0 + 100.0 * j as f64 / (samples - 1) as f64;
            let r2 = 1.0 + a * a + b * b;
            let r4 = r2 * r2;
            let haa = (1.0 + b * b - a * a) / r4 + kappa0;
            let hbb = (1.0 + a * a - b * b) / r4 + kappa0;
            let hab = -2.0 * a * b / r4;
            let mean = 0.5 * (haa + hbb);
            let rad = (0.25 * (haa - hbb).powi(2) + hab * hab).sqrt();
            let lo = mean - rad;
            if lo < best.0 {
                best = (lo, (a, b));
            }
        }
    }
    ConvexityReport {
        kappa0,
        min_eigenvalue: best.0,
        argmin: best.1,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: &SpectralGrid, seed: u64, amp: f64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n();
        Field::from_values(n, (0..n * n).map(|_| rng.random_range(-amp..amp)).collect()).unwrap()
    }

    #[test]
    fn constant_field_has_zero_flux() {
        let grid = SpectralGrid::new(16, 1.0).unwrap();
        let p = ModelParams::new(0.1, 0.25, 0.0);
        let f = nonlinear_f(&grid, &Field::constant(16, 3.0), &p).unwrap();
        assert!(grid.norms(&f).unwrap().linf < 1e-14);
        let (gx, gy) = g_vector(&grid, &Field::constant(16, 3.0), &p).unwrap();
        assert!(grid.norms(&gx).unwrap().linf < 1e-14 && grid.norms(&gy).unwrap().linf < 1e-14);
    }

    #[test]
    fn small_amplitude_linearization() {
        let grid = SpectralGrid::new(16, 1.0).unwrap();
        let a = 1e-6;
        let p = ModelParams::new(0.1, 0.0, 0.0);
        let u = Field::from_fn(&grid, |x, _| a * (2.0 * PI * x).sin());
        let f = nonlinear_f(&grid, &u, &p).unwrap();
        let expect = u.scaled(-(2.0 * PI).powi(2));
        assert!(grid.norms(&f.sub(&expect).unwrap()).unwrap().linf < a * a);
    }

    /// Independent route: analytic gradient sampled at the collocation points,
    /// pointwise flux, then a separate spectral divergence.
    #[test]
    fn matches_analytic_gradient_oracle() {
        let n = 33;
        let grid = SpectralGrid::new(n, 1.0).unwrap();
        let p = ModelParams::new(0.5, 0.0, 0.0);
        let u = Field::from_fn(&grid, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        let f = nonlinear_f(&grid, &u, &p).unwrap();

        let tp = 2.0 * PI;
        let grad = |x: f64, y: f64| [tp * (tp * x).cos() * (tp * y).cos(), -tp * (tp * x).sin() * (tp * y).sin()];
        let bx = Field::from_fn(&grid, |x, y| beta(grad(x, y))[0]);
        let by = Field::from_fn(&grid, |x, y| beta(grad(x, y))[1]);
        let oracle = grid.div(&bx, &by).unwrap();
        let err = grid.norms(&f.sub(&oracle).unwrap()).unwrap().linf;
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn flux_divergence_identity_and_zero_mean() {
        for n in [15, 16] {
            let grid = SpectralGrid::new(n, 1.0).unwrap();
            let p = ModelParams::new(0.1, 0.3, 0.0);
            let mut u = random_field(&grid, 21, 1.0);
            if n % 2 == 0 {
                // Remove Nyquist content: div_N grad_N and Delta_N differ there.
                let mut uh = grid.transform(&u).unwrap();
                for (m, c) in uh.coeffs_mut().iter_mut().enumerate() {
                    if m / n == n / 2 || m % n == n / 2 {
                        *c = Complex::new(0.0, 0.0);
                    }
                }
                u = grid.inverse_transform(&uh).unwrap();
            }
            let f = nonlinear_f(&grid, &u, &p).unwrap();
            let (gx, gy) = g_vector(&grid, &u, &p).unwrap();
            let dg = grid.div(&gx, &gy).unwrap();
            let nf = grid.norms(&f).unwrap();
            assert!(grid.norms(&f.sub(&dg).unwrap()).unwrap().linf <= 1e-12 * nf.linf.max(1.0));
            assert!(nf.mean.abs() <= 1e-12 * nf.l2);
        }
    }

    #[test]
    fn beta_is_a_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100_000 {
            let s = 10f64.powf(rng.random_range(-3.0..2.0));
            let v = [rng.random_range(-s..s), rng.random_range(-s..s)];
            let w = [rng.random_range(-s..s), rng.random_range(-s..s)];
            let (bv, bw) = (beta(v), beta(w));
            let lhs = (bv[0] - bw[0]).hypot(bv[1] - bw[1]);
            let rhs = (v[0] - w[0]).hypot(v[1] - w[1]);
            assert!(lhs <= rhs, "{v:?} {w:?}");
        }
    }

    #[test]
    fn dealiased_matches_collocation_for_smooth_small_data() {
        let grid = SpectralGrid::new(32, 1.0).unwrap();
        let u = Field::from_fn(&grid, |x, y| 0.01 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        let mut p = ModelParams::new(0.1, 0.2, 0.0);
        let a = nonlinear_f(&grid, &u, &p).unwrap();
        p.dealias = true;
        let b = nonlinear_f(&grid, &u, &p).unwrap();
        // Both resolve the flux to well below the cubic correction.
        assert!(grid.norms(&a.sub(&b).unwrap()).unwrap().linf < 1e-12);
        assert!(grid.norms(&b).unwrap().mean.abs() < 1e-15);
    }

    #[test]
    fn energy_values() {
        // The log integrand has complex singularities close to the real axis,
        // so the periodic trapezoid rule needs a fine grid to reach 1e-8.
        let grid = SpectralGrid::new(256, 1.0).unwrap();
        let p = ModelParams::new(0.5, 0.125, 0.0);
        assert_eq!(energy(&grid, &Field::zeros(256), &p).unwrap(), 0.0);

        // Oracle: fine midpoint quadrature of the continuous energy of sin(2 pi x).
        let u = Field::from_fn(&grid, |x, _| (2.0 * PI * x).sin());
        let e = energy(&grid, &u, &p).unwrap();
        let m = 1 << 15;
        let mut log_part = 0.0;
        for i in 0..m {
            let x = (i as f64 + 0.5) / m as f64;
            let ux = 2.0 * PI * (2.0 * PI * x).cos();
            log_part += -0.5 * (ux * ux).ln_1p() / m as f64;
        }
        let lap_sq = (2.0 * PI).powi(4) * 0.5;
        let oracle = log_part + 0.5 * 0.25 * lap_sq;
        assert!((e - oracle).abs() < 1e-8, "{e} vs {oracle}");
    }

    #[test]
    fn modified_energy_corrections() {
        let grid = SpectralGrid::new(16, 1.0).unwrap();
        let p = ModelParams::new(0.1, 0.25, 1.0);
        let sc = stability_constants(&p).unwrap();
        let u = random_field(&grid, 1, 0.1);
        let e = energy(&grid, &u, &p).unwrap();
        assert_eq!(modified_energy(&grid, &u, &u, &u, &sc, &p).unwrap(), e);
        for s in 0..10 {
            let a = random_field(&grid, 10 + s, 0.1);
            let b = random_field(&grid, 20 + s, 0.1);
            let c = random_field(&grid, 30 + s, 0.1);
            assert!(modified_energy(&grid, &a, &b, &c, &sc, &p).unwrap() >= energy(&grid, &a, &p).unwrap());
        }
    }

    #[test]
    fn observables_of_simple_fields() {
        let grid = SpectralGrid::new(16, 1.0).unwrap();
        let p = ModelParams::new(0.1, 0.25, 0.0);
        let o = observables(&grid, &Field::constant(16, 5.0), &p, 0.0).unwrap();
        assert_eq!((o.roughness, o.slope, o.char_length), (0.0, 0.0, None));
        assert!((o.mass_mean - 5.0).abs() < 1e-15);
        let u = Field::from_fn(&grid, |x, _| (2.0 * PI * x).sin());
        let o = observables(&grid, &u, &p, 1.5).unwrap();
        assert!((o.roughness - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((o.slope - 2.0 * PI / 2f64.sqrt()).abs() < 1e-13);
        assert!((o.char_length.unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!((o.energy - energy(&grid, &u, &p).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn constants_at_quarter_kappa() {
        let sc = stability_constants(&ModelParams::new(0.1, 0.25, 0.0)).unwrap();
        assert_eq!(sc.kappa0, 0.125);
        assert!((sc.c4 - 1.156_517_642_749_665_7).abs() < 1e-15);
        assert!((sc.gamma0 - 4.336_941_160_311_246).abs() < 1e-14);
        assert_eq!(sc.gamma0, sc.gamma1 + sc.gamma2 + sc.gamma3);
        assert!((sc.alpha0 - 0.057_660_284_444_036_67).abs() < 1e-15);
        assert!(((sc.alpha0.exp() - (sc.gamma0 + 0.125) / (sc.gamma0 - 0.125)) / sc.alpha0.exp()).abs() < 1e-14);
        assert!((sc.a_min / 10_040_695.851_481_782 - 1.0).abs() < 1e-13);
        assert!(sc.hypotheses_met && sc.warning().is_none());

        let weak = stability_constants(&ModelParams::new(0.5, 0.125, 1.0)).unwrap();
        assert!(!weak.hypotheses_met && weak.warning().is_some());
        assert!(weak.a_min.is_finite());
    }

    #[test]
    fn energy_bound_values() {
        let g = energy_lower_bound(0.02, 12.8).unwrap();
        assert!((g - (-675.617_063_136_806_8)).abs() < 1e-9);
        let eps = 2.0 / (2.0 * PI);
        assert!(energy_lower_bound(eps, 2.0).unwrap().abs() < 1e-14);
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let e = energy_lower_bound(i as f64 * 1e-3, 3.2).unwrap();
            assert!(e > prev);
            prev = e;
        }
        assert!(energy_lower_bound(0.0, 1.0).is_err());
    }

    #[test]
    fn convexity_threshold() {
        assert!(convexity_check(0.125, 401).convex(1e-12));
        assert!(convexity_check(0.5, 401).min_eigenvalue > 0.0);
        let r = convexity_check(0.05, 401);
        assert!(r.min_eigenvalue < 0.0);
    }
}
