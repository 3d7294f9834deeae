//! Quick property suites behind `nss-etd check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::etdphi::{check_operator_bounds, eval_g, ratio_bound, PhiTables, BOUND_SLACK};
use crate::model::{beta, convexity_check, energy, modified_energy, stability_constants, ModelParams};
use crate::schemes::{Integrator, Scheme, StartupPolicy};
use crate::spectral::{Complex, Field, SpectralField, SpectralGrid};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.lines.push(CheckLine { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for l in &self.lines {
            writeln!(f, "{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail)?;
        }
        Ok(())
    }
}

/// Monotone `g` functions, the operator inequalities, and the contraction of `beta`.
pub fn operators(seed: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::default();
    let c = ratio_bound();
    let mut prev = eval_g(0.0)?;
    let (mut mono, mut ratio) = (0, 0);
    for i in 0..10_000 {
        let x = 1e-8 * 1e11f64.powf(i as f64 / 9_999.0);
        let g = eval_g(x)?;
        mono += usize::from(g.g0 > prev.g0 || g.g1 > prev.g1 || g.g2 > prev.g2);
        ratio += usize::from(g.g1 / g.g0 > c || g.g2 / g.g0 > c);
        prev = g;
    }
    r.push("g decreasing", mono == 0, format!("{mono} violations in 10^4 samples"));
    r.push("g ratio bound", ratio == 0, format!("{ratio} violations, bound {c:.12}"));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in [16, 32, 33] {
        let grid = SpectralGrid::new(n, 1.0)?;
        let mut bad = Vec::new();
        for _ in 0..100 {
            let dt = 10f64.powf(rng.random_range(-4.0..1.0));
            let t = PhiTables::build(&grid, 0.1, 0.25, 1.0, dt)?;
            let mut f = Field::from_values(n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect())?;
            let mean = grid.mean(&f)?;
            f.values_mut().iter_mut().for_each(|v| *v -= mean);
            bad.extend(check_operator_bounds(&grid, &t, &f)?.violations().map(|v| v.name));
        }
        r.push(format!("operator bounds N = {n}"), bad.is_empty(), format!("100 fields, violations {bad:?}"));
    }

    let mut expand = 0;
    for _ in 0..100_000 {
        let s = 10f64.powf(rng.random_range(-3.0..2.0));
        let v = [rng.random_range(-s..s), rng.random_range(-s..s)];
        let w = [rng.random_range(-s..s), rng.random_range(-s..s)];
        let (bv, bw) = (beta(v), beta(w));
        expand += usize::from((bv[0] - bw[0]).hypot(bv[1] - bw[1]) > (v[0] - w[0]).hypot(v[1] - w[1]) + BOUND_SLACK);
    }
    r.push("beta contraction", expand == 0, format!("{expand} expanding pairs of 10^5"));
    Ok(r)
}

/// Hessian sign of `H(a, b) = ln(1 + a^2 + b^2) / 2 + kappa0 (a^2 + b^2) / 2`.
pub fn convexity() -> SuiteReport {
    let mut r = SuiteReport::default();
    for (k0, expect) in [(0.05, false), (0.125, true), (0.5, true)] {
        let c = convexity_check(k0, 401);
        r.push(
            format!("convexity kappa0 = {k0}"),
            c.convex(BOUND_SLACK) == expect,
            format!("min eigenvalue {:.4e} at {:?}, convex expected {expect}", c.min_eigenvalue, c.argmin),
        );
    }
    r
}

/// Modified-energy decay of the regularized scheme and energy decay of ETD1,
/// each over `steps` steps at `dt` in `{0.01, 0.1, 1}`.
pub fn stability(steps: usize, seed: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::default();
    let grid = SpectralGrid::new(32, 1.0)?;
    let u0 = low_mode_field(&grid, seed, 4, 0.05);

    let mut p = ModelParams::new(0.1, 0.25, 0.0);
    let sc = stability_constants(&p)?;
    p.a = sc.a_min;
    for dt in [0.01, 0.1, 1.0] {
        let mut it = Integrator::new(grid.clone(), p, Scheme::Etd3)?;
        let mut s = it.init_state(&u0, 0.0, dt, StartupPolicy::CopyInitial)?;
        let mut prev = modified_energy(&grid, &u0, &u0, &u0, &sc, &p)?;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..steps {
            it.step(&mut s)?;
            let h = s.history();
            let e = modified_energy(&grid, &h[0], &h[1], &h[2], &sc, &p)?;
            worst = worst.max(e - prev);
            prev = e;
        }
        r.push(
            format!("modified energy, A = A_min, dt = {dt}"),
            worst <= 1e-10,
            format!("largest step increase {worst:.3e}"),
        );
    }

    let p = ModelParams::new(0.1, 0.125, 0.0);
    for dt in [0.01, 0.1, 1.0] {
        let mut it = Integrator::new(grid.clone(), p, Scheme::Etd1)?;
        let mut s = it.init_state(&u0, 0.0, dt, StartupPolicy::CopyInitial)?;
        let mut prev = energy(&grid, &u0, &p)?;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..steps {
            it.step(&mut s)?;
            let e = energy(&grid, s.u(), &p)?;
            worst = worst.max(e - prev);
            prev = e;
        }
        r.push(format!("ETD1 energy, dt = {dt}"), worst <= 1e-10, format!("largest step increase {worst:.3e}"));
    }
    Ok(r)
}

/// Mean-free real field with random coefficients on `1 <= max(|k|, |l|) <= kmax`.
pub fn low_mode_field(grid: &SpectralGrid, seed: u64, kmax: usize, amp: f64) -> Field {
    let n = grid.n() as i64;
    let kmax = kmax as i64;
    assert!(2 * kmax < n, "kmax must stay below the Nyquist index");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hat = SpectralField::zeros(grid.n());
    let pos = |k: i64, l: i64| (k.rem_euclid(n) * n + l.rem_euclid(n)) as usize;
    for k in -kmax..=kmax {
        for l in 0..=kmax {
            if l == 0 && k <= 0 {
                continue;
            }
            let c = Complex::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp));
            hat.coeffs_mut()[pos(k, l)] = c;
            hat.coeffs_mut()[pos(-k, -l)] = c.conj();
        }
    }
    grid.inverse_transform(&hat).expect("sizes match")
}
