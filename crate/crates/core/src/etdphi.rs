//! The `g_0, g_1, g_2` function family and the per-mode multiplier tables of
//! the ETD schemes.
//!
//! ```text
//! g0(x) = (1 - e^-x) / x
//! g1(x) = (1 - g0(x)) / x        = (x - 1 + e^-x) / x^2
//! g2(x) = (1 - 2 g1(x)) / x      = (x^2 - 2x + 2 - 2 e^-x) / x^3
//! ```
//!
//! Each is `int_0^1 c s^j e^{-x (1 - s)} ds` for a constant `c`, hence
//! positive and decreasing on `[0, inf)` with `g(0) = (1, 1/2, 1/3)`.

use crate::error::{Error, Result};
use crate::spectral::{freq_index, Field, SpectralGrid};

/// Below this argument the Taylor series is used.
pub const SERIES_THRESHOLD: f64 = 1.0;

/// Above this argument `e^-x` is flushed to zero.
pub const EXP_CUTOFF: f64 = 700.0;

const SERIES_TERMS: usize = 22;

/// `1 / (1 - e^-2)`, the bound on `g1/g0` and `g2/g0`.
pub fn ratio_bound() -> f64 {
    1.0 / (1.0 - (-2.0f64).exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GValues {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
}

/// Nonnegative, finite argument `x = dt * Lambda`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct StiffScalar(f64);

impl StiffScalar {
    pub fn new(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::invalid(format!(
                "g-function argument must be finite and nonnegative, got {x}"
            )));
        }
        Ok(Self(x))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn eval(self) -> GValues {
        let x = self.0;
        if x < SERIES_THRESHOLD {
            series(x)
        } else {
            closed_form(x)
        }
    }
}

pub fn eval_g(x: f64) -> Result<GValues> {
    Ok(StiffScalar::new(x)?.eval())
}

/// `g_j(x) = c_j sum_n (-x)^n / (n + j + 1)!`, by Horner from the tail.
fn series(x: f64) -> GValues {
    // 1/(m)! for m = 1..=SERIES_TERMS + 3
    let mut inv_fact = [0.0f64; SERIES_TERMS + 4];
    inv_fact[0] = 1.0;
    for m in 1..inv_fact.len() {
        inv_fact[m] = inv_fact[m - 1] / m as f64;
    }
    let y = -x;
    let horner = |offset: usize| {
        let mut acc = 0.0;
        for n in (0..SERIES_TERMS).rev() {
            acc = acc * y + inv_fact[n + offset];
        }
        acc
    };
    GValues {
        g0: horner(1),
        g1: horner(2),
        g2: 2.0 * horner(3),
    }
}

fn closed_form(x: f64) -> GValues {
    let one_minus_e = if x > EXP_CUTOFF { 1.0 } else { -(-x).exp_m1() };
    let g0 = one_minus_e / x;
    let g1 = (1.0 - g0) / x;
    let g2 = (1.0 - 2.0 * g1) / x;
    GValues { g0, g1, g2 }
}

/// Per-mode multipliers for one `(grid, eps, kappa, A, dt)` tuple.
///
/// Every table is indexed like the grid's coefficient arrays. Zero-mode
/// entries are the `x -> 0` limits.
#[derive(Clone, Debug)]
pub struct PhiTables {
    pub dt: f64,
    pub eps: f64,
    pub kappa: f64,
    pub a: f64,
    /// `Lambda = eps^2 lambda^2 + kappa lambda`, eigenvalues of `L_N`.
    pub big_lambda: Vec<f64>,
    pub exp_neg: Vec<f64>,
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    /// `g1 / g0`
    pub g1_op: Vec<f64>,
    /// `g2 / g0`
    pub g2_op: Vec<f64>,
    /// `1 / g0`
    pub cal_g: Vec<f64>,
    /// `sqrt(1 / g0)`
    pub cal_g_half: Vec<f64>,
    /// `A dt^3 phi0 lambda^2`
    pub reg: Vec<f64>,
    /// `1 + reg`
    pub reg_denom: Vec<f64>,
}

impl PhiTables {
    pub fn build(grid: &SpectralGrid, eps: f64, kappa: f64, a: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be positive, got {eps}")));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be nonnegative, got {kappa}")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("A must be nonnegative, got {a}")));
        }
        let len = grid.len();
        let mut t = PhiTables {
            dt,
            eps,
            kappa,
            a,
            big_lambda: Vec::with_capacity(len),
            exp_neg: Vec::with_capacity(len),
            phi0: Vec::with_capacity(len),
            phi1: Vec::with_capacity(len),
            phi2: Vec::with_capacity(len),
            g1_op: Vec::with_capacity(len),
            g2_op: Vec::with_capacity(len),
            cal_g: Vec::with_capacity(len),
            cal_g_half: Vec::with_capacity(len),
            reg: Vec::with_capacity(len),
            reg_denom: Vec::with_capacity(len),
        };
        let dt3 = dt * dt * dt;
        for &lam in grid.lambda() {
            let big = eps * eps * lam * lam + kappa * lam;
            let x = dt * big;
            let g = eval_g(x)?;
            let e = if x > EXP_CUTOFF { 0.0 } else { (-x).exp() };
            let reg = a * dt3 * g.g0 * lam * lam;
            t.big_lambda.push(big);
            t.exp_neg.push(e);
            t.phi0.push(g.g0);
            t.phi1.push(g.g1);
            t.phi2.push(g.g2);
            t.g1_op.push(g.g1 / g.g0);
            t.g2_op.push(g.g2 / g.g0);
            let cal_g = if x < SERIES_THRESHOLD {
                1.0 / g.g0
            } else {
                x / (1.0 - e)
            };
            t.cal_g.push(cal_g);
            t.cal_g_half.push(cal_g.sqrt());
            t.reg.push(reg);
            t.reg_denom.push(1.0 + reg);
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.phi0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi0.is_empty()
    }

    /// Do the tables belong to these parameters?
    pub fn matches(&self, eps: f64, kappa: f64, a: f64, dt: f64) -> bool {
        self.eps == eps && self.kappa == kappa && self.a == a && self.dt == dt
    }
}

/// One inequality of the operator-bound report.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    /// Claimed `lhs <= rhs`.
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
    /// Mode `(k, l, dt*Lambda)` with the worst per-mode margin, set on failure.
    pub worst_mode: Option<(i64, i64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBoundsReport {
    pub checks: Vec<BoundCheck>,
}

impl OperatorBoundsReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Relative slack applied to every inequality.
pub const BOUND_SLACK: f64 = 1e-12;

/// Evaluates the operator inequalities for a mean-zero `f` in physical space.
///
/// Checked, with `C = 1/(1 - e^-2)`:
/// 1. `||f|| <= ||G0 f||` with `G0 = (1/phi0)^(1/2)`
/// 2. `dt <L f, f> <= <G f, f>` with `G = 1/phi0`
/// 3. `0 <= <L f, -Delta e^{-dt L} f>`
/// 4. `||G1 f|| <= C ||f||` and `||G2 f|| <= C ||f||`
pub fn check_operator_bounds(
    grid: &SpectralGrid,
    tables: &PhiTables,
    f: &Field,
) -> Result<OperatorBoundsReport> {
    grid.check_field(f)?;
    if tables.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.n(),
            found: tables.len(),
        });
    }
    let fh = grid.transform(f)?;
    let apply = |m: &[f64]| -> Result<Field> { grid.inverse_transform(&grid.apply_diagonal(&fh, m)?) };
    let c = ratio_bound();
    let dt = tables.dt;

    let norm = |g: &Field| -> Result<f64> { Ok(grid.inner(g, g)?.sqrt()) };
    let nf = norm(f)?;

    let g0f = apply(&tables.cal_g_half)?;
    let lf = apply(&tables.big_lambda)?;
    let gf = apply(&tables.cal_g)?;
    let lap_exp: Vec<f64> = grid
        .lambda()
        .iter()
        .zip(&tables.exp_neg)
        .map(|(l, e)| l * e)
        .collect();
    let lap_exp_f = apply(&lap_exp)?;
    let g1f = apply(&tables.g1_op)?;
    let g2f = apply(&tables.g2_op)?;

    // Per-mode margins (rhs - lhs multipliers) for diagnostics.
    let n = grid.n();
    let worst = |margin: &dyn Fn(usize) -> f64| -> Option<(i64, i64, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for m in 0..grid.len() {
            if fh.coeffs()[m].norm() == 0.0 {
                continue;
            }
            let v = margin(m);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((m, v));
            }
        }
        best.map(|(m, _)| (freq_index(m / n, n), freq_index(m % n, n), dt * tables.big_lambda[m]))
    };

    let mut checks = Vec::new();
    let mut push = |name: &'static str, lhs: f64, rhs: f64, margin: &dyn Fn(usize) -> f64| {
        let scale = lhs.abs().max(rhs.abs());
        let passed = lhs <= rhs + BOUND_SLACK * scale;
        checks.push(BoundCheck {
            name,
            lhs,
            rhs,
            passed,
            worst_mode: if passed { None } else { worst(margin) },
        });
    };

    push("norm_le_g0_norm", nf, norm(&g0f)?, &|m| tables.cal_g_half[m] - 1.0);
    push(
        "dt_l_le_g",
        dt * grid.inner(&lf, f)?,
        grid.inner(&gf, f)?,
        &|m| tables.cal_g[m] - dt * tables.big_lambda[m],
    );
    push(
        "l_dot_neg_lap_exp_nonneg",
        0.0,
        grid.inner(&lf, &lap_exp_f)?,
        &|m| tables.big_lambda[m] * lap_exp[m],
    );
    push("g1_bounded", norm(&g1f)?, c * nf, &|m| c - tables.g1_op[m]);
    push("g2_bounded", norm(&g2f)?, c * nf, &|m| c - tables.g2_op[m]);
    Ok(OperatorBoundsReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// (x, g0, g1, g2) evaluated with 50-digit arithmetic (mpmath).
    const REFERENCE: &[(f64, f64, f64, f64)] = &[
        (0.0, 1.0, 0.5, 0.33333333333333333333),
        (1e-12, 0.9999999999995, 0.49999999999983333333, 0.33333333333324945569),
        (1e-9, 0.99999999950000000017, 0.49999999983333333337, 0.33333333325000000002),
        (1e-6, 0.99999950000016666662, 0.49999983333337499999, 0.33333325000001666666),
        (1e-4, 0.99995000166662500083, 0.49998333374999166681, 0.33332500016666388893),
        (1e-3, 0.99950016662500833194, 0.49983337499166805536, 0.33325001666388928566),
        (5e-3, 0.99750416146353732949, 0.49916770729253410257, 0.33291708298635897206),
        (1e-2, 0.99501662508319464261, 0.49833749168053573906, 0.33250166389285218805),
        (2e-2, 0.99006633466223488896, 0.49668326688825555204, 0.33167331117444479647),
        (0.1, 0.95162581964040426836, 0.48374180359595731642, 0.3251639280808536715),
        (0.5, 0.78693868057473315279, 0.42612263885053369442, 0.29550944459786522234),
        (0.999, 0.63238488026660368247, 0.36798310283623255008, 0.2642980924199548547),
        (1.0, 0.6321205588285576784, 0.3678794411714423216, 0.26424111765711535681),
        (1.001, 0.63185639799331313682, 0.36777582618050635682, 0.26418416347551177458),
        (2.0, 0.43233235838169365405, 0.28383382080915317297, 0.21616617919084682703),
        (5.0, 0.19865241060018290658, 0.16026951787996341868, 0.13589219284801463253),
        (10.0, 0.099995460007023751515, 0.090000453999297624849, 0.08199990920014047503),
        (37.5, 0.026666666666666665287, 0.025955555555555555592, 0.025282370370370370368),
        (100.0, 0.01, 0.0099, 0.009802),
        (700.0, 0.0014285714285714285714, 0.0014265306122448979592, 0.0014244956268221574344),
        (1000.0, 0.001, 0.000999, 0.000998002),
        (1e6, 1.0e-6, 9.99999e-7, 9.99998000002e-7),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn matches_high_precision_reference() {
        for &(x, g0, g1, g2) in REFERENCE {
            let g = eval_g(x).unwrap();
            assert!(rel(g.g0, g0) <= 1e-13, "g0({x}) = {} vs {g0}", g.g0);
            assert!(rel(g.g1, g1) <= 1e-13, "g1({x}) = {} vs {g1}", g.g1);
            assert!(rel(g.g2, g2) <= 1e-13, "g2({x}) = {} vs {g2}", g.g2);
        }
    }

    #[test]
    fn zero_limit_and_tiny_argument() {
        assert_eq!(eval_g(0.0).unwrap(), GValues { g0: 1.0, g1: 0.5, g2: 1.0 / 3.0 });
        let g = eval_g(1e-9).unwrap();
        assert!((g.g0 - (1.0 - 5e-10)).abs() < 1e-18);
        assert!((g.g1 - (0.5 - 1e-9 / 6.0)).abs() < 1e-18);
        assert!((g.g2 - (1.0 / 3.0 - 1e-9 / 12.0)).abs() < 1e-17);
        let g = eval_g(2.0).unwrap();
        assert!((g.g0 - 0.432_332_358_381_693_65).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(eval_g(-1e-300).is_err());
        assert!(eval_g(f64::NAN).is_err());
        assert!(eval_g(f64::INFINITY).is_err());
    }

    #[test]
    fn branches_agree_near_threshold() {
        for i in -50..=50 {
            let x = SERIES_THRESHOLD * (1.0 + i as f64 * 1e-3);
            let s = series(x);
            let c = closed_form(x);
            assert!(rel(s.g0, c.g0) < 1e-12 && rel(s.g1, c.g1) < 1e-12 && rel(s.g2, c.g2) < 1e-12);
        }
    }

    #[test]
    fn large_arguments_reduce_to_rational_forms() {
        let x = 800.0;
        let g = eval_g(x).unwrap();
        assert!(rel(g.g0, 1.0 / x) < 1e-15);
        assert!(rel(g.g1, (x - 1.0) / (x * x)) < 1e-14);
        assert!(rel(g.g2, (x * x - 2.0 * x + 2.0) / (x * x * x)) < 1e-14);
    }

    #[test]
    fn monotone_with_bounded_ratios() {
        let c = ratio_bound();
        let xs: Vec<f64> = (0..10_000).map(|i| 1e-8 * (1e10f64).powf(i as f64 / 9_999.0)).collect();
        let mut prev = eval_g(0.0).unwrap();
        for &x in &xs {
            let g = eval_g(x).unwrap();
            assert!(g.g0 <= prev.g0 + 1e-14 && g.g1 <= prev.g1 + 1e-14 && g.g2 <= prev.g2 + 1e-14, "x={x}");
            assert!(g.g1 / g.g0 <= c && g.g2 / g.g0 <= c);
            assert!(1.0 / g.g0 >= 1.0 && 1.0 / g.g0 <= 1.0 + x + 1e-12 * (1.0 + x));
            prev = g;
        }
    }

    fn convergence_grid() -> (SpectralGrid, PhiTables) {
        let grid = SpectralGrid::new(64, 1.0).unwrap();
        let dt = 0.5 * grid.h();
        let t = PhiTables::build(&grid, 0.5, 0.125, 1.0, dt).unwrap();
        (grid, t)
    }

    #[test]
    fn table_zero_mode_and_sample_mode() {
        let (grid, t) = convergence_grid();
        assert_eq!(t.exp_neg[0], 1.0);
        assert_eq!((t.phi0[0], t.phi1[0], t.phi2[0]), (1.0, 0.5, 1.0 / 3.0));
        assert_eq!((t.g1_op[0], t.g2_op[0], t.cal_g[0], t.reg_denom[0]), (0.5, 1.0 / 3.0, 1.0, 1.0));
        // mode (1, 0): lambda = (2 pi)^2, Lambda = 0.25 lambda^2 + 0.125 lambda
        let m = grid.n();
        assert!(rel(t.big_lambda[m], 394.571_166_336_554_43) < 1e-14);
        let g = eval_g(t.dt * t.big_lambda[m]).unwrap();
        assert_eq!((t.phi0[m], t.phi1[m], t.phi2[m]), (g.g0, g.g1, g.g2));
        let lam = (2.0 * PI).powi(2);
        assert!(rel(t.reg_denom[m], 1.0 + t.dt.powi(3) * g.g0 * lam * lam) < 1e-15);
    }

    #[test]
    fn table_invariants() {
        let c = ratio_bound();
        for dt in [1e-4, 0.01, 1.0, 100.0] {
            let grid = SpectralGrid::new(32, 1.0).unwrap();
            let t = PhiTables::build(&grid, 0.1, 0.25, 3.0, dt).unwrap();
            for m in 0..t.len() {
                assert!(t.phi0[m] > 0.0 && t.phi0[m] <= 1.0);
                assert!(t.phi1[m] > 0.0 && t.phi1[m] <= 0.5);
                assert!(t.phi2[m] > 0.0 && t.phi2[m] <= 1.0 / 3.0);
                assert!(t.g1_op[m] <= c && t.g2_op[m] <= c);
                assert!(t.cal_g[m] >= 1.0 && t.cal_g[m] >= dt * t.big_lambda[m]);
                assert!(t.reg_denom[m] >= 1.0);
            }
        }
    }

    #[test]
    fn build_rejects_bad_parameters() {
        let grid = SpectralGrid::new(8, 1.0).unwrap();
        assert!(PhiTables::build(&grid, 0.1, 0.25, 1.0, 0.0).is_err());
        assert!(PhiTables::build(&grid, 0.0, 0.25, 1.0, 0.1).is_err());
        assert!(PhiTables::build(&grid, 0.1, -1.0, 1.0, 0.1).is_err());
        assert!(PhiTables::build(&grid, 0.1, 0.25, -1.0, 0.1).is_err());
    }

    #[test]
    fn operator_bounds_single_mode_and_zero() {
        let (grid, t) = convergence_grid();
        let f = Field::from_fn(&grid, |x, _| (2.0 * PI * x).sin());
        let r = check_operator_bounds(&grid, &t, &f).unwrap();
        assert!(r.all_passed(), "{r:?}");
        // strict margins on a single nonzero mode
        assert!(r.checks.iter().all(|c| c.lhs < c.rhs));

        let r = check_operator_bounds(&grid, &t, &Field::zeros(grid.n())).unwrap();
        assert!(r.all_passed());
        assert!(r.checks.iter().all(|c| c.lhs == 0.0 && c.rhs == 0.0));
    }

    #[test]
    fn operator_bounds_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = SpectralGrid::new(32, 1.0).unwrap();
        for trial in 0..100 {
            let dt = 10f64.powf(rng.random_range(-4.0..1.0));
            let t = PhiTables::build(&grid, 0.1, 0.25, 1.0, dt).unwrap();
            let mut f = Field::from_values(32, (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let mean = grid.mean(&f).unwrap();
            f.values_mut().iter_mut().for_each(|v| *v -= mean);
            let r = check_operator_bounds(&grid, &t, &f).unwrap();
            assert!(r.all_passed(), "trial {trial}: {r:?}");
        }
    }

    #[test]
    fn violation_reports_mode() {
        let (grid, mut t) = convergence_grid();
        // Corrupt one multiplier so the G1 bound fails there.
        let m = 2 * grid.n() + 1;
        t.g1_op[m] = 10.0;
        let f = Field::from_fn(&grid, |x, y| (2.0 * PI * (2.0 * x + y)).sin());
        let r = check_operator_bounds(&grid, &t, &f).unwrap();
        let bad: Vec<_> = r.violations().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].name, "g1_bounded");
        let (k, l, _) = bad[0].worst_mode.unwrap();
        assert_eq!((k, l), (2, 1));
    }
}
