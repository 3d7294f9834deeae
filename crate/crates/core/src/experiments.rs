//! Manufactured-solution accuracy study, coarsening runs, and scaling fits.

use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{write_checkpoint, Checkpoint};
use crate::config::{ConvergenceConfig, InitialData, InitialKind, RunConfig, Segment};
use crate::error::{Error, Result};
use crate::model::{modified_energy, observables, stability_constants, ModelParams, NonlinearEvaluator, Observables};
use crate::schemes::{Forcing, Integrator, Scheme, SchemeState, StartupPolicy};
use crate::series::write_trace;
use crate::spectral::{Complex, Field, SpectralField, SpectralGrid};

/// Exact profile `U(x, y, t) = S(x, y) cos t` and the source that makes it
/// solve the semi-discrete problem.
#[derive(Clone, Debug)]
pub struct Manufactured {
    grid: SpectralGrid,
    s: Field,
    s_hat: SpectralField,
}

impl Manufactured {
    pub fn new(grid: &SpectralGrid, s: Field) -> Result<Self> {
        let s_hat = grid.transform(&s)?;
        Ok(Self { grid: grid.clone(), s, s_hat })
    }

    /// `S = sin(2 pi x / L) cos(2 pi y / L)`.
    pub fn standard(grid: &SpectralGrid) -> Self {
        let k = 2.0 * std::f64::consts::PI / grid.length();
        let s = Field::from_fn(grid, |x, y| (k * x).sin() * (k * y).cos());
        Self::new(grid, s).expect("field built on this grid")
    }

    pub fn exact(&self, t: f64) -> Field {
        self.s.scaled(t.cos())
    }

    /// `F = U_t + L_N U + f_N(U)`, all terms evaluated on the grid.
    pub fn forcing(&self, params: &ModelParams) -> Forcing {
        let grid = self.grid.clone();
        let s_hat = self.s_hat.clone();
        let big: Vec<f64> = grid
            .lambda()
            .iter()
            .map(|&l| params.eps * params.eps * l * l + params.kappa * l)
            .collect();
        let kappa = params.kappa;
        let mut eval = NonlinearEvaluator::new(&grid, params.dealias);
        let mut u_hat = SpectralField::zeros(grid.n());
        Box::new(move |t, out: &mut SpectralField| {
            let (c, sn) = (t.cos(), t.sin());
            for (u, s) in u_hat.coeffs_mut().iter_mut().zip(s_hat.coeffs()) {
                *u = s * c;
            }
            eval.eval_hat(&grid, &u_hat, kappa, out)?;
            for ((o, s), l) in out.coeffs_mut().iter_mut().zip(s_hat.coeffs()).zip(&big) {
                *o += s * (l * c - sn);
            }
            Ok(())
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub err_l1: f64,
    pub err_l2: f64,
    pub err_linf: f64,
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// root mean square residual
    pub rms: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("{} abscissae but {} ordinates", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Fit(format!("need at least two points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if n > 2 { (ss / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let rms = (ss / nf).sqrt();
    if !(slope.is_finite() && intercept.is_finite()) {
        return Err(Error::Fit("non-finite fit".into()));
    }
    Ok(LineFit { slope, intercept, slope_stderr, rms })
}

/// Observed order `p` in `err ~ C N^-p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    pub order: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceResult {
    pub rows: Vec<ConvergenceRow>,
    pub l1: OrderFit,
    pub l2: OrderFit,
    pub linf: OrderFit,
}

impl ConvergenceResult {
    pub fn from_rows(rows: Vec<ConvergenceRow>) -> Result<Self> {
        if rows.windows(2).any(|w| w[1].n <= w[0].n) {
            return Err(Error::Fit("grid sizes must be strictly increasing".into()));
        }
        let ln_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let order = |err: fn(&ConvergenceRow) -> f64| -> Result<OrderFit> {
            let y = rows
                .iter()
                .map(|r| {
                    let e = err(r);
                    if e > 0.0 && e.is_finite() {
                        Ok(e.ln())
                    } else {
                        Err(Error::Fit(format!("error {e} at N = {} is not positive", r.n)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let f = line_fit(&ln_n, &y)?;
            Ok(OrderFit { order: -f.slope, stderr: f.slope_stderr })
        };
        Ok(Self {
            l1: order(|r| r.err_l1)?,
            l2: order(|r| r.err_l2)?,
            linf: order(|r| r.err_linf)?,
            rows,
        })
    }

    pub fn orders(&self) -> [(&'static str, OrderFit); 3] {
        [("L1", self.l1), ("L2", self.l2), ("Linf", self.linf)]
    }
}

/// One manufactured-solution run at grid size `n` and step `dt` up to `t_final`.
pub fn run_manufactured(
    n: usize,
    length: f64,
    dt: f64,
    t_final: f64,
    params: &ModelParams,
    scheme: Scheme,
    startup: StartupPolicy,
) -> Result<ConvergenceRow> {
    let grid = SpectralGrid::new(n, length)?;
    let exact = Manufactured::standard(&grid);
    let mut it = Integrator::new(grid.clone(), *params, scheme)?.with_forcing(exact.forcing(params));
    let mut s = it.init_state(&exact.exact(0.0), 0.0, dt, startup)?;
    it.advance_to(&mut s, t_final, dt, startup, |_, _| Ok(ControlFlow::Continue(())))?;
    let err = grid.norms(&s.u().sub(&exact.exact(s.t()))?)?;
    Ok(ConvergenceRow { n, h: grid.h(), dt: s.dt(), err_l1: err.l1, err_l2: err.l2, err_linf: err.linf })
}

/// Runs every grid size of the study, in parallel, and fits the orders.
pub fn run_convergence(
    cfg: &ConvergenceConfig,
    params: &ModelParams,
    scheme: Scheme,
    startup: StartupPolicy,
) -> Result<ConvergenceResult> {
    let threads = match cfg.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .min(cfg.ns.len())
    .max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<ConvergenceRow>>>> = Mutex::new(cfg.ns.iter().map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&n) = cfg.ns.get(i) else { break };
                let dt = cfg.dt_over_h * cfg.length / n as f64;
                let row = run_manufactured(n, cfg.length, dt, cfg.t_final, params, scheme, startup);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    let rows = results
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every index was claimed"))
        .collect::<Result<Vec<_>>>()?;
    ConvergenceResult::from_rows(rows)
}

/// Seeded uniform noise in `[-amplitude, amplitude]` with zero mean and no
/// even-`N` Nyquist content, optionally damped once by `exp(-dt0 L_N)`.
pub fn initial_field(grid: &SpectralGrid, init: &InitialData, params: &ModelParams, dt0: f64) -> Result<Field> {
    match init.kind {
        InitialKind::Random => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
    let a = init.amplitude;
    let values: Vec<f64> = (0..grid.len())
        .map(|_| if a > 0.0 { rng.random_range(-a..=a) } else { 0.0 })
        .collect();
    let mut hat = grid.transform(&Field::from_values(grid.n(), values)?)?;
    let n = grid.n();
    let lam = grid.lambda();
    for p in 0..n {
        for q in 0..n {
            let m = p * n + q;
            let nyquist = n.is_multiple_of(2) && (p == n / 2 || q == n / 2);
            let c = &mut hat.coeffs_mut()[m];
            if m == 0 || nyquist {
                *c = Complex::new(0.0, 0.0);
            } else if init.smooth {
                let big = params.eps * params.eps * lam[m] * lam[m] + params.kappa * lam[m];
                *c *= (-dt0 * big).exp();
            }
        }
    }
    grid.inverse_transform(&hat)
}

/// Sampled history of a coarsening run.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseningTrace {
    pub samples: Vec<Observables>,
    pub eps: f64,
    pub length: f64,
    pub n: usize,
    pub schedule: Vec<Segment>,
    pub seed: u64,
    /// The run reached the end of the schedule.
    pub completed: bool,
    /// Most recent checkpoint written, if any.
    pub last_checkpoint: Option<PathBuf>,
}

impl CoarseningTrace {
    pub fn series(&self, kind: FitKind) -> (Vec<f64>, Vec<f64>) {
        self.samples.iter().map(|o| (o.t, kind.value(o))).unzip()
    }

    pub fn fit(&self, kind: FitKind, window: (f64, f64)) -> Result<FitResult> {
        let (t, y) = self.series(kind);
        fit_scaling(&t, &y, kind, window)
    }
}

/// Knobs that do not belong in the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Where trace and checkpoints go; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Stop (with a checkpoint) after this many steps in total.
    pub max_steps: Option<u64>,
    /// Print a line per checkpoint to stderr.
    pub verbose: bool,
}

pub const TRACE_FILE: &str = "trace.csv";

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("checkpoint_{step:010}.bin"))
}

/// Index of the cadence interval containing `t`.
fn tick(t: f64, interval: f64) -> i64 {
    (t / interval + 1e-9).floor() as i64
}

struct Recorder<'a> {
    cfg: &'a RunConfig,
    opts: &'a RunOptions,
    samples: Vec<Observables>,
    last_checkpoint: Option<PathBuf>,
}

impl Recorder<'_> {
    fn sample(&mut self, it: &Integrator, s: &SchemeState) -> Result<()> {
        let p = it.params();
        let mut o = observables(it.grid(), s.u(), p, s.t())?;
        if self.cfg.output.modified_energy {
            let sc = stability_constants(p)?;
            let h = s.history();
            o.modified_energy = Some(modified_energy(it.grid(), &h[0], &h[1], &h[2], &sc, p)?);
        }
        if !o.energy.is_finite() {
            return Err(Error::invalid(format!("energy became non-finite at t = {}", s.t())));
        }
        self.samples.push(o);
        Ok(())
    }

    fn checkpoint(&mut self, it: &Integrator, s: &SchemeState) -> Result<()> {
        let Some(dir) = &self.opts.out_dir else { return Ok(()) };
        let path = checkpoint_path(dir, s.step_count());
        write_checkpoint(&Checkpoint::capture(it, s), &path)?;
        write_trace(&self.samples, &dir.join(TRACE_FILE))?;
        if self.opts.verbose {
            eprintln!("t = {:.6}, step {}: wrote {}", s.t(), s.step_count(), path.display());
        }
        self.last_checkpoint = Some(path);
        Ok(())
    }

    fn after_step(&mut self, it: &Integrator, s: &SchemeState, t_prev: f64) -> Result<ControlFlow<()>> {
        let out = &self.cfg.output;
        if tick(s.t(), out.sample_interval) > tick(t_prev, out.sample_interval) {
            self.sample(it, s)?;
        }
        let stop = self.opts.max_steps.is_some_and(|m| s.step_count() >= m);
        if stop {
            self.checkpoint(it, s)?;
            return Ok(ControlFlow::Break(()));
        }
        if let Some(ci) = out.checkpoint_interval {
            if tick(s.t(), ci) > tick(t_prev, ci) {
                self.checkpoint(it, s)?;
            }
        }
        Ok(ControlFlow::Continue(()))
    }
}

fn integrator_for(cfg: &RunConfig) -> Result<Integrator> {
    cfg.validate()?;
    let g = cfg.grid_config()?;
    Integrator::new(SpectralGrid::new(g.n, g.length)?, cfg.model, cfg.scheme)
}

/// Runs the configured schedule from the seeded initial data.
pub fn run_coarsening(cfg: &RunConfig, opts: &RunOptions) -> Result<CoarseningTrace> {
    let mut it = integrator_for(cfg)?;
    let first = cfg.schedule[0];
    let dt0 = crate::schemes::aligned_dt(0.0, first.t_end, first.dt)?.expect("schedule validated");
    let u0 = initial_field(it.grid(), &cfg.initial, &cfg.model, first.dt)?;
    let mut s = it.init_state(&u0, 0.0, dt0, cfg.startup)?;
    let mut rec = Recorder { cfg, opts, samples: Vec::new(), last_checkpoint: None };
    rec.sample(&it, &s)?;
    drive(cfg, &mut it, &mut s, rec)
}

/// Continues a run from `ck`, keeping the samples of `prior` up to the
/// checkpoint time.
pub fn resume_coarsening(
    cfg: &RunConfig,
    ck: &Checkpoint,
    prior: Vec<Observables>,
    opts: &RunOptions,
) -> Result<CoarseningTrace> {
    ck.check_config(cfg)?;
    let mut it = integrator_for(cfg)?;
    let mut s = ck.restore(&mut it)?;
    let t = s.t();
    let samples = prior.into_iter().take_while(|o| o.t <= t).collect();
    let rec = Recorder { cfg, opts, samples, last_checkpoint: None };
    drive(cfg, &mut it, &mut s, rec)
}

fn drive(cfg: &RunConfig, it: &mut Integrator, s: &mut SchemeState, mut rec: Recorder<'_>) -> Result<CoarseningTrace> {
    let mut completed = true;
    if rec.opts.max_steps.is_some_and(|m| s.step_count() >= m) {
        completed = false;
    } else {
        for seg in &cfg.schedule {
            if s.t() >= seg.t_end {
                continue;
            }
            let mut t_prev = s.t();
            let adv = it.advance_to(s, seg.t_end, seg.dt, cfg.startup, |it, st| {
                let flow = rec.after_step(it, st, t_prev)?;
                t_prev = st.t();
                Ok(flow)
            })?;
            if adv.stopped {
                completed = false;
                break;
            }
        }
    }
    let final_path = rec.opts.out_dir.as_ref().map(|d| checkpoint_path(d, s.step_count()));
    if completed && rec.last_checkpoint != final_path {
        rec.checkpoint(it, s)?;
    }
    let g = cfg.grid_config()?;
    Ok(CoarseningTrace {
        samples: rec.samples,
        eps: cfg.model.eps,
        length: g.length,
        n: g.n,
        schedule: cfg.schedule.clone(),
        seed: cfg.initial.seed,
        completed,
        last_checkpoint: rec.last_checkpoint,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    /// `E = a ln t + b`
    Energy,
    /// `h = a t^b`
    Roughness,
    /// `m = a t^b`
    Slope,
}

impl FitKind {
    pub fn column(self) -> &'static str {
        match self {
            FitKind::Energy => "energy",
            FitKind::Roughness => "roughness",
            FitKind::Slope => "slope",
        }
    }

    pub fn value(self, o: &Observables) -> f64 {
        match self {
            FitKind::Energy => o.energy,
            FitKind::Roughness => o.roughness,
            FitKind::Slope => o.slope,
        }
    }
}

impl std::str::FromStr for FitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(FitKind::Energy),
            "roughness" => Ok(FitKind::Roughness),
            "slope" => Ok(FitKind::Slope),
            _ => Err(Error::invalid(format!("unknown fit kind {s:?}, expected energy, roughness or slope"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub kind: FitKind,
    pub window: (f64, f64),
    pub a: f64,
    pub b: f64,
    /// residual RMS in the transformed coordinates
    pub rms: f64,
    pub samples: usize,
}

impl FitResult {
    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            FitKind::Energy => self.a * t.ln() + self.b,
            FitKind::Roughness | FitKind::Slope => self.a * t.powf(self.b),
        }
    }
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Semilog fit for the energy, log-log fits for roughness and slope, over the
/// samples with `t` in the closed window.
pub fn fit_scaling(t: &[f64], y: &[f64], kind: FitKind, window: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Fit(format!("window [{lo}, {hi}] must be nonempty with a positive start")));
    }
    if t.len() != y.len() {
        return Err(Error::Fit(format!("{} times but {} values", t.len(), y.len())));
    }
    let (x, v): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(t, _)| (lo..=hi).contains(*t))
        .map(|(&t, &y)| (t.ln(), y))
        .unzip();
    if x.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "{} samples in [{lo}, {hi}], need at least {MIN_FIT_SAMPLES}",
            x.len()
        )));
    }
    let (a, b, rms) = match kind {
        FitKind::Energy => {
            let f = line_fit(&x, &v)?;
            (f.slope, f.intercept, f.rms)
        }
        FitKind::Roughness | FitKind::Slope => {
            if let Some(bad) = v.iter().find(|v| !(**v > 0.0)) {
                return Err(Error::Fit(format!("log-log fit needs positive values, found {bad}")));
            }
            let ln_v: Vec<f64> = v.iter().map(|v| v.ln()).collect();
            let f = line_fit(&x, &ln_v)?;
            (f.intercept.exp(), f.slope, f.rms)
        }
    };
    Ok(FitResult { kind, window, a, b, rms, samples: x.len() })
}

/// Time at which the energy fit `a ln t + b` reaches `gamma`.
pub fn saturation_estimate(fit: &FitResult, gamma: f64) -> Result<f64> {
    if fit.kind != FitKind::Energy {
        return Err(Error::Fit("saturation estimate needs an energy fit".into()));
    }
    if !(fit.a < 0.0) {
        return Err(Error::Fit(format!("energy slope a = {} must be negative", fit.a)));
    }
    Ok(((gamma - fit.b) / fit.a).exp())
}
