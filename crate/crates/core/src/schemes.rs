//! Exponential time differencing steppers for `u_t = -L_N u - f_N(u) + F`.
//!
//! Every scheme is diagonal in Fourier space. The third-order scheme carries
//! the regularization `-A dt^3 phi0 Delta_N^2 (u^{n+1} - u^n)`, which is solved
//! mode by mode with one division. With `A = 0` it is plain ETDMs3.
//!
//! The canonical state is the physical history `u^n, u^{n-1}, u^{n-2}`.
//! Coefficients and nonlinear evaluations are cached but always derived from
//! the physical fields, so a state rebuilt from its fields (a resumed
//! checkpoint) steps bit-identically to the original.

use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etdphi::PhiTables;
use crate::model::{ModelParams, NonlinearEvaluator};
use crate::spectral::{Complex, Field, SpectralField, SpectralGrid, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Etd1,
    Etdms2,
    /// Third order; `A` comes from the model parameters.
    Etd3,
}

impl Scheme {
    pub fn history_len(self) -> usize {
        match self {
            Scheme::Etd1 => 1,
            Scheme::Etdms2 => 2,
            Scheme::Etd3 => 3,
        }
    }
}

/// How missing history levels are filled at startup or after a step change.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartupPolicy {
    /// `u^{-1} = u^{-2} = u^0`.
    #[default]
    CopyInitial,
    /// Two forward ETD1 steps; the three states become the history.
    Etd1Bootstrap,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Nonlinearity {
    #[default]
    Nss,
    /// `f_N = 0`, leaving the linear flow plus forcing.
    Null,
}

/// Writes `F_hat(t)` into its argument. The mean mode is discarded.
pub type Forcing = Box<dyn FnMut(f64, &mut SpectralField) -> Result<()> + Send>;

/// Outcome of [`Integrator::advance_to`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Advance {
    pub steps: u64,
    /// The callback asked to stop before `t_end`.
    pub stopped: bool,
}

/// History of one run at one time step.
///
/// Time is `t_start + k dt` with `k` counted within the current constant-step
/// segment, so times do not accumulate rounding across steps.
#[derive(Clone, Debug)]
pub struct SchemeState {
    t_start: f64,
    k: u64,
    dt: f64,
    step_count: u64,
    /// `u^n, u^{n-1}, u^{n-2}`
    u: [Field; 3],
    u_hat: SpectralField,
    /// effective nonlinear term `f_N(u^j) - F(t^j)` per level
    f_hat: [SpectralField; 3],
    tables: Arc<PhiTables>,
}

impl SchemeState {
    pub fn t(&self) -> f64 {
        self.t_start + self.k as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn segment_start(&self) -> f64 {
        self.t_start
    }

    pub fn segment_steps(&self) -> u64 {
        self.k
    }

    pub fn u(&self) -> &Field {
        &self.u[0]
    }

    /// `[u^n, u^{n-1}, u^{n-2}]`
    pub fn history(&self) -> &[Field; 3] {
        &self.u
    }

    pub fn u_hat(&self) -> &SpectralField {
        &self.u_hat
    }

    /// Cached `f_N(u^j) - F(t^j)` for `j = 0, 1, 2` levels back.
    pub fn f_hat(&self, level: usize) -> &SpectralField {
        &self.f_hat[level]
    }

    pub fn tables(&self) -> &PhiTables {
        &self.tables
    }

}

/// Owns the grid, parameters, and scratch buffers that drive a `SchemeState`.
pub struct Integrator {
    grid: SpectralGrid,
    params: ModelParams,
    scheme: Scheme,
    nonlinearity: Nonlinearity,
    forcing: Option<Forcing>,
    eval: NonlinearEvaluator,
    ws: Workspace,
    tables: Vec<Arc<PhiTables>>,
    next_hat: SpectralField,
    force_hat: SpectralField,
}

impl fmt::Debug for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrator")
            .field("n", &self.grid.n())
            .field("params", &self.params)
            .field("scheme", &self.scheme)
            .field("nonlinearity", &self.nonlinearity)
            .field("forced", &self.forcing.is_some())
            .finish()
    }
}

impl Integrator {
    pub fn new(grid: SpectralGrid, params: ModelParams, scheme: Scheme) -> Result<Self> {
        params.validate()?;
        let n = grid.n();
        Ok(Self {
            eval: NonlinearEvaluator::new(&grid, params.dealias),
            grid,
            params,
            scheme,
            nonlinearity: Nonlinearity::Nss,
            forcing: None,
            ws: Workspace::new(),
            tables: Vec::new(),
            next_hat: SpectralField::zeros(n),
            force_hat: SpectralField::zeros(n),
        })
    }

    pub fn with_nonlinearity(mut self, nl: Nonlinearity) -> Self {
        self.nonlinearity = nl;
        self
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Tables for `dt`, built once per distinct step.
    pub fn tables_for(&mut self, dt: f64) -> Result<Arc<PhiTables>> {
        let p = self.params;
        if let Some(t) = self.tables.iter().find(|t| t.matches(p.eps, p.kappa, p.a, dt)) {
            return Ok(Arc::clone(t));
        }
        let t = Arc::new(PhiTables::build(&self.grid, p.eps, p.kappa, p.a, dt)?);
        self.tables.push(Arc::clone(&t));
        Ok(t)
    }

    pub fn init_state(&mut self, u0: &Field, t0: f64, dt: f64, startup: StartupPolicy) -> Result<SchemeState> {
        self.grid.check_field(u0)?;
        if !t0.is_finite() {
            return Err(Error::invalid(format!("start time must be finite, got {t0}")));
        }
        let tables = self.tables_for(dt)?;
        let n = self.grid.n();
        let mut s = SchemeState {
            t_start: t0,
            k: 0,
            dt,
            step_count: 0,
            u: [u0.clone(), u0.clone(), u0.clone()],
            u_hat: SpectralField::zeros(n),
            f_hat: [SpectralField::zeros(n), SpectralField::zeros(n), SpectralField::zeros(n)],
            tables,
        };
        self.refresh(&mut s)?;
        if startup == StartupPolicy::Etd1Bootstrap {
            self.bootstrap(&mut s)?;
        }
        Ok(s)
    }

    /// Rebuilds a state from its physical history, as stored in a checkpoint.
    pub fn restore(
        &mut self,
        history: [Field; 3],
        t_start: f64,
        segment_steps: u64,
        dt: f64,
        step_count: u64,
    ) -> Result<SchemeState> {
        for f in &history {
            self.grid.check_field(f)?;
        }
        let tables = self.tables_for(dt)?;
        let n = self.grid.n();
        let mut s = SchemeState {
            t_start,
            k: segment_steps,
            dt,
            step_count,
            u: history,
            u_hat: SpectralField::zeros(n),
            f_hat: [SpectralField::zeros(n), SpectralField::zeros(n), SpectralField::zeros(n)],
            tables,
        };
        self.refresh(&mut s)?;
        Ok(s)
    }

    /// Switches to `new_dt`, refilling the history per `policy`. A no-op when
    /// the step is unchanged.
    pub fn change_dt(&mut self, s: &mut SchemeState, new_dt: f64, policy: StartupPolicy) -> Result<()> {
        if new_dt == s.dt {
            return Ok(());
        }
        let tables = self.tables_for(new_dt)?;
        s.t_start = s.t();
        s.k = 0;
        s.dt = new_dt;
        s.tables = tables;
        let u0 = s.u[0].clone();
        s.u[1] = u0.clone();
        s.u[2] = u0;
        self.refresh(s)?;
        if policy == StartupPolicy::Etd1Bootstrap {
            self.bootstrap(s)?;
        }
        Ok(())
    }

    /// One step of the configured scheme.
    pub fn step(&mut self, s: &mut SchemeState) -> Result<()> {
        match self.scheme {
            Scheme::Etd1 => self.etd1_step(s),
            Scheme::Etdms2 => self.etdms2_step(s),
            Scheme::Etd3 => self.etd3_step(s),
        }
    }

    /// `u^{n+1} = e^{-dt L} u^n - dt phi0 f^n`
    pub fn etd1_step(&mut self, s: &mut SchemeState) -> Result<()> {
        let t = Arc::clone(&s.tables);
        let dt = s.dt;
        let u = s.u_hat.coeffs();
        let f0 = s.f_hat[0].coeffs();
        for (m, out) in self.next_hat.coeffs_mut().iter_mut().enumerate() {
            *out = u[m] * t.exp_neg[m] - f0[m] * (dt * t.phi0[m]);
        }
        self.advance_history(s)
    }

    /// ETD1 plus `-dt phi1 (f^n - f^{n-1})`.
    pub fn etdms2_step(&mut self, s: &mut SchemeState) -> Result<()> {
        let t = Arc::clone(&s.tables);
        let dt = s.dt;
        let u = s.u_hat.coeffs();
        let f0 = s.f_hat[0].coeffs();
        let f1 = s.f_hat[1].coeffs();
        for (m, out) in self.next_hat.coeffs_mut().iter_mut().enumerate() {
            *out = u[m] * t.exp_neg[m] - f0[m] * (dt * t.phi0[m]) - (f0[m] - f1[m]) * (dt * t.phi1[m]);
        }
        self.advance_history(s)
    }

    /// Third-order step with the implicit regularization.
    pub fn etd3_step(&mut self, s: &mut SchemeState) -> Result<()> {
        let t = Arc::clone(&s.tables);
        let dt = s.dt;
        let u = s.u_hat.coeffs();
        let (f0, f1, f2) = (s.f_hat[0].coeffs(), s.f_hat[1].coeffs(), s.f_hat[2].coeffs());
        for (m, out) in self.next_hat.coeffs_mut().iter_mut().enumerate() {
            *out = etd3_mode(
                u[m],
                [f0[m], f1[m], f2[m]],
                dt,
                t.exp_neg[m],
                [t.phi0[m], t.phi1[m], t.phi2[m]],
                t.reg[m],
                t.reg_denom[m],
            );
        }
        self.advance_history(s)
    }

    /// Steps until `t_end` with a uniform step no larger than `dt`.
    ///
    /// The step actually used divides the segment evenly, so it ends exactly
    /// on `t_end`. If the state is already inside this segment (a resumed
    /// run), its step is kept, since it was derived the same way from the
    /// segment start. `on_step` may stop the loop early.
    pub fn advance_to(
        &mut self,
        s: &mut SchemeState,
        t_end: f64,
        dt: f64,
        policy: StartupPolicy,
        mut on_step: impl FnMut(&Self, &SchemeState) -> Result<ControlFlow<()>>,
    ) -> Result<Advance> {
        let in_segment = aligned_dt(s.t_start, t_end, dt)? == Some(s.dt);
        if !in_segment {
            match aligned_dt(s.t(), t_end, dt)? {
                Some(d) => self.change_dt(s, d, policy)?,
                None => return Ok(Advance { steps: 0, stopped: false }),
            }
        }
        let total = ((t_end - s.t_start) / s.dt).round() as u64;
        let mut steps = 0;
        while s.k < total {
            self.step(s)?;
            steps += 1;
            if on_step(self, s)?.is_break() {
                return Ok(Advance { steps, stopped: true });
            }
        }
        Ok(Advance { steps, stopped: false })
    }

    fn bootstrap(&mut self, s: &mut SchemeState) -> Result<()> {
        self.etd1_step(s)?;
        self.etd1_step(s)
    }

    /// Synthesizes `next_hat`, rotates the history, and evaluates the new level.
    fn advance_history(&mut self, s: &mut SchemeState) -> Result<()> {
        // the mean is carried as an exact copy
        self.next_hat.coeffs_mut()[0] = s.u_hat.coeffs()[0];
        s.u.rotate_right(1);
        s.f_hat.rotate_right(1);
        self.grid.inverse_into(&self.next_hat, &mut s.u[0], &mut self.ws)?;
        if !s.u[0].is_finite() {
            return Err(Error::invalid(format!(
                "solution became non-finite at step {}",
                s.step_count + 1
            )));
        }
        s.k += 1;
        s.step_count += 1;
        self.evaluate_level(s, 0)
    }

    fn refresh(&mut self, s: &mut SchemeState) -> Result<()> {
        for level in (0..3).rev() {
            self.evaluate_level(s, level)?;
        }
        Ok(())
    }

    /// Recomputes the cached coefficients of history level `level`; level 0
    /// also refreshes `u_hat`.
    fn evaluate_level(&mut self, s: &mut SchemeState, level: usize) -> Result<()> {
        let mut u_hat = SpectralField::zeros(self.grid.n());
        self.grid.transform_into(&s.u[level], &mut u_hat, &mut self.ws)?;
        let out = &mut s.f_hat[level];
        match self.nonlinearity {
            Nonlinearity::Nss => self.eval.eval_hat(&self.grid, &u_hat, self.params.kappa, out)?,
            Nonlinearity::Null => out.coeffs_mut().iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0)),
        }
        if let Some(forcing) = self.forcing.as_mut() {
            let t = s.t_start + (s.k as f64 - level as f64) * s.dt;
            forcing(t, &mut self.force_hat)?;
            self.grid.check_spectral(&self.force_hat)?;
            for (c, f) in out.coeffs_mut().iter_mut().zip(self.force_hat.coeffs()).skip(1) {
                *c -= f;
            }
        }
        if level == 0 {
            s.u_hat = u_hat;
        }
        Ok(())
    }
}

/// Per-mode third-order update.
#[inline]
pub fn etd3_mode(
    u: Complex,
    f: [Complex; 3],
    dt: f64,
    exp_neg: f64,
    phi: [f64; 3],
    reg: f64,
    reg_denom: f64,
) -> Complex {
    let [f0, f1, f2] = f;
    let ext1 = f0 * 1.5 - f1 * 2.0 + f2 * 0.5;
    let ext2 = f0 * 0.5 - f1 + f2 * 0.5;
    let rhs = u * exp_neg - f0 * (dt * phi[0]) - ext1 * (dt * phi[1]) - ext2 * (dt * phi[2]);
    (rhs + u * reg) / reg_denom
}

/// Largest uniform step `<= dt` that lands exactly on `t_end`, or `None` when
/// there is nothing left to do.
pub fn aligned_dt(t: f64, t_end: f64, dt: f64) -> Result<Option<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    let span = t_end - t;
    if span <= dt * 1e-9 {
        return Ok(None);
    }
    let steps = (span / dt - 1e-9).ceil().max(1.0);
    Ok(Some(span / steps))
}
