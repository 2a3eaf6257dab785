//! Fixed-step integration of master equations with a memory integral over the
//! full stored history.
//!
//! The numerical core works on flattened state vectors through the
//! [`VolterraSystem`] trait, so scalar test problems and density matrices go
//! through the same stepping code. Each step is a Heun predictor-corrector;
//! the memory integral `int_{t0}^{t} s(t - t') (J y(t') - D y(t)) dt'` is a
//! trapezoidal sum over the grid, with the candidate value at the upper end.

use std::hash::{Hash, Hasher};
use std::io::Write;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operator::{
    diagnose, ensure_dim, gksl_unchecked, hermiticity_error, trace, validate_density,
    ComplexMatrix, DensityMatrix, GkslGenerator, MemoryKernel, C64, TOL_HERM,
};

pub type CVec = DVector<C64>;

/// Relative trace tolerance for stored states.
pub const TRACE_TOL: f64 = 1e-8;

/// A linear Volterra integro-differential system
/// `y' = F(t) y + int_{t0}^{t} s(t - t') (J y(t') - D y(t)) dt'`.
pub trait VolterraSystem {
    fn state_len(&self) -> usize;
    /// `F(t) y`.
    fn local(&self, t: f64, y: &CVec) -> CVec;
    fn has_memory(&self) -> bool;
    /// `s(lag)`.
    fn memory_value(&self, lag: f64) -> Result<f64>;
    /// `J y`, applied to the kernel-weighted history.
    fn jump(&self, y: &CVec) -> CVec;
    /// `D y`, applied to the current value.
    fn drain(&self, y: &CVec) -> CVec;
    /// Called on every accepted state.
    fn check(&self, _t: f64, _y: &CVec, _trace_target: f64) -> Result<()> {
        Ok(())
    }
}

/// Scalar test system `y' = a y + int A e^{-k (t - s)} (j y(s) - d y(t)) ds`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarVolterra {
    pub local_rate: C64,
    pub amplitude: f64,
    pub decay: f64,
    pub jump_factor: C64,
    pub drain_factor: C64,
}

impl VolterraSystem for ScalarVolterra {
    fn state_len(&self) -> usize {
        1
    }
    fn local(&self, _t: f64, y: &CVec) -> CVec {
        y * self.local_rate
    }
    fn has_memory(&self) -> bool {
        self.amplitude != 0.0
    }
    fn memory_value(&self, lag: f64) -> Result<f64> {
        Ok(self.amplitude * (-self.decay * lag).exp())
    }
    fn jump(&self, y: &CVec) -> CVec {
        y * self.jump_factor
    }
    fn drain(&self, y: &CVec) -> CVec {
        y * self.drain_factor
    }
}

impl ScalarVolterra {
    /// `y' = -int_0^t g k e^{-k (t - s)} y(s) ds` with `g = 1`, `k = 2`.
    pub fn laplace_test() -> Self {
        Self {
            local_rate: C64::new(0.0, 0.0),
            amplitude: 2.0,
            decay: 2.0,
            jump_factor: C64::new(-1.0, 0.0),
            drain_factor: C64::new(0.0, 0.0),
        }
    }
}

/// Solution of [`ScalarVolterra::laplace_test`] with `y(0) = 1`.
pub fn laplace_test_solution(t: f64) -> f64 {
    (-t).exp() * (t.cos() + t.sin())
}

/// `(dt, |y(t_end) - exact|)` rows and the fitted order for the scalar test.
pub fn solver_order_study(dts: &[f64], t_end: f64) -> Result<(Vec<(f64, f64)>, f64)> {
    let sys = ScalarVolterra::laplace_test();
    let mut rows = Vec::with_capacity(dts.len());
    for &dt in dts {
        let steps = steps_for(t_end, dt)?;
        let y = integrate_system(
            &sys,
            CVec::from_element(1, C64::new(1.0, 0.0)),
            0.0,
            dt,
            steps,
            None,
        )?;
        rows.push((dt, (y[steps][0].re - laplace_test_solution(t_end)).abs()));
    }
    let (d, e): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
    Ok((rows, crate::cpns::fitted_order(&d, &e)))
}

/// The density-matrix master equation as a [`VolterraSystem`].
pub struct MasterEquation<'a> {
    gen: &'a GkslGenerator,
    kernel: &'a MemoryKernel,
    dim: usize,
}

impl<'a> MasterEquation<'a> {
    pub fn new(gen: &'a GkslGenerator, kernel: &'a MemoryKernel) -> Result<Self> {
        if kernel.dim() != gen.dim() && !kernel.is_zero() {
            return Err(Error::DimensionMismatch {
                expected: gen.dim(),
                found: kernel.dim(),
            });
        }
        Ok(Self {
            gen,
            kernel,
            dim: gen.dim(),
        })
    }
}

pub(crate) fn to_matrix(y: &CVec, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(dim, dim, y.as_slice())
}

pub(crate) fn to_vec(m: &ComplexMatrix) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

impl VolterraSystem for MasterEquation<'_> {
    fn state_len(&self) -> usize {
        self.dim * self.dim
    }
    fn local(&self, t: f64, y: &CVec) -> CVec {
        to_vec(&gksl_unchecked(self.gen, &to_matrix(y, self.dim), t))
    }
    fn has_memory(&self) -> bool {
        !self.kernel.is_zero()
    }
    fn memory_value(&self, lag: f64) -> Result<f64> {
        self.kernel.memory_value(lag)
    }
    fn jump(&self, y: &CVec) -> CVec {
        to_vec(&self.kernel.jump(&to_matrix(y, self.dim)))
    }
    fn drain(&self, y: &CVec) -> CVec {
        to_vec(&self.kernel.drain(&to_matrix(y, self.dim)))
    }
    fn check(&self, t: f64, y: &CVec, trace_target: f64) -> Result<()> {
        let m = to_matrix(y, self.dim);
        let herm = hermiticity_error(&m);
        if !herm.is_finite() || herm > TOL_HERM {
            return Err(Error::Invariant {
                t,
                what: format!("hermiticity deviation {herm:.3e}"),
            });
        }
        let tr = trace(&m);
        let err = (tr - C64::new(trace_target, 0.0)).norm();
        if !(err <= TRACE_TOL * trace_target.abs().max(1.0)) {
            return Err(Error::Invariant {
                t,
                what: format!("trace {} differs from target {trace_target}", tr.re),
            });
        }
        Ok(())
    }
}

/// Frozen history preceding the segment being integrated, scaled by `scale`.
#[derive(Clone, Copy)]
pub(crate) struct Past<'a> {
    pub states: &'a [CVec],
    pub scale: f64,
}

impl Past<'_> {
    pub(crate) fn none() -> Past<'static> {
        Past {
            states: &[],
            scale: 1.0,
        }
    }
}

/// Trapezoidal memory sum up to (excluding) grid index `n`.
struct Partial {
    sum: CVec,
    weight: f64,
    active: bool,
}

struct Stepper<'a, S: VolterraSystem> {
    sys: &'a S,
    t0: f64,
    dt: f64,
    window: Option<usize>,
    kernel: Vec<f64>,
}

impl<'a, S: VolterraSystem> Stepper<'a, S> {
    fn new(sys: &'a S, t0: f64, dt: f64, window: Option<usize>, horizon: usize) -> Result<Self> {
        let max_lag = window.map_or(horizon, |w| w.min(horizon));
        let kernel = if sys.has_memory() {
            (0..=max_lag)
                .map(|k| sys.memory_value(k as f64 * dt))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            sys,
            t0,
            dt,
            window,
            kernel,
        })
    }

    /// History is `past.states` (scaled) on indices below `a`, then `own`.
    fn partial(&self, n: usize, past: Past<'_>, own: &[CVec]) -> Partial {
        let len = self.sys.state_len();
        let a = past.states.len();
        let kmin = self.window.map_or(0, |w| n.saturating_sub(w));
        let mut sum = CVec::zeros(len);
        let mut weight = 0.0;
        if !self.sys.has_memory() || kmin >= n {
            return Partial {
                sum,
                weight,
                active: false,
            };
        }
        let one = C64::new(1.0, 0.0);
        for k in kmin..n {
            let w = if k == kmin { 0.5 } else { 1.0 } * self.kernel[n - k];
            if w == 0.0 {
                continue;
            }
            let (y, scale) = if k < a {
                (&past.states[k], past.scale)
            } else {
                (&own[k - a], 1.0)
            };
            sum.axpy(C64::new(w * scale, 0.0), y, one);
            weight += w;
        }
        Partial {
            sum,
            weight,
            active: true,
        }
    }

    fn rhs(&self, n: usize, y: &CVec, partial: &Partial) -> CVec {
        let t = self.t0 + n as f64 * self.dt;
        let mut f = self.sys.local(t, y);
        if partial.active {
            let s0 = self.kernel[0];
            let mut m = partial.sum.clone();
            m.axpy(C64::new(0.5 * s0, 0.0), y, C64::new(1.0, 0.0));
            let w = partial.weight + 0.5 * s0;
            f += self.sys.jump(&m) * C64::new(self.dt, 0.0);
            f -= self.sys.drain(y) * C64::new(self.dt * w, 0.0);
        }
        f
    }

    /// Integrate `steps` steps starting from `start` at grid index `past.len()`.
    fn run(
        &self,
        past: Past<'_>,
        start: CVec,
        steps: usize,
        trace_target: f64,
    ) -> Result<Vec<CVec>> {
        let a = past.states.len();
        let mut own: Vec<CVec> = Vec::with_capacity(steps + 1);
        self.sys
            .check(self.t0 + a as f64 * self.dt, &start, trace_target)?;
        own.push(start);
        let dt = C64::new(self.dt, 0.0);
        let half_dt = C64::new(0.5 * self.dt, 0.0);
        let mut partial = self.partial(a, past, &own);
        for j in 0..steps {
            let n = a + j;
            let y = &own[j];
            let f_n = self.rhs(n, y, &partial);
            let predictor = y + &f_n * dt;
            let next_partial = self.partial(n + 1, past, &own);
            let f_star = self.rhs(n + 1, &predictor, &next_partial);
            let next = y + (f_n + f_star) * half_dt;
            let t = self.t0 + (n + 1) as f64 * self.dt;
            if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Invariant {
                    t,
                    what: "non-finite state".into(),
                });
            }
            self.sys.check(t, &next, trace_target)?;
            own.push(next);
            partial = next_partial;
        }
        Ok(own)
    }
}

/// Integrate a generic system from `y0` at `t0`; returns `steps + 1` values.
pub fn integrate_system<S: VolterraSystem>(
    sys: &S,
    y0: CVec,
    t0: f64,
    dt: f64,
    steps: usize,
    memory_window: Option<f64>,
) -> Result<Vec<CVec>> {
    if y0.len() != sys.state_len() {
        return Err(Error::DimensionMismatch {
            expected: sys.state_len(),
            found: y0.len(),
        });
    }
    let window = window_steps(memory_window, dt)?;
    let stepper = Stepper::new(sys, t0, dt, window, steps)?;
    stepper.run(Past::none(), y0, steps, 0.0)
}

fn window_steps(memory_window: Option<f64>, dt: f64) -> Result<Option<usize>> {
    match memory_window {
        None => Ok(None),
        Some(w) if w >= 0.0 => Ok(Some((w / dt + 1e-9).floor() as usize)),
        Some(w) => Err(Error::Precondition(format!("memory window {w} < 0"))),
    }
}

/// Number of whole steps of size `dt` in `span`, rejecting non-multiples.
pub fn steps_for(span: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Precondition(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(span >= 0.0) || !span.is_finite() {
        return Err(Error::Precondition(format!(
            "span must be >= 0, got {span}"
        )));
    }
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.max(dt) {
        return Err(Error::Precondition(format!(
            "dt = {dt} does not divide {span}"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Truncate the memory integral at this lag.
    pub memory_window: Option<f64>,
}

impl PropagatorConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            memory_window: None,
        }
    }

    pub fn with_window(mut self, window: f64) -> Self {
        self.memory_window = Some(window);
        self
    }

    pub fn steps(&self) -> Result<usize> {
        if let Some(w) = self.memory_window {
            if !(w >= 0.0) {
                return Err(Error::Precondition(format!("memory window {w} < 0")));
            }
        }
        steps_for(self.t_final, self.dt)
    }
}

/// States on a uniform grid `t0 + k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistory {
    t0: f64,
    dt: f64,
    dim: usize,
    states: Vec<CVec>,
    trace_target: f64,
}

/// Worst-case invariant deviations over a history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryDiagnostics {
    pub max_trace_error: f64,
    pub max_herm_error: f64,
    pub min_eigenvalue: f64,
    pub min_eigenvalue_time: f64,
}

impl StateHistory {
    pub(crate) fn from_parts(
        t0: f64,
        dt: f64,
        dim: usize,
        states: Vec<CVec>,
        trace_target: f64,
    ) -> Self {
        Self {
            t0,
            dt,
            dim,
            states,
            trace_target,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn trace_target(&self) -> f64 {
        self.trace_target
    }

    pub fn state(&self, k: usize) -> ComplexMatrix {
        to_matrix(&self.states[k], self.dim)
    }

    pub fn last(&self) -> ComplexMatrix {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = ComplexMatrix> + '_ {
        self.states.iter().map(|v| to_matrix(v, self.dim))
    }

    pub(crate) fn raw(&self) -> &[CVec] {
        &self.states
    }

    /// Grid index of time `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.dt;
        let k = x.round();
        if k < 0.0 || (x - k).abs() > 1e-6 || k as usize >= self.len() {
            return Err(Error::OffGrid { t });
        }
        Ok(k as usize)
    }

    /// Diagnostics over all stored states; eigenvalues only when `positivity`.
    pub fn diagnostics(&self, positivity: bool) -> HistoryDiagnostics {
        let mut d = HistoryDiagnostics {
            max_trace_error: 0.0,
            max_herm_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            min_eigenvalue_time: self.t0,
        };
        for (k, m) in self.states().enumerate() {
            if positivity {
                let diag = diagnose(&m, self.trace_target);
                if diag.min_eigenvalue < d.min_eigenvalue {
                    d.min_eigenvalue = diag.min_eigenvalue;
                    d.min_eigenvalue_time = self.time(k);
                }
                d.max_trace_error = d.max_trace_error.max(diag.trace_error);
                d.max_herm_error = d.max_herm_error.max(diag.herm_error);
            } else {
                let tr = trace(&m);
                d.max_trace_error = d
                    .max_trace_error
                    .max((tr - C64::new(self.trace_target, 0.0)).norm());
                d.max_herm_error = d.max_herm_error.max(hermiticity_error(&m));
            }
        }
        d
    }

    /// Hash of the exact bit patterns of all entries.
    pub fn checksum(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.t0.to_bits().hash(&mut h);
        self.dt.to_bits().hash(&mut h);
        for v in &self.states {
            for z in v.iter() {
                z.re.to_bits().hash(&mut h);
                z.im.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// Rows `t re(rho_00) im(rho_00) re(rho_01) ...`, entries row-major.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# dim {}", self.dim)?;
        writeln!(w, "# dt {}", crate::io::fmt_f64(self.dt))?;
        writeln!(
            w,
            "# trace_target {}",
            crate::io::fmt_f64(self.trace_target)
        )?;
        for (k, m) in self.states().enumerate() {
            write!(w, "{}", crate::io::fmt_f64(self.time(k)))?;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let z = m[(i, j)];
                    write!(
                        w,
                        " {} {}",
                        crate::io::fmt_f64(z.re),
                        crate::io::fmt_f64(z.im)
                    )?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// `(L rho)(t) + int_{t0}^{t} (R rho)(t, t') dt'` with the trapezoidal rule over
/// `history`, treating `rho_t` as the value at `t`.
///
/// `t` must lie on the grid of `history` or one step past its end. Stored
/// states at or after `t` are ignored.
pub fn rhs(
    history: &StateHistory,
    gen: &GkslGenerator,
    kernel: &MemoryKernel,
    t: f64,
    rho_t: &ComplexMatrix,
    memory_window: Option<f64>,
) -> Result<ComplexMatrix> {
    ensure_dim(rho_t, gen.dim())?;
    let x = (t - history.t0) / history.dt;
    let n = x.round();
    if n < 0.0 || (x - n).abs() > 1e-6 || n as usize > history.len() {
        return Err(Error::OffGrid { t });
    }
    let n = n as usize;
    let sys = MasterEquation::new(gen, kernel)?;
    let window = window_steps(memory_window, history.dt)?;
    let stepper = Stepper::new(&sys, history.t0, history.dt, window, n)?;
    let past = Past {
        states: &history.states[..n.min(history.len())],
        scale: 1.0,
    };
    let partial = stepper.partial(n, past, &[]);
    Ok(to_matrix(
        &stepper.rhs(n, &to_vec(rho_t), &partial),
        gen.dim(),
    ))
}

/// Integrate the master equation from the state `rho0` at `t = 0`.
pub fn propagate(
    rho0: &DensityMatrix,
    gen: &GkslGenerator,
    kernel: &MemoryKernel,
    config: &PropagatorConfig,
) -> Result<StateHistory> {
    ensure_dim(rho0.matrix(), gen.dim())?;
    let diag = validate_density(rho0);
    if !diag.is_state(TRACE_TOL) {
        return Err(Error::Precondition(format!(
            "initial state invalid: {diag:?}"
        )));
    }
    let steps = config.steps()?;
    let sys = MasterEquation::new(gen, kernel)?;
    let window = window_steps(config.memory_window, config.dt)?;
    let stepper = Stepper::new(&sys, 0.0, config.dt, window, steps)?;
    let states = stepper.run(
        Past::none(),
        to_vec(rho0.matrix()),
        steps,
        rho0.trace_target(),
    )?;
    Ok(StateHistory::from_parts(
        0.0,
        config.dt,
        gen.dim(),
        states,
        rho0.trace_target(),
    ))
}

/// Replacement of the state at anchor time `t`, with the earlier history
/// rescaled by `scale`.
#[derive(Debug, Clone)]
pub struct Conditioning {
    pub t: f64,
    pub override_state: ComplexMatrix,
    pub scale: f64,
}

/// Continue the evolution from `cond.t` to `cond.t + tau_max` after replacing
/// the state at `cond.t`. The memory integral sees `scale * base(t')` for
/// `t' < cond.t` and the new segment afterwards. Returns the new segment,
/// starting with the override at `tau = 0`.
pub fn propagate_conditional(
    base: &StateHistory,
    cond: &Conditioning,
    gen: &GkslGenerator,
    kernel: &MemoryKernel,
    tau_max: f64,
    memory_window: Option<f64>,
) -> Result<StateHistory> {
    ensure_dim(&cond.override_state, base.dim())?;
    let anchor = base.index_of(cond.t)?;
    let herm = hermiticity_error(&cond.override_state);
    if herm > TOL_HERM {
        return Err(Error::NotHermitian {
            what: "conditional override",
            deviation: herm,
        });
    }
    let tr = trace(&cond.override_state);
    if (tr - C64::new(cond.scale, 0.0)).norm() > TRACE_TOL * cond.scale.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "override trace {} does not match scale {}",
            tr.re, cond.scale
        )));
    }
    let steps = steps_for(tau_max, base.dt())?;
    let sys = MasterEquation::new(gen, kernel)?;
    let window = window_steps(memory_window, base.dt())?;
    let stepper = Stepper::new(&sys, base.t0(), base.dt(), window, anchor + steps)?;
    let past = Past {
        states: &base.raw()[..anchor],
        scale: cond.scale,
    };
    let states = stepper.run(past, to_vec(&cond.override_state), steps, cond.scale)?;
    Ok(StateHistory::from_parts(
        cond.t,
        base.dt(),
        base.dim(),
        states,
        cond.scale,
    ))
}
