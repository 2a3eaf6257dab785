//! Discrete-time CPNS maps.
//!
//! One step maps the history `(rho_0, ..., rho_n)` to
//! `rho_{n+1} = sum_m sum_a V_{anm}^† rho_m V_{anm}`, with
//!
//! * `V_0 = 1 + dt (G + i H)` and `V_a = sqrt(dt) L_a` acting on `rho_n`,
//! * `V_{a,m} = dt sqrt(s((n - m) dt)) A_a` acting on `rho_m`, `m < n`.
//!
//! Each group satisfies `sum_a V V^† = p_{nm} I`. The weights of the retarded
//! groups are exact; `p_{nn} = 1 - sum_{m<n} p_{nm}` and the local group meets
//! it up to an `O(dt^2)` residual, which is reported.

use crate::error::{Error, Result};
use crate::operator::{
    c64, dagger, identity, max_abs_diff, trace, ComplexMatrix, DensityMatrix, GkslGenerator,
    MemoryKernel,
};
use crate::propagator::{propagate, PropagatorConfig};

/// Kraus operators acting on one history entry.
#[derive(Debug, Clone)]
pub struct KrausGroup {
    /// History index the group acts on.
    pub m: usize,
    pub ops: Vec<ComplexMatrix>,
    pub p: f64,
}

#[derive(Debug, Clone)]
pub struct CpnsStepMap {
    pub n: usize,
    pub dt: f64,
    pub groups: Vec<KrausGroup>,
    /// `max |sum_a V_{ann} V_{ann}^† - p_nn I|`.
    pub residual: f64,
}

impl CpnsStepMap {
    /// `sum_m p_{nm}`.
    pub fn total_weight(&self) -> f64 {
        self.groups.iter().map(|g| g.p).sum()
    }

    /// `max_m |sum_a V V^† - p_{nm} I|`.
    pub fn normalization_residual(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| {
                let dim = g.ops.first().map_or(0, |v| v.nrows());
                let mut acc = ComplexMatrix::zeros(dim, dim);
                for v in &g.ops {
                    acc += v * dagger(v);
                }
                max_abs_diff(&acc, &identity(dim).scale(g.p))
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, history: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        apply_cpns(self, history)
    }

    /// Action of `map ⊗ id` on histories over system ⊗ ancilla, system factor first.
    pub fn apply_with_ancilla(
        &self,
        history: &[ComplexMatrix],
        ancilla_dim: usize,
    ) -> Result<ComplexMatrix> {
        let id = identity(ancilla_dim);
        let lifted = CpnsStepMap {
            groups: self
                .groups
                .iter()
                .map(|g| KrausGroup {
                    m: g.m,
                    ops: g.ops.iter().map(|v| v.kronecker(&id)).collect(),
                    p: g.p,
                })
                .collect(),
            ..self.clone()
        };
        apply_cpns(&lifted, history)
    }
}

/// Kraus pieces of step `n -> n + 1` at time `t_n`.
pub fn build_step_kraus(
    gen: &GkslGenerator,
    kernel: &MemoryKernel,
    dt: f64,
    n: usize,
    t_n: f64,
) -> Result<CpnsStepMap> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Precondition(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let dim = gen.dim();
    let mut groups = Vec::with_capacity(n + 1);
    let mut retarded = 0.0;
    if !kernel.is_zero() {
        for m in 0..n {
            let s = kernel.memory_value((n - m) as f64 * dt)?.max(0.0);
            if s == 0.0 {
                continue;
            }
            let amp = dt * s.sqrt();
            let p = dt * dt * s * kernel.normalization();
            retarded += p;
            groups.push(KrausGroup {
                m,
                ops: kernel.jump_ops().iter().map(|a| a.scale(amp)).collect(),
                p,
            });
        }
    }
    let p_nn = 1.0 - retarded;
    let h = gen.hamiltonian(t_n);
    let ls = gen.lindblads(t_n);
    let mut drain = ComplexMatrix::zeros(dim, dim);
    for l in ls {
        drain += l * dagger(l);
    }
    let rate_bound = drain.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if p_nn < 0.0 || rate_bound * dt > 1.0 {
        return Err(Error::StepTooLarge {
            dt,
            reason: format!("p_nn = {p_nn:.3e}, rate * dt = {:.3e}", rate_bound * dt),
        });
    }
    // G fixed by trace preservation to first order in dt.
    let g = (drain + identity(dim).scale(retarded / dt)).scale(-0.5);
    let v0 = identity(dim) + (g + h * c64(0.0, 1.0)).scale(dt);
    let mut local = vec![v0];
    local.extend(ls.iter().map(|l| l.scale(dt.sqrt())));
    groups.push(KrausGroup {
        m: n,
        ops: local,
        p: p_nn,
    });
    let map = CpnsStepMap {
        n,
        dt,
        groups,
        residual: 0.0,
    };
    let residual = map.normalization_residual();
    Ok(CpnsStepMap { residual, ..map })
}

/// `sum_m sum_a V^† rho_m V` over a history of length `n + 1`.
pub fn apply_cpns(map: &CpnsStepMap, history: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    if history.len() != map.n + 1 {
        return Err(Error::DimensionMismatch {
            expected: map.n + 1,
            found: history.len(),
        });
    }
    let dim = history[map.n].nrows();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for g in &map.groups {
        let rho = &history[g.m];
        for v in &g.ops {
            if v.nrows() != rho.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: v.nrows(),
                    found: rho.nrows(),
                });
            }
            out += dagger(v) * rho * v;
        }
    }
    Ok(out)
}

/// Iterates of the discrete map with their largest trace drift.
#[derive(Debug, Clone)]
pub struct DiscreteRun {
    pub dt: f64,
    pub states: Vec<ComplexMatrix>,
    pub max_trace_drift: f64,
    pub max_residual: f64,
}

pub fn iterate_cpns(
    gen: &GkslGenerator,
    kernel: &MemoryKernel,
    rho0: &ComplexMatrix,
    dt: f64,
    steps: usize,
) -> Result<DiscreteRun> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(rho0.clone());
    let tr0 = trace(rho0).re;
    let mut drift: f64 = 0.0;
    let mut max_residual: f64 = 0.0;
    for n in 0..steps {
        let map = build_step_kraus(gen, kernel, dt, n, n as f64 * dt)?;
        max_residual = max_residual.max(map.residual);
        let next = apply_cpns(&map, &states)?;
        drift = drift.max((trace(&next).re - tr0).abs());
        states.push(next);
    }
    Ok(DiscreteRun {
        dt,
        states,
        max_trace_drift: drift,
        max_residual,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub dt_reference: f64,
    /// Least-squares slope of `log error` against `log dt`.
    pub order: f64,
}

impl ConvergenceTable {
    pub fn to_table(&self) -> crate::io::Table {
        let mut t = crate::io::Table::new(&["dt", "max_error"])
            .meta_f64("dt_reference", self.dt_reference)
            .meta_f64("order", self.order);
        for r in &self.rows {
            t.push(vec![r.dt, r.max_error]);
        }
        t
    }
}

pub fn fitted_order(dts: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Discrete iterates against the continuum propagator at `min(dt_list) / 8`.
pub fn convergence_study(
    gen: &GkslGenerator,
    kernel: &MemoryKernel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt_list: &[f64],
) -> Result<ConvergenceTable> {
    if dt_list.len() < 2 || dt_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition(
            "dt_list needs at least two strictly descending entries".into(),
        ));
    }
    let dt_ref = dt_list[dt_list.len() - 1] / 8.0;
    let reference = propagate(rho0, gen, kernel, &PropagatorConfig::new(dt_ref, t_final))?;
    let mut rows = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let steps = crate::propagator::steps_for(t_final, dt)?;
        let run = iterate_cpns(gen, kernel, rho0.matrix(), dt, steps)?;
        let mut err: f64 = 0.0;
        for (k, m) in run.states.iter().enumerate() {
            let r = reference.index_of(k as f64 * dt)?;
            err = err.max(max_abs_diff(m, &reference.state(r)));
        }
        if !err.is_finite() {
            return Err(Error::NonFinite("discrete iterate"));
        }
        rows.push(ConvergenceRow { dt, max_error: err });
    }
    let dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.max_error).collect();
    let order = fitted_order(&dts, &errs);
    for w in rows.windows(2) {
        if !(w[1].max_error < w[0].max_error) {
            return Err(Error::Precondition(format!(
                "error does not decrease from dt = {} to dt = {}",
                w[0].dt, w[1].dt
            )));
        }
    }
    Ok(ConvergenceTable {
        rows,
        dt_reference: dt_ref,
        order,
    })
}
