//! Invariant checks on a configured model.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Problem;
use crate::correlation::two_time_correlation;
use crate::cpns::build_step_kraus;
use crate::error::Result;
use crate::operator::{
    apply_gksl, apply_memory, c64, hermiticity_error, identity, max_abs_diff, trace, ComplexMatrix,
    TOL_POS,
};
use crate::propagator::{propagate, propagate_conditional, Conditioning, PropagatorConfig};

/// Upper bound on grid steps for the untruncated-memory comparison.
pub const WINDOW_CHECK_STEPS: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    /// Records `value <= tol`.
    pub fn at_most(&mut self, name: &str, value: f64, tol: f64) {
        self.checks.push(Check {
            name: name.into(),
            value,
            tol,
            passed: value <= tol,
        });
    }

    /// Records `value >= tol`.
    pub fn at_least(&mut self, name: &str, value: f64, tol: f64) {
        self.checks.push(Check {
            name: name.into(),
            value,
            tol,
            passed: value >= tol,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# columns check value tol status\n");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                c.name,
                crate::io::fmt_f64(c.value),
                crate::io::fmt_f64(c.tol),
                if c.passed { "pass" } else { "FAIL" }
            );
        }
        s
    }
}

pub fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| {
        c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let a = random_matrix(rng, dim);
    (&a + a.adjoint()).scale(0.5)
}

/// `A A^† / Tr(A A^†)` for a random `A`.
pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let a = random_matrix(rng, dim);
    let m = &a * a.adjoint();
    let tr = trace(&m).re;
    m.unscale(tr)
}

/// Runs the suite; numerical failures inside a check propagate as errors.
pub fn verify_problem(p: &Problem, seed: u64) -> Result<VerifyReport> {
    let mut r = VerifyReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = p.gen.dim();

    let (mut herm, mut tr) = (0.0f64, 0.0f64);
    let (mut mem_herm, mut mem_tr) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let rho = random_hermitian(&mut rng, dim);
        let out = apply_gksl(&p.gen, &rho, 0.0)?;
        herm = herm.max(hermiticity_error(&out));
        tr = tr.max(trace(&out).norm());
        if !p.kernel.is_zero() {
            let lag = rng.gen_range(0.0..p.solver.dt * 50.0);
            let other = random_hermitian(&mut rng, dim);
            let m = apply_memory(&p.kernel, &other, &rho, lag)?;
            mem_herm = mem_herm.max(hermiticity_error(&m));
            let expected = p.kernel.rate_density(lag)? * (trace(&other) - trace(&rho));
            mem_tr = mem_tr.max((trace(&m) - expected).norm());
        }
    }
    r.at_most("generator_hermiticity", herm, 1e-12);
    r.at_most("generator_trace", tr, 1e-12);
    if !p.kernel.is_zero() {
        r.at_most("memory_hermiticity", mem_herm, 1e-12);
        r.at_most("memory_trace_identity", mem_tr, 1e-12);
        let mut c = ComplexMatrix::zeros(dim, dim);
        for a in p.kernel.jump_ops() {
            c += a * a.adjoint();
        }
        let resid = max_abs_diff(&c, &identity(dim).scale(p.kernel.normalization()));
        r.at_most("rate_density_identity", resid, 1e-12);
    }
    if let Some(b) = &p.bath {
        if !b.is_flat() {
            let lags: Vec<f64> = (0..2000).map(|k| k as f64 * p.solver.dt).collect();
            let rep = b.check_nonnegativity(&lags)?;
            r.at_least(
                "kernel_nonnegativity",
                rep.min_value,
                -crate::operator::TOL_KERNEL,
            );
            let mut sym = 0.0f64;
            for _ in 0..8 {
                let w = rng.gen_range(0.1..20.0);
                sym = sym.max((b.gamma_nm(-w)? - b.gamma_nm(w)?.conj()).norm());
            }
            r.at_most("gamma_conjugate_symmetry", sym, 1e-10);
        }
    }

    let history = propagate(&p.rho0, &p.gen, &p.kernel, &p.solver)?;
    let d = history.diagnostics(true);
    r.at_most("trace_conservation", d.max_trace_error, 1e-8);
    r.at_most("hermiticity", d.max_herm_error, 1e-9);
    r.at_least("positivity", d.min_eigenvalue, -TOL_POS);

    if !p.kernel.is_zero() {
        let window = match (p.solver.memory_window, &p.bath) {
            (Some(w), _) => Some(w),
            (None, Some(b)) if !b.is_flat() => Some(b.decay_lag()?),
            _ => None,
        };
        if let Some(w) = window {
            let steps = (p.solver.t_final / p.solver.dt).round() as usize;
            let n = steps.min(WINDOW_CHECK_STEPS);
            let cfg = PropagatorConfig::new(p.solver.dt, n as f64 * p.solver.dt);
            let full = propagate(&p.rho0, &p.gen, &p.kernel, &cfg)?;
            let cut = propagate(&p.rho0, &p.gen, &p.kernel, &cfg.with_window(w))?;
            let diff = full
                .states()
                .zip(cut.states())
                .map(|(a, b)| max_abs_diff(&a, &b))
                .fold(0.0, f64::max);
            r.at_most("memory_window_soundness", diff, 1e-5);
        }
    }

    let n = (history.len() - 1).min(40);
    let map = build_step_kraus(&p.gen, &p.kernel, p.solver.dt, n, n as f64 * p.solver.dt)?;
    r.at_most("cpns_weight_sum", (map.total_weight() - 1.0).abs(), 1e-10);
    let states: Vec<ComplexMatrix> = history.states().take(n + 1).collect();
    let out = map.apply(&states)?;
    let mut homog = 0.0f64;
    for q in [0.0, 0.3, 1.0] {
        let scaled: Vec<ComplexMatrix> = states.iter().map(|m| m.scale(q)).collect();
        homog = homog.max(max_abs_diff(&map.apply(&scaled)?, &out.scale(q)));
    }
    r.at_most("cpns_homogeneity", homog, 1e-12);

    if let Some(m) = &p.measurement {
        if let Ok(anchor) = history.index_of(m.t_star) {
            let before = history.checksum();
            let tau = m.tau_max.min(history.t_final() - m.t_star).max(0.0);
            let tau = (tau / p.solver.dt).floor() * p.solver.dt;
            let corr = two_time_correlation(
                &history,
                &p.gen,
                &p.kernel,
                &m.spec,
                m.t_star,
                tau,
                p.solver.memory_window,
            )?;
            r.at_most(
                "correlation_finite",
                if corr.values.iter().all(|v| v.is_finite()) {
                    0.0
                } else {
                    1.0
                },
                0.0,
            );
            let rho = history.state(anchor);
            let cond = Conditioning {
                t: m.t_star,
                override_state: rho.clone(),
                scale: trace(&rho).re,
            };
            let seg = propagate_conditional(
                &history,
                &cond,
                &p.gen,
                &p.kernel,
                tau,
                p.solver.memory_window,
            )?;
            r.at_most(
                "conditional_trace",
                seg.diagnostics(false).max_trace_error,
                1e-8,
            );
            r.at_most(
                "causality_checksum",
                if history.checksum() == before {
                    0.0
                } else {
                    1.0
                },
                0.0,
            );
        }
    }
    Ok(r)
}
