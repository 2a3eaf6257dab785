//! Two-time correlations and emission spectra from conditional states.
//!
//! A measurement at time `t` replaces the state by a conditional object
//! `M(rho(t))` and rescales the stored history by `E[I(t)] = Tr M(rho(t))`.
//! The conditional object is then evolved with the full memory integral and
//! `E[I(t + tau) I(t)] = Tr M(rho_cond(t + tau))`. No regression theorem is
//! used, so the same code applies with and without memory.

use crate::error::{Error, Result};
use crate::io::Table;
use crate::operator::{
    dagger, ensure_dim, hermiticity_error, trace, ComplexMatrix, GkslGenerator, MemoryKernel,
    TOL_HERM,
};
use crate::propagator::{propagate_conditional, Conditioning, StateHistory};

/// Relative decay required of a correlation before transforming it.
pub const DECAY_TOL: f64 = 1e-4;
/// Default stationarity bound on `|rho(t) - rho(t - lag)|`.
pub const STATIONARITY_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementKind {
    /// Effects `J_a`, outcome values `nu_a`: `M(rho) = sum_a nu_a J_a^† rho J_a`.
    InstantaneousEffect(Vec<ComplexMatrix>),
    /// Weak measurement of `X`: `M(rho) = X^† rho + rho X`.
    WeakObservable(ComplexMatrix),
    /// Photon-counting style current on Lindblad channels of the generator.
    ContinuousLindblad(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSpec {
    pub kind: MeasurementKind,
    /// One weight per effect or channel; ignored for weak observables.
    pub weights: Vec<f64>,
}

impl MeasurementSpec {
    pub fn effect(j: ComplexMatrix) -> Self {
        Self {
            kind: MeasurementKind::InstantaneousEffect(vec![j]),
            weights: vec![1.0],
        }
    }

    pub fn effects(js: Vec<ComplexMatrix>, weights: Vec<f64>) -> Self {
        Self {
            kind: MeasurementKind::InstantaneousEffect(js),
            weights,
        }
    }

    pub fn weak(x: ComplexMatrix) -> Self {
        Self {
            kind: MeasurementKind::WeakObservable(x),
            weights: Vec::new(),
        }
    }

    pub fn continuous(channels: Vec<usize>, weights: Vec<f64>) -> Self {
        Self {
            kind: MeasurementKind::ContinuousLindblad(channels),
            weights,
        }
    }
}

/// A measurement map resolved against a generator.
#[derive(Debug, Clone)]
enum Resolved {
    Kraus(Vec<(f64, ComplexMatrix)>),
    Weak(ComplexMatrix),
}

impl Resolved {
    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        match self {
            Resolved::Kraus(ops) => {
                let mut out = ComplexMatrix::zeros(rho.nrows(), rho.ncols());
                for (nu, j) in ops {
                    out += (dagger(j) * rho * j).scale(*nu);
                }
                out
            }
            Resolved::Weak(x) => dagger(x) * rho + rho * x,
        }
    }
}

fn resolve(spec: &MeasurementSpec, gen: &GkslGenerator, t: f64) -> Result<Resolved> {
    let dim = gen.dim();
    let check_weights = |n: usize| -> Result<()> {
        if spec.weights.len() != n {
            return Err(Error::Precondition(format!(
                "{} weights given for {n} operators",
                spec.weights.len()
            )));
        }
        if spec.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("measurement weight"));
        }
        Ok(())
    };
    match &spec.kind {
        MeasurementKind::InstantaneousEffect(js) => {
            check_weights(js.len())?;
            for j in js {
                ensure_dim(j, dim)?;
            }
            Ok(Resolved::Kraus(
                spec.weights
                    .iter()
                    .copied()
                    .zip(js.iter().cloned())
                    .collect(),
            ))
        }
        MeasurementKind::WeakObservable(x) => {
            ensure_dim(x, dim)?;
            Ok(Resolved::Weak(x.clone()))
        }
        MeasurementKind::ContinuousLindblad(idx) => {
            check_weights(idx.len())?;
            let ls = gen.lindblads(t);
            let mut ops = Vec::with_capacity(idx.len());
            for (&i, &nu) in idx.iter().zip(&spec.weights) {
                let l = ls.get(i).ok_or_else(|| {
                    Error::Precondition(format!(
                        "channel {i} not present; generator has {} Lindblad operators",
                        ls.len()
                    ))
                })?;
                ops.push((nu, l.clone()));
            }
            Ok(Resolved::Kraus(ops))
        }
    }
}

/// `(J^† rho(t) J, Tr J^† rho(t) J)` for an effect `J`.
pub fn conditional_init_instantaneous(
    history: &StateHistory,
    j: &ComplexMatrix,
    t: f64,
) -> Result<(ComplexMatrix, f64)> {
    ensure_dim(j, history.dim())?;
    let rho = history.state(history.index_of(t)?);
    let over = dagger(j) * rho * j;
    let tr = trace(&over);
    if tr.im.abs() > 1e-10 || tr.re < -1e-10 {
        return Err(Error::Precondition(format!(
            "effect yields trace {tr}; J is not an effect"
        )));
    }
    Ok((over, tr.re.max(0.0)))
}

/// `(X^† rho(t) + rho(t) X, 2 Re Tr X rho(t))`.
pub fn conditional_init_weak(
    history: &StateHistory,
    x: &ComplexMatrix,
    t: f64,
) -> Result<(ComplexMatrix, f64)> {
    ensure_dim(x, history.dim())?;
    let rho = history.state(history.index_of(t)?);
    let over = Resolved::Weak(x.clone()).apply(&rho);
    let scale = 2.0 * trace(&(x * &rho)).re;
    Ok((over, scale))
}

/// `E[I(t + tau) I(t)]` for `tau = k dtau`, `k = 1..`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub t_anchor: f64,
    pub dtau: f64,
    /// Values at `tau = dtau, 2 dtau, ...`.
    pub values: Vec<f64>,
    /// Limit `tau -> 0+`, the trace functional on the conditional object itself.
    pub zero_plus: f64,
    /// `E[I(t)]`.
    pub mean: f64,
    /// `E[I(t)]^2`, the long-time value removed before transforming.
    pub offset: f64,
    /// Weight `K` of the `K delta(tau)` self-overlap of continuous currents.
    pub delta_weight: Option<f64>,
}

impl CorrelationSeries {
    pub fn tau(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.dtau
    }

    pub fn tau_max(&self) -> f64 {
        self.tau(self.values.len().saturating_sub(1))
    }

    /// Offset-subtracted values including `tau = 0+` at the front.
    pub fn connected(&self) -> Vec<f64> {
        std::iter::once(self.zero_plus)
            .chain(self.values.iter().copied())
            .map(|v| v - self.offset)
            .collect()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["tau", "value"])
            .meta_f64("t_anchor", self.t_anchor)
            .meta_f64("zero_plus", self.zero_plus)
            .meta_f64("mean", self.mean)
            .meta_f64("offset", self.offset);
        if let Some(k) = self.delta_weight {
            t = t.meta_f64("delta_weight", k);
        }
        for (k, &v) in self.values.iter().enumerate() {
            t.push(vec![self.tau(k), v]);
        }
        t
    }

    /// Sum of two series on the same grid, e.g. a pair of quadratures.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len()
            || self.dtau != other.dtau
            || self.t_anchor != other.t_anchor
        {
            return Err(Error::Precondition("correlation grids differ".into()));
        }
        Ok(Self {
            t_anchor: self.t_anchor,
            dtau: self.dtau,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            zero_plus: self.zero_plus + other.zero_plus,
            mean: self.mean + other.mean,
            offset: self.offset + other.offset,
            delta_weight: match (self.delta_weight, other.delta_weight) {
                (None, None) => None,
                (a, b) => Some(a.unwrap_or(0.0) + b.unwrap_or(0.0)),
            },
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            zero_plus: c * self.zero_plus,
            mean: c * self.mean,
            offset: c * self.offset,
            delta_weight: self.delta_weight.map(|k| c * k),
            ..self.clone()
        }
    }
}

/// Conditional evolution after measuring `spec` at `t`, up to `t + tau_max`.
pub fn two_time_correlation(
    history: &StateHistory,
    gen: &GkslGenerator,
    kernel: &MemoryKernel,
    spec: &MeasurementSpec,
    t: f64,
    tau_max: f64,
    memory_window: Option<f64>,
) -> Result<CorrelationSeries> {
    let map = resolve(spec, gen, t)?;
    let rho = history.state(history.index_of(t)?);
    let over = map.apply(&rho);
    let herm = hermiticity_error(&over);
    if herm > TOL_HERM {
        return Err(Error::NotHermitian {
            what: "conditional object",
            deviation: herm,
        });
    }
    let mean = trace(&over).re;
    let delta_weight = match (&spec.kind, &map) {
        (MeasurementKind::ContinuousLindblad(_), Resolved::Kraus(ops)) => Some(
            ops.iter()
                .map(|(nu, l)| nu * nu * trace(&(dagger(l) * &rho * l)).re)
                .sum(),
        ),
        _ => None,
    };
    let cond = Conditioning {
        t,
        override_state: over,
        scale: mean,
    };
    let seg = propagate_conditional(history, &cond, gen, kernel, tau_max, memory_window)?;
    let mut values = Vec::with_capacity(seg.len().saturating_sub(1));
    let mut zero_plus = 0.0;
    for (k, m) in seg.states().enumerate() {
        let v = trace(&map.apply(&m)).re;
        if k == 0 {
            zero_plus = v;
        } else {
            values.push(v);
        }
    }
    Ok(CorrelationSeries {
        t_anchor: t,
        dtau: history.dt(),
        values,
        zero_plus,
        mean,
        offset: mean * mean,
        delta_weight,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    /// Flat background `K / 2` from a delta self-overlap, not included in `values`.
    pub baseline: Option<f64>,
    /// Constant removed from the correlation before transforming.
    pub offset: f64,
}

impl SpectrumSeries {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["omega", "value"]).meta_f64("offset", self.offset);
        if let Some(b) = self.baseline {
            t = t.meta_f64("baseline", b);
        }
        for (w, v) in self.omega.iter().zip(&self.values) {
            t.push(vec![*w, *v]);
        }
        t
    }
}

/// Trapezoidal `int_0^{(n-1) d} cos(w tau) c(tau) dtau` for samples `c[k] = c(k d)`.
pub fn cosine_transform(samples: &[f64], d: f64, omega: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    // Chebyshev recurrence for cos(k w d).
    let c1 = (omega * d).cos();
    let (mut prev, mut cur) = ((omega * d).cos(), 1.0);
    let mut acc = 0.5 * samples[0];
    for (k, &v) in samples.iter().enumerate().skip(1) {
        let next = 2.0 * c1 * cur - prev;
        prev = cur;
        cur = next;
        let w = if k == n - 1 { 0.5 } else { 1.0 };
        acc += w * v * cur;
    }
    acc * d
}

/// Cosine transform of the offset-subtracted correlation on `omega_grid`.
pub fn emission_spectrum(corr: &CorrelationSeries, omega_grid: &[f64]) -> Result<SpectrumSeries> {
    let c = corr.connected();
    let peak = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail = c.last().copied().unwrap_or(0.0).abs();
    if tail > DECAY_TOL * peak {
        return Err(Error::NotDecayed { tail, peak });
    }
    let values = omega_grid
        .iter()
        .map(|&w| cosine_transform(&c, corr.dtau, w))
        .collect();
    Ok(SpectrumSeries {
        omega: omega_grid.to_vec(),
        values,
        baseline: corr.delta_weight.map(|k| 0.5 * k),
        offset: corr.offset,
    })
}

/// Largest entrywise change of the state over `lag` before `t`.
pub fn stationarity_drift(history: &StateHistory, t: f64, lag: f64) -> Result<f64> {
    let k = history.index_of(t)?;
    let k0 = history.index_of(t - lag)?;
    Ok(crate::operator::max_abs_diff(
        &history.state(k),
        &history.state(k0),
    ))
}

/// Errors when the drift over `lag` before `t` exceeds `tol`.
pub fn check_stationary(history: &StateHistory, t: f64, lag: f64, tol: f64) -> Result<f64> {
    let drift = stationarity_drift(history, t, lag)?;
    if drift > tol {
        return Err(Error::NotStationary { t, drift });
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c64, identity, projector, sigma_minus, DensityMatrix};
    use crate::propagator::{propagate, PropagatorConfig};

    fn driven() -> (GkslGenerator, MemoryKernel) {
        let sm = sigma_minus();
        let h = (&sm + sm.adjoint()).scale(0.7);
        let gen = GkslGenerator::new(h, vec![sm.adjoint()]).unwrap();
        let kernel = MemoryKernel::exponential(0.5, 4.0, vec![sm.adjoint(), sm.clone()]).unwrap();
        (gen, kernel)
    }

    fn base(gen: &GkslGenerator, kernel: &MemoryKernel) -> StateHistory {
        propagate(
            &DensityMatrix::basis(2, 1),
            gen,
            kernel,
            &PropagatorConfig::new(0.01, 2.0),
        )
        .unwrap()
    }

    #[test]
    fn instantaneous_inits() {
        let (gen, kernel) = driven();
        let h = base(&gen, &kernel);
        let (over, scale) = conditional_init_instantaneous(&h, &identity(2), 1.0).unwrap();
        assert_eq!(over, h.state(100));
        assert!((scale - 1.0).abs() < 1e-10);
        let p = projector(2, 1);
        let (over, scale) = conditional_init_instantaneous(&h, &p, 1.0).unwrap();
        let ee = h.state(100)[(1, 1)].re;
        assert!((scale - ee).abs() < 1e-14);
        assert!(crate::operator::max_abs_diff(&over, &p.scale(ee)) < 1e-14);
    }

    #[test]
    fn weak_init_on_diagonal_state() {
        let h = StateHistory::from_parts(
            0.0,
            0.1,
            2,
            vec![crate::propagator::to_vec(&ComplexMatrix::from_diagonal(
                &nalgebra::DVector::from_vec(vec![c64(0.6, 0.0), c64(0.4, 0.0)]),
            ))],
            1.0,
        );
        let (over, scale) = conditional_init_weak(&h, &sigma_minus(), 0.0).unwrap();
        assert_eq!(scale, 0.0);
        assert_eq!(over[(0, 0)], c64(0.0, 0.0));
        assert_eq!(over[(1, 1)], c64(0.0, 0.0));
        assert!(over[(0, 1)].norm() > 0.0);
        let (over, scale) = conditional_init_weak(&h, &identity(2), 0.0).unwrap();
        assert_eq!(scale, 2.0);
        assert_eq!(over, h.state(0).scale(2.0));
    }

    #[test]
    fn identity_current_is_constant() {
        let (gen, kernel) = driven();
        let h = base(&gen, &kernel);
        let c = two_time_correlation(
            &h,
            &gen,
            &kernel,
            &MeasurementSpec::weak(identity(2)),
            1.0,
            0.5,
            None,
        )
        .unwrap();
        assert!(c.values.iter().all(|v| (v - 4.0).abs() < 1e-8));
        assert_eq!(c.delta_weight, None);
    }

    #[test]
    fn continuous_channel_resolution() {
        let (gen, kernel) = driven();
        let h = base(&gen, &kernel);
        let bad = MeasurementSpec::continuous(vec![3], vec![1.0]);
        assert!(two_time_correlation(&h, &gen, &kernel, &bad, 1.0, 0.1, None).is_err());
        let ok = MeasurementSpec::continuous(vec![0], vec![2.0]);
        let c = two_time_correlation(&h, &gen, &kernel, &ok, 1.0, 0.1, None).unwrap();
        let ee = h.state(100)[(1, 1)].re;
        assert!((c.delta_weight.unwrap() - 4.0 * ee).abs() < 1e-12);
        assert!((c.mean - 2.0 * ee).abs() < 1e-12);
    }

    #[test]
    fn exponential_transform() {
        let gamma = 1.3;
        let d = 1e-3;
        let samples: Vec<f64> = (0..=14_000)
            .map(|k| (-gamma * k as f64 * d).exp())
            .collect();
        for w in [-10.0, -3.0, 0.0, 0.5, 13.0] {
            let exact = gamma / (gamma * gamma + w * w);
            let got = cosine_transform(&samples, d, w);
            assert!(((got - exact) / exact).abs() < 1e-4, "w = {w}");
        }
    }

    #[test]
    fn undecayed_correlation_rejected() {
        let c = CorrelationSeries {
            t_anchor: 0.0,
            dtau: 0.1,
            values: vec![1.0; 10],
            zero_plus: 1.0,
            mean: 0.0,
            offset: 0.0,
            delta_weight: None,
        };
        assert!(matches!(
            emission_spectrum(&c, &[0.0]),
            Err(Error::NotDecayed { .. })
        ));
        let zero = CorrelationSeries {
            values: vec![0.0; 10],
            zero_plus: 0.0,
            ..c
        };
        let s = emission_spectrum(&zero, &[0.0, 1.0]).unwrap();
        assert_eq!(s.values, vec![0.0, 0.0]);
    }
}
