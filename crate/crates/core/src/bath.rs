//! Bath spectral densities and the memory functions they induce.
//!
//! A bath is described by its effective density `J(w) = |f(w)|^2 n(w)` on
//! `w >= 0`, a coupling `g` and the reference (level splitting) frequency
//! `w0`. The memory function is the cosine transform about `w0`
//!
//! ```text
//! S(t) = 2 g^2 int_0^inf J(w) cos((w - w0) t) dw
//! ```
//!
//! and the frequency dependent rate is its half-line Fourier transform
//! `gamma(w) = int_0^inf S(t) e^{i w t} dt`.
//!
//! The Lorentzian family is treated as a full-line Lorentzian: the sliver of
//! weight at negative frequencies is included so the closed forms are exact,
//! and its size is available from [`BathSpectrum::negative_frequency_weight`].
//! Nonnegativity of `S` is not automatic for arbitrary `J`; it is checked at
//! runtime.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{ComplexMatrix, MemoryKernel, C64, TOL_KERNEL};
use crate::quad::{integrate_pieces, QuadOptions};

/// Ratio `|S(T_mem)| / S(0)` at which the memory is considered gone.
pub const DECAY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumFamily {
    /// White noise; only meaningful as the Markovian limit.
    Flat { c_white: f64 },
    /// `J(w) = (A / pi) k / ((w - wc)^2 + k^2)`, so that the full-line weight is `A`.
    Lorentzian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `J(w) = A w e^{-w / L} / L^2`, with unit weight times `A`.
    OhmicExpCutoff { amplitude: f64, cutoff: f64 },
    /// Linearly interpolated table, zero outside its range.
    Tabulated { omega: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpectrum {
    family: SpectrumFamily,
    coupling: f64,
    reference: f64,
}

impl BathSpectrum {
    pub fn new(family: SpectrumFamily, coupling: f64, reference: f64) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidSpectrum(msg.to_string()));
        if !coupling.is_finite() || !reference.is_finite() {
            return bad("coupling and reference must be finite");
        }
        match &family {
            SpectrumFamily::Flat { c_white } => {
                if !(*c_white >= 0.0) {
                    return bad("flat density must be nonnegative");
                }
            }
            SpectrumFamily::Lorentzian {
                amplitude,
                center,
                width,
            } => {
                if !(*amplitude >= 0.0) || !(*width > 0.0) || !center.is_finite() {
                    return bad("lorentzian needs amplitude >= 0 and width > 0");
                }
            }
            SpectrumFamily::OhmicExpCutoff { amplitude, cutoff } => {
                if !(*amplitude >= 0.0) || !(*cutoff > 0.0) {
                    return bad("ohmic density needs amplitude >= 0 and cutoff > 0");
                }
            }
            SpectrumFamily::Tabulated { omega, values } => {
                if omega.len() != values.len() || omega.len() < 2 {
                    return bad("table needs at least two (omega, value) rows");
                }
                if omega[0] < 0.0 {
                    return bad("table frequencies must be nonnegative");
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("table frequencies must be strictly ascending");
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return bad("table values must be finite and nonnegative");
                }
            }
        }
        Ok(Self {
            family,
            coupling,
            reference,
        })
    }

    pub fn lorentzian(amplitude: f64, width: f64, coupling: f64, reference: f64) -> Result<Self> {
        Self::new(
            SpectrumFamily::Lorentzian {
                amplitude,
                center: reference,
                width,
            },
            coupling,
            reference,
        )
    }

    pub fn flat(c_white: f64, coupling: f64, reference: f64) -> Result<Self> {
        Self::new(SpectrumFamily::Flat { c_white }, coupling, reference)
    }

    pub fn family(&self) -> &SpectrumFamily {
        &self.family
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.family, SpectrumFamily::Flat { .. })
    }

    fn g2(&self) -> f64 {
        2.0 * self.coupling * self.coupling
    }

    /// Effective density `J(w)`.
    pub fn density(&self, w: f64) -> f64 {
        match &self.family {
            SpectrumFamily::Flat { c_white } => {
                if w >= 0.0 {
                    *c_white
                } else {
                    0.0
                }
            }
            SpectrumFamily::Lorentzian {
                amplitude,
                center,
                width,
            } => amplitude / PI * width / ((w - center).powi(2) + width * width),
            SpectrumFamily::OhmicExpCutoff { amplitude, cutoff } => {
                if w < 0.0 {
                    0.0
                } else {
                    amplitude * w * (-w / cutoff).exp() / (cutoff * cutoff)
                }
            }
            SpectrumFamily::Tabulated { omega, values } => interpolate(omega, values, w),
        }
    }

    /// `int J dw`; for the Lorentzian this is the full-line weight.
    pub fn total_weight(&self) -> Result<f64> {
        match &self.family {
            SpectrumFamily::Flat { .. } => Err(Error::FlatSpectrum),
            SpectrumFamily::Lorentzian { amplitude, .. } => Ok(*amplitude),
            SpectrumFamily::OhmicExpCutoff { amplitude, .. } => Ok(*amplitude),
            SpectrumFamily::Tabulated { omega, values } => Ok(omega
                .windows(2)
                .zip(values.windows(2))
                .map(|(w, v)| 0.5 * (w[1] - w[0]) * (v[0] + v[1]))
                .sum()),
        }
    }

    /// Part of `S(0)` carried by `w < 0` in the Lorentzian closed form.
    pub fn negative_frequency_weight(&self) -> f64 {
        match &self.family {
            SpectrumFamily::Lorentzian {
                amplitude,
                center,
                width,
            } => self.g2() * amplitude / PI * (0.5 * PI - (center / width).atan()),
            _ => 0.0,
        }
    }

    /// Memory function `S(lag)`.
    pub fn s_e_of_t(&self, lag: f64) -> Result<f64> {
        if lag < 0.0 {
            return Err(Error::Precondition(format!("negative lag {lag}")));
        }
        let g2 = self.g2();
        match &self.family {
            SpectrumFamily::Flat { .. } => Err(Error::FlatSpectrum),
            SpectrumFamily::Lorentzian {
                amplitude,
                center,
                width,
            } => {
                let detune = center - self.reference;
                Ok(g2 * amplitude * (-width * lag).exp() * (detune * lag).cos())
            }
            SpectrumFamily::OhmicExpCutoff { amplitude, cutoff } => {
                // int_0^inf w e^{-w/L} cos((w - w0) t) dw = Re[e^{-i w0 t} / (1/L - i t)^2]
                let z = C64::new(1.0 / cutoff, -lag);
                let phase = C64::from_polar(1.0, -self.reference * lag);
                Ok(g2 * amplitude / (cutoff * cutoff) * (phase / (z * z)).re)
            }
            SpectrumFamily::Tabulated { omega, values } => {
                Ok(g2 * cosine_transform_linear(omega, values, self.reference, lag))
            }
        }
    }

    /// Lag `T_mem` beyond which `|S| <= DECAY_THRESHOLD * S(0)`.
    pub fn decay_lag(&self) -> Result<f64> {
        let ln = (1.0 / DECAY_THRESHOLD).ln();
        match &self.family {
            SpectrumFamily::Flat { .. } => Err(Error::FlatSpectrum),
            SpectrumFamily::Lorentzian { width, .. } => Ok(ln / width),
            SpectrumFamily::OhmicExpCutoff { cutoff, .. } => {
                Ok((1.0 / DECAY_THRESHOLD - 1.0).sqrt() / cutoff)
            }
            SpectrumFamily::Tabulated { omega, values } => {
                // Integration by parts bounds |int J cos| by b1/t + b2/t^2.
                let n = omega.len();
                let slope = |k: usize| (values[k + 1] - values[k]) / (omega[k + 1] - omega[k]);
                let b1 = values[0] + values[n - 1];
                let mut b2 = slope(0).abs() + slope(n - 2).abs();
                for k in 1..n - 1 {
                    b2 += (slope(k) - slope(k - 1)).abs();
                }
                let target = DECAY_THRESHOLD * self.total_weight()?;
                if target <= 0.0 {
                    return Ok(0.0);
                }
                // smallest t with b1/t + b2/t^2 <= target
                let t = (b1 + (b1 * b1 + 4.0 * target * b2).sqrt()) / (2.0 * target);
                Ok(t)
            }
        }
    }

    /// Markovian rate per jump operator: `Re gamma(0)`, or the white-noise
    /// value `2 pi g^2 c_white` for the flat family.
    pub fn markov_rate(&self) -> Result<f64> {
        match &self.family {
            SpectrumFamily::Flat { c_white } => Ok(PI * self.g2() * c_white),
            _ => Ok(self.gamma_nm(0.0)?.re),
        }
    }

    /// `gamma(w) = int_0^inf S(t) e^{i w t} dt` by adaptive quadrature up to
    /// `T_mem`, plus the exact tail where it is known.
    pub fn gamma_nm(&self, w: f64) -> Result<C64> {
        if let SpectrumFamily::Flat { .. } = self.family {
            return Ok(C64::new(self.markov_rate()?, 0.0));
        }
        let s0 = self.s_e_of_t(0.0)?;
        if s0 == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let t_mem = self.decay_lag()?;
        let s_end = self.s_e_of_t(t_mem)?;
        let tail = self.analytic_tail(t_mem, w);
        if tail.is_none() && s_end.abs() > DECAY_THRESHOLD * s0.abs() * (1.0 + 1e-9) {
            return Err(Error::KernelNotDecayed {
                lag: t_mem,
                value: s_end.abs(),
                threshold: DECAY_THRESHOLD * s0.abs(),
            });
        }
        // panels of roughly half an oscillation of the fastest phase
        let fastest = w.abs() + self.internal_frequency();
        let pieces = ((t_mem * fastest / PI).ceil() as usize).clamp(4, 20_000);
        let breaks: Vec<f64> = (0..=pieces)
            .map(|k| t_mem * k as f64 / pieces as f64)
            .collect();
        let opts = QuadOptions {
            rel_tol: 1e-13,
            abs_tol: 1e-15 * s0.abs() * t_mem,
            max_intervals: 200,
        };
        let wa = w.abs();
        let re = integrate_pieces(
            |t| self.s_e_of_t(t).unwrap_or(f64::NAN) * (wa * t).cos(),
            &breaks,
            opts,
        )?;
        let im = integrate_pieces(
            |t| self.s_e_of_t(t).unwrap_or(f64::NAN) * (wa * t).sin(),
            &breaks,
            opts,
        )?;
        let mut gamma = C64::new(re, im);
        if let Some(tail) = self.analytic_tail(t_mem, wa) {
            gamma += tail;
        }
        Ok(if w < 0.0 { gamma.conj() } else { gamma })
    }

    fn internal_frequency(&self) -> f64 {
        match &self.family {
            SpectrumFamily::Lorentzian { center, width, .. } => {
                (center - self.reference).abs() + width
            }
            SpectrumFamily::OhmicExpCutoff { cutoff, .. } => self.reference.abs() + 1.0 / cutoff,
            SpectrumFamily::Tabulated { omega, .. } => (omega[omega.len() - 1] - self.reference)
                .abs()
                .max((omega[0] - self.reference).abs()),
            SpectrumFamily::Flat { .. } => 0.0,
        }
    }

    /// `int_T^inf S(t) e^{i w t} dt` when `S` is a damped cosine.
    fn analytic_tail(&self, t: f64, w: f64) -> Option<C64> {
        let SpectrumFamily::Lorentzian {
            amplitude,
            center,
            width,
        } = &self.family
        else {
            return None;
        };
        let d = center - self.reference;
        let half = 0.5 * self.g2() * amplitude;
        let term = |nu: f64| {
            let rate = C64::new(*width, -nu);
            (-rate * t).exp() / rate
        };
        Some((term(w + d) + term(w - d)) * half)
    }

    /// Scan `S` on `lags` for values below `-TOL_KERNEL`.
    pub fn check_nonnegativity(&self, lags: &[f64]) -> Result<NonnegativityReport> {
        if self.is_flat() {
            return Ok(NonnegativityReport {
                min_value: 0.0,
                first_violation: None,
            });
        }
        let mut min_value = f64::INFINITY;
        let mut first_violation = None;
        for &lag in lags {
            let v = self.s_e_of_t(lag)?;
            min_value = min_value.min(v);
            if v < -TOL_KERNEL && first_violation.is_none() {
                first_violation = Some(lag);
            }
        }
        if lags.is_empty() {
            min_value = 0.0;
        }
        Ok(NonnegativityReport {
            min_value,
            first_violation,
        })
    }

    /// `S` sampled at `k dt`, `k = 0..=ceil(t_mem / dt)`.
    pub fn memory_table(&self, dt: f64, t_mem: f64) -> Result<MemoryFunctionTable> {
        if !(dt > 0.0) {
            return Err(Error::Precondition("dt must be positive".into()));
        }
        let n = (t_mem / dt).ceil() as usize;
        let mut values = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let lag = k as f64 * dt;
            let v = self.s_e_of_t(lag)?;
            if v < -TOL_KERNEL {
                return Err(Error::KernelPositivity { lag, value: v });
            }
            values.push(v);
        }
        Ok(MemoryFunctionTable { dt, values })
    }

    /// Kernel `R_a(t, t') = sqrt(S(t - t')) A_a`.
    pub fn memory_kernel(&self, jump_ops: Vec<ComplexMatrix>) -> Result<MemoryKernel> {
        if self.is_flat() {
            return Err(Error::FlatSpectrum);
        }
        let dim = jump_ops.first().map_or(0, |a| a.nrows());
        let bath = self.clone();
        MemoryKernel::new(
            dim,
            Arc::new(move |lag: f64| bath.s_e_of_t(lag).unwrap_or(f64::NAN)),
            jump_ops,
            self.family_name(),
        )
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            SpectrumFamily::Flat { .. } => "flat",
            SpectrumFamily::Lorentzian { .. } => "lorentzian",
            SpectrumFamily::OhmicExpCutoff { .. } => "ohmic_exp_cutoff",
            SpectrumFamily::Tabulated { .. } => "tabulated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonnegativityReport {
    pub min_value: f64,
    pub first_violation: Option<f64>,
}

/// Memory function on the propagator's lag grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryFunctionTable {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl MemoryFunctionTable {
    pub fn max_lag(&self) -> f64 {
        self.dt * (self.values.len().saturating_sub(1)) as f64
    }
}

fn interpolate(omega: &[f64], values: &[f64], w: f64) -> f64 {
    if w < omega[0] || w > omega[omega.len() - 1] {
        return 0.0;
    }
    let k = match omega.binary_search_by(|x| x.total_cmp(&w)) {
        Ok(k) => return values[k],
        Err(k) => k,
    };
    let (a, b) = (omega[k - 1], omega[k]);
    let x = (w - a) / (b - a);
    values[k - 1] * (1.0 - x) + values[k] * x
}

/// `int J(w) cos((w - w0) t) dw` for piecewise-linear `J`, exact per segment.
fn cosine_transform_linear(omega: &[f64], values: &[f64], w0: f64, t: f64) -> f64 {
    let mut total = 0.0;
    for (w, v) in omega.windows(2).zip(values.windows(2)) {
        let (a, h) = (w[0], w[1] - w[0]);
        let (p, q) = (v[0], (v[1] - v[0]) / h);
        if (t * h).abs() < 1e-2 {
            // Simpson; error O((t h)^4) relative
            let f = |u: f64| (p + q * u) * ((a + u - w0) * t).cos();
            total += h / 6.0 * (f(0.0) + 4.0 * f(0.5 * h) + f(h));
        } else {
            // int_0^h (p + q u) cos(t (u + a - w0)) du
            let phi = |u: f64| t * (u + a - w0);
            let sin_term = (phi(h).sin() - phi(0.0).sin()) / t;
            let u_term = (h * phi(h).sin()) / t + (phi(h).cos() - phi(0.0).cos()) / (t * t);
            total += p * sin_term + q * u_term;
        }
    }
    total
}

/// Parse a two-column `omega value` table; `#` starts a comment.
pub fn parse_tabulated(text: &str) -> Result<SpectrumFamily> {
    let mut omega = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Parse(format!(
                "line {}: expected 2 columns, found {}",
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        omega.push(parse(cols[0])?);
        values.push(parse(cols[1])?);
    }
    Ok(SpectrumFamily::Tabulated { omega, values })
}

/// Brute-force `2 g^2 int_0^inf J cos((w - w0) t) dw` for densities that
/// vanish beyond `w_max`; used to cross-check closed forms.
pub fn cosine_transform_quadrature(bath: &BathSpectrum, lag: f64, w_max: f64) -> Result<f64> {
    let w0 = bath.reference();
    let scale = lag.abs().max(1.0 / w_max);
    let pieces = ((w_max * scale / PI).ceil() as usize).clamp(8, 100_000);
    let breaks: Vec<f64> = (0..=pieces)
        .map(|k| w_max * k as f64 / pieces as f64)
        .collect();
    let opts = QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-16,
        max_intervals: 200,
    };
    let v = integrate_pieces(|w| bath.density(w) * ((w - w0) * lag).cos(), &breaks, opts)?;
    Ok(bath.g2() * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentzian(g: f64, a: f64, k: f64, w0: f64) -> BathSpectrum {
        BathSpectrum::lorentzian(a, k, g, w0).unwrap()
    }

    #[test]
    fn lorentzian_memory_is_exponential() {
        let b = lorentzian(0.5, 2.0, 1.5, 1000.0);
        for lag in [0.0, 0.1, 1.0, 3.0] {
            let s = b.s_e_of_t(lag).unwrap();
            let exact = 2.0 * 0.25 * 2.0 * (-1.5 * lag).exp();
            assert!((s - exact).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn lag_zero_is_total_weight() {
        let b = BathSpectrum::new(
            SpectrumFamily::OhmicExpCutoff {
                amplitude: 0.7,
                cutoff: 3.0,
            },
            0.4,
            2.0,
        )
        .unwrap();
        let s0 = b.s_e_of_t(0.0).unwrap();
        assert!((s0 - 2.0 * 0.16 * 0.7).abs() < 1e-14);
    }

    #[test]
    fn flat_is_rejected_for_memory() {
        let b = BathSpectrum::flat(0.2, 1.0, 0.0).unwrap();
        assert!(matches!(b.s_e_of_t(0.5), Err(Error::FlatSpectrum)));
        assert!(matches!(
            b.memory_kernel(vec![crate::operator::identity(2)]),
            Err(Error::FlatSpectrum)
        ));
        // 2 pi g^2 c: half the weight of the delta at the endpoint
        assert!((b.markov_rate().unwrap() - 2.0 * PI * 0.2).abs() < 1e-14);
    }

    #[test]
    fn ohmic_closed_form_matches_quadrature() {
        let b = BathSpectrum::new(
            SpectrumFamily::OhmicExpCutoff {
                amplitude: 1.0,
                cutoff: 2.0,
            },
            1.0,
            3.0,
        )
        .unwrap();
        for lag in [0.0, 0.3, 1.0, 4.0] {
            let closed = b.s_e_of_t(lag).unwrap();
            let brute = cosine_transform_quadrature(&b, lag, 160.0).unwrap();
            assert!((closed - brute).abs() < 1e-9, "{lag}: {closed} vs {brute}");
        }
    }

    #[test]
    fn tabulated_transform_matches_quadrature() {
        let omega: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let values: Vec<f64> = omega
            .iter()
            .map(|w| (-(w - 5.0f64).powi(2)).exp())
            .collect();
        let b = BathSpectrum::new(SpectrumFamily::Tabulated { omega, values }, 0.3, 5.0).unwrap();
        for lag in [0.0, 0.01, 0.5, 2.0, 9.0] {
            let exact = b.s_e_of_t(lag).unwrap();
            let brute = cosine_transform_quadrature(&b, lag, 10.0).unwrap();
            assert!((exact - brute).abs() < 1e-10, "{lag}: {exact} vs {brute}");
        }
        let w = b.total_weight().unwrap();
        assert!((b.s_e_of_t(0.0).unwrap() - 2.0 * 0.09 * w).abs() < 1e-14);
    }

    #[test]
    fn tabulated_decay_bound_holds() {
        let omega = vec![0.0, 1.0, 2.0, 3.0];
        let values = vec![0.0, 1.0, 1.0, 0.0];
        let b = BathSpectrum::new(SpectrumFamily::Tabulated { omega, values }, 1.0, 1.5).unwrap();
        let t = b.decay_lag().unwrap();
        let s0 = b.s_e_of_t(0.0).unwrap();
        for k in 0..50 {
            let lag = t * (1.0 + k as f64 * 0.37);
            assert!(b.s_e_of_t(lag).unwrap().abs() <= DECAY_THRESHOLD * s0 * 1.000001);
        }
    }

    #[test]
    fn exponential_gamma_closed_form() {
        let (g, a, k) = (0.3, 1.7, 2.5);
        let b = lorentzian(g, a, k, 50.0);
        let amp = 2.0 * g * g * a;
        for w in [-25.0, -3.0, 0.0, 1.0, 7.5, 25.0] {
            let got = b.gamma_nm(w).unwrap();
            let exact = C64::new(amp, 0.0) / C64::new(k, -w);
            assert!((got - exact).norm() <= 1e-6 * exact.norm(), "{w}");
        }
        let g0 = b.gamma_nm(0.0).unwrap();
        assert!(g0.im.abs() < 1e-14);
        assert!((g0.re - amp / k).abs() < 1e-10);
    }

    #[test]
    fn gamma_conjugate_symmetry() {
        let b = BathSpectrum::new(
            SpectrumFamily::OhmicExpCutoff {
                amplitude: 1.0,
                cutoff: 1.0,
            },
            0.2,
            0.5,
        )
        .unwrap();
        for w in [0.3, 1.7, 4.0] {
            let p = b.gamma_nm(w).unwrap();
            let m = b.gamma_nm(-w).unwrap();
            assert!((p - m.conj()).norm() <= 1e-10);
        }
    }

    #[test]
    fn nonnegativity_scan() {
        let b = lorentzian(1.0, 1.0, 1.0, 10.0);
        let lags: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let rep = b.check_nonnegativity(&lags).unwrap();
        assert!(rep.min_value >= 0.0);
        assert!(rep.first_violation.is_none());

        // Peak far below the reference: the cosine transform swings negative.
        let off = BathSpectrum::new(
            SpectrumFamily::OhmicExpCutoff {
                amplitude: 1.0,
                cutoff: 0.5,
            },
            1.0,
            20.0,
        )
        .unwrap();
        let rep = off.check_nonnegativity(&lags).unwrap();
        assert!(rep.min_value < 0.0);
        let first = rep.first_violation.unwrap();
        assert!(off.s_e_of_t(first).unwrap() < -TOL_KERNEL);
        assert!(off.memory_table(0.05, 10.0).is_err());

        let zero = lorentzian(1.0, 0.0, 1.0, 0.0);
        assert_eq!(zero.check_nonnegativity(&lags).unwrap().min_value, 0.0);
    }

    #[test]
    fn invalid_spectra_rejected() {
        assert!(BathSpectrum::lorentzian(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(BathSpectrum::new(
            SpectrumFamily::Tabulated {
                omega: vec![0.0, 2.0, 1.0],
                values: vec![0.0, 1.0, 1.0]
            },
            1.0,
            0.0
        )
        .is_err());
        assert!(BathSpectrum::new(
            SpectrumFamily::Tabulated {
                omega: vec![0.0, 1.0],
                values: vec![0.0, -1.0]
            },
            1.0,
            0.0
        )
        .is_err());
    }

    #[test]
    fn parse_table() {
        let text = "# omega J\n0.0 0.0\n1.0 2.5 # peak\n\n2.0 0.0\n";
        let SpectrumFamily::Tabulated { omega, values } = parse_tabulated(text).unwrap() else {
            panic!("wrong family");
        };
        assert_eq!(omega, vec![0.0, 1.0, 2.0]);
        assert_eq!(values, vec![0.0, 2.5, 0.0]);
        assert!(parse_tabulated("1.0\n").is_err());
        assert!(parse_tabulated("1.0 x\n").is_err());
    }
}
