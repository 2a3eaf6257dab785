//! Driven two-level system coupled to a bath: numeric emission spectrum from
//! conditional states and the closed-form triplet approximation.
//!
//! The model is written in the frame rotating at the drive frequency `nu`:
//! `H = (omega0 - nu) s^† s + rabi (s + s^†)` with the lowering operator `s`.
//! Lindblad operators are `sqrt(gamma_m) s^†` (decay) and
//! `sqrt(gamma_m_bar) s` (pumping). A structured bath adds the memory kernel
//! with jump operators `{s^†, s}`; a flat bath is routed to two extra Lindblad
//! channels at the white rate instead.

use crate::bath::BathSpectrum;
use crate::correlation::{
    check_stationary, emission_spectrum, two_time_correlation, CorrelationSeries, MeasurementSpec,
    SpectrumSeries, STATIONARITY_TOL,
};
use crate::error::{Error, Result};
use crate::operator::{
    c64, projector, sigma_minus, ComplexMatrix, DensityMatrix, GkslGenerator, MemoryKernel, C64,
};
use crate::propagator::{propagate, steps_for, PropagatorConfig, StateHistory};

#[derive(Debug, Clone, PartialEq)]
pub struct TlsParams {
    pub omega0: f64,
    pub rabi: f64,
    pub drive: f64,
    pub gamma_m: f64,
    pub gamma_m_bar: f64,
    /// Carries the coupling `g` and the reference frequency.
    pub bath: BathSpectrum,
}

impl TlsParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega0", self.omega0),
            ("rabi", self.rabi),
            ("drive", self.drive),
            ("gamma_m", self.gamma_m),
            ("gamma_m_bar", self.gamma_m_bar),
        ] {
            if !v.is_finite() {
                return Err(Error::Precondition(format!("{name} is not finite")));
            }
        }
        if self.gamma_m < 0.0 || self.gamma_m_bar < 0.0 {
            return Err(Error::Precondition("Markovian rates must be >= 0".into()));
        }
        Ok(())
    }

    pub fn detuning(&self) -> f64 {
        self.omega0 - self.drive
    }
}

/// White rate of a flat bath, zero otherwise.
fn white_rate(bath: &BathSpectrum) -> Result<f64> {
    if bath.is_flat() {
        bath.markov_rate()
    } else {
        Ok(0.0)
    }
}

/// `(generator, kernel)` in the rotating frame.
pub fn build_tls_model(params: &TlsParams) -> Result<(GkslGenerator, MemoryKernel)> {
    params.validate()?;
    let sm = sigma_minus();
    let sp = sm.adjoint();
    let h = projector(2, 1).scale(params.detuning()) + (&sm + &sp).scale(params.rabi);
    let mut lindblads = vec![
        sp.scale(params.gamma_m.sqrt()),
        sm.scale(params.gamma_m_bar.sqrt()),
    ];
    let kernel = if params.bath.is_flat() {
        let w = white_rate(&params.bath)?;
        lindblads.push(sp.scale(w.sqrt()));
        lindblads.push(sm.scale(w.sqrt()));
        MemoryKernel::zero(2)
    } else {
        params.bath.memory_kernel(vec![sp.clone(), sm.clone()])?
    };
    Ok((GkslGenerator::new(h, lindblads)?, kernel))
}

/// `gamma_NM(w)`; the white rate for a flat bath.
pub fn bath_rate(bath: &BathSpectrum, w: f64) -> Result<C64> {
    if bath.is_flat() {
        Ok(c64(bath.markov_rate()?, 0.0))
    } else {
        bath.gamma_nm(w)
    }
}

/// The constant rate `Gamma_NM` of the analytic formula, taken as `Re gamma_NM(0)`.
pub fn big_gamma_nm(bath: &BathSpectrum) -> Result<f64> {
    Ok(bath_rate(bath, 0.0)?.re)
}

/// `gamma'_T(w) = (Gamma_M + Gamma_M_bar + 4/3 Gamma_NM + 2/3 gamma_NM(w)) / 2`.
pub fn gamma_t_prime(params: &TlsParams, w: f64) -> Result<C64> {
    let big = big_gamma_nm(&params.bath)?;
    let g = bath_rate(&params.bath, w)?;
    Ok((c64(params.gamma_m + params.gamma_m_bar + 4.0 / 3.0 * big, 0.0) + g * (2.0 / 3.0)) * 0.5)
}

/// `Gamma_T = gamma'_T(0)`, real.
pub fn big_gamma_t(params: &TlsParams) -> Result<f64> {
    Ok(gamma_t_prime(params, 0.0)?.re)
}

/// Terms of the analytic spectrum at offset `omega` from the transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollowAnalytic {
    pub omega: f64,
    pub lambda0: C64,
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub gamma_t_prime: C64,
    pub big_gamma_t: f64,
    pub big_gamma_nm: f64,
    pub gamma_nm: C64,
}

impl MollowAnalytic {
    pub fn value(&self) -> f64 {
        (self.lambda0.inv() * 0.25
            + self.lambda_plus.inv() * 0.125
            + self.lambda_minus.inv() * 0.125)
            .re
    }
}

pub fn mollow_analytic_point(params: &TlsParams, omega: f64) -> Result<MollowAnalytic> {
    let gtp = gamma_t_prime(params, omega)?;
    let big_t = big_gamma_t(params)?;
    let i = c64(0.0, 1.0);
    let two_rabi = 2.0 * params.rabi;
    Ok(MollowAnalytic {
        omega,
        lambda0: -i * omega + big_t,
        lambda_plus: -i * omega + i * two_rabi + gtp * 1.5,
        lambda_minus: -i * omega - i * two_rabi + gtp * 1.5,
        gamma_t_prime: gtp,
        big_gamma_t: big_t,
        big_gamma_nm: big_gamma_nm(&params.bath)?,
        gamma_nm: bath_rate(&params.bath, omega)?,
    })
}

pub fn mollow_spectrum_analytic(params: &TlsParams, omega_grid: &[f64]) -> Result<SpectrumSeries> {
    let values = omega_grid
        .iter()
        .map(|&w| mollow_analytic_point(params, w).map(|p| p.value()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSeries {
        omega: omega_grid.to_vec(),
        values,
        baseline: None,
        offset: 0.0,
    })
}

/// Numeric spectrum with its intermediate objects.
#[derive(Debug, Clone)]
pub struct MollowNumeric {
    pub spectrum: SpectrumSeries,
    pub correlation: CorrelationSeries,
    pub history: StateHistory,
    pub drift: f64,
}

/// Propagate to `t_star`, measure the emission current and transform.
///
/// The current is the weak quadrature pair `X = s^†` and `X = i s^†`; a
/// quarter of the summed correlation is `Re <s^†(t) s(t + tau)>`.
pub fn mollow_spectrum_numeric(
    params: &TlsParams,
    solver: &PropagatorConfig,
    t_star: f64,
    tau_max: f64,
    omega_grid: &[f64],
) -> Result<MollowNumeric> {
    let (gen, kernel) = build_tls_model(params)?;
    steps_for(t_star, solver.dt)?;
    steps_for(tau_max, solver.dt)?;
    let cfg = PropagatorConfig {
        t_final: t_star,
        ..*solver
    };
    let history = propagate(&DensityMatrix::basis(2, 0), &gen, &kernel, &cfg)?;
    let lag = (1.0 / big_gamma_t(params)?.max(f64::MIN_POSITIVE) / solver.dt).round() * solver.dt;
    let drift = check_stationary(&history, t_star, lag.min(t_star), STATIONARITY_TOL)?;
    let correlation = emission_correlation(
        &history,
        &gen,
        &kernel,
        t_star,
        tau_max,
        solver.memory_window,
    )?;
    let spectrum = emission_spectrum(&correlation, omega_grid)?;
    Ok(MollowNumeric {
        spectrum,
        correlation,
        history,
        drift,
    })
}

/// Quadrature-pair emission correlation at anchor `t`.
pub fn emission_correlation(
    history: &StateHistory,
    gen: &GkslGenerator,
    kernel: &MemoryKernel,
    t: f64,
    tau_max: f64,
    memory_window: Option<f64>,
) -> Result<CorrelationSeries> {
    let sp: ComplexMatrix = sigma_minus().adjoint();
    let quad = |x: ComplexMatrix| {
        two_time_correlation(
            history,
            gen,
            kernel,
            &MeasurementSpec::weak(x),
            t,
            tau_max,
            memory_window,
        )
    };
    let a = quad(sp.clone())?;
    let b = quad(sp * c64(0.0, 1.0))?;
    Ok(a.add(&b)?.scaled(0.25))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub height: f64,
    pub hwhm: f64,
}

/// The `count` highest local maxima, sorted by frequency, with half widths.
pub fn find_peaks(s: &SpectrumSeries, count: usize) -> Result<Vec<Peak>> {
    let v = &s.values;
    let n = v.len();
    let mut idx: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1])
        .collect();
    if idx.len() < count {
        return Err(Error::PeakDetection {
            found: idx.len(),
            expected: count,
        });
    }
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    idx.truncate(count);
    idx.sort_unstable();
    Ok(idx
        .into_iter()
        .map(|i| Peak {
            omega: s.omega[i],
            height: v[i],
            hwhm: half_width(&s.omega, v, i),
        })
        .collect())
}

/// Mean of the left and right half-maximum distances from the peak at `i`.
fn half_width(w: &[f64], v: &[f64], i: usize) -> f64 {
    let half = 0.5 * v[i];
    let side = |step: isize| -> Option<f64> {
        let mut j = i as isize;
        loop {
            let k = j + step;
            if k < 0 || k as usize >= v.len() {
                return None;
            }
            let (a, b) = (j as usize, k as usize);
            if v[b] <= half {
                let f = (v[a] - half) / (v[a] - v[b]);
                return Some((w[a] + f * (w[b] - w[a]) - w[i]).abs());
            }
            j = k;
        }
    };
    match (side(-1), side(1)) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => f64::NAN,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub relative_l2: f64,
    pub numeric_peaks: Vec<Peak>,
    pub analytic_peaks: Vec<Peak>,
    pub peak_deltas: Vec<f64>,
    pub linewidth_deltas: Vec<f64>,
    pub grid_step: f64,
}

impl ComparisonReport {
    pub fn max_peak_delta(&self) -> f64 {
        self.peak_deltas.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn to_table(&self) -> crate::io::Table {
        let mut t = crate::io::Table::new(&[
            "omega_numeric",
            "omega_analytic",
            "hwhm_numeric",
            "hwhm_analytic",
        ])
        .meta_f64("relative_l2", self.relative_l2)
        .meta_f64("grid_step", self.grid_step)
        .meta_f64("max_peak_delta", self.max_peak_delta());
        for (a, b) in self.numeric_peaks.iter().zip(&self.analytic_peaks) {
            t.push(vec![a.omega, b.omega, a.hwhm, b.hwhm]);
        }
        t
    }
}

/// Distances between two spectra on a common grid; expects three peaks.
pub fn compare_spectra(
    numeric: &SpectrumSeries,
    analytic: &SpectrumSeries,
) -> Result<ComparisonReport> {
    if numeric.omega != analytic.omega {
        return Err(Error::Precondition("spectra are on different grids".into()));
    }
    let num: f64 = numeric
        .values
        .iter()
        .zip(&analytic.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let den: f64 = analytic.values.iter().map(|b| b * b).sum();
    let relative_l2 = if den > 0.0 {
        (num / den).sqrt()
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let np = find_peaks(numeric, 3)?;
    let ap = find_peaks(analytic, 3)?;
    let grid_step = numeric
        .omega
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        relative_l2,
        peak_deltas: np.iter().zip(&ap).map(|(a, b)| a.omega - b.omega).collect(),
        linewidth_deltas: np.iter().zip(&ap).map(|(a, b)| a.hwhm - b.hwhm).collect(),
        numeric_peaks: np,
        analytic_peaks: ap,
        grid_step,
    })
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn omega_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + k as f64 * step).collect()
}
