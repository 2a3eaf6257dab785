mod common;

use std::f64::consts::PI;

use cpns_core::bath::BathSpectrum;
use cpns_core::correlation::{
    conditional_init_instantaneous, conditional_init_weak, emission_spectrum, two_time_correlation,
    CorrelationSeries, MeasurementSpec,
};
use cpns_core::cpns::{build_step_kraus, convergence_study};
use cpns_core::mollow::{find_peaks, mollow_spectrum_numeric, omega_grid, TlsParams};
use cpns_core::operator::{
    c64, max_abs_diff, min_eigenvalue, projector, sigma_minus, trace, ComplexMatrix, DensityMatrix,
    GkslGenerator, MemoryKernel,
};
use cpns_core::propagator::{propagate, propagate_conditional, Conditioning, PropagatorConfig};
use cpns_core::verify::{random_hermitian, random_matrix, random_state};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn unitary_evolution_matches_exponential() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let h = random_hermitian(&mut r, 2);
    let norm = h.norm();
    let h = h.unscale(norm).scale(0.01);
    let t_final = 10.0 / h.norm();
    let t_final = (t_final / 1e-3).round() * 1e-3;
    let rho0 = random_state(&mut r, 2);
    let gen = GkslGenerator::hamiltonian_only(h.clone()).unwrap();
    let cfg = PropagatorConfig::new(1e-3, t_final);
    let hist = propagate(
        &DensityMatrix::new(rho0.clone()).unwrap(),
        &gen,
        &MemoryKernel::zero(2),
        &cfg,
    )
    .unwrap();
    let u = (h * c64(0.0, -t_final)).exp();
    let want = &u * rho0 * u.adjoint();
    assert!(max_abs_diff(&hist.last(), &want) <= 1e-8);
}

#[test]
fn conditional_markov_segment_matches_semigroup() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let h = random_hermitian(&mut r, 2).scale(0.5);
    let ls = vec![random_matrix(&mut r, 2).scale(0.5)];
    let gen = GkslGenerator::new(h.clone(), ls.clone()).unwrap();
    let kernel = MemoryKernel::zero(2);
    let dt = 5e-4;
    let hist = propagate(
        &DensityMatrix::basis(2, 1),
        &gen,
        &kernel,
        &PropagatorConfig::new(dt, 1.0),
    )
    .unwrap();
    let j = projector(2, 1);
    let (over, scale) = conditional_init_instantaneous(&hist, &j, 1.0).unwrap();
    let cond = Conditioning {
        t: 1.0,
        override_state: over.clone(),
        scale,
    };
    let seg = propagate_conditional(&hist, &cond, &gen, &kernel, 3.0, None).unwrap();
    let s = common::liouvillian(&h, &ls);
    for k in [1usize, 100, 2000, 6000] {
        let want = common::apply_super(&common::expm(&s, k as f64 * dt), &over);
        assert!(max_abs_diff(&seg.state(k), &want) <= 1e-7, "k = {k}");
    }
}

#[test]
fn random_effect_and_observable_scales() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let gen = GkslGenerator::new(
        random_hermitian(&mut r, 3),
        vec![random_matrix(&mut r, 3).scale(0.3)],
    )
    .unwrap();
    let rho0 = DensityMatrix::new(random_state(&mut r, 3)).unwrap();
    let hist = propagate(
        &rho0,
        &gen,
        &MemoryKernel::zero(3),
        &PropagatorConfig::new(1e-3, 0.1),
    )
    .unwrap();
    let rho = hist.state(100);
    let j = random_matrix(&mut r, 3).scale(0.4);
    let (_, s) = conditional_init_instantaneous(&hist, &j, 0.1).unwrap();
    let mut brute = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                brute += (j[(b, a)].conj() * rho[(b, c)] * j[(c, a)]).re;
            }
        }
    }
    assert!((s - brute).abs() <= 1e-12);
    let x = random_matrix(&mut r, 3);
    let (over, s) = conditional_init_weak(&hist, &x, 0.1).unwrap();
    let brute: f64 = (0..3)
        .flat_map(|a| (0..3).map(move |b| (a, b)))
        .map(|(a, b)| 2.0 * (x[(a, b)] * rho[(b, a)]).re)
        .sum();
    assert!((trace(&over).re - brute).abs() <= 1e-12);
    assert!((s - brute).abs() <= 1e-12);
}

#[test]
fn projective_effect_at_first_lag() {
    // E[I(t + 0+) I(t)] = Tr[J^† J^† rho J J] = rho_ee for a projector.
    let sm = sigma_minus();
    let gen = GkslGenerator::new(
        (&sm + sm.adjoint()).scale(2.0),
        vec![sm.adjoint().scale(0.7)],
    )
    .unwrap();
    let dt = 1e-4;
    let hist = propagate(
        &DensityMatrix::basis(2, 0),
        &gen,
        &MemoryKernel::zero(2),
        &PropagatorConfig::new(dt, 0.5),
    )
    .unwrap();
    let j = projector(2, 1);
    let corr = two_time_correlation(
        &hist,
        &gen,
        &MemoryKernel::zero(2),
        &MeasurementSpec::effect(j),
        0.5,
        10.0 * dt,
        None,
    )
    .unwrap();
    let ee = hist.state(hist.len() - 1)[(1, 1)].re;
    assert!((corr.zero_plus - ee).abs() <= 1e-12);
    assert!((corr.values[0] - ee).abs() <= 1e-3 * ee);
}

fn series(values: Vec<f64>, d: f64) -> CorrelationSeries {
    CorrelationSeries {
        t_anchor: 0.0,
        dtau: d,
        zero_plus: 1.0,
        values,
        mean: 0.0,
        offset: 0.0,
        delta_weight: None,
    }
}

#[test]
fn damped_cosine_has_two_peaks() {
    let (g, w0, d) = (0.5, 8.0, 1e-3);
    let n = (30.0 / d) as usize;
    let vals = (1..=n).map(|k| {
        let t = k as f64 * d;
        (-g * t).exp() * (w0 * t).cos()
    });
    let grid = omega_grid(-20.0, 20.0, 401);
    let s = emission_spectrum(&series(vals.collect(), d), &grid).unwrap();
    let peaks = find_peaks(&s, 2).unwrap();
    assert!((peaks[0].omega + w0).abs() <= 0.1 + 1e-9);
    assert!((peaks[1].omega - w0).abs() <= 0.1 + 1e-9);
    // each is half a Lorentzian of width g
    assert!((peaks[1].hwhm - g).abs() < 0.02);
}

#[test]
fn undriven_white_bath_gives_single_line() {
    // Omega = 0: numeric spectrum vs the transform of the regression-theorem correlation.
    let p = TlsParams {
        omega0: 0.0,
        rabi: 0.0,
        drive: 0.0,
        gamma_m: 1.0,
        gamma_m_bar: 0.5,
        bath: BathSpectrum::flat(0.1 / (2.0 * PI), 1.0, 0.0).unwrap(),
    };
    let dt = 1e-3;
    let grid = omega_grid(-10.0, 10.0, 201);
    let num =
        mollow_spectrum_numeric(&p, &PropagatorConfig::new(dt, 20.0), 20.0, 15.0, &grid).unwrap();
    let peaks = find_peaks(&num.spectrum, 1).unwrap();
    assert!(peaks[0].omega.abs() <= 0.1 + 1e-9);

    let sm = sigma_minus();
    let sp = sm.adjoint();
    let ls = vec![
        sp.scale(1.0),
        sm.scale(0.5f64.sqrt()),
        sp.scale(0.1f64.sqrt()),
        sm.scale(0.1f64.sqrt()),
    ];
    let s = common::liouvillian(&ComplexMatrix::zeros(2, 2), &ls);
    let rho = num.history.last();
    let step = common::expm(&s, dt);
    // Re <s^†(t) s(t + tau)> from X = s^†: Tr[s (Lambda (s rho))]
    let mut x = &sm * &rho;
    let mut vals = Vec::new();
    for _ in 0..num.correlation.values.len() {
        x = common::apply_super(&step, &x);
        vals.push(trace(&(&sp * &x)).re);
    }
    let mut oracle = series(vals, dt);
    oracle.zero_plus = trace(&(&sp * &sm * &rho)).re;
    oracle.offset = num.correlation.offset;
    let want = emission_spectrum(&oracle, &grid).unwrap();
    let scale = want.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = num
        .spectrum
        .values
        .iter()
        .zip(&want.values)
        .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
    assert!(err <= 1e-5 * scale, "{err}");
}

#[test]
fn ancilla_extension_keeps_positivity() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..10 {
        let gen = GkslGenerator::new(
            random_hermitian(&mut r, 2),
            vec![random_matrix(&mut r, 2).scale(0.5)],
        )
        .unwrap();
        let sp = sigma_minus().adjoint();
        let kernel = MemoryKernel::exponential(1.0, 2.0, vec![sp.clone(), sp.adjoint()]).unwrap();
        let n = 5 + trial;
        let map = build_step_kraus(&gen, &kernel, 1e-2, n, n as f64 * 1e-2).unwrap();
        let hist: Vec<ComplexMatrix> = (0..=n).map(|_| random_state(&mut r, 4)).collect();
        let out = map.apply_with_ancilla(&hist, 2).unwrap();
        assert!(min_eigenvalue(&out).unwrap() >= -1e-10, "trial {trial}");
    }
}

fn ratio_of_errors(gen: &GkslGenerator) -> f64 {
    let t = convergence_study(
        gen,
        &MemoryKernel::zero(2),
        &DensityMatrix::basis(2, 1),
        1.0,
        &[2e-3, 1e-3],
    )
    .unwrap();
    t.rows[0].max_error / t.rows[1].max_error
}

#[test]
fn discrete_map_is_first_order() {
    let sp = sigma_minus().adjoint();
    let decay = GkslGenerator::new(ComplexMatrix::zeros(2, 2), vec![sp.scale(1.0)]).unwrap();
    let q = ratio_of_errors(&decay);
    assert!((1.8..=2.2).contains(&q), "{q}");
    let h = GkslGenerator::hamiltonian_only((&sp + sp.adjoint()).scale(1.5)).unwrap();
    let q = ratio_of_errors(&h);
    assert!((1.8..=2.2).contains(&q), "{q}");
}

#[test]
fn wide_lorentzian_approaches_white_bath() {
    // fixed gamma_NM(0) = 2 A / kappa = 0.2
    let params = |bath| TlsParams {
        omega0: 0.0,
        rabi: 5.0,
        drive: 0.0,
        gamma_m: 2.0,
        gamma_m_bar: 0.0,
        bath,
    };
    let (t_star, tau) = (12.0, 9.0);
    let grid = omega_grid(-20.0, 20.0, 401);
    let white = params(BathSpectrum::flat(0.2 / (2.0 * PI), 1.0, 0.0).unwrap());
    let mut dists = Vec::new();
    for kappa in [10.0, 100.0, 1000.0] {
        // resolve the kernel decay: kappa dt <= 0.1
        let dt: f64 = if kappa > 200.0 { 1e-4 } else { 5e-4 };
        let reference = mollow_spectrum_numeric(
            &white,
            &PropagatorConfig::new(dt, t_star),
            t_star,
            tau,
            &grid,
        )
        .unwrap();
        let p = params(BathSpectrum::lorentzian(0.1 * kappa, kappa, 1.0, 0.0).unwrap());
        let cfg = PropagatorConfig::new(dt, t_star).with_window(p.bath.decay_lag().unwrap());
        let s = mollow_spectrum_numeric(&p, &cfg, t_star, tau, &grid).unwrap();
        let num: f64 = s
            .spectrum
            .values
            .iter()
            .zip(&reference.spectrum.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = reference.spectrum.values.iter().map(|b| b * b).sum();
        dists.push((num / den).sqrt());
    }
    assert!(dists[0] > dists[1] && dists[1] > dists[2], "{dists:?}");
    assert!(dists[2] <= 0.05, "{dists:?}");
}
