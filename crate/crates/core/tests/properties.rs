use cpns_core::bath::BathSpectrum;
use cpns_core::correlation::{two_time_correlation, MeasurementSpec};
use cpns_core::cpns::build_step_kraus;
use cpns_core::mollow::{mollow_analytic_point, mollow_spectrum_analytic, TlsParams};
use cpns_core::operator::{
    apply_gksl, apply_memory, c64, hermiticity_error, identity, max_abs_diff, min_eigenvalue,
    sigma_minus, trace, ComplexMatrix, DensityMatrix, GkslGenerator, MemoryKernel,
};
use cpns_core::propagator::{propagate, propagate_conditional, Conditioning, PropagatorConfig};
use cpns_core::verify::{random_hermitian, random_matrix, random_state};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random GKSL generator with `k` channels.
fn generator(r: &mut ChaCha8Rng, dim: usize, k: usize) -> GkslGenerator {
    let h = random_hermitian(r, dim);
    let ls = (0..k).map(|_| random_matrix(r, dim).scale(0.5)).collect();
    GkslGenerator::new(h, ls).unwrap()
}

/// Kernel with jump operators `{U_a / sqrt(n)}` for random unitaries, so that
/// `sum A A^† = I`.
fn kernel(r: &mut ChaCha8Rng, dim: usize, amp: f64, rate: f64) -> MemoryKernel {
    let ops: Vec<ComplexMatrix> = (0..2)
        .map(|_| {
            let h = random_hermitian(r, dim);
            let u = (h * c64(0.0, 1.0)).exp();
            u.unscale(2f64.sqrt())
        })
        .collect();
    MemoryKernel::exponential(amp, rate, ops).unwrap()
}

fn tls_exponential() -> (GkslGenerator, MemoryKernel) {
    let sm = sigma_minus();
    let sp = sm.adjoint();
    let gen = GkslGenerator::new((&sm + &sp).scale(1.3), vec![sp.scale(0.6)]).unwrap();
    let k = MemoryKernel::exponential(0.5, 3.0, vec![sp, sm]).unwrap();
    (gen, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn superoperators_preserve_hermiticity(seed in any::<u64>(), dim in 2usize..=6, lag in 0.0f64..3.0) {
        let mut r = rng(seed);
        let gen = generator(&mut r, dim, 2);
        let k = kernel(&mut r, dim, 1.0, 1.5);
        let a = random_hermitian(&mut r, dim);
        let b = random_hermitian(&mut r, dim);
        prop_assert!(hermiticity_error(&apply_gksl(&gen, &a, 0.0).unwrap()) <= 1e-12);
        prop_assert!(hermiticity_error(&apply_memory(&k, &a, &b, lag).unwrap()) <= 1e-12);
    }

    #[test]
    fn superoperators_annihilate_trace(seed in any::<u64>(), dim in 2usize..=6, lag in 0.0f64..3.0) {
        let mut r = rng(seed);
        let gen = generator(&mut r, dim, 3);
        let k = kernel(&mut r, dim, 2.0, 0.5);
        let a = random_hermitian(&mut r, dim);
        prop_assert!(trace(&apply_gksl(&gen, &a, 0.0).unwrap()).norm() <= 1e-12);
        prop_assert!(trace(&apply_memory(&k, &a, &a, lag).unwrap()).norm() <= 1e-12);
    }

    #[test]
    fn rate_density_identity(seed in any::<u64>(), dim in 2usize..=6) {
        let mut r = rng(seed);
        let k = kernel(&mut r, dim, 1.0, 1.0);
        let mut c = ComplexMatrix::zeros(dim, dim);
        for a in k.jump_ops() {
            c += a * a.adjoint();
        }
        prop_assert!(max_abs_diff(&c, &identity(dim).scale(k.normalization())) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gamma_conjugate_symmetry(a in 0.1f64..20.0, kappa in 0.5f64..50.0, g in 0.1f64..2.0, w in -200.0f64..200.0) {
        let b = BathSpectrum::lorentzian(a, kappa, g, 0.0).unwrap();
        let d = b.gamma_nm(-w).unwrap() - b.gamma_nm(w).unwrap().conj();
        prop_assert!(d.norm() <= 1e-10);
    }

    #[test]
    fn eigenvalue_matches_characteristic_polynomial(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_hermitian(&mut r, 4);
        let want = smallest_root(&char_poly(&m));
        let got = min_eigenvalue(&m).unwrap();
        prop_assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }
}

/// Faddeev-LeVerrier coefficients `c` of `det(x I - m) = sum c_k x^k`, real part.
fn char_poly(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = ComplexMatrix::zeros(n, n);
    for k in 1..=n {
        mk = m * (&mk + identity(n).scale(c[n - k + 1]));
        c[n - k] = -trace(&mk).re / k as f64;
    }
    c
}

fn smallest_root(c: &[f64]) -> f64 {
    let p = |x: f64| c.iter().rev().fold(0.0, |acc, ck| acc * x + ck);
    let bound = 1.0
        + c.iter()
            .take(c.len() - 1)
            .fold(0.0f64, |a, v| a.max(v.abs()));
    let n = 200_000;
    let mut lo = -bound;
    let mut hi = lo;
    for i in 1..=n {
        let x = -bound + 2.0 * bound * i as f64 / n as f64;
        if p(x).signum() != p(lo).signum() {
            hi = x;
            break;
        }
        lo = x;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid).signum() == p(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cpns_homogeneity_and_convexity(seed in any::<u64>(), n in 0usize..30, p in 0.0f64..3.0, q in 0.0f64..1.0) {
        let mut r = rng(seed);
        let gen = generator(&mut r, 2, 2);
        let k = kernel(&mut r, 2, 1.0, 2.0);
        let map = build_step_kraus(&gen, &k, 1e-3, n, n as f64 * 1e-3).unwrap();
        let a: Vec<ComplexMatrix> = (0..=n).map(|_| random_state(&mut r, 2)).collect();
        let b: Vec<ComplexMatrix> = (0..=n).map(|_| random_state(&mut r, 2)).collect();
        let ka = map.apply(&a).unwrap();
        let kb = map.apply(&b).unwrap();
        let scaled: Vec<ComplexMatrix> = a.iter().map(|m| m.scale(p)).collect();
        prop_assert!(max_abs_diff(&map.apply(&scaled).unwrap(), &ka.scale(p)) <= 1e-12);
        let mix: Vec<ComplexMatrix> = a.iter().zip(&b).map(|(x, y)| x.scale(q) + y.scale(1.0 - q)).collect();
        prop_assert!(max_abs_diff(&map.apply(&mix).unwrap(), &(ka.scale(q) + kb.scale(1.0 - q))) <= 1e-12);
    }

    #[test]
    fn cpns_group_normalization(seed in any::<u64>(), n in 0usize..30) {
        let mut r = rng(seed);
        let gen = generator(&mut r, 3, 2);
        let k = kernel(&mut r, 3, 0.8, 1.0);
        let map = build_step_kraus(&gen, &k, 1e-3, n, 0.0).unwrap();
        prop_assert!((map.groups.iter().map(|g| g.p).sum::<f64>() - 1.0).abs() <= 1e-10);
        for g in map.groups.iter().filter(|g| g.m < n) {
            let mut s = ComplexMatrix::zeros(3, 3);
            for v in &g.ops {
                s += v * v.adjoint();
            }
            prop_assert!(max_abs_diff(&s, &identity(3).scale(g.p)) <= 1e-10);
        }
    }

    #[test]
    fn analytic_mollow_is_even(rabi in 1.0f64..60.0, gm in 0.1f64..3.0, a in 0.0f64..5.0, kappa in 1.0f64..100.0, w in 0.0f64..150.0) {
        let p = TlsParams {
            omega0: 0.0,
            rabi,
            drive: 0.0,
            gamma_m: gm,
            gamma_m_bar: 0.0,
            bath: BathSpectrum::lorentzian(a, kappa, 1.0, 0.0).unwrap(),
        };
        let s = mollow_spectrum_analytic(&p, &[-w, w]).unwrap();
        prop_assert!((s.values[0] - s.values[1]).abs() <= 1e-12 * s.values[1].abs().max(1.0));
        let plus = mollow_analytic_point(&p, w).unwrap();
        let minus = mollow_analytic_point(&p, -w).unwrap();
        prop_assert!((minus.lambda_plus - plus.lambda_minus.conj()).norm() <= 1e-12 * plus.lambda_minus.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bilinear_in_effect_weights(seed in any::<u64>(), nu0 in -2.0f64..2.0, nu1 in -2.0f64..2.0) {
        let (gen, k) = tls_exponential();
        let dt = 1e-3;
        let hist = propagate(&DensityMatrix::basis(2, 1), &gen, &k, &PropagatorConfig::new(dt, 0.3)).unwrap();
        let mut r = rng(seed);
        // two-outcome effect set {J, J'} with J^† J + J'^† J' = I
        let u = (random_hermitian(&mut r, 2) * c64(0.0, 1.0)).exp();
        let c = (0.2 + 0.6 * (seed % 97) as f64 / 97.0).sqrt();
        let s = (1.0 - c * c).sqrt();
        let js = vec![u.scale(c), u.scale(s)];
        let nus = [nu0, nu1];
        let spec = MeasurementSpec::effects(js.clone(), nus.to_vec());
        let corr = two_time_correlation(&hist, &gen, &k, &spec, 0.3, 0.2, None).unwrap();

        let rho = hist.state(hist.index_of(0.3).unwrap());
        let mut sum = vec![0.0; corr.values.len()];
        for (a, ja) in js.iter().enumerate() {
            let over = ja.adjoint() * &rho * ja;
            let cond = Conditioning { t: 0.3, scale: trace(&over).re, override_state: over };
            let seg = propagate_conditional(&hist, &cond, &gen, &k, 0.2, None).unwrap();
            for (i, m) in seg.states().skip(1).enumerate() {
                for (b, jb) in js.iter().enumerate() {
                    sum[i] += nus[a] * nus[b] * trace(&(jb.adjoint() * &m * jb)).re;
                }
            }
        }
        let err = corr.values.iter().zip(&sum).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        prop_assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn conditional_trace_and_causality(seed in any::<u64>()) {
        let (gen, k) = tls_exponential();
        let hist = propagate(&DensityMatrix::basis(2, 0), &gen, &k, &PropagatorConfig::new(1e-3, 0.5)).unwrap();
        let before = hist.checksum();
        let mut r = rng(seed);
        let x = random_matrix(&mut r, 2);
        let rho = hist.state(hist.index_of(0.5).unwrap());
        let over = x.adjoint() * &rho + &rho * &x;
        let scale = 2.0 * trace(&(&x * &rho)).re;
        let cond = Conditioning { t: 0.5, override_state: over, scale };
        let seg = propagate_conditional(&hist, &cond, &gen, &k, 0.5, None).unwrap();
        for m in seg.states() {
            prop_assert!((trace(&m).re - scale).abs() <= 1e-8 * scale.abs().max(1.0));
        }
        prop_assert_eq!(hist.checksum(), before);
    }
}
