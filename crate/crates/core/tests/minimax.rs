use increment_interp::increments::{functional_decomposition, IncrementSpec, WeightVector};
use increment_interp::interpolate::{solve_functional, InterpolationProblem, TruncationConfig};
use increment_interp::minimax::{
    assemble_density, lemma1_objective, minimax_characteristic, solve_d0_fixed_point, solve_known_g, verify_saddle,
    verify_saddle_d0, verify_saddle_dm, white_noise_least_favorable, DensityClass, FixedPointConfig,
    SADDLE_TOLERANCE,
};
use increment_interp::spectral::{fourier_coefficients, DensityModel, FourierTable, QuadratureConfig};

fn spec(n: usize, mu: usize) -> IncrementSpec {
    IncrementSpec::new(n, mu).unwrap()
}

fn wv(v: &[f64]) -> WeightVector {
    WeightVector::new(v.to_vec()).unwrap()
}

#[test]
fn moment_order_above_horizon_goes_through_newton() {
    // N = 0, n = mu = 1: L0 = 1 < M = 2.
    let s = spec(1, 1);
    let a = wv(&[1.0]);
    let t = TruncationConfig::default();
    let r1 = vec![2.0, 0.6, 0.3];
    let g = FourierTable::new(vec![1.0, 0.3]);
    let lf = solve_known_g(s, &a, &g, &DensityClass::DM { r1: r1.clone(), r2: None }, &t).unwrap();
    assert!(lf.converged, "{:?}", lf.report);
    assert!(minimax_characteristic(&lf, &a, &t).is_ok());
    assert!(lf.iterations > 0);
    for (m, want) in r1.iter().enumerate() {
        assert_eq!(lf.f0.coeffs[m], *want);
        assert!(lf.report.moment_f[m] < 1e-10);
    }
    assert!(lf.report.composed_f < 1e-10 * lf.report.b_norm);
}

#[test]
fn construct_then_verify_moment_class() {
    let s = spec(1, 1);
    let a = wv(&[1.0, 0.5]);
    let t = TruncationConfig::default();
    let f0 = FourierTable::new(vec![1.0, 0.3, 0.1]);
    let g0 = FourierTable::new(vec![0.8, 0.2]);
    let at = |t: &FourierTable, m: usize| t.coeffs.get(m).copied().unwrap_or(0.0);
    for m in 0..=2 {
        let class = DensityClass::DM {
            r1: (0..=m).map(|k| at(&f0, k)).collect(),
            r2: Some((0..=m).map(|k| at(&g0, k).max(1e-3)).collect()),
        };
        let r = verify_saddle(s, &a, &class, &f0, &g0, &[1.0], &[0.0], &t).unwrap();
        for (k, gap) in r.moment_f.iter().enumerate() {
            assert!(*gap <= 1e-8, "M={m} f moment {k}: {gap}");
        }
        for (k, gap) in r.moment_g.as_ref().unwrap().iter().enumerate() {
            let expect = if at(&g0, k) > 0.0 { 0.0 } else { 1e-3 };
            assert!((gap - expect).abs() <= 1e-8, "M={m} g moment {k}: {gap}");
        }
    }
}

#[test]
fn perturbed_moments_read_back_exactly() {
    let s = spec(1, 1);
    let a = wv(&[1.0, 1.0]);
    let t = TruncationConfig::default();
    let lf = white_noise_least_favorable(s, &a, 1.0, &t).unwrap();
    for eps in [1e-4, 1e-2, 0.3] {
        let class = DensityClass::DM {
            r1: vec![1.0 + eps, 0.5 - eps],
            r2: None,
        };
        let r = verify_saddle_dm(&lf, &a, &class, &t).unwrap();
        assert!((r.moment_f[0] - eps).abs() < 1e-12);
        assert!((r.moment_f[1] - eps).abs() < 1e-12);
    }
}

#[test]
fn residual_grows_with_perturbation() {
    let s = spec(1, 1);
    let a = wv(&[1.0, 1.0]);
    let t = TruncationConfig::default();
    let lf = white_noise_least_favorable(s, &a, 1.0, &t).unwrap();
    let class = DensityClass::D0 { p1: 1.0, p2: None };
    let mut last = verify_saddle_d0(&lf, &a, &class, &t).unwrap().composed_f;
    assert!(last < 1e-12);
    for delta in [1e-4, 1e-3, 1e-2] {
        let mut bumped = lf.clone();
        bumped.f0.coeffs[1] += delta;
        let r = verify_saddle_d0(&bumped, &a, &class, &t).unwrap();
        assert!(r.composed_f > last, "{delta}: {} <= {last}", r.composed_f);
        assert!(!r.is_valid(SADDLE_TOLERANCE));
        last = r.composed_f;
    }
}

#[test]
fn fixed_point_reaches_closed_form() {
    let s = spec(1, 2);
    let a = wv(&[1.0, 0.5, 0.25]);
    let t = TruncationConfig::default();
    let class = DensityClass::D0 { p1: 2.0, p2: Some(0.5) };
    let lf = solve_d0_fixed_point(s, &a, &class, &t, FixedPointConfig::default(), None).unwrap();
    assert!(lf.converged);
    assert!(lf.iterations > 1);
    let cf = white_noise_least_favorable(s, &a, 2.0, &t).unwrap();
    for (k, v) in lf.f0.coeffs.iter().enumerate() {
        let want = cf.f0.coeffs.get(k).copied().unwrap_or(0.0);
        assert!((v - want).abs() < 1e-6 * 2.0, "lag {k}");
    }
    assert_eq!(lf.g0.coeffs, vec![0.5]);
    assert!(lf.report.moment_g.as_ref().unwrap()[0] < 1e-12);
}

#[test]
fn fixed_point_reports_non_convergence() {
    let s = spec(1, 1);
    let a = wv(&[1.0, 1.0]);
    let class = DensityClass::D0 { p1: 1.0, p2: Some(1.0) };
    let cfg = FixedPointConfig { damping: 0.01, max_iter: 3 };
    let lf = solve_d0_fixed_point(s, &a, &class, &TruncationConfig::default(), cfg, None).unwrap();
    assert!(!lf.converged);
    assert_eq!(lf.iterations, 3);
    assert!(minimax_characteristic(&lf, &a, &TruncationConfig::default()).is_err());
}

#[test]
fn closed_form_ignores_functional_scale() {
    let s = spec(2, 1);
    let t = TruncationConfig::default();
    let base = white_noise_least_favorable(s, &wv(&[1.0, 0.5]), 1.5, &t).unwrap();
    let scaled = white_noise_least_favorable(s, &wv(&[7.0, 3.5]), 1.5, &t).unwrap();
    for (x, y) in base.f0.coeffs.iter().zip(&scaled.f0.coeffs) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn objective_matches_solver_error() {
    let s = spec(1, 1);
    let a = wv(&[1.0, 0.5]);
    let t = TruncationConfig::default();
    let q = QuadratureConfig::default();

    // Coloured pair: tables from the solver, objective evaluated independently.
    let sol = solve_functional(&InterpolationProblem {
        spec: s,
        a: a.clone(),
        f: DensityModel::arma(s, 1.0, vec![0.5], vec![]).unwrap(),
        g: DensityModel::increment_constant(s, 0.25).unwrap(),
        trunc: t,
    })
    .unwrap();
    let obj = lemma1_objective(&sol.f_table, &sol.g_table, &sol.c, &sol.e, s, sol.big_n, &q).unwrap();
    assert!((obj - sol.mse).abs() < 1e-8 * sol.mse, "{obj} vs {}", sol.mse);

    // Least-favorable pair.
    let lf = white_noise_least_favorable(s, &a, 1.0, &t).unwrap();
    let h0 = minimax_characteristic(&lf, &a, &t).unwrap();
    assert!(h0.minimax);
    let obj = lemma1_objective(&lf.f0, &lf.g0, &h0.c, &h0.e, s, h0.big_n, &q).unwrap();
    assert!((obj - h0.mse).abs() < 1e-8 * h0.mse);
    let b = functional_decomposition(s, &a).b;
    assert!((h0.mse - b[0] * b[0] / 1.0).abs() < 1e-8 * h0.mse);
}

#[test]
fn delta_functional_minimax_is_classical() {
    let s = spec(1, 1);
    let a = wv(&[1.0]);
    let t = TruncationConfig::default();
    let lf = white_noise_least_favorable(s, &a, 2.0, &t).unwrap();
    let h0 = minimax_characteristic(&lf, &a, &t).unwrap();
    let classical = solve_functional(&InterpolationProblem {
        spec: s,
        a,
        f: DensityModel::increment_constant(s, 0.5).unwrap(),
        g: DensityModel::increment_constant(s, 1.0).unwrap(),
        trunc: t,
    })
    .unwrap();
    assert!((h0.mse - classical.mse).abs() < 1e-12);
}

#[test]
fn assembly_inverts_fourier_coefficients() {
    let s = spec(2, 2);
    let q = QuadratureConfig::default();
    for coeffs in [vec![1.0, 0.5], vec![2.0, -0.4, 0.3, 0.1], vec![1.0, 0.0, 0.0, 0.2]] {
        let model = assemble_density(&FourierTable::new(coeffs.clone()), s).unwrap();
        let back = fourier_coefficients(&model, coeffs.len() + 2, &q).unwrap();
        for k in 0..back.coeffs.len() {
            let want = coeffs.get(k).copied().unwrap_or(0.0);
            assert!((back.coeffs[k] - want).abs() < 1e-8, "lag {k}");
        }
    }
}

#[test]
fn closed_form_rejects_nonpositive_assembly() {
    // b = (4, 3, 1): 1 + 1.5 cos + 0.5 cos 2 dips below zero.
    let err = white_noise_least_favorable(spec(1, 1), &wv(&[1.0, 2.0, 1.0]), 1.0, &TruncationConfig::default());
    assert!(matches!(err, Err(increment_interp::Error::PositivityViolation { .. })));
}
