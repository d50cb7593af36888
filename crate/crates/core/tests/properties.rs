use increment_interp::increments::{
    functional_decomposition, increment_value, step_decomposition_coefficients, IncrementSpec, WeightVector,
};
use increment_interp::interpolate::{solve_functional, InterpolationProblem, TruncationConfig};
use increment_interp::minimax::{autocorrelation, fejer_riesz_factorize};
use increment_interp::spectral::{structure_function, weighted_inverse_energy, DensityModel, QuadratureConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = IncrementSpec> {
    (1usize..=3, 1usize..=3).prop_map(|(n, mu)| IncrementSpec::new(n, mu).unwrap())
}

fn sequence(values: Vec<f64>, offset: isize) -> impl Fn(isize) -> f64 {
    move |k| values[(k + offset) as usize]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functional_splits_into_increments_and_boundary(
        s in spec_strategy(),
        a in prop::collection::vec(-2.0f64..2.0, 1..=9),
        xi in prop::collection::vec(-5.0f64..5.0, 40),
    ) {
        let w = functional_decomposition(s, &WeightVector::new(a.clone()).unwrap());
        let off = s.span() as isize + 2;
        let xi = sequence(xi, off);
        let direct: f64 = a.iter().enumerate().map(|(k, ak)| ak * xi(k as isize)).sum();
        let incr: f64 = w.b.iter().enumerate()
            .map(|(k, bk)| bk * increment_value(&xi, s.n(), k as isize, s.mu() as isize))
            .sum();
        let boundary: f64 = (-(s.span() as isize)..0).map(|k| w.v_at(k).unwrap() * xi(k)).sum();
        let scale = a.iter().map(|v| v.abs()).sum::<f64>().max(1.0) * 5.0;
        prop_assert!((direct - (incr - boundary)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn long_step_increment_is_a_sum_of_short_ones(
        n in 1usize..=3,
        mu in 1usize..=3,
        k in 1usize..=4,
        m in 0isize..10,
        xi in prop::collection::vec(-5.0f64..5.0, 80),
    ) {
        let xi = sequence(xi, 50);
        let coeffs = step_decomposition_coefficients(n, k).unwrap();
        let long = increment_value(&xi, n, m, (k * mu) as isize);
        let short: f64 = coeffs.iter().enumerate()
            .map(|(l, c)| c * increment_value(&xi, n, m - (l * mu) as isize, mu as isize))
            .sum();
        prop_assert!((long - short).abs() <= 1e-9 * (1.0 + long.abs()));
    }

    #[test]
    fn negative_step_reflects(
        n in 1usize..=3,
        mu in 1usize..=3,
        m in -5isize..5,
        xi in prop::collection::vec(-5.0f64..5.0, 40),
    ) {
        let xi = sequence(xi, 15);
        let back = increment_value(&xi, n, m, -(mu as isize));
        let fwd = increment_value(&xi, n, m + (n * mu) as isize, mu as isize);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((back - sign * fwd).abs() <= 1e-12 * (1.0 + back.abs()));
    }

    #[test]
    fn fejer_riesz_round_trip(gamma in prop::collection::vec(-1.0f64..1.0, 1..=9)) {
        prop_assume!(gamma.iter().any(|g| g.abs() > 1e-3));
        let c = autocorrelation(&gamma);
        let got = fejer_riesz_factorize(&c).unwrap();
        let back = autocorrelation(&got);
        let scale = c[0].max(1e-300);
        for k in 0..c.len() {
            let b = back.get(k).copied().unwrap_or(0.0);
            prop_assert!((b - c[k]).abs() <= 1e-8 * scale.max(1.0), "lag {}: {} vs {}", k, b, c[k]);
        }
    }

    #[test]
    fn parseval_for_trigonometric_weighted_inverse(
        tail in prop::collection::vec(-0.2f64..0.2, 0..6),
    ) {
        let mut coeffs = vec![2.0];
        coeffs.extend(tail);
        let s = IncrementSpec::new(1, 1).unwrap();
        let model = DensityModel::inverse_trig(s, coeffs.clone()).unwrap();
        let energy = weighted_inverse_energy(&model, &QuadratureConfig::default()).unwrap();
        let exact = coeffs[0] * coeffs[0] + 2.0 * coeffs[1..].iter().map(|c| c * c).sum::<f64>();
        prop_assert!((energy - exact).abs() <= 1e-10 * exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn structure_function_is_positive_semidefinite(
        s in spec_strategy(),
        phi in -0.8f64..0.8,
    ) {
        let model = DensityModel::arma(s, 1.0, vec![phi], vec![]).unwrap();
        let q = QuadratureConfig::default();
        let dim = 8;
        let d: Vec<f64> = (0..dim as i64)
            .map(|m| structure_function(&model, m, s.mu(), s.mu(), &q).unwrap())
            .collect();
        let gram = DMatrix::from_fn(dim, dim, |i, j| d[i.abs_diff(j)]);
        let min = gram.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-10 * d[0].abs().max(1.0), "min eigenvalue {}", min);
    }

    #[test]
    fn error_scales_quadratically_and_drops_with_noise(
        a in prop::collection::vec(-1.0f64..1.0, 1..=3),
        t in 0.1f64..5.0,
        phi in -0.7f64..0.7,
    ) {
        prop_assume!(a.iter().any(|v| v.abs() > 1e-2));
        let s = IncrementSpec::new(1, 1).unwrap();
        let f = DensityModel::arma(s, 1.0, vec![phi], vec![]).unwrap();
        let solve = |a: &[f64], noise: f64| {
            solve_functional(&InterpolationProblem {
                spec: s,
                a: WeightVector::new(a.to_vec()).unwrap(),
                f: f.clone(),
                g: DensityModel::increment_constant(s, noise).unwrap(),
                trunc: TruncationConfig::default(),
            })
            .unwrap()
            .mse
        };
        let base = solve(&a, 0.5);
        let scaled: Vec<f64> = a.iter().map(|v| v * t).collect();
        prop_assert!((solve(&scaled, 0.5) - t * t * base).abs() <= 1e-8 * t * t * base.max(1e-12));
        prop_assert!(solve(&a, 0.05) <= base * (1.0 + 1e-10));
        prop_assert!(base <= solve(&a, 5.0) * (1.0 + 1e-10));
    }
}
