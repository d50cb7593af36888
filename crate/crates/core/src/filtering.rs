//! Estimating `sum_{k=N+1}^{N+mu n} a(k) xi(k)` — the values hidden behind
//! the first noisy increments — by extending the horizon to `N + mu n` and
//! reusing the interpolation machinery.

use crate::error::{Error, Result};
use crate::increments::{functional_decomposition, IncrementSpec, IncrementWeights, WeightVector};
use crate::interpolate::{solve_increment_functional, EstimateSolution, TruncationConfig};
use crate::spectral::DensityModel;

#[derive(Debug, Clone)]
pub struct FilteringProblem {
    pub spec: IncrementSpec,
    /// `a(N+1..=N+mu n)`.
    pub a_future: Vec<f64>,
    pub big_n: usize,
    pub f: DensityModel,
    pub g: DensityModel,
    pub trunc: TruncationConfig,
}

impl FilteringProblem {
    /// `(0, ..., 0, a(N+1), ..., a(N+mu n))` of length `N + mu n + 1`.
    pub fn extended_weights(&self) -> Result<WeightVector> {
        if self.a_future.len() != self.spec.span() {
            return Err(Error::Config(format!(
                "a_future must have mu*n = {} entries, got {}",
                self.spec.span(),
                self.a_future.len()
            )));
        }
        let mut a = vec![0.0; self.big_n + 1];
        a.extend_from_slice(&self.a_future);
        WeightVector::new(a)
    }
}

/// Increment and boundary weights of the extended functional.
pub fn build_extended_weights(p: &FilteringProblem) -> Result<IncrementWeights> {
    Ok(functional_decomposition(p.spec, &p.extended_weights()?))
}

pub fn solve_filtering(p: &FilteringProblem) -> Result<EstimateSolution> {
    let w = build_extended_weights(p)?;
    let mut sol = solve_increment_functional(p.spec, &w.b, &p.f, &p.g, &p.trunc)?;
    sol.v = w.v;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::d_coefficients;

    fn problem(n: usize, mu: usize, big_n: usize, a_future: Vec<f64>) -> FilteringProblem {
        let spec = IncrementSpec::new(n, mu).unwrap();
        FilteringProblem {
            spec,
            a_future,
            big_n,
            f: DensityModel::increment_constant(spec, 1.0).unwrap(),
            g: DensityModel::increment_constant(spec, 1.0).unwrap(),
            trunc: TruncationConfig::default(),
        }
    }

    #[test]
    fn single_future_value() {
        // xi(1) = dxi(1) + dxi(0) + xi(-1).
        let w = build_extended_weights(&problem(1, 1, 0, vec![1.0])).unwrap();
        assert_eq!(w.b, vec![1.0, 1.0]);
        assert_eq!(w.v, vec![-1.0]);
    }

    #[test]
    fn zero_future_weights() {
        let p = problem(2, 1, 1, vec![0.0, 0.0]);
        let w = build_extended_weights(&p).unwrap();
        assert!(w.b.iter().chain(&w.v).all(|v| *v == 0.0));
        assert_eq!(solve_filtering(&p).unwrap().mse, 0.0);
    }

    #[test]
    fn tail_sum_form_matches_matrix_product() {
        // b(k) = sum_{j >= max(k, N+1)} d(j - k) a(j).
        let p = problem(2, 2, 3, vec![0.5, -1.0, 2.0, 0.25]);
        let w = build_extended_weights(&p).unwrap();
        let h = p.spec.horizon(p.big_n);
        let d = d_coefficients(p.spec, h + 1);
        for k in 0..=h {
            let expect: f64 = (k.max(p.big_n + 1)..=h)
                .map(|j| d[j - k] * p.a_future[j - p.big_n - 1])
                .sum();
            assert_eq!(w.b[k], expect);
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(build_extended_weights(&problem(2, 1, 0, vec![1.0])).is_err());
    }
}
