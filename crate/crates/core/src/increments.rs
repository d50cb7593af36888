//! Combinatorics of the increment operator `(1 - B_mu)^n`.
//!
//! Everything here is computed with exact integers and converted to `f64`
//! only at the boundary, so the identities below hold to rounding of the
//! final weighted sums.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Order `n` and step `mu` of the increment `(1 - B_mu)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IncrementSpec {
    n: usize,
    mu: usize,
}

impl IncrementSpec {
    pub fn new(n: usize, mu: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("increment order n must be >= 1".into()));
        }
        if mu == 0 {
            return Err(Error::Config("increment step mu must be >= 1".into()));
        }
        Ok(Self { n, mu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    /// `mu * n`, the number of boundary values an increment reaches back.
    pub fn span(&self) -> usize {
        self.n * self.mu
    }

    /// Last index of the unobserved band, `N + mu*n`.
    pub fn horizon(&self, big_n: usize) -> usize {
        big_n + self.span()
    }
}

/// Coefficients `a(0..=N)` of the target functional `sum a(k) xi(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("weight vector must have at least one entry".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("weight vector entries must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The horizon `N`; the vector has `N + 1` entries.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }
}

/// Increment weights `b(0..=N)` and boundary weights `v(-mu*n..=-1)`.
///
/// `v` is stored in ascending index order: `v[i]` is `v(i - mu*n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementWeights {
    pub b: Vec<f64>,
    pub v: Vec<f64>,
}

impl IncrementWeights {
    /// Boundary weight at a negative index `k` in `-mu*n..=-1`.
    pub fn v_at(&self, k: isize) -> Option<f64> {
        let span = self.v.len() as isize;
        if (-span..0).contains(&k) {
            Some(self.v[(k + span) as usize])
        } else {
            None
        }
    }
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1) at this point.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn d_exact(spec: IncrementSpec, count: usize) -> Vec<u128> {
    let n = spec.n as u64;
    (0..count)
        .map(|k| {
            if k % spec.mu == 0 {
                let j = (k / spec.mu) as u64;
                binomial(j + n - 1, n - 1)
            } else {
                0
            }
        })
        .collect()
}

/// Power-series coefficients `d(0..count)` of `(sum_j x^(mu j))^n`.
pub fn d_coefficients(spec: IncrementSpec, count: usize) -> Vec<f64> {
    d_exact(spec, count).into_iter().map(|d| d as f64).collect()
}

/// Coefficients `A_l` of `(1 + x + ... + x^(k-1))^n`, `l = 0..=(k-1)n`.
pub fn step_decomposition_coefficients(n: usize, k: usize) -> Result<Vec<f64>> {
    if n == 0 || k == 0 {
        return Err(Error::Config("step decomposition needs n >= 1 and k >= 1".into()));
    }
    let base = vec![1u128; k];
    let mut acc = vec![1u128];
    for _ in 0..n {
        let mut next = vec![0u128; acc.len() + k - 1];
        for (i, &x) in acc.iter().enumerate() {
            for (j, &y) in base.iter().enumerate() {
                next[i + j] += x * y;
            }
        }
        acc = next;
    }
    Ok(acc.into_iter().map(|v| v as f64).collect())
}

/// Upper-triangular `(N+1) x (N+1)` matrix with entries `d(j - k)`.
pub fn build_d_matrix(spec: IncrementSpec, big_n: usize) -> DMatrix<f64> {
    let d = d_coefficients(spec, big_n + 1);
    DMatrix::from_fn(big_n + 1, big_n + 1, |k, j| if j >= k { d[j - k] } else { 0.0 })
}

/// Split `sum a(k) xi(k)` into increment weights and boundary weights so that
/// `A xi = sum b(k) x(k) - sum v(k) xi(k)` with `x = (1 - B_mu)^n xi`.
pub fn functional_decomposition(spec: IncrementSpec, a: &WeightVector) -> IncrementWeights {
    let big_n = a.horizon();
    let d = d_coefficients(spec, big_n + 1);
    let vals = a.values();
    let b: Vec<f64> = (0..=big_n)
        .map(|k| (k..=big_n).map(|j| d[j - k] * vals[j]).sum())
        .collect();
    let v = boundary_weights(spec, &b);
    IncrementWeights { b, v }
}

/// `v(k) = sum_{l = ceil(-k/mu)}^{n} (-1)^l C(n,l) b(l mu + k)` for `k = -mu n..=-1`,
/// returned in ascending `k`.
pub(crate) fn boundary_weights(spec: IncrementSpec, b: &[f64]) -> Vec<f64> {
    let (n, mu) = (spec.n as isize, spec.mu as isize);
    let span = n * mu;
    (-span..0)
        .map(|k| {
            let start = ceil_div(-k, mu);
            (start..=n)
                .map(|l| {
                    let idx = l * mu + k;
                    let bk = if idx >= 0 && (idx as usize) < b.len() {
                        b[idx as usize]
                    } else {
                        0.0
                    };
                    sign(l) * binomial(n as u64, l as u64) as f64 * bk
                })
                .sum()
        })
        .collect()
}

fn sign(l: isize) -> f64 {
    if l % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn ceil_div(p: isize, q: isize) -> isize {
    let d = p.div_euclid(q);
    if p.rem_euclid(q) == 0 {
        d
    } else {
        d + 1
    }
}

/// `xi^(n)(m, step) = sum_l (-1)^l C(n,l) xi(m - l*step)`; `step` may be negative.
pub fn increment_value<F: Fn(isize) -> f64>(xi: F, n: usize, m: isize, step: isize) -> f64 {
    (0..=n as isize)
        .map(|l| sign(l) * binomial(n as u64, l as u64) as f64 * xi(m - l * step))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, mu: usize) -> IncrementSpec {
        IncrementSpec::new(n, mu).unwrap()
    }

    #[test]
    fn rejects_zero_order_or_step() {
        assert!(IncrementSpec::new(0, 1).is_err());
        assert!(IncrementSpec::new(1, 0).is_err());
    }

    #[test]
    fn d_coefficient_examples() {
        assert_eq!(d_coefficients(spec(1, 1), 4), vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(d_coefficients(spec(2, 1), 4), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d_coefficients(spec(2, 2), 5), vec![1.0, 0.0, 2.0, 0.0, 3.0]);
    }

    #[test]
    fn d_coefficients_match_series_product() {
        // Independent oracle: multiply the truncated geometric series n times.
        for n in 1..=4 {
            for mu in 1..=3 {
                let count = 13;
                let geo: Vec<i64> = (0..count).map(|k| (k % mu == 0) as i64).collect();
                let mut acc = vec![0i64; count];
                acc[0] = 1;
                for _ in 0..n {
                    let mut next = vec![0i64; count];
                    for i in 0..count {
                        for j in 0..count - i {
                            next[i + j] += acc[i] * geo[j];
                        }
                    }
                    acc = next;
                }
                let expect: Vec<f64> = acc.iter().map(|&v| v as f64).collect();
                assert_eq!(d_coefficients(spec(n, mu), count), expect, "n={n} mu={mu}");
            }
        }
    }

    #[test]
    fn step_decomposition_examples() {
        assert_eq!(step_decomposition_coefficients(2, 2).unwrap(), vec![1.0, 2.0, 1.0]);
        assert_eq!(step_decomposition_coefficients(1, 3).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(
            step_decomposition_coefficients(2, 3).unwrap(),
            vec![1.0, 2.0, 3.0, 2.0, 1.0]
        );
        let s = step_decomposition_coefficients(3, 4).unwrap();
        assert_eq!(s.iter().sum::<f64>(), 64.0);
        assert!(s.iter().zip(s.iter().rev()).all(|(x, y)| x == y));
    }

    #[test]
    fn d_matrix_examples() {
        let m = build_d_matrix(spec(1, 1), 2);
        assert_eq!(m, DMatrix::from_row_slice(3, 3, &[1., 1., 1., 0., 1., 1., 0., 0., 1.]));
        let m = build_d_matrix(spec(2, 1), 2);
        assert_eq!(m, DMatrix::from_row_slice(3, 3, &[1., 2., 3., 0., 1., 2., 0., 0., 1.]));
        let m = build_d_matrix(spec(1, 2), 2);
        assert_eq!(m, DMatrix::from_row_slice(3, 3, &[1., 0., 1., 0., 1., 0., 0., 0., 1.]));
    }

    #[test]
    fn decomposition_examples() {
        let w = functional_decomposition(spec(1, 1), &WeightVector::new(vec![1., 1., 1.]).unwrap());
        assert_eq!(w.b, vec![3., 2., 1.]);
        assert_eq!(w.v, vec![-3.]);

        let w = functional_decomposition(spec(1, 2), &WeightVector::new(vec![1., 1.]).unwrap());
        assert_eq!(w.b, vec![1., 1.]);
        assert_eq!(w.v_at(-1), Some(-1.0));
        assert_eq!(w.v_at(-2), Some(-1.0));
        assert_eq!(w.v_at(-3), None);

        let w = functional_decomposition(spec(3, 2), &WeightVector::new(vec![1., 0., 0., 0.]).unwrap());
        assert_eq!(w.b, vec![1., 0., 0., 0.]);
    }

    #[test]
    fn exact_ceiling() {
        assert_eq!(ceil_div(1, 2), 1);
        assert_eq!(ceil_div(2, 2), 1);
        assert_eq!(ceil_div(3, 2), 2);
        assert_eq!(ceil_div(0, 3), 0);
    }
}
