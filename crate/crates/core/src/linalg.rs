//! Dense solves with one step of iterative refinement, and condition numbers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_CONDITION_BOUND: f64 = 1e12;

/// 2-norm condition number from the singular values; infinite when singular.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Check a matrix against a condition bound, naming it in the error.
pub fn ensure_conditioned(which: &str, a: &DMatrix<f64>, bound: f64) -> Result<f64> {
    let cond = condition_number(a);
    if !(cond <= bound) {
        return Err(Error::SingularOperator {
            which: which.to_string(),
            condition: cond,
            bound,
        });
    }
    Ok(cond)
}

/// LU with partial pivoting, then one refinement step.
pub struct Factored {
    a: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Factored {
    pub fn new(which: &str, a: &DMatrix<f64>) -> Result<Self> {
        let lu = a.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::SingularOperator {
                which: which.to_string(),
                condition: f64::INFINITY,
                bound: DEFAULT_CONDITION_BOUND,
            });
        }
        Ok(Self { a: a.clone(), lu })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.lu.solve(b).expect("factor is invertible");
        let r = b - &self.a * &x;
        if let Some(dx) = self.lu.solve(&r) {
            x += dx;
        }
        x
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let col = self.solve(&b.column(j).into_owned());
            out.set_column(j, &col);
        }
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.solve_matrix(&DMatrix::identity(self.a.nrows(), self.a.ncols()))
    }
}

/// Solve `a x = b` once.
pub fn solve_refined(which: &str, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(Factored::new(which, a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refined_solve_recovers_solution() {
        let a = DMatrix::from_fn(6, 6, |i, j| 1.0 / (i + j + 1) as f64);
        let x = DVector::from_fn(6, |i, _| i as f64 - 2.0);
        let b = &a * &x;
        let got = solve_refined("hilbert", &a, &b).unwrap();
        assert!((got - x).amax() < 1e-6);
        assert!(condition_number(&a) > 1e6);
    }

    #[test]
    fn singular_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(ensure_conditioned("rank one", &a, 1e12).is_err());
        assert_eq!(condition_number(&DMatrix::<f64>::identity(3, 3)), 1.0);
    }
}
