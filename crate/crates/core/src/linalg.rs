//! Dense LU solves with a reciprocal condition estimate.

use nalgebra::{DMatrix, DVector, Dyn, LU};

/// Systems whose 1-norm reciprocal condition estimate falls below this are
/// treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

pub(crate) struct Factored {
    lu: LU<f64, Dyn, Dyn>,
    norm1: f64,
    n: usize,
}

/// Failure of a checked solve; carries the condition estimate (0 for an
/// exactly zero pivot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Singular {
    pub rcond: f64,
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Factored {
    pub fn new(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let norm1 = norm1(&m);
        Self { lu: m.lu(), norm1, n }
    }

    fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        self.lu.solve(b)
    }

    /// Solves `A^T y = c` reusing the factors of `A` (`P A = L U`).
    fn solve_transpose(&self, c: &DVector<f64>) -> Option<DVector<f64>> {
        let w = self.lu.u().tr_solve_upper_triangular(c)?;
        let mut v = self.lu.l().tr_solve_lower_triangular(&w)?;
        self.lu.p().inv_permute_rows(&mut v);
        Some(v)
    }

    /// Hager's estimate of `||A^{-1}||_1`.
    fn inverse_norm1_estimate(&self) -> Option<f64> {
        let n = self.n;
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut estimate: f64 = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x)?;
            let norm = y.iter().map(|v| v.abs()).sum::<f64>();
            if norm <= estimate {
                break;
            }
            estimate = norm;
            let signs = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose(&signs)?;
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.abs()))
                .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if zmax <= z.dot(&x) {
                break;
            }
            x = DVector::zeros(n);
            x[j] = 1.0;
        }
        Some(estimate)
    }

    pub fn rcond(&self) -> f64 {
        if !self.lu.is_invertible() || self.norm1 == 0.0 {
            return 0.0;
        }
        match self.inverse_norm1_estimate() {
            Some(inv) if inv.is_finite() && inv > 0.0 => 1.0 / (self.norm1 * inv),
            _ => 0.0,
        }
    }

    pub fn checked_solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, Singular> {
        let rcond = self.rcond();
        // NaN estimates count as singular.
        if rcond.is_nan() || rcond < RCOND_THRESHOLD {
            return Err(Singular { rcond });
        }
        match self.solve(b) {
            Some(y) if y.iter().all(|v| v.is_finite()) => Ok(y),
            _ => Err(Singular { rcond }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_solve_matches_explicit_transpose() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.5, 3.0, 1.0, 0.0, 4.0, 1.0]);
        let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let via_factors = Factored::new(a.clone()).solve_transpose(&c).unwrap();
        let direct = a.transpose().lu().solve(&c).unwrap();
        assert!((via_factors - direct).norm() < 1e-12);
    }

    #[test]
    fn condition_estimate_of_diagonal() {
        // ||A||_1 = 4, ||A^-1||_1 = 1/0.01
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 0.01]));
        let rc = Factored::new(a).rcond();
        assert!((rc - 0.0025).abs() < 1e-12, "{rc}");
    }

    #[test]
    fn singular_detected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let f = Factored::new(a);
        assert!(f.checked_solve(&DVector::from_vec(vec![1.0, 0.0])).is_err());
        let nearly = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-15]);
        assert!(Factored::new(nearly).checked_solve(&DVector::from_vec(vec![1.0, 0.0])).is_err());
    }
}
