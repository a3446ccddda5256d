//! Linear solves for tridiagonal matrices bordered by one extra row and column.

use crate::error::{Error, Result};

/// Relative pivot size below which the matrix is reported singular.
const PIVOT_TOL: f64 = 1e-14;

/// ```text
/// [ A    col ] [ y ]   [ p ]
/// [ row  corner ] [ m ] = [ q ]
/// ```
/// with `A` tridiagonal (`sub[i] = A[i+1][i]`, `sup[i] = A[i][i+1]`).
#[derive(Clone, Debug, PartialEq)]
pub struct BorderedTridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub col: Vec<f64>,
    pub row: Vec<f64>,
    pub corner: f64,
}

impl BorderedTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len() + 1
    }

    /// Dense `(n+1) × (n+1)` copy, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.diag.len();
        let mut m = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = self.sup[i];
                m[i + 1][i] = self.sub[i];
            }
            m[i][n] = self.col[i];
            m[n][i] = self.row[i];
        }
        m[n][n] = self.corner;
        m
    }

    /// Solves the bordered system by block elimination on the Thomas
    /// factorization of `A`. `rhs` has length `n + 1`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        assert_eq!(rhs.len(), n + 1, "rhs length");
        let factor = ThomasFactor::new(&self.sub, &self.diag, &self.sup)?;
        let u = factor.solve(&rhs[..n]);
        let v = factor.solve(&self.col);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let schur = self.corner - dot(&self.row, &v);
        let scale = self
            .row
            .iter()
            .zip(&self.col)
            .map(|(r, c)| (r * c).abs())
            .fold(self.corner.abs(), f64::max)
            .max(f64::MIN_POSITIVE);
        if !schur.is_finite() || schur.abs() <= PIVOT_TOL * scale {
            return Err(Error::SingularJacobian {
                row: n,
                pivot: schur,
            });
        }
        let m = (rhs[n] - dot(&self.row, &u)) / schur;
        let mut out: Vec<f64> = u.iter().zip(&v).map(|(ui, vi)| ui - vi * m).collect();
        out.push(m);
        Ok(out)
    }
}

/// LU factors of a tridiagonal matrix without pivoting.
struct ThomasFactor<'a> {
    sub: &'a [f64],
    /// Modified superdiagonal `c'`.
    upper: Vec<f64>,
    /// Pivots.
    pivots: Vec<f64>,
}

impl<'a> ThomasFactor<'a> {
    fn new(sub: &'a [f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let n = diag.len();
        let scale = diag
            .iter()
            .chain(sub)
            .chain(sup)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut pivots = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let pivot = if i == 0 {
                diag[0]
            } else {
                diag[i] - sub[i - 1] * upper[i - 1]
            };
            if !pivot.is_finite() || pivot.abs() <= PIVOT_TOL * scale {
                return Err(Error::SingularJacobian { row: i, pivot });
            }
            pivots.push(pivot);
            if i + 1 < n {
                upper.push(sup[i] / pivot);
            }
        }
        Ok(Self { sub, upper, pivots })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivots.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let carry = if i == 0 {
                0.0
            } else {
                self.sub[i - 1] * y[i - 1]
            };
            y[i] = (rhs[i] - carry) / self.pivots[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= self.upper[i] * y[i + 1];
        }
        y
    }
}
