//! Double-precision complex dense matrices for numeric-only steps:
//! the square-root fallback, Newton refinement and tolerance checks.

use num_complex::Complex64;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        CMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data: m.entries().iter().map(Scalar::to_c64).collect(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(
            self.rows,
            self.cols,
            self.data.iter().map(|&z| Scalar::float(z)).collect(),
        )
        .expect("consistent dimensions")
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.at(i, j) + a * rhs.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// LU solve with partial pivoting; None when numerically singular.
    pub fn solve(&self, rhs: &CMatrix) -> Option<CMatrix> {
        assert!(self.rows == self.cols && rhs.rows == self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let (pivot_row, pivot_mag) = (col..n)
                .map(|r| (r, a.at(r, col).norm()))
                .max_by(|x, y| x.1.total_cmp(&y.1))?;
            if pivot_mag < 1e-300 {
                return None;
            }
            if pivot_row != col {
                for j in 0..n {
                    let (x, y) = (a.at(col, j), a.at(pivot_row, j));
                    a.set(col, j, y);
                    a.set(pivot_row, j, x);
                }
                for j in 0..b.cols {
                    let (x, y) = (b.at(col, j), b.at(pivot_row, j));
                    b.set(col, j, y);
                    b.set(pivot_row, j, x);
                }
            }
            let inv = a.at(col, col).inv();
            for r in (col + 1)..n {
                let f = a.at(r, col) * inv;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = a.at(r, j) - f * a.at(col, j);
                    a.set(r, j, v);
                }
                for j in 0..b.cols {
                    let v = b.at(r, j) - f * b.at(col, j);
                    b.set(r, j, v);
                }
            }
        }
        let mut x = CMatrix::zeros(n, rhs.cols);
        for j in 0..rhs.cols {
            for i in (0..n).rev() {
                let mut acc = b.at(i, j);
                for k in (i + 1)..n {
                    acc -= a.at(i, k) * x.at(k, j);
                }
                x.set(i, j, acc / a.at(i, i));
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<CMatrix> {
        self.solve(&CMatrix::identity(self.rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_inverse() {
        let m = CMatrix {
            rows: 2,
            cols: 2,
            data: vec![
                Complex64::new(0.0, 1.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, -1.0),
            ],
        };
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        let err = prod.sub(&CMatrix::identity(2)).max_abs();
        assert!(err < 1e-12, "residual {err}");
    }

    #[test]
    fn singular_detected() {
        let m = CMatrix {
            rows: 2,
            cols: 2,
            data: vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(4.0, 0.0),
            ],
        };
        assert!(m.inverse().is_none());
    }
}
