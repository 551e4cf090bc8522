//! Dense complex matrices, row-major. Only what density export and the
//! oracle need.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::pauli::{Letter, PauliWord, Position};

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> CMatrix {
        CMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> CMatrix {
        let dim = rows.len();
        let mut m = CMatrix::zeros(dim);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "matrix must be square");
            for (c, v) in row.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        m
    }

    pub fn from_real(rows: &[&[f64]]) -> CMatrix {
        let dim = rows.len();
        let mut m = CMatrix::zeros(dim);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "matrix must be square");
            for (c, v) in row.iter().enumerate() {
                m[(r, c)] = Complex64::new(*v, 0.0);
            }
        }
        m
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(v: &[Complex64]) -> CMatrix {
        let dim = v.len();
        let mut m = CMatrix::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = v[r] * v[c].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let dim = self.dim * other.dim;
        let mut m = CMatrix::zeros(dim);
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self[(r1, c1)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        m[(r1 * other.dim + r2, c1 * other.dim + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        m
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (self * self).trace().re
    }

    /// Largest entrywise `|a - b|`. Panics on a dimension mismatch.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Dense matrix of a Pauli word over the ordered `positions`; the first
    /// position is the most significant tensor factor.
    pub fn of_word(w: &PauliWord, positions: &[Position]) -> CMatrix {
        let mut m = CMatrix::identity(1).scale(w.phase().to_complex());
        for &p in positions {
            m = m.kron(&pauli_matrix(w.letter(p)));
        }
        assert_eq!(
            w.positions().filter(|p| !positions.contains(p)).count(),
            0,
            "word has letters outside the listed positions"
        );
        m
    }
}

/// The 2×2 matrix of a single letter, identity for `None`.
pub fn pauli_matrix(l: Option<Letter>) -> CMatrix {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match l {
        None => CMatrix::identity(2),
        Some(Letter::X) => CMatrix::from_rows(&[&[o, one], &[one, o]]),
        Some(Letter::Y) => CMatrix::from_rows(&[&[o, -i], &[i, o]]),
        Some(Letter::Z) => CMatrix::from_rows(&[&[one, o], &[o, -one]]),
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut m = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    m.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        m
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let v = self[(r, c)];
                    format!("{:+.4}{:+.4}i", v.re, v.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_matrices_square_to_identity() {
        for l in [Letter::X, Letter::Y, Letter::Z] {
            let p = pauli_matrix(Some(l));
            assert!((&p * &p).max_abs_diff(&CMatrix::identity(2)) < 1e-15);
        }
    }

    #[test]
    fn x_times_z_matrix() {
        let x = pauli_matrix(Some(Letter::X));
        let z = pauli_matrix(Some(Letter::Z));
        let y = pauli_matrix(Some(Letter::Y));
        let minus_i_y = y.scale(Complex64::new(0.0, -1.0));
        assert!((&x * &z).max_abs_diff(&minus_i_y) < 1e-15);
    }

    #[test]
    fn kron_ordering() {
        // X ⊗ I maps |00> to |10>: row 2, column 0.
        let m = pauli_matrix(Some(Letter::X)).kron(&CMatrix::identity(2));
        assert_eq!(m[(2, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(1, 0)], Complex64::new(0.0, 0.0));
    }
}
