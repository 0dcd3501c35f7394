use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A d x d orthogonal matrix with determinant +1, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    d: usize,
    m: Vec<f64>,
}

impl Rotation {
    pub fn identity(d: usize) -> Rotation {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        Rotation { d, m }
    }

    /// Planar rotation by angle `phi`.
    pub fn from_angle(phi: f64) -> Rotation {
        let (s, c) = phi.sin_cos();
        Rotation { d: 2, m: vec![c, -s, s, c] }
    }

    /// Validates orthogonality and orientation to `tol`.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Rotation> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return domain("rotation must be a square matrix");
        }
        let m: Vec<f64> = rows.iter().flatten().copied().collect();
        let r = Rotation { d, m };
        r.check(tol)?;
        Ok(r)
    }

    pub fn from_dmatrix(a: &DMatrix<f64>, tol: f64) -> Result<Rotation> {
        let rows: Vec<Vec<f64>> = (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
        Rotation::from_rows(&rows, tol)
    }

    /// Orthogonality defect and determinant check.
    pub fn check(&self, tol: f64) -> Result<()> {
        let d = self.d;
        for i in 0..d {
            for j in 0..d {
                let s: f64 = (0..d).map(|k| self.m[i * d + k] * self.m[j * d + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (s - want).abs() > tol {
                    return Err(Error::Domain(format!("matrix not orthogonal: (θθᵀ)[{i},{j}] = {s}")));
                }
            }
        }
        let det = self.det();
        if (det - 1.0).abs() > tol {
            return Err(Error::Domain(format!("determinant {det} is not +1")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.d + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.m.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.m)
    }

    pub fn det(&self) -> f64 {
        self.to_dmatrix().determinant()
    }

    /// `θ x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..d).map(|i| (0..d).map(|j| self.m[i * d + j] * x[j]).sum()).collect()
    }

    /// `θᵗ x`.
    pub fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..d).map(|i| (0..d).map(|j| self.m[j * d + i] * x[j]).sum()).collect()
    }

    /// Row `k` of θ, which is `θᵗ e_k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.m[k * self.d..(k + 1) * self.d]
    }

    pub fn is_identity(&self) -> bool {
        *self == Rotation::identity(self.d)
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        let d = self.d;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = (0..d).map(|k| self.m[i * d + k] * other.m[k * d + j]).sum();
            }
        }
        Rotation { d, m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_rotation_is_valid() {
        let r = Rotation::from_angle(0.83);
        r.check(1e-14).unwrap();
        let x = [0.3, -1.2];
        let back = r.apply_t(&r.apply(&x));
        assert!((back[0] - x[0]).abs() < 1e-15 && (back[1] - x[1]).abs() < 1e-15);
    }

    #[test]
    fn reflection_rejected() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        assert!(Rotation::from_rows(&rows, 1e-12).is_err());
    }
}
