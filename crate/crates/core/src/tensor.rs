//! Traceless symmetric order-parameter tensors in two and three dimensions.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Q = [[q1, q2], [q2, -q1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QTensor2 {
    pub q1: f64,
    pub q2: f64,
}

impl QTensor2 {
    pub const ZERO: QTensor2 = QTensor2 { q1: 0.0, q2: 0.0 };

    pub const fn new(q1: f64, q2: f64) -> Self {
        Self { q1, q2 }
    }

    /// `n ⊗ n − I/2` for a unit vector `n`.
    pub fn from_director(n: [f64; 2]) -> Self {
        Self::new(n[0] * n[0] - 0.5, n[0] * n[1])
    }

    pub fn to_matrix(self) -> Matrix2<f64> {
        Matrix2::new(self.q1, self.q2, self.q2, -self.q1)
    }

    /// Frobenius inner product.
    pub fn dot(self, other: Self) -> f64 {
        2.0 * (self.q1 * other.q1 + self.q2 * other.q2)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn components(self) -> [f64; 2] {
        [self.q1, self.q2]
    }
}

impl Add for QTensor2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.q1 + o.q1, self.q2 + o.q2)
    }
}

impl Sub for QTensor2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.q1 - o.q1, self.q2 - o.q2)
    }
}

impl Neg for QTensor2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.q1, -self.q2)
    }
}

impl Mul<f64> for QTensor2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.q1 * s, self.q2 * s)
    }
}

impl Mul<QTensor2> for f64 {
    type Output = QTensor2;
    fn mul(self, q: QTensor2) -> QTensor2 {
        q * self
    }
}

/// Symmetric traceless 3×3 tensor stored by its five independent entries
/// `[q11, q12, q13, q22, q23]`; `q33 = -(q11 + q22)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QTensor3 {
    pub components: [f64; 5],
}

impl QTensor3 {
    pub const ZERO: QTensor3 = QTensor3 { components: [0.0; 5] };

    pub fn new(components: [f64; 5]) -> Self {
        Self { components }
    }

    /// Traceless part of the symmetric part of `m`.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let sym = (m + m.transpose()) * 0.5;
        let tr = sym.trace() / 3.0;
        Self::new([
            sym[(0, 0)] - tr,
            sym[(0, 1)],
            sym[(0, 2)],
            sym[(1, 1)] - tr,
            sym[(1, 2)],
        ])
    }

    /// `s (n ⊗ n − I/3)`.
    pub fn uniaxial(s: f64, n: [f64; 3]) -> Self {
        let m = Matrix3::from_fn(|i, j| s * (n[i] * n[j] - if i == j { 1.0 / 3.0 } else { 0.0 }));
        Self::from_matrix(&m)
    }

    pub fn to_matrix(self) -> Matrix3<f64> {
        let [a, b, c, d, e] = self.components;
        Matrix3::new(a, b, c, b, d, e, c, e, -a - d)
    }

    pub fn trace(self) -> f64 {
        self.to_matrix().trace()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.to_matrix().component_mul(&other.to_matrix()).sum()
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(self) -> Result<[f64; 3]> {
        sorted_eigen(&self.to_matrix()).map(|(l, _)| l)
    }
}

impl Add for QTensor3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut c = self.components;
        c.iter_mut().zip(o.components).for_each(|(a, b)| *a += b);
        Self::new(c)
    }
}

impl Sub for QTensor3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut c = self.components;
        c.iter_mut().zip(o.components).for_each(|(a, b)| *a -= b);
        Self::new(c)
    }
}

impl Mul<f64> for QTensor3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.components.map(|c| c * s))
    }
}

/// Eigen-decomposition of a symmetric 3×3 matrix, eigenvalues ascending and
/// eigenvectors as the matching columns.
pub fn sorted_eigen(m: &Matrix3<f64>) -> Result<([f64; 3], Matrix3<f64>)> {
    let eig = SymmetricEigen::try_new(*m, f64::EPSILON, 10_000).ok_or(Error::DegenerateEigensolve)?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.map(|i| eig.eigenvalues[i]);
    let vectors = Matrix3::from_columns(&order.map(|i| eig.eigenvectors.column(i).into_owned()));
    Ok((values, vectors))
}
