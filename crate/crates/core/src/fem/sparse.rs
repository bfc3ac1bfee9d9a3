//! Compressed sparse row storage and preconditioned conjugate gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;

/// Symmetric matrix in CSR form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricSystem {
    pub n: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSymmetricSystem {
    /// Sums duplicate `(row, col, value)` triplets into CSR form.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(triplets.len() / 4);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 4);
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// Largest `|A_ij − A_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prods)
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    #[default]
    Jacobi,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgStats {
    pub iterations: usize,
    /// `‖b − Ax‖ / ‖b‖` from an explicitly recomputed residual.
    pub relative_residual: f64,
}

/// Default iteration cap `⌈20 √n⌉`.
pub fn default_max_iter(n: usize) -> usize {
    (20.0 * (n as f64).sqrt()).ceil() as usize
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn solve_cg(
    system: &SparseSymmetricSystem,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
    preconditioner: Preconditioner,
) -> Result<(Vec<f64>, CgStats)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("CG tolerance must be positive, got {tol}")));
    }
    if rhs.len() != system.n {
        return Err(Error::InvalidInput(format!(
            "rhs length {} does not match system size {}",
            rhs.len(),
            system.n
        )));
    }
    let n = system.n;
    let mut x = vec![0.0; n];
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok((
            x,
            CgStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = match preconditioner {
        Preconditioner::Jacobi => system
            .diagonal()
            .into_iter()
            .map(|d| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::IndefiniteSystem {
                        iteration: 0,
                        curvature: d,
                    })
                }
            })
            .collect::<Result<_>>()?,
        Preconditioner::None => vec![1.0; n],
    };

    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iter {
        system.mul_vec_into(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 {
            return Err(Error::IndefiniteSystem {
                iteration: iterations,
                curvature,
            });
        }
        let alpha = rz / curvature;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        iterations += 1;
        rel = norm(&r) / b_norm;
        if rel <= tol {
            // confirm against the true residual; recurrence drift can hide stagnation
            let true_rel = norm(&residual(system, &x, rhs)) / b_norm;
            if true_rel <= tol {
                return Ok((
                    x,
                    CgStats {
                        iterations,
                        relative_residual: true_rel,
                    },
                ));
            }
            r = residual(system, &x, rhs);
        }
        z.iter_mut()
            .zip(r.iter().zip(&inv_diag))
            .for_each(|(zi, (ri, di))| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(Error::NotConverged {
        iterations,
        residual: rel,
    })
}

fn residual(system: &SparseSymmetricSystem, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = system.mul_vec(x);
    b.iter().zip(ax).map(|(bi, axi)| bi - axi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_solves_in_one_iteration() {
        let a = SparseSymmetricSystem::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        for pc in [Preconditioner::Jacobi, Preconditioner::None] {
            let (x, stats) = solve_cg(&a, &b, 1e-12, 10, pc).unwrap();
            assert_eq!(stats.iterations, 1);
            for (xi, bi) in x.iter().zip(&b) {
                assert_relative_eq!(xi, bi, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = SparseSymmetricSystem::from_triplets(2, vec![(0, 0, 2.0), (1, 1, 3.0)]);
        let (x, _) = solve_cg(&a, &[2.0, 3.0], 1e-14, 10, Preconditioner::None).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn triplets_are_summed() {
        let a = SparseSymmetricSystem::from_triplets(2, vec![(0, 1, 1.0), (0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.symmetry_defect(), 0.0);
    }

    #[test]
    fn laplacian_1d_converges() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.01));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseSymmetricSystem::from_triplets(n, t);
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let (x, stats) = solve_cg(&a, &b, 1e-12, 1000, Preconditioner::Jacobi).unwrap();
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&r) / norm(&b) <= 1e-12);
        assert!(stats.relative_residual <= 1e-12);
    }

    #[test]
    fn detects_indefinite_and_stalls() {
        let a = SparseSymmetricSystem::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(
            solve_cg(&a, &[1.0, 1.0], 1e-12, 10, Preconditioner::None),
            Err(Error::IndefiniteSystem { .. })
        ));
        assert!(matches!(
            solve_cg(&a, &[1.0, 1.0], 1e-12, 10, Preconditioner::Jacobi),
            Err(Error::IndefiniteSystem { .. })
        ));
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseSymmetricSystem::from_triplets(n, t);
        assert!(matches!(
            solve_cg(&a, &vec![1.0; n], 1e-14, 2, Preconditioner::Jacobi),
            Err(Error::NotConverged { iterations: 2, .. })
        ));
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = SparseSymmetricSystem::identity(3);
        let (x, s) = solve_cg(&a, &[0.0; 3], 1e-10, 5, Preconditioner::Jacobi).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(s.iterations, 0);
    }
}
