//! P1 finite elements for the Robin problem
//! `−ΔQ + cQ = 0` in `Ω_ε`, `∂Q/∂ν + (w/2)(Q − Q_b) = 0` on both boundaries.
//!
//! The components `q1`, `q2` decouple and share one matrix.

pub mod sparse;

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_mesh, signed_area, MappedMesh, MeshParams, SlabDomain};
use crate::homogenize::{target_from_slope, SlabEffective};
use crate::quadrature::{gauss_legendre, pairwise_sum};
use crate::tensor::QTensor2;

pub use sparse::{default_max_iter, dot, solve_cg, CgStats, Preconditioner, SparseSymmetricSystem};

/// `Q_R = ν_R ⊗ ν_R − I/2` for `ν_R = (0, 1)`.
pub const TOP_TARGET: QTensor2 = QTensor2 { q1: -0.5, q2: 0.0 };

/// Data on the bottom boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum BottomData {
    /// `Q⁰` built from the normal of the mesh's bottom boundary.
    BoundaryNormal,
    Constant(QTensor2),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinProblem {
    pub c: f64,
    /// Anchoring strength on the top boundary.
    pub w0: f64,
    /// Anchoring strength on the bottom boundary.
    pub bottom_weight: f64,
    pub bottom_data: BottomData,
    pub top_data: QTensor2,
}

impl RobinProblem {
    /// The rugose problem: weight `w0` on both boundaries, `Q⁰` below, `Q_R` above.
    pub fn rugose(c: f64, w0: f64) -> Self {
        Self {
            c,
            w0,
            bottom_weight: w0,
            bottom_data: BottomData::BoundaryNormal,
            top_data: TOP_TARGET,
        }
    }

    /// The homogenised problem: weight `w_ef` and target `Q_ef` below.
    pub fn limit(c: f64, w0: f64, eff: &SlabEffective) -> Self {
        Self {
            c,
            w0,
            bottom_weight: eff.w_ef,
            bottom_data: BottomData::Constant(eff.q_ef),
            top_data: TOP_TARGET,
        }
    }

    /// Same weight and target on both boundaries.
    pub fn constant(c: f64, w0: f64, data: QTensor2) -> Self {
        Self {
            c,
            w0,
            bottom_weight: w0,
            bottom_data: BottomData::Constant(data),
            top_data: data,
        }
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("w0", self.w0), ("bottom weight", self.bottom_weight)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.c == 0.0 && self.w0 == 0.0 && self.bottom_weight == 0.0 {
            return Err(Error::InvalidInput("c and the anchoring weights cannot all vanish".into()));
        }
        Ok(())
    }
}

/// Element stiffness matrix `∫ ∇λ_i · ∇λ_j` and area of a triangle.
pub fn element_stiffness(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], f64) {
    let area = signed_area(p[0], p[1], p[2]);
    let grads: [[f64; 2]; 3] = std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        [p[j][1] - p[k][1], p[k][0] - p[j][0]]
    });
    let scale = 1.0 / (4.0 * area);
    let k = std::array::from_fn(|i| {
        std::array::from_fn(|j| scale * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]))
    });
    (k, area)
}

/// Assembled matrix and the right-hand sides of `q1` and `q2`, indexed by
/// degree of freedom.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: SparseSymmetricSystem,
    pub rhs: [Vec<f64>; 2],
    /// Node → degree of freedom.
    pub dofs: Vec<usize>,
}

const EDGE_GAUSS_POINTS: usize = 4;

pub fn assemble(mesh: &MappedMesh, problem: &RobinProblem) -> Result<AssembledSystem> {
    problem.check()?;
    let (dofs, n) = mesh.dof_map();
    let c = problem.c;

    let element_blocks: Vec<Result<Vec<(usize, usize, f64)>>> = mesh
        .triangles
        .par_iter()
        .enumerate()
        .map(|(index, t)| {
            let p = t.map(|v| mesh.nodes[v]);
            let (k, area) = element_stiffness(p);
            if !(area > 0.0) {
                return Err(Error::SingularElement {
                    index,
                    jacobian: 2.0 * area,
                });
            }
            let mut out = Vec::with_capacity(9);
            for i in 0..3 {
                for j in 0..3 {
                    let mass = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                    out.push((dofs[t[i]], dofs[t[j]], k[i][j] + c * mass));
                }
            }
            Ok(out)
        })
        .collect();
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len() + 8 * mesh.nx);
    for block in element_blocks {
        triplets.extend(block?);
    }

    let mut rhs = [vec![0.0; n], vec![0.0; n]];
    let (gx, gw) = gauss_legendre(EDGE_GAUSS_POINTS);

    let half_b = 0.5 * problem.bottom_weight;
    for e in &mesh.bottom_edges {
        let (x0, x1) = (mesh.nodes[e.nodes[0]][0], mesh.nodes[e.nodes[1]][0]);
        let half = 0.5 * (x1 - x0);
        let mut m = [[0.0; 2]; 2];
        let mut f = [[0.0; 2]; 2];
        for (&s, &w) in gx.iter().zip(&gw) {
            let x = 0.5 * (x0 + x1) + half * s;
            let lam = [0.5 * (1.0 - s), 0.5 * (1.0 + s)];
            let g = mesh.boundary.arclength_factor(x);
            let target = match problem.bottom_data {
                BottomData::BoundaryNormal => target_from_slope(mesh.boundary.eval_deriv(x)),
                BottomData::Constant(q) => q,
            };
            let jw = w * half * g;
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] += jw * lam[i] * lam[j];
                }
                f[0][i] += jw * lam[i] * target.q1;
                f[1][i] += jw * lam[i] * target.q2;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                triplets.push((dofs[e.nodes[i]], dofs[e.nodes[j]], half_b * m[i][j]));
            }
            rhs[0][dofs[e.nodes[i]]] += half_b * f[0][i];
            rhs[1][dofs[e.nodes[i]]] += half_b * f[1][i];
        }
    }

    let half_t = 0.5 * problem.w0;
    for e in &mesh.top_edges {
        let l = e.weight;
        for i in 0..2 {
            for j in 0..2 {
                let m = l / 6.0 * if i == j { 2.0 } else { 1.0 };
                triplets.push((dofs[e.nodes[i]], dofs[e.nodes[j]], half_t * m));
            }
            rhs[0][dofs[e.nodes[i]]] += half_t * 0.5 * l * problem.top_data.q1;
            rhs[1][dofs[e.nodes[i]]] += half_t * 0.5 * l * problem.top_data.q2;
        }
    }

    Ok(AssembledSystem {
        matrix: SparseSymmetricSystem::from_triplets(n, triplets),
        rhs,
        dofs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FemTimings {
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct FemSolution {
    pub mesh: Arc<MappedMesh>,
    pub nodal_q1: Vec<f64>,
    pub nodal_q2: Vec<f64>,
    /// Iterations of the slower component.
    pub cg_iterations: usize,
    /// Largest relative residual of the two components.
    pub final_residual: f64,
    pub timings: FemTimings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub nodes: usize,
    pub triangles: usize,
    pub dofs: usize,
    pub h_max: f64,
    pub iterations: usize,
    pub residual: f64,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
}

impl FemSolution {
    pub fn value(&self, node: usize) -> QTensor2 {
        QTensor2::new(self.nodal_q1[node], self.nodal_q2[node])
    }

    pub fn stats(&self) -> SolverStats {
        SolverStats {
            nodes: self.mesh.node_count(),
            triangles: self.mesh.triangles.len(),
            dofs: self.mesh.dof_map().1,
            h_max: self.mesh.h_max,
            iterations: self.cg_iterations,
            residual: self.final_residual,
            assembly_seconds: self.timings.assembly_seconds,
            solve_seconds: self.timings.solve_seconds,
        }
    }

    /// CSV with header `node_id,x,y,q1,q2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,x,y,q1,q2\n");
        for (i, p) in self.mesh.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{:.17e},{:.17e},{:.17e},{:.17e}",
                p[0], p[1], self.nodal_q1[i], self.nodal_q2[i]
            );
        }
        out
    }
}

/// Solves both components of an assembled system and scatters to nodes.
pub fn solve_assembled(
    mesh: Arc<MappedMesh>,
    system: &AssembledSystem,
    tol: f64,
    assembly_seconds: f64,
) -> Result<FemSolution> {
    let start = Instant::now();
    let max_iter = default_max_iter(system.matrix.n);
    let (first, second) = rayon::join(
        || solve_cg(&system.matrix, &system.rhs[0], tol, max_iter, Preconditioner::Jacobi),
        || solve_cg(&system.matrix, &system.rhs[1], tol, max_iter, Preconditioner::Jacobi),
    );
    let (x1, s1) = first?;
    let (x2, s2) = second?;
    let solve_seconds = start.elapsed().as_secs_f64();
    Ok(FemSolution {
        nodal_q1: system.dofs.iter().map(|&d| x1[d]).collect(),
        nodal_q2: system.dofs.iter().map(|&d| x2[d]).collect(),
        cg_iterations: s1.iterations.max(s2.iterations),
        final_residual: s1.relative_residual.max(s2.relative_residual),
        timings: FemTimings {
            assembly_seconds,
            solve_seconds,
        },
        mesh,
    })
}

/// Meshes `domain`, assembles and solves.
pub fn solve_rugose(domain: &SlabDomain, problem: &RobinProblem, params: MeshParams, tol: f64) -> Result<FemSolution> {
    let mesh = Arc::new(build_mesh(domain, params)?);
    solve_on_mesh(mesh, problem, tol)
}

pub fn solve_on_mesh(mesh: Arc<MappedMesh>, problem: &RobinProblem, tol: f64) -> Result<FemSolution> {
    let start = Instant::now();
    let system = assemble(&mesh, problem)?;
    let assembly_seconds = start.elapsed().as_secs_f64();
    solve_assembled(mesh, &system, tol, assembly_seconds)
}

/// `‖Q‖_{L²}` with `|Q|² = 2(q1² + q2²)`, by the exact P1 mass matrix.
pub fn l2_norm(mesh: &MappedMesh, q1: &[f64], q2: &[f64]) -> f64 {
    assert_eq!(q1.len(), mesh.node_count(), "q1 length must match node count");
    assert_eq!(q2.len(), mesh.node_count(), "q2 length must match node count");
    let parts: Vec<f64> = mesh
        .triangles
        .iter()
        .map(|t| {
            let area = signed_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
            let mut s = 0.0;
            for u in [q1, q2] {
                let v = t.map(|i| u[i]);
                let sum = v[0] + v[1] + v[2];
                s += v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + sum * sum;
            }
            2.0 * area / 12.0 * s
        })
        .collect();
    pairwise_sum(&parts).sqrt()
}
