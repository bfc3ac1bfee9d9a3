//! The rugose slab `Ω_ε`, the vertical rescaling `Φ_ε` onto it, and the
//! boundary-fitted periodic mesh obtained by pushing a structured grid of the
//! flat slab `Ω_0` through `Φ_ε`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{PeriodicProfile, ScaledProfile};
use crate::quadrature::{gauss_legendre, integrate_interval};

/// Relative tolerance when checking `ε = 1/(2k)`.
const EPS_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabDomain {
    #[serde(rename = "R")]
    pub height: f64,
    pub eps: f64,
    pub profile: PeriodicProfile,
}

impl SlabDomain {
    /// Validates `φ ≥ 0`, `ε = 1/(2k)` and `ε ‖φ‖_∞ < R/2`.
    pub fn new(height: f64, eps: f64, profile: PeriodicProfile) -> Result<Self> {
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::InvalidDomain(format!("height R must be positive, got {height}")));
        }
        eps_periods(eps)?;
        profile.validate(256)?;
        let sup = profile.sup_norm();
        if eps * sup >= height / 2.0 {
            return Err(Error::InvalidDomain(format!(
                "eps·‖φ‖∞ = {} must stay below R/2 = {}",
                eps * sup,
                height / 2.0
            )));
        }
        Ok(Self { height, eps, profile })
    }

    /// Flat slab `Ω_0` with the same height (ε kept for mesh sizing).
    pub fn flattened(&self) -> Self {
        Self {
            height: self.height,
            eps: self.eps,
            profile: PeriodicProfile::flat(),
        }
    }

    pub fn scaled_profile(&self) -> ScaledProfile {
        ScaledProfile {
            base: self.profile.clone(),
            eps: self.eps,
        }
    }

    /// Number of oscillation periods `1/ε` across `[0, 2π)`.
    pub fn periods(&self) -> usize {
        eps_periods(self.eps).expect("validated at construction")
    }

    fn bottom(&self, x: f64) -> f64 {
        self.eps * self.profile.eval(x / self.eps)
    }

    /// `Φ_ε(x, y) = (x, y (R − εφ(x/ε))/R + εφ(x/ε))`, mapping `Ω_0` onto `Ω_ε`.
    pub fn phi_eps_map(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.height).contains(&y) {
            return Err(Error::OutOfDomain { x, y });
        }
        let b = self.bottom(x);
        Ok((x, y * (self.height - b) / self.height + b))
    }

    /// `Φ_ε⁻¹(x, y) = (x, R (y − εφ(x/ε)) / (R − εφ(x/ε)))`.
    pub fn phi_eps_inverse(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let b = self.bottom(x);
        if y < b - 1e-12 || y > self.height + 1e-12 {
            return Err(Error::OutOfDomain { x, y });
        }
        Ok((x, self.height * (y - b) / (self.height - b)))
    }

    /// Outward unit normal of `Γ_ε` at `x`: `(φ'(x/ε), −1)/γ_ε(x/ε)`.
    pub fn boundary_normal(&self, x: f64) -> [f64; 2] {
        let d = self.scaled_profile().eval_deriv(x);
        let g = (1.0 + d * d).sqrt();
        [d / g, -1.0 / g]
    }

    /// `|Ω_ε| = 2πR − ε ∫₀^{2π} φ(x/ε) dx = 2π (R − ε a0)` for whole periods.
    pub fn area(&self) -> f64 {
        TAU * (self.height - self.eps * self.profile.a0)
    }

    /// Lipschitz constant of `Φ_ε` and of its inverse, uniform in ε.
    ///
    /// Frobenius bounds on the Jacobians over `0 ≤ y ≤ R`, using
    /// `0 ≤ εφ < R/2`: `DΦ_ε = [[1, 0], [φ'(1 − y/R), (R − εφ)/R]]` and
    /// `DΦ_ε⁻¹ = [[1, 0], [Rφ'(y − R)/(R − εφ)², R/(R − εφ)]]`.
    pub fn bilipschitz_constant(&self) -> f64 {
        let d = self.profile.deriv_sup_norm();
        let forward = (2.0 + d * d).sqrt();
        let inverse = (5.0 + 16.0 * d * d).sqrt();
        forward.max(inverse)
    }
}

/// `1/ε` if ε is exactly `1/(2k)`.
/// Number of periods `1/ε` for `ε = 1/(2k)`.
pub fn eps_periods(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 0.5 && eps.is_finite()) {
        return Err(Error::InvalidDomain(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let k = (0.5 / eps).round();
    if ((1.0 / (2.0 * k)) - eps).abs() > EPS_MATCH_TOL * eps {
        return Err(Error::InvalidDomain(format!("eps = {eps} is not of the form 1/(2k)")));
    }
    Ok(2 * k as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    pub nx_per_period: usize,
    pub ny: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
}

fn default_grading() -> f64 {
    1.5
}

impl MeshParams {
    pub fn new(nx_per_period: usize, ny: usize, grading: f64) -> Self {
        Self {
            nx_per_period,
            ny,
            grading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    /// Bottom: `∫ γ_ε(x/ε) dx` over the edge; top: Euclidean length.
    pub weight: f64,
}

/// Triangulation of `Ω_ε`, periodic in x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub bottom_edges: Vec<BoundaryEdge>,
    pub top_edges: Vec<BoundaryEdge>,
    /// `(node at x = 0, node at x = 2π)`.
    pub periodic_pairs: Vec<(usize, usize)>,
    pub h_max: f64,
    /// Number of x intervals.
    pub nx: usize,
    pub ny: usize,
    /// Bottom boundary `y = εφ(x/ε)`.
    pub boundary: ScaledProfile,
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Reference row positions in `[0, 1]`, geometric with largest/smallest row
/// height ratio `grading`, refined toward 0.
pub fn graded_rows(ny: usize, grading: f64) -> Vec<f64> {
    let r = if ny > 1 { grading.powf(1.0 / (ny - 1) as f64) } else { 1.0 };
    let heights: Vec<f64> = (0..ny).map(|j| r.powi(j as i32)).collect();
    let total: f64 = heights.iter().sum();
    let mut s = Vec::with_capacity(ny + 1);
    let mut acc = 0.0;
    s.push(0.0);
    for h in &heights[..ny - 1] {
        acc += h;
        s.push(acc / total);
    }
    s.push(1.0);
    s
}

/// Maps a structured `(nx_per_period/ε) × ny` grid of `Ω_0` through `Φ_ε`.
pub fn build_mesh(domain: &SlabDomain, params: MeshParams) -> Result<MappedMesh> {
    if params.nx_per_period < 8 {
        return Err(Error::InvalidResolution(format!(
            "nx_per_period must be at least 8, got {}",
            params.nx_per_period
        )));
    }
    if params.ny < 8 {
        return Err(Error::InvalidResolution(format!("ny must be at least 8, got {}", params.ny)));
    }
    if !(params.grading >= 1.0 && params.grading.is_finite()) {
        return Err(Error::InvalidResolution(format!("grading must be ≥ 1, got {}", params.grading)));
    }
    let nx = params.nx_per_period * domain.periods();
    let ny = params.ny;
    let stride = nx + 1;
    let hx = TAU / nx as f64;
    let rows = graded_rows(ny, params.grading);

    let mut nodes = Vec::with_capacity(stride * (ny + 1));
    for &s in &rows {
        for i in 0..=nx {
            let x = if i == nx { TAU } else { i as f64 * hx };
            let (mx, my) = domain.phi_eps_map(x, s * domain.height)?;
            nodes.push([mx, my]);
        }
    }
    // the x = 2π column must coincide with x = 0 in y
    for j in 0..=ny {
        nodes[j * stride + nx][1] = nodes[j * stride][1];
    }

    let idx = |i: usize, j: usize| j * stride + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            let diag_ac = dist(nodes[a], nodes[c]);
            let diag_bd = dist(nodes[b], nodes[d]);
            if diag_ac <= diag_bd * (1.0 + 1e-12) {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }

    let mut h_max: f64 = 0.0;
    for (k, t) in triangles.iter().enumerate() {
        let [p, q, r] = t.map(|n| nodes[n]);
        let area = signed_area(p, q, r);
        if area <= 0.0 {
            return Err(Error::MeshDegenerate { index: k, area });
        }
        h_max = h_max.max(dist(p, q)).max(dist(q, r)).max(dist(r, p));
    }

    let boundary = domain.scaled_profile();
    let (gx, gw) = gauss_legendre(4);
    let bottom_edges = (0..nx)
        .map(|i| {
            let (x0, x1) = (i as f64 * hx, (i + 1) as f64 * hx);
            BoundaryEdge {
                nodes: [idx(i, 0), idx(i + 1, 0)],
                weight: integrate_interval(x0, x1, &gx, &gw, |x| boundary.arclength_factor(x)),
            }
        })
        .collect();
    let top_edges = (0..nx)
        .map(|i| {
            let (a, b) = (idx(i, ny), idx(i + 1, ny));
            BoundaryEdge {
                nodes: [a, b],
                weight: dist(nodes[a], nodes[b]),
            }
        })
        .collect();
    let periodic_pairs = (0..=ny).map(|j| (idx(0, j), idx(nx, j))).collect();

    Ok(MappedMesh {
        nodes,
        triangles,
        bottom_edges,
        top_edges,
        periodic_pairs,
        h_max,
        nx,
        ny,
        boundary,
    })
}

impl MappedMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn total_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| signed_area(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]))
            .sum()
    }

    /// Node index of grid position `(i, j)`, `i ∈ 0..=nx`, `j ∈ 0..=ny`.
    pub fn grid_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Degree-of-freedom index per node (periodic partners share one) and the
    /// number of distinct degrees of freedom.
    pub fn dof_map(&self) -> (Vec<usize>, usize) {
        let mut primary: Vec<usize> = (0..self.nodes.len()).collect();
        for &(a, b) in &self.periodic_pairs {
            primary[b] = primary[a];
        }
        let mut dof = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for n in 0..self.nodes.len() {
            let p = primary[n];
            if dof[p] == usize::MAX {
                dof[p] = next;
                next += 1;
            }
            dof[n] = dof[p];
        }
        (dof, next)
    }

    /// Plain-text export with node, triangle, boundary and periodic sections.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# rugose mesh v1");
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "{i} {:.17e} {:.17e}", p[0], p[1]);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(out, "boundary {}", self.bottom_edges.len() + self.top_edges.len());
        let tagged = self
            .bottom_edges
            .iter()
            .map(|e| ("bottom", e))
            .chain(self.top_edges.iter().map(|e| ("top", e)));
        for (i, (tag, e)) in tagged.enumerate() {
            let _ = writeln!(out, "{i} {} {} {tag} {:.17e}", e.nodes[0], e.nodes[1], e.weight);
        }
        let _ = writeln!(out, "periodic {}", self.periodic_pairs.len());
        for (a, b) in &self.periodic_pairs {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}
