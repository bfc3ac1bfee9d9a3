//! Closed-form solution of the homogenised slab problem
//! `−Q'' + cQ = 0` on `(0, R)` with Robin data at both ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::QTensor2;

/// `Q_0(y) = c1 e^{y√c} + c2 e^{−y√c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSolution {
    pub c1: QTensor2,
    pub c2: QTensor2,
    pub c: f64,
    pub w_ef: f64,
    pub w0: f64,
    #[serde(rename = "R")]
    pub height: f64,
    #[serde(rename = "Q_ef")]
    pub q_ef: QTensor2,
    #[serde(rename = "Q_R")]
    pub q_r: QTensor2,
}

/// Scalar coefficient matrix of the boundary conditions.
fn boundary_matrix(c: f64, w_ef: f64, w0: f64, height: f64) -> [[f64; 2]; 2] {
    let k = c.sqrt();
    let (up, down) = ((height * k).exp(), (-height * k).exp());
    [
        [0.5 * w_ef - k, 0.5 * w_ef + k],
        [up * (0.5 * w0 + k), down * (0.5 * w0 - k)],
    ]
}

/// Solves the 2×2 boundary system by Cramer's rule, componentwise.
pub fn solve_limit(c: f64, w_ef: f64, w0: f64, height: f64, q_ef: QTensor2, q_r: QTensor2) -> Result<LimitSolution> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("c must be positive, got {c}")));
    }
    if !(height > 0.0 && height.is_finite()) {
        return Err(Error::InvalidInput(format!("R must be positive, got {height}")));
    }
    if !w_ef.is_finite() || !w0.is_finite() {
        return Err(Error::InvalidInput("anchoring strengths must be finite".into()));
    }
    let a = boundary_matrix(c, w_ef, w0, height);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = (a[0][0].abs().max(a[0][1].abs())) * (a[1][0].abs().max(a[1][1].abs()));
    if !(det.abs() >= 1e-12 * scale) || scale == 0.0 {
        return Err(Error::NearSingularSystem { det, scale });
    }
    let b1 = 0.5 * w_ef * q_ef;
    let b2 = 0.5 * w0 * q_r;
    let c1 = (a[1][1] * b1 - a[0][1] * b2) * (1.0 / det);
    let c2 = (a[0][0] * b2 - a[1][0] * b1) * (1.0 / det);
    Ok(LimitSolution {
        c1,
        c2,
        c,
        w_ef,
        w0,
        height,
        q_ef,
        q_r,
    })
}

impl LimitSolution {
    pub fn eval(&self, y: f64) -> QTensor2 {
        let k = self.c.sqrt();
        self.c1 * (y * k).exp() + self.c2 * (-y * k).exp()
    }

    pub fn deriv(&self, y: f64) -> QTensor2 {
        let k = self.c.sqrt();
        (self.c1 * (y * k).exp() - self.c2 * (-y * k).exp()) * k
    }

    pub fn second_deriv(&self, y: f64) -> QTensor2 {
        self.eval(y) * self.c
    }

    /// Bound on `|Q_0|`, `|Q_0'|`, `|Q_0''|` and the Robin terms, used to
    /// make residuals relative.
    pub fn scale(&self) -> f64 {
        let k = self.c.sqrt();
        let m = self.c1.norm() * (self.height * k).exp() + self.c2.norm();
        let w = 0.5 * self.w_ef.abs().max(self.w0.abs());
        let target = self.q_ef.norm().max(self.q_r.norm());
        1f64.max(m * self.c.max(k)).max(w * (m + target))
    }
}

pub fn eval_limit(sol: &LimitSolution, y: f64) -> QTensor2 {
    sol.eval(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub pde_residual: f64,
    pub bottom_robin_residual: f64,
    pub top_robin_residual: f64,
    pub scale: f64,
}

impl ResidualReport {
    pub fn max_relative(&self) -> f64 {
        self.pde_residual.max(self.bottom_robin_residual).max(self.top_robin_residual) / self.scale
    }
}

/// Residuals of the PDE at `n` equispaced points and of both Robin conditions,
/// with `∂/∂ν_0 = −∂/∂y` at the bottom.
pub fn residual_check(sol: &LimitSolution, n_samples: usize) -> Result<ResidualReport> {
    if n_samples < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 samples, got {n_samples}")));
    }
    let mut pde: f64 = 0.0;
    for i in 0..n_samples {
        let y = sol.height * i as f64 / (n_samples - 1) as f64;
        pde = pde.max((sol.eval(y) * sol.c - sol.second_deriv(y)).norm());
    }
    let bottom = (sol.deriv(0.0) * -1.0 + (sol.eval(0.0) - sol.q_ef) * (0.5 * sol.w_ef)).norm();
    let top = (sol.deriv(sol.height) + (sol.eval(sol.height) - sol.q_r) * (0.5 * sol.w0)).norm();
    Ok(ResidualReport {
        pde_residual: pde,
        bottom_robin_residual: bottom,
        top_robin_residual: top,
        scale: sol.scale(),
    })
}
