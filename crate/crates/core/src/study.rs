//! ε-sweeps of the rugose problem against its homogenised limit, rate
//! fitting, and the weak-convergence check of the boundary coefficients.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{solve_limit, LimitSolution};
use crate::error::{Error, Result};
use crate::fem::{l2_norm, solve_on_mesh, FemSolution, RobinProblem, TOP_TARGET};
use crate::geometry::{build_mesh, MeshParams, SlabDomain};
use crate::homogenize::{slab_effective, target_from_slope, SlabEffective};
use crate::profile::{DerivOrder, PeriodicProfile};
use crate::quadrature::{gauss_legendre, pairwise_sum, QuadratureRule};
use crate::tensor::QTensor2;

fn default_nx_per_period() -> usize {
    16
}
fn default_ny_base() -> usize {
    8
}
fn default_grading() -> f64 {
    1.5
}
fn default_cg_tol() -> f64 {
    1e-10
}
fn default_p_report() -> f64 {
    8.0
}

/// Exponents `p` whose rates `(p − 1)/p` are listed in every report.
pub const RATE_FAMILY: [f64; 4] = [3.0, 4.0, 8.0, 16.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub profile: PeriodicProfile,
    #[serde(rename = "R")]
    pub height: f64,
    pub c: f64,
    pub w0: f64,
    pub eps_list: Vec<f64>,
    #[serde(default = "default_nx_per_period")]
    pub nx_per_period: usize,
    #[serde(default = "default_ny_base")]
    pub ny_base: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
    #[serde(default = "default_p_report")]
    pub p_report: f64,
}

impl SweepConfig {
    /// Defaults for everything except the physical data.
    pub fn new(profile: PeriodicProfile, height: f64, c: f64, w0: f64, eps_list: Vec<f64>) -> Self {
        Self {
            profile,
            height,
            c,
            w0,
            eps_list,
            nx_per_period: default_nx_per_period(),
            ny_base: default_ny_base(),
            grading: default_grading(),
            cg_tol: default_cg_tol(),
            p_report: default_p_report(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::InvalidInput("eps_list is empty".into()));
        }
        if self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidInput("eps_list must be strictly decreasing".into()));
        }
        for &eps in &self.eps_list {
            SlabDomain::new(self.height, eps, self.profile.clone())?;
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidInput(format!("c must be positive, got {}", self.c)));
        }
        if !(self.w0 > 0.0 && self.w0.is_finite()) {
            return Err(Error::InvalidInput(format!("w0 must be positive, got {}", self.w0)));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::InvalidInput(format!("cg_tol must lie in (0, 1), got {}", self.cg_tol)));
        }
        if !(self.p_report > 2.0) {
            return Err(Error::InvalidInput(format!("p_report must exceed 2, got {}", self.p_report)));
        }
        if self.nx_per_period < 8 || self.ny_base < 8 || !(self.grading >= 1.0) {
            return Err(Error::InvalidResolution(
                "nx_per_period and ny_base must be at least 8 and grading at least 1".into(),
            ));
        }
        Ok(())
    }

    /// `⌈ny_base · √(1/ε)⌉` rows for the case `eps`.
    pub fn rows_for(&self, eps: f64) -> usize {
        (self.ny_base as f64 * (1.0 / eps).sqrt()).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub eps: f64,
    pub h_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub cg_iters: usize,
    /// `‖Q_ε,h − Q_0,h‖_{L²(Ω_ε)}` against the discrete limit problem.
    pub error: f64,
    /// `‖Q_ε,h − Q_0‖_{L²(Ω_ε)}` against the closed-form limit.
    pub error_closed_form: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalRate {
    pub p: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fitted_slope: Option<f64>,
    pub fitted_intercept: Option<f64>,
    pub r_squared: Option<f64>,
    /// Fit of `error_closed_form`, when it is well defined.
    pub closed_form_fit: Option<RateFit>,
    pub theoretical_rate: f64,
    pub rate_family: Vec<TheoreticalRate>,
    pub degenerate: bool,
    pub effective: SlabEffective,
    pub limit: LimitSolution,
    pub mesh_policy: String,
}

impl RateReport {
    /// The fit, or `DegenerateSweep` when the sweep was flagged.
    pub fn require_fit(&self) -> Result<RateFit> {
        match (self.fitted_slope, self.fitted_intercept, self.r_squared) {
            (Some(slope), Some(intercept), Some(r_squared)) => Ok(RateFit {
                slope,
                intercept,
                r_squared,
            }),
            _ => Err(Error::DegenerateSweep {
                max_error: self.rows.iter().fold(0.0, |m, r| m.max(r.error)),
            }),
        }
    }
}

/// Ordinary least squares of `log error` against `log ε`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    if points.iter().any(|&(e, err)| !(e > 0.0 && err > 0.0)) {
        return Err(Error::InvalidInput("rate fit needs positive eps and errors".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fit needs distinct eps values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Coefficients shared by every case of a sweep.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub effective: SlabEffective,
    pub limit: LimitSolution,
}

pub fn sweep_context(config: &SweepConfig) -> Result<SweepContext> {
    let effective = slab_effective(&config.profile, config.w0, &QuadratureRule::default())?;
    let limit = solve_limit(config.c, effective.w_ef, config.w0, config.height, effective.q_ef, TOP_TARGET)?;
    Ok(SweepContext { effective, limit })
}

/// Values of a solution on the flat grid at the nodes of a mapped mesh with the
/// same columns, by linear interpolation in y along each column.
fn transfer_columns(flat: &FemSolution, target: &crate::geometry::MappedMesh) -> (Vec<f64>, Vec<f64>) {
    let fm = &flat.mesh;
    assert_eq!((fm.nx, fm.ny), (target.nx, target.ny), "meshes must share the grid");
    let mut q1 = vec![0.0; target.node_count()];
    let mut q2 = vec![0.0; target.node_count()];
    for i in 0..=fm.nx {
        let ys: Vec<f64> = (0..=fm.ny).map(|j| fm.nodes[fm.grid_index(i, j)][1]).collect();
        for j in 0..=target.ny {
            let node = target.grid_index(i, j);
            let y = target.nodes[node][1];
            let k = ys.partition_point(|&v| v <= y).clamp(1, fm.ny);
            let t = ((y - ys[k - 1]) / (ys[k] - ys[k - 1])).clamp(0.0, 1.0);
            let (a, b) = (fm.grid_index(i, k - 1), fm.grid_index(i, k));
            q1[node] = (1.0 - t) * flat.nodal_q1[a] + t * flat.nodal_q1[b];
            q2[node] = (1.0 - t) * flat.nodal_q2[a] + t * flat.nodal_q2[b];
        }
    }
    (q1, q2)
}

/// Solves one case with explicit resolution.
pub fn sweep_case(
    config: &SweepConfig,
    ctx: &SweepContext,
    eps: f64,
    nx_per_period: usize,
    ny: usize,
    cg_tol: f64,
) -> Result<RateRow> {
    let start = Instant::now();
    let domain = SlabDomain::new(config.height, eps, config.profile.clone())?;
    let params = MeshParams::new(nx_per_period, ny, config.grading);
    let mesh = Arc::new(build_mesh(&domain, params)?);
    let flat_mesh = Arc::new(build_mesh(&domain.flattened(), params)?);
    let (rugose, reference) = rayon::join(
        || solve_on_mesh(mesh.clone(), &RobinProblem::rugose(config.c, config.w0), cg_tol),
        || solve_on_mesh(flat_mesh, &RobinProblem::limit(config.c, config.w0, &ctx.effective), cg_tol),
    );
    let (rugose, reference) = (rugose?, reference?);

    let (r1, r2) = transfer_columns(&reference, &mesh);
    let d1: Vec<f64> = rugose.nodal_q1.iter().zip(&r1).map(|(a, b)| a - b).collect();
    let d2: Vec<f64> = rugose.nodal_q2.iter().zip(&r2).map(|(a, b)| a - b).collect();
    let error = l2_norm(&mesh, &d1, &d2);

    let (e1, e2): (Vec<f64>, Vec<f64>) = mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let q = ctx.limit.eval(p[1]);
            (rugose.nodal_q1[i] - q.q1, rugose.nodal_q2[i] - q.q2)
        })
        .unzip();
    let error_closed_form = l2_norm(&mesh, &e1, &e2);

    Ok(RateRow {
        eps,
        h_max: mesh.h_max,
        nx: mesh.nx,
        ny: mesh.ny,
        cg_iters: rugose.cg_iterations.max(reference.cg_iterations),
        error,
        error_closed_form,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Runs every ε of the sweep (in parallel) and fits the rate.
pub fn run_sweep(config: &SweepConfig) -> Result<RateReport> {
    config.validate()?;
    let ctx = sweep_context(config)?;
    let rows: Vec<RateRow> = config
        .eps_list
        .par_iter()
        .map(|&eps| sweep_case(config, &ctx, eps, config.nx_per_period, config.rows_for(eps), config.cg_tol))
        .collect::<Result<_>>()?;

    let degenerate = rows.iter().all(|r| r.error <= 10.0 * config.cg_tol);
    let fit = if degenerate || rows.len() < 3 {
        None
    } else {
        Some(fit_rate(&rows.iter().map(|r| (r.eps, r.error)).collect::<Vec<_>>())?)
    };
    let closed_form_fit = if rows.len() >= 3 {
        fit_rate(&rows.iter().map(|r| (r.eps, r.error_closed_form)).collect::<Vec<_>>()).ok()
    } else {
        None
    };
    Ok(RateReport {
        fitted_slope: fit.map(|f| f.slope),
        fitted_intercept: fit.map(|f| f.intercept),
        r_squared: fit.map(|f| f.r_squared),
        closed_form_fit,
        theoretical_rate: (config.p_report - 1.0) / config.p_report,
        rate_family: RATE_FAMILY
            .iter()
            .map(|&p| TheoreticalRate { p, rate: (p - 1.0) / p })
            .collect(),
        degenerate,
        effective: ctx.effective,
        limit: ctx.limit,
        mesh_policy: format!(
            "nx = {} per period (h_x = 2*pi*eps/{}), ny = ceil({} * sqrt(1/eps)) rows graded {} toward the rugose boundary; \
             keeps the O(h^2) discretisation error below the O(eps) homogenisation error",
            config.nx_per_period, config.nx_per_period, config.ny_base, config.grading
        ),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakConvRow {
    pub eps: f64,
    /// `|∫ v (γ − γ_ε(x/ε)) dx|`.
    pub scalar_defect: f64,
    /// `|∫ v (γ Q_ef − γ_ε Q⁰(x/ε)) dx|`.
    pub tensor_defect: f64,
    pub scalar_ratio: f64,
    pub tensor_ratio: f64,
}

const WEAK_PANELS_PER_CELL: usize = 16;
const WEAK_POINTS_PER_PANEL: usize = 8;

/// Pairing defects of the oscillating boundary coefficients against `test_fn`
/// on `[0, 2π]`.
pub fn weak_conv_check<F>(profile: &PeriodicProfile, test_fn: F, eps_list: &[f64]) -> Result<Vec<WeakConvRow>>
where
    F: Fn(f64) -> f64 + Sync,
{
    let eff = slab_effective(profile, 1.0, &QuadratureRule::default())?;
    let g_ef = eff.q_ef * eff.gamma;
    let (gx, gw) = gauss_legendre(WEAK_POINTS_PER_PANEL);
    eps_list
        .iter()
        .map(|&eps| {
            let cells = crate::geometry::eps_periods(eps)?;
            let panels = cells * WEAK_PANELS_PER_CELL;
            let h = std::f64::consts::TAU / panels as f64;
            let parts: Vec<[f64; 3]> = (0..panels)
                .into_par_iter()
                .map(|k| {
                    let mut acc = [0.0; 3];
                    let mid = (k as f64 + 0.5) * h;
                    for (&s, &w) in gx.iter().zip(&gw) {
                        let x = mid + 0.5 * h * s;
                        let d = profile.eval_deriv(x / eps, DerivOrder::First);
                        let g = (1.0 + d * d).sqrt();
                        let q = target_from_slope(d) * g;
                        let vw = test_fn(x) * w * 0.5 * h;
                        acc[0] += vw * (eff.gamma - g);
                        acc[1] += vw * (g_ef.q1 - q.q1);
                        acc[2] += vw * (g_ef.q2 - q.q2);
                    }
                    acc
                })
                .collect();
            let sum = |i: usize| pairwise_sum(&parts.iter().map(|p| p[i]).collect::<Vec<_>>());
            let scalar_defect = sum(0).abs();
            let tensor_defect = QTensor2::new(sum(1), sum(2)).norm();
            Ok(WeakConvRow {
                eps,
                scalar_defect,
                tensor_defect,
                scalar_ratio: scalar_defect / eps,
                tensor_ratio: tensor_defect / eps,
            })
        })
        .collect()
}
