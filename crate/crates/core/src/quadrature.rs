//! Period-cell averaging rules.
//!
//! Every homogenised coefficient in this crate is an average over one period
//! cell `[0, 2π)^d` (d = 1 or 2). The rules here produce normalised nodes and
//! weights for that cell and drive the panel-doubling convergence loop.
//!
//! Sums are reduced pairwise over panels so that the result for a given
//! panel count does not depend on how many threads evaluated the panels.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative change between two successive refinements accepted as converged.
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// Number of panel doublings attempted before giving up.
pub const MAX_DOUBLINGS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    GaussLegendreComposite,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub panels: usize,
    pub points_per_panel: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            kind: QuadratureKind::GaussLegendreComposite,
            panels: 16,
            points_per_panel: 8,
        }
    }
}

impl QuadratureRule {
    pub fn new(kind: QuadratureKind, panels: usize, points_per_panel: usize) -> Result<Self> {
        let rule = Self {
            kind,
            panels,
            points_per_panel,
        };
        rule.check()?;
        Ok(rule)
    }

    pub fn gauss_legendre(panels: usize, points_per_panel: usize) -> Result<Self> {
        Self::new(QuadratureKind::GaussLegendreComposite, panels, points_per_panel)
    }

    /// Trapezoid rule with `points` equispaced nodes (spectrally accurate for
    /// smooth periodic integrands).
    pub fn trapezoid(points: usize) -> Result<Self> {
        Self::new(QuadratureKind::Trapezoid, points, 1)
    }

    pub fn check(&self) -> Result<()> {
        if self.panels < 1 {
            return Err(Error::InvalidInput("quadrature needs at least one panel".into()));
        }
        if !(1..=16).contains(&self.points_per_panel) {
            return Err(Error::InvalidInput(format!(
                "points_per_panel must lie in 1..=16, got {}",
                self.points_per_panel
            )));
        }
        Ok(())
    }

    pub fn refined(&self) -> Self {
        Self {
            panels: self.panels * 2,
            ..*self
        }
    }

    pub fn node_count(&self) -> usize {
        self.panels * self.points_per_panel
    }

    /// Nodes in `[0, 2π)` grouped by panel, with weights normalised so that
    /// all weights sum to one.
    pub fn cell_panels(&self) -> Vec<Vec<(f64, f64)>> {
        let h = TAU / self.panels as f64;
        match self.kind {
            QuadratureKind::Trapezoid => {
                let n = self.node_count();
                let w = 1.0 / n as f64;
                (0..self.panels)
                    .map(|p| {
                        (0..self.points_per_panel)
                            .map(|k| {
                                let idx = p * self.points_per_panel + k;
                                (TAU * idx as f64 / n as f64, w)
                            })
                            .collect()
                    })
                    .collect()
            }
            QuadratureKind::GaussLegendreComposite => {
                let (x, w) = gauss_legendre(self.points_per_panel);
                (0..self.panels)
                    .map(|p| {
                        let a = p as f64 * h;
                        x.iter()
                            .zip(&w)
                            .map(|(&xi, &wi)| (a + 0.5 * h * (xi + 1.0), 0.5 * wi / self.panels as f64))
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn pairwise_sum_vectors(parts: &[Vec<f64>], m: usize) -> Vec<f64> {
    match parts.len() {
        0 => vec![0.0; m],
        1 => parts[0].clone(),
        _ => {
            let mid = parts.len() / 2;
            let mut a = pairwise_sum_vectors(&parts[..mid], m);
            let b = pairwise_sum_vectors(&parts[mid..], m);
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        }
    }
}

/// Average of a vector-valued function over the period cell `[0, 2π)^dim`.
///
/// `f(t, out)` overwrites `out` with the `m` integrand values at `t`.
pub fn cell_average<F>(rule: &QuadratureRule, dim: usize, m: usize, f: F) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    assert!(dim == 1 || dim == 2, "cell dimension must be 1 or 2");
    let panels = rule.cell_panels();
    let panel_sums: Vec<Vec<f64>> = match dim {
        1 => panels
            .par_iter()
            .map(|panel| {
                let mut acc = vec![0.0; m];
                let mut buf = vec![0.0; m];
                for &(t, w) in panel {
                    f(&[t], &mut buf);
                    acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += w * b);
                }
                acc
            })
            .collect(),
        _ => panels
            .par_iter()
            .map(|outer| {
                let mut acc = vec![0.0; m];
                let mut buf = vec![0.0; m];
                for &(t1, w1) in outer {
                    let inner: Vec<Vec<f64>> = panels
                        .iter()
                        .map(|panel| {
                            let mut inner_acc = vec![0.0; m];
                            for &(t2, w2) in panel {
                                f(&[t1, t2], &mut buf);
                                inner_acc
                                    .iter_mut()
                                    .zip(&buf)
                                    .for_each(|(a, b)| *a += w2 * b);
                            }
                            inner_acc
                        })
                        .collect();
                    let line = pairwise_sum_vectors(&inner, m);
                    acc.iter_mut().zip(line).for_each(|(a, b)| *a += w1 * b);
                }
                acc
            })
            .collect(),
    };
    pairwise_sum_vectors(&panel_sums, m)
}

/// Result of a converged cell average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureDiagnostics {
    /// Panel count of the accepted (finer) evaluation.
    pub panels: usize,
    pub points_per_panel: usize,
    /// Max-norm change between the last two refinements, relative to the result.
    pub relative_change: f64,
    pub doublings: u32,
}

/// Cell average with panel doubling until two successive results agree to
/// [`CONVERGENCE_TOL`] relative to their max norm.
pub fn converged_cell_average<F>(
    rule: &QuadratureRule,
    dim: usize,
    m: usize,
    f: F,
) -> Result<(Vec<f64>, QuadratureDiagnostics)>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    rule.check()?;
    let mut current_rule = *rule;
    let mut previous = cell_average(&current_rule, dim, m, &f);
    let mut change = f64::INFINITY;
    for doubling in 1..=MAX_DOUBLINGS {
        current_rule = current_rule.refined();
        let next = cell_average(&current_rule, dim, m, &f);
        let scale = next.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let diff = next
            .iter()
            .zip(&previous)
            .fold(0.0_f64, |s, (a, b)| s.max((a - b).abs()));
        change = if scale > 0.0 { diff / scale } else { diff };
        if change <= CONVERGENCE_TOL {
            return Ok((
                next,
                QuadratureDiagnostics {
                    panels: current_rule.panels,
                    points_per_panel: current_rule.points_per_panel,
                    relative_change: change,
                    doublings: doubling,
                },
            ));
        }
        previous = next;
    }
    Err(Error::QuadratureNotConverged {
        panels: current_rule.panels,
        change,
    })
}

/// Gauss–Legendre integral of `f` over `[a, b]` using a fixed-order rule.
pub fn integrate_interval<F: Fn(f64) -> f64>(a: f64, b: f64, nodes: &[f64], weights: &[f64], f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}
