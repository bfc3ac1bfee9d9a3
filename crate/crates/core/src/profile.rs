//! The 2π-periodic boundary oscillation `φ` and its ε-scaled version.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance below zero still accepted as a nonnegative profile.
pub const NONNEGATIVITY_TOL: f64 = 1e-12;

/// Finite Fourier series `φ(t) = a0 + Σ_k (a_k cos kt + b_k sin kt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub struct PeriodicProfile {
    pub a0: f64,
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
}

/// JSON representation: either explicit coefficients or a named profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Fourier {
        a0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Named {
        name: String,
        #[serde(default)]
        amplitude: f64,
    },
}

impl TryFrom<ProfileSpec> for PeriodicProfile {
    type Error = Error;

    fn try_from(spec: ProfileSpec) -> Result<Self> {
        let profile = match spec {
            ProfileSpec::Fourier { a0, cos, sin } => PeriodicProfile::new(a0, cos, sin),
            ProfileSpec::Named { name, amplitude } => match name.as_str() {
                "flat" => PeriodicProfile::flat(),
                "cos-bump" => PeriodicProfile::cos_bump(amplitude),
                other => {
                    return Err(Error::InvalidInput(format!("unknown profile name {other:?}")));
                }
            },
        };
        if !profile.is_finite() {
            return Err(Error::InvalidInput("profile coefficients must be finite".into()));
        }
        Ok(profile)
    }
}

impl From<PeriodicProfile> for ProfileSpec {
    fn from(p: PeriodicProfile) -> Self {
        ProfileSpec::Fourier {
            a0: p.a0,
            cos: p.cos_coeffs,
            sin: p.sin_coeffs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub min: f64,
    pub argmin: f64,
    pub valid: bool,
}

impl PeriodicProfile {
    /// Builds a profile; the shorter of the two coefficient lists is padded with zeros.
    pub fn new(a0: f64, mut cos_coeffs: Vec<f64>, mut sin_coeffs: Vec<f64>) -> Self {
        let k = cos_coeffs.len().max(sin_coeffs.len());
        cos_coeffs.resize(k, 0.0);
        sin_coeffs.resize(k, 0.0);
        Self {
            a0,
            cos_coeffs,
            sin_coeffs,
        }
    }

    pub fn flat() -> Self {
        Self::new(0.0, Vec::new(), Vec::new())
    }

    /// `a (1 + cos t)`: nonnegative with a zero at `t = π`.
    pub fn cos_bump(amplitude: f64) -> Self {
        Self::new(amplitude, vec![amplitude], Vec::new())
    }

    pub fn modes(&self) -> usize {
        self.cos_coeffs.len()
    }

    pub fn is_flat(&self) -> bool {
        self.a0 == 0.0
            && self.cos_coeffs.iter().all(|&c| c == 0.0)
            && self.sin_coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn is_even(&self) -> bool {
        self.sin_coeffs.iter().all(|&b| b == 0.0)
    }

    fn is_finite(&self) -> bool {
        self.a0.is_finite()
            && self.cos_coeffs.iter().chain(&self.sin_coeffs).all(|c| c.is_finite())
    }

    /// `(φ, φ', φ'')` at `t`.
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        let t = t.rem_euclid(TAU);
        let mut v = self.a0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (idx, (&a, &b)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            let k = (idx + 1) as f64;
            let (s, c) = (k * t).rem_euclid(TAU).sin_cos();
            v += a * c + b * s;
            d1 += k * (b * c - a * s);
            d2 -= k * k * (a * c + b * s);
        }
        (v, d1, d2)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }

    pub fn eval_deriv(&self, t: f64, order: DerivOrder) -> f64 {
        let (_, d1, d2) = self.eval_all(t);
        match order {
            DerivOrder::First => d1,
            DerivOrder::Second => d2,
        }
    }

    /// Arclength factor `√(1 + φ'(t)²)` of the graph.
    pub fn arclength_factor(&self, t: f64) -> f64 {
        let d = self.eval_deriv(t, DerivOrder::First);
        (1.0 + d * d).sqrt()
    }

    /// Checks `min φ ≥ -1e-12` by dense sampling and golden-section refinement.
    pub fn validate(&self, n_samples: usize) -> Result<ValidationReport> {
        if n_samples < 64 {
            return Err(Error::InvalidInput(format!(
                "validation needs at least 64 samples, got {n_samples}"
            )));
        }
        let (argmin, min) = minimize_periodic(|t| self.eval(t), n_samples);
        if min < -NONNEGATIVITY_TOL {
            return Err(Error::NegativeProfile { min, argmin });
        }
        Ok(ValidationReport {
            min,
            argmin,
            valid: true,
        })
    }

    /// `‖φ‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        if self.is_flat() {
            return 0.0;
        }
        -minimize_periodic(|t| -self.eval(t).abs(), 256).1
    }

    /// `‖φ'‖_∞`.
    pub fn deriv_sup_norm(&self) -> f64 {
        if self.is_flat() {
            return 0.0;
        }
        -minimize_periodic(|t| -self.eval_deriv(t, DerivOrder::First).abs(), 256).1
    }
}

/// Global minimum of a 2π-periodic function: sampling on `n` points followed
/// by golden-section search in the bracket around the best sample.
pub(crate) fn minimize_periodic<F: Fn(f64) -> f64>(f: F, n: usize) -> (f64, f64) {
    let h = TAU / n as f64;
    let (best, best_val) = (0..n)
        .map(|i| (i, f(i as f64 * h)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let center = best as f64 * h;
    let (mut a, mut b) = (center - h, center + h);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let ft = f(t);
    let (t, v) = [(center, best_val), (c, fc), (d, fd), (t, ft)]
        .into_iter()
        .fold((center, f64::INFINITY), |acc, (t, v)| if v < acc.1 { (t, v) } else { acc });
    (t.rem_euclid(TAU), v)
}

/// `φ_ε(x) = ε φ(x/ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledProfile {
    pub base: PeriodicProfile,
    pub eps: f64,
}

impl ScaledProfile {
    pub fn new(base: PeriodicProfile, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { base, eps })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eps * self.base.eval(x / self.eps)
    }

    /// `φ_ε'(x) = φ'(x/ε)`.
    pub fn eval_deriv(&self, x: f64) -> f64 {
        self.base.eval_deriv(x / self.eps, DerivOrder::First)
    }

    /// Arclength density of the graph `y = φ_ε(x)`.
    pub fn arclength_factor(&self, x: f64) -> f64 {
        self.base.arclength_factor(x / self.eps)
    }
}
