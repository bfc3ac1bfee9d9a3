//! Effective coefficients of the rugose slab.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{DerivOrder, PeriodicProfile};
use crate::quadrature::{converged_cell_average, QuadratureDiagnostics, QuadratureRule};
use crate::tensor::QTensor2;

/// Homogenised slab coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabEffective {
    pub gamma: f64,
    #[serde(rename = "G1")]
    pub g1: f64,
    #[serde(rename = "G2")]
    pub g2: f64,
    pub w_ef: f64,
    #[serde(rename = "Q_ef")]
    pub q_ef: QTensor2,
    #[serde(rename = "w0")]
    pub w0_input: f64,
    pub quadrature: QuadratureDiagnostics,
}

impl SlabEffective {
    /// The Q-independent remainder `R` in
    /// `∫ (w0/2)|Q − Q⁰|² γ_ε = (w_ef/2)|Q − Q_ef|² + R`, using `|Q⁰|² = 1/2`.
    pub fn ldg_remainder(&self) -> f64 {
        0.5 * self.w_ef * (0.5 - self.q_ef.norm_sq())
    }

    /// `(w_ef/2)|Q − Q_ef|² + R`.
    pub fn homogenised_energy(&self, q: QTensor2) -> f64 {
        0.5 * self.w_ef * (q - self.q_ef).norm_sq() + self.ldg_remainder()
    }
}

/// Preferred boundary tensor `Q⁰(t) = ν⊗ν − I/2 = [[g1, g2], [g2, −g1]]` of the
/// rugose boundary, with `ν = (φ'(t), −1)/γ_ε(t)`.
pub fn anchoring_target(profile: &PeriodicProfile, t: f64) -> QTensor2 {
    target_from_slope(profile.eval_deriv(t, DerivOrder::First))
}

pub(crate) fn target_from_slope(d: f64) -> QTensor2 {
    let s = 1.0 + d * d;
    QTensor2::new((d * d - 1.0) / (2.0 * s), -d / s)
}

/// `γ`, `G1`, `G2`, `w_ef = γ w0` and `Q_ef = G/γ` for a nonnegative profile.
pub fn slab_effective(profile: &PeriodicProfile, w0: f64, rule: &QuadratureRule) -> Result<SlabEffective> {
    if w0 == 0.0 || !w0.is_finite() {
        return Err(Error::InvalidInput(format!("w0 must be finite and nonzero, got {w0}")));
    }
    profile.validate(256)?;
    let (avg, quadrature) = converged_cell_average(rule, 1, 3, |t, out| {
        let d = profile.eval_deriv(t[0], DerivOrder::First);
        let gamma = (1.0 + d * d).sqrt();
        let q = target_from_slope(d);
        out[0] = gamma;
        out[1] = q.q1 * gamma;
        out[2] = q.q2 * gamma;
    })?;
    let (gamma, g1, g2) = (avg[0], avg[1], avg[2]);
    Ok(SlabEffective {
        gamma,
        g1,
        g2,
        w_ef: gamma * w0,
        q_ef: QTensor2::new(g1 / gamma, g2 / gamma),
        w0_input: w0,
        quadrature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogenize::{homogenize_energy, SlabBoundarySampler};
    use approx::assert_relative_eq;

    /// Adaptive Simpson on `[a, b]`.
    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        step(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn flat_profile_is_exact() {
        let s = slab_effective(&PeriodicProfile::flat(), 2.0, &QuadratureRule::default()).unwrap();
        assert!((s.gamma - 1.0).abs() <= 1e-14);
        assert!((s.g1 + 0.5).abs() <= 1e-14);
        assert_eq!(s.g2, 0.0);
        assert!((s.w_ef - 2.0).abs() <= 1e-14);
        assert!((s.q_ef.q1 + 0.5).abs() <= 1e-14);
        assert_eq!(s.q_ef.q2, 0.0);
    }

    #[test]
    fn even_profile_has_no_off_diagonal() {
        let s = slab_effective(&PeriodicProfile::cos_bump(0.5), 1.7, &QuadratureRule::default()).unwrap();
        assert!(s.g2.abs() <= 1e-12);
    }

    #[test]
    fn cos_bump_gamma_matches_simpson_oracle() {
        let oracle = adaptive_simpson(&|t: f64| (1.0 + 0.25 * t.sin().powi(2)).sqrt(), 0.0, std::f64::consts::TAU, 1e-13)
            / std::f64::consts::TAU;
        // frozen from the oracle (and an independent 30-digit quadrature)
        assert_relative_eq!(oracle, 1.059_839_380_187_648_3, epsilon = 1e-12);
        let s = slab_effective(&PeriodicProfile::cos_bump(0.5), 2.0, &QuadratureRule::default()).unwrap();
        assert!((s.gamma - oracle).abs() <= 1e-10);
        assert_relative_eq!(s.w_ef, 2.0 * s.gamma, epsilon = 1e-15);
    }

    #[test]
    fn target_has_constant_norm() {
        let p = PeriodicProfile::new(1.0, vec![0.3, -0.2], vec![0.5]);
        for i in 0..200 {
            let q = anchoring_target(&p, i as f64 * 0.031);
            assert_relative_eq!(q.norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(slab_effective(&PeriodicProfile::flat(), 0.0, &QuadratureRule::default()).is_err());
        let neg = PeriodicProfile::new(0.0, vec![1.0], vec![]);
        assert!(matches!(
            slab_effective(&neg, 1.0, &QuadratureRule::default()),
            Err(Error::NegativeProfile { .. })
        ));
    }

    #[test]
    fn trapezoid_and_gauss_agree() {
        let p = PeriodicProfile::new(1.2, vec![0.4, 0.1, -0.05], vec![0.3, 0.0, 0.07]);
        let a = slab_effective(&p, 1.0, &QuadratureRule::default()).unwrap();
        let b = slab_effective(&p, 1.0, &QuadratureRule::trapezoid(64).unwrap()).unwrap();
        assert_relative_eq!(a.gamma, b.gamma, epsilon = 1e-12);
        assert_relative_eq!(a.g1, b.g1, epsilon = 1e-12);
        assert_relative_eq!(a.g2, b.g2, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_expansion_holds() {
        let p = PeriodicProfile::new(1.2, vec![0.4, 0.1], vec![0.3, -0.2]);
        let w0 = 1.7;
        let rule = QuadratureRule::default();
        let s = slab_effective(&p, w0, &rule).unwrap();
        let sampler = SlabBoundarySampler { profile: p };
        let density = |nu: &[f64; 2], q: &QTensor2| 0.5 * w0 * (*q - QTensor2::from_director(*nu)).norm_sq();
        for (q1, q2) in [(0.1, -0.3), (-0.5, 0.25), (0.0, 0.0), (2.0, 1.0)] {
            let q = QTensor2::new(q1, q2);
            let h = homogenize_energy(&sampler, density, &q, &rule).unwrap();
            assert!((h - s.homogenised_energy(q)).abs() <= 1e-10, "{h} vs {}", s.homogenised_energy(q));
        }
    }
}
