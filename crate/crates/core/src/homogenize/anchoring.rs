//! Effective anchoring for the Oseen–Frank (Rapini–Papoular) and 3D
//! Landau–de Gennes surface energies.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{sampler_average, CellSampler};
use crate::error::{Error, Result};
use crate::quadrature::{QuadratureDiagnostics, QuadratureRule};
use crate::tensor::{sorted_eigen, QTensor3};

/// Eigenvalue ties are decided relative to `max(1, |Tr A_ef|)`.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// Upper-triangle index pairs in the order `xx, xy, xz, yy, yz, zz`.
const UPPER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn symmetric_from_upper(u: &[f64]) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for (k, &(i, j)) in UPPER.iter().enumerate() {
        m[(i, j)] = u[k];
        m[(j, i)] = u[k];
    }
    m
}

fn to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnchoringRegime {
    /// `λ1 = λ2 < λ3`: degenerate anchoring in the `e1, e2` plane.
    DegeneratePlanar,
    /// `λ1 < λ2 = λ3`: a single preferred axis `e1`.
    SimpleAxis,
    /// `λ1 = λ2 = λ3`: the energy does not depend on the director.
    NoAnchoring,
    /// `λ1 < λ2 < λ3`.
    FullyBiaxial,
}

impl AnchoringRegime {
    pub fn classify(eigenvalues: [f64; 3], trace: f64, tie_tol: f64) -> Self {
        let tol = tie_tol * trace.abs().max(1.0);
        let low_tie = eigenvalues[1] - eigenvalues[0] <= tol;
        let high_tie = eigenvalues[2] - eigenvalues[1] <= tol;
        match (low_tie, high_tie) {
            (true, true) => AnchoringRegime::NoAnchoring,
            (true, false) => AnchoringRegime::DegeneratePlanar,
            (false, true) => AnchoringRegime::SimpleAxis,
            (false, false) => AnchoringRegime::FullyBiaxial,
        }
    }
}

/// Homogenised Rapini–Papoular energy `w_h(n) = ½ A_ef n·n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveAnchoringOF {
    pub a_ef: [[f64; 3]; 3],
    /// Ascending.
    pub eigenvalues: [f64; 3],
    /// Eigenvectors as rows, matching `eigenvalues`.
    pub eigenvectors: [[f64; 3]; 3],
    pub regime: AnchoringRegime,
    /// `A_ef − (Tr A_ef / 3) I`, which fixes `w_h` up to a constant.
    pub traceless_part: [[f64; 3]; 3],
    pub w0: f64,
    pub quadrature: QuadratureDiagnostics,
}

impl EffectiveAnchoringOF {
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.a_ef[i][j])
    }

    pub fn trace(&self) -> f64 {
        self.a_ef[0][0] + self.a_ef[1][1] + self.a_ef[2][2]
    }

    /// `½ A_ef n·n`.
    pub fn energy(&self, n: [f64; 3]) -> f64 {
        let m = self.matrix();
        let v = nalgebra::Vector3::from(n);
        0.5 * v.dot(&(m * v))
    }
}

/// `A_ef = w0 ∫ (v ⊗ v)/|v| dμ(v)`, its spectrum and anchoring regime.
pub fn oseen_frank_effective<S>(
    sampler: &S,
    w0: f64,
    rule: &QuadratureRule,
    tie_tol: f64,
) -> Result<EffectiveAnchoringOF>
where
    S: CellSampler<3> + ?Sized,
{
    if w0 == 0.0 || !w0.is_finite() {
        return Err(Error::InvalidInput(format!("w0 must be finite and nonzero, got {w0}")));
    }
    if !(tie_tol >= 0.0) {
        return Err(Error::InvalidInput("tie_tol must be nonnegative".into()));
    }
    let (avg, quadrature) = sampler_average(sampler, 6, rule, |s, out| {
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            out[k] = s.v[i] * s.v[j] / s.weight;
        }
    })?;
    let a = symmetric_from_upper(&avg) * w0;
    let (eigenvalues, vectors) = sorted_eigen(&a)?;
    let trace = a.trace();
    let regime = AnchoringRegime::classify(eigenvalues, trace, tie_tol);
    let traceless = a - Matrix3::identity() * (trace / 3.0);
    Ok(EffectiveAnchoringOF {
        a_ef: to_rows(&a),
        eigenvalues,
        eigenvectors: to_rows(&vectors.transpose()),
        regime,
        traceless_part: to_rows(&traceless),
        w0,
        quadrature,
    })
}

/// Spectral bounds implied by Jensen's inequality for `Q_ef`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenBounds {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub norm: f64,
    pub lambda_max_bound: f64,
    pub lambda_min_bound: f64,
    pub norm_bound: f64,
}

impl JensenBounds {
    pub const TOL: f64 = 1e-10;

    pub fn satisfied(&self) -> bool {
        self.lambda_max <= self.lambda_max_bound + Self::TOL
            && self.lambda_min >= self.lambda_min_bound - Self::TOL
            && self.norm <= self.norm_bound + Self::TOL
    }
}

/// Homogenised 3D Landau–de Gennes surface energy `(w_ef/2)|Q − Q_ef|² + R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdGEffective3D {
    pub w_ef: f64,
    #[serde(rename = "Q_ef")]
    pub q_ef: QTensor3,
    #[serde(rename = "s0")]
    pub s0_input: f64,
    #[serde(rename = "w0")]
    pub w0_input: f64,
    pub jensen: JensenBounds,
    pub quadrature: QuadratureDiagnostics,
}

impl LdGEffective3D {
    /// Q-independent remainder, from `|ν⊗ν − I/3|² = 2/3`.
    pub fn remainder(&self) -> f64 {
        let q = self.q_ef.norm();
        0.5 * self.w_ef * (2.0 / 3.0 * self.s0_input * self.s0_input - q * q)
    }

    pub fn energy(&self, q: QTensor3) -> f64 {
        let d = (q - self.q_ef).norm();
        0.5 * self.w_ef * d * d + self.remainder()
    }
}

/// `w_ef = w0 ∫|v| dμ` and `Q_ef = s0 ∫ (v⊗v/|v|² − I/3)|v| dμ / ∫|v| dμ`.
pub fn ldg_effective<S>(sampler: &S, w0: f64, s0: f64, rule: &QuadratureRule) -> Result<LdGEffective3D>
where
    S: CellSampler<3> + ?Sized,
{
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(Error::InvalidInput(format!("w0 must be positive, got {w0}")));
    }
    if !s0.is_finite() {
        return Err(Error::InvalidInput("s0 must be finite".into()));
    }
    let (avg, quadrature) = sampler_average(sampler, 7, rule, |s, out| {
        out[0] = s.weight;
        let w2 = s.weight * s.weight;
        for (k, &(i, j)) in UPPER.iter().enumerate() {
            let delta = if i == j { 1.0 / 3.0 } else { 0.0 };
            out[k + 1] = (s.v[i] * s.v[j] / w2 - delta) * s.weight;
        }
    })?;
    let mass = avg[0];
    let m = symmetric_from_upper(&avg[1..]) * (s0 / mass);
    let q_ef = QTensor3::from_matrix(&m);
    let eig = q_ef.eigenvalues()?;
    let jensen = JensenBounds {
        lambda_max: eig[2],
        lambda_min: eig[0],
        norm: q_ef.norm(),
        lambda_max_bound: (2.0 * s0 / 3.0).max(-s0 / 3.0),
        lambda_min_bound: (2.0 * s0 / 3.0).min(-s0 / 3.0),
        norm_bound: s0.abs() * (2.0f64 / 3.0).sqrt(),
    };
    Ok(LdGEffective3D {
        w_ef: w0 * mass,
        q_ef,
        s0_input: s0,
        w0_input: w0,
        jensen,
        quadrature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogenize::{homogenize_energy, Combine, DoublyPeriodicSampler, NORMAL_3D};
    use crate::profile::PeriodicProfile;
    use approx::assert_relative_eq;

    fn flat3() -> DoublyPeriodicSampler {
        DoublyPeriodicSampler::new(PeriodicProfile::flat(), PeriodicProfile::flat(), Combine::Sum).unwrap()
    }

    #[test]
    fn flat_oseen_frank() {
        let of = oseen_frank_effective(&flat3(), 1.0, &QuadratureRule::default(), DEFAULT_TIE_TOL).unwrap();
        assert_eq!(of.regime, AnchoringRegime::DegeneratePlanar);
        assert!(of.eigenvalues[0].abs() < 1e-14 && of.eigenvalues[1].abs() < 1e-14);
        assert_relative_eq!(of.eigenvalues[2], 1.0, epsilon = 1e-14);
        assert_relative_eq!(of.a_ef[2][2], 1.0, epsilon = 1e-14);
        let e3 = of.eigenvectors[2];
        assert_relative_eq!(e3[2].abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn classification_cases() {
        use AnchoringRegime::*;
        assert_eq!(AnchoringRegime::classify([0.0, 0.0, 1.0], 1.0, 1e-9), DegeneratePlanar);
        assert_eq!(AnchoringRegime::classify([0.0, 1.0, 1.0], 2.0, 1e-9), SimpleAxis);
        assert_eq!(AnchoringRegime::classify([1.0, 1.0, 1.0], 3.0, 1e-9), NoAnchoring);
        assert_eq!(AnchoringRegime::classify([0.1, 0.5, 1.0], 1.6, 1e-9), FullyBiaxial);
    }

    #[test]
    fn embedded_1d_profile_has_tangent_eigenvector() {
        let sampler = DoublyPeriodicSampler::new(PeriodicProfile::cos_bump(0.5), PeriodicProfile::flat(), Combine::Sum).unwrap();
        let of = oseen_frank_effective(&sampler, 2.0, &QuadratureRule::default(), DEFAULT_TIE_TOL).unwrap();
        let a = of.matrix();
        assert!(a[(0, 1)].abs() < 1e-15 && a[(1, 2)].abs() < 1e-15);
        // A e_y = 0: the un-oscillated tangent is an exact null direction
        assert!(a[(1, 1)].abs() < 1e-15);
        // dense independent quadrature for the remaining block
        let n = 200_000;
        let (mut xx, mut xz, mut zz) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let t = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
            let d = -0.5 * t.sin();
            let norm = (1.0 + d * d).sqrt();
            xx += d * d / norm;
            xz += d / norm;
            zz += 1.0 / norm;
        }
        let scale = 2.0 / n as f64;
        assert_relative_eq!(a[(0, 0)], xx * scale, epsilon = 1e-12);
        assert_relative_eq!(a[(0, 2)], xz * scale, epsilon = 1e-12);
        assert_relative_eq!(a[(2, 2)], zz * scale, epsilon = 1e-12);
        assert!(of.trace() / 2.0 >= 1.0);
    }

    #[test]
    fn flat_ldg() {
        let l = ldg_effective(&flat3(), 2.5, 0.7, &QuadratureRule::default()).unwrap();
        assert_relative_eq!(l.w_ef, 2.5, epsilon = 1e-14);
        let expect = QTensor3::uniaxial(0.7, NORMAL_3D);
        for (a, b) in l.q_ef.components.iter().zip(expect.components) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(l.jensen.satisfied());
    }

    #[test]
    fn cos_bump_ldg_bounds() {
        let sampler = DoublyPeriodicSampler::new(PeriodicProfile::cos_bump(0.5), PeriodicProfile::cos_bump(0.3), Combine::Product).unwrap();
        let l = ldg_effective(&sampler, 1.0, 1.0, &QuadratureRule::default()).unwrap();
        assert!(l.w_ef >= 1.0);
        assert!(l.q_ef.norm() <= (2.0f64 / 3.0).sqrt());
        assert!(l.q_ef.trace().abs() <= 1e-12);
        assert!(l.jensen.satisfied());
    }

    #[test]
    fn ldg_expansion_matches_direct_energy() {
        let sampler = DoublyPeriodicSampler::new(
            PeriodicProfile::new(0.6, vec![0.3], vec![0.2]),
            PeriodicProfile::cos_bump(0.4),
            Combine::Sum,
        )
        .unwrap();
        let (w0, s0) = (1.3, 0.6);
        let rule = QuadratureRule::gauss_legendre(8, 8).unwrap();
        let l = ldg_effective(&sampler, w0, s0, &rule).unwrap();
        let density = |nu: &[f64; 3], q: &QTensor3| {
            let d = (*q - QTensor3::uniaxial(s0, *nu)).norm();
            0.5 * w0 * d * d
        };
        for comps in [[0.1, 0.2, -0.3, 0.05, 0.0], [0.0; 5], [-0.4, 0.1, 0.1, 0.3, -0.2]] {
            let q = QTensor3::new(comps);
            let direct = homogenize_energy(&sampler, density, &q, &rule).unwrap();
            assert!((direct - l.energy(q)).abs() < 1e-10, "{direct} vs {}", l.energy(q));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(oseen_frank_effective(&flat3(), 0.0, &QuadratureRule::default(), 1e-9).is_err());
        assert!(ldg_effective(&flat3(), -1.0, 1.0, &QuadratureRule::default()).is_err());
    }
}
