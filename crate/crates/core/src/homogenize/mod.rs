//! Homogenised surface energies as period-cell averages.
//!
//! For a periodic graph boundary the Young measure generated by the
//! pseudo-gradient `D̂φ_ε` is the pushforward of the normalised uniform
//! measure on the period cell, so every homogenised quantity below is a plain
//! cell average of an expression in the pseudo-gradient `v`, weighted by the
//! surface element `|v|`.

mod anchoring;
mod slab;

pub use anchoring::{
    ldg_effective, oseen_frank_effective, AnchoringRegime, EffectiveAnchoringOF, JensenBounds,
    LdGEffective3D, DEFAULT_TIE_TOL,
};
pub use slab::{anchoring_target, slab_effective, SlabEffective};
pub(crate) use slab::target_from_slope;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{DerivOrder, PeriodicProfile, NONNEGATIVITY_TOL};
use crate::quadrature::{converged_cell_average, QuadratureRule};

/// Flat reference normal in 2D, pointing out of the slab.
pub const NORMAL_2D: [f64; 2] = [0.0, -1.0];
/// Flat reference normal in 3D.
pub const NORMAL_3D: [f64; 3] = [0.0, 0.0, -1.0];

/// A pseudo-gradient value `v ∈ ν + T_xΓ` and its surface element `|v|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoGradientSample<const N: usize> {
    pub v: [f64; N],
    pub weight: f64,
}

impl<const N: usize> PseudoGradientSample<N> {
    pub fn from_vector(v: [f64; N]) -> Self {
        let weight = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        Self { v, weight }
    }

    pub fn unit_normal(&self) -> [f64; N] {
        self.v.map(|c| c / self.weight)
    }
}

/// Source of pseudo-gradient samples over a period cell of dimension 1 or 2.
pub trait CellSampler<const N: usize>: Sync {
    fn cell_dim(&self) -> usize;
    fn sample(&self, t: &[f64]) -> PseudoGradientSample<N>;
}

/// `D̂φ(t) = ν − φ'(t) τ` for the graph displaced along the outward normal,
/// with `ν = (0, −1)` and `τ = (1, 0)`.
pub fn pseudo_gradient_1d(profile: &PeriodicProfile, t: f64) -> PseudoGradientSample<2> {
    let d = profile.eval_deriv(t, DerivOrder::First);
    PseudoGradientSample::from_vector([-d, -1.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Sum,
    Product,
}

/// Combined doubly-periodic profile `ψ(t1, t2)` and its two partial derivatives.
fn combined_profile(
    u: &PeriodicProfile,
    v: &PeriodicProfile,
    combine: Combine,
    t1: f64,
    t2: f64,
) -> (f64, f64, f64) {
    let (pu, du, _) = u.eval_all(t1);
    let (pv, dv, _) = v.eval_all(t2);
    match combine {
        Combine::Sum => (pu + pv, du, dv),
        Combine::Product => (pu * pv, du * pv, pu * dv),
    }
}

/// `D̂ψ = ν − ∂₁ψ τ₁ − ∂₂ψ τ₂` with `ν = (0, 0, −1)`, `τ₁ = e_x`, `τ₂ = e_y`.
pub fn pseudo_gradient_2d(
    profile_u: &PeriodicProfile,
    profile_v: &PeriodicProfile,
    combine: Combine,
    t1: f64,
    t2: f64,
) -> PseudoGradientSample<3> {
    let (_, d1, d2) = combined_profile(profile_u, profile_v, combine, t1, t2);
    PseudoGradientSample::from_vector([-d1, -d2, -1.0])
}

/// One-dimensional graph sampler using [`pseudo_gradient_1d`].
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSampler {
    pub profile: PeriodicProfile,
}

impl CellSampler<2> for GraphSampler {
    fn cell_dim(&self) -> usize {
        1
    }

    fn sample(&self, t: &[f64]) -> PseudoGradientSample<2> {
        pseudo_gradient_1d(&self.profile, t[0])
    }
}

/// Bottom boundary of the rugose slab, `y = εφ(x/ε)`.
///
/// The slab boundary is displaced *into* the domain, so its scaled outward
/// normal is `γ_ε ν_ε = (φ', −1)`: the mirror image of [`pseudo_gradient_1d`]
/// in the tangential component. Cell averages of even functionals agree
/// between the two; the off-diagonal Q-tensor entry changes sign.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabBoundarySampler {
    pub profile: PeriodicProfile,
}

impl CellSampler<2> for SlabBoundarySampler {
    fn cell_dim(&self) -> usize {
        1
    }

    fn sample(&self, t: &[f64]) -> PseudoGradientSample<2> {
        let d = self.profile.eval_deriv(t[0], DerivOrder::First);
        PseudoGradientSample::from_vector([d, -1.0])
    }
}

/// Doubly-periodic surface built from two 1D profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublyPeriodicSampler {
    pub profile_u: PeriodicProfile,
    pub profile_v: PeriodicProfile,
    pub combine: Combine,
}

impl DoublyPeriodicSampler {
    /// Checks that the combined profile is nonnegative.
    pub fn new(profile_u: PeriodicProfile, profile_v: PeriodicProfile, combine: Combine) -> Result<Self> {
        match combine {
            Combine::Product => {
                profile_u.validate(256)?;
                profile_v.validate(256)?;
            }
            Combine::Sum => {
                let lo = |p: &PeriodicProfile| crate::profile::minimize_periodic(|t| p.eval(t), 256);
                let (tu, mu) = lo(&profile_u);
                let (_, mv) = lo(&profile_v);
                if mu + mv < -NONNEGATIVITY_TOL {
                    return Err(Error::NegativeProfile {
                        min: mu + mv,
                        argmin: tu,
                    });
                }
            }
        }
        Ok(Self {
            profile_u,
            profile_v,
            combine,
        })
    }

    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        combined_profile(&self.profile_u, &self.profile_v, self.combine, t1, t2).0
    }
}

impl CellSampler<3> for DoublyPeriodicSampler {
    fn cell_dim(&self) -> usize {
        2
    }

    fn sample(&self, t: &[f64]) -> PseudoGradientSample<3> {
        pseudo_gradient_2d(&self.profile_u, &self.profile_v, self.combine, t[0], t[1])
    }
}

/// Cell average of `f(sample)` with panel-doubling convergence.
pub(crate) fn sampler_average<const N: usize, S, F>(
    sampler: &S,
    m: usize,
    rule: &QuadratureRule,
    f: F,
) -> Result<(Vec<f64>, crate::quadrature::QuadratureDiagnostics)>
where
    S: CellSampler<N> + ?Sized,
    F: Fn(&PseudoGradientSample<N>, &mut [f64]) + Sync,
{
    converged_cell_average(rule, sampler.cell_dim(), m, |t, out| {
        let s = sampler.sample(t);
        f(&s, out)
    })
}

/// Homogenised density `w_h(u) = ∫ w(v/|v|, u) |v| dμ(v)`.
pub fn homogenize_energy<const N: usize, S, U, W>(
    sampler: &S,
    w: W,
    u: &U,
    rule: &QuadratureRule,
) -> Result<f64>
where
    S: CellSampler<N> + ?Sized,
    U: Sync + ?Sized,
    W: Fn(&[f64; N], &U) -> f64 + Sync,
{
    let (avg, _) = sampler_average(sampler, 1, rule, |s, out| {
        out[0] = w(&s.unit_normal(), u) * s.weight;
    })?;
    Ok(avg[0])
}

/// An `order`-linear map on `R^state_dim` depending on the unit normal.
pub struct CoefficientMap<'a, const N: usize> {
    pub order: usize,
    pub state_dim: usize,
    /// Returns the dense coefficient array, row-major, of length `state_dim^order`.
    pub map: Box<dyn Fn(&[f64; N]) -> Vec<f64> + Sync + 'a>,
}

/// Dense multilinear form `A[u, …, u]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilinearForm {
    pub order: usize,
    pub state_dim: usize,
    pub coeffs: Vec<f64>,
}

impl MultilinearForm {
    /// `A[u, …, u]`.
    pub fn apply_diagonal(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.state_dim, "state dimension mismatch");
        self.coeffs
            .iter()
            .enumerate()
            .map(|(flat, &a)| {
                let mut idx = flat;
                let mut prod = a;
                for _ in 0..self.order {
                    prod *= u[idx % self.state_dim];
                    idx /= self.state_dim;
                }
                prod
            })
            .sum()
    }
}

/// `Σ_i A_i[u, …, u]`.
pub fn polynomial_energy(forms: &[MultilinearForm], u: &[f64]) -> f64 {
    forms.iter().map(|f| f.apply_diagonal(u)).sum()
}

/// Averages each coefficient map: `A_i = ∫ a_i(v/|v|) |v| dμ(v)`.
pub fn homogenize_polynomial<const N: usize, S>(
    sampler: &S,
    coeff_maps: &[CoefficientMap<'_, N>],
    rule: &QuadratureRule,
) -> Result<Vec<MultilinearForm>>
where
    S: CellSampler<N> + ?Sized,
{
    let sizes: Vec<usize> = coeff_maps
        .iter()
        .map(|c| c.state_dim.pow(c.order as u32))
        .collect();
    let total: usize = sizes.iter().sum();
    let (avg, _) = sampler_average(sampler, total, rule, |s, out| {
        let n = s.unit_normal();
        let mut offset = 0;
        for (c, &size) in coeff_maps.iter().zip(&sizes) {
            let coeffs = (c.map)(&n);
            assert_eq!(coeffs.len(), size, "coefficient map returned wrong length");
            for (o, a) in out[offset..offset + size].iter_mut().zip(coeffs) {
                *o = a * s.weight;
            }
            offset += size;
        }
    })?;
    let mut offset = 0;
    Ok(coeff_maps
        .iter()
        .zip(&sizes)
        .map(|(c, &size)| {
            let form = MultilinearForm {
                order: c.order,
                state_dim: c.state_dim,
                coeffs: avg[offset..offset + size].to_vec(),
            };
            offset += size;
            form
        })
        .collect())
}
