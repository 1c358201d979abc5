use nalgebra::{DMatrix, DVector};

use super::domain::DomainGeometry;
use super::value::inverse_covariance;
use crate::error::Result;
use crate::linalg::{min_eig_sym, riccati_maximal, RiccatiSolution};
use crate::network::LinearModel;
use crate::optim::{golden_section_min, maximize_concave};
use crate::scalar::Real;

/// Result of the operator-interval feasibility search at a section point.
#[derive(Debug, Clone)]
pub struct SinfFeasibility<T: Real> {
    /// `2 · max_η f(η)`; equals `Λ₊ − Λ₋` when `dim 𝓛 = 1`.
    pub gap: T,
    /// Coefficients of the best `η` in the lineality basis.
    pub eta: DVector<T>,
    pub lambda_minus: T,
    pub lambda_plus: T,
}

impl<T: Real> SinfFeasibility<T> {
    pub fn feasible(&self) -> bool {
        self.gap > T::zero()
    }
}

/// `max_η min(min sp(X_{ϑ⁻¹−ξ} − η̃), min sp(η̃ + X_ξ + θX_{ϑ⁻¹}θ))` over the
/// lineality space, with `η̃` the conserved lift.
///
/// The objective is concave in `η`. With a single lineality direction the
/// maximization is exact; otherwise a cyclic coordinate ascent is used.
pub fn sinf_feasibility<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, xi: &DVector<T>) -> Result<SinfFeasibility<T>> {
    let x_xi = riccati_maximal(model, xi)?;
    let x_dual = riccati_maximal(model, &(&model.theta_inv - xi))?;
    sinf_feasibility_from(model, geometry, &x_xi, &x_dual)
}

/// [`sinf_feasibility`] from precomputed maximal solutions at `ξ` and `ϑ⁻¹ − ξ`.
pub fn sinf_feasibility_from<T: Real>(
    model: &LinearModel<T>,
    geometry: &DomainGeometry<T>,
    x_xi: &RiccatiSolution<T>,
    x_dual: &RiccatiSolution<T>,
) -> Result<SinfFeasibility<T>> {
    let upper = x_dual.x.clone();
    let lower = &x_xi.x + inverse_covariance(model)?;
    let lambda_plus = min_eig_sym(&upper)?;
    let lambda_minus = -min_eig_sym(&lower)?;
    let lifts = &geometry.lineality_lifts;
    let l = lifts.len();
    let objective = |eta: &DVector<T>| -> Result<T> {
        let mut shift = DMatrix::zeros(upper.nrows(), upper.ncols());
        for (k, lift) in lifts.iter().enumerate() {
            shift += lift * eta[k];
        }
        Ok(min_eig_sym(&(&upper - &shift))?.min(min_eig_sym(&(&lower + &shift))?))
    };
    let mut eta = DVector::zeros(l);
    if l == 0 {
        return Ok(SinfFeasibility { gap: T::lit(2.0) * lambda_plus.min(-lambda_minus), eta, lambda_minus, lambda_plus });
    }
    let scale = (lambda_plus.abs() + lambda_minus.abs()).max(T::lit(1e-3));
    let tol = T::lit(1e-10) * scale;
    let mut best = objective(&eta)?;
    for _sweep in 0..if l == 1 { 1 } else { 30 } {
        let before = best;
        for k in 0..l {
            let base = eta.clone();
            let line = |t: T| {
                let mut e = base.clone();
                e[k] = t;
                objective(&e)
            };
            let (t, v) = if l == 1 {
                maximize_concave(line, base[k], scale * T::lit(0.1), tol)?
            } else {
                let (t, v) = golden_section_min(|t| line(t).map(|y| -y), base[k] - scale, base[k] + scale, tol, 200)?;
                (t, -v)
            };
            if v > best {
                best = v;
                eta[k] = t;
            }
        }
        if best - before <= tol {
            break;
        }
    }
    Ok(SinfFeasibility { gap: T::lit(2.0) * best, eta, lambda_minus, lambda_plus })
}

/// Membership of a section point in `𝓢∞`.
pub fn in_sinf<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, xi_perp: &DVector<T>) -> Result<bool> {
    if !geometry.margin(model, xi_perp)?.inside() {
        return Ok(false);
    }
    Ok(sinf_feasibility(model, geometry, xi_perp)?.feasible())
}
