use nalgebra::{DMatrix, DVector};

use crate::cgf::{g_gradient, DomainGeometry};
use crate::error::{Error, Result};
use crate::linalg::{max_eig_sym, min_eig_sym, sqrtm_psd};
use crate::network::LinearModel;
use crate::scalar::Real;

/// Mean heat currents and the entropy production rate.
#[derive(Debug, Clone)]
pub struct EntropyProduction<T: Real> {
    /// `ep = −⟨ϑ⁻¹, ∇g(0)⟩`.
    pub ep: T,
    /// `φ̄ = ∇g(0)`; component `j` is the mean power injected by reservoir `j`.
    pub mean_flux: DVector<T>,
}

pub fn entropy_production<T: Real>(model: &LinearModel<T>) -> Result<EntropyProduction<T>> {
    let mean_flux = g_gradient(model, &DVector::zeros(model.d))?.grad;
    Ok(EntropyProduction { ep: -model.theta_inv.dot(&mean_flux), mean_flux })
}

/// Linear rate function along a conserved direction.
#[derive(Debug, Clone)]
pub struct ConservedDirection<T: Real> {
    pub xi: DVector<T>,
    /// Conserved lift shifted by a multiple of the identity so that it is
    /// positive semidefinite.
    pub lift: DMatrix<T>,
    /// `N = ξ̃^{1/2} M ξ̃^{1/2}`.
    pub n: DMatrix<T>,
    /// `1 / max sp(N)`.
    pub rate_slope: T,
}

impl<T: Real> ConservedDirection<T> {
    /// `I(q) = |q| / max sp(N)`.
    pub fn rate(&self, q: T) -> T {
        q.abs() * self.rate_slope
    }
}

/// Builds the conserved-direction data for `ξ ∈ 𝓛`.
pub fn conserved_direction<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, xi: &DVector<T>) -> Result<ConservedDirection<T>> {
    let off = geometry.project(xi).norm();
    if off > T::lit(1e-8) * (T::one() + xi.norm()) {
        return Err(Error::NotInLineality { residual: off.as_f64() });
    }
    let mut lift = geometry.conserved.lift(xi)?;
    let lo = min_eig_sym(&lift)?;
    if lo < T::zero() {
        let dim = lift.nrows();
        lift += DMatrix::identity(dim, dim) * (-lo);
    }
    let root = sqrtm_psd(&lift)?;
    let n = &root * &model.steady_state()?.m * &root;
    let top = max_eig_sym(&n)?;
    if top <= T::zero() {
        return Err(Error::Singular("conserved quadratic form"));
    }
    Ok(ConservedDirection { xi: xi.clone(), lift, n, rate_slope: T::one() / top })
}

/// `I(q)` along the conserved direction `ξ`.
pub fn conserved_rate<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, xi: &DVector<T>, q: T) -> Result<T> {
    Ok(conserved_direction(model, geometry, xi)?.rate(q))
}
