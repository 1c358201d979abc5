use nalgebra::{DMatrix, DVector};

use super::LinearModel;
use crate::error::{Error, Result};
use crate::linalg::{null_space, op_norm};
use crate::scalar::Real;

/// A symmetric lift `ξ̃` of a tilt `ξ` (`ξ̃Q = Qξ`, `θξ̃θ = ξ̃`) together with
/// `Σ = [Ω, ξ̃]`.
#[derive(Debug, Clone)]
pub struct TiltLift<T: Real> {
    pub xi: DVector<T>,
    pub xi_tilde: DMatrix<T>,
    pub sigma: DMatrix<T>,
}

impl<T: Real> TiltLift<T> {
    /// Block-diagonal lift carrying `ξ_j` on the momentum of reservoir `j`.
    pub fn canonical(model: &LinearModel<T>, xi: &DVector<T>) -> Self {
        let mut xt = DMatrix::zeros(model.dim(), model.dim());
        for j in 0..model.d {
            let r = model.boundary[j];
            xt[(r, r)] += xi[j];
        }
        Self::from_matrix(model, xi.clone(), xt)
    }

    /// Wraps an arbitrary lift matrix.
    pub fn from_matrix(model: &LinearModel<T>, xi: DVector<T>, xi_tilde: DMatrix<T>) -> Self {
        let sigma = &model.omega * &xi_tilde - &xi_tilde * &model.omega;
        Self { xi, xi_tilde, sigma }
    }

    /// `½ x·ξ̃x`.
    pub fn quad_q(&self, x: &DVector<T>) -> T {
        x.dot(&(&self.xi_tilde * x)) * T::lit(0.5)
    }

    /// `½ x·Σx`.
    pub fn quad_sigma(&self, x: &DVector<T>) -> T {
        x.dot(&(&self.sigma * x)) * T::lit(0.5)
    }

    /// `(‖ξ̃Q − Qξ‖, ‖θξ̃θ − ξ̃‖, ‖θΣθ + Σ‖)`.
    pub fn residuals(&self, model: &LinearModel<T>) -> (T, T, T) {
        let qxi = &model.q * DMatrix::from_diagonal(&self.xi);
        (
            (&self.xi_tilde * &model.q - qxi).norm(),
            (model.reverse(&self.xi_tilde) - &self.xi_tilde).norm(),
            (model.reverse(&self.sigma) + &self.sigma).norm(),
        )
    }
}

/// Solution space of the conserved-lift equations: symmetric `P` commuting with
/// `κ²` and acting as `η_j` on the boundary coordinates, giving
/// `η̃ = diag(P, κPκ⁻¹)` with `[Ω, η̃] = 0`.
#[derive(Debug, Clone)]
pub struct ConservedLiftSystem<T: Real> {
    /// `η`-components of the null-space basis (`d × r`).
    pub eta_part: DMatrix<T>,
    /// `P`-components of the same basis.
    pub p_part: Vec<DMatrix<T>>,
    kappa: DMatrix<T>,
    kappa_inv: DMatrix<T>,
}

/// Builds the conserved-lift system for `model`.
pub fn conserved_lift_system<T: Real>(model: &LinearModel<T>) -> Result<ConservedLiftSystem<T>> {
    let n = model.n;
    let d = model.d;
    let k2 = &model.kappa * &model.kappa;
    let k2_scale = op_norm(&k2);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let unknowns = pairs.len() + d;
    let unpack = |z: &DVector<T>| {
        let mut p = DMatrix::zeros(n, n);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            p[(i, j)] = z[k];
            p[(j, i)] = z[k];
        }
        let eta = DVector::from_fn(d, |j, _| z[pairs.len() + j]);
        (p, eta)
    };
    let constraints = |z: &DVector<T>| {
        let (p, eta) = unpack(z);
        let comm = (&p * &k2 - &k2 * &p) / k2_scale;
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(comm[(i, j)]);
            }
        }
        for (jb, &b) in model.boundary.iter().enumerate() {
            for i in 0..n {
                let target = if i == b { eta[jb] } else { T::zero() };
                out.push(p[(i, b)] - target);
            }
        }
        out
    };
    let rows = constraints(&DVector::zeros(unknowns)).len();
    let mut mat = DMatrix::zeros(rows, unknowns);
    for c in 0..unknowns {
        let mut e = DVector::zeros(unknowns);
        e[c] = T::one();
        for (r, v) in constraints(&e).into_iter().enumerate() {
            mat[(r, c)] = v;
        }
    }
    let ns = null_space(&mat, T::lit(1e-9))?;
    let mut eta_part = DMatrix::zeros(d, ns.ncols());
    let mut p_part = Vec::with_capacity(ns.ncols());
    for k in 0..ns.ncols() {
        let (p, eta) = unpack(&ns.column(k).into_owned());
        eta_part.set_column(k, &eta);
        p_part.push(p);
    }
    let kappa_inv = model.kappa.clone().try_inverse().ok_or(Error::Singular("kappa"))?;
    Ok(ConservedLiftSystem { eta_part, p_part, kappa: model.kappa.clone(), kappa_inv })
}

impl<T: Real> ConservedLiftSystem<T> {
    /// Dimension of the space of tilts admitting a conserved lift.
    pub fn eta_rank(&self) -> usize {
        if self.eta_part.ncols() == 0 {
            return 0;
        }
        let sv = crate::linalg::singular_values(&self.eta_part).unwrap_or_else(|_| DVector::zeros(0));
        let smax = sv.iter().copied().fold(T::zero(), |a, b| a.max(b));
        sv.iter().filter(|&&s| s > T::lit(1e-8) * smax.max(T::one())).count()
    }

    /// Conserved lift `η̃` of `eta`, or an error when `eta` admits none.
    pub fn lift(&self, eta: &DVector<T>) -> Result<DMatrix<T>> {
        let n = self.kappa.nrows();
        let mut p = DMatrix::zeros(n, n);
        let scale = eta.norm().max(T::one());
        if self.eta_part.ncols() > 0 {
            let svd = self.eta_part.clone().svd(true, true);
            let coef = svd
                .solve(eta, T::lit(1e-10))
                .map_err(|_| Error::Singular("conserved lift least squares"))?;
            let resid = (&self.eta_part * &coef - eta).norm();
            if resid > T::lit(1e-8) * scale {
                return Err(Error::NotInLineality { residual: resid.as_f64() });
            }
            for (k, pk) in self.p_part.iter().enumerate() {
                p += pk * coef[k];
            }
        } else if eta.norm() > T::lit(1e-12) {
            return Err(Error::NotInLineality { residual: eta.norm().as_f64() });
        }
        let r = &self.kappa * &p * &self.kappa_inv;
        let r = (&r + r.transpose()) * T::lit(0.5);
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&p);
        out.view_mut((n, n), (n, n)).copy_from(&r);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::presets;

    #[test]
    fn zero_tilt_and_identity_lift() {
        let m = LinearModel::<f64>::assemble(&presets::lozenge(&[1.0, 2.0, 4.0]).unwrap()).unwrap();
        let z = m.lift(&DVector::zeros(3));
        assert_eq!(z.xi_tilde.norm(), 0.0);
        assert_eq!(z.sigma.norm(), 0.0);
        let ones = DVector::from_element(3, 1.0);
        let full = TiltLift::from_matrix(&m, ones.clone(), DMatrix::identity(8, 8));
        assert!(full.sigma.norm() < 1e-15);
        let (a, b, _) = full.residuals(&m);
        assert!(a < 1e-14 && b < 1e-14);
    }

    #[test]
    fn conserved_lift_of_ones_is_identity() {
        let m = LinearModel::<f64>::assemble(&presets::triangular(&[1.0, 1.0, 1.0]).unwrap()).unwrap();
        let sys = conserved_lift_system(&m).unwrap();
        assert_eq!(sys.eta_rank(), 1);
        let l = sys.lift(&DVector::from_element(3, 1.0)).unwrap();
        assert!((l - DMatrix::identity(12, 12)).norm() < 1e-9);
        assert!(sys.lift(&DVector::from_vec(vec![1.0, 0.0, 0.0])).is_err());
    }
}
