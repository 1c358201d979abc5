use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{adjoint, to_complex};
use crate::network::{LinearModel, TiltLift};
use crate::scalar::Real;

/// `R(ω) = ϑ⁻¹Qᵀ(A + iω)⁻¹Q`, the boundary response at frequency `ω`.
pub fn response<T: Real>(model: &LinearModel<T>, omega: T) -> Result<DMatrix<Complex<T>>> {
    let n2 = model.dim();
    let mut m = to_complex(&model.a);
    for i in 0..n2 {
        m[(i, i)].im += omega;
    }
    let rhs = to_complex(&model.q);
    let sol = m.lu().solve(&rhs).ok_or(Error::Singular("resolvent of the drift"))?;
    let mut r = to_complex(&model.q.transpose()) * sol;
    for j in 0..model.d {
        let w = Complex::new(model.theta_inv[j], T::zero());
        for k in 0..model.d {
            r[(j, k)] *= w;
        }
    }
    Ok(r)
}

/// Builds `E = −ζR − R*ζ − R*ζR` for diagonal `ζ`.
pub fn e_from_response<T: Real>(r: &DMatrix<Complex<T>>, zeta: &DVector<T>) -> DMatrix<Complex<T>> {
    let d = r.nrows();
    let zr = DMatrix::from_fn(d, d, |i, j| r[(i, j)] * zeta[i]);
    let ra = adjoint(r);
    let mut e = -(&zr + adjoint(&zr) + &ra * &zr);
    for i in 0..d {
        e[(i, i)].im = T::zero();
        for j in (i + 1)..d {
            let avg = (e[(i, j)] + e[(j, i)].conj()) * Complex::new(T::lit(0.5), T::zero());
            e[(i, j)] = avg;
            e[(j, i)] = avg.conj();
        }
    }
    e
}

/// `ζ = ϑ^{1/2} ξ ϑ^{1/2}` as a vector.
pub fn zeta<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> DVector<T> {
    xi.component_mul(&model.theta)
}

/// `E_ξ(ω)`.
pub fn e_matrix<T: Real>(model: &LinearModel<T>, xi: &DVector<T>, omega: T) -> Result<DMatrix<Complex<T>>> {
    Ok(e_from_response(&response(model, omega)?, &zeta(model, xi)))
}

/// `E_ξ(ω) = Qᵀ(Aᵀ − iω)⁻¹ Σ (A + iω)⁻¹ Q` evaluated from an arbitrary lift.
pub fn e_matrix_from_lift<T: Real>(model: &LinearModel<T>, lift: &TiltLift<T>, omega: T) -> Result<DMatrix<Complex<T>>> {
    let n2 = model.dim();
    let mut m = to_complex(&model.a);
    for i in 0..n2 {
        m[(i, i)].im += omega;
    }
    let g = m.lu().solve(&to_complex(&model.q)).ok_or(Error::Singular("resolvent of the drift"))?;
    Ok(adjoint(&g) * to_complex(&lift.sigma) * g)
}

/// Responses on the `129`-point grid `ω_k = s·tan(u_k)`, `u_k = kπ/258`.
#[derive(Debug, Clone)]
pub struct ResponseGrid<T: Real> {
    pub omegas: Vec<T>,
    pub responses: Vec<DMatrix<Complex<T>>>,
}

impl<T: Real> ResponseGrid<T> {
    pub const POINTS: usize = 129;

    pub fn new(model: &LinearModel<T>) -> Result<Self> {
        let s = model.spectral_scale;
        let du = T::frac_pi_2() / T::from_count(Self::POINTS);
        let omegas: Vec<T> = (0..Self::POINTS).map(|k| s * (du * T::from_count(k)).tan()).collect();
        let responses = omegas.iter().map(|&w| response(model, w)).collect::<Result<_>>()?;
        Ok(Self { omegas, responses })
    }
}
