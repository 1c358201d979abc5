use nalgebra::{Complex, DMatrix, DVector};

use super::domain::DomainGeometry;
use super::response::{e_from_response, response, zeta};
use crate::error::{Error, Result};
use crate::linalg::hamiltonian::hamiltonian;
use crate::linalg::{eigenvalues, riccati_derivative, hermitian_eigenvalues, min_eig_sym, riccati_maximal, sym_eigen, FrequencyQuadrature, RiccatiSolution};
use crate::network::LinearModel;
use crate::scalar::Real;

/// Which formula to use for `g(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Integral,
    Spectral,
    Riccati,
    All,
}

/// Values of the limiting cumulant generating function at one tilt.
#[derive(Debug, Clone)]
pub struct CgfResult<T: Real> {
    pub xi: DVector<T>,
    pub g_integral: Option<T>,
    pub g_spectral: Option<T>,
    pub g_riccati: Option<T>,
    pub grad: Option<DVector<T>>,
    pub margin: T,
    pub in_d: bool,
    pub in_dinf: Option<bool>,
    pub lambda_minus: Option<T>,
    pub lambda_plus: Option<T>,
}

impl<T: Real> CgfResult<T> {
    /// The most accurate available value.
    pub fn value(&self) -> T {
        self.g_riccati.or(self.g_spectral).or(self.g_integral).unwrap_or(T::zero())
    }
}

/// `g(ξ) = ½Σγ − ¼Σ|Re λ|` over the spectrum of `K_ξ`.
pub fn g_spectral<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<T> {
    let h = hamiltonian(model, xi)?;
    Ok(model.half_total_damping() - h.abs_real_sum() * T::lit(0.25))
}

/// `g(ξ) = −½ tr(Qᵀ(X_ξ − ξ̃)Q)` for a computed maximal solution.
pub fn g_from_riccati<T: Real>(model: &LinearModel<T>, sol: &RiccatiSolution<T>) -> T {
    let tr_bx = model.b.component_mul(&sol.x).sum();
    let lifted = (0..model.d).fold(T::zero(), |acc, j| acc + sol.xi[j] * model.noise_weight(j));
    (lifted - tr_bx) * T::lit(0.5)
}

/// `g` by the Riccati formula.
pub fn g_riccati<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<T> {
    Ok(g_from_riccati(model, &riccati_maximal(model, xi)?))
}

/// Frequencies where integrands over `ω` have sharp features: resonances of
/// `A` and imaginary parts of the eigenvalues of `K_ξ`.
fn feature_frequencies<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<Vec<T>> {
    let mut w: Vec<T> = eigenvalues(&model.a)?.iter().map(|z| z.im.abs()).collect();
    w.extend(hamiltonian(model, xi)?.eigenvalues.iter().map(|z| z.im.abs()));
    w.retain(|x| *x > T::zero());
    Ok(w)
}

/// `g(ξ) = −∫ log det(I − E_ξ(ω)) dω/4π`.
pub fn g_integral<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<T> {
    let z = zeta(model, xi);
    let fq = FrequencyQuadrature::new(model.spectral_scale).with_breakpoints(feature_frequencies(model, xi)?);
    let r = fq.integrate_even(|w| {
        let e = e_from_response(&response(model, w)?, &z);
        let ev = hermitian_eigenvalues(&e)?;
        let top = ev.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b));
        if top >= T::one() {
            return Err(Error::OutsideDomain { margin: (T::one() - top).as_f64() });
        }
        Ok(-ev.iter().fold(T::zero(), |acc, mu| acc + (-*mu).ln_1p()))
    })?;
    Ok(r.value / (T::lit(4.0) * T::pi()))
}

/// Relative agreement tolerance used by [`Method::All`].
pub const ROUTE_TOLERANCE: f64 = 1e-6;

/// Evaluates `g` by the requested route(s), checking domain membership first.
pub fn g_value<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, xi: &DVector<T>, method: Method) -> Result<CgfResult<T>> {
    let margin = geometry.margin(model, xi)?.margin;
    let interior = margin > T::zero();
    if margin < -T::lit(1e-9) {
        return Err(Error::OutsideDomain { margin: margin.as_f64() });
    }
    let mut out = CgfResult {
        xi: xi.clone(),
        g_integral: None,
        g_spectral: None,
        g_riccati: None,
        grad: None,
        margin,
        in_d: interior,
        in_dinf: None,
        lambda_minus: None,
        lambda_plus: None,
    };
    if matches!(method, Method::Spectral | Method::All) {
        out.g_spectral = Some(g_spectral(model, xi)?);
    }
    if matches!(method, Method::Riccati | Method::All) {
        out.g_riccati = Some(g_riccati(model, xi)?);
    }
    if matches!(method, Method::Integral | Method::All) {
        if !interior {
            return Err(Error::OutsideDomain { margin: margin.as_f64() });
        }
        out.g_integral = Some(g_integral(model, xi)?);
    }
    if method == Method::All {
        let vals = [out.g_integral.unwrap(), out.g_spectral.unwrap(), out.g_riccati.unwrap()];
        let tol = T::lit(ROUTE_TOLERANCE) * (T::one() + vals[1].abs());
        if (vals[0] - vals[1]).abs() > tol || (vals[1] - vals[2]).abs() > tol {
            return Err(Error::RouteDisagreement {
                integral: vals[0].as_f64(),
                spectral: vals[1].as_f64(),
                riccati: vals[2].as_f64(),
            });
        }
        if interior {
            out.grad = Some(g_gradient(model, xi)?.grad);
            let (lm, lp) = lambda_pm(model, xi)?;
            out.lambda_minus = Some(lm);
            out.lambda_plus = Some(lp);
            out.in_dinf = Some(lm < T::zero() && T::zero() < lp);
        }
    }
    Ok(out)
}

/// Gradient of `g` with the Riccati pair it was computed from.
#[derive(Debug, Clone)]
pub struct Gradient<T: Real> {
    pub grad: DVector<T>,
    /// `g(ξ)` from the same maximal solution.
    pub value: T,
    /// `Y_ξ = X_ξ + θX_{ϑ⁻¹−ξ}θ`.
    pub gap: DMatrix<T>,
    pub gap_inverse: DMatrix<T>,
    pub x_xi: RiccatiSolution<T>,
    pub x_dual: RiccatiSolution<T>,
}

/// `Y_ξ` from the two maximal solutions.
pub fn gap_matrix<T: Real>(model: &LinearModel<T>, x_xi: &RiccatiSolution<T>, x_dual: &RiccatiSolution<T>) -> DMatrix<T> {
    &x_xi.x + model.reverse(&x_dual.x)
}

/// `η·∇g(ξ) = ½ tr(Σ_η̃ Y_ξ⁻¹)` for the standard basis with canonical lifts.
pub fn g_gradient<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<Gradient<T>> {
    let x_xi = riccati_maximal(model, xi)?;
    let x_dual = riccati_maximal(model, &(&model.theta_inv - xi))?;
    let gap = gap_matrix(model, &x_xi, &x_dual);
    let eig = sym_eigen(&gap)?;
    let min = eig.eigenvalues.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b));
    let max = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if min <= T::lit(1e-12) * max.max(T::one()) {
        return Err(Error::GapNotPositive { min_eig: min.as_f64() });
    }
    let inv_vals = eig.eigenvalues.map(|l| T::one() / l);
    let yinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    let grad = gradient_from_inverse_gap(model, &yinv);
    let value = g_from_riccati(model, &x_xi);
    Ok(Gradient { grad, value, gap, gap_inverse: yinv, x_xi, x_dual })
}

/// `½ tr(Σ_{e_j} W)` for every reservoir `j`.
pub fn gradient_from_inverse_gap<T: Real>(model: &LinearModel<T>, w: &DMatrix<T>) -> DVector<T> {
    let wo = w * &model.omega;
    DVector::from_fn(model.d, |j, _| {
        let r = model.boundary[j];
        wo[(r, r)]
    })
}

/// `∇g(ξ) = ∫ tr((I − E_ξ)⁻¹ E_{e_j}) dω/4π`.
pub fn g_gradient_integral<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<DVector<T>> {
    let d = model.d;
    let z = zeta(model, xi);
    let fq = FrequencyQuadrature::new(model.spectral_scale).with_breakpoints(feature_frequencies(model, xi)?);
    let r = fq.integrate_even_vec(|w| {
        let resp = response(model, w)?;
        let winv = resolvent_of_e(&e_from_response(&resp, &z))?;
        Ok(DVector::from_fn(d, |j, _| {
            let mut ej = DVector::zeros(d);
            ej[j] = model.theta[j];
            (&winv * e_from_response(&resp, &ej)).trace().re
        }))
    })?;
    Ok(r.value / (T::lit(4.0) * T::pi()))
}

fn resolvent_of_e<T: Real>(e: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let mut m = -e.clone();
    for i in 0..m.nrows() {
        m[(i, i)].re += T::one();
    }
    m.try_inverse().ok_or(Error::Singular("I − E"))
}

/// Hessian of `g` in the basis given by the columns of `basis`:
/// `H_ab = ∫ tr((I−E_ξ)⁻¹E_a(I−E_ξ)⁻¹E_b) dω/4π`.
pub fn g_hessian<T: Real>(model: &LinearModel<T>, xi: &DVector<T>, basis: &DMatrix<T>) -> Result<DMatrix<T>> {
    let k = basis.ncols();
    let z = zeta(model, xi);
    let zb: Vec<DVector<T>> = (0..k).map(|a| zeta(model, &basis.column(a).into_owned())).collect();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let fq = FrequencyQuadrature::new(model.spectral_scale).with_breakpoints(feature_frequencies(model, xi)?);
    let r = fq.integrate_even_vec(|w| {
        let resp = response(model, w)?;
        let winv = resolvent_of_e(&e_from_response(&resp, &z))?;
        let we: Vec<_> = zb.iter().map(|zz| &winv * e_from_response(&resp, zz)).collect();
        Ok(DVector::from_fn(pairs.len(), |p, _| {
            let (a, b) = pairs[p];
            (&we[a] * &we[b]).trace().re
        }))
    })?;
    let mut h = DMatrix::zeros(k, k);
    let scale = T::one() / (T::lit(4.0) * T::pi());
    for (p, &(a, b)) in pairs.iter().enumerate() {
        h[(a, b)] = r.value[p] * scale;
        h[(b, a)] = r.value[p] * scale;
    }
    Ok(h)
}

/// Hessian of `g` in the basis `basis` from derivatives of the two maximal
/// Riccati solutions: `∂_η∇g = −½ tr(Σ_· Y⁻¹ (∂_ηY) Y⁻¹)`.
pub fn g_hessian_riccati<T: Real>(model: &LinearModel<T>, gradient: &Gradient<T>, basis: &DMatrix<T>) -> Result<DMatrix<T>> {
    let k = basis.ncols();
    let mut h = DMatrix::zeros(k, k);
    for a in 0..k {
        let eta = basis.column(a).into_owned();
        let dy = riccati_derivative(model, &gradient.x_xi, &eta)? - model.reverse(&riccati_derivative(model, &gradient.x_dual, &eta)?);
        let dw = -(&gradient.gap_inverse * dy * &gradient.gap_inverse);
        let col = basis.transpose() * gradient_from_inverse_gap(model, &dw);
        h.set_column(a, &col);
    }
    Ok(crate::linalg::symmetrize(&h))
}

/// `η·∇²g(ξ)η`.
pub fn g_hessian_quadform<T: Real>(model: &LinearModel<T>, xi: &DVector<T>, eta: &DVector<T>) -> Result<T> {
    let basis = DMatrix::from_column_slice(eta.len(), 1, eta.as_slice());
    Ok(g_hessian(model, xi, &basis)?[(0, 0)])
}

/// `Λ₋ = −min sp(X_ξ + θX_{ϑ⁻¹}θ)`, `Λ₊ = min sp(X_{ϑ⁻¹−ξ})`.
pub fn lambda_pm<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<(T, T)> {
    let x_xi = riccati_maximal(model, xi)?;
    let x_dual = riccati_maximal(model, &(&model.theta_inv - xi))?;
    lambda_pm_from(model, &x_xi, &x_dual)
}

/// [`lambda_pm`] from precomputed maximal solutions at `ξ` and `ϑ⁻¹ − ξ`.
pub fn lambda_pm_from<T: Real>(model: &LinearModel<T>, x_xi: &RiccatiSolution<T>, x_dual: &RiccatiSolution<T>) -> Result<(T, T)> {
    let minv = inverse_covariance(model)?;
    let lm = -min_eig_sym(&(&x_xi.x + minv))?;
    let lp = min_eig_sym(&x_dual.x)?;
    Ok((lm, lp))
}

/// `M⁻¹ = θX_{ϑ⁻¹}θ`.
pub fn inverse_covariance<T: Real>(model: &LinearModel<T>) -> Result<DMatrix<T>> {
    let m = &model.steady_state()?.m;
    let eig = sym_eigen(m)?;
    if eig.eigenvalues.iter().any(|&l| l <= T::zero()) {
        return Err(Error::DriftNotStable);
    }
    let inv = eig.eigenvalues.map(|l| T::one() / l);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose())
}

/// `ξ ∈ 𝓓∞`: inside the domain with `Λ₋ < 0 < Λ₊`.
pub fn in_dinf<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, xi: &DVector<T>) -> Result<bool> {
    if !geometry.margin(model, xi)?.inside() {
        return Ok(false);
    }
    let (lm, lp) = lambda_pm(model, xi)?;
    Ok(lm < T::zero() && T::zero() < lp)
}
