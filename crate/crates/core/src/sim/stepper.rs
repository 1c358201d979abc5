use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{matrix_exponential, sym_eigen, symmetrize};
use crate::network::LinearModel;
use crate::scalar::Real;

/// `L` with `LLᵀ = S` for symmetric positive semidefinite `S`, clamping
/// eigenvalues below `tol · λ_max` to zero.
pub fn psd_factor<T: Real>(s: &DMatrix<T>, tol: T) -> Result<DMatrix<T>> {
    let eig = sym_eigen(&symmetrize(s))?;
    let top = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let lo = eig.eigenvalues.iter().copied().fold(top, |a, b| a.min(b));
    if lo < -tol.max(T::eps() * T::lit(1e3)) * top.max(T::one()) {
        return Err(Error::NotPositiveDefinite { what: "noise covariance", min_eig: lo.as_f64() });
    }
    let roots = eig.eigenvalues.map(|l| if l > tol * top { l.sqrt() } else { T::zero() });
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

fn normals<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<T>
where
    StandardNormal: Distribution<T>,
{
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Draws `x ~ 𝒩(0, M)` from the stationary law.
pub fn sample_stationary<T: Real, R: Rng + ?Sized>(model: &LinearModel<T>, rng: &mut R) -> Result<DVector<T>>
where
    StandardNormal: Distribution<T>,
{
    let m = &model.steady_state()?.m;
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite { what: "stationary covariance", min_eig: 0.0 })?;
    Ok(chol.l() * normals(rng, model.dim()))
}

/// Exact one-step transition of the Ornstein–Uhlenbeck process, sampled
/// jointly with the Wiener increment that drives it.
#[derive(Debug, Clone)]
pub struct OuStep<T: Real> {
    pub h: T,
    /// `e^{hA}`.
    pub transition: DMatrix<T>,
    /// `M_h = ∫₀ʰ e^{sA} B e^{sA*} ds = M − e^{hA} M e^{hA*}`, the covariance of
    /// the state noise, evaluated by Van Loan's block exponential.
    pub noise_cov: DMatrix<T>,
    /// `Cov(η, ΔW) / h = (∫₀ʰ e^{sA} ds) Q / h`.
    regression: DMatrix<T>,
    /// Factor of `Cov(η | ΔW)`.
    residual_factor: DMatrix<T>,
    sqrt_h: T,
}

impl<T: Real> OuStep<T> {
    pub fn new(model: &LinearModel<T>, h: T) -> Result<Self> {
        if h <= T::zero() || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {h}")));
        }
        let n = model.dim();
        let d = model.q.ncols();
        let mut block = DMatrix::zeros(2 * n, 2 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&(-&model.a));
        block.view_mut((0, n), (n, n)).copy_from(&model.b);
        block.view_mut((n, n), (n, n)).copy_from(&model.a.transpose());
        let mut lower = DMatrix::zeros(n + d, n + d);
        lower.view_mut((0, 0), (n, n)).copy_from(&model.a);
        lower.view_mut((0, n), (n, d)).copy_from(&model.q);
        let van_loan = matrix_exponential(&block, h)?;
        let f22 = van_loan.view((n, n), (n, n)).into_owned();
        let noise_cov = symmetrize(&(f22.transpose() * van_loan.view((0, n), (n, n))));
        let aug = matrix_exponential(&lower, h)?;
        let transition = aug.view((0, 0), (n, n)).into_owned();
        let cross = aug.view((0, n), (n, d)).into_owned();
        let regression = &cross / h;
        let cond = symmetrize(&(&noise_cov - &cross * cross.transpose() / h));
        let residual_factor = psd_factor(&cond, T::lit(1e-13))?;
        Ok(Self { h, transition, noise_cov, regression, residual_factor, sqrt_h: h.sqrt() })
    }

    /// Advances `x` by one step; returns the new state and the increments `ΔW`.
    pub fn advance<R: Rng + ?Sized>(&self, x: &DVector<T>, rng: &mut R) -> (DVector<T>, DVector<T>)
    where
        StandardNormal: Distribution<T>,
    {
        let d = self.regression.ncols();
        let n = self.residual_factor.ncols();
        let dw = normals::<T, R>(rng, d) * self.sqrt_h;
        let eta = &self.regression * &dw + &self.residual_factor * normals::<T, R>(rng, n);
        (&self.transition * x + eta, dw)
    }
}

/// One exact step `x ↦ e^{hA}x + η`.
pub fn propagate<T: Real, R: Rng + ?Sized>(model: &LinearModel<T>, x: &DVector<T>, h: T, rng: &mut R) -> Result<DVector<T>>
where
    StandardNormal: Distribution<T>,
{
    Ok(OuStep::new(model, h)?.advance(x, rng).0)
}
