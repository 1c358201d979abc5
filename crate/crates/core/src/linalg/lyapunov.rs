//! Continuous Lyapunov and Sylvester equations via complex Schur forms.

use nalgebra::{Complex, ComplexField, DMatrix, Schur};

use super::{adjoint, symmetrize, to_complex};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Invariant covariance `M` solving `AM + MAᵀ + B = 0`.
#[derive(Debug, Clone)]
pub struct SteadyState<T: Real> {
    pub m: DMatrix<T>,
    pub residual: T,
}

/// Solves `AM + MAᵀ + B = 0` for stable `A`.
pub fn solve_lyapunov<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<SteadyState<T>> {
    let schur = ComplexSchur::new(a)?;
    if schur.diag().iter().any(|z| z.re >= T::zero()) {
        return Err(Error::DriftNotStable);
    }
    let m = symmetrize(&schur.solve_sylvester_adjoint(b)?);
    let residual = (a * &m + &m * a.transpose() + b).norm();
    Ok(SteadyState { m, residual })
}

/// Solves `F Y + Y Fᵀ + C = 0` for any `F` with `λ_i + λ̄_j ≠ 0` over its spectrum.
pub fn solve_sylvester_triangular<T: Real>(f: &DMatrix<T>, c: &DMatrix<T>) -> Result<DMatrix<T>> {
    ComplexSchur::new(f)?.solve_sylvester_adjoint(c)
}

/// `F = U T U*` with `T` upper triangular.
pub(crate) struct ComplexSchur<T: Real> {
    u: DMatrix<Complex<T>>,
    t: DMatrix<Complex<T>>,
}

impl<T: Real> ComplexSchur<T> {
    pub(crate) fn new(f: &DMatrix<T>) -> Result<Self> {
        let (u, t) = Schur::try_new(to_complex(f), T::eps(), 10_000)
            .ok_or(Error::EigenFailure("complex Schur form"))?
            .unpack();
        Ok(Self { u, t })
    }

    pub(crate) fn diag(&self) -> Vec<Complex<T>> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Bartels–Stewart back substitution for `F Y + Y F* + C = 0` with real data.
    pub(crate) fn solve_sylvester_adjoint(&self, c: &DMatrix<T>) -> Result<DMatrix<T>> {
        let n = self.t.nrows();
        let t = &self.t;
        let u_adj = adjoint(&self.u);
        let ct = &u_adj * to_complex(c) * &self.u;
        let mut y = DMatrix::<Complex<T>>::zeros(n, n);
        let scale = t.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()));
        let tiny = T::eps() * scale.max(T::one()) * T::lit(1e-3);
        for j in (0..n).rev() {
            for i in (0..n).rev() {
                let mut rhs = -ct[(i, j)];
                for k in (i + 1)..n {
                    rhs -= t[(i, k)] * y[(k, j)];
                }
                for k in (j + 1)..n {
                    rhs -= y[(i, k)] * t[(j, k)].conj();
                }
                let denom = t[(i, i)] + t[(j, j)].conj();
                if denom.modulus() <= tiny {
                    return Err(Error::Singular("Sylvester equation"));
                }
                y[(i, j)] = rhs / denom;
            }
        }
        let full = &self.u * y * u_adj;
        Ok(full.map(|z| z.re))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        let a = DMatrix::from_element(1, 1, -2.0);
        let b = DMatrix::from_element(1, 1, 4.0);
        let s = solve_lyapunov(&a, &b).unwrap();
        assert!((s.m[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_unstable_drift() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let b = DMatrix::identity(2, 2);
        assert_eq!(solve_lyapunov(&a, &b).unwrap_err(), Error::DriftNotStable);
    }

    #[test]
    fn general_sylvester_with_mixed_spectrum() {
        let f = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -0.5, -3.0, 1.0, 0.2, 0.0, 0.7]);
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, 0.3, 2.0, -0.4, 0.0, -0.4, 1.5]);
        let y = solve_sylvester_triangular(&f, &c).unwrap();
        assert!((&f * &y + &y * f.transpose() + &c).norm() < 1e-11);
    }
}
