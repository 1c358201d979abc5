use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::{NetworkSpec, TiltLift};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, op_norm, singular_values, solve_lyapunov, sqrtm_psd, SteadyState};
use crate::scalar::Real;

/// Phase-space operators of a network on `Γ = ℝ^{2n}` with coordinates `(p, κq)`.
#[derive(Debug)]
pub struct LinearModel<T: Real> {
    pub n: usize,
    pub d: usize,
    /// Oscillator index of each reservoir.
    pub boundary: Vec<usize>,
    pub gamma: DVector<T>,
    pub theta: DVector<T>,
    pub theta_inv: DVector<T>,
    pub kappa: DMatrix<T>,
    pub a: DMatrix<T>,
    pub q: DMatrix<T>,
    pub b: DMatrix<T>,
    pub omega: DMatrix<T>,
    /// Signature of the time reversal `(p, q) ↦ (−p, q)`.
    pub time_reversal: DVector<T>,
    /// `max |Im sp(A)| + ‖A‖`, the natural frequency scale.
    pub spectral_scale: T,
    steady: OnceLock<Result<SteadyState<T>>>,
}

impl<T: Real> Clone for LinearModel<T> {
    fn clone(&self) -> Self {
        let steady = OnceLock::new();
        if let Some(s) = self.steady.get() {
            let _ = steady.set(s.clone());
        }
        Self {
            n: self.n,
            d: self.d,
            boundary: self.boundary.clone(),
            gamma: self.gamma.clone(),
            theta: self.theta.clone(),
            theta_inv: self.theta_inv.clone(),
            kappa: self.kappa.clone(),
            a: self.a.clone(),
            q: self.q.clone(),
            b: self.b.clone(),
            omega: self.omega.clone(),
            time_reversal: self.time_reversal.clone(),
            spectral_scale: self.spectral_scale,
            steady,
        }
    }
}

/// Norms of the violations of the structural identities.
#[derive(Debug, Clone, Copy)]
pub struct StructuralReport {
    /// `‖A + Aᵀ + Qϑ⁻¹Qᵀ‖`
    pub dissipation: f64,
    /// Smallest singular value of `A − Aᵀ` (must be positive).
    pub antisym_min_sv: f64,
    /// Smallest eigenvalue of `QᵀQ` (must be positive).
    pub qtq_min_eig: f64,
    /// `‖[ϑ, QᵀQ]‖`
    pub commutator: f64,
    /// `‖θQ + Q‖`
    pub reversal_q: f64,
    /// `‖θAθ − Aᵀ‖`
    pub reversal_a: f64,
    /// `‖θBθ − B‖`
    pub reversal_b: f64,
    /// `‖θΩθ + Ω‖`
    pub reversal_omega: f64,
}

impl StructuralReport {
    /// Largest identity violation.
    pub fn max_violation(&self) -> f64 {
        [self.dissipation, self.commutator, self.reversal_q, self.reversal_a, self.reversal_b, self.reversal_omega]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation() <= tol && self.antisym_min_sv > tol && self.qtq_min_eig > tol
    }
}

/// Kalman rank test result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Controllability {
    pub controllable: bool,
    pub rank: usize,
    pub dim: usize,
}

impl<T: Real> LinearModel<T> {
    /// Assembles `A`, `Q`, `B`, `Ω` and `θ` from a validated network description.
    pub fn assemble(spec: &NetworkSpec) -> Result<Self> {
        let n = spec.n();
        let d = spec.d();
        let k2 = spec.kappa_sq.map(T::lit);
        let kappa = sqrtm_psd(&k2)?;
        let dim = 2 * n;
        let mut a = DMatrix::zeros(dim, dim);
        a.view_mut((0, n), (n, n)).copy_from(&(-&kappa));
        a.view_mut((n, 0), (n, n)).copy_from(&kappa);
        let mut q = DMatrix::zeros(dim, d);
        let mut gamma = DVector::zeros(d);
        let mut theta = DVector::zeros(d);
        let mut boundary = Vec::with_capacity(d);
        for (j, r) in spec.boundary.iter().enumerate() {
            let g = T::lit(r.gamma);
            let t = T::lit(r.theta);
            a[(r.index, r.index)] -= g;
            q[(r.index, j)] = (T::lit(2.0) * g * t).sqrt();
            gamma[j] = g;
            theta[j] = t;
            boundary.push(r.index);
        }
        let b = &q * q.transpose();
        let omega = (&a - a.transpose()) * T::lit(0.5);
        let time_reversal = DVector::from_fn(dim, |i, _| if i < n { -T::one() } else { T::one() });
        let max_im = eigenvalues(&a)?.iter().map(|z| z.im.abs()).fold(T::zero(), |x, y| x.max(y));
        let spectral_scale = max_im + op_norm(&a);
        Ok(Self {
            n,
            d,
            boundary,
            gamma,
            theta_inv: theta.map(|t| T::one() / t),
            theta,
            kappa,
            a,
            q,
            b,
            omega,
            time_reversal,
            spectral_scale,
            steady: OnceLock::new(),
        })
    }

    /// Phase-space dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Time reversal `θ` as a matrix.
    pub fn theta_matrix(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&self.time_reversal)
    }

    /// `θ X θ`.
    pub fn reverse(&self, x: &DMatrix<T>) -> DMatrix<T> {
        let s = &self.time_reversal;
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| s[i] * x[(i, j)] * s[j])
    }

    /// Invariant covariance of the stationary process (computed once).
    pub fn steady_state(&self) -> Result<&SteadyState<T>> {
        self.steady.get_or_init(|| solve_lyapunov(&self.a, &self.b)).as_ref().map_err(Clone::clone)
    }

    /// Momentum row of reservoir `j`.
    pub fn boundary_row(&self, j: usize) -> usize {
        self.boundary[j]
    }

    /// `2γ_jϑ_j`, the nonzero entries of `B`.
    pub fn noise_weight(&self, j: usize) -> T {
        T::lit(2.0) * self.gamma[j] * self.theta[j]
    }

    /// Canonical lift of a tilt vector.
    pub fn lift(&self, xi: &DVector<T>) -> TiltLift<T> {
        TiltLift::canonical(self, xi)
    }

    /// `QξQᵀ` (diagonal).
    pub fn q_xi_qt(&self, weights: &DVector<T>) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for j in 0..self.d {
            let r = self.boundary[j];
            m[(r, r)] += weights[j] * self.noise_weight(j);
        }
        m
    }

    /// `A_ξ = A + QξQᵀ`.
    pub fn a_xi(&self, xi: &DVector<T>) -> DMatrix<T> {
        &self.a + self.q_xi_qt(xi)
    }

    /// `C_ξ = Qξ(ϑ⁻¹ − ξ)Qᵀ`.
    pub fn c_xi(&self, xi: &DVector<T>) -> DMatrix<T> {
        let w = DVector::from_fn(self.d, |j, _| xi[j] * (self.theta_inv[j] - xi[j]));
        self.q_xi_qt(&w)
    }

    /// `½ Σ_j 2γ_j = ¼ tr(Qϑ⁻¹Qᵀ)`.
    pub fn half_total_damping(&self) -> T {
        self.gamma.sum() * T::lit(0.5)
    }

    /// Norms of all structural-identity violations.
    pub fn structural_report(&self) -> Result<StructuralReport> {
        let th = self.theta_matrix();
        let tinv = DMatrix::from_diagonal(&self.theta_inv);
        let qtq = self.q.transpose() * &self.q;
        let tdiag = DMatrix::from_diagonal(&self.theta);
        let f = |m: DMatrix<T>| m.norm().as_f64();
        let dissipation = f(&self.a + self.a.transpose() + &self.q * &tinv * self.q.transpose());
        let antisym = &self.a - self.a.transpose();
        let sv = singular_values(&antisym)?;
        let antisym_min_sv = sv.iter().copied().fold(T::max_value().unwrap(), |x, y| x.min(y)).as_f64();
        let qtq_min_eig = crate::linalg::min_eig_sym(&qtq)?.as_f64();
        Ok(StructuralReport {
            dissipation,
            antisym_min_sv,
            qtq_min_eig,
            commutator: f(&tdiag * &qtq - &qtq * &tdiag),
            reversal_q: f(&th * &self.q + &self.q),
            reversal_a: f(&th * &self.a * &th - self.a.transpose()),
            reversal_b: f(&th * &self.b * &th - &self.b),
            reversal_omega: f(&th * &self.omega * &th + &self.omega),
        })
    }

    /// Kalman rank test on `[Q, AQ, …, A^{2n−1}Q]` with relative threshold `1e-9`.
    ///
    /// `A` is rescaled to unit norm and each block normalized, which leaves the
    /// rank unchanged but keeps the columns comparable.
    pub fn kalman_controllable(&self) -> Result<Controllability> {
        let dim = self.dim();
        let an = op_norm(&self.a);
        let a = &self.a / an;
        let mut blocks = DMatrix::zeros(dim, dim * self.d);
        let mut cur = self.q.clone();
        for k in 0..dim {
            let nrm = cur.norm();
            if nrm > T::zero() {
                cur /= nrm;
            }
            blocks.view_mut((0, k * self.d), (dim, self.d)).copy_from(&cur);
            cur = &a * cur;
        }
        let sv = singular_values(&blocks)?;
        let smax = sv.iter().copied().fold(T::zero(), |x, y| x.max(y));
        let rank = sv.iter().filter(|&&s| s > T::lit(1e-9) * smax).count();
        Ok(Controllability { controllable: rank == dim, rank, dim })
    }

    /// Fails with an input error when the pair `(A, Q)` is not controllable.
    pub fn require_controllable(&self) -> Result<()> {
        let c = self.kalman_controllable()?;
        if c.controllable {
            Ok(())
        } else {
            Err(Error::NotControllable { rank: c.rank, dim: c.dim })
        }
    }

    /// Same network with all temperatures multiplied by `lambda`.
    pub fn rescaled(&self, lambda: T) -> Self {
        let mut m = self.clone();
        m.steady = OnceLock::new();
        m.theta *= lambda;
        m.theta_inv /= lambda;
        let sqrt = lambda.sqrt();
        m.q *= sqrt;
        m.b *= lambda;
        m
    }
}
