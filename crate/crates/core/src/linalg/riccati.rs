//! Maximal self-adjoint solution of `XBX − XA_ξ − A_ξᵀX − C_ξ = 0`.
//!
//! `K_ξ [I; X] = [I; X](−D)` with `D = A_ξ − BX`, so the maximal solution spans
//! the invariant subspace of `K_ξ` for the eigenvalues with positive real part.
//! That subspace is obtained from the matrix sign function, the graph is
//! extracted by least squares, and the result is polished by Newton steps.

use nalgebra::{DMatrix, DVector};

use super::hamiltonian::hamiltonian_matrix;
use super::{eigenvalues, singular_values, solve_sylvester_triangular, symmetrize};
use crate::error::{Error, Result};
use crate::network::LinearModel;
use crate::scalar::Real;

/// Tuning of the Riccati solver.
#[derive(Debug, Clone)]
pub struct RiccatiOptions<T: Real> {
    /// Eigenvalues of the closed loop with `|Re λ| < axis_tol · scale` count as imaginary.
    pub axis_tol: T,
    /// Offsets used to approach a boundary point from inside the domain.
    pub boundary_offsets: Vec<T>,
    /// Newton polishing steps.
    pub newton_steps: usize,
}

impl<T: Real> Default for RiccatiOptions<T> {
    fn default() -> Self {
        Self {
            axis_tol: T::lit(1e-9),
            boundary_offsets: [1e-3, 1e-4, 1e-5, 1e-6].iter().map(|&e| T::lit(e)).collect(),
            newton_steps: 6,
        }
    }
}

/// Maximal solution `X_ξ` with its closed-loop matrix.
#[derive(Debug, Clone)]
pub struct RiccatiSolution<T: Real> {
    pub xi: DVector<T>,
    pub x: DMatrix<T>,
    /// `D = A_ξ − BX`.
    pub d: DMatrix<T>,
    /// Frobenius norm of the Riccati residual at `xi`.
    pub residual: T,
    /// Smallest singular value of the matrix whose least-squares solve yields `X`.
    pub graph_sigma_min: T,
    /// `min |Re sp(D)|`.
    pub separation: T,
    /// True when `X` was obtained as a limit from inside the domain.
    pub boundary_limit: bool,
}

impl<T: Real> RiccatiSolution<T> {
    /// Residual relative to `1 + ‖X‖²`.
    pub fn relative_residual(&self) -> T {
        let nx = self.x.norm();
        self.residual / (T::one() + nx * nx)
    }
}

/// `XBX − XA_ξ − A_ξᵀX − C_ξ`.
pub fn riccati_residual<T: Real>(model: &LinearModel<T>, xi: &DVector<T>, x: &DMatrix<T>) -> DMatrix<T> {
    let a = model.a_xi(xi);
    x * &model.b * x - x * &a - a.transpose() * x - model.c_xi(xi)
}

fn log_abs_det_lu<T: Real>(lu: &nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>) -> T {
    let u = lu.u();
    (0..u.nrows()).fold(T::zero(), |acc, i| acc + u[(i, i)].abs().ln())
}

fn norm1<T: Real>(m: &DMatrix<T>) -> T {
    (0..m.ncols())
        .map(|j| m.column(j).iter().fold(T::zero(), |acc, x| acc + x.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Matrix sign function by the scaled Newton iteration.
///
/// Fails when the iteration cannot converge, which happens when eigenvalues
/// sit on (or numerically at) the imaginary axis.
pub fn matrix_sign<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = m.nrows();
    let mut z = m.clone();
    let mut scaling = true;
    let tol = T::lit(1e3) * T::eps() * T::from_count(n).sqrt();
    let mut last_change = T::max_value().unwrap();
    for _ in 0..100 {
        let lu = z.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::ImaginaryAxisSpectrum { separation: 0.0 })?;
        let c = if scaling {
            (-log_abs_det_lu(&lu) / T::from_count(n)).exp()
        } else {
            T::one()
        };
        if !c.is_finite() {
            return Err(Error::ImaginaryAxisSpectrum { separation: 0.0 });
        }
        let next = (&z * c + inv / c) * T::lit(0.5);
        let change = norm1(&(&next - &z)) / norm1(&next);
        z = next;
        if change <= tol || (!scaling && change >= last_change && change < T::lit(1e-8)) {
            return Ok(z);
        }
        if change < T::lit(1e-2) {
            scaling = false;
        }
        last_change = change;
    }
    Err(Error::ImaginaryAxisSpectrum { separation: 0.0 })
}

/// Extracts the graph `X` of the invariant subspace annihilated by `S − I`.
fn graph_from_sign<T: Real>(s: &DMatrix<T>, half: usize) -> Result<(DMatrix<T>, T)> {
    let n = half;
    let ident = DMatrix::<T>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&s.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(s.view((n, n), (n, n)) - &ident));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(&ident - s.view((0, 0), (n, n))));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-s.view((n, 0), (n, n))));
    let sv = singular_values(&lhs)?;
    let sigma_min = sv.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b));
    let qr = lhs.qr();
    let qtb = qr.q().transpose() * rhs;
    let x = qr.r().solve_upper_triangular(&qtb).ok_or(Error::Singular("graph condition failed"))?;
    Ok((symmetrize(&x), sigma_min))
}

/// Newton (Kleinman) refinement; returns the polished solution and its residual norm.
fn refine<T: Real>(model: &LinearModel<T>, xi: &DVector<T>, mut x: DMatrix<T>, steps: usize) -> (DMatrix<T>, T) {
    let a = model.a_xi(xi);
    let mut res = riccati_residual(model, xi, &x);
    let mut rn = res.norm();
    for _ in 0..steps {
        let scale = T::one() + x.norm_squared();
        if rn <= T::lit(10.0) * T::eps() * scale {
            break;
        }
        let d = &a - &model.b * &x;
        let Ok(h) = solve_sylvester_triangular(&d.transpose(), &(-&res)) else { break };
        let cand = symmetrize(&(&x + h));
        let cres = riccati_residual(model, xi, &cand);
        let cn = cres.norm();
        if !(cn < rn) {
            break;
        }
        x = cand;
        res = cres;
        rn = cn;
    }
    (x, rn)
}

fn finish<T: Real>(
    model: &LinearModel<T>,
    xi: &DVector<T>,
    x: DMatrix<T>,
    residual: T,
    graph_sigma_min: T,
    boundary_limit: bool,
) -> Result<RiccatiSolution<T>> {
    let d = model.a_xi(xi) - &model.b * &x;
    let ev = eigenvalues(&d)?;
    let separation = ev.iter().map(|z| z.re.abs()).fold(T::max_value().unwrap(), |a, b| a.min(b));
    Ok(RiccatiSolution { xi: xi.clone(), x, d, residual, graph_sigma_min, separation, boundary_limit })
}

/// Maximal solution at a point strictly inside the domain.
pub fn riccati_interior<T: Real>(
    model: &LinearModel<T>,
    xi: &DVector<T>,
    opts: &RiccatiOptions<T>,
) -> Result<RiccatiSolution<T>> {
    let (k, _, _) = hamiltonian_matrix(model, xi);
    let s = matrix_sign(&k)?;
    let (x0, sigma) = graph_from_sign(&s, model.dim())?;
    let (x, rn) = refine(model, xi, x0, opts.newton_steps);
    let sol = finish(model, xi, x, rn, sigma, false)?;
    let scale = model.spectral_scale;
    let stable = sol.d.clone();
    let abscissa = eigenvalues(&stable)?.iter().map(|z| z.re).fold(T::min_value().unwrap(), |a, b| a.max(b));
    if sol.separation < opts.axis_tol * scale || abscissa >= T::zero() {
        return Err(Error::ImaginaryAxisSpectrum { separation: sol.separation.as_f64() });
    }
    if sol.relative_residual() > T::lit(1e-9) || !sol.x.iter().all(|v| v.is_finite()) {
        return Err(Error::RiccatiResidual { residual: sol.residual.as_f64() });
    }
    Ok(sol)
}

/// Limit of `X_{ξ_b + ε v}` as `ε → 0⁺`, with `v` the unit vector from `xi_b`
/// toward `target` (a point inside the domain).
///
/// Samples are fitted by least squares in the basis `{1, √ε, ε}`.
pub fn riccati_boundary<T: Real>(
    model: &LinearModel<T>,
    xi_b: &DVector<T>,
    target: &DVector<T>,
    opts: &RiccatiOptions<T>,
) -> Result<RiccatiSolution<T>> {
    let dir = target - xi_b;
    let len = dir.norm();
    if len == T::zero() {
        return riccati_interior(model, xi_b, opts);
    }
    let v = dir / len;
    let mut samples: Vec<(T, DMatrix<T>, T)> = Vec::new();
    let mut last_err = None;
    for &eps in &opts.boundary_offsets {
        let e = eps.min(len * T::lit(0.5));
        match riccati_interior(model, &(xi_b + &v * e), opts) {
            Ok(s) => samples.push((e, s.x, s.graph_sigma_min)),
            Err(err) => last_err = Some(err),
        }
    }
    if samples.is_empty() {
        return Err(last_err.unwrap_or(Error::ImaginaryAxisSpectrum { separation: 0.0 }));
    }
    let sigma = samples.iter().map(|s| s.2).fold(T::max_value().unwrap(), |a, b| a.min(b));
    let mut used = samples.clone();
    let x = loop {
        let fit = fit_limit(&used);
        let scale = T::one() + fit.norm();
        let worst = used
            .iter()
            .map(|(e, xs, _)| (xs - eval_fit(&used, *e)).norm())
            .fold(T::zero(), |a, b| a.max(b));
        if worst <= T::lit(1e-7) * scale || used.len() <= 2 {
            break fit;
        }
        used.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        used.pop();
    };
    let x = symmetrize(&x);
    let residual = riccati_residual(model, xi_b, &x).norm();
    finish(model, xi_b, x, residual, sigma, true)
}

fn design_row<T: Real>(e: T, cols: usize) -> Vec<T> {
    [T::one(), e.sqrt(), e][..cols].to_vec()
}

fn fit_coefficients<T: Real>(samples: &[(T, DMatrix<T>, T)]) -> Vec<DMatrix<T>> {
    let cols = samples.len().min(3);
    if cols == 1 {
        return vec![samples[0].1.clone()];
    }
    let mut a = DMatrix::zeros(samples.len(), cols);
    for (i, s) in samples.iter().enumerate() {
        for (j, v) in design_row(s.0, cols).into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let (r, c) = samples[0].1.shape();
    let mut y = DMatrix::zeros(samples.len(), r * c);
    for (i, s) in samples.iter().enumerate() {
        for (k, v) in s.1.iter().enumerate() {
            y[(i, k)] = *v;
        }
    }
    let coef = a.svd(true, true).solve(&y, T::eps()).expect("full svd");
    (0..cols).map(|j| DMatrix::from_iterator(r, c, coef.row(j).iter().copied())).collect()
}

fn fit_limit<T: Real>(samples: &[(T, DMatrix<T>, T)]) -> DMatrix<T> {
    fit_coefficients(samples).swap_remove(0)
}

fn eval_fit<T: Real>(samples: &[(T, DMatrix<T>, T)], e: T) -> DMatrix<T> {
    let coefs = fit_coefficients(samples);
    let row = design_row(e, coefs.len());
    coefs.iter().zip(row).fold(DMatrix::zeros(coefs[0].nrows(), coefs[0].ncols()), |acc, (c, w)| acc + c * w)
}

/// Maximal solution for `ξ` in the closure of the domain.
///
/// Points where the spectrum of `K_ξ` touches the imaginary axis are handled by
/// the one-sided limit toward the symmetry center `(2ϑ)⁻¹`.
pub fn riccati_maximal<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<RiccatiSolution<T>> {
    riccati_maximal_with(model, xi, &RiccatiOptions::default())
}

/// [`riccati_maximal`] with explicit options.
pub fn riccati_maximal_with<T: Real>(
    model: &LinearModel<T>,
    xi: &DVector<T>,
    opts: &RiccatiOptions<T>,
) -> Result<RiccatiSolution<T>> {
    match riccati_interior(model, xi, opts) {
        Ok(s) => Ok(s),
        Err(Error::ImaginaryAxisSpectrum { .. }) | Err(Error::RiccatiResidual { .. }) => {
            let center = model.theta_inv.map(|t| t * T::lit(0.5));
            riccati_boundary(model, xi, &center, opts)
        }
        Err(e) => Err(e),
    }
}

/// Directional derivative `∂_η X_ξ`, the solution of
/// `DᵀX′ + X′D + X A′ + A′X + C′ = 0` with `A′ = ∂_η A_ξ`, `C′ = ∂_η C_ξ`.
pub fn riccati_derivative<T: Real>(model: &LinearModel<T>, sol: &RiccatiSolution<T>, eta: &DVector<T>) -> Result<DMatrix<T>> {
    let da = model.q_xi_qt(eta);
    let w = DVector::from_fn(model.d, |j, _| eta[j] * (model.theta_inv[j] - sol.xi[j] * T::lit(2.0)));
    let dc = model.q_xi_qt(&w);
    let rhs = &sol.x * &da + &da * &sol.x + dc;
    Ok(symmetrize(&solve_sylvester_triangular(&sol.d.transpose(), &rhs)?))
}

/// Other symmetric solutions of the same Riccati equation, obtained by
/// exchanging groups of eigenvalues `Re λ = a` of the selected subspace with
/// their mirrors `Re λ = −a`.
pub fn alternative_solutions<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<Vec<DMatrix<T>>> {
    let (k, _, _) = hamiltonian_matrix(model, xi);
    let n = model.dim();
    let ev = eigenvalues(&k)?;
    let mut re: Vec<T> = ev.iter().map(|z| z.re).filter(|&r| r > T::zero()).collect();
    re.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut groups: Vec<T> = Vec::new();
    for r in re {
        if groups.last().is_none_or(|&g| (r - g).abs() > T::lit(1e-6) * (T::one() + g)) {
            groups.push(r);
        }
    }
    let ident = DMatrix::<T>::identity(2 * n, 2 * n);
    let proj_above = |c: T| -> Result<DMatrix<T>> {
        Ok((matrix_sign(&(&k - &ident * c))? + &ident) * T::lit(0.5))
    };
    let half_gap = |i: usize| {
        let lo = if i == 0 { groups[0] } else { groups[i] - groups[i - 1] };
        let hi = if i + 1 < groups.len() { groups[i + 1] - groups[i] } else { groups[i] };
        lo.min(hi) * T::lit(0.5)
    };
    let p_plus = proj_above(T::zero())?;
    let mut strips = Vec::new();
    for (i, &a) in groups.iter().enumerate() {
        let h = half_gap(i);
        let sp = proj_above(a - h)? - proj_above(a + h)?;
        let sm = proj_above(-a - h)? - proj_above(-a + h)?;
        strips.push(sm - sp);
    }
    let g = groups.len().min(6);
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << g) {
        let mut p = p_plus.clone();
        for (i, s) in strips.iter().enumerate().take(g) {
            if mask & (1 << i) != 0 {
                p += s;
            }
        }
        let svd = p.svd(true, false);
        let u = svd.u.expect("requested");
        let mut order: Vec<usize> = (0..2 * n).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
        let basis = DMatrix::from_fn(2 * n, n, |r, c| u[(r, order[c])]);
        let u1 = basis.view((0, 0), (n, n)).into_owned();
        let u2 = basis.view((n, 0), (n, n)).into_owned();
        if let Some(inv) = u1.try_inverse() {
            let x = symmetrize(&(u2 * inv));
            let res = riccati_residual(model, xi, &x).norm();
            if res <= T::lit(1e-6) * (T::one() + x.norm_squared()) {
                out.push(x);
            }
        }
    }
    Ok(out)
}
