use nalgebra::{DMatrix, DVector};

use super::response::{e_from_response, response, zeta, ResponseGrid};
use crate::error::{Error, Result};
use crate::linalg::hamiltonian::hamiltonian_matrix;
use crate::linalg::{eigenvalues, gram_schmidt, hermitian_min_eig, null_space, op_norm};
use crate::network::{conserved_lift_system, ConservedLiftSystem, LinearModel};
use crate::optim::{bracketed_root, golden_section_min};
use crate::scalar::Real;

/// Located infimum of `λ_min(I − E_ξ(ω))` over `ω`.
#[derive(Debug, Clone, Copy)]
pub struct DomainMargin<T: Real> {
    pub margin: T,
    /// Frequency at which the infimum was found.
    pub omega: T,
    /// Search cutoff beyond which `‖E_ξ(ω)‖ < 1` is guaranteed.
    pub omega_max: T,
}

impl<T: Real> DomainMargin<T> {
    pub fn inside(&self) -> bool {
        self.margin > T::zero()
    }
}

fn min_eig_at<T: Real>(model: &LinearModel<T>, z: &DVector<T>, omega: T) -> Result<T> {
    let e = e_from_response(&response(model, omega)?, z);
    margin_of(&e)
}

fn margin_of<T: Real>(e: &nalgebra::DMatrix<nalgebra::Complex<T>>) -> Result<T> {
    let d = e.nrows();
    let mut m = -e.clone();
    for i in 0..d {
        m[(i, i)].re += T::one();
    }
    hermitian_min_eig(&m)
}

/// Frequency beyond which the crude bound `‖E_ξ(ω)‖ ≤ ‖ζ‖(2c + c²)`,
/// `c = 2‖ϑ⁻¹‖‖Q‖²/|ω|`, stays below one.
pub fn omega_cutoff<T: Real>(model: &LinearModel<T>, z: &DVector<T>) -> T {
    let zn = z.iter().fold(T::zero(), |a, b| a.max(b.abs()));
    let an = op_norm(&model.a);
    if zn == T::zero() {
        return T::lit(2.0) * an;
    }
    let y = -T::one() + (T::one() + T::one() / zn).sqrt();
    let tinv = model.theta_inv.iter().fold(T::zero(), |a, b| a.max(b.abs()));
    let qn = op_norm(&model.q);
    (T::lit(2.0) * an).max(T::lit(2.0) * tinv * qn * qn / y)
}

/// `inf_ω λ_min(I − E_ξ(ω))` from a coarse grid followed by golden-section
/// refinement near grid minima and near the frequencies of eigenvalues of
/// `K_ξ` closest to the imaginary axis.
pub fn domain_margin<T: Real>(model: &LinearModel<T>, grid: &ResponseGrid<T>, xi: &DVector<T>) -> Result<DomainMargin<T>> {
    let z = zeta(model, xi);
    let omega_max = omega_cutoff(model, &z);
    if z.iter().all(|v| *v == T::zero()) {
        return Ok(DomainMargin { margin: T::one(), omega: T::zero(), omega_max });
    }
    let mut vals = Vec::with_capacity(grid.omegas.len());
    for (w, r) in grid.omegas.iter().zip(&grid.responses) {
        if *w > omega_max && !vals.is_empty() {
            break;
        }
        vals.push((*w, margin_of(&e_from_response(r, &z))?));
    }
    let (mut best_w, mut best) = vals.iter().copied().fold((T::zero(), T::max_value().unwrap()), |b, v| if v.1 < b.1 { v } else { b });
    let s = model.spectral_scale;
    let tol = T::lit(1e-10) * s;
    let refine = |a: T, b: T, best: &mut T, best_w: &mut T| -> Result<()> {
        let a = a.max(T::zero());
        let b = b.min(omega_max);
        if b > a {
            let (w, v) = golden_section_min(|w| min_eig_at(model, &z, w), a, b, tol, 80)?;
            if v < *best {
                *best = v;
                *best_w = w;
            }
        }
        Ok(())
    };
    let m = vals.len();
    let mut locals: Vec<usize> = (0..m)
        .filter(|&k| (k == 0 || vals[k].1 <= vals[k - 1].1) && (k + 1 == m || vals[k].1 <= vals[k + 1].1))
        .collect();
    locals.sort_by(|&i, &j| vals[i].1.partial_cmp(&vals[j].1).unwrap_or(std::cmp::Ordering::Equal));
    for &k in locals.iter().take(4) {
        let a = if k == 0 { T::zero() } else { vals[k - 1].0 };
        let b = if k + 1 < m { vals[k + 1].0 } else { omega_max };
        refine(a, b, &mut best, &mut best_w)?;
    }
    let (k, _, _) = hamiltonian_matrix(model, xi);
    let ev = eigenvalues(&k)?;
    let mut seeds: Vec<(T, T)> = ev
        .iter()
        .filter(|e| e.im >= T::zero() && e.im <= omega_max && e.re >= T::zero())
        .map(|e| (e.im, e.re))
        .collect();
    seeds.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    for &(w0, re) in seeds.iter().take(6) {
        let half = (T::lit(5.0) * re).max(T::lit(1e-6) * s);
        refine(w0 - half, w0 + half, &mut best, &mut best_w)?;
        if best <= T::zero() {
            break;
        }
    }
    Ok(DomainMargin { margin: best, omega: best_w, omega_max })
}

/// `min |Re λ(K_ξ)|` relative to the spectral scale of the model.
///
/// Since `λ_min(I − E_ξ(ω)) → 1` as `ω → ∞`, the margin can only become
/// negative by crossing zero, where `K_ξ` acquires an eigenvalue `iω`.
/// A positive separation therefore certifies `ξ ∈ 𝓓`; near `∂𝓓` it
/// vanishes like the square root of the distance.
pub fn domain_separation<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<T> {
    let (k, _, _) = hamiltonian_matrix(model, xi);
    let sep = eigenvalues(&k)?.iter().map(|z| z.re.abs()).fold(T::max_value().unwrap(), |a, b| a.min(b));
    Ok(sep / model.spectral_scale)
}

/// Membership in the open domain by the spectral characterization: no
/// eigenvalue of `K_ξ` on the imaginary axis (within `rel_tol · scale`).
pub fn spectral_domain_test<T: Real>(model: &LinearModel<T>, xi: &DVector<T>, rel_tol: T) -> Result<bool> {
    Ok(domain_separation(model, xi)? > rel_tol)
}

/// Lineality space, section frame and boundary machinery.
#[derive(Debug, Clone)]
pub struct DomainGeometry<T: Real> {
    /// Orthonormal basis of `𝓛` (`d × ℓ`).
    pub lineality: DMatrix<T>,
    /// Orthogonal projector onto `𝓛^⊥`.
    pub projector: DMatrix<T>,
    /// `ξ₀ = Π(2ϑ)⁻¹`.
    pub center: DVector<T>,
    /// Orthonormal basis of `𝓛^⊥`, first vector along `Πϑ⁻¹` when nonzero.
    pub frame: DMatrix<T>,
    /// Conserved lifts `η̃` of the lineality basis vectors.
    pub lineality_lifts: Vec<DMatrix<T>>,
    /// Dimension of the tilts admitting a conserved lift (algebraic cross-check).
    pub algebraic_dim: usize,
    pub conserved: ConservedLiftSystem<T>,
    pub grid: ResponseGrid<T>,
}

/// Ray exit bracket `origin + t·u`, `inner < t* ≤ outer`.
#[derive(Debug, Clone, Copy)]
pub struct RayExit<T: Real> {
    pub inner: T,
    pub outer: T,
}

impl<T: Real> RayExit<T> {
    pub fn radius(&self) -> T {
        (self.inner + self.outer) * T::lit(0.5)
    }
}

/// Computes `𝓛` as the common kernel of `ξ ↦ E_ξ(ω)` over `ω = 0` and `4n+1`
/// log-spaced frequencies in `[0.1s, 10s]`, then builds the section frame.
pub fn lineality_space<T: Real>(model: &LinearModel<T>) -> Result<DomainGeometry<T>> {
    let d = model.d;
    let s = model.spectral_scale;
    let count = 4 * model.n + 1;
    let mut omegas = vec![T::zero()];
    for k in 0..count {
        let t = T::from_count(k) / T::from_count(count - 1);
        omegas.push(s * T::lit(0.1) * T::lit(100.0).powf(t));
    }
    let mut rows: Vec<Vec<T>> = Vec::new();
    for &w in &omegas {
        let r = response(model, w)?;
        let es: Vec<_> = (0..d)
            .map(|j| {
                let mut e = DVector::zeros(d);
                e[j] = T::one();
                e_from_response(&r, &zeta(model, &e))
            })
            .collect();
        for a in 0..d {
            for b in 0..d {
                rows.push(es.iter().map(|e| e[(a, b)].re).collect());
                rows.push(es.iter().map(|e| e[(a, b)].im).collect());
            }
        }
    }
    let mat = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let lineality = if mat.amax() <= T::lit(1e-9) * model.theta.amax() {
        DMatrix::identity(d, d)
    } else {
        null_space(&mat, T::lit(1e-9))?
    };
    let projector = DMatrix::identity(d, d) - &lineality * lineality.transpose();
    let center = &projector * model.theta_inv.map(|t| t * T::lit(0.5));
    let mut candidates = vec![&projector * &model.theta_inv];
    for j in 0..d {
        let mut e = DVector::zeros(d);
        e[j] = T::one();
        candidates.push(e);
    }
    let frame = gram_schmidt(&candidates, &lineality, T::lit(1e-8), d - lineality.ncols());
    let conserved = conserved_lift_system(model)?;
    let lineality_lifts = (0..lineality.ncols())
        .map(|k| conserved.lift(&lineality.column(k).into_owned()))
        .collect::<Result<_>>()?;
    let algebraic_dim = conserved.eta_rank();
    Ok(DomainGeometry {
        lineality,
        projector,
        center,
        frame,
        lineality_lifts,
        algebraic_dim,
        conserved,
        grid: ResponseGrid::new(model)?,
    })
}

impl<T: Real> DomainGeometry<T> {
    pub fn lineality_dim(&self) -> usize {
        self.lineality.ncols()
    }

    pub fn section_dim(&self) -> usize {
        self.frame.ncols()
    }

    /// `ξ = frame · y`.
    pub fn from_frame(&self, y: &DVector<T>) -> DVector<T> {
        &self.frame * y
    }

    /// Frame coordinates of `ξ` (its 𝓛 component is discarded).
    pub fn to_frame(&self, xi: &DVector<T>) -> DVector<T> {
        self.frame.transpose() * xi
    }

    pub fn project(&self, xi: &DVector<T>) -> DVector<T> {
        &self.projector * xi
    }

    /// Margin using the cached response grid.
    pub fn margin(&self, model: &LinearModel<T>, xi: &DVector<T>) -> Result<DomainMargin<T>> {
        domain_margin(model, &self.grid, xi)
    }

    /// Exit of the ray `origin + t·u` from the domain, bracketed to `tol`.
    ///
    /// The margin is concave along rays, which makes the crossing unique.
    pub fn ray_exit(&self, model: &LinearModel<T>, origin: &DVector<T>, u: &DVector<T>, tol: T) -> Result<RayExit<T>> {
        let f = |t: T| Ok(self.margin(model, &(origin + u * t))?.margin);
        let f0 = f(T::zero())?;
        if f0 <= T::zero() {
            return Err(Error::OutsideDomain { margin: f0.as_f64() });
        }
        let mut lo = T::zero();
        let mut flo = f0;
        let scale = model.theta_inv.amax().max(T::lit(1e-3));
        let mut hi = scale * T::lit(0.25);
        let mut fhi = f(hi)?;
        let mut grown = 0;
        while fhi > T::zero() {
            lo = hi;
            flo = fhi;
            hi *= T::lit(2.0);
            fhi = f(hi)?;
            grown += 1;
            if grown > 60 {
                return Err(Error::Bracket("section boundary"));
            }
        }
        let (inner, outer) = bracketed_root(f, lo, hi, flo, fhi, tol)?;
        Ok(RayExit { inner, outer })
    }
}

/// Boundary radius `r(u)` of the section along unit `u ∈ 𝓛^⊥` from its center,
/// to absolute tolerance `1e-6`.
pub fn section_boundary<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, u: &DVector<T>) -> Result<RayExit<T>> {
    let resid = (&geometry.lineality.transpose() * u).norm();
    if resid > T::lit(1e-8) || (u.norm() - T::one()).abs() > T::lit(1e-8) {
        return Err(Error::InvalidArgument("direction must be a unit vector orthogonal to the lineality space".into()));
    }
    geometry.ray_exit(model, &geometry.center, u, T::lit(1e-6))
}
