use std::sync::OnceLock;

use nalgebra::DVector;

use super::scan::section_directions;
use crate::cgf::{domain_separation, g_gradient, g_hessian_riccati, g_spectral, sinf_feasibility, sinf_feasibility_from, DomainGeometry, Gradient};
use crate::error::{Error, Result};
use crate::network::LinearModel;
use crate::optim::{bracketed_root, golden_section_min, nelder_mead};
use crate::scalar::Real;

/// Tuning of the Legendre-transform solver.
#[derive(Debug, Clone)]
pub struct RateOptions<T: Real> {
    pub max_iterations: usize,
    /// Stopping threshold on `‖φ − ∇g‖` relative to `1 + ‖φ‖`.
    pub gradient_tol: T,
    pub armijo: T,
    pub shrink: T,
    /// Absolute tolerance for boundary radii.
    pub radius_tol: T,
    /// Number of cached boundary directions (dimension ≥ 2).
    pub boundary_samples: usize,
}

impl<T: Real> Default for RateOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tol: T::lit(1e-9),
            armijo: T::lit(1e-4),
            shrink: T::lit(0.5),
            radius_tol: T::lit(1e-10),
            boundary_samples: 72,
        }
    }
}

/// Value of the rate function at one flux vector.
#[derive(Debug, Clone)]
pub struct RateResult<T: Real> {
    pub phi: DVector<T>,
    pub i_value: T,
    pub xi_star: DVector<T>,
    /// `φ ∈ ∇g(𝓢∞)`: the supremum is a stationary point.
    pub interior: bool,
    /// `I(φ) − I(−φ) − ⟨ϑ⁻¹, φ⟩`, when requested.
    pub delta: Option<T>,
    pub in_f0: bool,
    pub iterations: usize,
    /// `‖φ − ∇g(ξ*)‖` at the returned point (interior case) or at the
    /// unconstrained maximizer over the section (boundary case).
    pub kkt: T,
}

const SEPARATION_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone)]
struct BoundaryPoint<T: Real> {
    direction: DVector<T>,
    radius: T,
    g: T,
}

/// Rate function solver bound to one model, caching `∂𝓢∞` samples.
pub struct RateSolver<'a, T: Real> {
    pub model: &'a LinearModel<T>,
    pub geometry: &'a DomainGeometry<T>,
    pub options: RateOptions<T>,
    boundary: OnceLock<std::result::Result<Vec<BoundaryPoint<T>>, Error>>,
}

struct Stationary<T: Real> {
    y: DVector<T>,
    value: T,
    gradient: Gradient<T>,
    iterations: usize,
    kkt: T,
}

impl<'a, T: Real> RateSolver<'a, T> {
    pub fn new(model: &'a LinearModel<T>, geometry: &'a DomainGeometry<T>) -> Self {
        Self::with_options(model, geometry, RateOptions::default())
    }

    pub fn with_options(model: &'a LinearModel<T>, geometry: &'a DomainGeometry<T>, options: RateOptions<T>) -> Self {
        Self { model, geometry, options, boundary: OnceLock::new() }
    }

    fn frame_phi(&self, phi: &DVector<T>) -> Result<DVector<T>> {
        if phi.len() != self.model.d {
            return Err(Error::InvalidArgument(format!("flux vector has {} entries, expected {}", phi.len(), self.model.d)));
        }
        let along = (self.geometry.lineality.transpose() * phi).norm();
        if along > T::lit(1e-8) * (T::one() + phi.norm()) {
            return Err(Error::InvalidArgument(format!(
                "flux vector has a component {:.3e} along the lineality space, where the rate is infinite",
                along.as_f64()
            )));
        }
        Ok(self.geometry.to_frame(phi))
    }

    /// `I(φ)`.
    pub fn rate(&self, phi: &DVector<T>) -> Result<RateResult<T>> {
        let pf = self.frame_phi(phi)?;
        let st = self.newton(&pf)?;
        let x_feasible = sinf_feasibility_from(self.model, self.geometry, &st.gradient.x_xi, &st.gradient.x_dual)?.feasible();
        let (y, value, interior) = if x_feasible { (st.y.clone(), st.value, true) } else {
            let (y, v) = self.boundary_sup(&pf)?;
            (y, v, false)
        };
        let xi_star = self.geometry.from_frame(&y);
        let in_f0 = interior && {
            let mirror = self.geometry.project(&self.model.theta_inv) - &xi_star;
            self.inside(&mirror)? && sinf_feasibility(self.model, self.geometry, &mirror)?.feasible()
        };
        Ok(RateResult {
            phi: phi.clone(),
            i_value: value.max(T::zero()),
            xi_star,
            interior,
            delta: None,
            in_f0,
            iterations: st.iterations,
            kkt: st.kkt,
        })
    }

    /// `I(φ)` together with `Δ(φ) = I(φ) − I(−φ) − ⟨ϑ⁻¹, φ⟩`.
    pub fn rate_with_delta(&self, phi: &DVector<T>) -> Result<RateResult<T>> {
        let mut r = self.rate(phi)?;
        let m = self.rate(&(-phi))?;
        r.delta = Some(r.i_value - m.i_value - self.model.theta_inv.dot(phi));
        Ok(r)
    }

    /// `I(−φ) − I(φ) + ⟨ϑ⁻¹, φ⟩`.
    pub fn fr_defect(&self, phi: &DVector<T>) -> Result<T> {
        Ok(-self.rate_with_delta(phi)?.delta.unwrap())
    }

    /// Signed spectral separation; positive exactly inside `𝓓` up to the
    /// threshold `SEPARATION_FLOOR`.
    fn separation(&self, xi: &DVector<T>) -> Result<T> {
        Ok(domain_separation(self.model, xi)? - T::lit(SEPARATION_FLOOR))
    }

    fn inside(&self, xi: &DVector<T>) -> Result<bool> {
        Ok(self.separation(xi)? > T::zero())
    }

    fn evaluate(&self, y: &DVector<T>, pf: &DVector<T>) -> Result<Option<(T, Gradient<T>)>> {
        let xi = self.geometry.from_frame(y);
        if !self.inside(&xi)? {
            return Ok(None);
        }
        match g_gradient(self.model, &xi) {
            Ok(gr) => Ok(Some((y.dot(pf) - gr.value, gr))),
            Err(Error::GapNotPositive { .. }) | Err(Error::ImaginaryAxisSpectrum { .. }) | Err(Error::RiccatiResidual { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Damped Newton ascent of `y ↦ y·φ − g(Fy)` from `start`, with at most
    /// `budget` iterations. `None` when the tolerance is not reached.
    fn newton_from(&self, start: &Stationary<T>, pf: &DVector<T>, tol: T, budget: usize) -> Result<(Option<Stationary<T>>, usize)> {
        let o = &self.options;
        let mut y = start.y.clone();
        let mut grad = start.gradient.clone();
        let mut value = y.dot(pf) - grad.value;
        for it in 0..budget {
            let ascent = pf - self.geometry.to_frame(&grad.grad);
            let kkt = ascent.norm();
            if kkt <= tol {
                return Ok((Some(Stationary { y, value, gradient: grad, iterations: 0, kkt }), it));
            }
            let h = g_hessian_riccati(self.model, &grad, &self.geometry.frame)?;
            let step = match h.cholesky() {
                Some(c) => c.solve(&ascent),
                None => ascent.clone(),
            };
            let slope = ascent.dot(&step);
            let mut t = T::one();
            let mut accepted = None;
            for _ in 0..40 {
                let cand = &y + &step * t;
                if let Some((v, g)) = self.evaluate(&cand, pf)? {
                    let noise = T::lit(64.0) * T::eps() * (T::one() + v.abs());
                    if v + noise >= value + o.armijo * t * slope {
                        accepted = Some((cand, v, g));
                        break;
                    }
                }
                t *= o.shrink;
            }
            match accepted {
                Some((cand, v, g)) if t >= T::lit(1e-3) => {
                    y = cand;
                    value = v;
                    grad = g;
                }
                _ => return Ok((None, it + 1)),
            }
        }
        Ok((None, budget))
    }

    /// Maximizer over the section by continuation from the mean current
    /// (where `ξ = 0`) toward `φ`, each stage solved by damped Newton.
    fn newton(&self, pf: &DVector<T>) -> Result<Stationary<T>> {
        let o = &self.options;
        let zero = DVector::zeros(pf.len());
        let (_, g0) = self.evaluate(&zero, pf)?.ok_or(Error::OutsideDomain { margin: 0.0 })?;
        let mean = self.geometry.to_frame(&g0.grad);
        let mut current = Stationary { y: zero, value: T::zero(), gradient: g0, iterations: 0, kkt: T::zero() };
        let final_tol = o.gradient_tol * (T::one() + pf.norm());
        let stage_tol = T::lit(1e-4) * (T::one() + pf.norm());
        let (mut s, mut ds) = (T::zero(), T::one());
        let mut used = 0;
        while used < o.max_iterations {
            let s_try = (s + ds).min(T::one());
            let last = s_try >= T::one();
            let target = &mean + (pf - &mean) * s_try;
            let budget = if last { o.max_iterations - used } else { 8.min(o.max_iterations - used) };
            let (res, its) = self.newton_from(&current, &target, if last { final_tol } else { stage_tol }, budget)?;
            used += its.max(1);
            match res {
                Some(mut st) => {
                    if last {
                        st.iterations = used;
                        return Ok(st);
                    }
                    current = st;
                    s = s_try;
                    ds = ds * T::lit(2.0);
                }
                None => {
                    ds = ds * T::lit(0.25);
                    if ds < T::lit(1e-8) {
                        break;
                    }
                }
            }
        }
        let kkt = (pf - self.geometry.to_frame(&current.gradient.grad)).norm();
        Err(Error::NotConverged { iterations: used, best: (current.y.dot(pf) - current.gradient.value).as_f64(), kkt: kkt.as_f64() })
    }

    /// Sign change of `f` along `t ≥ 0` with `f(0) > 0`, searched outward from
    /// `guess`; `limit = (t, f(t))` with `f(t) ≤ 0` caps the search.
    fn crossing<F>(&self, f: F, guess: T, limit: Option<(T, T)>) -> Result<T>
    where
        F: Fn(T) -> Result<T>,
    {
        let (mut lo, mut flo) = (T::zero(), f(T::zero())?);
        if flo <= T::zero() {
            return Ok(T::zero());
        }
        let (mut hi, mut fhi) = match limit {
            Some(l) => l,
            None => (T::zero(), T::zero()),
        };
        let probe = |t: T, lo: &mut T, flo: &mut T, hi: &mut T, fhi: &mut T| -> Result<bool> {
            let ft = f(t)?;
            if ft > T::zero() {
                *lo = t;
                *flo = ft;
                Ok(true)
            } else {
                *hi = t;
                *fhi = ft;
                Ok(false)
            }
        };
        let bounded = limit.is_some();
        let mut t = if bounded { guess.min(hi * T::lit(0.999)) } else { guess };
        let mut width = guess * T::lit(0.01);
        if probe(t, &mut lo, &mut flo, &mut hi, &mut fhi)? {
            for grown in 0.. {
                t = lo + width;
                width *= T::lit(2.0);
                if bounded && t >= hi {
                    break;
                }
                if !probe(t, &mut lo, &mut flo, &mut hi, &mut fhi)? {
                    break;
                }
                if grown > 80 {
                    return Err(Error::Bracket("boundary of the feasible section"));
                }
            }
        } else if t > width {
            probe(t - width, &mut lo, &mut flo, &mut hi, &mut fhi)?;
        }
        let (inner, _) = bracketed_root(&f, lo, hi, flo, fhi, self.options.radius_tol)?;
        Ok(inner)
    }

    /// Radius of `closure(𝓢∞)` along the unit frame direction `dir` from `0`.
    ///
    /// With a guess near a point where the feasibility gap vanishes inside
    /// the domain, the gap root is bracketed locally and a single domain
    /// evaluation certifies that the bracket lies in the section.
    fn feasible_radius(&self, dir: &DVector<T>, guess: Option<T>) -> Result<T> {
        let u = self.geometry.from_frame(dir);
        let gap = |t: T| Ok(sinf_feasibility(self.model, self.geometry, &(&u * t))?.gap);
        if let Some(g0) = guess {
            if let Some(r) = self.local_gap_root(&u, &gap, g0)? {
                return Ok(r);
            }
        }
        let margin = |t: T| self.separation(&(&u * t));
        let start = guess.unwrap_or_else(|| self.model.theta_inv.amax().max(T::lit(1e-3)) * T::lit(0.25));
        let t_d = self.crossing(margin, start, None)?;
        let g_d = gap(t_d)?;
        if g_d > T::zero() {
            return Ok(t_d);
        }
        self.crossing(gap, start.min(t_d), Some((t_d, g_d)))
    }

    /// Point of `∂𝓢∞` on the ray from `0` along the unit frame direction
    /// `dir`, and whether it lies strictly inside `𝓓` (the feasibility gap
    /// closes before the domain boundary is reached).
    pub fn sinf_boundary(&self, dir: &DVector<T>) -> Result<(DVector<T>, bool)> {
        let r = self.feasible_radius(dir, None)?;
        let xi = self.geometry.from_frame(&(dir * r));
        let strict = self.inside(&(&xi * (T::one() + T::lit(1e-6))))?;
        Ok((xi, strict))
    }

    fn local_gap_root<F>(&self, u: &DVector<T>, gap: &F, guess: T) -> Result<Option<T>>
    where
        F: Fn(T) -> Result<T>,
    {
        let delta = guess * T::lit(0.02);
        let (a, b) = (guess - delta, guess + delta);
        if a <= T::zero() || !self.inside(&(u * b))? {
            return Ok(None);
        }
        let (ga, gb) = match (gap(a), gap(b)) {
            (Ok(ga), Ok(gb)) => (ga, gb),
            _ => return Ok(None),
        };
        if ga <= T::zero() || gb > T::zero() {
            return Ok(None);
        }
        let (inner, _) = bracketed_root(gap, a, b, ga, gb, self.options.radius_tol)?;
        Ok(Some(inner))
    }

    fn boundary_samples(&self) -> Result<&[BoundaryPoint<T>]> {
        let res = self.boundary.get_or_init(|| {
            let k = self.geometry.section_dim();
            let count = if k == 2 { self.options.boundary_samples } else { self.options.boundary_samples.max(64) * (k - 1).max(1) * 3 / 2 };
            section_directions::<T>(k, count)
                .into_iter()
                .map(|dir| {
                    let radius = self.feasible_radius(&dir, None)?;
                    let g = g_spectral(self.model, &self.geometry.from_frame(&(&dir * radius)))?;
                    Ok(BoundaryPoint { direction: dir, radius, g })
                })
                .collect()
        });
        res.as_deref().map_err(Clone::clone)
    }

    fn boundary_value(&self, dir: &DVector<T>, pf: &DVector<T>, guess: T) -> Result<T> {
        let r = self.feasible_radius(dir, Some(guess))?;
        let y = dir * r;
        Ok(y.dot(pf) - g_spectral(self.model, &self.geometry.from_frame(&y))?)
    }

    /// Supremum of the objective over `∂𝓢∞`.
    fn boundary_sup(&self, pf: &DVector<T>) -> Result<(DVector<T>, T)> {
        let pts = self.boundary_samples()?;
        let vals: Vec<T> = pts.iter().map(|p| p.radius * p.direction.dot(pf) - p.g).collect();
        let best = (0..pts.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
        let k = pf.len();
        let guess = pts[best].radius;
        let (dir, _) = match k {
            1 => (pts[best].direction.clone(), vals[best]),
            2 => {
                let a0 = pts[best].direction[1].atan2(pts[best].direction[0]);
                let da = T::two_pi() / T::from_count(pts.len());
                let at = |a: T| DVector::from_vec(vec![a.cos(), a.sin()]);
                let (a, v) = golden_section_min(|a| self.boundary_value(&at(a), pf, guess).map(|v| -v), a0 - da, a0 + da, T::lit(1e-5), 60)?;
                (at(a), -v)
            }
            _ => {
                let spacing = (T::lit(4.0) * T::pi() / T::from_count(pts.len())).sqrt();
                let f = |v: &[T]| {
                    let d = DVector::from_column_slice(v);
                    let n = d.norm();
                    self.boundary_value(&(d / n), pf, guess).map(|x| -x)
                };
                let (v, val) = nelder_mead(f, pts[best].direction.as_slice(), spacing * T::lit(0.5), T::lit(1e-7), 400)?;
                let d = DVector::from_vec(v);
                let n = d.norm();
                (d / n, -val)
            }
        };
        let r = self.feasible_radius(&dir, Some(guess))?;
        let y = &dir * r;
        let value = y.dot(pf) - g_spectral(self.model, &self.geometry.from_frame(&y))?;
        Ok((y, value))
    }
}

/// `I(φ)` with a fresh solver.
pub fn rate_function<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, phi: &DVector<T>) -> Result<RateResult<T>> {
    RateSolver::new(model, geometry).rate(phi)
}

/// `I(−φ) − I(φ) + ⟨ϑ⁻¹, φ⟩` with a fresh solver.
pub fn fr_defect<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, phi: &DVector<T>) -> Result<T> {
    RateSolver::new(model, geometry).fr_defect(phi)
}

/// Rectangular grid of flux vectors in `𝓛^⊥`, centered at `center`, with
/// `counts[a]` points along frame axis `a` spanning `±half_width`.
pub fn phi_grid<T: Real>(geometry: &DomainGeometry<T>, center: &DVector<T>, half_width: T, counts: &[usize]) -> Result<Vec<DVector<T>>> {
    let k = geometry.section_dim();
    if counts.len() != k {
        return Err(Error::InvalidArgument(format!("grid has {} axes but the section has dimension {k}", counts.len())));
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::InvalidArgument("grid axis with zero points".into()));
    }
    let c = geometry.to_frame(&geometry.project(center));
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut y = c.clone();
        for (a, &n) in counts.iter().enumerate().rev() {
            let i = rem % n;
            rem /= n;
            if n > 1 {
                y[a] += half_width * (T::lit(-1.0) + T::lit(2.0) * T::from_count(i) / T::from_count(n - 1));
            }
        }
        out.push(geometry.from_frame(&y));
    }
    Ok(out)
}

/// Direction of the outward normal of `∂𝓢∞` at a section point where the
/// feasibility gap vanishes, from central differences of the gap.
pub fn feasibility_normal<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, xi: &DVector<T>, step: T) -> Result<DVector<T>> {
    let k = geometry.section_dim();
    let mut g = DVector::zeros(k);
    for a in 0..k {
        let e = geometry.frame.column(a) * step;
        let plus = sinf_feasibility(model, geometry, &(xi + &e))?.gap;
        let minus = sinf_feasibility(model, geometry, &(xi - &e))?.gap;
        g[a] = (plus - minus) / (step * T::lit(2.0));
    }
    let n = g.norm();
    if n == T::zero() {
        return Err(Error::Singular("feasibility gap gradient"));
    }
    Ok(geometry.from_frame(&(-g / n)))
}

