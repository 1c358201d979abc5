use nalgebra::{DMatrix, DVector};

use crate::cgf::DomainGeometry;
use crate::error::{Error, Result};
use crate::network::{LinearModel, TiltLift};
use crate::scalar::Real;

/// Quadratic forms needed to turn a sampled path into heat fluxes.
///
/// Components in `𝓛^⊥` use the canonical lifts of the basis tilts (boundary
/// term plus trapezoid rule for `∫σ`); components in `𝓛` use the conserved
/// lifts, for which `σ ≡ 0` and the flux is a pure boundary term.
#[derive(Debug, Clone)]
pub struct FluxPlan<T: Real> {
    pub canonical: Vec<TiltLift<T>>,
    pub projector: DMatrix<T>,
    pub lineality: DMatrix<T>,
    pub conserved: Vec<DMatrix<T>>,
    sigma_halves: Vec<DMatrix<T>>,
}

impl<T: Real> FluxPlan<T> {
    pub fn new(model: &LinearModel<T>, geometry: &DomainGeometry<T>) -> Self {
        let canonical: Vec<TiltLift<T>> = (0..model.d)
            .map(|j| {
                let mut e = DVector::zeros(model.d);
                e[j] = T::one();
                model.lift(&e)
            })
            .collect();
        let sigma_halves = canonical.iter().map(|l| &l.sigma * T::lit(0.5)).collect();
        Self {
            canonical,
            projector: geometry.projector.clone(),
            lineality: geometry.lineality.clone(),
            conserved: geometry.lineality_lifts.clone(),
            sigma_halves,
        }
    }

    pub fn reservoirs(&self) -> usize {
        self.canonical.len()
    }

    /// `σ_{e_j}(x)` for every reservoir.
    pub fn sigma(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(self.sigma_halves.len(), self.sigma_halves.iter().map(|s| x.dot(&(s * x))))
    }

    /// `𝓠_{e_j}(x)` for every reservoir.
    pub fn boundary(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(self.canonical.len(), self.canonical.iter().map(|l| l.quad_q(x)))
    }

    /// `½ x·η̃_l x` for every lineality basis vector.
    pub fn conserved_forms(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(self.conserved.len(), self.conserved.iter().map(|c| x.dot(&(c * x)) * T::lit(0.5)))
    }

    /// Combines canonical-lift fluxes with the exact conserved boundary terms.
    pub fn assemble(&self, canonical_flux: &DVector<T>, x0: &DVector<T>, x1: &DVector<T>) -> DVector<T> {
        let q = self.conserved_forms(x1) - self.conserved_forms(x0);
        &self.projector * canonical_flux + &self.lineality * q
    }
}

/// Running flux totals along one path sampled at a fixed step.
#[derive(Debug, Clone)]
pub struct FluxAccumulator<T: Real> {
    x0: DVector<T>,
    last: DVector<T>,
    last_sigma: DVector<T>,
    integral: DVector<T>,
    h: T,
}

impl<T: Real> FluxAccumulator<T> {
    pub fn new(plan: &FluxPlan<T>, x0: &DVector<T>, h: T) -> Self {
        let s = plan.sigma(x0);
        Self { x0: x0.clone(), last: x0.clone(), integral: DVector::zeros(s.len()), last_sigma: s, h }
    }

    pub fn push(&mut self, plan: &FluxPlan<T>, x: &DVector<T>) {
        let s = plan.sigma(x);
        self.integral += (&self.last_sigma + &s) * (self.h * T::lit(0.5));
        self.last_sigma = s;
        self.last.copy_from(x);
    }

    /// `Φ` from the start of the path up to the last pushed state.
    pub fn flux(&self, plan: &FluxPlan<T>) -> DVector<T> {
        let canonical = plan.boundary(&self.last) - plan.boundary(&self.x0) + &self.integral;
        plan.assemble(&canonical, &self.x0, &self.last)
    }
}

/// `Φ(T)` from states sampled at `times`, which must be uniformly spaced.
pub fn accumulate_flux<T: Real>(plan: &FluxPlan<T>, times: &[T], samples: &[DVector<T>]) -> Result<DVector<T>> {
    if times.len() != samples.len() || samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples with matching times".into()));
    }
    let h = times[1] - times[0];
    if h <= T::zero() {
        return Err(Error::InvalidArgument("sample times must increase".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > T::lit(1e-9) * h.max(T::one()) {
            return Err(Error::InvalidArgument("sample times are not uniformly spaced".into()));
        }
    }
    let mut acc = FluxAccumulator::new(plan, &samples[0], h);
    for x in &samples[1..] {
        acc.push(plan, x);
    }
    Ok(acc.flux(plan))
}

/// Direct discretization of the work `∫ (2γϑ)^{1/2} p dw + γ(ϑ − p²) ds`
/// written in Stratonovich form, `∫ (2γϑ)^{1/2} p ∘ dw − γ p² ds`, with the
/// midpoint rule for the stochastic integral and the trapezoid rule in time.
#[derive(Debug, Clone)]
pub struct LangevinWork<T: Real> {
    rows: Vec<usize>,
    gamma: DVector<T>,
    amplitude: DVector<T>,
    h: T,
    last: DVector<T>,
    pub work: DVector<T>,
}

impl<T: Real> LangevinWork<T> {
    pub fn new(model: &LinearModel<T>, x0: &DVector<T>, h: T) -> Self {
        let amplitude = DVector::from_fn(model.d, |j, _| model.noise_weight(j).sqrt());
        let rows = model.boundary.clone();
        let last = DVector::from_fn(model.d, |j, _| x0[rows[j]]);
        Self { rows, gamma: model.gamma.clone(), amplitude, h, last, work: DVector::zeros(model.d) }
    }

    pub fn push(&mut self, x: &DVector<T>, dw: &DVector<T>) {
        let half = T::lit(0.5);
        for j in 0..self.rows.len() {
            let p0 = self.last[j];
            let p1 = x[self.rows[j]];
            self.work[j] += self.amplitude[j] * (p0 + p1) * half * dw[j] - self.gamma[j] * (p0 * p0 + p1 * p1) * half * self.h;
            self.last[j] = p1;
        }
    }
}
