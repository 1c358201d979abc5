//! Adaptive Gauss–Kronrod (7/15) quadrature, including integrals over the real
//! frequency axis through the substitution `ω = s·tan(u)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Integral estimate with its error bound.
#[derive(Debug, Clone)]
pub struct QuadResult<V, T> {
    pub value: V,
    pub error: T,
    pub evaluations: usize,
}

/// Globally adaptive Gauss–Kronrod integrator on finite intervals.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T: Real> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_panels: usize,
}

impl<T: Real> Default for Quadrature<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-9), abs_tol: T::lit(1e-13), max_panels: 4000 }
    }
}

struct Panel<T: Real> {
    a: T,
    b: T,
    value: DVector<T>,
    error: T,
}

fn max_abs<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

impl<T: Real> Quadrature<T> {
    fn panel<F>(&self, f: &F, a: T, b: T) -> Result<Panel<T>>
    where
        F: Fn(T) -> Result<DVector<T>>,
    {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let fc = f(mid)?;
        let mut kron = &fc * T::lit(WGK[7]);
        let mut gauss = &fc * T::lit(WG[3]);
        for j in 0..7 {
            let dx = half * T::lit(XGK[j]);
            let s = f(mid - dx)? + f(mid + dx)?;
            kron += &s * T::lit(WGK[j]);
            if j % 2 == 1 {
                gauss += &s * T::lit(WG[j / 2]);
            }
        }
        kron *= half;
        gauss *= half;
        let error = max_abs(&(&kron - &gauss));
        Ok(Panel { a, b, value: kron, error })
    }

    /// Integrates a vector-valued function over `[a, b]`, with the interval first
    /// split at `breaks` (points outside `(a, b)` are ignored) and into at least
    /// `min_panels` equal pieces.
    pub fn integrate_vec<F>(
        &self,
        f: F,
        a: T,
        b: T,
        breaks: &[T],
        min_panels: usize,
    ) -> Result<QuadResult<DVector<T>, T>>
    where
        F: Fn(T) -> Result<DVector<T>>,
    {
        let mut cuts: Vec<T> = (0..=min_panels.max(1))
            .map(|k| a + (b - a) * T::from_count(k) / T::from_count(min_panels.max(1)))
            .collect();
        cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        cuts.dedup_by(|x, y| (*x - *y).abs() <= T::eps() * (b - a).abs());

        let mut panels = Vec::new();
        for w in cuts.windows(2) {
            panels.push(self.panel(&f, w[0], w[1])?);
        }
        let mut evaluations = 15 * panels.len();
        loop {
            let total: DVector<T> = panels.iter().fold(DVector::zeros(panels[0].value.len()), |acc, p| acc + &p.value);
            let err: T = panels.iter().fold(T::zero(), |acc, p| acc + p.error);
            let target = self.abs_tol.max(self.rel_tol * max_abs(&total));
            if err <= target {
                return Ok(QuadResult { value: total, error: err, evaluations });
            }
            if panels.len() >= self.max_panels {
                return Err(Error::Quadrature { estimate: err.as_f64(), target: target.as_f64() });
            }
            let (worst, _) = panels
                .iter()
                .enumerate()
                .fold((0, T::min_value().unwrap()), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
            let p = panels.swap_remove(worst);
            let mid = (p.a + p.b) * T::lit(0.5);
            if mid <= p.a || mid >= p.b {
                return Err(Error::Quadrature { estimate: err.as_f64(), target: target.as_f64() });
            }
            panels.push(self.panel(&f, p.a, mid)?);
            panels.push(self.panel(&f, mid, p.b)?);
            evaluations += 30;
        }
    }

    /// Scalar version of [`Quadrature::integrate_vec`].
    pub fn integrate<F>(&self, f: F, a: T, b: T, breaks: &[T], min_panels: usize) -> Result<QuadResult<T, T>>
    where
        F: Fn(T) -> Result<T>,
    {
        let r = self.integrate_vec(|x| Ok(DVector::from_element(1, f(x)?)), a, b, breaks, min_panels)?;
        Ok(QuadResult { value: r.value[0], error: r.error, evaluations: r.evaluations })
    }
}

/// Integration over `ω ∈ ℝ` after mapping `ω = s·tan(u)`.
///
/// Suitable for integrands decaying at least like `1/(1+ω²)`.
#[derive(Debug, Clone)]
pub struct FrequencyQuadrature<T: Real> {
    pub scale: T,
    pub quad: Quadrature<T>,
    /// Frequencies (`ω ≥ 0`) where the integrand has sharp features.
    pub breakpoints: Vec<T>,
}

impl<T: Real> FrequencyQuadrature<T> {
    pub fn new(scale: T) -> Self {
        Self { scale, quad: Quadrature::default(), breakpoints: Vec::new() }
    }

    pub fn with_breakpoints(mut self, omegas: impl IntoIterator<Item = T>) -> Self {
        self.breakpoints.extend(omegas.into_iter().map(|w| w.abs()));
        self
    }

    fn u_breaks(&self) -> Vec<T> {
        self.breakpoints.iter().map(|&w| (w / self.scale).atan()).collect()
    }

    /// `∫_ℝ f(ω) dω` for vector-valued `f` that is even in `ω`.
    pub fn integrate_even_vec<F>(&self, f: F) -> Result<QuadResult<DVector<T>, T>>
    where
        F: Fn(T) -> Result<DVector<T>>,
    {
        let s = self.scale;
        let g = |u: T| {
            let c = u.cos();
            let jac = s / (c * c);
            Ok(f(s * u.tan())? * (jac * T::lit(2.0)))
        };
        self.quad.integrate_vec(g, T::zero(), T::frac_pi_2(), &self.u_breaks(), 8)
    }

    /// `∫_ℝ f(ω) dω` for scalar `f` that is even in `ω`.
    pub fn integrate_even<F>(&self, f: F) -> Result<QuadResult<T, T>>
    where
        F: Fn(T) -> Result<T>,
    {
        let r = self.integrate_even_vec(|w| Ok(DVector::from_element(1, f(w)?)))?;
        Ok(QuadResult { value: r.value[0], error: r.error, evaluations: r.evaluations })
    }

    /// `∫_ℝ f(ω) dω` for a general scalar integrand.
    pub fn integrate<F>(&self, f: F) -> Result<QuadResult<T, T>>
    where
        F: Fn(T) -> Result<T>,
    {
        let s = self.scale;
        let g = |u: T| {
            let c = u.cos();
            Ok(DVector::from_element(1, f(s * u.tan())? * s / (c * c)))
        };
        let mut breaks = self.u_breaks();
        breaks.extend(self.u_breaks().into_iter().map(|u| -u));
        let r = self.quad.integrate_vec(g, -T::frac_pi_2(), T::frac_pi_2(), &breaks, 16)?;
        Ok(QuadResult { value: r.value[0], error: r.error, evaluations: r.evaluations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_integrates_to_pi() {
        let fq = FrequencyQuadrature::new(1.0);
        let r = fq.integrate(|w: f64| Ok(1.0 / (1.0 + w * w))).unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 1e-10);
        let r = fq.integrate_even(|w: f64| Ok(1.0 / (1.0 + w * w))).unwrap();
        assert!((r.value - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn zero_integrand() {
        let fq = FrequencyQuadrature::new(3.0);
        assert_eq!(fq.integrate(|_w: f64| Ok(0.0)).unwrap().value, 0.0);
    }

    #[test]
    fn narrow_resonance_with_breakpoint() {
        let g = 1e-3;
        let w0 = 5.0;
        let f = |w: f64| Ok(g / ((w - w0).powi(2) + g * g) + g / ((w + w0).powi(2) + g * g));
        let fq = FrequencyQuadrature::new(2.0).with_breakpoints([w0]);
        let r = fq.integrate_even(f).unwrap();
        assert!((r.value - 2.0 * std::f64::consts::PI).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn finite_interval_polynomial() {
        let q = Quadrature::<f64>::default();
        let r = q.integrate(|x| Ok(x.powi(5) - 2.0 * x), 0.0, 2.0, &[], 1).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }
}
