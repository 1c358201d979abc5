use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::flux::{FluxAccumulator, FluxPlan, LangevinWork};
use super::stepper::{sample_stationary, OuStep};
use crate::cgf::DomainGeometry;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, matrix_exponential, op_norm};
use crate::network::LinearModel;
use crate::scalar::Real;

/// Monte Carlo settings.
#[derive(Debug, Clone)]
pub struct SimConfig<T: Real> {
    pub seed: u64,
    pub n_traj: usize,
    /// Horizon `T` at which fluxes are reported.
    pub horizon: T,
    pub step: T,
    pub bootstrap: usize,
    pub tilts: Vec<DVector<T>>,
    /// Continue every path to `2T` for the conserved-direction variance check.
    pub conserved_check: bool,
    /// Number of leading trajectories that also run the direct work
    /// accumulator at steps `h` and `2h`.
    pub cross_check_traj: usize,
    /// Keep per-trajectory records in the result.
    pub keep_records: bool,
}

impl<T: Real> SimConfig<T> {
    pub fn new(seed: u64, n_traj: usize, horizon: T, step: T) -> Self {
        Self {
            seed,
            n_traj,
            horizon,
            step,
            bootstrap: 500,
            tilts: Vec::new(),
            conserved_check: true,
            cross_check_traj: 100,
            keep_records: false,
        }
    }

    /// Number of steps of size `h` up to `T`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.step)));
        }
        if !(self.horizon >= self.step * T::lit(10.0)) {
            return Err(Error::InvalidArgument(format!("horizon {} must be at least 10 time steps", self.horizon)));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidArgument("at least one trajectory is required".into()));
        }
        let steps = self.steps();
        if (T::from_count(steps) * self.step - self.horizon).abs() > T::lit(1e-9) * self.horizon {
            return Err(Error::InvalidArgument(format!("horizon {} is not a multiple of the step {}", self.horizon, self.step)));
        }
        if self.cross_check_traj > 0 && steps % 2 == 1 {
            return Err(Error::InvalidArgument("the step-halving check needs an even number of steps".into()));
        }
        if let Some(t) = self.tilts.iter().find(|t| t.len() != d) {
            return Err(Error::InvalidArgument(format!("tilt has {} entries, expected {d}", t.len())));
        }
        Ok(())
    }
}

/// `0.01 / max |sp(A)|`.
pub fn default_step<T: Real>(model: &LinearModel<T>) -> Result<T> {
    let top = eigenvalues(&model.a)?.iter().map(|z| (z.re * z.re + z.im * z.im).sqrt()).fold(T::zero(), |a, b| a.max(b));
    Ok(T::lit(0.01) / top)
}

/// Twenty times the first `t = 2^k` with `‖e^{tA}‖ < 10⁻⁶`, rounded to an
/// even multiple of `h`.
pub fn default_horizon<T: Real>(model: &LinearModel<T>, h: T) -> Result<T> {
    let mut t = T::one() / op_norm(&model.a).max(T::lit(1e-12));
    for _ in 0..200 {
        if op_norm(&matrix_exponential(&model.a, t)?) < T::lit(1e-6) {
            let total = t * T::lit(20.0);
            let steps = (total / (h * T::lit(2.0))).ceil();
            return Ok(steps * h * T::lit(2.0));
        }
        t *= T::lit(2.0);
    }
    Err(Error::DriftNotStable)
}

/// Step-halving comparison for one path at horizon `T`.
#[derive(Debug, Clone)]
pub struct CrossCheck<T: Real> {
    /// Mean over reservoirs of `|Φ − W|` with step `h`.
    pub at_h: T,
    /// The same with step `2h` on the subsampled path.
    pub at_2h: T,
}

/// Output of one trajectory.
#[derive(Debug, Clone)]
pub struct FluxRecord<T: Real> {
    pub index: usize,
    pub flux: DVector<T>,
    pub flux_2t: Option<DVector<T>>,
    pub cross: Option<CrossCheck<T>>,
}

/// Empirical `(1/T) log E[e^{⟨ξ,Φ(T)⟩}]`.
#[derive(Debug, Clone)]
pub struct CgfEstimate<T: Real> {
    pub xi: DVector<T>,
    pub estimate: T,
    /// Bootstrap standard error.
    pub std_error: T,
    /// `estimate ± 3·std_error`.
    pub ci_low: T,
    pub ci_high: T,
    /// Largest normalized weight `e^{a_n} / Σ e^{a_m}`.
    pub max_weight: T,
    /// False when a single path carries more than half of the weight.
    pub reliable: bool,
}

/// Variance of a conserved flux combination at `T` and `2T`.
#[derive(Debug, Clone)]
pub struct ConservedCheck<T: Real> {
    pub direction: DVector<T>,
    pub var_t: T,
    pub var_2t: T,
    pub ratio: T,
}

/// Summary of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct TrajectoryStats<T: Real> {
    pub n_traj: usize,
    pub horizon: T,
    pub step: T,
    /// Mean of `Φ(T)/T`.
    pub mean_flux: DVector<T>,
    pub mean_flux_se: DVector<T>,
    pub cgf: Vec<CgfEstimate<T>>,
    pub conserved: Vec<ConservedCheck<T>>,
    /// Mean cross-accumulator discrepancies at `h` and `2h` and their ratio.
    pub cross: Option<(T, T, T)>,
    pub records: Vec<FluxRecord<T>>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn run_one<T: Real>(model: &LinearModel<T>, plan: &FluxPlan<T>, steppers: &OuStep<T>, cfg: &SimConfig<T>, index: usize) -> Result<FluxRecord<T>>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = stream_rng(cfg.seed, index as u64);
    let h = cfg.step;
    let steps = cfg.steps();
    let total = if cfg.conserved_check { 2 * steps } else { steps };
    let cross = index < cfg.cross_check_traj;
    let mut x = sample_stationary(model, &mut rng)?;
    let mut acc = FluxAccumulator::new(plan, &x, h);
    let mut acc2 = FluxAccumulator::new(plan, &x, h * T::lit(2.0));
    let mut work = LangevinWork::new(model, &x, h);
    let mut work2 = LangevinWork::new(model, &x, h * T::lit(2.0));
    let mut dw_pair = DVector::zeros(model.d);
    let mut flux = None;
    let mut cross_out = None;
    for k in 1..=total {
        let (next, dw) = steppers.advance(&x, &mut rng);
        x = next;
        acc.push(plan, &x);
        if cross && k <= steps {
            work.push(&x, &dw);
            dw_pair += &dw;
            if k % 2 == 0 {
                acc2.push(plan, &x);
                work2.push(&x, &dw_pair);
                dw_pair.fill(T::zero());
            }
        }
        if k == steps {
            let f = acc.flux(plan);
            if cross {
                let d = T::from_count(model.d);
                let at_h = (&f - &work.work).abs().sum() / d;
                let at_2h = (acc2.flux(plan) - &work2.work).abs().sum() / d;
                cross_out = Some(CrossCheck { at_h, at_2h });
            }
            flux = Some(f);
        }
    }
    let flux = flux.ok_or(Error::InvalidArgument("empty trajectory".into()))?;
    let flux_2t = cfg.conserved_check.then(|| acc.flux(plan));
    Ok(FluxRecord { index, flux, flux_2t, cross: cross_out })
}

/// `log((1/N) Σ e^{a_n})`, evaluated stably, with the largest normalized weight.
pub fn log_mean_exp<T: Real>(a: &[T]) -> (T, T) {
    let m = a.iter().copied().fold(T::min_value().unwrap(), |x, y| x.max(y));
    let mut sum = T::zero();
    let mut top = T::zero();
    for &v in a {
        let w = (v - m).exp();
        sum += w;
        top = top.max(w);
    }
    (m + (sum / T::from_count(a.len())).ln(), top / sum)
}

fn variance<T: Real>(v: &[T]) -> T {
    let n = T::from_count(v.len());
    let mean = v.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    v.iter().map(|&x| (x - mean) * (x - mean)).fold(T::zero(), |a, b| a + b) / (n - T::one()).max(T::one())
}

/// Runs the simulation and collects statistics.
pub fn simulate<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, cfg: &SimConfig<T>) -> Result<TrajectoryStats<T>>
where
    StandardNormal: Distribution<T>,
{
    cfg.validate(model.d)?;
    let plan = FluxPlan::new(model, geometry);
    let stepper = OuStep::new(model, cfg.step)?;
    let records = (0..cfg.n_traj)
        .into_par_iter()
        .map(|i| run_one(model, &plan, &stepper, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    summarize(geometry, cfg, records)
}

/// Statistics of an existing set of records.
pub fn empirical_cgf<T: Real>(geometry: &DomainGeometry<T>, cfg: &SimConfig<T>, records: Vec<FluxRecord<T>>) -> Result<TrajectoryStats<T>> {
    summarize(geometry, cfg, records)
}

fn summarize<T: Real>(geometry: &DomainGeometry<T>, cfg: &SimConfig<T>, records: Vec<FluxRecord<T>>) -> Result<TrajectoryStats<T>> {
    let n = records.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no trajectories".into()));
    }
    let d = records[0].flux.len();
    let horizon = T::from_count(cfg.steps()) * cfg.step;
    let nt = T::from_count(n);
    let mut mean_flux = DVector::zeros(d);
    let mut mean_flux_se = DVector::zeros(d);
    for j in 0..d {
        let v: Vec<T> = records.iter().map(|r| r.flux[j] / horizon).collect();
        mean_flux[j] = v.iter().copied().fold(T::zero(), |a, b| a + b) / nt;
        mean_flux_se[j] = (variance(&v) / nt).sqrt();
    }
    let cgf = cfg
        .tilts
        .iter()
        .enumerate()
        .map(|(ti, xi)| {
            let a: Vec<T> = records.iter().map(|r| xi.dot(&r.flux)).collect();
            let (lme, max_weight) = log_mean_exp(&a);
            let estimate = lme / horizon;
            let mut rng = stream_rng(cfg.seed, u64::MAX - ti as u64);
            let mut sample = vec![T::zero(); n];
            let boots: Vec<T> = (0..cfg.bootstrap)
                .map(|_| {
                    for s in sample.iter_mut() {
                        *s = a[rng.random_range(0..n)];
                    }
                    log_mean_exp(&sample).0 / horizon
                })
                .collect();
            let std_error = if boots.len() > 1 { variance(&boots).sqrt() } else { T::zero() };
            CgfEstimate {
                xi: xi.clone(),
                estimate,
                std_error,
                ci_low: estimate - std_error * T::lit(3.0),
                ci_high: estimate + std_error * T::lit(3.0),
                max_weight,
                reliable: max_weight <= T::lit(0.5),
            }
        })
        .collect();
    let conserved = if records.iter().all(|r| r.flux_2t.is_some()) {
        (0..geometry.lineality.ncols())
            .map(|l| {
                let dir = geometry.lineality.column(l).into_owned();
                let at_t: Vec<T> = records.iter().map(|r| dir.dot(&r.flux)).collect();
                let at_2t: Vec<T> = records.iter().map(|r| dir.dot(r.flux_2t.as_ref().unwrap())).collect();
                let (var_t, var_2t) = (variance(&at_t), variance(&at_2t));
                ConservedCheck { direction: dir, var_t, var_2t, ratio: var_2t / var_t }
            })
            .collect()
    } else {
        Vec::new()
    };
    let crosses: Vec<&CrossCheck<T>> = records.iter().filter_map(|r| r.cross.as_ref()).collect();
    let cross = (!crosses.is_empty()).then(|| {
        let c = T::from_count(crosses.len());
        let h = crosses.iter().map(|c| c.at_h).fold(T::zero(), |a, b| a + b) / c;
        let h2 = crosses.iter().map(|c| c.at_2h).fold(T::zero(), |a, b| a + b) / c;
        (h, h2, h / h2)
    });
    Ok(TrajectoryStats {
        n_traj: n,
        horizon,
        step: cfg.step,
        mean_flux,
        mean_flux_se,
        cgf,
        conserved,
        cross,
        records: if cfg.keep_records { records } else { Vec::new() },
    })
}
