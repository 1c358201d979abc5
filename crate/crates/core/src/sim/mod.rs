//! Monte Carlo simulation of the network and empirical flux statistics.

mod estimate;
mod flux;
mod stepper;

pub use estimate::{
    default_horizon, default_step, empirical_cgf, log_mean_exp, simulate, CgfEstimate, ConservedCheck, CrossCheck, FluxRecord, SimConfig,
    TrajectoryStats,
};
pub use flux::{accumulate_flux, FluxAccumulator, FluxPlan, LangevinWork};
pub use stepper::{propagate, psd_factor, sample_stationary, OuStep};
