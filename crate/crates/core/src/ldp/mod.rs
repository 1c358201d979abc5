//! Rate function, fluctuation-relation diagnostics and Condition (R).

mod conserved;
mod rate;
mod scan;

pub use conserved::{conserved_direction, conserved_rate, entropy_production, ConservedDirection, EntropyProduction};
pub use rate::{feasibility_normal, fr_defect, phi_grid, rate_function, RateOptions, RateResult, RateSolver};
pub use scan::{condition_r_scan, frame_angles, section_directions, FrameAngles, GapSample, GapScan};
