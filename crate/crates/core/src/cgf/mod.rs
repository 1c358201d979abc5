//! The limiting cumulant generating function `g`, its domain and geometry.

mod domain;
mod gap;
mod response;
mod value;

pub use domain::{domain_margin, domain_separation, lineality_space, omega_cutoff, section_boundary, spectral_domain_test, DomainGeometry, DomainMargin, RayExit};
pub use gap::{in_sinf, sinf_feasibility, sinf_feasibility_from, SinfFeasibility};
pub use response::{e_from_response, e_matrix, e_matrix_from_lift, response, zeta, ResponseGrid};
pub use value::{
    g_from_riccati, g_gradient, g_gradient_integral, g_hessian, g_hessian_quadform, g_hessian_riccati, g_integral, g_riccati, g_spectral, g_value, gap_matrix,
    gradient_from_inverse_gap, in_dinf, inverse_covariance, lambda_pm, lambda_pm_from, CgfResult, Gradient, Method, ROUTE_TOLERANCE,
};
