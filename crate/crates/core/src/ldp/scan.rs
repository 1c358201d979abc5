use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cgf::{section_boundary, sinf_feasibility_from, DomainGeometry};
use crate::error::{Error, Result};
use crate::linalg::riccati_maximal;
use crate::network::LinearModel;
use crate::scalar::Real;

/// Polar (dimension 2) or spherical (dimension 3) coordinates of a direction
/// in the section frame; angle `0` points along `Πϑ⁻¹`.
#[derive(Debug, Clone)]
pub struct FrameAngles<T: Real> {
    /// Azimuth in `(−π, π]`.
    pub azimuth: T,
    /// Polar angle from the third frame axis (dimension 3 only).
    pub inclination: Option<T>,
}

/// Quasi-uniform unit directions in the section frame: uniform angles for
/// dimension 2, a Fibonacci lattice on the sphere for dimension 3, and
/// seeded Gaussian directions otherwise.
pub fn section_directions<T: Real>(dim: usize, count: usize) -> Vec<DVector<T>> {
    let two_pi = T::two_pi();
    match dim {
        0 => Vec::new(),
        1 => vec![DVector::from_element(1, T::one()), DVector::from_element(1, -T::one())],
        2 => (0..count)
            .map(|k| {
                let a = two_pi * T::from_count(k) / T::from_count(count);
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            let golden = T::pi() * (T::lit(3.0) - T::lit(5.0).sqrt());
            (0..count)
                .map(|k| {
                    let z = T::one() - T::lit(2.0) * (T::from_count(k) + T::lit(0.5)) / T::from_count(count);
                    let rho = (T::one() - z * z).max(T::zero()).sqrt();
                    let a = golden * T::from_count(k);
                    DVector::from_vec(vec![rho * a.cos(), rho * a.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..count)
                .map(|_| {
                    let v = DVector::from_fn(dim, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
                    let n = v.norm();
                    v / n
                })
                .collect()
        }
    }
}

/// Angles of a frame-coordinate direction.
pub fn frame_angles<T: Real>(y: &DVector<T>) -> FrameAngles<T> {
    let azimuth = if y.len() >= 2 { y[1].atan2(y[0]) } else if y[0] >= T::zero() { T::zero() } else { T::pi() };
    let inclination = if y.len() >= 3 {
        let n = y.norm();
        Some((y[2] / n).max(-T::one()).min(T::one()).acos())
    } else {
        None
    };
    FrameAngles { azimuth, inclination }
}

/// One sampled point of `∂𝓢`.
#[derive(Debug, Clone)]
pub struct GapSample<T: Real> {
    pub index: usize,
    /// Unit direction in frame coordinates.
    pub direction: DVector<T>,
    pub angles: FrameAngles<T>,
    /// Distance from the section center.
    pub radius: T,
    pub xi: DVector<T>,
    pub lambda_minus: T,
    pub lambda_plus: T,
    /// Feasibility gap; `Λ₊ − Λ₋` when `dim 𝓛 = 1`.
    pub gap: T,
}

/// Spectral gap along the boundary of the section.
#[derive(Debug, Clone)]
pub struct GapScan<T: Real> {
    pub samples: Vec<GapSample<T>>,
    pub min_gap: T,
    pub condition_r: bool,
}

/// Samples `∂𝓢` in `n_dirs` directions from its center and evaluates `Λ±`.
pub fn condition_r_scan<T: Real>(model: &LinearModel<T>, geometry: &DomainGeometry<T>, n_dirs: usize) -> Result<GapScan<T>> {
    if n_dirs < 8 {
        return Err(Error::InvalidArgument(format!("at least 8 directions are required, got {n_dirs}")));
    }
    let k = geometry.section_dim();
    if k == 0 {
        return Err(Error::InvalidArgument("the section is a single point".into()));
    }
    let dirs = section_directions::<T>(k, n_dirs);
    let samples = dirs
        .into_par_iter()
        .enumerate()
        .map(|(index, y)| {
            let u = geometry.from_frame(&y);
            let exit = section_boundary(model, geometry, &u)?;
            let radius = exit.radius();
            let xi = &geometry.center + &u * exit.inner;
            let x_xi = riccati_maximal(model, &xi)?;
            let x_dual = riccati_maximal(model, &(&model.theta_inv - &xi))?;
            let f = sinf_feasibility_from(model, geometry, &x_xi, &x_dual)?;
            Ok(GapSample {
                index,
                angles: frame_angles(&y),
                direction: y,
                radius,
                xi,
                lambda_minus: f.lambda_minus,
                lambda_plus: f.lambda_plus,
                gap: f.gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_gap = samples.iter().map(|s| s.gap).fold(T::max_value().unwrap(), |a, b| a.min(b));
    Ok(GapScan { condition_r: min_gap > T::zero(), min_gap, samples })
}
