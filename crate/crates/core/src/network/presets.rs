//! The example networks: a single oscillator, the lozenge, the triangular
//! network and the heat pump.
//!
//! Temperatures are given as ratios and normalized so that the mean inverse
//! reservoir temperature is one.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NetworkSpec, Reservoir};
use crate::error::Result;
use crate::linalg::min_eig_sym;

fn ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn reservoirs(at: &[usize], theta: &[f64]) -> Vec<Reservoir> {
    at.iter()
        .zip(theta)
        .map(|(&i, &t)| Reservoir { id: i.to_string(), index: 0, gamma: 1.0, theta: t })
        .collect()
}

/// One oscillator with `κ = γ = ϑ = 1`.
pub fn single_oscillator() -> NetworkSpec {
    NetworkSpec::new(ids(1), DMatrix::from_element(1, 1, 1.0), reservoirs(&[1], &[1.0])).expect("valid")
}

/// Lozenge: four oscillators, reservoirs on 1, 2, 3.
pub fn lozenge(ratios: &[f64]) -> Result<NetworkSpec> {
    let e = 1.0 / (2.0 * 2f64.sqrt());
    #[rustfmt::skip]
    let k2 = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, e,   e,
        0.0, 1.0, e,   e,
        e,   e,   1.0, 0.0,
        e,   e,   0.0, 1.0,
    ]);
    Ok(NetworkSpec::new(ids(4), k2, reservoirs(&[1, 2, 3], ratios))?.normalized())
}

/// Triangular network: six oscillators, reservoirs on 1, 3, 5.
pub fn triangular(ratios: &[f64]) -> Result<NetworkSpec> {
    let a = 1.0 / (2.0 * 2f64.sqrt());
    let b = 0.25;
    #[rustfmt::skip]
    let k2 = DMatrix::from_row_slice(6, 6, &[
        1.0, a,   0.0, 0.0, 0.0, a,
        a,   1.0, a,   b,   0.0, b,
        0.0, a,   1.0, a,   0.0, 0.0,
        0.0, b,   a,   1.0, a,   b,
        0.0, 0.0, 0.0, a,   1.0, a,
        a,   b,   0.0, b,   a,   1.0,
    ]);
    Ok(NetworkSpec::new(ids(6), k2, reservoirs(&[1, 3, 5], ratios))?.normalized())
}

/// Heat pump: reservoirs on 1–4, two internal oscillators 5 and 6.
pub fn heat_pump(ratios: &[f64]) -> Result<NetworkSpec> {
    let a = -40.0;
    let b = -20.0;
    let c = 1.0 - 2.0 * a - b;
    #[rustfmt::skip]
    let k2 = DMatrix::from_row_slice(6, 6, &[
        1.0 - a, 0.0,     0.0,     0.0,     a,   0.0,
        0.0,     1.0 - b, 0.0,     0.0,     b,   0.0,
        0.0,     0.0,     1.0 - a, 0.0,     0.0, a,
        0.0,     0.0,     0.0,     1.0 - b, 0.0, b,
        a,       b,       0.0,     0.0,     c,   a,
        0.0,     0.0,     a,       b,       a,   c,
    ]);
    Ok(NetworkSpec::new(ids(6), k2, reservoirs(&[1, 2, 3, 4], ratios))?.normalized())
}

/// Random connected network of `n` oscillators for property tests.
///
/// The stiffness matrix couples a path `1 – 2 – … – n` plus random extra
/// edges and is shifted to be positive definite; oscillator `1` always carries
/// a reservoir and every other oscillator does with probability one half.
/// Damping rates lie in `[0.5, 2]` and temperatures in `[0.5, 3]`, or all
/// temperatures equal one when `equilibrium` is set.
pub fn random_network(n: usize, seed: u64, equilibrium: bool) -> Result<NetworkSpec> {
    let n = n.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let w = if j + 1 == i { rng.random_range(0.2..0.6) } else if rng.random_bool(0.3) { rng.random_range(-0.3..0.3) } else { 0.0 };
            k2[(i, j)] = w;
            k2[(j, i)] = w;
        }
    }
    let lo = min_eig_sym(&k2)?;
    for i in 0..n {
        k2[(i, i)] = -lo + rng.random_range(0.3..1.5);
    }
    let mut at = vec![0];
    at.extend((1..n).filter(|_| rng.random_bool(0.5)));
    let boundary = at
        .iter()
        .map(|&i| Reservoir {
            id: (i + 1).to_string(),
            index: 0,
            gamma: rng.random_range(0.5..2.0),
            theta: if equilibrium { 1.0 } else { rng.random_range(0.5..3.0) },
        })
        .collect();
    NetworkSpec::new(ids(n), k2, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stiffness_matrices_are_spd() {
        for s in [
            lozenge(&[1.0, 1.0, 1.0]).unwrap(),
            triangular(&[1.0, 1.0, 1.0]).unwrap(),
            heat_pump(&[10.0, 3.6, 7.0, 6.8]).unwrap(),
        ] {
            assert!(min_eig_sym(&s.kappa_sq).unwrap() > 0.0);
        }
    }

    #[test]
    fn heat_pump_rows_sum_to_one() {
        let s = heat_pump(&[1.0; 4]).unwrap();
        for i in 0..6 {
            assert!((s.kappa_sq.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }
}
