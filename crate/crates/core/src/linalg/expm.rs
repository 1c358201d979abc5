//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1<T: Real>(m: &DMatrix<T>) -> T {
    (0..m.ncols())
        .map(|j| m.column(j).iter().fold(T::zero(), |acc, x| acc + x.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// `exp(t·A)`.
pub fn matrix_exponential<T: Real>(a: &DMatrix<T>, t: T) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let at = a * t;
    let nrm = norm1(&at);
    if !nrm.is_finite() {
        return Err(Error::InvalidArgument("non-finite matrix in exponential".into()));
    }
    let ident = DMatrix::<T>::identity(n, n);
    if nrm == T::zero() {
        return Ok(ident);
    }
    let ratio = nrm.as_f64() / THETA13;
    let s = if ratio > 1.0 { ratio.log2().ceil() as i32 } else { 0 };
    if s > 1000 {
        return Err(Error::InvalidArgument("matrix exponential overflow".into()));
    }
    let scaled = at * T::lit(2f64.powi(-s));
    let b: Vec<T> = PADE13.iter().map(|&c| T::lit(c)).collect();
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::Singular("Padé denominator"))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
        let n = a.nrows();
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * a * (t / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn zero_and_identity() {
        let a = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(matrix_exponential(&a, 1.0).unwrap(), DMatrix::identity(3, 3));
        let b = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, 0.0]);
        assert_eq!(matrix_exponential(&b, 0.0).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn single_oscillator_matches_series() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, 0.0]);
        let e = matrix_exponential(&a, 0.1).unwrap();
        assert!((e - taylor(&a, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn rotation_after_squaring() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let t: f64 = 30.0;
        let e = matrix_exponential(&a, t).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!((e - expect).norm() < 1e-12);
    }
}
