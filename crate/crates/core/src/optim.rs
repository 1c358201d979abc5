//! Small derivative-free one- and few-dimensional optimizers and root finders.

use crate::error::{Error, Result};
use crate::scalar::Real;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section_min<T: Real, F>(mut f: F, mut a: T, mut b: T, tol: T, max_iter: usize) -> Result<(T, T)>
where
    F: FnMut(T) -> Result<T>,
{
    let r = T::lit(INV_PHI);
    let mut c = b - (b - a) * r;
    let mut d = a + (b - a) * r;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * r;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * r;
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Root of `f` in `[lo, hi]` given `f(lo) > 0 ≥ f(hi)` (or the reverse sign
/// pattern), by the Illinois variant of regula falsi with a bisection
/// safeguard. Returns the final bracket `(inside, outside)` where `inside`
/// keeps the sign of `f(lo)`.
pub fn bracketed_root<T: Real, F>(mut f: F, mut lo: T, mut hi: T, mut flo: T, mut fhi: T, tol: T) -> Result<(T, T)>
where
    F: FnMut(T) -> Result<T>,
{
    if flo.is_sign_positive() == fhi.is_sign_positive() && fhi != T::zero() {
        return Err(Error::Bracket("root"));
    }
    let mut side = 0i8;
    let mut width = (hi - lo).abs();
    for it in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        let inside = (x - lo) * (x - hi) < T::zero();
        if !inside || !x.is_finite() || it % 3 == 2 && (hi - lo).abs() > T::lit(0.5) * width {
            x = (lo + hi) * T::lit(0.5);
        }
        if it % 3 == 2 {
            width = (hi - lo).abs();
        }
        let fx = f(x)?;
        if fx.is_sign_positive() == flo.is_sign_positive() && fx != T::zero() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= T::lit(0.5);
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= T::lit(0.5);
            }
            side = 1;
        }
    }
    Ok((lo, hi))
}

/// Maximizes a concave function of one variable starting from `x0` with
/// initial step `step`, by bracket expansion followed by golden section.
pub fn maximize_concave<T: Real, F>(mut f: F, x0: T, step: T, tol: T) -> Result<(T, T)>
where
    F: FnMut(T) -> Result<T>,
{
    let f0 = f(x0)?;
    let fp = f(x0 + step)?;
    let (mut a, mut b, dir) = if fp > f0 { (x0, x0 + step, T::one()) } else { (x0 - step, x0 + step, -T::one()) };
    if dir > T::zero() {
        let mut h = step;
        let mut fb = fp;
        for _ in 0..200 {
            h *= T::lit(2.0);
            let x = b + h;
            let fx = f(x)?;
            if fx <= fb {
                b = x;
                break;
            }
            a = b - h * T::lit(0.5);
            b = x;
            fb = fx;
        }
    } else {
        let fm = f(x0 - step)?;
        if fm > f0 {
            let mut h = step;
            let mut fa = fm;
            b = x0;
            a = x0 - step;
            for _ in 0..200 {
                h *= T::lit(2.0);
                let x = a - h;
                let fx = f(x)?;
                if fx <= fa {
                    a = x;
                    break;
                }
                b = a + h * T::lit(0.5);
                a = x;
                fa = fx;
            }
        }
    }
    let (x, v) = golden_section_min(|x| f(x).map(|y| -y), a, b, tol, 200)?;
    Ok((x, -v))
}

/// Nelder–Mead minimization in `ℝ^k`.
pub fn nelder_mead<T: Real, F>(mut f: F, x0: &[T], step: T, tol: T, max_iter: usize) -> Result<(Vec<T>, T)>
where
    F: FnMut(&[T]) -> Result<T>,
{
    let k = x0.len();
    let mut pts: Vec<Vec<T>> = vec![x0.to_vec()];
    for i in 0..k {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<T> = pts.iter().map(|p| f(p)).collect::<Result<_>>()?;
    let half = T::lit(0.5);
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=k).collect();
        order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
            .fold(T::zero(), |a, b| a.max(b));
        if spread <= tol {
            break;
        }
        let centroid: Vec<T> = (0..k).map(|i| pts[..k].iter().fold(T::zero(), |s, p| s + p[i]) / T::from_count(k)).collect();
        let along = |t: T| -> Vec<T> { (0..k).map(|i| centroid[i] + (pts[k][i] - centroid[i]) * t).collect() };
        let xr = along(-T::one());
        let fr = f(&xr)?;
        if fr < vals[0] {
            let xe = along(-T::lit(2.0));
            let fe = f(&xe)?;
            if fe < fr {
                pts[k] = xe;
                vals[k] = fe;
            } else {
                pts[k] = xr;
                vals[k] = fr;
            }
        } else if fr < vals[k - 1] {
            pts[k] = xr;
            vals[k] = fr;
        } else {
            let xc = if fr < vals[k] { along(-half) } else { along(half) };
            let fc = f(&xc)?;
            if fc < vals[k].min(fr) {
                pts[k] = xc;
                vals[k] = fc;
            } else {
                for j in 1..=k {
                    let p: Vec<T> = (0..k).map(|i| pts[0][i] + (pts[j][i] - pts[0][i]) * half).collect();
                    vals[j] = f(&p)?;
                    pts[j] = p;
                }
            }
        }
    }
    let best = (0..=k).fold(0, |b, i| if vals[i] < vals[b] { i } else { b });
    Ok((pts[best].clone(), vals[best]))
}
