//! Dense linear-algebra kernels.

pub mod expm;
pub mod hamiltonian;
pub mod lyapunov;
pub mod quadrature;
pub mod riccati;

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use expm::matrix_exponential;
pub use hamiltonian::{hamiltonian, hamiltonian_matrix, HamiltonianData};
pub use lyapunov::{solve_lyapunov, solve_sylvester_triangular, SteadyState};
pub use quadrature::{FrequencyQuadrature, Quadrature};
pub use riccati::{riccati_derivative, riccati_maximal, RiccatiOptions, RiccatiSolution};

const MAX_ITER: usize = 10_000;

/// `(m + mᵀ)/2`.
pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Eigen-decomposition of a symmetric matrix (input is symmetrized first).
pub fn sym_eigen<T: Real>(m: &DMatrix<T>) -> Result<SymmetricEigen<T, nalgebra::Dyn>> {
    SymmetricEigen::try_new(symmetrize(m), T::eps(), MAX_ITER)
        .ok_or(Error::EigenFailure("symmetric eigenproblem"))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig_sym<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(sym_eigen(m)?.eigenvalues.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b)))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eig_sym<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(sym_eigen(m)?.eigenvalues.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b)))
}

/// Principal square root of a symmetric positive semidefinite matrix.
///
/// Eigenvalues below zero (round-off) are clamped.
pub fn sqrtm_psd<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let eig = sym_eigen(m)?;
    let roots = eig.eigenvalues.map(|l| l.max(T::zero()).sqrt());
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * DMatrix::from_diagonal(&roots) * v.transpose())))
}

/// Spectral norm.
pub fn op_norm<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    match SVD::try_new(m.clone(), false, false, T::eps(), MAX_ITER) {
        Some(svd) => svd.singular_values.iter().copied().fold(T::zero(), |a, b| a.max(b)),
        None => m.norm(),
    }
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(m: &DMatrix<T>) -> Result<DVector<T>> {
    SVD::try_new(m.clone(), false, false, T::eps(), MAX_ITER)
        .map(|s| s.singular_values)
        .ok_or(Error::EigenFailure("singular value decomposition"))
}

/// Orthonormal basis (columns) of the null space of `m`, using the relative
/// singular-value threshold `rel_tol`.
pub fn null_space<T: Real>(m: &DMatrix<T>, rel_tol: T) -> Result<DMatrix<T>> {
    let cols = m.ncols();
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::try_new(padded, false, true, T::eps(), MAX_ITER)
        .ok_or(Error::EigenFailure("null space"))?;
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let thresh = rel_tol * smax.max(T::eps() * T::eps());
    let idx: Vec<usize> = (0..cols).filter(|&i| svd.singular_values[i] <= thresh).collect();
    let mut basis = DMatrix::zeros(cols, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    Ok(basis)
}

/// Modified Gram–Schmidt on `candidates`, skipping vectors whose residual
/// norm falls below `tol`. Stops after `max_vectors`.
pub fn gram_schmidt<T: Real>(
    candidates: &[DVector<T>],
    against: &DMatrix<T>,
    tol: T,
    max_vectors: usize,
) -> DMatrix<T> {
    let dim = against.nrows().max(candidates.first().map_or(0, |c| c.len()));
    let mut out: Vec<DVector<T>> = Vec::new();
    for c in candidates {
        if out.len() == max_vectors {
            break;
        }
        let mut v = c.clone();
        for _ in 0..2 {
            for j in 0..against.ncols() {
                let a = against.column(j);
                let proj = a.dot(&v);
                v -= a * proj;
            }
            for u in &out {
                let proj = u.dot(&v);
                v -= u * proj;
            }
        }
        let nv = v.norm();
        if nv > tol {
            out.push(v / nv);
        }
    }
    let mut m = DMatrix::zeros(dim, out.len());
    for (k, v) in out.iter().enumerate() {
        m.set_column(k, v);
    }
    m
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let schur =
        Schur::try_new(m.clone(), T::eps(), MAX_ITER).ok_or(Error::EigenFailure("real Schur form"))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(eigenvalues(m)?.iter().map(|z| z.re).fold(T::min_value().unwrap(), |a, b| a.max(b)))
}

/// Smallest eigenvalue of a Hermitian matrix, via its real symmetric embedding.
pub fn hermitian_min_eig<T: Real>(h: &DMatrix<Complex<T>>) -> Result<T> {
    min_eig_sym(&real_embedding(h))
}

/// Eigenvalues of a Hermitian matrix (each reported once, ascending).
pub fn hermitian_eigenvalues<T: Real>(h: &DMatrix<Complex<T>>) -> Result<Vec<T>> {
    let mut ev: Vec<T> = sym_eigen(&real_embedding(h))?.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ev.into_iter().step_by(2).collect())
}

/// `[[Re, −Im], [Im, Re]]`: a real symmetric matrix whose spectrum is that of the
/// Hermitian input with every eigenvalue doubled in multiplicity.
pub fn real_embedding<T: Real>(h: &DMatrix<Complex<T>>) -> DMatrix<T> {
    let n = h.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            m[(i, j)] = z.re;
            m[(i + n, j + n)] = z.re;
            m[(i, j + n)] = -z.im;
            m[(i + n, j)] = z.im;
        }
    }
    m
}

/// Promotes a real matrix to complex.
pub fn to_complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Conjugate transpose.
pub fn adjoint<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    m.transpose().map(|z| z.conj())
}

/// Determinant of a complex matrix via LU.
pub fn complex_det<T: Real>(m: &DMatrix<Complex<T>>) -> Complex<T> {
    m.clone().lu().determinant()
}

/// Groups eigenvalues closer than `tol` into clusters, returning each cluster's
/// mean and size.
pub fn cluster_eigenvalues<T: Real>(values: &[Complex<T>], tol: T) -> Vec<(Complex<T>, usize)> {
    let mut assigned = vec![false; values.len()];
    let mut clusters = Vec::new();
    for i in 0..values.len() {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        assigned[i] = true;
        let mut k = 0;
        while k < members.len() {
            let base = values[members[k]];
            for j in 0..values.len() {
                if !assigned[j] && (values[j] - base).modulus() <= tol {
                    assigned[j] = true;
                    members.push(j);
                }
            }
            k += 1;
        }
        let count = members.len();
        let sum = members.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &j| acc + values[j]);
        clusters.push((sum / Complex::new(T::from_count(count), T::zero()), count));
    }
    clusters
}

/// Matching distance between two multisets of complex numbers of equal size
/// (greedy nearest assignment; adequate for well-separated clusters).
pub fn multiset_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    if a.len() != b.len() {
        return T::max_value().unwrap();
    }
    let mut used = vec![false; b.len()];
    let mut worst = T::zero();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].re.partial_cmp(&a[j].re).unwrap_or(std::cmp::Ordering::Equal));
    for i in order {
        let mut best = None;
        let mut best_d = T::max_value().unwrap();
        for (j, z) in b.iter().enumerate() {
            if !used[j] {
                let d = (a[i] - *z).modulus();
                if d < best_d {
                    best_d = d;
                    best = Some(j);
                }
            }
        }
        if let Some(j) = best {
            used[j] = true;
            worst = worst.max(best_d);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_spd_squares_back() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let r = sqrtm_psd(&m).unwrap();
        assert!((&r * &r - &m).norm() < 1e-12);
        assert!(min_eig_sym(&r).unwrap() > 0.0);
    }

    #[test]
    fn null_space_detects_rank_deficiency() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let ns = null_space(&m, 1e-9).unwrap();
        assert_eq!(ns.ncols(), 1);
        assert!((&m * &ns).norm() < 1e-12);
    }

    #[test]
    fn hermitian_embedding_matches_spectrum() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[Complex::new(2.0, 0.0), Complex::new(0.0, 1.0), Complex::new(0.0, -1.0), Complex::new(2.0, 0.0)],
        );
        let ev = hermitian_eigenvalues(&h).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn clustering_counts_multiplicity() {
        let v = vec![Complex::new(1.0, 0.0), Complex::new(1.0 + 1e-9, 0.0), Complex::new(-2.0, 1.0)];
        let c = cluster_eigenvalues(&v, 1e-7);
        assert_eq!(c.len(), 2);
        assert_eq!(c.iter().map(|x| x.1).max(), Some(2));
    }
}
