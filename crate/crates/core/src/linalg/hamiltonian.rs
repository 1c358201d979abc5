use nalgebra::{Complex, DMatrix, DVector};

use super::{cluster_eigenvalues, eigenvalues};
use crate::error::Result;
use crate::network::LinearModel;
use crate::scalar::Real;

/// Hamiltonian matrix `K_ξ = [[−A_ξ, B], [C_ξ, A_ξᵀ]]` and its spectrum.
#[derive(Debug, Clone)]
pub struct HamiltonianData<T: Real> {
    pub xi: DVector<T>,
    pub a_xi: DMatrix<T>,
    pub c_xi: DMatrix<T>,
    pub k: DMatrix<T>,
    pub eigenvalues: Vec<Complex<T>>,
    /// Eigenvalue clusters (within `1e-7`) with their multiplicities.
    pub clusters: Vec<(Complex<T>, usize)>,
}

/// Assembles `K_ξ` without computing its spectrum.
pub fn hamiltonian_matrix<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>) {
    let n2 = model.dim();
    let a_xi = model.a_xi(xi);
    let c_xi = model.c_xi(xi);
    let mut k = DMatrix::zeros(2 * n2, 2 * n2);
    k.view_mut((0, 0), (n2, n2)).copy_from(&(-&a_xi));
    k.view_mut((0, n2), (n2, n2)).copy_from(&model.b);
    k.view_mut((n2, 0), (n2, n2)).copy_from(&c_xi);
    k.view_mut((n2, n2), (n2, n2)).copy_from(&a_xi.transpose());
    (k, a_xi, c_xi)
}

/// `K_ξ` with its eigenvalues and multiplicities.
pub fn hamiltonian<T: Real>(model: &LinearModel<T>, xi: &DVector<T>) -> Result<HamiltonianData<T>> {
    let (k, a_xi, c_xi) = hamiltonian_matrix(model, xi);
    let eigenvalues = eigenvalues(&k)?;
    let clusters = cluster_eigenvalues(&eigenvalues, T::lit(1e-7));
    Ok(HamiltonianData { xi: xi.clone(), a_xi, c_xi, k, eigenvalues, clusters })
}

impl<T: Real> HamiltonianData<T> {
    /// `Σ |Re λ|` counted with multiplicity.
    pub fn abs_real_sum(&self) -> T {
        self.clusters.iter().fold(T::zero(), |acc, (z, m)| acc + z.re.abs() * T::from_count(*m))
    }

    /// Distance of the spectrum to the imaginary axis.
    pub fn axis_separation(&self) -> T {
        self.eigenvalues.iter().map(|z| z.re.abs()).fold(T::max_value().unwrap(), |a, b| a.min(b))
    }
}
