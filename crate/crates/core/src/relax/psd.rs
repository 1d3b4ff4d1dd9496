//! Symmetric eigendecomposition helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute eigenvalue slack absorbed by certificates.
pub const EPS_EIG: f64 = 1e-9;

fn decompose(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let dim = m.nrows();
    SymmetricEigen::try_new(m, f64::EPSILON, 200 * dim.max(4))
        .ok_or(Error::EigenNonConvergence { dim })
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = m.nrows();
    if dim == 0 {
        return Ok(m.clone());
    }
    let eig = decompose(symmetrize(m))?;
    Ok(reassemble_positive(&eig.eigenvectors, &eig.eigenvalues))
}

/// `V diag(max(λ, 0)) V^T`, built from the positive part only.
pub(crate) fn reassemble_positive(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let dim = vectors.nrows();
    let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 0.0).collect();
    if keep.is_empty() {
        return DMatrix::zeros(dim, dim);
    }
    let mut b = DMatrix::<f64>::zeros(dim, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        let s = values[k].sqrt();
        for r in 0..dim {
            b[(r, c)] = vectors[(r, k)] * s;
        }
    }
    let mut out = &b * b.transpose();
    symmetrize_in_place(&mut out);
    out
}

/// Splits `m` into its positive and negative semidefinite parts `(P, N)`, `m = P - N`.
pub(crate) fn split_psd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = decompose(m.clone())?;
    let pos = reassemble_positive(&eig.eigenvectors, &eig.eigenvalues);
    let neg_values = eig.eigenvalues.map(|v| -v);
    let neg = reassemble_positive(&eig.eigenvectors, &neg_values);
    Ok((pos, neg))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let eig = decompose(symmetrize(m))?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    symmetrize_in_place(&mut out);
    out
}

pub(crate) fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        symmetrize(&(&a + a.transpose()))
    }

    #[test]
    fn clamps_negative_eigenvalue() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]));
        let p = project_psd(&m).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]));
        assert!((p - expected).norm() < 1e-12);
    }

    #[test]
    fn identity_on_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let psd = &a * a.transpose();
        let p = project_psd(&psd).unwrap();
        assert!((p - psd).norm() < 1e-9);
    }

    #[test]
    fn projection_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_symmetric(&mut rng, 6);
            let p = project_psd(&m).unwrap();
            assert!(min_eigenvalue(&p).unwrap() >= -EPS_EIG);
            let pp = project_psd(&p).unwrap();
            assert!((&pp - &p).norm() < 1e-9);
        }
    }

    // The projection P satisfies <M - P, Z - P> <= 0 for every PSD Z.
    #[test]
    fn variational_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_symmetric(&mut rng, 5);
        let p = project_psd(&m).unwrap();
        let resid = &m - &p;
        for _ in 0..500 {
            let a = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-2.0..2.0));
            let z = &a * a.transpose();
            let inner = resid.component_mul(&(&z - &p)).sum();
            assert!(inner <= 1e-9, "inner product {inner}");
        }
    }

    #[test]
    fn split_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_symmetric(&mut rng, 7);
        let (pos, neg) = split_psd(&m).unwrap();
        assert!((&pos - &neg - &m).norm() < 1e-9);
        assert!((&pos * &neg).norm() < 1e-9);
    }
}
