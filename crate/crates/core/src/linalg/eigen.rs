use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending
/// order; column `k` of `vectors` pairs with `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

pub fn symmetric_eigen(c: &DenseMatrix) -> Result<SymmetricEigen> {
    if !c.is_square() {
        return Err(Error::Shape(format!("eigendecomposition needs a square matrix, got {:?}", c.shape())));
    }
    let n = c.rows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Spectral norm of a symmetric matrix by power iteration (at most
/// `max_iters` steps, stopping on relative change below `rel_tol`).
pub fn spectral_norm_symmetric(c: &DenseMatrix, max_iters: usize, rel_tol: f64) -> f64 {
    let n = c.rows();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    let mut estimate = 0.0;
    for _ in 0..max_iters {
        let w = c.matvec(&v);
        let wn = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        let done = (wn - estimate).abs() <= rel_tol * wn;
        estimate = wn;
        v = w.into_iter().map(|a| a / wn).collect();
        if done {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let c = DenseMatrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]]).unwrap();
        let e = symmetric_eigen(&c).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let lam = DenseMatrix::from_diag(&e.values);
        let back = e.vectors.matmul(&lam).unwrap().matmul(&e.vectors.transpose()).unwrap();
        assert!(back.sub(&c).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn power_iteration_norm() {
        let c = DenseMatrix::from_diag(&[3.0, 2.0, 1.0]);
        assert!((spectral_norm_symmetric(&c, 100, 1e-10) - 3.0).abs() < 1e-6);
        assert_eq!(spectral_norm_symmetric(&DenseMatrix::zeros(3, 3), 100, 1e-10), 0.0);
    }
}
