//! Starting points.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::gen_randn;
use crate::error::{Error, Result};
use crate::linalg::{qr_orthonormalize, DenseMatrix, StiefelPoint};

fn check(n: usize, r: usize) -> Result<()> {
    if r == 0 || n < r {
        return Err(Error::Shape(format!("need n ≥ r ≥ 1, got n = {n}, r = {r}")));
    }
    Ok(())
}

/// The leading `n × r` block of the identity.
pub fn init_identity(n: usize, r: usize) -> Result<StiefelPoint> {
    check(n, r)?;
    StiefelPoint::identity(n, r)
}

/// Orthonormal factor of a seeded Gaussian matrix.
pub fn init_random_orthogonal(n: usize, r: usize, seed: u64) -> Result<StiefelPoint> {
    check(n, r)?;
    qr_orthonormalize(&gen_randn(n, r, seed))
}

/// Splits the rows into `r` random nonempty groups `G_k` and sets
/// `X(G_k, k) = 1/√|G_k|`.
pub fn init_nonneg_orthogonal(n: usize, r: usize, seed: u64) -> Result<StiefelPoint> {
    check(n, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut rng);
    let mut group = vec![0usize; n];
    for (k, &row) in rows.iter().enumerate() {
        group[row] = if k < r { k } else { rng.random_range(0..r) };
    }
    let mut sizes = vec![0usize; r];
    group.iter().for_each(|&g| sizes[g] += 1);
    let x = DenseMatrix::from_fn(n, r, |i, k| if group[i] == k { 1.0 / (sizes[k] as f64).sqrt() } else { 0.0 });
    StiefelPoint::from_matrix(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_examples() {
        let x = init_identity(3, 2).unwrap();
        assert_eq!(x.matrix().as_slice(), &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(x.gram_residual(), 0.0);
        assert_eq!(init_identity(4, 4).unwrap().matrix(), &DenseMatrix::identity(4, 4));
        assert!(init_identity(2, 3).is_err());
    }

    #[test]
    fn random_orthogonal_deterministic() {
        let a = init_random_orthogonal(20, 5, 1).unwrap();
        assert!(a.gram_residual() <= 1e-12);
        assert_eq!(a, init_random_orthogonal(20, 5, 1).unwrap());
        for s in 0..100 {
            let x = init_random_orthogonal(20, 5, 2 * s).unwrap();
            let y = init_random_orthogonal(20, 5, 2 * s + 1).unwrap();
            assert!(x.matrix().sub(y.matrix()).unwrap().frobenius_norm() > 0.1);
        }
    }

    #[test]
    fn nonneg_init_properties() {
        for seed in 0..50 {
            let x = init_nonneg_orthogonal(9, 4, seed).unwrap();
            assert!(x.matrix().min_entry() >= 0.0);
            assert!(x.gram_residual() <= 1e-14);
            for row in 0..9 {
                assert_eq!(x.matrix().row(row).iter().filter(|v| **v > 0.0).count(), 1);
            }
        }
        let x = init_nonneg_orthogonal(4, 4, 3).unwrap();
        assert!(x.matrix().as_slice().iter().all(|v| *v == 0.0 || *v == 1.0));
    }
}
