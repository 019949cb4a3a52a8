//! Factorization of an orthogonal matrix into `n(n−1)/2` embedded planar
//! factors.
//!
//! The sweep is a Givens QR that drives the matrix to the identity rather than
//! to a diagonal of signs: columns are cleared left to right with rotations
//! that also make each pivot nonnegative, and the final 2×2 trailing block is
//! undone in a single step. That last step is a reflection exactly when
//! `det(D) = −1`, so at most one reflection appears.

use super::{gram_residual, nearest_orthogonal_2x2, planar::rotate_rows, DenseMatrix, PlanarOrthogonal, WorkingSet};
use crate::error::{Error, Result};

/// Orthogonality tolerance accepted by [`jacobi_givens_decompose`].
pub const DECOMPOSE_TOL: f64 = 1e-8;

/// Decomposes an orthogonal `D` into factors `(B_k, V_k)` such that
/// `D = W_m ⋯ W_2 W_1`, where `W_k` applies `V_k` to rows `B_k` of the
/// identity. `factors[0]` is `W_1`, the first factor applied.
pub fn jacobi_givens_decompose(d: &DenseMatrix) -> Result<Vec<(WorkingSet, PlanarOrthogonal)>> {
    if !d.is_square() {
        return Err(Error::NotOrthogonal { residual: f64::INFINITY });
    }
    let residual = gram_residual(d);
    if residual > DECOMPOSE_TOL {
        return Err(Error::NotOrthogonal { residual });
    }
    let n = d.rows();
    let mut work = d.clone();
    // Row operations G_m ⋯ G_1 D = I.
    let mut sweep: Vec<(WorkingSet, PlanarOrthogonal)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for col in 0..n.saturating_sub(1) {
        for row in (col + 1)..n {
            let block = WorkingSet { i: col, j: row };
            let g = if col == n - 2 {
                // Trailing 2×2 block: undo it whole.
                let m = [[work[(col, col)], work[(col, row)]], [work[(row, col)], work[(row, row)]]];
                // argmin ⟨V, −Mᵀ⟩ is the orthogonal matrix nearest to Mᵀ.
                nearest_orthogonal_2x2(&[[-m[0][0], -m[1][0]], [-m[0][1], -m[1][1]]]).0
            } else {
                let (a, b) = (work[(col, col)], work[(row, col)]);
                let rho = a.hypot(b);
                if rho == 0.0 || b == 0.0 && a > 0.0 {
                    PlanarOrthogonal::IDENTITY
                } else {
                    PlanarOrthogonal::from_cos_sin(super::Branch::Rotation, a / rho, b / rho)
                }
            };
            rotate_rows(&mut work, block, &g.matrix());
            sweep.push((block, g));
        }
    }
    // D = G_1ᵀ G_2ᵀ ⋯ G_mᵀ, so W_1 = G_mᵀ, …, W_m = G_1ᵀ.
    Ok(sweep.into_iter().rev().map(|(b, g)| (b, g.transpose())).collect())
}

/// Multiplies the embedded factors back together: `W_m ⋯ W_1 · I_n`.
pub fn compose_factors(n: usize, factors: &[(WorkingSet, PlanarOrthogonal)]) -> DenseMatrix {
    let mut out = DenseMatrix::identity(n, n);
    for (block, v) in factors {
        rotate_rows(&mut out, *block, &v.matrix());
    }
    out
}
