//! Dense linear algebra on the Stiefel manifold.

mod eigen;
mod givens;
mod matrix;
mod planar;
mod stiefel;

pub use eigen::{spectral_norm_symmetric, symmetric_eigen, SymmetricEigen};
pub use givens::{compose_factors, jacobi_givens_decompose, DECOMPOSE_TOL};
pub use matrix::DenseMatrix;
pub(crate) use matrix::dot;
pub use planar::{
    apply_planar_update, kron_small, nearest_orthogonal_2x2, orthogonality_residual, rotate_rows, wrap_angle,
    Branch, Mat2, PlanarOrthogonal, WorkingSet,
};
pub use stiefel::{gram_residual, qr_orthonormalize, StiefelPoint, DEFAULT_TOL_ORTH};
