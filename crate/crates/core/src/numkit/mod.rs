//! Dense complex linear algebra: matrices, tensor structure, spectral tools.

mod linalg;
mod matrix;
mod shape;

pub use linalg::{
    eigh, eigvals_general_4x4, eigvals_hermitian, expm_scaled, lstsq, nearest_density_matrix,
    polar_unitary, project_simplex, singular_values, sqrt_psd, Eigh, HERMITIAN_TOL, TRACE_TOL,
    UNITARY_TOL,
};
pub use matrix::{c, inner, pauli, vec_norm, CMatrix, MatrixRecord, C64, I, ONE, ZERO};
pub use shape::{
    embed, kron, kron_all, kron_vec, partial_trace, permute_state, reduce_pure, SubsystemShape,
};
