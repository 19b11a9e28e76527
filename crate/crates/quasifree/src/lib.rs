//! Quasi-free thermal and ground states on Weyl algebras over
//! finite-dimensional one-particle structures: state evaluation, real-time
//! and Euclidean Green functions, the periodic Gaussian thermal process with
//! a reproducible sampler, a catalog of concrete systems, and a machine
//! verification suite for the structural identities tying them together.

pub mod checks;
pub mod error;
pub mod fourier;
pub mod gauss;
pub mod models;
pub mod process;
pub mod report;
pub mod sampler;
pub mod spectral;
pub mod thermal;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use spectral::{
    apply_function, inner, symplectic, GeneratorModel, MatrixModel, QuadratureModel, TestVector,
};
pub use thermal::{
    b_form, b_form_diag, green2_euclid, green2_real, multi_green_euclid, recover_generator,
    s_kernel, state_eval, thermal_b_matrix, Beta, EuclideanWord, ThermalContext,
};
