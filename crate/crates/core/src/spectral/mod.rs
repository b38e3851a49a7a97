//! Linearized operators about the Emden–Fowler orbits: indicial roots,
//! Floquet data, Jacobi fields, p-map blocks and spectral bands.

pub mod bands;
pub mod block;
pub mod indicial;
pub mod jacobi;
pub mod linearized;
pub mod monodromy;

pub use bands::{
    band_scan, ground_state_check, quasi_periodic_eigenvalues, BandScan, GroundStateCheck,
};
pub use block::{decompose_block, vector_spectrum, BlockDecomposition, VectorSpectrum};
pub use indicial::{indicial_roots_limit, IndicialSet, LimitCase};
pub use jacobi::{jacobi_field_check, JacobiResidual, JetSample};
pub use linearized::{companion_matrix, LinearizedCoefficients, Variant};
pub use monodromy::{monodromy, monodromy_shifted, MonodromyOptions, SpectralReport};
