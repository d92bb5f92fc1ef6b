pub mod angular;
pub mod atom;
pub mod bell;
pub mod cli;
pub mod config;
pub mod coupling;
pub mod entanglement;
pub mod error;
pub mod pair;
pub mod scan;
pub mod svd;
pub mod vector;

pub use angular::{clebsch_gordan, triangle_ok, wigner_3j, wigner_6j, CoupledValue, HalfInt, SignedSqrt};
pub use atom::{detuning, dipole_matrix_element, spherical_basis_vectors, validity_check, AtomSpec, Manifold, SublevelId};
pub use coupling::{effective_coupling, photon_modes, polarization_basis, single_photon_coupling, PhotonMode};
pub use entanglement::{
    concurrence_2x2, conditional_overlap, entanglement_entropy, is_factorized, schmidt, AmplitudeMatrix, SchmidtResult,
};
pub use error::{Error, Result};
pub use pair::{
    build_pair_state, photon_frequency, scattered_spinor, spectral_filter, CondensateSpinor, PairState, PumpConfig,
    ScatteredSpinor,
};
