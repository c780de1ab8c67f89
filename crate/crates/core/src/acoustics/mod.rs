//! Uncoupled elastic eigenmodes of a layered stack with Gaussian transverse
//! envelopes.

pub mod envelope;
pub mod fem;
pub mod mesh;
pub mod mode;

pub use envelope::{gaussian_envelope, Envelope, GaussianCavity, RadialWeight, TransverseFamily};
pub use fem::{
    assemble, mode_number, refinement_study, solve_eigen, FemMode, FemSystem, RefinedMode, RefinementStudy,
    StiffnessChoice,
};
pub use mesh::{build_mesh, Boundary, Layer, LayerStack, Mesh1D};
pub use mode::{synthesize_mode, AcousticMode, LongitudinalMode, Polarization};
