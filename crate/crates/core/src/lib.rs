//! Collisional invariants of discretized phonon pair collisions.
//!
//! The crate enumerates momentum- and energy-conserving four-phonon
//! collisions on a uniform Brillouin-zone grid, extracts the near-null space
//! of the resulting constraint system, and independently checks candidate
//! invariants with smooth test functions and moment matrices.

pub mod collision;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod io;
pub mod nullspace;
pub mod verifier;

pub use collision::{
    build_constraint_matrix, check_nonconserving_reduction, default_epsilon_e,
    default_reduction_epsilon_e, enumerate_3to1, enumerate_quadruples, residual_stats,
    CollisionQuadruple, ConstraintMatrix, EnumerationOptions, QuadrupleSet, ReductionStats,
    ResidualStats, TripleSet,
};
pub use dispersion::{degeneracy_profile, DegeneracyProfile, FourierDispersion, Model};
pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec};
pub use nullspace::{
    compare_to_affine_span, compute_invariant_basis, default_sigma_tol, invariant_dimension,
    BasisMethod, BasisOptions, InvariantBasis, SubspaceComparison,
};
pub use verifier::{
    check_moment_relation, check_scalar_c, compute_ab, compute_c, fit_affine, verify_candidate,
    verify_ibp_identity, Admissibility, AffineFit, BumpFamily, BumpTestFunction, FamilyOptions,
    IbpCheck, MomentMatrices, SmoothPhi, Verdict, VerificationReport,
};
