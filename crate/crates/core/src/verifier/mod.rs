//! Independent verification of candidate invariants with smooth test functions.

mod bump;
mod family;
mod fit;
mod identity;
mod moments;
mod quadrature;

pub use bump::{BumpJet, BumpTestFunction};
pub use family::{BumpFamily, FamilyOptions};
pub use fit::{
    check_scalar_c, fit_affine, residual_tolerance, scalar_tolerance, verify_candidate, AffineFit,
    ScalarCheck, Verdict, VerificationReport, MIN_FAMILY_SIZE,
};
pub use identity::{verify_ibp_identity, IbpCheck, SmoothPhi};
pub use moments::{
    check_moment_relation, compute_ab, compute_c, Admissibility, MomentMatrices, MomentRelation,
    DEFAULT_KAPPA_MAX, DEFAULT_MARGIN,
};
