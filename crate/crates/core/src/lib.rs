//! Numerical calculus for integral functionals depending on families of
//! vector fields: pointwise matrix kernels of a coefficient field C(x),
//! integrand lifting/lowering between the X-frame and the Euclidean frame,
//! discrete anisotropic Sobolev spaces on grids, energy evaluation and
//! minimization, and Gamma-convergence desk experiments.

pub mod config;
pub mod error;
pub mod expr;
pub mod fieldio;
pub mod functionals;
pub mod gamma;
pub mod geometry;
pub mod grid;
pub mod integrands;
pub mod linalg;
pub mod sampling;
pub mod sobolev;
pub mod vector_fields;

pub use error::{Result, XfgError};
pub use expr::Expr;
pub use functionals::{
    evaluate_functional, jensen_mollification_check, measure_property_check, psi_p,
    quadrature_of_samples, FunctionalSpec,
};
pub use gamma::{
    gamma_min_study, homogenization_oracle_1d, minimize, pointwise_limit_functional_check,
    quadratic_limit_pushforward_check, EnergyProblem, GammaStudyReport, GammaStudyRow,
    MinimizeOpts, MinimizeResult, ReferenceRule, SequenceSpec, SolverPath, StudyProblem, Tether,
};
pub use geometry::BoxDomain;
pub use grid::{Grid, ScalarField, Subdomain, VectorSampleField};
pub use integrands::{
    class_bounds_check, compatibility_check, convexity_check, lift_to_euclidean, lower_to_x,
    quadratic_pushforward, representation_uniqueness_check, CheckReport, EuclideanIntegrand,
    Integrand, IntegrandKind, Witness,
};
pub use sampling::SampleSpec;
pub use sobolev::{
    euclidean_gradient, mollifier_approx_check, mollify, mollify_cells, mollify_with_info,
    sobolev_x_norm, sobolev_x_norm_on, x_affine_residual, x_gradient, Mollifier,
    MollifierApproxReport,
};
pub use vector_fields::{FamilyKind, HorizontalDecomposition, LicReport, VectorFieldFamily};
