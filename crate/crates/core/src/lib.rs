//! Hidden Markov measures as images of Markov measures under one-block
//! factor maps, and the induced potential `ψ` on the factor shift.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod gibbs;
pub mod markov;
pub mod model;
pub mod potential;
pub mod projection;
pub mod projective;
pub mod tmc;

pub use error::{Error, Result};
pub use gibbs::{bgi_sweep, invariance_suite, BgiReport, InvarianceReport};
pub use markov::{derive_potential, MarkovModel, RangeTwoPotential};
pub use model::{expand_example, load_model, ExampleId, ModelFile};
pub use potential::{
    evaluate, periodic_potential, uniform_constants, EvalMode, PerronData, PointSpec,
    PotentialEvaluation, UniformConstants,
};
pub use projection::{
    build_factor_system, check_h1, check_h2, check_topological_markov, log_nu_cylinder,
    nu_cylinder, FactorSystem, FiberCocycle, H1Report, H2Report, MarkovVerdict, MatrixCocycle,
    Projection,
};
pub use projective::{contraction_coefficient, projective_distance, SimplexPoint};
pub use tmc::{Alphabet, PeriodicPoint, Tmc, Word};
