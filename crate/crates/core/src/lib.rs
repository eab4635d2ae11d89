//! Collision operators for mixtures of polyatomic gases whose molecules carry
//! a discrete internal energy variable.
//!
//! The crate evaluates the nonlinear collision operator, assembles the
//! linearized operator `L = Λ − K` on a truncated velocity grid, and checks
//! its structural properties: conservation, self-adjointness, the null space
//! spanned by the collision invariants, and the collision-frequency bounds.
//! Independent Monte Carlo estimators cross-check every quadrature.

pub mod cross_sections;
pub mod grid;
pub mod kinematics;
pub mod linearized_operator;
pub mod mc_oracle;
pub mod mixture_model;
pub mod nonlinear_collision;
pub mod quadrature;
pub mod spectral_analysis;

/// Velocity vectors throughout the crate.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use cross_sections::CrossSectionModel;
pub use grid::VelocityGrid;
pub use mixture_model::{CollisionChannel, EquilibriumParams, Mixture, ModelError, Species};
