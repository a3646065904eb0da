//! Numerical laboratory for a non-autonomous thermoelastic system built on the
//! Lamé operator,
//!
//! ```text
//! u_tt - mu*Lap(u) - (lambda+mu)*grad(div u) + alpha(t)*grad(theta) + f(u) = 0
//! theta_t - kappa(t)*Lap(theta) + alpha(t)*div(u_t) = g(x, t)
//! ```
//!
//! on a box with zero Dirichlet boundary. The crate provides the discrete
//! calculus (inner products, Lamé operator, Poisson solves, Helmholtz-Hodge
//! splitting), an IMEX integrator realizing the two-parameter solution process,
//! the energy/Lyapunov diagnostic machinery with a fully explicit constant
//! ledger, and ensemble experiments for absorbing sets, contraction functionals
//! and uniform-attractor approximation.
//!
//! The examples directory is the quickest tour, one runnable program per
//! capability:
//!
//! ```text
//! cargo run --release --example energy_decay          # integration + dissipation
//! cargo run --release --example convergence_orders    # refinement order tables
//! cargo run --release --example constants_ledger      # the explicit constant ledger
//! cargo run --release --example helmholtz_split       # curl-free / div-free splitting
//! cargo run --release --example absorbing_set         # ensemble entering the ball
//! cargo run --release --example translation_identity  # process laws, bitwise
//! cargo run --release --example attractor_cloud       # decay toward the final cloud
//! cargo run --release --example contraction_pairs     # contraction functional ladder
//! cargo run --release --example assumption_report     # structural validators
//! ```
//!
//! The same experiments run headless through the `lamethermo` binary driven
//! by TOML scenarios; see `scenarios/benchmark-1d.toml`.

pub mod attractor;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod model;
pub mod operators;
pub mod scenario;
pub mod snapshot;
pub mod studies;

pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField, State, VectorField};
