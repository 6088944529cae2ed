//! Monte Carlo and discrete-harmonic estimation of planar Brownian
//! intersection quantities.
//!
//! Paths live on the cylinder: a planar point `z = exp(u + iθ)` is stored as
//! its log-radius `u` and unwrapped angle `θ`. The circle `C_r` of radius
//! `e^r` is the line `u = r`, annuli are horizontal strips, and winding about
//! the origin is read directly off the unwrapped angle.
//!
//! The crate is organised bottom-up:
//!
//! * [`path_sampler`] draws full paths, Bessel-3 upcrossings and conditioned
//!   extensions from a deterministic [`rng::RandomSeed`].
//! * [`geometry`] rasterizes paths onto a log-polar [`geometry::OccupancyGrid`]
//!   and answers intersection, loop and disconnection questions.
//! * [`extremal`] solves the discrete Dirichlet problem on path domains to get
//!   π-extremal distances, plus excursion-mass and lemma checks.
//! * [`estimators`] assembles configurations into `b_r`, `a_r`, disconnection
//!   probabilities, niceness classifiers and conditional ratios.
//! * [`exponents`] holds the closed-form exponent values and decay fits.
//! * [`experiment`] is the config-driven runner behind the `bxi` binary.

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod exponents;
pub mod extremal;
pub mod geometry;
pub mod path_sampler;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
