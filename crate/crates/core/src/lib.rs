//! Formation potential fields for 2D multi-robot systems.
//!
//! A single scalar field centred on a virtual agent pulls robots onto a ring
//! of fixed radius; a weak inter-robot repulsion spreads them into a regular
//! polygon. Moving the agent toward a goal, with obstacle repulsion acting on
//! both agent and robots, carries the formation through cluttered space.
//!
//! - [`fpf`]: the field itself, parameter validation, equilibrium radius and
//!   design maps.
//! - [`fields`]: repulsion, attraction and their compositions.
//! - [`dynamics`]: damped integration and convergence detection.
//! - [`scenario`]: seeding, assembly, navigation and metrics.
//! - [`io`]: scenario files, trajectory and design-map CSV, run summaries.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fields;
pub mod fpf;
pub mod io;
pub mod scenario;
pub mod vec2;

pub use error::{Error, Result};
pub use exec::Execution;
pub use fpf::FpfParams;
pub use vec2::Vec2;
