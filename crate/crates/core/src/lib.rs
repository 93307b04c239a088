//! Mean curvature flow of spacelike cross-sections inside a null
//! hypersurface, used to locate marginally outer trapped surfaces (MOTS).
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`field`], [`calculus`]: discrete calculus on a 2-sphere grid.
//! * [`background`]: the sampled null hypersurface (analytic cones,
//!   Raychaudhuri propagation, tabulated input).
//! * [`gauge`]: rescalings of the null generator, the gauge inequality and
//!   the energy condition.
//! * [`flow`]: graph expansion, the explicit stepper, monitors and the
//!   driver that runs a cross-section to a MOTS.
//! * [`foliation`]: mollified gluing of the flow history to the background
//!   foliation and its verification.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod background;
pub mod calculus;
pub mod error;
pub mod field;
pub mod flow;
pub mod foliation;
pub mod gauge;
pub mod grid;
pub mod numerics;
mod par;
pub mod scenarios;
pub mod snapshot;

pub use background::{BackgroundFoliation, LambdaGrid, Slice};
pub use error::{Error, Result};
pub use field::{CovectorField, MetricField, ScalarField, SymTensor2Field};
pub use grid::{GridMode, SphereGrid};
pub use snapshot::FieldSnapshot;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
