// parameter checks are written as `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dst;
pub mod error;
pub mod experiments;
pub mod field;
pub mod io;
pub mod lattice;
pub mod renorm;
pub mod rng;
pub mod topology;
pub mod walk;

pub use error::{Error, Result};
pub use field::{FieldSample, GibbsMarkovSplit};
pub use lattice::{BoxRegion, RenormIndex, Site, SiteSet};
pub use walk::KilledGreenOperator;
