//! Numerical detection of compact almost periodicity for homeomorphisms of
//! metric spaces, with certificates and replayable counter-witnesses.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod almost_period;
pub mod compactify;
pub mod consistency;
pub mod decomposition;
pub mod dynamics;
pub mod error;
pub mod group_closure;
pub mod invariant_metric;
pub mod metric_core;
pub mod sysdef;

pub use almost_period::{Certificate, Status, Verdict, Witness};
pub use dynamics::System;
pub use error::{Error, Result};
pub use metric_core::{FiniteCompactum, Point, Space};
