use thiserror::Error;

use crate::metric_core::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} is not representable in the {space} space")]
    IncompatiblePoint { space: &'static str, point: Point },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "orbit growth exceeded the bound {bound:e} at iterate {index} (value {value:e}); \
         orbit closures are not bounded"
    )]
    UnboundedOrbit { index: i64, value: f64, bound: f64 },

    #[error("orbit closure is not compact: {0}")]
    NonCompact(String),

    #[error("orbit closure did not stabilize within {budget} iterates")]
    NotStabilized { budget: usize },

    #[error("unknown fixture `{name}`; available: {available}")]
    UnknownFixture { name: String, available: String },

    #[error(transparent)]
    Sysdef(#[from] crate::sysdef::SysdefError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
