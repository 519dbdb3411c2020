//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} not supported (only 1 and 2)")]
    BadDimension(usize),

    #[error("cube half-side must be positive, got {0}")]
    BadHalfSide(f64),

    #[error("enumeration depth {depth} exceeds the configured maximum {max}")]
    DepthOverMax { depth: u32, max: u32 },

    #[error(
        "gap band [{lo}, {hi}] unachievable at grid resolution: \
         dyadic cell level={level} index=({ix},{iy}) achieves ratio {ratio}"
    )]
    GapBandUnachievable {
        lo: f64,
        hi: f64,
        level: u32,
        ix: u64,
        iy: u64,
        ratio: f64,
    },

    #[error("decomposition level {lambda} lies below the root average {root_avg}")]
    LevelBelowRootAverage { lambda: f64, root_avg: f64 },

    #[error("infinite C_p-tail: power exponent {exponent} >= n(p-1) = {threshold}")]
    DivergentTail { exponent: f64, threshold: f64 },

    #[error("tail cap of {cap} terms reached before tolerance {tol} (remainder bound {remainder})")]
    TailCapExceeded { cap: u32, tol: f64, remainder: f64 },

    #[error("unknown gallery weight `{0}`; valid names: constant, power_eps, ap_times_bump, vanishing_patch")]
    UnknownGallery(String),

    #[error("level range {given_lo}..={given_hi} does not cover required levels {need_lo}..={need_hi}")]
    LevelRangeTooSmall {
        given_lo: i32,
        given_hi: i32,
        need_lo: i32,
        need_hi: i32,
    },

    #[error("every cube in the family carries zero mass")]
    AllCubesZeroMass,

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("spec parse error: {0}")]
    Spec(#[from] serde_json::Error),
}
