//! weightlab: numerical exploration of maximal functions, weight constants
//! and reverse Hölder inequalities on grids in dimension 1 and 2.
//!
//! The crate is organised around a small set of geometric atoms (cubes,
//! dyadic cubes, grid cell sets), an oracle interface for weights, maximal
//! operators on sampled functions, tail functionals with certified
//! truncation error, and a battery of inequality checkers that report
//! pass/fail verdicts with worst-case witnesses.

pub mod error;
pub mod geometry;
pub mod maximal;
pub mod quad;
pub mod report;
pub mod sawyer;
pub mod tails;
pub mod util;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use geometry::{Cube, CubeFamily, DyadicCube, GridSet};
pub use maximal::GridFunction;
pub use tails::{ConstantEstimate, TailReport, TheoremConstants};
pub use verify::Verdict;
pub use weights::Weight;
