//! Linear control systems on the special Euclidean group SE(2): classification,
//! closed-form flows, reachable and control sets, and periodic-orbit planning.

pub mod error;
pub mod flow;
pub mod geometry;
pub mod planner;
pub mod reachability;
pub mod se2;
pub mod verify;
pub mod system;

pub use error::{Error, Result};
pub use se2::{Angle, GroupElement, Mat2, Vec2};
pub use system::{
    classify, larc, reduce, BoundaryStructure, Case, ClassificationReport, Interval, ReducedSpec,
    SystemSpec,
};
