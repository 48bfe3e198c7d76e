//! Worst-case analysis of the coordinate-wise median for facility location
//! in L_q spaces.
//!
//! The crate computes the dimension-independent approximation bound
//! `UB(q)`, builds instance families that approach it, evaluates the
//! empirical ratio of the median against a numerical optimum, and checks
//! the consistency/robustness guarantees of the prediction-augmented median.

pub mod bounds;
pub mod error;
pub mod instances;
pub mod mechanisms;
pub mod norms;
pub mod optfac;
pub mod roots;
pub mod verify;

pub use error::{Error, Result};
pub use mechanisms::{
    cmp_median, coordinate_median, deviation_cost_delta, CoordinateMedian, Instance, MeanMechanism, Mechanism, Meta,
    PredictionMedian, TieBreak,
};
pub use norms::{lq_dist, lq_norm, social_cost, NormOrder, Point};
