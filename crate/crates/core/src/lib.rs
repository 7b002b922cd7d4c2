//! Possibilistic multi-target tracking with multi-sensor fusion.
//!
//! Presence functions are represented as Gaussian max-mixtures
//! ([`MaxMixture`]), which are closed under the sup-prediction, the
//! possibilistic Bayes update, powers and pointwise products. These
//! closures give lossless centralised fusion by splitting the prior into
//! powers and multiplying sensor posteriors, and decentralised fusion by
//! Metropolis-weighted gossip of powered presence functions.
//!
//! A probabilistic GM-PHD filter with covariance-intersection fusion
//! ([`phd`]) mirrors the pipeline for comparison.

pub mod error;
pub mod fusion;
pub mod gaussian;
pub mod linalg;
pub mod metrics;
pub mod mixture;
pub mod phd;
pub mod scenario;
pub mod tracker;

pub use error::{Error, Result};
pub use gaussian::{GaussianComponent, ObsTag};
pub use linalg::{Matrix, Vector};
pub use mixture::{fuse_product, MaxMixture, MergeDistance};
