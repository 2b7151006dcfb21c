//! TDOA-space source localization and relaxed TDOA denoising.
//!
//! A set of `q = n(n + 1)/2` TDOAs measured by `n + 1` sensors is a point of
//! the TDOA space `R^q`. Noiseless measurements are confined to an
//! `n`-dimensional linear subspace; projecting noisy data onto it under the
//! Mahalanobis metric of the noise is a sufficient statistic for the source
//! position and never increases the noise covariance.
//!
//! Modules:
//! - [`geometry`]: sensor arrays, pair ordering, forward TDOA maps.
//! - [`subspace`]: the feasible subspace and the denoising projector.
//! - [`incomplete`]: denoising when some TDOAs were not measured.
//! - [`planar`]: closed-form inversion for three sensors in the plane.
//! - [`localize`]: LS, SRD-LS, GS and ML source estimators.
//! - [`noise`] and [`bounds`]: noise models, CRLB, covariance propagation.

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod incomplete;
pub mod linalg;
pub mod localize;
pub mod noise;
pub mod planar;
pub mod subspace;

pub use error::{Error, Result};
pub use geometry::{canonical_pairs, pair_count, pair_index, Pair, Point, SensorArray, TdoaVector};
pub use noise::{NoiseKind, NoiseModel, NoiseSampler, NoiseSpec};
pub use subspace::{ProjectionMethod, ProjectionOperator};
