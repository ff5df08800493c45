//! Moderate and large deviation toolkit for linear random fields
//! `X_{j,k} = sum a_{r,s} xi_{j-r,k-s}` on the integer lattice.
//!
//! The crate turns a coefficient family and an index region into the weight
//! field `b_{n,r,s}` of the partial sum `S_n = sum b_{n,r,s} xi_{-r,-s}`,
//! evaluates closed-form tail predictions for `P(S_n >= x sigma_n)` together
//! with their validity ranges, and checks them against Monte Carlo and exact
//! enumeration.
//!
//! Module map:
//!
//! * [`field`]: coefficient fields, index regions, weight tables and their
//!   power-sum aggregates.
//! * [`innovations`]: standardized innovation laws, samplers, truncated
//!   moments and slowly varying function checks.
//! * [`mc`]: parallel, worker-count independent Monte Carlo and the
//!   enumeration oracle.
//! * [`theory`]: normal tail utilities, deviation predictors and the
//!   Fuk-Nagaev envelope.
//! * [`apps`]: kernel smoother weights, LIL envelopes and Davis-Gut series.
//! * [`cli`]: JSON-configured experiment runner and report writer.

pub mod apps;
pub mod cli;
pub mod error;
pub mod field;
pub mod innovations;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod slowvar;
pub mod theory;

pub use error::{Error, Result};
pub use field::{
    aggregates, build_weights, build_weights_with, rho_bounds, AngularProfile, BuildOptions,
    CoefficientField, Decay, IndexRegion, Rect, WeightAggregates, WeightMethod, WeightTable,
};
pub use innovations::{InnovationKind, InnovationModel, TailDescriptor};
pub use mc::{enumerate_tail, lil_replication, simulate_tail, SimOptions, TailEstimate};
pub use rng::RngStream;
pub use slowvar::SlowlyVaryingFn;
pub use theory::{
    fuk_nagaev_bound, large_prediction, moderate_prediction, normal_cdf, normal_sf,
    normal_tail_bounds, uniform_prediction, validity_ranges, DeviationPrediction, Regime,
};
