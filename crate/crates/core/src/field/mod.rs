//! Coefficient fields, index regions and the weight field `b_{n,r,s}`.

mod aggregates;
mod build;
mod coeffs;
mod fft;
mod region;
mod table;

pub use aggregates::{aggregates, rho_bounds, PowerSum, WeightAggregates};
pub use build::{build_weights, build_weights_with, BuildOptions, WeightMethod};
#[allow(unused_imports)]
pub(crate) use build::build_weighted;
pub use coeffs::{AngularProfile, CoefficientField, Decay};
pub use region::{IndexRegion, Rect};
pub use table::{WeightTable, Window};
pub(crate) use table::csv_err as csv_error;
