//! Normal tail utilities, deviation predictors and the Fuk-Nagaev envelope.

mod fuk_nagaev;
pub mod normal;
mod predict;

pub use fuk_nagaev::{fuk_nagaev_bound, FukNagaev};
pub use normal::{normal_cdf, normal_pdf, normal_sf, normal_tail_bounds};
pub use predict::{
    c_t, large_prediction, moderate_prediction, uniform_prediction, validity_ranges, DeviationPrediction, Dominant,
    Regime, ValidityRanges, DEFAULT_CT_MARGIN,
};
