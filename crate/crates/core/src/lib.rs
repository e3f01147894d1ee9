//! Geo-filtering, travel-related classification and spatio-temporal
//! analytics for archived geo-located tweets.

pub mod analytics;
pub mod cli;
mod binio;
pub mod classify;
pub mod corpus;
pub mod embed;
pub mod eval;
pub mod synth;
pub mod textprep;
pub mod vocab;
