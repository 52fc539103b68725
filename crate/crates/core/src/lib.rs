//! Appraisal-theory workbench for emotion corpora.
//!
//! * [`corpus`]: load, mask and sample emotion corpora
//! * [`schema`]: appraisal schemas and the emotion → appraisal rules
//! * [`agreement`]: Cohen's κ, agreement deltas, distribution tables
//! * [`eval`]: precision/recall/F1 reports and repeated stratified k-fold
//! * [`models`]: text → appraisal, appraisal → emotion, pipeline and oracle ensemble

pub mod agreement;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod models;
pub mod schema;

pub use error::{Error, Result};
