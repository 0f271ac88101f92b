//! Incident duration prediction by feature fusion.
//!
//! Baseline incident-report features are fused with learned encodings of the
//! free-text incident description (a character-level LSTM severity encoder)
//! and of the 24-hour detector speed/flow series around the incident (a dense
//! autoencoder). The fused tables are evaluated with a from-scratch regressor
//! zoo under k-fold cross-validation.
//!
//! Module map:
//!
//! - [`ingest`]: incident and detector CSV parsing, synthetic datasets.
//! - [`vds`]: incident-to-station matching and the six 288-slot windows.
//! - [`nn`]: dense/LSTM layers with hand-derived backpropagation.
//! - [`encoders`]: the text severity encoder and the series autoencoder.
//! - [`regressors`]: tree, forest, boosting, kNN, OLS and linear SVR models.
//! - [`eval`]: metrics, folds, cross-validation, the scenario grid, Pareto fronts.
//! - [`explain`]: TF-IDF, truncated SVD, one-vs-rest GBDT and LIME word importance.

pub mod encoders;
pub mod error;
pub mod eval;
pub mod explain;
pub mod ingest;
pub mod nn;
pub mod plot;
pub mod regressors;
pub mod seed;
pub mod vds;

pub use error::{Error, Result};
