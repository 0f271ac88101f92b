//! Feature encoders.
//!
//! Two networks turn raw incident context into short fixed-width vectors:
//! a character-level LSTM trained to predict severity from the description,
//! and a dense autoencoder over 288-slot traffic series. In both, the vector
//! handed to the regressors is the bottleneck layer's activation.

mod autoencoder;
mod cache;
mod sentiment;
mod text;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::vds::SeriesKind;

pub use autoencoder::{autoencode, autoencode_all, series_pool, train_autoencoder, AutoencoderReport, SeriesAutoencoder};
pub use cache::{read_encoded, write_encoded, EncodedCache};
pub use sentiment::{
    sentiment_encode, split_indices, train_sentiment_encoder, DataSplit, EpochLoss, SentimentEncoder,
    SentimentReport,
};
pub use text::{text_to_binary, CHAR_BITS, TEXT_LENGTH};

/// Bottleneck widths of the scenario grid.
pub const UNIT_GRID: [usize; 5] = [2, 4, 8, 12, 16];

/// Output head of the sentiment encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// One linear output regressing severity.
    Mse,
    /// Five logits under softmax cross-entropy; severities use slots 1-4.
    Ce,
}

impl FromStr for Head {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mse" => Ok(Head::Mse),
            "ce" => Ok(Head::Ce),
            other => Err(Error::Config(format!("unknown head `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub units: usize,
    pub activation: Activation,
    #[serde(default = "default_head")]
    pub head: Head,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Adam step size.
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Global gradient L2 norm cap applied before each step.
    #[serde(default = "default_clip")]
    pub max_grad_norm: f64,
}

fn default_head() -> Head {
    Head::Mse
}
fn default_epochs() -> usize {
    15
}
fn default_lr() -> f64 {
    0.01
}
fn default_batch() -> usize {
    8
}
fn default_clip() -> f64 {
    1.0
}

impl EncoderConfig {
    pub fn new(units: usize, activation: Activation) -> Self {
        Self {
            units,
            activation,
            head: Head::Mse,
            epochs: default_epochs(),
            seed: 0,
            learning_rate: default_lr(),
            batch_size: default_batch(),
            max_grad_norm: default_clip(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !UNIT_GRID.contains(&self.units) {
            return Err(Error::Config(format!("bottleneck units {} not in {UNIT_GRID:?}", self.units)));
        }
        if !Activation::BOTTLENECK.contains(&self.activation) {
            return Err(Error::Config(format!("activation {} not allowed in a bottleneck", self.activation)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) {
            return Err(Error::Config("learning rate and gradient norm cap must be positive".into()));
        }
        Ok(())
    }
}

/// Where an encoded vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    /// Sentiment encoder with the MSE head.
    LstmSent,
    /// Sentiment encoder with the cross-entropy head.
    LstmSentCe,
    Series(SeriesKind),
}

impl Source {
    /// The seven grid sources.
    pub const GRID: [Source; 7] = [
        Source::LstmSent,
        Source::Series(SeriesKind::Speed),
        Source::Series(SeriesKind::Flow),
        Source::Series(SeriesKind::Speed7),
        Source::Series(SeriesKind::Flow7),
        Source::Series(SeriesKind::Sd),
        Source::Series(SeriesKind::Fd),
    ];

    pub fn label(self) -> &'static str {
        match self {
            Source::LstmSent => "LSTM-sent",
            Source::LstmSentCe => "LSTM-sent-CE",
            Source::Series(k) => k.label(),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("LSTM-sent") {
            return Ok(Source::LstmSent);
        }
        if s.eq_ignore_ascii_case("LSTM-sent-CE") {
            return Ok(Source::LstmSentCe);
        }
        SeriesKind::ALL
            .iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .map(|k| Source::Series(*k))
            .ok_or_else(|| Error::Config(format!("unknown source `{s}`")))
    }
}

/// Bottleneck output for one incident.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedVector {
    pub incident_id: String,
    pub source: Source,
    pub units: usize,
    pub activation: Activation,
    pub values: Vec<f64>,
}

/// Whether `v` lies in the codomain of `act`.
pub fn in_codomain(v: f64, act: Activation) -> bool {
    match act {
        Activation::Relu => v >= 0.0,
        Activation::Elu => v > -1.0,
        Activation::Tanh => v > -1.0 && v < 1.0,
        Activation::Sigmoid => v > 0.0 && v < 1.0,
        Activation::Identity => v.is_finite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_labels_round_trip() {
        for s in Source::GRID.into_iter().chain([Source::LstmSentCe]) {
            assert_eq!(s.label().parse::<Source>().unwrap(), s);
        }
        assert!("Volume".parse::<Source>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig::new(12, Activation::Relu).validate().is_ok());
        assert!(EncoderConfig::new(3, Activation::Relu).validate().is_err());
        assert!(EncoderConfig::new(4, Activation::Identity).validate().is_err());
        let mut c = EncoderConfig::new(4, Activation::Tanh);
        c.epochs = 0;
        assert!(c.validate().is_err());
    }
}
