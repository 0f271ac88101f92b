//! Dense and LSTM layers with hand-derived gradients, losses and optimizers.

mod activation;
mod dense;
mod loss;
mod lstm;
mod matrix;
mod optim;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vds::Normalization;

pub use activation::{activate, activate_grad, sigmoid, Activation};
pub use dense::{DenseForward, DenseGrads, DenseLayer};
pub use loss::{mse, softmax, softmax_ce};
pub use lstm::{LstmCache, LstmGrads, LstmParams};
pub use matrix::Dense2D;
pub use optim::{OptimizerKind, OptimizerState};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Layer {
    Dense(DenseLayer),
    Lstm(LstmParams),
}

/// On-disk network: ordered layers plus whatever the owner needs to
/// reproduce inference (config echo, normalization constants).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub format_version: u32,
    pub model: String,
    pub config: serde_json::Value,
    pub layers: Vec<Layer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
}

impl NetworkFile {
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let file: NetworkFile = serde_json::from_reader(reader)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion(file.format_version));
        }
        Ok(file)
    }
}
