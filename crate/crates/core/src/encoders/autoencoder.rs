//! Dense hourglass autoencoder over 288-slot series.

use serde::{Deserialize, Serialize};

use super::{EncodedVector, EncoderConfig, Source};
use crate::error::{Error, Result};
use crate::ingest::SLOTS_PER_DAY;
use crate::nn::{mse, Activation, Dense2D, DenseLayer, Layer, NetworkFile, OptimizerState, FORMAT_VERSION};
use crate::seed;
use crate::vds::{DaySeries288, MatchedIncident, SeriesBlock, SeriesKind};

pub const HIDDEN_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesAutoencoder {
    pub config: EncoderConfig,
    pub enc1: DenseLayer,
    pub bottleneck: DenseLayer,
    pub dec1: DenseLayer,
    pub out: DenseLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderReport {
    /// Mean reconstruction MSE per epoch.
    pub epoch_loss: Vec<f64>,
    pub n_series: usize,
}

/// Every channel of every block, in block order then `SeriesKind::ALL` order.
pub fn series_pool<'a>(blocks: impl IntoIterator<Item = &'a SeriesBlock>) -> Vec<Vec<f64>> {
    blocks
        .into_iter()
        .flat_map(|b| SeriesKind::ALL.iter().map(move |&k| b.get(k).values().to_vec()))
        .collect()
}

impl SeriesAutoencoder {
    fn init(config: &EncoderConfig, rng: &mut seed::Rng) -> Self {
        Self {
            config: config.clone(),
            enc1: DenseLayer::init(SLOTS_PER_DAY, HIDDEN_WIDTH, Activation::Relu, rng),
            bottleneck: DenseLayer::init(HIDDEN_WIDTH, config.units, config.activation, rng),
            dec1: DenseLayer::init(config.units, HIDDEN_WIDTH, Activation::Relu, rng),
            out: DenseLayer::init(HIDDEN_WIDTH, SLOTS_PER_DAY, Activation::Identity, rng),
        }
    }

    /// Bottleneck activations for one series.
    pub fn encode(&self, series: &[f64]) -> Result<Vec<f64>> {
        check_len(series)?;
        self.bottleneck.apply(&self.enc1.apply(series)?)
    }

    pub fn reconstruct(&self, series: &[f64]) -> Result<Vec<f64>> {
        let code = self.encode(series)?;
        self.out.apply(&self.dec1.apply(&code)?)
    }

    /// Mean reconstruction MSE over a set of series.
    pub fn reconstruction_mse(&self, pool: &[Vec<f64>]) -> Result<f64> {
        if pool.is_empty() {
            return Ok(0.0);
        }
        let x = Dense2D::from_rows(pool)?;
        let h1 = self.enc1.forward(&x)?;
        let z = self.bottleneck.forward(&h1.out)?;
        let h2 = self.dec1.forward(&z.out)?;
        let y = self.out.forward(&h2.out)?;
        Ok(mse(&y.out, &x)?.0)
    }

    fn train_batch(&mut self, x: &Dense2D, opt: &mut OptimizerState) -> Result<f64> {
        let h1 = self.enc1.forward(x)?;
        let z = self.bottleneck.forward(&h1.out)?;
        let h2 = self.dec1.forward(&z.out)?;
        let y = self.out.forward(&h2.out)?;
        let (loss, grad) = mse(&y.out, x)?;
        let (g, g_out) = self.out.backward(&h2.out, &y.pre, &grad)?;
        let (g, g_dec1) = self.dec1.backward(&z.out, &h2.pre, &g)?;
        let (g, g_bottle) = self.bottleneck.backward(&h1.out, &z.pre, &g)?;
        let (_, g_enc1) = self.enc1.backward(x, &h1.pre, &g)?;

        let [a, b] = self.enc1.params_mut();
        let [c, d] = self.bottleneck.params_mut();
        let [e, f] = self.dec1.params_mut();
        let [g_w, g_b] = self.out.params_mut();
        let mut params: Vec<&mut [f64]> = vec![a, b, c, d, e, f, g_w, g_b];
        let grads: Vec<&[f64]> = g_enc1
            .slices()
            .into_iter()
            .chain(g_bottle.slices())
            .chain(g_dec1.slices())
            .chain(g_out.slices())
            .collect();
        opt.apply(&mut params, &grads)?;
        Ok(loss)
    }

    pub fn to_file(&self) -> Result<NetworkFile> {
        Ok(NetworkFile {
            format_version: FORMAT_VERSION,
            model: "series_autoencoder".into(),
            config: serde_json::to_value(&self.config)?,
            layers: [&self.enc1, &self.bottleneck, &self.dec1, &self.out]
                .into_iter()
                .map(|l| Layer::Dense(l.clone()))
                .collect(),
            normalization: None,
        })
    }

    pub fn from_file(file: NetworkFile) -> Result<Self> {
        if file.model != "series_autoencoder" {
            return Err(Error::Schema(format!("expected series_autoencoder, found {}", file.model)));
        }
        let config: EncoderConfig = serde_json::from_value(file.config)?;
        match <[Layer; 4]>::try_from(file.layers) {
            Ok([Layer::Dense(enc1), Layer::Dense(bottleneck), Layer::Dense(dec1), Layer::Dense(out)]) => Ok(Self {
                config,
                enc1,
                bottleneck,
                dec1,
                out,
            }),
            _ => Err(Error::Schema("autoencoder needs four dense layers".into())),
        }
    }
}

fn check_len(series: &[f64]) -> Result<()> {
    if series.len() != SLOTS_PER_DAY {
        return Err(Error::Dimension(format!(
            "series has {} values, expected {SLOTS_PER_DAY}",
            series.len()
        )));
    }
    Ok(())
}

/// Minimize reconstruction MSE over the pooled series with mini-batch Adam.
pub fn train_autoencoder(pool: &[Vec<f64>], config: &EncoderConfig) -> Result<(SeriesAutoencoder, AutoencoderReport)> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::InsufficientData("autoencoder training pool is empty".into()));
    }
    for s in pool {
        check_len(s)?;
    }
    let mut model = SeriesAutoencoder::init(config, &mut seed::rng_for(config.seed, "autoencoder-init"));
    let mut opt = OptimizerState::adam(config.learning_rate)?;
    opt.max_grad_norm = Some(config.max_grad_norm);
    let mut shuffle_rng = seed::rng_for(config.seed, "autoencoder-shuffle");
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let order = seed::permutation(&mut shuffle_rng, pool.len());
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let rows: Vec<Vec<f64>> = chunk.iter().map(|&i| pool[i].clone()).collect();
            total += model.train_batch(&Dense2D::from_rows(&rows)?, &mut opt)? * chunk.len() as f64;
        }
        let loss = total / pool.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("autoencoder loss diverged at epoch {epoch}")));
        }
        epoch_loss.push(loss);
    }
    Ok((
        model,
        AutoencoderReport {
            epoch_loss,
            n_series: pool.len(),
        },
    ))
}

pub fn autoencode(
    model: &SeriesAutoencoder,
    incident_id: &str,
    series: &DaySeries288,
    kind: SeriesKind,
) -> Result<EncodedVector> {
    Ok(EncodedVector {
        incident_id: incident_id.to_string(),
        source: Source::Series(kind),
        units: model.config.units,
        activation: model.config.activation,
        values: model.encode(series.values())?,
    })
}

/// Encode the chosen channels of every matched incident.
pub fn autoencode_all(model: &SeriesAutoencoder, matched: &[MatchedIncident], kinds: &[SeriesKind]) -> Result<Vec<EncodedVector>> {
    let mut out = Vec::with_capacity(matched.len() * kinds.len());
    for &kind in kinds {
        for m in matched {
            out.push(autoencode(model, &m.incident.id, m.series.get(kind), kind)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_length_is_rejected() {
        let cfg = EncoderConfig::new(4, Activation::Tanh);
        let m = SeriesAutoencoder::init(&cfg, &mut seed::rng(1));
        assert!(matches!(m.encode(&[0.5; 100]), Err(Error::Dimension(_))));
        assert_eq!(m.encode(&[0.5; 288]).unwrap().len(), 4);
    }

    #[test]
    fn empty_pool_is_an_error() {
        let cfg = EncoderConfig::new(4, Activation::Tanh);
        assert!(train_autoencoder(&[], &cfg).is_err());
    }

    #[test]
    fn report_has_one_loss_per_epoch() {
        let mut cfg = EncoderConfig::new(2, Activation::Sigmoid);
        cfg.epochs = 3;
        let pool = vec![vec![0.25; 288]; 10];
        let (_, r) = train_autoencoder(&pool, &cfg).unwrap();
        assert_eq!(r.epoch_loss.len(), 3);
    }
}
