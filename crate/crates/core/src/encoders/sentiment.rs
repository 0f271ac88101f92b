//! Character-level LSTM severity encoder.
//!
//! 200 x 7 bit rows feed an 80-unit LSTM; the final hidden state passes a
//! bottleneck dense layer (the encoding) and then a linear head, either one
//! output regressing severity under MSE or five logits under softmax
//! cross-entropy.

use serde::{Deserialize, Serialize};

use super::text::{text_to_binary, CHAR_BITS};
use super::{EncodedVector, EncoderConfig, Head, Source};
use crate::error::{Error, Result};
use crate::ingest::IncidentRecord;
use crate::nn::{
    mse, softmax_ce, Activation, Dense2D, DenseLayer, Layer, LstmParams, NetworkFile, OptimizerState, FORMAT_VERSION,
};
use crate::seed;

pub const HIDDEN_SIZE: usize = 80;
pub const CE_CLASSES: usize = 5;
pub const MIN_RECORDS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentEncoder {
    pub config: EncoderConfig,
    pub lstm: LstmParams,
    pub bottleneck: DenseLayer,
    pub head: DenseLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentReport {
    pub epochs: Vec<EpochLoss>,
    pub test_loss: f64,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
}

/// Disjoint train/validation/test index sets covering `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded 70:20:10 split (train and validation sizes floored).
pub fn split_indices(n: usize, seed: u64) -> DataSplit {
    let perm = seed::permutation(&mut seed::rng_for(seed, "split"), n);
    let n_train = n * 7 / 10;
    let n_val = n * 2 / 10;
    DataSplit {
        train: perm[..n_train].to_vec(),
        validation: perm[n_train..n_train + n_val].to_vec(),
        test: perm[n_train + n_val..].to_vec(),
    }
}

struct Sample {
    bits: Vec<[f64; CHAR_BITS]>,
    severity: u8,
}

impl SentimentEncoder {
    fn init(config: &EncoderConfig, rng: &mut seed::Rng) -> Self {
        let lstm = LstmParams::init(CHAR_BITS, HIDDEN_SIZE, rng);
        let bottleneck = DenseLayer::init(HIDDEN_SIZE, config.units, config.activation, rng);
        let outputs = match config.head {
            Head::Mse => 1,
            Head::Ce => CE_CLASSES,
        };
        let head = DenseLayer::init(config.units, outputs, Activation::Identity, rng);
        Self {
            config: config.clone(),
            lstm,
            bottleneck,
            head,
        }
    }

    /// Bottleneck encoding of a description; the head is not applied.
    pub fn encode(&self, description: &str) -> Result<Vec<f64>> {
        let bits = text_to_binary(description)?;
        let cache = self.lstm.forward(&bits)?;
        self.bottleneck.apply(cache.last_hidden())
    }

    /// Head output: predicted severity (MSE) or five logits (CE).
    pub fn predict(&self, description: &str) -> Result<Vec<f64>> {
        self.head.apply(&self.encode(description)?)
    }

    fn target_row(&self, severity: u8) -> Vec<f64> {
        match self.config.head {
            Head::Mse => vec![f64::from(severity)],
            Head::Ce => {
                let mut v = vec![0.0; CE_CLASSES];
                v[usize::from(severity)] = 1.0;
                v
            }
        }
    }

    fn loss(&self, outputs: &Dense2D, targets: &Dense2D) -> Result<(f64, Dense2D)> {
        match self.config.head {
            Head::Mse => mse(outputs, targets),
            Head::Ce => softmax_ce(outputs, targets),
        }
    }

    fn evaluate(&self, samples: &[Sample], idx: &[usize]) -> Result<f64> {
        if idx.is_empty() {
            return Ok(0.0);
        }
        let mut out = Vec::with_capacity(idx.len());
        let mut tgt = Vec::with_capacity(idx.len());
        for &i in idx {
            let h = self.lstm.forward(&samples[i].bits)?;
            out.push(self.head.apply(&self.bottleneck.apply(h.last_hidden())?)?);
            tgt.push(self.target_row(samples[i].severity));
        }
        Ok(self.loss(&Dense2D::from_rows(&out)?, &Dense2D::from_rows(&tgt)?)?.0)
    }

    fn train_batch(&mut self, samples: &[Sample], batch: &[usize], opt: &mut OptimizerState) -> Result<f64> {
        let mut caches = Vec::with_capacity(batch.len());
        let mut codes = Vec::with_capacity(batch.len());
        let mut outs = Vec::with_capacity(batch.len());
        let mut tgts = Vec::with_capacity(batch.len());
        for &i in batch {
            let cache = self.lstm.forward(&samples[i].bits)?;
            let h = Dense2D::from_vec(1, HIDDEN_SIZE, cache.last_hidden().to_vec())?;
            let code = self.bottleneck.forward(&h)?;
            let out = self.head.forward(&code.out)?;
            outs.push(out.out.data.clone());
            tgts.push(self.target_row(samples[i].severity));
            codes.push((h, code, out));
            caches.push(cache);
        }
        let (loss, grad) = self.loss(&Dense2D::from_rows(&outs)?, &Dense2D::from_rows(&tgts)?)?;

        let mut g_lstm = self.lstm.zero_grads();
        let mut g_bottle = self.bottleneck.zero_grads();
        let mut g_head = self.head.zero_grads();
        for (r, ((h, code, out), cache)) in codes.iter().zip(&caches).enumerate() {
            let g_out = Dense2D::from_vec(1, grad.cols, grad.row(r).to_vec())?;
            let (g_code, gh) = self.head.backward(&code.out, &out.pre, &g_out)?;
            g_head.add(&gh);
            let (g_h, gb) = self.bottleneck.backward(h, &code.pre, &g_code)?;
            g_bottle.add(&gb);
            g_lstm.add(&self.lstm.backward(cache, &g_h.data)?);
        }

        let [w_i, w_f, w_o, w_g, b_i, b_f, b_o, b_g] = self.lstm.params_mut();
        let [bw, bb] = self.bottleneck.params_mut();
        let [hw, hb] = self.head.params_mut();
        let mut params: Vec<&mut [f64]> = vec![w_i, w_f, w_o, w_g, b_i, b_f, b_o, b_g, bw, bb, hw, hb];
        let grads: Vec<&[f64]> = g_lstm
            .slices()
            .into_iter()
            .chain(g_bottle.slices())
            .chain(g_head.slices())
            .collect();
        opt.apply(&mut params, &grads)?;
        Ok(loss)
    }

    pub fn to_file(&self) -> Result<NetworkFile> {
        Ok(NetworkFile {
            format_version: FORMAT_VERSION,
            model: "sentiment_encoder".into(),
            config: serde_json::to_value(&self.config)?,
            layers: vec![
                Layer::Lstm(self.lstm.clone()),
                Layer::Dense(self.bottleneck.clone()),
                Layer::Dense(self.head.clone()),
            ],
            normalization: None,
        })
    }

    pub fn from_file(file: NetworkFile) -> Result<Self> {
        if file.model != "sentiment_encoder" {
            return Err(Error::Schema(format!("expected sentiment_encoder, found {}", file.model)));
        }
        let config: EncoderConfig = serde_json::from_value(file.config)?;
        match <[Layer; 3]>::try_from(file.layers) {
            Ok([Layer::Lstm(lstm), Layer::Dense(bottleneck), Layer::Dense(head)]) => Ok(Self {
                config,
                lstm,
                bottleneck,
                head,
            }),
            _ => Err(Error::Schema("sentiment encoder needs lstm, dense, dense layers".into())),
        }
    }
}

/// Train end to end on descriptions labelled with severity.
pub fn train_sentiment_encoder(
    records: &[IncidentRecord],
    config: &EncoderConfig,
) -> Result<(SentimentEncoder, SentimentReport)> {
    config.validate()?;
    if records.len() < MIN_RECORDS {
        return Err(Error::InsufficientData(format!(
            "sentiment encoder needs at least {MIN_RECORDS} records, got {}",
            records.len()
        )));
    }
    let samples = records
        .iter()
        .map(|r| {
            Ok(Sample {
                bits: text_to_binary(&r.description)?,
                severity: r.severity,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let split = split_indices(samples.len(), config.seed);
    let mut rng = seed::rng_for(config.seed, "sentiment-init");
    let mut model = SentimentEncoder::init(config, &mut rng);
    if config.head == Head::Mse {
        // Start the regression head at the training-set mean severity.
        let mean = split.train.iter().map(|&i| f64::from(samples[i].severity)).sum::<f64>() / split.train.len() as f64;
        model.head.bias[0] = mean;
    }

    let mut opt = OptimizerState::adam(config.learning_rate)?;
    opt.max_grad_norm = Some(config.max_grad_norm);
    let mut shuffle_rng = seed::rng_for(config.seed, "sentiment-shuffle");
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let order = seed::permutation(&mut shuffle_rng, split.train.len());
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<usize> = chunk.iter().map(|&k| split.train[k]).collect();
            total += model.train_batch(&samples, &batch, &mut opt)? * batch.len() as f64;
        }
        let train_loss = total / split.train.len() as f64;
        let validation_loss = model.evaluate(&samples, &split.validation)?;
        if !train_loss.is_finite() || !validation_loss.is_finite() {
            return Err(Error::Numerical(format!("sentiment encoder loss diverged at epoch {epoch}")));
        }
        epochs.push(EpochLoss {
            epoch,
            train_loss,
            validation_loss,
        });
    }
    let test_loss = model.evaluate(&samples, &split.test)?;
    let report = SentimentReport {
        epochs,
        test_loss,
        n_train: split.train.len(),
        n_validation: split.validation.len(),
        n_test: split.test.len(),
    };
    Ok((model, report))
}

pub fn sentiment_encode(encoder: &SentimentEncoder, incident_id: &str, description: &str) -> Result<EncodedVector> {
    let source = match encoder.config.head {
        Head::Mse => Source::LstmSent,
        Head::Ce => Source::LstmSentCe,
    };
    Ok(EncodedVector {
        incident_id: incident_id.to_string(),
        source,
        units: encoder.config.units,
        activation: encoder.config.activation,
        values: encoder.encode(description)?,
    })
}
