use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{NetworkParams, Topology};
use crate::timeseries::{NormalizationParams, TimeSeries, YearMonth};

use super::train::Trainer;

/// Everything needed to turn a window of past months into a forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub params: NetworkParams,
    pub normalization: NormalizationParams,
    pub window_len: usize,
    pub trainer: Trainer,
    pub seed: u64,
}

/// On-disk JSON layout of a [`ForecastModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub topology: Topology,
    pub flat_params: Vec<f64>,
    pub normalization: NormalizationParams,
    pub window_len: usize,
    pub seed: u64,
    pub trainer: Trainer,
}

impl ForecastModel {
    pub fn topology(&self) -> Topology {
        self.params.topology()
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            topology: self.topology(),
            flat_params: self.params.flatten(),
            normalization: self.normalization,
            window_len: self.window_len,
            seed: self.seed,
            trainer: self.trainer,
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        file.topology.validate()?;
        if file.topology.input_len != file.window_len {
            return Err(Error::ModelFormat(format!(
                "window_len {} does not match topology input {}",
                file.window_len, file.topology.input_len
            )));
        }
        if file.topology.output_len != 1 {
            return Err(Error::ModelFormat("forecast models need exactly one output".into()));
        }
        let normalization = NormalizationParams::new(file.normalization.min, file.normalization.max)?;
        Ok(Self {
            params: NetworkParams::unflatten(file.topology, file.flat_params)?,
            normalization,
            window_len: file.window_len,
            trainer: file.trainer,
            seed: file.seed,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        Self::from_file(file)
    }

    /// Next-month value in kWh/t from the `window_len` preceding values.
    ///
    /// The window is normalized with the training bounds and the output is
    /// mapped back without clamping.
    pub fn predict_next(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.window_len {
            return Err(Error::DimensionMismatch { expected: self.window_len, got: window.len() });
        }
        let scaled: Vec<f64> = window.iter().map(|&v| self.normalization.normalize(v)).collect();
        let out = self.params.forward(&scaled)?;
        Ok(self.normalization.denormalize(out[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonPoint {
    pub month: YearMonth,
    pub predicted: f64,
    /// `predicted` clamped into the training range.
    pub clamped: f64,
}

impl HorizonPoint {
    pub fn was_clamped(&self) -> bool {
        self.clamped != self.predicted
    }
}

/// Recursive multi-month forecast continuing `history`.
///
/// Each raw (unclamped) prediction joins the working window for the next
/// step, so forecasting `a + b` months equals forecasting `a`, appending those
/// values to the history, and forecasting `b` more.
pub fn predict_horizon(model: &ForecastModel, history: &TimeSeries, horizon: usize) -> Result<Vec<HorizonPoint>> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    let mut window = history
        .tail(model.window_len)
        .ok_or(Error::InsufficientHistory { expected: history.end(), needed: model.window_len })?
        .to_vec();
    let mut month = history.end();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        month = month.next();
        let predicted = model.predict_next(&window)?;
        if !predicted.is_finite() {
            return Err(Error::NonFinitePrediction { month, value: predicted });
        }
        out.push(HorizonPoint { month, predicted, clamped: model.normalization.clamp(predicted) });
        window.remove(0);
        window.push(predicted);
    }
    Ok(out)
}

/// `month,predicted_kwh_per_t,clamped` rows.
pub fn horizon_to_csv(points: &[HorizonPoint]) -> String {
    let mut out = String::from("month,predicted_kwh_per_t,clamped\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.month, p.predicted, p.clamped));
    }
    out
}
