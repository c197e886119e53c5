use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{TimeSeries, YearMonth};

use super::forecast::ForecastModel;

/// Signed percentage error `100 (true - pred) / true`.
pub fn relative_error(true_value: f64, predicted: f64) -> Result<f64> {
    if !(true_value > 0.0) {
        return Err(Error::NonPositiveTruth(true_value));
    }
    Ok(100.0 * (true_value - predicted) / true_value)
}

/// `100 (1 - |true - pred| / true)`.
pub fn accuracy_percent(true_value: f64, predicted: f64) -> Result<f64> {
    if !(true_value > 0.0) {
        return Err(Error::NonPositiveTruth(true_value));
    }
    Ok(100.0 * (1.0 - (true_value - predicted).abs() / true_value))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub month: YearMonth,
    #[serde(rename = "true")]
    pub true_value: f64,
    pub predicted: f64,
    /// Percent, signed.
    pub relative_error: f64,
}

impl MetricsRow {
    pub fn new(month: YearMonth, true_value: f64, predicted: f64) -> Result<Self> {
        Ok(Self { month, true_value, predicted, relative_error: relative_error(true_value, predicted)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    /// Mean squared error in (kWh/t)^2.
    pub mse: f64,
    /// Mean of `|relative_error|`, percent.
    pub average_relative_error: f64,
    /// Max of `|relative_error|`, percent.
    pub max_relative_error: f64,
    /// Set when any prediction fell outside the training range. Predictions
    /// are reported unclamped.
    pub clamp_flag: bool,
}

impl MetricsReport {
    pub fn from_rows(rows: Vec<MetricsRow>, clamp_flag: bool) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = rows.len() as f64;
        let mse = rows.iter().map(|r| (r.true_value - r.predicted).powi(2)).sum::<f64>() / n;
        let average_relative_error = rows.iter().map(|r| r.relative_error.abs()).sum::<f64>() / n;
        let max_relative_error = rows.iter().map(|r| r.relative_error.abs()).fold(0.0, f64::max);
        Ok(Self { rows, mse, average_relative_error, max_relative_error, clamp_flag })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `month,true,predicted,relative_error_pct` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("month,true,predicted,relative_error_pct\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.month, r.true_value, r.predicted, r.relative_error);
        }
        out
    }

    /// Aligned table: one row per month followed by the aggregates.
    pub fn to_table(&self, model: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8}  {:>16}  {:>16}  {:>16}", "Month", "True kWh/t", format!("{model} kWh/t"), "Relative error %");
        for r in &self.rows {
            let _ = writeln!(out, "{:<8}  {:>16.2}  {:>16.2}  {:>16.3}", r.month.to_string(), r.true_value, r.predicted, r.relative_error);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "MSE                      {:.6}", self.mse);
        let _ = writeln!(out, "Average relative error%  {:.4}", self.average_relative_error);
        let _ = writeln!(out, "Maximum relative error%  {:.4}", self.max_relative_error);
        if self.clamp_flag {
            let _ = writeln!(out, "note: some predictions fall outside the training range");
        }
        out
    }
}

/// One-step-ahead predictions over `test`, each from the true values of the
/// preceding `window_len` months. `history` must end the month before `test`
/// starts.
pub fn evaluate(model: &ForecastModel, test: &TimeSeries, history: &TimeSeries) -> Result<MetricsReport> {
    let insufficient = Error::InsufficientHistory { expected: test.start().offset(-1), needed: model.window_len };
    if history.end().next() != test.start() {
        return Err(insufficient);
    }
    let lead = history.tail(model.window_len).ok_or(insufficient)?;
    let values: Vec<f64> = lead.iter().chain(test.values()).copied().collect();

    let mut clamp_flag = false;
    let rows = test
        .points()
        .enumerate()
        .map(|(i, (month, truth))| {
            let predicted = model.predict_next(&values[i..i + model.window_len])?;
            if !predicted.is_finite() {
                return Err(Error::NonFinitePrediction { month, value: predicted });
            }
            clamp_flag |= !model.normalization.contains(predicted);
            MetricsRow::new(month, truth, predicted)
        })
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::from_rows(rows, clamp_flag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Trainer;
    use crate::nn::{NetworkParams, Topology};
    use crate::timeseries::NormalizationParams;

    fn ym(s: &str) -> YearMonth {
        s.parse().unwrap()
    }

    #[test]
    fn table_one_cells() {
        assert!((relative_error(36.82, 36.18).unwrap() - 1.739).abs() < 0.01);
        assert!((relative_error(35.16, 36.19).unwrap() + 2.930).abs() < 0.01);
        assert_eq!(relative_error(35.0, 35.0).unwrap(), 0.0);
        assert!(relative_error(0.0, 1.0).is_err());
    }

    #[test]
    fn table_four_cells() {
        assert!((accuracy_percent(36.22, 36.10).unwrap() - 99.7).abs() < 0.05);
        assert!((accuracy_percent(36.36, 36.86).unwrap() - 98.6).abs() < 0.05);
        assert_eq!(accuracy_percent(35.0, 35.0).unwrap(), 100.0);
        assert!(accuracy_percent(-1.0, 1.0).is_err());
    }

    #[test]
    fn aggregates() {
        let rows = vec![
            MetricsRow { month: ym("2015-01"), true_value: 100.0, predicted: 99.0, relative_error: 1.0 },
            MetricsRow { month: ym("2015-02"), true_value: 100.0, predicted: 103.0, relative_error: -3.0 },
        ];
        let r = MetricsReport::from_rows(rows, false).unwrap();
        assert_eq!(r.average_relative_error, 2.0);
        assert_eq!(r.max_relative_error, 3.0);

        let rows = vec![
            MetricsRow::new(ym("2015-01"), 36.0, 35.7).unwrap(),
            MetricsRow::new(ym("2015-02"), 36.0, 36.1).unwrap(),
        ];
        let r = MetricsReport::from_rows(rows, false).unwrap();
        assert!((r.mse - 0.05).abs() < 1e-12);
    }

    fn constant_model(bias: f64) -> ForecastModel {
        let topo = Topology::new(2, 1, 1).unwrap();
        ForecastModel {
            params: NetworkParams::from_parts(topo, &[0.0, 0.0], &[0.0], &[0.0], &[bias]).unwrap(),
            normalization: NormalizationParams::new(30.0, 40.0).unwrap(),
            window_len: 2,
            trainer: Trainer::Bp,
            seed: 0,
        }
    }

    #[test]
    fn perfect_model_scores_zero() {
        let history = TimeSeries::new(ym("2014-01"), vec![35.0; 12]).unwrap();
        let test = TimeSeries::new(ym("2015-01"), vec![35.0; 3]).unwrap();
        let r = evaluate(&constant_model(0.5), &test, &history).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.mse, 0.0);
        assert!(r.rows.iter().all(|row| row.relative_error == 0.0));
        assert!(!r.clamp_flag);
    }

    #[test]
    fn evaluate_requires_adjacent_history() {
        let history = TimeSeries::new(ym("2014-01"), vec![35.0; 11]).unwrap();
        let test = TimeSeries::new(ym("2015-01"), vec![35.0; 3]).unwrap();
        assert!(matches!(evaluate(&constant_model(0.5), &test, &history), Err(Error::InsufficientHistory { .. })));
        let history = TimeSeries::new(ym("2014-12"), vec![35.0]).unwrap();
        assert!(matches!(evaluate(&constant_model(0.5), &test, &history), Err(Error::InsufficientHistory { .. })));
    }

    #[test]
    fn out_of_range_prediction_sets_flag() {
        let history = TimeSeries::new(ym("2014-11"), vec![35.0; 2]).unwrap();
        let test = TimeSeries::new(ym("2015-01"), vec![41.0]).unwrap();
        let r = evaluate(&constant_model(1.1), &test, &history).unwrap();
        assert!(r.clamp_flag);
        assert_eq!(r.rows[0].predicted, 41.0);
    }

    #[test]
    fn csv_and_table_shapes() {
        let r = MetricsReport::from_rows(vec![MetricsRow::new(ym("2015-01"), 36.82, 36.18).unwrap()], false).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("month,true,predicted,relative_error_pct\n2015-01,36.82,36.18,"));
        let table = r.to_table("MPSO-BP");
        assert!(table.contains("2015-01"));
        assert!(table.contains("1.738"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["rows"][0]["true"], 36.82);
        assert_eq!(json["clamp_flag"], false);
    }
}
