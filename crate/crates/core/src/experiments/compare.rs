use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Topology;
use crate::timeseries::{fit_normalization, make_windows, TimeSeries, WindowedDataset, DEFAULT_WINDOW_LEN};

use super::metrics::{evaluate, MetricsReport};
use super::train::{train, HybridConfig, Trainer, TrainingRun};

/// Data shape and trainer settings shared by every model in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub window_len: usize,
    pub hidden_len: usize,
    pub hybrid: HybridConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { window_len: DEFAULT_WINDOW_LEN, hidden_len: 6, hybrid: HybridConfig::default() }
    }
}

impl ExperimentConfig {
    pub fn topology(&self) -> Result<Topology> {
        Topology::new(self.window_len, self.hidden_len, 1)
    }

    /// Fits scaling on `train` alone and windows it.
    pub fn training_set(&self, train: &TimeSeries) -> Result<WindowedDataset> {
        let norm = fit_normalization(train)?;
        make_windows(train, self.window_len, &norm)
    }

    pub fn target_for(&self, trainer: Trainer) -> f64 {
        match trainer {
            Trainer::Bp => self.hybrid.bp.target_loss,
            _ => self.hybrid.swarm.target_fitness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub seed: u64,
    /// Fitness threshold the iteration count is measured against.
    pub target_accuracy: f64,
    pub iterations: usize,
    pub bp_epochs: usize,
    pub reached_target: bool,
    pub final_fitness: f64,
    pub average_relative_error: f64,
    pub max_relative_error: f64,
}

impl ComparisonRow {
    pub fn from_run(run: &TrainingRun, metrics: &MetricsReport, target_accuracy: f64) -> Self {
        let t = &run.trained;
        Self {
            model: t.model.trainer.label().to_string(),
            seed: t.model.seed,
            target_accuracy,
            iterations: t.iterations_used,
            bp_epochs: t.bp_epochs,
            reached_target: t.reached_target,
            final_fitness: t.final_fitness,
            average_relative_error: metrics.average_relative_error,
            max_relative_error: metrics.max_relative_error,
        }
    }
}

/// Per-trainer summary over all seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub target_accuracy: f64,
    pub seeds: usize,
    pub reached_target: usize,
    /// Median of the per-seed iteration counts.
    pub iterations: f64,
    /// Mean of the per-seed average relative errors.
    pub average_relative_error: f64,
    /// Largest per-seed maximum relative error.
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub aggregate: Vec<AggregateRow>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn aggregate(rows: &[ComparisonRow]) -> Vec<AggregateRow> {
    Trainer::ALL
        .iter()
        .filter_map(|t| {
            let mine: Vec<&ComparisonRow> = rows.iter().filter(|r| r.model == t.label()).collect();
            let first = mine.first()?;
            let iterations: Vec<f64> = mine.iter().map(|r| r.iterations as f64).collect();
            Some(AggregateRow {
                model: first.model.clone(),
                target_accuracy: first.target_accuracy,
                seeds: mine.len(),
                reached_target: mine.iter().filter(|r| r.reached_target).count(),
                iterations: median(&iterations),
                average_relative_error: mine.iter().map(|r| r.average_relative_error).sum::<f64>() / mine.len() as f64,
                max_relative_error: mine.iter().map(|r| r.max_relative_error).fold(0.0, f64::max),
            })
        })
        .collect()
}

/// Trains BP, PSO-BP and MPSO-BP on `train` for every seed and scores each
/// on `test`. Rows are ordered by seed, then trainer.
pub fn compare_models(
    train_series: &TimeSeries,
    test: &TimeSeries,
    config: &ExperimentConfig,
    seeds: &[u64],
) -> Result<ComparisonReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let topology = config.topology()?;
    let dataset = config.training_set(train_series)?;
    let jobs: Vec<(u64, Trainer)> = seeds
        .iter()
        .flat_map(|&s| Trainer::ALL.into_iter().map(move |t| (s, t)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(seed, trainer)| {
            let run = train(trainer, &dataset, topology, &config.hybrid, seed)?;
            let metrics = evaluate(&run.trained.model, test, train_series)?;
            Ok(ComparisonRow::from_run(&run, &metrics, config.target_for(trainer)))
        })
        .collect::<Vec<Result<ComparisonRow>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&rows);
    Ok(ComparisonReport { rows, aggregate })
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-seed rows, then the seed aggregates, as aligned columns.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let header = |out: &mut String, first: &str| {
            let _ = writeln!(
                out,
                "{:<8}  {:>6}  {:>9}  {:>10}  {:>9}  {:>13}  {:>24}  {:>24}",
                "Model", first, "Accuracy", "Iterations", "BP epochs", "Final fitness", "Average relative error", "Maximum relative error"
            );
        };
        header(&mut out, "Seed");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<8}  {:>6}  {:>9}  {:>10}  {:>9}  {:>13.6}  {:>23.4}%  {:>23.4}%",
                r.model, r.seed, r.target_accuracy, r.iterations, r.bp_epochs, r.final_fitness, r.average_relative_error, r.max_relative_error
            );
        }
        let _ = writeln!(out);
        header(&mut out, "Seeds");
        for a in &self.aggregate {
            let _ = writeln!(
                out,
                "{:<8}  {:>6}  {:>9}  {:>10}  {:>9}  {:>13}  {:>23.4}%  {:>23.4}%",
                a.model,
                a.seeds,
                a.target_accuracy,
                a.iterations,
                "",
                format!("{}/{} hit", a.reached_target, a.seeds),
                a.average_relative_error,
                a.max_relative_error
            );
        }
        out
    }
}
