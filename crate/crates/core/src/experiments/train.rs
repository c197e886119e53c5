use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{self, init_params, mse_loss, BPConfig, NetworkParams, Sample, Topology};
use crate::swarm::{run_optimizer, Objective, PSOConfig, Variant};
use crate::timeseries::WindowedDataset;

use super::forecast::ForecastModel;

/// Network training error as a swarm fitness: the position is a flattened
/// [`NetworkParams`] and the value is its mean squared error on the dataset.
#[derive(Debug, Clone, Copy)]
pub struct NetworkObjective<'a> {
    topology: Topology,
    samples: &'a [Sample],
}

impl Objective for NetworkObjective<'_> {
    fn dim(&self) -> usize {
        self.topology.dim()
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        if position.len() != self.topology.dim() {
            return f64::NAN;
        }
        nn::mse_flat(&self.topology, position, self.samples)
    }
}

pub fn build_objective(topology: Topology, dataset: &WindowedDataset) -> Result<NetworkObjective<'_>> {
    topology.validate()?;
    if dataset.window_len != topology.input_len {
        return Err(Error::DimensionMismatch { expected: topology.input_len, got: dataset.window_len });
    }
    // shape check on every sample
    mse_loss(&NetworkParams::zeros(topology), &dataset.samples)?;
    Ok(NetworkObjective { topology, samples: &dataset.samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trainer {
    #[serde(rename = "bp")]
    Bp,
    #[serde(rename = "pso-bp")]
    PsoBp,
    #[serde(rename = "mpso-bp")]
    MpsoBp,
}

impl Trainer {
    pub const ALL: [Trainer; 3] = [Trainer::Bp, Trainer::PsoBp, Trainer::MpsoBp];

    /// Command-line and model-file spelling.
    pub fn key(self) -> &'static str {
        match self {
            Trainer::Bp => "bp",
            Trainer::PsoBp => "pso-bp",
            Trainer::MpsoBp => "mpso-bp",
        }
    }

    /// Report label.
    pub fn label(self) -> &'static str {
        match self {
            Trainer::Bp => "BP",
            Trainer::PsoBp => "PSO-BP",
            Trainer::MpsoBp => "MPSO-BP",
        }
    }

    pub fn swarm_variant(self) -> Option<Variant> {
        match self {
            Trainer::Bp => None,
            Trainer::PsoBp => Some(Variant::Inertia),
            Trainer::MpsoBp => Some(Variant::Mpso),
        }
    }
}

impl fmt::Display for Trainer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Trainer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Trainer::ALL
            .into_iter()
            .find(|t| t.key() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm `{s}`, expected bp, pso-bp or mpso-bp")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub swarm: PSOConfig,
    pub bp: BPConfig,
    /// Continue with momentum BP from the swarm's best particle.
    pub bp_refine: bool,
    /// Half-width of the uniform initialization used by plain BP.
    pub init_range: f64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self { swarm: PSOConfig::default(), bp: BPConfig::default(), bp_refine: true, init_range: 0.5 }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        self.swarm.validate()?;
        self.bp.validate()?;
        if !(self.init_range > 0.0 && self.init_range.is_finite()) {
            return Err(Error::InvalidConfig("init_range must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: ForecastModel,
    /// Swarm sweeps for hybrid trainers, epochs for plain BP.
    pub iterations_used: usize,
    /// BP fine-tuning epochs after the swarm stopped (0 for plain BP).
    pub bp_epochs: usize,
    /// Training-set MSE of the final parameters, normalized units.
    pub final_fitness: f64,
    pub reached_target: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub trained: TrainedModel,
    /// Per-sweep global best fitness; empty for plain BP.
    pub swarm_trace: Vec<f64>,
    /// Per-epoch loss of the BP phase.
    pub bp_trace: Vec<f64>,
}

impl TrainingRun {
    /// The convergence curve of the trainer's primary phase.
    pub fn trace(&self) -> &[f64] {
        if self.trained.model.trainer == Trainer::Bp {
            &self.bp_trace
        } else {
            &self.swarm_trace
        }
    }
}

struct BpOutcome {
    params: NetworkParams,
    loss: f64,
    epochs: usize,
    trace: Vec<f64>,
}

/// Full-batch momentum descent from `params`. Stops as soon as the loss is at
/// or below target, before taking a step.
fn descend(mut params: NetworkParams, samples: &[Sample], config: &BPConfig) -> Result<BpOutcome> {
    let mut update = vec![0.0; params.topology().dim()];
    let mut loss = mse_loss(&params, samples)?;
    let mut trace = Vec::new();
    let mut epochs = 0;
    while loss > config.target_loss && epochs < config.max_epochs {
        let grad = nn::backprop(&params, samples)?;
        let (next, next_update) = nn::momentum_step(&params, &grad, &update, config)?;
        epochs += 1;
        loss = nn::mse_flat(&next.topology(), next.as_slice(), samples);
        if !loss.is_finite() || next.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch: epochs, loss });
        }
        params = next;
        update = next_update;
        trace.push(loss);
    }
    Ok(BpOutcome { params, loss, epochs, trace })
}

pub fn train_bp(
    dataset: &WindowedDataset,
    topology: Topology,
    config: &BPConfig,
    init_range: f64,
    seed: u64,
) -> Result<TrainingRun> {
    config.validate()?;
    build_objective(topology, dataset)?;
    let start = init_params(topology, seed, init_range)?;
    let out = descend(start, &dataset.samples, config)?;
    Ok(TrainingRun {
        trained: TrainedModel {
            model: ForecastModel {
                params: out.params,
                normalization: dataset.norm,
                window_len: dataset.window_len,
                trainer: Trainer::Bp,
                seed,
            },
            iterations_used: out.epochs,
            bp_epochs: 0,
            final_fitness: out.loss,
            reached_target: out.loss <= config.target_loss,
        },
        swarm_trace: Vec::new(),
        bp_trace: out.trace,
    })
}

/// Swarm search over flattened weights, optionally followed by BP.
///
/// `seed` replaces `config.swarm.seed`.
pub fn train_swarm_hybrid(
    dataset: &WindowedDataset,
    topology: Topology,
    config: &HybridConfig,
    variant: Variant,
    seed: u64,
) -> Result<TrainingRun> {
    config.validate()?;
    let objective = build_objective(topology, dataset)?;
    let swarm_config = PSOConfig { seed, ..config.swarm.clone() };
    let run = run_optimizer(&objective, &swarm_config, variant)?;
    let params = NetworkParams::unflatten(topology, run.best_position)?;

    let (params, bp_epochs, bp_trace) = if config.bp_refine {
        let out = descend(params, &dataset.samples, &config.bp)?;
        (out.params, out.epochs, out.trace)
    } else {
        (params, 0, Vec::new())
    };
    let final_fitness = mse_loss(&params, &dataset.samples)?;
    let trainer = match variant {
        Variant::Mpso => Trainer::MpsoBp,
        _ => Trainer::PsoBp,
    };
    Ok(TrainingRun {
        trained: TrainedModel {
            model: ForecastModel {
                params,
                normalization: dataset.norm,
                window_len: dataset.window_len,
                trainer,
                seed,
            },
            iterations_used: run.iterations_used,
            bp_epochs,
            reached_target: run.reached_target,
            final_fitness,
        },
        swarm_trace: run.trace,
        bp_trace,
    })
}

/// Trains with the named algorithm.
pub fn train(
    trainer: Trainer,
    dataset: &WindowedDataset,
    topology: Topology,
    config: &HybridConfig,
    seed: u64,
) -> Result<TrainingRun> {
    match trainer.swarm_variant() {
        None => train_bp(dataset, topology, &config.bp, config.init_range, seed),
        Some(variant) => train_swarm_hybrid(dataset, topology, config, variant, seed),
    }
}
