//! Training, scoring and comparing forecast models.

mod compare;
mod forecast;
mod metrics;
mod train;

pub use compare::{compare_models, median, AggregateRow, ComparisonReport, ComparisonRow, ExperimentConfig};
pub use forecast::{horizon_to_csv, predict_horizon, ForecastModel, HorizonPoint, ModelFile};
pub use metrics::{accuracy_percent, evaluate, relative_error, MetricsReport, MetricsRow};
pub use train::{
    build_objective, train, train_bp, train_swarm_hybrid, HybridConfig, NetworkObjective, Trainer, TrainedModel,
    TrainingRun,
};
