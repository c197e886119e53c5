//! Monthly consumption forecasting with a one-hidden-layer perceptron trained
//! by momentum backpropagation, by particle swarm search (PSO-BP), or by the
//! sub-step refined swarm (MPSO-BP).
//!
//! The pipeline is [`timeseries`] (ingest, scale, window) into [`nn`] (the
//! network) searched by [`swarm`], with [`experiments`] tying them together
//! into trainers, metrics, comparisons and horizon forecasts.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod nn;
pub mod sample;
pub mod swarm;
pub mod timeseries;

pub use error::{Error, Result};
