//! Federated multi-step forecasting of per-node network traffic with an
//! LSTM encoder–decoder, plus hop-count routing and link-utilization
//! ranking over the induced traffic-exchange matrix.

pub mod config;
pub mod error;
pub mod federation;
pub mod linkrisk;
pub mod metrics;
pub mod neuralnet;
pub mod pipeline;
pub mod rng;
pub mod topology;
pub mod traffic_data;
pub mod windowing;

pub use error::{Error, Result};
