//! Synthetic homodyne tomography: sampling quadrature data from a Gaussian
//! state, least-squares covariance reconstruction, bootstrap certification and
//! normality checks.
//!
//! A measurement setting fixes one homodyne angle per mode; mode `k` then reads
//! `x_k cos θ_k + p_k sin θ_k`. All modes of a setting are sampled jointly.

mod bootstrap;
mod dataset;
mod estimate;
mod gaussianity;
mod plan;
mod sampling;

pub use bootstrap::{bootstrap_certify, BootstrapConfig, BootstrapReport, ResampleMode};
pub use dataset::{QuadratureDataset, DATASET_MAGIC};
pub use estimate::{estimate_covariance, CovarianceEstimate, Estimator, SettingMoments};
pub use gaussianity::{channel_test, gaussianity_tests, ChannelReport, ChannelResult, ChiSquare, GaussianityReport};
pub use plan::{default_setting_plan, design_matrix, entry_name, identifiability, MeasurementSetting};
pub use sampling::{generate_dataset, measured_covariance, sample_state};
