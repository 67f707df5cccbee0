//! Hardware-free workbench for incipient-slip sensing by vibration injection.
//!
//! The crate simulates a soft fingertip pressing a spring-loaded object,
//! injects a band-limited excitation into the fingertip, synthesizes the
//! propagated pressure waveform plus a 19-electrode pressure array, labels
//! pseudo-stick-ratio ground truth from the loading trajectory, trains an
//! epsilon-SVR slip model, and closes the loop with a proportional
//! stick-ratio stabilization controller.

pub mod config;
pub mod contact;
pub mod control;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod manifest;
pub mod seeds;
pub mod svr;
pub mod vibro;

pub use config::{ExperimentConfig, Method};
pub use contact::{ContactState, MaterialSpec, RigConfig};
pub use control::{ControllerConfig, ScoreWeights, TrialOutcome};
pub use error::{Error, Result};
pub use features::{ElectrodeSubset, LabeledSample, SpectrumFeature, WindowSpec};
pub use svr::{SvrKernel, SvrModel, SvrParams};
pub use vibro::{InjectionConfig, SensorFrame, TransferProfile};
