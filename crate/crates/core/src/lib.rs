//! Risk-aware verification, compression, and self-correction for step-by-step
//! reasoning chains, plus the error-injection laboratory that calibrates the
//! positional impact curve the risk score depends on.
//!
//! The pieces, bottom to top:
//!
//! - [`chain`]: problems, steps, segmentation, answer extraction, grading.
//! - [`arith`]: exact-rational verification of `expr = number` claims.
//! - [`scoring`]: per-step validity/support/clarity/utility scoring, the
//!   veto-gated quality composite, positional impact, and risk flagging.
//! - [`pruner`]: token-importance scoring and budgeted compression.
//! - [`corrector`]: dual-path (reflect / regenerate) correction of flagged
//!   steps with quality-based selection.
//! - [`pipeline`]: the end-to-end mechanism and batch evaluation.
//! - [`injector`]: controlled numeric/symbolic fault injection with replay,
//!   and [`fitting`]: calibration of the impact curve from sweep data.
//! - [`backend`]: model access (live HTTP or deterministic mock) with
//!   caching, retries, and audit logging.
//! - [`dataset`] / [`report`] / [`config`]: file formats and run settings.

pub mod arith;
pub mod backend;
pub mod chain;
pub mod config;
pub mod corrector;
pub mod dataset;
pub mod error;
pub mod fitting;
pub mod injector;
pub mod numeric;
pub mod pipeline;
pub mod pruner;
pub mod report;
pub mod scoring;

pub use chain::{Answer, DatasetKind, Problem, ReasoningChain, ReasoningStep};
pub use config::{ImpactForm, ImpactParams, PipelineConfig, QualityWeights, RunMode};
pub use error::{Error, Result};
pub use pipeline::{batch_run, run_ascot, RunTrace};
pub use scoring::{
    flag, positional_impact, quality_score, risk_score, RiskThreshold, StepAssessment,
};
