//! Run configuration: scoring weights, impact-curve parameters, prompt
//! templates, backend selection, and the TOML config-file surface.
//!
//! Every default here is echoed verbatim into traces and reports, so a run
//! is always reproducible from its own artifacts.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::chain::DatasetKind;
use crate::error::{Error, Result};

/// Relative weights of clarity and utility inside the quality score.
/// Normalized so they sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityWeights {
    pub w_c: f64,
    pub w_u: f64,
}

impl QualityWeights {
    pub fn new(w_c: f64, w_u: f64) -> Result<Self> {
        if w_c < 0.0 || w_u < 0.0 {
            return Err(Error::Config("weights must be non-negative".into()));
        }
        if (w_c + w_u - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "weights must sum to 1 (got {w_c} + {w_u})"
            )));
        }
        Ok(QualityWeights { w_c, w_u })
    }
}

impl Default for QualityWeights {
    fn default() -> Self {
        QualityWeights { w_c: 0.6, w_u: 0.4 }
    }
}

/// Which exponent the positional impact curve uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ImpactForm {
    /// exponent `k / K` (position normalized by chain length)
    #[default]
    Normalized,
    /// exponent `k - 1` (absolute position)
    Appendix,
}

impl std::str::FromStr for ImpactForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normalized" => Ok(ImpactForm::Normalized),
            "appendix" => Ok(ImpactForm::Appendix),
            other => Err(Error::Config(format!("unknown impact form '{other}'"))),
        }
    }
}

/// Parameters of the exponential positional impact curve
/// `I(k) = w_a * exp(alpha * x)` with `x` chosen by `form`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactParams {
    pub w_a: f64,
    pub alpha: f64,
    pub form: ImpactForm,
}

impl ImpactParams {
    pub fn new(w_a: f64, alpha: f64, form: ImpactForm) -> Result<Self> {
        if !(w_a > 0.0) || !w_a.is_finite() || !alpha.is_finite() {
            return Err(Error::Config(format!(
                "impact params must be finite with w_a > 0 (got w_a={w_a}, alpha={alpha})"
            )));
        }
        Ok(ImpactParams { w_a, alpha, form })
    }
}

impl Default for ImpactParams {
    fn default() -> Self {
        ImpactParams {
            w_a: 0.4,
            alpha: 0.4,
            form: ImpactForm::Normalized,
        }
    }
}

/// Training mode scores process utility against the gold answer; inference
/// mode omits the utility term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Training,
    #[default]
    Inference,
}

impl std::str::FromStr for RunMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "training" => Ok(RunMode::Training),
            "inference" => Ok(RunMode::Inference),
            other => Err(Error::Config(format!("unknown run mode '{other}'"))),
        }
    }
}

/// Where token importance scores come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSourceKind {
    #[default]
    Uniform,
    SelfInformation,
    ExternalFile,
}

impl std::str::FromStr for ScoreSourceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(ScoreSourceKind::Uniform),
            "self_information" => Ok(ScoreSourceKind::SelfInformation),
            "external_file" => Ok(ScoreSourceKind::ExternalFile),
            other => Err(Error::Config(format!("unknown score source '{other}'"))),
        }
    }
}

/// Versioned prompt templates. `{question}`, `{context}`, and `{step}` are
/// substituted at call time; an empty context renders as "(none)".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub version: String,
    pub generate: String,
    pub verify: String,
    pub intrinsic: String,
    pub extrinsic: String,
    pub resume: String,
    /// Instruction used by prompt-based length reduction runs.
    pub reduce_output: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            version: "v1".into(),
            generate: "Solve the following problem step by step, then state the final answer.\n\
                       Problem: {question}"
                .into(),
            verify: "You are checking one step of a solution.\n\
                     Problem: {question}\n\
                     Steps so far:\n{context}\n\
                     Candidate step: {step}\n\
                     Does the candidate step follow logically and arithmetically from the \
                     problem and the steps so far? Answer with one word: Yes or No."
                .into(),
            intrinsic: "Problem: {question}\n\
                        Steps so far:\n{context}\n\
                        The following step was flagged as potentially flawed:\n{step}\n\
                        Review the flagged step and rewrite it correctly. \
                        Reply with the corrected step only."
                .into(),
            extrinsic: "Problem: {question}\n\
                        Steps so far:\n{context}\n\
                        Write the next reasoning step. Reply with the step only."
                .into(),
            resume: "Problem: {question}\n\
                     Partial solution:\n{context}\n\
                     Continue the solution from where it stops and finish with the final answer."
                .into(),
            reduce_output: "Please reduce your CoT output by 50%.".into(),
        }
    }
}

impl TemplateSet {
    pub fn render(template: &str, question: &str, context: &str, step: &str) -> String {
        let context = if context.is_empty() { "(none)" } else { context };
        template
            .replace("{question}", question)
            .replace("{context}", context)
            .replace("{step}", step)
    }
}

/// Full pipeline configuration; every field is echoed into each trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Target compression ratio in (0, 1].
    pub gamma: f64,
    /// Risk threshold: a step is flagged when R > tau (strict).
    pub tau: f64,
    pub weights: QualityWeights,
    pub impact: ImpactParams,
    pub mode: RunMode,
    pub seed: u64,
    pub max_gen_tokens: u32,
    pub temperature: f64,
    pub score_source: ScoreSourceKind,
    /// Extraction convention applied to model output.
    pub answer_mode: DatasetKind,
    /// When both correction candidates fail factual support, give up instead
    /// of keeping the best-scoring one.
    pub strict_correction: bool,
    pub templates: TemplateSet,
    /// Extra attempts for live backends; mocks never retry.
    pub retry_budget: u32,
    /// Concurrent in-flight problems for batch runs.
    pub parallelism: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gamma: 1.0,
            tau: 0.35,
            weights: QualityWeights::default(),
            impact: ImpactParams::default(),
            mode: RunMode::default(),
            seed: 0,
            max_gen_tokens: 512,
            temperature: 0.0,
            score_source: ScoreSourceKind::default(),
            answer_mode: DatasetKind::Plain,
            strict_correction: false,
            templates: TemplateSet::default(),
            retry_budget: 2,
            parallelism: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.tau < 0.0 || self.tau.is_nan() {
            return Err(Error::Config(format!("tau must be >= 0, got {}", self.tau)));
        }
        QualityWeights::new(self.weights.w_c, self.weights.w_u)?;
        ImpactParams::new(self.impact.w_a, self.impact.alpha, self.impact.form)?;
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        Ok(())
    }
}

/// How the model is reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum BackendChoice {
    Mock {
        /// Path to a JSON mock script; an empty script when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        script: Option<PathBuf>,
    },
    Http {
        endpoint: String,
        model: String,
    },
}

impl Default for BackendChoice {
    fn default() -> Self {
        BackendChoice::Mock { script: None }
    }
}

/// Injector settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectorConfig {
    /// Magnitude of numeric perturbations; sign is drawn from the seed.
    pub delta: u64,
    /// Leave the claimed result stale instead of recomputing it under the
    /// inverted operator.
    pub stale_result: bool,
    /// Divide accuracy drops by baseline accuracy ("normalized") or by 100
    /// ("absolute") when turning sweep rows into fit points.
    pub normalization: DropNormalization,
}

impl Default for InjectorConfig {
    fn default() -> Self {
        InjectorConfig {
            delta: 5,
            stale_result: false,
            normalization: DropNormalization::Normalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DropNormalization {
    #[default]
    Normalized,
    Absolute,
}

impl std::str::FromStr for DropNormalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normalized" => Ok(DropNormalization::Normalized),
            "absolute" => Ok(DropNormalization::Absolute),
            other => Err(Error::Config(format!("unknown normalization '{other}'"))),
        }
    }
}

/// The `[pipeline] / [avm] / [irm] / [injector] / [backend]` config file.
/// Any omitted key falls back to the documented default; CLI flags override
/// file values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub avm: AvmSection,
    #[serde(default)]
    pub irm: IrmSection,
    #[serde(default)]
    pub injector: InjectorSection,
    #[serde(default)]
    pub backend: BackendSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub max_gen_tokens: Option<u32>,
    pub temperature: Option<f64>,
    pub answer_mode: Option<String>,
    pub parallelism: Option<usize>,
    pub retry_budget: Option<u32>,
    pub strict_correction: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvmSection {
    pub tau: Option<f64>,
    pub w_c: Option<f64>,
    pub w_u: Option<f64>,
    pub w_a: Option<f64>,
    pub alpha: Option<f64>,
    pub form: Option<String>,
    pub verify_template: Option<String>,
    pub template_version: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrmSection {
    pub gamma: Option<f64>,
    pub score_source: Option<String>,
    pub score_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectorSection {
    pub delta: Option<u64>,
    pub stale_result: Option<bool>,
    pub normalization: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub kind: Option<String>,
    pub script: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub replay_log: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Folds file values over the built-in defaults.
    pub fn to_pipeline_config(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        let p = &self.pipeline;
        if let Some(v) = &p.mode {
            cfg.mode = v.parse()?;
        }
        if let Some(v) = p.seed {
            cfg.seed = v;
        }
        if let Some(v) = p.max_gen_tokens {
            cfg.max_gen_tokens = v;
        }
        if let Some(v) = p.temperature {
            cfg.temperature = v;
        }
        if let Some(v) = &p.answer_mode {
            cfg.answer_mode = v.parse()?;
        }
        if let Some(v) = p.parallelism {
            cfg.parallelism = v;
        }
        if let Some(v) = p.retry_budget {
            cfg.retry_budget = v;
        }
        if let Some(v) = p.strict_correction {
            cfg.strict_correction = v;
        }
        let a = &self.avm;
        if let Some(v) = a.tau {
            cfg.tau = v;
        }
        cfg.weights = QualityWeights::new(
            a.w_c.unwrap_or(cfg.weights.w_c),
            a.w_u.unwrap_or(cfg.weights.w_u),
        )?;
        cfg.impact = ImpactParams::new(
            a.w_a.unwrap_or(cfg.impact.w_a),
            a.alpha.unwrap_or(cfg.impact.alpha),
            match &a.form {
                Some(f) => f.parse()?,
                None => cfg.impact.form,
            },
        )?;
        if let Some(v) = &a.verify_template {
            cfg.templates.verify = v.clone();
        }
        if let Some(v) = &a.template_version {
            cfg.templates.version = v.clone();
        }
        if let Some(v) = self.irm.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = &self.irm.score_source {
            cfg.score_source = v.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn injector_config(&self) -> Result<InjectorConfig> {
        let mut cfg = InjectorConfig::default();
        if let Some(v) = self.injector.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.injector.stale_result {
            cfg.stale_result = v;
        }
        if let Some(v) = &self.injector.normalization {
            cfg.normalization = v.parse()?;
        }
        if cfg.delta == 0 {
            return Err(Error::Config("injector delta must be nonzero".into()));
        }
        Ok(cfg)
    }

    pub fn backend_choice(&self) -> Result<BackendChoice> {
        let b = &self.backend;
        match b.kind.as_deref().unwrap_or("mock") {
            "mock" => Ok(BackendChoice::Mock {
                script: b.script.clone(),
            }),
            "http" => {
                let endpoint = b
                    .endpoint
                    .clone()
                    .or_else(|| std::env::var("ASCOT_ENDPOINT").ok())
                    .ok_or_else(|| {
                        Error::Config("http backend requires endpoint (or ASCOT_ENDPOINT)".into())
                    })?;
                let model = b
                    .model
                    .clone()
                    .ok_or_else(|| Error::Config("http backend requires model".into()))?;
                Ok(BackendChoice::Http { endpoint, model })
            }
            other => Err(Error::Config(format!("unknown backend kind '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn weights_must_normalize() {
        assert!(QualityWeights::new(0.6, 0.4).is_ok());
        assert!(QualityWeights::new(0.6, 0.6).is_err());
        assert!(QualityWeights::new(-0.2, 1.2).is_err());
    }

    #[test]
    fn impact_params_require_positive_base() {
        assert!(ImpactParams::new(0.0, 1.0, ImpactForm::Normalized).is_err());
        assert!(ImpactParams::new(0.4, -1.0, ImpactForm::Appendix).is_ok());
    }

    #[test]
    fn toml_sections_fold_over_defaults() {
        let file: ConfigFile = toml::from_str(
            r#"
            [pipeline]
            seed = 7
            mode = "training"

            [avm]
            tau = 0.5
            w_c = 0.7
            w_u = 0.3

            [irm]
            gamma = 0.8

            [injector]
            delta = 3

            [backend]
            kind = "mock"
            "#,
        )
        .unwrap();
        let cfg = file.to_pipeline_config().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.mode, RunMode::Training);
        assert_eq!(cfg.tau, 0.5);
        assert_eq!(cfg.weights.w_c, 0.7);
        assert_eq!(cfg.gamma, 0.8);
        assert_eq!(file.injector_config().unwrap().delta, 3);
        assert!(matches!(
            file.backend_choice().unwrap(),
            BackendChoice::Mock { .. }
        ));
    }

    #[test]
    fn infinite_tau_parses_from_toml() {
        let file: ConfigFile = toml::from_str("[avm]\ntau = inf\n").unwrap();
        let cfg = file.to_pipeline_config().unwrap();
        assert!(cfg.tau.is_infinite());
    }

    #[test]
    fn unknown_keys_are_rejected_with_field_name() {
        let err = toml::from_str::<ConfigFile>("[pipeline]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn template_render_substitutes_placeholders() {
        let t = TemplateSet::default();
        let s = TemplateSet::render(&t.verify, "Q", "", "S");
        assert!(s.contains("Q"));
        assert!(s.contains("(none)"));
        assert!(s.contains("S"));
    }

    #[test]
    fn gamma_bounds_enforced() {
        let mut cfg = PipelineConfig::default();
        cfg.gamma = 0.0;
        assert!(cfg.validate().is_err());
        cfg.gamma = 1.5;
        assert!(cfg.validate().is_err());
    }
}
