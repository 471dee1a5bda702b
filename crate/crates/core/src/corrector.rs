//! Dual-path correction of flagged steps.
//!
//! The intrinsic path shows the model its own flawed step and asks for an
//! amendment; the extrinsic path withholds the flawed step and regenerates
//! the next step from the context alone. Both candidates are re-scored with
//! the quality function (utility pinned to 0) and the higher-quality one
//! wins, ties going to the intrinsic path.

use serde::{Deserialize, Serialize};

use crate::arith::verify_step;
use crate::backend::{BackendRequest, GenParams, ModelBackend};
use crate::chain::ReasoningStep;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::scoring::{logical_validity, quality_score, semantic_clarity, ScoringContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionPath {
    Intrinsic,
    Extrinsic,
}

/// One correction proposal with its re-evaluated quality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionCandidate {
    pub path: CorrectionPath,
    pub text: String,
    /// Quality re-evaluated with utility fixed at 0.
    pub q_eval: f64,
    /// Factual-support bit, kept for strict-mode selection.
    pub g: u8,
}

/// Correction event recorded in the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionEvent {
    pub step_k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_chosen: Option<CorrectionPath>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_intrinsic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_extrinsic: Option<f64>,
    /// Replacement text; absent when correction failed and the original step
    /// was kept.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replaced_text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

fn gen_params(config: &PipelineConfig) -> GenParams {
    GenParams {
        max_tokens: config.max_gen_tokens,
        temperature: config.temperature,
        stop: Vec::new(),
    }
}

/// Normalizes a raw model reply into a single replacement step.
fn parse_candidate_text(raw: &str) -> Result<String> {
    let mut text = raw.trim().to_string();
    // drop a leading "Step N:" marker if the model added one
    if let Some(rest) = regex::Regex::new(r"(?i)^\s*Step\s+\d+\s*[:.)]\s*")
        .expect("valid regex")
        .find(&text)
        .map(|m| text[m.end()..].to_string())
    {
        text = rest;
    }
    // collapse blank lines so the replacement stays one step
    let text = text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    if text.trim().is_empty() {
        return Err(Error::CandidateMalformed("empty correction reply".into()));
    }
    Ok(text)
}

/// Scores a candidate step against the same context the flawed step was
/// judged in, with utility pinned to 0.
fn evaluate_candidate(
    ctx: &ScoringContext,
    path: CorrectionPath,
    text: String,
    backend: &dyn ModelBackend,
    config: &PipelineConfig,
) -> Result<CorrectionCandidate> {
    let step = ReasoningStep::new(ctx.prior_steps.len() + 1, text.clone());
    let v = logical_validity(ctx, &step, backend, &config.templates)?;
    let g = verify_step(&step.text).support;
    let c = semantic_clarity(ctx, &step, backend, &config.templates)?;
    let q_eval = quality_score(v, g, c, Some(0.0), &config.weights);
    Ok(CorrectionCandidate {
        path,
        text,
        q_eval,
        g,
    })
}

/// Review-and-amend correction: the model sees its own flawed step.
pub fn intrinsic_correct(
    ctx: &ScoringContext,
    flawed: &ReasoningStep,
    backend: &dyn ModelBackend,
    config: &PipelineConfig,
) -> Result<CorrectionCandidate> {
    let prompt = crate::config::TemplateSet::render(
        &config.templates.intrinsic,
        &ctx.problem.question,
        &ctx.rendered_steps(),
        &flawed.text,
    );
    let reply = backend.generate(&BackendRequest::generate(prompt, gen_params(config)))?;
    let text = parse_candidate_text(&reply)?;
    evaluate_candidate(ctx, CorrectionPath::Intrinsic, text, backend, config)
}

/// Independent regeneration: the flawed step is withheld.
pub fn extrinsic_correct(
    ctx: &ScoringContext,
    backend: &dyn ModelBackend,
    config: &PipelineConfig,
) -> Result<CorrectionCandidate> {
    let prompt = crate::config::TemplateSet::render(
        &config.templates.extrinsic,
        &ctx.problem.question,
        &ctx.rendered_steps(),
        "",
    );
    let reply = backend.generate(&BackendRequest::generate(prompt, gen_params(config)))?;
    let text = parse_candidate_text(&reply)?;
    evaluate_candidate(ctx, CorrectionPath::Extrinsic, text, backend, config)
}

/// Picks the winner: strictly higher quality wins, an exact tie goes to the
/// intrinsic path, and a single survivor wins by default.
pub fn select_candidate(
    intrinsic: Option<CorrectionCandidate>,
    extrinsic: Option<CorrectionCandidate>,
    strict: bool,
) -> Result<CorrectionCandidate> {
    let chosen = match (intrinsic, extrinsic) {
        (None, None) => return Err(Error::CorrectionFailed),
        (Some(c), None) | (None, Some(c)) => c,
        (Some(i), Some(e)) => {
            if e.q_eval > i.q_eval {
                e
            } else {
                i
            }
        }
    };
    if strict && chosen.g == 0 {
        return Err(Error::CorrectionFailed);
    }
    Ok(chosen)
}

/// Runs both paths and selects; generation or parse failures on one path
/// leave the other as sole survivor.
pub fn correct_step(
    ctx: &ScoringContext,
    flawed: &ReasoningStep,
    backend: &dyn ModelBackend,
    config: &PipelineConfig,
) -> (
    std::result::Result<CorrectionCandidate, Error>,
    Option<f64>,
    Option<f64>,
) {
    let intrinsic = intrinsic_correct(ctx, flawed, backend, config).ok();
    let extrinsic = extrinsic_correct(ctx, backend, config).ok();
    let q_i = intrinsic.as_ref().map(|c| c.q_eval);
    let q_e = extrinsic.as_ref().map(|c| c.q_eval);
    (
        select_candidate(intrinsic, extrinsic, config.strict_correction),
        q_i,
        q_e,
    )
}
