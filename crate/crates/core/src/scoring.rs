//! Per-step risk scoring.
//!
//! Each step is scored on four axes: logical validity V (a yes/no judgment
//! from the backend), factual support G (deterministic arithmetic
//! verification), semantic clarity C (sigmoid of the mean token
//! log-probability), and process utility U (gold-answer log-probability gain,
//! training mode only). Validity and support act as a veto: either being 0
//! forces the composite quality Q to 0. The risk of a step is its positional
//! impact times (1 - Q), and steps whose risk strictly exceeds the threshold
//! are flagged for correction.

use serde::{Deserialize, Serialize};

use crate::arith::{verify_step, StepArithReport};
use crate::backend::{BackendRequest, ModelBackend, Target};
use crate::chain::{Answer, Problem, ReasoningStep};
use crate::config::{ImpactForm, ImpactParams, PipelineConfig, QualityWeights, RunMode, TemplateSet};
use crate::error::{Error, Result};

/// Replies accepted as an affirmative validity judgment.
pub const VALID_RESPONSES: [&str; 3] = ["yes", "valid", "correct"];

/// Risk threshold; fixed for a run and recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskThreshold {
    pub tau: f64,
}

impl RiskThreshold {
    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_nan() || tau < 0.0 {
            return Err(Error::Config(format!("tau must be >= 0, got {tau}")));
        }
        Ok(RiskThreshold { tau })
    }
}

/// Everything the scorer knows about one step, serialized per step into the
/// trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepAssessment {
    pub k: usize,
    pub v: u8,
    pub g: u8,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    pub q: f64,
    pub i: f64,
    pub r: f64,
    pub flagged: bool,
    pub mode: RunMode,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub assertion_diagnostics: Vec<String>,
}

/// Prior (possibly corrected) steps plus the problem, against which one step
/// is judged.
#[derive(Debug, Clone, Copy)]
pub struct ScoringContext<'a> {
    pub problem: &'a Problem,
    pub prior_steps: &'a [ReasoningStep],
}

impl ScoringContext<'_> {
    pub fn rendered_steps(&self) -> String {
        self.prior_steps
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn parse_judgment(reply: &str) -> u8 {
    let first = reply
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| c.is_ascii_punctuation())
        .to_lowercase();
    u8::from(VALID_RESPONSES.contains(&first.as_str()))
}

/// V(t_k): asks the backend whether the step is derivable from its context;
/// 1 iff the first token of the reply is an accepted affirmative.
pub fn logical_validity(
    ctx: &ScoringContext,
    step: &ReasoningStep,
    backend: &dyn ModelBackend,
    templates: &TemplateSet,
) -> Result<u8> {
    let prompt = TemplateSet::render(
        &templates.verify,
        &ctx.problem.question,
        &ctx.rendered_steps(),
        &step.text,
    );
    let reply = backend.judge(&BackendRequest::judge(prompt))?;
    Ok(parse_judgment(&reply))
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// C(t_k): sigmoid of the mean conditional token log-probability of the step
/// given the context. Strictly inside (0, 1) for finite scores; the
/// mean-goes-to-negative-infinity limit yields 0.
pub fn semantic_clarity(
    ctx: &ScoringContext,
    step: &ReasoningStep,
    backend: &dyn ModelBackend,
    templates: &TemplateSet,
) -> Result<f64> {
    if step.tokens.is_empty() {
        return Err(Error::DegenerateInput("step has no tokens".into()));
    }
    let prompt = TemplateSet::render(
        &templates.generate,
        &ctx.problem.question,
        &ctx.rendered_steps(),
        "",
    );
    let context_text = format!("{prompt}\n{}", ctx.rendered_steps());
    let request = BackendRequest::logprobs(
        context_text,
        Target {
            text: step.text.clone(),
            tokens: step.tokens.clone(),
        },
    );
    let scores = backend.logprobs(&request)?;
    if scores.len() != step.tokens.len() {
        return Err(Error::Alignment {
            expected: step.tokens.len(),
            got: scores.len(),
        });
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(sigmoid(mean))
}

/// U(t_k): log-probability gain of the gold answer from including the step.
/// Training mode only; may be negative.
pub fn process_utility(
    ctx: &ScoringContext,
    step: &ReasoningStep,
    gold: &Answer,
    backend: &dyn ModelBackend,
    templates: &TemplateSet,
) -> Result<f64> {
    let target = Target::new(gold.raw.clone());
    let with_step = format!(
        "{}\n{}",
        TemplateSet::render(&templates.generate, &ctx.problem.question, "", ""),
        {
            let mut steps = ctx.rendered_steps();
            if !steps.is_empty() {
                steps.push('\n');
            }
            steps.push_str(&step.text);
            steps
        }
    );
    let without_step = format!(
        "{}\n{}",
        TemplateSet::render(&templates.generate, &ctx.problem.question, "", ""),
        ctx.rendered_steps()
    );
    let lp_with: f64 = backend
        .logprobs(&BackendRequest::logprobs(with_step, target.clone()))?
        .iter()
        .sum();
    let lp_without: f64 = backend
        .logprobs(&BackendRequest::logprobs(without_step, target))?
        .iter()
        .sum();
    Ok(lp_with - lp_without)
}

/// Q(t_k): veto-gated composite quality, clamped to [0, 1].
///
/// With U present: `V * G * (w_c * C + w_u * U)`. With U absent (inference),
/// the clarity term takes full weight: `V * G * C`.
pub fn quality_score(v: u8, g: u8, c: f64, u: Option<f64>, weights: &QualityWeights) -> f64 {
    let gate = f64::from(v) * f64::from(g);
    let inner = match u {
        Some(u) => weights.w_c * c + weights.w_u * u,
        None => c,
    };
    (gate * inner).clamp(0.0, 1.0)
}

/// I(k): exponential positional impact, strictly increasing in k when
/// alpha > 0.
pub fn positional_impact(k: usize, total_steps: usize, params: &ImpactParams) -> f64 {
    let x = match params.form {
        ImpactForm::Normalized => k as f64 / total_steps as f64,
        ImpactForm::Appendix => (k - 1) as f64,
    };
    params.w_a * (params.alpha * x).exp()
}

/// R(t_k) = I(k) * (1 - Q(t_k)).
pub fn risk_score(impact: f64, quality: f64) -> f64 {
    impact * (1.0 - quality)
}

/// Strictly-greater comparison against the threshold.
pub fn flag(risk: f64, threshold: &RiskThreshold) -> bool {
    risk > threshold.tau
}

/// Runs the full per-step assessment: V and C through the backend, G through
/// the arithmetic engine, U in training mode, then Q, I, R, and the verdict.
pub fn assess_step(
    ctx: &ScoringContext,
    step: &ReasoningStep,
    k: usize,
    total_steps: usize,
    config: &PipelineConfig,
    backend: &dyn ModelBackend,
) -> Result<(StepAssessment, StepArithReport)> {
    let arith = verify_step(&step.text);
    let v = logical_validity(ctx, step, backend, &config.templates)?;
    let g = arith.support;
    let c = semantic_clarity(ctx, step, backend, &config.templates)?;
    let u = match config.mode {
        RunMode::Training => Some(process_utility(
            ctx,
            step,
            &ctx.problem.gold_answer,
            backend,
            &config.templates,
        )?),
        RunMode::Inference => None,
    };
    let q = quality_score(v, g, c, u, &config.weights);
    let i = positional_impact(k, total_steps, &config.impact);
    let r = risk_score(i, q);
    let threshold = RiskThreshold::new(config.tau)?;
    Ok((
        StepAssessment {
            k,
            v,
            g,
            c,
            u,
            q,
            i,
            r,
            flagged: flag(r, &threshold),
            mode: config.mode,
            assertion_diagnostics: arith.diagnostics.clone(),
        },
        arith,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{MockBackend, MockScript, RequestKind};

    fn ctx_fixture() -> (Problem, Vec<ReasoningStep>) {
        let problem = Problem::new("p", "How many apples?", "1015").unwrap();
        let prior = vec![ReasoningStep::new(1, "Bob picks 15 apples on day one.")];
        (problem, prior)
    }

    #[test]
    fn judgment_parses_first_token() {
        assert_eq!(parse_judgment("Yes"), 1);
        assert_eq!(parse_judgment("  valid, because ..."), 1);
        assert_eq!(parse_judgment("Correct."), 1);
        assert_eq!(parse_judgment("No, the calculation is wrong"), 0);
        assert_eq!(parse_judgment(""), 0);
        assert_eq!(parse_judgment("maybe yes"), 0);
    }

    #[test]
    fn validity_uses_backend_judgment() {
        let (problem, prior) = ctx_fixture();
        let ctx = ScoringContext {
            problem: &problem,
            prior_steps: &prior,
        };
        let step = ReasoningStep::new(2, "125 * 8 = 1,005 apples over 8 days.");
        let b = MockBackend::new(MockScript::default().rule(
            Some(RequestKind::Judge),
            r"1,005",
            MockScript::text("No"),
        ))
        .unwrap();
        assert_eq!(
            logical_validity(&ctx, &step, &b, &TemplateSet::default()).unwrap(),
            0
        );
        let good = ReasoningStep::new(2, "125 * 8 = 1,000 apples over 8 days.");
        assert_eq!(
            logical_validity(&ctx, &good, &b, &TemplateSet::default()).unwrap(),
            1
        );
    }

    #[test]
    fn clarity_is_sigmoid_of_mean_logprob() {
        let (problem, prior) = ctx_fixture();
        let ctx = ScoringContext {
            problem: &problem,
            prior_steps: &prior,
        };
        let step = ReasoningStep::new(2, "two tokens");
        let b = MockBackend::new(MockScript {
            default_logprob: 0.0,
            ..MockScript::default()
        })
        .unwrap();
        let c = semantic_clarity(&ctx, &step, &b, &TemplateSet::default()).unwrap();
        assert!((c - 0.5).abs() < 1e-12);

        let b = MockBackend::new(MockScript {
            default_logprob: -1.0,
            ..MockScript::default()
        })
        .unwrap();
        let c = semantic_clarity(&ctx, &step, &b, &TemplateSet::default()).unwrap();
        assert!((c - 0.268_941_421_369_995_1).abs() < 1e-9);
    }

    #[test]
    fn clarity_limit_at_minus_infinity_is_zero() {
        assert_eq!(sigmoid(f64::NEG_INFINITY), 0.0);
        assert!(sigmoid(-700.0) > 0.0);
        assert!(sigmoid(-700.0) < 1e-300);
    }

    #[test]
    fn utility_is_log_ratio() {
        let (problem, prior) = ctx_fixture();
        let ctx = ScoringContext {
            problem: &problem,
            prior_steps: &prior,
        };
        let step = ReasoningStep::new(2, "next step");
        // gold "1015" is a single token; script both conditionals
        let b = MockBackend::new(
            MockScript::default()
                .rule(
                    Some(RequestKind::Logprobs),
                    r"(?s)next step.*TARGET",
                    crate::backend::MockResponse::Logprobs {
                        logprobs: vec![0.9f64.ln()],
                    },
                )
                .rule(
                    Some(RequestKind::Logprobs),
                    r"TARGET",
                    crate::backend::MockResponse::Logprobs {
                        logprobs: vec![0.45f64.ln()],
                    },
                ),
        )
        .unwrap();
        let u = process_utility(
            &ctx,
            &step,
            &problem.gold_answer,
            &b,
            &TemplateSet::default(),
        )
        .unwrap();
        assert!((u - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn utility_zero_for_identical_conditionals() {
        let (problem, prior) = ctx_fixture();
        let ctx = ScoringContext {
            problem: &problem,
            prior_steps: &prior,
        };
        let step = ReasoningStep::new(2, "next step");
        let b = MockBackend::new(MockScript::default()).unwrap();
        let u = process_utility(
            &ctx,
            &step,
            &problem.gold_answer,
            &b,
            &TemplateSet::default(),
        )
        .unwrap();
        assert!(u.abs() < 1e-12);
    }

    #[test]
    fn quality_veto_and_substitution() {
        let w = QualityWeights::default();
        assert_eq!(quality_score(0, 1, 0.9, Some(0.9), &w), 0.0);
        assert_eq!(quality_score(1, 0, 0.9, Some(0.9), &w), 0.0);
        let q = quality_score(1, 1, 0.5, Some(0.0), &w);
        assert!((q - 0.30).abs() < 1e-12);
        let q = quality_score(1, 1, 0.5, None, &w);
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quality_clamps_to_unit_interval() {
        let w = QualityWeights::default();
        assert_eq!(quality_score(1, 1, 0.9, Some(100.0), &w), 1.0);
        assert_eq!(quality_score(1, 1, 0.9, Some(-100.0), &w), 0.0);
    }

    #[test]
    fn impact_forms() {
        let p = ImpactParams::new(0.3, 0.0, ImpactForm::Normalized).unwrap();
        for k in 1..=5 {
            assert!((positional_impact(k, 5, &p) - 0.3).abs() < 1e-15);
        }
        let p = ImpactParams::new(0.3, 1.2, ImpactForm::Normalized).unwrap();
        let at_end = positional_impact(7, 7, &p);
        assert!((at_end - 0.3 * 1.2f64.exp()).abs() < 1e-12);
        let p = ImpactParams::new(0.3, 1.2, ImpactForm::Appendix).unwrap();
        assert!((positional_impact(1, 9, &p) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn risk_and_flagging() {
        assert_eq!(risk_score(0.8, 1.0), 0.0);
        assert!((risk_score(0.8, 0.3) - 0.56).abs() < 1e-12);
        let t = RiskThreshold::new(0.35).unwrap();
        assert!(flag(0.36, &t));
        assert!(!flag(0.35, &t)); // strictly greater
        let never = RiskThreshold::new(f64::INFINITY).unwrap();
        assert!(!flag(1e12, &never));
    }

    #[test]
    fn scaling_base_and_threshold_preserves_flags() {
        let w = QualityWeights::default();
        for scale in [0.5, 2.0, 10.0] {
            for (k, total) in [(1usize, 4usize), (3, 4), (4, 4)] {
                for q10 in 0..=10 {
                    let q = quality_score(1, 1, f64::from(q10) / 10.0, None, &w);
                    let p1 = ImpactParams::new(0.4, 0.7, ImpactForm::Normalized).unwrap();
                    let p2 = ImpactParams::new(0.4 * scale, 0.7, ImpactForm::Normalized).unwrap();
                    let r1 = risk_score(positional_impact(k, total, &p1), q);
                    let r2 = risk_score(positional_impact(k, total, &p2), q);
                    let t1 = RiskThreshold::new(0.35).unwrap();
                    let t2 = RiskThreshold::new(0.35 * scale).unwrap();
                    assert_eq!(flag(r1, &t1), flag(r2, &t2));
                }
            }
        }
    }

    #[test]
    fn assessment_composes_all_signals() {
        let (problem, prior) = ctx_fixture();
        let ctx = ScoringContext {
            problem: &problem,
            prior_steps: &prior,
        };
        let flawed = ReasoningStep::new(2, "Over 8 days he picks 125 * 8 = 1,005 apples.");
        let config = PipelineConfig::default();
        let b = MockBackend::new(MockScript::default().rule(
            Some(RequestKind::Judge),
            r"1,005",
            MockScript::text("No"),
        ))
        .unwrap();
        let (a, _) = assess_step(&ctx, &flawed, 2, 3, &config, &b).unwrap();
        assert_eq!(a.v, 0);
        assert_eq!(a.g, 0);
        assert_eq!(a.q, 0.0);
        assert!((a.r - a.i).abs() < 1e-15);
        assert!(a.flagged, "flawed step must exceed default tau: r={}", a.r);

        let good = ReasoningStep::new(2, "Over 8 days he picks 125 * 8 = 1,000 apples.");
        let (a, _) = assess_step(&ctx, &good, 2, 3, &config, &b).unwrap();
        assert_eq!((a.v, a.g), (1, 1));
        assert!(!a.flagged, "clean step must stay under tau: r={}", a.r);
    }
}
