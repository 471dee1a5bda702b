//! Token-importance scoring and budgeted chain compression.
//!
//! Pruning keeps exactly `ceil(gamma * n)` tokens of highest importance,
//! breaking ties toward earlier positions, so the realized compression ratio
//! always lands within one token of the target. Retained sets are nested
//! across budgets: shrinking gamma only removes tokens.

use serde::{Deserialize, Serialize};

use crate::backend::{BackendRequest, ModelBackend, Target};
use crate::chain::{ReasoningChain, ReasoningStep};
use crate::error::{Error, Result};

/// Importance score for one token, indexed over the whole chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub index: usize,
    pub importance: f64,
}

/// Target compression ratio in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionRatio {
    pub gamma: f64,
}

impl CompressionRatio {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Config(format!(
                "gamma must be in (0, 1], got {gamma}"
            )));
        }
        Ok(CompressionRatio { gamma })
    }
}

/// Where per-token importance comes from.
pub enum ImportanceSource<'a> {
    /// Every token scores 1.0.
    Uniform,
    /// Negative conditional log-probability from the backend (surprisal).
    SelfInformation(&'a dyn ModelBackend),
    /// Pre-computed scores aligned to this chain's tokens, e.g. from a
    /// token-classifier score file.
    External(&'a [f64]),
}

/// Produces one finite score per chain token.
pub fn score_tokens(chain: &ReasoningChain, source: ImportanceSource) -> Result<Vec<TokenScore>> {
    let n = chain.token_count();
    let scores: Vec<f64> = match source {
        ImportanceSource::Uniform => vec![1.0; n],
        ImportanceSource::External(scores) => {
            if scores.len() != n {
                return Err(Error::Alignment {
                    expected: n,
                    got: scores.len(),
                });
            }
            scores.to_vec()
        }
        ImportanceSource::SelfInformation(backend) => {
            let tokens: Vec<String> = chain
                .steps
                .iter()
                .flat_map(|s| s.tokens.iter().cloned())
                .collect();
            let request = BackendRequest::logprobs(
                chain.problem.question.clone(),
                Target {
                    text: chain.joined_text(),
                    tokens,
                },
            );
            let logprobs = backend.logprobs(&request)?;
            if logprobs.len() != n {
                return Err(Error::Alignment {
                    expected: n,
                    got: logprobs.len(),
                });
            }
            logprobs.into_iter().map(|lp| -lp).collect()
        }
    };
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::DegenerateInput(format!(
            "non-finite token importance {bad}"
        )));
    }
    Ok(scores
        .into_iter()
        .enumerate()
        .map(|(index, importance)| TokenScore { index, importance })
        .collect())
}

/// Indices (into the chain-wide token stream) retained at budget `gamma`:
/// the top `ceil(gamma * n)` by importance, earlier position winning ties.
pub fn retained_indices(scores: &[TokenScore], gamma: CompressionRatio) -> Vec<usize> {
    let n = scores.len();
    let keep = ((gamma.gamma * n as f64).ceil() as usize).min(n);
    let mut order: Vec<&TokenScore> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.importance
            .partial_cmp(&a.importance)
            .expect("scores are finite")
            .then(a.index.cmp(&b.index))
    });
    let mut kept: Vec<usize> = order[..keep].iter().map(|s| s.index).collect();
    kept.sort_unstable();
    kept
}

/// Prunes the chain to the budget. Surviving tokens keep their original
/// order; steps whose tokens are all pruned are dropped and the remaining
/// steps are re-indexed 1..K'.
pub fn prune(
    chain: &ReasoningChain,
    scores: &[TokenScore],
    gamma: CompressionRatio,
) -> Result<ReasoningChain> {
    let n = chain.token_count();
    if scores.len() != n {
        return Err(Error::Alignment {
            expected: n,
            got: scores.len(),
        });
    }
    let kept = retained_indices(scores, gamma);
    if kept.len() == n {
        return Ok(chain.clone());
    }
    let mut kept_iter = kept.iter().peekable();
    let mut offset = 0usize;
    let mut steps: Vec<ReasoningStep> = Vec::new();
    for step in &chain.steps {
        let end = offset + step.token_count();
        let mut survivors: Vec<String> = Vec::new();
        while let Some(&&idx) = kept_iter.peek() {
            if idx >= end {
                break;
            }
            survivors.push(step.tokens[idx - offset].clone());
            kept_iter.next();
        }
        if !survivors.is_empty() {
            steps.push(ReasoningStep::from_tokens(steps.len() + 1, survivors));
        }
        offset = end;
    }
    if steps.is_empty() {
        return Err(Error::DegenerateInput(
            "pruning removed every token".into(),
        ));
    }
    Ok(ReasoningChain {
        problem: chain.problem.clone(),
        steps,
        final_answer: None,
    })
}

/// Realized compression: pruned token count over original token count.
pub fn actual_ratio(original: &ReasoningChain, pruned: &ReasoningChain) -> Result<f64> {
    let n = original.token_count();
    if n == 0 {
        return Err(Error::DegenerateInput("original chain has no tokens".into()));
    }
    Ok(pruned.token_count() as f64 / n as f64)
}

/// Baseline comparison utility: keeps the first `ceil(gamma * n)` tokens.
pub fn truncate(chain: &ReasoningChain, gamma: CompressionRatio) -> Result<ReasoningChain> {
    let n = chain.token_count();
    let scores: Vec<TokenScore> = (0..n)
        .map(|index| TokenScore {
            index,
            importance: (n - index) as f64,
        })
        .collect();
    prune(chain, &scores, gamma)
}
