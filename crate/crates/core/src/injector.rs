//! Controlled error injection into known-correct chains.
//!
//! Numeric injection shifts the claimed result of a step's first assertion by
//! a fixed constant (sign drawn from the seed); symbolic injection swaps the
//! first (outermost, leftmost) operator for its inverse and recomputes the
//! claimed result so the flawed step stays internally consistent. Either way
//! exactly one assertion is touched and every later step is discarded so the
//! model can resume from the fault.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::arith::{eval_expression, extract_assertions, ArithAssertion, BinOp};
use crate::backend::{BackendRequest, GenParams, ModelBackend};
use crate::chain::{extract_final_answer, grade, segment_chain, ReasoningChain, ReasoningStep};
use crate::config::{InjectorConfig, PipelineConfig, TemplateSet};
use crate::error::{Error, Result};
use crate::numeric::format_claim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionKind {
    Numeric,
    Symbolic,
}

impl std::fmt::Display for InjectionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InjectionKind::Numeric => "numeric",
            InjectionKind::Symbolic => "symbolic",
        })
    }
}

impl std::str::FromStr for InjectionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "numeric" => Ok(InjectionKind::Numeric),
            "symbolic" => Ok(InjectionKind::Symbolic),
            other => Err(Error::Config(format!("unknown injection kind '{other}'"))),
        }
    }
}

/// What to perturb and where.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub chain_id: String,
    pub step_index: usize,
    pub kind: InjectionKind,
    /// Magnitude for numeric injections; must be nonzero.
    pub numeric_delta: u64,
    pub seed: u64,
}

/// A perturbed chain prefix plus what was done to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Injection {
    pub spec: InjectionSpec,
    /// Steps 1..=k with step k perturbed; later steps discarded.
    pub prefix: ReasoningChain,
    pub perturbed_step_text: String,
    pub original_step_text: String,
}

/// Result of replaying an injection to completion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionOutcome {
    pub injection: Injection,
    pub resumed_chain: ReasoningChain,
    pub final_grade: bool,
    /// Always true: only correct chains are perturbed.
    pub baseline_grade: bool,
}

fn first_assertion(step: &ReasoningStep) -> Result<ArithAssertion> {
    extract_assertions(&step.text)
        .assertions
        .into_iter()
        .next()
        .ok_or_else(|| {
            Error::NotInjectable(format!(
                "step {} contains no arithmetic assertion",
                step.index
            ))
        })
}

fn check_step_bounds(chain: &ReasoningChain, k: usize) -> Result<()> {
    if k == 0 || k > chain.total_steps() {
        return Err(Error::NotInjectable(format!(
            "step index {k} outside 1..={}",
            chain.total_steps()
        )));
    }
    Ok(())
}

/// Splices replacement text over `span` within `text`.
fn splice(text: &str, span: (usize, usize), replacement: &str) -> String {
    let mut out = String::with_capacity(text.len());
    out.push_str(&text[..span.0]);
    out.push_str(replacement);
    out.push_str(&text[span.1..]);
    out
}

fn prefix_chain(chain: &ReasoningChain, k: usize, perturbed_text: String) -> ReasoningChain {
    let mut steps: Vec<ReasoningStep> = chain.steps[..k - 1].to_vec();
    steps.push(ReasoningStep::new(k, perturbed_text));
    ReasoningChain {
        problem: chain.problem.clone(),
        steps,
        final_answer: None,
    }
}

/// Deterministic sign for a numeric perturbation.
fn delta_sign(seed: u64) -> i64 {
    // xorshift mix; avoids depending on RNG stream stability
    let mut x = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    if x & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Shifts the claimed result of step k's first assertion by ±delta.
pub fn inject_numeric(
    chain: &ReasoningChain,
    k: usize,
    delta: u64,
    seed: u64,
) -> Result<Injection> {
    if delta == 0 {
        return Err(Error::Config("numeric delta must be nonzero".into()));
    }
    check_step_bounds(chain, k)?;
    let step = &chain.steps[k - 1];
    let assertion = first_assertion(step)?;
    let shift = BigRational::from_integer((delta as i64 * delta_sign(seed)).into());
    let new_claim = &assertion.claimed + &shift;
    let new_text = splice(&step.text, assertion.claimed_span, &format_claim(&new_claim));
    Ok(Injection {
        spec: InjectionSpec {
            chain_id: chain.problem.id.clone(),
            step_index: k,
            kind: InjectionKind::Numeric,
            numeric_delta: delta,
            seed,
        },
        prefix: prefix_chain(chain, k, new_text.clone()),
        perturbed_step_text: new_text,
        original_step_text: step.text.clone(),
    })
}

/// Swaps the first eligible operator of step k's first assertion for its
/// inverse and (unless `stale_result`) recomputes the claimed value under the
/// inverted operator. Operators whose inversion would divide by zero are
/// skipped; if none is eligible the step is not injectable.
pub fn inject_symbolic(chain: &ReasoningChain, k: usize, stale_result: bool) -> Result<Injection> {
    check_step_bounds(chain, k)?;
    let step = &chain.steps[k - 1];
    let assertion = first_assertion(step)?;
    let candidates = assertion.lhs.binary_ops_outermost();
    if candidates.is_empty() {
        return Err(Error::NotInjectable(format!(
            "assertion in step {k} has no binary operator"
        )));
    }
    for (path, op, op_span) in candidates {
        let swapped = assertion.lhs.with_op_at(&path, op.inverse());
        let new_value = match eval_expression(&swapped) {
            Ok(v) => v,
            Err(_) => continue, // zero-divisor inversion: try the next operator
        };
        // the rewritten claim must read back as a single number, or the
        // flawed step would not be internally consistent (and a second
        // swap could not restore it)
        if crate::numeric::parse_rational(&format_claim(&new_value)).as_ref() != Some(&new_value) {
            continue;
        }
        let source_char = step.text[op_span.0..op_span.1]
            .chars()
            .next()
            .expect("operator span is non-empty");
        let Some(spelling) = BinOp::inverse_spelling(source_char) else {
            continue;
        };
        // rightmost span first so earlier offsets stay valid
        let mut new_text = if stale_result {
            step.text.clone()
        } else {
            splice(&step.text, assertion.claimed_span, &format_claim(&new_value))
        };
        new_text = splice(&new_text, op_span, &spelling.to_string());
        return Ok(Injection {
            spec: InjectionSpec {
                chain_id: chain.problem.id.clone(),
                step_index: k,
                kind: InjectionKind::Symbolic,
                numeric_delta: 0,
                seed: 0,
            },
            prefix: prefix_chain(chain, k, new_text.clone()),
            perturbed_step_text: new_text,
            original_step_text: step.text.clone(),
        });
    }
    Err(Error::NotInjectable(format!(
        "every operator inversion in step {k} would divide by zero"
    )))
}

/// Asks the backend to continue from the perturbed prefix, then grades the
/// completed chain.
pub fn resume_from(
    injection: &Injection,
    backend: &dyn ModelBackend,
    config: &PipelineConfig,
) -> Result<InjectionOutcome> {
    let prefix = &injection.prefix;
    let prompt = TemplateSet::render(
        &config.templates.resume,
        &prefix.problem.question,
        &prefix.joined_text(),
        "",
    );
    let continuation = backend.generate(&BackendRequest::generate(
        prompt,
        GenParams {
            max_tokens: config.max_gen_tokens,
            temperature: config.temperature,
            stop: Vec::new(),
        },
    ))?;
    let mut steps: Vec<String> = prefix.steps.iter().map(|s| s.text.clone()).collect();
    if !continuation.trim().is_empty() {
        steps.extend(segment_chain(&continuation)?);
    }
    let resumed = ReasoningChain::new(prefix.problem.clone(), steps)?
        .with_extracted_answer(config.answer_mode);
    let final_grade = resumed
        .final_answer
        .as_ref()
        .map(|a| grade(a, &prefix.problem.gold_answer))
        .unwrap_or(false);
    Ok(InjectionOutcome {
        injection: injection.clone(),
        resumed_chain: resumed,
        final_grade,
        baseline_grade: true,
    })
}

/// One aggregate row of a position sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub all_steps: usize,
    pub err_step: usize,
    #[serde(rename = "type")]
    pub kind: InjectionKind,
    pub ori_acc: f64,
    pub fin_acc: f64,
    pub drop: f64,
}

/// Stable per-injection seed derived from the master seed and coordinates.
fn derive_seed(master: u64, chain_id: &str, k: usize, kind: InjectionKind) -> u64 {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(chain_id.as_bytes());
    hasher.update((k as u64).to_le_bytes());
    hasher.update([kind as u8]);
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// Verifies the correct-baseline precondition for a sweep input chain.
pub fn baseline_is_correct(chain: &ReasoningChain, answer_mode: crate::chain::DatasetKind) -> bool {
    extract_final_answer(&chain.joined_text(), answer_mode)
        .map(|a| grade(&a, &chain.problem.gold_answer))
        .unwrap_or(false)
}

/// Injects every (chain, position, kind) combination, replays each through
/// the backend, and aggregates accuracy drops grouped by
/// (total steps, error position, kind). Combinations where the step is not
/// injectable are skipped.
pub fn sweep(
    chains: &[ReasoningChain],
    positions: &[usize],
    kinds: &[InjectionKind],
    backend: &dyn ModelBackend,
    config: &PipelineConfig,
    injector: &InjectorConfig,
) -> Result<Vec<SweepRow>> {
    for chain in chains {
        if !baseline_is_correct(chain, config.answer_mode) {
            return Err(Error::DegenerateInput(format!(
                "chain '{}' does not grade correct at baseline",
                chain.problem.id
            )));
        }
    }
    let mut groups: std::collections::BTreeMap<(usize, usize, InjectionKind), (u64, u64)> =
        std::collections::BTreeMap::new();
    for chain in chains {
        for &k in positions {
            if k == 0 || k > chain.total_steps() {
                continue;
            }
            for &kind in kinds {
                let seed = derive_seed(config.seed, &chain.problem.id, k, kind);
                let injection = match kind {
                    InjectionKind::Numeric => inject_numeric(chain, k, injector.delta, seed),
                    InjectionKind::Symbolic => {
                        inject_symbolic(chain, k, injector.stale_result)
                    }
                };
                let injection = match injection {
                    Ok(i) => i,
                    Err(Error::NotInjectable(_)) => continue,
                    Err(e) => return Err(e),
                };
                let outcome = resume_from(&injection, backend, config)?;
                let entry = groups
                    .entry((chain.total_steps(), k, kind))
                    .or_insert((0, 0));
                entry.1 += 1;
                if outcome.final_grade {
                    entry.0 += 1;
                }
            }
        }
    }
    let mut rows: Vec<SweepRow> = groups
        .into_iter()
        .map(|((all_steps, err_step, kind), (correct, total))| {
            let fin_acc = 100.0 * correct as f64 / total as f64;
            SweepRow {
                all_steps,
                err_step,
                kind,
                ori_acc: 100.0,
                fin_acc,
                drop: 100.0 - fin_acc,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.kind, a.all_steps, a.err_step).cmp(&(b.kind, b.all_steps, b.err_step))
    });
    Ok(rows)
}
