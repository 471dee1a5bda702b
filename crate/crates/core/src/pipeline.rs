//! End-to-end orchestration: generate an initial chain, prune it, walk the
//! steps in order scoring each against the accumulated context, route flagged
//! steps through correction, and account for everything in a replayable
//! trace.
//!
//! Within one run the steps are strictly sequential (the context grows step
//! by step); separate problems are independent and may run concurrently.

use serde::{Deserialize, Serialize};

use crate::backend::{BackendRequest, CallCounts, CountingBackend, GenParams, ModelBackend};
use crate::chain::{grade, Answer, Problem, ReasoningChain, ReasoningStep};
use crate::config::{PipelineConfig, ScoreSourceKind, TemplateSet};
use crate::corrector::{correct_step, CorrectionEvent};
use crate::dataset::ExternalScores;
use crate::error::{Error, Result};
use crate::pruner::{actual_ratio, prune, score_tokens, CompressionRatio, ImportanceSource};
use crate::scoring::{assess_step, ScoringContext, StepAssessment};

/// Complete record of one pipeline run. Serialization is deterministic given
/// the same config, seed, and scripted (or cached) backend; wall-clock time
/// is kept out of the serialized form and reported separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub problem_id: String,
    pub config: PipelineConfig,
    pub backend_model: String,
    pub pruned_steps: Vec<String>,
    pub final_steps: Vec<String>,
    pub assessments: Vec<StepAssessment>,
    pub corrections: Vec<CorrectionEvent>,
    pub tokens_initial: usize,
    pub tokens_pruned: usize,
    pub tokens_final: usize,
    pub act_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<Answer>,
    pub graded_correct: bool,
    pub call_counts: CallCounts,
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunTrace {
    fn failure(problem: &Problem, config: &PipelineConfig, model: String, err: &Error) -> Self {
        RunTrace {
            problem_id: problem.id.clone(),
            config: config.clone(),
            backend_model: model,
            pruned_steps: Vec::new(),
            final_steps: Vec::new(),
            assessments: Vec::new(),
            corrections: Vec::new(),
            tokens_initial: 0,
            tokens_pruned: 0,
            tokens_final: 0,
            act_ratio: 0.0,
            final_answer: None,
            graded_correct: false,
            call_counts: CallCounts::default(),
            failed: true,
            error: Some(format!("{} ({})", err, err.category())),
        }
    }

    /// Re-applies the recorded corrections to the pruned steps; must equal
    /// the final steps.
    pub fn reconstruct_final_steps(&self) -> Vec<String> {
        let mut steps = self.pruned_steps.clone();
        for event in &self.corrections {
            if let Some(text) = &event.replaced_text {
                if let Some(slot) = steps.get_mut(event.step_k - 1) {
                    *slot = text.clone();
                }
            }
        }
        steps
    }
}

/// One problem through the whole pipeline.
pub struct PipelineOutcome {
    pub chain: ReasoningChain,
    pub trace: RunTrace,
}

/// Runs the full mechanism for one problem: initial generation, pruning,
/// per-step verification against the growing context, and targeted
/// correction of flagged steps.
pub fn run_ascot(
    problem: &Problem,
    config: &PipelineConfig,
    backend: &dyn ModelBackend,
    external_scores: Option<&[f64]>,
) -> Result<PipelineOutcome> {
    config.validate()?;
    let counting = CountingBackend::new(backend);

    // initial chain
    let prompt = TemplateSet::render(&config.templates.generate, &problem.question, "", "");
    let initial_text = counting.generate(&BackendRequest::generate(
        prompt,
        GenParams {
            max_tokens: config.max_gen_tokens,
            temperature: config.temperature,
            stop: Vec::new(),
        },
    ))?;
    let initial = ReasoningChain::from_text(problem.clone(), &initial_text)?;
    let tokens_initial = initial.token_count();

    // prune to budget
    let source = match config.score_source {
        ScoreSourceKind::Uniform => ImportanceSource::Uniform,
        ScoreSourceKind::SelfInformation => ImportanceSource::SelfInformation(&counting),
        ScoreSourceKind::ExternalFile => ImportanceSource::External(
            external_scores.ok_or_else(|| {
                Error::Config("score_source=external_file but no scores were supplied".into())
            })?,
        ),
    };
    let scores = score_tokens(&initial, source)?;
    let pruned = prune(&initial, &scores, CompressionRatio::new(config.gamma)?)?;
    let tokens_pruned = pruned.token_count();
    let act_ratio = actual_ratio(&initial, &pruned)?;

    // verify-and-correct walk
    let total_steps = pruned.total_steps();
    let mut final_steps: Vec<ReasoningStep> = Vec::with_capacity(total_steps);
    let mut assessments = Vec::with_capacity(total_steps);
    let mut corrections = Vec::new();
    for (idx, step) in pruned.steps.iter().enumerate() {
        let k = idx + 1;
        let ctx = ScoringContext {
            problem,
            prior_steps: &final_steps,
        };
        let (assessment, _arith) = assess_step(&ctx, step, k, total_steps, config, &counting)?;
        let flagged = assessment.flagged;
        assessments.push(assessment);
        if flagged {
            let (selection, q_i, q_e) = correct_step(&ctx, step, &counting, config);
            match selection {
                Ok(candidate) => {
                    corrections.push(CorrectionEvent {
                        step_k: k,
                        path_chosen: Some(candidate.path),
                        q_intrinsic: q_i,
                        q_extrinsic: q_e,
                        replaced_text: Some(candidate.text.clone()),
                        failure: None,
                    });
                    final_steps.push(ReasoningStep::new(k, candidate.text));
                }
                Err(e) => {
                    // keep the original step and continue; the walk never aborts
                    corrections.push(CorrectionEvent {
                        step_k: k,
                        path_chosen: None,
                        q_intrinsic: q_i,
                        q_extrinsic: q_e,
                        replaced_text: None,
                        failure: Some(e.to_string()),
                    });
                    final_steps.push(step.clone());
                }
            }
        } else {
            final_steps.push(step.clone());
        }
    }

    let final_chain = ReasoningChain {
        problem: problem.clone(),
        steps: final_steps,
        final_answer: None,
    }
    .with_extracted_answer(config.answer_mode);
    let graded_correct = final_chain
        .final_answer
        .as_ref()
        .map(|a| grade(a, &problem.gold_answer))
        .unwrap_or(false);

    let trace = RunTrace {
        problem_id: problem.id.clone(),
        config: config.clone(),
        backend_model: backend.model_id(),
        pruned_steps: pruned.steps.iter().map(|s| s.text.clone()).collect(),
        final_steps: final_chain.steps.iter().map(|s| s.text.clone()).collect(),
        assessments,
        corrections,
        tokens_initial,
        tokens_pruned,
        tokens_final: final_chain.token_count(),
        act_ratio,
        final_answer: final_chain.final_answer.clone(),
        graded_correct,
        call_counts: counting.counts(),
        failed: false,
        error: None,
    };
    Ok(PipelineOutcome {
        chain: final_chain,
        trace,
    })
}

/// Aggregates over one dataset at one compression ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchOutcome {
    pub traces: Vec<RunTrace>,
    /// Percentage of problems whose final answer graded correct; failed runs
    /// count as incorrect.
    pub accuracy: f64,
    /// Mean final-chain token count over non-failed runs.
    pub mean_tokens: f64,
    /// Mean realized compression over non-failed runs.
    pub mean_act_ratio: f64,
    pub failures: u64,
}

/// Runs every problem, in parallel up to `config.parallelism`, collecting
/// traces in dataset order. Individual failures become failed traces, never
/// a batch crash.
pub fn batch_run(
    problems: &[Problem],
    config: &PipelineConfig,
    backend: &(dyn ModelBackend),
    external: Option<&ExternalScores>,
) -> Result<BatchOutcome> {
    if problems.is_empty() {
        return Err(Error::DegenerateInput("dataset is empty".into()));
    }
    config.validate()?;

    let run_one = |problem: &Problem| -> RunTrace {
        let scores = external.and_then(|e| e.get(&problem.id));
        if config.score_source == ScoreSourceKind::ExternalFile && scores.is_none() {
            return RunTrace::failure(
                problem,
                config,
                backend.model_id(),
                &Error::Alignment {
                    expected: 0,
                    got: 0,
                },
            );
        }
        match run_ascot(problem, config, backend, scores) {
            Ok(outcome) => outcome.trace,
            Err(e) => RunTrace::failure(problem, config, backend.model_id(), &e),
        }
    };

    let traces: Vec<RunTrace> = if config.parallelism <= 1 {
        problems.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            problems.par_iter().map(run_one).collect()
        })
    };

    let total = traces.len() as f64;
    let correct = traces.iter().filter(|t| t.graded_correct).count() as f64;
    let ok: Vec<&RunTrace> = traces.iter().filter(|t| !t.failed).collect();
    let failures = (traces.len() - ok.len()) as u64;
    let mean = |f: &dyn Fn(&RunTrace) -> f64| -> f64 {
        if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|t| f(t)).sum::<f64>() / ok.len() as f64
        }
    };
    Ok(BatchOutcome {
        accuracy: 100.0 * correct / total,
        mean_tokens: mean(&|t| t.tokens_final as f64),
        mean_act_ratio: mean(&|t| t.act_ratio),
        failures,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{MockBackend, MockScript, RequestKind};
    use crate::chain::DatasetKind;

    /// Mock for the worked example: a three-step solution whose second step
    /// miscomputes 125 * 8, with correction rules for both flawed steps.
    pub(crate) fn case_study_script() -> MockScript {
        let initial = "Bob picks 15 apples on the first day.\n\n\
                       Over the next 8 days he picks 125 * 8 = 1,005 apples.\n\n\
                       In total he picked 15 + 1,005 = 1,020 apples. The answer is 1,020.";
        MockScript::default()
            .rule(
                Some(RequestKind::Generate),
                r"(?s)flagged as potentially flawed:.*125 \* 8 = 1,005",
                MockScript::text("Over the next 8 days he picks 125 * 8 = 1,000 apples."),
            )
            .rule(
                Some(RequestKind::Generate),
                r"(?s)flagged as potentially flawed:.*15 \+ 1,005 = 1,020",
                MockScript::text(
                    "In total he picked 15 + 1,000 = 1,015 apples. The answer is 1,015.",
                ),
            )
            .rule(
                Some(RequestKind::Generate),
                r"(?s)Write the next reasoning step",
                MockScript::text("Let me continue the reasoning."),
            )
            .rule(
                Some(RequestKind::Judge),
                r"Candidate step: .*1,005",
                MockScript::text("No"),
            )
            .rule(
                // step 3 contradicts the corrected context once 1,000 is in it
                Some(RequestKind::Judge),
                r"(?s)125 \* 8 = 1,000.*Candidate step: .*1,020",
                MockScript::text("No"),
            )
            .rule(
                Some(RequestKind::Generate),
                r"Solve the following problem",
                MockScript::text(initial),
            )
    }

    pub(crate) fn case_study_problem() -> Problem {
        Problem::new(
            "case-study",
            "Bob picks apples for nine days. How many apples in total?",
            "1015",
        )
        .unwrap()
    }

    fn base_config() -> PipelineConfig {
        PipelineConfig {
            answer_mode: DatasetKind::Plain,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn case_study_run_corrects_and_grades_correct() {
        let backend = MockBackend::new(case_study_script()).unwrap();
        let outcome = run_ascot(&case_study_problem(), &base_config(), &backend, None).unwrap();
        let trace = &outcome.trace;
        assert!(!trace.failed);
        assert!(trace.assessments[1].flagged, "flawed step must be flagged");
        assert_eq!(trace.corrections.len(), 2);
        assert!(trace.final_steps[1].contains("125 * 8 = 1,000"));
        assert_eq!(trace.final_answer.as_ref().unwrap().raw, "1,015");
        assert!(trace.graded_correct);
    }

    #[test]
    fn infinite_threshold_degenerates_to_prune_only() {
        let backend = MockBackend::new(case_study_script()).unwrap();
        let config = PipelineConfig {
            tau: f64::INFINITY,
            ..base_config()
        };
        let outcome = run_ascot(&case_study_problem(), &config, &backend, None).unwrap();
        let trace = &outcome.trace;
        assert!(trace.corrections.is_empty());
        assert_eq!(trace.final_steps, trace.pruned_steps);
        assert_eq!(trace.final_answer.as_ref().unwrap().raw, "1,020");
        assert!(!trace.graded_correct);
    }

    #[test]
    fn clean_chain_passes_through_unchanged() {
        let script = MockScript::default().rule(
            Some(RequestKind::Generate),
            r"Solve the following problem",
            MockScript::text("First 2 + 3 = 5. The answer is 5."),
        );
        let backend = MockBackend::new(script).unwrap();
        let problem = Problem::new("clean", "What is 2 + 3?", "5").unwrap();
        let outcome = run_ascot(&problem, &base_config(), &backend, None).unwrap();
        assert!(outcome.trace.corrections.is_empty());
        assert_eq!(outcome.trace.final_steps, outcome.trace.pruned_steps);
        assert!(outcome.trace.graded_correct);
    }

    #[test]
    fn trace_reconstruction_matches_final_steps() {
        let backend = MockBackend::new(case_study_script()).unwrap();
        let outcome = run_ascot(&case_study_problem(), &base_config(), &backend, None).unwrap();
        assert_eq!(
            outcome.trace.reconstruct_final_steps(),
            outcome.trace.final_steps
        );
    }

    #[test]
    fn batch_aggregates_accuracy_and_failures() {
        let backend = MockBackend::new(case_study_script()).unwrap();
        let problems = vec![
            case_study_problem(),
            Problem::new("p2", "same apples question?", "1015").unwrap(),
            Problem::new("p3", "different gold", "9999").unwrap(),
        ];
        // every problem hits the same scripted solution; p3's gold differs
        let outcome = batch_run(&problems, &base_config(), &backend, None).unwrap();
        assert_eq!(outcome.traces.len(), 3);
        assert!(outcome.traces[0].graded_correct);
        assert!(outcome.traces[1].graded_correct);
        assert!(!outcome.traces[2].graded_correct);
        assert_eq!(outcome.failures, 0);
        assert!(
            (outcome.accuracy - 100.0 * 2.0 / 3.0).abs() < 1e-9,
            "accuracy counts wrong runs in the denominator"
        );
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let backend = MockBackend::new(MockScript::default()).unwrap();
        assert!(matches!(
            batch_run(&[], &base_config(), &backend, None),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn parallel_batch_matches_sequential() {
        let backend = MockBackend::new(case_study_script()).unwrap();
        let problems: Vec<Problem> = (0..6)
            .map(|i| {
                Problem::new(
                    format!("p{i}"),
                    "Bob picks apples for nine days. How many apples in total?",
                    "1015",
                )
                .unwrap()
            })
            .collect();
        let sequential = batch_run(&problems, &base_config(), &backend, None).unwrap();
        let parallel_cfg = PipelineConfig {
            parallelism: 4,
            ..base_config()
        };
        let parallel = batch_run(&problems, &parallel_cfg, &backend, None).unwrap();
        assert_eq!(sequential.accuracy, parallel.accuracy);
        let seq_answers: Vec<Option<String>> = sequential
            .traces
            .iter()
            .map(|t| t.final_answer.as_ref().map(|a| a.raw.clone()))
            .collect();
        let par_answers: Vec<Option<String>> = parallel
            .traces
            .iter()
            .map(|t| t.final_answer.as_ref().map(|a| a.raw.clone()))
            .collect();
        assert_eq!(seq_answers, par_answers);
    }
}
