//! Command-line surface: batch evaluation, pruning, scoring, fault
//! injection, position sweeps, impact-curve fitting, and report merging.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ascot_core::backend::{
    AuditBackend, CachingBackend, HttpBackend, HttpBackendConfig, MockBackend, MockScript,
    ModelBackend, RetryBackend,
};
use ascot_core::chain::DatasetKind;
use ascot_core::config::{BackendChoice, ConfigFile, InjectorConfig, PipelineConfig};
use ascot_core::dataset::{load_chains, load_dataset, write_atomic, ChainRecord, ExternalScores};
use ascot_core::error::{Error, Result};
use ascot_core::fitting::calibrate;
use ascot_core::injector::{
    baseline_is_correct, inject_numeric, inject_symbolic, resume_from, sweep, InjectionKind,
};
use ascot_core::pipeline::{batch_run, RunTrace};
use ascot_core::pruner::{actual_ratio, prune, score_tokens, CompressionRatio, ImportanceSource};
use ascot_core::report::{drop_vs_position_series, sweep_from_csv, sweep_to_csv, EvalReport};
use ascot_core::scoring::{assess_step, ScoringContext};

#[derive(Parser)]
#[command(
    name = "ascot",
    version,
    about = "Verify, compress, and self-correct step-by-step reasoning chains"
)]
struct Cli {
    /// TOML config file with [pipeline], [avm], [irm], [injector], [backend]
    /// sections; command-line flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline over a dataset and emit traces plus a report.
    Run(RunArgs),
    /// Compress chains to a token budget without verification.
    Prune(PruneArgs),
    /// Score chains step by step and emit per-step assessments.
    Score(ScoreArgs),
    /// Inject a single fault into one chain.
    Inject(InjectArgs),
    /// Inject faults across positions and kinds, replay, and tabulate drops.
    Sweep(SweepArgs),
    /// Fit the positional impact curve to a sweep table.
    Fit(FitArgs),
    /// Merge run traces into a report and plot-ready series.
    Report(ReportArgs),
}

/// Flags shared by subcommands that execute the pipeline or touch a backend.
#[derive(Args, Clone, Default)]
struct CommonOverrides {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// training | inference
    #[arg(long)]
    mode: Option<String>,
    /// gsm8k | math | plain (extraction convention for model output)
    #[arg(long)]
    answer_mode: Option<String>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// mock | http
    #[arg(long)]
    backend: Option<String>,
    /// JSON mock script path (mock backend).
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    replay_log: Option<PathBuf>,
    #[arg(long)]
    w_c: Option<f64>,
    #[arg(long)]
    w_u: Option<f64>,
    #[arg(long)]
    w_a: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// normalized | appendix
    #[arg(long)]
    form: Option<String>,
    /// uniform | self_information | external_file
    #[arg(long)]
    score_source: Option<String>,
    /// JSON-lines token-score file ({id, scores}) for external_file.
    #[arg(long)]
    score_file: Option<PathBuf>,
    #[arg(long)]
    max_gen_tokens: Option<u32>,
}

#[derive(Args)]
struct RunArgs {
    /// Problem dataset (JSON-lines: {id, question, answer}).
    #[arg(long)]
    dataset: PathBuf,
    /// How dataset answers are parsed: gsm8k | math | plain.
    #[arg(long, default_value = "gsm8k")]
    dataset_kind: String,
    /// Compression ratios to evaluate; one report row each.
    #[arg(long, value_delimiter = ',')]
    gammas: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: CommonOverrides,
}

#[derive(Args)]
struct PruneArgs {
    /// Chain corpus (JSON-lines ChainRecord).
    #[arg(long)]
    chains: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: CommonOverrides,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    chains: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: CommonOverrides,
}

#[derive(Args)]
struct InjectArgs {
    #[arg(long)]
    chains: PathBuf,
    /// Chain id within the corpus.
    #[arg(long)]
    id: String,
    /// 1-based step to perturb.
    #[arg(long)]
    step: usize,
    /// numeric | symbolic
    #[arg(long)]
    kind: String,
    #[arg(long)]
    delta: Option<u64>,
    /// Also replay the perturbed prefix through the backend and grade it.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: CommonOverrides,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    chains: PathBuf,
    /// Error positions (1-based), e.g. 2,3,4.
    #[arg(long, value_delimiter = ',')]
    positions: Vec<usize>,
    /// numeric,symbolic
    #[arg(long, value_delimiter = ',', default_value = "numeric,symbolic")]
    kinds: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: CommonOverrides,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep CSV (all_steps,err_step,type,ori_acc,fin_acc,drop).
    #[arg(long)]
    input: PathBuf,
    /// normalized | appendix
    #[arg(long, default_value = "normalized")]
    form: String,
    /// normalized | absolute (how drops become rates)
    #[arg(long)]
    normalization: Option<String>,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace files (JSON-lines RunTrace), one per run.
    #[arg(long, value_delimiter = ',')]
    traces: Vec<PathBuf>,
    /// Optional sweep CSV for the drop-vs-position series.
    #[arg(long)]
    sweep: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e.category() {
        "config" | "input" => 2,
        "dataset" => 3,
        "backend" => 4,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Run(args) => cmd_run(&file, args),
        Command::Prune(args) => cmd_prune(&file, args),
        Command::Score(args) => cmd_score(&file, args),
        Command::Inject(args) => cmd_inject(&file, args),
        Command::Sweep(args) => cmd_sweep(&file, args),
        Command::Fit(args) => cmd_fit(args),
        Command::Report(args) => cmd_report(args),
    }
}

/// File config + CLI overrides, validated.
fn effective_config(file: &ConfigFile, o: &CommonOverrides) -> Result<PipelineConfig> {
    let mut cfg = file.to_pipeline_config()?;
    if let Some(v) = o.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = o.tau {
        cfg.tau = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = &o.mode {
        cfg.mode = v.parse()?;
    }
    if let Some(v) = &o.answer_mode {
        cfg.answer_mode = v.parse()?;
    }
    if let Some(v) = o.parallelism {
        cfg.parallelism = v;
    }
    if let Some(v) = o.max_gen_tokens {
        cfg.max_gen_tokens = v;
    }
    cfg.weights = ascot_core::QualityWeights::new(
        o.w_c.unwrap_or(cfg.weights.w_c),
        o.w_u.unwrap_or(cfg.weights.w_u),
    )?;
    cfg.impact = ascot_core::ImpactParams::new(
        o.w_a.unwrap_or(cfg.impact.w_a),
        o.alpha.unwrap_or(cfg.impact.alpha),
        match &o.form {
            Some(f) => f.parse()?,
            None => cfg.impact.form,
        },
    )?;
    if let Some(v) = &o.score_source {
        cfg.score_source = v.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn backend_choice(file: &ConfigFile, o: &CommonOverrides) -> Result<BackendChoice> {
    match o.backend.as_deref() {
        Some("mock") => Ok(BackendChoice::Mock {
            script: o.script.clone().or_else(|| file.backend.script.clone()),
        }),
        Some("http") => {
            let endpoint = o
                .endpoint
                .clone()
                .or_else(|| file.backend.endpoint.clone())
                .or_else(|| std::env::var("ASCOT_ENDPOINT").ok())
                .ok_or_else(|| Error::Config("http backend requires --endpoint".into()))?;
            let model = o
                .model
                .clone()
                .or_else(|| file.backend.model.clone())
                .ok_or_else(|| Error::Config("http backend requires --model".into()))?;
            Ok(BackendChoice::Http { endpoint, model })
        }
        Some(other) => Err(Error::Config(format!("unknown backend '{other}'"))),
        None => {
            let mut choice = file.backend_choice()?;
            if let (BackendChoice::Mock { script }, Some(cli_script)) =
                (&mut choice, o.script.clone())
            {
                *script = Some(cli_script);
            }
            Ok(choice)
        }
    }
}

fn build_backend(
    file: &ConfigFile,
    o: &CommonOverrides,
    cfg: &PipelineConfig,
) -> Result<Box<dyn ModelBackend>> {
    let mut backend: Box<dyn ModelBackend> = match backend_choice(file, o)? {
        BackendChoice::Mock { script } => {
            let script = match script {
                Some(path) => MockScript::from_json(&std::fs::read_to_string(&path)?)?,
                None => MockScript::default(),
            };
            Box::new(MockBackend::new(script)?)
        }
        BackendChoice::Http { endpoint, model } => {
            let mut http_cfg = HttpBackendConfig::from_env(endpoint, model);
            if let Some(t) = file.backend.timeout_secs {
                http_cfg.timeout_secs = t;
            }
            Box::new(RetryBackend::new(
                HttpBackend::new(http_cfg),
                cfg.retry_budget,
                250,
            ))
        }
    };
    let cache_dir = o.cache_dir.clone().or_else(|| file.backend.cache_dir.clone());
    if let Some(dir) = cache_dir {
        backend = Box::new(CachingBackend::new(backend, dir)?);
    }
    let replay = o.replay_log.clone().or_else(|| file.backend.replay_log.clone());
    if let Some(path) = replay {
        backend = Box::new(AuditBackend::create(backend, &path)?);
    }
    Ok(backend)
}

fn load_external(
    file: &ConfigFile,
    o: &CommonOverrides,
    cfg: &PipelineConfig,
) -> Result<Option<ExternalScores>> {
    if cfg.score_source != ascot_core::config::ScoreSourceKind::ExternalFile {
        return Ok(None);
    }
    let path = o
        .score_file
        .clone()
        .or_else(|| file.irm.score_file.clone())
        .ok_or_else(|| Error::Config("score_source=external_file requires --score-file".into()))?;
    Ok(Some(ExternalScores::load(&path)?))
}

fn trace_lines(traces: &[RunTrace]) -> Result<String> {
    let mut out = String::new();
    for trace in traces {
        out.push_str(&serde_json::to_string(trace)?);
        out.push('\n');
    }
    Ok(out)
}

fn cmd_run(file: &ConfigFile, args: RunArgs) -> Result<()> {
    let base = effective_config(file, &args.overrides)?;
    let dataset_kind: DatasetKind = args.dataset_kind.parse()?;
    let problems = load_dataset(&args.dataset, dataset_kind)?;
    let external = load_external(file, &args.overrides, &base)?;
    let backend = build_backend(file, &args.overrides, &base)?;

    let gammas = if args.gammas.is_empty() {
        vec![base.gamma]
    } else {
        args.gammas.clone()
    };
    let started = Instant::now();
    let mut report = EvalReport::new(base.clone());
    for &gamma in &gammas {
        let cfg = PipelineConfig {
            gamma,
            ..base.clone()
        };
        cfg.validate()?;
        let outcome = batch_run(&problems, &cfg, backend.as_ref(), external.as_ref())?;
        let path = args.out.join(format!("traces_{gamma:.2}.jsonl"));
        write_atomic(&path, trace_lines(&outcome.traces)?.as_bytes())?;
        report.push_batch(gamma, &outcome);
    }
    report.wall_secs = started.elapsed().as_secs_f64();

    write_atomic(&args.out.join("report.csv"), report.to_csv().as_bytes())?;
    write_atomic(&args.out.join("report.json"), report.to_json()?.as_bytes())?;
    write_atomic(
        &args.out.join("plot_accuracy_vs_ratio.csv"),
        report.accuracy_vs_ratio_series().as_bytes(),
    )?;
    println!(
        "ran {} problems x {} ratios in {:.2}s ({} failures)",
        problems.len(),
        gammas.len(),
        report.wall_secs,
        report.failures
    );
    print!("{}", report.to_csv());
    Ok(())
}

fn cmd_prune(file: &ConfigFile, args: PruneArgs) -> Result<()> {
    let cfg = effective_config(file, &args.overrides)?;
    let chains = load_chains(&args.chains)?;
    let external = load_external(file, &args.overrides, &cfg)?;
    let needs_backend = cfg.score_source == ascot_core::config::ScoreSourceKind::SelfInformation;
    let backend = if needs_backend {
        Some(build_backend(file, &args.overrides, &cfg)?)
    } else {
        None
    };

    let gamma = CompressionRatio::new(cfg.gamma)?;
    let mut records = String::new();
    let mut summary = String::from("id,tokens_before,tokens_after,act_ratio\n");
    let mut ratios = Vec::new();
    for chain in &chains {
        let source = match cfg.score_source {
            ascot_core::config::ScoreSourceKind::Uniform => ImportanceSource::Uniform,
            ascot_core::config::ScoreSourceKind::SelfInformation => {
                ImportanceSource::SelfInformation(backend.as_ref().expect("backend built"))
            }
            ascot_core::config::ScoreSourceKind::ExternalFile => {
                let scores = external
                    .as_ref()
                    .and_then(|e| e.get(&chain.problem.id))
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "no external scores for chain '{}'",
                            chain.problem.id
                        ))
                    })?;
                ImportanceSource::External(scores)
            }
        };
        let scores = score_tokens(chain, source)?;
        let pruned = prune(chain, &scores, gamma)?;
        let ratio = actual_ratio(chain, &pruned)?;
        ratios.push(ratio);
        summary.push_str(&format!(
            "{},{},{},{:.2}\n",
            chain.problem.id,
            chain.token_count(),
            pruned.token_count(),
            ratio
        ));
        records.push_str(&serde_json::to_string(&ChainRecord::from_chain(&pruned))?);
        records.push('\n');
    }
    write_atomic(&args.out.join("pruned.jsonl"), records.as_bytes())?;
    write_atomic(&args.out.join("prune_summary.csv"), summary.as_bytes())?;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    println!(
        "pruned {} chains at gamma {:.2}: mean ActRatio {mean:.2}",
        chains.len(),
        cfg.gamma
    );
    Ok(())
}

fn cmd_score(file: &ConfigFile, args: ScoreArgs) -> Result<()> {
    let cfg = effective_config(file, &args.overrides)?;
    let chains = load_chains(&args.chains)?;
    let backend = build_backend(file, &args.overrides, &cfg)?;

    let mut lines = String::new();
    for chain in &chains {
        let total = chain.total_steps();
        let mut assessments = Vec::with_capacity(total);
        for (idx, step) in chain.steps.iter().enumerate() {
            let ctx = ScoringContext {
                problem: &chain.problem,
                prior_steps: &chain.steps[..idx],
            };
            let (assessment, _) =
                assess_step(&ctx, step, idx + 1, total, &cfg, backend.as_ref())?;
            assessments.push(assessment);
        }
        let record = serde_json::json!({
            "id": chain.problem.id,
            "config": &cfg,
            "assessments": assessments,
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    write_atomic(&args.out.join("assessments.jsonl"), lines.as_bytes())?;
    println!("scored {} chains", chains.len());
    Ok(())
}

fn cmd_inject(file: &ConfigFile, args: InjectArgs) -> Result<()> {
    let cfg = effective_config(file, &args.overrides)?;
    let mut injector_cfg = file.injector_config()?;
    if let Some(delta) = args.delta {
        if delta == 0 {
            return Err(Error::Config("delta must be nonzero".into()));
        }
        injector_cfg = InjectorConfig {
            delta,
            ..injector_cfg
        };
    }
    let kind: InjectionKind = args.kind.parse()?;
    let chains = load_chains(&args.chains)?;
    let chain = chains
        .iter()
        .find(|c| c.problem.id == args.id)
        .ok_or_else(|| Error::Config(format!("no chain with id '{}'", args.id)))?;
    if !baseline_is_correct(chain, cfg.answer_mode) {
        return Err(Error::DegenerateInput(format!(
            "chain '{}' does not grade correct at baseline",
            args.id
        )));
    }
    let injection = match kind {
        InjectionKind::Numeric => inject_numeric(chain, args.step, injector_cfg.delta, cfg.seed)?,
        InjectionKind::Symbolic => inject_symbolic(chain, args.step, injector_cfg.stale_result)?,
    };
    write_atomic(
        &args.out.join("injection.json"),
        serde_json::to_string_pretty(&injection)?.as_bytes(),
    )?;
    println!(
        "injected {kind} fault into '{}' step {}: {}",
        args.id, args.step, injection.perturbed_step_text
    );
    if args.resume {
        let backend = build_backend(file, &args.overrides, &cfg)?;
        let outcome = resume_from(&injection, backend.as_ref(), &cfg)?;
        write_atomic(
            &args.out.join("outcome.json"),
            serde_json::to_string_pretty(&outcome)?.as_bytes(),
        )?;
        println!(
            "resumed: final answer {} ({})",
            outcome
                .resumed_chain
                .final_answer
                .as_ref()
                .map(|a| a.raw.clone())
                .unwrap_or_else(|| "<missing>".into()),
            if outcome.final_grade {
                "correct"
            } else {
                "incorrect"
            }
        );
    }
    Ok(())
}

fn cmd_sweep(file: &ConfigFile, args: SweepArgs) -> Result<()> {
    let cfg = effective_config(file, &args.overrides)?;
    let injector_cfg = file.injector_config()?;
    if args.positions.is_empty() {
        return Err(Error::Config("--positions must be non-empty".into()));
    }
    let kinds: Vec<InjectionKind> = args
        .kinds
        .iter()
        .map(|k| k.parse())
        .collect::<Result<_>>()?;
    let chains = load_chains(&args.chains)?;
    let backend = build_backend(file, &args.overrides, &cfg)?;

    let started = Instant::now();
    let rows = sweep(
        &chains,
        &args.positions,
        &kinds,
        backend.as_ref(),
        &cfg,
        &injector_cfg,
    )?;
    let csv = sweep_to_csv(&rows);
    write_atomic(&args.out.join("sweep.csv"), csv.as_bytes())?;
    let meta = serde_json::json!({
        "config": &cfg,
        "injector": &injector_cfg,
        "positions": &args.positions,
        "kinds": &kinds,
        "chains": chains.len(),
    });
    write_atomic(
        &args.out.join("sweep_meta.json"),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )?;
    write_atomic(
        &args.out.join("plot_drop_vs_position.csv"),
        drop_vs_position_series(&rows).as_bytes(),
    )?;
    println!(
        "swept {} chains x {} positions x {} kinds in {:.2}s",
        chains.len(),
        args.positions.len(),
        kinds.len(),
        started.elapsed().as_secs_f64()
    );
    print!("{csv}");
    Ok(())
}

#[derive(serde::Serialize)]
struct FitOutput {
    form: ascot_core::ImpactForm,
    w_a: f64,
    alpha: f64,
    residual: f64,
    n_points: usize,
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let form: ascot_core::ImpactForm = args.form.parse()?;
    let normalization = match &args.normalization {
        Some(n) => n.parse()?,
        None => ascot_core::config::DropNormalization::Normalized,
    };
    let text = std::fs::read_to_string(&args.input)?;
    let rows = sweep_from_csv(&text)?;
    let curve = calibrate(&rows, form, normalization)?;
    let output = FitOutput {
        form,
        w_a: curve.fitted.w_a,
        alpha: curve.fitted.alpha,
        residual: curve.residual,
        n_points: curve.n_points,
    };
    write_atomic(&args.out, serde_json::to_string_pretty(&output)?.as_bytes())?;
    let curve_path = args.out.with_extension("curve.json");
    write_atomic(
        &curve_path,
        serde_json::to_string_pretty(&curve)?.as_bytes(),
    )?;
    println!(
        "fit ({:?}, {:?} drops): w_a = {:.6}, alpha = {:.6}, residual = {:.3e} over {} points",
        form, normalization, output.w_a, output.alpha, output.residual, output.n_points
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    if args.traces.is_empty() {
        return Err(Error::Config("--traces must be non-empty".into()));
    }
    let mut all: Vec<RunTrace> = Vec::new();
    for path in &args.traces {
        let text = std::fs::read_to_string(path)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let trace: RunTrace = serde_json::from_str(line).map_err(|e| Error::Dataset {
                line: i + 1,
                message: format!("{}: {e}", path.display()),
            })?;
            all.push(trace);
        }
    }
    if all.is_empty() {
        return Err(Error::DegenerateInput("no traces found".into()));
    }

    // group by the gamma each trace ran at
    let mut by_gamma: std::collections::BTreeMap<u64, Vec<&RunTrace>> =
        std::collections::BTreeMap::new();
    for trace in &all {
        by_gamma
            .entry(trace.config.gamma.to_bits())
            .or_default()
            .push(trace);
    }
    let mut report = EvalReport::new(all[0].config.clone());
    for (bits, traces) in &by_gamma {
        let gamma = f64::from_bits(*bits);
        let total = traces.len() as f64;
        let correct = traces.iter().filter(|t| t.graded_correct).count() as f64;
        let ok: Vec<&&RunTrace> = traces.iter().filter(|t| !t.failed).collect();
        let failures = (traces.len() - ok.len()) as u64;
        let mean = |f: &dyn Fn(&RunTrace) -> f64| {
            if ok.is_empty() {
                0.0
            } else {
                ok.iter().map(|t| f(t)).sum::<f64>() / ok.len() as f64
            }
        };
        report.rows.push(ascot_core::report::ReportRow {
            ratio: gamma,
            accuracy: 100.0 * correct / total,
            tokens: mean(&|t| t.tokens_final as f64),
            act_ratio: mean(&|t| t.act_ratio),
        });
        report.failures += failures;
    }
    report.sort_rows();

    write_atomic(&args.out.join("report.csv"), report.to_csv().as_bytes())?;
    write_atomic(&args.out.join("report.json"), report.to_json()?.as_bytes())?;
    write_atomic(
        &args.out.join("plot_accuracy_vs_ratio.csv"),
        report.accuracy_vs_ratio_series().as_bytes(),
    )?;
    if let Some(sweep_path) = &args.sweep {
        let rows = sweep_from_csv(&std::fs::read_to_string(sweep_path)?)?;
        write_atomic(
            &args.out.join("plot_drop_vs_position.csv"),
            drop_vs_position_series(&rows).as_bytes(),
        )?;
    }
    println!("merged {} traces into {}", all.len(), args.out.display());
    print!("{}", report.to_csv());
    Ok(())
}
