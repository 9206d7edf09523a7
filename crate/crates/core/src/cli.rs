//! The `recourse` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 config or schema error, 3 runtime
//! error. Every command writes `<primary output>.manifest.json` next to its
//! main output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{builtin_names, EvalDefaults, ExperimentConfig, ResolvedConfig};
use crate::datasets::descriptor::builtin_descriptor_names;
use crate::datasets::surrogate::{write_surrogate, SurrogateKind};
use crate::datasets::{
    sample_instances, select_instances, training_rows, unfavorable_under, DatasetDescriptor,
    FeatureFilter, Instance, InstancesFile,
};
use crate::error::{Error, Result};
use crate::eval::disparity::disparity;
use crate::eval::{evaluate, EvalOptions};
use crate::model::{load_model, save_model, train_tree_ensemble, AnyModel, TrainConfig};
use crate::policy_file::{PolicyBundle, SolverVariant};
use crate::report::{
    disparity_csv, disparity_json, evaluation_csv, evaluation_json, output_pair, DisparityOutput,
    EvaluationReport, PolicyEvaluation, RunManifest, REPORT_FORMAT, REPORT_VERSION,
};
use crate::schema::{FeatureSchema, Mutability, StateIndex};
use crate::solver::EpisodicConfig;
use crate::viz::{enumerate_traces, render_svg, TraceFigure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::UnknownDomain(_) => EXIT_USAGE,
        Error::Schema(_)
        | Error::SchemaMismatch(_)
        | Error::InvalidAction { .. }
        | Error::Model(_)
        | Error::Version { .. }
        | Error::Malformed { .. }
        | Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "recourse",
    version,
    about = "Risk-averse recourse policies: solve, evaluate, compare, draw"
)]
pub struct Cli {
    /// Worker threads for solving and evaluation (default: all cores).
    #[arg(long, global = true, env = "RECOURSE_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one config at one risk level and write a policy file.
    Solve(SolveArgs),
    /// Roll out policies and write a CSV/JSON risk report.
    Evaluate(EvaluateArgs),
    /// Solve and evaluate a grid of risk levels and horizons.
    Sweep(SweepArgs),
    /// Compare risk measures between the two groups of a binary feature.
    Disparity(DisparityArgs),
    /// Draw the most probable outcome traces of policies as SVG.
    Viz(VizArgs),
    /// Turn a dataset CSV into an instances file.
    Preprocess(PreprocessArgs),
    /// Train a tree-ensemble decision model on a dataset CSV.
    Train(TrainArgs),
    /// Write seeded stand-in dataset CSVs.
    Surrogate(SurrogateArgs),
}

fn parse_variant(s: &str) -> Result<SolverVariant> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Decision model file; overrides the config's model.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Config file, or the name of a builtin config.
    #[arg(long)]
    pub config: String,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Defaults to the config's horizon.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value = "grsvi", value_parser = parse_variant)]
    pub variant: SolverVariant,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArg,
    /// Start state of the episodic solver, as comma-separated level labels
    /// or a flat index. Defaults to the config's initial state.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0.9995)]
    pub decay: f64,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write per-episode sampled costs (episodic variant only).
    #[arg(long)]
    pub episode_costs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    /// Instances file from `recourse preprocess`.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Initial state(s), as comma-separated level labels or flat indices.
    /// Used when no instances file is given.
    #[arg(long)]
    pub state: Vec<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long = "alpha")]
    pub alphas: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long = "policy", required = true)]
    pub policies: Vec<PathBuf>,
    #[command(flatten)]
    pub rollout: RolloutArgs,
    /// Output stem; `.csv` and `.json` are written.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: String,
    /// Risk levels; defaults to the config's list.
    #[arg(long = "beta", value_delimiter = ',')]
    pub betas: Vec<f64>,
    /// Horizons; defaults to the config's horizon.
    #[arg(long = "horizon", value_delimiter = ',')]
    pub horizons: Vec<usize>,
    #[arg(long, default_value = "grsvi", value_parser = parse_variant)]
    pub variant: SolverVariant,
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub rollout: RolloutArgs,
    /// Also save every solved policy into this directory.
    #[arg(long)]
    pub save_policies: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DisparityArgs {
    #[arg(long)]
    pub policy: PathBuf,
    /// Immutable binary feature that defines the groups.
    #[arg(long)]
    pub group: String,
    #[command(flatten)]
    pub rollout: RolloutArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    /// One panel per policy, in the given order.
    #[arg(long = "policy", required = true)]
    pub policies: Vec<PathBuf>,
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub top_k: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Builtin descriptor name or descriptor file.
    #[arg(long)]
    pub descriptor: String,
    /// Dataset CSV.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Keep rows matching `Feature<op>Level`, e.g. `Gender=Female`.
    #[arg(long = "filter")]
    pub filters: Vec<String>,
    /// Keep only rows this model classifies as unfavorable.
    #[arg(long)]
    pub unfavorable_under: Option<PathBuf>,
    /// Seeded sample of this many rows, taken after filtering.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurrogateArgs {
    /// `adult`, `german_credit`, `insurance` or `all`.
    #[arg(long, default_value = "all")]
    pub dataset: String,
    /// Rows per file; defaults to the size of the public file.
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            log::debug!("thread pool already initialized");
        }
    }
    let recorded: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match dispatch(cli.command, recorded) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, args: Vec<String>) -> Result<()> {
    match command {
        Command::Solve(a) => cmd_solve(a, args),
        Command::Evaluate(a) => cmd_evaluate(a, args),
        Command::Sweep(a) => cmd_sweep(a, args),
        Command::Disparity(a) => cmd_disparity(a, args),
        Command::Viz(a) => cmd_viz(a, args),
        Command::Preprocess(a) => cmd_preprocess(a, args),
        Command::Train(a) => cmd_train(a, args),
        Command::Surrogate(a) => cmd_surrogate(a, args),
    }
}

/// A config file path, `builtin:<name>` or a bare builtin name.
pub fn load_config(arg: &str) -> Result<ExperimentConfig> {
    let path = Path::new(arg);
    if path.is_file() {
        return ExperimentConfig::from_path(path);
    }
    let name = arg.strip_prefix("builtin:").unwrap_or(arg);
    if builtin_names().contains(&name) {
        return ExperimentConfig::builtin(name);
    }
    Err(Error::config(arg, "no such config file or builtin config"))
}

fn resolve_config(arg: &str, model: &ModelArg) -> Result<ResolvedConfig> {
    let config = load_config(arg)?;
    let model = model
        .model
        .as_ref()
        .map(|p| load_model(p, Some(&config.schema)))
        .transpose()?;
    config.resolve(model)
}

fn load_descriptor(arg: &str) -> Result<DatasetDescriptor> {
    let path = Path::new(arg);
    if path.is_file() {
        DatasetDescriptor::from_path(path)
    } else if builtin_descriptor_names().contains(&arg) {
        DatasetDescriptor::builtin(arg)
    } else {
        Err(Error::config(
            arg,
            "no such descriptor file or builtin descriptor",
        ))
    }
}

/// Comma-separated level labels, or a flat state index.
pub fn parse_state(schema: &FeatureSchema, text: &str) -> Result<StateIndex> {
    if let Ok(i) = text.trim().parse::<u64>() {
        if i >= schema.cardinality() {
            return Err(Error::InvalidArgument(format!(
                "state index {i} out of range for {} states",
                schema.cardinality()
            )));
        }
        return Ok(StateIndex(i));
    }
    let labels: Vec<&str> = text.split(',').map(str::trim).collect();
    schema.encode(&schema.state_from_labels(&labels)?)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn file_label(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| display(p))
}

fn cmd_solve(a: SolveArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::start("solve", args);
    let config = resolve_config(&a.config, &a.model)?;
    let horizon = a.horizon.unwrap_or(config.horizon);
    let episodic = if a.variant == SolverVariant::Grsevi {
        let start = match &a.state {
            Some(s) => parse_state(&config.schema, s)?,
            None => config.eval.initial_state.ok_or_else(|| {
                Error::InvalidArgument(
                    "the episodic solver needs --state or an initial state in the config".into(),
                )
            })?,
        };
        Some(EpisodicConfig {
            max_episodes: a.episodes,
            epsilon_decay: a.decay,
            initial_epsilon: a.epsilon0,
            rng_seed: a.seed,
            initial_state: start,
        })
    } else {
        None
    };

    let started = Instant::now();
    let solved = PolicyBundle::solve(&config, a.variant, a.beta, horizon, episodic)?;
    let seconds = started.elapsed().as_secs_f64();
    ensure_parent(&a.out)?;
    solved.bundle.save(&a.out)?;
    println!(
        "solved {} with {} at beta={} H={} in {seconds:.3} s -> {}",
        config.name,
        a.variant,
        a.beta,
        horizon,
        a.out.display()
    );
    manifest.outputs.push(display(&a.out));
    if let (Some(path), Some(run)) = (&a.episode_costs, &solved.episodic) {
        ensure_parent(path)?;
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["episode", "cost"])?;
        for (k, c) in run.episode_costs.iter().enumerate() {
            w.write_record([k.to_string(), format!("{c:.6}")])?;
        }
        w.flush()?;
        manifest.outputs.push(display(path));
        let (mean, sd) = run.tail_stats(500);
        println!("last 500 episodes: mean cost {mean:.4}, sd {sd:.4}");
    }
    manifest.config_paths.push(a.config.clone());
    manifest.config_hashes.push(config.hash());
    manifest.betas.push(a.beta);
    manifest.horizon = Some(horizon);
    manifest.variant = Some(a.variant);
    manifest.seed = episodic.map(|e| e.rng_seed);
    manifest
        .solve_seconds
        .push((format!("beta={} H={horizon}", a.beta), seconds));
    manifest.finish(&a.out)?;
    Ok(())
}

fn eval_options(r: &RolloutArgs, defaults: &EvalDefaults) -> EvalOptions {
    EvalOptions {
        n_trials: r.trials.unwrap_or(defaults.trials),
        alphas: if r.alphas.is_empty() {
            defaults.alphas.clone()
        } else {
            r.alphas.clone()
        },
        seed: r.seed.unwrap_or(defaults.seed),
    }
}

/// Instances from `--instances`, then `--state`, then the config's
/// instances file, then its initial state.
fn rollout_instances(r: &RolloutArgs, config: &ResolvedConfig) -> Result<(Vec<Instance>, String)> {
    let from_file = |path: &Path| -> Result<(Vec<Instance>, String)> {
        let file = InstancesFile::load(path)?;
        Ok((file.instances(&config.schema)?, display(path)))
    };
    if let Some(path) = &r.instances {
        return from_file(path);
    }
    if !r.state.is_empty() {
        let instances = r
            .state
            .iter()
            .enumerate()
            .map(|(id, s)| {
                Ok(Instance {
                    id,
                    index: parse_state(&config.schema, s)?,
                    label: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok((instances, format!("--state {}", r.state.join(" "))));
    }
    if let Some(path) = &config.eval.instances {
        return from_file(path);
    }
    if let Some(s) = config.eval.initial_state {
        return Ok((
            vec![Instance {
                id: 0,
                index: s,
                label: None,
            }],
            "config initial state".into(),
        ));
    }
    Err(Error::InvalidArgument(
        "no instances: pass --instances or --state".into(),
    ))
}

fn write_pair(out: &Path, csv: &[u8], json: &[u8]) -> Result<(PathBuf, PathBuf)> {
    let (csv_path, json_path) = output_pair(out);
    ensure_parent(&csv_path)?;
    fs::write(&csv_path, csv)?;
    fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}

fn print_aggregate(p: &PolicyEvaluation) {
    let r = &p.evaluation.aggregate;
    let tails: Vec<String> = r
        .tail
        .iter()
        .map(|t| {
            let cvar = t
                .cvar
                .map_or_else(|| "n/a".to_string(), |c| format!("{c:.3}"));
            format!(
                "VaR{:.0}={:.3} CVaR{:.0}={cvar}",
                t.alpha * 100.0,
                t.var,
                t.alpha * 100.0
            )
        })
        .collect();
    println!(
        "{} {} beta={} H={}: rho={:.3} mu={:.3} sigma2={:.3} {}",
        p.policy,
        p.variant,
        p.beta,
        p.horizon,
        r.rho_h,
        r.mu_cost,
        r.sigma2_cost,
        tails.join(" ")
    );
}

fn cmd_evaluate(a: EvaluateArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::start("evaluate", args);
    let bundles = a
        .policies
        .iter()
        .map(PolicyBundle::load)
        .collect::<Result<Vec<_>>>()?;
    let first = &bundles[0].header;
    if let Some(b) = bundles
        .iter()
        .find(|b| b.header.schema_hash != first.schema_hash)
    {
        return Err(Error::SchemaMismatch(format!(
            "policies {} and {} were solved for different schemas",
            file_label(&a.policies[0]),
            b.header.config.name
        )));
    }
    let options = eval_options(&a.rollout, &first.config.eval);
    let (instances, source) = rollout_instances(&a.rollout, &first.config)?;
    let states: Vec<StateIndex> = instances.iter().map(|i| i.index).collect();

    let mut policies = Vec::with_capacity(bundles.len());
    for (bundle, path) in bundles.iter().zip(&a.policies) {
        let mdp = bundle.build_mdp()?;
        let evaluation = evaluate(&mdp, &bundle.table, &states, &options)?;
        let p = PolicyEvaluation::new(file_label(path), &bundle.header, evaluation);
        print_aggregate(&p);
        policies.push(p);
        manifest.config_paths.push(display(path));
        manifest
            .config_hashes
            .push(bundle.header.config_hash.clone());
        manifest.betas.push(bundle.header.beta);
    }
    let report = EvaluationReport::new(
        options.n_trials,
        options.alphas.clone(),
        options.seed,
        policies,
    );
    let (csv_path, json_path) = write_pair(
        &a.out,
        &evaluation_csv(&report)?,
        &evaluation_json(&report)?,
    )?;
    manifest.horizon = Some(first.horizon);
    manifest.alphas = options.alphas;
    manifest.n_trials = Some(options.n_trials);
    manifest.seed = Some(options.seed);
    manifest.variant = Some(first.variant);
    manifest.instances = Some(source);
    manifest.outputs = vec![display(&csv_path), display(&json_path)];
    manifest.finish(&csv_path)?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::start("sweep", args);
    let config = resolve_config(&a.config, &a.model)?;
    let betas = if a.betas.is_empty() {
        config.eval.betas.clone()
    } else {
        a.betas.clone()
    };
    let horizons = if a.horizons.is_empty() {
        vec![config.horizon]
    } else {
        a.horizons.clone()
    };
    let options = eval_options(&a.rollout, &config.eval);
    let (instances, source) = rollout_instances(&a.rollout, &config)?;
    let states: Vec<StateIndex> = instances.iter().map(|i| i.index).collect();
    if let Some(dir) = &a.save_policies {
        fs::create_dir_all(dir)?;
    }

    let mut policies = Vec::new();
    for &h in &horizons {
        let mdp = config.build_mdp_with_horizon(h)?;
        for &beta in &betas {
            let started = Instant::now();
            let solved = PolicyBundle::solve_on(&mdp, &config, a.variant, beta, None)?;
            let seconds = started.elapsed().as_secs_f64();
            let label = format!("{}_{}_b{beta}_h{h}", config.name, a.variant);
            println!("solved {label} in {seconds:.3} s");
            manifest.solve_seconds.push((label.clone(), seconds));
            if let Some(dir) = &a.save_policies {
                let path = dir.join(format!("{label}.policy"));
                solved.bundle.save(&path)?;
                manifest.outputs.push(display(&path));
            }
            let evaluation = evaluate(&mdp, &solved.bundle.table, &states, &options)?;
            let p = PolicyEvaluation::new(label, &solved.bundle.header, evaluation);
            print_aggregate(&p);
            policies.push(p);
        }
    }
    let report = EvaluationReport::new(
        options.n_trials,
        options.alphas.clone(),
        options.seed,
        policies,
    );
    let (csv_path, json_path) = write_pair(
        &a.out,
        &evaluation_csv(&report)?,
        &evaluation_json(&report)?,
    )?;
    manifest.config_paths.push(a.config.clone());
    manifest.config_hashes.push(config.hash());
    manifest.betas = betas;
    manifest.horizon = horizons.first().copied().filter(|_| horizons.len() == 1);
    manifest.alphas = options.alphas;
    manifest.n_trials = Some(options.n_trials);
    manifest.seed = Some(options.seed);
    manifest.variant = Some(a.variant);
    manifest.instances = Some(source);
    manifest.outputs.push(display(&csv_path));
    manifest.outputs.push(display(&json_path));
    manifest.finish(&csv_path)?;
    Ok(())
}

fn cmd_disparity(a: DisparityArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::start("disparity", args);
    let bundle = PolicyBundle::load(&a.policy)?;
    let config = &bundle.header.config;
    let schema = &config.schema;
    let f = schema.require_feature(&a.group)?;
    let spec = schema.feature(f);
    if spec.mutability != Mutability::Immutable {
        return Err(Error::InvalidArgument(format!(
            "group feature `{}` must be immutable",
            spec.name
        )));
    }
    if spec.level_count() != 2 {
        return Err(Error::InvalidArgument(format!(
            "unsupported: group feature `{}` has {} levels; only binary groups are supported",
            spec.name,
            spec.level_count()
        )));
    }
    let options = eval_options(&a.rollout, &config.eval);
    let (instances, source) = rollout_instances(&a.rollout, config)?;
    let split = |level: u16| -> Vec<StateIndex> {
        select_instances(&instances, |i| schema.level_of(i.index, f) == level)
            .into_iter()
            .map(|i| i.index)
            .collect()
    };
    let (a_states, b_states) = (split(0), split(1));
    let mdp = bundle.build_mdp()?;
    let ev_a = evaluate(&mdp, &bundle.table, &a_states, &options)?;
    let ev_b = evaluate(&mdp, &bundle.table, &b_states, &options)?;
    let report = disparity(&ev_a, &ev_b)?;

    let out = DisparityOutput {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        policy: file_label(&a.policy),
        config_hash: bundle.header.config_hash.clone(),
        beta: bundle.header.beta,
        horizon: bundle.header.horizon,
        group_feature: spec.name.clone(),
        group_a: spec.levels[0].clone(),
        group_b: spec.levels[1].clone(),
        n_trials: options.n_trials,
        seed: options.seed,
        report,
    };
    for c in &out.report.comparisons {
        let p = c
            .test
            .as_ref()
            .map_or_else(|| "n/a".into(), |t| format!("{:.3e}", t.p_value));
        let delta = c.delta.map_or_else(|| "n/a".into(), |d| format!("{d:.3}"));
        println!("{:>10}  delta={delta}  p={p}", c.measure);
    }
    let (csv_path, json_path) = write_pair(&a.out, &disparity_csv(&out)?, &disparity_json(&out)?)?;
    manifest.config_paths.push(display(&a.policy));
    manifest
        .config_hashes
        .push(bundle.header.config_hash.clone());
    manifest.betas.push(bundle.header.beta);
    manifest.horizon = Some(bundle.header.horizon);
    manifest.alphas = options.alphas;
    manifest.n_trials = Some(options.n_trials);
    manifest.seed = Some(options.seed);
    manifest.variant = Some(bundle.header.variant);
    manifest.instances = Some(source);
    manifest.outputs = vec![display(&csv_path), display(&json_path)];
    manifest.finish(&csv_path)?;
    Ok(())
}

fn cmd_viz(a: VizArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::start("viz", args);
    let mut panels = Vec::with_capacity(a.policies.len());
    for path in &a.policies {
        let bundle = PolicyBundle::load(path)?;
        let config = &bundle.header.config;
        let s0 = match &a.state {
            Some(s) => parse_state(&config.schema, s)?,
            None => config.eval.initial_state.ok_or_else(|| {
                Error::InvalidArgument("pass --state; the config has no initial state".into())
            })?,
        };
        let mdp = bundle.build_mdp()?;
        if mdp.is_goal(s0) {
            return Err(Error::InvalidArgument(
                "the initial state is already favorable".into(),
            ));
        }
        let title = format!(
            "{} {} beta={} H={}",
            config.name, bundle.header.variant, bundle.header.beta, bundle.header.horizon
        );
        panels.push(enumerate_traces(
            &mdp,
            &bundle.table,
            s0,
            a.top_k as usize,
            title,
        )?);
        manifest.config_paths.push(display(path));
        manifest
            .config_hashes
            .push(bundle.header.config_hash.clone());
        manifest.betas.push(bundle.header.beta);
    }
    let figure = TraceFigure { panels };
    for p in &figure.panels {
        println!("{}", p.title);
        for t in &p.traces {
            let labels: Vec<String> = t.segments().into_iter().map(|(l, _)| l).collect();
            println!(
                "  p={:.4} cost={:.2} {} [{}]",
                t.probability,
                t.total_cost,
                if t.reached_goal { "goal" } else { "no goal" },
                labels.join(" -> ")
            );
        }
        println!("  other outcomes p={:.4}", p.other_probability);
    }
    ensure_parent(&a.out)?;
    fs::write(&a.out, render_svg(&figure))?;
    manifest.outputs.push(display(&a.out));
    manifest.finish(&a.out)?;
    Ok(())
}

fn cmd_preprocess(a: PreprocessArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::start("preprocess", args);
    let descriptor = load_descriptor(&a.dataset.descriptor)?;
    let schema = &descriptor.schema;
    let (mut instances, report) = descriptor.preprocess_path(&a.dataset.input)?;
    println!(
        "{}: read {} rows, kept {}, dropped {} with missing values, rejected {}; schema has {} states",
        descriptor.name,
        report.rows_read,
        report.rows_kept,
        report.dropped_missing,
        report.rejected.len(),
        schema.cardinality()
    );
    for text in &a.filters {
        let filter = FeatureFilter::parse(schema, text)?;
        instances = select_instances(&instances, |i| filter.matches(schema, i.index));
    }
    if let Some(path) = &a.unfavorable_under {
        let model = load_model(path, Some(schema))?;
        instances = unfavorable_under(schema, &model, &instances)?;
    }
    if let Some(n) = a.sample {
        instances = sample_instances(&instances, n, a.seed);
    }
    println!("{} instances selected", instances.len());
    ensure_parent(&a.out)?;
    InstancesFile::new(schema, &instances)?.save(&a.out)?;
    manifest.config_paths.push(a.dataset.descriptor.clone());
    manifest.config_hashes.push(schema.hash());
    manifest.seed = a.sample.map(|_| a.seed);
    manifest.instances = Some(display(&a.dataset.input));
    manifest.outputs.push(display(&a.out));
    manifest.finish(&a.out)?;
    Ok(())
}

fn cmd_train(a: TrainArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::start("train", args);
    let descriptor = load_descriptor(&a.dataset.descriptor)?;
    let schema = &descriptor.schema;
    let (instances, _) = descriptor.preprocess_path(&a.dataset.input)?;
    let rows = training_rows(schema, &instances)?;
    let mut config = TrainConfig::default();
    if let Some(n) = a.trees {
        config.n_trees = n;
    }
    if let Some(d) = a.depth {
        config.max_depth = d;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let (model, report) = train_tree_ensemble(schema, &rows, &config)?;
    let accuracy = report
        .holdout_accuracy
        .map_or_else(|| "n/a".into(), |x| format!("{x:.4}"));
    println!(
        "trained {} trees on {} rows; holdout accuracy {accuracy} on {} rows",
        config.n_trees, report.train_rows, report.holdout_rows
    );
    ensure_parent(&a.out)?;
    save_model(&a.out, schema, &AnyModel::from(model))?;
    manifest.config_paths.push(a.dataset.descriptor.clone());
    manifest.config_hashes.push(schema.hash());
    manifest.seed = Some(config.seed);
    manifest.instances = Some(display(&a.dataset.input));
    manifest.outputs.push(display(&a.out));
    manifest.finish(&a.out)?;
    Ok(())
}

fn cmd_surrogate(a: SurrogateArgs, args: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::start("surrogate", args);
    let kinds = if a.dataset == "all" {
        SurrogateKind::ALL.to_vec()
    } else {
        vec![SurrogateKind::from_name(&a.dataset)?]
    };
    fs::create_dir_all(&a.out_dir)?;
    for kind in kinds {
        let rows = a.rows.unwrap_or_else(|| kind.default_rows());
        let path = write_surrogate(kind, &a.out_dir, rows, a.seed)?;
        println!("wrote {rows} rows to {}", path.display());
        manifest.outputs.push(display(&path));
    }
    manifest.seed = Some(a.seed);
    manifest.finish(&a.out_dir.join("surrogate"))?;
    Ok(())
}
