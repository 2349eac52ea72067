//! `lddpo`: curate preference data, train with DPO or LD-DPO, evaluate and
//! compare runs on the synthetic task family.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lddpo_core::checkpoint::Checkpoint;
use lddpo_core::datapipe::{
    curate, read_arbiter_table, read_queries_jsonl, write_arbiter_table, write_jsonl, CurationConfig, TableArbiter,
};
use lddpo_core::experiment::{run_length, run_lift, LengthSetup, LiftSetup};
use lddpo_core::synthbench::{
    demonstrations, evaluate_model, generate_tasks, logistic_stop_weights, read_tasks_jsonl, synthesize_corpus,
    write_tasks_jsonl, CandidatePlan, Decode, NoisedOracle, SynthLayout,
};
use lddpo_core::tinylm::init_params;
use lddpo_core::train::{parse_kv, run_compare, run_training, supervised_finetune, SftConfig, TrainConfig};
use lddpo_core::Error;

#[derive(Parser)]
#[command(name = "lddpo", version, about = "Length-desensitized preference optimization on a toy language model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter candidate answers into chosen/rejected preference pairs.
    Curate(CurateArgs),
    /// Train a policy on preference pairs.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a task file.
    Eval(EvalArgs),
    /// Train two configurations from one initialization and tabulate them.
    Compare(CompareArgs),
    /// Generate synthetic tasks, curation inputs and an arbiter table.
    Synth(SynthArgs),
    /// Supervised warm start from correct demonstrations of a task file.
    Sft(SftArgs),
    /// Run one of the built-in toy experiments.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct CurateArgs {
    /// Query records, one JSON object per line.
    #[arg(long)]
    input: PathBuf,
    /// Arbiter lookup table. Without one, every arbitration is discarded.
    #[arg(long)]
    arbiter: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    /// Machine-readable report; the text report goes to stderr.
    #[arg(long)]
    report: PathBuf,
}

/// Every flag mirrors a `TrainConfig` field and overrides `--config`.
#[derive(Args, Clone, Default)]
struct TrainFlags {
    /// Flat `key = value` file with any of the options below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    damp_reference: Option<bool>,
    #[arg(long)]
    peak_lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    warmup_frac: Option<f64>,
    #[arg(long)]
    eval_every_frac: Option<f64>,
    #[arg(long)]
    max_seq_len: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long)]
    adam_beta1: Option<f64>,
    #[arg(long)]
    adam_beta2: Option<f64>,
    #[arg(long)]
    adam_eps: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    eval_max_len: Option<usize>,
    #[arg(long)]
    record_wall_time: Option<bool>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    tasks: Option<PathBuf>,
    #[arg(long)]
    init_checkpoint: Option<PathBuf>,
    #[arg(long)]
    checkpoint_out: Option<PathBuf>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

impl TrainFlags {
    fn entries(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        let s = |v: &Option<f64>| v.map(|x| x.to_string());
        let u = |v: &Option<usize>| v.map(|x| x.to_string());
        let b = |v: &Option<bool>| v.map(|x| x.to_string());
        let p = |v: &Option<PathBuf>| v.as_ref().map(|x| x.display().to_string());
        push("variant", self.variant.clone());
        push("beta", s(&self.beta));
        push("alpha", s(&self.alpha));
        push("damp-reference", b(&self.damp_reference));
        push("peak-lr", s(&self.peak_lr));
        push("batch-size", u(&self.batch_size));
        push("epochs", u(&self.epochs));
        push("warmup-frac", s(&self.warmup_frac));
        push("eval-every-frac", s(&self.eval_every_frac));
        push("max-seq-len", u(&self.max_seq_len));
        push("vocab-size", u(&self.vocab_size));
        push("dim", u(&self.dim));
        push("init-scale", s(&self.init_scale));
        push("adam-beta1", s(&self.adam_beta1));
        push("adam-beta2", s(&self.adam_beta2));
        push("adam-eps", s(&self.adam_eps));
        push("weight-decay", s(&self.weight_decay));
        push("eval-max-len", u(&self.eval_max_len));
        push("record-wall-time", b(&self.record_wall_time));
        push("pairs", p(&self.pairs));
        push("tasks", p(&self.tasks));
        push("init-checkpoint", p(&self.init_checkpoint));
        push("checkpoint-out", p(&self.checkpoint_out));
        push("metrics-out", p(&self.metrics_out));
        out
    }

    /// Defaults, then the config file, then `extra`, then explicit flags.
    fn build(&self, seed: u64, extra: &[(String, String)]) -> Result<TrainConfig, Failure> {
        let mut cfg = TrainConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let entries = parse_kv(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            cfg.apply(&entries).map_err(Failure::config)?;
        }
        cfg.apply(extra).map_err(Failure::config)?;
        cfg.apply(&self.entries()).map_err(Failure::config)?;
        cfg.seed = seed;
        cfg.validate().map_err(Failure::config)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    tasks: PathBuf,
    /// Sample at this temperature instead of greedy decoding.
    #[arg(long)]
    temperature: Option<f64>,
    /// Seed for sampled decoding.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    max_len: usize,
    /// Per-task outcomes as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    flags: TrainFlags,
    /// Override for run A (default variant=dpo). Repeatable.
    #[arg(long = "a", value_name = "KEY=VALUE")]
    a: Vec<String>,
    /// Override for run B (default variant=lddpo). Repeatable.
    #[arg(long = "b", value_name = "KEY=VALUE")]
    b: Vec<String>,
    /// Also write the table as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    /// Number of curation queries.
    #[arg(long, default_value_t = 3000)]
    queries: usize,
    /// Number of held-out evaluation tasks.
    #[arg(long, default_value_t = 200)]
    eval_tasks: usize,
    #[arg(long, default_value_t = 3)]
    difficulty: u32,
    #[arg(long, default_value_t = 1)]
    think_min: u32,
    #[arg(long, default_value_t = 8)]
    think_max: u32,
    #[arg(long, default_value_t = 0.4)]
    error_rate: f64,
    /// Fraction of queries whose stated ground truth is wrong.
    #[arg(long, default_value_t = 0.0)]
    label_noise: f64,
    /// Receives queries.jsonl, arbiter.jsonl, train_tasks.jsonl and eval_tasks.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SftArgs {
    #[arg(long)]
    seed: u64,
    /// Tasks to demonstrate.
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    #[arg(long, default_value_t = 300)]
    steps: usize,
    #[arg(long, default_value_t = 5e-2)]
    lr: f64,
    /// Filler step at which the stopping hazard is one half.
    #[arg(long, default_value_t = 4.0)]
    stop_center: f64,
    #[arg(long, default_value_t = 0.6)]
    stop_slope: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(subcommand)]
    which: Experiment,
}

#[derive(Subcommand)]
enum Experiment {
    /// Held-out rewards accuracy before and after one epoch.
    Lift {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        damp_reference: Option<bool>,
    },
    /// Greedy generation length of baseline, DPO and LD-DPO.
    Length {
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
        seeds: Vec<u64>,
        #[arg(long)]
        damp_reference: Option<bool>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: String) -> Self {
        Self { code: 1, message }
    }

    fn config(e: Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Numeric(_)) { 3 } else { 2 };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn with_path(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let code = if matches!(e, Error::Numeric(_)) { 3 } else { 2 };
        Failure { code, message: format!("{}: {e}", path.display()) }
    }
}

fn parse_overrides(items: &[String]) -> Result<Vec<(String, String)>, Failure> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Failure::usage(format!("expected KEY=VALUE, got '{s}'")))
        })
        .collect()
}

fn cmd_curate(args: &CurateArgs) -> Result<(), Failure> {
    let queries = read_queries_jsonl(open(&args.input)?).map_err(with_path(&args.input))?;
    let arbiter = match &args.arbiter {
        Some(p) => read_arbiter_table(open(p)?).map_err(with_path(p))?,
        None => TableArbiter::default(),
    };
    let (pairs, report) = curate(queries, &CurationConfig::default(), &arbiter)?;
    write_jsonl(create(&args.output)?, &pairs)?;
    let mut out = create(&args.report)?;
    out.write_all(report.to_json().as_bytes())?;
    out.flush()?;
    eprint!("{report}");
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let cfg = args.flags.build(args.seed, &[])?;
    if cfg.pairs.is_none() {
        return Err(Failure::usage("train needs --pairs (or pairs = ... in --config)".into()));
    }
    let outcome = run_training(&cfg)?;
    let last = outcome.metrics.last().expect("at least one step");
    println!(
        "{} steps, final loss {:.5}, rewards accuracy {:.4}",
        outcome.total_steps, last.loss, last.rewards_accuracy
    );
    if let Some(r) = &outcome.final_eval {
        println!("{}", r.summary());
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    let params = Checkpoint::load(&args.checkpoint).map_err(with_path(&args.checkpoint))?.params;
    let layout = SynthLayout::default();
    if layout.vocab_size() > params.vocab.size {
        return Err(Failure {
            code: 2,
            message: format!("tasks need {} tokens, checkpoint has {}", layout.vocab_size(), params.vocab.size),
        });
    }
    let tasks = read_tasks_jsonl(&layout, open(&args.tasks)?).map_err(with_path(&args.tasks))?;
    let decode = match args.temperature {
        Some(temperature) => Decode::Sampled { temperature, seed: args.seed },
        None => Decode::Greedy,
    };
    let report = evaluate_model(&params, &tasks, decode, args.max_len)?;
    if let Some(path) = &args.report {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    println!("{}", report.summary());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    // Per-run default variant, then shared flags, then per-run overrides.
    let build = |default_variant: &str, overrides: &[String]| {
        let mut cfg = args.flags.build(args.seed, &[("variant".to_string(), default_variant.to_string())])?;
        cfg.apply(&parse_overrides(overrides)?).map_err(Failure::config)?;
        cfg.seed = args.seed;
        cfg.validate().map_err(Failure::config)?;
        Ok::<_, Failure>(cfg)
    };
    let cfg_a = build("dpo", &args.a)?;
    let cfg_b = build("lddpo", &args.b)?;
    if cfg_a.tasks.is_none() || cfg_a.pairs.is_none() {
        return Err(Failure::usage("compare needs --pairs and --tasks".into()));
    }
    let report = run_compare(&cfg_a, &cfg_b)?;
    if let Some(path) = &args.report {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    print!("{report}");
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let layout = SynthLayout::default();
    let oracle = NoisedOracle { think_min: args.think_min, think_max: args.think_max, error_rate: args.error_rate };
    if !(0.0..=1.0).contains(&args.label_noise) {
        return Err(Failure::usage(format!("label-noise must lie in [0, 1], got {}", args.label_noise)));
    }
    oracle.validate(&layout).map_err(Failure::config)?;
    let corpus = synthesize_corpus(
        &layout,
        args.seed,
        args.queries,
        args.difficulty,
        &oracle,
        &CandidatePlan::default(),
        args.label_noise,
    )?;
    let eval_tasks = generate_tasks(args.seed + 100, args.eval_tasks, args.difficulty)?;
    fs::create_dir_all(&args.out_dir)?;
    let dir = &args.out_dir;
    write_jsonl(create(&dir.join("queries.jsonl"))?, &corpus.queries)?;
    write_arbiter_table(create(&dir.join("arbiter.jsonl"))?, &corpus.arbiter)?;
    write_tasks_jsonl(create(&dir.join("train_tasks.jsonl"))?, &corpus.tasks)?;
    write_tasks_jsonl(create(&dir.join("eval_tasks.jsonl"))?, &eval_tasks)?;
    println!("wrote {} queries and {} eval tasks to {}", corpus.queries.len(), eval_tasks.len(), dir.display());
    Ok(())
}

fn cmd_sft(args: &SftArgs) -> Result<(), Failure> {
    let layout = SynthLayout::default();
    let tasks = read_tasks_jsonl(&layout, open(&args.tasks)?).map_err(with_path(&args.tasks))?;
    if tasks.is_empty() {
        return Err(Failure { code: 2, message: format!("{}: no tasks", args.tasks.display()) });
    }
    let weights = logistic_stop_weights(&layout, args.stop_center, args.stop_slope);
    let demos = demonstrations(&layout, &tasks, &weights, args.seed)?;
    let init = init_params(args.seed, layout.vocab(), args.dim, args.init_scale).map_err(Failure::config)?;
    let cfg = SftConfig { steps: args.steps, lr: args.lr, seed: args.seed, ..Default::default() };
    let params = supervised_finetune(&init, &demos, &cfg)?;
    Checkpoint { params, optimizer: None }.save(&args.out)?;
    println!("wrote warm start to {}", args.out.display());
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    match &args.which {
        Experiment::Lift { seed, variant, damp_reference } => {
            let mut setup = LiftSetup::default();
            setup.train.seed = *seed;
            if let Some(v) = variant {
                setup.train.set("variant", v).map_err(Failure::config)?;
            }
            if let Some(d) = damp_reference {
                setup.train.damp_reference = *d;
            }
            let r = run_lift(&setup)?;
            println!(
                "held-out rewards accuracy {:.4} -> {:.4} over {} steps; loss {:.4} -> {:.4}",
                r.untrained_accuracy, r.trained_accuracy, r.steps, r.first_loss, r.final_loss
            );
        }
        Experiment::Length { seeds, damp_reference } => {
            let mut setup = LengthSetup::default();
            if let Some(d) = damp_reference {
                setup.train.damp_reference = *d;
            }
            println!("{:>6} {:>7} {:>9} {:>9} {:>9} {:>9}", "seed", "pairs", "baseline", "dpo", "lddpo", "ordered");
            for &seed in seeds {
                let r = run_length(&setup, seed)?;
                println!(
                    "{:>6} {:>7} {:>9.3} {:>9.3} {:>9.3} {:>9}",
                    seed,
                    r.pairs,
                    r.baseline,
                    r.dpo,
                    r.lddpo,
                    r.ordered()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Curate(a) => cmd_curate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Sft(a) => cmd_sft(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
