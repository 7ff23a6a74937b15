//! The `cnml` command line.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cnml_core::aiger::parse_aag;
use cnml_core::datagen::{
    augment_dataset, build_batches, generate_pairs, mine_retrieval_sets, read_jsonl, read_records, write_jsonl,
    write_records, PairRecord, RetrievalMode, RetrievalSet, VerdictCache,
};
use cnml_core::ltl::parse_ltl;
use cnml_core::{Lasso, Verdict};
use cnml_evalkit::{
    embedding_space_report, evaluate_retrieval, BagOfKeywordsScorer, LevenshteinScorer, MetricsTable, ModelScorer,
    RandomScorer, WlScorer,
};
use cnml_neural::probe::{finetune_classifier, labeled_pairs};
use cnml_neural::{load_checkpoint, save_checkpoint, train, CnmlModel};

use config::{resolve, write_snapshot, ConfigError, RunConfig, Sources, CONFIG_ENV};

#[derive(Parser, Debug)]
#[command(name = "cnml", version, about = "Contrastive circuit/specification embeddings")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Configuration file (defaults to $CNML_CONFIG when set).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base preset: desk or paper-scale.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Override a configuration key, e.g. `--set training.lr=5e-4`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate verified circuit/specification pairs.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Shuffle assumptions, pad wires, optionally split guarantees.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        split: bool,
    },
    /// Build one epoch of contrastive batches.
    Batch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine retrieval sets with oracle-verified distractors.
    MineRetrieval {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
    },
    /// Contrastive pre-training; writes a checkpoint and a step log.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Satisfaction probe from a checkpoint and from random initialization.
    Finetune {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Model check one circuit against one formula.
    Check { aag: PathBuf, ltl: String },
    /// Score retrieval sets with the model and the baselines.
    EvalRetrieval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        sets: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cosine-similarity distributions and a similarity heatmap.
    Report {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Cross,
    Intra,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn runtime<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn sources(g: &GlobalArgs) -> Sources {
    Sources {
        preset: g.preset.clone(),
        file: g.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from)),
        overrides: g.overrides.clone(),
    }
}

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let mut src = sources(&cli.global);
    // Command flags are overrides with the highest priority.
    match &cli.command {
        Command::GenData { count: Some(n), .. } => src.overrides.push(format!("generation.count={n}")),
        Command::Augment { split: true, .. } => src.overrides.push("augmentation.split=true".into()),
        Command::Train { steps: Some(n), .. } => {
            src.overrides.push(format!("training.total_steps={n}"));
            let warmup = resolve(&Sources { overrides: vec![], ..src.clone() })?.training.warmup_steps;
            if warmup > *n {
                log::info!("warmup {warmup} exceeds {n} steps; using {}", n / 10);
                src.overrides.push(format!("training.warmup_steps={}", n / 10));
            }
        }
        Command::MineRetrieval { mode, count, size, .. } => {
            if let Some(m) = mode {
                let m = match m {
                    ModeArg::Cross => "cross",
                    ModeArg::Intra => "intra",
                };
                src.overrides.push(format!("mining.mode=\"{m}\""));
            }
            if let Some(c) = count {
                src.overrides.push(format!("mining.count={c}"));
            }
            if let Some(s) = size {
                src.overrides.push(format!("mining.set_size={s}"));
            }
        }
        _ => {}
    }
    let mut config = resolve(&src)?;
    config.generation.workers = config.generation.workers.max(config.workers);
    match cli.command {
        Command::GenData { out, .. } => gen_data(&config, &out),
        Command::Augment { input, out, .. } => augment(&config, &input, &out),
        Command::Batch { input, out } => batch(&config, &input, &out),
        Command::MineRetrieval { input, out, .. } => mine(&config, &input, &out),
        Command::Train { input, out, .. } => train_cmd(&config, &input, &out),
        Command::Finetune { checkpoint, input, out } => finetune(&config, &checkpoint, &input, &out),
        Command::Check { aag, ltl } => check(&config, &aag, &ltl),
        Command::EvalRetrieval { checkpoint, sets, out } => eval_retrieval(&config, &checkpoint, &sets, &out),
        Command::Report { checkpoint, input, out } => report(&config, &checkpoint, &input, &out),
    }
}

fn rng(config: &RunConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(runtime("creating output directory"))?;
    }
    Ok(())
}

fn finish(out: &Path, config: &RunConfig) -> Result<i32, CliError> {
    write_snapshot(out, config).map_err(runtime("writing config snapshot"))?;
    Ok(0)
}

fn load_pairs(path: &Path) -> Result<Vec<PairRecord>, CliError> {
    read_records(path).map_err(runtime("reading dataset"))
}

fn gen_data(config: &RunConfig, out: &Path) -> Result<i32, CliError> {
    prepare_out(out)?;
    let (pairs, rep) = generate_pairs(&config.generation, &mut rng(config, 1)).map_err(runtime("generation"))?;
    log::info!("generated {} pairs: {rep:?}", pairs.len());
    write_records(out, &pairs).map_err(runtime("writing dataset"))?;
    finish(out, config)
}

fn augment(config: &RunConfig, input: &Path, out: &Path) -> Result<i32, CliError> {
    let pairs = load_pairs(input)?;
    prepare_out(out)?;
    let (aug, rep) = augment_dataset(&pairs, &config.augmentation, &mut rng(config, 2)).map_err(runtime("augmentation"))?;
    log::info!("augmented: {rep:?}");
    if rep.reverify_failures > 0 {
        return Err(CliError::Runtime(format!("{} augmented records failed re-verification", rep.reverify_failures)));
    }
    write_records(out, &aug).map_err(runtime("writing dataset"))?;
    finish(out, config)
}

fn batch(config: &RunConfig, input: &Path, out: &Path) -> Result<i32, CliError> {
    let pairs = load_pairs(input)?;
    prepare_out(out)?;
    let b = &config.batching;
    let batches = build_batches(&pairs, b.batch_size, &mut rng(config, 3), b.filter_mode()?, &b.oracle, &mut VerdictCache::new())
        .map_err(runtime("batching"))?;
    log::info!("{} batches", batches.len());
    write_jsonl(out, &batches).map_err(runtime("writing batches"))?;
    finish(out, config)
}

fn mine(config: &RunConfig, input: &Path, out: &Path) -> Result<i32, CliError> {
    let pairs = load_pairs(input)?;
    prepare_out(out)?;
    let sets = mine_retrieval_sets(&pairs, &config.mining, &mut rng(config, 4)).map_err(runtime("mining"))?;
    log::info!("mined {} {:?} sets", sets.len(), config.mining.mode);
    write_jsonl(out, &sets).map_err(runtime("writing retrieval sets"))?;
    finish(out, config)
}

fn step_log_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".log.jsonl");
    out.with_file_name(name)
}

fn train_cmd(config: &RunConfig, input: &Path, out: &Path) -> Result<i32, CliError> {
    let pairs = load_pairs(input)?;
    prepare_out(out)?;
    let mut log_lines = Vec::new();
    let every = config.training.log_every;
    let outcome = train(&pairs, &config.training, |s| {
        if every > 0 && s.step % every == 0 {
            log::info!("step {} loss {:.4} l_ce {:.4} l_rr {:.5} lr {:.2e}", s.step, s.loss, s.l_ce, s.l_rr, s.lr);
        }
        log_lines.push(serde_json::to_string(s).expect("step log serializes"));
    })
    .map_err(|e| match e {
        cnml_neural::TrainError::Config(m) => CliError::Config(m),
        other => CliError::Runtime(other.to_string()),
    })?;
    let extra = serde_json::json!({
        "training": config.training,
        "steps": outcome.log.len(),
        "epochs": outcome.epochs,
        "final_loss": outcome.log.last().map(|s| s.loss),
    });
    save_checkpoint(out, &outcome.model, &extra).map_err(runtime("writing checkpoint"))?;
    let mut text = log_lines.join("\n");
    text.push('\n');
    fs::write(step_log_path(out), text).map_err(runtime("writing step log"))?;
    finish(out, config)
}

/// Same architecture and vocabulary as `model`, fresh weights.
fn untrained_like(model: &CnmlModel, seed: u64) -> Result<CnmlModel, CliError> {
    CnmlModel::init(&model.config, model.vocab.clone(), model.tau(), &mut ChaCha8Rng::seed_from_u64(seed))
        .map_err(CliError::Runtime)
}

fn load_model(path: &Path) -> Result<CnmlModel, CliError> {
    Ok(load_checkpoint(path).map_err(runtime("loading checkpoint"))?.0)
}

fn finetune(config: &RunConfig, checkpoint: &Path, input: &Path, out: &Path) -> Result<i32, CliError> {
    let model = load_model(checkpoint)?;
    let pairs = load_pairs(input)?;
    prepare_out(out)?;
    let f = &config.finetune;
    let labeled = labeled_pairs(&pairs, f.pairs, &f.oracle, &mut rng(config, 5)).map_err(runtime("labeling"))?;
    let n_test = ((labeled.len() as f64) * f.test_fraction).round() as usize;
    let (test, train) = labeled.split_at(n_test);
    let baseline = untrained_like(&model, config.seed ^ 0xba5e)?;
    let (_, pre) = finetune_classifier(&model, train, test, &f.probe).map_err(runtime("probe"))?;
    let (_, rand) = finetune_classifier(&baseline, train, test, &f.probe).map_err(runtime("probe"))?;
    log::info!("test accuracy: pretrained {:.3}, random init {:.3}", pre.test.accuracy, rand.test.accuracy);
    let report = serde_json::json!({
        "train_pairs": train.len(),
        "test_pairs": test.len(),
        "pretrained": pre,
        "random_init": rand,
    });
    fs::write(out, serde_json::to_string_pretty(&report).expect("report serializes")).map_err(runtime("writing report"))?;
    finish(out, config)
}

fn letter(props: &[String], l: u64) -> String {
    let on: Vec<&str> = props.iter().enumerate().filter(|(k, _)| l >> k & 1 == 1).map(|(_, p)| p.as_str()).collect();
    format!("{{{}}}", on.join(","))
}

fn format_lasso(w: &Lasso) -> String {
    let show = |xs: &[u64]| xs.iter().map(|&l| letter(&w.props, l)).collect::<Vec<_>>().join(" ");
    format!("prefix: {}\nloop: {}", show(&w.prefix), show(&w.cycle))
}

/// Exit 0 for SAT, 1 for UNSAT, 2 when the budget runs out.
fn check(config: &RunConfig, aag: &Path, ltl: &str) -> Result<i32, CliError> {
    let text = fs::read_to_string(aag).map_err(runtime(&aag.display().to_string()))?;
    let circuit = parse_aag(&text).map_err(runtime(&aag.display().to_string()))?;
    let formula = parse_ltl(ltl).map_err(runtime("formula"))?;
    let verdict = config.check.check(&circuit, &formula).map_err(runtime("model checking"))?;
    let mut stdout = std::io::stdout().lock();
    let code = match verdict {
        Verdict::Satisfies => {
            let _ = writeln!(stdout, "SAT");
            0
        }
        Verdict::Violates(w) => {
            let _ = writeln!(stdout, "UNSAT\n{}", format_lasso(&w));
            1
        }
        Verdict::ResourceLimit(states) => {
            let _ = writeln!(stdout, "LIMIT after {states} product states");
            2
        }
    };
    Ok(code)
}

fn eval_retrieval(config: &RunConfig, checkpoint: &Path, sets_path: &Path, out: &Path) -> Result<i32, CliError> {
    let model = load_model(checkpoint)?;
    let sets: Vec<RetrievalSet> = read_jsonl(sets_path).map_err(runtime("reading retrieval sets"))?;
    if sets.is_empty() {
        return Err(CliError::Runtime("no retrieval sets".into()));
    }
    prepare_out(out)?;
    let e = &config.evaluation;
    let untrained = untrained_like(&model, config.seed ^ 0xba5e)?;
    let mut table = MetricsTable::default();
    table.push("cnml", evaluate_retrieval(&ModelScorer { name: "cnml".into(), model: &model }, &sets));
    table.push("untrained", evaluate_retrieval(&ModelScorer { name: "untrained".into(), model: &untrained }, &sets));
    table.push("random", evaluate_retrieval(&RandomScorer::new(e.random_seed), &sets));
    let intra = sets.iter().all(|s| s.mode == RetrievalMode::Intra);
    if e.baselines && intra {
        table.push("levenshtein", evaluate_retrieval(&LevenshteinScorer, &sets));
        table.push("bag-of-keywords", evaluate_retrieval(&BagOfKeywordsScorer { vocab: &model.vocab }, &sets));
        table.push("wl-kernel", evaluate_retrieval(&WlScorer { h: e.wl_iterations }, &sets));
    }
    let tsv = table.to_tsv();
    print!("{tsv}");
    fs::write(out, tsv).map_err(runtime("writing metrics"))?;
    finish(out, config)
}

fn report(config: &RunConfig, checkpoint: &Path, input: &Path, out: &Path) -> Result<i32, CliError> {
    let model = load_model(checkpoint)?;
    let pairs = load_pairs(input)?;
    prepare_out(out)?;
    let e = &config.evaluation;
    let mut labeled = labeled_pairs(&pairs, e.report_pairs, &config.finetune.oracle, &mut rng(config, 6))
        .map_err(runtime("labeling"))?;
    labeled.shuffle(&mut rng(config, 7));
    let rep = embedding_space_report(&model, &labeled, e.histogram_bins, e.heatmap_size);
    fs::write(out, serde_json::to_string_pretty(&rep).expect("report serializes")).map_err(runtime("writing report"))?;
    finish(out, config)
}
