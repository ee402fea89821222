use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use semantic_turbo::autoencoder::{build_default_codec, train, SemanticCodec, SemanticCodecSpec, TrainingConfig, TrainingProfile};
use semantic_turbo::dataio::{load_scaled, write_synthetic_cifar10, DatasetSource, Split, CODEC_UPSCALE};
use semantic_turbo::experiment::{
    aggregate_path, dump_images, parse_config_text, snr_range, sweep, thread_cap_from_env, write_aggregate_csv,
    write_rows_csv, ExperimentConfig,
};
use semantic_turbo::ldpc::{construct_regular_code, systematize, to_alist, CodeSpec, SystematicCode};
use semantic_turbo::semantic_turbo::AprioriScope;
use semantic_turbo::{Error, Result};

/// Iterative LDPC + semantic auto-encoder image transmission simulator.
#[derive(Parser, Debug)]
#[command(author, version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the denoising codec and write its weights.
    Train(TrainArgs),
    /// Paired semantic/baseline run at one SNR.
    Simulate(SimArgs),
    /// Paired runs over an SNR range.
    Sweep(SimArgs),
    /// Write the parity-check matrix in alist format.
    RenderH(RenderArgs),
    /// Generate a synthetic dataset in CIFAR-10 binary layout.
    SynthData(SynthArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Directory with CIFAR-10 binary batches
    #[arg(long)]
    data: Option<PathBuf>,
    /// key = value file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output weights file
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Training-loss CSV (default: <weights>.log.csv)
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the profile's epoch count
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the profile's training-set size
    #[arg(long)]
    train_images: Option<usize>,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Directory with CIFAR-10 binary batches (test split is used)
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_to: Option<f64>,
    #[arg(long)]
    snr_step: Option<f64>,
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Outer turbo rounds
    #[arg(long)]
    rounds: Option<usize>,
    /// BP iterations per round
    #[arg(long)]
    inner_iters: Option<usize>,
    /// A priori LLR magnitude
    #[arg(long)]
    alpha: Option<f64>,
    /// Per-round CSV; the aggregate goes to <stem>.agg.csv
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    dump_images: Option<PathBuf>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    baseline_only: bool,
    /// Exact ±1 symbols instead of AWGN
    #[arg(long)]
    noiseless: bool,
    /// A priori on parity bits too
    #[arg(long)]
    all_bits: bool,
    #[arg(long)]
    early_stop: bool,
    #[arg(long)]
    code_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 900)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dv: usize,
    #[arg(long, default_value_t = 3)]
    dc: usize,
    #[arg(long)]
    code_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2_000)]
    train: usize,
    #[arg(long, default_value_t = 200)]
    test: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Config-file values, consulted only for flags left unset.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig(HashMap::new()));
        };
        let text = fs::read_to_string(path)?;
        Ok(FileConfig(parse_config_text(&text)?.into_iter().collect()))
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key {key}: cannot parse {v:?}"))),
        }
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("--{name} is required (flag or config key)")))
}

fn profile(v: Option<String>) -> Result<TrainingProfile> {
    v.as_deref().unwrap_or("desk").parse()
}

fn build_code(seed: Option<u64>) -> Result<SystematicCode> {
    let spec = CodeSpec {
        seed: seed.unwrap_or(CodeSpec::default().seed),
        ..CodeSpec::default()
    };
    Ok(systematize(&construct_regular_code(&spec)?))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let file = FileConfig::load(a.config.as_deref())?;
    let data: PathBuf = required(file.pick(a.data, "data")?, "data")?;
    let weights: PathBuf = required(file.pick(a.weights, "weights")?, "weights")?;
    let profile = profile(file.pick(a.profile, "profile")?)?;
    let seed = file.pick(a.seed, "seed")?.unwrap_or(1);
    let mut cfg = TrainingConfig::for_profile(profile, seed);
    if let Some(e) = file.pick(a.epochs, "epochs")? {
        cfg.epochs = e;
    }
    let count = file.pick(a.train_images, "train-images")?.unwrap_or(profile.train_images());
    let images = load_scaled(&DatasetSource::new(data, Split::Train), Some(count), CODEC_UPSCALE)?;
    eprintln!("training on {} images, {} epochs", images.len(), cfg.epochs);
    let mut codec = build_default_codec(seed)?;
    let mut report = |epoch: usize, loss: f64| eprintln!("epoch {epoch}: loss {loss:.6}");
    let log = train(&mut codec, &images, &cfg, Some(&mut report))?;
    codec.save(&weights)?;
    let log_path = file
        .pick(a.log, "log")?
        .unwrap_or_else(|| weights.with_extension("log.csv"));
    log.write_csv(BufWriter::new(File::create(log_path)?))?;
    Ok(())
}

fn cmd_simulate(a: SimArgs, is_sweep: bool) -> Result<()> {
    let file = FileConfig::load(a.config.as_deref())?;
    let data: PathBuf = required(file.pick(a.data, "data")?, "data")?;
    let csv: PathBuf = required(file.pick(a.csv, "csv")?, "csv")?;
    let baseline_only = file.flag(a.baseline_only, "baseline-only")?;
    let mut cfg = ExperimentConfig::default();
    cfg.baseline_only = baseline_only;
    cfg.noiseless = file.flag(a.noiseless, "noiseless")?;
    // profile only selects defaults for training; accepted here for config symmetry
    profile(file.pick(a.profile, "profile")?)?;
    if let Some(s) = file.pick(a.seed, "seed")? {
        cfg.master_seed = s;
    }
    if let Some(n) = file.pick(a.images, "images")? {
        cfg.images = n;
    }
    if let Some(t) = file.pick(a.rounds, "rounds")? {
        cfg.turbo.outer_rounds = t;
    }
    if let Some(l) = file.pick(a.inner_iters, "inner-iters")? {
        cfg.turbo.inner_bp_iters = l;
    }
    if let Some(alpha) = file.pick(a.alpha, "alpha")? {
        cfg.turbo.apriori_magnitude = alpha;
    }
    if file.flag(a.all_bits, "all-bits")? {
        cfg.turbo.apply_apriori_to = AprioriScope::AllBits;
    }
    cfg.turbo.early_stop = file.flag(a.early_stop, "early-stop")?;
    if let Some(s) = file.pick(a.code_seed, "code-seed")? {
        cfg.code.seed = s;
    }
    cfg.snr_db = if is_sweep {
        let d = ExperimentConfig::default().snr_db;
        snr_range(
            file.pick(a.snr_from, "snr-from")?.unwrap_or(d[0]),
            file.pick(a.snr_to, "snr-to")?.unwrap_or(d[d.len() - 1]),
            file.pick(a.snr_step, "snr-step")?.unwrap_or(1.0),
        )?
    } else {
        vec![required(file.pick(a.snr_db, "snr-db")?, "snr-db")?]
    };
    cfg.validate()?;

    let codec = if baseline_only {
        None
    } else {
        let w: PathBuf = required(file.pick(a.weights, "weights")?, "weights")?;
        Some(SemanticCodec::load(w, SemanticCodecSpec::default_spec().input_shape)?)
    };
    let code = build_code(Some(cfg.code.seed))?;
    let images = load_scaled(&DatasetSource::new(data, Split::Test), Some(cfg.images), CODEC_UPSCALE)?;
    let points = sweep(&code, codec.as_ref(), &images, &cfg)?;

    write_rows_csv(BufWriter::new(File::create(&csv)?), &points)?;
    write_aggregate_csv(BufWriter::new(File::create(aggregate_path(&csv))?), &points)?;
    if let Some(dir) = file.pick(a.dump_images, "dump-images")? {
        let dir: PathBuf = dir;
        for p in &points {
            dump_images(&dir, p, &images)?;
        }
    }
    for p in &points {
        let agg = p.final_aggregate()?;
        eprintln!(
            "snr {:>5} dB  round {}  ber_noic {:.3e}  ed_noic {:.1}{}",
            agg.snr_db,
            agg.round,
            agg.ber_noic,
            agg.ed_noic,
            match (agg.ber_ic, agg.ed_ic) {
                (Some(b), Some(e)) => format!("  ber_ic {b:.3e}  ed_ic {e:.1}"),
                _ => String::new(),
            }
        );
    }
    Ok(())
}

fn cmd_render_h(a: RenderArgs) -> Result<()> {
    let spec = CodeSpec {
        n: a.n,
        dv: a.dv,
        dc: a.dc,
        seed: a.code_seed.unwrap_or(CodeSpec::default().seed),
    };
    let h = construct_regular_code(&spec)?;
    fs::write(&a.out, to_alist(&h))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = thread_cap_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Simulate(a) => cmd_simulate(a, false),
        Command::Sweep(a) => cmd_simulate(a, true),
        Command::RenderH(a) => cmd_render_h(a),
        Command::SynthData(a) => write_synthetic_cifar10(&a.out, a.train, a.test, a.seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
