//! Command-line front end.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ortsae::datagen::{read_activations, write_activations, SyntheticWorld, WorldSpec};
use ortsae::metasae::composition_rate_with;
use ortsae::metasae::MetaBudget;
use ortsae::metrics::{
    decompose_feature, evaluate, nearest_cos_csv, nearest_cosines, unique_features, DecomposeOptions, EvalOptions,
    DEFAULT_THRESHOLDS,
};
use ortsae::numerics::{streams, RngStream};
use ortsae::trainer::{train_to_dir, Checkpoint, MatrixSource, CHECKPOINT_FILE, METRICS_FILE};

use config::{env_seed, RunConfig};

pub const WORLD_FILE: &str = "world.json";
pub const DATA_FILE: &str = "activations.bin";
pub const REPORT_FILE: &str = "report.csv";
pub const CLUSTERING_FILE: &str = "clustering.csv";
pub const MAX_COS_FILE: &str = "max_cos.csv";
pub const META_FILE: &str = "meta.saeckpt";

#[derive(Debug, Parser)]
#[command(name = "ortsae", version, about = "Sparse autoencoders with decoder orthogonality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic world and write it with its activations.
    GenData(GenData),
    /// Train an SAE on an activation file.
    Train(Train),
    /// Compute the metric report of a checkpoint.
    Eval(Eval),
    /// Composition rate of a checkpoint's decoder.
    Metasae(Metasae),
    /// Express each feature of one checkpoint in the dictionary of another.
    Decompose(Decompose),
    /// Fraction of features of one checkpoint absent from another.
    Compare(Compare),
}

#[derive(Debug, Args)]
pub struct GenData {
    /// Output directory for `world.json` and `activations.bin`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 65536)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON world shape; defaults to the desk world.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Train {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Eval {
    /// Checkpoint file, or a training output directory.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Ground-truth world for MMCS.
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Second checkpoint for the unique-feature fraction.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Directory for the CSV outputs; defaults to the working directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
}

#[derive(Debug, Args)]
pub struct Metasae {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = META_FILE)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub steps: u64,
}

#[derive(Debug, Args)]
pub struct Decompose {
    /// Checkpoint whose features are decomposed.
    #[arg(long)]
    pub a: PathBuf,
    /// Checkpoint providing the dictionary.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub max_atoms: usize,
    #[arg(long, default_value_t = 0.95)]
    pub cos_accept: f64,
    #[arg(long, default_value_t = 0.1)]
    pub coef_min: f64,
}

#[derive(Debug, Args)]
pub struct Compare {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub threshold: f64,
}

/// Accepts a checkpoint file or a directory holding `checkpoint.saeckpt`.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = if path.is_dir() { path.join(CHECKPOINT_FILE) } else { path.to_path_buf() };
    Checkpoint::load(&file).with_context(|| format!("loading checkpoint {}", file.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn seed_or_env(seed: u64) -> Result<u64> {
    Ok(env_seed()?.unwrap_or(seed))
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a, out),
        Command::Train(a) => train(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Metasae(a) => metasae(a, out),
        Command::Decompose(a) => decompose(a, out),
        Command::Compare(a) => compare(a, out),
    }
}

fn gen_data(a: GenData, out: &mut dyn Write) -> Result<()> {
    if a.rows == 0 {
        bail!("invalid `rows`: must be >= 1");
    }
    let spec = match &a.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<WorldSpec>(&text).context("invalid world spec")?
        }
        None => WorldSpec::default(),
    };
    let seed = seed_or_env(a.seed)?;
    let world = SyntheticWorld::generate(&spec, &mut RngStream::derive(seed, streams::WORLD))?;
    let (x, codes) = world.sample_batch(a.rows, &mut RngStream::derive(seed, streams::DATA));
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write(&a.out.join(WORLD_FILE), &world.to_json()?)?;
    write_activations(a.out.join(DATA_FILE), &x)?;
    writeln!(out, "wrote {} rows of width {} (mean true L0 {})", x.rows(), x.cols(), codes.mean_l0())?;
    Ok(())
}

fn train(a: Train, out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = env_seed()? {
        cfg.seed = seed;
    }
    let data = read_activations(&a.data)?;
    let mut source = MatrixSource::new(data, RngStream::derive(cfg.seed, streams::DATA))?;
    let outcome = train_to_dir(&mut source, cfg.m, &cfg.sae(), &cfg.train(), &a.out)?;
    let last = outcome.log.last();
    writeln!(
        out,
        "trained {} steps; final mse {}; wrote {} and {}",
        outcome.state.step(),
        last.map_or(f64::NAN, |r| r.mse),
        a.out.join(CHECKPOINT_FILE).display(),
        a.out.join(METRICS_FILE).display()
    )?;
    Ok(())
}

fn eval(a: Eval, out: &mut dyn Write) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let x = read_activations(&a.data)?;
    let world = match &a.world {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(SyntheticWorld::from_json(&text)?)
        }
        None => None,
    };
    let reference = a.reference.as_deref().map(load_checkpoint).transpose()?;
    let opts = EvalOptions {
        thresholds: a.thresholds.unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec()),
        batch_size: a.batch_size,
        reference: reference.as_ref().map(|r| &r.params.w_dec),
        world: world.as_ref(),
        ..EvalOptions::default()
    };
    let sae = &ck.meta.sae;
    let report = evaluate(&ck.params, sae, &x, &opts)?;
    let near = nearest_cosines(&ck.params.w_dec, sae.delta)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let summary = report.summary_csv();
    write(&a.out.join(REPORT_FILE), &summary)?;
    write(&a.out.join(CLUSTERING_FILE), &report.clustering_csv())?;
    write(&a.out.join(MAX_COS_FILE), &nearest_cos_csv(&near))?;
    out.write_all(summary.as_bytes())?;
    Ok(())
}

fn metasae(a: Metasae, out: &mut dyn Write) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let budget = MetaBudget {
        total_steps: a.steps,
        ..MetaBudget::default()
    };
    let meta = composition_rate_with(&ck.params.w_dec, seed_or_env(a.seed)?, &budget)?;
    meta.checkpoint.save(&a.out)?;
    writeln!(out, "composition_rate,{}", meta.rate)?;
    Ok(())
}

fn decompose(a: Decompose, out: &mut dyn Write) -> Result<()> {
    let (ca, cb) = (load_checkpoint(&a.a)?, load_checkpoint(&a.b)?);
    let opts = DecomposeOptions {
        max_atoms: a.max_atoms,
        cos_accept: a.cos_accept,
        coef_min: a.coef_min,
    };
    let w = &ca.params.w_dec;
    let mut csv = String::from("feature_id,atoms,coefficients,cosine\n");
    let mut accepted = 0;
    for f in 0..w.cols() {
        if let Some(d) = decompose_feature(&w.column(f), &cb.params.w_dec, &opts)? {
            accepted += 1;
            let atoms: Vec<String> = d.atoms.iter().map(|v| v.to_string()).collect();
            let coefs: Vec<String> = d.coefficients.iter().map(|v| v.to_string()).collect();
            csv.push_str(&format!("{f},{},{},{}\n", atoms.join(";"), coefs.join(";"), d.cosine));
        }
    }
    write(&a.out, &csv)?;
    writeln!(out, "decomposed {accepted} of {} features", w.cols())?;
    Ok(())
}

fn compare(a: Compare, out: &mut dyn Write) -> Result<()> {
    let (ca, cb) = (load_checkpoint(&a.a)?, load_checkpoint(&a.b)?);
    let delta = ca.meta.sae.delta;
    let frac = unique_features(&ca.params.w_dec, &cb.params.w_dec, a.threshold, delta)?;
    writeln!(out, "unique_fraction,{frac}")?;
    Ok(())
}
