use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stftkan::data::synth::{shapes_dataset, SHAPE_NAMES};
use stftkan::data::{
    load_directory, read_cache, write_cache, write_ply, write_xyz, Dataset, DatasetSplit, TRAIN_RATIO,
};
use stftkan::model::Position;
use stftkan::train::{
    evaluate, history_csv, random_search, read_checkpoint, read_pairs, train, trials_csv, write_checkpoint, Metrics,
    SearchSpace, TrainConfig,
};
use stftkan::{gradcheck, Error, ModelConfig, ModelVariant, Result};

#[derive(Parser)]
#[command(name = "stftkan", version, about = "STFT-KAN liteDGCNN point-cloud classifier")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log per-epoch progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample, normalise and cache a `<root>/<class>/*.{xyz,ply}` tree.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        /// Print the train/test counts this split seed produces.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = TRAIN_RATIO)]
        ratio: f64,
    },
    /// Write a synthetic sphere/cube/disc dataset as a class directory tree.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 30)]
        per_class: usize,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FileFormat::Xyz)]
        format: FileFormat,
    },
    /// Train a model and write checkpoints and a metrics CSV.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Score a checkpoint on the test split of a dataset.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        /// Cache file or class directory tree.
        #[arg(long)]
        data: PathBuf,
        /// Split seed used when training.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = TRAIN_RATIO)]
        ratio: f64,
        /// Points per cloud when `--data` is a directory.
        #[arg(long, default_value_t = 1024)]
        points: usize,
        /// Score every sample instead of the test split.
        #[arg(long)]
        all: bool,
    },
    /// Trainable parameter counts, per layer and in total.
    Params {
        #[arg(long)]
        variant: Option<ModelVariant>,
        #[arg(long, default_value_t = 7)]
        classes: usize,
        /// Use the reduced widths of the test models.
        #[arg(long)]
        scaled: bool,
    },
    /// Compare every analytic gradient with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Uniform random search over STFT-KAN framing hyperparameters.
    Search {
        #[command(flatten)]
        run: RunArgs,
        /// Bounds file; omitted keys keep the reference bounds.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        trials: usize,
        /// Ranked trial table (CSV); printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Xyz,
    Ply,
}

#[derive(Args)]
struct RunArgs {
    /// Cache file or class directory tree.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    variant: Option<ModelVariant>,
    /// `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Use the reduced widths of the test models.
    #[arg(long)]
    scaled: bool,
    #[arg(long)]
    no_augment: bool,
    /// Extra `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl RunArgs {
    fn config(&self) -> Result<TrainConfig> {
        let mut pairs = match &self.config {
            Some(path) => read_pairs(path)?,
            None => Vec::new(),
        };
        if let Some(v) = self.variant {
            pairs.push(("variant".into(), v.to_string()));
        }
        let mut cfg = TrainConfig::new(ModelVariant::StftKan).apply_pairs(&pairs)?;
        if self.scaled {
            let scaled = ModelConfig::scaled(cfg.variant, 2);
            cfg = cfg.with_model(&scaled);
        }
        for s in &self.sets {
            let (k, v) =
                s.split_once('=').ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(x) = self.seed {
            cfg.seed = x;
        }
        if let Some(x) = self.epochs {
            cfg.epochs = x;
        }
        if let Some(x) = self.batch {
            cfg.batch_size = x;
        }
        if let Some(x) = self.lr {
            cfg.lr = x;
        }
        if let Some(x) = self.points {
            cfg.points = x;
        }
        if self.no_augment {
            cfg.augment = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_dataset(path: &Path, points: usize) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::Data(format!("{}: no such file or directory", path.display())));
    }
    if path.is_dir() {
        load_directory(path, points)
    } else {
        read_cache(path)
    }
}

fn print_metrics(label: &str, m: &Metrics, class_names: &[String]) {
    println!("{label}: OA {:.4}  BA {:.4}  params {}", m.oa, m.ba, m.param_count);
    for (i, r) in m.recall.iter().enumerate() {
        let name = class_names.get(i).map(String::as_str).unwrap_or("?");
        match r {
            Some(r) => println!("  {name:<16} recall {r:.4}  {:?}", m.confusion[i]),
            None => println!("  {name:<16} absent"),
        }
    }
}

fn split_summary(split: &DatasetSplit) {
    let (tr, te) = (split.train_counts(), split.test_counts());
    println!("{:<16} {:>6} {:>6}", "class", "train", "test");
    for (i, name) in split.class_names.iter().enumerate() {
        println!("{name:<16} {:>6} {:>6}", tr[i], te[i]);
    }
    println!("{:<16} {:>6} {:>6}", "total", split.train.len(), split.test.len());
}

fn cmd_preprocess(input: &Path, output: &Path, points: usize, seed: Option<u64>, ratio: f64) -> Result<()> {
    let dataset = load_directory(input, points)?;
    write_cache(output, &dataset)?;
    println!("{} clouds in {} classes -> {}", dataset.clouds.len(), dataset.classes(), output.display());
    if let Some(seed) = seed {
        split_summary(&dataset.split(ratio, seed)?);
    }
    Ok(())
}

fn cmd_synth(output: &Path, per_class: usize, points: usize, seed: u64, format: FileFormat) -> Result<()> {
    let dataset = shapes_dataset(per_class, points, seed);
    for name in SHAPE_NAMES {
        fs::create_dir_all(output.join(name))?;
    }
    for c in &dataset.clouds {
        let dir = output.join(&dataset.class_names[c.label]);
        match format {
            FileFormat::Xyz => write_xyz(dir.join(format!("{}.xyz", c.source_id)), &c.points)?,
            FileFormat::Ply => write_ply(dir.join(format!("{}.ply", c.source_id)), &c.points)?,
        }
    }
    println!("{} clouds -> {}", dataset.clouds.len(), output.display());
    Ok(())
}

fn cmd_train(run: &RunArgs, out: &Path) -> Result<()> {
    let cfg = run.config()?;
    let split = load_dataset(&run.data, cfg.points)?.split(cfg.train_ratio, cfg.seed)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let outcome = train(&cfg, &split)?;
    fs::write(out.join("metrics.csv"), history_csv(&outcome.history, true))?;
    write_checkpoint(out.join("final.skck"), &outcome.final_model, &split.class_names)?;
    write_checkpoint(out.join("best.skck"), &outcome.best_model, &split.class_names)?;
    let mean_et = outcome.history.iter().map(|r| r.epoch_time_s).sum::<f64>() / outcome.history.len() as f64;
    print_metrics(&format!("final (epoch {})", cfg.epochs - 1), &outcome.final_metrics, &split.class_names);
    print_metrics(&format!("best (epoch {})", outcome.best_epoch), &outcome.best_metrics, &split.class_names);
    println!("mean epoch time {mean_et:.3}s; outputs in {}", out.display());
    Ok(())
}

fn cmd_eval(ckpt: &Path, data: &Path, seed: u64, ratio: f64, points: usize, all: bool) -> Result<()> {
    let ck = read_checkpoint(ckpt, None)?;
    let dataset = load_dataset(data, points)?;
    let classes = ck.model.config().classes;
    if dataset.classes() != classes {
        return Err(Error::Checkpoint(format!("model has {classes} classes, data has {}", dataset.classes())));
    }
    if !ck.class_names.is_empty() && ck.class_names != dataset.class_names {
        return Err(Error::Checkpoint("class names differ between checkpoint and data".into()));
    }
    let names = dataset.class_names.clone();
    let clouds = if all { dataset.clouds } else { dataset.split(ratio, seed)?.test };
    let m = evaluate(&ck.model, &clouds)?;
    print_metrics(&format!("{} ({} samples)", ck.model.config().variant, clouds.len()), &m, &names);
    Ok(())
}

fn cmd_params(variant: Option<ModelVariant>, classes: usize, scaled: bool) -> Result<()> {
    let variants = variant.map(|v| vec![v]).unwrap_or_else(|| ModelVariant::ALL.to_vec());
    for v in variants {
        let cfg = if scaled { ModelConfig::scaled(v, classes) } else { ModelConfig::reference(v, classes) };
        cfg.validate()?;
        let total = cfg.param_count();
        println!("{v}: {total} ({:.2} M)", total as f64 / 1e6);
        for p in Position::ALL {
            let (d_in, d_out) = cfg.widths(p);
            println!("  {:<5} {d_in:>5} -> {d_out:<5} {:>8}", p.name(), cfg.layer_param_count(p));
        }
    }
    Ok(())
}

fn cmd_gradcheck(seed: u64) -> Result<()> {
    let report = gradcheck::run(seed)?;
    for c in &report.checks {
        let verdict = if c.passed() { "ok" } else { "FAIL" };
        println!("{:<32} {:>6} entries  max rel {:.2e}  {verdict}", c.name, c.entries, c.max_rel_error);
    }
    println!("W=2 sine-coefficient gradient max |g| = {:e}", report.dead_sine_max_abs);
    if report.passed() {
        println!("all gradients within {:e}", gradcheck::TOLERANCE);
        Ok(())
    } else {
        Err(Error::NonFinite { layer: "gradcheck".into(), batch: None })
    }
}

fn cmd_search(run: &RunArgs, space: Option<&Path>, trials: usize, out: Option<&Path>) -> Result<()> {
    let cfg = run.config()?;
    let space = match space {
        Some(p) => SearchSpace::from_file(p)?,
        None => SearchSpace::default(),
    };
    let split = load_dataset(&run.data, cfg.points)?.split(cfg.train_ratio, cfg.seed)?;
    let table = trials_csv(&random_search(&cfg, &space, trials, cfg.epochs, &split)?);
    match out {
        Some(p) => {
            fs::write(p, &table)?;
            println!("{trials} trials -> {}", p.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Preprocess { input, output, points, seed, ratio } => {
            cmd_preprocess(&input, &output, points, seed, ratio)
        }
        Command::Synth { output, per_class, points, seed, format } => {
            cmd_synth(&output, per_class, points, seed, format)
        }
        Command::Train { run, out } => cmd_train(&run, &out),
        Command::Eval { ckpt, data, seed, ratio, points, all } => cmd_eval(&ckpt, &data, seed, ratio, points, all),
        Command::Params { variant, classes, scaled } => cmd_params(variant, classes, scaled),
        Command::Gradcheck { seed } => cmd_gradcheck(seed),
        Command::Search { run, space, trials, out } => cmd_search(&run, space.as_deref(), trials, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Error::Usage(String::new()).exit_code() as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
