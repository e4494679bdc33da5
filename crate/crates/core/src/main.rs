use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reuseknn::dataset::{
    describe, load_ratings, synth_dataset, write_ratings, DuplicatePolicy, RatingFormat, RatingScale,
    RatingTable, Skew, SynthSpec,
};
use reuseknn::embeddings::{self, embedding_eval_splits, save_model, TrainConfig};
use reuseknn::harness::{self, fmt_num, ExperimentConfig, Metric, ResultSet, RunManifest};
use reuseknn::knn::{DpMode, Method, Strategy};
use reuseknn::metrics::Tail;
use reuseknn::privacy::estimate_tau;
use reuseknn::{Error, Result};

#[derive(Parser)]
#[command(name = "reuseknn", version, about = "Differentially-private KNN recommendation with neighborhood reuse")]
struct Cli {
    /// Output format for what is printed on stdout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its results.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Test two methods of a finished run against each other.
    Compare {
        /// Run directory holding manifest.json and the metric CSVs.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        metric: String,
        /// Neighborhood size; every k of the run when omitted.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = TailArg::TwoSided)]
        tail: TailArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Print descriptive statistics of a rating file.
    Describe {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Generate a synthetic rating file.
    Synth {
        #[arg(long, default_value_t = 200)]
        users: usize,
        #[arg(long, default_value_t = 1000)]
        items: usize,
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        #[arg(long, default_value = "1..5")]
        scale: String,
        /// Item popularity exponent; 0 for uniform.
        #[arg(long, default_value_t = 0.0)]
        popularity: f64,
        /// Profile-size exponent; 0 for uniform.
        #[arg(long, default_value_t = 0.0)]
        activity: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_parser = parse_format, default_value = "csv")]
        file_format: RatingFormat,
    },
    /// Estimate the vulnerability threshold from a data-usage distribution.
    EstimateTau {
        /// Ledger CSV with a data_usage column.
        #[arg(long, conflicts_with_all = ["config"])]
        ledger: Option<PathBuf>,
        /// Config whose dataset is run with plain UserKNN per fold and k.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train the bilinear embedding model and save it.
    TrainEmbeddings {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        /// Also report held-out MAE over the five evaluation rounds.
        #[arg(long)]
        evaluate: bool,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "csv")]
    input_format: RatingFormat,
    #[arg(long, default_value = "1..5")]
    scale: String,
    /// Keep the last of duplicated (user, item) pairs instead of failing.
    #[arg(long)]
    last_wins: bool,
}

impl InputArgs {
    fn load(&self) -> Result<RatingTable> {
        let scale: RatingScale = self.scale.parse()?;
        let dup = if self.last_wins {
            DuplicatePolicy::LastWins
        } else {
            DuplicatePolicy::Reject
        };
        load_ratings(&self.input, self.input_format, &scale, dup)
    }
}

#[derive(Args)]
struct Overrides {
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the machine default.
    #[arg(long)]
    threads: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        // a flag path is taken relative to the working directory, not the config
        if let Some(o) = &self.output {
            cfg.output = std::env::current_dir().map(|d| d.join(o)).unwrap_or_else(|_| o.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    TwoSided,
    Less,
    Greater,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Tail {
        match t {
            TailArg::TwoSided => Tail::TwoSided,
            TailArg::Less => Tail::Less,
            TailArg::Greater => Tail::Greater,
        }
    }
}

fn parse_format(s: &str) -> std::result::Result<RatingFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn skew(exponent: f64) -> Skew {
    if exponent > 0.0 {
        Skew::PowerLaw { exponent }
    } else {
        Skew::Uniform
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(path)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let json = cli.format == Format::Json;
    match cli.command {
        Command::Run { config, overrides } => {
            let (cfg, base) = load_config(&config, &overrides)?;
            let outcome = harness::run(&cfg, &base)?;
            if json {
                return print_json(&outcome.manifest);
            }
            println!("fold\tmethod\tk\ttau\tmae\tprivacy_risk\tvulnerable\tcoverage");
            for c in &outcome.cells {
                let r = &c.report;
                let opt = |x: Option<f64>| fmt_num(x.unwrap_or(f64::NAN));
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.fold,
                    r.method,
                    r.k,
                    fmt_num(r.tau),
                    opt(r.mean_mae()),
                    opt(r.mean_privacy_risk()),
                    fmt_num(r.vulnerable_fraction),
                    fmt_num(r.coverage)
                );
            }
            for f in &outcome.manifest.failures {
                eprintln!("failed: fold {} {} k {}: {}", f.fold, f.method, f.k, f.error);
            }
            println!("results in {}", base.join(&cfg.output).display());
            Ok(())
        }
        Command::Compare {
            run,
            a,
            b,
            metric,
            k,
            tail,
            alpha,
        } => {
            let manifest = RunManifest::load(&run)?;
            let results = ResultSet::load(&run, manifest.dataset.items)?;
            let metric: Metric = metric.parse()?;
            let ks = match k {
                Some(k) => vec![k],
                None => manifest.config.k.clone(),
            };
            let comparisons = ks
                .iter()
                .map(|&k| harness::compare(&results, &a, &b, metric, k, tail.into(), alpha))
                .collect::<Result<Vec<_>>>()?;
            if json {
                return print_json(&comparisons);
            }
            for c in &comparisons {
                match (&c.result, c.fraction_significant) {
                    (Some(r), _) => println!(
                        "{} vs {} on {} k={}: statistic {} p {} -> {}",
                        c.a,
                        c.b,
                        c.metric,
                        c.k,
                        fmt_num(r.statistic),
                        fmt_num(r.p_value),
                        if r.significant { "significant" } else { "not significant" }
                    ),
                    (None, frac) => println!(
                        "{} vs {} on {} k={}: significant at {} of {} query counts ({})",
                        c.a,
                        c.b,
                        c.metric,
                        c.k,
                        c.per_q.iter().filter(|v| v.result.significant).count(),
                        c.per_q.len(),
                        fmt_num(frac.unwrap_or(f64::NAN))
                    ),
                }
            }
            Ok(())
        }
        Command::Describe { input } => {
            let stats = describe(&input.load()?)?;
            if json {
                return print_json(&stats);
            }
            println!("users\t{}", stats.users);
            println!("items\t{}", stats.items);
            println!("ratings\t{}", stats.ratings);
            println!("ratings_per_user\t{}", fmt_num(stats.ratings_per_user));
            println!("users_per_item\t{}", fmt_num(stats.users_per_item));
            println!("density\t{}", fmt_num(stats.density));
            println!("top_profile_share\t{}", fmt_num(stats.top_profile_share));
            println!("top_profile_mean_share\t{}", fmt_num(stats.top_profile_mean_share));
            Ok(())
        }
        Command::Synth {
            users,
            items,
            density,
            scale,
            popularity,
            activity,
            seed,
            output,
            file_format,
        } => {
            let spec = SynthSpec {
                users,
                items,
                density,
                scale: scale.parse()?,
                skew: skew(popularity),
                activity: skew(activity),
                seed,
            };
            let table = synth_dataset(&spec)?;
            write_ratings(&table, &output, file_format)?;
            if json {
                return print_json(&describe(&table)?);
            }
            println!("wrote {} ratings to {}", table.len(), output.display());
            Ok(())
        }
        Command::EstimateTau {
            ledger,
            config,
            overrides,
        } => estimate(ledger, config, &overrides, json),
        Command::TrainEmbeddings {
            input,
            output,
            seed,
            epochs,
            evaluate,
        } => {
            let table = input.load()?;
            let mut cfg = TrainConfig {
                seed,
                ..Default::default()
            };
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            let mut rounds = Vec::new();
            if evaluate {
                for split in embedding_eval_splits(&table, seed)? {
                    let model = embeddings::train(&split.train, &cfg)?;
                    rounds.push(serde_json::json!({
                        "round": split.round,
                        "validation_mae": model.mae(split.validation.ratings()),
                        "test_mae": model.mae(split.test.ratings()),
                    }));
                }
            }
            let (model, report) = embeddings::train_with_report(&table, &cfg)?;
            save_model(&output, &model, table.catalog())?;
            let summary = serde_json::json!({
                "output": output,
                "epochs_run": report.epoch_mae.len(),
                "best_epoch": report.best_epoch,
                "train_mae": report.accepted_mae.last(),
                "stopped_early": report.stopped_early,
                "evaluation": rounds,
            });
            if json {
                return print_json(&summary);
            }
            println!(
                "trained {} epochs (best {}), train MAE {}",
                report.epoch_mae.len(),
                report.best_epoch,
                fmt_num(model.mae(table.ratings()))
            );
            for r in &rounds {
                println!(
                    "round {}: validation MAE {} test MAE {}",
                    r["round"],
                    fmt_num(r["validation_mae"].as_f64().unwrap_or(f64::NAN)),
                    fmt_num(r["test_mae"].as_f64().unwrap_or(f64::NAN))
                );
            }
            println!("model saved to {}", output.display());
            Ok(())
        }
    }
}

fn estimate(ledger: Option<PathBuf>, config: Option<PathBuf>, overrides: &Overrides, json: bool) -> Result<()> {
    if let Some(path) = ledger {
        let file = std::fs::File::open(&path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let mut reader = csv::Reader::from_reader(file);
        let col = reader
            .headers()?
            .iter()
            .position(|h| h == "data_usage")
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no data_usage column", path.display())))?;
        let mut usages = Vec::new();
        for (n, rec) in reader.records().enumerate() {
            let rec = rec?;
            let v = rec.get(col).unwrap_or("");
            usages.push(v.parse::<u64>().map_err(|_| Error::Parse {
                path: path.clone(),
                line: n + 2,
                message: format!("bad usage {v:?}"),
            })?);
        }
        let tau = estimate_tau(&usages)?;
        if json {
            return print_json(&serde_json::json!({ "tau": tau }));
        }
        println!("{}", fmt_num(tau));
        return Ok(());
    }
    let path = config.ok_or_else(|| Error::InvalidArgument("give --ledger or --config".into()))?;
    let (cfg, base) = load_config(&path, overrides)?;
    let (_, splits) = harness::prepare(&cfg, &base)?;
    let mut rows = Vec::new();
    for split in splits.into_iter().filter(|s| cfg.folds.contains(&s.fold)) {
        let ctx = harness::FoldContext::new(split, cfg.seed, None)?;
        for &k in &cfg.k {
            let key = harness::CellKey {
                fold: ctx.fold,
                method: Method::new(Strategy::UserKnn, DpMode::None),
                k,
            };
            let out = harness::run_cell(&ctx, key, f64::INFINITY, cfg.seed)?;
            rows.push((ctx.fold, k, estimate_tau(out.ledger.usages())?));
        }
    }
    if json {
        let v: Vec<_> = rows
            .iter()
            .map(|&(fold, k, tau)| serde_json::json!({ "fold": fold, "k": k, "tau": tau }))
            .collect();
        return print_json(&v);
    }
    println!("fold\tk\ttau");
    for (fold, k, tau) in rows {
        println!("{fold}\t{k}\t{}", fmt_num(tau));
    }
    Ok(())
}
