use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scorecard_core::config::{default_config_toml, RunConfig};
use scorecard_core::data::write_csv;
use scorecard_core::io::write_text;
use scorecard_core::pipeline::{ExplainKind, Run, RESOLVED_CONFIG};
use scorecard_core::synth::{self, SynthConfig};
use scorecard_core::{Error, ModelKind, Result};

/// Train, compare and explain credit default models.
#[derive(Parser, Debug)]
#[command(name = "scorecard", version, about)]
struct Cli {
    /// TOML run configuration. Later stages default to the configuration
    /// saved in the run directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory; overrides `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output; repeat for debug detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic credit dataset with known informative features.
    Synth(SynthArgs),
    /// Partition the data into train/test/out-of-sample/out-of-time.
    Split {
        /// Input CSV; defaults to `data.path` from the configuration.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Staged variable preselection on the train split.
    Select,
    /// Tune, fit and evaluate one family (or `all` configured families).
    Train {
        #[arg(long, default_value = "all")]
        family: String,
        /// Comma-separated feature list instead of the selection output.
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
    },
    /// Score a CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV of `row,score`.
        #[arg(long)]
        output: PathBuf,
    },
    /// Permutation importance, partial dependence, ceteris paribus and
    /// break-down explanations for trained families.
    Explain {
        #[arg(long, default_value = "all")]
        family: String,
        /// pfi, pdp, cp, bd or all; comma-separated.
        #[arg(long, default_value = "all", value_delimiter = ',')]
        what: Vec<String>,
        /// Test-split rows explained by cp and bd.
        #[arg(long = "instance", value_delimiter = ',')]
        instances: Option<Vec<usize>>,
        /// Features profiled by pdp and cp.
        #[arg(long = "feature", value_delimiter = ',')]
        features: Option<Vec<String>>,
    },
    /// Comparison table and dot-plot data over all trained families.
    Report,
    /// Every stage in order.
    Run {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Print the default configuration.
    Config,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    informative: Option<usize>,
    #[arg(long)]
    noise: Option<usize>,
    #[arg(long)]
    constant: Option<usize>,
    /// Signal weakening after the drift date, in [0, 1].
    #[arg(long)]
    drift: Option<f64>,
}

fn load_config(cli: &Cli, stage_reads_run_dir: bool) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let saved = cli.out.as_ref().map(|o| o.join(RESOLVED_CONFIG));
            match saved.filter(|p| stage_reads_run_dir && p.exists()) {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            }
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.split.seed = seed;
        cfg.synth.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn families(spec: &str, cfg: &RunConfig) -> Result<Vec<ModelKind>> {
    if spec == "all" {
        Ok(cfg.models.families.clone())
    } else {
        spec.split(',').map(str::parse).collect()
    }
}

fn data_path(arg: &Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    arg.clone()
        .or_else(|| cfg.data.path.clone())
        .ok_or_else(|| Error::Config("no input data: pass --data or set data.path".into()))
}

fn write_scores(path: &Path, scores: &[f64]) -> Result<()> {
    let mut text = String::from("row,score\n");
    for (i, s) in scores.iter().enumerate() {
        text.push_str(&format!("{i},{s}\n"));
    }
    write_text(path, &text)
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Config => {
            print!("{}", default_config_toml());
        }
        Command::Synth(a) => {
            let cfg = load_config(cli, false)?;
            let s = SynthConfig {
                n_rows: a.rows.unwrap_or(cfg.synth.n_rows),
                n_informative: a.informative.unwrap_or(cfg.synth.n_informative),
                n_noise: a.noise.unwrap_or(cfg.synth.n_noise),
                n_constant: a.constant.unwrap_or(cfg.synth.n_constant),
                drift: a.drift.unwrap_or(cfg.synth.drift),
                ..cfg.synth.clone()
            };
            let d = synth::generate(&s)?;
            if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let schema = &cfg.data.schema;
            let date = schema.date_column.as_deref().unwrap_or("obs_date");
            write_csv(&d, &a.output, &schema.target, date, &cfg.data.missing_token)?;
            log::info!("wrote {} rows to {}", d.n_rows(), a.output.display());
        }
        Command::Split { data } => {
            let cfg = load_config(cli, false)?;
            let path = data_path(data, &cfg)?;
            let run = Run::new(cfg.clone(), &cfg.output_dir);
            run.split(&path)?;
        }
        Command::Select => {
            let cfg = load_config(cli, true)?;
            Run::new(cfg.clone(), &cfg.output_dir).select()?;
        }
        Command::Train { family, features } => {
            let cfg = load_config(cli, true)?;
            let run = Run::new(cfg.clone(), &cfg.output_dir);
            for kind in families(family, &cfg)? {
                let out = run.train(kind, features.as_deref())?;
                log::info!(
                    "{}: test gini {:?}, out-of-time gini {:?}",
                    out.report.model_name,
                    out.report.gini("test"),
                    out.report.gini("out_of_time")
                );
            }
        }
        Command::Predict { model, data, output } => {
            let cfg = load_config(cli, true)?;
            let scores = Run::new(cfg.clone(), &cfg.output_dir).predict(model, data)?;
            write_scores(output, &scores)?;
        }
        Command::Explain {
            family,
            what,
            instances,
            features,
        } => {
            let mut cfg = load_config(cli, true)?;
            if let Some(i) = instances {
                cfg.explain.instances = i.clone();
            }
            if let Some(f) = features {
                cfg.explain.features = f.clone();
            }
            let what: Vec<ExplainKind> = if what.iter().any(|w| w == "all") {
                ExplainKind::ALL.to_vec()
            } else {
                what.iter().map(|w| w.parse()).collect::<Result<_>>()?
            };
            let run = Run::new(cfg.clone(), &cfg.output_dir);
            for kind in families(family, &cfg)? {
                run.explain(kind, &what)?;
            }
        }
        Command::Report => {
            let cfg = load_config(cli, true)?;
            let reports = Run::new(cfg.clone(), &cfg.output_dir).report()?;
            log::info!("reported {} models", reports.len());
        }
        Command::Run { data } => {
            let cfg = load_config(cli, false)?;
            let path = data_path(data, &cfg)?;
            Run::new(cfg.clone(), &cfg.output_dir).run_all(&path)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: InvalidParameter: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(if e.is_contract() { 2 } else { 1 })
        }
    }
}
