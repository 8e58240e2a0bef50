mod args;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crowdsense_core::ingest::FieldMap;
use crowdsense_core::pipeline::{PipelineConfig, Result};

use args::ConfigArgs;
use stages::{AllPaths, ScenarioSource};

#[derive(Parser)]
#[command(
    name = "crowdsense",
    version,
    about = "Rank anomalous days in urban crowd dynamics from geo-located posts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(clap::Args)]
struct Fields {
    /// Timestamp column or key in the input posts
    #[arg(long, default_value = "timestamp")]
    ts_field: String,
    #[arg(long, default_value = "lat")]
    lat_field: String,
    #[arg(long, default_value = "lon")]
    lon_field: String,
    #[arg(long, default_value = "id")]
    id_field: String,
}

impl Fields {
    fn map(&self) -> FieldMap {
        FieldMap {
            timestamp: self.ts_field.clone(),
            lat: self.lat_field.clone(),
            lon: self.lon_field.clone(),
            id: Some(self.id_field.clone()),
        }
    }
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Built-in scenario: nyc-like or new-york-calendar
    #[arg(long, default_value = "nyc-like", conflicts_with = "scenario")]
    preset: String,
    /// Scenario file (JSON)
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl ScenarioArgs {
    fn source(&self) -> ScenarioSource {
        match &self.scenario {
            Some(p) => ScenarioSource::File(p.clone()),
            None => ScenarioSource::Preset(self.preset.clone()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic post stream with labelled anomaly days
    Synth {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Posts output (.csv or .jsonl)
        #[arg(long, default_value = "posts.csv")]
        out: PathBuf,
        /// Ground-truth special days output
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Parse posts and keep those inside the region and period
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "posts.clean.csv")]
        out: PathBuf,
        #[command(flatten)]
        fields: Fields,
    },
    /// Select the representative points of every slot
    Represent {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "representatives.csv")]
        out: PathBuf,
        #[command(flatten)]
        fields: Fields,
    },
    /// Map representatives onto grid-cell symbols
    Symbolize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "symbols.csv")]
        out: PathBuf,
    },
    /// Entropy traces of the symbol streams
    Entropy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "traces.csv")]
        out: PathBuf,
    },
    /// Score and rank days from entropy traces
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "ranking.json")]
        out: PathBuf,
        /// Special days used to flag ranking entries
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Detection and false-positive curves of a ranking
    Evaluate {
        #[arg(long)]
        ranking: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "curves.csv")]
        out: PathBuf,
    },
    /// Sweep slot length, grid size, window and estimator
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "sweep")]
        out_dir: PathBuf,
        #[command(flatten)]
        fields: Fields,
    },
    /// Run every stage; synthesizes posts when no input is given
    All {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "run")]
        out_dir: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        fields: Fields,
    },
}

fn resolve(cli_cfg: &ConfigArgs, input: &Path) -> Result<PipelineConfig> {
    cli_cfg.resolve(Some(input))
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.config;
    match &cli.command {
        Command::Synth {
            scenario,
            out,
            labels,
        } => {
            let sc = stages::load_scenario(&scenario.source(), c.seed)?;
            let labels = labels
                .clone()
                .unwrap_or_else(|| out.with_file_name("specials.csv"));
            stages::synth(&sc, out, &labels)
        }
        Command::Ingest { input, out, fields } => {
            stages::ingest(input, out, &fields.map(), &resolve(c, input)?)
        }
        Command::Represent { input, out, fields } => {
            stages::represent(input, out, &fields.map(), &resolve(c, input)?)
        }
        Command::Symbolize { input, out } => stages::symbolize(input, out, &resolve(c, input)?),
        Command::Entropy { input, out } => stages::entropy(input, out, &resolve(c, input)?),
        Command::Detect { input, out, labels } => {
            stages::detect(input, out, labels.as_deref(), &resolve(c, input)?)
        }
        Command::Evaluate {
            ranking,
            labels,
            out,
        } => stages::evaluate(ranking, labels, out, &resolve(c, ranking)?),
        Command::Sweep {
            input,
            labels,
            out_dir,
            fields,
        } => stages::sweep(input, labels, out_dir, &fields.map(), &resolve(c, input)?),
        Command::All {
            input,
            labels,
            out_dir,
            scenario,
            fields,
        } => {
            let cfg = c.resolve(input.as_deref())?;
            let paths = match input {
                Some(posts) => AllPaths {
                    posts: posts.clone(),
                    labels: labels.clone(),
                },
                None => {
                    let sc = stages::load_scenario(&scenario.source(), c.seed)?;
                    let posts = out_dir.join("posts.csv");
                    let generated = out_dir.join("specials.csv");
                    stages::synth(&sc, &posts, &generated)?;
                    AllPaths {
                        posts,
                        labels: Some(labels.clone().unwrap_or(generated)),
                    }
                }
            };
            stages::all(paths, out_dir, &fields.map(), &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
