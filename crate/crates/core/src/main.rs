use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lexphylo::distance::Mode;
use lexphylo::pipeline::{self, RunConfig};
use lexphylo::synthgen::PlantedSpec;
use lexphylo::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lexphylo",
    version,
    about = "Language phylogeny from lexical choice in labeled text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts and manifests.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    dominance_threshold: Option<f64>,
    #[arg(long)]
    logodds_threshold: Option<f64>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    min_support: Option<u64>,
    #[arg(long)]
    flat_threshold: Option<f64>,
    /// combined or frequency_only
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single-worker embedding training.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    n_random: Option<usize>,
    /// Use this many random corpus words instead of the focus set.
    #[arg(long)]
    random_focus: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        self.apply(&mut c);
        Ok(c)
    }

    fn apply(&self, c: &mut RunConfig) {
        if let Some(x) = self.dominance_threshold {
            c.dominance_threshold = x;
        }
        if let Some(x) = self.logodds_threshold {
            c.logodds_threshold = x;
        }
        if let Some(x) = self.alpha0 {
            c.alpha0 = x;
        }
        if let Some(x) = self.min_support {
            c.min_support = x;
        }
        if let Some(x) = self.flat_threshold {
            c.flat_threshold = x;
        }
        if let Some(x) = self.mode {
            c.mode = x;
        }
        if let Some(x) = self.seed {
            c.seed = x;
        }
        if self.deterministic {
            c.deterministic = true;
        }
        if let Some(x) = self.n_random {
            c.n_random = x;
        }
        if self.random_focus.is_some() {
            c.random_focus = self.random_focus;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Clean the corpus.
    Ingest(Common),
    /// Select the focus synonym sets.
    FocusSet(Common),
    /// Train situated embeddings.
    Embed(Common),
    /// Compute the label distance matrix.
    Distance(Common),
    /// Ward tree and flat clusters.
    Cluster(Common),
    /// Normalized distance from a gold tree.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Rank focus synsets by divergence between two labels.
    Diverge {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 2, value_names = ["LABEL_I", "LABEL_J"])]
        labels: Option<Vec<String>>,
    },
    /// Write a synthetic dataset with a planted phylogeny.
    Synth {
        /// Planted spec (TOML); the bundled one when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "synthetic")]
        out: PathBuf,
        /// Print the bundled spec and exit.
        #[arg(long)]
        print_spec: bool,
    },
    /// Run every stage.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Generate a dataset from this planted spec into OUT/data first.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Generate from the bundled planted spec into OUT/data first.
        #[arg(long, conflicts_with = "spec")]
        synthetic: bool,
    },
}

fn load_spec(path: Option<&Path>) -> Result<PlantedSpec> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Validation(format!("{}: {e}", p.display())))?;
            PlantedSpec::from_toml(&text)
        }
        None => Ok(PlantedSpec::bundled()),
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(c) => print_json(&pipeline::ingest(&c.config()?, &c.out)?),
        Command::FocusSet(c) => {
            let fs = pipeline::focus_set(&c.config()?, &c.out)?;
            print_json(&serde_json::json!({"synsets": fs.len(), "words": fs.words.len()}))
        }
        Command::Embed(c) => {
            let m = pipeline::embed(&c.config()?, &c.out)?;
            print_json(&serde_json::json!({"vocab": m.vocab().len(), "dim": m.dim()}))
        }
        Command::Distance(c) => {
            let m = pipeline::distance(&c.config()?, &c.out)?;
            print_json(&serde_json::json!({"labels": m.labels()}))
        }
        Command::Cluster(c) => {
            let t = pipeline::cluster(&c.config()?, &c.out)?;
            println!("{}", lexphylo::phylo::to_newick(&t));
            Ok(())
        }
        Command::Evaluate { common, tree, gold } => {
            let ev = pipeline::evaluate(
                &common.config()?,
                &common.out,
                tree.as_deref(),
                gold.as_deref(),
            )?;
            print_json(&ev)
        }
        Command::Diverge { common, labels } => {
            let mut cfg = common.config()?;
            if let Some(l) = labels {
                cfg.divergence_labels = Some([l[0].clone(), l[1].clone()]);
            }
            let r = pipeline::diverge(&cfg, &common.out)?;
            print_json(
                &serde_json::json!({"label_i": r.label_i, "label_j": r.label_j, "rows": r.rows.len()}),
            )
        }
        Command::Synth {
            spec,
            out,
            print_spec,
        } => {
            if print_spec {
                print!("{}", lexphylo::synthgen::BUNDLED_SPEC);
                return Ok(());
            }
            pipeline::synth(&load_spec(spec.as_deref())?, &out)?;
            print_json(&serde_json::json!({"dataset": out}))
        }
        Command::Pipeline {
            common,
            spec,
            synthetic,
        } => {
            let mut cfg = common.config()?;
            if synthetic || spec.is_some() {
                let data = common.out.join("data");
                let generated = pipeline::synth(&load_spec(spec.as_deref())?, &data)?;
                cfg.paths = generated.paths;
            }
            print_json(&pipeline::run_pipeline(&cfg, &common.out)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({"error": e.kind(), "message": e.to_string()});
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
