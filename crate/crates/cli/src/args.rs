use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reflow_shift::{ModelFamily, Target};

#[derive(Debug, Parser)]
#[command(name = "reflow-shift", version, about = "Predict component shift during reflow from inspection data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON settings file; flags take precedence over it.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for folds and trees.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset CSV and its schema sidecar.
    Generate {
        #[arg(long)]
        output: PathBuf,
    },
    /// Drop incomplete rows and outliers; write the cleaned CSV and a JSON report.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Defaults to `<output>.report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fit one model per target on a cleaned CSV.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Model file; with `--target all`, `<stem>.<target>.json` per target.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "rfr")]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "all")]
        target: TargetArg,
    },
    /// k-fold cross-validation; writes report.json, table1.txt and table2.txt.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        /// Output directory, created when missing.
        #[arg(long)]
        output: PathBuf,
        /// Repeatable; defaults to svr, nn and rfr.
        #[arg(long, value_enum)]
        model: Vec<ModelArg>,
        #[arg(long, value_enum, default_value = "all")]
        target: TargetArg,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Append a prediction column per model file to a feature CSV.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Model file; repeatable.
        #[arg(long = "models", required = true)]
        models: Vec<PathBuf>,
    },
    /// Ranked impurity importances of a forest model file.
    Importance {
        /// Forest model file.
        #[arg(long)]
        input: PathBuf,
        /// Also write the ranking as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Keep the k most important features instead of those above 1/p.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Print or write the dataset column schema.
    Schema {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Svr,
    Nn,
    Rfr,
    Mean,
}

impl ModelArg {
    pub fn family(self) -> ModelFamily {
        match self {
            ModelArg::Svr => ModelFamily::Svr,
            ModelArg::Nn => ModelFamily::Nn,
            ModelArg::Rfr => ModelFamily::Rfr,
            ModelArg::Mean => ModelFamily::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    #[value(name = "shift_x")]
    ShiftX,
    #[value(name = "shift_y")]
    ShiftY,
    #[value(name = "shift_rot")]
    ShiftRot,
    All,
}

impl TargetArg {
    pub fn targets(self) -> Vec<Target> {
        match self {
            TargetArg::ShiftX => vec![Target::ShiftX],
            TargetArg::ShiftY => vec![Target::ShiftY],
            TargetArg::ShiftRot => vec![Target::ShiftRot],
            TargetArg::All => Target::ALL.to_vec(),
        }
    }
}
