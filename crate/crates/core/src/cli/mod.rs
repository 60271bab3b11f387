//! Command-line surface: `biodisamb [--config FILE] [--set KEY=VALUE]... COMMAND`.
//!
//! Every command resolves the configuration (defaults, then the file, then
//! `--set` overrides), prints its hash, and reads or writes files under
//! `paths.work_dir`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    cmd_build_corpus, cmd_evaluate, cmd_gradcheck, cmd_predict, cmd_split, cmd_synthesize, cmd_train, save_config,
    write_atomic, TrainSummary,
};
pub use config::{ModelConfig, PathsConfig, RunConfig, SplitConfig};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "biodisamb", version, about = "Bioconcept type disambiguation of ambiguous mentions")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    /// Override one config value, e.g. `--set train.epochs=3`. Repeatable;
    /// applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Print the resolved configuration as TOML.
    Config,
    /// Write the generated corpus to paths.documents and paths.records.
    Synthesize,
    /// Join records with tagger spans and keep the ambiguous mentions.
    BuildCorpus,
    /// Split the labeled corpus into train and test.
    Split,
    /// Train the configured model on the train split.
    Train,
    /// Predict types for the test split.
    Predict,
    /// Score predictions against the gold test split.
    Evaluate,
    /// Check every layer's gradients against finite differences.
    Gradcheck,
    /// build-corpus, split, train, predict and evaluate in sequence.
    Run,
}

/// Executes one command and prints its summary to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let config = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if cli.command == Command::Config {
        print!("{}", config.to_toml()?);
        return Ok(());
    }
    println!("config hash: {}", config.hash()?);
    save_config(&config)?;
    match cli.command {
        Command::Config => unreachable!("handled above"),
        Command::Synthesize => {
            let n = cmd_synthesize(&config)?;
            println!("{n} documents written");
        }
        Command::BuildCorpus => print!("{}", cmd_build_corpus(&config)?.render_table()),
        Command::Split => {
            let s = cmd_split(&config)?;
            println!("{} split: {} train, {} test", s.strategy, s.train.len(), s.test.len());
        }
        Command::Train => print_train(&cmd_train(&config)?),
        Command::Predict => println!("{} predictions", cmd_predict(&config)?.len()),
        Command::Evaluate => print!("{}", cmd_evaluate(&config)?.render_table()),
        Command::Gradcheck => {
            let checks = commands::gradient_table(&config);
            print!("{}", checks.0);
            checks.1?;
        }
        Command::Run => {
            print!("{}", cmd_build_corpus(&config)?.render_table());
            let s = cmd_split(&config)?;
            println!("{} split: {} train, {} test", s.strategy, s.train.len(), s.test.len());
            print_train(&cmd_train(&config)?);
            println!("{} predictions", cmd_predict(&config)?.len());
            print!("{}", cmd_evaluate(&config)?.render_table());
        }
    }
    Ok(())
}

fn print_train(summary: &TrainSummary) {
    println!(
        "trained {} on {} mentions ({} words, {} features)",
        summary.model, summary.train_mentions, summary.word_vocab, summary.feature_vocab
    );
    if let Some(h) = &summary.cnnlstm {
        for e in &h.epochs {
            let f1 = e.val_micro_f1.map_or("n/a".to_string(), |f| format!("{f:.4}"));
            println!("  epoch {:>2}: loss {:.6}, validation micro-F1 {f1}", e.epoch, e.train_loss);
        }
        if let Some(best) = h.best_epoch {
            println!("  kept epoch {best}{}", if h.stopped_early { " (stopped early)" } else { "" });
        }
    }
    if let Some(losses) = &summary.maxent_losses {
        if let Some(last) = losses.last() {
            println!("  final loss {last:.6} after {} epochs", losses.len());
        }
    }
}
