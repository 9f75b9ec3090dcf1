//! Command implementations and argument definitions for the `qparse` binary.
//!
//! Typical toy session:
//!
//! ```text
//! qparse gen-toy --out toy
//! qparse index --config toy/run.toml
//! qparse train --config toy/run.toml
//! qparse eval  --config toy/run.toml --dataset toy/test.jsonl
//! ```

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    ablation_table, cmd_ablation, cmd_eval, cmd_gen_toy, cmd_index, cmd_link, cmd_train,
    format_link, load_indices, load_kb, load_questions, load_store, mean_se, predict_links,
    sibling, toy_data, AblationCell, AblationRun, EvalOutput, IndexSummary, ToyData, ToyOptions,
    TrainSummary, ENTITY_INDEX_FILE, RELATION_INDEX_FILE,
};
pub use config::{RunArgs, RunConfig};

use crate::eval::write_breakdown;
use crate::linker::write_link_results;
use crate::mdp::Action;
use crate::policy::Architecture;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "qparse", version, about = "Shallow parsing and linking of questions")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the entity and relation trigram indices.
    Index,
    /// Generate a toy corpus, knowledge base and embeddings.
    GenToy {
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "toy-seed", default_value_t = 7)]
        toy_seed: u64,
        #[arg(long, default_value_t = 10)]
        entities: usize,
        #[arg(long, default_value_t = 6)]
        relations: usize,
        #[arg(long, default_value_t = 80)]
        train: usize,
        #[arg(long, default_value_t = 20)]
        test: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
    },
    /// Train a policy.
    Train,
    /// Label, link and score a dataset.
    Eval {
        /// Write the report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write one JSON line per question with paired ranks.
        #[arg(long)]
        breakdown: Option<PathBuf>,
        /// Write the link results as JSON lines.
        #[arg(long)]
        links: Option<PathBuf>,
    },
    /// Label and link one question.
    Link {
        question: String,
        /// Comma-separated labels (0 none, 1 relation, 2 entity) instead of the policy.
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<usize>>,
    },
    /// Grid over state size and architecture, several seeds per cell.
    Ablation {
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        h_values: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "linear-relu,recurrent,bi-recurrent")]
        archs: Vec<Architecture>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
    },
}

/// Runs a parsed command line, printing results to stdout.
pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.run.resolve()?;
    match cli.command {
        Command::GenToy {
            out,
            toy_seed,
            entities,
            relations,
            train,
            test,
            dim,
        } => {
            let opts = ToyOptions {
                seed: toy_seed,
                entities,
                relations,
                train,
                test,
                dim,
            };
            cmd_gen_toy(&opts, &out)?;
            println!("wrote toy corpus to {} (config: {})", out.display(), out.join("run.toml").display());
        }
        Command::Index => {
            let s = cmd_index(&cfg)?;
            println!("entities:  {:>6}  {}", s.entities, s.entity_path.display());
            println!("relations: {:>6}  {}", s.relations, s.relation_path.display());
        }
        Command::Train => {
            let s = cmd_train(&cfg)?;
            println!(
                "trained {} epochs; best epoch reward {:.4}; policy {}, best {}, log {}",
                s.epochs,
                s.best_reward,
                s.policy_path.display(),
                s.best_path.display(),
                s.log_path.display()
            );
        }
        Command::Eval {
            report,
            breakdown,
            links,
        } => {
            let out = cmd_eval(&cfg)?;
            let json = out.report.to_json();
            println!("{json}");
            print!("{}", out.report.to_table());
            if let Some(p) = report {
                std::fs::write(&p, json + "\n").map_err(|e| Error::io(&p, e))?;
            }
            if let Some(p) = breakdown {
                write_breakdown(p, &out.breakdown)?;
            }
            if let Some(p) = links {
                write_link_results(p, &out.results)?;
            }
        }
        Command::Link { question, labels } => {
            let labels = labels
                .map(|ls| {
                    ls.into_iter()
                        .map(|i| {
                            Action::from_index(i)
                                .ok_or_else(|| Error::InvalidConfig(format!("label {i} is not 0, 1 or 2")))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?;
            let res = cmd_link(&cfg, &question, labels.as_deref())?;
            print!("{}", format_link(&res));
        }
        Command::Ablation {
            h_values,
            archs,
            seeds,
        } => {
            let cells = cmd_ablation(&cfg, &h_values, &archs, &seeds)?;
            print!("{}", ablation_table(&cells, cfg.k));
        }
    }
    Ok(())
}
