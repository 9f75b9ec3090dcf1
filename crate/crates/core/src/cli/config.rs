use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::corpus::OovPolicy;
use crate::linker::{CaseMode, LinkConfig};
use crate::mdp::EnvConfig;
use crate::policy::{Architecture, BaselineKind, TrainConfig};
use crate::{Error, Result};

/// Everything a command needs. Read from a TOML file, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Question file (JSONL) the command trains or evaluates on.
    pub dataset: Option<PathBuf>,
    /// Held-out questions for `ablation`.
    pub eval_dataset: Option<PathBuf>,
    /// Directory with `entities.tsv`, `relations.tsv` and `edges.tsv`.
    pub kg: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Directory holding `entity.idx` and `relation.idx`.
    pub index: Option<PathBuf>,
    pub policy: Option<PathBuf>,
    pub h: usize,
    pub arch: Architecture,
    pub hidden: usize,
    pub gamma: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_episodes: usize,
    pub entropy_bonus: f64,
    /// Moving-average baseline momentum; 0 disables the baseline.
    pub baseline_momentum: f64,
    pub max_grad_norm: f64,
    pub k: usize,
    pub retrieve_depth: usize,
    pub case_mode: CaseMode,
    pub combine_weight: f64,
    /// Hash-bucket count for unknown words; 0 maps them to the zero vector.
    pub oov_buckets: u32,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RunConfig {
            dataset: None,
            eval_dataset: None,
            kg: None,
            embeddings: None,
            index: None,
            policy: None,
            h: 1,
            arch: Architecture::Recurrent,
            hidden: 32,
            gamma: 1.0,
            lr: t.lr,
            epochs: t.epochs,
            batch_episodes: t.batch_episodes,
            entropy_bonus: t.entropy_bonus,
            baseline_momentum: 0.9,
            max_grad_norm: 5.0,
            k: 5,
            retrieve_depth: LinkConfig::default().retrieve_depth,
            case_mode: CaseMode::Preserve,
            combine_weight: 0.5,
            oov_buckets: 0,
            seed: 7,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads a TOML file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut c.dataset,
            &mut c.eval_dataset,
            &mut c.kg,
            &mut c.embeddings,
            &mut c.index,
            &mut c.policy,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn env(&self) -> Result<EnvConfig> {
        EnvConfig::new(self.h, self.gamma, self.combine_weight, self.case_mode.folds())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_episodes: self.batch_episodes,
            baseline: if self.baseline_momentum > 0.0 {
                BaselineKind::MovingAverage {
                    momentum: self.baseline_momentum,
                }
            } else {
                BaselineKind::None
            },
            entropy_bonus: self.entropy_bonus,
            max_grad_norm: (self.max_grad_norm > 0.0).then_some(self.max_grad_norm),
        }
    }

    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            case_mode: self.case_mode,
            combine_weight: self.combine_weight,
            retrieve_depth: self.retrieve_depth,
        }
    }

    pub fn oov(&self) -> OovPolicy {
        match self.oov_buckets {
            0 => OovPolicy::ZeroVector,
            n => OovPolicy::HashBucket(n),
        }
    }

    /// The configured path for `what`, which must exist.
    pub fn require<'a>(&self, path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
        let p = path
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig(format!("no {what} path configured")))?;
        if !p.exists() {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("{what} not found")),
            ));
        }
        Ok(p)
    }

    /// The configured output path for `what`; it need not exist yet.
    pub fn output<'a>(&self, path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::InvalidConfig(format!("no {what} path configured")))
    }
}

/// Command-line overrides for [`RunConfig`].
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with run settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    pub eval_dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    pub kg: Option<PathBuf>,
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    pub index: Option<PathBuf>,
    #[arg(long, global = true)]
    pub policy: Option<PathBuf>,
    #[arg(long, global = true)]
    pub h: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub arch: Option<Architecture>,
    #[arg(long, global = true)]
    pub hidden: Option<usize>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub batch_episodes: Option<usize>,
    #[arg(long, global = true)]
    pub entropy_bonus: Option<f64>,
    #[arg(long, global = true)]
    pub baseline_momentum: Option<f64>,
    #[arg(long, global = true)]
    pub max_grad_norm: Option<f64>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub retrieve_depth: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub case_mode: Option<CaseMode>,
    #[arg(long, global = true)]
    pub combine_weight: Option<f64>,
    #[arg(long, global = true)]
    pub oov_buckets: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl RunArgs {
    /// Loads `--config` (or the defaults) and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$f = v.clone().into();
                }
            )*};
        }
        over!(dataset, eval_dataset, kg, embeddings, index, policy);
        over!(h, arch, hidden, gamma, lr, epochs, batch_episodes, entropy_bonus);
        over!(baseline_momentum, max_grad_norm, k, retrieve_depth, case_mode);
        over!(combine_weight, oov_buckets, seed);
        Ok(c)
    }
}
