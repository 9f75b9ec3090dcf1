use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::PolicyParams;
use super::reinforce::{reinforce_update, Baseline, TrainConfig};
use super::rollout::{rollout, RolloutMode};
use crate::corpus::{EmbeddingStore, QAPair};
use crate::mdp::EnvConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean reward of the sampled episodes of this epoch.
    pub mean_reward: f64,
    /// Mean pre-clipping gradient norm over the epoch's updates.
    pub grad_norm: f64,
    pub mean_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    /// Parameters that produced the highest epoch mean reward (the initial
    /// parameters when no epoch ran).
    pub best: PolicyParams,
    pub best_reward: f64,
    pub log: Vec<EpochRecord>,
}

/// Runs `cfg.epochs` passes over `pairs`: each pass shuffles the questions,
/// samples one episode per question and updates after every
/// `cfg.batch_episodes` episodes. Fully determined by `seed`.
pub fn train(
    init: PolicyParams,
    pairs: &[QAPair],
    store: &EmbeddingStore,
    env: &EnvConfig,
    cfg: &TrainConfig,
    seed: u64,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("no training questions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = init;
    let mut best = params.clone();
    let mut best_reward = f64::NEG_INFINITY;
    let mut baseline = Baseline::default();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..pairs.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let epoch_start = params.clone();
        let (mut reward_sum, mut grad_sum, mut ent_sum, mut updates) = (0.0, 0.0, 0.0, 0usize);
        for chunk in order.chunks(cfg.batch_episodes) {
            let episodes = chunk
                .iter()
                .map(|&i| rollout(&params, &pairs[i], store, env, RolloutMode::Sample(&mut rng)))
                .collect::<Result<Vec<_>>>()?;
            reward_sum += episodes.iter().map(|e| e.reward).sum::<f64>();
            let (next, stats) = reinforce_update(&params, &episodes, cfg, &mut baseline)?;
            grad_sum += stats.grad_norm;
            ent_sum += stats.mean_entropy;
            updates += 1;
            params = next;
        }
        let rec = EpochRecord {
            epoch,
            mean_reward: reward_sum / pairs.len() as f64,
            grad_norm: grad_sum / updates as f64,
            mean_entropy: ent_sum / updates as f64,
        };
        if !rec.mean_reward.is_finite() || !rec.grad_norm.is_finite() {
            return Err(Error::Diverged(format!(
                "epoch {epoch}: mean reward {} grad norm {}",
                rec.mean_reward, rec.grad_norm
            )));
        }
        // the episodes of this epoch were sampled from the parameters it started with
        if rec.mean_reward > best_reward {
            best_reward = rec.mean_reward;
            best = epoch_start;
        }
        on_epoch(&rec);
        log.push(rec);
    }
    if log.is_empty() {
        best_reward = 0.0;
    }
    Ok(TrainOutcome {
        params,
        best,
        best_reward,
        log,
    })
}
