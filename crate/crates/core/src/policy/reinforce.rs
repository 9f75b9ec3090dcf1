use serde::{Deserialize, Serialize};

use super::network::PolicyParams;
use super::rollout::Episode;
use crate::{Error, Result};

/// Largest allowed gap between a stored log-probability and the one
/// recomputed under the parameters being updated.
const STALE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    None,
    MovingAverage { momentum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Episodes per parameter update.
    pub batch_episodes: usize,
    pub baseline: BaselineKind,
    pub entropy_bonus: f64,
    /// Rescale the batch gradient to at most this norm.
    pub max_grad_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.5,
            epochs: 150,
            batch_episodes: 8,
            baseline: BaselineKind::MovingAverage { momentum: 0.9 },
            entropy_bonus: 0.01,
            max_grad_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("learning rate {} must be finite and non-negative", self.lr));
        }
        if self.batch_episodes == 0 {
            return bad("batch_episodes must be at least 1".into());
        }
        if !(self.entropy_bonus.is_finite() && self.entropy_bonus >= 0.0) {
            return bad(format!("entropy bonus {} must be non-negative", self.entropy_bonus));
        }
        if let BaselineKind::MovingAverage { momentum } = self.baseline {
            if !(0.0..1.0).contains(&momentum) {
                return bad(format!("baseline momentum {momentum} outside [0, 1)"));
            }
        }
        if let Some(n) = self.max_grad_norm {
            if n.is_nan() || n <= 0.0 {
                return bad(format!("max_grad_norm {n} must be positive"));
            }
        }
        Ok(())
    }
}

/// Running reward baseline subtracted from returns.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Baseline {
    value: Option<f64>,
}

impl Baseline {
    pub fn value(&self) -> Option<f64> {
        self.value
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub mean_reward: f64,
    /// Norm of the batch gradient before clipping.
    pub grad_norm: f64,
    pub mean_entropy: f64,
    pub baseline: f64,
}

/// One gradient-ascent step on
/// `mean_i sum_t (G_t - b) log pi(a_t|s_t) + beta * H(pi(.|s_t))`.
///
/// Episodes must have been produced by `params`; their stored
/// log-probabilities are recomputed and compared.
pub fn reinforce_update(
    params: &PolicyParams,
    episodes: &[Episode],
    cfg: &TrainConfig,
    baseline: &mut Baseline,
) -> Result<(PolicyParams, UpdateStats)> {
    cfg.validate()?;
    if episodes.is_empty() {
        return Err(Error::NoEpisodes);
    }
    let m = episodes.len() as f64;
    let mean_reward = episodes.iter().map(|e| e.reward).sum::<f64>() / m;
    let b = match cfg.baseline {
        BaselineKind::None => 0.0,
        BaselineKind::MovingAverage { .. } => *baseline.value.get_or_insert(mean_reward),
    };

    let mut grad = vec![0.0; params.num_params()];
    let mut entropy = 0.0;
    let mut steps = 0usize;
    for (index, ep) in episodes.iter().enumerate() {
        let weights: Vec<f64> = ep.returns.iter().map(|g| g - b).collect();
        let (_, g, dists) =
            params.episode_gradient(&ep.states, &ep.actions, &weights, cfg.entropy_bonus)?;
        for ((d, a), stored) in dists.iter().zip(&ep.actions).zip(&ep.log_probs) {
            let recomputed = d.log_prob(*a);
            if (recomputed - stored).abs() > STALE_TOLERANCE {
                return Err(Error::StaleEpisode {
                    index,
                    stored: *stored,
                    recomputed,
                });
            }
            entropy += d.entropy();
        }
        steps += dists.len();
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi / m;
        }
    }

    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let mut scale = cfg.lr;
    if let Some(max) = cfg.max_grad_norm {
        if grad_norm > max {
            scale *= max / grad_norm;
        }
    }
    let next = params.stepped(&grad, scale);

    if let BaselineKind::MovingAverage { momentum } = cfg.baseline {
        baseline.value = Some(momentum * b + (1.0 - momentum) * mean_reward);
    }
    Ok((
        next,
        UpdateStats {
            mean_reward,
            grad_norm,
            mean_entropy: entropy / steps.max(1) as f64,
            baseline: b,
        },
    ))
}

/// Largest relative difference between the analytic gradient of
/// `sum_t log pi(a_t|s_t)` and central finite differences with step `eps`.
///
/// The relative error of each coordinate is
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`.
pub fn grad_check(params: &PolicyParams, episode: &Episode, eps: f64) -> Result<f64> {
    let ones = vec![1.0; episode.len()];
    let (_, analytic, _) = params.episode_gradient(&episode.states, &episode.actions, &ones, 0.0)?;
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (i, a) in analytic.iter().enumerate() {
        let orig = probe.weights[i];
        probe.weights[i] = orig + eps;
        let up = probe.episode_log_likelihood(&episode.states, &episode.actions)?;
        probe.weights[i] = orig - eps;
        let down = probe.episode_log_likelihood(&episode.states, &episode.actions)?;
        probe.weights[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let denom = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
