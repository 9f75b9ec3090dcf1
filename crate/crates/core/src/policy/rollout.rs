use rand::RngCore;

use super::network::{ActionDistribution, PolicyParams};
use crate::corpus::{EmbeddingStore, QAPair};
use crate::mdp::{discounted_returns, Action, EnvConfig, Environment, State, Step};
use crate::Result;

/// How actions are picked during a rollout.
pub enum RolloutMode<'r> {
    Sample(&'r mut dyn RngCore),
    Greedy,
}

/// One labeled pass over a question.
#[derive(Debug, Clone)]
pub struct Episode {
    pub qa_id: String,
    pub states: Vec<State>,
    pub actions: Vec<Action>,
    pub dists: Vec<ActionDistribution>,
    pub log_probs: Vec<f64>,
    pub reward: f64,
    pub returns: Vec<f64>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

fn sample(d: &ActionDistribution, rng: &mut dyn RngCore) -> Action {
    // 53 random bits -> uniform in [0, 1)
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut acc = 0.0;
    for a in Action::ALL {
        acc += d.prob(a);
        if u < acc {
            return a;
        }
    }
    // rounding left u above the cumulative sum: take the last positive action
    *Action::ALL.iter().rev().find(|a| d.prob(**a) > 0.0).unwrap()
}

pub fn rollout(
    params: &PolicyParams,
    qa: &QAPair,
    store: &EmbeddingStore,
    cfg: &EnvConfig,
    mut mode: RolloutMode<'_>,
) -> Result<Episode> {
    let env = Environment::new(qa, store, cfg);
    let n = qa.len();
    let mut ctx = params.new_context();
    let mut ep = Episode {
        qa_id: qa.id.clone(),
        states: Vec::with_capacity(n),
        actions: Vec::with_capacity(n),
        dists: Vec::with_capacity(n),
        log_probs: Vec::with_capacity(n),
        reward: 0.0,
        returns: Vec::new(),
    };
    let mut state = env.reset();
    loop {
        let dist = params.forward(&state, &mut ctx)?;
        let action = match &mut mode {
            RolloutMode::Greedy => dist.argmax(),
            RolloutMode::Sample(rng) => sample(&dist, *rng),
        };
        let next = env.step(&state, action)?;
        ep.log_probs.push(dist.log_prob(action));
        ep.dists.push(dist);
        ep.actions.push(action);
        ep.states.push(state);
        match next {
            Step::Next(s) => state = s,
            Step::Done => break,
        }
    }
    ep.reward = env.reward(&ep.actions)?;
    ep.returns = discounted_returns(ep.reward, n, cfg.gamma);
    Ok(ep)
}

/// Labels a question with the deterministic (argmax) policy.
pub fn greedy_actions(
    params: &PolicyParams,
    qa: &QAPair,
    store: &EmbeddingStore,
    cfg: &EnvConfig,
) -> Result<Vec<Action>> {
    Ok(rollout(params, qa, store, cfg, RolloutMode::Greedy)?.actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_toy_corpus, toy_embeddings};
    use crate::policy::{init_policy, Architecture};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rollouts_are_reproducible() {
        let (kb, pairs) = generate_toy_corpus(3, 6, 4, 5);
        let store = toy_embeddings(3, 6, &kb, &pairs).unwrap();
        let cfg = EnvConfig::new(1, 0.9, 0.5, false).unwrap();
        for arch in Architecture::ALL {
            let p = init_policy(arch, 1, 6, 5, 11).unwrap();
            for qa in &pairs {
                let g1 = rollout(&p, qa, &store, &cfg, RolloutMode::Greedy).unwrap();
                let g2 = rollout(&p, qa, &store, &cfg, RolloutMode::Greedy).unwrap();
                assert_eq!(g1.actions, g2.actions);
                assert_eq!(g1.len(), qa.len());
                assert_eq!(g1.returns.len(), qa.len());
                assert!((0.0..=1.0).contains(&g1.reward));

                let mut r1 = ChaCha8Rng::seed_from_u64(5);
                let mut r2 = ChaCha8Rng::seed_from_u64(5);
                let s1 = rollout(&p, qa, &store, &cfg, RolloutMode::Sample(&mut r1)).unwrap();
                let s2 = rollout(&p, qa, &store, &cfg, RolloutMode::Sample(&mut r2)).unwrap();
                assert_eq!(s1.actions, s2.actions);
                assert_eq!(s1.log_probs, s2.log_probs);
                assert_eq!(s1.reward, s2.reward);
                assert_eq!(*s1.returns.last().unwrap(), s1.reward);
                for (t, s) in s1.states.iter().enumerate() {
                    assert_eq!(s.t, t);
                    if t > 0 {
                        assert_eq!(s.prev_action, s1.actions[t - 1]);
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_follows_distribution() {
        let d = ActionDistribution { probs: [0.2, 0.5, 0.3] };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[sample(&d, &mut rng).index()] += 1;
        }
        for (c, p) in counts.iter().zip(d.probs) {
            assert!((*c as f64 / 20_000.0 - p).abs() < 0.02);
        }
        let certain = ActionDistribution { probs: [0.0, 0.0, 1.0] };
        assert_eq!(sample(&certain, &mut rng), Action::Entity);
    }
}
