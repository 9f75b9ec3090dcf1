//! The question-labeling environment.
//!
//! An episode walks a question left to right. At step `t` the agent sees a
//! window of `2h + 1` word vectors centred on word `t` plus the previous
//! action, and emits a label. No reward is available until the last word;
//! then the labels are grouped into phrases, each phrase is scored against
//! the same-kind items of the formal query, and the average score becomes the
//! episode reward, discounted backwards to earlier steps.

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingStore, ItemKind, LinkedItem, QAPair, Token};
use crate::similarity::{similarity, SimilarityConfig};
use crate::{Error, Result};

/// Label chosen for one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum Action {
    #[default]
    None = 0,
    Relation = 1,
    Entity = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::None, Action::Relation, Action::Entity];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn kind(self) -> Option<ItemKind> {
        match self {
            Action::None => None,
            Action::Relation => Some(ItemKind::Relation),
            Action::Entity => Some(ItemKind::Entity),
        }
    }
}

impl From<ItemKind> for Action {
    fn from(k: ItemKind) -> Self {
        match k {
            ItemKind::Relation => Action::Relation,
            ItemKind::Entity => Action::Entity,
        }
    }
}

/// Observation at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: usize,
    pub prev_action: Action,
    h: usize,
    dim: usize,
    /// `2h + 1` word vectors, concatenated.
    window: Vec<f64>,
}

impl State {
    pub fn h(&self) -> usize {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window_len(&self) -> usize {
        2 * self.h + 1
    }

    /// Word vectors for positions `t - h ..= t + h`.
    pub fn window(&self) -> impl Iterator<Item = &[f64]> {
        self.window.chunks(self.dim)
    }

    pub fn window_flat(&self) -> &[f64] {
        &self.window
    }
}

/// A maximal run of words sharing one non-`None` label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseMention {
    pub text: String,
    pub label: ItemKind,
    /// Inclusive token range.
    pub span: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub h: usize,
    pub gamma: f64,
    pub entity_sim: SimilarityConfig,
    pub relation_sim: SimilarityConfig,
}

impl EnvConfig {
    pub fn new(h: usize, gamma: f64, combine_weight: f64, case_fold: bool) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma {gamma} outside (0, 1]")));
        }
        Ok(EnvConfig {
            h,
            gamma,
            entity_sim: SimilarityConfig::lev(case_fold),
            relation_sim: SimilarityConfig::combined(combine_weight, case_fold)?,
        })
    }

    pub fn sim_for(&self, kind: ItemKind) -> &SimilarityConfig {
        match kind {
            ItemKind::Entity => &self.entity_sim,
            ItemKind::Relation => &self.relation_sim,
        }
    }
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::new(1, 1.0, SimilarityConfig::DEFAULT_WEIGHT, false).unwrap()
    }
}

/// Result of a transition.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Next(State),
    Done,
}

impl Step {
    pub fn is_done(&self) -> bool {
        matches!(self, Step::Done)
    }
}

/// Builds the observation for word `t` of `qa`, zero-padding outside the
/// question.
pub fn make_state(
    qa: &QAPair,
    store: &EmbeddingStore,
    t: usize,
    prev: Action,
    h: usize,
) -> Result<State> {
    let n = qa.len();
    if t >= n {
        return Err(Error::StepOutOfRange { t, n });
    }
    let dim = store.dim();
    let mut window = vec![0.0; (2 * h + 1) * dim];
    for (slot, chunk) in window.chunks_mut(dim).enumerate() {
        let pos = (t + slot).checked_sub(h).filter(|&p| p < n);
        if let Some(p) = pos {
            chunk.copy_from_slice(&store.embed(&qa.tokens[p]));
        }
    }
    Ok(State {
        t,
        prev_action: prev,
        h,
        dim,
        window,
    })
}

/// One question's environment with its word vectors resolved up front.
#[derive(Debug, Clone)]
pub struct Environment<'a> {
    qa: &'a QAPair,
    store: &'a EmbeddingStore,
    cfg: &'a EnvConfig,
}

impl<'a> Environment<'a> {
    pub fn new(qa: &'a QAPair, store: &'a EmbeddingStore, cfg: &'a EnvConfig) -> Self {
        Environment { qa, store, cfg }
    }

    pub fn qa(&self) -> &'a QAPair {
        self.qa
    }

    pub fn config(&self) -> &'a EnvConfig {
        self.cfg
    }

    pub fn reset(&self) -> State {
        make_state(self.qa, self.store, 0, Action::None, self.cfg.h)
            .expect("questions have at least one token")
    }

    /// Deterministic transition; the successor records `action` as its
    /// previous action.
    pub fn step(&self, state: &State, action: Action) -> Result<Step> {
        let n = self.qa.len();
        if state.t >= n {
            return Err(Error::TerminalState { t: state.t, n });
        }
        if state.t + 1 == n {
            return Ok(Step::Done);
        }
        make_state(self.qa, self.store, state.t + 1, action, self.cfg.h).map(Step::Next)
    }

    /// Delayed reward of a full label sequence.
    pub fn reward(&self, actions: &[Action]) -> Result<f64> {
        let phrases = extract_phrases(actions, &self.qa.tokens)?;
        Ok(episode_reward(&phrases, &self.qa.items, self.cfg, self.store))
    }
}

/// Groups maximal runs of equal non-`None` labels into phrases.
pub fn extract_phrases(actions: &[Action], tokens: &[Token]) -> Result<Vec<PhraseMention>> {
    if actions.len() != tokens.len() {
        return Err(Error::LengthMismatch {
            what: "actions vs tokens",
            left: actions.len(),
            right: tokens.len(),
        });
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < actions.len() {
        let Some(kind) = actions[i].kind() else {
            i += 1;
            continue;
        };
        let start = i;
        while i + 1 < actions.len() && actions[i + 1] == actions[start] {
            i += 1;
        }
        let text = tokens[start..=i]
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        out.push(PhraseMention {
            text,
            label: kind,
            span: (start, i),
        });
        i += 1;
    }
    Ok(out)
}

/// Best similarity between the phrase and any same-kind item title; 0 when
/// the query has no item of that kind.
pub fn score_phrase(
    phrase: &PhraseMention,
    items: &[LinkedItem],
    cfg: &EnvConfig,
    store: &EmbeddingStore,
) -> f64 {
    let sim = cfg.sim_for(phrase.label);
    items
        .iter()
        .filter(|it| it.label == phrase.label)
        .map(|it| similarity(sim, &phrase.text, &it.title, store))
        .fold(0.0, f64::max)
}

/// Mean phrase score; 0 when no phrase was predicted.
pub fn episode_reward(
    phrases: &[PhraseMention],
    items: &[LinkedItem],
    cfg: &EnvConfig,
    store: &EmbeddingStore,
) -> f64 {
    if phrases.is_empty() {
        return 0.0;
    }
    let total: f64 = phrases
        .iter()
        .map(|p| score_phrase(p, items, cfg, store))
        .sum();
    total / phrases.len() as f64
}

/// Return at step `t` of an `n`-step episode whose only reward `r` arrives
/// at the last step: `gamma^(n-1-t) * r`.
pub fn discounted_returns(r: f64, n: usize, gamma: f64) -> Vec<f64> {
    (0..n)
        .map(|t| gamma.powi((n - 1 - t) as i32) * r)
        .collect()
}
