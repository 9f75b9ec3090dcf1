//! Two-step linking of predicted mentions to knowledge-graph items.
//!
//! Retrieval scores every label sharing a character trigram with the mention;
//! ranking re-scores the retrieved candidates with a similarity function
//! (Levenshtein for entities, the Levenshtein/embedding blend for relations)
//! and keeps the top `k`. Relation candidates are augmented with the
//! relations adjacent to each entity mention's best retrieval hit.

mod index;
mod io;
mod trigram;

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingStore, ItemKind, KnowledgeBase, Token};
use crate::mdp::{extract_phrases, Action, PhraseMention};
use crate::similarity::{similarity, SimilarityConfig};
use crate::Result;

pub use index::{idf, TrigramIndex};
pub use io::{
    index_from_bytes, index_to_bytes, load_index, read_link_results, save_index,
    write_link_results, INDEX_MAGIC, INDEX_VERSION,
};
pub use trigram::{trigrams, CaseMode};

pub fn build_index(kb: &KnowledgeBase, kind: ItemKind, case_mode: CaseMode) -> TrigramIndex {
    TrigramIndex::build(kb, kind, case_mode)
}

pub fn retrieve(index: &TrigramIndex, mention: &str, k: usize) -> Vec<Candidate> {
    index.retrieve(mention, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub uri: String,
    pub kg_label: String,
    pub retrieval_score: f64,
    /// Set by [`rank`].
    pub rank_score: Option<f64>,
}

impl Candidate {
    /// Rank score, or the retrieval score before ranking.
    pub fn score(&self) -> f64 {
        self.rank_score.unwrap_or(self.retrieval_score)
    }
}

/// Adds the relations on edges touching `top_entity`, with retrieval score 0.
/// Uris already present are not duplicated.
pub fn expand_relations(
    kb: &KnowledgeBase,
    top_entity: &Candidate,
    existing: Vec<Candidate>,
) -> Vec<Candidate> {
    let mut out = existing;
    for rel in kb.incident_relations(&top_entity.uri) {
        if out.iter().any(|c| c.uri == rel) {
            continue;
        }
        let label = kb.label_of(ItemKind::Relation, rel).unwrap_or(rel);
        out.push(Candidate {
            uri: rel.to_string(),
            kg_label: label.to_string(),
            retrieval_score: 0.0,
            rank_score: None,
        });
    }
    out
}

/// Scores each candidate as `similarity(mention, label)`, sorts by score then
/// uri, and keeps `k`.
pub fn rank(
    candidates: Vec<Candidate>,
    mention: &str,
    sim_cfg: &SimilarityConfig,
    store: &EmbeddingStore,
    k: usize,
) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = candidates
        .into_iter()
        .map(|mut c| {
            c.rank_score = Some(similarity(sim_cfg, mention, &c.kg_label, store));
            c
        })
        .collect();
    index::sort_by_score(&mut out, Candidate::score);
    out.truncate(k);
    out
}

/// Entity and relation indices built with the same case mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkIndices {
    pub entity: TrigramIndex,
    pub relation: TrigramIndex,
}

impl LinkIndices {
    pub fn build(kb: &KnowledgeBase, case_mode: CaseMode) -> Self {
        LinkIndices {
            entity: TrigramIndex::build(kb, ItemKind::Entity, case_mode),
            relation: TrigramIndex::build(kb, ItemKind::Relation, case_mode),
        }
    }

    pub fn for_kind(&self, kind: ItemKind) -> &TrigramIndex {
        match kind {
            ItemKind::Entity => &self.entity,
            ItemKind::Relation => &self.relation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub case_mode: CaseMode,
    pub combine_weight: f64,
    /// How many retrieval hits are passed to ranking.
    pub retrieve_depth: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            case_mode: CaseMode::Preserve,
            combine_weight: SimilarityConfig::DEFAULT_WEIGHT,
            retrieve_depth: 50,
        }
    }
}

impl LinkConfig {
    pub fn sim_for(&self, kind: ItemKind) -> Result<SimilarityConfig> {
        let fold = self.case_mode.folds();
        match kind {
            ItemKind::Entity => Ok(SimilarityConfig::lev(fold)),
            ItemKind::Relation => SimilarityConfig::combined(self.combine_weight, fold),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MentionLinks {
    pub mention: PhraseMention,
    pub candidates: Vec<Candidate>,
}

impl MentionLinks {
    pub fn top(&self) -> Option<&Candidate> {
        self.candidates.first()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub question_id: String,
    pub mentions: Vec<MentionLinks>,
}

/// Groups `actions` into mentions and links each to at most `k` candidates.
#[allow(clippy::too_many_arguments)]
pub fn link(
    question_id: &str,
    tokens: &[Token],
    actions: &[Action],
    indices: &LinkIndices,
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    cfg: &LinkConfig,
    k: usize,
) -> Result<LinkResult> {
    let phrases = extract_phrases(actions, tokens)?;
    let entity_sim = cfg.sim_for(ItemKind::Entity)?;
    let relation_sim = cfg.sim_for(ItemKind::Relation)?;

    let retrieved: Vec<Vec<Candidate>> = phrases
        .iter()
        .map(|p| indices.for_kind(p.label).retrieve(&p.text, cfg.retrieve_depth))
        .collect();
    let anchors: Vec<Candidate> = phrases
        .iter()
        .zip(&retrieved)
        .filter(|(p, _)| p.label == ItemKind::Entity)
        .filter_map(|(_, c)| c.first().cloned())
        .collect();

    let mut mentions = Vec::with_capacity(phrases.len());
    for (phrase, mut cands) in phrases.into_iter().zip(retrieved) {
        let sim = match phrase.label {
            ItemKind::Entity => &entity_sim,
            ItemKind::Relation => {
                for a in &anchors {
                    cands = expand_relations(kb, a, cands);
                }
                &relation_sim
            }
        };
        let candidates = rank(cands, &phrase.text, sim, store, k);
        mentions.push(MentionLinks {
            mention: phrase,
            candidates,
        });
    }
    Ok(LinkResult {
        question_id: question_id.to_string(),
        mentions,
    })
}
