//! Linking metrics: top-1 accuracy, MRR over top-`k` lists and a coverage
//! proxy for downstream query construction.
//!
//! Gold items and predicted mentions of the same kind are paired greedily:
//! all `(gold, mention)` pairs where the gold uri sits in the mention's top
//! `k` are sorted by rank, then by the candidate's score, then by position,
//! and taken in that order while both sides are still free. Raising `k` only
//! appends pairs at the end of that order, so earlier pairings survive, which
//! keeps MRR and coverage non-decreasing in `k`. With `k = 1` the pairing is
//! exactly "gold matched by some mention's top candidate", so MRR@1 equals
//! accuracy.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ItemKind, LinkedItem, QAPair};
use crate::linker::{CaseMode, Candidate, LinkResult};
use crate::{Error, Result};

/// 1-based position of `gold` in `list`, if present.
pub fn item_hit(list: &[Candidate], gold: &LinkedItem) -> Option<usize> {
    list.iter().position(|c| c.uri == gold.uri).map(|i| i + 1)
}

/// Rank (within top `k`) of each gold item of `label` under the greedy
/// pairing, `None` for unpaired golds.
pub fn paired_ranks(result: &LinkResult, gold: &QAPair, label: ItemKind, k: usize) -> Vec<Option<usize>> {
    let golds: Vec<&LinkedItem> = gold.items_of(label).collect();
    let mentions: Vec<&[Candidate]> = result
        .mentions
        .iter()
        .filter(|m| m.mention.label == label)
        .map(|m| m.candidates.as_slice())
        .collect();

    let mut pairs: Vec<(usize, f64, usize, usize)> = Vec::new();
    for (gi, g) in golds.iter().enumerate() {
        for (mi, list) in mentions.iter().enumerate() {
            if let Some(r) = item_hit(list, g).filter(|&r| r <= k) {
                pairs.push((r, list[r - 1].score(), gi, mi));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(b.1.total_cmp(&a.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });

    let mut ranks = vec![None; golds.len()];
    let mut used = vec![false; mentions.len()];
    for (r, _, gi, mi) in pairs {
        if ranks[gi].is_none() && !used[mi] {
            ranks[gi] = Some(r);
            used[mi] = true;
        }
    }
    ranks
}

fn check_aligned(results: &[LinkResult], golds: &[QAPair]) -> Result<()> {
    if results.len() != golds.len() {
        return Err(Error::Misaligned(format!(
            "{} results for {} questions",
            results.len(),
            golds.len()
        )));
    }
    for (r, g) in results.iter().zip(golds) {
        if r.question_id != g.id {
            return Err(Error::Misaligned(format!(
                "result {:?} paired with question {:?}",
                r.question_id, g.id
            )));
        }
    }
    Ok(())
}

fn mean_over_golds(
    results: &[LinkResult],
    golds: &[QAPair],
    label: ItemKind,
    k: usize,
    credit: impl Fn(usize) -> f64,
) -> Result<f64> {
    check_aligned(results, golds)?;
    let mut total = 0.0;
    let mut n = 0usize;
    for (r, g) in results.iter().zip(golds) {
        for rank in paired_ranks(r, g, label, k) {
            n += 1;
            total += rank.map_or(0.0, &credit);
        }
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// Fraction of gold items of `label` whose paired mention ranks them first.
pub fn accuracy(results: &[LinkResult], golds: &[QAPair], label: ItemKind) -> Result<f64> {
    mean_over_golds(results, golds, label, 1, |_| 1.0)
}

/// Mean over gold items of `1 / rank`, 0 for golds not paired within top `k`.
pub fn mrr_at_k(results: &[LinkResult], golds: &[QAPair], label: ItemKind, k: usize) -> Result<f64> {
    mean_over_golds(results, golds, label, k, |r| 1.0 / r as f64)
}

/// Whether a question's every gold item is paired within top `k`.
pub fn question_covered(result: &LinkResult, gold: &QAPair, k: usize) -> bool {
    [ItemKind::Entity, ItemKind::Relation]
        .into_iter()
        .all(|kind| paired_ranks(result, gold, kind, k).iter().all(Option::is_some))
}

/// Fraction of questions whose gold items are all covered by top-`k` lists.
pub fn recall_proxy_at_k(results: &[LinkResult], golds: &[QAPair], k: usize) -> Result<f64> {
    check_aligned(results, golds)?;
    if golds.is_empty() {
        return Ok(0.0);
    }
    let hits = results
        .iter()
        .zip(golds)
        .filter(|(r, g)| question_covered(r, g, k))
        .count();
    Ok(hits as f64 / golds.len() as f64)
}

/// True when `mrr_at_k` never drops for `k = 1..=k_max`.
pub fn mrr_monotonicity_check(
    results: &[LinkResult],
    golds: &[QAPair],
    label: ItemKind,
    k_max: usize,
) -> Result<bool> {
    let mut prev = f64::NEG_INFINITY;
    for k in 1..=k_max {
        let m = mrr_at_k(results, golds, label, k)?;
        if m < prev {
            return Ok(false);
        }
        prev = m;
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub entity_accuracy: f64,
    pub relation_accuracy: f64,
    pub entity_mrr: f64,
    pub relation_mrr: f64,
    pub recall_at_k: f64,
    pub n_questions: usize,
    pub k: usize,
    pub case_mode: CaseMode,
    pub seed: u64,
}

impl EvalReport {
    pub fn compute(
        results: &[LinkResult],
        golds: &[QAPair],
        k: usize,
        case_mode: CaseMode,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        Ok(EvalReport {
            entity_accuracy: accuracy(results, golds, ItemKind::Entity)?,
            relation_accuracy: accuracy(results, golds, ItemKind::Relation)?,
            entity_mrr: mrr_at_k(results, golds, ItemKind::Entity, k)?,
            relation_mrr: mrr_at_k(results, golds, ItemKind::Relation, k)?,
            recall_at_k: recall_proxy_at_k(results, golds, k)?,
            n_questions: golds.len(),
            k,
            case_mode,
            seed,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let rows = [
            ("entity accuracy", format!("{:.4}", self.entity_accuracy)),
            ("relation accuracy", format!("{:.4}", self.relation_accuracy)),
            (&*format!("entity MRR@{}", self.k), format!("{:.4}", self.entity_mrr)),
            (&*format!("relation MRR@{}", self.k), format!("{:.4}", self.relation_mrr)),
            (&*format!("recall@{}", self.k), format!("{:.4}", self.recall_at_k)),
            ("questions", self.n_questions.to_string()),
            ("case mode", self.case_mode.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .map(|(a, b)| (a.to_string(), b));
        let w = rows.iter().map(|(a, _)| a.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (name, value) in &rows {
            let _ = writeln!(out, "{name:<w$}  {value:>8}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldOutcome {
    pub uri: String,
    pub label: ItemKind,
    /// Paired rank within top `k`.
    pub rank: Option<usize>,
}

/// Per-question detail for error analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionBreakdown {
    pub id: String,
    pub question: String,
    pub mentions: Vec<(String, ItemKind, Option<String>)>,
    pub golds: Vec<GoldOutcome>,
    pub covered: bool,
}

pub fn breakdown(results: &[LinkResult], golds: &[QAPair], k: usize) -> Result<Vec<QuestionBreakdown>> {
    check_aligned(results, golds)?;
    Ok(results
        .iter()
        .zip(golds)
        .map(|(r, g)| {
            let mut outcomes = Vec::new();
            for kind in [ItemKind::Entity, ItemKind::Relation] {
                for (item, rank) in g.items_of(kind).zip(paired_ranks(r, g, kind, k)) {
                    outcomes.push(GoldOutcome {
                        uri: item.uri.clone(),
                        label: kind,
                        rank,
                    });
                }
            }
            QuestionBreakdown {
                id: g.id.clone(),
                question: g.question.clone(),
                mentions: r
                    .mentions
                    .iter()
                    .map(|m| (m.mention.text.clone(), m.mention.label, m.top().map(|c| c.uri.clone())))
                    .collect(),
                covered: outcomes.iter().all(|o| o.rank.is_some()),
                golds: outcomes,
            }
        })
        .collect())
}

pub fn write_breakdown(path: impl AsRef<Path>, rows: &[QuestionBreakdown]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::linker::MentionLinks;
    use crate::mdp::PhraseMention;

    pub fn item(uri: &str, label: ItemKind) -> LinkedItem {
        LinkedItem {
            title: uri.to_string(),
            uri: uri.to_string(),
            label,
        }
    }

    pub fn question(id: &str, items: Vec<LinkedItem>) -> QAPair {
        QAPair::new(id, "a b c d e f", items).unwrap()
    }

    /// A mention whose candidate list holds `uris` in order with falling scores.
    pub fn mention(label: ItemKind, uris: &[&str]) -> MentionLinks {
        MentionLinks {
            mention: PhraseMention {
                text: "m".into(),
                label,
                span: (0, 0),
            },
            candidates: uris
                .iter()
                .enumerate()
                .map(|(i, u)| Candidate {
                    uri: u.to_string(),
                    kg_label: u.to_string(),
                    retrieval_score: 1.0,
                    rank_score: Some(1.0 - 0.1 * i as f64),
                })
                .collect(),
        }
    }

    pub fn result(id: &str, mentions: Vec<MentionLinks>) -> LinkResult {
        LinkResult {
            question_id: id.into(),
            mentions,
        }
    }
}
