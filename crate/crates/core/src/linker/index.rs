use std::collections::{BTreeMap, BTreeSet};

use super::trigram::{trigrams, CaseMode};
use super::Candidate;
use crate::corpus::{ItemKind, KnowledgeBase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Doc {
    pub uri: String,
    pub label: String,
    /// Number of trigrams (with repeats) in the label.
    pub length: u32,
}

/// Inverted index from character trigrams to knowledge-graph labels of one
/// kind.
///
/// Documents are stored sorted by uri, so document ids order like uris and
/// every postings list is sorted by uri.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigramIndex {
    pub(crate) kind: ItemKind,
    pub(crate) case_mode: CaseMode,
    pub(crate) docs: Vec<Doc>,
    pub(crate) postings: BTreeMap<String, Vec<(u32, u32)>>,
}

/// `ln(1 + N / df)`.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    (1.0 + n_docs as f64 / df as f64).ln()
}

impl TrigramIndex {
    pub fn build(kb: &KnowledgeBase, kind: ItemKind, case_mode: CaseMode) -> Self {
        let mut docs = Vec::new();
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        // BTreeMap iteration is uri-sorted
        for (id, (uri, label)) in kb.labels(kind).iter().enumerate() {
            let grams = trigrams(label, case_mode);
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for g in &grams {
                *counts.entry(g.clone()).or_default() += 1;
            }
            for (g, c) in counts {
                postings.entry(g).or_default().push((id as u32, c));
            }
            docs.push(Doc {
                uri: uri.clone(),
                label: label.clone(),
                length: grams.len() as u32,
            });
        }
        TrigramIndex {
            kind,
            case_mode,
            docs,
            postings,
        }
    }

    pub fn kind(&self) -> ItemKind {
        self.kind
    }

    pub fn case_mode(&self) -> CaseMode {
        self.case_mode
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc_lengths(&self) -> impl Iterator<Item = (&str, u32)> {
        self.docs.iter().map(|d| (d.uri.as_str(), d.length))
    }

    pub fn label_of(&self, uri: &str) -> Option<&str> {
        self.docs
            .binary_search_by(|d| d.uri.as_str().cmp(uri))
            .ok()
            .map(|i| self.docs[i].label.as_str())
    }

    /// Postings of one trigram as `(uri, count)` pairs.
    pub fn postings(&self, trigram: &str) -> impl Iterator<Item = (&str, u32)> {
        self.postings
            .get(trigram)
            .into_iter()
            .flatten()
            .map(|(d, c)| (self.docs[*d as usize].uri.as_str(), *c))
    }

    pub fn num_trigrams(&self) -> usize {
        self.postings.len()
    }

    /// Up to `k` labels sharing at least one trigram with `mention`, scored
    /// by `sum(idf(t) for t in shared distinct trigrams) / sqrt(doc_length)`
    /// and ordered by score, then uri.
    pub fn retrieve(&self, mention: &str, k: usize) -> Vec<Candidate> {
        if k == 0 || self.docs.is_empty() {
            return Vec::new();
        }
        let query: BTreeSet<String> = trigrams(mention, self.case_mode).into_iter().collect();
        let n = self.docs.len();
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for g in &query {
            if let Some(list) = self.postings.get(g) {
                let w = idf(n, list.len());
                for (doc, _) in list {
                    *acc.entry(*doc).or_insert(0.0) += w;
                }
            }
        }
        let mut out: Vec<Candidate> = acc
            .into_iter()
            .map(|(d, s)| {
                let doc = &self.docs[d as usize];
                Candidate {
                    uri: doc.uri.clone(),
                    kg_label: doc.label.clone(),
                    retrieval_score: s / f64::from(doc.length).sqrt(),
                    rank_score: None,
                }
            })
            .collect();
        sort_by_score(&mut out, |c| c.retrieval_score);
        out.truncate(k);
        out
    }
}

/// Descending by score, ascending by uri on ties.
pub(crate) fn sort_by_score(c: &mut [Candidate], score: impl Fn(&Candidate) -> f64) {
    c.sort_by(|a, b| {
        score(b)
            .total_cmp(&score(a))
            .then_with(|| a.uri.cmp(&b.uri))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn kb(entities: &[(&str, &str)]) -> KnowledgeBase {
        let e: BTreeMap<String, String> = entities
            .iter()
            .map(|(u, l)| (u.to_string(), l.to_string()))
            .collect();
        KnowledgeBase::new(e, BTreeMap::new(), vec![]).unwrap()
    }

    // Scores every label directly, without postings.
    fn brute_force(kb: &KnowledgeBase, mention: &str, k: usize, mode: CaseMode) -> Vec<(String, f64)> {
        let labels = kb.labels(ItemKind::Entity);
        let sets: Vec<(String, BTreeSet<String>, usize)> = labels
            .iter()
            .map(|(u, l)| {
                let g = trigrams(l, mode);
                let n = g.len();
                (u.clone(), g.into_iter().collect(), n)
            })
            .collect();
        let query: BTreeSet<String> = trigrams(mention, mode).into_iter().collect();
        let mut scored = Vec::new();
        for (uri, set, len) in &sets {
            let mut s = 0.0;
            let mut shared = false;
            for g in &query {
                if set.contains(g) {
                    let df = sets.iter().filter(|(_, o, _)| o.contains(g)).count();
                    s += idf(sets.len(), df);
                    shared = true;
                }
            }
            if shared {
                scored.push((uri.clone(), s / (*len as f64).sqrt()));
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }

    #[test]
    fn typo_retrieves_right_entity() {
        let kb = kb(&[
            ("dbr:Barack_Obama", "Barack Obama"),
            ("dbr:Barack_Obama_Sr.", "Barack Obama Sr."),
            ("dbr:Michelle_Obama", "Michelle Obama"),
        ]);
        for mode in [CaseMode::Preserve, CaseMode::Fold] {
            let idx = TrigramIndex::build(&kb, ItemKind::Entity, mode);
            let got = idx.retrieve("barak obama", 3);
            let oracle = brute_force(&kb, "barak obama", 3, mode);
            assert_eq!(oracle[0].0, "dbr:Barack_Obama");
            assert_eq!(got[0].uri, "dbr:Barack_Obama");
            assert_eq!(
                got.iter().map(|c| (c.uri.clone(), c.retrieval_score)).collect::<Vec<_>>(),
                oracle
            );
        }
    }

    #[test]
    fn exact_label_wins_among_equal_lengths() {
        let kb = kb(&[("a", "spouse"), ("b", "sprout"), ("c", "source")]);
        let idx = TrigramIndex::build(&kb, ItemKind::Entity, CaseMode::Preserve);
        assert_eq!(idx.retrieve("spouse", 3)[0].uri, "a");
        assert_eq!(brute_force(&kb, "spouse", 3, CaseMode::Preserve)[0].0, "a");
    }

    #[test]
    fn large_k_returns_every_overlapping_item() {
        let kb = kb(&[("a", "obama"), ("b", "bama"), ("c", "amab")]);
        let idx = TrigramIndex::build(&kb, ItemKind::Entity, CaseMode::Preserve);
        assert_eq!(idx.retrieve("obama", 50).len(), 3);
        assert_eq!(idx.retrieve("obama", 1).len(), 1);
    }

    #[test]
    fn empty_kb() {
        let idx = TrigramIndex::build(&kb(&[]), ItemKind::Entity, CaseMode::Fold);
        assert!(idx.is_empty());
        assert!(idx.retrieve("anything", 5).is_empty());
    }

    #[test]
    fn postings_are_complete_and_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let labels: Vec<(String, String)> = (0..60)
            .map(|i| {
                let len = rng.gen_range(1..12);
                let s: String = (0..len).map(|_| rng.gen_range(b'a'..=b'e') as char).collect();
                (format!("u{i:03}"), s)
            })
            .collect();
        let refs: Vec<(&str, &str)> = labels.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let kb = kb(&refs);
        let idx = TrigramIndex::build(&kb, ItemKind::Entity, CaseMode::Preserve);
        assert_eq!(idx.doc_lengths().count(), 60);
        for (uri, label) in &labels {
            let mut expected: BTreeMap<String, u32> = BTreeMap::new();
            for g in trigrams(label, CaseMode::Preserve) {
                *expected.entry(g).or_default() += 1;
            }
            let mut rebuilt: BTreeMap<String, u32> = BTreeMap::new();
            for g in idx.postings.keys() {
                for (u, c) in idx.postings(g) {
                    if u == uri {
                        rebuilt.insert(g.clone(), c);
                    }
                }
            }
            assert_eq!(rebuilt, expected, "{uri}");
        }
        for list in idx.postings.values() {
            assert!(list.windows(2).all(|w| w[0].0 < w[1].0));
        }
        // random membership probes
        for _ in 0..200 {
            let (uri, label) = &labels[rng.gen_range(0..labels.len())];
            let g: String = (0..3).map(|_| rng.gen_range(b'a'..=b'e') as char).collect();
            let present = idx.postings(&g).any(|(u, _)| u == uri);
            assert_eq!(present, trigrams(label, CaseMode::Preserve).contains(&g));
        }
    }

    #[test]
    fn retrieval_matches_brute_force_on_random_kb() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let labels: Vec<(String, String)> = (0..200)
            .map(|i| {
                let len = rng.gen_range(2..10);
                let s: String = (0..len).map(|_| rng.gen_range(b'a'..=b'f') as char).collect();
                (format!("u{i:03}"), s)
            })
            .collect();
        let refs: Vec<(&str, &str)> = labels.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let kb = kb(&refs);
        let idx = TrigramIndex::build(&kb, ItemKind::Entity, CaseMode::Preserve);
        for _ in 0..30 {
            let len = rng.gen_range(1..8);
            let m: String = (0..len).map(|_| rng.gen_range(b'a'..=b'f') as char).collect();
            let got: Vec<_> = idx.retrieve(&m, 10).into_iter().map(|c| (c.uri, c.retrieval_score)).collect();
            assert_eq!(got, brute_force(&kb, &m, 10, CaseMode::Preserve));
        }
    }
}
