//! String, embedding and blended similarity in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::corpus::{case_fold, tokenize, EmbeddingStore};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Lev,
    Emb,
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub kind: SimilarityKind,
    /// Weight of the Levenshtein term in `Combined`.
    pub combine_weight: f64,
    pub case_fold: bool,
}

impl SimilarityConfig {
    pub const DEFAULT_WEIGHT: f64 = 0.5;

    pub fn new(kind: SimilarityKind, combine_weight: f64, case_fold: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&combine_weight) {
            return Err(Error::InvalidConfig(format!(
                "combine weight {combine_weight} outside [0, 1]"
            )));
        }
        Ok(SimilarityConfig {
            kind,
            combine_weight,
            case_fold,
        })
    }

    pub fn lev(case_fold: bool) -> Self {
        SimilarityConfig {
            kind: SimilarityKind::Lev,
            combine_weight: 1.0,
            case_fold,
        }
    }

    pub fn combined(combine_weight: f64, case_fold: bool) -> Result<Self> {
        Self::new(SimilarityKind::Combined, combine_weight, case_fold)
    }
}

/// Unit-cost insert/delete/substitute distance over chars.
pub fn lev_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - lev(a, b) / max(|a|, |b|)`, with two empty strings scoring 1.
pub fn sim_lev(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - lev_distance(a, b) as f64 / longest as f64
}

fn phrase_vector(phrase: &str, store: &EmbeddingStore) -> Vec<f64> {
    let mut acc = vec![0.0; store.dim()];
    let Ok(tokens) = tokenize(phrase, false) else {
        return acc;
    };
    for t in &tokens {
        for (a, x) in acc.iter_mut().zip(store.embed(t).iter()) {
            *a += x;
        }
    }
    let n = tokens.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Cosine of the mean word vectors of both phrases, clamped at zero.
/// A phrase with a zero mean vector scores 0 against anything.
pub fn sim_emb(a: &str, b: &str, store: &EmbeddingStore) -> f64 {
    let va = phrase_vector(a, store);
    let vb = phrase_vector(b, store);
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let na = va.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

pub fn similarity(cfg: &SimilarityConfig, a: &str, b: &str, store: &EmbeddingStore) -> f64 {
    let (fa, fb);
    let (a, b) = if cfg.case_fold {
        fa = case_fold(a);
        fb = case_fold(b);
        (fa.as_str(), fb.as_str())
    } else {
        (a, b)
    };
    match cfg.kind {
        SimilarityKind::Lev => sim_lev(a, b),
        SimilarityKind::Emb => sim_emb(a, b, store),
        SimilarityKind::Combined => {
            let w = cfg.combine_weight;
            w * sim_lev(a, b) + (1.0 - w) * sim_emb(a, b, store)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::OovPolicy;
    use proptest::prelude::*;

    // Full-matrix recurrence, kept independent of the two-row version.
    fn lev_oracle(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            d[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
                d[i][j] = (d[i - 1][j] + 1)
                    .min(d[i][j - 1] + 1)
                    .min(d[i - 1][j - 1] + cost);
            }
        }
        d[a.len()][b.len()]
    }

    fn store_2d() -> EmbeddingStore {
        let mut s = EmbeddingStore::new(2, OovPolicy::ZeroVector).unwrap();
        s.insert("east", vec![1.0, 0.0]).unwrap();
        s.insert("north", vec![0.0, 1.0]).unwrap();
        s.insert("west", vec![-1.0, 0.0]).unwrap();
        s
    }

    #[test]
    fn distance_examples() {
        assert_eq!(lev_oracle("barak", "barack"), 1);
        assert_eq!(lev_distance("barak", "barack"), 1);
        assert_eq!(lev_distance("spouse", "spouse"), 0);
        assert_eq!(lev_distance("", "abc"), 3);
        assert_eq!(lev_distance("abc", ""), 3);
        assert_eq!(lev_distance("kitten", "sitting"), 3);
    }

    #[test]
    fn normalized_lev_examples() {
        assert!((sim_lev("barak", "barack") - (1.0 - 1.0 / 6.0)).abs() < 1e-12);
        assert_eq!(sim_lev("x", "x"), 1.0);
        assert_eq!(sim_lev("abc", ""), 0.0);
        assert_eq!(sim_lev("", ""), 1.0);
    }

    #[test]
    fn embedding_examples() {
        let s = store_2d();
        assert!((sim_emb("east", "east", &s) - 1.0).abs() < 1e-12);
        assert_eq!(sim_emb("east", "north", &s), 0.0);
        // negative cosine is clamped
        assert_eq!(sim_emb("east", "west", &s), 0.0);
        // mean of (1,0),(0,1) vs (1,0): cos = 1/sqrt(2)
        assert!((sim_emb("east north", "east", &s) - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(sim_emb("unknown words", "east", &s), 0.0);
        assert_eq!(sim_emb("east west", "east", &s), 0.0);
    }

    #[test]
    fn combined_weights() {
        let s = store_2d();
        let pairs = [("east", "north"), ("east", "east"), ("eats", "east"), ("", "west")];
        for (a, b) in pairs {
            let one = SimilarityConfig::combined(1.0, false).unwrap();
            let zero = SimilarityConfig::combined(0.0, false).unwrap();
            assert_eq!(similarity(&one, a, b, &s), sim_lev(a, b));
            assert_eq!(similarity(&zero, a, b, &s), sim_emb(a, b, &s));
        }
        // "east north" vs "east": lev = 1 - 6/10 = 0.4, emb = 1/sqrt(2)
        let half = SimilarityConfig::combined(0.5, false).unwrap();
        let expected = 0.5 * 0.4 + 0.5 * 0.5f64.sqrt();
        assert!((similarity(&half, "east north", "east", &s) - expected).abs() < 1e-12);
        assert!(SimilarityConfig::combined(1.5, false).is_err());
    }

    #[test]
    fn combined_is_weighted_arithmetic() {
        // w=0.5 on (lev=0.8, emb=0.4) -> 0.6
        let w: f64 = 0.5;
        assert!((w * 0.8 + (1.0 - w) * 0.4 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn case_folding() {
        let s = store_2d();
        let fold = SimilarityConfig::lev(true);
        let keep = SimilarityConfig::lev(false);
        assert_eq!(similarity(&fold, "Obama", "obama", &s), 1.0);
        assert!(similarity(&keep, "Obama", "obama", &s) < 1.0);
    }

    proptest! {
        #[test]
        fn distance_matches_oracle(a in "[abc]{0,8}", b in "[abc]{0,8}") {
            prop_assert_eq!(lev_distance(&a, &b), lev_oracle(&a, &b));
        }

        #[test]
        fn metric_axioms(a in "[a-d ]{0,10}", b in "[a-d ]{0,10}", c in "[a-d ]{0,10}") {
            prop_assert_eq!(lev_distance(&a, &b), lev_distance(&b, &a));
            prop_assert!(lev_distance(&a, &c) <= lev_distance(&a, &b) + lev_distance(&b, &c));
            prop_assert_eq!(sim_lev(&a, &b), sim_lev(&b, &a));
            if !a.is_empty() {
                prop_assert_eq!(sim_lev(&a, &a), 1.0);
            }
        }

        #[test]
        fn all_scores_in_unit_interval(
            a in "[a-zA-Z ]{0,12}",
            b in "[a-zA-Z ]{0,12}",
            w in 0.0f64..=1.0,
            fold in any::<bool>(),
        ) {
            let s = EmbeddingStore::new(4, OovPolicy::HashBucket(16)).unwrap();
            for kind in [SimilarityKind::Lev, SimilarityKind::Emb, SimilarityKind::Combined] {
                let cfg = SimilarityConfig::new(kind, w, fold).unwrap();
                let v = similarity(&cfg, &a, &b, &s);
                prop_assert!((0.0..=1.0).contains(&v), "{:?} -> {}", kind, v);
            }
        }

        #[test]
        fn monotone_in_weight_when_lev_dominates(
            a in "[a-c ]{1,8}",
            b in "[a-c ]{1,8}",
            w1 in 0.0f64..=1.0,
            w2 in 0.0f64..=1.0,
        ) {
            let s = EmbeddingStore::new(3, OovPolicy::HashBucket(8)).unwrap();
            let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
            if sim_lev(&a, &b) >= sim_emb(&a, &b, &s) {
                let f = |w| similarity(&SimilarityConfig::combined(w, false).unwrap(), &a, &b, &s);
                prop_assert!(f(lo) <= f(hi) + 1e-12);
            }
        }
    }
}
