//! Seeded synthetic corpus for desk-scale runs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingStore, ItemKind, KnowledgeBase, LinkedItem, OovPolicy, QAPair};

const FIRST_NAMES: &[&str] = &[
    "Alvaro", "Mirella", "Quinton", "Sabine", "Tobias", "Ingrid", "Rafael", "Lucia", "Dmitri",
    "Helena", "Oskar", "Yara", "Matteo", "Ronja", "Emil", "Zora", "Casimir", "Ottilie", "Bruno",
    "Fenna", "Ignatius", "Leontine", "Viggo", "Marisol",
];

const LAST_NAMES: &[&str] = &[
    "Brenner", "Castillo", "Varga", "Lindqvist", "Okafor", "Moreau", "Halvorsen", "Navarro",
    "Petrov", "Quist", "Albescu", "Drummond", "Eberhardt", "Fontaine", "Gallagher", "Hakimi",
    "Jovanic", "Kowalczyk", "Montoya", "Nakashima", "Ostrander", "Pellegrini", "Rasmussen",
    "Szabo",
];

const PLACE_NAMES: &[&str] = &[
    "Veldoria", "Marrakand", "Ostvale", "Pinecrest", "Lumora", "Tessaly", "Brightwater",
    "Corvallen", "Dunmere", "Eskerfield", "Frostholm", "Glimmerdale", "Harrowgate", "Ironvale",
    "Jadeport", "Kestrelmoor", "Larkspire", "Mistral", "Northwyck", "Oakhaven",
];

const RELATIONS: &[(&str, &str)] = &[
    ("spouse", "spouse"),
    ("birth place", "birthPlace"),
    ("employer", "employer"),
    ("alma mater", "almaMater"),
    ("nationality", "nationality"),
    ("father", "father"),
    ("founder", "founder"),
    ("residence", "residence"),
    ("coach", "coach"),
    ("religion", "religion"),
    ("successor", "successor"),
    ("home town", "homeTown"),
    ("doctoral advisor", "doctoralAdvisor"),
    ("record label", "recordLabel"),
];

fn relation_pool(n: usize) -> Vec<(String, String)> {
    (0..n)
        .map(|i| match RELATIONS.get(i) {
            Some((label, local)) => (label.to_string(), format!("toyp:{local}")),
            None => (format!("attribute{i}"), format!("toyp:attribute{i}")),
        })
        .collect()
}

fn entity_pool(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut firsts: Vec<&str> = FIRST_NAMES.to_vec();
    let mut lasts: Vec<&str> = LAST_NAMES.to_vec();
    let mut places: Vec<&str> = PLACE_NAMES.to_vec();
    firsts.shuffle(rng);
    lasts.shuffle(rng);
    places.shuffle(rng);
    let mut names = Vec::with_capacity(n);
    for i in 0..n {
        // even slots are person names, so at least half the titles span two words
        let name = if i % 2 == 0 {
            let k = i / 2;
            match (firsts.get(k % firsts.len()), lasts.get(k % lasts.len())) {
                (Some(f), Some(l)) if k < firsts.len().min(lasts.len()) => format!("{f} {l}"),
                _ => format!("Person{k} Unnamed"),
            }
        } else {
            let k = i / 2;
            match places.get(k) {
                Some(p) => p.to_string(),
                None => format!("Place{k}"),
            }
        };
        names.push(name);
    }
    names
}

fn uri_for(name: &str) -> String {
    format!("toy:{}", name.replace(' ', "_"))
}

/// Generates a knowledge base and `n_questions` template questions over it.
///
/// Output is a pure function of the arguments. Counts of zero are treated
/// as one.
pub fn generate_toy_corpus(
    seed: u64,
    n_entities: usize,
    n_relations: usize,
    n_questions: usize,
) -> (KnowledgeBase, Vec<QAPair>) {
    let n_entities = n_entities.max(1);
    let n_relations = n_relations.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let names = entity_pool(&mut rng, n_entities);
    let relations = relation_pool(n_relations);
    let entities: BTreeMap<String, String> =
        names.iter().map(|n| (uri_for(n), n.clone())).collect();
    let relation_labels: BTreeMap<String, String> =
        relations.iter().map(|(l, u)| (u.clone(), l.clone())).collect();

    let mut edges = BTreeSet::new();
    let mut pairs = Vec::with_capacity(n_questions);
    for q in 0..n_questions {
        let (rel_label, rel_uri) = &relations[rng.gen_range(0..relations.len())];
        let e1 = &names[rng.gen_range(0..names.len())];
        let e2 = &names[rng.gen_range(0..names.len())];
        let template = rng.gen_range(0..7);
        let text = match template {
            0 => format!("who is the {rel_label} of {e1}"),
            1 => format!("what is the {rel_label} of {e1}"),
            2 => format!("name the {rel_label} of {e1}"),
            3 => format!("tell me the {rel_label} of {e1}"),
            4 => format!("who is {e1}'s {rel_label}"),
            5 => format!("whose {rel_label} is {e1}"),
            _ => format!("is {e2} the {rel_label} of {e1}"),
        };
        let mut items = vec![
            LinkedItem {
                title: rel_label.clone(),
                uri: rel_uri.clone(),
                label: ItemKind::Relation,
            },
            LinkedItem {
                title: e1.clone(),
                uri: uri_for(e1),
                label: ItemKind::Entity,
            },
        ];
        if template == 6 {
            items.push(LinkedItem {
                title: e2.clone(),
                uri: uri_for(e2),
                label: ItemKind::Entity,
            });
        }
        edges.insert((uri_for(e1), rel_uri.clone(), uri_for(e2)));

        let mut chars = text.chars();
        let first = chars.next().unwrap().to_uppercase().collect::<String>();
        let question = format!("{first}{}?", chars.as_str());
        let pair = QAPair::new(format!("toy-{seed}-{q:04}"), question, items)
            .expect("templates always produce tokens");
        pairs.push(pair);
    }
    // background edges so one-hop neighbourhoods are not trivially exact
    for _ in 0..n_entities {
        let s = &names[rng.gen_range(0..names.len())];
        let o = &names[rng.gen_range(0..names.len())];
        let (_, r) = &relations[rng.gen_range(0..relations.len())];
        edges.insert((uri_for(s), r.clone(), uri_for(o)));
    }

    let kb = KnowledgeBase::new(entities, relation_labels, edges.into_iter().collect())
        .expect("generated edges reference generated labels");
    (kb, pairs)
}

/// Random unit-scale vectors for every word occurring in the questions and
/// in the knowledge-base labels.
pub fn toy_embeddings(
    seed: u64,
    dim: usize,
    kb: &KnowledgeBase,
    pairs: &[QAPair],
) -> crate::Result<EmbeddingStore> {
    let mut vocab = BTreeSet::new();
    for p in pairs {
        vocab.extend(p.tokens.iter().map(|t| t.normalized.clone()));
        for it in &p.items {
            vocab.extend(it.title.split_whitespace().map(super::case_fold));
        }
    }
    for label in kb.entities().values().chain(kb.relations().values()) {
        vocab.extend(label.split_whitespace().map(super::case_fold));
    }
    let mut store = EmbeddingStore::new(dim, OovPolicy::ZeroVector)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e11b);
    for w in vocab {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        store.insert(&w, v)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_for_fixed_seed() {
        let a = generate_toy_corpus(7, 10, 6, 80);
        let b = generate_toy_corpus(7, 10, 6, 80);
        assert_eq!(a.1.len(), 80);
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a"), dir.path().join("b"));
        crate::corpus::save_dataset(&p1, &a.1).unwrap();
        crate::corpus::save_dataset(&p2, &b.1).unwrap();
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
        assert_ne!(generate_toy_corpus(8, 10, 6, 80).1, a.1);
    }

    #[test]
    fn single_question() {
        let (_, pairs) = generate_toy_corpus(1, 3, 2, 1);
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn items_are_contained_in_kb() {
        for seed in 0..5 {
            let (kb, pairs) = generate_toy_corpus(seed, 10, 6, 80);
            for p in &pairs {
                assert!(!p.items.is_empty());
                for it in &p.items {
                    assert_eq!(kb.label_of(it.label, &it.uri), Some(it.title.as_str()));
                }
            }
        }
    }

    #[test]
    fn enough_multi_word_titles() {
        for n in [1, 2, 5, 10, 30] {
            let (kb, _) = generate_toy_corpus(3, n, 4, 5);
            let multi = kb.entities().values().filter(|l| l.contains(' ')).count();
            assert!(multi * 5 >= kb.entities().len(), "n={n}: {multi}");
            assert_eq!(kb.entities().len(), n);
        }
    }

    #[test]
    fn embeddings_cover_vocabulary() {
        let (kb, pairs) = generate_toy_corpus(7, 10, 6, 40);
        let store = toy_embeddings(7, 8, &kb, &pairs).unwrap();
        for p in &pairs {
            for t in &p.tokens {
                assert!(store.contains(&t.normalized), "{}", t.normalized);
            }
        }
    }
}
