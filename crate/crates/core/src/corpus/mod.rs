//! Questions, formal-query items, knowledge-base tables and word vectors.

mod dataset;
mod embedding;
mod kb;
mod tokenize;
mod toy;

use serde::{Deserialize, Serialize};

pub use dataset::{load_dataset, save_dataset, Dataset};
pub use embedding::{EmbeddingStore, OovPolicy};
pub use kb::KnowledgeBase;
pub use tokenize::{case_fold, tokenize};
pub use toy::{generate_toy_corpus, toy_embeddings};

/// One word of a question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// Case-folded surface; the key used for embedding lookups.
    pub normalized: String,
    pub index: usize,
}

/// Which side of the knowledge graph a linked item (or mention) refers to.
///
/// The discriminants match the action values of the labeling policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Relation = 1,
    Entity = 2,
}

impl ItemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::Relation => "relation",
            ItemKind::Entity => "entity",
        }
    }
}

impl std::fmt::Display for ItemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A `(title, uri, label)` constituent of a formal query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkedItem {
    pub title: String,
    pub uri: String,
    pub label: ItemKind,
}

/// A question paired with the linked items of its formal query.
#[derive(Debug, Clone, PartialEq)]
pub struct QAPair {
    pub id: String,
    pub question: String,
    pub tokens: Vec<Token>,
    /// Deduplicated, in first-seen order.
    pub items: Vec<LinkedItem>,
}

impl QAPair {
    /// Builds a pair from raw text. Duplicate items are dropped.
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        items: impl IntoIterator<Item = LinkedItem>,
    ) -> crate::Result<Self> {
        let question = question.into();
        let tokens = tokenize(&question, false)?;
        let mut uniq: Vec<LinkedItem> = Vec::new();
        for item in items {
            if !uniq.contains(&item) {
                uniq.push(item);
            }
        }
        Ok(QAPair {
            id: id.into(),
            question,
            tokens,
            items: uniq,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn items_of(&self, kind: ItemKind) -> impl Iterator<Item = &LinkedItem> {
        self.items.iter().filter(move |i| i.label == kind)
    }

    /// Same pair with the question text lower-cased.
    pub fn lowercased(&self) -> Self {
        let question = self.question.to_lowercase();
        let tokens = tokenize(&question, false).expect("lower-casing keeps tokens");
        QAPair {
            id: self.id.clone(),
            question,
            tokens,
            items: self.items.clone(),
        }
    }
}
