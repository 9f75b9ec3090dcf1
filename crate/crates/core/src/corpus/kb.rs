use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use super::ItemKind;
use crate::{Error, Result};

pub const ENTITIES_FILE: &str = "entities.tsv";
pub const RELATIONS_FILE: &str = "relations.tsv";
pub const EDGES_FILE: &str = "edges.tsv";

/// Entity and relation labels plus (optional) subject-relation-object edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    entities: BTreeMap<String, String>,
    relations: BTreeMap<String, String>,
    edges: Vec<(String, String, String)>,
    incident: BTreeMap<String, BTreeSet<String>>,
}

impl KnowledgeBase {
    pub fn new(
        entities: BTreeMap<String, String>,
        relations: BTreeMap<String, String>,
        edges: Vec<(String, String, String)>,
    ) -> Result<Self> {
        let mut incident: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (s, r, o) in &edges {
            if !relations.contains_key(r) {
                return Err(Error::InconsistentKb(format!("edge relation {r} has no label")));
            }
            for e in [s, o] {
                if !entities.contains_key(e) {
                    return Err(Error::InconsistentKb(format!("edge entity {e} has no label")));
                }
                incident.entry(e.clone()).or_default().insert(r.clone());
            }
        }
        Ok(KnowledgeBase {
            entities,
            relations,
            edges,
            incident,
        })
    }

    pub fn entities(&self) -> &BTreeMap<String, String> {
        &self.entities
    }

    pub fn relations(&self) -> &BTreeMap<String, String> {
        &self.relations
    }

    pub fn labels(&self, kind: ItemKind) -> &BTreeMap<String, String> {
        match kind {
            ItemKind::Entity => &self.entities,
            ItemKind::Relation => &self.relations,
        }
    }

    pub fn label_of(&self, kind: ItemKind, uri: &str) -> Option<&str> {
        self.labels(kind).get(uri).map(String::as_str)
    }

    pub fn edges(&self) -> &[(String, String, String)] {
        &self.edges
    }

    /// Relations on edges where `entity` is subject or object, sorted by uri.
    pub fn incident_relations(&self, entity: &str) -> impl Iterator<Item = &str> {
        self.incident
            .get(entity)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn contains(&self, kind: ItemKind, uri: &str) -> bool {
        self.labels(kind).contains_key(uri)
    }

    /// Loads `entities.tsv`, `relations.tsv` and, if present, `edges.tsv`
    /// from a directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entities = read_labels(&dir.join(ENTITIES_FILE))?;
        let relations = read_labels(&dir.join(RELATIONS_FILE))?;
        let edges_path = dir.join(EDGES_FILE);
        let edges = if edges_path.exists() {
            read_edges(&edges_path)?
        } else {
            Vec::new()
        };
        KnowledgeBase::new(entities, relations, edges)
    }

    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let labels = |m: &BTreeMap<String, String>| {
            m.iter().map(|(u, l)| format!("{u}\t{l}\n")).collect::<String>()
        };
        let edges: String = self
            .edges
            .iter()
            .map(|(s, r, o)| format!("{s}\t{r}\t{o}\n"))
            .collect();
        for (name, body) in [
            (ENTITIES_FILE, labels(&self.entities)),
            (RELATIONS_FILE, labels(&self.relations)),
            (EDGES_FILE, edges),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn tsv_rows(path: &Path, columns: usize) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(|c| c.trim().to_string()).collect();
        if cols.len() != columns || cols.iter().any(String::is_empty) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: format!("expected {columns} non-empty tab-separated columns"),
            });
        }
        rows.push(cols);
    }
    Ok(rows)
}

fn read_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    Ok(tsv_rows(path, 2)?
        .into_iter()
        .map(|mut c| {
            let label = c.pop().unwrap();
            (c.pop().unwrap(), label)
        })
        .collect())
}

fn read_edges(path: &Path) -> Result<Vec<(String, String, String)>> {
    Ok(tsv_rows(path, 3)?
        .into_iter()
        .map(|c| {
            let [s, r, o]: [String; 3] = c.try_into().unwrap();
            (s, r, o)
        })
        .collect())
}
