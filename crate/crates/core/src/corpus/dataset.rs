use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LinkedItem, QAPair};
use crate::{Error, Result};

/// Questions loaded from a dataset file.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub pairs: Vec<QAPair>,
    /// Records dropped because their formal query had no linked items.
    pub skipped: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    question: String,
    #[serde(default)]
    items: Vec<LinkedItem>,
}

/// Reads a JSON-lines dataset: one `{id, question, items:[{title, uri, label}]}`
/// object per line. Blank lines are ignored.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Dataset::default();
    let mut records = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records += 1;
        let malformed = |id: Option<String>, reason: String| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: lineno + 1,
            id,
            reason,
        };
        let rec: Record = serde_json::from_str(line).map_err(|e| {
            let id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(|i| i.as_str()).map(str::to_string));
            malformed(id, e.to_string())
        })?;
        if let Some(bad) = rec
            .items
            .iter()
            .find(|i| i.title.trim().is_empty() || i.uri.trim().is_empty())
        {
            return Err(malformed(
                Some(rec.id.clone()),
                format!("linked item with empty title or uri: {bad:?}"),
            ));
        }
        if rec.items.is_empty() {
            out.skipped += 1;
            continue;
        }
        let pair = QAPair::new(rec.id.clone(), rec.question, rec.items)
            .map_err(|e| malformed(Some(rec.id), e.to_string()))?;
        out.pairs.push(pair);
    }
    if records == 0 {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    if out.skipped > 0 {
        log::warn!(
            "{}: skipped {} record(s) without linked items",
            path.display(),
            out.skipped
        );
    }
    Ok(out)
}

/// Writes pairs in the same line format `load_dataset` reads.
pub fn save_dataset(path: impl AsRef<Path>, pairs: &[QAPair]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for p in pairs {
        let rec = Record {
            id: p.id.clone(),
            question: p.question.clone(),
            items: p.items.clone(),
        };
        serde_json::to_writer(&mut buf, &rec)?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}
