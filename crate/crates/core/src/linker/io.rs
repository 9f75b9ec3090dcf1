//! Index files and link-result records.
//!
//! Index layout (little-endian): magic `QPIX`, `u32` version, `u8` kind,
//! `u8` case mode, `u64` seed, `u32` document count, then per document the
//! uri, label and trigram count; then `u32` trigram count and per trigram
//! the trigram and its `(document, count)` postings. Strings are a `u32`
//! byte length followed by UTF-8.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::{Doc, TrigramIndex};
use super::trigram::CaseMode;
use super::{Candidate, LinkResult, MentionLinks};
use crate::corpus::ItemKind;
use crate::mdp::PhraseMention;
use crate::{Error, Result};

pub const INDEX_MAGIC: &[u8; 4] = b"QPIX";
pub const INDEX_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

pub fn index_to_bytes(index: &TrigramIndex, seed: u64) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(INDEX_MAGIC);
    put_u32(&mut out, INDEX_VERSION);
    out.push(index.kind as u8);
    out.push(index.case_mode.tag());
    out.extend_from_slice(&seed.to_le_bytes());
    put_u32(&mut out, index.docs.len() as u32);
    for d in &index.docs {
        put_str(&mut out, &d.uri);
        put_str(&mut out, &d.label);
        put_u32(&mut out, d.length);
    }
    put_u32(&mut out, index.postings.len() as u32);
    for (g, list) in &index.postings {
        put_str(&mut out, g);
        put_u32(&mut out, list.len() as u32);
        for (doc, count) in list {
            put_u32(&mut out, *doc);
            put_u32(&mut out, *count);
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Format("index file is truncated".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::Format("index string is not UTF-8".into()))
    }
}

/// Parses an index file, returning the index and the seed it was written with.
pub fn index_from_bytes(bytes: &[u8]) -> Result<(TrigramIndex, u64)> {
    let mut r = Reader { buf: bytes };
    if r.take(4)? != INDEX_MAGIC {
        return Err(Error::Format("not an index file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != INDEX_VERSION {
        return Err(Error::Version {
            found: version,
            expected: INDEX_VERSION,
        });
    }
    let kind = match r.u8()? {
        1 => ItemKind::Relation,
        2 => ItemKind::Entity,
        t => return Err(Error::Format(format!("unknown index kind {t}"))),
    };
    let tag = r.u8()?;
    let case_mode =
        CaseMode::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown case mode {tag}")))?;
    let seed = r.u64()?;

    let n_docs = r.u32()? as usize;
    let mut docs: Vec<Doc> = Vec::with_capacity(n_docs.min(1 << 20));
    for _ in 0..n_docs {
        let uri = r.string()?;
        let label = r.string()?;
        let length = r.u32()?;
        if docs.last().is_some_and(|d| d.uri >= uri) {
            return Err(Error::Format(format!("documents out of order at {uri}")));
        }
        docs.push(Doc { uri, label, length });
    }

    let n_grams = r.u32()? as usize;
    let mut postings = BTreeMap::new();
    for _ in 0..n_grams {
        let g = r.string()?;
        let n = r.u32()? as usize;
        let mut list: Vec<(u32, u32)> = Vec::with_capacity(n.min(n_docs));
        for _ in 0..n {
            let doc = r.u32()?;
            let count = r.u32()?;
            if doc as usize >= n_docs || list.last().is_some_and(|(d, _)| *d >= doc) {
                return Err(Error::Format(format!("bad posting for trigram {g:?}")));
            }
            list.push((doc, count));
        }
        if postings.insert(g.clone(), list).is_some() {
            return Err(Error::Format(format!("duplicate trigram {g:?}")));
        }
    }
    if !r.buf.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", r.buf.len())));
    }
    Ok((
        TrigramIndex {
            kind,
            case_mode,
            docs,
            postings,
        },
        seed,
    ))
}

pub fn save_index(index: &TrigramIndex, seed: u64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, index_to_bytes(index, seed)).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<(TrigramIndex, u64)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    index_from_bytes(&bytes)
}

#[derive(Serialize, Deserialize)]
struct CandidateRecord {
    uri: String,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct MentionRecord {
    mention: String,
    span: [usize; 2],
    label: ItemKind,
    candidates: Vec<CandidateRecord>,
}

#[derive(Serialize, Deserialize)]
struct ResultRecord {
    id: String,
    mentions: Vec<MentionRecord>,
}

impl From<&LinkResult> for ResultRecord {
    fn from(r: &LinkResult) -> Self {
        ResultRecord {
            id: r.question_id.clone(),
            mentions: r
                .mentions
                .iter()
                .map(|m| MentionRecord {
                    mention: m.mention.text.clone(),
                    span: [m.mention.span.0, m.mention.span.1],
                    label: m.mention.label,
                    candidates: m
                        .candidates
                        .iter()
                        .map(|c| CandidateRecord {
                            uri: c.uri.clone(),
                            score: c.score(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl LinkResult {
    /// One JSON object: `{id, mentions: [{mention, span, label, candidates: [{uri, score}]}]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ResultRecord::from(self)).expect("link records serialize")
    }

    /// Inverse of [`LinkResult::to_json`]. Candidate labels are not stored
    /// and come back empty; scores come back as rank scores.
    pub fn from_json(line: &str) -> Result<Self> {
        let rec: ResultRecord = serde_json::from_str(line)?;
        Ok(LinkResult {
            question_id: rec.id,
            mentions: rec
                .mentions
                .into_iter()
                .map(|m| MentionLinks {
                    mention: PhraseMention {
                        text: m.mention,
                        label: m.label,
                        span: (m.span[0], m.span[1]),
                    },
                    candidates: m
                        .candidates
                        .into_iter()
                        .map(|c| Candidate {
                            uri: c.uri,
                            kg_label: String::new(),
                            retrieval_score: 0.0,
                            rank_score: Some(c.score),
                        })
                        .collect(),
                })
                .collect(),
        })
    }
}

/// Writes one JSON line per result.
pub fn write_link_results(path: impl AsRef<Path>, results: &[LinkResult]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in results {
        writeln!(w, "{}", r.to_json()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_link_results(path: impl AsRef<Path>) -> Result<Vec<LinkResult>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(LinkResult::from_json(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}
