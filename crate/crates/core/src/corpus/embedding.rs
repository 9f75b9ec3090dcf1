use std::borrow::Cow;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{case_fold, Token};
use crate::{Error, Result};

/// How words missing from the vector table are embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    #[default]
    ZeroVector,
    /// Hash the word into one of `n` buckets, each with a fixed pseudo-random
    /// vector.
    HashBucket(u32),
}

/// Word vectors keyed by case-folded word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    oov: OovPolicy,
    zero: Vec<f64>,
}

// FNV-1a; stable across platforms and toolchains, unlike `DefaultHasher`.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl EmbeddingStore {
    pub fn new(dim: usize, oov: OovPolicy) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDims("embedding dimension must be positive".into()));
        }
        if oov == OovPolicy::HashBucket(0) {
            return Err(Error::InvalidConfig("hash bucket count must be positive".into()));
        }
        Ok(EmbeddingStore {
            dim,
            vectors: HashMap::new(),
            oov,
            zero: vec![0.0; dim],
        })
    }

    /// Inserts (or replaces) the vector for `word`, keyed by its case-folded form.
    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::InvalidDims(format!(
                "vector for '{word}' has {} components, store dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(case_fold(word), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn oov_policy(&self) -> OovPolicy {
        self.oov
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(&case_fold(word))
    }

    pub fn embed(&self, token: &Token) -> Cow<'_, [f64]> {
        self.lookup(&token.normalized)
    }

    /// Vector for an already normalized word; never fails.
    pub fn lookup(&self, normalized: &str) -> Cow<'_, [f64]> {
        if let Some(v) = self.vectors.get(normalized) {
            return Cow::Borrowed(v);
        }
        match self.oov {
            OovPolicy::ZeroVector => Cow::Borrowed(&self.zero),
            OovPolicy::HashBucket(n) => {
                let bucket = fnv1a(normalized.as_bytes()) % u64::from(n);
                let mut rng = ChaCha8Rng::seed_from_u64(bucket ^ 0x9e37_79b9_7f4a_7c15);
                Cow::Owned((0..self.dim).map(|_| rng.gen_range(-0.5..0.5)).collect())
            }
        }
    }

    /// Reads the usual text layout: a word followed by `d` space-separated
    /// numbers per line. The dimension is taken from the first line.
    pub fn load(path: impl AsRef<Path>, oov: OovPolicy) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut store: Option<EmbeddingStore> = None;
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let parse_err = |reason: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let vector = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(e.to_string()))?;
            let s = match &mut store {
                Some(s) => s,
                None => store.insert(
                    EmbeddingStore::new(vector.len(), oov).map_err(|e| parse_err(e.to_string()))?,
                ),
            };
            if vector.len() != s.dim {
                return Err(parse_err(format!(
                    "expected {} components, found {}",
                    s.dim,
                    vector.len()
                )));
            }
            // first occurrence wins when two words fold to the same key
            s.vectors.entry(case_fold(word)).or_insert(vector);
        }
        store.ok_or_else(|| Error::EmptyFile(path.to_path_buf()))
    }

    /// Writes the table sorted by word, with round-trip exact decimals.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut words: Vec<_> = self.vectors.iter().collect();
        words.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (w, v) in words {
            out.push_str(w);
            for x in v {
                out.push(' ');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn tok(s: &str) -> Token {
        tokenize(s, false).unwrap().remove(0)
    }

    #[test]
    fn known_word_lookup_is_case_insensitive() {
        let mut s = EmbeddingStore::new(3, OovPolicy::ZeroVector).unwrap();
        s.insert("Wife", vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(&*s.embed(&tok("wife")), &[1.0, 2.0, 3.0]);
        assert_eq!(&*s.embed(&tok("WIFE")), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_vector_for_oov() {
        let s = EmbeddingStore::new(4, OovPolicy::ZeroVector).unwrap();
        assert_eq!(&*s.embed(&tok("barak")), &[0.0; 4]);
    }

    #[test]
    fn hash_bucket_is_deterministic() {
        let s = EmbeddingStore::new(5, OovPolicy::HashBucket(100)).unwrap();
        let a = s.embed(&tok("barak")).into_owned();
        let b = s.embed(&tok("barak")).into_owned();
        assert_eq!(a.len(), 5);
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert!(a.iter().any(|x| *x != 0.0));
        let other = EmbeddingStore::new(5, OovPolicy::HashBucket(100)).unwrap();
        assert_eq!(other.embed(&tok("barak")).into_owned(), a);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let mut s = EmbeddingStore::new(2, OovPolicy::ZeroVector).unwrap();
        assert!(s.insert("x", vec![1.0]).is_err());
        assert!(EmbeddingStore::new(0, OovPolicy::ZeroVector).is_err());
    }

    #[test]
    fn file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        fs::write(&p, "wife 0.1 -0.25\nSpouse 1e-3 2\n").unwrap();
        let s = EmbeddingStore::load(&p, OovPolicy::ZeroVector).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(&*s.lookup("spouse"), &[0.001, 2.0]);
        let q = dir.path().join("w.txt");
        s.save(&q).unwrap();
        assert_eq!(EmbeddingStore::load(&q, OovPolicy::ZeroVector).unwrap(), s);

        fs::write(&p, "a 1 2\nb 1\n").unwrap();
        assert!(matches!(
            EmbeddingStore::load(&p, OovPolicy::ZeroVector),
            Err(Error::Parse { line: 2, .. })
        ));
        fs::write(&p, "").unwrap();
        assert!(EmbeddingStore::load(&p, OovPolicy::ZeroVector).is_err());
    }
}
