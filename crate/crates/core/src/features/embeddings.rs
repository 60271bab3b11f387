//! Word vectors in word2vec/GloVe text format.
//!
//! An optional `N D` header line is followed by one `token v1 ... vD` line
//! per word. Vocabulary words missing from the file get a pseudo-random
//! vector seeded by a hash of the word, so the same word always receives the
//! same vector.

use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::vocab::{Vocab, PAD, UNK};
use crate::error::{Error, Result};

pub const EMBEDDING_DIM: usize = 200;
const OOV_RANGE: f64 = 0.25;

/// Row-major `[rows × dim]` vectors indexed like the word vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
    pub trainable: bool,
    /// Rows taken from the embedding file.
    pub found: usize,
}

impl EmbeddingTable {
    /// Table from raw row-major values, e.g. vectors trained elsewhere.
    /// Panics if `data` is not a whole number of rows.
    pub fn from_parts(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "data length must be a multiple of dim");
        let rows = data.len() / dim;
        EmbeddingTable { dim, data, trainable: true, found: rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn vector(&self, index: u32) -> &[f64] {
        let i = index as usize * self.dim;
        &self.data[i..i + self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Stable 64-bit hash of a token (first eight bytes of its SHA-256).
pub fn token_hash(token: &str) -> u64 {
    let digest = Sha256::digest(token.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Components uniform in [-0.25, 0.25), fixed by the token.
pub fn hashed_vector(token: &str, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(token_hash(token));
    (0..dim).map(|_| rng.gen::<f64>() * 2.0 * OOV_RANGE - OOV_RANGE).collect()
}

/// A table with no pretrained vectors: every word is hashed, PAD is zero.
pub fn synthesize_embeddings(vocab: &Vocab, dim: usize) -> EmbeddingTable {
    let rows = vocab.words.len();
    let mut data = vec![0.0; rows * dim];
    for id in 1..rows {
        let token = vocab.words.token(id as u32).expect("dense index");
        data[id * dim..(id + 1) * dim].copy_from_slice(&hashed_vector(token, dim));
    }
    EmbeddingTable { dim, data, trainable: true, found: 0 }
}

/// Loads vectors for the vocabulary's words. File tokens are matched
/// lowercased; the first vector for a word wins. UNK receives the mean of
/// the loaded vectors.
pub fn load_embeddings<R: BufRead>(reader: R, vocab: &Vocab, dim: usize) -> Result<EmbeddingTable> {
    let rows = vocab.words.len();
    let mut data = vec![0.0; rows * dim];
    let mut loaded = vec![false; rows];
    let mut first = true;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let values: Vec<&str> = fields.collect();
        if std::mem::take(&mut first) && values.len() == 1 {
            if let (Ok(_), Ok(d)) = (token.parse::<usize>(), values[0].parse::<usize>()) {
                if d != dim {
                    return Err(Error::parse(line_no, None, format!("embedding dimension {d}, expected {dim}")));
                }
                continue;
            }
        }
        if values.len() != dim {
            return Err(Error::parse(line_no, None, format!("{} vector components, expected {dim}", values.len())));
        }
        let id = vocab.word_id(token) as usize;
        if id == UNK as usize || id == PAD as usize || loaded[id] {
            continue;
        }
        let row = &mut data[id * dim..(id + 1) * dim];
        for (slot, v) in row.iter_mut().zip(&values) {
            let x: f64 = v.parse().map_err(|_| Error::parse(line_no, None, format!("invalid number {v:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(line_no, None, format!("non-finite component {v:?}")));
            }
            *slot = x;
        }
        loaded[id] = true;
    }

    let found = loaded.iter().filter(|l| **l).count();
    for id in 2..rows {
        if !loaded[id] {
            let token = vocab.words.token(id as u32).expect("dense index");
            data[id * dim..(id + 1) * dim].copy_from_slice(&hashed_vector(token, dim));
        }
    }
    let unk = UNK as usize * dim;
    if found > 0 {
        for d in 0..dim {
            let sum: f64 = (0..rows).filter(|&r| loaded[r]).map(|r| data[r * dim + d]).sum();
            data[unk + d] = sum / found as f64;
        }
    } else {
        data[unk..unk + dim].copy_from_slice(&hashed_vector("<UNK>", dim));
    }
    Ok(EmbeddingTable { dim, data, trainable: true, found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::VocabBuilder;

    fn vocab(words: &[&str]) -> Vocab {
        let mut b = VocabBuilder::new();
        for w in words {
            b.add_word(w);
        }
        b.build(1).unwrap()
    }

    fn line(token: &str, values: &[f64]) -> String {
        let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        format!("{token} {}\n", vals.join(" "))
    }

    #[test]
    fn loads_exact_values() {
        let v = vocab(&["a"]);
        let values: Vec<f64> = (0..EMBEDDING_DIM).map(|i| i as f64 / 7.0 - 3.0).collect();
        let text = format!("1 {EMBEDDING_DIM}\n{}", line("a", &values));
        let table = load_embeddings(text.as_bytes(), &v, EMBEDDING_DIM).unwrap();
        assert_eq!(table.vector(v.word_id("a")), &values[..]);
        assert_eq!(table.found, 1);
        assert!(table.vector(PAD).iter().all(|x| *x == 0.0));
        // UNK is the mean of the single loaded vector.
        assert_eq!(table.vector(UNK), &values[..]);
    }

    #[test]
    fn missing_tokens_are_deterministic() {
        let v = vocab(&["a", "zebrafish"]);
        let text = line("a", &[0.5; EMBEDDING_DIM]);
        let first = load_embeddings(text.as_bytes(), &v, EMBEDDING_DIM).unwrap();
        let second = load_embeddings(text.as_bytes(), &v, EMBEDDING_DIM).unwrap();
        let id = v.word_id("zebrafish");
        assert_eq!(first.vector(id), second.vector(id));
        assert!(first.vector(id).iter().all(|x| (-0.25..0.25).contains(x)));
        assert_eq!(first.vector(id), &hashed_vector("zebrafish", EMBEDDING_DIM)[..]);
    }

    #[test]
    fn wrong_dimension_is_an_error() {
        let v = vocab(&["a"]);
        assert!(matches!(load_embeddings("1 50\n".as_bytes(), &v, EMBEDDING_DIM), Err(Error::Parse { line: 1, .. })));
        let text = line("a", &[0.1; 50]);
        assert!(load_embeddings(text.as_bytes(), &v, EMBEDDING_DIM).is_err());
    }

    #[test]
    fn malformed_number_reports_line() {
        let v = vocab(&["a", "b"]);
        let mut text = line("a", &[0.1; 4]);
        text.push_str("b 0.1 x 0.3 0.4\n");
        assert!(matches!(load_embeddings(text.as_bytes(), &v, 4), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn file_tokens_match_lowercased() {
        let v = vocab(&["brca1"]);
        let text = line("BRCA1", &[1.0, 2.0]);
        let table = load_embeddings(text.as_bytes(), &v, 2).unwrap();
        assert_eq!(table.vector(v.word_id("brca1")), &[1.0, 2.0]);
    }

    #[test]
    fn synthesized_table_has_zero_pad() {
        let v = vocab(&["a", "b"]);
        let table = synthesize_embeddings(&v, 8);
        assert_eq!(table.rows(), 4);
        assert!(table.vector(PAD).iter().all(|x| *x == 0.0));
        assert_eq!(table.vector(3), &hashed_vector("b", 8)[..]);
    }
}
