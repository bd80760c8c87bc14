//! Sequence corpora: one sequence per line, whitespace-separated tokens.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::alphabet::{Alphabet, Label};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path} is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    alphabet: Alphabet,
    sequences: Vec<Vec<Label>>,
    /// sequence length -> number of sequences with that length
    lengths: BTreeMap<usize, usize>,
    /// blank lines skipped while parsing
    skipped_blank: usize,
}

impl Dataset {
    pub fn new(alphabet: Alphabet) -> Self {
        Dataset { alphabet, ..Default::default() }
    }

    pub fn from_sequences(alphabet: Alphabet, sequences: Vec<Vec<Label>>) -> Self {
        let mut ds = Dataset::new(alphabet);
        for s in sequences {
            ds.push(s);
        }
        ds
    }

    /// Parses whitespace-separated tokens, interning symbols in order of
    /// first appearance.
    pub fn parse(text: &str) -> Self {
        let mut ds = Dataset::default();
        for line in text.lines() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                ds.skipped_blank += 1;
                continue;
            }
            let seq = toks.iter().map(|t| ds.alphabet.intern(t)).collect();
            ds.push(seq);
        }
        ds
    }

    /// Convenience for tests: each string is one sequence, one char per event.
    pub fn from_strs(rows: &[&str]) -> Self {
        let text: Vec<String> =
            rows.iter().map(|r| r.chars().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")).collect();
        let mut ds = Dataset::default();
        for line in text {
            let seq = line.split_whitespace().map(|t| ds.alphabet.intern(t)).collect();
            ds.push(seq);
        }
        ds
    }

    pub fn push(&mut self, seq: Vec<Label>) {
        *self.lengths.entry(seq.len()).or_insert(0) += 1;
        self.sequences.push(seq);
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn alphabet_mut(&mut self) -> &mut Alphabet {
        &mut self.alphabet
    }

    pub fn sequences(&self) -> &[Vec<Label>] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Length histogram, ascending by length.
    pub fn length_counts(&self) -> &BTreeMap<usize, usize> {
        &self.lengths
    }

    pub fn max_length(&self) -> usize {
        self.lengths.keys().next_back().copied().unwrap_or(0)
    }

    pub fn num_events(&self) -> usize {
        self.lengths.iter().map(|(l, c)| l * c).sum()
    }

    pub fn skipped_blank_lines(&self) -> usize {
        self.skipped_blank
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for seq in &self.sequences {
            let toks: Vec<&str> = seq.iter().map(|&l| self.alphabet.name(l)).collect();
            out.push_str(&toks.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn load_sequences(path: &Path) -> Result<Dataset, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Read { path: path.into(), source })?;
    let text = String::from_utf8(bytes).map_err(|_| DatasetError::Encoding { path: path.into() })?;
    Ok(Dataset::parse(&text))
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let werr = |source| DatasetError::Write { path: path.into(), source };
    let file = fs::File::create(path).map_err(werr)?;
    let mut w = BufWriter::new(file);
    w.write_all(dataset.to_text().as_bytes()).map_err(werr)?;
    w.flush().map_err(werr)
}
