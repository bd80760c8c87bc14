//! Episode files: JSON lines `{"id": …, "labels": […], "edges": [[u, v], …]}`.
//! Edges index into `labels`; the loader closes them transitively, checks
//! acyclicity and strictness, and canonicalizes.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alphabet::Alphabet;
use crate::candidates::{Candidate, CandidateSet};
use crate::episode::{Episode, EpisodeError};

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    labels: Vec<String>,
    #[serde(default)]
    edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<u64>,
}

#[derive(Debug, Error)]
pub enum EpisodeFileError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line} ({id}): {source}")]
    Episode { line: usize, id: String, source: EpisodeError },
    #[error("line {line}: duplicate id {id}")]
    DuplicateId { line: usize, id: String },
}

/// Parsed episode file. Episodes whose canonical form repeats an earlier line
/// are skipped and listed in `duplicates`.
#[derive(Debug, Default)]
pub struct EpisodeFile {
    pub candidates: CandidateSet,
    pub duplicates: Vec<String>,
}

/// Parses JSON lines, interning labels into `alphabet`. With `strictify`,
/// unordered equal-label vertices are chained instead of rejected.
pub fn parse_episodes(text: &str, alphabet: &mut Alphabet, strictify: bool) -> Result<EpisodeFile, EpisodeFileError> {
    let mut out = EpisodeFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(raw).map_err(|source| EpisodeFileError::Json { line, source })?;
        let labels = rec.labels.iter().map(|s| alphabet.intern(s)).collect();
        let err = |source| EpisodeFileError::Episode { line, id: rec.id.clone(), source };
        let closed = Episode::closed(labels, &rec.edges).map_err(err)?;
        let closed = if strictify { closed.strictify() } else { closed };
        let ep = Episode::new(closed.labels().to_vec(), &closed.edges(), alphabet).map_err(err)?;
        if out.candidates.position(&rec.id).is_some() {
            return Err(EpisodeFileError::DuplicateId { line, id: rec.id });
        }
        if !out.candidates.insert(rec.id.clone(), ep, rec.support) {
            out.duplicates.push(rec.id);
        }
    }
    Ok(out)
}

pub fn load_episodes(path: &Path, alphabet: &mut Alphabet, strictify: bool) -> Result<EpisodeFile, EpisodeFileError> {
    let text = fs::read_to_string(path).map_err(|source| EpisodeFileError::Read { path: path.into(), source })?;
    parse_episodes(&text, alphabet, strictify)
}

/// One JSON object per line; edges are the transitive reduction.
pub fn episodes_to_jsonl(candidates: &[Candidate], alphabet: &Alphabet) -> String {
    let mut out = String::new();
    for c in candidates {
        let rec = Record {
            id: c.id.clone(),
            labels: c.episode.labels().iter().map(|&l| alphabet.name(l).to_owned()).collect(),
            edges: c.episode.transitive_reduction(),
            support: c.support,
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn save_episodes(candidates: &[Candidate], alphabet: &Alphabet, path: &Path) -> Result<(), EpisodeFileError> {
    let werr = |source| EpisodeFileError::Write { path: path.into(), source };
    let mut w = BufWriter::new(fs::File::create(path).map_err(werr)?);
    w.write_all(episodes_to_jsonl(candidates, alphabet).as_bytes()).map_err(werr)?;
    w.flush().map_err(werr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closes_and_canonicalizes() {
        let mut a = Alphabet::new();
        let f =
            parse_episodes(r#"{"id":"g","labels":["d","b","c","a"],"edges":[[3,1],[3,2],[1,0],[2,0]]}"#, &mut a, false)
                .unwrap();
        let ep = &f.candidates.get(0).episode;
        assert_eq!(ep.num_edges(), 5);
        assert_eq!(ep.notation(&a), "a,b,c,d/0>1,0>2,1>3,2>3");
    }

    #[test]
    fn strictness_is_checked_or_repaired() {
        let mut a = Alphabet::new();
        let text = r#"{"id":"aa","labels":["a","a"],"edges":[]}"#;
        assert!(matches!(parse_episodes(text, &mut a, false), Err(EpisodeFileError::Episode { line: 1, .. })));
        let f = parse_episodes(text, &mut a, true).unwrap();
        assert_eq!(f.candidates.get(0).episode.notation(&a), "a>a");
    }

    #[test]
    fn rejects_cycles_bad_json_and_duplicate_ids() {
        let mut a = Alphabet::new();
        let cyc = r#"{"id":"c","labels":["a","b"],"edges":[[0,1],[1,0]]}"#;
        assert!(matches!(parse_episodes(cyc, &mut a, false), Err(EpisodeFileError::Episode { .. })));
        assert!(matches!(parse_episodes("{", &mut a, false), Err(EpisodeFileError::Json { line: 1, .. })));
        let dup = "{\"id\":\"x\",\"labels\":[\"a\"]}\n{\"id\":\"x\",\"labels\":[\"b\"]}\n";
        assert!(matches!(parse_episodes(dup, &mut a, false), Err(EpisodeFileError::DuplicateId { line: 2, .. })));
    }

    #[test]
    fn duplicate_forms_are_skipped() {
        let mut a = Alphabet::new();
        let text = "{\"id\":\"p\",\"labels\":[\"a\",\"b\"],\"edges\":[[0,1]]}\n\n{\"id\":\"q\",\"labels\":[\"b\",\"a\"],\"edges\":[[1,0]]}\n";
        let f = parse_episodes(text, &mut a, false).unwrap();
        assert_eq!(f.candidates.len(), 1);
        assert_eq!(f.duplicates, vec!["q".to_string()]);
    }

    #[test]
    fn round_trip() {
        let mut a = Alphabet::new();
        let text = "{\"id\":\"d\",\"labels\":[\"a\",\"b\",\"c\",\"d\"],\"edges\":[[0,1],[0,2],[1,3],[2,3]],\"support\":4}\n{\"id\":\"s\",\"labels\":[\"b\",\"a\",\"b\"],\"edges\":[[0,1],[1,2]]}\n";
        let f = parse_episodes(text, &mut a, false).unwrap();
        let out = episodes_to_jsonl(f.candidates.items(), &a);
        let g = parse_episodes(&out, &mut a, false).unwrap();
        assert_eq!(f.candidates.items(), g.candidates.items());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        save_episodes(f.candidates.items(), &a, &p).unwrap();
        let h = load_episodes(&p, &mut a, false).unwrap();
        assert_eq!(f.candidates.items(), h.candidates.items());
    }
}
