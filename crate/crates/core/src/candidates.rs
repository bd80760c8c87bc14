//! The collection of episodes being ranked, indexed by label multiset so
//! same-vertex superepisodes can be found directly.

use std::collections::HashMap;

use crate::alphabet::Label;
use crate::episode::{is_proper_superepisode_same_vertices, Episode};

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub episode: Episode,
    pub support: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct CandidateSet {
    items: Vec<Candidate>,
    by_key: HashMap<Vec<Label>, Vec<usize>>,
    by_form: HashMap<Episode, usize>,
    by_id: HashMap<String, usize>,
}

impl CandidateSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a canonical episode. Returns `false` (and keeps the first) if the
    /// episode or the id is already present.
    pub fn insert(&mut self, id: String, episode: Episode, support: Option<u64>) -> bool {
        if self.by_form.contains_key(&episode) || self.by_id.contains_key(&id) {
            return false;
        }
        let i = self.items.len();
        self.by_key.entry(episode.label_key()).or_default().push(i);
        self.by_form.insert(episode.clone(), i);
        self.by_id.insert(id.clone(), i);
        self.items.push(Candidate { id, episode, support });
        true
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Candidate] {
        &self.items
    }

    pub fn get(&self, i: usize) -> &Candidate {
        &self.items[i]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn find(&self, episode: &Episode) -> Option<usize> {
        self.by_form.get(episode).copied()
    }

    pub fn contains(&self, episode: &Episode) -> bool {
        self.by_form.contains_key(episode)
    }

    pub fn set_support(&mut self, i: usize, support: u64) {
        self.items[i].support = Some(support);
    }

    /// Indices of candidates over the same vertices whose edge set strictly
    /// contains the episode's, in insertion order.
    pub fn superepisodes_of<'a>(&'a self, episode: &'a Episode) -> impl Iterator<Item = usize> + 'a {
        self.by_key
            .get(&episode.label_key())
            .into_iter()
            .flatten()
            .copied()
            .filter(move |&i| is_proper_superepisode_same_vertices(episode, &self.items[i].episode))
    }

    /// Keeps the first `n` candidates.
    pub fn truncate(&mut self, n: usize) {
        let items: Vec<Candidate> = self.items.drain(..).take(n).collect();
        *self = CandidateSet::new();
        for c in items {
            self.insert(c.id, c.episode, c.support);
        }
    }
}

impl FromIterator<Candidate> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = Candidate>>(iter: I) -> Self {
        let mut set = CandidateSet::new();
        for c in iter {
            set.insert(c.id, c.episode, c.support);
        }
        set
    }
}
