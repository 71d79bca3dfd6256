//! User profile index terms and their JSON store.
//!
//! The store is a single JSON object mapping profile ids to `{term: weight}`
//! maps. Writes are serialized and land through an atomic rename, so a
//! concurrent reader sees either the previous or the new file, never a torn
//! one.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::write_atomic;
use crate::scorer::tokenize;

pub const DEFAULT_TERM_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTerm {
    pub term: String,
    pub weight: f64,
}

impl ProfileTerm {
    pub fn new(term: impl Into<String>) -> Self {
        ProfileTerm {
            term: term.into(),
            weight: DEFAULT_TERM_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub profile_id: String,
    terms: BTreeMap<String, f64>,
}

impl Profile {
    pub fn empty(profile_id: impl Into<String>) -> Self {
        Profile {
            profile_id: profile_id.into(),
            terms: BTreeMap::new(),
        }
    }

    /// Builds a profile from already-normalized terms. Later duplicates
    /// overwrite earlier ones.
    pub fn from_terms<'a>(
        profile_id: impl Into<String>,
        terms: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Self {
        Profile {
            profile_id: profile_id.into(),
            terms: terms.into_iter().map(|(t, w)| (t.to_string(), w)).collect(),
        }
    }

    pub fn from_profile_terms(profile_id: impl Into<String>, terms: Vec<ProfileTerm>) -> Self {
        Profile {
            profile_id: profile_id.into(),
            terms: terms.into_iter().map(|t| (t.term, t.weight)).collect(),
        }
    }

    /// `(term, weight)` pairs in term order.
    pub fn terms(&self) -> impl Iterator<Item = (&str, f64)> {
        self.terms.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn term_map(&self) -> &BTreeMap<String, f64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (term, weight) in &self.terms {
            if tokenize(term) != [term.as_str()] {
                return Err(Error::InvalidProfile(format!(
                    "{term:?} is not a normalized token"
                )));
            }
            if !weight.is_finite() || *weight < 0.0 {
                return Err(Error::InvalidProfile(format!(
                    "weight of {term:?} must be a finite non-negative number"
                )));
            }
        }
        Ok(())
    }
}

/// Tokenizes each raw string; every token becomes a term of weight 1.0.
/// Order of first occurrence is kept and duplicates collapse.
pub fn normalize_terms<S: AsRef<str>>(raw: &[S]) -> Vec<ProfileTerm> {
    let mut seen = HashSet::new();
    raw.iter()
        .flat_map(|r| tokenize(r.as_ref()))
        .filter(|t| seen.insert(t.clone()))
        .map(ProfileTerm::new)
        .collect()
}

type StoreDoc = BTreeMap<String, BTreeMap<String, f64>>;

static WRITE_LOCK: Mutex<()> = Mutex::new(());

/// Handle on a profile store file.
#[derive(Debug, Clone)]
pub struct ProfileStore {
    path: PathBuf,
}

impl ProfileStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        ProfileStore { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// The stored profile, or an empty one when the id (or the whole store
    /// file) does not exist yet.
    pub fn load(&self, profile_id: &str) -> Result<Profile> {
        let mut doc = self.read_doc()?;
        let profile = match doc.remove(profile_id) {
            Some(terms) => Profile {
                profile_id: profile_id.to_string(),
                terms,
            },
            None => Profile::empty(profile_id),
        };
        profile
            .validate()
            .map_err(|e| self.corrupt(e.to_string()))?;
        Ok(profile)
    }

    /// Inserts or replaces `profile` under its id.
    pub fn save(&self, profile: &Profile) -> Result<()> {
        profile.validate()?;
        let _guard = WRITE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let mut doc = self.read_doc()?;
        doc.insert(profile.profile_id.clone(), profile.terms.clone());
        let mut text = serde_json::to_string_pretty(&doc).expect("store serializes");
        text.push('\n');
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        }
        write_atomic(&self.path, text.as_bytes())
            .map_err(|e| Error::io(format!("writing profile store {}", self.path.display()), e))
    }

    fn read_doc(&self) -> Result<StoreDoc> {
        match std::fs::read_to_string(&self.path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| self.corrupt(e.to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(StoreDoc::new()),
            Err(e) => Err(Error::io(
                format!("reading profile store {}", self.path.display()),
                e,
            )),
        }
    }

    fn corrupt(&self, reason: String) -> Error {
        Error::StoreCorrupt {
            path: self.path.clone(),
            reason,
        }
    }
}

pub fn load_profile(store: &Path, profile_id: &str) -> Result<Profile> {
    ProfileStore::new(store).load(profile_id)
}

pub fn save_profile(store: &Path, profile: &Profile) -> Result<()> {
    ProfileStore::new(store).save(profile)
}
