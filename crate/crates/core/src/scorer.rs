//! Segment weighting and candidate selection.
//!
//! A segment's weight is a length-normalised term density: the fraction of
//! its tokens that are query terms, and the weighted fraction that are profile
//! terms. The combined score is `alpha * query_density + beta * profile_density`
//! and a segment becomes a candidate when that score is strictly above `delta`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::segmenter::{Segment, SegmentMatrix};

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_MAX_CANDIDATES: usize = 12;

/// Candidates whose token sets overlap more than this are near-duplicates.
pub const DUPLICATE_JACCARD: f64 = 0.9;

const ENGLISH_STOPWORDS: &str = include_str!("stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords {
    name: String,
    words: Arc<BTreeSet<String>>,
}

impl Stopwords {
    /// The built-in English list.
    pub fn english() -> Self {
        static ENGLISH: OnceLock<Stopwords> = OnceLock::new();
        ENGLISH
            .get_or_init(|| Stopwords::from_list("english", ENGLISH_STOPWORDS))
            .clone()
    }

    pub fn none() -> Self {
        Stopwords {
            name: "none".into(),
            words: Arc::default(),
        }
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn from_list(name: impl Into<String>, list: &str) -> Self {
        let words = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stopwords {
            name: name.into(),
            words: Arc::new(words),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let list = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading stopwords {}", path.display()), e))?;
        Ok(Stopwords::from_list(path.display().to_string(), &list))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords::english()
    }
}

/// Tokenizes with the built-in English stopword list.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, &Stopwords::english())
}

/// Lowercases, splits on runs of non-alphanumeric characters, and drops
/// tokens shorter than two characters or listed in `stopwords`.
pub fn tokenize_with(text: &str, stopwords: &Stopwords) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some())
        .filter(|t| !stopwords.contains(t))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreConfig {
    /// Weight of the query density.
    pub alpha: f64,
    /// Weight of the profile density.
    pub beta: f64,
    /// Selection threshold; candidates need a score strictly above it.
    pub delta: f64,
    pub max_candidates: usize,
    pub stopwords: Stopwords,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            delta: DEFAULT_DELTA,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            stopwords: Stopwords::english(),
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.alpha) || !unit.contains(&self.beta) {
            return Err(Error::Config(format!(
                "alpha and beta must lie in [0, 1] (got {} / {})",
                self.alpha, self.beta
            )));
        }
        let sum = self.alpha + self.beta;
        if sum <= 0.0 || sum > 1.0 {
            return Err(Error::Config(format!(
                "alpha + beta must lie in (0, 1] (got {sum})"
            )));
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::Config(format!(
                "delta must be >= 0 (got {})",
                self.delta
            )));
        }
        if self.max_candidates == 0 {
            return Err(Error::Config("max_candidates must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSegment {
    pub segment: Segment,
    pub query_density: f64,
    pub profile_density: f64,
    pub score: f64,
}

impl WeightedSegment {
    pub fn id(&self) -> (usize, usize) {
        self.segment.id()
    }
}

/// Candidate order: score descending, then page index, then segment index.
pub fn candidate_order(a: &WeightedSegment, b: &WeightedSegment) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.segment.page_index.cmp(&b.segment.page_index))
        .then(a.segment.seg_index.cmp(&b.segment.seg_index))
}

/// Scores one segment. `query_terms` must already be tokenized.
pub fn weigh_segment(
    seg: &Segment,
    query_terms: &[String],
    profile: &Profile,
    cfg: &ScoreConfig,
) -> WeightedSegment {
    let tokens = tokenize_with(&seg.text, &cfg.stopwords);
    let total = tokens.len();
    let (query_density, profile_density) = if total == 0 {
        (0.0, 0.0)
    } else {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        let count = |t: &str| counts.get(t).copied().unwrap_or(0);

        let distinct: HashSet<&str> = query_terms.iter().map(String::as_str).collect();
        let query_hits: usize = distinct.into_iter().map(count).sum();
        let profile_mass: f64 = profile
            .terms()
            .map(|(term, weight)| weight * count(term) as f64)
            .sum();
        (
            query_hits as f64 / total as f64,
            (profile_mass / total as f64).min(1.0),
        )
    };
    WeightedSegment {
        segment: seg.clone(),
        query_density,
        profile_density,
        score: cfg.alpha * query_density + cfg.beta * profile_density,
    }
}

/// The segment matrix with every cell weighted; same ragged shape.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedMatrix {
    pub rows: Vec<Vec<WeightedSegment>>,
}

impl WeightedMatrix {
    pub fn row_lengths(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &WeightedSegment> {
        self.rows.iter().flatten()
    }

    /// JSON rows of `{"i","j","query_density","profile_density","score"}`
    /// with reals at six decimal places.
    pub fn to_dump_json(&self) -> String {
        let mut out = String::from("[");
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(if r == 0 { "\n  [" } else { ",\n  [" });
            for (c, w) in row.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(
                    out,
                    "\n    {{\"i\": {}, \"j\": {}, \"query_density\": {:.6}, \"profile_density\": {:.6}, \"score\": {:.6}}}",
                    w.segment.page_index, w.segment.seg_index, w.query_density, w.profile_density, w.score
                );
            }
            out.push_str(if row.is_empty() { "]" } else { "\n  ]" });
        }
        out.push_str(if self.rows.is_empty() { "]" } else { "\n]" });
        out
    }
}

pub fn weigh_matrix(
    omega: &SegmentMatrix,
    query: &str,
    profile: &Profile,
    cfg: &ScoreConfig,
) -> WeightedMatrix {
    let query_terms = tokenize_with(query, &cfg.stopwords);
    let rows = omega
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|seg| weigh_segment(seg, &query_terms, profile, cfg))
                .collect()
        })
        .collect();
    WeightedMatrix { rows }
}

/// Selected segments in candidate order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<WeightedSegment>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, WeightedSegment> {
        self.candidates.iter()
    }

    pub fn ids(&self) -> Vec<(usize, usize)> {
        self.candidates.iter().map(WeightedSegment::id).collect()
    }
}

pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Keeps every cell scoring above `delta`, drops near-duplicates of
/// earlier-ordered candidates, and truncates to `max_candidates`.
pub fn select_candidates(phi: &WeightedMatrix, cfg: &ScoreConfig) -> CandidateSet {
    let mut above: Vec<&WeightedSegment> = phi.iter().filter(|w| w.score > cfg.delta).collect();
    above.sort_by(|a, b| candidate_order(a, b));

    let mut kept: Vec<(&WeightedSegment, HashSet<String>)> = Vec::new();
    for w in above {
        if kept.len() == cfg.max_candidates {
            break;
        }
        let tokens: HashSet<String> = tokenize_with(&w.segment.text, &cfg.stopwords)
            .into_iter()
            .collect();
        if kept
            .iter()
            .any(|(_, seen)| jaccard(seen, &tokens) > DUPLICATE_JACCARD)
        {
            continue;
        }
        kept.push((w, tokens));
    }
    CandidateSet {
        candidates: kept.into_iter().map(|(w, _)| w.clone()).collect(),
    }
}
