//! Test-only oracles, independent of the library's implementation paths.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use digestweaver::{Segment, SegmentMatrix};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use scraper::{ElementRef, Html};

/// Resolves from any crate in the workspace that includes this module.
pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn html_fixture_paths() -> Vec<PathBuf> {
    let mut paths = Vec::new();
    for dir in ["pondicherry/pages", "varied"] {
        for entry in std::fs::read_dir(fixtures().join(dir)).unwrap() {
            paths.push(entry.unwrap().path());
        }
    }
    paths.sort();
    paths
}

// ---------------------------------------------------------------------------
// Block extraction oracle, walking the html5ever DOM directly.

const STRIPPED: &[&str] = &["script", "style", "noscript", "iframe", "svg"];
const BOILERPLATE: &[&str] = &["nav", "footer", "aside"];
const ATOMIC: &[&str] = &[
    "p",
    "li",
    "td",
    "th",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "pre",
    "blockquote",
    "dt",
    "dd",
    "figcaption",
];
const BLOCK_LEVEL: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "center",
    "details",
    "dialog",
    "dd",
    "div",
    "dl",
    "dt",
    "fieldset",
    "figcaption",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hgroup",
    "hr",
    "li",
    "main",
    "menu",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "summary",
    "table",
    "tbody",
    "td",
    "tfoot",
    "th",
    "thead",
    "tr",
    "ul",
];

fn raw_text(el: ElementRef<'_>, out: &mut String) {
    for child in el.children() {
        if let Some(t) = child.value().as_text() {
            out.push_str(t);
        } else if let Some(c) = ElementRef::wrap(child) {
            let name = c.value().name();
            if STRIPPED.contains(&name) {
                continue;
            }
            if name == "br" {
                out.push(' ');
            } else {
                raw_text(c, out);
            }
        }
    }
}

fn collapsed(el: ElementRef<'_>) -> String {
    let mut raw = String::new();
    raw_text(el, &mut raw);
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn has_block_descendant(el: ElementRef<'_>) -> bool {
    el.children().filter_map(ElementRef::wrap).any(|c| {
        let name = c.value().name();
        !STRIPPED.contains(&name)
            && (BLOCK_LEVEL.contains(&name)
                || BOILERPLATE.contains(&name)
                || has_block_descendant(c))
    })
}

fn walk(el: ElementRef<'_>, out: &mut Vec<String>) {
    let name = el.value().name();
    if STRIPPED.contains(&name) || BOILERPLATE.contains(&name) {
        return;
    }
    if ATOMIC.contains(&name) || (name == "div" && !has_block_descendant(el)) {
        let text = collapsed(el);
        if !text.is_empty() {
            out.push(text);
        }
        return;
    }
    for child in el.children().filter_map(ElementRef::wrap) {
        walk(child, out);
    }
}

/// Atomic-block texts of a page, in document order.
pub fn oracle_block_texts(html: &str) -> Vec<String> {
    let doc = Html::parse_document(html);
    let mut out = Vec::new();
    walk(doc.root_element(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Brute-force scoring oracle.

pub struct OracleConfig<'a> {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub max_candidates: usize,
    pub stopwords: &'a HashSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCandidate {
    pub page: usize,
    pub seg: usize,
    pub query_density: f64,
    pub profile_density: f64,
    pub score: f64,
}

pub fn english_stopwords() -> HashSet<String> {
    include_str!("../../src/stopwords_en.txt")
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn oracle_tokens(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text
        .chars()
        .flat_map(char::to_lowercase)
        .chain(std::iter::once(' '))
    {
        if c.is_alphanumeric() {
            current.push(c);
        } else if !current.is_empty() {
            if current.chars().count() >= 2 && !stopwords.contains(&current) {
                tokens.push(current.clone());
            }
            current.clear();
        }
    }
    tokens
}

fn occurrences(needle: &str, hay: &[String]) -> usize {
    let mut n = 0;
    for t in hay {
        if t == needle {
            n += 1;
        }
    }
    n
}

/// Recomputes every density from raw counts, filters, sorts exhaustively,
/// removes near-duplicates and truncates.
pub fn oracle_select(
    omega: &SegmentMatrix,
    query: &str,
    profile: &[(String, f64)],
    cfg: &OracleConfig<'_>,
) -> Vec<OracleCandidate> {
    let mut query_terms: Vec<String> = oracle_tokens(query, cfg.stopwords);
    query_terms.sort();
    query_terms.dedup();
    let mut profile: Vec<(String, f64)> = profile.to_vec();
    profile.sort_by(|a, b| a.0.cmp(&b.0));

    let mut all = Vec::new();
    for row in &omega.rows {
        for seg in row {
            let toks = oracle_tokens(&seg.text, cfg.stopwords);
            let (q, p) = if toks.is_empty() {
                (0.0, 0.0)
            } else {
                let hits: usize = query_terms.iter().map(|t| occurrences(t, &toks)).sum();
                let mut mass = 0.0;
                for (term, weight) in &profile {
                    mass += weight * occurrences(term, &toks) as f64;
                }
                (
                    hits as f64 / toks.len() as f64,
                    f64::min(mass / toks.len() as f64, 1.0),
                )
            };
            all.push((seg, toks, q, p, cfg.alpha * q + cfg.beta * p));
        }
    }

    let above: Vec<_> = all.into_iter().filter(|c| c.4 > cfg.delta).collect();
    // Exhaustive sort: each element's position is the number of elements
    // that precede it under the key.
    let precedes = |a: &(&Segment, Vec<String>, f64, f64, f64),
                    b: &(&Segment, Vec<String>, f64, f64, f64)| {
        a.4 > b.4
            || (a.4 == b.4 && a.0.page_index < b.0.page_index)
            || (a.4 == b.4 && a.0.page_index == b.0.page_index && a.0.seg_index < b.0.seg_index)
    };
    let mut slots: Vec<Option<usize>> = vec![None; above.len()];
    for (i, a) in above.iter().enumerate() {
        let pos = above.iter().filter(|b| precedes(b, a)).count();
        assert!(slots[pos].is_none(), "ordering key must be total");
        slots[pos] = Some(i);
    }

    let mut kept: Vec<(usize, HashSet<&String>)> = Vec::new();
    for i in slots.into_iter().map(Option::unwrap) {
        if kept.len() == cfg.max_candidates {
            break;
        }
        let set: HashSet<&String> = above[i].1.iter().collect();
        let duplicate = kept.iter().any(|(_, other)| {
            let inter = set.iter().filter(|t| other.contains(*t)).count();
            let union = set.len() + other.len() - inter;
            union > 0 && inter as f64 / union as f64 > 0.9
        });
        if !duplicate {
            kept.push((i, set));
        }
    }
    kept.into_iter()
        .map(|(i, _)| {
            let (seg, _, q, p, s) = &above[i];
            OracleCandidate {
                page: seg.page_index,
                seg: seg.seg_index,
                query_density: *q,
                profile_density: *p,
                score: *s,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random small instances.

const VOCAB: &[&str] = &[
    "tourism",
    "beach",
    "heritage",
    "pondicherry",
    "food",
    "temple",
    "market",
    "history",
    "canal",
    "the",
    "and",
    "of",
    "a",
    "x",
    "Tourism",
    "BEACH",
    "2024",
    "café",
];

pub struct Instance {
    pub omega: SegmentMatrix,
    pub query: String,
    pub profile: Vec<(String, f64)>,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub max_candidates: usize,
}

fn random_text(rng: &mut StdRng) -> String {
    let len = rng.gen_range(0..14);
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        words.push(*VOCAB.choose(rng).unwrap());
    }
    let seps = [" ", ", ", "! ", " - ", "\n"];
    let mut text = String::new();
    for (k, w) in words.iter().enumerate() {
        if k > 0 {
            text.push_str(seps.choose(rng).unwrap());
        }
        text.push_str(w);
    }
    text
}

pub fn random_instance(rng: &mut StdRng) -> Instance {
    let pages = rng.gen_range(0..=5);
    let rows = (0..pages)
        .map(|i| {
            let segs = rng.gen_range(0..=10);
            (0..segs)
                .map(|j| {
                    let text = random_text(rng);
                    Segment {
                        page_index: i,
                        seg_index: j,
                        char_len: text.chars().count(),
                        html_fragment: String::new(),
                        source_url: format!("https://p{i}.example/"),
                        heading: None,
                        text,
                    }
                })
                .collect()
        })
        .collect();
    let query_words = rng.gen_range(1..=2);
    let query = (0..query_words)
        .map(|_| *VOCAB[..9].choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ");
    let mut profile = Vec::new();
    for term in ["tourism", "beach", "heritage", "food", "temple", "2024"] {
        if rng.gen_bool(0.4) {
            profile.push((term.to_string(), rng.gen_range(0.0..=1.0)));
        }
    }
    let alpha = rng.gen_range(0.0..=1.0);
    let beta = rng.gen_range(0.0..=(1.0 - alpha));
    let (alpha, beta) = if alpha + beta == 0.0 {
        (0.5, 0.5)
    } else {
        (alpha, beta)
    };
    Instance {
        omega: SegmentMatrix { rows },
        query,
        profile,
        alpha,
        beta,
        delta: rng.gen_range(0.0..0.4),
        max_candidates: rng.gen_range(1..=15),
    }
}
