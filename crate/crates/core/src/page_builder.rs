//! Template token replacement.
//!
//! Templates are plain HTML carrying three literal tokens: `{{SEGMENT}}`
//! (one slot per occurrence), `{{QUERY}}` and `{{GENERATED_AT}}`. Candidates
//! fill the slots in candidate order; when there are more candidates than
//! slots, the surplus is appended vertically into the last slot.

use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorer::{CandidateSet, WeightedSegment};
use crate::tree::escape_html;

pub const SEGMENT_TOKEN: &str = "{{SEGMENT}}";
pub const QUERY_TOKEN: &str = "{{QUERY}}";
pub const GENERATED_AT_TOKEN: &str = "{{GENERATED_AT}}";
pub const SEPARATOR: &str = r#"<hr class="dps-sep"/>"#;

pub const DEFAULT_TEMPLATE: &str = include_str!("default_template.html");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetaToken {
    Query,
    GeneratedAt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Segment,
    Meta(MetaToken),
}

impl Token {
    fn literal(self) -> &'static str {
        match self {
            Token::Segment => SEGMENT_TOKEN,
            Token::Meta(MetaToken::Query) => QUERY_TOKEN,
            Token::Meta(MetaToken::GeneratedAt) => GENERATED_AT_TOKEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    raw: String,
    tokens: Vec<(usize, Token)>,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self> {
        let candidates = [
            Token::Segment,
            Token::Meta(MetaToken::Query),
            Token::Meta(MetaToken::GeneratedAt),
        ];
        let mut tokens = Vec::new();
        let mut pos = 0;
        while let Some(found) = text[pos..].find("{{") {
            let at = pos + found;
            match candidates
                .iter()
                .find(|t| text[at..].starts_with(t.literal()))
            {
                Some(&token) => {
                    tokens.push((at, token));
                    pos = at + token.literal().len();
                }
                None => pos = at + 1,
            }
        }
        let template = Template {
            raw: text.to_string(),
            tokens,
        };
        if template.slot_count() == 0 {
            return Err(Error::NoTokens);
        }
        Ok(template)
    }

    pub fn default_template() -> Self {
        Template::parse(DEFAULT_TEMPLATE).expect("built-in template has a slot")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading template {}", path.display()), e))?;
        Template::parse(&text)
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Byte offsets of the `{{SEGMENT}}` tokens, ascending.
    pub fn segment_slots(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .filter(|(_, t)| *t == Token::Segment)
            .map(|(at, _)| *at)
            .collect()
    }

    /// Byte offsets of the `{{QUERY}}` and `{{GENERATED_AT}}` tokens.
    pub fn meta_tokens(&self) -> Vec<(usize, MetaToken)> {
        self.tokens
            .iter()
            .filter_map(|(at, t)| match t {
                Token::Meta(m) => Some((*at, *m)),
                Token::Segment => None,
            })
            .collect()
    }

    pub fn slot_count(&self) -> usize {
        self.tokens
            .iter()
            .filter(|(_, t)| *t == Token::Segment)
            .count()
    }
}

pub fn parse_template(text: &str) -> Result<Template> {
    Template::parse(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub slot_index: usize,
    /// `(page_index, seg_index)` of each candidate placed in this slot.
    pub candidates: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposedPage {
    pub html: String,
    pub placements: Vec<Placement>,
    pub query: String,
    pub generated_at: String,
}

pub fn format_timestamp(at: DateTime<Utc>) -> String {
    at.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// `<section class="dps-segment" ...>FRAGMENT</section>`
pub fn wrap_segment(w: &WeightedSegment) -> String {
    format!(
        r#"<section class="dps-segment" data-source="{}" data-score="{:.4}" data-rank="{}">{}</section>"#,
        escape_html(&w.segment.source_url),
        w.score,
        w.segment.page_index + 1,
        w.segment.html_fragment
    )
}

/// Which candidates (by position in the set) go into each slot.
pub fn assign_slots(candidates: usize, slots: usize) -> Vec<Vec<usize>> {
    assert!(slots >= 1, "a template has at least one slot");
    let mut out: Vec<Vec<usize>> = (0..slots)
        .map(|s| if s < candidates { vec![s] } else { Vec::new() })
        .collect();
    out[slots - 1].extend(slots..candidates);
    out
}

pub fn build_page(
    cs: &CandidateSet,
    tpl: &Template,
    query: &str,
    generated_at: DateTime<Utc>,
) -> ComposedPage {
    let assignment = assign_slots(cs.len(), tpl.slot_count());
    let slot_html: Vec<String> = assignment
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|&c| wrap_segment(&cs.candidates[c]))
                .collect::<Vec<_>>()
                .join(SEPARATOR)
        })
        .collect();
    let stamp = format_timestamp(generated_at);
    let escaped_query = escape_html(query);

    let mut html =
        String::with_capacity(tpl.raw.len() + slot_html.iter().map(String::len).sum::<usize>());
    let mut cursor = 0;
    let mut slot = 0;
    for &(at, token) in &tpl.tokens {
        html.push_str(&tpl.raw[cursor..at]);
        match token {
            Token::Segment => {
                html.push_str(&slot_html[slot]);
                slot += 1;
            }
            Token::Meta(MetaToken::Query) => html.push_str(&escaped_query),
            Token::Meta(MetaToken::GeneratedAt) => html.push_str(&stamp),
        }
        cursor = at + token.literal().len();
    }
    html.push_str(&tpl.raw[cursor..]);

    let placements = assignment
        .into_iter()
        .enumerate()
        .map(|(slot_index, members)| Placement {
            slot_index,
            candidates: members.into_iter().map(|c| cs.candidates[c].id()).collect(),
        })
        .collect();
    ComposedPage {
        html,
        placements,
        query: query.to_string(),
        generated_at: stamp,
    }
}
