//! DOM-heuristic page segmentation.
//!
//! A page is reduced to a sequence of atomic blocks (paragraphs, list items,
//! table cells, headings, leaf divs, ...). Blocks are grouped into segments:
//! every heading opens a segment, other blocks accumulate until `max_chars`
//! would be exceeded, and segments shorter than `min_chars` are then merged
//! into a neighbour.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RawPage;
use crate::tree::{self, ContentTree, Element};

pub const DEFAULT_MIN_CHARS: usize = 80;
pub const DEFAULT_MAX_CHARS: usize = 2000;

const ATOMIC_TAGS: &[&str] = &[
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

const HEADING_TAGS: &[&str] = &["h1", "h2", "h3", "h4", "h5", "h6"];

// Elements that make an enclosing div non-atomic.
const BLOCK_LEVEL_TAGS: &[&str] = &[
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

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegConfig {
    pub min_chars: usize,
    pub max_chars: usize,
    pub strip_tags: BTreeSet<String>,
    pub boilerplate_tags: BTreeSet<String>,
}

impl Default for SegConfig {
    fn default() -> Self {
        SegConfig {
            min_chars: DEFAULT_MIN_CHARS,
            max_chars: DEFAULT_MAX_CHARS,
            strip_tags: tree::default_strip_tags(),
            boilerplate_tags: ["nav", "footer", "aside"]
                .iter()
                .map(|t| t.to_string())
                .collect(),
        }
    }
}

impl SegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_chars == 0 || self.min_chars >= self.max_chars {
            return Err(Error::Config(format!(
                "segment bounds must satisfy 1 <= min_chars < max_chars (got {} / {})",
                self.min_chars, self.max_chars
            )));
        }
        Ok(())
    }
}

/// One block of a result page: the unit of scoring and composition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub page_index: usize,
    pub seg_index: usize,
    pub text: String,
    pub html_fragment: String,
    pub source_url: String,
    /// Text of the nearest heading at or before the segment's first block.
    pub heading: Option<String>,
    pub char_len: usize,
}

impl Segment {
    pub fn id(&self) -> (usize, usize) {
        (self.page_index, self.seg_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicBlock {
    pub tag: String,
    pub text: String,
    pub html: String,
}

impl AtomicBlock {
    pub fn is_heading(&self) -> bool {
        HEADING_TAGS.contains(&self.tag.as_str())
    }

    fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Atomic blocks of `tree` in document order. Boilerplate subtrees are
/// skipped and blocks with empty text are dropped. An atomic block is not
/// searched for nested blocks.
pub fn collect_blocks(tree: &ContentTree, cfg: &SegConfig) -> Vec<AtomicBlock> {
    let mut blocks = Vec::new();
    visit(tree.root(), cfg, &mut blocks);
    blocks
}

fn visit(el: &Element, cfg: &SegConfig, out: &mut Vec<AtomicBlock>) {
    if cfg.boilerplate_tags.contains(&el.tag) {
        return;
    }
    if is_atomic(el, cfg) {
        let text = el.text();
        if !text.is_empty() {
            out.push(AtomicBlock {
                tag: el.tag.clone(),
                text,
                html: tree::sanitized_block_html(el),
            });
        }
        return;
    }
    for child in el.child_elements() {
        visit(child, cfg, out);
    }
}

fn is_atomic(el: &Element, cfg: &SegConfig) -> bool {
    if ATOMIC_TAGS.contains(&el.tag.as_str()) {
        return true;
    }
    el.tag == "div"
        && !el.has_descendant(&|d: &Element| {
            BLOCK_LEVEL_TAGS.contains(&d.tag.as_str()) || cfg.boilerplate_tags.contains(&d.tag)
        })
}

struct Draft {
    first: usize,
    end: usize,
    len: usize,
}

impl Draft {
    fn start(index: usize, len: usize) -> Self {
        Draft {
            first: index,
            end: index + 1,
            len,
        }
    }

    fn absorb(&mut self, next: Draft) {
        debug_assert_eq!(self.end, next.first);
        self.end = next.end;
        self.len += 1 + next.len;
    }
}

/// Groups blocks into segment ranges (rules: heading split, max_chars
/// overflow, min_chars merge).
fn group_blocks(blocks: &[AtomicBlock], min_chars: usize, max_chars: usize) -> Vec<Draft> {
    let mut drafts: Vec<Draft> = Vec::new();
    let mut current: Option<Draft> = None;
    for (i, block) in blocks.iter().enumerate() {
        let len = block.char_len();
        current = Some(match current.take() {
            Some(mut cur) if !block.is_heading() && cur.len + 1 + len <= max_chars => {
                cur.absorb(Draft::start(i, len));
                cur
            }
            Some(cur) => {
                drafts.push(cur);
                Draft::start(i, len)
            }
            None => Draft::start(i, len),
        });
    }
    drafts.extend(current);

    let count = drafts.len();
    let mut merged: Vec<Draft> = Vec::with_capacity(count);
    let mut pending: Option<Draft> = None;
    for (k, draft) in drafts.into_iter().enumerate() {
        let draft = match pending.take() {
            Some(mut short) => {
                short.absorb(draft);
                short
            }
            None => draft,
        };
        if draft.len < min_chars && k + 1 < count {
            pending = Some(draft);
        } else {
            merged.push(draft);
        }
    }
    if merged.len() >= 2 && merged.last().is_some_and(|d| d.len < min_chars) {
        let last = merged.pop().expect("len checked");
        merged.last_mut().expect("len checked").absorb(last);
    }
    merged
}

/// Splits one parsed page into ordered segments.
pub fn segment_page(
    tree: &ContentTree,
    page_index: usize,
    url: &str,
    cfg: &SegConfig,
) -> Vec<Segment> {
    let blocks = collect_blocks(tree, cfg);
    segment_blocks(&blocks, page_index, url, cfg)
}

/// Segments an already collected block list.
pub fn segment_blocks(
    blocks: &[AtomicBlock],
    page_index: usize,
    url: &str,
    cfg: &SegConfig,
) -> Vec<Segment> {
    let mut heading_ctx: Vec<Option<&str>> = Vec::with_capacity(blocks.len());
    let mut last_heading = None;
    for block in blocks {
        if block.is_heading() {
            last_heading = Some(block.text.as_str());
        }
        heading_ctx.push(last_heading);
    }

    group_blocks(blocks, cfg.min_chars, cfg.max_chars)
        .into_iter()
        .enumerate()
        .map(|(seg_index, draft)| {
            let members = &blocks[draft.first..draft.end];
            let text = members
                .iter()
                .map(|b| b.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let html_fragment = members.iter().map(|b| b.html.as_str()).collect();
            let char_len = text.chars().count();
            debug_assert_eq!(char_len, draft.len);
            Segment {
                page_index,
                seg_index,
                text,
                html_fragment,
                source_url: url.to_string(),
                heading: heading_ctx[draft.first].map(str::to_string),
                char_len,
            }
        })
        .collect()
}

/// Ragged matrix of segments, one row per fetched page in rank order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentMatrix {
    pub rows: Vec<Vec<Segment>>,
}

impl SegmentMatrix {
    pub fn row_lengths(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn segment_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Segment> {
        self.rows.iter().flatten()
    }
}

/// Segments every page; skipped pages give empty rows.
pub fn build_segment_matrix(pages: &[RawPage], cfg: &SegConfig) -> SegmentMatrix {
    let rows = pages
        .iter()
        .enumerate()
        .map(
            |(i, page)| match tree::parse_html_with(page, &cfg.strip_tags) {
                Ok(tree) => segment_page(&tree, i, &page.source.url, cfg),
                Err(_) => Vec::new(),
            },
        )
        .collect();
    SegmentMatrix { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SearchResultEntry;
    use proptest::prelude::*;

    fn text_of(n: usize, seed: char) -> String {
        std::iter::repeat_n(seed, n).collect()
    }

    fn segs(html: &str, cfg: &SegConfig) -> Vec<Segment> {
        segment_page(&ContentTree::parse(html), 0, "https://x.example/", cfg)
    }

    fn block(tag: &str, len: usize) -> AtomicBlock {
        let text = text_of(len, 'x');
        AtomicBlock {
            tag: tag.into(),
            html: format!("<p>{text}</p>"),
            text,
        }
    }

    #[test]
    fn single_paragraph() {
        let s = segs(
            &format!("<p>{}</p>", text_of(120, 'a')),
            &SegConfig::default(),
        );
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].char_len, 120);
        assert_eq!(s[0].heading, None);
    }

    #[test]
    fn headings_open_segments() {
        let html = format!(
            "<h2>A</h2><p>{}</p><h2>B</h2><p>{}</p>",
            text_of(200, 'a'),
            text_of(200, 'b')
        );
        let s = segs(&html, &SegConfig::default());
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].heading.as_deref(), Some("A"));
        assert_eq!(s[1].heading.as_deref(), Some("B"));
        assert!(s[0].text.starts_with("A "));
        assert_eq!(s[0].char_len, 202);
        assert_eq!((s[1].page_index, s[1].seg_index), (0, 1));
    }

    #[test]
    fn short_blocks_merge() {
        let t = text_of(30, 'c');
        let s = segs(
            &format!("<p>{t}</p><p>{t}</p><p>{t}</p>"),
            &SegConfig::default(),
        );
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].char_len, 92);
        assert_eq!(
            s[0].html_fragment,
            format!("<p>{t}</p><p>{t}</p><p>{t}</p>")
        );
    }

    #[test]
    fn overflow_splits_at_max_chars() {
        let cfg = SegConfig {
            min_chars: 10,
            max_chars: 100,
            ..SegConfig::default()
        };
        let blocks = vec![block("p", 60), block("p", 39), block("p", 20)];
        let s = segment_blocks(&blocks, 3, "u", &cfg);
        // 60 + 1 + 39 = 100 fits; + 1 + 20 does not.
        assert_eq!(s.iter().map(|x| x.char_len).collect::<Vec<_>>(), [100, 20]);
        assert_eq!(s[1].page_index, 3);
    }

    #[test]
    fn short_last_segment_merges_backwards() {
        let cfg = SegConfig {
            min_chars: 50,
            max_chars: 100,
            ..SegConfig::default()
        };
        let blocks = vec![
            block("h2", 5),
            block("p", 80),
            block("h3", 4),
            block("p", 10),
        ];
        let s = segment_blocks(&blocks, 0, "u", &cfg);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].char_len, 5 + 1 + 80 + 1 + 4 + 1 + 10);
        assert_eq!(s[0].heading.as_deref(), Some(blocks[0].text.as_str()));
    }

    #[test]
    fn split_segment_inherits_nearest_heading() {
        let cfg = SegConfig {
            min_chars: 10,
            max_chars: 100,
            ..SegConfig::default()
        };
        let html = format!(
            "<h1>Top</h1><p>{}</p><p>{}</p>",
            text_of(90, 'p'),
            text_of(90, 'q')
        );
        let s = segment_page(&ContentTree::parse(&html), 0, "u", &cfg);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].heading.as_deref(), Some("Top"));
    }

    #[test]
    fn boilerplate_and_nested_blocks() {
        let html = format!(
            "<nav><p>{nav}</p></nav><div><div>leaf {a}</div><ul><li><p>inner {b}</p></li></ul></div>\
             <footer>{nav}</footer>",
            nav = text_of(100, 'n'),
            a = text_of(100, 'a'),
            b = text_of(100, 'b')
        );
        let tree = ContentTree::parse(&html);
        let blocks = collect_blocks(&tree, &SegConfig::default());
        let tags: Vec<_> = blocks.iter().map(|b| b.tag.as_str()).collect();
        assert_eq!(tags, ["div", "li"]);
        assert!(blocks.iter().all(|b| !b.text.contains("nnnn")));
    }

    #[test]
    fn table_cells_are_blocks() {
        let tree = ContentTree::parse("<table><tr><th>h</th><td>one</td><td> </td></tr></table>");
        let blocks = collect_blocks(&tree, &SegConfig::default());
        let texts: Vec<_> = blocks.iter().map(|b| b.text.as_str()).collect();
        assert_eq!(texts, ["h", "one"]);
    }

    #[test]
    fn empty_page_has_no_segments() {
        assert!(segs("<html><body>  </body></html>", &SegConfig::default()).is_empty());
        assert!(segs("", &SegConfig::default()).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(SegConfig::default().validate().is_ok());
        let bad = SegConfig {
            min_chars: 100,
            max_chars: 100,
            ..SegConfig::default()
        };
        assert!(bad.validate().is_err());
        let zero = SegConfig {
            min_chars: 0,
            ..SegConfig::default()
        };
        assert!(zero.validate().is_err());
    }

    fn entry(rank: u32) -> SearchResultEntry {
        SearchResultEntry {
            rank,
            url: format!("https://r{rank}.example/"),
            title: String::new(),
            snippet: String::new(),
            local_html_path: None,
        }
    }

    #[test]
    fn matrix_rows_follow_pages() {
        let cfg = SegConfig::default();
        let three = format!(
            "<h2>a</h2><p>{0}</p><h2>b</h2><p>{0}</p><h2>c</h2><p>{0}</p>",
            text_of(100, 'x')
        );
        let two = format!(
            "<h2>a</h2><p>{0}</p><h2>b</h2><p>{0}</p>",
            text_of(100, 'y')
        );
        let pages = vec![
            RawPage::ok(entry(1), three.into_bytes(), "text/html"),
            RawPage::ok(entry(2), two.into_bytes(), "text/html"),
            RawPage::skipped(entry(3), "timeout"),
        ];
        let m = build_segment_matrix(&pages, &cfg);
        assert_eq!(m.row_lengths(), [3, 2, 0]);
        assert_eq!(m.rows[1][0].source_url, "https://r2.example/");
        assert!(m.rows[1].iter().all(|s| s.page_index == 1));
        assert_eq!(build_segment_matrix(&[], &cfg).rows.len(), 0);
    }

    fn arb_blocks() -> impl Strategy<Value = Vec<AtomicBlock>> {
        prop::collection::vec((prop::bool::weighted(0.2), 1usize..400), 0..40).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (heading, len))| {
                    let seed = char::from(b'a' + (i % 26) as u8);
                    let mut b = block(if heading { "h2" } else { "p" }, len);
                    b.text = text_of(len, seed);
                    b
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn partition_and_length_bounds(
            blocks in arb_blocks(),
            min in 1usize..150,
            extra in 1usize..600,
        ) {
            let max = min + extra;
            let cfg = SegConfig { min_chars: min, max_chars: max, ..SegConfig::default() };
            let segs = segment_blocks(&blocks, 0, "u", &cfg);

            let joined_blocks = blocks.iter().map(|b| b.text.as_str()).collect::<Vec<_>>().join(" ");
            let joined_segs = segs.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(joined_segs, joined_blocks);

            for (j, s) in segs.iter().enumerate() {
                prop_assert_eq!(s.seg_index, j);
                prop_assert_eq!(s.char_len, s.text.chars().count());
                prop_assert!(s.char_len >= 1);
                if j + 1 < segs.len() {
                    prop_assert!(s.char_len >= min);
                }
            }
            // A segment only exceeds max_chars when it is a single oversized
            // block or absorbed short neighbours (each < min_chars) on merge.
            let longest = blocks.iter().map(|b| b.text.len()).max().unwrap_or(0);
            for s in &segs {
                prop_assert!(s.char_len <= max.max(longest) + 2 * min + 1);
            }
        }

        #[test]
        fn unmerged_segments_respect_max_chars(
            lens in prop::collection::vec(1usize..100, 1..40),
        ) {
            // With min_chars = 1 no merge happens, so the greedy bound is exact.
            let cfg = SegConfig { min_chars: 1, max_chars: 200, ..SegConfig::default() };
            let blocks: Vec<_> = lens.iter().map(|&l| block("p", l)).collect();
            for s in segment_blocks(&blocks, 0, "u", &cfg) {
                prop_assert!(s.char_len <= 200);
            }
        }

        #[test]
        fn heading_alignment(blocks in arb_blocks(), min in 1usize..150) {
            let cfg = SegConfig { min_chars: min, max_chars: min + 300, ..SegConfig::default() };
            let segs = segment_blocks(&blocks, 0, "u", &cfg);
            let drafts = group_blocks(&blocks, cfg.min_chars, cfg.max_chars);
            prop_assert_eq!(drafts.len(), segs.len());
            for (d, s) in drafts.iter().zip(&segs) {
                let first = &blocks[d.first];
                if first.is_heading() {
                    prop_assert_eq!(s.heading.as_deref(), Some(first.text.as_str()));
                }
            }
        }
    }
}
