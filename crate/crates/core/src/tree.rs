//! Error-recovering HTML parsing into a stripped content tree.
//!
//! Parsing is delegated to html5ever (through `scraper`), which implements the
//! WHATWG recovery rules. The resulting DOM is copied into a small owned tree
//! with script-like subtrees and comments removed.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use scraper::{ElementRef, Html};

use crate::error::{Error, Result};
use crate::ingest::RawPage;

pub const DEFAULT_STRIP_TAGS: [&str; 5] = ["script", "style", "noscript", "iframe", "svg"];

pub fn default_strip_tags() -> BTreeSet<String> {
    DEFAULT_STRIP_TAGS.iter().map(|t| t.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub tag: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
}

impl Element {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn child_elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|c| match c {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    /// Text content with whitespace runs collapsed and the ends trimmed.
    pub fn text(&self) -> String {
        let mut raw = String::new();
        self.raw_text_into(&mut raw);
        collapse_whitespace(&raw)
    }

    fn raw_text_into(&self, out: &mut String) {
        if self.tag == "br" {
            out.push(' ');
            return;
        }
        for child in &self.children {
            match child {
                Node::Text(t) => out.push_str(t),
                Node::Element(e) => e.raw_text_into(out),
            }
        }
    }

    /// True if any descendant (not `self`) satisfies `pred`.
    pub fn has_descendant(&self, pred: &impl Fn(&Element) -> bool) -> bool {
        self.child_elements()
            .any(|c| pred(c) || c.has_descendant(pred))
    }
}

/// A parsed page with script, style, noscript, iframe, svg and comment nodes
/// removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentTree {
    root: Element,
}

impl ContentTree {
    pub fn parse(html: &str) -> Self {
        Self::parse_with(html, &default_strip_tags())
    }

    pub fn parse_with(html: &str, strip_tags: &BTreeSet<String>) -> Self {
        let doc = Html::parse_document(html);
        let root = convert_element(doc.root_element(), strip_tags).unwrap_or_else(|| Element {
            tag: "html".into(),
            attrs: Vec::new(),
            children: Vec::new(),
        });
        ContentTree { root }
    }

    pub fn root(&self) -> &Element {
        &self.root
    }

    pub fn text(&self) -> String {
        self.root.text()
    }
}

fn convert_element(node: ElementRef<'_>, strip_tags: &BTreeSet<String>) -> Option<Element> {
    let el = node.value();
    let tag = el.name().to_ascii_lowercase();
    if strip_tags.contains(&tag) {
        return None;
    }
    let attrs = el
        .attrs()
        .map(|(k, v)| (k.to_ascii_lowercase(), v.to_string()))
        .collect();
    let mut children = Vec::new();
    for child in node.children() {
        match child.value() {
            scraper::Node::Element(_) => {
                let converted =
                    ElementRef::wrap(child).and_then(|c| convert_element(c, strip_tags));
                if let Some(converted) = converted {
                    children.push(Node::Element(converted));
                }
            }
            scraper::Node::Text(t) => {
                let text: &str = t;
                match children.last_mut() {
                    Some(Node::Text(prev)) => prev.push_str(text),
                    _ => children.push(Node::Text(text.to_string())),
                }
            }
            _ => {}
        }
    }
    Some(Element {
        tag,
        attrs,
        children,
    })
}

/// Parses a fetched page. Fails only when the page was skipped.
pub fn parse_html(page: &RawPage) -> Result<ContentTree> {
    parse_html_with(page, &default_strip_tags())
}

pub fn parse_html_with(page: &RawPage, strip_tags: &BTreeSet<String>) -> Result<ContentTree> {
    if !page.is_ok() {
        return Err(Error::NotOk(page.source.rank));
    }
    Ok(ContentTree::parse_with(&page.text(), strip_tags))
}

/// Collapses every run of Unicode whitespace to one space and trims.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

const KEPT_TAGS: &[&str] = &[
    "a",
    "abbr",
    "b",
    "blockquote",
    "br",
    "cite",
    "code",
    "dd",
    "del",
    "div",
    "dl",
    "dt",
    "em",
    "figcaption",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "i",
    "ins",
    "kbd",
    "li",
    "mark",
    "ol",
    "p",
    "pre",
    "q",
    "s",
    "samp",
    "small",
    "span",
    "strong",
    "sub",
    "sup",
    "table",
    "tbody",
    "td",
    "tfoot",
    "th",
    "thead",
    "tr",
    "u",
    "ul",
    "var",
];

const VOID_TAGS: &[&str] = &["br"];

// Tags that are only valid inside a particular parent; emitted as <p> when
// they stand alone as a block.
const CONTEXTUAL_TAGS: &[&str] = &["li", "dt", "dd", "td", "th", "figcaption"];

/// Serializes `el` as sanitized markup: an allow-list of tags and attributes,
/// unknown elements unwrapped to their children, all text escaped.
pub fn sanitized_block_html(el: &Element) -> String {
    let tag = if CONTEXTUAL_TAGS.contains(&el.tag.as_str()) {
        "p"
    } else if KEPT_TAGS.contains(&el.tag.as_str()) {
        el.tag.as_str()
    } else {
        "div"
    };
    let mut out = String::new();
    out.push('<');
    out.push_str(tag);
    out.push('>');
    for child in &el.children {
        write_sanitized(child, &mut out);
    }
    let _ = write!(out, "</{tag}>");
    out
}

fn write_sanitized(node: &Node, out: &mut String) {
    let el = match node {
        Node::Text(t) => {
            out.push_str(&escape_html(t));
            return;
        }
        Node::Element(el) => el,
    };
    let tag = el.tag.as_str();
    if !KEPT_TAGS.contains(&tag) {
        for child in &el.children {
            write_sanitized(child, out);
        }
        return;
    }
    out.push('<');
    out.push_str(tag);
    for (name, value) in &el.attrs {
        if attr_allowed(tag, name, value) {
            let _ = write!(out, " {name}=\"{}\"", escape_html(value));
        }
    }
    if VOID_TAGS.contains(&tag) {
        out.push_str("/>");
        return;
    }
    out.push('>');
    for child in &el.children {
        write_sanitized(child, out);
    }
    let _ = write!(out, "</{tag}>");
}

fn attr_allowed(tag: &str, name: &str, value: &str) -> bool {
    match (tag, name) {
        ("a", "href") => safe_href(value),
        ("abbr", "title") => true,
        ("td" | "th", "colspan" | "rowspan") => value.chars().all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

fn safe_href(value: &str) -> bool {
    let v: String = value
        .chars()
        .filter(|c| !c.is_whitespace() && !c.is_control())
        .collect::<String>()
        .to_ascii_lowercase();
    match v.find(':') {
        None => true,
        Some(colon) => {
            // A colon after a path/query/fragment delimiter is not a scheme.
            if v[..colon].contains(['/', '?', '#']) {
                return true;
            }
            matches!(&v[..colon], "http" | "https" | "mailto")
        }
    }
}
