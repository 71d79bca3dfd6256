//! Result lists and page fetching.
//!
//! The upstream search engine is not part of this crate. A ranked result list
//! arrives as a JSON document; pages are then read from local files (offline)
//! or fetched over HTTP (online). Fetch failures never abort: a page that
//! cannot be retrieved becomes a [`RawPage`] with [`FetchStatus::Skipped`] and
//! keeps its rank position.

use std::borrow::Cow;
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const USER_AGENT: &str = "digestweaver/1.0";
pub const MAX_REDIRECTS: usize = 3;

pub const DEFAULT_TOP_N: usize = 10;
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;
pub const DEFAULT_MAX_BYTES: usize = 2 * 1024 * 1024;
pub const DEFAULT_PARALLELISM: usize = 4;

/// One ranked entry returned by the search provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResultEntry {
    pub rank: u32,
    pub url: String,
    pub title: String,
    pub snippet: String,
    pub local_html_path: Option<PathBuf>,
}

/// A query together with its ranked results, sorted by ascending rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultList {
    query: String,
    entries: Vec<SearchResultEntry>,
}

impl ResultList {
    /// Validates and rank-sorts `entries`.
    pub fn new(query: impl Into<String>, mut entries: Vec<SearchResultEntry>) -> Result<Self> {
        let query = query.into();
        if query.trim().is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for entry in &entries {
            if entry.rank == 0 {
                return Err(Error::Schema(format!(
                    "rank must be >= 1 (entry {:?})",
                    entry.url
                )));
            }
            if !seen.insert(entry.rank) {
                return Err(Error::DupRank(entry.rank));
            }
            validate_url(&entry.url)?;
        }
        entries.sort_by_key(|e| e.rank);
        Ok(ResultList { query, entries })
    }

    pub fn query(&self) -> &str {
        &self.query
    }

    pub fn entries(&self) -> &[SearchResultEntry] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses a result-list document. Relative `html_path` values resolve
    /// against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let doc: ResultListDoc =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let entries = doc
            .results
            .into_iter()
            .map(|r| {
                let local_html_path = r.html_path.map(|p| match base_dir {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p,
                });
                SearchResultEntry {
                    rank: r.rank,
                    url: r.url,
                    title: r.title,
                    snippet: r.snippet,
                    local_html_path,
                }
            })
            .collect();
        ResultList::new(doc.query, entries)
    }
}

fn validate_url(raw: &str) -> Result<()> {
    if raw.trim().is_empty() {
        return Err(Error::Schema("empty url".into()));
    }
    url::Url::parse(raw)
        .map(|_| ())
        .map_err(|e| Error::Schema(format!("invalid url {raw:?}: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultListDoc {
    query: String,
    results: Vec<ResultDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultDoc {
    rank: u32,
    url: String,
    title: String,
    #[serde(default)]
    snippet: String,
    #[serde(default)]
    html_path: Option<PathBuf>,
}

/// Reads a result-list JSON file.
pub fn load_result_list(path: &Path) -> Result<ResultList> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading result list {}", path.display()), e))?;
    ResultList::from_json(&text, path.parent())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchMode {
    Offline,
    Online,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchPolicy {
    pub mode: FetchMode,
    /// How many leading results to fetch.
    pub top_n: usize,
    pub timeout_ms: u64,
    pub max_bytes: usize,
    /// Response cache keyed by URL; online mode only.
    pub cache_dir: Option<PathBuf>,
    pub bypass_cache: bool,
    /// Upper bound on concurrent fetches.
    pub parallelism: usize,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            mode: FetchMode::Online,
            top_n: DEFAULT_TOP_N,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            max_bytes: DEFAULT_MAX_BYTES,
            cache_dir: None,
            bypass_cache: false,
            parallelism: DEFAULT_PARALLELISM,
        }
    }
}

impl FetchPolicy {
    pub fn offline() -> Self {
        FetchPolicy {
            mode: FetchMode::Offline,
            ..FetchPolicy::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::Config("top_n must be >= 1".into()));
        }
        if self.timeout_ms == 0 {
            return Err(Error::Config("timeout_ms must be >= 1".into()));
        }
        if self.max_bytes == 0 {
            return Err(Error::Config("max_bytes must be >= 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchStatus {
    Ok,
    Skipped,
}

/// A fetched (or skipped) result page, before parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPage {
    pub source: SearchResultEntry,
    pub body: Vec<u8>,
    pub media_type: String,
    pub fetch_status: FetchStatus,
    pub skip_reason: Option<String>,
}

impl RawPage {
    pub fn ok(source: SearchResultEntry, body: Vec<u8>, media_type: impl Into<String>) -> Self {
        RawPage {
            source,
            body,
            media_type: media_type.into(),
            fetch_status: FetchStatus::Ok,
            skip_reason: None,
        }
    }

    pub fn skipped(source: SearchResultEntry, reason: impl Into<String>) -> Self {
        RawPage {
            source,
            body: Vec::new(),
            media_type: String::new(),
            fetch_status: FetchStatus::Skipped,
            skip_reason: Some(reason.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.fetch_status == FetchStatus::Ok
    }

    /// Body decoded as UTF-8, replacing invalid sequences.
    pub fn text(&self) -> Cow<'_, str> {
        String::from_utf8_lossy(&self.body)
    }
}

pub fn is_html_media_type(media_type: &str) -> bool {
    matches!(media_type, "text/html" | "application/xhtml+xml")
}

/// Fetches pages according to a [`FetchPolicy`], sharing one HTTP client.
#[derive(Debug, Clone)]
pub struct Fetcher {
    policy: FetchPolicy,
    client: reqwest::Client,
}

impl Fetcher {
    pub fn new(policy: FetchPolicy) -> Result<Self> {
        policy.validate()?;
        let client = reqwest::Client::builder()
            .user_agent(USER_AGENT)
            .redirect(reqwest::redirect::Policy::limited(MAX_REDIRECTS))
            .timeout(Duration::from_millis(policy.timeout_ms))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(Fetcher { policy, client })
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    pub async fn fetch_page(&self, entry: &SearchResultEntry) -> RawPage {
        let fetched = match self.policy.mode {
            FetchMode::Offline => self.read_local(entry).await,
            FetchMode::Online => self.fetch_remote(entry).await,
        };
        match fetched {
            Ok((body, media_type)) => RawPage::ok(entry.clone(), body, media_type),
            Err(reason) => RawPage::skipped(entry.clone(), reason),
        }
    }

    /// Fetches the first `min(n, top_n)` entries. Output is in rank order no
    /// matter which fetch completes first.
    pub async fn fetch_all(&self, list: &ResultList) -> Vec<RawPage> {
        let take = list.n().min(self.policy.top_n);
        // Collecting the (lazy) futures first keeps the returned future Send.
        let pending: Vec<_> = list.entries()[..take]
            .iter()
            .map(|entry| self.fetch_page(entry))
            .collect();
        stream::iter(pending)
            .buffered(self.policy.parallelism)
            .collect()
            .await
    }

    async fn read_local(&self, entry: &SearchResultEntry) -> Result<(Vec<u8>, String), String> {
        let path = entry
            .local_html_path
            .as_deref()
            .ok_or_else(|| "no local html path for offline fetch".to_string())?;
        let meta = tokio::fs::metadata(path)
            .await
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        if meta.len() > self.policy.max_bytes as u64 {
            return Err(format!(
                "body of {} bytes exceeds max_bytes {}",
                meta.len(),
                self.policy.max_bytes
            ));
        }
        let body = tokio::fs::read(path)
            .await
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let media_type = media_type_for_path(path, &body);
        accept_body(body, media_type, self.policy.max_bytes)
    }

    async fn fetch_remote(&self, entry: &SearchResultEntry) -> Result<(Vec<u8>, String), String> {
        let cache = self
            .policy
            .cache_dir
            .as_deref()
            .filter(|_| !self.policy.bypass_cache)
            .map(|dir| CacheEntry::new(dir, &entry.url));
        if let Some(hit) = cache.as_ref().and_then(CacheEntry::read) {
            return Ok(hit);
        }

        let limit = Duration::from_millis(self.policy.timeout_ms);
        let (body, media_type) = match tokio::time::timeout(limit, self.download(&entry.url)).await
        {
            Ok(result) => result?,
            Err(_) => return Err(format!("timed out after {} ms", self.policy.timeout_ms)),
        };
        let accepted = accept_body(body, media_type, self.policy.max_bytes)?;
        if let Some(cache) = cache {
            // A failed cache write only costs a refetch next time.
            let _ = cache.write(&accepted.0, &accepted.1);
        }
        Ok(accepted)
    }

    async fn download(&self, url: &str) -> Result<(Vec<u8>, String), String> {
        let resp = self
            .client
            .get(url)
            .send()
            .await
            .map_err(describe_reqwest)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP status {status}"));
        }
        let media_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .map(essence)
            .unwrap_or_else(|| "text/html".to_string());
        if !is_html_media_type(&media_type) {
            return Err(format!("unsupported media type {media_type}"));
        }
        if let Some(len) = resp.content_length() {
            if len > self.policy.max_bytes as u64 {
                return Err(format!(
                    "body of {len} bytes exceeds max_bytes {}",
                    self.policy.max_bytes
                ));
            }
        }
        let mut body = Vec::new();
        let mut chunks = resp.bytes_stream();
        while let Some(chunk) = chunks.next().await {
            let chunk = chunk.map_err(describe_reqwest)?;
            if body.len() + chunk.len() > self.policy.max_bytes {
                return Err(format!("body exceeds max_bytes {}", self.policy.max_bytes));
            }
            body.extend_from_slice(&chunk);
        }
        Ok((body, media_type))
    }
}

fn describe_reqwest(e: reqwest::Error) -> String {
    if e.is_timeout() {
        format!("timed out: {e}")
    } else if e.is_redirect() {
        format!("too many redirects: {e}")
    } else {
        format!("request failed: {e}")
    }
}

fn accept_body(
    body: Vec<u8>,
    media_type: String,
    max_bytes: usize,
) -> Result<(Vec<u8>, String), String> {
    if !is_html_media_type(&media_type) {
        return Err(format!("unsupported media type {media_type}"));
    }
    if body.len() > max_bytes {
        return Err(format!(
            "body of {} bytes exceeds max_bytes {max_bytes}",
            body.len()
        ));
    }
    if body.is_empty() {
        return Err("empty body".into());
    }
    Ok((body, media_type))
}

/// `text/html; charset=utf-8` -> `text/html`
fn essence(content_type: &str) -> String {
    content_type
        .split(';')
        .next()
        .unwrap_or_default()
        .trim()
        .to_ascii_lowercase()
}

fn media_type_for_path(path: &Path, body: &[u8]) -> String {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let known = match ext.as_deref() {
        Some("html" | "htm") => Some("text/html"),
        Some("xhtml") => Some("application/xhtml+xml"),
        Some("pdf") => Some("application/pdf"),
        Some("txt") => Some("text/plain"),
        Some("json") => Some("application/json"),
        _ => None,
    };
    if let Some(known) = known {
        return known.to_string();
    }
    let looks_like_markup = body
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .is_some_and(|&b| b == b'<');
    if looks_like_markup {
        "text/html".into()
    } else {
        "application/octet-stream".into()
    }
}

struct CacheEntry {
    body_path: PathBuf,
    type_path: PathBuf,
}

impl CacheEntry {
    fn new(dir: &Path, url: &str) -> Self {
        let key = hex::encode(Sha256::digest(url.as_bytes()));
        CacheEntry {
            body_path: dir.join(format!("{key}.body")),
            type_path: dir.join(format!("{key}.type")),
        }
    }

    fn read(&self) -> Option<(Vec<u8>, String)> {
        let media_type = std::fs::read_to_string(&self.type_path).ok()?;
        let body = std::fs::read(&self.body_path).ok()?;
        Some((body, media_type))
    }

    fn write(&self, body: &[u8], media_type: &str) -> std::io::Result<()> {
        if let Some(dir) = self.body_path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        // The type file is the commit marker, so it is renamed into place last.
        write_atomic(&self.body_path, body)?;
        write_atomic(&self.type_path, media_type.as_bytes())
    }
}

/// Writes through a uniquely named temporary file and renames it into place,
/// so readers see either the old or the new contents.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let seq = COUNTER.fetch_add(1, AtomicOrdering::Relaxed);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}-{seq}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// Convenience wrapper around [`Fetcher::fetch_page`].
pub async fn fetch_page(entry: &SearchResultEntry, policy: &FetchPolicy) -> Result<RawPage> {
    Ok(Fetcher::new(policy.clone())?.fetch_page(entry).await)
}

/// Convenience wrapper around [`Fetcher::fetch_all`].
pub async fn fetch_all(list: &ResultList, policy: &FetchPolicy) -> Result<Vec<RawPage>> {
    Ok(Fetcher::new(policy.clone())?.fetch_all(list).await)
}
