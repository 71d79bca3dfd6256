//! End-to-end orchestration: select candidates from a result list, then
//! build the composed page from them.

use std::path::PathBuf;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{FetchPolicy, Fetcher, RawPage, ResultList};
use crate::page_builder::{build_page, ComposedPage, Template};
use crate::profile::Profile;
use crate::scorer::{select_candidates, weigh_matrix, CandidateSet, ScoreConfig, WeightedMatrix};
use crate::segmenter::{build_segment_matrix, SegConfig, SegmentMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub fetch: FetchPolicy,
    pub seg: SegConfig,
    pub score: ScoreConfig,
    /// Built-in default template when unset.
    pub template_path: Option<PathBuf>,
    pub profile_id: String,
    /// Pins the `{{GENERATED_AT}}` timestamp; the current time when unset.
    pub generated_at: Option<DateTime<Utc>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fetch: FetchPolicy::default(),
            seg: SegConfig::default(),
            score: ScoreConfig::default(),
            template_path: None,
            profile_id: "default".into(),
            generated_at: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.fetch.validate()?;
        self.seg.validate()?;
        self.score.validate()
    }

    pub fn template(&self) -> Result<Template> {
        match &self.template_path {
            Some(path) => Template::load(path),
            None => Ok(Template::default_template()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDurations {
    pub fetch_ms: u64,
    pub segment_ms: u64,
    pub score_ms: u64,
    pub build_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub pages_fetched: usize,
    pub pages_skipped: usize,
    pub segments_total: usize,
    pub candidates_selected: usize,
    pub durations: StageDurations,
}

fn elapsed_ms(since: Instant) -> u64 {
    since.elapsed().as_millis().try_into().unwrap_or(u64::MAX)
}

/// Fetched pages and their segment matrix, with the report filled so far.
pub async fn segment_result_list(
    list: &ResultList,
    cfg: &PipelineConfig,
) -> Result<(Vec<RawPage>, SegmentMatrix, PipelineReport)> {
    cfg.validate()?;
    let mut report = PipelineReport::default();

    let start = Instant::now();
    let pages = Fetcher::new(cfg.fetch.clone())?.fetch_all(list).await;
    report.durations.fetch_ms = elapsed_ms(start);
    report.pages_fetched = pages.iter().filter(|p| p.is_ok()).count();
    report.pages_skipped = pages.len() - report.pages_fetched;

    let start = Instant::now();
    let omega = build_segment_matrix(&pages, &cfg.seg);
    report.durations.segment_ms = elapsed_ms(start);
    report.segments_total = omega.segment_count();

    Ok((pages, omega, report))
}

/// The weighted segment matrix for `list`.
pub async fn score_matrix(
    list: &ResultList,
    profile: &Profile,
    cfg: &PipelineConfig,
) -> Result<(WeightedMatrix, PipelineReport)> {
    let (_, omega, mut report) = segment_result_list(list, cfg).await?;
    let start = Instant::now();
    let phi = weigh_matrix(&omega, list.query(), profile, &cfg.score);
    report.durations.score_ms = elapsed_ms(start);
    Ok((phi, report))
}

/// Fetch, segment, weigh and select: result list plus profile in, candidate
/// set out.
pub async fn segment_select(
    list: &ResultList,
    profile: &Profile,
    cfg: &PipelineConfig,
) -> Result<(CandidateSet, PipelineReport)> {
    let (_, omega, mut report) = segment_result_list(list, cfg).await?;
    let start = Instant::now();
    let phi = weigh_matrix(&omega, list.query(), profile, &cfg.score);
    let candidates = select_candidates(&phi, &cfg.score);
    report.durations.score_ms = elapsed_ms(start);
    report.candidates_selected = candidates.len();
    Ok((candidates, report))
}

/// [`segment_select`] followed by page construction.
pub async fn compose(
    list: &ResultList,
    profile: &Profile,
    cfg: &PipelineConfig,
) -> Result<(ComposedPage, PipelineReport)> {
    let template = cfg.template()?;
    let (candidates, report) = segment_select(list, profile, cfg).await?;
    Ok(compose_from(
        &candidates,
        report,
        &template,
        list.query(),
        cfg,
    ))
}

/// Page construction over an already selected candidate set.
pub fn compose_from(
    candidates: &CandidateSet,
    mut report: PipelineReport,
    template: &Template,
    query: &str,
    cfg: &PipelineConfig,
) -> (ComposedPage, PipelineReport) {
    let start = Instant::now();
    let at = cfg.generated_at.unwrap_or_else(Utc::now);
    let page = build_page(candidates, template, query, at);
    report.durations.build_ms = elapsed_ms(start);
    (page, report)
}
