//! Segmentation-based digest pages from search results.
//!
//! Given a ranked result list, a user profile and an HTML template, the
//! pipeline fetches the result pages, splits each into segments, weighs every
//! segment by query and profile term density, keeps the segments above a
//! threshold, and writes them into the template's slots.
//!
//! ```no_run
//! # async fn run() -> digestweaver::Result<()> {
//! use digestweaver::{compose, load_result_list, FetchPolicy, PipelineConfig, Profile};
//!
//! let list = load_result_list("results.json".as_ref())?;
//! let profile = Profile::from_terms("me", [("tourism", 1.0)]);
//! let cfg = PipelineConfig { fetch: FetchPolicy::offline(), ..PipelineConfig::default() };
//! let (page, report) = compose(&list, &profile, &cfg).await?;
//! println!("{} candidates\n{}", report.candidates_selected, page.html);
//! # Ok(()) }
//! ```

pub mod error;
pub mod ingest;
pub mod page_builder;
pub mod pipeline;
pub mod profile;
pub mod scorer;
pub mod segmenter;
pub mod tree;

pub use error::{Error, Result};
pub use ingest::{
    fetch_all, fetch_page, load_result_list, FetchMode, FetchPolicy, FetchStatus, Fetcher, RawPage,
    ResultList, SearchResultEntry,
};
pub use page_builder::{build_page, parse_template, ComposedPage, Placement, Template};
pub use pipeline::{
    compose, compose_from, score_matrix, segment_select, PipelineConfig, PipelineReport,
    StageDurations,
};
pub use profile::{
    load_profile, normalize_terms, save_profile, Profile, ProfileStore, ProfileTerm,
};
pub use scorer::{
    select_candidates, tokenize, tokenize_with, weigh_matrix, weigh_segment, CandidateSet,
    ScoreConfig, Stopwords, WeightedMatrix, WeightedSegment,
};
pub use segmenter::{build_segment_matrix, segment_page, SegConfig, Segment, SegmentMatrix};
pub use tree::{parse_html, ContentTree};
