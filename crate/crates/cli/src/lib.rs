//! The `digestweaver` command line.
//!
//! ```text
//! digestweaver compose --results R --profile-store S --profile-id ID [--template T] --out O
//!                      [--delta D --top-n N --alpha A --beta B --offline --parallelism P --now TS]
//! digestweaver segment --page P.html
//! digestweaver score   --results R --profile-store S --profile-id ID [compose tuning flags]
//! digestweaver profile set --store S --id ID [TERMS...]
//! digestweaver profile get --store S --id ID
//! ```
//!
//! Exit status is 0 on success, 1 for invalid input and 2 for I/O failures.

use std::io::Write;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use digestweaver::ingest::{DEFAULT_PARALLELISM, DEFAULT_TOP_N};
use digestweaver::scorer::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_DELTA};
use digestweaver::{
    compose, load_result_list, normalize_terms, score_matrix, segment_page, ContentTree, Error,
    FetchMode, FetchPolicy, PipelineConfig, Profile, ProfileStore, SegConfig, SegmentMatrix,
};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "digestweaver",
    version,
    about = "Compose a digest page from search results"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch, segment, score and write the composed page.
    Compose {
        #[command(flatten)]
        source: Source,
        /// Page template; the built-in single-column template when omitted.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print the segment dump of one HTML file.
    Segment {
        #[arg(long)]
        page: PathBuf,
    },
    /// Print the scored segment matrix.
    Score {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Read or replace a stored profile.
    Profile {
        #[command(subcommand)]
        action: ProfileAction,
    },
}

#[derive(Debug, Args)]
struct Source {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    profile_store: PathBuf,
    #[arg(long)]
    profile_id: String,
}

#[derive(Debug, Args)]
struct Tuning {
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    top_n: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Read each result's local html_path instead of its URL.
    #[arg(long)]
    offline: bool,
    #[arg(long, default_value_t = DEFAULT_PARALLELISM)]
    parallelism: usize,
    /// Fixed GENERATED_AT timestamp (RFC 3339).
    #[arg(long, value_parser = parse_now)]
    now: Option<DateTime<Utc>>,
}

#[derive(Debug, Subcommand)]
enum ProfileAction {
    /// Replace the profile's terms; each argument is tokenized.
    Set {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        id: String,
        terms: Vec<String>,
    },
    Get {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        id: String,
    },
}

fn parse_now(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("expected an RFC 3339 timestamp: {e}"))
}

impl Tuning {
    fn config(&self, profile_id: &str) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            profile_id: profile_id.to_string(),
            generated_at: self.now,
            ..PipelineConfig::default()
        };
        cfg.score.delta = self.delta;
        cfg.score.alpha = self.alpha;
        cfg.score.beta = self.beta;
        cfg.fetch = FetchPolicy {
            mode: if self.offline {
                FetchMode::Offline
            } else {
                FetchMode::Online
            },
            top_n: self.top_n,
            parallelism: self.parallelism,
            ..FetchPolicy::default()
        };
        cfg
    }
}

/// Runs the command line with `argv[0]` as the program name, writing to the
/// process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "digestweaver: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_IO
            }
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, Error> {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("starting async runtime", e))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Error> {
    writeln!(out, "{text}").map_err(|e| Error::io("writing output", e))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    match command {
        Command::Compose {
            source,
            template,
            out: out_path,
            tuning,
        } => {
            let cfg = PipelineConfig {
                template_path: template,
                ..tuning.config(&source.profile_id)
            };
            cfg.validate()?;
            let list = load_result_list(&source.results)?;
            let profile = ProfileStore::new(&source.profile_store).load(&source.profile_id)?;
            let (page, report) = runtime()?.block_on(compose(&list, &profile, &cfg))?;
            std::fs::write(&out_path, &page.html)
                .map_err(|e| Error::io(format!("writing {}", out_path.display()), e))?;
            let report = serde_json::to_string(&report).expect("report serializes");
            let _ = writeln!(err, "{report}");
            Ok(())
        }
        Command::Segment { page } => {
            let bytes = std::fs::read(&page)
                .map_err(|e| Error::io(format!("reading {}", page.display()), e))?;
            let tree = ContentTree::parse(&String::from_utf8_lossy(&bytes));
            let url = page.display().to_string();
            let omega = SegmentMatrix {
                rows: vec![segment_page(&tree, 0, &url, &SegConfig::default())],
            };
            write_out(out, &segment_dump(&omega))
        }
        Command::Score { source, tuning } => {
            let cfg = tuning.config(&source.profile_id);
            cfg.validate()?;
            let list = load_result_list(&source.results)?;
            let profile = ProfileStore::new(&source.profile_store).load(&source.profile_id)?;
            let (phi, _) = runtime()?.block_on(score_matrix(&list, &profile, &cfg))?;
            write_out(out, &phi.to_dump_json())
        }
        Command::Profile { action } => match action {
            ProfileAction::Set { store, id, terms } => {
                let profile = Profile::from_profile_terms(&id, normalize_terms(&terms));
                ProfileStore::new(&store).save(&profile)?;
                write_out(out, &profile_json(&profile))
            }
            ProfileAction::Get { store, id } => {
                write_out(out, &profile_json(&ProfileStore::new(&store).load(&id)?))
            }
        },
    }
}

/// `[[{"i", "j", "heading", "char_len", "text"}, ...], ...]`
pub fn segment_dump(omega: &SegmentMatrix) -> String {
    let rows: Vec<Value> = omega
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| {
                    json!({
                        "i": s.page_index,
                        "j": s.seg_index,
                        "heading": s.heading,
                        "char_len": s.char_len,
                        "text": s.text,
                    })
                })
                .collect()
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("dump serializes")
}

/// `{"terms": {term: weight}}`
pub fn profile_json(profile: &Profile) -> String {
    json!({ "terms": profile.term_map() }).to_string()
}
