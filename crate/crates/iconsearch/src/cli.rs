use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use iconsearch_core::eval::{self, generate_sheet, list_overlap, SheetQuery, SHEET_DEPTH};
use iconsearch_core::{Corpus, Ranking};
use serde::Serialize;

use crate::api;
use crate::config::ServiceConfig;
use crate::service::{Mode, SearchOptions, SearchResponse, Service};

#[derive(Debug, Parser)]
#[command(name = "iconsearch", version, about = "Multimodal Iconclass concept search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate an embeddings file and metadata and write a corpus directory.
    Ingest {
        /// ICNX embeddings file.
        #[arg(long)]
        embeddings: PathBuf,
        /// JSONL metadata file.
        #[arg(long)]
        metadata: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Start the HTTP API.
    Serve {
        #[command(flatten)]
        config: ConfigArg,
        /// Overrides the configured listen address.
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
    },
    /// Run a single search and print the JSON response.
    Query {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum, default_value = "multimodal")]
        mode: ModeArg,
        /// Text query.
        #[arg(long, required_unless_present = "image", conflicts_with = "image")]
        q: Option<String>,
        /// Image file; needs an encoder endpoint.
        #[arg(long)]
        image: Option<PathBuf>,
        #[command(flatten)]
        options: OptionArgs,
    },
    /// Build a blinded side-by-side sheet for multimodal (A) vs TF-IDF (B).
    EvalSheet {
        #[command(flatten)]
        config: ConfigArg,
        /// One query per line, optionally followed by a tab and an image reference.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV for judges.
        #[arg(long)]
        sheet: PathBuf,
        /// Output JSONL side assignment; keep it away from judges.
        #[arg(long)]
        key: PathBuf,
    },
    /// Unblind judge responses and print per-system counts.
    EvalTally {
        /// CSV with header row_id,preferred,criterion.
        #[arg(long)]
        responses: PathBuf,
        /// Key file written by eval-sheet.
        #[arg(long)]
        key: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Service configuration file.
    #[arg(long, env = "ICONSEARCH_CONFIG")]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptionArgs {
    /// Neighbor images to fetch.
    #[arg(long)]
    pub k: Option<usize>,
    /// Notations to return.
    #[arg(long)]
    pub n: Option<usize>,
    /// IVF partitions to probe.
    #[arg(long)]
    pub probe: Option<usize>,
    #[arg(long, value_enum, default_value = "count")]
    pub ranking: RankingArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Multimodal,
    Tfidf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RankingArg {
    Count,
    ScoreSum,
}

impl OptionArgs {
    fn to_options(&self) -> SearchOptions {
        SearchOptions {
            k: self.k,
            n: self.n,
            probe: self.probe,
            ranking: match self.ranking {
                RankingArg::Count => Ranking::Count,
                RankingArg::ScoreSum => Ranking::ScoreSum,
            },
        }
    }
}

fn load_service(path: &Path) -> anyhow::Result<(ServiceConfig, Service)> {
    let config = ServiceConfig::load(path)?;
    let service = Service::from_config(&config).with_context(|| format!("loading {}", path.display()))?;
    Ok((config, service))
}

#[derive(Serialize)]
struct IngestSummary {
    #[serde(flatten)]
    stats: iconsearch_core::CorpusStats,
    #[serde(flatten)]
    report: iconsearch_core::IngestReport,
    dim: usize,
}

#[derive(Serialize)]
struct SheetSummary {
    rows: usize,
    failures: usize,
    mean_overlap: f64,
}

/// Runs one subcommand, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { embeddings, metadata, out: dir } => {
            let (corpus, report) = Corpus::ingest(&embeddings, &metadata)?;
            corpus.persist(&dir)?;
            let summary = IngestSummary {
                stats: corpus.stats(),
                report,
                dim: corpus.matrix().dim(),
            };
            writeln!(out, "{}", serde_json::to_string(&summary)?)?;
        }
        Command::Serve { config, listen } => {
            let (config, service) = load_service(&config.config)?;
            let addr = listen.unwrap_or(config.listen);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .with_context(|| format!("binding {addr}"))?;
                tracing::info!(address = %listener.local_addr()?, "listening");
                let router = api::router(Arc::new(service), config.static_dir.as_deref());
                api::serve(listener, router, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Query {
            config,
            mode,
            q,
            image,
            options,
        } => {
            let (_, service) = load_service(&config.config)?;
            let options = options.to_options();
            let response = match (q, image) {
                (_, Some(path)) => {
                    let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
                    SearchResponse::Multimodal(service.search_image(bytes, &options)?)
                }
                (Some(q), None) => {
                    let mode = match mode {
                        ModeArg::Multimodal => Mode::Multimodal,
                        ModeArg::Tfidf => Mode::Tfidf,
                    };
                    service.search_text(&q, mode, &options)?
                }
                (None, None) => bail!("either --q or --image is required"),
            };
            writeln!(out, "{}", serde_json::to_string(&response)?)?;
        }
        Command::EvalSheet {
            config,
            queries,
            seed,
            sheet,
            key,
        } => {
            let (_, service) = load_service(&config.config)?;
            let queries = read_queries(&queries)?;
            let options = SearchOptions {
                n: Some(SHEET_DEPTH),
                ..SearchOptions::default()
            };
            let top = |mode: Mode| {
                let service = &service;
                let options = &options;
                move |q: &SheetQuery| match service.search_text(&q.query, mode, options) {
                    Ok(SearchResponse::Multimodal(r)) => Ok(r.notations.into_iter().map(|a| (a.code, a.label)).collect()),
                    Ok(SearchResponse::Tfidf(r)) => Ok(r.notations.into_iter().map(|h| (h.code, h.label)).collect()),
                    Err(e) => Err(e.to_string()),
                }
            };
            let generated = generate_sheet(&queries, top(Mode::Multimodal), top(Mode::Tfidf), seed)?;
            generated.save(&sheet, &key)?;
            for failure in &generated.failures {
                tracing::warn!(row = failure.row_id, system = ?failure.system, "{}", failure.message);
            }
            let overlap_sum: f64 = generated
                .rows
                .iter()
                .map(|row| {
                    let codes = |list: &[(String, String)]| list.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>();
                    list_overlap(&codes(&row.left_results), &codes(&row.right_results), SHEET_DEPTH)
                })
                .sum();
            let summary = SheetSummary {
                rows: generated.rows.len(),
                failures: generated.failures.len(),
                mean_overlap: overlap_sum / generated.rows.len() as f64,
            };
            writeln!(out, "{}", serde_json::to_string(&summary)?)?;
        }
        Command::EvalTally { responses, key, json } => {
            let open = |p: &Path| File::open(p).with_context(|| format!("opening {}", p.display()));
            let tally = eval::tally(open(&responses)?, open(&key)?)?;
            if json {
                writeln!(out, "{}", serde_json::to_string(&tally)?)?;
            } else {
                write!(out, "{tally}")?;
            }
        }
    }
    Ok(())
}

fn read_queries(path: &Path) -> anyhow::Result<Vec<SheetQuery>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .filter(|line| !line.trim().is_empty())
        .map(|line| match line.split_once('\t') {
            Some((query, image_ref)) => SheetQuery {
                query: query.trim().to_string(),
                image_ref: Some(image_ref.trim().to_string()).filter(|r| !r.is_empty()),
            },
            None => SheetQuery::new(line.trim()),
        })
        .collect())
}
