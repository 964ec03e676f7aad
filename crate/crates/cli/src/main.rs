//! `amq`: validate corpora, generate synthetic embeddings, run queries and
//! evaluations, and serve the review API.
//!
//! Exit codes: 0 success, 1 operational or flag error, 2 validation findings.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use amq_core::corpus::{validate_inputs, CorpusError, GoldSet};
use amq_core::embedding::{synth_embeddings, EmbeddingError};
use amq_core::evaluation::Grid;
use amq_core::pipeline::{
    run_query, PipelineConfig, PipelineError, ProbeTable, ProbeTableError, QueryInput, ScoreAgainst,
};
use amq_core::report::{emit_reports, ExportDocument};
use amq_core::study::{run_study, summary_table, StudyError};
use amq_core::threshold::KneeScope;
use amq_core::{Dictionary, EmbeddingStore};
use amq_service::{AppState, Corpus};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Embeddings {
        path: PathBuf,
        #[source]
        source: EmbeddingError,
    },
    #[error(transparent)]
    Probes(#[from] ProbeTableError),
    #[error("{stage} stage failed: {source}")]
    Pipeline {
        stage: &'static str,
        #[source]
        source: PipelineError,
    },
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("invalid flags: {0}")]
    Flags(String),
}

impl From<PipelineError> for CliError {
    fn from(source: PipelineError) -> Self {
        CliError::Pipeline {
            stage: source.stage(),
            source,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Parser)]
#[command(
    name = "amq",
    version,
    about = "Automated medical query retrieval and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report non-term inputs and unreachable gold terms of a gold set.
    Validate {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Lexical ratio an input needs to count as a dictionary term.
        #[arg(long, default_value_t = amq_core::lexical::DEFAULT_LEXICAL_CUTOFF, value_parser = unit_interval)]
        lexical_cutoff: f64,
    },
    /// Rank the dictionary for one query and print the retained terms.
    Query {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Probe side-table for free-text inputs.
        #[arg(long)]
        probes: Option<PathBuf>,
        /// `auto` or a similarity in [-1, 1].
        #[arg(long, default_value = "auto", value_parser = parse_threshold)]
        threshold: Threshold,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// One or more input terms, pooled into a single query.
        #[arg(required = true)]
        terms: Vec<String>,
    },
    /// Evaluate a gold set over a grid of cut-offs and write reports.
    Eval {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `start:end:step`, both ends inclusive.
        #[arg(long, default_value = "0.5:0.9:0.05", value_parser = parse_grid)]
        grid: Grid,
        /// Also evaluate against narrow-scope gold terms only.
        #[arg(long)]
        narrow_only: bool,
        #[arg(long)]
        probes: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Write deterministic synthetic unit embeddings for a dictionary.
    Synth {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        dim: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the review API.
    Serve {
        #[arg(long, env = "AMQ_DICT")]
        dict: PathBuf,
        #[arg(long, env = "AMQ_EMBEDDINGS")]
        embeddings: PathBuf,
        #[arg(long, env = "AMQ_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long, env = "AMQ_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = "AMQ_PROBES")]
        probes: Option<PathBuf>,
        /// Directory of static files served at `/`.
        #[arg(long, env = "AMQ_UI_DIR")]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug)]
enum Threshold {
    Auto,
    Fixed(f64),
}

fn parse_threshold(s: &str) -> Result<Threshold, String> {
    if s == "auto" {
        return Ok(Threshold::Auto);
    }
    let t: f64 = s
        .parse()
        .map_err(|_| format!("expected `auto` or a number, got {s:?}"))?;
    if !(-1.0..=1.0).contains(&t) {
        return Err(format!("threshold {t} not in [-1, 1]"));
    }
    Ok(Threshold::Fixed(t))
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    s.parse()
        .map_err(|e: amq_core::evaluation::EvalError| e.to_string())
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} not in (0, 1]"))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Full,
    RelevantCluster,
}

#[derive(Clone, Copy, ValueEnum)]
enum AgainstArg {
    Probe,
    MaxProbeSeeds,
}

/// Pipeline settings shared by `query` and `eval`.
#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    lexical_cutoff: Option<f64>,
    #[arg(long)]
    semantic_top_k: Option<usize>,
    #[arg(long)]
    semantic_margin: Option<f64>,
    #[arg(long)]
    knee_sensitivity: Option<f64>,
    #[arg(long, value_enum)]
    knee_scope: Option<ScopeArg>,
    #[arg(long, value_enum)]
    score_against: Option<AgainstArg>,
    /// Do not force matched seed terms into the retained list.
    #[arg(long)]
    no_seed_retention: bool,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig, CliError> {
        let d = PipelineConfig::default();
        let config = PipelineConfig {
            lexical_cutoff: self.lexical_cutoff.unwrap_or(d.lexical_cutoff),
            semantic_top_k: self.semantic_top_k.unwrap_or(d.semantic_top_k),
            semantic_margin: self.semantic_margin.unwrap_or(d.semantic_margin),
            knee_sensitivity: self.knee_sensitivity.unwrap_or(d.knee_sensitivity),
            knee_scope: match self.knee_scope {
                None => d.knee_scope,
                Some(ScopeArg::Full) => KneeScope::Full,
                Some(ScopeArg::RelevantCluster) => KneeScope::RelevantCluster,
            },
            score_against: match self.score_against {
                None => d.score_against,
                Some(AgainstArg::Probe) => ScoreAgainst::Probe,
                Some(AgainstArg::MaxProbeSeeds) => ScoreAgainst::MaxProbeSeeds,
            },
            include_matched_seeds: !self.no_seed_retention,
            manual_threshold: None,
        };
        config
            .validate()
            .map_err(|e| CliError::Flags(e.to_string()))?;
        Ok(config)
    }
}

fn load_store(path: &Path, dict: &Dictionary) -> Result<EmbeddingStore, CliError> {
    EmbeddingStore::load(path, dict).map_err(|source| CliError::Embeddings {
        path: path.to_path_buf(),
        source,
    })
}

fn load_probes(path: Option<&Path>) -> Result<ProbeTable, CliError> {
    Ok(match path {
        Some(p) => ProbeTable::load(p)?,
        None => ProbeTable::new(),
    })
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_err("writing stdout"))
}

fn validate(dict: &Path, gold: &Path, cutoff: f64) -> Result<ExitCode, CliError> {
    let dictionary = Dictionary::load(dict)?;
    let gold = GoldSet::load(gold, &dictionary)?;
    let mut out = String::new();
    let mut findings = 0;

    let mut non_pt = Vec::new();
    for q in &gold.queries {
        for check in validate_inputs(q, &dictionary, cutoff) {
            if !check.is_valid_pt {
                let best = check.best.as_ref().map_or("none".to_string(), |m| {
                    let name = dictionary.get(m.code).map_or("", |t| t.name.as_str());
                    format!("{name} ({}) ratio {:.3}", m.code, m.score)
                });
                non_pt.push(format!(
                    "  {}\t{:?}\tclosest: {best}\n",
                    q.query_id, check.input_term
                ));
            }
        }
    }
    if !non_pt.is_empty() {
        findings += non_pt.len();
        out.push_str("non-PT inputs:\n");
        non_pt.iter().for_each(|l| out.push_str(l));
    }
    if !gold.warnings.is_empty() {
        findings += gold.warnings.len();
        out.push_str("unreachable gold terms:\n");
        for w in &gold.warnings {
            out.push_str(&format!("  {}\t{}\n", w.query_id, w.code));
        }
    }
    out.push_str(&format!(
        "{} queries, {} terms, {findings} findings\n",
        gold.queries.len(),
        dictionary.len()
    ));
    write_stdout(&out)?;
    Ok(if findings == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Validate {
            dict,
            gold,
            lexical_cutoff,
        } => validate(&dict, &gold, lexical_cutoff),
        Command::Query {
            dict,
            embeddings,
            probes,
            threshold,
            format,
            pipeline,
            terms,
        } => {
            let mut config = pipeline.config()?;
            if let Threshold::Fixed(t) = threshold {
                config.manual_threshold = Some(t);
            }
            let input = QueryInput::new(terms).with_config(config);
            input.validate()?;
            let dictionary = Dictionary::load(&dict)?;
            let store = load_store(&embeddings, &dictionary)?;
            let probes = load_probes(probes.as_deref())?;
            let result = run_query(&input, &dictionary, &store, &probes)?;
            let doc = ExportDocument::retained(&result);
            write_stdout(&match format {
                Format::Csv => doc.to_csv(),
                Format::Json => doc.to_json(),
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            dict,
            embeddings,
            gold,
            out,
            grid,
            narrow_only,
            probes,
            pipeline,
        } => {
            let config = pipeline.config()?;
            let dictionary = Dictionary::load(&dict)?;
            let store = load_store(&embeddings, &dictionary)?;
            let probes = load_probes(probes.as_deref())?;
            let gold = GoldSet::load(&gold, &dictionary)?;
            for w in &gold.warnings {
                tracing::warn!(
                    "query {}: gold code {} is not in the dictionary",
                    w.query_id,
                    w.code
                );
            }
            let study = run_study(
                &gold.queries,
                &dictionary,
                &store,
                &probes,
                &config,
                &grid,
                narrow_only,
            )?;
            let files = emit_reports(&out, &study.standard, study.narrow.as_ref())
                .map_err(io_err(format!("writing reports to {}", out.display())))?;
            let mut text = summary_table(&study.standard);
            if let Some(n) = &study.narrow {
                text.push_str("\nnarrow-only gold:\n");
                text.push_str(&summary_table(n));
            }
            write_stdout(&text)?;
            tracing::info!("wrote {} report files to {}", files.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth {
            dict,
            dim,
            seed,
            out,
        } => {
            let dictionary = Dictionary::load(&dict)?;
            let store = synth_embeddings(&dictionary, dim as usize, seed).map_err(|source| {
                CliError::Embeddings {
                    path: out.clone(),
                    source,
                }
            })?;
            let tmp = out.with_extension("amqe.tmp");
            store
                .save(&tmp)
                .and_then(|_| fs::rename(&tmp, &out))
                .map_err(io_err(format!("writing {}", out.display())))?;
            // the written file must load back against the dictionary
            load_store(&out, &dictionary)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            dict,
            embeddings,
            data_dir,
            addr,
            probes,
            ui_dir,
        } => {
            let dictionary = Dictionary::load(&dict)?;
            let store = load_store(&embeddings, &dictionary)?;
            let probes = load_probes(probes.as_deref())?;
            let state = AppState::open(
                Corpus {
                    dictionary,
                    store,
                    probes,
                },
                &data_dir,
            )
            .map_err(io_err(format!("opening data dir {}", data_dir.display())))?;
            let runtime = tokio::runtime::Runtime::new().map_err(io_err("starting runtime"))?;
            runtime
                .block_on(amq_service::serve(state, addr, ui_dir))
                .map_err(io_err(format!("serving on {addr}")))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.command {
        Command::Serve { .. } => tracing::Level::INFO,
        _ => tracing::Level::WARN,
    };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_max_level(level)
        .init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
