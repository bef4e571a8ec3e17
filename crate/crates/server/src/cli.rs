//! `chronomap` subcommands.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chronomap::eval::{build_report, generate_benchmark, load_benchmark, read_log, run_benchmark, write_log, RunOptions};
use chronomap::ingest::{load_boundaries, FixtureGazetteer, Gazetteer, Ingestor};
use chronomap::kgstore::vocab::{compact, CMR};
use chronomap::kgstore::{Literal, Store, Term};
use chronomap::qa::{DescriptiveOptions, Status};
use chronomap::query::{evaluate, parse, to_sparql_json, QueryResult};
use chronomap::relations::{compute_all, materialize, write_provenance, RelFeature, RelationConfig};
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::app::{load_store, App};
use crate::config::{AppConfig, Backend};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "chronomap", version, about = "Spatio-temporal knowledge graph over historical map features")]
pub struct Cli {
    /// Application config file; goes before the subcommand.
    #[arg(long, default_value = "config.toml")]
    pub config: PathBuf,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load feature files, assign municipalities and names, write the store.
    Ingest,
    /// Recompute feature relations in the store.
    Relations {
        /// TOML file overriding the [relations] section.
        #[arg(long = "config")]
        relation_config: Option<PathBuf>,
    },
    /// Print the store as N-Triples, or write it with its schema.
    Dump {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a query from a file, or from stdin with `-`.
    Query { file: String },
    /// Answer a question.
    Qa {
        #[command(subcommand)]
        mode: QaMode,
    },
    /// Benchmark generation, runs and reports.
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum QaMode {
    Factual {
        question: String,
        #[arg(long, value_enum)]
        gateway: Option<Backend>,
    },
    Descriptive {
        question: String,
        #[arg(long)]
        map_image: bool,
        #[arg(long)]
        search: bool,
        #[arg(long, value_enum)]
        gateway: Option<Backend>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchAction {
    Generate {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Rephrase questions with the judge backend.
        #[arg(long)]
        paraphrase: bool,
    },
    Run {
        #[arg(long)]
        benchmark: PathBuf,
        /// Outcome log (JSON lines); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report JSON destination.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum)]
        gateway: Option<Backend>,
        #[arg(long)]
        map_image: bool,
        #[arg(long)]
        search: bool,
        #[arg(long)]
        label: Option<String>,
    },
    Report {
        logs: Vec<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let json = cli.json;
    let mut out = std::io::stdout().lock();
    match execute(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            if json {
                let kind = if e.exit_code() == 1 { "user" } else { "internal" };
                let _ = writeln!(out, "{}", json!({ "error": e.to_string(), "kind": kind }));
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(CliError::internal)
}

fn emit_json(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(v).map_err(CliError::internal)?;
    emit(out, &format!("{s}\n"))
}

/// Runs a parsed command, writing results to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = AppConfig::load(&cli.config)?;
    let json = cli.json;
    match cli.command {
        Command::Ingest => ingest(&cfg, json, out),
        Command::Relations { relation_config } => {
            if let Some(p) = relation_config {
                cfg.relations = load_relation_config(&p)?;
                cfg.relations.validate().map_err(CliError::user)?;
            }
            relations(&cfg, json, out)
        }
        Command::Dump { out: path } => {
            let store = load_store(&cfg.data.store)?;
            match path {
                Some(p) => {
                    store.dump(&p).map_err(CliError::user)?;
                    if json {
                        emit_json(out, &json!({ "triples": store.len(), "path": p }))
                    } else {
                        emit(out, &format!("{} triples written to {}\n", store.len(), p.display()))
                    }
                }
                None => emit(out, &store.dump_string()),
            }
        }
        Command::Query { file } => query(&cfg, &file, json, out),
        Command::Qa { mode } => qa(&mut cfg, mode, json, out),
        Command::Bench { action } => bench(&mut cfg, action, json, out),
        Command::Serve { bind } => {
            if let Some(b) = bind {
                cfg.server.bind = b;
            }
            let app = App::load(&cfg)?;
            let rt = tokio::runtime::Runtime::new().map_err(CliError::internal)?;
            rt.block_on(crate::api::serve(app, &cfg.server))
                .map_err(|e| CliError::User(format!("serve on {}: {e}", cfg.server.bind)))
        }
    }
}

fn ingest(cfg: &AppConfig, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if cfg.data.features.is_empty() {
        return Err(CliError::User("data.features lists no feature files".into()));
    }
    let mut ing = Ingestor::new(cfg.ingest.clone());
    let mut files = Vec::new();
    for f in &cfg.data.features {
        let stats = ing.ingest_features(&f.path, f.year, &f.sheet).map_err(CliError::user)?;
        files.push(json!({ "path": f.path, "year": f.year, "sheet": f.sheet, "stats": stats }));
    }
    let boundaries = match &cfg.data.boundaries {
        Some(p) => load_boundaries(p, &cfg.ingest.name_attribute).map_err(CliError::user)?,
        None => Vec::new(),
    };
    let gazetteer = match &cfg.data.gazetteer {
        Some(p) => Some(FixtureGazetteer::from_file(p).map_err(CliError::user)?),
        None => None,
    };
    let mut store = Store::default();
    let added = ing
        .emit(&mut store, &boundaries, gazetteer.as_ref().map(|g| g as &dyn Gazetteer))
        .map_err(CliError::internal)?;
    store.seal();
    store.dump(&cfg.data.store).map_err(CliError::user)?;
    for w in ing.warnings() {
        log::warn!("{w}");
    }
    if json {
        emit_json(
            out,
            &json!({ "triples": added, "features": ing.records().len(), "files": files, "warnings": ing.warnings(), "store": cfg.data.store }),
        )
    } else {
        emit(
            out,
            &format!(
                "{} features, {added} triples written to {} ({} warnings)\n",
                ing.records().len(),
                cfg.data.store.display(),
                ing.warnings().len()
            ),
        )
    }
}

fn relations(cfg: &AppConfig, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_store(&cfg.data.store)?;
    // drop earlier relation triples so a changed config does not accumulate edges
    let relation_prefix = format!("<{CMR}");
    let kept: String = loaded
        .dump_string()
        .lines()
        .filter(|l| l.split(' ').nth(1).is_none_or(|p| !p.starts_with(&relation_prefix)))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut store = Store::load_str(&kept, loaded.schema().clone()).map_err(CliError::internal)?;
    let feats: Vec<RelFeature> = store.features().iter().filter_map(RelFeature::from_view).collect();
    let edges = compute_all(&feats, &cfg.relations).map_err(CliError::user)?;
    let added = materialize(&edges, &mut store).map_err(CliError::internal)?;
    store.seal();
    store.dump(&cfg.data.store).map_err(CliError::user)?;
    if let Some(p) = &cfg.data.provenance {
        let f = std::fs::File::create(p).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
        write_provenance(&edges, &cfg.relations, std::io::BufWriter::new(f)).map_err(CliError::internal)?;
    }
    let hash = cfg.relations.hash();
    if json {
        emit_json(out, &json!({ "edges": edges.len(), "triples_added": added, "triples": store.len(), "config_hash": hash }))
    } else {
        emit(out, &format!("{} edges ({added} triples), config {hash}\n", edges.len()))
    }
}

fn cell(t: &Option<Term>) -> String {
    match t {
        None => String::new(),
        Some(Term::Iri(i)) => compact(i),
        Some(Term::Literal(Literal::String(s))) => s.to_string(),
        Some(Term::Literal(l)) => l.lexical(),
        Some(Term::Geometry(_)) => "<geometry>".into(),
    }
}

fn query(cfg: &AppConfig, file: &str, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let text = if file == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(CliError::internal)?;
        s
    } else {
        std::fs::read_to_string(file).map_err(|e| CliError::User(format!("{file}: {e}")))?
    };
    let q = parse(&text).map_err(CliError::user)?;
    let store = load_store(&cfg.data.store)?;
    let ev = evaluate(&q, &store).map_err(CliError::user)?;
    if json {
        return emit(out, &format!("{}\n", to_sparql_json(&ev.result, &store)));
    }
    match &ev.result {
        QueryResult::Boolean(b) => emit(out, &format!("{b}\n")),
        QueryResult::Table(t) => {
            let mut s = t.vars.iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join("\t");
            s.push('\n');
            for row in &t.rows {
                s.push_str(&row.iter().map(cell).collect::<Vec<_>>().join("\t"));
                s.push('\n');
            }
            emit(out, &s)
        }
    }
}

fn qa(cfg: &mut AppConfig, mode: QaMode, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let gateway = match &mode {
        QaMode::Factual { gateway, .. } | QaMode::Descriptive { gateway, .. } => *gateway,
    };
    if let Some(b) = gateway {
        cfg.override_backend(b)?;
    }
    let app = App::load(cfg)?;
    let p = app.pipeline();
    let (answer, status, value) = match mode {
        QaMode::Factual { question, .. } => {
            let r = p.answer_factual(&question);
            (r.answer.clone(), r.status.clone(), serde_json::to_value(&r))
        }
        QaMode::Descriptive {
            question,
            map_image,
            search,
            ..
        } => {
            let opts = DescriptiveOptions {
                use_map_image: map_image,
                use_search: search,
            };
            let r = p.answer_descriptive(&question, opts);
            (r.answer.clone(), r.status.clone(), serde_json::to_value(&r))
        }
    };
    if json {
        return emit_json(out, &value.map_err(CliError::internal)?);
    }
    match status {
        Status::Delivered => emit(out, &format!("{answer}\n")),
        Status::Failed { stage, reason } => emit(out, &format!("failed at {}: {reason}\n", stage.as_str())),
    }
}

fn bench(cfg: &mut AppConfig, action: BenchAction, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    match action {
        BenchAction::Generate { out: path, seed, paraphrase } => {
            let store = load_store(&cfg.data.store)?;
            let gw = if paraphrase { Some(cfg.gateway()?) } else { None };
            let b = generate_benchmark(&store, cfg.bench.counts, seed.unwrap_or(cfg.bench.seed), gw.as_ref()).map_err(CliError::user)?;
            for w in &b.warnings {
                log::warn!("{w}");
            }
            let text = serde_json::to_string_pretty(&b.items).map_err(CliError::internal)? + "\n";
            match path {
                Some(p) => {
                    write_file(&p, &text)?;
                    if json {
                        emit_json(out, &json!({ "items": b.items.len(), "warnings": b.warnings, "path": p }))
                    } else {
                        emit(out, &format!("{} items written to {}\n", b.items.len(), p.display()))
                    }
                }
                None => emit(out, &text),
            }
        }
        BenchAction::Run {
            benchmark,
            out: log_path,
            report,
            gateway,
            map_image,
            search,
            label,
        } => {
            if let Some(b) = gateway {
                cfg.override_backend(b)?;
            }
            let text = std::fs::read_to_string(&benchmark).map_err(|e| CliError::User(format!("{}: {e}", benchmark.display())))?;
            let items = load_benchmark(&text).map_err(CliError::user)?;
            let app = App::load(cfg)?;
            let opts = RunOptions {
                descriptive: DescriptiveOptions {
                    use_map_image: map_image,
                    use_search: search,
                },
                width: cfg.qa.parallel_width,
                normalization: cfg.bench.normalization.clone(),
                ..Default::default()
            };
            let log = run_benchmark(&items, &app.pipeline(), &opts);
            let mut buf = Vec::new();
            write_log(&log, &mut buf).map_err(CliError::internal)?;
            let label = label.unwrap_or_else(|| cfg.bench.label.clone());
            let rep = build_report(&label, &log).map_err(CliError::user)?;
            if let Some(p) = &report {
                write_file(p, &(rep.to_json() + "\n"))?;
            }
            match log_path {
                Some(p) => {
                    write_file(&p, std::str::from_utf8(&buf).map_err(CliError::internal)?)?;
                    if json {
                        emit(out, &(rep.to_json() + "\n"))
                    } else {
                        emit(out, &rep.render())
                    }
                }
                None => out.write_all(&buf).map_err(CliError::internal),
            }
        }
        BenchAction::Report { logs, label, out: path } => {
            if logs.is_empty() {
                return Err(CliError::User("bench report needs at least one outcome log".into()));
            }
            let mut entries = Vec::new();
            for p in &logs {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::User(format!("{}: {e}", p.display())))?;
                entries.extend(read_log(&text).map_err(CliError::user)?);
            }
            let rep = build_report(&label.unwrap_or_else(|| cfg.bench.label.clone()), &entries).map_err(CliError::user)?;
            if let Some(p) = &path {
                write_file(p, &(rep.to_json() + "\n"))?;
            }
            if json {
                emit(out, &(rep.to_json() + "\n"))
            } else {
                emit(out, &rep.render())
            }
        }
    }
}

/// Relation config read from a standalone TOML file.
pub fn load_relation_config(path: &Path) -> Result<RelationConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}
