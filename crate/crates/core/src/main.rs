use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commit_rationale::annotate::{read_corpus_jsonl, Label};
use commit_rationale::eval::{cv_binary, cv_multilabel, undersample, CSV_HEADER};
use commit_rationale::ingest::{parse_git_log, preprocess_all, read_clean_commits_jsonl};
use commit_rationale::kgraph::{apply_inference, build_graph, check_consistency, KnowledgeGraph};
use commit_rationale::models::ModelSpec;
use commit_rationale::pipeline::{
    corpus_dataset, export_viz_json, label_map, run_pipeline, to_jsonl, to_sorted_json, ModelBundle,
    PipelineConfig, CLEAN_COMMITS_FILE, GRAPH_FILE, INFERRED_GRAPH_FILE, PREDICTIONS_FILE, REPORT_FILE,
    VIZ_FILE,
};
use commit_rationale::query::{evaluate, parse_query, rows_to_table, RATIONALE_REPORT_QUERY};
use commit_rationale::{Error, Result};

#[derive(Parser)]
#[command(name = "commit-rationale", version, about = "Extract decisions and rationale from git commit messages")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pipeline configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a `git log` dump and write cleaned commits.
    Ingest {
        #[arg(long)]
        input: PathBuf,
    },
    /// Label cleaned commits with a trained model.
    Label {
        #[arg(long)]
        commits: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Train a model bundle on a labelled corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "gbt")]
        family: String,
        /// JSON model spec; overrides --family.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Cross-validate a learner on a labelled corpus and print CSV metrics.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "gbt")]
        family: String,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Evaluate a one-vs-rest binary task for this label instead of all labels.
        #[arg(long)]
        label: Option<String>,
        /// Per-class row cap for the binary task, e.g. `true=100`.
        #[arg(long)]
        cap: Vec<String>,
    },
    /// Build the knowledge graph from cleaned commits and sentence labels.
    Graph {
        #[arg(long)]
        commits: PathBuf,
        /// Labelled corpus or predictions (JSONL).
        #[arg(long)]
        labels: PathBuf,
    },
    /// Apply inference rules to a graph and check its consistency.
    Infer {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Run a query against a graph.
    Query {
        #[arg(long)]
        graph: PathBuf,
        /// Query text.
        #[arg(long, conflicts_with = "query_file")]
        query: Option<String>,
        #[arg(long)]
        query_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Commit/sentence rationale report of an inferred graph.
    Report {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Export the visualization tree of an inferred graph.
    Viz {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Run every stage as described by --config.
    Pipeline,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

fn load_spec(family: &str, spec: Option<&Path>) -> Result<ModelSpec> {
    match spec {
        Some(p) => Ok(serde_json::from_str(&read(p)?)?),
        None => ModelSpec::from_family(family),
    }
}

fn load_graph(path: &Path) -> Result<KnowledgeGraph> {
    KnowledgeGraph::from_json(&read(path)?)
}

fn parse_label(name: &str) -> Result<Label> {
    Label::CLASSIFIED
        .into_iter()
        .find(|l| l.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Parameter(format!("unknown label `{name}`")))
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Ingest { input } => {
            let commits = preprocess_all(&parse_git_log(&read(&input)?)?);
            let path = write(&out, CLEAN_COMMITS_FILE, &to_jsonl(&commits)?)?;
            println!("{} commits -> {}", commits.len(), path.display());
        }
        Command::Label { commits, model } => {
            let commits = read_clean_commits_jsonl(&read(&commits)?)?;
            let bundle = ModelBundle::from_json(&read(&model)?)?;
            let predicted = bundle.label_commits(&commits)?;
            let path = write(&out, PREDICTIONS_FILE, &to_jsonl(&predicted)?)?;
            println!("{} sentences -> {}", predicted.len(), path.display());
        }
        Command::Train { corpus, family, spec } => {
            let records = read_corpus_jsonl(&read(&corpus)?)?;
            let spec = load_spec(&family, spec.as_deref())?;
            let bundle = ModelBundle::train(&records, &spec, seed)?;
            let path = write(&out, "model.json", &bundle.to_json()?)?;
            println!("{} model, {} features -> {}", spec.family_name(), bundle.vectorizer.dim(), path.display());
        }
        Command::Eval {
            corpus,
            family,
            spec,
            folds,
            label,
            cap,
        } => {
            let records = read_corpus_jsonl(&read(&corpus)?)?;
            let spec = load_spec(&family, spec.as_deref())?;
            let (_, d) = corpus_dataset(&records)?;
            let report = match label {
                None => cv_multilabel(&spec, &d, folds, seed)?,
                Some(name) => {
                    let column = parse_label(&name)?;
                    let j = Label::CLASSIFIED.iter().position(|&l| l == column).unwrap();
                    let mut binary = d.column(j);
                    if !cap.is_empty() {
                        let mut caps = std::collections::BTreeMap::new();
                        for c in &cap {
                            let (k, v) = c
                                .split_once('=')
                                .ok_or_else(|| Error::Parameter(format!("bad cap `{c}`")))?;
                            let class: bool = k.parse().map_err(|_| Error::Parameter(format!("bad class `{k}`")))?;
                            let n: usize = v.parse().map_err(|_| Error::Parameter(format!("bad count `{v}`")))?;
                            caps.insert(class, n);
                        }
                        binary = undersample(&binary, &caps, seed)?;
                    }
                    cv_binary(&spec, &binary, folds, seed)?
                }
            };
            let csv = format!("{CSV_HEADER}\n{}", report.csv_rows(spec.family_name()));
            if cli.out.is_some() {
                write(&out, "metrics.csv", &csv)?;
            }
            print!("{csv}");
        }
        Command::Graph { commits, labels } => {
            let commits = read_clean_commits_jsonl(&read(&commits)?)?;
            let labels = label_map(&read_corpus_jsonl(&read(&labels)?)?)?;
            let g = build_graph(&commits, &labels)?;
            let path = write(&out, GRAPH_FILE, &to_sorted_json(&g)?)?;
            println!("{} assertions -> {}", g.assertion_count(), path.display());
        }
        Command::Infer { graph } => {
            let g = apply_inference(&load_graph(&graph)?);
            let violations = check_consistency(&g);
            for v in &violations {
                eprintln!("violation: {}: {}", serde_json::to_value(v.kind)?.as_str().unwrap_or(""), v.detail);
            }
            let path = write(&out, INFERRED_GRAPH_FILE, &to_sorted_json(&g)?)?;
            println!("{} assertions, {} violations -> {}", g.assertion_count(), violations.len(), path.display());
        }
        Command::Query {
            graph,
            query,
            query_file,
            format,
        } => {
            let text = match (query, query_file) {
                (Some(q), _) => q,
                (None, Some(p)) => read(&p)?,
                (None, None) => return Err(Error::Parameter("pass --query or --query-file".into())),
            };
            let q = parse_query(&text)?;
            let rows = evaluate(&q, &load_graph(&graph)?);
            match format {
                Format::Json => print!("{}", to_sorted_json(&rows)?),
                Format::Table => print!("{}", rows_to_table(&q.columns(), &rows)),
            }
        }
        Command::Report { graph, format } => {
            let q = parse_query(RATIONALE_REPORT_QUERY)?;
            let rows = evaluate(&q, &load_graph(&graph)?);
            match format {
                Format::Json => {
                    let json = to_sorted_json(&rows)?;
                    if cli.out.is_some() {
                        write(&out, REPORT_FILE, &json)?;
                    }
                    print!("{json}");
                }
                Format::Table => print!("{}", rows_to_table(&q.columns(), &rows)),
            }
        }
        Command::Viz { graph } => {
            let path = write(&out, VIZ_FILE, &export_viz_json(&load_graph(&graph)?)?)?;
            println!("{}", path.display());
        }
        Command::Pipeline => {
            let path = cli
                .config
                .as_deref()
                .ok_or_else(|| Error::Parameter("pipeline needs --config".into()))?;
            let mut cfg: PipelineConfig = serde_json::from_str(&read(path)?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = cli.out {
                cfg.out_dir = o;
            }
            for p in run_pipeline(&cfg)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", e.kind());
            ExitCode::FAILURE
        }
    }
}
