//! `qadoc`: ingest documents, run the QA pipeline, and emit reports, curves,
//! and task datasets. All outputs are deterministic given the same inputs,
//! configuration, and oracle cache.

mod config;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use qadoc_core::error::Error as EngineError;
use qadoc_core::lattice::{
    classify_summary, enumerate_hierarchical, extend, factor_extension, factor_summary,
    inclusion_relation, render_extension_markup, render_summary_markup, suppress, ExtensionSpec,
    Selection,
};
use qadoc_core::measures;
use qadoc_core::model::Mode;
use qadoc_core::oracle::{FactSetOracle, LlmOracle, OracleCache, SemanticOracle, PROMPT_TEMPLATE_VERSION};
use qadoc_core::pipeline::{merge_pair, DocumentContext};
use qadoc_core::rd::{curve_to_csv, operational_curve, points_to_csv, sweep, RDPoint, Strategy};
use qadoc_core::rhetoric::{NodeId, SyntheticDocument};
use qadoc_core::Real64;

use config::{EffectiveConfig, Overrides};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Engine(EngineError::OracleFailure(_)) => 3,
            CliError::Engine(EngineError::NonConvergent(_)) => 4,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "qadoc", version, about = "Question-answer structure analysis of documents")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Oracle mode: factset or llm.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Seed for all randomness in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and datasets.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Oracle cache file (JSONL).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Cache-only operation; any network use is an error.
    #[arg(long, global = true)]
    offline: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a document (synthetic JSON or raw text).
    Ingest { doc: PathBuf },
    /// Build the abstractive DAG.
    Dag { doc: PathBuf },
    /// Build the DAG of core QA pairs.
    Qas { doc: PathBuf },
    /// Orthogonalize into atomic non-overlapping QAs.
    Ortho { doc: PathBuf },
    /// Compute the information measures report.
    Measure { doc: PathBuf },
    /// Suppress content: by explicit selection or by a budgeted strategy.
    Summarize {
        doc: PathBuf,
        /// Comma-separated node ids to keep.
        #[arg(long, conflicts_with = "budget")]
        selection: Option<String>,
        /// Word budget for the chosen strategy.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value = "lattice-greedy")]
        strategy: String,
        /// Allow non-hierarchical selections.
        #[arg(long)]
        allow_non_hierarchical: bool,
    },
    /// Extend the document per an extension-spec JSON file.
    Extend {
        doc: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Compare two documents: distance, mutual information, information gain.
    Compare { doc1: PathBuf, doc2: PathBuf },
    /// Rate-distortion sweep and operational curve CSVs.
    Rd {
        doc: PathBuf,
        /// Comma-separated strategies.
        #[arg(long, default_value = "lattice-greedy,random-selection,leading-text")]
        strategies: String,
        /// Comma-separated strictly increasing word budgets.
        #[arg(long)]
        budgets: String,
    },
    /// Generate verifiable constraint tasks as JSONL.
    Constraints {
        doc: PathBuf,
        #[arg(long, default_value = "lattice-closure")]
        kind: String,
        #[arg(long, default_value = "10")]
        count: usize,
        /// Plant verifiable violations instead of true tasks.
        #[arg(long)]
        planted_negatives: bool,
    },
    /// Inspect or compact the oracle cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    Inspect,
    Compact,
}

/// Envelope every report embeds: the configuration digest and the prompt
/// template version pin what produced the payload.
#[derive(Serialize)]
struct Report<T: Serialize> {
    config_digest: String,
    prompt_template_version: &'static str,
    command: String,
    payload: T,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // machine-readable error record on stderr
            let record = serde_json::json!({
                "error": err.to_string(),
                "exit_code": err.exit_code(),
            });
            eprintln!("{record}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        mode: cli.mode.clone(),
        seed: cli.seed,
        out: cli.out.clone(),
        cache: cli.cache.clone(),
        offline: cli.offline,
    };
    let config = EffectiveConfig::load(cli.config.as_deref(), &overrides)?;
    std::fs::create_dir_all(&config.out_dir)?;
    let oracle = build_oracle(&config)?;
    let runner = Runner { config, oracle };
    runner.dispatch(cli.command)
}

fn build_oracle(config: &EffectiveConfig) -> Result<Box<dyn SemanticOracle>, CliError> {
    match config.mode {
        Mode::FactSet => Ok(Box::new(FactSetOracle::new())),
        Mode::Llm => {
            let cache = match &config.cache_path {
                Some(path) => OracleCache::open(path)?,
                None => {
                    if config.offline {
                        return Err(CliError::Config(
                            "offline llm mode requires --cache pointing at a recorded cache".into(),
                        ));
                    }
                    OracleCache::ephemeral()
                }
            };
            let endpoint = config.endpoint.clone().unwrap_or_else(|| {
                // offline replay never touches the endpoint
                qadoc_core::oracle::EndpointConfig {
                    base_url: "http://offline.invalid".into(),
                    model: "offline-replay".into(),
                    api_key_env: None,
                    timeout_secs: 30,
                }
            });
            Ok(Box::new(LlmOracle::new(endpoint, cache, config.offline)))
        }
    }
}

struct Runner {
    config: EffectiveConfig,
    oracle: Box<dyn SemanticOracle>,
}

impl Runner {
    fn dispatch(&self, command: Command) -> Result<(), CliError> {
        match command {
            Command::Ingest { doc } => self.ingest(&doc),
            Command::Dag { doc } => self.dag(&doc),
            Command::Qas { doc } => self.qas(&doc),
            Command::Ortho { doc } => self.ortho(&doc),
            Command::Measure { doc } => self.measure(&doc),
            Command::Summarize { doc, selection, budget, strategy, allow_non_hierarchical } => {
                self.summarize(&doc, selection, budget, &strategy, allow_non_hierarchical)
            }
            Command::Extend { doc, spec } => self.extend(&doc, &spec),
            Command::Compare { doc1, doc2 } => self.compare(&doc1, &doc2),
            Command::Rd { doc, strategies, budgets } => self.rd(&doc, &strategies, &budgets),
            Command::Constraints { doc, kind, count, planted_negatives } => {
                self.constraints(&doc, &kind, count, planted_negatives)
            }
            Command::Cache { action } => self.cache(action),
        }
    }

    fn load_context(&self, path: &Path) -> Result<DocumentContext, CliError> {
        let raw = std::fs::read_to_string(path)?;
        let pipeline = self.config.pipeline_config();
        match self.config.mode {
            Mode::FactSet => {
                let synth = SyntheticDocument::from_json(&raw)?;
                Ok(DocumentContext::from_synthetic(&synth, &pipeline, self.oracle.as_ref())?)
            }
            Mode::Llm => {
                let id = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_else(|| "document".into());
                Ok(DocumentContext::from_text(&id, raw.trim_end(), &pipeline, self.oracle.as_ref())?)
            }
        }
    }

    fn write_report<T: Serialize>(&self, name: &str, command: &str, payload: T) -> Result<(), CliError> {
        let report = Report {
            config_digest: self.config.digest(),
            prompt_template_version: PROMPT_TEMPLATE_VERSION,
            command: command.to_string(),
            payload,
        };
        let mut body = serde_json::to_string_pretty(&report)?;
        body.push('\n');
        self.write_text(name, &body)
    }

    fn write_text(&self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.config.out_dir.join(name);
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn ingest(&self, doc: &Path) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        self.write_report(
            "ingest.json",
            "ingest",
            serde_json::json!({
                "document_id": ctx.document.id,
                "mode": ctx.document.mode,
                "word_count": ctx.document.word_count,
                "nodes": ctx.dag.len(),
                "population": ctx.population.len(),
                "atoms": ctx.atoms().len(),
                "complete_levels": ctx.dag.complete_levels(),
                "valid": true,
            }),
        )
    }

    fn dag(&self, doc: &Path) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        self.write_report("dag.json", "dag", &ctx.dag)?;
        self.write_text("dag.dot", &dag_dot(&ctx))
    }

    fn qas(&self, doc: &Path) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        self.write_report("qas.json", "qas", &ctx.core_dag)?;
        self.write_text("category.edges.txt", &ctx.category.export_edge_list())
    }

    fn ortho(&self, doc: &Path) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        self.write_report(
            "ortho.json",
            "ortho",
            serde_json::json!({
                "atoms": ctx.atoms(),
                "unresolved_pairs": ctx.ortho.unresolved,
            }),
        )?;
        self.write_text("ortho.txt", &ctx.render_ortho_by_node())
    }

    fn measure(&self, doc: &Path) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        let report = measures::report::<Real64>(&ctx, None)?;
        self.write_report("measure.json", "measure", report)
    }

    fn summarize(
        &self,
        doc: &Path,
        selection: Option<String>,
        budget: Option<u64>,
        strategy: &str,
        allow_non_hierarchical: bool,
    ) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        let sel = match (selection, budget) {
            (Some(ids), _) => Selection::new(
                ids.split(',').map(|s| NodeId::new(s.trim().to_string())),
            ),
            (None, Some(budget)) => {
                let strategy: Strategy = strategy.parse()?;
                qadoc_core::rd::select_nodes(&ctx, strategy, budget, self.config.seed)
            }
            (None, None) => {
                return Err(CliError::Config("summarize needs --selection or --budget".into()))
            }
        };
        let summary = suppress(&ctx, &sel, allow_non_hierarchical)?;
        let kind = classify_summary(&ctx, &sel)?;
        let (sub_step, quot_step) = factor_summary(&ctx, &sel)?;
        let inclusion = inclusion_relation(&ctx, &summary);
        let (total_on_summary, _) = inclusion.totality_check();
        let hierarchical_count = enumerate_hierarchical(&ctx.dag, self.config.lattice_limit)
            .map(|sels| sels.len())
            .ok();
        self.write_report(
            "summary.json",
            "summarize",
            serde_json::json!({
                "selection": summary.selection,
                "kind": kind,
                "atoms_kept": summary.atoms.len(),
                "atoms_total": ctx.atoms().len(),
                "text": summary.text,
                "factorization": {"subdocument_step": sub_step, "quotient_step": quot_step},
                "inclusion_total_on_summary": total_on_summary,
                "hierarchical_selections": hierarchical_count,
            }),
        )?;
        self.write_text("summary.md", &render_summary_markup(&ctx, &summary))
    }

    fn extend(&self, doc: &Path, spec_path: &Path) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        let raw = std::fs::read_to_string(spec_path)?;
        let spec: ExtensionSpec = serde_json::from_str(&raw)?;
        let pipeline = self.config.pipeline_config();
        let ext = extend(&ctx, &spec, &pipeline, self.oracle.as_ref())?;
        let (supers, elabs) = factor_extension(&spec);
        let inclusion = ext.inclusion_relation(&ctx);
        let (total_on_original, _) = inclusion.totality_check();
        self.write_report(
            "extension.json",
            "extend",
            serde_json::json!({
                "added_nodes": ext.added_nodes,
                "classifications": ext.classifications,
                "atoms_before": ctx.atoms().len(),
                "atoms_after": ext.context.atoms().len(),
                "factorization": {"superdocument_step": supers, "elaboration_step": elabs},
                "inclusion_total_on_original": total_on_original,
            }),
        )?;
        self.write_text("extension.md", &render_extension_markup(&ext))
    }

    fn compare(&self, doc1: &Path, doc2: &Path) -> Result<(), CliError> {
        let ctx1 = self.load_context(doc1)?;
        let ctx2 = self.load_context(doc2)?;
        let pipeline = self.config.pipeline_config();
        let pair = merge_pair(&ctx1, &ctx2, &pipeline, self.oracle.as_ref())?;
        self.write_report(
            "compare.json",
            "compare",
            serde_json::json!({
                "doc1": ctx1.document.id,
                "doc2": ctx2.document.id,
                "distance": pair.doc_distance::<Real64>(),
                "merged_atoms": pair.total(),
                "mutual_information": pair.mutual_information(),
                "ic_doc1": pair.ic_first,
                "ic_doc2": pair.ic_second,
                "ig_doc2_given_doc1": pair.information_gain_second_given_first(),
                "ig_doc1_given_doc2": pair.information_gain_first_given_second(),
            }),
        )
    }

    fn rd(&self, doc: &Path, strategies: &str, budgets: &str) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        let strategies: Vec<Strategy> = strategies
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()?;
        let budgets: Vec<u64> = budgets
            .split(',')
            .map(|s| s.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("invalid budget list: {e}")))?;
        let mut all_points: Vec<RDPoint<Real64>> = Vec::new();
        for strategy in &strategies {
            let points = sweep::<Real64>(&ctx, *strategy, &budgets, self.oracle.as_ref(), self.config.seed)?;
            all_points.extend(points);
        }
        let curve = operational_curve(&all_points)?;
        self.write_text("rd.csv", &points_to_csv(&all_points))?;
        self.write_text("rd.curve.csv", &curve_to_csv(&curve))?;
        self.write_report(
            "rd.json",
            "rd",
            serde_json::json!({
                "rate_unit": "words",
                "grader": grader_tag(&self.config),
                "strategies": strategies.iter().map(Strategy::name).collect::<Vec<_>>(),
                "budgets": budgets,
                "points": all_points.len(),
                "curve_steps": curve.steps,
            }),
        )
    }

    fn constraints(
        &self,
        doc: &Path,
        kind: &str,
        count: usize,
        planted_negatives: bool,
    ) -> Result<(), CliError> {
        let ctx = self.load_context(doc)?;
        let kind: qadoc_core::constraints::TaskKind = kind.parse()?;
        let tasks = qadoc_core::constraints::gen_tasks(
            &ctx,
            kind,
            count,
            self.config.seed,
            planted_negatives,
        )?;
        let jsonl = qadoc_core::constraints::to_jsonl(&tasks)?;
        self.write_text("tasks.jsonl", &jsonl)?;
        self.write_report(
            "constraints.json",
            "constraints",
            serde_json::json!({
                "kind": kind,
                "count": tasks.len(),
                "all_verified_true": tasks.iter().all(|t| t.verifier_verdict),
                "planted_negatives": planted_negatives,
            }),
        )
    }

    fn cache(&self, action: CacheAction) -> Result<(), CliError> {
        let path = self
            .config
            .cache_path
            .clone()
            .ok_or_else(|| CliError::Config("cache commands need --cache PATH".into()))?;
        let cache = OracleCache::open(&path)?;
        match action {
            CacheAction::Inspect => {
                let records = cache.records();
                let models: BTreeSet<String> =
                    records.iter().map(|r| r.model_tag.clone()).collect();
                println!(
                    "{}",
                    serde_json::json!({
                        "entries": records.len(),
                        "models": models,
                    })
                );
            }
            CacheAction::Compact => {
                let kept = cache.compact()?;
                println!("compacted to {kept} records");
            }
        }
        Ok(())
    }
}

fn grader_tag(config: &EffectiveConfig) -> String {
    match config.mode {
        Mode::FactSet => "factset-oracle".into(),
        Mode::Llm => match &config.endpoint {
            Some(e) => format!("llm:{}", e.model),
            None => "llm:offline-replay".into(),
        },
    }
}

fn dag_dot(ctx: &DocumentContext) -> String {
    let mut out = String::from("digraph abstractive_dag {\n");
    for id in ctx.dag.document_order() {
        let node = &ctx.dag.nodes[&id];
        out.push_str(&format!(
            "  \"{}\" [label=\"{}\"];\n",
            id,
            node.assertion.text.replace('"', "'")
        ));
    }
    for id in ctx.dag.document_order() {
        for child in &ctx.dag.nodes[&id].children {
            out.push_str(&format!("  \"{id}\" -> \"{child}\";\n"));
        }
    }
    out.push_str("}\n");
    out
}
