//! `hierseed` command line: `synth`, `fit`, `infer`, `eval`.
//!
//! Failures print `{"error": <category>, "message": ...}` on stderr and exit
//! with status 2.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use hierseed::assignment::{AssignConfig, Eccentricity};
use hierseed::corpus_io::{
    self, gold_from_pairs, load_embeddings, parse_pairs, save_assignments, write_atomic, EmbeddingFormat, SeedSet,
};
use hierseed::metrics::evaluate_hierarchical;
use hierseed::representation::WmWeights;
use hierseed::synth::{self, SynthConfig};
use hierseed::taxonomy::{NodeKind, TaxonomyFile};
use hierseed::{engine, model, Error, FitConfig, Taxonomy};

pub const EXIT_ERROR: i32 = 2;
pub const RUN_SNAPSHOT: &str = "run.json";

#[derive(Debug, Parser)]
#[command(
    name = "hierseed",
    version,
    about = "Seeded hierarchical clustering of document embeddings"
)]
pub struct Cli {
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, env = "HIERSEED_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a corpus to a taxonomy and write a model directory.
    Fit(FitArgs),
    /// Assign documents to taxonomy paths with a fitted model.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score assignments against gold labels.
    Eval {
        #[arg(long)]
        assignments: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        /// Pivot the assignments were produced with (defaults to the file's).
        #[arg(long)]
        pivot: Option<usize>,
        #[arg(long)]
        eval_from_level: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub taxonomy: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// `doc_id<TAB>topic_id` rows.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    /// Where seed vectors live. Defaults to `seed_embeddings.bin` beside the
    /// seeds file when present, else the fitting embeddings.
    #[arg(long)]
    pub seed_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub unfit: bool,
    /// Do not add Other children (ablation).
    #[arg(long)]
    pub no_other: bool,
    #[arg(long)]
    pub pivot: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub les_weight: Option<f64>,
    #[arg(long)]
    pub self_weight: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `nearest` or a number in [0, 1].
    #[arg(long)]
    pub eccentricity: Option<Eccentricity>,
    #[arg(long)]
    pub out: PathBuf,
}

/// JSON run configuration. Every key is optional; absent keys keep their
/// defaults (pivot 2 unless the taxonomy file sets one, alpha 1.1, LES
/// weight 4, self weight 1, nearest-topic eccentricity).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmeans_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmeans_rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unfit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_nodes: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wm: Option<WmWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assign: Option<AssignConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_from_level: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> hierseed::Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        let d = FitConfig::default();
        FitConfig {
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            kmeans_max_iters: self.kmeans_max_iters.unwrap_or(d.kmeans_max_iters),
            kmeans_rel_tol: self.kmeans_rel_tol.unwrap_or(d.kmeans_rel_tol),
            unfit: self.unfit.unwrap_or(d.unfit),
            other_nodes: self.other_nodes.unwrap_or(d.other_nodes),
            wm: self.wm.unwrap_or(d.wm),
            assign: self.assign.unwrap_or(d.assign),
        }
    }
}

/// What `fit` records next to the model so the run can be repeated.
#[derive(Debug, Serialize)]
struct RunSnapshot<'a> {
    command: &'static str,
    taxonomy: &'a Path,
    embeddings: &'a Path,
    seeds: Option<&'a Path>,
    seed_embeddings: Option<&'a Path>,
    pivot: usize,
    config: &'a FitConfig,
}

fn load_corpus(path: &Path) -> hierseed::Result<hierseed::Corpus> {
    load_embeddings(path, EmbeddingFormat::from_path(path))
}

fn all_required_topics(t: &Taxonomy) -> Vec<String> {
    t.preorder()
        .into_iter()
        .filter(|&i| t.node(i).kind == NodeKind::User && t.level(i) >= t.pivot())
        .map(|i| t.id(i).to_string())
        .collect()
}

fn load_taxonomy(path: &Path, pivot: Option<usize>) -> hierseed::Result<Taxonomy> {
    let file: TaxonomyFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Taxonomy::from_file(&file, pivot)
}

fn fit_cmd(a: &FitArgs) -> hierseed::Result<()> {
    let run = RunConfig::load(a.config.as_deref())?;
    let mut cfg = run.fit_config();
    if a.unfit {
        cfg.unfit = true;
    }
    if a.no_other {
        cfg.other_nodes = false;
    }
    if let Some(v) = a.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = a.les_weight {
        cfg.wm.les_weight = v;
    }
    if let Some(v) = a.self_weight {
        cfg.wm.self_weight = v;
    }
    if let Some(v) = a.alpha {
        cfg.assign.alpha = v;
    }
    if let Some(v) = a.eccentricity {
        cfg.assign.eccentricity = v;
    }
    cfg.validate()?;

    let taxonomy = load_taxonomy(&a.taxonomy, a.pivot.or(run.pivot))?;
    let corpus = load_corpus(&a.embeddings)?;

    let seed_pairs = match &a.seeds {
        Some(p) if p.exists() => parse_pairs(&std::fs::read(p)?)?,
        // no seeds at all: every topic at or below the pivot is uncovered
        _ => return Err(Error::MissingSeedsForTopic(all_required_topics(&taxonomy))),
    };
    let beside = a
        .seeds
        .as_ref()
        .and_then(|s| s.parent().map(|d| d.join("seed_embeddings.bin")))
        .filter(|p| p.exists());
    let seed_source = a.seed_embeddings.clone().or(beside);
    let seeds = match &seed_source {
        Some(p) => SeedSet::resolve(&seed_pairs, &taxonomy, &load_corpus(p)?)?,
        None => SeedSet::resolve(&seed_pairs, &taxonomy, &corpus)?,
    };

    let fitted = engine::fit(&corpus, &taxonomy, &seeds, &cfg)?;
    let snapshot = RunSnapshot {
        command: "fit",
        taxonomy: &a.taxonomy,
        embeddings: &a.embeddings,
        seeds: a.seeds.as_deref(),
        seed_embeddings: seed_source.as_deref(),
        pivot: taxonomy.pivot(),
        config: &cfg,
    };
    let mut snap = serde_json::to_string_pretty(&snapshot)?;
    snap.push('\n');
    model::save(&fitted, &a.out, &[(RUN_SNAPSHOT, snap.into_bytes())])
}

fn infer_cmd(model_dir: &Path, embeddings: &Path, out: &Path) -> hierseed::Result<()> {
    let fitted = model::load(model_dir)?;
    let docs = load_corpus(embeddings)?;
    let records = engine::infer(&fitted, &docs)?;
    save_assignments(out, &records)
}

fn eval_cmd(
    assignments: &Path,
    gold: &Path,
    taxonomy: &Path,
    pivot: Option<usize>,
    from_level: Option<usize>,
    config: Option<&Path>,
    out: &Path,
) -> hierseed::Result<String> {
    let run = RunConfig::load(config)?;
    let t = load_taxonomy(taxonomy, pivot.or(run.pivot))?;
    let extended = t.with_all_others();
    let records = corpus_io::read_assignments(assignments, &extended)?;
    let gold = gold_from_pairs(&parse_pairs(&std::fs::read(gold)?)?, &extended)?;
    let report = evaluate_hierarchical(&records, &gold, &t, from_level.or(run.eval_from_level))?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_atomic(out, json.as_bytes())?;
    Ok(report.table())
}

fn synth_cmd(config: &Path, out: &Path) -> hierseed::Result<()> {
    let cfg: SynthConfig = serde_json::from_str(&std::fs::read_to_string(config)?)?;
    let data = synth::generate(&cfg)?;
    synth::write_to_dir(&data, out)
}

/// Runs one command; returns text for stdout.
fn dispatch(cmd: &Command) -> hierseed::Result<String> {
    match cmd {
        Command::Synth { config, out } => synth_cmd(config, out).map(|_| String::new()),
        Command::Fit(a) => fit_cmd(a).map(|_| String::new()),
        Command::Infer { model, embeddings, out } => infer_cmd(model, embeddings, out).map(|_| String::new()),
        Command::Eval {
            assignments,
            gold,
            taxonomy,
            pivot,
            eval_from_level,
            config,
            out,
        } => eval_cmd(
            assignments,
            gold,
            taxonomy,
            *pivot,
            *eval_from_level,
            config.as_deref(),
            out,
        ),
    }
}

fn report_error(stderr: &mut dyn Write, category: &str, message: &str) {
    let body = serde_json::json!({ "error": category, "message": message });
    let _ = writeln!(stderr, "{body}");
}

/// Run with explicit output streams; returns the exit status.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            report_error(stderr, "Usage", &e.to_string());
            return EXIT_ERROR;
        }
    };
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            report_error(stderr, "ConfigInvalid", &e.to_string());
            return EXIT_ERROR;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(text) => {
            let _ = write!(stdout, "{text}");
            0
        }
        Err(e) => {
            report_error(stderr, e.category(), &e.to_string());
            EXIT_ERROR
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
