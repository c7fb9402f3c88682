//! Command line: `process`, `build-model`, `index`, `search`, `eval`, `serve`.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use psc2code_core::classify::Backend;
use psc2code_core::codelm::build_model;
use psc2code_core::config::OcrBackendKind;
use psc2code_core::correct::CorrectionReport;
use psc2code_core::eval::{
    classifier_metrics, correction_accuracies, retrieval_metrics, ConfusionMatrix, CorrectionCounts,
    CorrectionTruth, RankedJudgments,
};
use psc2code_core::pipeline::{run_pipeline, StageStatus, VideoSource};
use psc2code_core::search::{build_index, IdfVariant, SearchIndex};
use psc2code_core::workspace::{self, read_json_file, write_json_file, Workspace};
use psc2code_core::PipelineConfig;

use crate::api::{router, AppState, RouterOptions};
use crate::snapshot::WorkspaceSnapshot;

#[derive(Debug, Parser)]
#[command(name = "psc2code", version, about = "Extract source code from programming screencasts")]
pub struct Cli {
    /// Pipeline config file (TOML). Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Workspace root; defaults to the config's `workspace`.
    #[arg(long, short, global = true)]
    pub workspace: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline over videos or directories of `<t>.png` frames.
    Process(ProcessArgs),
    /// Build the code language model from a directory of Java sources.
    BuildModel {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Index the corrected code of every processed video.
    Index {
        /// Defaults to `<workspace>/index.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        idf: Option<Idf>,
    },
    /// Query a search index.
    Search {
        /// Defaults to `<workspace>/index.json`.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, short)]
        query: String,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long)]
        json: bool,
    },
    /// Compute evaluation metrics from judgment files.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Serve the workspace over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Idf {
    Smooth,
    Plain,
}

impl From<Idf> for IdfVariant {
    fn from(v: Idf) -> Self {
        match v {
            Idf::Smooth => IdfVariant::Smooth,
            Idf::Plain => IdfVariant::Plain,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    /// Video files or frame directories; the stem names the video.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Frame extraction program (ffmpeg-compatible). Falls back to
    /// `PSC2CODE_DECODER`, then `ffmpeg`.
    #[arg(long)]
    pub decoder: Option<String>,
    /// heuristic, external or fixture
    #[arg(long)]
    pub classifier: Option<Backend>,
    /// Base URL of the external classifier.
    #[arg(long)]
    pub classifier_endpoint: Option<String>,
    /// Label file (or directory of `<video>.json`) for the fixture classifier.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// fixture, remote or local
    #[arg(long)]
    pub ocr: Option<OcrBackendKind>,
    /// Directory of stored OCR pages for the fixture backend.
    #[arg(long)]
    pub ocr_fixtures: Option<PathBuf>,
    /// Vision endpoint; implies `--ocr remote`. The key is read from
    /// `PSC2CODE_VISION_KEY`.
    #[arg(long)]
    pub ocr_endpoint: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Scores from a confusion matrix `{"tp","fp","fn","tn"}`.
    Classifier {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// precision@k, MAP@k and MRR@k from a judgment file.
    Retrieval {
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long, short, default_values_t = [5, 10, 20])]
        k: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Correction accuracies, from raw counts or a report plus truth file.
    Correction {
        #[arg(long, conflicts_with_all = ["report", "truth"])]
        counts: Option<PathBuf>,
        #[arg(long, requires = "truth")]
        report: Option<PathBuf>,
        #[arg(long, requires = "report")]
        truth: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Built UI assets, served under `/app`.
    #[arg(long)]
    pub app: Option<PathBuf>,
    /// Enable `POST /reload` to re-scan the workspace.
    #[arg(long)]
    pub reload: bool,
}

impl Cli {
    /// The config file (or defaults) with command-line overrides applied.
    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(ws) = &self.workspace {
            cfg.workspace = ws.clone();
        }
        if let Command::Process(a) = &self.command {
            apply_process_overrides(&mut cfg, a);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply_process_overrides(cfg: &mut PipelineConfig, a: &ProcessArgs) {
    if let Some(m) = &a.model {
        cfg.model = Some(m.clone());
    }
    if let Some(d) = &a.decoder {
        cfg.decoder = Some(d.clone());
    }
    if let Some(b) = a.classifier {
        cfg.classifier.backend = b;
    }
    if let Some(e) = &a.classifier_endpoint {
        cfg.classifier.endpoint = Some(e.clone());
    }
    if let Some(l) = &a.labels {
        cfg.classifier.labels = Some(l.clone());
    }
    if let Some(e) = &a.ocr_endpoint {
        cfg.ocr.backend = OcrBackendKind::Remote;
        cfg.ocr.endpoint = Some(e.clone());
    }
    if let Some(o) = a.ocr {
        cfg.ocr.backend = o;
    }
    if let Some(d) = &a.ocr_fixtures {
        cfg.ocr.fixture_dir = Some(d.clone());
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.pipeline_config()?;
    match cli.command {
        Command::Process(args) => process(&cfg, &args.inputs),
        Command::BuildModel { corpus, out } => {
            let model = build_model(&corpus)?;
            model.save(&out)?;
            println!(
                "model: {} files, {} distinct words, {} line structures -> {}",
                model.corpus_files,
                model.vocab_size,
                model.structures.len(),
                out.display()
            );
            Ok(())
        }
        Command::Index { out, idf } => {
            let ws = open_existing(&cfg.workspace)?;
            let variant = idf.map(IdfVariant::from).unwrap_or(cfg.search.idf);
            let index = build_index(&ws, variant)?;
            let out = out.unwrap_or_else(|| ws.root().join(workspace::INDEX));
            write_json_file(&out, &index)?;
            println!("indexed {} videos, {} tokens -> {}", index.n, index.df.len(), out.display());
            Ok(())
        }
        Command::Search { index, query, top, json } => {
            let path = index.unwrap_or_else(|| cfg.workspace.join(workspace::INDEX));
            let index: SearchIndex =
                read_json_file(&path).with_context(|| format!("loading index {}", path.display()))?;
            let hits = index.query(&query, top)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&hits)?);
            } else if hits.is_empty() {
                println!("no video matches");
            } else {
                for (rank, h) in hits.iter().enumerate() {
                    let frames: Vec<String> = h.matched_frames.iter().map(|t| format!("{t}s")).collect();
                    println!(
                        "{:>2}. {}  score {:.4}{}  at {}",
                        rank + 1,
                        h.video_id,
                        h.score,
                        if h.all_in_one_frame { "  [all keywords in one frame]" } else { "" },
                        frames.join(", ")
                    );
                }
            }
            Ok(())
        }
        Command::Eval(cmd) => eval(cmd),
        Command::Serve(args) => serve(&cfg.workspace, args),
    }
}

fn open_existing(root: &Path) -> Result<Workspace> {
    if !root.is_dir() {
        bail!("workspace {} does not exist; run `psc2code process` first", root.display());
    }
    Ok(Workspace::open(root)?)
}

fn process(cfg: &PipelineConfig, inputs: &[PathBuf]) -> Result<()> {
    let ws = Workspace::open(&cfg.workspace)?;
    let sources: Vec<VideoSource> = inputs.iter().map(VideoSource::from_path).collect();
    let outcomes = run_pipeline(&ws, &sources, cfg);
    let mut failed = 0;
    for o in &outcomes {
        match &o.result {
            Ok(s) => {
                let stages: Vec<String> = s
                    .stages
                    .iter()
                    .map(|r| {
                        let mark = match r.status {
                            StageStatus::Computed => format!("{}ms", r.millis),
                            StageStatus::Cached => "cached".into(),
                        };
                        format!("{:?} {mark}", r.stage).to_lowercase()
                    })
                    .collect();
                println!(
                    "{}: {} frames, {} informative, {} valid, {} with code [{}]",
                    o.video_id,
                    s.frames,
                    s.informative,
                    s.valid,
                    s.ocr_frames,
                    stages.join(", ")
                );
            }
            Err(e) => {
                failed += 1;
                println!("{}: failed: {e}", o.video_id);
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} videos failed", outcomes.len());
    }
    Ok(())
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.4}"))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn eval(cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Classifier { matrix, json } => {
            let cm: ConfusionMatrix = read_json_file(&matrix)?;
            let m = classifier_metrics(&cm)?;
            if json {
                return print_json(&m);
            }
            println!("accuracy      {}", show(m.accuracy));
            println!("class      precision  recall     f1");
            println!("valid      {:<10} {:<10} {}", show(m.precision_v), show(m.recall_v), show(m.f1_v));
            println!("invalid    {:<10} {:<10} {}", show(m.precision_iv), show(m.recall_iv), show(m.f1_iv));
        }
        EvalCommand::Retrieval { judgments, k, json } => {
            let j: RankedJudgments = read_json_file(&judgments)?;
            let all = k
                .iter()
                .map(|&k| retrieval_metrics(&j, k))
                .collect::<Result<Vec<_>, _>>()?;
            if json {
                return print_json(&all);
            }
            println!("k    precision  MAP        MRR");
            for m in &all {
                println!("{:<4} {:<10} {:<10} {}", m.k, show(m.mean_precision), show(m.map), show(m.mrr));
            }
        }
        EvalCommand::Correction {
            counts,
            report,
            truth,
            json,
        } => {
            let counts = match (counts, report, truth) {
                (Some(c), _, _) => read_json_file::<CorrectionCounts>(&c)?,
                (None, Some(r), Some(t)) => {
                    let report: CorrectionReport = read_json_file(&r)?;
                    let truth: CorrectionTruth = read_json_file(&t)?;
                    CorrectionCounts::from_report(&report, &truth)?
                }
                _ => bail!("give --counts, or --report with --truth"),
            };
            let a = correction_accuracies(&counts);
            if json {
                return print_json(&serde_json::json!({ "counts": counts, "accuracies": a }));
            }
            println!(
                "incorrect {}  corrected {}  truly corrected {}",
                counts.all_incorrect, counts.corrected, counts.truly_corrected
            );
            println!("accuracy1 {}", show(a.accuracy1));
            println!("accuracy2 {}", show(a.accuracy2));
        }
    }
    Ok(())
}

fn serve(root: &Path, args: ServeArgs) -> Result<()> {
    let snapshot = WorkspaceSnapshot::load(root)?;
    if snapshot.videos.is_empty() {
        bail!("workspace {} has no processed video", root.display());
    }
    log::info!("serving {} videos from {}", snapshot.videos.len(), root.display());
    let state = AppState::new(snapshot);
    let app = router(
        state,
        RouterOptions {
            app_dir: args.app.as_deref(),
            reload: args.reload,
        },
    );
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .with_context(|| format!("binding {}", args.bind))?;
        println!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}
