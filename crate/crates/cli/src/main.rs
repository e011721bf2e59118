use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use triskel::classifier::{classify_with, Knowledgebase};
use triskel::features::FeatureMatrix;
use triskel::geometry::Triangulation;
use triskel::harness::evaluation::{build_dataset, evaluate_dataset, plot_csv, TrialPlan};
use triskel::harness::io::{read_json, read_mask, to_json, write_bytes, write_json, write_pgm};
use triskel::harness::pipeline::{
    dump_intermediates, measure, process_mask, skeletonize, triangulate_skeleton, PipelineArtifacts,
};
use triskel::harness::synth::{
    synth_corpus, ClassSpec, ShapeFamily, SynthSpec, DEFAULT_SIZE, STANDARD_NOISE,
};
use triskel::harness::{ingest, HarnessError, PipelineConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

/// Arguments that parse but do not make sense together.
#[derive(Debug)]
struct UsageError(&'static str);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0)
    }
}

impl std::error::Error for UsageError {}

/// Classify binary shape masks by the triangles between their skeleton
/// endpoints and junctions.
#[derive(Parser)]
#[command(name = "triskel", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file with pipeline settings (see README for the keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or directory for `synth` and `evaluate`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write every intermediate artifact into this directory.
    #[arg(
        long,
        global = true,
        num_args = 0..=1,
        default_missing_value = "intermediates",
        value_name = "DIR"
    )]
    dump_intermediates: Option<PathBuf>,
    /// Compare acceptance counts divided by the number of references.
    #[arg(long, global = true)]
    normalize_by_refs: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus, one directory per class.
    Synth {
        /// Comma-separated shape families, e.g. star3,cross,star5.
        #[arg(long, value_delimiter = ',', default_value = "star3,cross,star5")]
        families: Vec<ShapeFamily>,
        /// Samples per class.
        #[arg(long, default_value_t = 30)]
        count: usize,
        /// Relative boundary-noise amplitude.
        #[arg(long, default_value_t = STANDARD_NOISE)]
        noise: f64,
        /// Canvas side in pixels.
        #[arg(long, default_value_t = DEFAULT_SIZE)]
        size: usize,
    },
    /// Thin, prune and write the skeleton of a mask as PGM.
    Skeletonize { mask: PathBuf },
    /// Triangulate the skeleton points of a mask (or of a skeleton PGM).
    Triangulate {
        input: PathBuf,
        /// Treat the input as an already pruned skeleton.
        #[arg(long)]
        from_skeleton: bool,
    },
    /// Triangle features of a mask, skeleton PGM or triangulation JSON.
    Features {
        input: PathBuf,
        #[arg(long, conflicts_with = "from_triangulation")]
        from_skeleton: bool,
        #[arg(long)]
        from_triangulation: bool,
        /// Write CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Build a knowledgebase from every usable sample of a corpus.
    Train { corpus: PathBuf },
    /// Classify masks against a knowledgebase.
    Classify {
        knowledgebase: PathBuf,
        #[arg(required = true)]
        masks: Vec<PathBuf>,
    },
    /// Repeated stratified train/test trials over a corpus.
    Evaluate {
        corpus: PathBuf,
        /// Comma-separated training fractions.
        #[arg(long, value_delimiter = ',', default_value = "0.8")]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                return ExitCode::from(EXIT_USAGE);
            }
            let invariant = e.chain().any(|c| {
                c.downcast_ref::<HarnessError>()
                    .is_some_and(HarnessError::is_invariant)
            });
            ExitCode::from(if invariant { EXIT_INVARIANT } else { EXIT_DATA })
        }
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.normalize_by_refs {
        cfg.normalize_by_refs = true;
    }
    Ok(cfg)
}

/// Write to `--out` when given, otherwise print to standard output.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_bytes(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "sample".into(), |s| s.to_string_lossy().into_owned())
}

fn maybe_dump(common: &Common, a: &PipelineArtifacts, input: &Path) -> Result<()> {
    if let Some(dir) = &common.dump_intermediates {
        dump_intermediates(a, dir, &stem(input))?;
        log::info!("intermediates written to {}", dir.display());
    }
    Ok(())
}

fn full_pipeline(common: &Common, cfg: &PipelineConfig, mask: &Path) -> Result<PipelineArtifacts> {
    let raster = read_mask(mask, cfg.threshold)?;
    let a = process_mask(&raster, cfg).map_err(|e| HarnessError::from(e.with_path(mask)))?;
    maybe_dump(common, &a, mask)?;
    Ok(a)
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.common;
    let cfg = load_config(&common)?;
    let out = common.out.as_deref();
    match cli.command {
        Command::Synth {
            families,
            count,
            noise,
            size,
        } => {
            let Some(dir) = out else {
                bail!(UsageError("synth needs --out <dir>"));
            };
            let spec = SynthSpec {
                classes: families
                    .into_iter()
                    .map(|family| ClassSpec { family, count })
                    .collect(),
                noise,
                seed: cfg.seed,
                size,
            };
            let corpus = synth_corpus(&spec, dir)?;
            write_json(
                &dir.join("manifest.json"),
                &json!({ "spec": spec, "corpus": corpus }),
            )?;
            println!(
                "wrote {} masks in {} classes to {}",
                corpus.sample_count(),
                corpus.classes.len(),
                dir.display()
            );
        }
        Command::Skeletonize { mask } => {
            let Some(path) = out else {
                bail!(UsageError("skeletonize needs --out <file.pgm>"));
            };
            let raster = read_mask(&mask, cfg.threshold)?;
            let sk = skeletonize(&raster, &cfg).map_err(|e| HarnessError::from(e.with_path(&mask)))?;
            write_pgm(&sk.pruned, path)?;
            if let Ok(a) = process_mask(&raster, &cfg) {
                maybe_dump(&common, &a, &mask)?;
            }
            println!(
                "{}: {} skeleton pixels ({} before pruning)",
                mask.display(),
                sk.pruned.foreground_count(),
                sk.thinned.foreground_count()
            );
        }
        Command::Triangulate { input, from_skeleton } => {
            let tri = if from_skeleton {
                let skel = read_mask(&input, cfg.threshold)?;
                triangulate_skeleton(&skel, &cfg)
                    .map_err(|e| HarnessError::from(e.with_path(&input)))?
                    .1
            } else {
                full_pipeline(&common, &cfg, &input)?.triangulation
            };
            emit(out, &to_json(&tri))?;
            if out.is_some() {
                println!(
                    "{}: {} points, {} triangles",
                    input.display(),
                    tri.points.len(),
                    tri.triangles.len()
                );
            }
        }
        Command::Features {
            input,
            from_skeleton,
            from_triangulation,
            csv,
        } => {
            let fm: FeatureMatrix = if from_triangulation {
                let tri: Triangulation = read_json(&input)?;
                measure(&tri, &cfg)
                    .map_err(|e| HarnessError::from(e.with_path(&input)))?
                    .matrix
            } else if from_skeleton {
                let skel = read_mask(&input, cfg.threshold)?;
                let (_, tri) =
                    triangulate_skeleton(&skel, &cfg).map_err(|e| HarnessError::from(e.with_path(&input)))?;
                measure(&tri, &cfg)
                    .map_err(|e| HarnessError::from(e.with_path(&input)))?
                    .matrix
            } else {
                full_pipeline(&common, &cfg, &input)?.features.matrix
            };
            let text = if csv { fm.to_csv() } else { to_json(&fm) };
            emit(out, &text)?;
            if out.is_some() {
                println!("{}: {} triangles", input.display(), fm.len());
            }
        }
        Command::Train { corpus } => {
            let Some(path) = out else {
                bail!(UsageError("train needs --out <knowledgebase.json>"));
            };
            let corpus = ingest(&corpus)?;
            let ds = build_dataset(&corpus, &cfg)?;
            let samples: Vec<_> = ds
                .classes
                .iter()
                .flat_map(|c| c.samples.iter().map(|s| (c.class_id, s.features.clone())))
                .collect();
            let names = ds.classes.iter().map(|c| (c.class_id, c.name.clone())).collect();
            let kb = Knowledgebase::train_named(&samples, &names, cfg.fingerprint())
                .map_err(HarnessError::from)?;
            write_json(path, &kb)?;
            println!(
                "trained {} reference vectors over {} classes ({} unusable samples skipped)",
                kb.vector_count(),
                kb.classes().len(),
                ds.unusable.len()
            );
        }
        Command::Classify { knowledgebase, masks } => {
            let kb: Knowledgebase = read_json(&knowledgebase)?;
            if !kb.fingerprint().is_empty() && kb.fingerprint() != cfg.fingerprint() {
                log::warn!("knowledgebase was trained with a different pipeline configuration");
            }
            let mut results = Vec::with_capacity(masks.len());
            for mask in &masks {
                let a = full_pipeline(&common, &cfg, mask)?;
                let r = classify_with(&a.features.matrix, &kb, cfg.scoring()).map_err(HarnessError::from)?;
                let name = kb.class(r.predicted_class).map_or("", |c| c.name.as_str());
                eprintln!("{}: {name}{}", mask.display(), if r.tie { " (tie)" } else { "" });
                results.push(json!({
                    "file": mask,
                    "predicted_name": name,
                    "result": r,
                }));
            }
            emit(out, &to_json(&results))?;
        }
        Command::Evaluate {
            corpus,
            fractions,
            trials,
        } => {
            let corpus = ingest(&corpus)?;
            for w in &corpus.warnings {
                log::warn!("{w}");
            }
            let ds = build_dataset(&corpus, &cfg)?;
            let mut reports = Vec::with_capacity(fractions.len());
            for &training_fraction in &fractions {
                let plan = TrialPlan {
                    training_fraction,
                    trials,
                    seed: cfg.seed,
                };
                reports.push(evaluate_dataset(&ds, &plan, &cfg)?);
            }
            match out {
                Some(dir) => {
                    for r in &reports {
                        let tag = format!("{:.2}", r.training_fraction);
                        write_json(&dir.join(format!("report_{tag}.json")), r)?;
                        write_bytes(&dir.join(format!("trials_{tag}.csv")), r.trials_csv().as_bytes())?;
                        write_bytes(
                            &dir.join(format!("confusion_{tag}.csv")),
                            r.confusion.to_csv().as_bytes(),
                        )?;
                    }
                    write_bytes(&dir.join("plot.csv"), plot_csv(&reports).as_bytes())?;
                    for r in &reports {
                        let s = r.summary;
                        println!(
                            "training {:.0}%: accuracy max {:.4} min {:.4} mean {:.4} over {} trials",
                            100.0 * r.training_fraction,
                            s.max,
                            s.min,
                            s.mean,
                            r.trials.len()
                        );
                    }
                    println!("{} unusable samples", ds.unusable.len());
                }
                None if reports.len() == 1 => emit(None, &to_json(&reports[0]))?,
                None => emit(None, &to_json(&reports))?,
            }
        }
    }
    Ok(())
}
