use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use riskcbr::augment::{balance, AugmentMethod};
use riskcbr::casebase::build_casebase;
use riskcbr::cbr::{report_csv, report_text, Query};
use riskcbr::config::PipelineConfig;
use riskcbr::correlation::cramers_v_matrix;
use riskcbr::dataset::{events_to_bytes, load_dataset};
use riskcbr::ffm::{cross_validate_grid, evaluate, ffm_train, save_model, Grid, Optimizer};
use riskcbr::fsutil::write_atomic;
use riskcbr::ingest::{load_raw, raw_to_bytes};
use riskcbr::kmodes::{elbow_curve, DEFAULT_CONTEXT_K, DEFAULT_ROAD_K};
use riskcbr::pipeline::{self, schema_for};
use riskcbr::synth::{synth_generate, synth_generate_raw};
use riskcbr::{Error, EventCase, Premise, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct Global {
    /// Config file (`key = value`).
    #[arg(long, global = true, env = "RISKCBR_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for synthesis, augmentation and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Event dataset CSV.
    #[arg(long, global = true)]
    events: Option<PathBuf>,
    /// Model file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Case-base CSV; its cache sits beside it with extension `.rcb`.
    #[arg(long, global = true)]
    casebase: Option<PathBuf>,
    /// Driver id for personalized queries and retained cases.
    #[arg(long, global = true)]
    driver: Option<String>,
    /// Minimum premise similarity, in (0, 1].
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Maximum number of retrieved premise groups.
    #[arg(long = "top-k", global = true)]
    top_k: Option<usize>,
    /// Comma-separated d_r codes that must not be recommended.
    #[arg(long, global = true, value_delimiter = ',')]
    exclude: Vec<u8>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Parser)]
#[command(
    name = "riskcbr",
    version,
    about = "Crash-avoidance recommendation toolkit"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic event CSV with the planted crash rule.
    Synth {
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        /// Emit block-level records (frame spans, road and context blocks).
        #[arg(long)]
        raw: bool,
    },
    /// Validate and code an input CSV into the event dataset.
    Ingest {
        #[arg(long)]
        input: PathBuf,
    },
    /// Pairwise Cramér's V of the event variables.
    Correlate,
    /// Fit road and context clusterings from raw records and report elbow curves.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
    },
    /// Balance the event dataset by oversampling.
    Augment {
        #[arg(long)]
        method: Option<AugmentMethod>,
    },
    /// Train the FFM on the balanced dataset.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        optimizer: Option<Optimizer>,
        #[arg(long)]
        embed_dim: Option<usize>,
    },
    /// Metrics of the model on the event dataset.
    Evaluate {
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Cross-validated hyperparameter search.
    Grid {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, value_delimiter = ',')]
        learning_rates: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        epochs: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        optimizers: Vec<Optimizer>,
        #[arg(long, value_delimiter = ',')]
        embed_dims: Vec<usize>,
    },
    /// Enumerate the event space and keep the near-crash cases.
    BuildCasebase,
    /// Recommend a solution for a premise `e_n,p_e,p_m,r_c,d_c`.
    Query {
        #[arg(long, value_delimiter = ',', required = true)]
        premise: Vec<u8>,
    },
    /// Store a confirmed case `e_n,p_e,p_m,d_r,c_t,r_c,d_c`.
    Retain {
        #[arg(long = "case", value_delimiter = ',', required = true)]
        codes: Vec<u8>,
        #[arg(long)]
        label: u8,
    },
    /// Re-run augment and train on the grown dataset and rebuild the case base.
    Retrain,
    /// ingest, augment, train, evaluate, build-casebase.
    Pipeline {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn pick<T>(v: Vec<T>, default: Vec<T>) -> Vec<T> {
    if v.is_empty() {
        default
    } else {
        v
    }
}

fn fixed<const N: usize>(v: Vec<u8>, flag: &str) -> Result<[u8; N]> {
    let n = v.len();
    v.try_into().map_err(|_| {
        Error::InvalidConfig(format!("{flag} takes {N} comma-separated codes, got {n}"))
    })
}

fn with_cache_sibling(path: &Path) -> PathBuf {
    path.with_extension("rcb")
}

fn load_config(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.set_seed(seed);
    }
    if let Some(p) = &g.events {
        cfg.paths.events = p.clone();
    }
    if let Some(p) = &g.model {
        cfg.paths.model = p.clone();
    }
    if let Some(p) = &g.casebase {
        cfg.paths.casebase = p.clone();
        cfg.paths.casebase_cache = with_cache_sibling(p);
    }
    if let Some(t) = g.tau {
        cfg.tau = t;
    }
    if let Some(k) = g.top_k {
        cfg.top_k = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_bytes(g: &Global, bytes: &[u8]) -> Result<()> {
    match &g.out {
        Some(p) => write_atomic(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let mut cfg = load_config(g)?;
    match cli.command {
        Command::Synth { rows, noise, raw } => {
            if let Some(n) = rows {
                cfg.synth.n_rows = n;
            }
            if let Some(x) = noise {
                cfg.synth.noise = x;
            }
            let bytes = if raw {
                raw_to_bytes(&synth_generate_raw(&cfg.synth)?)
            } else {
                events_to_bytes(&synth_generate(&cfg.synth)?)
            };
            emit_bytes(g, &bytes)
        }
        Command::Ingest { input } => {
            let ds = pipeline::ingest(&cfg, Some(&input))?;
            write_atomic(&cfg.paths.events, &events_to_bytes(&ds))?;
            let (near, crash) = ds.class_counts().unwrap_or((0, 0));
            emit(
                g,
                &format!(
                    "rows={}\nnear_crash={near}\ncrash={crash}\nevents={}\n",
                    ds.len(),
                    cfg.paths.events.display()
                ),
            )
        }
        Command::Correlate => {
            let ds = load_dataset(&cfg.paths.events, &schema_for(&cfg)?)?;
            let m = cramers_v_matrix(&ds)?;
            emit(
                g,
                &if g.format == Format::Csv {
                    m.to_csv()
                } else {
                    m.to_report()
                },
            )
        }
        Command::Cluster {
            input,
            k_min,
            k_max,
        } => {
            let raw = load_raw(&input)?;
            let (road, context) = pipeline::fit_clusters(&raw, &cfg)?;
            let mut out = String::new();
            for (name, points, default_k, fitted) in [
                ("road", pipeline::road_points(&raw), DEFAULT_ROAD_K, &road),
                (
                    "context",
                    pipeline::context_points(&raw),
                    DEFAULT_CONTEXT_K,
                    &context,
                ),
            ] {
                let curve = elbow_curve(&points, k_min, k_max, cfg.seed, cfg.cluster.restarts)?;
                if g.format == Format::Csv {
                    for (k, cost) in &curve.costs {
                        let _ = writeln!(out, "{name},{k},{cost}");
                    }
                    continue;
                }
                let _ = writeln!(
                    out,
                    "{name}: k={} cost={} (default k {default_k})",
                    fitted.modes.len(),
                    fitted.cost
                );
                for (k, cost) in &curve.costs {
                    let _ = writeln!(out, "  k={k:<3} cost={cost}");
                }
                match curve.suggested {
                    Some(k) => {
                        let _ = writeln!(out, "  elbow k={k}");
                    }
                    None => out.push_str("  elbow -\n"),
                }
            }
            if g.format == Format::Csv {
                out.insert_str(0, "block,k,cost\n");
            }
            emit(g, &out)
        }
        Command::Augment { method } => {
            if let Some(m) = method {
                cfg.augment.method = m;
            }
            let ds = load_dataset(&cfg.paths.events, &schema_for(&cfg)?)?;
            let balanced = balance(&ds, &cfg.augment)?;
            write_atomic(&cfg.paths.balanced, &events_to_bytes(&balanced))?;
            let (near, crash) = balanced.class_counts()?;
            emit(
                g,
                &format!(
                    "method={}\nrows={}\nnear_crash={near}\ncrash={crash}\n",
                    cfg.augment.method,
                    balanced.len()
                ),
            )
        }
        Command::Train {
            input,
            epochs,
            learning_rate,
            lambda,
            optimizer,
            embed_dim,
        } => {
            let t = &mut cfg.train;
            if let Some(x) = epochs {
                t.epochs = x;
            }
            if let Some(x) = learning_rate {
                t.learning_rate = x;
            }
            if let Some(x) = lambda {
                t.lambda = x;
            }
            if let Some(x) = optimizer {
                t.optimizer = x;
            }
            if let Some(x) = embed_dim {
                t.embed_dim = x;
            }
            let path = input.unwrap_or_else(|| cfg.paths.balanced.clone());
            let ds = load_dataset(&path, &schema_for(&cfg)?)?;
            let (model, losses) = ffm_train(&ds, &cfg.train)?;
            save_model(&model, &cfg.paths.model)?;
            let mut out = String::new();
            if g.format == Format::Csv {
                out.push_str("epoch,loss\n");
                for (i, l) in losses.iter().enumerate() {
                    let _ = writeln!(out, "{},{l:.6}", i + 1);
                }
            } else {
                let _ = writeln!(out, "epochs={}", losses.len());
                let _ = writeln!(out, "loss_first={:.6}", losses[0]);
                let _ = writeln!(out, "loss_last={:.6}", losses[losses.len() - 1]);
                let _ = writeln!(out, "model={}", cfg.paths.model.display());
            }
            emit(g, &out)
        }
        Command::Evaluate { threshold } => {
            let model = pipeline::load_model_for(&cfg)?;
            let ds = load_dataset(&cfg.paths.events, &schema_for(&cfg)?)?;
            let m = evaluate(&model, &ds, threshold)?;
            let text = if g.format == Format::Csv {
                format!(
                    "auc,acc,f1,threshold\n{:.6},{:.6},{:.6},{}\n",
                    m.auc, m.acc, m.f1, m.threshold
                )
            } else {
                m.to_report()
            };
            emit(g, &text)
        }
        Command::Grid {
            input,
            folds,
            learning_rates,
            lambdas,
            epochs,
            optimizers,
            embed_dims,
        } => {
            let full = Grid::paper();
            let grid = Grid {
                learning_rates: pick(learning_rates, full.learning_rates),
                lambdas: pick(lambdas, full.lambdas),
                epochs: pick(epochs, full.epochs),
                optimizers: pick(optimizers, full.optimizers),
                embed_dims: pick(embed_dims, full.embed_dims),
            };
            let path = input.unwrap_or_else(|| cfg.paths.balanced.clone());
            let ds = load_dataset(&path, &schema_for(&cfg)?)?;
            let r = cross_validate_grid(&ds, &grid, folds, cfg.seed)?;
            let b = r.best;
            let text = if g.format == Format::Csv {
                r.to_csv()
            } else {
                format!(
                    "cells={}\nbest learning_rate={} lambda={} epochs={} optimizer={} embed_dim={}\n",
                    r.cells.len(),
                    b.learning_rate,
                    b.lambda,
                    b.epochs,
                    b.optimizer,
                    b.embed_dim
                )
            };
            emit(g, &text)
        }
        Command::BuildCasebase => {
            let model = pipeline::load_model_for(&cfg)?;
            let schema = schema_for(&cfg)?;
            let cb = build_casebase(&model, &schema)?;
            pipeline::write_casebase(&cb, &cfg)?;
            let drivers = match load_dataset(&cfg.paths.events, &schema) {
                Ok(ds) => pipeline::write_personal(&ds, &cfg)?,
                Err(Error::MissingArtifact(_)) => 0,
                Err(e) => return Err(e),
            };
            emit(
                g,
                &format!(
                    "premise_groups={}\ncases={}\ndrivers={drivers}\ncasebase={}\n",
                    cb.groups().len(),
                    cb.case_count(),
                    cfg.paths.casebase.display()
                ),
            )
        }
        Command::Query { premise } => {
            let mut q = Query::new(Premise(fixed(premise, "--premise")?));
            q.driver_id = g.driver.clone();
            q.excluded_maneuvers = g.exclude.iter().copied().collect::<BTreeSet<u8>>();
            q.tau = cfg.tau;
            q.top_k = cfg.top_k;
            let (cands, rec) = pipeline::query(&cfg, &q)?;
            let text = if g.format == Format::Csv {
                report_csv(&cands, &rec)
            } else {
                report_text(&q, &cands, &rec)
            };
            emit(g, &text)
        }
        Command::Retain { codes, label } => {
            let driver = g
                .driver
                .clone()
                .ok_or_else(|| Error::InvalidConfig("retain needs --driver".into()))?;
            let codes: [u8; 7] = fixed(codes, "--case")?;
            let case = EventCase::from_codes(codes)
                .with_label(label)
                .with_driver(driver);
            let o = pipeline::retain_case(&cfg, case)?;
            emit(
                g,
                &format!(
                    "retained=1\nadded_to_casebase={}\nadded_to_personal={}\n",
                    o.added_to_casebase as u8, o.added_to_personal as u8
                ),
            )
        }
        Command::Retrain => {
            let r = pipeline::retrain(&cfg)?;
            emit(g, &r.to_text())
        }
        Command::Pipeline { input } => {
            if input.is_some() {
                cfg.paths.input = input;
            }
            let r = pipeline::run_pipeline(&cfg)?;
            emit(g, &r.to_text())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                msg.push_str(&format!("\n  caused by: {s}"));
                src = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
