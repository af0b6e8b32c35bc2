//! Front end for the `annoprio` binary: config handling and the subcommands.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use annoprio::binio::{read_file, write_file};
use annoprio::data::{load_embeddings, FileFormat};
use annoprio::pipeline::{fit_models, score_finetune, FittedModels};
use annoprio::priority::write_queue;
use annoprio::sim::{export_scatter, generate_synthetic, report, run_budget_sweep, SweepResult};
use annoprio::{ClusterModel, Components, Corpus, IouPredictor, PcaModel, Split};
use thiserror::Error;

pub use config::{Config, SimSettings};

pub const PCA_FILE: &str = "pca.bin";
pub const CLUSTERS_FILE: &str = "clusters.bin";
pub const PREDICTOR_FILE: &str = "predictor.bin";
pub const QUEUE_FILE: &str = "queue.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SCATTER_FILE: &str = "scatter.csv";

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or config; exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Data or pipeline failure; exit code 2.
    #[error(transparent)]
    Run(#[from] annoprio::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Run(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("`{key}` is not set (config key or --{key})")))
}

fn load(path: &Path) -> Result<Corpus> {
    Ok(load_embeddings(path, FileFormat::from_path(path))?)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Run(annoprio::Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

/// Explained variance and cluster counts, as printed by `fit`.
pub fn fit_summary(models: &FittedModels) -> String {
    let mut out = String::new();
    let ratios = models.pca.explained_variance_ratio();
    let total: f64 = ratios.iter().sum();
    writeln!(
        out,
        "pca: {} -> {} components, explained variance {:.4}",
        models.pca.dimension(),
        models.pca.n_components(),
        total
    )
    .unwrap();
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    writeln!(out, "  per component: {}", shown.join(" ")).unwrap();
    let core: Vec<usize> = models
        .clusters
        .core_clusters()
        .map(|(_, c)| c.member_count)
        .collect();
    let err: Vec<usize> = models
        .clusters
        .error_clusters()
        .map(|(_, c)| c.member_count)
        .collect();
    writeln!(out, "core clusters: {} sizes {:?}", core.len(), core).unwrap();
    writeln!(out, "error clusters: {} sizes {:?}", err.len(), err).unwrap();
    out
}

/// Fits on `core` (and `finetune` when PCA is pooled) and writes the three model files.
pub fn cmd_fit(cfg: &Config) -> Result<FittedModels> {
    let core = load(required(&cfg.core, "core")?)?;
    let ft = match (&cfg.finetune, cfg.pipeline.pca_core_only) {
        (Some(path), false) => Some(load(path)?),
        _ => None,
    };
    let models = fit_models(&core, ft.as_ref(), &cfg.pipeline)?;
    ensure_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join(PCA_FILE), &models.pca.to_bytes())?;
    write_file(
        &cfg.out_dir.join(CLUSTERS_FILE),
        &models.clusters.to_bytes(),
    )?;
    write_file(
        &cfg.out_dir.join(PREDICTOR_FILE),
        &models.predictor.to_bytes(),
    )?;
    Ok(models)
}

pub fn load_models(dir: &Path) -> Result<FittedModels> {
    let pca = PcaModel::from_bytes(&read_file(&dir.join(PCA_FILE))?)?;
    let clusters = ClusterModel::from_bytes(&read_file(&dir.join(CLUSTERS_FILE))?)?;
    let predictor = IouPredictor::from_bytes(&read_file(&dir.join(PREDICTOR_FILE))?)?;
    if predictor.dimension() != pca.n_components() || clusters.reduced_dim() != pca.n_components() {
        return Err(annoprio::Error::DimensionMismatch {
            expected: pca.n_components(),
            got: predictor.dimension(),
        }
        .into());
    }
    Ok(FittedModels {
        pca,
        predictor,
        clusters,
    })
}

/// Scores the fine-tuning pool with the models in `out_dir` and writes the queue. Returns its path.
pub fn cmd_rank(cfg: &Config) -> Result<PathBuf> {
    let ft = load(required(&cfg.finetune, "finetune")?)?;
    let models = load_models(&cfg.out_dir)?;
    let core_reduced = if cfg.pipeline.loop_pool_core {
        let core = load(required(&cfg.core, "core")?)?;
        Some(models.pca.transform_all(&core.vectors())?)
    } else {
        None
    };
    let scored = score_finetune(&models, &ft, core_reduced.as_deref(), &cfg.pipeline)?;
    let path = cfg.out_dir.join(QUEUE_FILE);
    write_queue(&path, &scored.scores, cfg.strategy)?;
    Ok(path)
}

/// Runs the budget sweep, writes sweep.csv, report.csv and summary.txt. Returns the summary.
pub fn cmd_simulate(cfg: &Config) -> Result<String> {
    let s = &cfg.sim;
    let spec = s.spec(cfg.pipeline.seed);
    let result = run_budget_sweep(&spec, &s.budgets(), &s.strategies, s.n_seeds, &cfg.pipeline)?;
    ensure_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join(SWEEP_FILE), result.to_csv().as_bytes())?;
    Ok(report(
        &result,
        &cfg.out_dir.join(REPORT_FILE),
        &cfg.out_dir.join(SUMMARY_FILE),
    )?)
}

/// Re-reads sweep.csv from `out_dir` and rewrites report.csv and summary.txt.
pub fn cmd_report(cfg: &Config) -> Result<String> {
    let path = cfg.out_dir.join(SWEEP_FILE);
    let bytes = read_file(&path)?;
    let text = String::from_utf8(bytes).map_err(|e| annoprio::Error::Format {
        what: "sweep csv",
        msg: e.to_string(),
    })?;
    let result = SweepResult::from_csv(&text)?;
    Ok(report(
        &result,
        &cfg.out_dir.join(REPORT_FILE),
        &cfg.out_dir.join(SUMMARY_FILE),
    )?)
}

/// Two-component projection of core and fine-tuning samples with their IoU (measured for core,
/// predicted for fine-tuning). Uses the configured files when `core` is set, otherwise one
/// synthetic benchmark draw.
pub fn cmd_scatter(cfg: &Config) -> Result<PathBuf> {
    let (core, ft) = match &cfg.core {
        Some(path) => {
            let core = load(path)?;
            let ft = cfg.finetune.as_deref().map(load).transpose()?;
            (core, ft)
        }
        None => {
            let data = generate_synthetic(&cfg.sim.spec(cfg.pipeline.seed))?;
            (data.core, Some(data.finetune))
        }
    };
    let models = fit_models(&core, ft.as_ref(), &cfg.pipeline)?;
    let all = match &ft {
        Some(ft) => core.concat(ft)?,
        None => core.clone(),
    };
    let vectors = all.vectors();
    let plane = PcaModel::fit(&vectors, Components::Fixed(2.min(all.dimension())))?;
    let mut xy = Vec::with_capacity(vectors.len());
    let mut ious = Vec::with_capacity(vectors.len());
    for (v, r) in vectors.iter().zip(all.records()) {
        let p = plane.transform(v)?;
        xy.push([p[0], p.get(1).copied().unwrap_or(0.0)]);
        ious.push(match r.measured_iou {
            Some(iou) => f64::from(iou),
            None => models.predictor.predict(&models.pca.transform(v)?)?,
        });
    }
    let splits: Vec<Split> = all.records().iter().map(|r| r.split).collect();
    let path = cfg.out_dir.join(SCATTER_FILE);
    ensure_dir(&cfg.out_dir)?;
    export_scatter(&path, &all.ids(), &xy, &ious, &splits)?;
    Ok(path)
}

pub fn dump_config(cfg: &Config, path: &Path) -> Result<()> {
    Ok(write_file(path, cfg.dump().as_bytes())?)
}
