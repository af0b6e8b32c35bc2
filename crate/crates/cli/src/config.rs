//! `key = value` configuration with `#` comments. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use annoprio::pipeline::PipelineConfig;
use annoprio::sim::{budget_range, NovelClusterSpec, SweepStrategy, SyntheticSpec};
use annoprio::{Components, Strategy};

use crate::CliError;

/// Benchmark settings layered over [`SyntheticSpec::default`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub n_seeds: usize,
    pub budget_start: usize,
    pub budget_end: usize,
    pub budget_step: usize,
    pub strategies: Vec<SweepStrategy>,
    pub core_n: usize,
    pub ft_n: usize,
    pub outlier_fraction: f64,
    pub novel_sizes: Vec<usize>,
    pub novel_separation: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        let spec = SyntheticSpec::default();
        Self {
            n_seeds: 20,
            budget_start: 250,
            budget_end: 2150,
            budget_step: 100,
            strategies: SweepStrategy::ALL.to_vec(),
            core_n: spec.core_n,
            ft_n: spec.ft_n,
            outlier_fraction: spec.outlier_fraction,
            novel_sizes: spec.novel_clusters.iter().map(|c| c.size).collect(),
            novel_separation: spec.novel_separation,
        }
    }
}

impl SimSettings {
    pub fn budgets(&self) -> Vec<usize> {
        budget_range(self.budget_start, self.budget_end, self.budget_step)
    }

    /// The synthetic spec for master seed `seed`.
    pub fn spec(&self, seed: u64) -> SyntheticSpec {
        let base = SyntheticSpec::default();
        let stddev = base.novel_clusters.first().map_or(1.0, |c| c.stddev);
        SyntheticSpec {
            core_n: self.core_n,
            ft_n: self.ft_n,
            outlier_fraction: self.outlier_fraction,
            novel_clusters: self
                .novel_sizes
                .iter()
                .map(|&size| NovelClusterSpec { size, stddev })
                .collect(),
            novel_separation: self.novel_separation,
            seed,
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub core: Option<PathBuf>,
    pub finetune: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub pipeline: PipelineConfig,
    pub strategy: Strategy,
    pub sim: SimSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            core: None,
            finetune: None,
            out_dir: PathBuf::from("out"),
            pipeline: PipelineConfig::default(),
            strategy: Strategy::Bps,
            sim: SimSettings::default(),
        }
    }
}

fn bad(line: usize, key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("config line {line}: `{key}`: {msg}"))
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| bad(line, key, e))
}

fn flag(line: usize, key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(line, key, "expected true or false")),
    }
}

fn auto(line: usize, key: &str, v: &str) -> Result<Option<usize>, CliError> {
    if v == "auto" {
        Ok(None)
    } else {
        num(line, key, v).map(Some)
    }
}

fn list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(line, key, s))
        .collect()
}

fn show_auto(v: Option<usize>) -> String {
    v.map_or_else(|| "auto".to_string(), |k| k.to_string())
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        let (mut variance, mut cap, mut fixed) = match cfg.pipeline.pca {
            Components::Variance { threshold, cap } => (threshold, cap, None),
            Components::Fixed(r) => (0.95, 32, Some(r)),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {line}: expected `key = value`"))
            })?;
            let (key, v) = (key.trim(), value.trim());
            let p = &mut cfg.pipeline;
            let s = &mut cfg.sim;
            match key {
                "core" => cfg.core = Some(PathBuf::from(v)),
                "finetune" => cfg.finetune = Some(PathBuf::from(v)),
                "out_dir" => cfg.out_dir = PathBuf::from(v),
                "seed" => p.seed = num(line, key, v)?,
                "strategy" => cfg.strategy = v.parse().map_err(|e| bad(line, key, e))?,
                "pca_components" => fixed = auto(line, key, v)?,
                "pca_variance" => variance = num(line, key, v)?,
                "pca_cap" => cap = num(line, key, v)?,
                "pca_core_only" => p.pca_core_only = flag(line, key, v)?,
                "knn_k" => p.knn_k = num(line, key, v)?,
                "cluster_k" => p.cluster_k = auto(line, key, v)?,
                "k_err" => p.k_err = auto(line, key, v)?,
                "k_ft" => p.k_ft = auto(line, key, v)?,
                "iou_weight" => p.iou_weight = num(line, key, v)?,
                "loop_k_nn" => p.loop_k_nn = num(line, key, v)?,
                "loop_lambda" => p.loop_lambda = num(line, key, v)?,
                "loop_pool_core" => p.loop_pool_core = flag(line, key, v)?,
                "bps_a" => p.coefficients.bps_a = num(line, key, v)?,
                "bps_b" => p.coefficients.bps_b = num(line, key, v)?,
                "mps_a" => p.coefficients.mps_a = num(line, key, v)?,
                "mps_b" => p.coefficients.mps_b = num(line, key, v)?,
                "mps_c" => p.coefficients.mps_c = num(line, key, v)?,
                "mps_d" => p.coefficients.mps_d = num(line, key, v)?,
                "sim_seeds" => s.n_seeds = num(line, key, v)?,
                "sim_budget_start" => s.budget_start = num(line, key, v)?,
                "sim_budget_end" => s.budget_end = num(line, key, v)?,
                "sim_budget_step" => s.budget_step = num(line, key, v)?,
                "sim_strategies" => s.strategies = list(line, key, v)?,
                "sim_core_n" => s.core_n = num(line, key, v)?,
                "sim_ft_n" => s.ft_n = num(line, key, v)?,
                "sim_outlier_fraction" => s.outlier_fraction = num(line, key, v)?,
                "sim_novel_sizes" => s.novel_sizes = list(line, key, v)?,
                "sim_novel_separation" => s.novel_separation = num(line, key, v)?,
                other => {
                    return Err(CliError::Usage(format!(
                        "config line {line}: unknown key `{other}`"
                    )))
                }
            }
        }
        cfg.pipeline.pca = match fixed {
            Some(r) => Components::Fixed(r),
            None => Components::Variance {
                threshold: variance,
                cap,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Range checks that do not need any data.
    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.pipeline;
        let usage = |m: String| Err(CliError::Usage(m));
        p.coefficients
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        match p.pca {
            Components::Fixed(0) => return usage("pca_components must be >= 1".into()),
            Components::Variance { threshold, cap }
                if !(threshold > 0.0 && threshold <= 1.0) || cap == 0 =>
            {
                return usage("pca_variance must be in (0, 1] and pca_cap >= 1".into())
            }
            _ => {}
        }
        if p.knn_k == 0 {
            return usage("knn_k must be >= 1".into());
        }
        if [p.cluster_k, p.k_err, p.k_ft].contains(&Some(0)) {
            return usage("cluster counts must be >= 1 or auto".into());
        }
        if !(p.iou_weight > 0.0 && p.iou_weight.is_finite()) {
            return usage("iou_weight must be > 0".into());
        }
        if p.loop_k_nn == 0 || !(p.loop_lambda > 0.0 && p.loop_lambda.is_finite()) {
            return usage("loop_k_nn must be >= 1 and loop_lambda > 0".into());
        }
        let s = &self.sim;
        if s.n_seeds == 0
            || s.budget_step == 0
            || s.budget_start == 0
            || s.budget_end < s.budget_start
        {
            return usage("sim_seeds and sim_budget_step must be >= 1, 1 <= sim_budget_start <= sim_budget_end".into());
        }
        if s.strategies.is_empty() {
            return usage("sim_strategies is empty".into());
        }
        Ok(())
    }

    /// Every key with its effective value; [`Config::parse`] reads it back to an equal config.
    pub fn dump(&self) -> String {
        let p = &self.pipeline;
        let c = &p.coefficients;
        let s = &self.sim;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        if let Some(path) = &self.core {
            kv("core", path.display().to_string());
        }
        if let Some(path) = &self.finetune {
            kv("finetune", path.display().to_string());
        }
        kv("out_dir", self.out_dir.display().to_string());
        kv("seed", p.seed.to_string());
        kv("strategy", self.strategy.to_string());
        match p.pca {
            Components::Fixed(r) => kv("pca_components", r.to_string()),
            Components::Variance { threshold, cap } => {
                kv("pca_components", "auto".into());
                kv("pca_variance", threshold.to_string());
                kv("pca_cap", cap.to_string());
            }
        }
        kv("pca_core_only", p.pca_core_only.to_string());
        kv("knn_k", p.knn_k.to_string());
        kv("cluster_k", show_auto(p.cluster_k));
        kv("k_err", show_auto(p.k_err));
        kv("k_ft", show_auto(p.k_ft));
        kv("iou_weight", p.iou_weight.to_string());
        kv("loop_k_nn", p.loop_k_nn.to_string());
        kv("loop_lambda", p.loop_lambda.to_string());
        kv("loop_pool_core", p.loop_pool_core.to_string());
        kv("bps_a", c.bps_a.to_string());
        kv("bps_b", c.bps_b.to_string());
        kv("mps_a", c.mps_a.to_string());
        kv("mps_b", c.mps_b.to_string());
        kv("mps_c", c.mps_c.to_string());
        kv("mps_d", c.mps_d.to_string());
        kv("sim_seeds", s.n_seeds.to_string());
        kv("sim_budget_start", s.budget_start.to_string());
        kv("sim_budget_end", s.budget_end.to_string());
        kv("sim_budget_step", s.budget_step.to_string());
        kv("sim_strategies", join(&s.strategies));
        kv("sim_core_n", s.core_n.to_string());
        kv("sim_ft_n", s.ft_n.to_string());
        kv("sim_outlier_fraction", s.outlier_fraction.to_string());
        kv("sim_novel_sizes", join(&s.novel_sizes));
        kv("sim_novel_separation", s.novel_separation.to_string());
        out
    }
}
