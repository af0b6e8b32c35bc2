//! Seeded synthetic benchmark: priority sampling against random sampling over a budget sweep.
//!
//! The generator builds a core-training corpus with measured IoU and a fine-tuning pool that
//! mixes the core clusters with novel clusters and far outliers. Fine-tuned model quality is
//! replaced by a 1-NN coverage oracle over the generator's hidden cluster labels: the fraction
//! of non-outlier pool samples whose nearest labeled sample comes from the same hidden cluster.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::binio::write_file;
use crate::data::{Corpus, EmbeddingRecord, Split};
use crate::error::{Error, Result};
use crate::pipeline::{derive_seed, fit_models, score_finetune, PipelineConfig};
use crate::priority::{rank, Strategy};
use crate::sq_dist;

/// Hidden cluster label of outliers.
pub const OUTLIER_CLUSTER: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct CoreClusterSpec {
    pub center: Vec<f64>,
    pub stddev: f64,
    pub iou_mean: f64,
    pub iou_stddev: f64,
    /// IoU lost per stddev of distance from the center beyond the typical radius `sqrt(dims)`;
    /// atypical samples are segmented worse.
    pub iou_slope: f64,
    /// Relative share of the core-training corpus.
    pub core_weight: f64,
    /// Relative share of the non-novel, non-outlier part of the fine-tuning pool.
    pub ft_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NovelClusterSpec {
    pub size: usize,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub dims: usize,
    pub core_clusters: Vec<CoreClusterSpec>,
    pub novel_clusters: Vec<NovelClusterSpec>,
    /// Distance between consecutive novel centers in units of the novel stddev.
    pub novel_separation: f64,
    /// Core cluster the first novel center is placed next to, at `novel_offset` of its stddevs.
    /// `None` places it on a sphere around the core centroid instead.
    pub novel_anchor: Option<usize>,
    pub novel_offset: f64,
    pub outlier_fraction: f64,
    pub core_n: usize,
    pub ft_n: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// Eight dimensions; two dominant core modes that make up the whole fine-tuning background,
    /// two minor core-only modes, the last of which is a weak type (flat IoU of 0.70) that the
    /// novel pair of 60 and 140 samples sits next to; 2% outliers, 2000 core and 2200
    /// fine-tuning samples.
    fn default() -> Self {
        let dims = 8;
        let center = |coords: &[(usize, f64)]| {
            let mut c = vec![0.0; dims];
            for &(i, v) in coords {
                c[i] = v;
            }
            c
        };
        let core =
            |center: Vec<f64>, iou_mean: f64, iou_slope: f64, core_weight: f64, ft_weight: f64| {
                CoreClusterSpec {
                    center,
                    stddev: 1.0,
                    iou_mean,
                    iou_stddev: 0.03,
                    iou_slope,
                    core_weight,
                    ft_weight,
                }
            };
        Self {
            dims,
            core_clusters: vec![
                core(center(&[(0, -6.0)]), 0.80, 0.27, 0.4, 0.5),
                core(center(&[(0, 6.0)]), 0.80, 0.27, 0.4, 0.5),
                core(center(&[(1, 6.0)]), 0.80, 0.27, 0.1, 0.0),
                core(center(&[(1, -6.0)]), 0.70, 0.0, 0.1, 0.0),
            ],
            novel_clusters: vec![
                NovelClusterSpec {
                    size: 60,
                    stddev: 1.0,
                },
                NovelClusterSpec {
                    size: 140,
                    stddev: 1.0,
                },
            ],
            novel_separation: 1.0,
            novel_anchor: Some(3),
            novel_offset: 10.0,
            outlier_fraction: 0.02,
            core_n: 2000,
            ft_n: 2200,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn n_outliers(&self) -> usize {
        (self.outlier_fraction * self.ft_n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::out_of_range("dims", 0, ">= 1"));
        }
        if self.core_clusters.is_empty() {
            return Err(Error::Invalid(
                "at least one core cluster is required".into(),
            ));
        }
        for (i, c) in self.core_clusters.iter().enumerate() {
            if c.center.len() != self.dims {
                return Err(Error::Invalid(format!(
                    "core cluster {i}: center has {} coordinates, dims = {}",
                    c.center.len(),
                    self.dims
                )));
            }
            if !(c.stddev > 0.0) || !(0.0..=1.0).contains(&c.iou_mean) || !(c.iou_stddev >= 0.0) {
                return Err(Error::Invalid(format!(
                    "core cluster {i}: stddev must be > 0, iou_mean in [0, 1], iou_stddev >= 0"
                )));
            }
            if !(c.iou_slope >= 0.0) {
                return Err(Error::out_of_range("iou_slope", c.iou_slope, ">= 0"));
            }
            if !(c.core_weight >= 0.0) || !(c.ft_weight >= 0.0) {
                return Err(Error::Invalid(format!("core cluster {i}: negative weight")));
            }
        }
        if self
            .core_clusters
            .iter()
            .map(|c| c.core_weight)
            .sum::<f64>()
            <= 0.0
        {
            return Err(Error::Invalid("core weights sum to zero".into()));
        }
        for (i, c) in self.novel_clusters.iter().enumerate() {
            if c.size == 0 || !(c.stddev > 0.0) {
                return Err(Error::Invalid(format!(
                    "novel cluster {i}: size must be positive and stddev > 0"
                )));
            }
        }
        if !(self.novel_separation > 0.0) {
            return Err(Error::out_of_range(
                "novel_separation",
                self.novel_separation,
                "> 0",
            ));
        }
        if !(self.novel_offset >= 10.0) {
            return Err(Error::out_of_range(
                "novel_offset",
                self.novel_offset,
                ">= 10",
            ));
        }
        if let Some(a) = self.novel_anchor {
            if a >= self.core_clusters.len() {
                return Err(Error::out_of_range(
                    "novel_anchor",
                    a,
                    "a core cluster index",
                ));
            }
        }
        if !(0.0..=0.2).contains(&self.outlier_fraction) {
            return Err(Error::out_of_range(
                "outlier_fraction",
                self.outlier_fraction,
                "[0, 0.2]",
            ));
        }
        if self.core_n == 0 || self.ft_n == 0 {
            return Err(Error::Invalid("core_n and ft_n must be positive".into()));
        }
        let fixed = self.n_outliers() + self.novel_clusters.iter().map(|c| c.size).sum::<usize>();
        if fixed > self.ft_n {
            return Err(Error::Invalid(format!(
                "infeasible spec: ft_n = {} is smaller than novel sizes plus outliers ({fixed})",
                self.ft_n
            )));
        }
        if fixed < self.ft_n && self.core_clusters.iter().map(|c| c.ft_weight).sum::<f64>() <= 0.0 {
            return Err(Error::Invalid(
                "fine-tuning weights of core clusters sum to zero".into(),
            ));
        }
        Ok(())
    }
}

/// Hidden labels of the fine-tuning pool, aligned with its record order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub hidden_cluster: Vec<usize>,
    pub is_novel: Vec<bool>,
    pub is_outlier: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub core: Corpus,
    pub finetune: Corpus,
    pub truth: GroundTruth,
    /// Centers of the novel clusters, in generator order.
    pub novel_centers: Vec<Vec<f64>>,
}

/// Largest-remainder split of `n` by `weights`.
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if n == 0 || total <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest: Vec<usize> = (0..weights.len()).collect();
    rest.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let missing = n - counts.iter().sum::<usize>();
    for &i in rest.iter().take(missing) {
        counts[i] += 1;
    }
    counts
}

fn gaussian_point(rng: &mut ChaCha8Rng, center: &[f64], stddev: f64) -> Vec<f64> {
    center
        .iter()
        .map(|c| c + stddev * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dims = spec.dims;
    let n_clusters = spec.core_clusters.len();

    let mut core_records = Vec::with_capacity(spec.core_n);
    let core_counts = apportion(
        spec.core_n,
        &spec
            .core_clusters
            .iter()
            .map(|c| c.core_weight)
            .collect::<Vec<_>>(),
    );
    let mut lo = vec![f64::INFINITY; dims];
    let mut hi = vec![f64::NEG_INFINITY; dims];
    let mut track = |p: &[f64]| {
        for ((l, h), x) in lo.iter_mut().zip(hi.iter_mut()).zip(p) {
            *l = l.min(*x);
            *h = h.max(*x);
        }
    };
    let typical_radius = (dims as f64).sqrt();
    for (c, spec_c) in spec.core_clusters.iter().enumerate() {
        for _ in 0..core_counts[c] {
            let p = gaussian_point(&mut rng, &spec_c.center, spec_c.stddev);
            track(&p);
            let radius = crate::dist(&p, &spec_c.center) / spec_c.stddev;
            let noise: f64 = rng.sample(StandardNormal);
            let iou = spec_c.iou_mean - spec_c.iou_slope * (radius - typical_radius)
                + spec_c.iou_stddev * noise;
            core_records.push((p, iou.clamp(0.0, 1.0) as f32));
        }
    }

    // The first novel center sits either next to the anchor cluster or on a sphere around the
    // core centroid whose radius keeps it at least 10 stddevs from every core center; each
    // further center is `novel_separation` stddevs from the previous one. Directions are
    // redrawn until the center clears every core center.
    let centroid: Vec<f64> = (0..dims)
        .map(|d| spec.core_clusters.iter().map(|c| c.center[d]).sum::<f64>() / n_clusters as f64)
        .collect();
    let clears_core = |p: &[f64]| {
        spec.core_clusters
            .iter()
            .all(|c| crate::dist(p, &c.center) >= 10.0 * c.stddev)
    };
    let base_radius = spec
        .core_clusters
        .iter()
        .map(|c| crate::dist(&c.center, &centroid) + 10.0 * c.stddev)
        .fold(0.0, f64::max);
    let unit = |rng: &mut ChaCha8Rng| {
        let dir = gaussian_point(rng, &vec![0.0; dims], 1.0);
        let norm = dir
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        dir.into_iter().map(|x| x / norm).collect::<Vec<f64>>()
    };
    let place = |rng: &mut ChaCha8Rng, from: &[f64], step: f64| -> Result<Vec<f64>> {
        for _ in 0..1000 {
            let dir = unit(rng);
            let cand: Vec<f64> = from.iter().zip(&dir).map(|(c, d)| c + step * d).collect();
            if clears_core(&cand) {
                return Ok(cand);
            }
        }
        Err(Error::Invalid(
            "could not place novel clusters 10 stddevs away from the core centers".into(),
        ))
    };
    let mut novel_centers: Vec<Vec<f64>> = Vec::new();
    for novel in &spec.novel_clusters {
        let center = match novel_centers.last() {
            None => match spec.novel_anchor {
                None => {
                    let dir = unit(&mut rng);
                    centroid
                        .iter()
                        .zip(&dir)
                        .map(|(c, d)| c + base_radius * d)
                        .collect()
                }
                Some(a) => {
                    let anchor = &spec.core_clusters[a];
                    place(&mut rng, &anchor.center, spec.novel_offset * anchor.stddev)?
                }
            },
            Some(prev) => place(&mut rng, prev, spec.novel_separation * novel.stddev)?,
        };
        novel_centers.push(center);
    }

    let n_out = spec.n_outliers();
    let n_novel: usize = spec.novel_clusters.iter().map(|c| c.size).sum();
    let ft_core_counts = apportion(
        spec.ft_n - n_out - n_novel,
        &spec
            .core_clusters
            .iter()
            .map(|c| c.ft_weight)
            .collect::<Vec<_>>(),
    );
    let mut pool: Vec<(Vec<f64>, usize)> = Vec::with_capacity(spec.ft_n);
    for (c, spec_c) in spec.core_clusters.iter().enumerate() {
        for _ in 0..ft_core_counts[c] {
            let p = gaussian_point(&mut rng, &spec_c.center, spec_c.stddev);
            track(&p);
            pool.push((p, c));
        }
    }
    for (j, novel) in spec.novel_clusters.iter().enumerate() {
        for _ in 0..novel.size {
            let p = gaussian_point(&mut rng, &novel_centers[j], novel.stddev);
            track(&p);
            pool.push((p, n_clusters + j));
        }
    }
    // outliers: uniform in a box 20x the extent of the data, centered on it
    for _ in 0..n_out {
        let p = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| {
                let mid = 0.5 * (l + h);
                let half = 10.0 * (h - l).max(f64::MIN_POSITIVE);
                rng.random_range(mid - half..=mid + half)
            })
            .collect();
        pool.push((p, OUTLIER_CLUSTER));
    }
    pool.shuffle(&mut rng);

    let core = Corpus::new(
        dims,
        core_records
            .into_iter()
            .enumerate()
            .map(|(i, (p, iou))| EmbeddingRecord::core(i as u64, to_f32(&p), iou))
            .collect(),
    )?;
    let mut truth = GroundTruth {
        hidden_cluster: Vec::with_capacity(pool.len()),
        is_novel: Vec::with_capacity(pool.len()),
        is_outlier: Vec::with_capacity(pool.len()),
    };
    let mut ft_records = Vec::with_capacity(pool.len());
    for (i, (p, label)) in pool.into_iter().enumerate() {
        truth.hidden_cluster.push(label);
        truth.is_outlier.push(label == OUTLIER_CLUSTER);
        truth
            .is_novel
            .push(label != OUTLIER_CLUSTER && label >= n_clusters);
        ft_records.push(EmbeddingRecord::finetune(
            (spec.core_n + i) as u64,
            to_f32(&p),
        ));
    }
    let finetune = Corpus::new(dims, ft_records)?;
    Ok(SyntheticData {
        core,
        finetune,
        truth,
        novel_centers,
    })
}

/// Incremental 1-NN coverage over a growing labeled set.
#[derive(Debug, Clone)]
pub struct CoverageTracker<'a> {
    points: Vec<Vec<f64>>,
    truth: &'a GroundTruth,
    best: Vec<(f64, usize)>,
    labeled: usize,
}

impl<'a> CoverageTracker<'a> {
    pub fn new(ft: &Corpus, truth: &'a GroundTruth) -> Result<Self> {
        if truth.hidden_cluster.len() != ft.len() {
            return Err(Error::Invalid(format!(
                "ground truth covers {} samples, pool has {}",
                truth.hidden_cluster.len(),
                ft.len()
            )));
        }
        Ok(Self {
            points: ft.vectors(),
            truth,
            best: vec![(f64::INFINITY, OUTLIER_CLUSTER); ft.len()],
            labeled: 0,
        })
    }

    /// Labels the sample at record position `idx`. Earlier labels win distance ties.
    pub fn add(&mut self, idx: usize) {
        let label = self.truth.hidden_cluster[idx];
        let q = &self.points[idx];
        for (p, best) in self.points.iter().zip(self.best.iter_mut()) {
            let d = sq_dist(p, q);
            if d < best.0 {
                *best = (d, label);
            }
        }
        self.labeled += 1;
    }

    pub fn quality(&self) -> f64 {
        let (mut hit, mut total) = (0usize, 0usize);
        for (i, &(_, label)) in self.best.iter().enumerate() {
            if self.truth.is_outlier[i] {
                continue;
            }
            total += 1;
            if label == self.truth.hidden_cluster[i] {
                hit += 1;
            }
        }
        if total == 0 {
            return 0.0;
        }
        hit as f64 / total as f64
    }
}

fn positions(ft: &Corpus, ids: &[u64]) -> Result<Vec<usize>> {
    let index: HashMap<u64, usize> = ft
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id, i))
        .collect();
    ids.iter()
        .map(|id| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("id {id} is not in the fine-tuning pool")))
        })
        .collect()
}

pub fn surrogate_quality(labeled_ids: &[u64], ft: &Corpus, truth: &GroundTruth) -> Result<f64> {
    if labeled_ids.is_empty() {
        return Err(Error::Empty("labeled selection"));
    }
    let mut tracker = CoverageTracker::new(ft, truth)?;
    for idx in positions(ft, labeled_ids)? {
        tracker.add(idx);
    }
    Ok(tracker.quality())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepStrategy {
    PriorityBps,
    PriorityMps,
    Random,
}

impl SweepStrategy {
    pub const ALL: [SweepStrategy; 3] = [
        SweepStrategy::PriorityBps,
        SweepStrategy::PriorityMps,
        SweepStrategy::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepStrategy::PriorityBps => "priority_bps",
            SweepStrategy::PriorityMps => "priority_mps",
            SweepStrategy::Random => "random",
        }
    }
}

impl std::fmt::Display for SweepStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "priority_bps" => Ok(SweepStrategy::PriorityBps),
            "priority_mps" => Ok(SweepStrategy::PriorityMps),
            "random" => Ok(SweepStrategy::Random),
            other => Err(Error::Invalid(format!("unknown sweep strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub strategy: SweepStrategy,
    pub budget: usize,
    pub seed: usize,
    pub quality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub strategy: SweepStrategy,
    pub budget: usize,
    pub mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub stddev: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn strategies(&self) -> Vec<SweepStrategy> {
        let mut s: Vec<SweepStrategy> = Vec::new();
        for r in &self.rows {
            if !s.contains(&r.strategy) {
                s.push(r.strategy);
            }
        }
        s.sort();
        s
    }

    pub fn budgets(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.rows.iter().map(|r| r.budget).collect();
        b.sort_unstable();
        b.dedup();
        b
    }

    pub fn qualities(&self, strategy: SweepStrategy, budget: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.strategy == strategy && r.budget == budget)
            .map(|r| r.quality)
            .collect()
    }

    pub fn aggregate(&self, strategy: SweepStrategy, budget: usize) -> Option<Aggregate> {
        let q = self.qualities(strategy, budget);
        if q.is_empty() {
            return None;
        }
        let n = q.len();
        let mean = q.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            (q.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Aggregate {
            strategy,
            budget,
            mean,
            stddev,
            n,
        })
    }

    pub fn aggregates(&self) -> Vec<Aggregate> {
        let budgets = self.budgets();
        self.strategies()
            .into_iter()
            .flat_map(|s| budgets.iter().filter_map(move |&b| self.aggregate(s, b)))
            .collect()
    }

    /// `strategy,budget,seed,quality`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,budget,seed,quality\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.strategy, r.budget, r.seed, r.quality).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "strategy,budget,seed,quality" => {}
            _ => {
                return Err(Error::format(
                    "sweep csv",
                    "header must be `strategy,budget,seed,quality`",
                ))
            }
        }
        let mut rows = Vec::new();
        for (index, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |msg: String| Error::Record { index, msg };
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", f.len())));
            }
            let quality: f64 = f[3].parse().map_err(|e| bad(format!("bad quality: {e}")))?;
            if !(0.0..=1.0).contains(&quality) {
                return Err(bad(format!("quality {quality} outside [0, 1]")));
            }
            rows.push(SweepRow {
                strategy: f[0].parse().map_err(|e: Error| bad(e.to_string()))?,
                budget: f[1].parse().map_err(|e| bad(format!("bad budget: {e}")))?,
                seed: f[2].parse().map_err(|e| bad(format!("bad seed: {e}")))?,
                quality,
            });
        }
        Ok(Self { rows })
    }
}

/// `start, start+step, ...` up to and including `end`.
pub fn budget_range(start: usize, end: usize, step: usize) -> Vec<usize> {
    if step == 0 {
        return vec![start];
    }
    (start..=end).step_by(step).collect()
}

/// The budget sweep over 2200-sample pools: 250, 350, ..., 2150.
pub fn default_budgets() -> Vec<usize> {
    budget_range(250, 2150, 100)
}

const STREAM_RANDOM: u64 = 0x5241_4E44;

/// Qualities at each budget for the nested prefixes of `order`.
fn prefix_qualities(
    order: &[usize],
    budgets: &[usize],
    ft: &Corpus,
    truth: &GroundTruth,
) -> Result<Vec<f64>> {
    let mut sorted: Vec<(usize, usize)> = budgets
        .iter()
        .copied()
        .enumerate()
        .map(|(i, b)| (b, i))
        .collect();
    sorted.sort_unstable();
    let mut out = vec![0.0; budgets.len()];
    let mut tracker = CoverageTracker::new(ft, truth)?;
    let mut added = 0;
    for (budget, slot) in sorted {
        while added < budget {
            tracker.add(order[added]);
            added += 1;
        }
        out[slot] = tracker.quality();
    }
    Ok(out)
}

/// Runs the benchmark for `n_seeds` seeds derived from `spec.seed`. Each seed generates fresh
/// data, runs the full pipeline once and evaluates every strategy at every budget. The random
/// strategy labels nested prefixes of one seeded permutation per seed.
pub fn run_budget_sweep(
    spec: &SyntheticSpec,
    budgets: &[usize],
    strategies: &[SweepStrategy],
    n_seeds: usize,
    pipeline: &PipelineConfig,
) -> Result<SweepResult> {
    spec.validate()?;
    if n_seeds == 0 {
        return Err(Error::out_of_range("n_seeds", 0, ">= 1"));
    }
    if budgets.is_empty() || strategies.is_empty() {
        return Err(Error::Empty("budgets and strategies"));
    }
    if let Some(&b) = budgets.iter().find(|&&b| b == 0 || b > spec.ft_n) {
        return Err(Error::out_of_range(
            "budget",
            b,
            format!("1..={} (ft_n)", spec.ft_n),
        ));
    }

    let per_seed: Vec<Vec<SweepRow>> = (0..n_seeds)
        .into_par_iter()
        .map(|s| run_one_seed(spec, budgets, strategies, s, pipeline))
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        rows: per_seed.into_iter().flatten().collect(),
    })
}

fn run_one_seed(
    spec: &SyntheticSpec,
    budgets: &[usize],
    strategies: &[SweepStrategy],
    seed_index: usize,
    pipeline: &PipelineConfig,
) -> Result<Vec<SweepRow>> {
    let seed = derive_seed(spec.seed, seed_index as u64);
    let data = generate_synthetic(&SyntheticSpec {
        seed,
        ..spec.clone()
    })?;
    let needs_pipeline = strategies.iter().any(|s| *s != SweepStrategy::Random);
    let scored = if needs_pipeline {
        let cfg = PipelineConfig {
            seed,
            ..pipeline.clone()
        };
        let models = fit_models(&data.core, Some(&data.finetune), &cfg)?;
        let core_reduced = if cfg.loop_pool_core {
            Some(models.pca.transform_all(&data.core.vectors())?)
        } else {
            None
        };
        Some(score_finetune(
            &models,
            &data.finetune,
            core_reduced.as_deref(),
            &cfg,
        )?)
    } else {
        None
    };

    let mut rows = Vec::new();
    for &strategy in strategies {
        let order: Vec<usize> = match strategy {
            SweepStrategy::PriorityBps | SweepStrategy::PriorityMps => {
                let which = if strategy == SweepStrategy::PriorityBps {
                    Strategy::Bps
                } else {
                    Strategy::Mps
                };
                let ranked = rank(&scored.as_ref().expect("pipeline ran").scores, which);
                positions(&data.finetune, &ranked)?
            }
            SweepStrategy::Random => {
                let mut perm: Vec<usize> = (0..data.finetune.len()).collect();
                perm.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
                    seed,
                    STREAM_RANDOM,
                )));
                perm
            }
        };
        let q = prefix_qualities(&order, budgets, &data.finetune, &data.truth)?;
        rows.extend(budgets.iter().zip(q).map(|(&budget, quality)| SweepRow {
            strategy,
            budget,
            seed: seed_index,
            quality,
        }));
    }
    Ok(rows)
}

/// Writes `id,x,y,iou,split` rows.
pub fn scatter_csv(
    ids: &[u64],
    reduced_2d: &[[f64; 2]],
    ious: &[f64],
    splits: &[Split],
) -> Result<String> {
    let n = ids.len();
    if reduced_2d.len() != n || ious.len() != n || splits.len() != n {
        return Err(Error::Invalid("scatter columns differ in length".into()));
    }
    let mut out = String::from("id,x,y,iou,split\n");
    for i in 0..n {
        writeln!(
            out,
            "{},{},{},{},{}",
            ids[i], reduced_2d[i][0], reduced_2d[i][1], ious[i], splits[i]
        )
        .unwrap();
    }
    Ok(out)
}

pub fn export_scatter(
    path: &Path,
    ids: &[u64],
    reduced_2d: &[[f64; 2]],
    ious: &[f64],
    splits: &[Split],
) -> Result<()> {
    write_file(path, scatter_csv(ids, reduced_2d, ious, splits)?.as_bytes())
}

/// Per-budget table: mean and stddev per strategy, plus each priority strategy minus random.
pub fn report_table(result: &SweepResult) -> Result<String> {
    if result.is_empty() {
        return Err(Error::Empty("sweep result"));
    }
    let strategies = result.strategies();
    let has_random = strategies.contains(&SweepStrategy::Random);
    let priorities: Vec<SweepStrategy> = strategies
        .iter()
        .copied()
        .filter(|s| *s != SweepStrategy::Random)
        .collect();

    let mut out = String::from("budget");
    for s in &strategies {
        write!(out, ",{s}_mean,{s}_stddev").unwrap();
    }
    if has_random {
        for s in &priorities {
            write!(out, ",{s}_minus_random").unwrap();
        }
    }
    out.push('\n');
    for b in result.budgets() {
        write!(out, "{b}").unwrap();
        for &s in &strategies {
            match result.aggregate(s, b) {
                Some(a) => write!(out, ",{:.6},{:.6}", a.mean, a.stddev).unwrap(),
                None => out.push_str(",,"),
            }
        }
        if has_random {
            let random = result.aggregate(SweepStrategy::Random, b);
            for &s in &priorities {
                match (result.aggregate(s, b), random) {
                    (Some(p), Some(r)) => write!(out, ",{:.6}", p.mean - r.mean).unwrap(),
                    _ => out.push(','),
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn summary_text(result: &SweepResult) -> Result<String> {
    if result.is_empty() {
        return Err(Error::Empty("sweep result"));
    }
    let strategies = result.strategies();
    let budgets = result.budgets();
    let seeds = {
        let mut s: Vec<usize> = result.rows.iter().map(|r| r.seed).collect();
        s.sort_unstable();
        s.dedup();
        s.len()
    };
    let mut out = String::new();
    writeln!(
        out,
        "budget sweep: {} budgets ({}..{}), {} strategies, {} seeds",
        budgets.len(),
        budgets[0],
        budgets[budgets.len() - 1],
        strategies.len(),
        seeds
    )
    .unwrap();
    for &s in &strategies {
        let first = result.aggregate(s, budgets[0]).unwrap();
        writeln!(
            out,
            "{s}: mean quality {:.4} (stddev {:.4}) at budget {}",
            first.mean, first.stddev, budgets[0]
        )
        .unwrap();
    }
    if strategies.contains(&SweepStrategy::Random) {
        for &s in strategies.iter().filter(|s| **s != SweepStrategy::Random) {
            let wins: Vec<usize> = budgets
                .iter()
                .copied()
                .filter(|&b| {
                    match (
                        result.aggregate(s, b),
                        result.aggregate(SweepStrategy::Random, b),
                    ) {
                        (Some(p), Some(r)) => p.mean >= r.mean,
                        _ => false,
                    }
                })
                .collect();
            match wins.last() {
                Some(b) => writeln!(
                    out,
                    "{s} >= random at {} of {} budgets; largest such budget: {b}",
                    wins.len(),
                    budgets.len()
                )
                .unwrap(),
                None => writeln!(out, "{s} never reaches random").unwrap(),
            }
        }
    }
    Ok(out)
}

/// Writes the per-budget table to `table_path` and the summary to `summary_path`.
pub fn report(result: &SweepResult, table_path: &Path, summary_path: &Path) -> Result<String> {
    let table = report_table(result)?;
    let summary = summary_text(result)?;
    write_file(table_path, table.as_bytes())?;
    write_file(summary_path, summary.as_bytes())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            core_n: 300,
            ft_n: 400,
            novel_clusters: vec![NovelClusterSpec {
                size: 40,
                stddev: 1.0,
            }],
            seed,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn generator_counts() {
        let d = generate_synthetic(&small_spec(3)).unwrap();
        assert_eq!(d.core.len(), 300);
        assert_eq!(d.finetune.len(), 400);
        assert_eq!(d.truth.is_novel.iter().filter(|&&x| x).count(), 40);
        assert_eq!(d.truth.is_outlier.iter().filter(|&&x| x).count(), 8);
        let n_core = d.truth.hidden_cluster.iter().filter(|&&h| h < 4).count();
        assert_eq!(n_core, 400 - 40 - 8);
        assert!(d.core.records().iter().all(|r| r.split == Split::Core));
        assert!(d
            .finetune
            .records()
            .iter()
            .all(|r| r.measured_iou.is_none()));
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(
            generate_synthetic(&small_spec(9)).unwrap(),
            generate_synthetic(&small_spec(9)).unwrap()
        );
        assert_ne!(
            generate_synthetic(&small_spec(9)).unwrap().finetune,
            generate_synthetic(&small_spec(10)).unwrap().finetune
        );
    }

    #[test]
    fn novel_centers_clear_core() {
        for seed in 0..5 {
            let spec = SyntheticSpec {
                seed,
                ..SyntheticSpec::default()
            };
            let d = generate_synthetic(&spec).unwrap();
            for n in &d.novel_centers {
                for c in &spec.core_clusters {
                    assert!(crate::dist(n, &c.center) >= 10.0 * c.stddev - 1e-9);
                }
            }
        }
    }

    #[test]
    fn infeasible_spec_rejected() {
        let spec = SyntheticSpec {
            ft_n: 150,
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&spec).is_err());
        let spec = SyntheticSpec {
            outlier_fraction: 0.3,
            ..SyntheticSpec::default()
        };
        assert!(spec.validate().is_err());
        let spec = SyntheticSpec {
            novel_anchor: Some(9),
            ..SyntheticSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[0.5, 0.5, 0.0]), vec![4, 3, 0]);
        assert_eq!(apportion(0, &[1.0]), vec![0]);
    }

    fn toy() -> (Corpus, GroundTruth) {
        // two tight groups on a line plus one outlier
        let xs = [0.0f32, 0.1, 0.2, 10.0, 10.1, 10.2, 500.0];
        let labels = [0, 0, 0, 1, 1, 1, OUTLIER_CLUSTER];
        let ft = Corpus::new(
            1,
            xs.iter()
                .enumerate()
                .map(|(i, &x)| EmbeddingRecord::finetune(i as u64, vec![x]))
                .collect(),
        )
        .unwrap();
        let truth = GroundTruth {
            hidden_cluster: labels.to_vec(),
            is_novel: vec![false; 7],
            is_outlier: labels.iter().map(|&l| l == OUTLIER_CLUSTER).collect(),
        };
        (ft, truth)
    }

    #[test]
    fn surrogate_quality_on_toy() {
        let (ft, truth) = toy();
        assert_eq!(surrogate_quality(&[0], &ft, &truth).unwrap(), 0.5);
        assert_eq!(surrogate_quality(&[0, 4], &ft, &truth).unwrap(), 1.0);
        // an outlier label is nearest to group 1 but never correct
        assert_eq!(surrogate_quality(&[6], &ft, &truth).unwrap(), 0.0);
        assert!(surrogate_quality(&[], &ft, &truth).is_err());
        assert!(surrogate_quality(&[42], &ft, &truth).is_err());
    }

    #[test]
    fn sweep_csv_round_trip() {
        let r = SweepResult {
            rows: vec![
                SweepRow {
                    strategy: SweepStrategy::Random,
                    budget: 250,
                    seed: 0,
                    quality: 0.1 + 0.2,
                },
                SweepRow {
                    strategy: SweepStrategy::PriorityMps,
                    budget: 350,
                    seed: 1,
                    quality: 1.0,
                },
            ],
        };
        assert_eq!(SweepResult::from_csv(&r.to_csv()).unwrap(), r);
        assert!(SweepResult::from_csv("a,b\n").is_err());
        assert!(SweepResult::from_csv("strategy,budget,seed,quality\nrandom,1,0,1.5\n").is_err());
    }

    #[test]
    fn aggregate_uses_sample_stddev() {
        let rows = [0.2, 0.4, 0.6]
            .iter()
            .enumerate()
            .map(|(seed, &quality)| SweepRow {
                strategy: SweepStrategy::Random,
                budget: 10,
                seed,
                quality,
            })
            .collect();
        let a = SweepResult { rows }
            .aggregate(SweepStrategy::Random, 10)
            .unwrap();
        assert!((a.mean - 0.4).abs() < 1e-12);
        assert!((a.stddev - 0.2).abs() < 1e-12);
        assert_eq!(a.n, 3);
    }

    #[test]
    fn budgets() {
        let b = default_budgets();
        assert_eq!(b.len(), 20);
        assert_eq!((b[0], b[19]), (250, 2150));
        assert_eq!(budget_range(1, 3, 1), vec![1, 2, 3]);
    }

    #[test]
    fn sweep_rejects_bad_budgets() {
        let spec = small_spec(0);
        let cfg = PipelineConfig::default();
        assert!(run_budget_sweep(&spec, &[401], &[SweepStrategy::Random], 1, &cfg).is_err());
        assert!(run_budget_sweep(&spec, &[10], &[SweepStrategy::Random], 0, &cfg).is_err());
    }

    #[test]
    fn strategy_names() {
        for s in SweepStrategy::ALL {
            assert_eq!(s.as_str().parse::<SweepStrategy>().unwrap(), s);
        }
        assert!("greedy".parse::<SweepStrategy>().is_err());
    }

    #[test]
    fn one_row_table() {
        let r = SweepResult {
            rows: vec![SweepRow {
                strategy: SweepStrategy::Random,
                budget: 5,
                seed: 0,
                quality: 0.5,
            }],
        };
        let t = report_table(&r).unwrap();
        assert_eq!(t.lines().count(), 2);
        assert_eq!(t.lines().nth(1).unwrap(), "5,0.500000,0.000000");
    }
}
