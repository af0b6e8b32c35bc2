//! End-to-end scoring: reduce, predict IoU, cluster, detect orphans, LoOP, score.

use crate::cluster::{
    normalize_distances, AssignedCluster, Assignment, ClusterModel, OrphanReport,
};
use crate::data::{Corpus, Split};
use crate::error::{Error, Result};
use crate::kmeans::default_k;
use crate::metrics::IouPredictor;
use crate::outlier::LoopModel;
use crate::priority::{score_all, Coefficients, FeatureBundle, SampleScore};
use crate::reduce::{Components, PcaModel};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub pca: Components,
    /// Fit PCA on core vectors only instead of the pooled core and fine-tuning vectors.
    pub pca_core_only: bool,
    pub knn_k: usize,
    /// `None` picks `round(sqrt(n/2))` clamped to `[2, 16]` for the clustered population.
    pub cluster_k: Option<usize>,
    pub k_err: Option<usize>,
    pub k_ft: Option<usize>,
    pub iou_weight: f64,
    pub loop_k_nn: usize,
    pub loop_lambda: f64,
    /// Fit LoOP on fine-tuning and core points together (scores still reported for fine-tuning).
    pub loop_pool_core: bool,
    pub coefficients: Coefficients,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pca: Components::default(),
            pca_core_only: false,
            knn_k: IouPredictor::DEFAULT_K,
            cluster_k: None,
            k_err: None,
            k_ft: None,
            iou_weight: ClusterModel::DEFAULT_IOU_WEIGHT,
            loop_k_nn: LoopModel::DEFAULT_K_NN,
            loop_lambda: LoopModel::DEFAULT_LAMBDA,
            loop_pool_core: false,
            coefficients: Coefficients::default(),
            seed: 0,
        }
    }
}

/// SplitMix64 step; derives independent stream seeds from one master seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_CORE_CLUSTERS: u64 = 1;
const STREAM_ERROR_CLUSTERS: u64 = 2;
const STREAM_FT_CLUSTERS: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModels {
    pub pca: PcaModel,
    pub predictor: IouPredictor,
    pub clusters: ClusterModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPool {
    pub scores: Vec<SampleScore>,
    pub assignments: Vec<Assignment>,
    pub orphans: OrphanReport,
    pub reduced: Vec<Vec<f64>>,
}

fn core_ious(core: &Corpus) -> Result<Vec<f64>> {
    core.records()
        .iter()
        .enumerate()
        .map(|(index, r)| match (r.split, r.measured_iou) {
            (Split::Core, Some(iou)) => Ok(f64::from(iou)),
            _ => Err(Error::Record {
                index,
                msg: "core-training corpus needs split=core records with measured_iou".into(),
            }),
        })
        .collect()
}

pub fn fit_models(
    core: &Corpus,
    finetune: Option<&Corpus>,
    cfg: &PipelineConfig,
) -> Result<FittedModels> {
    if core.is_empty() {
        return Err(Error::Empty("core-training corpus"));
    }
    let ious = core_ious(core)?;
    let core_vectors = core.vectors();
    let pca = match finetune {
        Some(ft) if !cfg.pca_core_only => {
            if ft.dimension() != core.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: core.dimension(),
                    got: ft.dimension(),
                });
            }
            let mut pooled = core_vectors.clone();
            pooled.extend(ft.vectors());
            PcaModel::fit(&pooled, cfg.pca)?
        }
        _ => PcaModel::fit(&core_vectors, cfg.pca)?,
    };
    let reduced = pca.transform_all(&core_vectors)?;
    let predictor = IouPredictor::fit(reduced.clone(), ious.clone(), cfg.knn_k)?;

    let k = cfg.cluster_k.unwrap_or_else(|| default_k(reduced.len()));
    let mut clusters = ClusterModel::fit_core(
        &reduced,
        &ious,
        k,
        cfg.iou_weight,
        derive_seed(cfg.seed, STREAM_CORE_CLUSTERS),
    )?;
    let n_low = ious
        .iter()
        .filter(|&&v| v < crate::cluster::ERROR_IOU_LEVEL)
        .count();
    if n_low > 0 {
        let k_err = cfg.k_err.unwrap_or_else(|| default_k(n_low));
        clusters.fit_error_clusters(
            &reduced,
            &ious,
            k_err,
            derive_seed(cfg.seed, STREAM_ERROR_CLUSTERS),
        )?;
    }
    Ok(FittedModels {
        pca,
        predictor,
        clusters,
    })
}

/// Computes every feature and both scores for the fine-tuning pool. `core_reduced` is only
/// consulted when `cfg.loop_pool_core` is set.
pub fn score_finetune(
    models: &FittedModels,
    finetune: &Corpus,
    core_reduced: Option<&[Vec<f64>]>,
    cfg: &PipelineConfig,
) -> Result<ScoredPool> {
    if finetune.is_empty() {
        return Err(Error::Empty("fine-tuning corpus"));
    }
    if finetune.dimension() != models.pca.dimension() {
        return Err(Error::DimensionMismatch {
            expected: models.pca.dimension(),
            got: finetune.dimension(),
        });
    }
    let reduced = models.pca.transform_all(&finetune.vectors())?;
    let pred: Vec<f64> = reduced
        .iter()
        .map(|v| models.predictor.predict(v))
        .collect::<Result<_>>()?;

    let mut assignments: Vec<Assignment> = reduced
        .iter()
        .zip(&pred)
        .map(|(v, &iou)| models.clusters.classify(v, iou))
        .collect::<Result<_>>()?;
    normalize_distances(&mut assignments);

    let k_ft = cfg.k_ft.unwrap_or_else(|| default_k(reduced.len()));
    let orphans = models.clusters.detect_orphans(
        &reduced,
        &pred,
        k_ft,
        derive_seed(cfg.seed, STREAM_FT_CLUSTERS),
    )?;
    for (a, o) in assignments.iter_mut().zip(&orphans.orphan_of) {
        if let Some(j) = o {
            a.cluster = AssignedCluster::Orphan(*j);
        }
    }

    let mut loop_points = reduced.clone();
    if cfg.loop_pool_core {
        let core = core_reduced.ok_or(Error::Invalid(
            "LoOP pooling with core points needs the reduced core vectors".into(),
        ))?;
        loop_points.extend(core.iter().cloned());
    }
    let loop_model = LoopModel::fit(loop_points, cfg.loop_k_nn, cfg.loop_lambda)?;
    let loop_scores = loop_model.scores();

    let features: Vec<FeatureBundle> = finetune
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| FeatureBundle {
            id: r.id,
            dist: assignments[i].norm_dist,
            pred_iou: pred[i],
            loop_score: loop_scores[i],
            orph: orphans.orph_weight[i],
            err: orphans.err_weight[i],
        })
        .collect();
    let scores = score_all(&features, &cfg.coefficients)?;
    Ok(ScoredPool {
        scores,
        assignments,
        orphans,
        reduced,
    })
}
