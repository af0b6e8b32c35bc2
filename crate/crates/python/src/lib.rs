//! Python bindings: `import annoprio_py`.

use annoprio::data::{Corpus, EmbeddingRecord};
use annoprio::pipeline::{fit_models, score_finetune, PipelineConfig};
use annoprio::priority::{self, Coefficients, SampleScore, Strategy};
use annoprio::sim::{self, SweepStrategy, SyntheticSpec, OUTLIER_CLUSTER};
use annoprio::{BinaryMask, Components, LoopModel, PcaModel};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn err(e: annoprio::Error) -> PyErr {
    match e {
        annoprio::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn mask(width: usize, height: usize, bits: Vec<bool>) -> PyResult<BinaryMask> {
    BinaryMask::new(width, height, bits).map_err(err)
}

/// IoU of two row-major masks of the same shape.
#[pyfunction]
fn iou(width: usize, height: usize, a: Vec<bool>, b: Vec<bool>) -> PyResult<f64> {
    annoprio::iou(&mask(width, height, a)?, &mask(width, height, b)?).map_err(err)
}

#[pyclass(name = "Pca", module = "annoprio_py", frozen)]
struct Pca(PcaModel);

#[pymethods]
impl Pca {
    /// `n_components` fixes the count; otherwise the smallest count reaching `variance`, at most `cap`.
    #[staticmethod]
    #[pyo3(signature = (points, n_components=None, variance=0.95, cap=32))]
    fn fit(
        points: Vec<Vec<f64>>,
        n_components: Option<usize>,
        variance: f64,
        cap: usize,
    ) -> PyResult<Self> {
        let c = match n_components {
            Some(r) => Components::Fixed(r),
            None => Components::Variance {
                threshold: variance,
                cap,
            },
        };
        PcaModel::fit(&points, c).map(Pca).map_err(err)
    }

    fn transform(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        self.0.transform_all(&points).map_err(err)
    }

    fn inverse_transform(&self, z: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.inverse_transform(&z).map_err(err)
    }

    #[getter]
    fn n_components(&self) -> usize {
        self.0.n_components()
    }

    #[getter]
    fn components(&self) -> Vec<Vec<f64>> {
        self.0.components().to_vec()
    }

    #[getter]
    fn explained_variance_ratio(&self) -> Vec<f64> {
        self.0.explained_variance_ratio()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        PcaModel::from_bytes(data).map(Pca).map_err(err)
    }
}

/// Basic priority score with the default coefficients.
#[pyfunction]
fn bps(dist: f64, pred_iou: f64) -> PyResult<f64> {
    priority::bps(dist, pred_iou, &Coefficients::default()).map_err(err)
}

/// Multiparty priority score with the default coefficients.
#[pyfunction]
fn mps(orph: f64, err_weight: f64, dist: f64, pred_iou: f64, loop_score: f64) -> PyResult<f64> {
    priority::mps(
        orph,
        err_weight,
        dist,
        pred_iou,
        loop_score,
        &Coefficients::default(),
    )
    .map_err(err)
}

/// Ids ordered by descending score, ties by ascending id.
#[pyfunction]
fn rank(ids: Vec<u64>, scores: Vec<f64>) -> PyResult<Vec<u64>> {
    if ids.len() != scores.len() {
        return Err(PyValueError::new_err("ids and scores differ in length"));
    }
    let s: Vec<SampleScore> = ids
        .iter()
        .zip(&scores)
        .map(|(&id, &v)| SampleScore {
            id,
            dist: 0.0,
            pred_iou: 0.0,
            loop_score: 0.0,
            orph: 0.0,
            err: 0.0,
            bps: v,
            mps: v,
        })
        .collect();
    Ok(priority::rank(&s, Strategy::Bps))
}

#[pyfunction]
#[pyo3(signature = (points, k_nn=20, lam=3.0))]
fn loop_scores(points: Vec<Vec<f64>>, k_nn: usize, lam: f64) -> PyResult<Vec<f64>> {
    LoopModel::fit(points, k_nn, lam)
        .map(|m| m.scores())
        .map_err(err)
}

fn spec(seed: u64, core_n: Option<usize>, ft_n: Option<usize>) -> SyntheticSpec {
    let base = SyntheticSpec::default();
    SyntheticSpec {
        seed,
        core_n: core_n.unwrap_or(base.core_n),
        ft_n: ft_n.unwrap_or(base.ft_n),
        ..base
    }
}

type Synthetic = (
    Vec<Vec<f64>>,
    Vec<f64>,
    Vec<Vec<f64>>,
    Vec<i64>,
    Vec<bool>,
    Vec<bool>,
);

/// One draw of the benchmark: `(core_vectors, core_ious, ft_vectors, hidden_cluster, is_novel,
/// is_outlier)`. Outliers have hidden cluster -1.
#[pyfunction]
#[pyo3(signature = (seed=0, core_n=None, ft_n=None))]
fn generate_synthetic(
    seed: u64,
    core_n: Option<usize>,
    ft_n: Option<usize>,
) -> PyResult<Synthetic> {
    let d = sim::generate_synthetic(&spec(seed, core_n, ft_n)).map_err(err)?;
    let hidden = d
        .truth
        .hidden_cluster
        .iter()
        .map(|&c| if c == OUTLIER_CLUSTER { -1 } else { c as i64 })
        .collect();
    let core_ious = d
        .core
        .ious()
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    Ok((
        d.core.vectors(),
        core_ious,
        d.finetune.vectors(),
        hidden,
        d.truth.is_novel,
        d.truth.is_outlier,
    ))
}

/// Budget sweep on the default benchmark; rows of `(strategy, budget, seed, quality)`.
#[pyfunction]
#[pyo3(signature = (n_seeds=20, seed=0, budgets=None, strategies=None))]
fn run_sweep(
    py: Python<'_>,
    n_seeds: usize,
    seed: u64,
    budgets: Option<Vec<usize>>,
    strategies: Option<Vec<String>>,
) -> PyResult<Vec<(String, usize, usize, f64)>> {
    let budgets = budgets.unwrap_or_else(sim::default_budgets);
    let strategies: Vec<SweepStrategy> = match strategies {
        Some(s) => s
            .iter()
            .map(|x| x.parse())
            .collect::<Result<_, _>>()
            .map_err(err)?,
        None => SweepStrategy::ALL.to_vec(),
    };
    let spec = spec(seed, None, None);
    let result = py
        .detach(|| {
            sim::run_budget_sweep(
                &spec,
                &budgets,
                &strategies,
                n_seeds,
                &PipelineConfig::default(),
            )
        })
        .map_err(err)?;
    Ok(result
        .rows
        .into_iter()
        .map(|r| (r.strategy.to_string(), r.budget, r.seed, r.quality))
        .collect())
}

/// Full pipeline with default settings. Returns one `(id, bps, mps, dist, pred_iou, loop, orph,
/// err)` tuple per fine-tuning sample; ids are the row positions.
#[pyfunction]
#[pyo3(signature = (core_vectors, core_ious, ft_vectors, seed=0))]
fn score_pool(
    core_vectors: Vec<Vec<f64>>,
    core_ious: Vec<f64>,
    ft_vectors: Vec<Vec<f64>>,
    seed: u64,
) -> PyResult<Vec<(u64, f64, f64, f64, f64, f64, f64, f64)>> {
    if core_vectors.len() != core_ious.len() {
        return Err(PyValueError::new_err(
            "core_vectors and core_ious differ in length",
        ));
    }
    let f32s = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
    let dim = core_vectors.first().map_or(0, Vec::len);
    let core = Corpus::new(
        dim,
        core_vectors
            .iter()
            .zip(&core_ious)
            .enumerate()
            .map(|(i, (v, &iou))| EmbeddingRecord::core(i as u64, f32s(v), iou as f32))
            .collect(),
    )
    .map_err(err)?;
    let ft = Corpus::new(
        dim,
        ft_vectors
            .iter()
            .enumerate()
            .map(|(i, v)| EmbeddingRecord::finetune(i as u64, f32s(v)))
            .collect(),
    )
    .map_err(err)?;
    let cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    let models = fit_models(&core, Some(&ft), &cfg).map_err(err)?;
    let scored = score_finetune(&models, &ft, None, &cfg).map_err(err)?;
    Ok(scored
        .scores
        .iter()
        .map(|s| {
            (
                s.id,
                s.bps,
                s.mps,
                s.dist,
                s.pred_iou,
                s.loop_score,
                s.orph,
                s.err,
            )
        })
        .collect())
}

#[pymodule]
fn annoprio_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Pca>()?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(bps, m)?)?;
    m.add_function(wrap_pyfunction!(mps, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(loop_scores, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(score_pool, m)?)?;
    Ok(())
}
