//! Worked examples checked against hand calculations and independent reference code.

use annoprio::cluster::normalize_distances;
use annoprio::data::{decode_binary, decode_csv, encode_binary, encode_csv};
use annoprio::kmeans::{kmeans, KMeansParams};
use annoprio::outlier::erf;
use annoprio::priority::{bps, mps};
use annoprio::sim::{
    generate_synthetic, surrogate_quality, CoverageTracker, GroundTruth, SyntheticSpec,
    OUTLIER_CLUSTER,
};
use annoprio::{
    iou, AssignedCluster, BinaryMask, ClusterModel, Coefficients, Components, Corpus,
    EmbeddingRecord, IouPredictor, LoopModel, PcaModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_points(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn csv_and_binary_encodings_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let records = (0..25)
        .map(|i| {
            let v: Vec<f32> = (0..6).map(|_| rng.random_range(-1e3f32..1e3)).collect();
            EmbeddingRecord::core(i * 7 + 3, v, rng.random_range(0.0f32..=1.0))
        })
        .collect();
    let corpus = Corpus::new(6, records).unwrap();
    let from_bin = decode_binary(&encode_binary(&corpus).unwrap()).unwrap();
    let from_csv = decode_csv(&encode_csv(&corpus).unwrap()).unwrap();
    assert_eq!(from_bin, corpus);
    assert_eq!(from_csv, from_bin);
}

#[test]
fn pca_on_a_line() {
    let pts = vec![vec![-1.0, -2.0], vec![0.0, 0.0], vec![1.0, 2.0]];
    let m = PcaModel::fit(&pts, Components::Fixed(2)).unwrap();
    let s5 = 5f64.sqrt();
    assert!(close(m.components()[0][0], 1.0 / s5, 1e-12));
    assert!(close(m.components()[0][1], 2.0 / s5, 1e-12));
    assert!(m.eigenvalues()[1].abs() < 1e-12);
    let r = m.explained_variance_ratio();
    assert!(close(r[0], 1.0, 1e-12) && r[1].abs() < 1e-12);
}

#[test]
fn full_rank_pca_preserves_distances() {
    let pts = random_points(4, 100, 6);
    let m = PcaModel::fit(&pts, Components::Fixed(6)).unwrap();
    let z = m.transform_all(&pts).unwrap();
    for i in 0..pts.len() {
        for j in 0..i {
            assert!(close(dist(&pts[i], &pts[j]), dist(&z[i], &z[j]), 1e-5));
        }
    }
    let v: Vec<f64> = vec![3.0, -1.0, 0.5, 7.0, 2.0, -4.0];
    let centered: Vec<f64> = v.iter().zip(m.mean()).map(|(a, b)| a - b).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(close(
        norm(&m.transform(&v).unwrap()),
        norm(&centered),
        1e-6
    ));
}

#[test]
fn isotropic_variance_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = Normal::new(0.0, 1.0).unwrap();
    let pts: Vec<Vec<f64>> = (0..10_000)
        .map(|_| vec![n.sample(&mut rng), n.sample(&mut rng)])
        .collect();
    let m = PcaModel::fit(&pts, Components::Fixed(2)).unwrap();
    for r in m.explained_variance_ratio() {
        assert!(close(r, 0.5, 0.05), "ratio {r}");
    }
}

#[test]
fn iou_hand_count() {
    let a = BinaryMask::from_fn(4, 4, |x, _| x < 2).unwrap();
    let b = BinaryMask::from_fn(4, 4, |_, y| y < 2).unwrap();
    assert!(close(iou(&a, &b).unwrap(), 1.0 / 3.0, 1e-15));
}

#[test]
fn idw_hand_evaluation() {
    let p = IouPredictor::fit(vec![vec![0.0], vec![3.0]], vec![1.0, 0.0], 2).unwrap();
    assert!(close(p.predict(&[1.0]).unwrap(), 2.0 / 3.0, 1e-12));
}

fn two_blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, 0.5).unwrap();
    let mut pts = Vec::new();
    let mut ious = Vec::new();
    for c in [0.0, 10.0] {
        for _ in 0..200 {
            pts.push(vec![c + n.sample(&mut rng), c + n.sample(&mut rng)]);
            ious.push(0.7);
        }
    }
    (pts, ious)
}

#[test]
fn blobs_get_their_own_clusters() {
    let (pts, ious) = two_blobs(8);
    let m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 1).unwrap();
    for half in [&pts[..200], &pts[200..]] {
        // mean of the blob in the model's augmented space
        let aug = m.augment_all(half, &[0.7; 200]).unwrap();
        let mean: Vec<f64> = (0..3)
            .map(|d| aug.iter().map(|p| p[d]).sum::<f64>() / 200.0)
            .collect();
        let hit = m
            .clusters()
            .iter()
            .filter(|c| dist(&c.centroid, &mean) < 0.1)
            .count();
        assert_eq!(hit, 1);
    }
    let a_far = m.classify(&[10.0, 10.0], 0.7).unwrap();
    let a_near = m.classify(&[9.0, 9.0], 0.7).unwrap();
    assert_eq!(a_far.cluster, a_near.cluster);
    assert_ne!(a_far.cluster, m.classify(&[0.0, 0.0], 0.7).unwrap().cluster);
}

#[test]
fn reclassified_core_points_keep_their_cluster() {
    let (pts, ious) = two_blobs(21);
    let m = ClusterModel::fit_core(&pts, &ious, 5, 1.0, 77).unwrap();
    let fit = kmeans(
        &m.augment_all(&pts, &ious).unwrap(),
        KMeansParams::new(5, 77),
    )
    .unwrap();
    for (i, p) in pts.iter().enumerate() {
        assert_eq!(
            m.classify(p, ious[i]).unwrap().cluster,
            AssignedCluster::Core(fit.labels[i])
        );
    }
}

#[test]
fn two_far_low_iou_points_make_two_error_clusters() {
    let (mut pts, mut ious) = two_blobs(3);
    pts.push(vec![-20.0, 30.0]);
    ious.push(0.1);
    pts.push(vec![40.0, -20.0]);
    ious.push(0.2);
    let mut m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 0).unwrap();
    assert_eq!(m.fit_error_clusters(&pts, &ious, 2, 0).unwrap(), 2);
    let errs: Vec<_> = m.error_clusters().collect();
    assert_eq!(errs.len(), 2);
    for (_, c) in errs {
        assert_eq!(c.member_count, 1);
        assert_eq!(c.p95_radius, 0.0);
    }
}

#[test]
fn planted_far_cluster_is_orphaned() {
    let (pts, ious) = two_blobs(5);
    let m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = Normal::new(0.0, 0.5).unwrap();
    let mut ft: Vec<Vec<f64>> = pts.iter().step_by(4).cloned().collect();
    let n_core = ft.len();
    // blob stddev 0.5 and blobs at 0 and 10: 50 sigma past the far blob
    for _ in 0..30 {
        ft.push(vec![35.0 + n.sample(&mut rng), 35.0 + n.sample(&mut rng)]);
    }
    let ft_iou = vec![0.7; ft.len()];
    let rep = m.detect_orphans(&ft, &ft_iou, 3, 9).unwrap();
    assert_eq!(rep.orphan_clusters.len(), 1);
    assert_eq!(rep.orphan_clusters[0].members.len(), 30);
    for i in 0..ft.len() {
        let expected = if i >= n_core { 1.0 } else { 0.0 };
        assert_eq!(rep.orph_weight[i], expected);
    }
}

#[test]
fn normalized_distances_scale_linearly() {
    let (pts, ious) = two_blobs(1);
    let m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 0).unwrap();
    let mut batch: Vec<_> = [[0.0, 0.0], [3.0, 1.0], [20.0, -4.0]]
        .iter()
        .map(|p| m.classify(p, 0.5).unwrap())
        .collect();
    normalize_distances(&mut batch);
    let max = batch.iter().map(|a| a.raw_dist).fold(0.0, f64::max);
    for a in &batch {
        assert!(close(a.norm_dist, a.raw_dist / max, 1e-15));
    }
}

/// Straight transcription of the LoOP formulas with no shared code.
fn reference_loop(points: &[Vec<f64>], k: usize, lambda: f64) -> Vec<f64> {
    let n = points.len();
    let mut ctx = Vec::with_capacity(n);
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist(&points[i], &points[j]), j))
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        ctx.push(d[..k].to_vec());
    }
    let pdist: Vec<f64> = ctx
        .iter()
        .map(|c| lambda * (c.iter().map(|(d, _)| d * d).sum::<f64>() / k as f64).sqrt())
        .collect();
    let plof: Vec<f64> = (0..n)
        .map(|i| {
            let m = ctx[i].iter().map(|&(_, j)| pdist[j]).sum::<f64>() / k as f64;
            pdist[i] / m - 1.0
        })
        .collect();
    let nplof = lambda * (plof.iter().map(|p| p * p).sum::<f64>() / n as f64).sqrt();
    plof.iter()
        .map(|&p| erf_as(p / (nplof * 2f64.sqrt())).max(0.0))
        .collect()
}

/// Abramowitz and Stegun 7.1.26, absolute error below 1.5e-7.
fn erf_as(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
            + 0.254829592)
            * t
            * (-x * x).exp();
    s * y
}

fn grid_with_outlier() -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (0..100)
        .map(|i| vec![(i % 10) as f64, (i / 10) as f64])
        .collect();
    pts.push(vec![9.0 * 20.0, 9.0 * 20.0]);
    pts
}

#[test]
fn loop_matches_reference_on_grid_fixture() {
    let pts = grid_with_outlier();
    let m = LoopModel::fit(pts.clone(), 10, 3.0).unwrap();
    let ours = m.scores();
    let theirs = reference_loop(&pts, 10, 3.0);
    for (a, b) in ours.iter().zip(&theirs) {
        // the reference erf is only good to ~1.5e-7; grid ties may permute equal-distance
        // neighbors but never change the distance multiset
        assert!(close(*a, *b, 1e-6), "{a} vs {b}");
    }
    assert!(ours[100] > 0.95);
    let mut grid: Vec<f64> = ours[..100].to_vec();
    grid.sort_by(f64::total_cmp);
    assert!((grid[49] + grid[50]) / 2.0 < 0.3);
}

#[test]
fn erf_table() {
    for (x, v) in [
        (0.0, 0.0),
        (0.5, 0.520_499_877_813_046_5),
        (1.0, 0.842_700_792_949_714_9),
        (1.0 / 2f64.sqrt(), 0.682_689_492_137_085_9),
        (2.0, 0.995_322_265_018_952_7),
        (3.0, 0.999_977_909_503_001_4),
    ] {
        assert!(close(erf(x), v, 1e-14), "erf({x})");
        assert!(close(erf(-x), -v, 1e-14));
    }
}

#[test]
fn score_hand_values() {
    let c = Coefficients::default();
    assert!(close(bps(0.4, 0.8, &c).unwrap(), 0.35, 1e-15));
    assert!(close(
        mps(1.0, 0.0, 1.0, 0.0, 0.0, &c).unwrap(),
        0.75,
        1e-15
    ));
    assert!(close(
        mps(0.0, 0.0, 0.0, 0.0, 0.0, &c).unwrap(),
        0.05,
        1e-15
    ));
}

fn line_pool(xs: &[(f32, usize)]) -> (Corpus, GroundTruth) {
    let ft = Corpus::new(
        1,
        xs.iter()
            .enumerate()
            .map(|(i, &(x, _))| EmbeddingRecord::finetune(i as u64, vec![x]))
            .collect(),
    )
    .unwrap();
    let labels: Vec<usize> = xs.iter().map(|&(_, l)| l).collect();
    let truth = GroundTruth {
        is_novel: vec![false; labels.len()],
        is_outlier: labels.iter().map(|&l| l == OUTLIER_CLUSTER).collect(),
        hidden_cluster: labels,
    };
    (ft, truth)
}

#[test]
fn one_sided_labels_cover_half_of_two_equal_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = Normal::new(0.0f32, 1.0).unwrap();
    let pts: Vec<(f32, usize)> = (0..400)
        .map(|i| {
            let c = i % 2;
            (c as f32 * 30.0 + n.sample(&mut rng), c)
        })
        .collect();
    let (ft, truth) = line_pool(&pts);
    let from_zero: Vec<u64> = (0..400).filter(|i| i % 2 == 0).take(20).collect();
    assert!(close(
        surrogate_quality(&from_zero, &ft, &truth).unwrap(),
        0.5,
        1e-12
    ));
    let all: Vec<u64> = (0..400).collect();
    assert_eq!(surrogate_quality(&all, &ft, &truth).unwrap(), 1.0);
    assert_eq!(surrogate_quality(&[0, 1], &ft, &truth).unwrap(), 1.0);
}

#[test]
fn coverage_grows_on_separated_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = Normal::new(0.0f32, 1.0).unwrap();
    let pts: Vec<(f32, usize)> = (0..300)
        .map(|i| ((i % 3) as f32 * 50.0 + n.sample(&mut rng), i % 3))
        .collect();
    let (ft, truth) = line_pool(&pts);
    let mut order: Vec<usize> = (0..300).collect();
    rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
    let mut tracker = CoverageTracker::new(&ft, &truth).unwrap();
    let mut last = 0.0;
    for i in order {
        tracker.add(i);
        let q = tracker.quality();
        assert!(q >= last);
        last = q;
    }
    assert_eq!(last, 1.0);
}

#[test]
fn generator_background_stays_near_core_centers() {
    let mut spec = SyntheticSpec {
        dims: 2,
        novel_clusters: vec![],
        outlier_fraction: 0.0,
        novel_anchor: None,
        ..SyntheticSpec::default()
    };
    for (c, center) in
        spec.core_clusters
            .iter_mut()
            .zip([[-6.0, 0.0], [6.0, 0.0], [0.0, 6.0], [0.0, -6.0]])
    {
        c.center = center.to_vec();
        c.ft_weight = 0.25;
    }
    let d = generate_synthetic(&spec).unwrap();
    for v in d.finetune.vectors() {
        let nearest = spec
            .core_clusters
            .iter()
            .map(|c| dist(&v, &c.center) / c.stddev)
            .fold(f64::INFINITY, f64::min);
        assert!(
            nearest <= 5.0,
            "sample {nearest} stddevs from every core center"
        );
    }
}

#[test]
fn generator_marks_planted_novel_samples() {
    let spec = SyntheticSpec {
        novel_clusters: vec![annoprio::sim::NovelClusterSpec {
            size: 40,
            stddev: 1.0,
        }],
        ..SyntheticSpec::default()
    };
    let d = generate_synthetic(&spec).unwrap();
    let novel_label = spec.core_clusters.len();
    let marked: Vec<usize> = (0..d.finetune.len())
        .filter(|&i| d.truth.is_novel[i])
        .collect();
    assert_eq!(marked.len(), 40);
    assert!(marked
        .iter()
        .all(|&i| d.truth.hidden_cluster[i] == novel_label));
}
