//! Two-phase clustering in reduced space augmented with an IoU coordinate.
//!
//! Core samples are clustered by k-means on `(standardized reduced vector, iou_weight · iou)`.
//! Fine-tuning samples are classified into the nearest core cluster using their predicted IoU.
//! Error clusters are fitted over the core samples with IoU below [`ERROR_IOU_LEVEL`]; orphaned
//! clusters are fine-tuning clusters whose centroid lies outside the 95th-percentile radius of
//! every core cluster.

use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, KMeansFit, KMeansParams};
use crate::{dist, sq_dist};

const CLU_MAGIC: &[u8; 4] = b"CLU1";

/// Core samples below this measured IoU feed the error clusters.
pub const ERROR_IOU_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Point in augmented space (R standardized coordinates + weighted IoU).
    pub centroid: Vec<f64>,
    pub member_count: usize,
    /// 95th percentile (nearest rank) of member distances to the centroid.
    pub p95_radius: f64,
    pub is_error: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    shift: Vec<f64>,
    scale: Vec<f64>,
    iou_weight: f64,
    clusters: Vec<Cluster>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignedCluster {
    Core(usize),
    /// Index into [`OrphanReport::orphan_clusters`].
    Orphan(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    /// Nearest core cluster, or the orphan cluster the sample belongs to.
    pub cluster: AssignedCluster,
    /// Distance to the nearest core centroid in augmented space.
    pub raw_dist: f64,
    /// `raw_dist` scaled to `[0, 1]` over a batch by [`normalize_distances`].
    pub norm_dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrphanCluster {
    pub centroid: Vec<f64>,
    /// Indices into the fine-tuning batch passed to [`ClusterModel::detect_orphans`].
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrphanReport {
    pub orphan_clusters: Vec<OrphanCluster>,
    /// Orphan cluster of each fine-tuning sample, if any.
    pub orphan_of: Vec<Option<usize>>,
    /// Error cluster (model index) of each fine-tuning sample, if any.
    pub error_of: Vec<Option<usize>>,
    pub orph_weight: Vec<f64>,
    pub err_weight: Vec<f64>,
}

impl ClusterModel {
    pub const DEFAULT_IOU_WEIGHT: f64 = 1.0;

    /// Fits the core clusters. Reduced coordinates are standardized to unit variance per
    /// dimension (statistics from `core_reduced`) before the IoU coordinate is appended.
    pub fn fit_core(
        core_reduced: &[Vec<f64>],
        core_ious: &[f64],
        k: usize,
        iou_weight: f64,
        seed: u64,
    ) -> Result<Self> {
        check_inputs(core_reduced, core_ious)?;
        if !(iou_weight > 0.0 && iou_weight.is_finite()) {
            return Err(Error::out_of_range("iou_weight", iou_weight, "> 0"));
        }
        if k == 0 || k > core_reduced.len() {
            return Err(Error::out_of_range(
                "k",
                k,
                format!("1..={}", core_reduced.len()),
            ));
        }
        let (shift, scale) = standardization(core_reduced);
        let mut model = Self {
            shift,
            scale,
            iou_weight,
            clusters: Vec::new(),
        };
        let aug = model.augment_all(core_reduced, core_ious)?;
        let fit = kmeans(&aug, KMeansParams::new(k, seed))?;
        model.clusters = summarize(&aug, &fit, false);
        Ok(model)
    }

    /// Adds error clusters fitted over the core samples with IoU below 0.5 and returns how many
    /// were added. No qualifying sample means no error clusters.
    pub fn fit_error_clusters(
        &mut self,
        core_reduced: &[Vec<f64>],
        core_ious: &[f64],
        k_err: usize,
        seed: u64,
    ) -> Result<usize> {
        check_inputs(core_reduced, core_ious)?;
        self.clusters.retain(|c| !c.is_error);
        let (pts, ious): (Vec<Vec<f64>>, Vec<f64>) = core_reduced
            .iter()
            .zip(core_ious)
            .filter(|(_, &iou)| iou < ERROR_IOU_LEVEL)
            .map(|(p, &iou)| (p.clone(), iou))
            .unzip();
        if pts.is_empty() {
            return Ok(0);
        }
        if k_err == 0 || k_err > pts.len() {
            return Err(Error::out_of_range(
                "k_err",
                k_err,
                format!(
                    "1..={} (core samples with IoU < {ERROR_IOU_LEVEL})",
                    pts.len()
                ),
            ));
        }
        let aug = self.augment_all(&pts, &ious)?;
        let fit = kmeans(&aug, KMeansParams::new(k_err, seed))?;
        let added = summarize(&aug, &fit, true);
        let n = added.len();
        self.clusters.extend(added);
        Ok(n)
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn core_clusters(&self) -> impl Iterator<Item = (usize, &Cluster)> {
        self.clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_error)
    }

    pub fn error_clusters(&self) -> impl Iterator<Item = (usize, &Cluster)> {
        self.clusters.iter().enumerate().filter(|(_, c)| c.is_error)
    }

    pub fn reduced_dim(&self) -> usize {
        self.shift.len()
    }

    pub fn iou_weight(&self) -> f64 {
        self.iou_weight
    }

    pub fn augment(&self, v: &[f64], iou: f64) -> Result<Vec<f64>> {
        if v.len() != self.reduced_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.reduced_dim(),
                got: v.len(),
            });
        }
        let mut out: Vec<f64> = v
            .iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        out.push(self.iou_weight * iou);
        Ok(out)
    }

    pub fn augment_all(&self, vs: &[Vec<f64>], ious: &[f64]) -> Result<Vec<Vec<f64>>> {
        vs.iter()
            .zip(ious)
            .map(|(v, &i)| self.augment(v, i))
            .collect()
    }

    /// Nearest core cluster (ties to the lower index) and its augmented-space distance.
    /// `norm_dist` is left at 0 until [`normalize_distances`] runs over the batch.
    pub fn classify(&self, v_reduced: &[f64], iou: f64) -> Result<Assignment> {
        let p = self.augment(v_reduced, iou)?;
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.core_clusters() {
            let d = sq_dist(&c.centroid, &p);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, d2) = best.ok_or(Error::Empty("cluster model has no core clusters"))?;
        Ok(Assignment {
            cluster: AssignedCluster::Core(i),
            raw_dist: d2.sqrt(),
            norm_dist: 0.0,
        })
    }

    /// Clusters the fine-tuning batch with `k_ft` centroids and flags orphans and error-cluster
    /// membership. Orphan weight is the orphan cluster's size over the largest orphan cluster's
    /// size; error weight likewise uses error-cluster member counts. A fine-tuning sample joins an
    /// error cluster only if its predicted IoU is below 0.5 and it lies within that cluster's
    /// 95th-percentile radius.
    pub fn detect_orphans(
        &self,
        ft_reduced: &[Vec<f64>],
        ft_ious: &[f64],
        k_ft: usize,
        seed: u64,
    ) -> Result<OrphanReport> {
        check_inputs(ft_reduced, ft_ious)?;
        if k_ft == 0 || k_ft > ft_reduced.len() {
            return Err(Error::out_of_range(
                "k_ft",
                k_ft,
                format!("1..={}", ft_reduced.len()),
            ));
        }
        let aug = self.augment_all(ft_reduced, ft_ious)?;
        let fit = kmeans(&aug, KMeansParams::new(k_ft, seed))?;

        let mut members = vec![Vec::new(); k_ft];
        for (i, &l) in fit.labels.iter().enumerate() {
            members[l].push(i);
        }
        let mut orphan_clusters = Vec::new();
        let mut orphan_of = vec![None; aug.len()];
        for (c, centroid) in fit.centroids.iter().enumerate() {
            if members[c].is_empty() {
                continue;
            }
            let orphaned = self
                .core_clusters()
                .all(|(_, core)| dist(centroid, &core.centroid) > core.p95_radius);
            if orphaned {
                for &m in &members[c] {
                    orphan_of[m] = Some(orphan_clusters.len());
                }
                orphan_clusters.push(OrphanCluster {
                    centroid: centroid.clone(),
                    members: std::mem::take(&mut members[c]),
                });
            }
        }
        let max_orphan = orphan_clusters
            .iter()
            .map(|c| c.members.len())
            .max()
            .unwrap_or(0);
        let orph_weight = orphan_of
            .iter()
            .map(|o| match o {
                Some(j) => orphan_clusters[*j].members.len() as f64 / max_orphan as f64,
                None => 0.0,
            })
            .collect();

        let max_err = self
            .error_clusters()
            .map(|(_, c)| c.member_count)
            .max()
            .unwrap_or(0);
        let error_of: Vec<Option<usize>> = aug
            .iter()
            .zip(ft_ious)
            .map(|(p, &iou)| {
                if iou >= ERROR_IOU_LEVEL {
                    return None;
                }
                let mut best: Option<(usize, f64)> = None;
                for (i, c) in self.error_clusters() {
                    let d = dist(&c.centroid, p);
                    if d <= c.p95_radius && best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
                best.map(|(i, _)| i)
            })
            .collect();
        let err_weight = error_of
            .iter()
            .map(|e| match e {
                Some(i) => self.clusters[*i].member_count as f64 / max_err as f64,
                None => 0.0,
            })
            .collect();

        Ok(OrphanReport {
            orphan_clusters,
            orphan_of,
            error_of,
            orph_weight,
            err_weight,
        })
    }

    /// `CLU1` container: u32 K, u32 R, f32 iou_weight, R f32 shift, R f32 scale,
    /// K×(R+1) f32 centroids, K f32 radii, K u32 member counts, K u8 error flags.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(CLU_MAGIC);
        w.u32(self.clusters.len() as u32);
        w.u32(self.reduced_dim() as u32);
        w.f64_as_f32(self.iou_weight);
        for &x in self.shift.iter().chain(&self.scale) {
            w.f64_as_f32(x);
        }
        for c in &self.clusters {
            for &x in &c.centroid {
                w.f64_as_f32(x);
            }
        }
        for c in &self.clusters {
            w.f64_as_f32(c.p95_radius);
        }
        for c in &self.clusters {
            w.u32(c.member_count as u32);
        }
        for c in &self.clusters {
            w.u8(c.is_error as u8);
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "cluster model");
        r.magic(CLU_MAGIC)?;
        let k = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let iou_weight = f64::from(r.f32()?);
        let shift = r.f32_vec_as_f64(dim)?;
        let scale = r.f32_vec_as_f64(dim)?;
        let centroids = (0..k)
            .map(|_| r.f32_vec_as_f64(dim + 1))
            .collect::<Result<Vec<_>>>()?;
        let radii = r.f32_vec_as_f64(k)?;
        let counts = (0..k).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let flags = (0..k).map(|_| r.u8()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        if scale.iter().any(|s| !(*s > 0.0)) || !(iou_weight > 0.0) {
            return Err(Error::format("cluster model", "non-positive scale"));
        }
        let clusters = centroids
            .into_iter()
            .zip(radii)
            .zip(counts.into_iter().zip(flags))
            .map(|((centroid, p95_radius), (count, flag))| Cluster {
                centroid,
                member_count: count as usize,
                p95_radius,
                is_error: flag != 0,
            })
            .collect();
        Ok(Self {
            shift,
            scale,
            iou_weight,
            clusters,
        })
    }
}

/// `norm_dist = raw_dist / max(raw_dist)` over the batch; an all-zero batch stays at 0.
pub fn normalize_distances(batch: &mut [Assignment]) {
    let max = batch.iter().map(|a| a.raw_dist).fold(0.0, f64::max);
    for a in batch.iter_mut() {
        a.norm_dist = if max > 0.0 {
            (a.raw_dist / max).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
}

fn check_inputs(points: &[Vec<f64>], ious: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("no points to cluster"));
    }
    if points.len() != ious.len() {
        return Err(Error::Invalid(format!(
            "{} points but {} IoU values",
            points.len(),
            ious.len()
        )));
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite coordinate".into()));
        }
    }
    if let Some(v) = ious.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::out_of_range("iou", v, "[0, 1]"));
    }
    Ok(())
}

fn standardization(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len() as f64;
    let dim = points[0].len();
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / n;
        }
    }
    let mut var = vec![0.0; dim];
    for p in points {
        for ((v, x), m) in var.iter_mut().zip(p).zip(&mean) {
            *v += (x - m) * (x - m) / n;
        }
    }
    let scale = var
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, scale)
}

fn summarize(aug: &[Vec<f64>], fit: &KMeansFit, is_error: bool) -> Vec<Cluster> {
    let mut dists = vec![Vec::new(); fit.centroids.len()];
    for (p, &l) in aug.iter().zip(&fit.labels) {
        dists[l].push(dist(p, &fit.centroids[l]));
    }
    fit.centroids
        .iter()
        .zip(dists)
        .map(|(c, d)| Cluster {
            centroid: c.clone(),
            member_count: d.len(),
            p95_radius: percentile_nearest_rank(d, 0.95),
            is_error,
        })
        .collect()
}

fn percentile_nearest_rank(mut v: Vec<f64>, q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64, per: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut pts = Vec::new();
        let mut ious = Vec::new();
        for (c, iou) in [(0.0, 0.3), (10.0, 0.8)] {
            for _ in 0..per {
                pts.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
                ious.push(iou);
            }
        }
        (pts, ious)
    }

    fn unstandardize(m: &ClusterModel, c: &[f64]) -> Vec<f64> {
        c[..m.reduced_dim()]
            .iter()
            .zip(m.shift.iter().zip(&m.scale))
            .map(|(z, (mu, s))| z * s + mu)
            .collect()
    }

    #[test]
    fn blobs_get_their_own_clusters() {
        let (pts, ious) = blobs(4, 100);
        let m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 1).unwrap();
        let mut centers: Vec<Vec<f64>> = m
            .clusters()
            .iter()
            .map(|c| unstandardize(&m, &c.centroid))
            .collect();
        centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (c, target) in centers.iter().zip([0.0, 10.0]) {
            assert!(c.iter().all(|x| (x - target).abs() < 0.1), "{c:?}");
        }
        assert_eq!(
            m.clusters().iter().map(|c| c.member_count).sum::<usize>(),
            200
        );

        let near_high = m.classify(&[9.0, 9.0], 0.8).unwrap();
        let high = m
            .clusters()
            .iter()
            .position(|c| c.centroid[0] > 0.0)
            .unwrap();
        assert_eq!(near_high.cluster, AssignedCluster::Core(high));
    }

    #[test]
    fn k_equals_n_gives_zero_radii() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0], vec![7.0]];
        let ious = vec![0.1, 0.2, 0.3, 0.4];
        let m = ClusterModel::fit_core(&pts, &ious, 4, 1.0, 0).unwrap();
        assert!(m
            .clusters()
            .iter()
            .all(|c| c.p95_radius == 0.0 && c.member_count == 1));
        assert!(ClusterModel::fit_core(&pts, &ious, 5, 1.0, 0).is_err());
        assert!(ClusterModel::fit_core(&pts, &ious, 0, 1.0, 0).is_err());
        assert!(ClusterModel::fit_core(&pts, &ious, 2, 0.0, 0).is_err());
    }

    #[test]
    fn constant_iou_matches_plain_kmeans() {
        let (pts, _) = blobs(5, 60);
        let ious = vec![0.6; pts.len()];
        let m = ClusterModel::fit_core(&pts, &ious, 3, 1.0, 9).unwrap();
        let (shift, scale) = standardization(&pts);
        let std: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| {
                p.iter()
                    .zip(shift.iter().zip(&scale))
                    .map(|(x, (a, s))| (x - a) / s)
                    .collect()
            })
            .collect();
        let plain = kmeans(&std, KMeansParams::new(3, 9)).unwrap();
        let labels: Vec<usize> = pts
            .iter()
            .map(|p| match m.classify(p, 0.6).unwrap().cluster {
                AssignedCluster::Core(i) => i,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(labels, plain.labels);
    }

    #[test]
    fn classify_centroid_and_ties() {
        let pts = vec![vec![-1.0], vec![1.0]];
        let ious = vec![0.5, 0.5];
        let m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 0).unwrap();
        let c0 = unstandardize(&m, &m.clusters()[0].centroid);
        let a = m.classify(&c0, 0.5).unwrap();
        assert_eq!(a.cluster, AssignedCluster::Core(0));
        assert!(a.raw_dist.abs() < 1e-12);
        let tie = m.classify(&[0.0], 0.5).unwrap();
        assert_eq!(tie.cluster, AssignedCluster::Core(0));
        assert!(m.classify(&[0.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn normalization() {
        let mk = |d: f64| Assignment {
            cluster: AssignedCluster::Core(0),
            raw_dist: d,
            norm_dist: 0.0,
        };
        let mut b: Vec<Assignment> = [0.0, 2.0, 4.0].into_iter().map(mk).collect();
        normalize_distances(&mut b);
        assert_eq!(
            b.iter().map(|a| a.norm_dist).collect::<Vec<_>>(),
            vec![0.0, 0.5, 1.0]
        );
        let mut z: Vec<Assignment> = [0.0, 0.0].into_iter().map(mk).collect();
        normalize_distances(&mut z);
        assert!(z.iter().all(|a| a.norm_dist == 0.0));
        let mut one = vec![mk(7.0)];
        normalize_distances(&mut one);
        assert_eq!(one[0].norm_dist, 1.0);
    }

    #[test]
    fn error_clusters() {
        let (pts, _) = blobs(6, 20);
        let high = vec![0.9; pts.len()];
        let mut m = ClusterModel::fit_core(&pts, &high, 2, 1.0, 0).unwrap();
        assert_eq!(m.fit_error_clusters(&pts, &high, 2, 0).unwrap(), 0);

        let low = vec![0.1; pts.len()];
        let mut m = ClusterModel::fit_core(&pts, &low, 2, 1.0, 0).unwrap();
        assert_eq!(m.fit_error_clusters(&pts, &low, 2, 0).unwrap(), 2);
        let total: usize = m.error_clusters().map(|(_, c)| c.member_count).sum();
        assert_eq!(total, pts.len());

        let pts2 = vec![vec![0.0], vec![100.0], vec![50.0]];
        let ious2 = vec![0.1, 0.2, 0.9];
        let mut m = ClusterModel::fit_core(&pts2, &ious2, 1, 1.0, 0).unwrap();
        assert_eq!(m.fit_error_clusters(&pts2, &ious2, 2, 0).unwrap(), 2);
        assert!(m
            .error_clusters()
            .all(|(_, c)| c.member_count == 1 && c.p95_radius == 0.0));
        assert!(m.fit_error_clusters(&pts2, &ious2, 3, 0).is_err());
        // refitting replaces previous error clusters
        assert_eq!(m.fit_error_clusters(&pts2, &ious2, 1, 0).unwrap(), 1);
        assert_eq!(m.error_clusters().count(), 1);
    }

    #[test]
    fn inside_points_are_not_orphans() {
        let (pts, ious) = blobs(7, 100);
        let m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 0).unwrap();
        let (ft, ft_iou) = blobs(8, 30);
        let rep = m.detect_orphans(&ft, &ft_iou, 4, 0).unwrap();
        assert!(rep.orphan_clusters.is_empty());
        assert!(rep.orph_weight.iter().all(|&w| w == 0.0));
        assert!(m.detect_orphans(&ft, &ft_iou, 0, 0).is_err());
        assert!(m.detect_orphans(&ft, &ft_iou, 61, 0).is_err());
    }

    #[test]
    fn orphan_weights_follow_cluster_sizes() {
        let (pts, ious) = blobs(9, 100);
        let m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 0).unwrap();
        let mut ft = Vec::new();
        for i in 0..10 {
            ft.push(vec![200.0 + i as f64 * 0.01, -200.0]);
        }
        for i in 0..40 {
            ft.push(vec![-200.0, 200.0 + i as f64 * 0.01]);
        }
        let ft_iou = vec![0.5; ft.len()];
        let rep = m.detect_orphans(&ft, &ft_iou, 2, 3).unwrap();
        assert_eq!(rep.orphan_clusters.len(), 2);
        assert!(rep.orph_weight[..10]
            .iter()
            .all(|&w| (w - 0.25).abs() < 1e-15));
        assert!(rep.orph_weight[10..].iter().all(|&w| w == 1.0));
    }

    #[test]
    fn error_membership_needs_low_iou_and_radius() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
        let ious = vec![0.2, 0.2, 0.9, 0.9];
        let mut m = ClusterModel::fit_core(&pts, &ious, 2, 1.0, 0).unwrap();
        m.fit_error_clusters(&pts, &ious, 1, 0).unwrap();
        let ft = vec![vec![0.05], vec![0.05], vec![10.0]];
        let rep = m.detect_orphans(&ft, &[0.2, 0.9, 0.2], 1, 0).unwrap();
        // the first sample sits on the error centroid; the second has high IoU; the third is far
        assert_eq!(rep.err_weight, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn bytes_round_trip() {
        let (pts, ious) = blobs(10, 20);
        let mut m = ClusterModel::fit_core(&pts, &ious, 3, 2.0, 0).unwrap();
        m.fit_error_clusters(&pts, &ious, 2, 0).unwrap();
        let back = ClusterModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back.to_bytes(), m.to_bytes());
        assert_eq!(back.clusters().len(), 5);
        assert!(ClusterModel::from_bytes(&m.to_bytes()[..30]).is_err());
    }
}
