//! IoU between binary masks and k-NN prediction of IoU in reduced space.

use crate::binio::{Reader, Writer};
use crate::data::BinaryMask;
use crate::error::{Error, Result};
use crate::sq_dist;

const KNN_MAGIC: &[u8; 4] = b"KNN1";

/// `|a ∧ b| / |a ∨ b|`. Two empty masks agree perfectly and score 1.0.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Invalid(format!(
            "mask shapes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (inter, union) = a
        .bits()
        .iter()
        .zip(b.bits())
        .fold((0usize, 0usize), |(i, u), (&x, &y)| {
            (i + (x && y) as usize, u + (x || y) as usize)
        });
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Inverse-distance-weighted k-NN regressor over core samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IouPredictor {
    points: Vec<Vec<f64>>,
    ious: Vec<f64>,
    k: usize,
}

impl IouPredictor {
    pub const DEFAULT_K: usize = 5;

    pub fn fit(points: Vec<Vec<f64>>, ious: Vec<f64>, k: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("IoU predictor needs reference points"));
        }
        if points.len() != ious.len() {
            return Err(Error::Invalid(format!(
                "{} reference points but {} IoU values",
                points.len(),
                ious.len()
            )));
        }
        if k == 0 || k > points.len() {
            return Err(Error::out_of_range(
                "knn_k",
                k,
                format!("1..={}", points.len()),
            ));
        }
        let dim = points[0].len();
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("non-finite reference point".into()));
            }
        }
        if let Some(v) = ious.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::out_of_range("reference iou", v, "[0, 1]"));
        }
        Ok(Self { points, ious, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points[0].len()
    }

    pub fn predict(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite query".into()));
        }
        let neighbors = k_smallest(
            self.points.iter().map(|p| sq_dist(p, v)).enumerate(),
            self.k,
        );
        let zero: Vec<usize> = neighbors
            .iter()
            .filter(|(_, d)| *d == 0.0)
            .map(|(i, _)| *i)
            .collect();
        if !zero.is_empty() {
            return Ok(zero.iter().map(|&i| self.ious[i]).sum::<f64>() / zero.len() as f64);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &(i, d2) in &neighbors {
            let w = 1.0 / d2.sqrt();
            num += w * self.ious[i];
            den += w;
        }
        let lo = neighbors
            .iter()
            .map(|&(i, _)| self.ious[i])
            .fold(f64::INFINITY, f64::min);
        let hi = neighbors
            .iter()
            .map(|&(i, _)| self.ious[i])
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((num / den).clamp(lo, hi))
    }

    /// `KNN1` container: u32 N, u32 R, u32 k, N×R f32 points, N f32 IoU values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(KNN_MAGIC);
        w.u32(self.points.len() as u32);
        w.u32(self.dimension() as u32);
        w.u32(self.k as u32);
        for p in &self.points {
            for &x in p {
                w.f64_as_f32(x);
            }
        }
        for &v in &self.ious {
            w.f64_as_f32(v);
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "IoU predictor");
        r.magic(KNN_MAGIC)?;
        let n = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let k = r.u32()? as usize;
        if dim == 0 {
            return Err(Error::format("IoU predictor", "dimension must be >= 1"));
        }
        let points = (0..n)
            .map(|_| r.f32_vec_as_f64(dim))
            .collect::<Result<Vec<_>>>()?;
        let ious = r.f32_vec_as_f64(n)?;
        r.finish()?;
        Self::fit(points, ious, k)
    }
}

/// The `k` pairs with smallest value, ordered by (value, index).
pub(crate) fn k_smallest(items: impl Iterator<Item = (usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = items.collect();
    let by = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if k < all.len() {
        all.select_nth_unstable_by(k, by);
        all.truncate(k);
    }
    all.sort_by(by);
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, f: impl Fn(usize, usize) -> bool) -> BinaryMask {
        BinaryMask::from_fn(w, h, f).unwrap()
    }

    #[test]
    fn iou_cases() {
        let a = mask(4, 4, |x, _| x < 2);
        let b = mask(4, 4, |_, y| y < 2);
        assert!((iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        let c = mask(4, 4, |x, _| x >= 2);
        assert_eq!(iou(&a, &c).unwrap(), 0.0);
        let empty = mask(4, 4, |_, _| false);
        assert_eq!(iou(&empty, &empty).unwrap(), 1.0);
        assert_eq!(iou(&a, &empty).unwrap(), 0.0);
        assert!(iou(&a, &mask(4, 3, |_, _| true)).is_err());
    }

    #[test]
    fn predictor_construction() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ious = vec![0.5; 10];
        let p = IouPredictor::fit(pts.clone(), ious.clone(), 3).unwrap();
        assert_eq!(p.len(), 10);
        assert!(IouPredictor::fit(pts.clone(), ious.clone(), 0).is_err());
        assert!(IouPredictor::fit(pts.clone(), ious.clone(), 11).is_err());
        assert!(IouPredictor::fit(pts.clone(), vec![0.5; 9], 3).is_err());
        assert!(IouPredictor::fit(pts, vec![1.5; 10], 3).is_err());
        assert!(IouPredictor::fit(vec![], vec![], 1).is_err());
    }

    #[test]
    fn zero_distance_rule() {
        let p = IouPredictor::fit(
            vec![vec![0.0], vec![1.0], vec![5.0]],
            vec![0.7, 0.1, 0.2],
            3,
        )
        .unwrap();
        assert_eq!(p.predict(&[0.0]).unwrap(), 0.7);
        // duplicated reference points at the query: unweighted mean of the coincident ones
        let p = IouPredictor::fit(
            vec![vec![0.0], vec![0.0], vec![1.0]],
            vec![0.2, 0.6, 1.0],
            3,
        )
        .unwrap();
        assert!((p.predict(&[0.0]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn weighting_rule() {
        let p = IouPredictor::fit(vec![vec![-1.0], vec![1.0]], vec![0.2, 0.8], 2).unwrap();
        assert!((p.predict(&[0.0]).unwrap() - 0.5).abs() < 1e-15);
        // weights 1/1 and 1/2 -> (1*1 + 0.5*0) / 1.5
        let p = IouPredictor::fit(vec![vec![0.0], vec![3.0]], vec![1.0, 0.0], 2).unwrap();
        assert!((p.predict(&[1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(p.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn only_k_nearest_contribute() {
        let p = IouPredictor::fit(
            vec![vec![0.0], vec![1.0], vec![10.0]],
            vec![0.3, 0.3, 1.0],
            2,
        )
        .unwrap();
        assert!((p.predict(&[0.5]).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bytes_round_trip() {
        let p =
            IouPredictor::fit(vec![vec![0.5, 1.0], vec![3.0, -1.0]], vec![0.25, 0.75], 1).unwrap();
        assert_eq!(IouPredictor::from_bytes(&p.to_bytes()).unwrap(), p);
    }
}
