//! PCA of activation vectors by exact eigen-decomposition.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

const PCA_MAGIC: &[u8; 4] = b"PCA1";

/// How many components to retain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Components {
    Fixed(usize),
    /// Smallest count whose cumulative explained variance reaches `threshold`, at most `cap`.
    Variance {
        threshold: f64,
        cap: usize,
    },
}

impl Default for Components {
    fn default() -> Self {
        Components::Variance {
            threshold: 0.95,
            cap: 32,
        }
    }
}

/// Fitted linear reduction. Rows of `components` are orthonormal and ordered by decreasing
/// eigenvalue; each row's largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    total_variance: f64,
}

impl PcaModel {
    pub fn fit(points: &[Vec<f64>], components: Components) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::out_of_range("sample count", n, ">= 2 for PCA"));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::out_of_range("dimension", 0, ">= 1"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        let max_r = d.min(n);
        if let Components::Fixed(r) = components {
            if r == 0 || r > max_r {
                return Err(Error::out_of_range(
                    "components",
                    r,
                    format!("1..={max_r} (min of dimension and sample count)"),
                ));
            }
        }

        let mut mean = vec![0.0; d];
        for p in points {
            for (m, x) in mean.iter_mut().zip(p) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let centered = DMatrix::from_fn(n, d, |i, j| points[i][j] - mean[j]);
        let denom = (n - 1) as f64;

        let (mut values, mut vectors) = if d <= n {
            let cov = centered.transpose() * &centered / denom;
            let eig = SymmetricEigen::new(cov);
            let vecs = (0..d)
                .map(|j| eig.eigenvectors.column(j).iter().copied().collect())
                .collect::<Vec<Vec<f64>>>();
            (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), vecs)
        } else {
            gram_route(&centered, denom)
        };
        for v in &mut values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total_variance: f64 = values.iter().sum();
        if !(total_variance > 0.0) {
            return Err(Error::Degenerate(
                "zero total variance: all vectors are identical".into(),
            ));
        }

        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        values = order.iter().map(|&i| values[i]).collect();
        vectors = order.iter().map(|&i| vectors[i].clone()).collect();

        let r = match components {
            Components::Fixed(r) => r,
            Components::Variance { threshold, cap } => {
                let mut cum = 0.0;
                let mut r = values.len();
                for (i, v) in values.iter().enumerate() {
                    cum += v / total_variance;
                    if cum >= threshold - 1e-12 {
                        r = i + 1;
                        break;
                    }
                }
                r.clamp(1, cap.max(1)).min(max_r)
            }
        };
        values.truncate(r);
        vectors.truncate(r);
        for v in &mut vectors {
            fix_sign(v);
        }
        Ok(Self {
            mean,
            components: vectors,
            eigenvalues: values,
            total_variance,
        })
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn total_variance(&self) -> f64 {
        self.total_variance
    }

    /// `components · (v − mean)`.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: v.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(v)
                    .zip(&self.mean)
                    .map(|((c, x), m)| c * (x - m))
                    .sum()
            })
            .collect())
    }

    pub fn transform_all(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        points.iter().map(|p| self.transform(p)).collect()
    }

    /// Maps reduced coordinates back to the input space.
    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n_components() {
            return Err(Error::DimensionMismatch {
                expected: self.n_components(),
                got: z.len(),
            });
        }
        let mut out = self.mean.clone();
        for (c, zi) in self.components.iter().zip(z) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += zi * ci;
            }
        }
        Ok(out)
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    /// Largest absolute entry of `C·Cᵀ − I`.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.components.iter().enumerate() {
            for (j, b) in self.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `PCA1` container; the trailing f32 holds the total variance of the fitted data.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(PCA_MAGIC);
        w.u32(self.dimension() as u32);
        w.u32(self.n_components() as u32);
        for &m in &self.mean {
            w.f64_as_f32(m);
        }
        for c in &self.components {
            for &x in c {
                w.f64_as_f32(x);
            }
        }
        for &e in &self.eigenvalues {
            w.f64_as_f32(e);
        }
        w.f64_as_f32(self.total_variance);
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "PCA model");
        r.magic(PCA_MAGIC)?;
        let d = r.u32()? as usize;
        let k = r.u32()? as usize;
        if d == 0 || k == 0 || k > d {
            return Err(Error::format(
                "PCA model",
                format!("invalid shape D={d}, R={k}"),
            ));
        }
        let mean = r.f32_vec_as_f64(d)?;
        let components = (0..k)
            .map(|_| r.f32_vec_as_f64(d))
            .collect::<Result<Vec<_>>>()?;
        let eigenvalues = r.f32_vec_as_f64(k)?;
        let total_variance = f64::from(r.f32()?);
        r.finish()?;
        Ok(Self {
            mean,
            components,
            eigenvalues,
            total_variance,
        })
    }
}

/// Eigenvectors of the covariance from the N×N Gram matrix, for N < D. Directions with zero
/// eigenvalue are completed to an orthonormal basis by Gram-Schmidt over the unit vectors.
fn gram_route(centered: &DMatrix<f64>, denom: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = centered.ncols();
    let gram = centered * centered.transpose() / denom;
    let eig = SymmetricEigen::new(gram);
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    let scale = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= scale * 1e-12 {
            continue;
        }
        let u = eig.eigenvectors.column(j);
        let v = centered.transpose() * u;
        let norm = v.norm();
        if norm > 0.0 {
            pairs.push((lambda, v.iter().map(|x| x / norm).collect()));
        }
    }
    let mut basis: Vec<Vec<f64>> = pairs.iter().map(|(_, v)| v.clone()).collect();
    let mut values: Vec<f64> = pairs.iter().map(|(l, _)| *l).collect();
    for e in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
            values.push(0.0);
        }
    }
    (values, basis)
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
