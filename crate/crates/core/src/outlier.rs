//! Local Outlier Probability (Kriegel, Kröger, Schubert & Zimek, 2009).
//!
//! For a point `o` with context set `S(o)` (its `k` nearest neighbours, excluding itself):
//!
//! ```text
//! σ(o)    = sqrt( Σ_{s∈S(o)} d(o,s)² / |S(o)| )
//! pdist(o) = λ · σ(o)
//! PLOF(o) = pdist(o) / mean_{s∈S(o)} pdist(s) − 1
//! nPLOF   = λ · sqrt( mean_o PLOF(o)² )
//! LoOP(o) = max(0, erf( PLOF(o) / (nPLOF · √2) ))
//! ```

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::k_smallest;
use crate::sq_dist;

const PLOF_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopModel {
    points: Vec<Vec<f64>>,
    k_nn: usize,
    lambda: f64,
    neighbors: Vec<Vec<usize>>,
    pdist: Vec<f64>,
    plof: Vec<f64>,
    nplof: f64,
}

impl LoopModel {
    pub const DEFAULT_K_NN: usize = 20;
    pub const DEFAULT_LAMBDA: f64 = 3.0;

    pub fn fit(points: Vec<Vec<f64>>, k_nn: usize, lambda: f64) -> Result<Self> {
        let n = points.len();
        if k_nn == 0 {
            return Err(Error::out_of_range("loop k_nn", k_nn, ">= 1"));
        }
        if n < k_nn + 1 {
            return Err(Error::out_of_range(
                "point count",
                n,
                format!(">= k_nn + 1 = {}", k_nn + 1),
            ));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::out_of_range("loop lambda", lambda, "> 0"));
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
                return Err(Error::Invalid("non-finite coordinate".into()));
            }
        }

        let context: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let candidates = points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, q)| (j, sq_dist(&points[i], q)));
                k_smallest(candidates, k_nn)
            })
            .collect();

        let pdist: Vec<f64> = context
            .iter()
            .map(|s| lambda * (s.iter().map(|&(_, d2)| d2).sum::<f64>() / s.len() as f64).sqrt())
            .collect();
        let plof: Vec<f64> = context
            .iter()
            .zip(&pdist)
            .map(|(s, &pd)| {
                let expected = s.iter().map(|&(j, _)| pdist[j]).sum::<f64>() / s.len() as f64;
                if expected > 0.0 {
                    let r = pd / expected - 1.0;
                    // rounding noise on equal densities would otherwise be amplified by a tiny nPLOF
                    if r.abs() < PLOF_EPS {
                        0.0
                    } else {
                        r
                    }
                } else if pd > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .collect();
        let finite: Vec<f64> = plof.iter().copied().filter(|p| p.is_finite()).collect();
        let nplof = if finite.is_empty() {
            0.0
        } else {
            lambda * (finite.iter().map(|p| p * p).sum::<f64>() / finite.len() as f64).sqrt()
        };

        Ok(Self {
            points,
            k_nn,
            lambda,
            neighbors: context
                .into_iter()
                .map(|s| s.into_iter().map(|(j, _)| j).collect())
                .collect(),
            pdist,
            plof,
            nplof,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn k_nn(&self) -> usize {
        self.k_nn
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nplof(&self) -> f64 {
        self.nplof
    }

    pub fn plof(&self, i: usize) -> Option<f64> {
        self.plof.get(i).copied()
    }

    pub fn pdist(&self, i: usize) -> Option<f64> {
        self.pdist.get(i).copied()
    }

    pub fn neighbors(&self, i: usize) -> Option<&[usize]> {
        self.neighbors.get(i).map(Vec::as_slice)
    }

    pub fn score(&self, i: usize) -> Result<f64> {
        let plof = self
            .plof(i)
            .ok_or_else(|| Error::out_of_range("point index", i, format!("0..{}", self.len())))?;
        Ok(loop_probability(plof, self.nplof))
    }

    pub fn scores(&self) -> Vec<f64> {
        self.plof
            .iter()
            .map(|&p| loop_probability(p, self.nplof))
            .collect()
    }
}

/// `max(0, erf(plof / (nplof·√2)))`, with 0 for degenerate (zero) `nplof` and 1 for an
/// unbounded `plof`.
pub fn loop_probability(plof: f64, nplof: f64) -> f64 {
    if plof <= 0.0 {
        return 0.0;
    }
    if plof.is_infinite() {
        return 1.0;
    }
    if !(nplof > 0.0) {
        return 0.0;
    }
    erf(plof / (nplof * std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

/// Error function. Maclaurin series below |x| = 2.5, continued fraction for erfc above;
/// absolute error below 1e-13 over the real line.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax < 2.5 {
        erf_series(ax)
    } else if ax < 6.0 {
        1.0 - erfc_continued_fraction(ax)
    } else {
        1.0
    };
    v.copysign(x)
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/√π · Σ (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let t = term / (2 * n + 1) as f64;
        sum += t;
        if t.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * std::f64::consts::FRAC_2_SQRT_PI
}

fn erfc_continued_fraction(x: f64) -> f64 {
    // erfc(x) = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + ...))))), modified Lentz
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
}
