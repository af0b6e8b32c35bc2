//! Priority scores and the ranked annotation queue.
//!
//! ```text
//! BPS = a·dist + b·(1 − IoU)
//! MPS = (a·orph + b·err + c·dist + d·(1 − IoU)) · (1 − LoOP)
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::binio::write_file;
use crate::error::{Error, Result};

/// Score weights. Each formula's weights are nonnegative and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub bps_a: f64,
    pub bps_b: f64,
    pub mps_a: f64,
    pub mps_b: f64,
    pub mps_c: f64,
    pub mps_d: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self {
            bps_a: 0.75,
            bps_b: 0.25,
            mps_a: 0.5,
            mps_b: 0.25,
            mps_c: 0.2,
            mps_d: 0.05,
        }
    }
}

impl Coefficients {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("bps_a", self.bps_a),
            ("bps_b", self.bps_b),
            ("mps_a", self.mps_a),
            ("mps_b", self.mps_b),
            ("mps_c", self.mps_c),
            ("mps_d", self.mps_d),
        ];
        for (name, v) in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::out_of_range(name, v, ">= 0"));
            }
        }
        let bps = self.bps_a + self.bps_b;
        if (bps - 1.0).abs() > 1e-9 {
            return Err(Error::out_of_range("bps_a + bps_b", bps, "1 within 1e-9"));
        }
        let mps = self.mps_a + self.mps_b + self.mps_c + self.mps_d;
        if (mps - 1.0).abs() > 1e-9 {
            return Err(Error::out_of_range(
                "mps_a + mps_b + mps_c + mps_d",
                mps,
                "1 within 1e-9",
            ));
        }
        Ok(())
    }
}

fn unit(name: &'static str, v: f64) -> Result<f64> {
    if v.is_nan() {
        return Err(Error::Invalid(format!("missing feature `{name}`")));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::out_of_range(name, v, "[0, 1]"));
    }
    Ok(v)
}

pub fn bps(dist: f64, pred_iou: f64, c: &Coefficients) -> Result<f64> {
    let dist = unit("dist", dist)?;
    let iou = unit("pred_iou", pred_iou)?;
    Ok(c.bps_a * dist + c.bps_b * (1.0 - iou))
}

pub fn mps(
    orph: f64,
    err: f64,
    dist: f64,
    pred_iou: f64,
    loop_score: f64,
    c: &Coefficients,
) -> Result<f64> {
    let orph = unit("orph", orph)?;
    let err = unit("err", err)?;
    let dist = unit("dist", dist)?;
    let iou = unit("pred_iou", pred_iou)?;
    let lp = unit("loop", loop_score)?;
    Ok((c.mps_a * orph + c.mps_b * err + c.mps_c * dist + c.mps_d * (1.0 - iou)) * (1.0 - lp))
}

/// Per-sample inputs to both formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureBundle {
    pub id: u64,
    pub dist: f64,
    pub pred_iou: f64,
    pub loop_score: f64,
    pub orph: f64,
    pub err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleScore {
    pub id: u64,
    pub dist: f64,
    pub pred_iou: f64,
    pub loop_score: f64,
    pub orph: f64,
    pub err: f64,
    pub bps: f64,
    pub mps: f64,
}

impl SampleScore {
    pub fn features(&self) -> FeatureBundle {
        FeatureBundle {
            id: self.id,
            dist: self.dist,
            pred_iou: self.pred_iou,
            loop_score: self.loop_score,
            orph: self.orph,
            err: self.err,
        }
    }

    pub fn get(&self, strategy: Strategy) -> f64 {
        match strategy {
            Strategy::Bps => self.bps,
            Strategy::Mps => self.mps,
        }
    }
}

pub fn score(f: &FeatureBundle, c: &Coefficients) -> Result<SampleScore> {
    Ok(SampleScore {
        id: f.id,
        dist: f.dist,
        pred_iou: f.pred_iou,
        loop_score: f.loop_score,
        orph: f.orph,
        err: f.err,
        bps: bps(f.dist, f.pred_iou, c)?,
        mps: mps(f.orph, f.err, f.dist, f.pred_iou, f.loop_score, c)?,
    })
}

pub fn score_all(features: &[FeatureBundle], c: &Coefficients) -> Result<Vec<SampleScore>> {
    c.validate()?;
    features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            score(f, c).map_err(|e| Error::Record {
                index: i,
                msg: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Bps,
    Mps,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Bps => "bps",
            Strategy::Mps => "mps",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bps" => Ok(Strategy::Bps),
            "mps" => Ok(Strategy::Mps),
            other => Err(Error::Invalid(format!(
                "unknown strategy `{other}` (bps|mps)"
            ))),
        }
    }
}

/// Scores sorted from highest to lowest priority, ties by ascending id.
pub fn sort_scores(scores: &[SampleScore], strategy: Strategy) -> Vec<SampleScore> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| {
        b.get(strategy)
            .total_cmp(&a.get(strategy))
            .then(a.id.cmp(&b.id))
    });
    sorted
}

pub fn rank(scores: &[SampleScore], strategy: Strategy) -> Vec<u64> {
    sort_scores(scores, strategy)
        .into_iter()
        .map(|s| s.id)
        .collect()
}

/// First `n` ids of a ranked list.
pub fn select_budget(ranked: &[u64], n: usize) -> Result<&[u64]> {
    if n == 0 || n > ranked.len() {
        return Err(Error::out_of_range(
            "budget",
            n,
            format!("1..={}", ranked.len()),
        ));
    }
    Ok(&ranked[..n])
}

/// `rank,id,score,dist,pred_iou,loop,orph,err`, rank starting at 1.
pub fn queue_csv(scores: &[SampleScore], strategy: Strategy) -> String {
    use std::fmt::Write;

    let mut out = String::from("rank,id,score,dist,pred_iou,loop,orph,err\n");
    for (i, s) in sort_scores(scores, strategy).iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            s.id,
            s.get(strategy),
            s.dist,
            s.pred_iou,
            s.loop_score,
            s.orph,
            s.err
        )
        .unwrap();
    }
    out
}

pub fn write_queue(path: &Path, scores: &[SampleScore], strategy: Strategy) -> Result<()> {
    write_file(path, queue_csv(scores, strategy).as_bytes())
}
