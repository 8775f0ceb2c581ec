//! Sampled minimum of the isotropic curvature
//! `R_1313 + R_1414 + R_2323 + R_2424 − 2 R_1234` over orthonormal 4-frames.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GeomError, Result};
use crate::sampling::{random_unit, shard_seed};
use crate::tensor::{AlgCurv, MetricPoint};

pub const MIN_ISOTROPIC_BUDGET: usize = 1000;
const SHARDS: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicMin {
    /// Smallest value found; an upper bound on the true minimum.
    pub value: f64,
    /// Minimizing frame (contravariant components).
    pub frame: [Vec<f64>; 4],
    pub seed: u64,
    pub samples: usize,
}

pub fn isotropic_quantity(rm: &AlgCurv, f: &[Vec<f64>; 4]) -> f64 {
    let [e1, e2, e3, e4] = f;
    rm.eval(e1, e3, e1, e3) + rm.eval(e1, e4, e1, e4) + rm.eval(e2, e3, e2, e3) + rm.eval(e2, e4, e2, e4)
        - 2.0 * rm.eval(e1, e2, e3, e4)
}

/// Gram–Schmidt in the metric `g`, applied twice. Returns `None` when the
/// vectors are (numerically) dependent.
fn orthonormalize(m: &MetricPoint, vs: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = m.dot(&w, u);
                w.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = m.dot(&w, &w).sqrt();
        if !(norm > 1e-10) {
            return None;
        }
        w.iter_mut().for_each(|x| *x /= norm);
        out.push(w);
    }
    Some(out)
}

fn axis(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn as_frame(v: Vec<Vec<f64>>) -> [Vec<f64>; 4] {
    let mut it = v.into_iter();
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

/// Best over all ordered 4-tuples of distinct coordinate axes.
fn axis_frames(rm: &AlgCurv, m: &MetricPoint) -> Option<(f64, [Vec<f64>; 4])> {
    let n = rm.n();
    let mut best: Option<(f64, [Vec<f64>; 4])> = None;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    if a == b || a == c || a == d || b == c || b == d || c == d {
                        continue;
                    }
                    let raw = [axis(n, a), axis(n, b), axis(n, c), axis(n, d)];
                    let Some(f) = orthonormalize(m, &raw) else { continue };
                    let f = as_frame(f);
                    let v = isotropic_quantity(rm, &f);
                    if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                        best = Some((v, f));
                    }
                }
            }
        }
    }
    best
}

fn sample_shard(rm: &AlgCurv, m: &MetricPoint, count: usize, seed: u64) -> Option<(f64, [Vec<f64>; 4])> {
    let n = rm.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, [Vec<f64>; 4])> = None;
    for _ in 0..count {
        let raw: Vec<Vec<f64>> = (0..4).map(|_| random_unit(n, &mut rng)).collect();
        let Some(f) = orthonormalize(m, &raw) else { continue };
        let f = as_frame(f);
        let v = isotropic_quantity(rm, &f);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, f));
        }
    }
    best
}

/// Pattern search over plane rotations of the full orthonormal basis that
/// extends `frame`. Only ever lowers the value.
fn refine(rm: &AlgCurv, m: &MetricPoint, value: f64, frame: [Vec<f64>; 4]) -> (f64, [Vec<f64>; 4]) {
    let n = rm.n();
    let mut basis: Vec<Vec<f64>> = frame.to_vec();
    for i in 0..n {
        let mut trial = basis.clone();
        trial.push(axis(n, i));
        if let Some(b) = orthonormalize(m, &trial) {
            basis = b;
        }
        if basis.len() == n {
            break;
        }
    }
    let mut best = value;
    let mut step: f64 = 0.25;
    while step > 1e-7 {
        let mut improved = true;
        let mut sweeps = 0;
        while improved && sweeps < 50 {
            improved = false;
            sweeps += 1;
            for p in 0..4 {
                for q in (p + 1)..basis.len() {
                    for s in [step, -step] {
                        let (c, sn) = (s.cos(), s.sin());
                        let mut trial = basis.clone();
                        for k in 0..n {
                            trial[p][k] = c * basis[p][k] + sn * basis[q][k];
                            trial[q][k] = -sn * basis[p][k] + c * basis[q][k];
                        }
                        let f = [trial[0].clone(), trial[1].clone(), trial[2].clone(), trial[3].clone()];
                        let v = isotropic_quantity(rm, &f);
                        if v < best - 1e-15 * best.abs().max(1.0) {
                            best = v;
                            basis = trial;
                            improved = true;
                        }
                    }
                }
            }
        }
        step *= 0.5;
    }
    (best, [basis[0].clone(), basis[1].clone(), basis[2].clone(), basis[3].clone()])
}

/// Minimum of the isotropic curvature over `budget` random orthonormal
/// 4-frames plus every coordinate-axis frame, followed by a local rotation
/// search from the best frame. Deterministic for a given seed and independent
/// of the thread count.
pub fn isotropic_min(rm: &AlgCurv, m: &MetricPoint, budget: usize, seed: u64) -> Result<IsotropicMin> {
    let n = rm.n();
    if n < 4 {
        return Err(GeomError::UnsupportedDimension {
            n,
            reason: "isotropic curvature needs n >= 4",
        });
    }
    if m.n() != n {
        return Err(GeomError::DimensionMismatch { left: n, right: m.n() });
    }
    if budget < MIN_ISOTROPIC_BUDGET {
        return Err(GeomError::InvalidParameter(format!(
            "isotropic sample budget {budget} below {MIN_ISOTROPIC_BUDGET}"
        )));
    }
    let per = budget / SHARDS as usize;
    let extra = budget % SHARDS as usize;
    let shards: Vec<Option<(f64, [Vec<f64>; 4])>> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let count = per + usize::from((s as usize) < extra);
            sample_shard(rm, m, count, shard_seed(seed, s))
        })
        .collect();
    let mut best = axis_frames(rm, m);
    // Shards are reduced in index order so ties resolve identically.
    for cand in shards.into_iter().flatten() {
        if best.as_ref().is_none_or(|(bv, _)| cand.0 < *bv) {
            best = Some(cand);
        }
    }
    let (v, f) = best.ok_or(GeomError::NotPositiveDefinite)?;
    let (value, frame) = refine(rm, m, v, f);
    Ok(IsotropicMin {
        value,
        frame,
        seed,
        samples: budget,
    })
}
