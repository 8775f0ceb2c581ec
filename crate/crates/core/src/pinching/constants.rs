//! Pinching constants: the sharp cubic constant, the Weyl constant, the
//! PIC-chain constants, the bound `Φ`, and their calibration by sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::decompose;
use crate::error::{GeomError, Result};
use crate::sampling::{random_alg_curv, random_traceless, shard_seed};
use crate::tensor::{kn_product, AlgCurv, MetricPoint, Sym2};

/// Where a constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Default,
    Calibrated,
    UserSet,
    Derived,
}

/// Sharp bound `|2E³/(n−2)| ≤ c1 |E|³` for trace-free `E`, attained by
/// `E ∝ diag(n−1, −1, …, −1)`.
pub fn sharp_cubic_constant(n: usize) -> f64 {
    let n = n as f64;
    2.0 / (n * (n - 1.0)).sqrt()
}

/// `sup |W(E,E)| / (|W||E|²)` over trace-free `E` and algebraic Weyl `W`,
/// frozen from [`calibrate_weyl_constant`] with 10⁵ samples (seed 1) and
/// rounded up in the fourth digit. Zero in dimension 3.
const WEYL_CONSTANT: [f64; 6] = [0.0, 0.5774, 0.5893, 0.6325, 0.6391, 0.6547];

pub fn calibrated_weyl_constant(n: usize) -> Result<f64> {
    if !(3..=8).contains(&n) {
        return Err(GeomError::UnsupportedDimension {
            n,
            reason: "constants are tabulated for 3..=8",
        });
    }
    Ok(WEYL_CONSTANT[n - 3])
}

/// PIC-chain constants `(c3, c4)` with `|W|/R ≤ c3 |E|/R + c4` whenever the
/// Weitzenböck operator is nonnegative.
///
/// `P = (n−4)/(n−2) E∘g − 2W + λ·I` with `λ = 2R(n−2)/(n(n−1))` as an operator
/// on the `N = n(n−1)/2` dimensional space of 2-forms; the first two terms
/// are trace-free. A trace-free symmetric matrix bounded below by `−λ` has
/// Frobenius norm at most `λ√(N(N−1))`, and `W ⟂ E∘g`, so
/// `|W| ≤ λ√(N(N−1))` and `c3 = 0` suffices.
pub fn derived_pic_constants(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let big_n = nf * (nf - 1.0) / 2.0;
    let c4 = 2.0 * (nf - 2.0) / (nf * (nf - 1.0)) * (big_n * (big_n - 1.0)).sqrt();
    (0.0, c4)
}

/// Largest admissible exponent in `f = |E|²/R^γ`.
pub const GAMMA_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub provenance: Provenance,
}

impl Constant {
    pub fn new(value: f64, provenance: Provenance) -> Self {
        Self { value, provenance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchConfig {
    pub n: usize,
    pub gamma: f64,
    /// Shift `c` in `R + c > 0`; only enters ratio reporting and must be 0
    /// in the positive-scalar suite.
    pub c_shift: f64,
    /// `C1 ≥ c1` with `C1² ≥ 4 max f(0)`.
    pub big_c1: Constant,
    /// Weyl constant in the reaction estimate `|W(E,E)| ≤ c2 |W||E|²`.
    pub c2: Constant,
    pub c1_cubic: Constant,
    pub c3: Constant,
    pub c4: Constant,
    /// Time step for finite differences along trajectories.
    pub fd_step: f64,
}

impl PinchConfig {
    /// Defaults for dimension `n` given `max_M f(·,0)` with `γ = 2`.
    pub fn defaults(n: usize, max_f0: f64) -> Result<Self> {
        let c1 = sharp_cubic_constant(n);
        let (c3, c4) = derived_pic_constants(n);
        let cfg = Self {
            n,
            gamma: 2.0,
            c_shift: 0.0,
            big_c1: Constant::new(c1.max(2.0 * max_f0.max(0.0).sqrt()), Provenance::Default),
            c2: Constant::new(calibrated_weyl_constant(n)?, Provenance::Calibrated),
            c1_cubic: Constant::new(c1, Provenance::Derived),
            c3: Constant::new(c3, Provenance::Derived),
            c4: Constant::new(c4, Provenance::Derived),
            fd_step: 1e-3,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `C2 = √c2`: the coefficient of `max √(|W|/R)` in the pinching
    /// estimate, from `√(a + b) ≤ √a + √b` applied to `Φ`.
    pub fn big_c2(&self) -> f64 {
        self.c2.value.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GeomError::InvalidParameter(m));
        if !(self.gamma > 0.0 && self.gamma <= GAMMA_MAX) {
            return bad(format!("gamma {} outside (0, 2]", self.gamma));
        }
        if !(self.c_shift.is_finite() && self.c_shift >= 0.0) {
            return bad(format!("c_shift {} must be >= 0", self.c_shift));
        }
        if !(self.big_c1.value.is_finite() && self.big_c1.value > 0.0) {
            return bad(format!("C1 {} must be > 0", self.big_c1.value));
        }
        if !(self.c1_cubic.value > 0.0) {
            return bad("c1 must be > 0".into());
        }
        for (name, c) in [("c2", self.c2), ("c3", self.c3), ("c4", self.c4)] {
            if !(c.value.is_finite() && c.value >= 0.0) {
                return bad(format!("{name} {} must be >= 0", c.value));
            }
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return bad(format!("fd_step {} must be > 0", self.fd_step));
        }
        Ok(())
    }

    /// Hypotheses of the initial bound: `C1 ≥ c1` and `C1² ≥ 4 max f(0)`.
    pub fn admits_initial(&self, max_f0: f64) -> bool {
        self.big_c1.value >= self.c1_cubic.value * (1.0 - 1e-12)
            && self.big_c1.value.powi(2) >= 4.0 * max_f0 * (1.0 - 1e-12)
    }
}

/// Value of `Φ` and whether its radicand had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiValue {
    pub value: f64,
    pub clamped: bool,
}

/// `Φ = C1/2 + √(C1²/4 − (1/(n(n−1)) − c2·w))` with `w = max |W|/R`. A
/// negative radicand gives `C1/2`, flagged.
pub fn phi_bound(big_c1: f64, c2: f64, n: usize, max_w_over_r: f64) -> Result<PhiValue> {
    if !(big_c1 > 0.0 && big_c1.is_finite()) {
        return Err(GeomError::InvalidParameter(format!("C1 {big_c1} must be > 0")));
    }
    let nf = n as f64;
    let rad = big_c1 * big_c1 / 4.0 - (1.0 / (nf * (nf - 1.0)) - c2 * max_w_over_r);
    Ok(if rad < 0.0 {
        PhiValue {
            value: big_c1 / 2.0,
            clamped: true,
        }
    } else {
        PhiValue {
            value: big_c1 / 2.0 + rad.sqrt(),
            clamped: false,
        }
    })
}

/// Ratio `|2E³/(n−2)| / |E|³` for a diagonal trace-free `E`.
pub fn cubic_ratio_spectrum(lam: &[f64]) -> f64 {
    let n = lam.len() as f64;
    let sq: f64 = lam.iter().map(|x| x * x).sum();
    let cube: f64 = lam.iter().map(|x| x * x * x).sum();
    (2.0 * cube / (n - 2.0)).abs() / sq.powf(1.5)
}

/// `max_W |W(E,E)| / (|W||E|²) = |Weyl(E∘E)| / (4|E|²)`, since
/// `<W, E∘E> = 4 W(E,E)` for any Weyl tensor `W`.
pub fn weyl_ratio_spectrum(lam: &[f64]) -> Result<f64> {
    let n = lam.len();
    let e = Sym2::from_diagonal(lam)?;
    let m = MetricPoint::euclidean(n);
    let ee = kn_product(&e, &e)?;
    let d = decompose(&ee, &m)?;
    let e2: f64 = lam.iter().map(|x| x * x).sum();
    Ok(d.norm_w / (4.0 * e2))
}

fn project_traceless(lam: &mut [f64]) {
    let mean = lam.iter().sum::<f64>() / lam.len() as f64;
    lam.iter_mut().for_each(|x| *x -= mean);
    let norm = lam.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        lam.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Pattern search maximizing a scale-invariant spectral function over unit
/// trace-free spectra, moving along `e_i − e_j`.
pub fn refine_spectrum(start: &[f64], obj: &dyn Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let mut lam = start.to_vec();
    project_traceless(&mut lam);
    let mut best = obj(&lam);
    let n = lam.len();
    let mut step = 0.25;
    while step > 1e-10 {
        let mut improved = true;
        let mut sweeps = 0;
        while improved && sweeps < 100 {
            improved = false;
            sweeps += 1;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut trial = lam.clone();
                    trial[i] += step;
                    trial[j] -= step;
                    project_traceless(&mut trial);
                    let v = obj(&trial);
                    if v > best {
                        best = v;
                        lam = trial;
                        improved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    (best, lam)
}

fn random_spectrum<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut lam: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    project_traceless(&mut lam);
    lam
}

/// Best of `samples` random spectra, then refined. Returns
/// `(sampled max, refined max)`.
fn calibrate_spectral(
    n: usize,
    samples: usize,
    seed: u64,
    obj: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> (f64, f64) {
    const SHARDS: u64 = 8;
    let per = samples.div_ceil(SHARDS as usize);
    let best = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, s));
            let mut best = (f64::NEG_INFINITY, Vec::new());
            for _ in 0..per {
                let lam = random_spectrum(n, &mut rng);
                let v = obj(&lam);
                if v > best.0 {
                    best = (v, lam);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one shard");
    let (refined, _) = refine_spectrum(&best.1, obj);
    (best.0, refined.max(best.0))
}

/// Sampled-and-refined supremum of `|W(E,E)|/(|W||E|²)`.
pub fn calibrate_weyl_constant(n: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if !(3..=8).contains(&n) {
        return Err(GeomError::UnsupportedDimension {
            n,
            reason: "calibration supports 3..=8",
        });
    }
    if n == 3 {
        return Ok((0.0, 0.0));
    }
    let obj = |l: &[f64]| weyl_ratio_spectrum(l).unwrap_or(0.0);
    Ok(calibrate_spectral(n, samples, seed, &obj))
}

/// Sampled-and-refined supremum of `|2E³/(n−2)|/|E|³`.
pub fn calibrate_cubic_constant(n: usize, samples: usize, seed: u64) -> (f64, f64) {
    calibrate_spectral(n, samples, seed, &cubic_ratio_spectrum)
}

/// Empirical cubic and Weyl ratios over random pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBounds {
    pub n: usize,
    /// Max of `|2E³/(n−2)|/|E|³` over the random samples.
    pub c1_sampled: f64,
    /// After local refinement from the best sample.
    pub c1_emp: f64,
    /// Max of `|W(E,E)|/(|W||E|²)` over random pairs.
    pub c2_emp: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Random full trace-free `E` and algebraic Weyl `W` per sample.
pub fn cubic_bounds(n: usize, samples: usize, seed: u64) -> Result<CubicBounds> {
    if !(3..=8).contains(&n) {
        return Err(GeomError::UnsupportedDimension {
            n,
            reason: "cubic bounds support 3..=8",
        });
    }
    if samples < 10_000 {
        return Err(GeomError::InvalidParameter(format!(
            "{samples} samples; at least 10000 required"
        )));
    }
    const SHARDS: u64 = 8;
    let per = samples.div_ceil(SHARDS as usize);
    let m = MetricPoint::euclidean(n);
    let shards: Vec<Result<(f64, Vec<f64>, f64, usize)>> = (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, s));
            let (mut c1, mut best_spec, mut c2, mut skipped) = (0.0_f64, Vec::new(), 0.0_f64, 0);
            for _ in 0..per {
                let e = random_traceless(n, &mut rng);
                let norm = e.norm(&m)?;
                if !(norm > 1e-12) {
                    skipped += 1;
                    continue;
                }
                let r1 = (2.0 * e.cube_trace(&m)? / (n as f64 - 2.0)).abs() / norm.powi(3);
                if r1 > c1 {
                    c1 = r1;
                    best_spec = nalgebra::SymmetricEigen::new(e.matrix().clone()).eigenvalues.iter().copied().collect();
                }
                if n >= 4 {
                    let w = random_weyl(n, &mut rng)?;
                    let nw = crate::tensor::curv_norm(&w, &m)?;
                    if nw > 1e-12 {
                        c2 = c2.max(w.contract_pair(&e, &e, &m)?.abs() / (nw * norm * norm));
                    }
                }
            }
            Ok((c1, best_spec, c2, skipped))
        })
        .collect();
    let mut out = CubicBounds {
        n,
        c1_sampled: 0.0,
        c1_emp: 0.0,
        c2_emp: 0.0,
        samples: per * SHARDS as usize,
        skipped: 0,
    };
    let mut best_spec = Vec::new();
    for s in shards {
        let (c1, spec, c2, skipped) = s?;
        if c1 > out.c1_sampled {
            out.c1_sampled = c1;
            best_spec = spec;
        }
        out.c2_emp = out.c2_emp.max(c2);
        out.skipped += skipped;
    }
    let (refined, _) = refine_spectrum(&best_spec, &cubic_ratio_spectrum);
    out.c1_emp = refined.max(out.c1_sampled);
    Ok(out)
}

/// Weyl part of a random algebraic curvature tensor.
pub fn random_weyl<R: rand::Rng>(n: usize, rng: &mut R) -> Result<AlgCurv> {
    let rm = random_alg_curv(n, n + 2, rng);
    Ok(decompose(&rm, &MetricPoint::euclidean(n))?.weyl)
}
