//! Flow-free property suites behind `verify`, `calibrate` and `decompose`.

use nalgebra::DMatrix;
use pinchlab::curvature::{decompose, isotropic_min, weitzenbock, weyl_coordinate_formula, GeometrySpec};
use pinchlab::flow::summarize;
use pinchlab::pinching::{
    calibrate_cubic_constant, calibrate_weyl_constant, calibrated_weyl_constant, cubic_bounds, cubic_ratio_spectrum,
    q_quantity, random_weyl, sharp_cubic_constant,
};
use pinchlab::sampling::{random_alg_curv, random_sym, shard_seed};
use pinchlab::tensor::{curv_norm, kn_product, MetricPoint, Sym2};
use pinchlab::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::FORMAT_VERSION;

/// Random metric `I + 0.3·AAᵀ/n`, comfortably positive definite.
pub fn random_metric<R: Rng>(n: usize, rng: &mut R) -> MetricPoint {
    let a = random_sym(n, rng);
    let g = DMatrix::identity(n, n) + a.matrix() * a.matrix() * (0.3 / n as f64);
    MetricPoint::new(Sym2::new(g).expect("symmetric")).expect("positive definite")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompStats {
    pub n: usize,
    pub samples: usize,
    pub reconstruction: f64,
    pub orthogonality: f64,
    pub weyl_trace: f64,
    /// Coordinate Weyl formula against the projection, relative to `max |Rm|`.
    pub formula: f64,
}

/// Worst decomposition defects over random tensors and random metrics.
pub fn decomposition_stats(n: usize, samples: usize, seed: u64) -> Result<DecompStats> {
    let per: Vec<[f64; 4]> = (0..samples as u64)
        .into_par_iter()
        .map(|i| -> Result<[f64; 4]> {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, i));
            let m = random_metric(n, &mut rng);
            let rm = random_alg_curv(n, n + 2, &mut rng);
            let d = decompose(&rm, &m)?;
            let def = d.defects(&rm, &m)?;
            let formula = weyl_coordinate_formula(&rm, &d.ricci, d.scalar, &m)?.max_diff(&d.weyl)? / rm.max_abs().max(1.0);
            Ok([def.reconstruction, def.orthogonality, def.weyl_trace, formula])
        })
        .collect::<Result<_>>()?;
    let worst = |k: usize| per.iter().map(|v| v[k]).fold(0.0, f64::max);
    Ok(DecompStats {
        n,
        samples,
        reconstruction: worst(0),
        orthogonality: worst(1),
        weyl_trace: worst(2),
        formula: worst(3),
    })
}

/// `|⟨g∘g, g∘g⟩ − 8n(n−1)|` for the Euclidean metric.
pub fn kn_norm_defect(n: usize) -> Result<f64> {
    let m = MetricPoint::euclidean(n);
    let gg = kn_product(m.g(), m.g())?;
    let nf = n as f64;
    Ok((curv_norm(&gg, &m)?.powi(2) - 8.0 * nf * (nf - 1.0)).abs())
}

/// Worst `|Q|/R⁴` over Einstein tensors `s·g∘g + W` with random `s > 0`,
/// random Weyl part and random metric.
pub fn q_vanishing(n: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let s = rng.random_range(0.05..5.0);
        let w = random_weyl(n, &mut rng)?;
        let rm = kn_product(&Sym2::identity(n), &Sym2::identity(n))?.scaled(s).add(&w)?;
        let d = decompose(&rm, &MetricPoint::euclidean(n))?;
        let q = q_quantity(&d.ricci, &MetricPoint::euclidean(n))?;
        worst = worst.max(q.abs() / d.scalar.powi(4));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCheck {
    pub n: usize,
    pub samples: usize,
    pub sharp: f64,
    pub sampled: f64,
    pub refined: f64,
    /// `|ratio − sharp|` on `diag(n−1, −1, …, −1)`.
    pub extremal_defect: f64,
}

pub fn cubic_check(n: usize, samples: usize, seed: u64) -> Result<CubicCheck> {
    let b = cubic_bounds(n, samples, seed)?;
    let mut lam = vec![-1.0; n];
    lam[0] = n as f64 - 1.0;
    let sharp = sharp_cubic_constant(n);
    Ok(CubicCheck {
        n,
        samples,
        sharp,
        sampled: b.c1_sampled,
        refined: b.c1_emp,
        extremal_defect: (cubic_ratio_spectrum(&lam) - sharp).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicAgreement {
    pub tested: usize,
    pub conclusive: usize,
    pub agree: usize,
    /// Conclusive samples with positive isotropic minimum.
    pub positive: usize,
}

/// `|isotropic min|` at or below this leaves a sample undecided.
pub const PIC_CONCLUSIVE: f64 = 1e-6;
/// Frames sampled per tensor.
pub const PIC_BUDGET: usize = 1000;

/// Sign agreement between the sampled isotropic minimum and the smallest
/// Weitzenböck eigenvalue on 4D tensors `W + E∘g + s·g∘g`, with `s` spread so
/// both signs occur.
pub fn pic_agreement(samples: usize, seed: u64) -> Result<PicAgreement> {
    let n = 4;
    let m = MetricPoint::euclidean(n);
    let gg = kn_product(m.g(), m.g())?;
    let out: Vec<(bool, bool)> = (0..samples as u64)
        .map(|i| -> Result<Option<(bool, bool)>> {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, i));
            let base = random_alg_curv(n, n + 2, &mut rng);
            let d = decompose(&base, &m)?;
            let shaped = d.weyl.add(&d.einstein_part.scaled(rng.random_range(0.0..1.0)))?;
            let scale = curv_norm(&shaped, &m)?.max(1e-3);
            let rm = shaped.add(&gg.scaled(scale * rng.random_range(-0.1..0.4)))?;
            let iso = isotropic_min(&rm, &m, PIC_BUDGET, shard_seed(seed ^ 0x5eed, i))?;
            if iso.value.abs() <= PIC_CONCLUSIVE {
                return Ok(None);
            }
            let ric = decompose(&rm, &m)?.ricci;
            let (_, op) = weitzenbock(&rm, &ric, &m)?;
            Ok(Some((iso.value > 0.0, op.min_eigenvalue()? > 0.0)))
        })
        .filter_map(|r| r.transpose())
        .collect::<Result<_>>()?;
    Ok(PicAgreement {
        tested: samples,
        conclusive: out.len(),
        agree: out.iter().filter(|(a, b)| a == b).count(),
        positive: out.iter().filter(|(a, _)| *a).count(),
    })
}

/// Isotropic minimum and smallest Weitzenböck eigenvalue of a preset at
/// its first sample point (dimension 4 only).
pub fn preset_pic(spec: &GeometrySpec, seed: u64) -> Result<(f64, f64)> {
    let (m, rm) = spec.curvature_at(spec.sample_points()[0])?;
    let d = decompose(&rm, &m)?;
    let iso = isotropic_min(&rm, &m, PIC_BUDGET, seed)?;
    let (_, op) = weitzenbock(&rm, &d.ricci, &m)?;
    Ok((iso.value, op.min_eigenvalue()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub name: String,
    pub n: Option<usize>,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub format_version: u32,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<SuiteCheck>,
    pub pic: PicAgreement,
    pub all_pass: bool,
}

fn check(name: &str, n: Option<usize>, value: f64, tolerance: f64) -> SuiteCheck {
    SuiteCheck {
        name: name.to_string(),
        n,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

/// The algebraic identity and property suites, `samples` tensors each.
pub fn run_verify(samples: usize, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for n in 4..=6 {
        let s = decomposition_stats(n, samples, shard_seed(seed, n as u64))?;
        checks.push(check("decomposition_reconstruction", Some(n), s.reconstruction, 1e-10));
        checks.push(check("decomposition_orthogonality", Some(n), s.orthogonality, 1e-10));
        checks.push(check("weyl_trace", Some(n), s.weyl_trace, 1e-10));
        checks.push(check("weyl_coordinate_formula", Some(n), s.formula, 1e-10));
    }
    for n in 3..=6 {
        checks.push(check("kn_norm_identity", Some(n), kn_norm_defect(n)?, 1e-12));
    }
    for n in 3..=6 {
        checks.push(check("q_vanishing_einstein", Some(n), q_vanishing(n, samples.min(200), seed ^ n as u64)?, 1e-10));
    }
    for n in 3..=6 {
        let c = cubic_check(n, samples.max(10_000), seed.wrapping_add(n as u64))?;
        // Within 1% from below and never above (to rounding).
        let gap = (c.sharp - c.refined) / c.sharp;
        checks.push(SuiteCheck {
            pass: (-1e-12..=1e-2).contains(&gap),
            ..check("cubic_constant_gap", Some(n), gap, 1e-2)
        });
        checks.push(check("cubic_constant_extremal", Some(n), c.extremal_defect, 1e-9));
    }
    let pic = pic_agreement(samples, seed)?;
    let disagree = (pic.conclusive - pic.agree) as f64;
    checks.push(check("pic_weitzenbock_disagreements", Some(4), disagree, 0.0));
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        format_version: FORMAT_VERSION,
        seed,
        samples,
        checks,
        pic,
        all_pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub n: usize,
    pub samples: usize,
    pub c1_sharp: f64,
    pub c1_sampled: f64,
    pub c1_refined: f64,
    pub c2_table: f64,
    pub c2_sampled: f64,
    pub c2_refined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub format_version: u32,
    pub seed: u64,
    pub rows: Vec<CalibrationRow>,
}

pub fn run_calibrate(dims: &[usize], samples: usize, seed: u64) -> Result<CalibrationReport> {
    let rows = dims
        .iter()
        .map(|&n| -> Result<CalibrationRow> {
            let (c1_sampled, c1_refined) = calibrate_cubic_constant(n, samples, seed);
            let (c2_sampled, c2_refined) = calibrate_weyl_constant(n, samples, seed)?;
            Ok(CalibrationRow {
                n,
                samples,
                c1_sharp: sharp_cubic_constant(n),
                c1_sampled,
                c1_refined,
                c2_table: calibrated_weyl_constant(n)?,
                c2_sampled,
                c2_refined,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CalibrationReport {
        format_version: FORMAT_VERSION,
        seed,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub format_version: u32,
    pub name: String,
    pub geometry: String,
    pub dim: usize,
    /// Sample point with the largest `|Rm|`.
    pub point: usize,
    pub scalar: f64,
    pub norm_e: f64,
    pub norm_w: f64,
    pub norm_rm: f64,
    pub ricci_eigenvalues: Vec<f64>,
    pub weitzenbock_eigenvalues: Vec<f64>,
    pub isotropic_min: Option<f64>,
    pub reconstruction_defect: f64,
    pub weyl_trace_defect: f64,
    pub orthogonality_defect: f64,
}

/// One-shot curvature report of the initial metric of a scenario.
pub fn decompose_report(name: &str, kind: &str, spec: &GeometrySpec, seed: u64) -> Result<DecomposeReport> {
    let point = summarize(spec)?.peak.point;
    let (m, rm) = spec.curvature_at(point)?;
    let d = decompose(&rm, &m)?;
    let def = d.defects(&rm, &m)?;
    let mut ricci_eigenvalues: Vec<f64> = d.ricci.matrix().symmetric_eigenvalues().iter().copied().collect();
    ricci_eigenvalues.sort_by(f64::total_cmp);
    let (_, op) = weitzenbock(&rm, &d.ricci, &m)?;
    let isotropic = if spec.dim() >= 4 {
        Some(isotropic_min(&rm, &m, PIC_BUDGET, seed)?.value)
    } else {
        None
    };
    Ok(DecomposeReport {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        geometry: kind.to_string(),
        dim: spec.dim(),
        point,
        scalar: d.scalar,
        norm_e: d.norm_e,
        norm_w: d.norm_w,
        norm_rm: d.norm_rm,
        ricci_eigenvalues,
        weitzenbock_eigenvalues: op.eigenvalues()?,
        isotropic_min: isotropic,
        reconstruction_defect: def.reconstruction,
        weyl_trace_defect: def.weyl_trace,
        orthogonality_defect: def.orthogonality,
    })
}
