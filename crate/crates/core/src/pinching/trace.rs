//! Pinching quantities along a trajectory and the checks run on them.

use super::constants::{phi_bound, PhiValue, PinchConfig};
use super::{f_gamma, pinch_sample, PinchSample};
use crate::curvature::{decompose, weitzenbock};
use crate::error::{GeomError, Result};
use crate::flow::{pointwise, DilationSequence, Trajectory};
use crate::tensor::{AlgCurv, MetricPoint};

/// Relative slack when comparing a quantity against its bound.
const BOUND_TOL: f64 = 1e-12;
/// Samples with `√f ≥ (1 − SIGNATURE_BAND)·Φ` are checked for the discrete
/// maximum principle.
pub const SIGNATURE_BAND: f64 = 1e-6;
/// Largest admissible forward difference of `max f` at a flagged sample.
pub const SIGNATURE_SLOPE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PinchTrace {
    pub n: usize,
    pub times: Vec<f64>,
    /// Quantities at the point of largest `f = |E|²/R^γ` of each state.
    pub samples: Vec<PinchSample>,
    /// `max_M |E|²/R²`.
    pub f2_max: Vec<f64>,
    /// `max_{M×[0,t]} |W|/R`.
    pub w_over_r_runmax: Vec<f64>,
    pub phi: Vec<PhiValue>,
}

impl PinchTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Evaluates the pinching quantities on every stored state. Any `R ≤ 0`
/// aborts with [`GeomError::NonPositiveScalar`].
pub fn build_trace(traj: &Trajectory, cfg: &PinchConfig) -> Result<PinchTrace> {
    cfg.validate()?;
    let mut out = PinchTrace {
        n: cfg.n,
        times: Vec::with_capacity(traj.states.len()),
        samples: Vec::with_capacity(traj.states.len()),
        f2_max: Vec::with_capacity(traj.states.len()),
        w_over_r_runmax: Vec::with_capacity(traj.states.len()),
        phi: Vec::with_capacity(traj.states.len()),
    };
    let mut runmax = 0.0_f64;
    for st in &traj.states {
        if st.spec.dim() != cfg.n {
            return Err(GeomError::DimensionMismatch {
                left: cfg.n,
                right: st.spec.dim(),
            });
        }
        let pts = pointwise(&st.spec)?;
        let (mut f2, mut best, mut best_f) = (0.0_f64, pts[0].point, f64::NEG_INFINITY);
        for p in &pts {
            if !(p.r > 0.0) {
                return Err(GeomError::NonPositiveScalar { r: p.r });
            }
            f2 = f2.max((p.e / p.r).powi(2));
            runmax = runmax.max(p.w / p.r);
            let f = f_gamma(p.e, p.r, cfg.gamma)?;
            if f > best_f {
                best_f = f;
                best = p.point;
            }
        }
        let (m, rm) = st.spec.curvature_at(best)?;
        let d = decompose(&rm, &m)?;
        out.samples.push(pinch_sample(st.t, best, &rm, &d, &m, cfg.gamma)?);
        out.times.push(st.t);
        out.f2_max.push(f2);
        out.w_over_r_runmax.push(runmax);
        out.phi.push(phi_bound(cfg.big_c1.value, cfg.c2.value, cfg.n, runmax)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub sqrt_f: f64,
    pub phi: f64,
    /// `C1 + C2 max √(|W|/R)`.
    pub bound_rhs: f64,
    /// `min(Φ, bound_rhs) − √f`; negative on violation.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinchCheck {
    pub violations: Vec<Violation>,
    /// Samples within the signature band of `Φ`.
    pub flagged: usize,
    /// Times of flagged samples where `max f` increased faster than allowed.
    pub signature_failures: Vec<f64>,
    /// `max √f / Φ` over the trace.
    pub worst_ratio: f64,
}

/// Checks `√f ≤ Φ(t)` and `|E|/R ≤ C1 + C2 max_{[0,t]} √(|W|/R)` at every
/// sample, plus the discrete maximum principle near the bound.
pub fn check_pinching_estimate(trace: &PinchTrace, cfg: &PinchConfig) -> Result<PinchCheck> {
    if trace.is_empty() {
        return Err(GeomError::InsufficientData("empty pinching trace".into()));
    }
    let mut out = PinchCheck {
        violations: Vec::new(),
        flagged: 0,
        signature_failures: Vec::new(),
        worst_ratio: 0.0,
    };
    let c1 = cfg.big_c1.value;
    let c2 = cfg.big_c2();
    for k in 0..trace.len() {
        let sqrt_f = trace.f2_max[k].sqrt();
        let phi = trace.phi[k].value;
        let bound_rhs = c1 + c2 * trace.w_over_r_runmax[k].sqrt();
        out.worst_ratio = out.worst_ratio.max(sqrt_f / phi);
        let margin = phi.min(bound_rhs) - sqrt_f;
        if margin < -BOUND_TOL * phi {
            out.violations.push(Violation {
                t: trace.times[k],
                sqrt_f,
                phi,
                bound_rhs,
                margin,
            });
        }
        if sqrt_f >= (1.0 - SIGNATURE_BAND) * phi {
            out.flagged += 1;
            if k + 1 < trace.len() {
                let slope = (trace.f2_max[k + 1] - trace.f2_max[k]) / (trace.times[k + 1] - trace.times[k]);
                if slope > SIGNATURE_SLOPE {
                    out.signature_failures.push(trace.times[k]);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicReport {
    pub min_eigenvalue: f64,
    /// Weitzenböck operator nonnegative (to rounding).
    pub precondition_met: bool,
    pub w_over_r: Option<f64>,
    pub e_over_r: Option<f64>,
    /// `|W| ≤ c3|E| + c4 R`; `None` when the precondition fails.
    pub holds: Option<bool>,
}

pub fn pic_chain_check(rm: &AlgCurv, m: &MetricPoint, cfg: &PinchConfig) -> Result<PicReport> {
    let n = rm.n();
    if n < 4 || n % 2 != 0 {
        return Err(GeomError::UnsupportedDimension {
            n,
            reason: "the PIC chain needs even n >= 4",
        });
    }
    let d = decompose(rm, m)?;
    let (_, op) = weitzenbock(rm, &d.ricci, m)?;
    let min_eigenvalue = op.min_eigenvalue()?;
    let scale = d.norm_rm.max(f64::MIN_POSITIVE);
    let precondition_met = min_eigenvalue >= -1e-12 * scale;
    let (w_over_r, e_over_r) = if d.scalar > 0.0 {
        (Some(d.norm_w / d.scalar), Some(d.norm_e / d.scalar))
    } else {
        (None, None)
    };
    let holds = precondition_met.then(|| {
        d.norm_w <= cfg.c3.value * d.norm_e + cfg.c4.value * d.scalar + 1e-12 * scale
    });
    Ok(PicReport {
        min_eigenvalue,
        precondition_met,
        w_over_r,
        e_over_r,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorRatio {
    pub t: f64,
    pub k: f64,
    /// Rescaled `|Rm|` at the anchor; 1 by construction.
    pub normalized_rm: f64,
    pub e_over_wmax: f64,
    pub r_over_wmax: f64,
    /// `C1·R/|W|_max + C2·(R/|W|_max)·max √(|W|/R)`; equals
    /// `C1·R/|W|_max + C2·√(R/|W|_max)` when the running max of `|W|/R` is
    /// attained at the anchor.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationRatios {
    pub anchors: Vec<AnchorRatio>,
    /// Anchors skipped because `|W|_max = 0` there.
    pub skipped: usize,
    /// Every component of the last triple is at most 10% of the first.
    pub trends_to_zero: bool,
}

pub fn dilation_ratios(seq: &DilationSequence, trace: &PinchTrace, cfg: &PinchConfig) -> Result<DilationRatios> {
    let mut out = DilationRatios {
        anchors: Vec::new(),
        skipped: 0,
        trends_to_zero: false,
    };
    for a in &seq.anchors {
        let Some((_, s)) = a.rescaled.iter().find(|(s, _)| *s == 0.0) else {
            return Err(GeomError::Inconsistent("anchor without its own sample".into()));
        };
        // Rounding-level Weyl parts (conformally flat metrics) do not count.
        if !(s.w_max > 1e-10 * s.rm_max) {
            out.skipped += 1;
            continue;
        }
        let runmax = *trace
            .w_over_r_runmax
            .get(a.state_index)
            .ok_or_else(|| GeomError::Inconsistent("trace shorter than trajectory".into()))?;
        let e_over_wmax = s.peak.e / s.w_max;
        let r_over_wmax = s.peak.r / s.w_max;
        let rhs = cfg.big_c1.value * r_over_wmax + cfg.big_c2() * r_over_wmax * runmax.sqrt();
        out.anchors.push(AnchorRatio {
            t: a.t,
            k: a.k,
            normalized_rm: s.rm_max,
            e_over_wmax,
            r_over_wmax,
            rhs,
            holds: e_over_wmax <= rhs * (1.0 + BOUND_TOL),
        });
    }
    if out.anchors.is_empty() {
        return Err(GeomError::NotApplicable("|W|_max = 0 at every anchor".into()));
    }
    let (first, last) = (out.anchors[0], out.anchors[out.anchors.len() - 1]);
    out.trends_to_zero = last.e_over_wmax <= 0.1 * first.e_over_wmax
        && last.r_over_wmax <= 0.1 * first.r_over_wmax
        && last.rhs <= 0.1 * first.rhs;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{GeometrySpec, MilnorFrame, MilnorGroup, SphereFactor, WarpedProduct};
    use crate::flow::{dilate, integrate, Controls};

    fn run(spec: &GeometrySpec, controls: &Controls) -> (PinchTrace, PinchCheck, PinchConfig, Trajectory) {
        let traj = integrate(spec, 10.0, controls).unwrap();
        let pts = pointwise(spec).unwrap();
        let f0 = pts.iter().map(|p| (p.e / p.r).powi(2)).fold(0.0, f64::max);
        let cfg = PinchConfig::defaults(spec.dim(), f0).unwrap();
        let trace = build_trace(&traj, &cfg).unwrap();
        let check = check_pinching_estimate(&trace, &cfg).unwrap();
        (trace, check, cfg, traj)
    }

    #[test]
    fn product_has_no_violations() {
        let spec = GeometrySpec::ProductOfSpheres {
            first: SphereFactor::new(2, 1.0),
            second: SphereFactor::new(2, 2f64.sqrt()),
        };
        let (trace, check, cfg, traj) = run(&spec, &Controls::default());
        assert!(check.violations.is_empty(), "{:?}", check.violations.first());
        assert!(check.signature_failures.is_empty());
        assert!(trace.phi.windows(2).all(|w| w[1].value >= w[0].value));
        let seq = dilate(&traj, 5).unwrap();
        let ratios = dilation_ratios(&seq, &trace, &cfg).unwrap();
        assert!(ratios.anchors.iter().all(|a| a.holds && (a.normalized_rm - 1.0).abs() < 1e-9));
    }

    #[test]
    fn berger_sphere_has_no_violations() {
        let spec = GeometrySpec::Milnor(MilnorFrame {
            group: MilnorGroup::Su2,
            a: 2.0,
            b: 1.0,
            c: 1.0,
        });
        let (trace, check, _, _) = run(&spec, &Controls::default());
        assert!(check.violations.is_empty());
        assert!(trace.w_over_r_runmax.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn neckpinch_has_no_violations() {
        let spec = GeometrySpec::Warped(WarpedProduct::dumbbell(3, 256, 0.1, 1.0));
        let controls = Controls {
            blowup_ratio: 1e3,
            ..Controls::default()
        };
        let (_, check, _, _) = run(&spec, &controls);
        assert!(check.violations.is_empty());
        assert!(check.signature_failures.is_empty());
    }

    #[test]
    fn conformally_flat_dilation_is_not_applicable() {
        let spec = GeometrySpec::ConstantCurvature { n: 4, kappa: 1.0 };
        let (trace, _, cfg, traj) = run(&spec, &Controls::default());
        let seq = dilate(&traj, 4).unwrap();
        assert!(matches!(dilation_ratios(&seq, &trace, &cfg), Err(GeomError::NotApplicable(_))));
    }

    #[test]
    fn nonpositive_scalar_aborts() {
        let spec = GeometrySpec::ConstantCurvature { n: 4, kappa: 0.0 };
        let traj = integrate(&spec, 1.0, &Controls::default()).unwrap();
        let cfg = PinchConfig::defaults(4, 0.0).unwrap();
        assert!(matches!(build_trace(&traj, &cfg), Err(GeomError::NonPositiveScalar { .. })));
    }

    #[test]
    fn pic_on_model_spaces() {
        let cfg = PinchConfig::defaults(4, 0.0).unwrap();
        let (m, rm) = GeometrySpec::ConstantCurvature { n: 4, kappa: 1.0 }.curvature_at(0).unwrap();
        let r = pic_chain_check(&rm, &m, &cfg).unwrap();
        assert_eq!(r.holds, Some(true));
        assert!(r.w_over_r.unwrap() < 1e-12);
        let (m, rm) = GeometrySpec::ProductOfSpheres {
            first: SphereFactor::new(3, 1.0),
            second: SphereFactor::new(1, 1.0),
        }
        .curvature_at(0)
        .unwrap();
        let r = pic_chain_check(&rm, &m, &cfg).unwrap();
        assert!(r.precondition_met);
        assert_eq!(r.holds, Some(true));
        let (m, rm) = GeometrySpec::ConstantCurvature { n: 3, kappa: 1.0 }.curvature_at(0).unwrap();
        assert!(pic_chain_check(&rm, &m, &cfg).is_err());
    }
}
