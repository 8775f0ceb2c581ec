//! Traceless-Ricci pinching: `f = |E|²/R^γ`, its reaction terms along the
//! flow, the maximum-principle bound `Φ`, the PIC chain and dilation ratios.

mod constants;
mod trace;

pub use constants::{
    calibrate_cubic_constant, calibrate_weyl_constant, calibrated_weyl_constant, cubic_bounds, cubic_ratio_spectrum,
    derived_pic_constants, phi_bound, random_weyl, refine_spectrum, sharp_cubic_constant, weyl_ratio_spectrum, Constant,
    CubicBounds, PhiValue, PinchConfig, Provenance, GAMMA_MAX,
};
pub use trace::{
    build_trace, check_pinching_estimate, dilation_ratios, pic_chain_check, AnchorRatio, DilationRatios, PicReport,
    PinchCheck, PinchTrace, Violation,
};

use crate::curvature::{decompose, CurvDecomp, GeometrySpec};
use crate::error::{GeomError, Result};
use crate::flow::verify::{frame_ricci, ricci_gradient_sq, sample_states};
use crate::flow::{propagate, Trajectory};
use crate::tensor::{scalar_contraction, AlgCurv, MetricPoint, Sym2};

/// Pinching quantities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchSample {
    pub t: f64,
    pub point: usize,
    pub r: f64,
    pub e: f64,
    pub w: f64,
    pub f: f64,
    /// `E_ij E_jk E_ki`.
    pub e_cubed: f64,
    /// `W_ijkl E^ik E^jl`.
    pub w_ee: f64,
    pub q: f64,
    /// `R_ijkl Rc^ik Rc^jl`.
    pub rm_rcrc: f64,
    pub w_rcrc: f64,
}

/// `|E|²/R^γ`.
pub fn f_gamma(norm_e: f64, r: f64, gamma: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(GeomError::NonPositiveScalar { r });
    }
    Ok(norm_e * norm_e / r.powf(gamma))
}

/// The same quantity written as `|Rc|²/R^γ − R^{2−γ}/n`.
pub fn f_gamma_from_ricci(ric_sq: f64, r: f64, n: usize, gamma: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(GeomError::NonPositiveScalar { r });
    }
    Ok(ric_sq / r.powf(gamma) - r.powf(2.0 - gamma) / n as f64)
}

/// `(2n−1)/(n−1) |Rc|² R − 2Rc³ − R³/(n−1)`, the Ricci part of `(n−2)·Rm(Rc,Rc)`.
fn ricci_cubic_combination(ric: &Sym2, m: &MetricPoint) -> Result<f64> {
    let n = ric.n() as f64;
    let r = scalar_contraction(ric, m)?;
    let sq = ric.inner(ric, m)?;
    let cube = ric.cube_trace(m)?;
    Ok((2.0 * n - 1.0) / (n - 1.0) * sq * r - 2.0 * cube - r.powi(3) / (n - 1.0))
}

/// `Q = |Rc|⁴ − R/(n−2) ((2n−1)/(n−1) R|Rc|² − 2Rc³ − R³/(n−1))`.
pub fn q_quantity(ric: &Sym2, m: &MetricPoint) -> Result<f64> {
    let n = ric.n();
    if n < 3 {
        return Err(GeomError::UnsupportedDimension { n, reason: "Q needs n >= 3" });
    }
    let r = scalar_contraction(ric, m)?;
    let sq = ric.inner(ric, m)?;
    Ok(sq * sq - r / (n as f64 - 2.0) * ricci_cubic_combination(ric, m)?)
}

/// `|Rm(Rc,Rc) − (1/(n−2)(…) + W(Rc,Rc))|`, with the left side contracted
/// directly from `rm`.
pub fn rm_rcrc_identity(rm: &AlgCurv, m: &MetricPoint) -> Result<f64> {
    let d = decompose(rm, m)?;
    let lhs = rm.contract_pair(&d.ricci, &d.ricci, m)?;
    let w_term = d.weyl.contract_pair(&d.ricci, &d.ricci, m)?;
    let rhs = ricci_cubic_combination(&d.ricci, m)? / (d.n as f64 - 2.0) + w_term;
    Ok((lhs - rhs).abs())
}

/// Pinching quantities of a decomposed curvature tensor.
pub fn pinch_sample(t: f64, point: usize, rm: &AlgCurv, d: &CurvDecomp, m: &MetricPoint, gamma: f64) -> Result<PinchSample> {
    Ok(PinchSample {
        t,
        point,
        r: d.scalar,
        e: d.norm_e,
        w: d.norm_w,
        f: f_gamma(d.norm_e, d.scalar, gamma)?,
        e_cubed: d.traceless.cube_trace(m)?,
        w_ee: d.weyl.contract_pair(&d.traceless, &d.traceless, m)?,
        q: q_quantity(&d.ricci, m)?,
        rm_rcrc: rm.contract_pair(&d.ricci, &d.ricci, m)?,
        w_rcrc: d.weyl.contract_pair(&d.ricci, &d.ricci, m)?,
    })
}

/// `4R[−f² − f/(n(n−1)) − (2/(n−2)) E³/R³ + W(E,E)/R³]` with `f = |E|²/R²`.
pub fn reaction_terms_gamma2(s: &PinchSample, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(GeomError::UnsupportedDimension { n, reason: "reaction terms need n >= 3" });
    }
    let f = f_gamma(s.e, s.r, 2.0)?;
    let nf = n as f64;
    let r3 = s.r.powi(3);
    Ok(4.0 * s.r * (-f * f - f / (nf * (nf - 1.0)) - 2.0 / (nf - 2.0) * s.e_cubed / r3 + s.w_ee / r3))
}

/// Reaction terms for general `γ`:
/// `2R^{−1−γ}[(2−γ)|Rc|²|E|² − 2Q + 2R·W(Rc,Rc)]`.
pub fn reaction_terms(s: &PinchSample, ric_sq: f64, gamma: f64) -> f64 {
    2.0 * s.r.powf(-1.0 - gamma)
        * ((2.0 - gamma) * ric_sq * s.e * s.e - 2.0 * s.q + 2.0 * s.r * s.w_rcrc)
}

/// `df/dt` on a homogeneous preset: the reaction terms plus the one
/// gradient term that survives when `∇R = 0`, namely `−2|∇Rc|²/R^γ`.
pub fn homogeneous_f_rate(spec: &GeometrySpec, gamma: f64) -> Result<f64> {
    let (m, rm, ric) = frame_ricci(spec)?;
    let d = decompose(&rm, &m)?;
    let s = pinch_sample(0.0, 0, &rm, &d, &m, gamma)?;
    let ric_sq = ric.inner(&ric, &m)?;
    Ok(reaction_terms(&s, ric_sq, gamma) - 2.0 * ricci_gradient_sq(spec, &ric) / s.r.powf(gamma))
}

fn f_of(spec: &GeometrySpec, gamma: f64) -> Result<f64> {
    let (m, rm) = spec.curvature_at(0)?;
    let d = decompose(&rm, &m)?;
    f_gamma(d.norm_e, d.scalar, gamma)
}

/// `max |D_t f − df/dt|` over sampled states of a homogeneous trajectory.
pub fn verify_evolution_identity(traj: &Trajectory, gamma: f64, h: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= GAMMA_MAX) {
        return Err(GeomError::InvalidParameter(format!("gamma {gamma} outside (0, 2]")));
    }
    let mut worst = 0.0_f64;
    for spec in sample_states(traj, h)? {
        let rate = homogeneous_f_rate(spec, gamma)?;
        let fd = (f_of(&propagate(spec, h)?, gamma)? - f_of(&propagate(spec, -h)?, gamma)?) / (2.0 * h);
        worst = worst.max((fd - rate).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{MilnorFrame, MilnorGroup, SphereFactor};
    use crate::flow::{integrate, Controls};
    use crate::sampling::random_alg_curv;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn product() -> GeometrySpec {
        GeometrySpec::ProductOfSpheres {
            first: SphereFactor::new(2, 1.0),
            second: SphereFactor::new(2, 2f64.sqrt()),
        }
    }

    fn sample_of(spec: &GeometrySpec, gamma: f64) -> PinchSample {
        let (m, rm) = spec.curvature_at(0).unwrap();
        let d = decompose(&rm, &m).unwrap();
        pinch_sample(0.0, 0, &rm, &d, &m, gamma).unwrap()
    }

    #[test]
    fn f_examples() {
        assert!((sample_of(&product(), 2.0).f - 1.0 / 36.0).abs() < 1e-15);
        assert_eq!(sample_of(&GeometrySpec::ConstantCurvature { n: 5, kappa: 2.0 }, 2.0).f, 0.0);
        // Rc = diag(1, 1, 2): |E|² = 6 − 16/3, R = 4.
        let m = MetricPoint::euclidean(3);
        let ric = Sym2::from_diagonal(&[1.0, 1.0, 2.0]).unwrap();
        let e = crate::tensor::traceless_part(&ric, &m).unwrap().norm(&m).unwrap();
        assert!((f_gamma(e, 4.0, 2.0).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        let via_ricci = f_gamma_from_ricci(6.0, 4.0, 3, 2.0).unwrap();
        assert!((via_ricci - 1.0 / 24.0).abs() < 1e-15);
        assert!(matches!(f_gamma(1.0, 0.0, 2.0), Err(GeomError::NonPositiveScalar { .. })));
    }

    #[test]
    fn q_by_hand() {
        // n = 3, Rc = diag(1,1,2): |Rc|² = 6, Rc³ = 10, R = 4;
        // Q = 36 − 4·(5/2·4·6 − 20 − 32) = 36 − 4·8 = 4.
        let m = MetricPoint::euclidean(3);
        let ric = Sym2::from_diagonal(&[1.0, 1.0, 2.0]).unwrap();
        assert!((q_quantity(&ric, &m).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(q_quantity(&Sym2::zeros(4), &MetricPoint::euclidean(4)).unwrap(), 0.0);
    }

    #[test]
    fn q_vanishes_on_einstein() {
        for n in 3..=6 {
            let m = MetricPoint::euclidean(n);
            let ric = Sym2::identity(n).scaled(1.7);
            let r = 1.7 * n as f64;
            assert!(q_quantity(&ric, &m).unwrap().abs() <= 1e-10 * r.powi(4));
        }
    }

    #[test]
    fn rm_rcrc_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 4..=6 {
            let m = MetricPoint::euclidean(n);
            for _ in 0..50 {
                let rm = random_alg_curv(n, 4, &mut rng);
                let lhs = rm.contract_pair(&crate::tensor::ricci_contraction(&rm, &m).unwrap(), &crate::tensor::ricci_contraction(&rm, &m).unwrap(), &m).unwrap();
                assert!(rm_rcrc_identity(&rm, &m).unwrap() <= 1e-9 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn gamma2_forms_agree() {
        for spec in [
            product(),
            GeometrySpec::ProductOfSpheres {
                first: SphereFactor::new(3, 0.8),
                second: SphereFactor::new(2, 1.3),
            },
        ] {
            let (m, _, ric) = frame_ricci(&spec).unwrap();
            let s = sample_of(&spec, 2.0);
            let a = reaction_terms_gamma2(&s, spec.dim()).unwrap();
            let b = reaction_terms(&s, ric.inner(&ric, &m).unwrap(), 2.0);
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn product_reaction_matches_closed_form_rate() {
        // f(t) = (1/(2(3 − 4t)))² ⇒ f'(0) = 16/216.
        let a = homogeneous_f_rate(&product(), 2.0).unwrap();
        assert!((a - 16.0 / 216.0).abs() < 1e-12, "{a}");
        let equal = GeometrySpec::ProductOfSpheres {
            first: SphereFactor::new(2, 1.0),
            second: SphereFactor::new(2, 1.0),
        };
        assert!(reaction_terms_gamma2(&sample_of(&equal, 2.0), 4).unwrap().abs() < 1e-14);
    }

    #[test]
    fn milnor_identity_second_order() {
        let spec = GeometrySpec::Milnor(MilnorFrame {
            group: MilnorGroup::Su2,
            a: 1.2,
            b: 1.0,
            c: 1.0,
        });
        let traj = integrate(&spec, 0.05, &Controls::default()).unwrap();
        for gamma in [1.0, 2.0] {
            let a = verify_evolution_identity(&traj, gamma, 1e-3).unwrap();
            let b = verify_evolution_identity(&traj, gamma, 5e-4).unwrap();
            assert!(((a / b).log2() - 2.0).abs() < 0.5, "gamma {gamma}: {a} {b}");
        }
        assert!(verify_evolution_identity(&traj, 2.5, 1e-3).is_err());
    }
}
