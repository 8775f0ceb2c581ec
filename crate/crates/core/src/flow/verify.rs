//! Finite-difference checks of the evolution equations of `R` and `Rc` along
//! homogeneous flows, where all spatial derivatives vanish.

use super::{ode_params, rk4_fixed, Trajectory};
use crate::curvature::GeometrySpec;
use crate::error::{GeomError, Result};
use crate::tensor::{ricci_contraction, scalar_contraction, MetricPoint, Sym2};

/// Number of stored states at which the evolution equations are sampled.
pub const VERIFY_SAMPLES: usize = 8;
const SUBSTEPS: usize = 16;

/// Flows a homogeneous preset by `dt` (either sign) with fixed-step RK4.
pub fn propagate(spec: &GeometrySpec, dt: f64) -> Result<GeometrySpec> {
    if dt == 0.0 {
        return Ok(spec.clone());
    }
    rk4_fixed(spec, dt, SUBSTEPS)
}

/// Stored states used for verification: evenly spread over the first 80% of
/// the trajectory so the stencils stay clear of the singular time.
pub(crate) fn sample_states(traj: &Trajectory, h: f64) -> Result<Vec<&GeometrySpec>> {
    if traj.states.len() < 3 {
        return Err(GeomError::InsufficientData(format!(
            "{} stored states, need at least 3",
            traj.states.len()
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(GeomError::InvalidParameter(format!("finite-difference step {h}")));
    }
    let spec = &traj.states[0].spec;
    if !spec.is_homogeneous() || ode_params(spec).is_none() {
        return Err(GeomError::NotApplicable(
            "evolution checks need a homogeneous preset".into(),
        ));
    }
    let t_last = traj.last().t;
    let pool: Vec<&GeometrySpec> = traj
        .states
        .iter()
        .filter(|s| s.t <= 0.8 * t_last)
        .map(|s| &s.spec)
        .collect();
    if pool.is_empty() {
        return Err(GeomError::InsufficientData("no states in the verification window".into()));
    }
    let k = VERIFY_SAMPLES.min(pool.len());
    Ok((0..k)
        .map(|i| if k == 1 { 0 } else { i * (pool.len() - 1) / (k - 1) })
        .map(|i| pool[i])
        .collect())
}

/// Orthonormal-frame Ricci tensor of a homogeneous preset.
pub(crate) fn frame_ricci(spec: &GeometrySpec) -> Result<(MetricPoint, crate::tensor::AlgCurv, Sym2)> {
    let (m, rm) = spec.curvature_at(0)?;
    let ric = ricci_contraction(&rm, &m)?;
    Ok((m, rm, ric))
}

/// `max |D_t R − 2|Rc|²|` over sampled states, with the central difference
/// `D_t R = (R(t+h) − R(t−h)) / 2h`.
pub fn verify_scalar_evolution(traj: &Trajectory, h: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for spec in sample_states(traj, h)? {
        let (m, _, ric) = frame_ricci(spec)?;
        let rhs = 2.0 * ric.inner(&ric, &m)?;
        let r_of = |s: &GeometrySpec| -> Result<f64> {
            let (m, _, ric) = frame_ricci(s)?;
            scalar_contraction(&ric, &m)
        };
        let fd = (r_of(&propagate(spec, h)?)? - r_of(&propagate(spec, -h)?)?) / (2.0 * h);
        worst = worst.max((fd - rhs).abs());
    }
    Ok(worst)
}

type Frame3 = [[[f64; 3]; 3]; 3];

/// `s[a][b][c] = (∇_a T)(e_b, e_c)` for a left-invariant symmetric 2-tensor
/// with constant frame components, given `gam[a][b][m] = <∇_a e_b, e_m>`.
fn invariant_gradient(gam: &Frame3, t: &Sym2) -> Frame3 {
    let mut s = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                s[a][b][c] = -(0..3)
                    .map(|m| gam[a][b][m] * t.get(m, c) + gam[a][c][m] * t.get(b, m))
                    .sum::<f64>();
            }
        }
    }
    s
}

/// Rough Laplacian of a left-invariant symmetric 2-tensor.
fn invariant_laplacian(gam: &Frame3, t: &Sym2) -> Sym2 {
    let s = invariant_gradient(gam, t);
    let mut out = nalgebra::DMatrix::zeros(3, 3);
    for b in 0..3 {
        for c in 0..3 {
            let mut v = 0.0;
            for a in 0..3 {
                for m in 0..3 {
                    v -= gam[a][a][m] * s[m][b][c] + gam[a][b][m] * s[a][m][c] + gam[a][c][m] * s[a][b][m];
                }
            }
            out[(b, c)] = v;
        }
    }
    Sym2::symmetrized(out)
}

/// `ΔRc` for a homogeneous preset. Round spheres and their products have
/// parallel Ricci tensor; left-invariant metrics in general do not.
fn ricci_laplacian(spec: &GeometrySpec, ric: &Sym2) -> Sym2 {
    match spec {
        GeometrySpec::Milnor(f) => invariant_laplacian(&f.connection(), ric),
        _ => Sym2::zeros(ric.n()),
    }
}

/// `|∇Rc|²` for a homogeneous preset.
pub(crate) fn ricci_gradient_sq(spec: &GeometrySpec, ric: &Sym2) -> f64 {
    match spec {
        GeometrySpec::Milnor(f) => invariant_gradient(&f.connection(), ric)
            .iter()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum(),
        _ => 0.0,
    }
}

/// Componentwise residual of the Ricci evolution in the orthonormal frame
/// that moves with the metric. Writing `Rc^e_ij = Rc(e_i, e_j)` for
/// `e_i = F_i/√s_i` with fixed `F_i` and `s_i' = −2 s_i Rc^e_ii`, the
/// equation `∂_t Rc = 2Rm(Rc,·) − 2Rc²` becomes
/// `d/dt Rc^e_ij = ΔRc_ij + 2Rm(Rc,·)_ij − 2(Rc²)_ij + Rc^e_ij (Rc^e_ii + Rc^e_jj)`.
pub fn verify_ricci_evolution(traj: &Trajectory, h: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for spec in sample_states(traj, h)? {
        let (m, rm, ric) = frame_ricci(spec)?;
        let n = m.n();
        let rm_ric = rm.contract_middle(&ric, &m)?;
        let ric2 = ric.square(&m)?;
        let lap = ricci_laplacian(spec, &ric);
        let (_, _, plus) = frame_ricci(&propagate(spec, h)?)?;
        let (_, _, minus) = frame_ricci(&propagate(spec, -h)?)?;
        for i in 0..n {
            for j in 0..n {
                let rhs = lap.get(i, j) + 2.0 * rm_ric.get(i, j) - 2.0 * ric2.get(i, j)
                    + ric.get(i, j) * (ric.get(i, i) + ric.get(j, j));
                let fd = (plus.get(i, j) - minus.get(i, j)) / (2.0 * h);
                worst = worst.max((fd - rhs).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{MilnorFrame, MilnorGroup, SphereFactor};
    use crate::flow::{integrate, Controls};

    fn order(traj: &Trajectory, f: fn(&Trajectory, f64) -> Result<f64>) -> f64 {
        let a = f(traj, 1e-3).unwrap();
        let b = f(traj, 5e-4).unwrap();
        (a / b).log2()
    }

    #[test]
    fn s4_scalar_matches_closed_form() {
        // R = 12/(1 − 6t): D_t R = 72/(1−6t)² = R²/2 = 2|Rc|².
        let traj = integrate(&GeometrySpec::ConstantCurvature { n: 4, kappa: 1.0 }, 0.1, &Controls::default()).unwrap();
        // Leading error h²/6 · R''' stays below 0.1 on [0, 0.08].
        assert!(verify_scalar_evolution(&traj, 1e-3).unwrap() < 0.1);
        assert!((order(&traj, verify_scalar_evolution) - 2.0).abs() < 0.5);
    }

    #[test]
    fn flat_residual_zero() {
        let traj = integrate(&GeometrySpec::ConstantCurvature { n: 4, kappa: 0.0 }, 1.0, &Controls::default()).unwrap();
        assert_eq!(verify_scalar_evolution(&traj, 1e-3).unwrap(), 0.0);
        assert_eq!(verify_ricci_evolution(&traj, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn milnor_ricci_second_order() {
        let spec = GeometrySpec::Milnor(MilnorFrame {
            group: MilnorGroup::Su2,
            a: 1.2,
            b: 1.0,
            c: 1.0,
        });
        let traj = integrate(&spec, 0.05, &Controls::default()).unwrap();
        assert!((order(&traj, verify_ricci_evolution) - 2.0).abs() < 0.5);
    }

    #[test]
    fn product_scalar_second_order() {
        let spec = GeometrySpec::ProductOfSpheres {
            first: SphereFactor::new(2, 1.0),
            second: SphereFactor::new(2, 2f64.sqrt()),
        };
        let traj = integrate(&spec, 0.3, &Controls::default()).unwrap();
        assert!((order(&traj, verify_scalar_evolution) - 2.0).abs() < 0.5);
        assert!((order(&traj, verify_ricci_evolution) - 2.0).abs() < 0.5);
    }

    #[test]
    fn berger_sphere_ricci_not_parallel() {
        let f = MilnorFrame {
            group: MilnorGroup::Su2,
            a: 1.2,
            b: 1.0,
            c: 1.0,
        };
        let spec = GeometrySpec::Milnor(f);
        let (_, _, ric) = frame_ricci(&spec).unwrap();
        let lap = ricci_laplacian(&spec, &ric);
        for (i, v) in [-3.84, 1.92, 1.92].into_iter().enumerate() {
            assert!((lap.get(i, i) - v).abs() < 1e-12, "{i}: {}", lap.get(i, i));
        }
        let round = GeometrySpec::Milnor(MilnorFrame { a: 1.0, ..f });
        let (_, _, ric) = frame_ricci(&round).unwrap();
        assert!(ricci_laplacian(&round, &ric).max_abs() < 1e-14);
    }

    #[test]
    fn too_few_states() {
        let spec = GeometrySpec::ConstantCurvature { n: 4, kappa: 1.0 };
        let mut traj = integrate(&spec, 0.1, &Controls::default()).unwrap();
        traj.states.truncate(2);
        assert!(matches!(verify_scalar_evolution(&traj, 1e-3), Err(GeomError::InsufficientData(_))));
    }
}
