//! Ricci flow `∂g/∂t = −2Rc` on the geometry presets.
//!
//! Homogeneous presets reduce to ODEs on a few parameters and are stepped
//! with step-doubling RK4. The rotationally symmetric sphere is a 1-D PDE
//! stepped with forward Euler under a curvature CFL.

mod params;
mod singular;
pub(crate) mod verify;

pub use params::{frame_scales, ode_params, ricci_flow_rhs, with_ode_params, ParamDerivative};
pub use singular::{classify, dilate, estimate_singular_time, Anchor, DilationSequence, SingularityKind, SingularityReport};
pub use verify::{propagate, verify_ricci_evolution, verify_scalar_evolution, VERIFY_SAMPLES};

use crate::curvature::{decompose, GeometrySpec, WarpedProduct};
use crate::error::{GeomError, Result};

/// Maximum number of stored states per trajectory.
pub const STORE_CAP: usize = 10_000;
/// Number of final accepted steps that are always stored.
pub const KEEP_TAIL: usize = 100;

/// Pointwise curvature magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCurv {
    pub point: usize,
    pub r: f64,
    pub e: f64,
    pub w: f64,
    pub rm: f64,
}

/// Extremes over all sampled points of one time slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvSummary {
    pub r_min: f64,
    pub r_max: f64,
    pub e_max: f64,
    pub w_max: f64,
    pub rm_max: f64,
    /// `max |W|/R` over points; `None` unless `R > 0` everywhere.
    pub w_over_r_max: Option<f64>,
    /// Values at the point where `|Rm|` is largest.
    pub peak: PointCurv,
}

/// Closed-form magnitudes for `φ²dx² + ψ²g_S`: sectional curvature `K0` on
/// the `n_f` radial planes and `K1` on the tangential ones. Such metrics are
/// locally conformally flat, so `W = 0`.
fn warped_pointwise(w: &WarpedProduct) -> Result<Vec<PointCurv>> {
    let nf = w.n_fiber as f64;
    let n = nf + 1.0;
    (1..w.len() - 1)
        .map(|j| {
            let k = w.curvature_at(j)?;
            let (k0, k1) = (k.radial, k.tangential);
            let rho0 = nf * k0;
            let rho1 = k0 + (nf - 1.0) * k1;
            let r = rho0 + nf * rho1;
            let e2 = (rho0 - r / n).powi(2) + nf * (rho1 - r / n).powi(2);
            let rm2 = 4.0 * (nf * k0 * k0 + 0.5 * nf * (nf - 1.0) * k1 * k1);
            Ok(PointCurv {
                point: j,
                r,
                e: e2.sqrt(),
                w: 0.0,
                rm: rm2.sqrt(),
            })
        })
        .collect()
}

/// Curvature magnitudes at every sample point of `spec`.
pub fn pointwise(spec: &GeometrySpec) -> Result<Vec<PointCurv>> {
    if let GeometrySpec::Warped(w) = spec {
        w.validate()?;
        return warped_pointwise(w);
    }
    spec.sample_points()
        .into_iter()
        .map(|p| {
            let (m, rm) = spec.curvature_at(p)?;
            let d = decompose(&rm, &m)?;
            Ok(PointCurv {
                point: p,
                r: d.scalar,
                e: d.norm_e,
                w: d.norm_w,
                rm: d.norm_rm,
            })
        })
        .collect()
}

pub fn summarize(spec: &GeometrySpec) -> Result<CurvSummary> {
    let pts = pointwise(spec)?;
    let first = *pts.first().ok_or_else(|| GeomError::InsufficientData("no sample points".into()))?;
    let mut s = CurvSummary {
        r_min: f64::INFINITY,
        r_max: f64::NEG_INFINITY,
        e_max: 0.0,
        w_max: 0.0,
        rm_max: 0.0,
        w_over_r_max: Some(0.0),
        peak: first,
    };
    for p in &pts {
        if ![p.r, p.e, p.w, p.rm].iter().all(|v| v.is_finite()) {
            return Err(GeomError::NonFinite(format!("curvature at point {}", p.point)));
        }
        s.r_min = s.r_min.min(p.r);
        s.r_max = s.r_max.max(p.r);
        s.e_max = s.e_max.max(p.e);
        s.w_max = s.w_max.max(p.w);
        if p.rm > s.rm_max {
            s.rm_max = p.rm;
            s.peak = *p;
        }
        s.w_over_r_max = match s.w_over_r_max {
            Some(m) if p.r > 0.0 => Some(m.max(p.w / p.r)),
            _ => None,
        };
    }
    Ok(s)
}

/// Metric multiplied by a constant `factor > 0`.
pub fn scale_metric(spec: &GeometrySpec, factor: f64) -> Result<GeometrySpec> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(GeomError::InvalidParameter(format!("scale factor {factor}")));
    }
    let l = factor.sqrt();
    Ok(match spec {
        GeometrySpec::ConstantCurvature { n, kappa } => GeometrySpec::ConstantCurvature { n: *n, kappa: kappa / factor },
        GeometrySpec::ProductOfSpheres { first, second } => {
            let mut a = *first;
            let mut b = *second;
            a.radius *= l;
            b.radius *= l;
            GeometrySpec::ProductOfSpheres { first: a, second: b }
        }
        GeometrySpec::Milnor(m) => {
            let mut m = *m;
            m.a *= factor;
            m.b *= factor;
            m.c *= factor;
            GeometrySpec::Milnor(m)
        }
        GeometrySpec::Warped(w) => {
            let mut w = w.clone();
            w.phi.iter_mut().for_each(|p| *p *= l);
            w.psi.iter_mut().for_each(|p| *p *= l);
            GeometrySpec::Warped(w)
        }
        GeometrySpec::Chart(_) => return Err(GeomError::NotApplicable("chart scaling".into())),
    })
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub spec: GeometrySpec,
    pub summary: CurvSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Singular,
    HorizonReached,
    Degenerate,
}

impl Status {
    pub fn tag(self) -> &'static str {
        match self {
            Status::Singular => "Singular",
            Status::HorizonReached => "HorizonReached",
            Status::Degenerate => "Degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub dt_init: f64,
    pub dt_min: f64,
    /// Curvature CFL: `dt ≤ safety / |Rm|_max`.
    pub safety: f64,
    pub max_steps: usize,
    /// Singular once `|Rm|_max` exceeds this multiple of its initial value.
    pub blowup_ratio: f64,
    /// Relative tolerance of the step-doubling error control.
    pub rtol: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_min: 1e-12,
            safety: 0.01,
            max_steps: 1_000_000,
            blowup_ratio: 1e6,
            rtol: 1e-8,
        }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.dt_init) && pos(self.dt_min) && pos(self.safety) && pos(self.rtol)) {
            return Err(GeomError::InvalidParameter("flow controls must be positive and finite".into()));
        }
        if !(self.blowup_ratio > 1.0) {
            return Err(GeomError::InvalidParameter("blowup_ratio must exceed 1".into()));
        }
        if self.max_steps == 0 {
            return Err(GeomError::InvalidParameter("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
    pub t_est: Option<f64>,
    pub status: Status,
    /// Horizon reached only because `max_steps` ran out.
    pub max_steps_hit: bool,
    pub accepted_steps: usize,
    /// First time at which `R_min ≤ 0` although it started positive.
    pub positivity_lost_at: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Keeps the first state and an evenly spread subset of the prefix so that
/// at most `cap` states remain, never touching the final `KEEP_TAIL`.
fn thin(states: &mut Vec<FlowState>, cap: usize) {
    if states.len() <= cap {
        return;
    }
    let tail = KEEP_TAIL.min(states.len());
    let prefix = states.len() - tail;
    let keep = cap - tail;
    let mut out = Vec::with_capacity(cap);
    let mut last_idx = usize::MAX;
    for i in 0..keep {
        let idx = if keep == 1 {
            0
        } else {
            (i as f64 * (prefix - 1) as f64 / (keep - 1) as f64).round() as usize
        };
        if idx != last_idx {
            out.push(states[idx].clone());
            last_idx = idx;
        }
    }
    out.extend(states.drain(prefix..));
    *states = out;
}

fn rk4(f: &dyn Fn(&[f64]) -> Result<Vec<f64>>, y: &[f64], dt: f64) -> Result<Vec<f64>> {
    let axpy = |a: &[f64], k: &[f64], s: f64| a.iter().zip(k).map(|(x, v)| x + s * v).collect::<Vec<_>>();
    let k1 = f(y)?;
    let k2 = f(&axpy(y, &k1, 0.5 * dt))?;
    let k3 = f(&axpy(y, &k2, 0.5 * dt))?;
    let k4 = f(&axpy(y, &k3, dt))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

pub(crate) fn ode_field(spec: &GeometrySpec) -> impl Fn(&[f64]) -> Result<Vec<f64>> + '_ {
    move |p: &[f64]| match ricci_flow_rhs(&with_ode_params(spec, p)?)? {
        ParamDerivative::Ode(d) => Ok(d),
        _ => unreachable!(),
    }
}

/// Fixed-step RK4 on the ODE parameters.
pub(crate) fn rk4_fixed(spec: &GeometrySpec, total: f64, substeps: usize) -> Result<GeometrySpec> {
    let f = ode_field(spec);
    let mut p = ode_params(spec).ok_or_else(|| GeomError::NotApplicable("not an ODE preset".into()))?;
    let dt = total / substeps as f64;
    for _ in 0..substeps {
        p = rk4(&f, &p, dt)?;
    }
    with_ode_params(spec, &p)
}

struct Stepper<'a> {
    controls: &'a Controls,
    t_end: f64,
    rm0: f64,
    threshold: f64,
}

enum StepOutcome {
    Accepted { spec: GeometrySpec, dt_used: f64, dt_next: f64 },
    Singular,
    Degenerate,
}

impl Stepper<'_> {
    fn cfl(&self, rm: f64) -> f64 {
        if rm > 0.0 {
            self.controls.safety / rm
        } else {
            f64::INFINITY
        }
    }

    fn ode_step(&self, spec: &GeometrySpec, t: f64, rm: f64, dt_try: f64) -> StepOutcome {
        let f = ode_field(spec);
        let Some(p) = ode_params(spec) else { return StepOutcome::Degenerate };
        let mut dt = dt_try.min(self.cfl(rm));
        loop {
            let h = dt.min(self.t_end - t);
            let trial = (|| -> Result<(Vec<f64>, f64)> {
                let full = rk4(&f, &p, h)?;
                let half = rk4(&f, &rk4(&f, &p, 0.5 * h)?, 0.5 * h)?;
                let mut err = 0.0_f64;
                for (a, b) in full.iter().zip(&half) {
                    let scale = b.abs().max(1e-12);
                    err = err.max((b - a).abs() / (15.0 * scale));
                }
                let y: Vec<f64> = half.iter().zip(&full).map(|(b, a)| b + (b - a) / 15.0).collect();
                Ok((y, err))
            })();
            match trial {
                Ok((y, err)) if err <= self.controls.rtol && y.iter().all(|v| v.is_finite()) => {
                    let grow = if err == 0.0 {
                        4.0
                    } else {
                        (0.9 * (self.controls.rtol / err).powf(0.2)).clamp(0.2, 4.0)
                    };
                    return match with_ode_params(spec, &y) {
                        Ok(s) => StepOutcome::Accepted {
                            spec: s,
                            dt_used: h,
                            dt_next: (dt * grow).max(self.controls.dt_min),
                        },
                        Err(_) => StepOutcome::Degenerate,
                    };
                }
                _ => {
                    dt *= 0.25;
                    if dt < self.controls.dt_min {
                        return if rm > self.rm0 { StepOutcome::Singular } else { StepOutcome::Degenerate };
                    }
                }
            }
        }
    }

    fn pde_step(&self, w: &WarpedProduct, t: f64, rm: f64, dt_try: f64) -> StepOutcome {
        let len = w.x[w.len() - 1] - w.x[0];
        let h = len / (w.len() - 1) as f64;
        let ds = w.phi[1] * h;
        let mut dt = dt_try.min(self.cfl(rm)).min(0.2 * ds * ds);
        if t + dt >= self.t_end {
            dt = self.t_end - t;
        }
        let Ok((log_rate, psi_rate)) = params::warped_rhs(w) else {
            return StepOutcome::Degenerate;
        };
        let mut next = w.clone();
        let scale = 1.0 + dt * log_rate;
        next.phi.iter_mut().for_each(|p| *p *= scale);
        for (p, r) in next.psi.iter_mut().zip(&psi_rate) {
            *p += dt * r;
        }
        params::enforce_poles(&mut next);
        if next.validate().is_err() {
            return if rm > self.rm0 { StepOutcome::Singular } else { StepOutcome::Degenerate };
        }
        StepOutcome::Accepted {
            spec: GeometrySpec::Warped(next),
            dt_used: dt,
            dt_next: dt_try,
        }
    }
}

/// Integrates the Ricci flow from `spec` until `t_end`, a curvature blow-up
/// or a degenerate metric.
pub fn integrate(spec: &GeometrySpec, t_end: f64, controls: &Controls) -> Result<Trajectory> {
    controls.validate()?;
    spec.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(GeomError::InvalidParameter(format!("t_end {t_end}")));
    }
    if matches!(spec, GeometrySpec::Chart(_)) {
        return Err(GeomError::NotApplicable(
            "coordinate charts are static; flow a preset instead".into(),
        ));
    }
    let summary = summarize(spec)?;
    let rm0 = summary.rm_max;
    let mut threshold = controls.safety / controls.dt_min;
    if rm0 > 0.0 {
        threshold = threshold.min(controls.blowup_ratio * rm0);
    }
    let stepper = Stepper {
        controls,
        t_end,
        rm0,
        threshold,
    };
    let positive_start = summary.r_min > 0.0;
    let mut states = vec![FlowState {
        t: 0.0,
        spec: spec.clone(),
        summary,
    }];
    let mut traj_status = Status::HorizonReached;
    let mut max_steps_hit = false;
    let mut positivity_lost_at = None;
    let mut t = 0.0;
    let mut dt = controls.dt_init;
    let mut cur = spec.clone();
    let mut rm = rm0;
    let mut steps = 0;
    loop {
        if t >= t_end {
            break;
        }
        if steps >= controls.max_steps {
            max_steps_hit = true;
            break;
        }
        let outcome = match &cur {
            GeometrySpec::Warped(w) => stepper.pde_step(w, t, rm, dt),
            _ => stepper.ode_step(&cur, t, rm, dt),
        };
        match outcome {
            StepOutcome::Accepted { spec: next, dt_used, dt_next } => {
                let Ok(summary) = summarize(&next) else {
                    traj_status = if rm > rm0 { Status::Singular } else { Status::Degenerate };
                    break;
                };
                t = if t + dt_used >= t_end { t_end } else { t + dt_used };
                steps += 1;
                dt = dt_next;
                rm = summary.rm_max;
                if positive_start && positivity_lost_at.is_none() && summary.r_min <= 0.0 {
                    positivity_lost_at = Some(t);
                }
                cur = next.clone();
                states.push(FlowState { t, spec: next, summary });
                if states.len() > 2 * STORE_CAP {
                    thin(&mut states, STORE_CAP);
                }
                if rm > stepper.threshold {
                    traj_status = Status::Singular;
                    break;
                }
            }
            StepOutcome::Singular => {
                traj_status = Status::Singular;
                break;
            }
            StepOutcome::Degenerate => {
                traj_status = Status::Degenerate;
                break;
            }
        }
    }
    thin(&mut states, STORE_CAP);
    let mut traj = Trajectory {
        states,
        t_est: None,
        status: traj_status,
        max_steps_hit,
        accepted_steps: steps,
        positivity_lost_at,
    };
    if traj.status == Status::Singular {
        traj.t_est = estimate_singular_time(&traj).ok();
    }
    Ok(traj)
}
