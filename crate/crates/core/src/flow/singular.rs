//! Singular-time estimation, Type I/II classification and dilation sequences.

use super::{CurvSummary, Status, Trajectory};
use crate::error::{GeomError, Result};

/// Relative spread of the running max below which a blow-up is Type I.
pub const TYPE_I_SPREAD: f64 = 0.2;
/// Growth of the running max above which a blow-up is Type II.
pub const TYPE_II_GROWTH: f64 = 5.0;
/// Decades of curvature growth required before classifying.
pub const DECADES: f64 = 2.0;
/// Anchors must carry at least this fraction of the running sup of `|Rm|`.
pub const ANCHOR_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityKind {
    TypeI,
    TypeII,
    NoSingularity,
    Inconclusive,
}

impl SingularityKind {
    pub fn tag(self) -> &'static str {
        match self {
            SingularityKind::TypeI => "TypeI",
            SingularityKind::TypeII => "TypeII",
            SingularityKind::NoSingularity => "NoSingularity",
            SingularityKind::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularityReport {
    pub t_est: Option<f64>,
    pub kind: SingularityKind,
    /// `sup (T_est − t)|Rm|_max` over stored states before `T_est`.
    pub sup_ratio: Option<f64>,
    /// Relative spread of the running max over the final two decades.
    pub spread: Option<f64>,
    pub r_blown_up: bool,
    pub w_over_r_blown_up: bool,
}

/// Least-squares line through `1/|Rm|_max` over the last decade of growth,
/// extrapolated to zero.
pub fn estimate_singular_time(traj: &Trajectory) -> Result<f64> {
    let last = traj.last().summary.rm_max;
    if !(last > 0.0) {
        return Err(GeomError::InsufficientData("no curvature".into()));
    }
    let window: Vec<(f64, f64)> = traj
        .states
        .iter()
        .filter(|s| s.summary.rm_max >= last / 10.0)
        .map(|s| (s.t, 1.0 / s.summary.rm_max))
        .collect();
    if window.len() < 3 {
        return Err(GeomError::InsufficientData("fewer than 3 states in the last decade".into()));
    }
    let k = window.len() as f64;
    let (mt, my) = window.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / k, b + y / k));
    let (mut sty, mut stt) = (0.0, 0.0);
    for (t, y) in &window {
        sty += (t - mt) * (y - my);
        stt += (t - mt) * (t - mt);
    }
    let slope = sty / stt;
    if !(slope < 0.0) {
        return Err(GeomError::InsufficientData("curvature is not growing".into()));
    }
    Ok(mt - my / slope)
}

fn blown_up(first: f64, last: f64) -> bool {
    last.is_finite() && last > 1e-9 && last >= 10.0 * first.max(0.0)
}

pub fn classify(traj: &Trajectory) -> SingularityReport {
    let first = &traj.states[0].summary;
    let last = &traj.last().summary;
    let wr = |s: &CurvSummary| s.w_over_r_max.unwrap_or(f64::NAN);
    let mut report = SingularityReport {
        t_est: None,
        kind: SingularityKind::NoSingularity,
        sup_ratio: None,
        spread: None,
        r_blown_up: false,
        w_over_r_blown_up: false,
    };
    if traj.status != Status::Singular {
        return report;
    }
    report.r_blown_up = blown_up(first.r_max, last.r_max);
    report.w_over_r_blown_up = blown_up(wr(first), wr(last));
    report.kind = SingularityKind::Inconclusive;
    let Ok(t_est) = traj.t_est.map_or_else(|| estimate_singular_time(traj), Ok) else {
        return report;
    };
    report.t_est = Some(t_est);
    let ratios: Vec<(f64, f64)> = traj
        .states
        .iter()
        .filter(|s| s.t < t_est)
        .map(|s| (s.summary.rm_max, (t_est - s.t) * s.summary.rm_max))
        .collect();
    report.sup_ratio = ratios.iter().map(|r| r.1).reduce(f64::max);
    if !(first.rm_max > 0.0 && last.rm_max >= 10f64.powf(DECADES) * first.rm_max) {
        return report;
    }
    let floor = last.rm_max / 10f64.powf(DECADES);
    let mut running: Vec<f64> = Vec::new();
    for (_, r) in ratios.iter().filter(|(rm, _)| *rm >= floor) {
        let m = running.last().map_or(*r, |p: &f64| p.max(*r));
        running.push(m);
    }
    let (Some(&lo), Some(&hi)) = (running.first(), running.last()) else {
        return report;
    };
    if !(lo > 0.0) {
        return report;
    }
    let spread = (hi - lo) / lo;
    report.spread = Some(spread);
    report.kind = if spread < TYPE_I_SPREAD {
        SingularityKind::TypeI
    } else if hi > TYPE_II_GROWTH * lo {
        SingularityKind::TypeII
    } else {
        SingularityKind::Inconclusive
    };
    report
}

/// One dilation anchor `(t_i, x_i, K_i)` with the rescaled summaries of
/// `K_i · g(t_i + s/K_i)` for `|s| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub t: f64,
    pub state_index: usize,
    pub point: usize,
    pub k: f64,
    pub rescaled: Vec<(f64, CurvSummary)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationSequence {
    pub anchors: Vec<Anchor>,
}

/// Divides every curvature magnitude by `k`, as for the metric `k·g`.
pub fn rescale_summary(s: &CurvSummary, k: f64) -> CurvSummary {
    let mut out = *s;
    out.r_min /= k;
    out.r_max /= k;
    out.e_max /= k;
    out.w_max /= k;
    out.rm_max /= k;
    out.peak.r /= k;
    out.peak.e /= k;
    out.peak.w /= k;
    out.peak.rm /= k;
    out
}

/// Anchors at geometrically spaced curvature levels between the initial and
/// final `|Rm|_max`, each at the first eligible state reaching its level.
pub fn dilate(traj: &Trajectory, anchor_count: usize) -> Result<DilationSequence> {
    if traj.status != Status::Singular {
        return Err(GeomError::NotApplicable("dilation needs a singular trajectory".into()));
    }
    if anchor_count == 0 {
        return Err(GeomError::InvalidParameter("anchor_count must be positive".into()));
    }
    let states = &traj.states;
    let mut sup = 0.0_f64;
    let eligible: Vec<usize> = (0..states.len())
        .filter(|&i| {
            let rm = states[i].summary.rm_max;
            sup = sup.max(rm);
            rm > 0.0 && rm >= ANCHOR_FRACTION * sup
        })
        .collect();
    let (lo, hi) = (states[0].summary.rm_max, traj.last().summary.rm_max);
    if !(lo > 0.0) {
        return Err(GeomError::InsufficientData("zero initial curvature".into()));
    }
    let mut picks: Vec<usize> = Vec::new();
    for k in 0..anchor_count {
        let frac = if anchor_count == 1 { 1.0 } else { k as f64 / (anchor_count - 1) as f64 };
        let level = lo * (hi / lo).powf(frac);
        if let Some(&i) = eligible.iter().find(|&&i| states[i].summary.rm_max >= level * (1.0 - 1e-12)) {
            if picks.last() != Some(&i) {
                picks.push(i);
            }
        }
    }
    let anchors = picks
        .into_iter()
        .map(|i| {
            let a = &states[i];
            let k = a.summary.rm_max;
            let rescaled = states
                .iter()
                .map(|s| ((s.t - a.t) * k, s))
                .filter(|(s, _)| s.abs() <= 1.0)
                .map(|(s, st)| (s, rescale_summary(&st.summary, k)))
                .collect();
            Anchor {
                t: a.t,
                state_index: i,
                point: a.summary.peak.point,
                k,
                rescaled,
            }
        })
        .collect();
    Ok(DilationSequence { anchors })
}
