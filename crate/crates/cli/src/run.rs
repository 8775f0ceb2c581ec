//! Scenario pipeline: integrate → classify → pinching suite → dilate, and the
//! CSV/JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pinchlab::curvature::{decompose, isotropic_min, weitzenbock, GeometrySpec};
use pinchlab::flow::{classify, dilate, integrate, pointwise, verify_ricci_evolution, verify_scalar_evolution, Status, Trajectory};
use pinchlab::pinching::{
    build_trace, check_pinching_estimate, dilation_ratios, sharp_cubic_constant, verify_evolution_identity, Constant,
    PinchConfig, PinchTrace, Provenance,
};
use pinchlab::{GeomError, Result};

use crate::config::{PinchOverrides, ScenarioConfig, FORMAT_VERSION};
use crate::report::{
    AnchorRecord, ConstantsSection, DilationSection, IdentityResidual, PicSection, PinchingSection, RunReport,
    ViolationRecord,
};

pub const CSV_HEADER: &str = "t,R_min,R_max,E_max,W_max,Rm_max,f_max,phi,ratio_TminusT_times_Rm,W_over_R_runmax";

/// Random frames drawn for the isotropic-curvature check.
const PIC_SAMPLES: usize = 2000;
/// `|isotropic min|` below this is treated as undecided.
const PIC_CONCLUSIVE: f64 = 1e-6;
/// Residuals below this are rounding noise and carry no order information.
const RESIDUAL_FLOOR: f64 = 1e-9;
const ORDER_BAND: (f64, f64) = (1.5, 2.5);
const ANCHOR_TOL: f64 = 1e-9;

/// Everything a run produced; the report is what gets serialized.
pub struct ScenarioRun {
    pub report: RunReport,
    pub trajectory: Trajectory,
    pub trace: Option<PinchTrace>,
}

fn pinch_config(n: usize, max_f0: f64, o: &PinchOverrides) -> Result<PinchConfig> {
    let mut cfg = PinchConfig::defaults(n, max_f0)?;
    let user = |v: f64| Constant::new(v, Provenance::UserSet);
    if let Some(g) = o.gamma {
        cfg.gamma = g;
    }
    if let Some(v) = o.big_c1 {
        cfg.big_c1 = user(v);
    }
    if let Some(v) = o.c2 {
        cfg.c2 = user(v);
    }
    if let Some(v) = o.c3 {
        cfg.c3 = user(v);
    }
    if let Some(v) = o.c4 {
        cfg.c4 = user(v);
    }
    if let Some(v) = o.fd_step {
        cfg.fd_step = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn constants_section(cfg: &PinchConfig) -> ConstantsSection {
    ConstantsSection {
        gamma: cfg.gamma,
        c1: cfg.c1_cubic,
        big_c1: cfg.big_c1,
        c2: cfg.c2,
        big_c2: Constant::new(cfg.big_c2(), Provenance::Derived),
        c3: cfg.c3,
        c4: cfg.c4,
    }
}

fn order(a: f64, b: f64) -> Option<f64> {
    (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then(|| (a / b).log2())
}

type Check<'a> = Box<dyn Fn(&Trajectory, f64) -> Result<f64> + 'a>;

fn identity_residuals(traj: &Trajectory, h: f64, with_f: bool, warnings: &mut Vec<String>) -> Result<Vec<IdentityResidual>> {
    let mut checks: Vec<(&str, Check)> = vec![
        ("scalar_evolution", Box::new(verify_scalar_evolution)),
        ("ricci_evolution", Box::new(verify_ricci_evolution)),
    ];
    if with_f {
        checks.push(("f_evolution_gamma1", Box::new(|t, h| verify_evolution_identity(t, 1.0, h))));
        checks.push(("f_evolution_gamma2", Box::new(|t, h| verify_evolution_identity(t, 2.0, h))));
    }
    let mut out = Vec::new();
    for (name, check) in checks {
        let (a, b) = match (check(traj, h), check(traj, h / 2.0)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(GeomError::InsufficientData(m)), _) | (_, Err(GeomError::InsufficientData(m))) => {
                warnings.push(format!("{name} skipped: {m}"));
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let p = order(a, b);
        if a > RESIDUAL_FLOOR {
            if let Some(p) = p.filter(|p| !(ORDER_BAND.0..=ORDER_BAND.1).contains(p)) {
                warnings.push(format!("{name}: observed order {p:.3} outside [1.5, 2.5]"));
            }
        }
        out.push(IdentityResidual {
            name: name.to_string(),
            h,
            residual: a,
            residual_half_step: b,
            order: p,
        });
    }
    Ok(out)
}

fn pic_section(spec: &GeometrySpec, point: usize, seed: u64, failures: &mut Vec<String>) -> Result<PicSection> {
    let (m, rm) = spec.curvature_at(point)?;
    let d = decompose(&rm, &m)?;
    let iso = isotropic_min(&rm, &m, PIC_SAMPLES, seed)?;
    let (_, op) = weitzenbock(&rm, &d.ricci, &m)?;
    let w = op.min_eigenvalue()?;
    let signs_agree = (iso.value.abs() > PIC_CONCLUSIVE).then(|| (iso.value > 0.0) == (w > 0.0));
    if signs_agree == Some(false) {
        failures.push(format!(
            "isotropic minimum {} and Weitzenböck minimum {w} disagree in sign",
            iso.value
        ));
    }
    Ok(PicSection {
        point,
        isotropic_min: iso.value,
        weitzenbock_min: w,
        samples: PIC_SAMPLES,
        signs_agree,
    })
}

/// Runs one validated scenario end to end. Deterministic for a fixed config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let spec = cfg.geometry.build();
    let n = spec.dim();
    let traj = integrate(&spec, cfg.t_end, &cfg.controls)?;
    let sing = classify(&traj);
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    if traj.max_steps_hit {
        warnings.push(format!("max_steps = {} exhausted before t_end", cfg.controls.max_steps));
    }
    match traj.status {
        Status::Degenerate => failures.push(format!("metric degenerated at t = {}", traj.last().t)),
        Status::Singular if sing.t_est.is_none() => warnings.push("singular time could not be estimated".into()),
        _ => {}
    }
    if let Some(t) = traj.positivity_lost_at {
        failures.push(format!("positive scalar curvature lost at t = {t}"));
    }

    let initial = pointwise(&traj.states[0].spec)?;
    let r0_min = initial.iter().map(|p| p.r).fold(f64::INFINITY, f64::min);
    let positive = r0_min > 0.0;
    let max_f0 = positive.then(|| initial.iter().map(|p| (p.e / p.r).powi(2)).fold(0.0, f64::max));
    let pcfg = pinch_config(n, max_f0.unwrap_or(0.0), &cfg.pinch)?;
    if let Some(f0) = max_f0 {
        if !pcfg.admits_initial(f0) {
            warnings.push(format!(
                "C1 = {} violates C1 >= c1 = {} or C1^2 >= 4 max f(0) = {}",
                pcfg.big_c1.value,
                sharp_cubic_constant(n),
                4.0 * f0
            ));
        }
    }

    let mut pinching = PinchingSection {
        applied: false,
        skipped_reason: None,
        max_f0,
        worst_ratio: None,
        flagged: 0,
        signature_failures: Vec::new(),
        phi_clamped: 0,
    };
    let mut violation_list = Vec::new();
    let mut trace = None;
    if !positive {
        pinching.skipped_reason = Some(format!("R_min = {r0_min} is not positive at t = 0"));
    } else {
        match build_trace(&traj, &pcfg) {
            Ok(tr) => {
                let check = check_pinching_estimate(&tr, &pcfg)?;
                pinching.applied = true;
                pinching.worst_ratio = Some(check.worst_ratio);
                pinching.flagged = check.flagged;
                pinching.phi_clamped = tr.phi.iter().filter(|p| p.clamped).count();
                if !check.signature_failures.is_empty() {
                    failures.push(format!(
                        "maximum-principle signature failed at {} flagged samples",
                        check.signature_failures.len()
                    ));
                }
                if pinching.phi_clamped > 0 {
                    warnings.push(format!("Phi radicand clamped at {} samples", pinching.phi_clamped));
                }
                pinching.signature_failures = check.signature_failures;
                violation_list = check
                    .violations
                    .iter()
                    .map(|v| ViolationRecord {
                        t: v.t,
                        sqrt_f: v.sqrt_f,
                        phi: v.phi,
                        bound_rhs: v.bound_rhs,
                        margin: v.margin,
                    })
                    .collect();
                trace = Some(tr);
            }
            Err(GeomError::NonPositiveScalar { r }) => {
                pinching.skipped_reason = Some(format!("R = {r} reached zero along the flow"));
            }
            Err(e) => return Err(e),
        }
    }

    let mut dilation = None;
    if traj.status == Status::Singular {
        match dilate(&traj, cfg.anchors) {
            Ok(seq) => {
                for a in &seq.anchors {
                    let at = a.rescaled.iter().find(|(s, _)| *s == 0.0).map(|(_, s)| s.rm_max);
                    if !at.is_some_and(|rm| (rm - 1.0).abs() <= ANCHOR_TOL) {
                        failures.push(format!("anchor at t = {} is not normalized: |Rm| = {at:?}", a.t));
                    }
                }
                if let Some(tr) = &trace {
                    dilation = Some(match dilation_ratios(&seq, tr, &pcfg) {
                        Ok(d) => {
                            for a in d.anchors.iter().filter(|a| !a.holds) {
                                failures.push(format!(
                                    "dilation ratio |E|/|W|_max = {} exceeds {} at t = {}",
                                    a.e_over_wmax, a.rhs, a.t
                                ));
                            }
                            DilationSection {
                                anchors: d
                                    .anchors
                                    .iter()
                                    .map(|a| AnchorRecord {
                                        t: a.t,
                                        k: a.k,
                                        normalized_rm: a.normalized_rm,
                                        e_over_wmax: a.e_over_wmax,
                                        r_over_wmax: a.r_over_wmax,
                                        rhs: a.rhs,
                                        holds: a.holds,
                                    })
                                    .collect(),
                                skipped: d.skipped,
                                trends_to_zero: d.trends_to_zero,
                            }
                        }
                        Err(GeomError::NotApplicable(_)) => DilationSection {
                            anchors: Vec::new(),
                            skipped: seq.anchors.len(),
                            trends_to_zero: false,
                        },
                        Err(e) => return Err(e),
                    });
                }
            }
            Err(GeomError::InsufficientData(m)) => warnings.push(format!("no dilation sequence: {m}")),
            Err(e) => return Err(e),
        }
    }

    let pic = if n == 4 {
        let point = traj.states[0].summary.peak.point;
        Some(pic_section(&traj.states[0].spec, point, cfg.seed, &mut failures)?)
    } else {
        None
    };

    let identities = if spec.is_homogeneous() {
        identity_residuals(&traj, pcfg.fd_step, pinching.applied, &mut warnings)?
    } else {
        Vec::new()
    };

    let report = RunReport {
        format_version: FORMAT_VERSION,
        name: cfg.name.clone(),
        seed: cfg.seed,
        geometry: cfg.geometry.kind().to_string(),
        dim: n,
        status: traj.status.tag().to_string(),
        t_final: traj.last().t,
        accepted_steps: traj.accepted_steps,
        stored_states: traj.states.len(),
        max_steps_hit: traj.max_steps_hit,
        t_est: sing.t_est,
        singularity: sing.kind.tag().to_string(),
        sup_ratio: sing.sup_ratio,
        ratio_spread: sing.spread,
        r_blown_up: sing.r_blown_up,
        w_over_r_blown_up: sing.w_over_r_blown_up,
        pinching,
        violations: violation_list.len(),
        violation_list,
        dilation,
        pic,
        identities,
        constants: constants_section(&pcfg),
        warnings,
        invariant_failures: failures,
    };
    Ok(ScenarioRun {
        report,
        trajectory: traj,
        trace,
    })
}

fn cell(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        // `{:?}` is the shortest decimal that round-trips.
        let _ = write!(out, "{v:?}");
    }
}

/// CSV text: the header and one row per stored state. Pinching columns are
/// empty without a trace; the ratio column is empty without `T_est` or past it.
pub fn csv_text(traj: Option<&Trajectory>, trace: Option<&PinchTrace>, t_est: Option<f64>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let Some(traj) = traj else {
        return out;
    };
    for (i, st) in traj.states.iter().enumerate() {
        let s = &st.summary;
        let _ = write!(out, "{:?}", st.t);
        for v in [s.r_min, s.r_max, s.e_max, s.w_max, s.rm_max] {
            cell(&mut out, Some(v));
        }
        cell(&mut out, trace.map(|tr| tr.f2_max[i]));
        cell(&mut out, trace.map(|tr| tr.phi[i].value));
        cell(&mut out, t_est.filter(|t| st.t < *t).map(|t| (t - st.t) * s.rm_max));
        cell(&mut out, trace.map(|tr| tr.w_over_r_runmax[i]));
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)
}

pub fn emit_csv(traj: &Trajectory, trace: Option<&PinchTrace>, t_est: Option<f64>, path: &Path) -> std::io::Result<()> {
    write_file(path, csv_text(Some(traj), trace, t_est).as_bytes())
}

pub fn summary_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports hold only finite numbers");
    s.push('\n');
    s
}

pub fn emit_summary(report: &RunReport, path: &Path) -> std::io::Result<()> {
    write_file(path, summary_json(report).as_bytes())
}

pub fn parse_summary(text: &str) -> serde_json::Result<RunReport> {
    serde_json::from_str(text)
}

pub(crate) fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    s.push('\n');
    write_file(path, s.as_bytes())
}
