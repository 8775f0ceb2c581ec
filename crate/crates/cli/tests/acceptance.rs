//! Acceptance gate: one PASS/FAIL line per criterion, each at its stated
//! tolerance and runtime budget. Run with `--nocapture` to see the lines.

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use pinchlab::curvature::{GeometrySpec, MilnorFrame, MilnorGroup, SphereFactor, WarpedProduct};
use pinchlab::flow::{classify, dilate, integrate, pointwise, verify_ricci_evolution, verify_scalar_evolution, Controls, SingularityKind, Status, Trajectory};
use pinchlab::pinching::{
    build_trace, check_pinching_estimate, dilation_ratios, sharp_cubic_constant, verify_evolution_identity, PinchConfig,
};
use pinchlab_cli::suites::{cubic_check, decomposition_stats, kn_norm_defect, pic_agreement, preset_pic, q_vanishing};
use pinchlab_cli::{run_batch, BatchOptions};

const SEED: u64 = 20_261_016;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn s4() -> GeometrySpec {
    GeometrySpec::ConstantCurvature { n: 4, kappa: 1.0 }
}

fn product(b: f64) -> GeometrySpec {
    GeometrySpec::ProductOfSpheres {
        first: SphereFactor::new(2, 1.0),
        second: SphereFactor::new(2, b),
    }
}

fn su2(a: f64, b: f64, c: f64) -> GeometrySpec {
    GeometrySpec::Milnor(MilnorFrame {
        group: MilnorGroup::Su2,
        a,
        b,
        c,
    })
}

fn neckpinch() -> (GeometrySpec, Controls) {
    let controls = Controls {
        blowup_ratio: 1e3,
        ..Controls::default()
    };
    (GeometrySpec::Warped(WarpedProduct::dumbbell(3, 256, 0.1, 1.0)), controls)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn decomposition() -> Outcome {
    let mut worst = [0.0_f64; 4];
    for n in 4..=6 {
        let s = decomposition_stats(n, 1000, SEED + n as u64).unwrap();
        for (w, v) in worst.iter_mut().zip([s.reconstruction, s.orthogonality, s.weyl_trace, s.formula]) {
            *w = w.max(v);
        }
    }
    outcome(
        worst.iter().all(|v| *v <= 1e-10),
        format!(
            "n=4..6 x 1000: reconstruction {:.1e}, orthogonality {:.1e}, Weyl trace {:.1e}, coordinate formula {:.1e} (tol 1e-10)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn kn_norm() -> Outcome {
    let worst = (3..=6).map(|n| kn_norm_defect(n).unwrap()).fold(0.0, f64::max);
    outcome(worst <= 1e-12, format!("max |<g∘g,g∘g> − 8n(n−1)| = {worst:.1e} for n=3..6 (tol 1e-12)"))
}

fn closed_form_flows() -> Outcome {
    let t0 = Instant::now();
    let traj = integrate(&s4(), 0.15, &Controls::default()).unwrap();
    let last = traj.last();
    let GeometrySpec::ConstantCurvature { kappa, .. } = last.spec else {
        unreachable!()
    };
    let e_s4 = rel(1.0 / kappa, 1.0 - 6.0 * last.t);
    let s4_time = t0.elapsed();

    let t0 = Instant::now();
    let traj = integrate(&product(2f64.sqrt()), 0.495, &Controls::default()).unwrap();
    let (mut e_a, mut e_f) = (0.0_f64, 0.0_f64);
    for st in &traj.states {
        let GeometrySpec::ProductOfSpheres { first, .. } = &st.spec else {
            unreachable!()
        };
        e_a = e_a.max(rel(first.radius.powi(2), 1.0 - 2.0 * st.t));
        let p = &pointwise(&st.spec).unwrap()[0];
        let f = (p.e / p.r).powi(2);
        e_f = e_f.max(rel(f, (1.0 / (2.0 * (3.0 - 4.0 * st.t))).powi(2)));
    }
    let prod_time = t0.elapsed();
    let budget = Duration::from_secs(5);
    outcome(
        last.t == 0.15 && traj.last().t == 0.495 && e_s4 <= 1e-6 && e_a <= 1e-6 && e_f <= 1e-6 && s4_time < budget && prod_time < budget,
        format!(
            "S⁴ r² rel err {e_s4:.1e} at t=0.15 ({:.2}s); product a² {e_a:.1e}, f {e_f:.1e} up to 0.99T ({:.2}s) (tol 1e-6, 5 s each)",
            s4_time.as_secs_f64(),
            prod_time.as_secs_f64()
        ),
    )
}

fn convergence_orders() -> Outcome {
    type Check = fn(&Trajectory, f64) -> pinchlab::Result<f64>;
    let checks: [(&str, Check); 4] = [
        ("R", verify_scalar_evolution),
        ("Rc", verify_ricci_evolution),
        ("f γ=1", |t, h| verify_evolution_identity(t, 1.0, h)),
        ("f γ=2", |t, h| verify_evolution_identity(t, 2.0, h)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, spec) in [("SU(2) 2,1,1", su2(2.0, 1.0, 1.0)), ("S²×S²(√2)", product(2f64.sqrt()))] {
        let traj = integrate(&spec, 10.0, &Controls::default()).unwrap();
        for (name, f) in checks {
            let r: Vec<f64> = [1e-3, 5e-4, 2.5e-4].iter().map(|&h| f(&traj, h).unwrap()).collect();
            let p = [(r[0] / r[1]).log2(), (r[1] / r[2]).log2()];
            let ok = p.iter().all(|p| (p - 2.0).abs() <= 0.5);
            pass &= ok;
            parts.push(format!("{label} {name}: {:.3}/{:.3}", p[0], p[1]));
        }
    }
    outcome(pass, format!("orders (2.0 ± 0.5): {}", parts.join(", ")))
}

fn q_vanishes() -> Outcome {
    let worst = (3..=6).map(|n| q_vanishing(n, 200, SEED + n as u64).unwrap()).fold(0.0, f64::max);
    outcome(worst <= 1e-10, format!("max |Q|/R⁴ on Einstein inputs, n=3..6: {worst:.1e} (tol 1e-10)"))
}

fn positive_presets() -> Vec<(String, GeometrySpec, Controls)> {
    let d = Controls::default();
    let mut v = vec![("S⁴".to_string(), s4(), d)];
    for n in 3..=6 {
        v.push((format!("S^{n}"), GeometrySpec::ConstantCurvature { n, kappa: 1.0 }, d));
    }
    v.push(("S²×S²".into(), product(1.0), d));
    v.push(("S²×S²(√2)".into(), product(2f64.sqrt()), d));
    v.push(("SU(2) 2,1,1".into(), su2(2.0, 1.0, 1.0), d));
    v.push(("SU(2) 1.2,1,1".into(), su2(1.2, 1.0, 1.0), d));
    v.push(("SU(2) 1.5,1.2,0.8".into(), su2(1.5, 1.2, 0.8), d));
    let (np, c) = neckpinch();
    v.push(("neckpinch".into(), np, c));
    v
}

fn default_config(traj: &Trajectory) -> PinchConfig {
    let pts = pointwise(&traj.states[0].spec).unwrap();
    let f0 = pts.iter().map(|p| (p.e / p.r).powi(2)).fold(0.0, f64::max);
    PinchConfig::defaults(traj.states[0].spec.dim(), f0).unwrap()
}

fn pinching_estimate() -> Outcome {
    let (mut violations, mut sig, mut flagged, mut worst) = (0, 0, 0, 0.0_f64);
    let mut pass = true;
    let presets = positive_presets();
    for (name, spec, controls) in &presets {
        let traj = integrate(spec, 10.0, controls).unwrap();
        let cfg = default_config(&traj);
        let trace = build_trace(&traj, &cfg).unwrap();
        let chk = check_pinching_estimate(&trace, &cfg).unwrap();
        if !chk.violations.is_empty() || !chk.signature_failures.is_empty() {
            eprintln!("  {name}: {} violations, {} signature failures", chk.violations.len(), chk.signature_failures.len());
            pass = false;
        }
        pass &= traj.status == Status::Singular;
        violations += chk.violations.len();
        sig += chk.signature_failures.len();
        flagged += chk.flagged;
        worst = worst.max(chk.worst_ratio);
    }
    outcome(
        pass,
        format!(
            "{} trajectories: {violations} violations of √f ≤ Φ, {flagged} flagged samples, {sig} signature failures, max √f/Φ = {worst:.4}",
            presets.len()
        ),
    )
}

fn cubic_constants() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 3..=6 {
        let c = cubic_check(n, 10_000, SEED + n as u64).unwrap();
        let gap = (c.sharp - c.refined) / c.sharp;
        // "Never exceeds" up to rounding in the last bits.
        let ok = (-1e-12..=0.01).contains(&gap)
            && c.sampled <= c.sharp * (1.0 + 1e-12)
            && c.extremal_defect <= 1e-9
            && c.sharp == sharp_cubic_constant(n);
        pass &= ok;
        parts.push(format!(
            "n={n}: sampled {:.4}, refined {:.6} vs {:.6} (gap {gap:.1e}), extremal {:.0e}",
            c.sampled, c.refined, c.sharp, c.extremal_defect
        ));
    }
    outcome(pass, parts.join("; "))
}

fn pic_equivalence() -> Outcome {
    let a = pic_agreement(1000, SEED).unwrap();
    let s3s1 = GeometrySpec::ProductOfSpheres {
        first: SphereFactor::new(3, 1.0),
        second: SphereFactor::new(1, 1.0),
    };
    let (iso_p, w_p) = preset_pic(&s3s1, SEED).unwrap();
    let (iso_f, w_f) = preset_pic(&GeometrySpec::ConstantCurvature { n: 4, kappa: 0.0 }, SEED).unwrap();
    outcome(
        a.agree == a.conclusive && a.conclusive > 0 && iso_p > 0.0 && w_p >= 0.0 && iso_f == 0.0 && w_f == 0.0,
        format!(
            "{}/{} conclusive samples agree ({} PIC, {} not); S³×S¹ iso {iso_p:.4}, P_min {w_p:.4}; T⁴ {iso_f} and {w_f}",
            a.agree,
            a.conclusive,
            a.positive,
            a.conclusive - a.positive
        ),
    )
}

fn type_one() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec, t_exact) in [("S⁴", s4(), 1.0 / 6.0), ("S²×S²(√2)", product(2f64.sqrt()), 0.5)] {
        let rep = classify(&integrate(&spec, 10.0, &Controls::default()).unwrap());
        let t_est = rep.t_est.unwrap_or(f64::NAN);
        let spread = rep.spread.unwrap_or(f64::NAN);
        pass &= rep.kind == SingularityKind::TypeI && spread <= 0.2 && rel(t_est, t_exact) <= 0.01;
        parts.push(format!(
            "{name}: {} spread {spread:.1e}, T_est {t_est:.6} (rel err {:.1e})",
            rep.kind.tag(),
            rel(t_est, t_exact)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn dilation() -> Outcome {
    let (mut anchors, mut ratio_checked, mut norm_worst) = (0, 0, 0.0_f64);
    let mut pass = true;
    for (name, spec, controls) in positive_presets() {
        let traj = integrate(&spec, 10.0, &controls).unwrap();
        if traj.status != Status::Singular {
            continue;
        }
        let seq = dilate(&traj, 8).unwrap();
        for a in &seq.anchors {
            let at = a.rescaled.iter().find(|(s, _)| *s == 0.0).unwrap().1;
            norm_worst = norm_worst.max((at.rm_max - 1.0).abs());
            anchors += 1;
        }
        if traj.states.iter().all(|s| !(s.summary.w_max > 1e-10 * s.summary.rm_max)) {
            continue;
        }
        let cfg = default_config(&traj);
        let trace = build_trace(&traj, &cfg).unwrap();
        let d = dilation_ratios(&seq, &trace, &cfg).unwrap();
        for a in &d.anchors {
            ratio_checked += 1;
            if !a.holds {
                eprintln!("  {name}: |E|/|W|max {} > {} at t = {}", a.e_over_wmax, a.rhs, a.t);
                pass = false;
            }
        }
    }
    pass &= norm_worst <= 1e-9 && ratio_checked > 0;
    outcome(
        pass,
        format!("{ratio_checked} anchors with |W|>0 checked, all within C1·R/|W| + C2·√(R/|W|); {anchors} anchors normalized to |Rm| = 1 within {norm_worst:.1e}"),
    )
}

fn determinism() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut configs: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    configs.sort();
    let outs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (i, out) in outs.iter().enumerate() {
        let opts = BatchOptions {
            out_dir: out.path().to_path_buf(),
            threads: Some(if i == 0 { 1 } else { 4 }),
            ..BatchOptions::default()
        };
        run_batch(&configs, &opts).unwrap();
    }
    let mut files = 0;
    let mut pass = true;
    let mut walk = vec![PathBuf::new()];
    while let Some(rel) = walk.pop() {
        for e in fs::read_dir(outs[0].path().join(&rel)).unwrap() {
            let e = e.unwrap();
            let r = rel.join(e.file_name());
            if e.file_type().unwrap().is_dir() {
                walk.push(r);
            } else if r.file_name().unwrap() != "index.json" {
                files += 1;
                let same = fs::read(outs[0].path().join(&r)).unwrap() == fs::read(outs[1].path().join(&r)).unwrap_or_default();
                pass &= same;
            }
        }
    }
    pass &= files == 2 * configs.len();
    outcome(pass, format!("{} scenarios run twice (1 and 4 threads): {files} CSV/summary files byte-identical", configs.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 11] = [
        ("decomposition suite", decomposition, 30),
        ("KN norm identity", kn_norm, 1),
        ("closed-form flow oracles", closed_form_flows, 10),
        ("evolution-identity convergence", convergence_orders, 60),
        ("Q vanishes on Einstein", q_vanishes, 5),
        ("pinching estimate", pinching_estimate, 300),
        ("cubic constants", cubic_constants, 30),
        ("PIC/Weitzenböck equivalence", pic_equivalence, 120),
        ("Type I classification", type_one, 10),
        ("dilation ratios", dilation, 10),
        ("determinism", determinism, 120),
    ];
    let mut failed = Vec::new();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = run();
        let secs = t0.elapsed().as_secs_f64();
        let pass = o.pass && secs < *budget as f64;
        println!(
            "criterion {:>2} {} {name}: {} [{secs:.2}s / {budget}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
