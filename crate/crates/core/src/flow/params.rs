//! Reduction of the Ricci flow to ODEs on preset parameters, and the
//! warped-product PDE right-hand side.

use crate::curvature::geometry::three_point;
use crate::curvature::{GeometrySpec, MilnorFrame, SphereFactor, WarpedProduct};
use crate::error::{GeomError, Result};
use crate::tensor::ricci_contraction;

/// Time derivative of the preset parameters under `∂g/∂t = −2Rc`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamDerivative {
    /// Constant curvature: `[dκ/dt]`; product: `[d(a²)/dt, d(b²)/dt]`;
    /// Milnor: `[dA/dt, dB/dt, dC/dt]`.
    Ode(Vec<f64>),
    /// Warped product in the uniform-`φ` gauge: rate of `φ` (shared by
    /// every node) and of `ψ` at every node (zero at the poles).
    Warped { phi_rate: f64, psi_rate: Vec<f64> },
    /// Coordinate chart: `−2Rc` at every interior node, in coordinates.
    Chart(Vec<(usize, crate::tensor::Sym2)>),
}

/// Parameter vector of an ODE preset.
pub fn ode_params(spec: &GeometrySpec) -> Option<Vec<f64>> {
    match spec {
        GeometrySpec::ConstantCurvature { kappa, .. } => Some(vec![*kappa]),
        GeometrySpec::ProductOfSpheres { first, second } => {
            Some(vec![first.radius * first.radius, second.radius * second.radius])
        }
        GeometrySpec::Milnor(m) => Some(m.coefficients().to_vec()),
        _ => None,
    }
}

/// Inverse of [`ode_params`].
pub fn with_ode_params(spec: &GeometrySpec, p: &[f64]) -> Result<GeometrySpec> {
    if p.iter().any(|v| !v.is_finite()) {
        return Err(GeomError::NonFinite("flow parameter".into()));
    }
    let out = match spec {
        GeometrySpec::ConstantCurvature { n, .. } => GeometrySpec::ConstantCurvature { n: *n, kappa: p[0] },
        GeometrySpec::ProductOfSpheres { first, second } => {
            if p[0] <= 0.0 || p[1] <= 0.0 {
                return Err(GeomError::NotPositiveDefinite);
            }
            GeometrySpec::ProductOfSpheres {
                first: SphereFactor::new(first.dim, p[0].sqrt()),
                second: SphereFactor::new(second.dim, p[1].sqrt()),
            }
        }
        GeometrySpec::Milnor(m) => {
            if p.iter().any(|v| *v <= 0.0) {
                return Err(GeomError::NotPositiveDefinite);
            }
            GeometrySpec::Milnor(MilnorFrame {
                group: m.group,
                a: p[0],
                b: p[1],
                c: p[2],
            })
        }
        _ => return Err(GeomError::NotApplicable("preset has no ODE parameters".into())),
    };
    Ok(out)
}

/// Squared length of each orthonormal frame vector in the fixed
/// (time-independent) frame: `e_i = F_i / sqrt(s_i)`.
pub fn frame_scales(spec: &GeometrySpec) -> Result<Vec<f64>> {
    match spec {
        GeometrySpec::ConstantCurvature { n, kappa } => {
            let s = if *kappa == 0.0 { 1.0 } else { 1.0 / kappa.abs() };
            Ok(vec![s; *n])
        }
        GeometrySpec::ProductOfSpheres { first, second } => {
            let mut v = vec![first.radius * first.radius; first.dim];
            v.extend(std::iter::repeat_n(second.radius * second.radius, second.dim));
            Ok(v)
        }
        GeometrySpec::Milnor(m) => Ok(m.coefficients().to_vec()),
        _ => Err(GeomError::NotApplicable("frame scales exist for homogeneous presets only".into())),
    }
}

fn ode_rhs(spec: &GeometrySpec) -> Result<Vec<f64>> {
    Ok(match spec {
        GeometrySpec::ConstantCurvature { n, kappa } => {
            // g = g0/κ, Rc = (n−1) g0 ⇒ d(1/κ)/dt = −2(n−1)
            vec![2.0 * (*n as f64 - 1.0) * kappa * kappa]
        }
        GeometrySpec::ProductOfSpheres { first, second } => vec![
            -2.0 * (first.dim as f64 - 1.0),
            -2.0 * (second.dim as f64 - 1.0),
        ],
        GeometrySpec::Milnor(m) => {
            let (metric, rm) = spec.curvature_at(0)?;
            let ric = ricci_contraction(&rm, &metric)?;
            m.coefficients()
                .iter()
                .enumerate()
                .map(|(i, s)| -2.0 * s * ric.get(i, i))
                .collect()
        }
        _ => unreachable!("ode_rhs called on a non-ODE preset"),
    })
}

/// Sectional curvatures of a warped product at every interior node, in the
/// uniform-`φ` gauge, with first and second arclength derivatives of `ψ`.
pub(crate) struct WarpedJet {
    pub psi_s: Vec<f64>,
    pub psi_ss: Vec<f64>,
}

pub(crate) fn warped_jet(w: &WarpedProduct) -> Result<WarpedJet> {
    let n = w.len();
    let mut psi_s = vec![0.0; n];
    let mut psi_ss = vec![0.0; n];
    for j in 1..n - 1 {
        let (d1, d2) = three_point(w.x[j - 1], w.x[j], w.x[j + 1]);
        let at = |v: &[f64], c: &[f64; 3]| c[0] * v[j - 1] + c[1] * v[j] + c[2] * v[j + 1];
        let phi = w.phi[j];
        let px = at(&w.psi, &d1);
        let pxx = at(&w.psi, &d2);
        let fx = at(&w.phi, &d1);
        psi_s[j] = px / phi;
        psi_ss[j] = (pxx - px * fx / phi) / (phi * phi);
    }
    Ok(WarpedJet { psi_s, psi_ss })
}

/// Ricci-flow rate for a warped product, written in the gauge where `φ`
/// stays uniform in `x`. With `V = v ∂_x` the tangential field that keeps
/// `φ` uniform,
///   `φ_t/φ = (n_f/L) ∫ ψ_ss/ψ dx`,
///   `ψ_t = ψ_ss − (n_f − 1)(1 − ψ_s²)/ψ + v ψ_x`,
///   `v(x) = x φ_t/φ − n_f ∫_0^x ψ_ss/ψ`,
/// where `L` is the coordinate length. The advection term is upwinded.
pub(crate) fn warped_rhs(w: &WarpedProduct) -> Result<(f64, Vec<f64>)> {
    let n = w.len();
    let nf = w.n_fiber as f64;
    let jet = warped_jet(w)?;
    let mut q = vec![0.0; n];
    for j in 1..n - 1 {
        if !(w.psi[j] > 0.0) {
            return Err(GeomError::NotPositiveDefinite);
        }
        q[j] = jet.psi_ss[j] / w.psi[j];
    }
    q[0] = 2.0 * q[1] - q[2];
    q[n - 1] = 2.0 * q[n - 2] - q[n - 3];
    let mut cum = vec![0.0; n];
    for j in 1..n {
        cum[j] = cum[j - 1] + 0.5 * (q[j] + q[j - 1]) * (w.x[j] - w.x[j - 1]);
    }
    let length = w.x[n - 1] - w.x[0];
    let log_rate = nf * cum[n - 1] / length;
    let mut psi_rate = vec![0.0; n];
    for j in 1..n - 1 {
        let v = (w.x[j] - w.x[0]) * log_rate - nf * cum[j];
        let px_up = if v > 0.0 {
            (w.psi[j + 1] - w.psi[j]) / (w.x[j + 1] - w.x[j])
        } else {
            (w.psi[j] - w.psi[j - 1]) / (w.x[j] - w.x[j - 1])
        };
        let ps = jet.psi_s[j];
        psi_rate[j] = jet.psi_ss[j] - (nf - 1.0) * (1.0 - ps * ps) / w.psi[j] + v * px_up;
    }
    Ok((log_rate, psi_rate))
}

/// Re-imposes the pole conditions `ψ = 0`, `ψ_s = ±1`: the node next to each
/// pole is set from the odd expansion `ψ = s + c s³` fitted through the
/// second node.
pub(crate) fn enforce_poles(w: &mut WarpedProduct) {
    let n = w.len();
    w.psi[0] = 0.0;
    w.psi[n - 1] = 0.0;
    for (pole, first, second) in [(0, 1, 2), (n - 1, n - 2, n - 3)] {
        let s1 = (w.x[first] - w.x[pole]).abs() * w.phi[first];
        let s2 = (w.x[second] - w.x[pole]).abs() * w.phi[second];
        let c3 = (w.psi[second] - s2) / (s2 * s2 * s2);
        w.psi[first] = s1 + c3 * s1 * s1 * s1;
    }
}

/// Ricci-flow right-hand side on the preset parameters.
pub fn ricci_flow_rhs(spec: &GeometrySpec) -> Result<ParamDerivative> {
    spec.validate().map_err(|e| match e {
        GeomError::InvalidGeometry(_) => GeomError::Degenerate { t: f64::NAN },
        other => other,
    })?;
    match spec {
        GeometrySpec::Warped(w) => {
            let (log_rate, psi_rate) = warped_rhs(w)?;
            Ok(ParamDerivative::Warped {
                phi_rate: log_rate * w.phi[1],
                psi_rate,
            })
        }
        GeometrySpec::Chart(c) => {
            let mut out = Vec::new();
            for p in c.interior_points() {
                let (m, rm) = c.curvature_at(p)?;
                out.push((p, ricci_contraction(&rm, &m)?.scaled(-2.0)));
            }
            Ok(ParamDerivative::Chart(out))
        }
        _ => Ok(ParamDerivative::Ode(ode_rhs(spec)?)),
    }
}
