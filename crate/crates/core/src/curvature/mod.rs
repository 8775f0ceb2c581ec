//! Pointwise curvature: the orthogonal decomposition
//! `Rm = R/(2n(n−1)) g∘g + 1/(n−2) E∘g + W`, the Weitzenböck operator
//! `P = Rc∘g − 2Rm`, and sampled isotropic curvature.

pub mod chart;
pub mod geometry;
mod isotropic;

pub use chart::{conformal_rescale, CoordinateChart, MetricFn, ScalarFn};
pub use geometry::{GeometrySpec, MilnorFrame, MilnorGroup, SphereFactor, WarpedCurvature, WarpedProduct};
pub use isotropic::{isotropic_min, isotropic_quantity, IsotropicMin, MIN_ISOTROPIC_BUDGET};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{GeomError, Result};
use crate::tensor::{
    curv_inner, curv_norm, kn_product, ricci_contraction, scalar_contraction, traceless_part, AlgCurv,
    MetricPoint, Sym2,
};

/// Result of splitting a curvature tensor into its three orthogonal parts.
#[derive(Debug, Clone)]
pub struct CurvDecomp {
    pub n: usize,
    pub scalar: f64,
    pub ricci: Sym2,
    pub traceless: Sym2,
    pub weyl: AlgCurv,
    pub scalar_part: AlgCurv,
    pub einstein_part: AlgCurv,
    pub norm_e: f64,
    pub norm_w: f64,
    pub norm_rm: f64,
}

/// Measured departures from the decomposition invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompDefects {
    /// `max |scalar + einstein + W − Rm| / max(1, max |Rm|)`.
    pub reconstruction: f64,
    /// `max |g^{jl} W_{ijkl}| / max(1, |Rm|)`.
    pub weyl_trace: f64,
    /// Largest `|⟨A, B⟩| / (|A||B|)` over the three part pairs (0 when a part vanishes).
    pub orthogonality: f64,
}

impl CurvDecomp {
    pub fn defects(&self, rm: &AlgCurv, m: &MetricPoint) -> Result<DecompDefects> {
        let sum = self.scalar_part.add(&self.einstein_part)?.add(&self.weyl)?;
        let reconstruction = sum.max_diff(rm)? / rm.max_abs().max(1.0);
        let wtr = ricci_contraction(&self.weyl, m)?;
        let weyl_trace = wtr.max_abs() / self.norm_rm.max(1.0);
        let parts = [&self.scalar_part, &self.einstein_part, &self.weyl];
        let norms = [
            curv_norm(parts[0], m)?,
            curv_norm(parts[1], m)?,
            curv_norm(parts[2], m)?,
        ];
        let mut orthogonality = 0.0_f64;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let denom = norms[a] * norms[b];
            if denom > 0.0 {
                let c = curv_inner(parts[a], parts[b], m)?.abs() / denom;
                orthogonality = orthogonality.max(c);
            }
        }
        Ok(DecompDefects {
            reconstruction,
            weyl_trace,
            orthogonality,
        })
    }
}

/// Orthogonal decomposition of `rm`. In dimension 3 the Weyl part is zero by
/// definition and a nonzero remainder is reported as an inconsistency.
pub fn decompose(rm: &AlgCurv, m: &MetricPoint) -> Result<CurvDecomp> {
    rm.validate()?;
    let n = rm.n();
    let nf = n as f64;
    let ricci = ricci_contraction(rm, m)?;
    let scalar = scalar_contraction(&ricci, m)?;
    let traceless = traceless_part(&ricci, m)?;
    let g = m.g();
    let scalar_part = kn_product(g, g)?.scaled(scalar / (2.0 * nf * (nf - 1.0)));
    let einstein_part = kn_product(&traceless, g)?.scaled(1.0 / (nf - 2.0));
    let rest = rm.sub(&scalar_part)?.sub(&einstein_part)?;
    let weyl = if n == 3 {
        let residual = rest.max_abs();
        if residual > 1e-10 * rm.max_abs().max(1.0) {
            return Err(GeomError::Inconsistent(format!(
                "3D curvature not determined by Ricci (residual {residual:e})"
            )));
        }
        AlgCurv::zeros(3)
    } else {
        rest
    };
    Ok(CurvDecomp {
        n,
        scalar,
        norm_e: traceless.norm(m)?,
        norm_w: curv_norm(&weyl, m)?,
        norm_rm: curv_norm(rm, m)?,
        ricci,
        traceless,
        weyl,
        scalar_part,
        einstein_part,
    })
}

/// Weyl tensor from the explicit coordinate formula
/// `W = Rm − 1/(n−2) (Rc∘g) + R/((n−1)(n−2)) (g_ik g_jl − g_il g_jk)`.
pub fn weyl_coordinate_formula(rm: &AlgCurv, ric: &Sym2, scalar: f64, m: &MetricPoint) -> Result<AlgCurv> {
    let n = rm.n();
    if n < 4 {
        return Err(GeomError::UnsupportedDimension {
            n,
            reason: "the Weyl formula needs n >= 4",
        });
    }
    let nf = n as f64;
    let g = m.g().matrix();
    let r = ric.matrix();
    let a = 1.0 / (nf - 2.0);
    let b = scalar / ((nf - 1.0) * (nf - 2.0));
    Ok(AlgCurv::from_fn(n, |i, j, k, l| {
        rm.get(i, j, k, l)
            - a * (g[(i, k)] * r[(j, l)] + g[(j, l)] * r[(i, k)] - g[(i, l)] * r[(j, k)] - g[(j, k)] * r[(i, l)])
            + b * (g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)])
    }))
}

/// A curvature-type tensor viewed as a symmetric operator on 2-forms.
///
/// The matrix uses the lexicographic basis `{e_i ∧ e_j : i < j}` with
/// `M[(ij),(kl)] = T_{ijkl}`. Eigenvalues are taken relative to the induced
/// inner product `g_ik g_jl − g_il g_jk` on that basis, so in an orthonormal
/// frame they are the plain eigenvalues of `M`.
#[derive(Debug, Clone)]
pub struct TwoFormOperator {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
    pub matrix: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl TwoFormOperator {
    pub fn from_tensor(t: &AlgCurv, m: &MetricPoint) -> Result<Self> {
        let n = t.n();
        if m.n() != n {
            return Err(GeomError::DimensionMismatch { left: n, right: m.n() });
        }
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let big = pairs.len();
        let g = m.g().matrix();
        let mut matrix = DMatrix::zeros(big, big);
        let mut gram = DMatrix::zeros(big, big);
        for (a, &(i, j)) in pairs.iter().enumerate() {
            for (b, &(k, l)) in pairs.iter().enumerate() {
                matrix[(a, b)] = t.get(i, j, k, l);
                gram[(a, b)] = g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)];
            }
        }
        Ok(Self { n, pairs, matrix, gram })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let chol = nalgebra::Cholesky::new(self.gram.clone()).ok_or(GeomError::NotPositiveDefinite)?;
        let l = chol.l();
        let linv = l.clone().try_inverse().ok_or(GeomError::NotPositiveDefinite)?;
        let s = &linv * &self.matrix * linv.transpose();
        let s = (&s + s.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }
}

/// Weitzenböck tensor
/// `P_ijkl = (g_ik R_jl + g_jl R_ik − g_il R_jk − g_jk R_il) − 2 R_ijkl`
/// and its 2-form operator.
pub fn weitzenbock(rm: &AlgCurv, ric: &Sym2, m: &MetricPoint) -> Result<(AlgCurv, TwoFormOperator)> {
    let p = kn_product(ric, m.g())?.sub(&rm.scaled(2.0))?;
    let op = TwoFormOperator::from_tensor(&p, m)?;
    Ok((p, op))
}
