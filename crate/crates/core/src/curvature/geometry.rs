//! Geometry presets and their pointwise curvature.

use std::f64::consts::PI;

use crate::curvature::chart::CoordinateChart;
use crate::error::{GeomError, Result};
use crate::tensor::{AlgCurv, MetricPoint};

/// One round sphere factor `S^dim(radius)`. A 1-dimensional factor is a
/// flat circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFactor {
    pub dim: usize,
    pub radius: f64,
}

impl SphereFactor {
    pub fn new(dim: usize, radius: f64) -> Self {
        Self { dim, radius }
    }

    /// Sectional curvature of the factor.
    pub fn curvature(&self) -> f64 {
        if self.dim >= 2 {
            1.0 / (self.radius * self.radius)
        } else {
            0.0
        }
    }
}

/// Three-dimensional unimodular Lie groups admitting a Milnor frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilnorGroup {
    Su2,
    Nil,
    Sol,
}

impl MilnorGroup {
    /// Structure constants `(λ1, λ2, λ3)` with `[F2,F3] = λ1 F1`,
    /// `[F3,F1] = λ2 F2`, `[F1,F2] = λ3 F3`.
    pub fn structure_constants(self) -> [f64; 3] {
        match self {
            MilnorGroup::Su2 => [2.0, 2.0, 2.0],
            MilnorGroup::Nil => [2.0, 0.0, 0.0],
            MilnorGroup::Sol => [2.0, -2.0, 0.0],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            MilnorGroup::Su2 => "su2",
            MilnorGroup::Nil => "nil",
            MilnorGroup::Sol => "sol",
        }
    }
}

/// Left-invariant metric `A θ1² + B θ2² + C θ3²` in a Milnor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilnorFrame {
    pub group: MilnorGroup,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MilnorFrame {
    pub fn coefficients(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    /// Structure constants of the orthonormal frame `e_i = F_i / sqrt(coef_i)`:
    /// `c[i][j][k]` is the `e_k` component of `[e_i, e_j]`.
    fn orthonormal_brackets(&self) -> [[[f64; 3]; 3]; 3] {
        let lam = self.group.structure_constants();
        let s = self.coefficients();
        let mut c = [[[0.0; 3]; 3]; 3];
        // (i, j, k) cyclic: [e_i, e_j] = λ_k sqrt(s_k / (s_i s_j)) e_k
        for (i, j, k) in [(1, 2, 0), (2, 0, 1), (0, 1, 2)] {
            let v = lam[k] * (s[k] / (s[i] * s[j])).sqrt();
            c[i][j][k] = v;
            c[j][i][k] = -v;
        }
        c
    }

    /// Levi-Civita connection in the orthonormal frame (Koszul formula):
    /// `gam[i][j][k] = <∇_{e_i} e_j, e_k>`.
    pub fn connection(&self) -> [[[f64; 3]; 3]; 3] {
        let c = self.orthonormal_brackets();
        let mut gam = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    gam[i][j][k] = 0.5 * (c[i][j][k] - c[j][k][i] + c[k][i][j]);
                }
            }
        }
        gam
    }

    pub fn curvature(&self) -> AlgCurv {
        let c = self.orthonormal_brackets();
        let gam = self.connection();
        // R_{ijkl} = <R(e_i, e_j) e_l, e_k>
        AlgCurv::from_fn(3, |i, j, k, l| {
            let mut s = 0.0;
            for m in 0..3 {
                s += gam[j][l][m] * gam[i][m][k] - gam[i][l][m] * gam[j][m][k];
                s -= c[i][j][m] * gam[m][l][k];
            }
            s
        })
    }
}

/// Rotationally symmetric metric `φ(x)² dx² + ψ(x)² g_{S^n_fiber}` on
/// `S^{n_fiber+1}`, sampled on a strictly increasing grid. The endpoints are
/// the poles, where `ψ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedProduct {
    pub n_fiber: usize,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Radial and tangential sectional curvatures at an interior grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpedCurvature {
    /// Planes containing the radial direction: `−ψ_ss / ψ`.
    pub radial: f64,
    /// Planes tangent to the fibre sphere: `(1 − ψ_s²) / ψ²`.
    pub tangential: f64,
}

/// Three-point first and second derivative weights on a possibly
/// non-uniform grid.
pub(crate) fn three_point(xm: f64, x0: f64, xp: f64) -> ([f64; 3], [f64; 3]) {
    let h1 = x0 - xm;
    let h2 = xp - x0;
    let d1 = [
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    ];
    let d2 = [
        2.0 / (h1 * (h1 + h2)),
        -2.0 / (h1 * h2),
        2.0 / (h2 * (h1 + h2)),
    ];
    (d1, d2)
}

impl WarpedProduct {
    /// Uniform grid on `[0, π]` with `φ ≡ 1`.
    fn uniform(n_fiber: usize, points: usize, psi: impl Fn(f64) -> f64) -> Self {
        let x: Vec<f64> = (0..points)
            .map(|i| PI * i as f64 / (points - 1) as f64)
            .collect();
        let mut psi: Vec<f64> = x.iter().map(|&x| psi(x)).collect();
        psi[0] = 0.0;
        psi[points - 1] = 0.0;
        Self {
            n_fiber,
            phi: vec![1.0; points],
            psi,
            x,
        }
    }

    /// Round sphere of the given radius.
    pub fn round(n_fiber: usize, points: usize, radius: f64) -> Self {
        let mut w = Self::uniform(n_fiber, points, |x| radius * x.sin());
        w.phi.iter_mut().for_each(|p| *p = radius);
        w
    }

    /// Symmetric dumbbell `ψ = sin x · ((neck + cos² x)/(1 + neck))^power`.
    /// Smaller `neck` gives a thinner neck at `x = π/2`.
    pub fn dumbbell(n_fiber: usize, points: usize, neck: f64, power: f64) -> Self {
        Self::uniform(n_fiber, points, |x| {
            let c = x.cos();
            x.sin() * ((neck + c * c) / (1.0 + neck)).powf(power)
        })
    }

    pub fn dim(&self) -> usize {
        self.n_fiber + 1
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.n_fiber < 2 {
            return Err(GeomError::InvalidGeometry(
                "warped product needs a fibre sphere of dimension >= 2".into(),
            ));
        }
        if n < 16 {
            return Err(GeomError::InvalidGeometry(
                "warped product grid needs at least 16 points".into(),
            ));
        }
        if self.phi.len() != n || self.psi.len() != n {
            return Err(GeomError::InvalidGeometry("profile arrays differ in length".into()));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GeomError::InvalidGeometry("grid must be strictly increasing".into()));
        }
        if self.phi.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(GeomError::InvalidGeometry("phi must be strictly positive".into()));
        }
        if self.psi[1..n - 1].iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(GeomError::InvalidGeometry(
                "psi must be strictly positive away from the poles".into(),
            ));
        }
        Ok(())
    }

    /// Sectional curvatures at interior point `j`.
    pub fn curvature_at(&self, j: usize) -> Result<WarpedCurvature> {
        if j == 0 || j + 1 >= self.len() {
            return Err(GeomError::StencilOutOfRange { index: j });
        }
        let (d1, d2) = three_point(self.x[j - 1], self.x[j], self.x[j + 1]);
        let at = |v: &[f64], w: &[f64; 3]| w[0] * v[j - 1] + w[1] * v[j] + w[2] * v[j + 1];
        let psi = self.psi[j];
        let phi = self.phi[j];
        if !(psi > 0.0 && phi > 0.0) {
            return Err(GeomError::NotPositiveDefinite);
        }
        let psi_x = at(&self.psi, &d1);
        let psi_xx = at(&self.psi, &d2);
        let phi_x = at(&self.phi, &d1);
        let psi_s = psi_x / phi;
        let psi_ss = (psi_xx - psi_x * phi_x / phi) / (phi * phi);
        Ok(WarpedCurvature {
            radial: -psi_ss / psi,
            tangential: (1.0 - psi_s * psi_s) / (psi * psi),
        })
    }
}

/// Declarative description of a manifold with metric.
#[derive(Debug, Clone)]
pub enum GeometrySpec {
    /// Space form of constant sectional curvature; `kappa = 0` is a flat torus.
    ConstantCurvature { n: usize, kappa: f64 },
    ProductOfSpheres { first: SphereFactor, second: SphereFactor },
    Milnor(MilnorFrame),
    Warped(WarpedProduct),
    Chart(CoordinateChart),
}

/// Curvature operator that is diagonal on the frame bivectors `e_a ∧ e_b`,
/// with sectional curvature `k(a, b)` for `a < b`.
pub(crate) fn diagonal_curvature(n: usize, k: impl Fn(usize, usize) -> f64) -> AlgCurv {
    AlgCurv::from_fn(n, |i, j, p, q| {
        if i == j {
            return 0.0;
        }
        let kij = if i < j { k(i, j) } else { k(j, i) };
        if i == p && j == q {
            kij
        } else if i == q && j == p {
            -kij
        } else {
            0.0
        }
    })
}

impl GeometrySpec {
    pub fn dim(&self) -> usize {
        match self {
            GeometrySpec::ConstantCurvature { n, .. } => *n,
            GeometrySpec::ProductOfSpheres { first, second } => first.dim + second.dim,
            GeometrySpec::Milnor(_) => 3,
            GeometrySpec::Warped(w) => w.dim(),
            GeometrySpec::Chart(c) => c.dim(),
        }
    }

    /// Spatially homogeneous presets have a single sample point.
    pub fn is_homogeneous(&self) -> bool {
        matches!(
            self,
            GeometrySpec::ConstantCurvature { .. }
                | GeometrySpec::ProductOfSpheres { .. }
                | GeometrySpec::Milnor(_)
        )
    }

    pub fn point_count(&self) -> usize {
        match self {
            GeometrySpec::Warped(w) => w.len(),
            GeometrySpec::Chart(c) => c.point_count(),
            _ => 1,
        }
    }

    /// Indices at which curvature is computable.
    pub fn sample_points(&self) -> Vec<usize> {
        match self {
            GeometrySpec::Warped(w) => (1..w.len() - 1).collect(),
            GeometrySpec::Chart(c) => c.interior_points(),
            _ => vec![0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(GeomError::InvalidGeometry(msg.into()));
        match self {
            GeometrySpec::ConstantCurvature { n, kappa } => {
                if !(3..=8).contains(n) {
                    return bad("dimension must be in 3..=8");
                }
                if !kappa.is_finite() {
                    return bad("kappa must be finite");
                }
            }
            GeometrySpec::ProductOfSpheres { first, second } => {
                let n = first.dim + second.dim;
                if first.dim == 0 || second.dim == 0 || !(3..=8).contains(&n) {
                    return bad("factor dimensions must be >= 1 with total in 3..=8");
                }
                for f in [first, second] {
                    if !(f.radius.is_finite() && f.radius > 0.0) {
                        return bad("radii must be strictly positive");
                    }
                }
            }
            GeometrySpec::Milnor(m) => {
                if m.coefficients().iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return bad("Milnor coefficients must be strictly positive");
                }
            }
            GeometrySpec::Warped(w) => w.validate()?,
            GeometrySpec::Chart(c) => c.validate()?,
        }
        Ok(())
    }

    /// Metric and `(4,0)` curvature at a sample point. Homogeneous and warped
    /// presets report components in an orthonormal frame; charts report
    /// coordinate components.
    pub fn curvature_at(&self, point: usize) -> Result<(MetricPoint, AlgCurv)> {
        self.validate()?;
        match self {
            GeometrySpec::ConstantCurvature { n, kappa } => {
                if point != 0 {
                    return Err(GeomError::StencilOutOfRange { index: point });
                }
                Ok((MetricPoint::euclidean(*n), diagonal_curvature(*n, |_, _| *kappa)))
            }
            GeometrySpec::ProductOfSpheres { first, second } => {
                if point != 0 {
                    return Err(GeomError::StencilOutOfRange { index: point });
                }
                let n = first.dim + second.dim;
                let (k1, k2) = (first.curvature(), second.curvature());
                let d = first.dim;
                let rm = diagonal_curvature(n, |a, b| {
                    if b < d {
                        k1
                    } else if a >= d {
                        k2
                    } else {
                        0.0
                    }
                });
                Ok((MetricPoint::euclidean(n), rm))
            }
            GeometrySpec::Milnor(m) => {
                if point != 0 {
                    return Err(GeomError::StencilOutOfRange { index: point });
                }
                Ok((MetricPoint::euclidean(3), m.curvature()))
            }
            GeometrySpec::Warped(w) => {
                let k = w.curvature_at(point)?;
                let rm = diagonal_curvature(w.dim(), |a, _| if a == 0 { k.radial } else { k.tangential });
                Ok((MetricPoint::euclidean(w.dim()), rm))
            }
            GeometrySpec::Chart(c) => c.curvature_at(point),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{curv_norm, kn_product, ricci_contraction, scalar_contraction, Sym2};

    #[test]
    fn constant_curvature_is_half_gg() {
        let spec = GeometrySpec::ConstantCurvature { n: 4, kappa: 1.0 };
        let (m, rm) = spec.curvature_at(0).unwrap();
        let g = Sym2::identity(4);
        let half_gg = kn_product(&g, &g).unwrap().scaled(0.5);
        assert!(rm.max_diff(&half_gg).unwrap() < 1e-15);
        let ric = ricci_contraction(&rm, &m).unwrap();
        assert_eq!(scalar_contraction(&ric, &m).unwrap(), 12.0);
    }

    #[test]
    fn unit_s2_cross_s2() {
        let spec = GeometrySpec::ProductOfSpheres {
            first: SphereFactor::new(2, 1.0),
            second: SphereFactor::new(2, 1.0),
        };
        let (m, rm) = spec.curvature_at(0).unwrap();
        rm.validate().unwrap();
        for (i, j, k, l) in [(0, 1, 0, 1), (2, 3, 2, 3)] {
            assert_eq!(rm.get(i, j, k, l), 1.0);
        }
        assert_eq!(rm.get(0, 2, 0, 2), 0.0);
        assert!((curv_norm(&rm, &m).unwrap().powi(2) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn product_ricci_eigenvalues() {
        let spec = GeometrySpec::ProductOfSpheres {
            first: SphereFactor::new(3, 1.5),
            second: SphereFactor::new(2, 0.7),
        };
        let (m, rm) = spec.curvature_at(0).unwrap();
        let ric = ricci_contraction(&rm, &m).unwrap();
        for i in 0..3 {
            assert!((ric.get(i, i) - 2.0 / 2.25).abs() < 1e-12);
        }
        for i in 3..5 {
            assert!((ric.get(i, i) - 1.0 / 0.49).abs() < 1e-12);
        }
    }

    #[test]
    fn milnor_su2_equal_is_round() {
        for a in [1.0, 2.5] {
            let spec = GeometrySpec::Milnor(MilnorFrame {
                group: MilnorGroup::Su2,
                a,
                b: a,
                c: a,
            });
            let (m, rm) = spec.curvature_at(0).unwrap();
            rm.validate().unwrap();
            let g = Sym2::identity(3);
            let expect = kn_product(&g, &g).unwrap().scaled(0.5 / a);
            assert!(rm.max_diff(&expect).unwrap() < 1e-12);
            let ric = ricci_contraction(&rm, &m).unwrap();
            assert!(crate::tensor::traceless_part(&ric, &m).unwrap().max_abs() < 1e-12);
        }
    }

    /// Milnor's closed-form Ricci eigenvalues `r(e1) = ½(λ1² − (λ2 − λ3)²)`
    /// in terms of the orthonormal structure constants.
    fn milnor_ricci_oracle(f: &MilnorFrame) -> [f64; 3] {
        let lam = f.group.structure_constants();
        let [a, b, c] = f.coefficients();
        let l1 = lam[0] * (a / (b * c)).sqrt();
        let l2 = lam[1] * (b / (a * c)).sqrt();
        let l3 = lam[2] * (c / (a * b)).sqrt();
        [
            0.5 * (l1 * l1 - (l2 - l3).powi(2)),
            0.5 * (l2 * l2 - (l1 - l3).powi(2)),
            0.5 * (l3 * l3 - (l1 - l2).powi(2)),
        ]
    }

    #[test]
    fn milnor_ricci_matches_closed_form() {
        for group in [MilnorGroup::Su2, MilnorGroup::Nil, MilnorGroup::Sol] {
            let f = MilnorFrame {
                group,
                a: 1.3,
                b: 0.8,
                c: 2.1,
            };
            let (m, rm) = GeometrySpec::Milnor(f).curvature_at(0).unwrap();
            rm.validate().unwrap();
            let ric = ricci_contraction(&rm, &m).unwrap();
            let oracle = milnor_ricci_oracle(&f);
            for i in 0..3 {
                assert!((ric.get(i, i) - oracle[i]).abs() < 1e-12, "{group:?} {i}");
                for j in 0..3 {
                    if i != j {
                        assert!(ric.get(i, j).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn warped_round_sphere_has_unit_curvature() {
        let w = WarpedProduct::round(3, 400, 1.0);
        let spec = GeometrySpec::Warped(w);
        let k = match &spec {
            GeometrySpec::Warped(w) => w.curvature_at(200).unwrap(),
            _ => unreachable!(),
        };
        assert!((k.radial - 1.0).abs() < 1e-4);
        assert!((k.tangential - 1.0).abs() < 1e-4);
        assert!(matches!(
            spec.curvature_at(0),
            Err(GeomError::StencilOutOfRange { index: 0 })
        ));
    }

    #[test]
    fn invalid_presets_rejected() {
        let bad = GeometrySpec::ProductOfSpheres {
            first: SphereFactor::new(2, -1.0),
            second: SphereFactor::new(2, 1.0),
        };
        assert!(bad.validate().is_err());
        let mut w = WarpedProduct::round(2, 32, 1.0);
        w.x.truncate(10);
        w.phi.truncate(10);
        w.psi.truncate(10);
        assert!(GeometrySpec::Warped(w).validate().is_err());
    }
}
