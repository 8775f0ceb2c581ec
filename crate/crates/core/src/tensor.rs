//! Dense algebra of symmetric 2-tensors and (4,0) algebraic curvature tensors.
//!
//! Components are always stored in full: an `n x n` matrix for [`Sym2`] and an
//! `n^4` array for [`AlgCurv`]. Index symmetries are validated, never assumed
//! by the storage layout. Indices are raised with the inverse metric carried
//! by [`MetricPoint`]; when the metric is the identity the raising is skipped.
//!
//! Sign convention: `R_{ijij}` is the sectional curvature of the plane
//! spanned by `e_i, e_j`, and `Rc_{ik} = g^{jl} R_{ijkl}`.

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};

/// Relative tolerance used when validating index symmetries.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Smallest and largest supported dimension.
pub const MIN_DIM: usize = 3;
pub const MAX_DIM: usize = 8;

fn check_dim(n: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(GeomError::UnsupportedDimension {
            n,
            reason: "supported dimensions are 3..=8",
        })
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(GeomError::DimensionMismatch { left: a, right: b })
    }
}

/// Symmetric bilinear form at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym2 {
    comps: DMatrix<f64>,
}

impl Sym2 {
    /// Validates symmetry to [`SYMMETRY_TOL`] (relative to the largest entry).
    pub fn new(comps: DMatrix<f64>) -> Result<Self> {
        let n = comps.nrows();
        if comps.ncols() != n {
            return Err(GeomError::DimensionMismatch {
                left: n,
                right: comps.ncols(),
            });
        }
        check_dim(n)?;
        if comps.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::NonFinite("symmetric tensor component".into()));
        }
        let scale = comps.amax().max(1.0);
        let mut defect = 0.0_f64;
        for i in 0..n {
            for j in 0..i {
                defect = defect.max((comps[(i, j)] - comps[(j, i)]).abs());
            }
        }
        if defect > SYMMETRY_TOL * scale {
            return Err(GeomError::NotSymmetric { defect });
        }
        Ok(Self::symmetrized(comps))
    }

    /// Builds from a matrix that is symmetric up to rounding, averaging the
    /// two triangles.
    pub(crate) fn symmetrized(comps: DMatrix<f64>) -> Self {
        let t = comps.transpose();
        Self {
            comps: (comps + t) * 0.5,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            comps: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            comps: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        check_dim(diag.len())?;
        Ok(Self {
            comps: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)),
        })
    }

    pub fn n(&self) -> usize {
        self.comps.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.comps[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.comps
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            comps: &self.comps * s,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.n(), other.n())?;
        Ok(Self {
            comps: &self.comps + &other.comps,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self.n(), other.n())?;
        Ok(Self {
            comps: &self.comps - &other.comps,
        })
    }

    /// `h^i_j = g^{ik} h_{kj}`.
    fn mixed(&self, m: &MetricPoint) -> DMatrix<f64> {
        if m.orthonormal {
            self.comps.clone()
        } else {
            &m.g_inv * &self.comps
        }
    }

    /// Full metric inner product `a_{ij} b_{kl} g^{ik} g^{jl}`.
    pub fn inner(&self, other: &Self, m: &MetricPoint) -> Result<f64> {
        same_dim(self.n(), other.n())?;
        same_dim(self.n(), m.n())?;
        Ok((self.mixed(m) * other.mixed(m)).trace())
    }

    pub fn norm(&self, m: &MetricPoint) -> Result<f64> {
        Ok(self.inner(self, m)?.max(0.0).sqrt())
    }

    /// `tr(h^3) = h_{ij} h_{jk} h_{ki}` with indices raised by the metric.
    pub fn cube_trace(&self, m: &MetricPoint) -> Result<f64> {
        same_dim(self.n(), m.n())?;
        let a = self.mixed(m);
        Ok((&a * &a * &a).trace())
    }

    /// `(h^2)_{ij} = h_{ik} g^{kl} h_{lj}`.
    pub fn square(&self, m: &MetricPoint) -> Result<Self> {
        same_dim(self.n(), m.n())?;
        Ok(Self::symmetrized(&self.comps * self.mixed(m)))
    }

    /// Components with both indices raised.
    fn raised(&self, m: &MetricPoint) -> DMatrix<f64> {
        if m.orthonormal {
            self.comps.clone()
        } else {
            &m.g_inv * &self.comps * &m.g_inv
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.amax()
    }
}

/// Metric at a point together with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPoint {
    g: Sym2,
    g_inv: DMatrix<f64>,
    orthonormal: bool,
}

impl MetricPoint {
    pub fn new(g: Sym2) -> Result<Self> {
        let n = g.n();
        let chol = nalgebra::Cholesky::new(g.comps.clone()).ok_or(GeomError::NotPositiveDefinite)?;
        let g_inv = chol.inverse();
        let check = &g_inv * &g.comps;
        let scale = g.comps.amax() * g_inv.amax();
        let defect = (check - DMatrix::<f64>::identity(n, n)).amax();
        if !defect.is_finite() || defect > 1e-12 * scale.max(1.0) {
            return Err(GeomError::NotPositiveDefinite);
        }
        let orthonormal = g.comps == DMatrix::<f64>::identity(n, n);
        Ok(Self {
            g,
            g_inv,
            orthonormal,
        })
    }

    /// Identity metric: components are taken in an orthonormal frame.
    pub fn euclidean(n: usize) -> Self {
        Self {
            g: Sym2::identity(n),
            g_inv: DMatrix::identity(n, n),
            orthonormal: true,
        }
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn g(&self) -> &Sym2 {
        &self.g
    }

    pub fn g_inv(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// `g(u, v)` for contravariant vectors.
    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g.comps[(i, j)] * u[i] * v[j];
            }
        }
        s
    }
}

/// Algebraic curvature tensor `T_{ijkl}` stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgCurv {
    n: usize,
    data: Vec<f64>,
}

/// Largest violations of the three curvature-tensor symmetries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryDefects {
    pub antisymmetry: f64,
    pub pair: f64,
    pub bianchi: f64,
}

impl SymmetryDefects {
    pub fn max(&self) -> f64 {
        self.antisymmetry.max(self.pair).max(self.bianchi)
    }
}

impl AlgCurv {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    /// Builds from an index function; the caller is responsible for symmetry.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = f(i, j, k, l);
                        t.data[((i * n + j) * n + k) * n + l] = v;
                    }
                }
            }
        }
        t
    }

    /// Builds from explicit components and validates the symmetries.
    pub fn from_components(n: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if data.len() != n * n * n * n {
            return Err(GeomError::DimensionMismatch {
                left: n * n * n * n,
                right: data.len(),
            });
        }
        let t = Self { n, data };
        t.validate()?;
        Ok(t)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(i, j, k, l)]
    }

    pub fn components(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        same_dim(self.n, other.n)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs())))
    }

    pub fn symmetry_defects(&self) -> SymmetryDefects {
        let n = self.n;
        let mut d = SymmetryDefects {
            antisymmetry: 0.0,
            pair: 0.0,
            bianchi: 0.0,
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let t = self.get(i, j, k, l);
                        d.antisymmetry = d
                            .antisymmetry
                            .max((t + self.get(j, i, k, l)).abs())
                            .max((t + self.get(i, j, l, k)).abs());
                        d.pair = d.pair.max((t - self.get(k, l, i, j)).abs());
                        let b = t + self.get(i, k, l, j) + self.get(i, l, j, k);
                        d.bianchi = d.bianchi.max(b.abs());
                    }
                }
            }
        }
        d
    }

    /// Checks the three symmetries to [`SYMMETRY_TOL`] relative to the largest entry.
    pub fn validate(&self) -> Result<()> {
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::NonFinite("curvature component".into()));
        }
        let tol = SYMMETRY_TOL * self.max_abs().max(1.0);
        let d = self.symmetry_defects();
        if d.antisymmetry > tol {
            return Err(GeomError::CurvatureSymmetry {
                which: "antisymmetry",
                defect: d.antisymmetry,
            });
        }
        if d.pair > tol {
            return Err(GeomError::CurvatureSymmetry {
                which: "pair symmetry",
                defect: d.pair,
            });
        }
        if d.bianchi > tol {
            return Err(GeomError::CurvatureSymmetry {
                which: "first Bianchi identity",
                defect: d.bianchi,
            });
        }
        Ok(())
    }

    /// All four indices raised with `g^{-1}`.
    fn raised(&self, m: &MetricPoint) -> Vec<f64> {
        if m.orthonormal {
            return self.data.clone();
        }
        let n = self.n;
        let a = &m.g_inv;
        let mut cur = self.data.clone();
        let mut next = vec![0.0; cur.len()];
        // Raise one slot at a time; `stride` is the distance between
        // consecutive values of the slot being raised.
        for stride in [n * n * n, n * n, n, 1] {
            for (pos, out) in next.iter_mut().enumerate() {
                let slot = (pos / stride) % n;
                let base = pos - slot * stride;
                let mut s = 0.0;
                for p in 0..n {
                    s += a[(slot, p)] * cur[base + p * stride];
                }
                *out = s;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// `T(h, k) = T_{ijkl} h^{ik} k^{jl}`.
    pub fn contract_pair(&self, h: &Sym2, k: &Sym2, m: &MetricPoint) -> Result<f64> {
        same_dim(self.n, h.n())?;
        same_dim(self.n, k.n())?;
        same_dim(self.n, m.n())?;
        let hu = h.raised(m);
        let ku = k.raised(m);
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    let hik = hu[(i, kk)];
                    if hik == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        s += self.get(i, j, kk, l) * hik * ku[(j, l)];
                    }
                }
            }
        }
        Ok(s)
    }

    /// `T(h, .)_{ij} = T_{ikjl} h^{kl}`.
    pub fn contract_middle(&self, h: &Sym2, m: &MetricPoint) -> Result<Sym2> {
        same_dim(self.n, h.n())?;
        same_dim(self.n, m.n())?;
        let hu = h.raised(m);
        let n = self.n;
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        s += self.get(i, k, j, l) * hu[(k, l)];
                    }
                }
                out[(i, j)] = s;
            }
        }
        Ok(Sym2::symmetrized(out))
    }

    /// `T(a, b, c, d)` on contravariant vectors.
    pub fn eval(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let ab = a[i] * b[j];
                if ab == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let abc = ab * c[k];
                    if abc == 0.0 {
                        continue;
                    }
                    let base = self.idx(i, j, k, 0);
                    let mut row = 0.0;
                    for l in 0..n {
                        row += self.data[base + l] * d[l];
                    }
                    s += abc * row;
                }
            }
        }
        s
    }
}

/// Kulkarni–Nomizu product
/// `(h∘k)_{ijkl} = h_{ik}k_{jl} + h_{jl}k_{ik} − h_{il}k_{jk} − h_{jk}k_{il}`.
pub fn kn_product(h: &Sym2, k: &Sym2) -> Result<AlgCurv> {
    same_dim(h.n(), k.n())?;
    let (a, b) = (&h.comps, &k.comps);
    Ok(AlgCurv::from_fn(h.n(), |i, j, p, q| {
        a[(i, p)] * b[(j, q)] + a[(j, q)] * b[(i, p)] - a[(i, q)] * b[(j, p)] - a[(j, p)] * b[(i, q)]
    }))
}

/// `⟨a, b⟩ = a_{ijkl} b_{pqrs} g^{ip} g^{jq} g^{kr} g^{ls}`.
pub fn curv_inner(a: &AlgCurv, b: &AlgCurv, m: &MetricPoint) -> Result<f64> {
    same_dim(a.n, b.n)?;
    same_dim(a.n, m.n())?;
    let bu = b.raised(m);
    Ok(a.data.iter().zip(&bu).map(|(x, y)| x * y).sum())
}

pub fn curv_norm(a: &AlgCurv, m: &MetricPoint) -> Result<f64> {
    Ok(curv_inner(a, a, m)?.max(0.0).sqrt())
}

/// `Rc_{ik} = g^{jl} T_{ijkl}`.
pub fn ricci_contraction(t: &AlgCurv, m: &MetricPoint) -> Result<Sym2> {
    same_dim(t.n, m.n())?;
    let n = t.n;
    let gi = &m.g_inv;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                for l in 0..n {
                    let w = gi[(j, l)];
                    if w != 0.0 {
                        s += w * t.get(i, j, k, l);
                    }
                }
            }
            out[(i, k)] = s;
        }
    }
    Ok(Sym2::symmetrized(out))
}

/// `R = g^{ik} Rc_{ik}`.
pub fn scalar_contraction(ric: &Sym2, m: &MetricPoint) -> Result<f64> {
    same_dim(ric.n(), m.n())?;
    Ok(ric.mixed(m).trace())
}

/// `E = Rc − (R/n) g`.
pub fn traceless_part(ric: &Sym2, m: &MetricPoint) -> Result<Sym2> {
    let r = scalar_contraction(ric, m)?;
    let n = ric.n() as f64;
    ric.sub(&m.g.scaled(r / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut impl Rng) -> Sym2 {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        Sym2::new(a).unwrap()
    }

    fn random_metric(n: usize, rng: &mut impl Rng) -> MetricPoint {
        let mut b = DMatrix::zeros(n, n);
        for x in b.iter_mut() {
            *x = rng.random_range(-0.5..0.5);
        }
        let g = &b * b.transpose() + DMatrix::identity(n, n);
        MetricPoint::new(Sym2::new(g).unwrap()).unwrap()
    }

    #[test]
    fn kn_of_identity_n3() {
        let g = Sym2::identity(3);
        let gg = kn_product(&g, &g).unwrap();
        assert_eq!(gg.get(0, 1, 0, 1), 2.0);
        assert_eq!(gg.get(0, 1, 0, 2), 0.0);
    }

    #[test]
    fn kn_with_zero_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = random_sym(5, &mut rng);
        let z = kn_product(&Sym2::zeros(5), &k).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn kn_is_commutative_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_sym(4, &mut rng);
        let k = random_sym(4, &mut rng);
        let hk = kn_product(&h, &k).unwrap();
        let kh = kn_product(&k, &h).unwrap();
        assert!(hk.max_diff(&kh).unwrap() < 1e-15);
        // brute-force check of all quadruples
        let n = 4;
        for i in 0..n {
            for j in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        let t = hk.get(i, j, p, q);
                        assert_abs_diff_eq!(t, hk.get(p, q, i, j), epsilon = 1e-12);
                        assert_abs_diff_eq!(t, -hk.get(j, i, p, q), epsilon = 1e-12);
                        let b = t + hk.get(i, p, q, j) + hk.get(i, q, j, p);
                        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-12);
                    }
                }
            }
        }
        hk.validate().unwrap();
    }

    #[test]
    fn kn_dimension_mismatch() {
        let err = kn_product(&Sym2::identity(3), &Sym2::identity(4)).unwrap_err();
        assert!(matches!(err, GeomError::DimensionMismatch { .. }));
    }

    #[test]
    fn gg_norm_is_8n_n_minus_1() {
        for n in 3..=6 {
            let m = MetricPoint::euclidean(n);
            let g = Sym2::identity(n);
            let gg = kn_product(&g, &g).unwrap();
            let v = curv_inner(&gg, &gg, &m).unwrap();
            assert_abs_diff_eq!(v, (8 * n * (n - 1)) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn gg_norm_at_general_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_metric(4, &mut rng);
        let gg = kn_product(m.g(), m.g()).unwrap();
        let v = curv_inner(&gg, &gg, &m).unwrap();
        assert!((v - 96.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn ricci_of_gg() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_metric(5, &mut rng);
        let gg = kn_product(m.g(), m.g()).unwrap();
        let ric = ricci_contraction(&gg, &m).unwrap();
        let expect = m.g().scaled(8.0);
        assert!((ric.matrix() - expect.matrix()).amax() < 1e-11);
        let zero = ricci_contraction(&AlgCurv::zeros(5), &m).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn unit_s4_ricci_and_scalar() {
        let m = MetricPoint::euclidean(4);
        let g = Sym2::identity(4);
        let rm = kn_product(&g, &g).unwrap().scaled(0.5);
        let ric = ricci_contraction(&rm, &m).unwrap();
        assert!((ric.matrix() - DMatrix::identity(4, 4) * 3.0).amax() < 1e-15);
        assert_abs_diff_eq!(scalar_contraction(&ric, &m).unwrap(), 12.0, epsilon = 1e-14);
    }

    #[test]
    fn traceless_examples() {
        let m = MetricPoint::euclidean(4);
        let ric = Sym2::from_diagonal(&[1.0, 1.0, 0.5, 0.5]).unwrap();
        let e = traceless_part(&ric, &m).unwrap();
        let expect = [0.25, 0.25, -0.25, -0.25];
        for (i, v) in expect.iter().enumerate() {
            assert_abs_diff_eq!(e.get(i, i), *v, epsilon = 1e-15);
        }
        let einstein = Sym2::identity(4).scaled(2.5);
        assert!(traceless_part(&einstein, &m).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn traceless_is_idempotent_and_trace_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 3..=6 {
            let m = random_metric(n, &mut rng);
            let ric = random_sym(n, &mut rng);
            let e = traceless_part(&ric, &m).unwrap();
            let tr = scalar_contraction(&e, &m).unwrap();
            assert!(tr.abs() <= 1e-12 * ric.norm(&m).unwrap().max(1.0));
            let e2 = traceless_part(&e, &m).unwrap();
            assert!((e2.matrix() - e.matrix()).amax() < 1e-12);
            let shifted = traceless_part(&m.g().scaled(3.7), &m).unwrap();
            assert!(shifted.max_abs() < 1e-12);
        }
    }

    #[test]
    fn nonsymmetric_input_rejected() {
        let mut a = DMatrix::identity(3, 3);
        a[(0, 1)] = 1e-3;
        assert!(matches!(Sym2::new(a), Err(GeomError::NotSymmetric { .. })));
    }

    #[test]
    fn non_spd_metric_rejected() {
        let g = Sym2::from_diagonal(&[1.0, -1.0, 1.0]).unwrap();
        assert_eq!(MetricPoint::new(g).unwrap_err(), GeomError::NotPositiveDefinite);
    }

    #[test]
    fn raising_matches_naive_quadruple_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 3;
        let m = random_metric(n, &mut rng);
        let a = kn_product(&random_sym(n, &mut rng), &random_sym(n, &mut rng)).unwrap();
        let b = kn_product(&random_sym(n, &mut rng), &random_sym(n, &mut rng)).unwrap();
        let gi = m.g_inv();
        let mut naive = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        for p in 0..n {
                            for q in 0..n {
                                for r in 0..n {
                                    for s in 0..n {
                                        naive += a.get(i, j, k, l)
                                            * b.get(p, q, r, s)
                                            * gi[(i, p)]
                                            * gi[(j, q)]
                                            * gi[(k, r)]
                                            * gi[(l, s)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let fast = curv_inner(&a, &b, &m).unwrap();
        assert!((naive - fast).abs() < 1e-10 * naive.abs().max(1.0));
    }
}
