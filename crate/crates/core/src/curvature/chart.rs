//! Coordinate charts: a metric-component function sampled on a uniform grid,
//! with curvature from second-order central differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::tensor::{AlgCurv, MetricPoint, Sym2};

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Uniform grid `origin + h * index` with `dims[a]` nodes along axis `a`.
#[derive(Clone)]
pub struct CoordinateChart {
    origin: Vec<f64>,
    h: f64,
    dims: Vec<usize>,
    metric: MetricFn,
}

impl fmt::Debug for CoordinateChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoordinateChart")
            .field("origin", &self.origin)
            .field("h", &self.h)
            .field("dims", &self.dims)
            .finish_non_exhaustive()
    }
}

impl CoordinateChart {
    pub fn new(origin: Vec<f64>, h: f64, dims: Vec<usize>, metric: MetricFn) -> Result<Self> {
        let c = Self {
            origin,
            h,
            dims,
            metric,
        };
        c.validate()?;
        Ok(c)
    }

    /// Grid of `2*half_width + 1` nodes per axis centred on `center`.
    pub fn centered(center: &[f64], h: f64, half_width: usize, metric: MetricFn) -> Result<Self> {
        let origin = center.iter().map(|c| c - h * half_width as f64).collect();
        Self::new(origin, h, vec![2 * half_width + 1; center.len()], metric)
    }

    /// Flat metric `δ_ij`.
    pub fn flat(n: usize, h: f64, half_width: usize) -> Result<Self> {
        Self::centered(
            &vec![0.0; n],
            h,
            half_width,
            Arc::new(move |_| DMatrix::identity(n, n)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dims.len();
        if !(3..=8).contains(&n) || self.origin.len() != n {
            return Err(GeomError::InvalidGeometry("chart dimension must be in 3..=8".into()));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(GeomError::InvalidGeometry("chart spacing must be positive".into()));
        }
        if self.dims.iter().any(|&d| d < 3) {
            return Err(GeomError::InvalidGeometry("chart needs >= 3 nodes per axis".into()));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (i, d)| acc * d + i)
    }

    pub fn coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, o)| o + self.h * i as f64)
            .collect()
    }

    fn is_interior(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.dims).all(|(&i, &d)| i >= 1 && i + 1 < d)
    }

    pub fn interior_points(&self) -> Vec<usize> {
        (0..self.point_count())
            .filter(|&p| self.is_interior(&self.multi_index(p)))
            .collect()
    }

    /// Metric components at grid node `idx` offset by `off` nodes.
    fn sample(&self, idx: &[usize], off: &[isize]) -> DMatrix<f64> {
        let x: Vec<f64> = idx
            .iter()
            .zip(off)
            .zip(&self.origin)
            .map(|((&i, &o), x0)| x0 + self.h * (i as isize + o) as f64)
            .collect();
        (self.metric)(&x)
    }

    pub fn metric_at(&self, point: usize) -> Result<MetricPoint> {
        let idx = self.multi_index(point);
        MetricPoint::new(Sym2::new(self.sample(&idx, &vec![0; idx.len()]))?)
    }

    /// Coordinate components of the curvature at an interior node.
    pub fn curvature_at(&self, point: usize) -> Result<(MetricPoint, AlgCurv)> {
        if point >= self.point_count() {
            return Err(GeomError::StencilOutOfRange { index: point });
        }
        let idx = self.multi_index(point);
        if !self.is_interior(&idx) {
            return Err(GeomError::StencilOutOfRange { index: point });
        }
        let n = self.dim();
        let h = self.h;
        let zero = vec![0isize; n];
        let shifted = |pairs: &[(usize, isize)]| {
            let mut off = zero.clone();
            for &(a, s) in pairs {
                off[a] += s;
            }
            self.sample(&idx, &off)
        };
        let g0 = self.sample(&idx, &zero);
        let m = MetricPoint::new(Sym2::new(g0.clone())?)?;

        let mut dg = Vec::with_capacity(n);
        let mut ddg = vec![vec![DMatrix::<f64>::zeros(n, n); n]; n];
        for a in 0..n {
            let gp = shifted(&[(a, 1)]);
            let gm = shifted(&[(a, -1)]);
            for g in [&gp, &gm] {
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(GeomError::NonFinite("chart metric sample".into()));
                }
            }
            dg.push((&gp - &gm) / (2.0 * h));
            ddg[a][a] = (&gp - &g0 * 2.0 + &gm) / (h * h);
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let v = (shifted(&[(a, 1), (b, 1)]) - shifted(&[(a, 1), (b, -1)])
                    - shifted(&[(a, -1), (b, 1)])
                    + shifted(&[(a, -1), (b, -1)]))
                    / (4.0 * h * h);
                ddg[b][a] = v.clone();
                ddg[a][b] = v;
            }
        }
        // Christoffel symbols of the second kind: gam[p][i][j] = Γ^p_ij.
        let gi = m.g_inv();
        let mut first = vec![vec![vec![0.0; n]; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    first[k][i][j] = 0.5 * (dg[i][(j, k)] + dg[j][(i, k)] - dg[k][(i, j)]);
                }
            }
        }
        let mut gam = vec![vec![vec![0.0; n]; n]; n];
        for p in 0..n {
            for i in 0..n {
                for j in 0..n {
                    gam[p][i][j] = (0..n).map(|k| gi[(p, k)] * first[k][i][j]).sum();
                }
            }
        }
        let rm = AlgCurv::from_fn(n, |i, j, k, l| {
            let second = 0.5
                * (ddg[j][k][(i, l)] + ddg[i][l][(j, k)] - ddg[i][k][(j, l)] - ddg[j][l][(i, k)]);
            let mut quad = 0.0;
            for p in 0..n {
                for q in 0..n {
                    quad += g0[(p, q)] * (gam[p][j][k] * gam[q][i][l] - gam[p][i][k] * gam[q][j][l]);
                }
            }
            second + quad
        });
        Ok((m, rm))
    }
}

/// Conformal change `g' = e^u g` of a chart.
pub fn conformal_rescale(chart: &CoordinateChart, u: ScalarFn) -> Result<CoordinateChart> {
    for p in 0..chart.point_count() {
        let x = chart.coords(&chart.multi_index(p));
        if !u(&x).is_finite() {
            return Err(GeomError::NonFinite(format!("conformal factor at node {p}")));
        }
    }
    let base = chart.metric.clone();
    let metric: MetricFn = Arc::new(move |x: &[f64]| base(x) * u(x).exp());
    Ok(CoordinateChart {
        origin: chart.origin.clone(),
        h: chart.h,
        dims: chart.dims.clone(),
        metric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{ricci_contraction, scalar_contraction};

    fn round_s2_cross_r(h: f64) -> CoordinateChart {
        // (θ, φ, z): dθ² + sin²θ dφ² + dz²
        CoordinateChart::centered(
            &[1.0, 0.3, 0.0],
            h,
            1,
            Arc::new(|x: &[f64]| DMatrix::from_diagonal(&nalgebra::dvector![1.0, x[0].sin().powi(2), 1.0])),
        )
        .unwrap()
    }

    #[test]
    fn s2_cross_line_sectional_curvature() {
        let c = round_s2_cross_r(1e-3);
        let centre = c.flat_index(&[1, 1, 1]);
        let (m, rm) = c.curvature_at(centre).unwrap();
        rm.validate().unwrap();
        // R_{θφθφ} = sin²θ
        assert!((rm.get(0, 1, 0, 1) - 1.0_f64.sin().powi(2)).abs() < 1e-6);
        let ric = ricci_contraction(&rm, &m).unwrap();
        assert!((scalar_contraction(&ric, &m).unwrap() - 2.0).abs() < 1e-5);
    }

    #[test]
    fn boundary_nodes_rejected() {
        let c = round_s2_cross_r(1e-2);
        assert!(matches!(c.curvature_at(0), Err(GeomError::StencilOutOfRange { .. })));
        assert_eq!(c.interior_points(), vec![c.flat_index(&[1, 1, 1])]);
    }

    #[test]
    fn zero_conformal_factor_is_identity() {
        let c = round_s2_cross_r(1e-2);
        let same = conformal_rescale(&c, Arc::new(|_| 0.0)).unwrap();
        let p = c.flat_index(&[1, 1, 1]);
        let (_, a) = c.curvature_at(p).unwrap();
        let (_, b) = same.curvature_at(p).unwrap();
        assert_eq!(a.max_diff(&b).unwrap(), 0.0);
    }

    #[test]
    fn nonfinite_conformal_factor_rejected() {
        let c = round_s2_cross_r(1e-2);
        let err = conformal_rescale(&c, Arc::new(|x: &[f64]| if x[0] > 1.0 { f64::NAN } else { 0.0 }));
        assert!(matches!(err, Err(GeomError::NonFinite(_))));
    }

    #[test]
    fn degenerate_metric_rejected() {
        let c = CoordinateChart::flat(3, 0.1, 1).unwrap();
        let bad = conformal_rescale(&c, Arc::new(|_| 0.0)).unwrap();
        let bad = CoordinateChart {
            metric: Arc::new(|_| DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0, 1.0])),
            ..bad
        };
        assert!(bad.curvature_at(bad.flat_index(&[1, 1, 1])).is_err());
    }
}
