//! Half-line collocation grids with implicit Dirichlet data at r = 0 and r = R.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quad::{barycentric_row, chebyshev_barycentric, clenshaw_curtis, composite_rule, RuleCache};
use crate::{Error, RMat, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    MappedChebyshev,
    UniformInterior,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::MappedChebyshev => f.write_str("mapped-chebyshev"),
            Scheme::UniformInterior => f.write_str("uniform-interior"),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mapped-chebyshev" | "chebyshev" => Ok(Scheme::MappedChebyshev),
            "uniform-interior" | "uniform" => Ok(Scheme::UniformInterior),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n: usize,
    pub r_max: f64,
    pub scheme: Scheme,
}

/// Immutable radial grid. Cloning is cheap (shared storage).
#[derive(Clone)]
pub struct RadialGrid {
    inner: Arc<GridData>,
}

struct GridData {
    scheme: Scheme,
    r_max: f64,
    nodes: Array1<f64>,
    weights: Array1<f64>,
    d1: RMat,
    d2: RMat,
    // interior nodes plus both endpoints, ascending
    full: Vec<f64>,
    bary: Vec<f64>,
    memo: Mutex<HashMap<String, Arc<RMat>>>,
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid")
            .field("n", &self.n())
            .field("r_max", &self.r_max())
            .field("scheme", &self.scheme())
            .finish()
    }
}

pub fn build_grid(n: usize, r_max: f64, scheme: Scheme) -> Result<RadialGrid> {
    if n < 8 {
        return Err(Error::Grid(format!("n = {n} is below the minimum of 8")));
    }
    if !(r_max.is_finite() && r_max >= 4.0) {
        return Err(Error::Grid(format!("R_max = {r_max} must be at least 4")));
    }
    let data = match scheme {
        Scheme::MappedChebyshev => chebyshev(n, r_max),
        Scheme::UniformInterior => uniform(n, r_max),
    };
    Ok(RadialGrid { inner: Arc::new(data) })
}

fn chebyshev(n: usize, r_max: f64) -> GridData {
    let big_n = n + 1;
    let nf = big_n as f64;
    // x_j = cos(pi j / N) runs from 1 down to -1; r = R (1 - x) / 2 ascends.
    let theta = |j: usize| PI * j as f64 / nf;
    let x: Vec<f64> = (0..=big_n).map(|j| theta(j).cos()).collect();
    let c = |j: usize| {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == big_n {
            2.0 * s
        } else {
            s
        }
    };
    let mut dx = Array2::<f64>::zeros((big_n + 1, big_n + 1));
    for i in 0..=big_n {
        for j in 0..=big_n {
            if i != j {
                // x_i - x_j without cancellation
                let diff = 2.0 * ((theta(i) + theta(j)) / 2.0).sin() * ((theta(j) - theta(i)) / 2.0).sin();
                dx[[i, j]] = c(i) / c(j) / diff;
            }
        }
    }
    fix_diagonal(&mut dx);
    let mut dxx = dx.dot(&dx);
    fix_diagonal(&mut dxx);
    let scale = -2.0 / r_max;
    let d1 = dx.slice(ndarray::s![1..big_n, 1..big_n]).mapv(|v| v * scale);
    let d2 = dxx.slice(ndarray::s![1..big_n, 1..big_n]).mapv(|v| v * scale * scale);
    let full: Vec<f64> = x.iter().map(|&xj| 0.5 * r_max * (1.0 - xj)).collect();
    let cc = clenshaw_curtis(big_n);
    let nodes = Array1::from(full[1..big_n].to_vec());
    let weights = Array1::from(cc[1..big_n].iter().map(|w| w * 0.5 * r_max).collect::<Vec<_>>());
    GridData {
        scheme: Scheme::MappedChebyshev,
        r_max,
        nodes,
        weights,
        d1,
        d2,
        full,
        bary: chebyshev_barycentric(big_n),
        memo: Mutex::new(HashMap::new()),
    }
}

fn fix_diagonal(d: &mut RMat) {
    for i in 0..d.nrows() {
        let s: f64 = (0..d.ncols()).filter(|&j| j != i).map(|j| d[[i, j]]).sum();
        d[[i, i]] = -s;
    }
}

fn uniform(n: usize, r_max: f64) -> GridData {
    let h = r_max / (n as f64 + 1.0);
    let full: Vec<f64> = (0..=n + 1).map(|i| i as f64 * h).collect();
    let nodes = Array1::from(full[1..=n].to_vec());
    let mut d1 = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        if i > 0 {
            d1[[i, i - 1]] = -0.5 / h;
        }
        if i + 1 < n {
            d1[[i, i + 1]] = 0.5 / h;
        }
    }
    let d2 = d1.dot(&d1);
    GridData {
        scheme: Scheme::UniformInterior,
        r_max,
        nodes,
        weights: Array1::from_elem(n, h),
        d1,
        d2,
        full,
        bary: Vec::new(),
        memo: Mutex::new(HashMap::new()),
    }
}

impl RadialGrid {
    pub fn n(&self) -> usize {
        self.inner.nodes.len()
    }
    pub fn nodes(&self) -> &Array1<f64> {
        &self.inner.nodes
    }
    pub fn weights(&self) -> &Array1<f64> {
        &self.inner.weights
    }
    pub fn d1(&self) -> &RMat {
        &self.inner.d1
    }
    pub fn d2(&self) -> &RMat {
        &self.inner.d2
    }
    pub fn r_max(&self) -> f64 {
        self.inner.r_max
    }
    pub fn scheme(&self) -> Scheme {
        self.inner.scheme
    }
    pub fn meta(&self) -> GridMeta {
        GridMeta { n: self.n(), r_max: self.r_max(), scheme: self.scheme() }
    }

    /// The grid used by the robustness gate: 1.5 n nodes on [0, R + 2].
    pub fn refined(&self) -> Result<RadialGrid> {
        build_grid((self.n() * 3).div_ceil(2), self.r_max() + 2.0, self.scheme())
    }

    /// Σ w_i f(r_i).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(self.weights()).map(|(v, w)| v * w).sum()
    }

    /// Interpolation coefficients over the interior nodes for the point t,
    /// using zero boundary values. `scratch` must have length n + 2.
    pub fn interp_row(&self, t: f64, scratch: &mut [f64]) {
        let full = &self.inner.full;
        match self.scheme() {
            Scheme::MappedChebyshev => barycentric_row(full, &self.inner.bary, t, scratch),
            Scheme::UniformInterior => {
                scratch.iter_mut().for_each(|c| *c = 0.0);
                let h = full[1];
                let last = full.len() - 1;
                let m = ((t / h).floor() as isize).clamp(1, last as isize - 2) as usize;
                let idx = [m - 1, m, m + 1, m + 2];
                for &a in &idx {
                    let mut l = 1.0;
                    for &b in &idx {
                        if a != b {
                            l *= (t - full[b]) / (full[a] - full[b]);
                        }
                    }
                    scratch[a] = l;
                }
            }
        }
    }

    /// Matrix mapping interior samples to values at `targets`.
    pub fn interp_matrix(&self, targets: &[f64]) -> RMat {
        let n = self.n();
        let mut out = Array2::zeros((targets.len(), n));
        let mut scratch = vec![0.0; n + 2];
        for (i, &t) in targets.iter().enumerate() {
            self.interp_row(t, &mut scratch);
            for j in 0..n {
                out[[i, j]] = scratch[j + 1];
            }
        }
        out
    }

    /// Memoized derived matrix keyed by `key`.
    pub(crate) fn memo(&self, key: &str, build: impl FnOnce() -> RMat) -> Arc<RMat> {
        if let Some(m) = self.inner.memo.lock().unwrap().get(key) {
            return m.clone();
        }
        let m = Arc::new(build());
        self.inner.memo.lock().unwrap().entry(key.to_string()).or_insert(m).clone()
    }

    /// Discretization of u ↦ ∫₀^r lo(r,s) u(s) ds + ∫_r^R hi(r,s) u(s) ds.
    ///
    /// Both pieces are integrated against the grid interpolant of u with
    /// composite Gauss–Legendre rules graded toward r and toward 0, so kernels
    /// with a kink at s = r or integrable singularities at s = 0 keep
    /// spectral accuracy.
    pub fn split_operator(
        &self,
        lo: Option<&(dyn Fn(f64, f64) -> f64 + Sync)>,
        hi: Option<&(dyn Fn(f64, f64) -> f64 + Sync)>,
    ) -> RMat {
        let n = self.n();
        let nodes = self.nodes().to_vec();
        let full = &self.inner.full;
        let r_max = self.r_max();
        let eps = 1e-3 * nodes[0];
        let points_for = |a: f64, b: f64| {
            let cnt = full.partition_point(|&x| x <= b) - full.partition_point(|&x| x < a);
            12usize.max((1.2 * cnt as f64).ceil() as usize + 8)
        };
        let rows: Vec<Vec<f64>> = nodes
            .par_iter()
            .map_init(
                || (RuleCache::default(), vec![0.0; n + 2]),
                |(cache, scratch), &r| {
                    let mut row = vec![0.0; n];
                    let mut accumulate = |breaks: &[f64], k: &dyn Fn(f64, f64) -> f64| {
                        let pts: Vec<usize> = breaks.windows(2).map(|w| points_for(w[0], w[1])).collect();
                        let (xs, ws) = composite_rule(breaks, &pts, cache);
                        for (t, w) in xs.into_iter().zip(ws) {
                            let c = w * k(r, t);
                            if c == 0.0 {
                                continue;
                            }
                            self.interp_row(t, scratch);
                            for j in 0..n {
                                row[j] += c * scratch[j + 1];
                            }
                        }
                    };
                    if let Some(k) = lo {
                        let mut b = vec![r];
                        while *b.last().unwrap() > eps {
                            let next = b.last().unwrap() * 0.5;
                            b.push(next);
                        }
                        b.push(0.0);
                        b.reverse();
                        accumulate(&b, k);
                    }
                    if let Some(k) = hi {
                        let mut b = vec![r];
                        while *b.last().unwrap() < r_max {
                            let next = (b.last().unwrap() * 2.0).min(r_max);
                            b.push(next);
                        }
                        if b.len() > 1 {
                            accumulate(&b, k);
                        }
                    }
                    row
                },
            )
            .collect();
        let mut out = Array2::zeros((n, n));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        out
    }
}

/// max |(D2 u)_i - u''(r_i)| over nodes outside the boundary layers
/// (the first and last max(2, n/20) nodes).
pub fn second_derivative_check(grid: &RadialGrid, trial: impl Fn(f64) -> f64, trial_dd: impl Fn(f64) -> f64) -> f64 {
    let n = grid.n();
    let u = grid.nodes().mapv(&trial);
    let d2u = grid.d2().dot(&u);
    let skip = (n / 20).max(2);
    (skip..n - skip)
        .map(|i| (d2u[i] - trial_dd(grid.nodes()[i])).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes_are_equispaced() {
        let g = build_grid(8, 4.0, Scheme::UniformInterior).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((r - (i + 1) as f64 * 4.0 / 9.0).abs() < 1e-15);
        }
        let dd = g.d1().dot(g.d1());
        assert!((&dd - g.d2()).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn rejects_small_grids() {
        assert!(build_grid(4, 12.0, Scheme::MappedChebyshev).is_err());
        assert!(build_grid(4, 12.0, Scheme::UniformInterior).is_err());
        assert!(build_grid(16, 3.0, Scheme::MappedChebyshev).is_err());
    }

    #[test]
    fn chebyshev_gaussian_moment() {
        let g = build_grid(200, 12.0, Scheme::MappedChebyshev).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|r| r * (-r * r / 4.0).exp()).collect();
        let exact = 2.0 * (1.0 - (-36.0f64).exp());
        assert!((g.integrate(&vals) - exact).abs() < 1e-10);
    }

    #[test]
    fn chebyshev_second_derivative() {
        let g = build_grid(400, 12.0, Scheme::MappedChebyshev).unwrap();
        let k = PI / 12.0;
        let e = second_derivative_check(&g, |r| (k * r).sin(), |r| -k * k * (k * r).sin());
        assert!(e < 1e-6, "{e}");
        let g = build_grid(100, 12.0, Scheme::MappedChebyshev).unwrap();
        let e = second_derivative_check(&g, |r| r * (12.0 - r), |_| -2.0);
        assert!(e < 1e-8, "{e}");
        assert_eq!(second_derivative_check(&g, |_| 0.0, |_| 0.0), 0.0);
    }

    #[test]
    fn interpolation_is_exact_at_nodes() {
        for scheme in [Scheme::MappedChebyshev, Scheme::UniformInterior] {
            let g = build_grid(40, 8.0, scheme).unwrap();
            let m = g.interp_matrix(&g.nodes().to_vec());
            for i in 0..40 {
                for j in 0..40 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((m[[i, j]] - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn split_operator_integrates_gaussian() {
        let g = build_grid(120, 12.0, Scheme::MappedChebyshev).unwrap();
        let one = |_: f64, _: f64| 1.0;
        let m = g.split_operator(Some(&one), None);
        let u = g.nodes().mapv(|s| s * (-s * s / 4.0).exp());
        let out = m.dot(&u);
        for (i, r) in g.nodes().iter().enumerate() {
            let exact = 2.0 * (1.0 - (-r * r / 4.0).exp());
            assert!((out[i] - exact).abs() < 1e-12, "{} {}", out[i], exact);
        }
    }
}
