//! Linear evolution: the explicit heat semigroup in self-similar variables,
//! matrix exponentials of the mode operators, decay-rate fits and the
//! triangular k = 0 system.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::grid::RadialGrid;
use crate::linalg::{self, inv, singular_values, to_weighted};
use crate::ops::{assemble_system_lpi, OperatorMatrix};
use crate::profiles;
use crate::{CMat, Error, Result, C64};

/// e^{τL} f on a square tensor grid with uniform `axis` in both directions:
/// (4πa)⁻¹ ∫ exp(−|ξ − η e^{−τ/2}|²/(4a)) f(η) dη, a = 1 − e^{−τ}.
pub fn heat_kernel_apply(field: &Array2<f64>, axis: &[f64], tau: f64) -> Result<Array2<f64>> {
    if !(tau > 0.0) {
        return Err(Error::param("tau", "must be positive"));
    }
    let m = axis.len();
    if field.dim() != (m, m) || m < 3 {
        return Err(Error::param("field", "must be square and match the axis"));
    }
    let h = axis[1] - axis[0];
    let a = -(-tau).exp_m1();
    let s = (-tau / 2.0).exp();
    let kern = Array2::from_shape_fn((m, m), |(i, j)| {
        let d = axis[i] - s * axis[j];
        (-d * d / (4.0 * a)).exp() / (4.0 * PI * a).sqrt() * h
    });
    Ok(kern.dot(field).dot(&kern.t()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PropagationMethod {
    Eigen { condition: f64 },
    ScalingSquaring { condition: f64 },
}

#[derive(Clone, Debug)]
pub struct Propagation {
    pub states: Vec<Array1<C64>>,
    pub method: PropagationMethod,
}

/// Eigenvector condition numbers above this switch to scaling and squaring.
pub const MAX_EIGVEC_CONDITION: f64 = 1e8;

/// w(τ) = exp(τA) w₀ for each τ, computed in quadrature-weighted coordinates.
pub fn propagate(op: &OperatorMatrix, w0: &Array1<C64>, taus: &[f64]) -> Result<Propagation> {
    if w0.len() != op.dim() {
        return Err(Error::param("w0", "length does not match the operator"));
    }
    if taus.iter().any(|t| !(*t >= 0.0)) || taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("taus", "must be nonnegative and increasing"));
    }
    let w = op.inner_weights();
    let sw = w.mapv(f64::sqrt);
    let y0: Array1<C64> = w0.iter().zip(&sw).map(|(v, s)| v * s).collect();
    let b = op.weighted();
    let (vals, vecs) = linalg::eig(&b)?;
    let sv = singular_values(&vecs)?;
    let condition = sv[0] / sv[sv.len() - 1];
    let (states_w, method) = if condition.is_finite() && condition < MAX_EIGVEC_CONDITION {
        let c = inv(&vecs)?.dot(&y0);
        let states = taus
            .iter()
            .map(|&t| {
                let e: Array1<C64> = vals.iter().zip(&c).map(|(l, c)| (l * t).exp() * c).collect();
                vecs.dot(&e)
            })
            .collect();
        (states, PropagationMethod::Eigen { condition })
    } else {
        // March through the increments, reusing the exponential of a repeated step.
        let mut states = Vec::with_capacity(taus.len());
        let mut cache: Option<(f64, CMat)> = None;
        let mut y = y0.clone();
        let mut prev = 0.0;
        for &t in taus {
            let dt = t - prev;
            if dt > 0.0 {
                let reuse = matches!(&cache, Some((h, _)) if (h - dt).abs() <= 1e-9 * dt);
                if !reuse {
                    cache = Some((dt, expm(&b.mapv(|v| v * dt))?));
                }
                y = cache.as_ref().map(|(_, e)| e.dot(&y)).unwrap_or(y);
            }
            states.push(y.clone());
            prev = t;
        }
        (states, PropagationMethod::ScalingSquaring { condition })
    };
    let states = states_w.into_iter().map(|y: Array1<C64>| y.iter().zip(&sw).map(|(v, s)| v / s).collect()).collect();
    Ok(Propagation { states, method })
}

/// Matrix exponential by scaling and squaring (nalgebra).
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| nalgebra::Complex::new(a[[i, j]].re, a[[i, j]].im));
    let e = m.exp();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| C64::new(e[(i, j)].re, e[(i, j)].im)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    pub taus: Vec<f64>,
    pub norms: Vec<f64>,
    pub rate: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    /// True when points under the noise floor were dropped from the window.
    pub truncated: bool,
    /// max ‖w(τ)‖/‖w(0)‖, the transient growth.
    pub hump: f64,
}

/// Least-squares slope of log‖w(τ)‖ over the window.
pub fn decay_rate(norms: &[f64], taus: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if norms.len() != taus.len() || norms.is_empty() {
        return Err(Error::param("traj", "norms and taus must align"));
    }
    let (lo, hi) = window;
    if !(lo < hi) || lo < taus[0] - 1e-12 || hi > taus[taus.len() - 1] + 1e-12 {
        return Err(Error::param("window", "must lie inside the time range"));
    }
    if norms.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::param("traj", "norms must be positive"));
    }
    let floor = 1e2 * f64::EPSILON * norms[0];
    let mut truncated = false;
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .zip(norms)
        .filter(|(t, _)| **t >= lo - 1e-12 && **t <= hi + 1e-12)
        .filter(|(_, v)| {
            let keep = **v > floor;
            truncated |= !keep;
            keep
        })
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::param("window", "fewer than two usable points"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let rate = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit {
        taus: taus.to_vec(),
        norms: norms.to_vec(),
        rate,
        window,
        r_squared,
        truncated,
        hump: norms.iter().fold(0.0f64, |a, &v| a.max(v)) / norms[0],
    })
}

/// Propagate `w0` to τ_max = 12/expected_rate on `samples` equispaced times
/// and fit the rate on [τ_max/2, τ_max].
pub fn fitted_decay(op: &OperatorMatrix, w0: &Array1<C64>, expected_rate: f64, samples: usize) -> Result<DecayFit> {
    let tmax = 12.0 / expected_rate.abs();
    let taus: Vec<f64> = (0..samples).map(|i| tmax * i as f64 / (samples - 1) as f64).collect();
    let prop = propagate(op, w0, &taus)?;
    let w = op.inner_weights();
    let norms: Vec<f64> = prop
        .states
        .iter()
        .map(|s| s.iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt())
        .collect();
    decay_rate(&norms, &taus, (tmax / 2.0, tmax))
}

fn phi1(x: C64) -> C64 {
    // (e^x − 1)/x
    if x.norm() < 1e-5 {
        1.0 + x / 2.0 + x * x / 6.0
    } else {
        (x.exp() - 1.0) / x
    }
}

#[derive(Clone, Debug)]
pub struct Block0Trajectory {
    pub taus: Vec<f64>,
    pub f1: Vec<Array1<C64>>,
    pub f2: Vec<Array1<C64>>,
}

/// k = 0 system [[A, 0], [α rS′, A]]: f₁ is propagated by e^{τA}, and f₂ by
/// the variation-of-constants formula, integrated exactly in the eigenbasis
/// of A.
pub fn duhamel_block0(grid: &RadialGrid, alpha: f64, f0: (&Array1<C64>, &Array1<C64>), taus: &[f64]) -> Result<Block0Trajectory> {
    let n = grid.n();
    if f0.0.len() != n || f0.1.len() != n {
        return Err(Error::param("f0", "component lengths must match the grid"));
    }
    let sys = assemble_system_lpi(grid, 0, alpha)?;
    let w = grid.weights();
    let a = to_weighted(&sys.entries.slice(ndarray::s![..n, ..n]).to_owned(), w);
    let sw = w.mapv(f64::sqrt);
    let (vals, v) = linalg::eig(&a)?;
    let vinv = inv(&v)?;
    let coupling: Vec<C64> = grid.nodes().iter().map(|&r| C64::from(alpha * r * profiles::big_s_prime(r))).collect();
    let mut cv = v.clone();
    linalg::scale_rows(&mut cv, &coupling);
    let mt = vinv.dot(&cv);
    let to_w = |f: &Array1<C64>| -> Array1<C64> { f.iter().zip(&sw).map(|(x, s)| x * s).collect() };
    let a0 = vinv.dot(&to_w(f0.0));
    let b0 = vinv.dot(&to_w(f0.1));
    let back = |y: Array1<C64>| -> Array1<C64> { v.dot(&y).iter().zip(&sw).map(|(x, s)| x / s).collect() };
    let mut f1 = Vec::new();
    let mut f2 = Vec::new();
    for &t in taus {
        let e: Vec<C64> = vals.iter().map(|l| (l * t).exp()).collect();
        f1.push(back(Array1::from_shape_fn(n, |i| e[i] * a0[i])));
        let y = Array1::from_shape_fn(n, |i| {
            let mut acc = e[i] * b0[i];
            for j in 0..n {
                // ∫₀^τ e^{(τ−s)λ_i} e^{sλ_j} ds = τ e^{τλ_j} φ₁(τ(λ_i − λ_j))
                let kernel = t * e[j] * phi1((vals[i] - vals[j]) * t);
                acc += kernel * mt[[i, j]] * a0[j];
            }
            acc
        });
        f2.push(back(y));
    }
    Ok(Block0Trajectory { taus: taus.to_vec(), f1, f2 })
}

/// Max nodal discrepancy between `duhamel_block0` and direct exponentiation
/// of the 2n×2n block system.
pub fn duhamel_vs_direct(grid: &RadialGrid, alpha: f64, f0: (&Array1<C64>, &Array1<C64>), taus: &[f64]) -> Result<f64> {
    let tr = duhamel_block0(grid, alpha, f0, taus)?;
    let sys = assemble_system_lpi(grid, 0, alpha)?;
    let n = grid.n();
    let w = sys.inner_weights();
    let b = sys.weighted();
    let sw = w.mapv(f64::sqrt);
    let y0: Array1<C64> = f0.0.iter().chain(f0.1.iter()).zip(&sw).map(|(x, s)| x * s).collect();
    let mut worst = 0.0f64;
    for (k, &t) in taus.iter().enumerate() {
        let y = expm(&b.mapv(|v| v * t))?.dot(&y0);
        let x = from_weighted_vec(&y, &sw);
        for i in 0..n {
            worst = worst.max((x[i] - tr.f1[k][i]).norm()).max((x[n + i] - tr.f2[k][i]).norm());
        }
    }
    Ok(worst)
}

fn from_weighted_vec(y: &Array1<C64>, sw: &Array1<f64>) -> Array1<C64> {
    y.iter().zip(sw).map(|(v, s)| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_exponential_rate() {
        let taus: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let norms: Vec<f64> = taus.iter().map(|t| (-3.0 * t).exp()).collect();
        let fit = decay_rate(&norms, &taus, (1.0, 4.9)).unwrap();
        assert!((fit.rate + 3.0).abs() < 1e-12);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn zero_generator_is_identity() {
        let a = CMat::zeros((5, 5));
        let e = expm(&a).unwrap();
        assert!((e - linalg::eye(5)).iter().all(|v| v.norm() < 1e-15));
    }
}
