//! Eigenvalues, spectral abscissae, resolvent norms along the imaginary axis
//! and numerical-range samples.

use ndarray::{Array1, Array2};
use ndarray_linalg::{FactorizeInto, Solve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{GridMeta, RadialGrid};
use crate::linalg::{self, sigma_min_inverse_iteration, singular_values};
use crate::ops::{assemble_hk, assemble_l1_wavereduced, ModeParams, OperatorMatrix};
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Sorted by descending real part.
    pub eigenvalues: Vec<C64>,
    pub abscissa: f64,
    pub operator_label: String,
    pub grid_meta: GridMeta,
    /// max ‖Av − λv‖/‖v‖ in the quadrature norm; NaN when vectors were not computed.
    pub residual: f64,
    pub tolerance: f64,
    vectors: Option<CMat>,
}

impl SpectrumResult {
    /// Right eigenvectors (columns, nodal values) in the sorted order.
    pub fn vectors(&self) -> Option<&CMat> {
        self.vectors.as_ref()
    }

    pub fn leading(&self, m: usize) -> &[C64] {
        &self.eigenvalues[..m.min(self.eigenvalues.len())]
    }

    /// Spectrum with eigenvalues within `tol` of `target` removed (once).
    pub fn without_nearest(&self, target: C64) -> Vec<C64> {
        let mut e = self.eigenvalues.clone();
        if let Some((i, _)) = e.iter().enumerate().min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm())) {
            e.remove(i);
        }
        e
    }
}

fn sort_desc(pairs: &mut [(C64, usize)]) {
    pairs.sort_by(|a, b| b.0.re.total_cmp(&a.0.re).then(b.0.im.total_cmp(&a.0.im)));
}

/// Full eigendecomposition with residuals.
pub fn eig(op: &OperatorMatrix) -> Result<SpectrumResult> {
    let w = op.inner_weights();
    let b = op.weighted();
    let (vals, vecs) = linalg::eig(&b)?;
    let mut order: Vec<(C64, usize)> = vals.iter().copied().zip(0..).collect();
    sort_desc(&mut order);
    let n = b.nrows();
    let bv = b.dot(&vecs);
    let mut residual = 0.0f64;
    for &(lam, j) in &order {
        let col = vecs.column(j);
        let num: f64 = (0..n).map(|i| (bv[[i, j]] - lam * col[i]).norm_sqr()).sum::<f64>().sqrt();
        let den = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        residual = residual.max(num / den);
    }
    let anorm = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let sqrt_w = w.mapv(f64::sqrt);
    let sorted = Array2::from_shape_fn((n, n), |(i, c)| vecs[[i, order[c].1]] / sqrt_w[i]);
    let eigenvalues: Vec<C64> = order.iter().map(|p| p.0).collect();
    let result = SpectrumResult {
        abscissa: eigenvalues.first().map(|z| z.re).unwrap_or(f64::NEG_INFINITY),
        eigenvalues,
        operator_label: op.label.clone(),
        grid_meta: op.grid.meta(),
        residual,
        tolerance: 1e-10 * anorm.max(1.0),
        vectors: Some(sorted),
    };
    if !(result.residual <= result.tolerance) {
        return Err(Error::Linalg(format!(
            "eigen-residual {:.3e} exceeds tolerance {:.3e} for {}",
            result.residual, result.tolerance, op.label
        )));
    }
    Ok(result)
}

/// Eigenvalues only; residual is not computed.
pub fn eigenvalues(op: &OperatorMatrix) -> Result<SpectrumResult> {
    let b = op.weighted();
    let vals = linalg::eigvals(&b)?;
    let mut order: Vec<(C64, usize)> = vals.iter().copied().zip(0..).collect();
    sort_desc(&mut order);
    let eigenvalues: Vec<C64> = order.iter().map(|p| p.0).collect();
    Ok(SpectrumResult {
        abscissa: eigenvalues.first().map(|z| z.re).unwrap_or(f64::NEG_INFINITY),
        eigenvalues,
        operator_label: op.label.clone(),
        grid_meta: op.grid.meta(),
        residual: f64::NAN,
        tolerance: f64::NAN,
        vectors: None,
    })
}

/// For each eigenvalue of `coarse`, whether `fine` has one within
/// rel·max(1, |λ|).
pub fn robust_flags(coarse: &[C64], fine: &[C64], rel: f64) -> Vec<bool> {
    coarse
        .iter()
        .map(|&l| fine.iter().any(|&m| (l - m).norm() <= rel * l.norm().max(1.0)))
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolventScan {
    pub lambdas: Vec<f64>,
    pub inv_norms: Vec<f64>,
    pub psi: f64,
    /// λ at which the largest resolvent norm was found.
    pub lambda_star: f64,
    pub bracket_refined: bool,
    pub warning: Option<String>,
}

/// ‖(A − iλ)⁻¹‖ in the quadrature norm at one point, from the full SVD.
pub fn resolvent_norm_svd(b: &CMat, lambda: f64) -> Result<f64> {
    let s = singular_values(&shift(b, lambda))?;
    Ok(1.0 / s.last().copied().unwrap_or(f64::NAN))
}

/// Same quantity by inverse iteration on one LU factorization.
pub fn resolvent_norm_iter(b: &CMat, lambda: f64) -> Result<f64> {
    Ok(1.0 / sigma_min_inverse_iteration(&shift(b, lambda), 1e-12, 400)?)
}

fn shift(b: &CMat, lambda: f64) -> CMat {
    let mut m = b.clone();
    for i in 0..m.nrows() {
        m[[i, i]] -= C64::new(0.0, lambda);
    }
    m
}

/// Scan 1/σ_min(A − iλ) over the window, then refine the maximum by golden
/// section. `seeds` are extra coarse points (typically Im of leading
/// eigenvalues), so that narrow peaks next to eigenvalues are not missed.
pub fn resolvent_scan_seeded(op: &OperatorMatrix, window: (f64, f64), n_coarse: usize, seeds: &[f64]) -> Result<ResolventScan> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::param("lambda_window", format!("empty window [{lo}, {hi}]")));
    }
    if n_coarse < 2 {
        return Err(Error::param("n_coarse", "need at least two points"));
    }
    let b = op.weighted();
    let mut lambdas: Vec<f64> = (0..n_coarse).map(|i| lo + (hi - lo) * i as f64 / (n_coarse - 1) as f64).collect();
    lambdas.extend(seeds.iter().copied().filter(|s| *s > lo && *s < hi));
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut inv_norms: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| resolvent_norm_svd(&b, l))
        .collect::<Result<Vec<_>>>()?;

    let (imax, _) = inv_norms.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let mut a = lambdas[imax.saturating_sub(1)];
    let mut c = lambdas[(imax + 1).min(lambdas.len() - 1)];
    let f = |l: f64| resolvent_norm_iter(&b, l);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let scale = lambdas[imax].abs().max(1e-3 * (hi - lo));
    let mut x1 = c - gr * (c - a);
    let mut x2 = a + gr * (c - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut extra = vec![(x1, f1), (x2, f2)];
    let mut refined = false;
    for _ in 0..80 {
        if (c - a) <= 1e-3 * scale {
            refined = true;
            break;
        }
        if f1 > f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - gr * (c - a);
            f1 = f(x1)?;
            extra.push((x1, f1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (c - a);
            f2 = f(x2)?;
            extra.push((x2, f2));
        }
    }
    for (l, v) in extra {
        let pos = lambdas.partition_point(|&x| x < l);
        lambdas.insert(pos, l);
        inv_norms.insert(pos, v);
    }
    let (istar, vmax) = inv_norms.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok(ResolventScan {
        lambda_star: lambdas[istar],
        psi: 1.0 / vmax,
        lambdas,
        inv_norms,
        bracket_refined: refined,
        warning: None,
    })
}

pub fn resolvent_scan(op: &OperatorMatrix, window: (f64, f64), n_coarse: usize) -> Result<ResolventScan> {
    resolvent_scan_seeded(op, window, n_coarse, &[])
}

/// The window [−1.2 max(|β|,1), 0.2 max(|β|,1)] (mirrored for β < 0) covering
/// the imaginary band of the numerical range with a 20% margin.
pub fn default_window(beta: f64) -> (f64, f64) {
    let b = beta.abs().max(1.0);
    if beta >= 0.0 {
        (-1.2 * b, 0.2 * b)
    } else {
        (-0.2 * b, 1.2 * b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    RandomGaussian,
    EigvecSeeded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NumericalRangeSample {
    pub points: Vec<C64>,
    pub hull_re_max: f64,
    pub hull_im_min: f64,
    pub hull_im_max: f64,
}

/// Smoothed complex Gaussian vectors: (I − 0.01 D2)⁻¹ applied to white noise.
pub fn smoothed_gaussian_vectors(grid: &RadialGrid, count: usize, seed: u64) -> Result<Vec<Array1<C64>>> {
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let smoother = Array2::<f64>::eye(n) - grid.d2() * 0.01;
    let lu = smoother.factorize_into().map_err(|e| Error::Linalg(e.to_string()))?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let re: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let im: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let re = lu.solve(&re).map_err(|e| Error::Linalg(e.to_string()))?;
        let im = lu.solve(&im).map_err(|e| Error::Linalg(e.to_string()))?;
        out.push(Array1::from_shape_fn(n, |i| C64::new(re[i], im[i])));
    }
    Ok(out)
}

/// Rayleigh quotients ⟨Au, u⟩/⟨u, u⟩ in the quadrature inner product.
pub fn numerical_range_sample(op: &OperatorMatrix, n_samples: usize, sampler: Sampler, seed: u64) -> Result<NumericalRangeSample> {
    if n_samples < 100 {
        return Err(Error::param("n_samples", "at least 100 samples are required"));
    }
    let n = op.grid.n();
    let reps = op.dim() / n;
    let vectors: Vec<Array1<C64>> = match sampler {
        Sampler::RandomGaussian => {
            let parts = smoothed_gaussian_vectors(&op.grid, n_samples * reps, seed)?;
            parts
                .chunks(reps)
                .map(|c| Array1::from_iter(c.iter().flat_map(|v| v.iter().copied())))
                .collect()
        }
        Sampler::EigvecSeeded => {
            let spec = eig(op)?;
            let v = spec.vectors().expect("vectors computed");
            let m = 10.min(v.ncols());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_samples)
                .map(|_| {
                    let mut u = Array1::<C64>::zeros(op.dim());
                    for j in 0..m {
                        let c = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                        u.scaled_add(c, &v.column(j));
                    }
                    u
                })
                .collect()
        }
    };
    let w = op.inner_weights();
    let points: Vec<C64> = vectors
        .iter()
        .map(|u| {
            let au = op.entries.dot(u);
            let num: C64 = au.iter().zip(u).zip(&w).map(|((a, u), w)| a * u.conj() * w).sum();
            let den: f64 = u.iter().zip(&w).map(|(u, w)| u.norm_sqr() * w).sum();
            num / den
        })
        .collect();
    Ok(NumericalRangeSample {
        hull_re_max: points.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max),
        hull_im_min: points.iter().map(|p| p.im).fold(f64::INFINITY, f64::min),
        hull_im_max: points.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max),
        points,
    })
}

/// Operator whose abscissa enters Σ for mode k: 𝓛₁ for k = 1 (the
/// constrained mode-one space), H_k otherwise.
pub fn mode_operator(grid: &RadialGrid, k: i32, alpha: f64) -> Result<OperatorMatrix> {
    let p = ModeParams::new(k, alpha)?;
    if k.abs() == 1 {
        assemble_l1_wavereduced(grid, &ModeParams::new(1, alpha * k.signum() as f64)?)
    } else {
        assemble_hk(grid, &p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeAbscissa {
    pub k: i32,
    pub abscissa: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaBound {
    pub alpha: f64,
    pub sigma: f64,
    pub argmax_k: i32,
    pub per_mode: Vec<ModeAbscissa>,
    /// Abscissa of the maximizing mode on the refined grid.
    pub refined_abscissa: f64,
    pub grid_robust: bool,
    pub warning: Option<String>,
}

/// Robustness tolerance on reported abscissae.
pub const ROBUST_TOL: f64 = 1e-4;

/// Σ(α) = −max_k s(mode k) over 1 ≤ k ≤ k_max.
pub fn sigma_bound(alpha: f64, k_max: i32, grid: &RadialGrid) -> Result<SigmaBound> {
    if k_max < 2 {
        return Err(Error::param("k_max", "must be at least 2"));
    }
    let per_mode: Vec<ModeAbscissa> = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let s = eigenvalues(&mode_operator(grid, k, alpha)?)?;
            Ok(ModeAbscissa { k, abscissa: s.abscissa })
        })
        .collect::<Result<_>>()?;
    let best = per_mode.iter().max_by(|a, b| a.abscissa.total_cmp(&b.abscissa)).unwrap();
    let fine = eigenvalues(&mode_operator(&grid.refined()?, best.k, alpha)?)?;
    let robust = (fine.abscissa - best.abscissa).abs() < ROBUST_TOL * best.abscissa.abs().max(1.0);
    let warning = (best.k == k_max).then(|| format!("maximizing mode is k_max = {k_max}; truncation suspect"));
    Ok(SigmaBound {
        alpha,
        sigma: -best.abscissa,
        argmax_k: best.k,
        refined_abscissa: fine.abscissa,
        grid_robust: robust,
        warning,
        per_mode,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModePsi {
    pub k: i32,
    pub psi: f64,
    pub lambda_star: f64,
    pub refined: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiBound {
    pub alpha: f64,
    pub psi: f64,
    pub argmin_k: i32,
    pub per_mode: Vec<ModePsi>,
}

/// Ψ for one mode, scanning the default window seeded with the imaginary
/// parts of the leading eigenvalues.
pub fn mode_psi(grid: &RadialGrid, k: i32, alpha: f64, n_coarse: usize) -> Result<ModePsi> {
    let op = mode_operator(grid, k, alpha)?;
    let spec = eigenvalues(&op)?;
    let seeds: Vec<f64> = spec.leading(12).iter().map(|z| z.im).collect();
    let beta = k as f64 * alpha / (8.0 * std::f64::consts::PI);
    let scan = resolvent_scan_seeded(&op, default_window(beta), n_coarse, &seeds)?;
    Ok(ModePsi { k, psi: scan.psi, lambda_star: scan.lambda_star, refined: scan.bracket_refined })
}

/// Ψ(α) = min over modes 1 ≤ k ≤ k_max of the mode pseudospectral bound.
pub fn psi_bound(alpha: f64, k_max: i32, grid: &RadialGrid, n_coarse: usize) -> Result<PsiBound> {
    if k_max < 2 {
        return Err(Error::param("k_max", "must be at least 2"));
    }
    let per_mode: Vec<ModePsi> = (1..=k_max).into_par_iter().map(|k| mode_psi(grid, k, alpha, n_coarse)).collect::<Result<_>>()?;
    let best = per_mode.iter().min_by(|a, b| a.psi.total_cmp(&b.psi)).unwrap();
    Ok(PsiBound { alpha, psi: best.psi, argmin_k: best.k, per_mode })
}

/// Pair each of the leading `m` values of `a` with its nearest unused value in
/// `b`. Returns the largest distance and the pairs. A match is ambiguous when
/// another candidate in `b` is within twice the chosen distance and the two
/// candidates are not themselves closer than `tol`.
pub fn match_leading(a: &[C64], b: &[C64], m: usize, tol: f64) -> Result<(f64, Vec<(C64, C64)>)> {
    let mut used = vec![false; b.len()];
    let mut pairs = Vec::new();
    let mut worst = 0.0f64;
    for &x in a.iter().take(m) {
        let mut cand: Vec<(f64, usize)> = b.iter().enumerate().filter(|(j, _)| !used[*j]).map(|(j, y)| ((x - y).norm(), j)).collect();
        cand.sort_by(|p, q| p.0.total_cmp(&q.0));
        let (d, j) = *cand.first().ok_or_else(|| Error::Pairing("second list exhausted".into()))?;
        if let Some(&(d2, j2)) = cand.get(1) {
            if d > tol && d2 < 2.0 * d && (b[j] - b[j2]).norm() > tol {
                return Err(Error::Pairing(format!("{x} is about as close to {} as to {}", b[j], b[j2])));
            }
        }
        used[j] = true;
        worst = worst.max(d);
        pairs.push((x, b[j]));
    }
    Ok((worst, pairs))
}
