//! Parameter sweeps, resolvent-gap and coercivity tables, inequality scans
//! and localization datasets.

use std::f64::consts::{FRAC_PI_8, PI};

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deform::{localization_regions, LocalizationRegion};
use crate::grid::{build_grid, GridMeta, RadialGrid};
use crate::linalg::{inv, norm2, scale_cols, scale_rows, to_complex, to_weighted, vec_norm};
use crate::ops::{
    assemble_lhat, assemble_yframe, assemble_z1_hat, assemble_zk_hat, kernel_operator, zeta, LhatKind, ModeParams,
};
use crate::profiles;
use crate::spectral::{
    default_window, eigenvalues, mode_operator, resolvent_scan_seeded, robust_flags, smoothed_gaussian_vectors,
    ROBUST_TOL,
};
use crate::{CMat, Error, Result, C64};

pub fn grid_from(meta: &GridMeta) -> Result<RadialGrid> {
    build_grid(meta.n, meta.r_max, meta.scheme)
}

fn beta_of(k: i32, alpha: f64) -> f64 {
    k as f64 * alpha / (8.0 * PI)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Standard error of the slope; NaN with two points.
    pub stderr: f64,
    pub n_points: usize,
}

/// Least squares for log y = log c + p log x.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::param("fit", "need at least two aligned points"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::param("fit", "power-law fit needs positive finite data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("fit", "abscissae coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let p = sxy / sxx;
    let c = my - p * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - c - p * a).powi(2)).sum();
    let stderr = if lx.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(PowerFit { exponent: p, prefactor: c.exp(), stderr, n_points: lx.len() })
}

/// Indices of the upper half of the log range (the midpoint is included up
/// to rounding of the grid values).
pub fn upper_half(alphas: &[f64]) -> Vec<usize> {
    let lo = alphas.iter().copied().fold(f64::INFINITY, f64::min).ln();
    let hi = alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln();
    let mid = 0.5 * (lo + hi);
    (0..alphas.len()).filter(|&i| alphas[i].ln() >= mid - 1e-3).collect()
}

pub const DESK_ALPHAS: [f64; 7] = [100.0, 178.0, 316.0, 562.0, 1000.0, 1778.0, 3162.0];

fn check_alpha_grid(alphas: &[f64], alpha_min: f64) -> Result<()> {
    if alphas.len() < 2 {
        return Err(Error::param("alpha_grid", "need at least two values"));
    }
    if alphas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("alpha_grid", "must be strictly increasing"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a >= alpha_min)) {
        return Err(Error::param("alpha_grid", format!("value {a} is below the asymptotic threshold {alpha_min}")));
    }
    // 100..3162 is 1.49996 decades; allow for rounding of the endpoints
    if (alphas[alphas.len() - 1] / alphas[0]).log10() < 1.5 - 1e-3 {
        return Err(Error::param("alpha_grid", "must span at least 1.5 decades"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SweepOptions {
    pub alpha_min: f64,
    /// Coarse points in each resolvent scan (eigenvalue seeds are added).
    pub n_coarse: usize,
    pub ordering_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { alpha_min: 50.0, n_coarse: 24, ordering_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub alpha: f64,
    pub k: i32,
    pub abscissa: f64,
    pub psi: f64,
    pub lambda_star: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub alphas: Vec<f64>,
    pub sigma: Vec<f64>,
    pub psi: Vec<f64>,
    pub sigma_exponent: f64,
    pub psi_exponent: f64,
    pub sigma_fit: Option<PowerFit>,
    pub psi_fit: Option<PowerFit>,
    /// Range of Σ/α^{1/2} over the fit window.
    pub sigma_prefactor_band: (f64, f64),
    pub psi_prefactor_band: (f64, f64),
    pub per_mode_argmax: Vec<i32>,
    pub psi_argmin: Vec<i32>,
    pub grid_robust: Vec<bool>,
    pub fit_window: Vec<usize>,
    pub cells: Vec<SweepCell>,
    pub ordering_ok: bool,
    pub monotone_violations: Vec<String>,
    pub warnings: Vec<String>,
}

fn sweep_cell(grid: &RadialGrid, k: i32, alpha: f64, n_coarse: usize) -> Result<SweepCell> {
    let op = mode_operator(grid, k, alpha)?;
    let spec = eigenvalues(&op)?;
    let seeds: Vec<f64> = spec.leading(12).iter().map(|z| z.im).collect();
    let scan = resolvent_scan_seeded(&op, default_window(beta_of(k, alpha)), n_coarse, &seeds)?;
    Ok(SweepCell { alpha, k, abscissa: spec.abscissa, psi: scan.psi, lambda_star: scan.lambda_star })
}

/// Σ(α) and Ψ(α) over the grid of circulations, with power-law fits on the
/// upper half of the log range.
pub fn run_sweep(alphas: &[f64], k_max: i32, grid_cfg: &GridMeta, opts: &SweepOptions) -> Result<SweepResult> {
    check_alpha_grid(alphas, opts.alpha_min)?;
    if k_max < 2 {
        return Err(Error::param("k_max", "must be at least 2"));
    }
    let grid = grid_from(grid_cfg)?;
    let fine = grid.refined()?;
    let jobs: Vec<(f64, i32)> = alphas.iter().flat_map(|&a| (1..=k_max).map(move |k| (a, k))).collect();
    let cells: Vec<SweepCell> = jobs.par_iter().map(|&(a, k)| sweep_cell(&grid, k, a, opts.n_coarse)).collect::<Result<_>>()?;

    let nk = k_max as usize;
    let mut sigma = Vec::new();
    let mut psi = Vec::new();
    let mut argmax = Vec::new();
    let mut argmin = Vec::new();
    let mut robust = Vec::new();
    let mut warnings = Vec::new();
    let mut monotone_violations = Vec::new();
    for (i, &a) in alphas.iter().enumerate() {
        let row = &cells[i * nk..(i + 1) * nk];
        let best = row.iter().max_by(|x, y| x.abscissa.total_cmp(&y.abscissa)).unwrap();
        let low = row.iter().min_by(|x, y| x.psi.total_cmp(&y.psi)).unwrap();
        let refined = eigenvalues(&mode_operator(&fine, best.k, a)?)?.abscissa;
        let ok = (refined - best.abscissa).abs() < ROBUST_TOL * best.abscissa.abs().max(1.0);
        if !ok {
            warnings.push(format!("alpha = {a}: abscissa of mode {} moves from {} to {} on the refined grid", best.k, best.abscissa, refined));
        }
        if best.k == k_max {
            warnings.push(format!("alpha = {a}: maximizing mode is k_max = {k_max}"));
        }
        for w in row[1..].windows(2) {
            // −s(H_k) nondecreasing in k ≥ 2
            if w[1].abscissa > w[0].abscissa + ROBUST_TOL * w[0].abscissa.abs().max(1.0) {
                monotone_violations.push(format!("alpha = {a}: s(H_{}) = {} > s(H_{}) = {}", w[1].k, w[1].abscissa, w[0].k, w[0].abscissa));
            }
        }
        sigma.push(-best.abscissa);
        psi.push(low.psi);
        argmax.push(best.k);
        argmin.push(low.k);
        robust.push(ok);
    }
    let ordering_ok = sigma.iter().zip(&psi).all(|(s, p)| *s >= *p - opts.ordering_tol * s.abs().max(1.0) && *p >= 1.0 - opts.ordering_tol);

    let window: Vec<usize> = upper_half(alphas).into_iter().filter(|&i| robust[i]).collect();
    let xs: Vec<f64> = window.iter().map(|&i| alphas[i]).collect();
    let fit = |v: &[f64]| -> Option<PowerFit> {
        let ys: Vec<f64> = window.iter().map(|&i| v[i]).collect();
        fit_power_law(&xs, &ys).ok()
    };
    let sigma_fit = fit(&sigma);
    let psi_fit = fit(&psi);
    if sigma_fit.is_none() {
        warnings.push("fewer than two grid-robust points in the fit window".into());
    }
    let band = |v: &[f64], p: f64| {
        window.iter().map(|&i| v[i] / alphas[i].powf(p)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    Ok(SweepResult {
        alphas: alphas.to_vec(),
        sigma_exponent: sigma_fit.map_or(f64::NAN, |f| f.exponent),
        psi_exponent: psi_fit.map_or(f64::NAN, |f| f.exponent),
        sigma_prefactor_band: band(&sigma, 0.5),
        psi_prefactor_band: band(&psi, 1.0 / 3.0),
        sigma,
        psi,
        sigma_fit,
        psi_fit,
        per_mode_argmax: argmax,
        psi_argmin: argmin,
        grid_robust: robust,
        fit_window: window,
        cells,
        ordering_ok,
        monotone_violations,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossFrame {
    pub alpha: f64,
    pub k: i32,
    pub l2r_abscissa: f64,
    pub y_abscissa: f64,
    pub diff: f64,
    pub agree: bool,
}

/// Abscissa of mode k from the L²_r frame against the Gaussian-weighted
/// frame on its own (coarser) grid. Only meaningful for |k| ≥ 2, where both
/// frames see the same spectrum.
pub fn cross_frame_check(alpha: f64, k: i32, l2r: &GridMeta, yframe: &GridMeta, tol: f64) -> Result<CrossFrame> {
    if k.abs() < 2 {
        return Err(Error::param("k", "cross-frame check needs |k| >= 2"));
    }
    let a = eigenvalues(&mode_operator(&grid_from(l2r)?, k, alpha)?)?.abscissa;
    let b = eigenvalues(&assemble_yframe(&grid_from(yframe)?, &ModeParams::new(k, alpha)?)?)?.abscissa;
    let diff = (a - b).abs();
    Ok(CrossFrame { alpha, k, l2r_abscissa: a, y_abscissa: b, diff, agree: diff <= tol * a.abs().max(1.0) })
}

/// Norm in the quadrature inner product of a nodal operator.
fn wnorm(grid: &RadialGrid, m: &CMat) -> Result<f64> {
    norm2(&to_weighted(m, grid.weights()))
}

fn zhat(grid: &RadialGrid, k: i32) -> Result<CMat> {
    let op = if k.abs() == 1 { assemble_z1_hat(grid) } else { assemble_zk_hat(grid, k.abs())? };
    inv(&op.entries)
}

fn lhat_inv(grid: &RadialGrid, k: i32, alpha: f64) -> Result<CMat> {
    let p = ModeParams::new(k, alpha)?;
    let which = if k == 1 { LhatKind::K1 } else { LhatKind::KGeneral };
    inv(&assemble_lhat(grid, &p, which)?.entries)
}

/// d = ‖L̂⁻¹ − Ẑ⁻¹‖ for one mode and circulation.
pub fn resolvent_gap(grid: &RadialGrid, k: i32, alpha: f64) -> Result<f64> {
    wnorm(grid, &(lhat_inv(grid, k, alpha)? - zhat(grid, k)?))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapDecay {
    pub k: i32,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub d: Vec<f64>,
    /// Slope of log d against log β on the upper half of the range.
    pub exponent: f64,
    pub fit: PowerFit,
    /// Smallest C with d ≤ C β^{−1/10} at every point.
    pub c_fit: f64,
    pub monotone: bool,
    pub pass: bool,
}

pub const GAP_EXPONENT_MAX: f64 = -0.08;

pub fn resolvent_gap_decay(alphas: &[f64], k: i32, grid_cfg: &GridMeta) -> Result<GapDecay> {
    check_alpha_grid(alphas, 50.0)?;
    if k < 1 {
        return Err(Error::param("k", "must be positive"));
    }
    let grid = grid_from(grid_cfg)?;
    let zi = zhat(&grid, k)?;
    let d: Vec<f64> = alphas.iter().map(|&a| wnorm(&grid, &(lhat_inv(&grid, k, a)? - &zi))).collect::<Result<_>>()?;
    let betas: Vec<f64> = alphas.iter().map(|&a| beta_of(k, a)).collect();
    let win = upper_half(alphas);
    let fit = fit_power_law(&win.iter().map(|&i| betas[i]).collect::<Vec<_>>(), &win.iter().map(|&i| d[i]).collect::<Vec<_>>())?;
    let c_fit = d.iter().zip(&betas).map(|(d, b)| d * b.powf(0.1)).fold(0.0, f64::max);
    let monotone = win.windows(2).all(|w| d[w[1]] <= d[w[0]]);
    Ok(GapDecay { k, alphas: alphas.to_vec(), betas, exponent: fit.exponent, pass: fit.exponent <= GAP_EXPONENT_MAX && c_fit.is_finite(), d, fit, c_fit, monotone })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoercivityEntry {
    pub k: i32,
    pub quantity: String,
    /// Empty for α-independent quantities.
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
    /// max/min over the sweep (1 for α-independent quantities).
    pub spread: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub entries: Vec<CoercivityEntry>,
    pub r2_z1_inv: Option<f64>,
    pub pass: bool,
}

pub const STABILITY_SPREAD: f64 = 1.10;

fn entry(k: i32, quantity: &str, alphas: Vec<f64>, values: Vec<f64>) -> CoercivityEntry {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max / min;
    CoercivityEntry { k, quantity: quantity.to_string(), alphas, max, spread, stable: values.iter().all(|v| v.is_finite()) && spread <= STABILITY_SPREAD, values }
}

fn diag(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Vec<C64> {
    grid.nodes().iter().map(|&r| C64::from(f(r))).collect()
}

fn left(d: &[C64], m: &CMat) -> CMat {
    let mut out = m.clone();
    scale_rows(&mut out, d);
    out
}

fn right(m: &CMat, d: &[C64]) -> CMat {
    let mut out = m.clone();
    scale_cols(&mut out, d);
    out
}

/// sup over smoothed random f of k²‖𝒦_k f‖/‖r²f‖.
pub fn kernel_ratio(grid: &RadialGrid, k: i32, samples: usize, seed: u64) -> Result<f64> {
    let kop = to_complex(&*kernel_operator(grid, k)?);
    let sw: Array1<f64> = grid.weights().mapv(f64::sqrt);
    let r2: Array1<f64> = grid.nodes().mapv(|r| r * r);
    let wn = |v: &Array1<C64>| vec_norm(&(v * &sw.mapv(C64::from)));
    let mut best = 0.0f64;
    for f in smoothed_gaussian_vectors(grid, samples, seed)? {
        let kf = kop.dot(&f);
        let rf = &f * &r2.mapv(C64::from);
        best = best.max((k * k) as f64 * wn(&kf) / wn(&rf));
    }
    Ok(best)
}

/// Matrix-norm quantities of the model and deformed inverses over the sweep.
pub fn coercivity_table(alphas: &[f64], k_list: &[i32], grid_cfg: &GridMeta, seed: u64) -> Result<CoercivityReport> {
    if alphas.is_empty() || k_list.is_empty() {
        return Err(Error::param("coercivity", "alpha grid and k list must be non-empty"));
    }
    if let Some(k) = k_list.iter().find(|k| **k < 1) {
        return Err(Error::param("k_list", format!("mode {k} is not positive")));
    }
    let grid = grid_from(grid_cfg)?;
    let d1 = to_complex(grid.d1());
    let d2 = to_complex(grid.d2());
    let mut entries = Vec::new();
    let mut r2_z1_inv = None;
    for &k in k_list {
        let kf = k as f64;
        let zi = zhat(&grid, k)?;
        let n = |m: CMat| wnorm(&grid, &m);
        let one = |name: &str, v: f64| entry(k, name, Vec::new(), vec![v]);
        entries.push(one("d2_zinv", n(d2.dot(&zi))?));
        let r2z = n(left(&diag(&grid, |r| r * r), &zi))?;
        if k == 1 {
            r2_z1_inv = Some(r2z);
            entries.push(one("r2_zinv", r2z));
            entries.push(one("rm2_zinv", n(left(&diag(&grid, |r| 1.0 / (r * r)), &zi))?));
        } else {
            entries.push(one("k2_kernel_over_r2", kernel_ratio(&grid, k, 64, seed)?));
            entries.push(one("k2_rm2_zinv", kf * kf * n(left(&diag(&grid, |r| 1.0 / (r * r)), &zi))?));
            entries.push(one("r2_zinv", r2z));
            entries.push(one("k_zinv", kf * n(zi.clone())?));
        }
        let rows: Vec<[f64; 6]> = alphas
            .par_iter()
            .map(|&a| {
                let li = lhat_inv(&grid, k, a)?;
                let m = diag(&grid, |r| r.min(beta_of(k, a).powf(0.25)));
                let ml = left(&m, &li);
                Ok([
                    n(d1.dot(&li))?,
                    n(left(&diag(&grid, |r| 1.0 / r), &li))?,
                    n(li.clone())?,
                    n(ml.clone())?,
                    n(right(&li, &m))?,
                    n(right(&ml, &m))?,
                ])
            })
            .collect::<Result<_>>()?;
        for (j, name) in ["dr_linv", "rm1_linv", "linv", "m_linv", "linv_m", "m_linv_m"].iter().enumerate() {
            entries.push(entry(k, name, alphas.to_vec(), rows.iter().map(|r| r[j]).collect()));
        }
    }
    let pass = entries.iter().all(|e| e.stable) && r2_z1_inv.is_none_or(|v| v <= 1.0 + 1e-6);
    Ok(CoercivityReport { entries, r2_z1_inv, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaId {
    #[serde(rename = "A1_f")]
    A1F,
    #[serde(rename = "A1_sigma")]
    A1Sigma,
    A2,
    A3,
    P54,
    P57,
    P55,
    P58,
}

impl std::str::FromStr for LemmaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::param("lemma", format!("unknown lemma id `{s}` (A1_f, A1_sigma, A2, A3, P54, P57, P55, P58)")))
    }
}

impl std::fmt::Display for LemmaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| std::fmt::Error)?;
        write!(f, "{}", v.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanResolution {
    pub n_angles: usize,
    pub n_magnitudes: usize,
    pub n_radii: usize,
    pub zeta_range: (f64, f64),
    pub r_range: (f64, f64),
    /// Random test functions per (ζ, k) for A3.
    pub n_vectors: usize,
    pub k_max: i32,
    pub grid: GridMeta,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

impl Default for ScanResolution {
    fn default() -> Self {
        ScanResolution {
            n_angles: 9,
            n_magnitudes: 25,
            n_radii: 60,
            zeta_range: (0.05, 20.0),
            r_range: (1e-3, 12.0),
            n_vectors: 16,
            k_max: 8,
            grid: GridMeta { n: 160, r_max: 12.0, scheme: crate::grid::Scheme::MappedChebyshev },
            alphas: DESK_ALPHAS.to_vec(),
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InequalityScanReport {
    pub lemma_id: LemmaId,
    pub scan_domain: String,
    /// sup of the ratio for upper bounds, inf for lower bounds; for the
    /// operator-norm reports, the largest quantity over the sweep.
    pub fitted_constant: f64,
    pub violations: usize,
    /// Most adverse single ratio; for the operator-norm reports, the largest
    /// max/min spread over α.
    pub worst_ratio: f64,
    pub evaluations: usize,
    /// Same constant at doubled radial resolution, where computed.
    pub refined_constant: Option<f64>,
    pub pass: bool,
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Angles strictly inside (−π/8, π/8).
fn open_sector_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| -FRAC_PI_8 + (i as f64 + 0.5) * 2.0 * FRAC_PI_8 / n as f64).collect()
}

/// Angles in the closed sector [π/16, π/8].
fn s4_angles(n: usize) -> Vec<f64> {
    let lo = FRAC_PI_8 / 2.0;
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (FRAC_PI_8 - lo) * i as f64 / (n - 1) as f64).collect()
}

fn a1_ratio(which: LemmaId, zeta: C64, r: f64) -> f64 {
    let z = zeta * zeta * r * r / 4.0;
    let m = zeta.norm();
    match which {
        // ζ²f(ζr) − 8/r² = ζ²(F₃(z) − 2/z)
        LemmaId::A1F => (zeta * zeta * profiles::f3_remainder(z)).norm() / (m * m),
        // σ(ζr) − 1 + ζ²r²/8 = F₁(z) − 1 + z/2
        _ => profiles::f1_remainder(z).norm() / (m.powi(4) * r.powi(4)).min(m * m * r * r),
    }
}

/// Im(ζ²(1 − σ(ζr))) with 1 − σ = z/2 − (F₁ − 1 + z/2).
fn potential_im(zeta: C64, r: f64) -> f64 {
    let z = zeta * zeta * r * r / 4.0;
    (zeta * zeta * (z / 2.0 - profiles::f1_remainder(z))).im
}

fn a2_weight(zeta: C64, r: f64) -> f64 {
    let m = zeta.norm();
    (m.powi(4) * r * r).min(m * m)
}

/// The series/closed-form switch sits at |ζr| = 1/2; the ratio must be
/// continuous across it on every ray.
fn continuity_check(which: LemmaId, angles: &[f64]) -> Result<()> {
    for &th in angles {
        for &m in &[0.1, 1.0, 10.0] {
            let zeta = C64::from_polar(m, th);
            let r0 = profiles::SERIES_RADIUS / m;
            let eval = |r: f64| match which {
                LemmaId::A2 => potential_im(zeta, r) / a2_weight(zeta, r),
                _ => a1_ratio(which, zeta, r),
            };
            let (a, b) = (eval(r0 * (1.0 - 1e-9)), eval(r0 * (1.0 + 1e-9)));
            if (a - b).abs() > 1e-6 * a.abs().max(b.abs()) {
                return Err(Error::Contour(format!(
                    "{which}: ratio jumps from {a} to {b} across the series switch at zeta = {zeta}"
                )));
            }
        }
    }
    Ok(())
}

struct PointScan {
    extreme: f64,
    violations: usize,
    evaluations: usize,
}

fn point_scan(which: LemmaId, res: &ScanResolution, n_radii: usize) -> PointScan {
    let angles = if which == LemmaId::A2 { s4_angles(res.n_angles) } else { open_sector_angles(res.n_angles) };
    let mags = log_space(res.zeta_range.0, res.zeta_range.1, res.n_magnitudes);
    let radii = log_space(res.r_range.0, res.r_range.1, n_radii);
    let lower = which == LemmaId::A2;
    let mut extreme = if lower { f64::INFINITY } else { 0.0 };
    let mut violations = 0;
    let mut evaluations = 0;
    for &th in &angles {
        for &m in &mags {
            let zeta = C64::from_polar(m, th);
            for &r in &radii {
                evaluations += 1;
                let ratio = if lower { potential_im(zeta, r) / a2_weight(zeta, r) } else { a1_ratio(which, zeta, r) };
                if !ratio.is_finite() || (lower && ratio <= 0.0) {
                    violations += 1;
                    continue;
                }
                extreme = if lower { extreme.min(ratio) } else { extreme.max(ratio) };
            }
        }
    }
    PointScan { extreme, violations, evaluations }
}

fn a3_scan(res: &ScanResolution) -> Result<PointScan> {
    if res.k_max < 2 {
        return Err(Error::param("k_max", "A3 needs modes k >= 2"));
    }
    let grid = grid_from(&res.grid)?;
    let w = grid.weights();
    let r = grid.nodes();
    let fs = smoothed_gaussian_vectors(&grid, res.n_vectors, res.seed)?;
    let mags = log_space(res.zeta_range.0.max(0.1), res.zeta_range.1.min(10.0), res.n_magnitudes);
    let angles = s4_angles(res.n_angles.min(4));
    let mut extreme = f64::INFINITY;
    let mut violations = 0;
    let mut evaluations = 0;
    for k in 2..=res.k_max {
        let kop = to_complex(&*kernel_operator(&grid, k)?);
        for &th in &angles {
            for &m in &mags {
                let zeta = C64::from_polar(m, th);
                let pot: Vec<f64> = r.iter().map(|&r| potential_im(zeta, r)).collect();
                let rhs_w: Vec<f64> = r.iter().map(|&r| a2_weight(zeta, r)).collect();
                // ζ⁴g(ζr)g(ζs) = p(r)p(s) with p = ζ²g(ζr)
                let p: Vec<C64> = r.iter().map(|&r| zeta * zeta * profiles::g_c(zeta * r)).collect();
                for f in &fs {
                    let fre: Array1<C64> = f.iter().zip(&p).map(|(f, p)| f * p.re).collect();
                    let fim: Array1<C64> = f.iter().zip(&p).map(|(f, p)| f * p.im).collect();
                    let k_re = kop.dot(&fre);
                    let k_im = kop.dot(&fim);
                    let mut lhs = 0.0;
                    let mut rhs = 0.0;
                    for i in 0..grid.n() {
                        let fc = f[i].conj();
                        let nonlocal = fc * (p[i].re * k_im[i] + p[i].im * k_re[i]);
                        lhs += w[i] * (pot[i] * f[i].norm_sqr() + nonlocal.re);
                        rhs += w[i] * rhs_w[i] * f[i].norm_sqr();
                    }
                    evaluations += 1;
                    let ratio = lhs / rhs;
                    if !ratio.is_finite() || ratio <= 0.0 {
                        violations += 1;
                    } else {
                        extreme = extreme.min(ratio);
                    }
                }
            }
        }
    }
    Ok(PointScan { extreme, violations, evaluations })
}

pub fn appendix_scan(lemma: LemmaId, res: &ScanResolution) -> Result<InequalityScanReport> {
    if res.n_angles == 0 || res.n_magnitudes == 0 || res.n_radii < 2 {
        return Err(Error::param("resolution", "angle, magnitude and radius counts must be positive"));
    }
    if !(res.zeta_range.0 > 0.0 && res.zeta_range.0 < res.zeta_range.1 && res.r_range.0 > 0.0 && res.r_range.0 < res.r_range.1) {
        return Err(Error::param("resolution", "ranges must be positive and increasing"));
    }
    let domain = |sector: &str| {
        format!(
            "zeta in {sector}: {} angles x {} magnitudes in [{}, {}]; r: {} log-spaced points in [{}, {}]",
            res.n_angles, res.n_magnitudes, res.zeta_range.0, res.zeta_range.1, res.n_radii, res.r_range.0, res.r_range.1
        )
    };
    match lemma {
        LemmaId::A1F | LemmaId::A1Sigma | LemmaId::A2 => {
            let angles = if lemma == LemmaId::A2 { s4_angles(res.n_angles) } else { open_sector_angles(res.n_angles) };
            continuity_check(lemma, &angles)?;
            let coarse = point_scan(lemma, res, res.n_radii);
            let fine = point_scan(lemma, res, 2 * res.n_radii);
            Ok(InequalityScanReport {
                lemma_id: lemma,
                scan_domain: domain(if lemma == LemmaId::A2 { "S4 = [pi/16, pi/8]" } else { "S = (-pi/8, pi/8)" }),
                fitted_constant: coarse.extreme,
                violations: coarse.violations + fine.violations,
                worst_ratio: coarse.extreme,
                evaluations: coarse.evaluations,
                refined_constant: Some(fine.extreme),
                pass: coarse.violations + fine.violations == 0 && coarse.extreme.is_finite(),
            })
        }
        LemmaId::A3 => {
            let s = a3_scan(res)?;
            Ok(InequalityScanReport {
                lemma_id: lemma,
                scan_domain: format!(
                    "zeta in S4: {} angles x {} magnitudes; k = 2..{}; {} smoothed random f on n = {}, R = {}",
                    res.n_angles.min(4),
                    res.n_magnitudes,
                    res.k_max,
                    res.n_vectors,
                    res.grid.n,
                    res.grid.r_max
                ),
                fitted_constant: s.extreme,
                violations: s.violations,
                worst_ratio: s.extreme,
                evaluations: s.evaluations,
                refined_constant: None,
                pass: s.violations == 0 && s.extreme.is_finite(),
            })
        }
        LemmaId::P54 | LemmaId::P57 => {
            let ks: Vec<i32> = if lemma == LemmaId::P54 { vec![1] } else { (2..=res.k_max.max(2)).collect() };
            let rep = coercivity_table(&res.alphas, &ks, &res.grid, res.seed)?;
            let unstable = rep.entries.iter().filter(|e| !e.stable).count();
            Ok(InequalityScanReport {
                lemma_id: lemma,
                scan_domain: format!("alpha in {:?}; k in {:?}; n = {}, R = {}", res.alphas, ks, res.grid.n, res.grid.r_max),
                fitted_constant: rep.entries.iter().map(|e| e.max).fold(0.0, f64::max),
                violations: unstable,
                worst_ratio: rep.entries.iter().map(|e| e.spread).fold(1.0, f64::max),
                evaluations: rep.entries.iter().map(|e| e.values.len()).sum(),
                refined_constant: None,
                pass: rep.pass,
            })
        }
        LemmaId::P55 | LemmaId::P58 => {
            let k = if lemma == LemmaId::P55 { 1 } else { 2 };
            let g = resolvent_gap_decay(&res.alphas, k, &res.grid)?;
            Ok(InequalityScanReport {
                lemma_id: lemma,
                scan_domain: format!("alpha in {:?}; k = {k}; n = {}, R = {}", res.alphas, res.grid.n, res.grid.r_max),
                fitted_constant: g.c_fit,
                violations: usize::from(!g.pass),
                worst_ratio: g.exponent,
                evaluations: g.d.len(),
                refined_constant: None,
                pass: g.pass,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaPolicy {
    /// δ = 2√d with d the resolvent gap at this α.
    TwoSqrtD,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RangeBox {
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl RangeBox {
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        z.re <= self.re_max + tol && z.im >= self.im_min - tol && z.im <= self.im_max + tol
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FigureEigen {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    pub grid_robust: bool,
    pub in_box: bool,
    /// In some region 𝒜_j, including those past the emitted N.
    pub contained: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FigureDataset {
    pub k: i32,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub d: Option<f64>,
    pub regions: Vec<LocalizationRegion>,
    pub eigenvalues: Vec<FigureEigen>,
    pub range_box: RangeBox,
    /// Number of grid-robust eigenvalues in each emitted region.
    pub region_hits: Vec<usize>,
    pub all_contained: bool,
    pub regions_nonempty: bool,
}

/// Localization discs for one mode together with the computed spectrum.
pub fn figure_dataset(params: &ModeParams, policy: DeltaPolicy, n_regions: usize, grid_cfg: &GridMeta) -> Result<FigureDataset> {
    let k = params.k();
    if k < 1 {
        return Err(Error::param("k", "figure data is produced for positive modes"));
    }
    if n_regions == 0 {
        return Err(Error::param("n_regions", "must be positive"));
    }
    let alpha = params.alpha();
    let beta = params.beta();
    let grid = grid_from(grid_cfg)?;
    let (delta, d) = match policy {
        DeltaPolicy::Fixed(x) => (x, None),
        DeltaPolicy::TwoSqrtD => {
            let d = resolvent_gap(&grid, k, alpha)?;
            (2.0 * d.sqrt(), Some(d))
        }
    };
    let zop = if k == 1 { assemble_z1_hat(&grid) } else { assemble_zk_hat(&grid, k)? };
    let mut lam: Vec<f64> = eigenvalues(&zop)?.eigenvalues.iter().map(|z| z.re).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    let regions = localization_regions(params, &lam[..n_regions.min(lam.len())], delta)?;

    let op = mode_operator(&grid, k, alpha)?;
    let spec = crate::spectral::eig(&op)?;
    let fine = eigenvalues(&mode_operator(&grid.refined()?, k, alpha)?)?;
    let robust = robust_flags(&spec.eigenvalues, &fine.eigenvalues, ROBUST_TOL);
    let range_box = RangeBox { re_max: 0.0, im_min: -beta, im_max: 0.0 };
    let z2 = {
        let z = zeta(beta);
        z * z
    };
    let mus: Vec<f64> = lam.iter().map(|l| 1.0 / l).collect();
    let eig: Vec<FigureEigen> = spec
        .eigenvalues
        .iter()
        .zip(&robust)
        .map(|(&l, &rb)| {
            let w = 1.0 / (z2 * (l - 0.5 + C64::new(0.0, beta)));
            FigureEigen {
                re: l.re,
                im: l.im,
                residual: spec.residual,
                grid_robust: rb,
                in_box: range_box.contains(l, 1e-8),
                contained: mus.iter().any(|m| (w - m).norm() <= delta),
            }
        })
        .collect();
    let robust_eigs: Vec<C64> = eig.iter().filter(|e| e.grid_robust).map(|e| C64::new(e.re, e.im)).collect();
    let region_hits: Vec<usize> = regions.iter().map(|g| robust_eigs.iter().filter(|z| g.contains(**z)).count()).collect();
    let all_contained = eig.iter().filter(|e| e.grid_robust).all(|e| e.contained && e.in_box);
    Ok(FigureDataset {
        k,
        alpha,
        beta,
        delta,
        d,
        regions_nonempty: region_hits.iter().all(|h| *h > 0),
        regions,
        eigenvalues: eig,
        range_box,
        region_hits,
        all_contained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Scheme;

    #[test]
    fn power_law_recovers_exponent() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12 && (f.prefactor - 3.0).abs() < 1e-12);
    }

    #[test]
    fn upper_half_of_desk_grid() {
        assert_eq!(upper_half(&DESK_ALPHAS), vec![3, 4, 5, 6]);
    }

    #[test]
    fn alpha_grid_checks() {
        assert!(check_alpha_grid(&DESK_ALPHAS, 50.0).is_ok());
        assert!(check_alpha_grid(&[100.0, 1000.0], 50.0).is_err());
        assert!(check_alpha_grid(&[10.0, 1000.0], 50.0).is_err());
    }

    #[test]
    fn a2_limit_at_large_argument() {
        let th = FRAC_PI_8 / 2.0;
        let zeta = C64::from_polar(5.0, th);
        let ratio = potential_im(zeta, 10.0) / a2_weight(zeta, 10.0);
        assert!((ratio - (2.0 * th).sin()).abs() < 1e-3);
    }

    #[test]
    fn a1_sigma_small_limit() {
        let r = a1_ratio(LemmaId::A1Sigma, C64::new(1.0, 0.0), 1e-3);
        assert!((r - 1.0 / 96.0).abs() < 1e-6);
        let r = a1_ratio(LemmaId::A1F, C64::new(1.0, 0.0), 1e-3);
        assert!((r - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn lemma_ids_round_trip() {
        for s in ["A1_f", "A1_sigma", "A2", "A3", "P54", "P57", "P55", "P58"] {
            assert_eq!(s.parse::<LemmaId>().unwrap().to_string(), s);
        }
        assert!("A4".parse::<LemmaId>().is_err());
    }

    #[test]
    fn small_a3_scan_has_no_violations() {
        let res = ScanResolution {
            n_angles: 2,
            n_magnitudes: 3,
            n_vectors: 2,
            k_max: 3,
            grid: GridMeta { n: 80, r_max: 10.0, scheme: Scheme::MappedChebyshev },
            ..Default::default()
        };
        let rep = appendix_scan(LemmaId::A3, &res).unwrap();
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.evaluations, 2 * 3 * 2 * 2);
    }
}
