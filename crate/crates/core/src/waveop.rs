//! Wave operators for k = 1 and the equivalence between H₁ on the constrained
//! space 𝒱 and the local operator 𝓛₁.

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::grid::RadialGrid;
use crate::linalg::{self, to_complex};
use crate::ops::{assemble_hk, assemble_l1_wavereduced, ModeParams};
use crate::profiles;
use crate::spectral::{eigenvalues, match_leading};
use crate::{CMat, Error, RMat, Result, C64};

/// φ(r) = r^{3/2} g(r), the profile orthogonal to 𝒱.
pub fn phi(r: f64) -> f64 {
    r.powf(1.5) * profiles::g(r)
}

/// g/(σ′ r^{3/2}), negative for r > 0.
fn wave_coefficient(r: f64) -> f64 {
    profiles::g(r) / (profiles::sigma_prime(r) * r.powf(1.5))
}

#[derive(Clone, Debug)]
pub struct WaveOperatorPair {
    pub t: RMat,
    pub tt: RMat,
    pub v_projector: RMat,
}

/// T w = w + (g/(σ′r^{3/2})) ∫₀^r s^{3/2} g w ds and
/// Tᵗ w = w + r^{3/2} g ∫_r^R g w/(σ′ s^{3/2}) ds.
pub fn build_wave_operators(grid: &RadialGrid) -> Result<WaveOperatorPair> {
    let r = grid.nodes();
    let n = grid.n();
    for &x in r {
        if !(profiles::sigma_prime(x) < 0.0) {
            return Err(Error::Linalg(format!("sigma' does not vanish for r > 0, but evaluates to {} at {x}", profiles::sigma_prime(x))));
        }
    }
    let lo = |_: f64, s: f64| phi(s);
    let hi = |_: f64, s: f64| wave_coefficient(s);
    let lower = grid.split_operator(Some(&lo), None);
    let upper = grid.split_operator(None, Some(&hi));
    let mut t = Array2::<f64>::eye(n);
    let mut tt = Array2::<f64>::eye(n);
    for i in 0..n {
        let a = wave_coefficient(r[i]);
        let p = phi(r[i]);
        for j in 0..n {
            t[[i, j]] += a * lower[[i, j]];
            tt[[i, j]] += p * upper[[i, j]];
        }
    }
    Ok(WaveOperatorPair { t, tt, v_projector: v_projector(grid) })
}

/// Orthogonal projection onto 𝒱 in the quadrature inner product.
pub fn v_projector(grid: &RadialGrid) -> RMat {
    let w = grid.weights();
    let p: Array1<f64> = grid.nodes().mapv(phi);
    let norm2: f64 = p.iter().zip(w).map(|(p, w)| p * p * w).sum();
    let n = grid.n();
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { 0.0 } - p[i] * p[j] * w[j] / norm2)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IdentityErrors {
    /// ‖T Tᵗ − I‖_max
    pub t_tt: f64,
    /// ‖Tᵗ T − P_𝒱‖_max
    pub tt_t: f64,
}

pub fn verify_identities(pair: &WaveOperatorPair) -> IdentityErrors {
    let n = pair.t.nrows();
    let a = pair.t.dot(&pair.tt) - Array2::<f64>::eye(n);
    let b = pair.tt.dot(&pair.t) - &pair.v_projector;
    let mx = |m: &RMat| m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    IdentityErrors { t_tt: mx(&a), tt_t: mx(&b) }
}

/// H₁ compressed to 𝒱 on both sides, as an (n−1)×(n−1) matrix in an
/// orthonormal basis of 𝒱 (quadrature-weighted coordinates).
pub fn compressed_h1(grid: &RadialGrid, alpha: f64) -> Result<CMat> {
    let h = assemble_hk(grid, &ModeParams::new(1, alpha)?)?;
    let b = h.weighted();
    let w = grid.weights();
    let n = grid.n();
    let mut psi: Array1<f64> = grid.nodes().iter().zip(w).map(|(&r, &w)| phi(r) * w.sqrt()).collect();
    let nrm = psi.dot(&psi).sqrt();
    psi /= nrm;
    // Householder reflector sending ψ to ±e₁; its other columns span ψ^⊥.
    let mut v = psi.clone();
    let sign = if psi[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vn = v.dot(&v);
    let q = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { 0.0 } - 2.0 * v[i] * v[j] / vn);
    let qc = to_complex(&q);
    let full = qc.dot(&b).dot(&qc);
    Ok(full.slice(s![1.., 1..]).to_owned())
}

/// H₁ · P_𝒱 (projection on the right only), weighted coordinates.
pub fn right_projected_h1(grid: &RadialGrid, alpha: f64) -> Result<CMat> {
    let h = assemble_hk(grid, &ModeParams::new(1, alpha)?)?;
    let p = linalg::to_weighted(&to_complex(&v_projector(grid)), grid.weights());
    Ok(h.weighted().dot(&p))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub alpha: f64,
    pub discrepancy: f64,
    /// Same comparison with the projection applied on the right only.
    pub alt_discrepancy: f64,
    pub pairs: Vec<(C64, C64)>,
}

pub fn verify_spectral_equivalence(grid: &RadialGrid, params: &ModeParams, m: usize) -> Result<EquivalenceReport> {
    if params.k() != 1 {
        return Err(Error::param("k", "spectral equivalence is a k = 1 statement"));
    }
    let l1 = eigenvalues(&assemble_l1_wavereduced(grid, params)?)?;
    let compressed = linalg::eigvals(&compressed_h1(grid, params.alpha())?)?;
    let (disc, pairs) = match_leading(&l1.eigenvalues, &compressed, m, 1e-9)?;
    let mut alt = linalg::eigvals(&right_projected_h1(grid, params.alpha())?)?;
    if let Some((i, _)) = alt.iter().enumerate().min_by(|a, b| a.1.norm().total_cmp(&b.1.norm())) {
        alt.remove(i);
    }
    let alt_disc = match_leading(&l1.eigenvalues, &alt, m, 1e-9).map(|p| p.0).unwrap_or(f64::NAN);
    Ok(EquivalenceReport { alpha: params.alpha(), discrepancy: disc, alt_discrepancy: alt_disc, pairs })
}
