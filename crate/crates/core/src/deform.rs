//! Complex deformation: the dilation family U_z, z-independence of deformed
//! spectra, Riesz-projection counts and the disc regions that localize the
//! spectrum for large circulation.

use std::f64::consts::{FRAC_PI_8, PI};

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::RadialGrid;
use crate::linalg::{self, inv, norm2};
use crate::ops::{
    assemble_hk_deformed, assemble_hscript, assemble_z1, assemble_zk, check_deformation, zeta, ModeParams, OperatorMatrix,
};
use crate::spectral::{eigenvalues, match_leading};
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorTag {
    /// |arg z| < π/8
    S,
    /// π/16 ≤ arg z ≤ π/8
    S4,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DeformationPoint {
    pub z: C64,
    pub sector_tag: SectorTag,
}

impl DeformationPoint {
    pub fn new(z: C64, sector_tag: SectorTag) -> Result<Self> {
        let th = z.arg();
        let ok = z.norm() > 0.0
            && match sector_tag {
                SectorTag::S => th.abs() < FRAC_PI_8,
                SectorTag::S4 => (PI / 16.0 - 1e-14..=FRAC_PI_8 + 1e-14).contains(&th),
            };
        if ok {
            Ok(DeformationPoint { z, sector_tag })
        } else {
            Err(Error::param("z", format!("{z} is outside sector {sector_tag:?}")))
        }
    }
}

/// (U_z u)(r) = z^{1/2} u(zr) for real z > 0, by interpolation on the grid.
/// Values beyond R are taken as zero; the second component warns when the
/// discarded part of u is not negligible.
pub fn apply_uz(v: &Array1<C64>, z: f64, grid: &RadialGrid) -> Result<(Array1<C64>, Option<String>)> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::param("z", "dilation factor must be positive"));
    }
    let n = grid.n();
    if v.len() != n {
        return Err(Error::param("v", format!("expected length {n}")));
    }
    let r_max = grid.r_max();
    let targets: Vec<f64> = grid.nodes().iter().map(|r| z * r).collect();
    let m = grid.interp_matrix(&targets);
    let sz = z.sqrt();
    let out = Array1::from_shape_fn(n, |i| {
        if targets[i] >= r_max {
            C64::new(0.0, 0.0)
        } else {
            (0..n).map(|j| v[j] * m[[i, j]]).sum::<C64>() * sz
        }
    });
    let w = grid.weights();
    let total: f64 = v.iter().zip(w).map(|(x, w)| x.norm_sqr() * w).sum();
    // for z < 1 the part of u beyond zR is pushed past R and dropped
    let lost: f64 = v
        .iter()
        .zip(w)
        .zip(grid.nodes())
        .filter(|(_, &r)| r > z * r_max)
        .map(|((x, w), _)| x.norm_sqr() * w)
        .sum();
    let warning = (lost > 1e-12 * total).then(|| format!("mass fraction {:.2e} is mapped beyond R", lost / total));
    Ok((out, warning))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeformFamily {
    Z1,
    Zk,
    H,
    Hscript,
}

pub fn assemble_family(family: DeformFamily, grid: &RadialGrid, params: &ModeParams, z: C64) -> Result<OperatorMatrix> {
    match family {
        DeformFamily::Z1 => assemble_z1(grid, params, z),
        DeformFamily::Zk => assemble_zk(grid, params, z),
        DeformFamily::H => assemble_hk_deformed(grid, params, z),
        DeformFamily::Hscript => assemble_hscript(grid, params, z),
    }
}

/// Largest displacement of the leading `m` eigenvalues (at the first z) across
/// the deformations in `z_list`.
pub fn spectrum_z_independence(
    family: DeformFamily,
    params: &ModeParams,
    z_list: &[C64],
    grid: &RadialGrid,
    m: usize,
) -> Result<f64> {
    if z_list.is_empty() {
        return Err(Error::param("z_list", "empty"));
    }
    for &z in z_list {
        check_deformation(z)?;
    }
    let spectra: Vec<Vec<C64>> = z_list
        .par_iter()
        .map(|&z| Ok(eigenvalues(&assemble_family(family, grid, params, z)?)?.eigenvalues))
        .collect::<Result<_>>()?;
    let mut drift = 0.0f64;
    for other in &spectra[1..] {
        let (d, _) = match_leading(&spectra[0], other, m, 1e-7)?;
        drift = drift.max(d);
    }
    Ok(drift)
}

/// Tolerance on the trace and projector defect of a converged Riesz projection.
pub const CONTOUR_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProjectionCount {
    pub center: C64,
    pub radius: f64,
    pub n_quad: usize,
    pub trace: C64,
    pub count: usize,
    pub projector_defect: f64,
}

fn riesz_projector(b: &CMat, center: C64, radius: f64, n_quad: usize) -> Result<CMat> {
    let n = b.nrows();
    let terms: Vec<CMat> = (0..n_quad)
        .into_par_iter()
        .map(|j| {
            let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / n_quad as f64);
            let z = center + radius * e;
            let mut m = b.mapv(|v| -v);
            for i in 0..n {
                m[[i, i]] += z;
            }
            Ok(inv(&m)?.mapv(|v| v * radius * e))
        })
        .collect::<Result<_>>()?;
    let mut p = CMat::zeros((n, n));
    for t in terms {
        p = p + t;
    }
    Ok(p.mapv(|v| v / n_quad as f64))
}

/// Algebraic multiplicity inside |z − c| = ρ from the trace of the
/// trapezoidal Riesz projection. The count must agree with the one obtained
/// with 2·n_quad nodes.
pub fn riesz_count(a: &OperatorMatrix, center: C64, radius: f64, n_quad: usize) -> Result<ProjectionCount> {
    riesz_count_matrix(&a.weighted(), center, radius, n_quad, None)
}

pub fn riesz_count_matrix(b: &CMat, center: C64, radius: f64, n_quad: usize, eigs: Option<&[C64]>) -> Result<ProjectionCount> {
    if n_quad < 32 {
        return Err(Error::param("n_quad", "at least 32 nodes are required"));
    }
    if !(radius > 0.0) {
        return Err(Error::param("radius", "must be positive"));
    }
    let owned;
    let eigs = match eigs {
        Some(e) => e,
        None => {
            owned = linalg::eigvals(b)?;
            &owned
        }
    };
    if let Some(l) = eigs.iter().find(|l| ((*l - center).norm() - radius).abs() < 0.05 * radius) {
        return Err(Error::Contour(format!("eigenvalue {l} lies within 5% of the contour")));
    }
    let p = riesz_projector(b, center, radius, n_quad)?;
    let p2 = riesz_projector(b, center, radius, 2 * n_quad)?;
    let trace = p.diag().sum();
    let trace2 = p2.diag().sum();
    let count = trace2.re.round().max(0.0) as usize;
    if trace.re.round() as i64 != count as i64 {
        return Err(Error::Contour(format!("count changed from {} to {count} when doubling the nodes", trace.re.round())));
    }
    let defect = linalg::max_abs(&(p2.dot(&p2) - &p2));
    Ok(ProjectionCount { center, radius, n_quad: 2 * n_quad, trace: trace2, count, projector_defect: defect })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallReport {
    pub mu: f64,
    pub multiplicity: usize,
    pub separated: bool,
    pub count: Option<usize>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub d: f64,
    /// Power-iteration estimate of d (the SVD value is `d`).
    pub d_power: f64,
    pub delta: f64,
    pub hypothesis_ok: bool,
    pub escapes: Vec<C64>,
    pub no_escape: bool,
    pub balls: Vec<BallReport>,
    pub note: Option<String>,
}

fn power_norm(m: &CMat, iters: usize) -> f64 {
    let n = m.ncols();
    let mut x = Array1::from_shape_fn(n, |i| C64::new(1.0, 0.3 * (i as f64).sin()));
    let mut est = 0.0;
    for _ in 0..iters {
        let nx = linalg::vec_norm(&x);
        x.mapv_inplace(|v| v / nx);
        let y = m.dot(&x);
        est = linalg::vec_norm(&y);
        x = m.t().mapv(|v| v.conj()).dot(&y);
    }
    est
}

/// Check both conclusions of the compact-perturbation counting lemma for
/// A_α against the self-adjoint A with spectrum `eig_a`. Only the first
/// `max_balls` balls (largest |μ|) are counted by contour integration.
pub fn perturbation_certificate(a_alpha: &OperatorMatrix, a: &OperatorMatrix, eig_a: &[f64], delta: f64, max_balls: usize) -> Result<Certificate> {
    if a_alpha.dim() != a.dim() {
        return Err(Error::param("A", "dimension mismatch"));
    }
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    let ba = a_alpha.weighted();
    let b = a.weighted();
    if b.iter().zip(b.t().iter()).any(|(x, y)| (x - y.conj()).norm() > 1e-8 * (1.0 + x.norm())) {
        return Err(Error::param("A", "not self-adjoint in the quadrature inner product"));
    }
    let diff = &ba - &b;
    let d = norm2(&diff)?;
    let d_power = power_norm(&diff, 20);
    let hypothesis_ok = d <= delta * delta / 4.0;

    // distinct μ with multiplicities, largest |μ| first
    let mut mus: Vec<f64> = eig_a.to_vec();
    mus.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for m in mus {
        match distinct.last_mut() {
            Some((v, c)) if (*v - m).abs() <= 1e-9 * v.abs().max(1e-300) => *c += 1,
            _ => distinct.push((m, 1)),
        }
    }
    let eigs_alpha = linalg::eigvals(&ba)?;
    let escapes: Vec<C64> = eigs_alpha
        .iter()
        .copied()
        .filter(|l| !distinct.iter().any(|(m, _)| (l - m).norm() < delta))
        .collect();
    let mut balls = Vec::new();
    for (i, &(mu, mult)) in distinct.iter().enumerate().take(max_balls) {
        let separated = distinct.iter().enumerate().all(|(j, (m, _))| j == i || (m - mu).abs() > 2.0 * delta);
        let (count, note) = if separated {
            match riesz_count_matrix(&ba, C64::from(mu), delta, 32, Some(&eigs_alpha)) {
                Ok(pc) => (Some(pc.count), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, Some("ball overlaps a neighbouring ball".to_string()))
        };
        balls.push(BallReport { mu, multiplicity: mult, separated, count, note });
    }
    Ok(Certificate {
        d,
        d_power,
        delta,
        hypothesis_ok,
        no_escape: escapes.is_empty(),
        escapes,
        balls,
        note: (!hypothesis_ok).then(|| format!("hypothesis fails at this alpha: d = {d:.3e} > delta^2/4 = {:.3e}", delta * delta / 4.0)),
    })
}

/// Inverse of the operator as an operator (same grid and frame).
pub fn inverse_operator(op: &OperatorMatrix, label: &str) -> Result<OperatorMatrix> {
    let mut out = op.clone();
    out.entries = inv(&op.entries)?;
    out.label = label.to_string();
    Ok(out)
}

/// Image of the disc B(c, ρ) under z ↦ 1/z, for 0 ∉ B(c, ρ).
pub fn invert_disc(c: C64, rho: f64) -> Result<(C64, f64)> {
    let q = c.norm_sqr() - rho * rho;
    if !(q > 0.0) {
        return Err(Error::DeltaTooLarge(format!("disc B({c}, {rho}) contains the origin")));
    }
    Ok((c.conj() / q, rho / q))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationRegion {
    pub mode: i32,
    pub index: usize,
    pub center: C64,
    pub radius: f64,
    pub source_eig: f64,
    pub delta: f64,
}

impl LocalizationRegion {
    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() <= self.radius
    }
}

/// Discs ζ^{−2} Υ(B(λ_j⁻¹, δ)) − iβ + ½ for the given model eigenvalues λ_j.
pub fn localization_regions(params: &ModeParams, eigs_of_zhat: &[f64], delta: f64) -> Result<Vec<LocalizationRegion>> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    let beta = params.beta();
    let zeta = zeta(beta);
    let s = 1.0 / (zeta * zeta);
    eigs_of_zhat
        .iter()
        .enumerate()
        .map(|(j, &lam)| {
            if !(lam != 0.0 && delta < 1.0 / lam.abs()) {
                return Err(Error::DeltaTooLarge(format!("delta = {delta} is not below 1/|lambda_{}| = {}", j + 1, 1.0 / lam.abs())));
            }
            let (c, r) = invert_disc(C64::from(1.0 / lam), delta)?;
            Ok(LocalizationRegion {
                mode: params.k(),
                index: j + 1,
                center: s * c - C64::new(0.0, beta) + 0.5,
                radius: s.norm() * r,
                source_eig: lam,
                delta,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_inversion_maps_boundary() {
        for (c, rho) in [(C64::new(-0.125, 0.0), 0.01), (C64::new(0.3, -0.7), 0.2)] {
            let (cc, rr) = invert_disc(c, rho).unwrap();
            for j in 0..64 {
                let p = c + C64::from_polar(rho, 2.0 * PI * j as f64 / 64.0);
                assert!(((1.0 / p - cc).norm() - rr).abs() < 1e-12);
            }
        }
        assert!(invert_disc(C64::new(0.1, 0.0), 0.2).is_err());
    }

    #[test]
    fn zero_circulation_map() {
        let p = ModeParams::new(1, 0.0).unwrap();
        let regs = localization_regions(&p, &[-8.0], 1e-9).unwrap();
        // ζ² = 4, so w ↦ w/4 + 1/2 and the point −8 lands on −3/2
        assert!((regs[0].center - C64::new(-1.5, 0.0)).norm() < 1e-6);
    }
}
