//! Dense discretizations of the mode-k operators in the L²(dr) frame.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::grid::RadialGrid;
use crate::linalg::{add_diag, from_weighted, scale_cols, scale_rows, to_complex, to_weighted};
use crate::profiles::{self, check_sector};
use crate::{CMat, Error, RMat, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Angular mode k and circulation α. β_k = kα/(8π) is always recomputed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    k: i32,
    alpha: f64,
}

impl ModeParams {
    pub fn new(k: i32, alpha: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "angular mode must be nonzero"));
        }
        if !alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        Ok(ModeParams { k, alpha })
    }
    pub fn k(&self) -> i32 {
        self.k
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.k as f64 * self.alpha / (8.0 * PI)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceTag {
    L2r,
    Yk,
    V,
    L2rPair,
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub entries: CMat,
    pub grid: RadialGrid,
    pub space_tag: SpaceTag,
    pub label: String,
    pub params: Option<ModeParams>,
    pub deformation: Option<C64>,
}

impl OperatorMatrix {
    pub fn new(entries: CMat, grid: &RadialGrid, space_tag: SpaceTag, label: impl Into<String>) -> Self {
        OperatorMatrix { entries, grid: grid.clone(), space_tag, label: label.into(), params: None, deformation: None }
    }

    fn with_params(mut self, p: ModeParams) -> Self {
        self.params = Some(p);
        self
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Quadrature weights of the discrete inner product, repeated for pairs.
    pub fn inner_weights(&self) -> Array1<f64> {
        let w = self.grid.weights();
        let reps = self.dim() / w.len();
        Array1::from_iter((0..reps).flat_map(|_| w.iter().copied()))
    }

    /// Matrix in coordinates where the discrete inner product is Euclidean.
    pub fn weighted(&self) -> CMat {
        to_weighted(&self.entries, &self.inner_weights())
    }

    /// Replace the matrix by the one whose weighted form is the real symmetric
    /// part of the current weighted form.
    pub fn symmetrized(mut self) -> Self {
        let w = self.inner_weights();
        let b = to_weighted(&self.entries, &w);
        let bt = b.t().to_owned();
        let s = (&b + &bt).mapv(|v| C64::new(0.5 * v.re, 0.0));
        self.entries = from_weighted(&s, &w);
        self
    }

    /// ‖B − Bᵀ‖_max of the weighted form.
    pub fn weighted_asymmetry(&self) -> f64 {
        let b = self.weighted();
        let bt = b.t();
        b.iter().zip(bt.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

/// K_k(r, s) = (1/(2|k|)) min{r/s, s/r}^{|k|} (rs)^{1/2}.
pub fn kernel_value(k: i32, r: f64, s: f64) -> f64 {
    let k = k.unsigned_abs() as i32;
    let m = if r < s { r / s } else { s / r };
    m.powi(k) * (r * s).sqrt() / (2.0 * k as f64)
}

/// Nodal kernel matrix K_k(r_i, r_j) w_j.
pub fn kernel_matrix(grid: &RadialGrid, k: i32) -> Result<OperatorMatrix> {
    if k == 0 {
        return Err(Error::param("k", "kernel undefined for k = 0"));
    }
    let r = grid.nodes();
    let w = grid.weights();
    let n = grid.n();
    let m = Array2::from_shape_fn((n, n), |(i, j)| C64::from(kernel_value(k, r[i], r[j]) * w[j]));
    Ok(OperatorMatrix::new(m, grid, SpaceTag::L2r, format!("K_{k}")))
}

/// Kernel operator used in assembly: product integration against the grid
/// interpolant, splitting at the kink s = r. Memoized per grid and |k|.
pub fn kernel_operator(grid: &RadialGrid, k: i32) -> Result<Arc<RMat>> {
    if k == 0 {
        return Err(Error::param("k", "kernel undefined for k = 0"));
    }
    let ka = k.abs();
    Ok(grid.memo(&format!("kernel:{ka}"), || {
        let kern = move |r: f64, s: f64| kernel_value(ka, r, s);
        grid.split_operator(Some(&kern), Some(&kern))
    }))
}

/// ζ = (1/16 − iβ/8)^{−1/4}, principal branch.
pub fn zeta(beta: f64) -> C64 {
    let z = C64::new(1.0 / 16.0, -beta / 8.0).powf(-0.25);
    debug_assert!(z.arg().abs() < PI / 8.0);
    z
}

/// Deformation points live in the open sector |arg z| < π/8.
pub fn check_deformation(z: C64) -> Result<()> {
    if z.norm() > 0.0 && z.arg().abs() < PI / 8.0 + 1e-12 {
        Ok(())
    } else {
        Err(Error::param("z", format!("{z} is outside the sector |arg z| < pi/8")))
    }
}

/// z⁻²(D2 − c/r²) as a complex matrix.
fn radial_laplacian(grid: &RadialGrid, c: f64, z: C64) -> CMat {
    let mut m = to_complex(grid.d2());
    add_diag(&mut m, grid.nodes().iter().map(|r| C64::from(-c / (r * r))));
    let s = 1.0 / (z * z);
    m.mapv_inplace(|v| v * s);
    m
}

fn diag_values(grid: &RadialGrid, f: impl Fn(f64) -> C64) -> Vec<C64> {
    grid.nodes().iter().map(|&r| f(r)).collect()
}

/// c · diag(a) · Kop · diag(b)
fn kernel_block(kop: &RMat, a: &[C64], b: &[C64], c: C64) -> CMat {
    let mut m = to_complex(kop);
    scale_rows(&mut m, a);
    scale_cols(&mut m, b);
    m.mapv_inplace(|v| v * c);
    m
}

fn k2q(k: i32) -> f64 {
    (k as f64).powi(2) - 0.25
}

/// H_k = ∂² − (k²−¼)/r² − r²/16 + ½ − iβ(σ − g𝒦_k[g·]).
pub fn assemble_hk(grid: &RadialGrid, params: &ModeParams) -> Result<OperatorMatrix> {
    let mut op = assemble_hk_deformed(grid, params, C64::new(1.0, 0.0))?;
    op.deformation = None;
    op.label = format!("H_{}", params.k());
    Ok(op)
}

/// H_k^z = U_z H_k U_z⁻¹, continued analytically in z.
pub fn assemble_hk_deformed(grid: &RadialGrid, params: &ModeParams, z: C64) -> Result<OperatorMatrix> {
    check_deformation(z)?;
    let k = params.k();
    let beta = params.beta();
    let mut m = radial_laplacian(grid, k2q(k), z);
    let zr = diag_values(grid, |r| z * r);
    for x in &zr {
        check_sector(*x)?;
    }
    add_diag(&mut m, zr.iter().map(|&x| -(z * z) * (x / z).powi(2) / 16.0 + 0.5 - I * beta * profiles::sigma_c(x)));
    if beta != 0.0 {
        let gz: Vec<C64> = zr.iter().map(|&x| profiles::g_c(x)).collect();
        m = m + kernel_block(&*kernel_operator(grid, k)?, &gz, &gz, I * beta * z * z);
    }
    Ok(OperatorMatrix::new(m, grid, SpaceTag::L2r, format!("H_{}^z", k)).with_params(*params).deformed(z))
}

impl OperatorMatrix {
    fn deformed(mut self, z: C64) -> Self {
        self.deformation = Some(z);
        self
    }
}

/// 𝓛₁ = ∂² − 3/(4r²) − r²/16 − f + ½ − iβ₁σ, the k = 1 operator after the
/// wave-operator conjugation. Purely local.
pub fn assemble_l1_wavereduced(grid: &RadialGrid, params: &ModeParams) -> Result<OperatorMatrix> {
    if params.k() != 1 {
        return Err(Error::param("k", "the wave-reduced operator exists only for k = 1"));
    }
    let beta = params.beta();
    let mut m = radial_laplacian(grid, 0.75, C64::new(1.0, 0.0));
    add_diag(&mut m, diag_values(grid, |r| C64::new(-r * r / 16.0 - profiles::f(r) + 0.5, -beta * profiles::sigma(r))));
    Ok(OperatorMatrix::new(m, grid, SpaceTag::L2r, "L_1").with_params(*params))
}

/// 𝒵₁^z = z⁻²(∂² − 35/(4r²)) − z²(1/16 − iβ₁/8)r² − iβ₁ + ½; z = 1 is 𝒵₁.
pub fn assemble_z1(grid: &RadialGrid, params: &ModeParams, z: C64) -> Result<OperatorMatrix> {
    check_deformation(z)?;
    if params.k() != 1 {
        return Err(Error::param("k", "the complex oscillator model is defined for k = 1"));
    }
    let beta = params.beta();
    let mut m = radial_laplacian(grid, 35.0 / 4.0, z);
    let c = z * z * C64::new(1.0 / 16.0, -beta / 8.0);
    add_diag(&mut m, diag_values(grid, |r| -c * r * r - I * beta + 0.5));
    Ok(OperatorMatrix::new(m, grid, SpaceTag::L2r, "Z_1^z").with_params(*params).deformed(z))
}

/// 𝒵_k^z = z⁻²(∂² − (k²−¼)/r²) − z²(1/16 − iβ_k/8)r² + iβ_k z²𝒦_k − iβ_k + ½.
pub fn assemble_zk(grid: &RadialGrid, params: &ModeParams, z: C64) -> Result<OperatorMatrix> {
    check_deformation(z)?;
    let k = params.k();
    if k.abs() < 2 {
        return Err(Error::param("k", "the nonlocal oscillator model needs |k| >= 2"));
    }
    let beta = params.beta();
    let mut m = radial_laplacian(grid, k2q(k), z);
    let c = z * z * C64::new(1.0 / 16.0, -beta / 8.0);
    add_diag(&mut m, diag_values(grid, |r| -c * r * r - I * beta + 0.5));
    let ones = vec![C64::new(1.0, 0.0); grid.n()];
    m = m + kernel_block(&*kernel_operator(grid, k)?, &ones, &ones, I * beta * z * z);
    Ok(OperatorMatrix::new(m, grid, SpaceTag::L2r, format!("Z_{k}^z")).with_params(*params).deformed(z))
}

/// Ẑ₁ = ∂² − 35/(4r²) − r², symmetrized in the quadrature inner product.
pub fn assemble_z1_hat(grid: &RadialGrid) -> OperatorMatrix {
    let mut m = radial_laplacian(grid, 35.0 / 4.0, C64::new(1.0, 0.0));
    add_diag(&mut m, diag_values(grid, |r| C64::from(-r * r)));
    OperatorMatrix::new(m, grid, SpaceTag::L2r, "Zhat_1").symmetrized()
}

/// Ẑ_k = ∂² − (k²−¼)/r² − r² − 8𝒦_k, symmetrized.
pub fn assemble_zk_hat(grid: &RadialGrid, k: i32) -> Result<OperatorMatrix> {
    if k < 2 {
        return Err(Error::param("k", "Zhat_k is defined for k >= 2"));
    }
    Ok(zk_hat_with_kernel(grid, k, 8.0)?.symmetrized())
}

/// Ẑ_k with the kernel coefficient replaced by `c` (c = 0 drops the block).
pub fn zk_hat_with_kernel(grid: &RadialGrid, k: i32, c: f64) -> Result<OperatorMatrix> {
    let mut m = radial_laplacian(grid, k2q(k), C64::new(1.0, 0.0));
    add_diag(&mut m, diag_values(grid, |r| C64::from(-r * r)));
    if c != 0.0 {
        m = m - to_complex(&*kernel_operator(grid, k)?).mapv(|v| v * c);
    }
    Ok(OperatorMatrix::new(m, grid, SpaceTag::L2r, format!("Zhat_{k}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LhatKind {
    K1,
    KGeneral,
}

/// L̂ = ζ²(𝓛₁^ζ + iβ − ½) for k = 1, or ζ_k²(H_k^{ζ_k} + iβ_k − ½).
pub fn assemble_lhat(grid: &RadialGrid, params: &ModeParams, which: LhatKind) -> Result<OperatorMatrix> {
    let k = params.k();
    let beta = params.beta();
    let zeta = zeta(beta);
    let z2 = zeta * zeta;
    let z4 = z2 * z2;
    let zr = diag_values(grid, |r| zeta * r);
    for x in &zr {
        check_sector(*x)?;
    }
    let r = grid.nodes();
    let (label, m) = match which {
        LhatKind::K1 => {
            if k != 1 {
                return Err(Error::param("k", "which = k1 requires k = 1"));
            }
            let mut m = radial_laplacian(grid, 0.75, C64::new(1.0, 0.0));
            add_diag(
                &mut m,
                zr.iter().zip(r).map(|(&x, &r)| -(z2 * profiles::f_c(x) + z4 * r * r / 16.0) + I * beta * z2 * (1.0 - profiles::sigma_c(x))),
            );
            ("Lhat_1".to_string(), m)
        }
        LhatKind::KGeneral => {
            let mut m = radial_laplacian(grid, k2q(k), C64::new(1.0, 0.0));
            add_diag(&mut m, zr.iter().zip(r).map(|(&x, &r)| -z4 * r * r / 16.0 + I * beta * z2 * (1.0 - profiles::sigma_c(x))));
            let gz: Vec<C64> = zr.iter().map(|&x| profiles::g_c(x)).collect();
            m = m + kernel_block(&*kernel_operator(grid, k)?, &gz, &gz, I * beta * z4);
            (format!("Lhat_{k}"), m)
        }
    };
    Ok(OperatorMatrix::new(m, grid, SpaceTag::L2r, label).with_params(*params).deformed(zeta))
}

/// 𝓗_{α,k}^z = z⁻²(∂² − (k²−¼)/r²) − z²r²/16 + ½ − iβ_kσ(zr).
pub fn assemble_hscript(grid: &RadialGrid, params: &ModeParams, z: C64) -> Result<OperatorMatrix> {
    check_deformation(z)?;
    let beta = params.beta();
    let mut m = radial_laplacian(grid, k2q(params.k()), z);
    let zr = diag_values(grid, |r| z * r);
    for x in &zr {
        check_sector(*x)?;
    }
    add_diag(&mut m, zr.iter().map(|&x| -x * x / 16.0 + 0.5 - I * beta * profiles::sigma_c(x)));
    Ok(OperatorMatrix::new(m, grid, SpaceTag::L2r, format!("Hscript_{}", params.k())).with_params(*params).deformed(z))
}

/// The 2×2 system 𝓛_k − αΠ_k conjugated to L²(dr) componentwise. k = 0 gives
/// the lower-triangular block [[L₁, 0], [α rS′, L₁]].
pub fn assemble_system_lpi(grid: &RadialGrid, k: i32, alpha: f64) -> Result<OperatorMatrix> {
    if !alpha.is_finite() {
        return Err(Error::param("alpha", "must be finite"));
    }
    let n = grid.n();
    let kf = k as f64;
    let mut a = radial_laplacian(grid, kf * kf + 0.75, C64::new(1.0, 0.0));
    add_diag(&mut a, diag_values(grid, |r| C64::new(-r * r / 16.0 + 0.5, -alpha * kf * profiles::big_s(r))));
    let mut m = Array2::<C64>::zeros((2 * n, 2 * n));
    m.slice_mut(ndarray::s![..n, ..n]).assign(&a);
    m.slice_mut(ndarray::s![n.., n..]).assign(&a);
    for (i, &r) in grid.nodes().iter().enumerate() {
        m[[i, n + i]] = C64::new(0.0, -2.0 * kf / (r * r));
        m[[n + i, i]] = C64::new(alpha * r * profiles::big_s_prime(r), 2.0 * kf / (r * r));
    }
    let mut op = OperatorMatrix::new(m, grid, SpaceTag::L2rPair, format!("LPi_{k}"));
    if k != 0 {
        op.params = Some(ModeParams::new(k, alpha)?);
    }
    Ok(op)
}

/// L_k − αΛ_k in the original (Gaussian-weighted) variables. Only usable at
/// low resolution and moderate R because of the e^{r²/4} weights.
pub fn assemble_yframe(grid: &RadialGrid, params: &ModeParams) -> Result<OperatorMatrix> {
    let k = params.k();
    let kf = k as f64;
    let beta = params.beta();
    let r = grid.nodes();
    let mut m = to_complex(grid.d2());
    let mut d1 = to_complex(grid.d1());
    scale_rows(&mut d1, &diag_values(grid, |r| C64::from(1.0 / r + r / 2.0)));
    m = m + d1;
    add_diag(&mut m, diag_values(grid, |r| C64::new(-kf * kf / (r * r) + 1.0, -params.alpha() * kf * profiles::big_s(r))));
    if beta != 0.0 {
        let left = diag_values(grid, |r| C64::from((-r * r / 4.0).exp() / r.sqrt()));
        let right: Vec<C64> = r.iter().map(|r| C64::from(r.sqrt())).collect();
        m = m + kernel_block(&*kernel_operator(grid, k)?, &left, &right, I * beta);
    }
    Ok(OperatorMatrix::new(m, grid, SpaceTag::Yk, format!("LY_{k}")).with_params(*params))
}

/// L_k + ½ − iαkS in the L²(dr) frame; the operator satisfied by f_div.
pub fn assemble_fdiv_operator(grid: &RadialGrid, params: &ModeParams) -> Result<OperatorMatrix> {
    let mut op = assemble_hscript(grid, params, C64::new(1.0, 0.0))?;
    add_diag(&mut op.entries, std::iter::repeat_n(C64::new(0.5, 0.0), grid.n()));
    op.deformation = None;
    op.label = format!("Ldiv_{}", params.k());
    Ok(op)
}

/// f_div = r⁻¹∂_r(r f₁) + ik r⁻¹ f₂, computed on the L²(dr)-frame pair
/// (u₁, u₂) = r^{1/2}g⁻¹(f₁, f₂) and returned in the same frame.
pub fn fdiv_reduce(pair: &Array1<C64>, grid: &RadialGrid, k: i32) -> Result<Array1<C64>> {
    let n = grid.n();
    if pair.len() != 2 * n {
        return Err(Error::param("pair", format!("expected length {}, got {}", 2 * n, pair.len())));
    }
    let u1 = pair.slice(ndarray::s![..n]);
    let u2 = pair.slice(ndarray::s![n..]);
    let d1 = to_complex(grid.d1());
    let mut out = d1.dot(&u1);
    for (i, &r) in grid.nodes().iter().enumerate() {
        out[i] += u1[i] * (0.5 / r - r / 4.0) + I * (k as f64) * u2[i] / r;
    }
    let w = grid.weights();
    let norm = |v: ndarray::ArrayView1<C64>| v.iter().zip(w).map(|(x, w)| x.norm_sqr() * w).sum::<f64>().sqrt();
    let nin = norm(u1).max(norm(u2));
    let nout = norm(out.view());
    if nin == 0.0 || nout <= 1e-8 * nin {
        return Err(Error::DivergenceFree(nout));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Scheme};

    #[test]
    fn beta_is_recomputed() {
        let p = ModeParams::new(3, 8.0 * PI).unwrap();
        assert!((p.beta() - 3.0).abs() < 1e-15);
        assert!(ModeParams::new(0, 1.0).is_err());
    }

    #[test]
    fn kernel_values() {
        assert!((kernel_value(2, 1.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((kernel_value(1, 1.0, 4.0) - 0.25).abs() < 1e-15);
        assert!((kernel_value(-1, 4.0, 1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zeta_fourth_power() {
        let z = zeta(2.0);
        let z4 = z.powi(4);
        let exact = C64::new(1.0 / 16.0, 0.25) / (1.0 / 256.0 + 1.0 / 16.0);
        assert!((z4 - exact).norm() < 1e-13);
        assert!((zeta(0.0) - 2.0).norm() < 1e-15);
    }

    #[test]
    fn lhat_kinds_share_local_part() {
        let g = build_grid(40, 12.0, Scheme::MappedChebyshev).unwrap();
        let p = ModeParams::new(2, 300.0).unwrap();
        assert!(assemble_lhat(&g, &p, LhatKind::K1).is_err());
        assert!(assemble_lhat(&g, &p, LhatKind::KGeneral).is_ok());
    }
}
