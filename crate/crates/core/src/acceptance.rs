//! The acceptance suite: eleven numbered checks, each reported as PASS or
//! FAIL with a one-line summary. Used by `selftest` and the integration test.

use std::f64::consts::PI;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::deform::{inverse_operator, perturbation_certificate, spectrum_z_independence, DeformFamily};
use crate::grid::{build_grid, GridMeta, RadialGrid, Scheme};
use crate::ops::{assemble_hk, assemble_l1_wavereduced, assemble_lhat, assemble_z1_hat, LhatKind, ModeParams};
use crate::semigroup::{duhamel_vs_direct, fitted_decay, heat_kernel_apply};
use crate::spectral::{eig, eigenvalues, numerical_range_sample, smoothed_gaussian_vectors, Sampler};
use crate::study::{
    appendix_scan, coercivity_table, figure_dataset, resolvent_gap, resolvent_gap_decay, run_sweep, DeltaPolicy, LemmaId,
    ScanResolution, SweepOptions, DESK_ALPHAS,
};
use crate::waveop::{build_wave_operators, verify_identities, verify_spectral_equivalence};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!("{} {:>2} {} ({:.1} s): {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.name, self.seconds, self.detail)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub criteria: Vec<CriterionReport>,
}

impl AcceptanceReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

pub const CRITERIA: [(u32, &str); 11] = [
    (1, "Zhat_1 eigenvalues"),
    (2, "zero-circulation ladder"),
    (3, "wave-operator identities"),
    (4, "scaling laws at desk scale"),
    (5, "resolvent-gap decay"),
    (6, "perturbation certificate"),
    (7, "figure-data containment"),
    (8, "deformation invariance"),
    (9, "semigroup consistency"),
    (10, "coercivity and inequality scans"),
    (11, "numerical range"),
];

/// Large-α eigenfunctions sit near r ≈ 8, so the sweep needs the longer domain.
fn desk_grid() -> GridMeta {
    GridMeta { n: 400, r_max: 16.0, scheme: Scheme::MappedChebyshev }
}

fn grid(n: usize) -> Result<RadialGrid> {
    build_grid(n, 12.0, Scheme::MappedChebyshev)
}

/// (pass, detail)
type Outcome = Result<(bool, String)>;

fn c1() -> Outcome {
    let t = Instant::now();
    let s = eig(&assemble_z1_hat(&grid(400)?))?;
    let secs = t.elapsed().as_secs_f64();
    let rel = |i: usize, want: f64| (s.eigenvalues[i].re - want).abs() / want.abs();
    let errs = [rel(0, -8.0), rel(1, -12.0), rel(2, -16.0)];
    let pass = errs[0] <= 1e-6 && errs[1] <= 1e-5 && errs[2] <= 1e-5 && secs < 5.0;
    Ok((pass, format!("rel. errors {:.1e}, {:.1e}, {:.1e}; residual {:.1e}; {secs:.2} s", errs[0], errs[1], errs[2], s.residual)))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let g = grid(400)?;
    let mut worst = (eigenvalues(&assemble_l1_wavereduced(&g, &ModeParams::new(1, 0.0)?)?)?.abscissa + 1.5).abs();
    for k in 2..=6 {
        let s = eigenvalues(&assemble_hk(&g, &ModeParams::new(k, 0.0)?)?)?;
        worst = worst.max((s.abscissa + k as f64 / 2.0).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((worst <= 1e-6 && secs < 10.0, format!("max |s - s_exact| = {worst:.1e} over L_1 and H_2..H_6; {secs:.2} s")))
}

fn c3() -> Outcome {
    let g = grid(400)?;
    let id = verify_identities(&build_wave_operators(&g)?);
    let mut worst = 0.0f64;
    for a in [0.0, 8.0 * PI, 80.0 * PI] {
        worst = worst.max(verify_spectral_equivalence(&g, &ModeParams::new(1, a)?, 10)?.discrepancy);
    }
    let pass = id.t_tt < 5e-4 && id.tt_t < 5e-4 && worst < 1e-4;
    Ok((pass, format!("|T Tt - I|max = {:.2e}, |Tt T - P|max = {:.2e}, equivalence discrepancy {worst:.1e}", id.t_tt, id.tt_t)))
}

fn c4() -> Outcome {
    let t = Instant::now();
    let s = run_sweep(&DESK_ALPHAS, 8, &desk_grid(), &SweepOptions::default())?;
    let secs = t.elapsed().as_secs_f64();
    let pass = (0.45..=0.55).contains(&s.sigma_exponent) && (0.28..=0.38).contains(&s.psi_exponent) && s.ordering_ok && secs < 600.0;
    Ok((
        pass,
        format!(
            "sigma exponent {:.3}, psi exponent {:.3}, ordering {}, robust {}/{}; {secs:.0} s",
            s.sigma_exponent,
            s.psi_exponent,
            if s.ordering_ok { "ok" } else { "violated" },
            s.grid_robust.iter().filter(|b| **b).count(),
            s.alphas.len()
        ),
    ))
}

fn c5() -> Outcome {
    let a = resolvent_gap_decay(&DESK_ALPHAS, 1, &desk_grid())?;
    let b = resolvent_gap_decay(&DESK_ALPHAS, 2, &desk_grid())?;
    Ok((
        a.pass && b.pass,
        format!("k=1: exponent {:.3}, C {:.3}; k=2: exponent {:.3}, C {:.3}", a.exponent, a.c_fit, b.exponent, b.c_fit),
    ))
}

fn c6() -> Outcome {
    let alpha = 1e4;
    let g = grid(400)?;
    let p = ModeParams::new(1, alpha)?;
    let z = assemble_z1_hat(&g);
    let mut mus: Vec<f64> = eigenvalues(&z)?.eigenvalues.iter().map(|l| 1.0 / l.re).collect();
    mus.sort_by(f64::total_cmp);
    let a = inverse_operator(&z, "Zhat_1^-1")?;
    let a_alpha = inverse_operator(&assemble_lhat(&g, &p, LhatKind::K1)?, "Lhat_1^-1")?;
    let d = resolvent_gap(&g, 1, alpha)?;
    let delta = 2.0 * d.sqrt();
    let cert = perturbation_certificate(&a_alpha, &a, &mus, delta, 1)?;
    let ball = &cert.balls[0];
    let pass = cert.no_escape && ball.count == Some(1);
    Ok((
        pass,
        format!(
            "d = {:.3e}, delta = {delta:.3}; (i) no escape: {}; (ii) ball at {:.4}: {}",
            cert.d,
            cert.no_escape,
            ball.mu,
            match (ball.count, &ball.note) {
                (Some(c), _) => format!("count {c}"),
                (None, Some(n)) => n.clone(),
                (None, None) => "no count".into(),
            }
        ),
    ))
}

fn c7() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [1, 2] {
        match figure_dataset(&ModeParams::new(k, 1e3)?, DeltaPolicy::TwoSqrtD, 3, &desk_grid()) {
            Ok(f) => {
                pass &= f.all_contained && f.regions_nonempty;
                parts.push(format!("k={k}: delta {:.3}, contained {}, region hits {:?}", f.delta, f.all_contained, f.region_hits));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("k={k}: {e}"));
            }
        }
    }
    Ok((pass, parts.join("; ")))
}

fn c8() -> Outcome {
    // The α = 0 oscillator eigenfunctions are wide Gaussians; at R = 12 the
    // fifth one is still ~1e-3 of its peak at the wall.
    let g = build_grid(400, 20.0, Scheme::MappedChebyshev)?;
    let zs = [
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, PI / 16.0),
        C64::from_polar(1.0, -PI / 16.0),
        C64::from_polar(0.9, PI / 10.0),
    ];
    let mut worst = 0.0f64;
    for a in [0.0, 1e3] {
        worst = worst.max(spectrum_z_independence(DeformFamily::Z1, &ModeParams::new(1, a)?, &zs, &g, 5)?);
    }
    Ok((worst < 1e-4, format!("max drift of the leading 5 eigenvalues {worst:.1e} (alpha = 0, 1000)")))
}

fn heat_kernel_errors() -> Result<(f64, f64)> {
    let m = 241;
    let axis: Vec<f64> = (0..m).map(|i| -12.0 + 24.0 * i as f64 / (m - 1) as f64).collect();
    let gauss = Array2::from_shape_fn((m, m), |(i, j)| (-(axis[i].powi(2) + axis[j].powi(2)) / 4.0).exp() / (4.0 * PI));
    let dg = Array2::from_shape_fn((m, m), |(i, j)| -axis[i] / 2.0 * gauss[[i, j]]);
    let tau = 1.0;
    let e1 = (heat_kernel_apply(&gauss, &axis, tau)? - &gauss).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let e2 = (heat_kernel_apply(&dg, &axis, tau)? - dg.mapv(|v| v * (-tau / 2.0).exp())).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok((e1, e2))
}

fn c9() -> Outcome {
    let (e1, e2) = heat_kernel_errors()?;
    let g = build_grid(400, desk_grid().r_max, Scheme::MappedChebyshev)?;
    let mut fits = Vec::new();
    let mut fit_ok = true;
    for (k, a) in [(1, 0.0), (2, 1e3)] {
        let op = assemble_hk(&g, &ModeParams::new(k, a)?)?;
        let s = eigenvalues(&op)?.abscissa;
        let w0 = smoothed_gaussian_vectors(&g, 1, 11)?.remove(0);
        let fit = fitted_decay(&op, &w0, s, 241)?;
        let rel = (fit.rate - s).abs() / s.abs();
        fit_ok &= rel <= 0.02;
        fits.push(format!("(k={k}, alpha={a}) rate {:.4} vs {:.4} ({:.1}%)", fit.rate, s, 100.0 * rel));
    }
    let g0 = grid(120)?;
    let v = smoothed_gaussian_vectors(&g0, 2, 5)?;
    let duh = duhamel_vs_direct(&g0, 1e3, (&v[0], &v[1]), &[0.25, 1.0, 2.0])?;
    let pass = e1 < 1e-6 && e2 < 1e-6 && fit_ok && duh < 1e-8;
    Ok((pass, format!("heat kernel errors {e1:.1e}, {e2:.1e}; {}; Duhamel discrepancy {duh:.1e}", fits.join(", "))))
}

fn c10() -> Outcome {
    let ks: Vec<i32> = (1..=8).collect();
    let rep = coercivity_table(&DESK_ALPHAS, &ks, &desk_grid(), 7)?;
    let unstable: Vec<String> = rep.entries.iter().filter(|e| !e.stable).map(|e| format!("{}[k={}] x{:.2}", e.quantity, e.k, e.spread)).collect();
    let bounded = rep.entries.iter().all(|e| e.max.is_finite());
    let r2 = rep.r2_z1_inv.ok_or_else(|| Error::param("k_list", "mode 1 missing"))?;
    let res = ScanResolution::default();
    let mut scans = Vec::new();
    let mut scans_ok = true;
    for id in [LemmaId::A1F, LemmaId::A1Sigma, LemmaId::A2, LemmaId::A3] {
        let s = appendix_scan(id, &res)?;
        scans_ok &= s.violations == 0 && s.evaluations >= 10_000 && s.fitted_constant.is_finite();
        scans.push(format!("{id} {}/{} C={:.3}", s.violations, s.evaluations, s.fitted_constant));
    }
    let pass = bounded && unstable.is_empty() && r2 <= 1.0 + 1e-6 && scans_ok;
    Ok((
        pass,
        format!(
            "|r^2 Zhat_1^-1| = {r2:.5}; bounded {bounded}; alpha-unstable (>10%): {}; scans (violations/points): {}",
            if unstable.is_empty() { "none".to_string() } else { unstable.join(", ") },
            scans.join(", ")
        ),
    ))
}

fn c11() -> Outcome {
    let alpha = 1e3;
    let p = ModeParams::new(1, alpha)?;
    let op = assemble_l1_wavereduced(&grid(400)?, &p)?;
    let s = numerical_range_sample(&op, 1000, Sampler::RandomGaussian, 3)?;
    let beta = p.beta();
    let pass = s.points.len() == 1000 && s.hull_re_max <= 1e-8 && s.hull_im_min >= -beta - 1e-8 && s.hull_im_max <= 1e-8;
    Ok((
        pass,
        format!("max Re {:.2e}, Im in [{:.4}, {:.2e}], beta_1 = {beta:.4}", s.hull_re_max, s.hull_im_min, s.hull_im_max),
    ))
}

pub fn run_criterion(id: u32) -> Result<CriterionReport> {
    let name = CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| Error::param("criterion", format!("no criterion {id}")))?.1;
    let f: fn() -> Outcome = match id {
        1 => c1,
        2 => c2,
        3 => c3,
        4 => c4,
        5 => c5,
        6 => c6,
        7 => c7,
        8 => c8,
        9 => c9,
        10 => c10,
        _ => c11,
    };
    let t = Instant::now();
    let (pass, detail) = match f() {
        Ok(o) => o,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CriterionReport { id, name: name.to_string(), pass, detail, seconds: t.elapsed().as_secs_f64() })
}

/// Runs the listed criteria (all when `only` is empty), calling `each` as
/// every report becomes available.
pub fn run(only: &[u32], mut each: impl FnMut(&CriterionReport)) -> Result<AcceptanceReport> {
    let ids: Vec<u32> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    let mut criteria = Vec::new();
    for id in ids {
        let r = run_criterion(id)?;
        each(&r);
        criteria.push(r);
    }
    Ok(AcceptanceReport { criteria })
}
