use ndarray::Array1;
use proptest::prelude::*;

use oseen_spectral::config::{Command, RawConfig, RawGrid, RunConfig};
use oseen_spectral::deform::{invert_disc, riesz_count};
use oseen_spectral::grid::{build_grid, RadialGrid, Scheme};
use oseen_spectral::linalg::{max_abs, norm2};
use oseen_spectral::ops::{assemble_hk, kernel_matrix, kernel_value, ModeParams};
use oseen_spectral::output::fmt_f64;
use oseen_spectral::profiles::{f1, f3, f3_remainder};
use oseen_spectral::semigroup::propagate;
use oseen_spectral::spectral::{eig, eigenvalues, smoothed_gaussian_vectors};
use oseen_spectral::{Error, C64};

fn small_grid(n: usize) -> RadialGrid {
    build_grid(n, 12.0, Scheme::MappedChebyshev).unwrap()
}

fn sorted_by_value(mut v: Vec<C64>) -> Vec<C64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn mirrored_mode_has_conjugate_spectrum(k in 1i32..6, alpha in 0.0f64..400.0) {
        let g = small_grid(60);
        let a = eigenvalues(&assemble_hk(&g, &ModeParams::new(k, alpha).unwrap()).unwrap()).unwrap();
        let b = eigenvalues(&assemble_hk(&g, &ModeParams::new(-k, alpha).unwrap()).unwrap()).unwrap();
        let pa = sorted_by_value(a.eigenvalues.iter().map(|z| z.conj()).collect());
        let pb = sorted_by_value(b.eigenvalues.clone());
        let scale = pa.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for (x, y) in pa.iter().zip(&pb) {
            prop_assert!((x - y).norm() <= 1e-9 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn advection_part_is_skew(k in 2i32..6, alpha in 1.0f64..1000.0) {
        let g = small_grid(60);
        let a = assemble_hk(&g, &ModeParams::new(k, alpha).unwrap()).unwrap().weighted();
        let a0 = assemble_hk(&g, &ModeParams::new(k, 0.0).unwrap()).unwrap().weighted();
        let d = &a - &a0;
        let herm = &d + &d.t().mapv(|z| z.conj());
        // Hermitian defect is quadrature error: ~1e-4 at n = 60, shrinking under refinement.
        prop_assert!(norm2(&herm).unwrap() <= 1e-3 * norm2(&d).unwrap());
    }

    #[test]
    fn kernels_positive_and_dominated(k in 2i32..9, r in 0.01f64..12.0, s in 0.01f64..12.0) {
        let v = kernel_value(k, r, s);
        prop_assert!(v > 0.0);
        prop_assert!(v <= kernel_value(2, r, s) * (1.0 + 1e-14));
    }

    #[test]
    fn eigen_residuals_are_small(k in 1i32..5, alpha in 0.0f64..300.0) {
        let op = assemble_hk(&small_grid(60), &ModeParams::new(k, alpha).unwrap()).unwrap();
        let s = eig(&op).unwrap();
        prop_assert!(s.residual <= s.tolerance * max_abs(&op.entries), "{} > {}", s.residual, s.tolerance);
    }

    #[test]
    fn propagation_is_a_semigroup(t1 in 0.01f64..0.5, t2 in 0.01f64..0.5, seed in 0u64..1000) {
        let g = small_grid(48);
        let op = assemble_hk(&g, &ModeParams::new(2, 50.0).unwrap()).unwrap();
        let w0 = smoothed_gaussian_vectors(&g, 1, seed).unwrap().remove(0);
        let direct = propagate(&op, &w0, &[t1 + t2]).unwrap().states.remove(0);
        let mid = propagate(&op, &w0, &[t1]).unwrap().states.remove(0);
        let two = propagate(&op, &mid, &[t2]).unwrap().states.remove(0);
        let err = (&direct - &two).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let size = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8 * size.max(1e-300));
    }

    #[test]
    fn inverted_circle_maps_to_circle(cr in -5.0f64..5.0, ci in -5.0f64..5.0, frac in 0.05f64..0.95, th in 0.0f64..6.28) {
        let c = C64::new(cr, ci);
        prop_assume!(c.norm() > 0.1);
        let rho = frac * c.norm();
        let (m, rad) = invert_disc(c, rho).unwrap();
        let p = c + C64::from_polar(rho, th);
        prop_assert!(((1.0 / p - m).norm() - rad).abs() <= 1e-9 * rad.max(m.norm()));
    }

    #[test]
    fn remainder_matches_direct_form(re in 0.2f64..30.0, im in -20.0f64..20.0) {
        let z = C64::new(re, im);
        let direct = f3(z) - 2.0 / z;
        prop_assert!((f3_remainder(z) - direct).norm() <= 1e-9 * (1.0 + f3(z).norm()));
    }

    #[test]
    fn small_argument_branch_is_continuous(th in -0.7f64..0.7) {
        // The step across |z| = 1/16 must match the step just outside it.
        let at = |m: f64| C64::from_polar(1.0 / 16.0 + m * 1e-7, th);
        for (f, tol) in [(f1 as fn(C64) -> C64, 1e-13), (f3, 1e-9 * f3(at(0.0)).norm())] {
            let across = f(at(0.5)) - f(at(-0.5));
            let outside = f(at(1.5)) - f(at(0.5));
            prop_assert!((across - outside).norm() <= tol, "{across} vs {outside}");
        }
    }

    #[test]
    fn floats_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn undersized_grids_are_rejected(n in -1000i64..8) {
        let raw = RawConfig { command: Some(Command::Spectrum), grid: Some(RawGrid { n: Some(n), ..Default::default() }), ..Default::default() };
        match RunConfig::validate(raw) {
            Err(Error::Param { field, .. }) => prop_assert_eq!(field, "grid.n"),
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn skew_defect_shrinks_with_refinement() {
    let defect = |n: usize| {
        let g = small_grid(n);
        let a = assemble_hk(&g, &ModeParams::new(2, 10.0).unwrap()).unwrap().weighted();
        let a0 = assemble_hk(&g, &ModeParams::new(2, 0.0).unwrap()).unwrap().weighted();
        let d = &a - &a0;
        norm2(&(&d + &d.t().mapv(|z| z.conj()))).unwrap() / norm2(&d).unwrap()
    };
    let (a, b, c) = (defect(60), defect(120), defect(240));
    assert!(b < a / 4.0 && c < b / 4.0 && c < 1e-6, "{a:e} {b:e} {c:e}");
}

#[test]
fn nodal_kernel_matrix_is_positive() {
    let g = small_grid(40);
    let k3 = kernel_matrix(&g, 3).unwrap();
    let k2 = kernel_matrix(&g, 2).unwrap();
    for (a, b) in k3.entries.iter().zip(k2.entries.iter()) {
        assert!(a.re > 0.0 && a.re <= b.re * (1.0 + 1e-14));
    }
}

#[test]
fn contour_around_everything_counts_the_dimension() {
    let g = small_grid(24);
    let op = assemble_hk(&g, &ModeParams::new(2, 10.0).unwrap()).unwrap();
    let s = eigenvalues(&op).unwrap();
    let far = s.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let p = riesz_count(&op, C64::new(0.0, 0.0), 1.5 * far, 512).unwrap();
    assert_eq!(p.count, op.dim());
    let q = riesz_count(&op, C64::new(0.0, 0.0), 2.0 * far, 512).unwrap();
    assert!((p.trace - q.trace).norm() < 1e-6);
}

#[test]
fn grid_nodes_stay_interior() {
    let g = small_grid(50);
    let r: &Array1<f64> = g.nodes();
    assert!(r.iter().all(|x| *x > 0.0 && *x < 12.0));
    assert!(r.windows(2).into_iter().all(|w| w[0] < w[1]));
}
