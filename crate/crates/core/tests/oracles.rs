//! Reference values computed independently at 40 digits and frozen here.

use oseen_spectral::grid::{build_grid, Scheme};
use oseen_spectral::ops::{kernel_value, zeta};
use oseen_spectral::profiles::{self, f1, f3, f3_remainder};
use oseen_spectral::quad::gauss_legendre;
use oseen_spectral::C64;

fn close(got: f64, want: f64, rel: f64) {
    assert!((got - want).abs() <= rel * want.abs().max(1e-300), "got {got:e}, want {want:e}");
}

fn close_c(got: C64, want: C64, rel: f64) {
    assert!((got - want).norm() <= rel * want.norm(), "got {got}, want {want}");
}

#[test]
fn vorticity_profile_f() {
    close(profiles::f(0.1), 800.66624988429304281, 1e-13);
    close(profiles::f(1.0), 8.6238789353644100808, 1e-13);
    close(profiles::f(3.0), 1.1265572488500081461, 1e-13);
}

#[test]
fn velocity_profile_sigma() {
    close(profiles::sigma(2.0), 0.6321205588285576784, 1e-15);
    close(profiles::sigma_prime(1.0), -0.21199216928595131755, 1e-13);
}

#[test]
fn generating_functions_near_zero() {
    let z = C64::new(0.01, 0.0);
    close(f3(z).re, 200.6649981503152562559473, 1e-14);
    close(f1(z).re, 0.9950166250831946426094023, 1e-15);
    close(profiles::e_ratio(z).re, 0.501670841680575421654569, 1e-15);
    close(f3_remainder(C64::new(1e-9, 0.0)).re, 2.0 / 3.0, 1e-8);
}

#[test]
fn generating_functions_off_axis() {
    let z = C64::new(1.0, 1.0);
    close_c(f3(z), C64::new(1.4930055311635768656, -1.1992741216014904618), 1e-13);
    close_c(f1(z), C64::new(0.55539688265334962891, -0.24583700700023743046), 1e-14);
}

#[test]
fn deformation_point() {
    close_c(zeta(1.0), C64::new(1.5732798771879116177, 0.4469358432049032174), 1e-15);
}

#[test]
fn kernel_entries() {
    close(kernel_value(1, 1.0, 4.0), 0.25, 1e-15);
    close(kernel_value(2, 1.0, 1.0), 0.25, 1e-15);
    assert_eq!(kernel_value(-3, 2.0, 5.0), kernel_value(3, 5.0, 2.0));
}

/// ∫_{r0}^∞ g²/σ′ ds by composite Gauss–Legendre.
fn tail_integral(r0: f64) -> f64 {
    let (x, w) = gauss_legendre(24);
    let edges: Vec<f64> = (0..=60).map(|i| r0 + (20.0 - r0) * i as f64 / 60.0).collect();
    let mut sum = 0.0;
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        for (xi, wi) in x.iter().zip(&w) {
            let s = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            sum += 0.5 * (b - a) * wi * profiles::g(s).powi(2) / profiles::sigma_prime(s);
        }
    }
    sum
}

#[test]
fn wave_integrand_tails() {
    close(tail_integral(1.0), -3.6306474840025788291, 1e-10);
    close(tail_integral(2.0), -1.3308932682040545336, 1e-10);
}

#[test]
fn angular_velocity_shear_maximum() {
    let rsp = |r: f64| r * profiles::big_s_prime(r);
    let r0 = 2.67826969;
    close(rsp(r0).abs(), 0.023747955291453693253, 1e-12);
    for dr in [-0.05, 0.05] {
        assert!(rsp(r0 + dr).abs() < rsp(r0).abs());
    }
}

#[test]
fn gaussian_moment_on_default_grid() {
    let g = build_grid(400, 12.0, Scheme::MappedChebyshev).unwrap();
    let v: Vec<f64> = g.nodes().iter().map(|r| r * (-r * r / 4.0).exp()).collect();
    close(g.integrate(&v), 1.9999999999999995361, 1e-10);
}
