//! Radial profiles of the Oseen vortex and their analytic continuations.
//!
//! With z = x²/4: σ(x) = F₁(z), g(x) = F₂(z), f(x) = F₃(z), where
//! F₀ = e^z − z − 1, F₁ = (1 − e^{−z})/z, F₂ = e^{−z/2} and
//! F₃ = (2z²/F₀ − 3 + 2z) z/F₀.

use std::f64::consts::{FRAC_PI_8, PI};

use crate::{Error, Result, C64};

/// Below this |x| the removable singularities are evaluated by Taylor series.
pub const SERIES_RADIUS: f64 = 0.5;
const SERIES_ORDER: usize = 8;

fn is_small(z: C64) -> bool {
    // |x| < 1/2  <=>  |z| < 1/16
    z.norm() < SERIES_RADIUS * SERIES_RADIUS / 4.0
}

pub fn f0(z: C64) -> C64 {
    if is_small(z) {
        e_ratio(z) * z * z
    } else {
        z.exp() - z - 1.0
    }
}

/// F₀(z)/z², entire, equal to 1/2 at the origin.
pub fn e_ratio(z: C64) -> C64 {
    if is_small(z) {
        // Σ z^m/(m+2)!
        let mut term = C64::new(0.5, 0.0);
        let mut sum = term;
        for m in 1..=SERIES_ORDER {
            term *= z / (m as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - z - 1.0) / (z * z)
    }
}

pub fn f1(z: C64) -> C64 {
    if is_small(z) {
        // Σ (−z)^m/(m+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for m in 1..=SERIES_ORDER {
            term *= -z / (m as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (1.0 - (-z).exp()) / z
    }
}

pub fn f2(z: C64) -> C64 {
    (-z / 2.0).exp()
}

pub fn f3(z: C64) -> C64 {
    if is_small(z) || z.re < 1.0 {
        let e = e_ratio(z);
        (2.0 / e - 3.0 + 2.0 * z) / (z * e)
    } else {
        // with q = e^{−z}: 1/E = z²q/(1 − (z+1)q), no overflow for large z
        let q = (-z).exp();
        let d = 1.0 - (z + 1.0) * q;
        (2.0 * z * z * q / d - 3.0 + 2.0 * z) * z * q / d
    }
}

/// F₃(z) − 2/z, bounded near the origin (limit 2/3).
pub fn f3_remainder(z: C64) -> C64 {
    if is_small(z) {
        // E = ½ + zv; the numerator of F₃ − 2/z is then divisible by z
        let v = e_ratio_tail(z);
        let d = 1.0 + 2.0 * z * v;
        (4.0 - 20.0 * v + 8.0 * z * v - 8.0 * z * v * v) / (d * d)
    } else {
        f3(z) - 2.0 / z
    }
}

/// (E(z) − ½)/z = Σ_{m≥1} z^{m−1}/(m+2)!.
fn e_ratio_tail(z: C64) -> C64 {
    let mut term = C64::new(1.0 / 6.0, 0.0);
    let mut sum = term;
    for m in 2..=SERIES_ORDER + 1 {
        term *= z / (m as f64 + 2.0);
        sum += term;
    }
    sum
}

/// F₁(z) − 1 + z/2, of order z² near the origin.
pub fn f1_remainder(z: C64) -> C64 {
    if is_small(z) {
        // Σ_{m≥2} (−z)^m/(m+1)!
        let mut term = z * z / 6.0;
        let mut sum = term;
        for m in 3..=SERIES_ORDER + 2 {
            term *= -z / (m as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        f1(z) - 1.0 + z / 2.0
    }
}

/// e^{−z} F₀(z)/z², bounded on the right half-plane.
fn damped_e_ratio(z: C64) -> C64 {
    if is_small(z) || z.re < 1.0 {
        (-z).exp() * e_ratio(z)
    } else {
        (1.0 - (z + 1.0) * (-z).exp()) / (z * z)
    }
}

/// |arg x| ≤ π/8, the range on which z = x²/4 stays in the sector where F₃ is analytic.
pub fn check_sector(x: C64) -> Result<()> {
    if x.norm() == 0.0 || x.arg().abs() <= FRAC_PI_8 + 1e-12 {
        Ok(())
    } else {
        Err(Error::Sector(x))
    }
}

fn quarter_square(x: C64) -> C64 {
    x * x / 4.0
}

pub fn sigma_c(x: C64) -> C64 {
    f1(quarter_square(x))
}

/// dσ/dx = −(x/2) e^{−z} F₀(z)/z².
pub fn sigma_prime_c(x: C64) -> C64 {
    -(x / 2.0) * damped_e_ratio(quarter_square(x))
}

pub fn g_c(x: C64) -> C64 {
    f2(quarter_square(x))
}

pub fn f_c(x: C64) -> C64 {
    f3(quarter_square(x))
}

pub fn sigma(r: f64) -> f64 {
    sigma_c(r.into()).re
}

pub fn sigma_prime(r: f64) -> f64 {
    sigma_prime_c(r.into()).re
}

pub fn g(r: f64) -> f64 {
    (-r * r / 8.0).exp()
}

/// f = 2g⁴/σ′² + (g²/σ′)(6/r − r); behaves like 8/r² at the origin.
pub fn f(r: f64) -> f64 {
    f_c(r.into()).re
}

/// Angular velocity profile S = σ/(8π).
pub fn big_s(r: f64) -> f64 {
    sigma(r) / (8.0 * PI)
}

pub fn big_s_prime(r: f64) -> f64 {
    sigma_prime(r) / (8.0 * PI)
}

/// Oseen vorticity G = e^{−r²/4}/(4π).
pub fn big_g(r: f64) -> f64 {
    (-r * r / 4.0).exp() / (4.0 * PI)
}

/// The profile family as one value, for code that wants to pass it around.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProfileSet;

impl ProfileSet {
    pub fn s(&self, x: C64) -> Result<C64> {
        Ok(self.sigma(x)? / (8.0 * PI))
    }
    pub fn sigma(&self, x: C64) -> Result<C64> {
        check_sector(x)?;
        Ok(sigma_c(x))
    }
    pub fn g(&self, x: C64) -> Result<C64> {
        check_sector(x)?;
        Ok(g_c(x))
    }
    pub fn big_g(&self, x: C64) -> Result<C64> {
        check_sector(x)?;
        Ok((-x * x / 4.0).exp() / (4.0 * PI))
    }
    pub fn f(&self, x: C64) -> Result<C64> {
        check_sector(x)?;
        Ok(f_c(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn closed_forms_against_definitions() {
        for &r in &[0.7, 1.0, 2.5, 5.0] {
            let s = (1.0 - (-r * r / 4.0f64).exp()) / (r * r / 4.0);
            assert!(close(sigma(r), s, 1e-14));
            let sp = sigma_prime(r);
            let direct = 2.0 * g(r).powi(4) / (sp * sp) + g(r).powi(2) / sp * (6.0 / r - r);
            assert!(close(f(r), direct, 1e-10), "{r}: {} vs {}", f(r), direct);
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let z = C64::new(1.0 / 16.0, 0.0);
        let below = z * (1.0 - 1e-12);
        let above = z * (1.0 + 1e-12);
        assert!((f1(below) - f1(above)).norm() < 1e-12);
        assert!((e_ratio(below) - e_ratio(above)).norm() < 1e-11);
    }

    #[test]
    fn large_arguments_stay_finite() {
        for &r in &[30.0, 60.0, 200.0] {
            let x = C64::from_polar(r, 0.3);
            assert!(f_c(x).is_finite() && sigma_prime_c(x).is_finite());
            assert!(f_c(x).norm() < 1e-50);
        }
        let a = f3(C64::new(0.999999, 0.2));
        let b = f3(C64::new(1.000001, 0.2));
        assert!((a - b).norm() < 1e-5);
    }

    #[test]
    fn remainders() {
        assert!((f3_remainder(C64::new(1e-12, 0.0)) - C64::new(2.0 / 3.0, 0.0)).norm() < 1e-10);
        let z = C64::new(1e-3, 0.0);
        // F₁ − 1 + z/2 = z²/6 − z³/24 + …
        let want = 1e-6 / 6.0 - 1e-9 / 24.0 + 1e-12 / 120.0;
        assert!((f1_remainder(z).re - want).abs() < 1e-17);
        for th in [-0.7, 0.0, 0.5] {
            let zb = C64::from_polar(1.0 / 16.0, th);
            let (a, b) = (zb * (1.0 - 1e-12), zb * (1.0 + 1e-12));
            assert!((f3_remainder(a) - f3_remainder(b)).norm() < 1e-8);
            assert!((f1_remainder(a) - f1_remainder(b)).norm() < 1e-14);
        }
    }

    #[test]
    fn sector_rejection() {
        let ps = ProfileSet;
        assert!(ps.f(C64::from_polar(1.0, 0.3)).is_ok());
        assert!(ps.f(C64::from_polar(1.0, 0.5)).is_err());
    }
}
