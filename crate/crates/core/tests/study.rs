use oseen_spectral::grid::{build_grid, GridMeta, Scheme};
use oseen_spectral::semigroup::duhamel_vs_direct;
use oseen_spectral::spectral::smoothed_gaussian_vectors;
use oseen_spectral::study::{cross_frame_check, fit_power_law, resolvent_gap, upper_half, DESK_ALPHAS};

fn meta(n: usize, r_max: f64) -> GridMeta {
    GridMeta { n, r_max, scheme: Scheme::MappedChebyshev }
}

#[test]
fn weighted_frame_agrees_at_moderate_circulation() {
    for k in [2, 3] {
        let c = cross_frame_check(100.0, k, &meta(400, 12.0), &meta(200, 11.0), 1e-4).unwrap();
        assert!(c.agree, "k={k}: {} vs {}", c.l2r_abscissa, c.y_abscissa);
    }
    assert!(cross_frame_check(100.0, 1, &meta(100, 12.0), &meta(100, 11.0), 1e-4).is_err());
}

#[test]
fn power_fit_recovers_exponents() {
    let x: Vec<f64> = DESK_ALPHAS.to_vec();
    let y: Vec<f64> = x.iter().map(|a| 0.7 * a.powf(1.0 / 3.0)).collect();
    let f = fit_power_law(&x, &y).unwrap();
    assert!((f.exponent - 1.0 / 3.0).abs() < 1e-12);
    assert!((f.prefactor - 0.7).abs() < 1e-10);
    assert_eq!(upper_half(&x), vec![3, 4, 5, 6]);
}

#[test]
fn resolvent_gap_shrinks_with_circulation() {
    let g = build_grid(160, 12.0, Scheme::MappedChebyshev).unwrap();
    let d: Vec<f64> = [100.0, 1000.0].iter().map(|a| resolvent_gap(&g, 1, *a).unwrap()).collect();
    assert!(d[1] < d[0] && d[0] < 1.0, "{d:?}");
}

#[test]
fn block_zero_duhamel_matches_direct_exponential() {
    let g = build_grid(60, 12.0, Scheme::MappedChebyshev).unwrap();
    let v = smoothed_gaussian_vectors(&g, 2, 5).unwrap();
    let err = duhamel_vs_direct(&g, 100.0, (&v[0], &v[1]), &[0.5, 1.5]).unwrap();
    assert!(err < 1e-8, "{err:e}");
}
