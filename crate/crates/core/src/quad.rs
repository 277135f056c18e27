//! One-dimensional quadrature rules and interpolation weights.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    let m = (q + 1) / 2;
    for i in 0..m {
        let mut t = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, t);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[q - 1 - i] = t;
        w[i] = wi;
        w[q - 1 - i] = wi;
    }
    if q % 2 == 1 {
        x[q / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(q: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for j in 2..=q {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * t * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Clenshaw–Curtis weights for the points cos(πj/N), j = 0..=N, on [-1, 1].
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    assert!(n >= 1);
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let theta: Vec<f64> = (0..=n).map(|j| PI * j as f64 / nf).collect();
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
    }
    for j in 1..n {
        let mut v = 1.0;
        let half = if n % 2 == 0 { n / 2 } else { (n - 1) / 2 + 1 };
        for k in 1..half {
            let kf = k as f64;
            v -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
        }
        if n % 2 == 0 {
            v -= (nf * theta[j]).cos() / (nf * nf - 1.0);
        }
        w[j] = 2.0 * v / nf;
    }
    w
}

/// Barycentric weights for Chebyshev points of the second kind (N+1 points).
pub fn chebyshev_barycentric(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Barycentric interpolation row: coefficients c_j with p(t) = Σ c_j y_j.
pub fn barycentric_row(nodes: &[f64], bw: &[f64], t: f64, out: &mut [f64]) {
    debug_assert_eq!(nodes.len(), out.len());
    if let Some(j) = nodes.iter().position(|&x| x == t) {
        out.iter_mut().for_each(|c| *c = 0.0);
        out[j] = 1.0;
        return;
    }
    let mut s = 0.0;
    for ((c, &x), &b) in out.iter_mut().zip(nodes).zip(bw) {
        *c = b / (t - x);
        s += *c;
    }
    out.iter_mut().for_each(|c| *c /= s);
}

/// Composite Gauss–Legendre rule on the pieces [b_0,b_1], [b_1,b_2], ...
/// with q_i points on piece i.
pub fn composite_rule(breaks: &[f64], points: &[usize], cache: &mut RuleCache) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for (i, &q) in points.iter().enumerate() {
        let (a, b) = (breaks[i], breaks[i + 1]);
        let (x, w) = cache.get(q);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(w) {
            xs.push(c + h * xi);
            ws.push(h * wi);
        }
    }
    (xs, ws)
}

/// Memoized Gauss–Legendre rules.
#[derive(Default)]
pub struct RuleCache {
    rules: std::collections::HashMap<usize, (Vec<f64>, Vec<f64>)>,
}

impl RuleCache {
    pub fn get(&mut self, q: usize) -> &(Vec<f64>, Vec<f64>) {
        self.rules.entry(q).or_insert_with(|| gauss_legendre(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for q in [1, 2, 5, 12, 40, 200] {
            let (x, w) = gauss_legendre(q);
            let deg = 2 * q - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "q={q} s={s}");
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn clenshaw_curtis_even_and_odd() {
        for n in [4, 7, 32, 33] {
            let w = clenshaw_curtis(n);
            let s: f64 = (0..=n)
                .map(|j| w[j] * (PI * j as f64 / n as f64).cos().powi(2))
                .sum();
            assert!((s - 2.0 / 3.0).abs() < 1e-14);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn barycentric_reproduces_cubic() {
        let n = 10;
        let nodes: Vec<f64> = (0..=n).map(|j| (PI * j as f64 / n as f64).cos()).collect();
        let bw = chebyshev_barycentric(n);
        let y: Vec<f64> = nodes.iter().map(|x| x * x * x - x).collect();
        let mut row = vec![0.0; n + 1];
        for t in [-0.93, 0.1, 0.77, nodes[3]] {
            barycentric_row(&nodes, &bw, t, &mut row);
            let p: f64 = row.iter().zip(&y).map(|(c, y)| c * y).sum();
            assert!((p - (t * t * t - t)).abs() < 1e-14);
        }
    }
}
