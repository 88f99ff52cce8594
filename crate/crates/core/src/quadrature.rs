//! Small quadrature helpers: Gauss–Legendre rules and adaptive Simpson.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                (p0, p1) = (p1, ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf);
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with a Gauss–Legendre rule.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite Gauss–Legendre over the sorted breakpoints.
pub fn integrate_piecewise(
    f: impl Fn(f64) -> f64,
    breakpoints: &[f64],
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| integrate_gl(&f, w[0], w[1], rule))
        .sum()
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

/// Richardson-style extrapolation of a sequence computed at geometrically
/// decreasing scales. Returns `None` when the last three values do not
/// contract.
pub fn geometric_extrapolate(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let k = values.len();
    let (v1, v2, v3) = (values[k - 3], values[k - 2], values[k - 1]);
    let d1 = v2 - v1;
    let d2 = v3 - v2;
    if d2 == 0.0 {
        return Some(v3);
    }
    let q = d2 / d1;
    if !q.is_finite() || q.abs() >= 0.9 || q <= 0.0 {
        return None;
    }
    Some(v3 + d2 * q / (1.0 - q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(5);
        // degree 9 is exact for 5 points
        let v = integrate_gl(|x| x.powi(8) + 3.0 * x.powi(3), -1.0, 1.0, &rule);
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
        let w: f64 = rule.1.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_order_has_zero_node() {
        let (x, w) = gauss_legendre(3);
        assert!(x[1].abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_simpson_handles_sqrt() {
        let v = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-10, 50);
        assert!((v - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn extrapolation_recovers_geometric_limit() {
        let vals: Vec<f64> = (0..4).map(|k| 1.0 + 0.5_f64.powi(k)).collect();
        let e = geometric_extrapolate(&vals).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }
}
