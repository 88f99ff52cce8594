//! Compactly supported test functions used as integration weights.

use crate::error::{param, Result};
use crate::geometry::SupCube;

/// Scalar weight with compact support in an axis box.
pub trait TestFunction: Sync + Send {
    fn dim(&self) -> usize;
    fn value(&self, y: &[f64]) -> f64;
    fn gradient(&self, y: &[f64]) -> Vec<f64>;
    /// Closed box containing the support.
    fn support(&self) -> (Vec<f64>, Vec<f64>);
    /// Upper bound for `sup |grad psi|_2`.
    fn gradient_bound(&self) -> f64;
    /// Exact integral when known in closed form.
    fn integral(&self) -> Option<f64> {
        None
    }
    fn label(&self) -> String;
}

/// `psi(y) = prod_i (1 - ((y_i - c_i)/r)^2)^m` on `Q(c, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub power: i32,
}

impl PolyBump {
    pub fn new(center: Vec<f64>, radius: f64, power: i32) -> Result<Self> {
        if !(radius > 0.0) || power < 1 || center.is_empty() {
            return param("bump needs positive radius, power >= 1 and a center");
        }
        Ok(Self {
            center,
            radius,
            power,
        })
    }

    fn factor(&self, t: f64) -> (f64, f64) {
        if t.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let u = 1.0 - t * t;
        let m = self.power;
        (u.powi(m), -2.0 * m as f64 * t * u.powi(m - 1) / self.radius)
    }

    /// `int_{-1}^{1} (1 - t^2)^m dt`.
    fn unit_integral(m: i32) -> f64 {
        // recursion I_m = 2m/(2m+1) I_{m-1}, I_0 = 2
        (1..=m).fold(2.0, |acc, k| acc * (2 * k) as f64 / (2 * k + 1) as f64)
    }
}

impl TestFunction for PolyBump {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(y)
            .map(|(c, v)| self.factor((v - c) / self.radius).0)
            .product()
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let parts: Vec<(f64, f64)> = self
            .center
            .iter()
            .zip(y)
            .map(|(c, v)| self.factor((v - c) / self.radius))
            .collect();
        (0..parts.len())
            .map(|i| {
                parts
                    .iter()
                    .enumerate()
                    .map(|(j, p)| if i == j { p.1 } else { p.0 })
                    .product()
            })
            .collect()
    }

    fn support(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.center.iter().map(|c| c - self.radius).collect(),
            self.center.iter().map(|c| c + self.radius).collect(),
        )
    }

    fn gradient_bound(&self) -> f64 {
        // max |d/dt (1-t^2)^m| = 2m t (1-t^2)^{m-1} at t = 1/sqrt(2m-1)
        let m = self.power as f64;
        let t = 1.0 / (2.0 * m - 1.0).sqrt();
        let one = 2.0 * m * t * (1.0 - t * t).powf(m - 1.0) / self.radius;
        one * (self.dim() as f64).sqrt()
    }

    fn integral(&self) -> Option<f64> {
        Some((self.radius * Self::unit_integral(self.power)).powi(self.dim() as i32))
    }

    fn label(&self) -> String {
        format!("bump(r={},m={})", self.radius, self.power)
    }
}

/// Product of smootherstep ramps: `1` on `Q(c, r - delta)`, `0` off `Q(c, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothCutoff {
    pub cube: SupCube,
    pub delta: f64,
}

impl SmoothCutoff {
    pub fn new(cube: SupCube, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || delta >= cube.half_side() {
            return param("cutoff width must lie in (0, half side)");
        }
        Ok(Self { cube, delta })
    }

    /// Ramp `s(u)` and its derivative for `u` = depth / delta.
    fn ramp(u: f64) -> (f64, f64) {
        if u <= 0.0 {
            (0.0, 0.0)
        } else if u >= 1.0 {
            (1.0, 0.0)
        } else {
            let v = u * u * u * (u * (6.0 * u - 15.0) + 10.0);
            let d = 30.0 * u * u * (u - 1.0) * (u - 1.0);
            (v, d)
        }
    }

    fn parts(&self, y: &[f64]) -> Vec<(f64, f64)> {
        let r = self.cube.half_side();
        self.cube
            .center()
            .iter()
            .zip(y)
            .map(|(c, v)| {
                let depth = r - (v - c).abs();
                let (s, ds) = Self::ramp(depth / self.delta);
                (s, -ds / self.delta * (v - c).signum())
            })
            .collect()
    }
}

impl TestFunction for SmoothCutoff {
    fn dim(&self) -> usize {
        self.cube.dim()
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.parts(y).iter().map(|p| p.0).product()
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let parts = self.parts(y);
        (0..parts.len())
            .map(|i| {
                parts
                    .iter()
                    .enumerate()
                    .map(|(j, p)| if i == j { p.1 } else { p.0 })
                    .product()
            })
            .collect()
    }

    fn support(&self) -> (Vec<f64>, Vec<f64>) {
        (self.cube.lower(), self.cube.upper())
    }

    fn gradient_bound(&self) -> f64 {
        1.875 / self.delta * (self.dim() as f64).sqrt()
    }

    fn label(&self) -> String {
        format!("cutoff({},delta={:e})", self.cube.describe(), self.delta)
    }
}

/// `factor * psi`.
pub struct Scaled<T> {
    pub inner: T,
    pub factor: f64,
}

impl<T: TestFunction> TestFunction for Scaled<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.factor * self.inner.value(y)
    }
    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        self.inner
            .gradient(y)
            .into_iter()
            .map(|g| g * self.factor)
            .collect()
    }
    fn support(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.support()
    }
    fn gradient_bound(&self) -> f64 {
        self.factor.abs() * self.inner.gradient_bound()
    }
    fn integral(&self) -> Option<f64> {
        self.inner.integral().map(|v| v * self.factor)
    }
    fn label(&self) -> String {
        format!("{}*{}", self.factor, self.inner.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_legendre, integrate_gl};

    #[test]
    fn bump_integral_matches_quadrature() {
        let b = PolyBump::new(vec![0.3], 0.5, 3).unwrap();
        let rule = gauss_legendre(12);
        let q = integrate_gl(|t| b.value(&[t]), -0.2, 0.8, &rule);
        assert!((q - b.integral().unwrap()).abs() < 1e-14);
        assert!((PolyBump::unit_integral(3) - 32.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn bump_gradient_matches_difference() {
        let b = PolyBump::new(vec![0.0, 0.1], 0.7, 3).unwrap();
        let y = [0.2, -0.3];
        let g = b.gradient(&y);
        let h = 1e-6;
        let fd = (b.value(&[0.2 + h, -0.3]) - b.value(&[0.2 - h, -0.3])) / (2.0 * h);
        assert!((fd - g[0]).abs() < 1e-8);
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert!(gn <= b.gradient_bound());
    }

    #[test]
    fn cutoff_profile() {
        let c = SmoothCutoff::new(SupCube::unit(2), 0.1).unwrap();
        assert_eq!(c.value(&[0.0, 0.5]), 1.0);
        assert_eq!(c.value(&[0.0, 1.0]), 0.0);
        let mid = c.value(&[0.95, 0.0]);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(SmoothCutoff::new(SupCube::unit(2), 1.5).is_err());
    }
}
