//! The [`Map`] abstraction and a handful of analytic test maps.

use crate::error::{param, Result};
use crate::geometry::{determinant, sup_norm, SupCube};

/// A continuous map `R^n -> R^n`.
///
/// Only `dim`, `eval_into` and `label` are required. The optional methods
/// let consumers certify interpolation errors (`enclose`, `local_lipschitz`)
/// and compare against classical Jacobians (`differential`).
pub trait Map: Sync + Send {
    fn dim(&self) -> usize;

    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn label(&self) -> String;

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Row-major differential, `None` where undefined or unknown.
    fn differential(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn jacobian(&self, x: &[f64]) -> Option<f64> {
        let n = self.dim();
        self.differential(x).map(|d| {
            let m: Vec<Vec<f64>> = (0..n).map(|i| d[i * n..(i + 1) * n].to_vec()).collect();
            determinant(m)
        })
    }

    /// Axis box containing `f([lo, hi])`.
    fn enclose(&self, _lo: &[f64], _hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// Sup-norm to sup-norm Lipschitz constant of `f` on the box `[lo, hi]`.
    fn local_lipschitz(&self, _lo: &[f64], _hi: &[f64]) -> Option<f64> {
        None
    }

    /// Upper bound for `sup ||f(x) - f(y)||_inf` over the box.
    fn oscillation(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        if let Some((a, b)) = self.enclose(lo, hi) {
            return Some(a.iter().zip(&b).fold(0.0_f64, |m, (p, q)| m.max(q - p)));
        }
        let diam = lo.iter().zip(hi).fold(0.0_f64, |m, (a, b)| m.max(b - a));
        self.local_lipschitz(lo, hi).map(|l| l * diam)
    }
}

impl<M: Map + ?Sized> Map for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn differential(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).differential(x)
    }
    fn jacobian(&self, x: &[f64]) -> Option<f64> {
        (**self).jacobian(x)
    }
    fn enclose(&self, lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        (**self).enclose(lo, hi)
    }
    fn local_lipschitz(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        (**self).local_lipschitz(lo, hi)
    }
    fn oscillation(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        (**self).oscillation(lo, hi)
    }
}

impl Map for Box<dyn Map> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn differential(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).differential(x)
    }
    fn jacobian(&self, x: &[f64]) -> Option<f64> {
        (**self).jacobian(x)
    }
    fn enclose(&self, lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        (**self).enclose(lo, hi)
    }
    fn local_lipschitz(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        (**self).local_lipschitz(lo, hi)
    }
    fn oscillation(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        (**self).oscillation(lo, hi)
    }
}

/// Affine map `x -> M x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    matrix: Vec<f64>,
    offset: Vec<f64>,
    name: String,
}

impl Affine {
    pub fn new(matrix: Vec<f64>, offset: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        let n = offset.len();
        if n == 0 || matrix.len() != n * n {
            return param("affine map needs an n x n matrix and length-n offset");
        }
        Ok(Self {
            matrix,
            offset,
            name: name.into(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::scaling(n, 1.0).renamed("identity")
    }

    pub fn scaling(n: usize, factor: f64) -> Self {
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            matrix[i * n + i] = factor;
        }
        Self {
            matrix,
            offset: vec![0.0; n],
            name: format!("scale({factor})"),
        }
    }

    /// `(x_1, x_2, ...) -> (-x_1, x_2, ...)`.
    pub fn reflection(n: usize) -> Self {
        let mut a = Self::identity(n);
        a.matrix[0] = -1.0;
        a.renamed("reflect")
    }

    pub fn constant(value: Vec<f64>) -> Self {
        let n = value.len();
        Self {
            matrix: vec![0.0; n * n],
            offset: value,
            name: "constant".into(),
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn determinant(&self) -> f64 {
        self.jacobian(&self.offset).unwrap_or(0.0)
    }

    fn op_norm(&self) -> f64 {
        let n = self.offset.len();
        (0..n)
            .map(|i| self.matrix[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Map for Affine {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.offset.len();
        for i in 0..n {
            out[i] = self.offset[i]
                + self.matrix[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
        }
    }

    fn label(&self) -> String {
        self.name.clone()
    }

    fn differential(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.matrix.clone())
    }

    fn enclose(&self, lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.offset.len();
        let mut a = self.offset.clone();
        let mut b = self.offset.clone();
        for i in 0..n {
            for j in 0..n {
                let m = self.matrix[i * n + j];
                let (p, q) = (m * lo[j], m * hi[j]);
                a[i] += p.min(q);
                b[i] += p.max(q);
            }
        }
        Some((a, b))
    }

    fn local_lipschitz(&self, _lo: &[f64], _hi: &[f64]) -> Option<f64> {
        Some(self.op_norm())
    }
}

/// Complex power `z -> z^k` on `R^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPower {
    pub power: u32,
}

impl ComplexPower {
    pub fn new(power: u32) -> Result<Self> {
        if power == 0 {
            return param("complex power must be at least 1");
        }
        Ok(Self { power })
    }

    fn pow(&self, re: f64, im: f64) -> (f64, f64) {
        let (mut a, mut b) = (1.0, 0.0);
        for _ in 0..self.power {
            (a, b) = (a * re - b * im, a * im + b * re);
        }
        (a, b)
    }
}

impl Map for ComplexPower {
    fn dim(&self) -> usize {
        2
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let (a, b) = self.pow(x[0], x[1]);
        out[0] = a;
        out[1] = b;
    }

    fn label(&self) -> String {
        match self.power {
            1 => "z".into(),
            k => format!("z^{k}"),
        }
    }

    fn differential(&self, x: &[f64]) -> Option<Vec<f64>> {
        // Cauchy-Riemann: f' = k z^{k-1} = p + iq gives [[p, -q], [q, p]].
        let k = self.power as f64;
        let (p, q) = ComplexPower {
            power: self.power - 1,
        }
        .pow(x[0], x[1]);
        let (p, q) = (k * p, k * q);
        Some(vec![p, -q, q, p])
    }

    fn local_lipschitz(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        let rx = lo[0].abs().max(hi[0].abs());
        let ry = lo[1].abs().max(hi[1].abs());
        let r = (rx * rx + ry * ry).sqrt();
        let k = self.power as f64;
        Some(k * r.powi(self.power as i32 - 1) * std::f64::consts::SQRT_2)
    }
}

/// Smoothed fold `(x_1, x_2, ...) -> (sqrt(x_1^2 + delta^2) - 1/2, x_2, ...)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothFold {
    pub n: usize,
    pub delta: f64,
}

impl SmoothFold {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n < 1 || !(delta > 0.0) {
            return param("fold needs n >= 1 and positive smoothing");
        }
        Ok(Self { n, delta })
    }
}

impl Map for SmoothFold {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        out[0] = (x[0] * x[0] + self.delta * self.delta).sqrt() - 0.5;
    }

    fn label(&self) -> String {
        format!("fold(delta={})", self.delta)
    }

    fn differential(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 1.0;
        }
        d[0] = x[0] / (x[0] * x[0] + self.delta * self.delta).sqrt();
        Some(d)
    }

    fn local_lipschitz(&self, _lo: &[f64], _hi: &[f64]) -> Option<f64> {
        Some(1.0)
    }
}

/// `f(x) + amplitude * bump(x) * direction`, with a smooth bump on a cube.
pub struct Bumped<M> {
    pub base: M,
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub direction: Vec<f64>,
}

impl<M: Map> Bumped<M> {
    fn bump(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = self.center.len();
        let mut v = 1.0;
        let mut parts = Vec::with_capacity(n);
        for i in 0..n {
            let t = (x[i] - self.center[i]) / self.radius;
            if t.abs() >= 1.0 {
                return (0.0, vec![0.0; n]);
            }
            let u = 1.0 - t * t;
            parts.push((u * u, -4.0 * t * u / self.radius));
            v *= u * u;
        }
        let grad = (0..n)
            .map(|i| {
                parts
                    .iter()
                    .enumerate()
                    .map(|(j, p)| if i == j { p.1 } else { p.0 })
                    .product()
            })
            .collect();
        (v, grad)
    }
}

impl<M: Map> Map for Bumped<M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.base.eval_into(x, out);
        let (b, _) = self.bump(x);
        for (o, d) in out.iter_mut().zip(&self.direction) {
            *o += self.amplitude * b * d;
        }
    }

    fn label(&self) -> String {
        format!("{}+{}*bump", self.base.label(), self.amplitude)
    }

    fn differential(&self, x: &[f64]) -> Option<Vec<f64>> {
        let n = self.dim();
        let mut d = self.base.differential(x)?;
        let (_, g) = self.bump(x);
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] += self.amplitude * self.direction[i] * g[j];
            }
        }
        Some(d)
    }

    fn local_lipschitz(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        // |d/dt (1-t^2)^2| <= 16/(3 sqrt 3) < 3.1 per unit t.
        let n = self.dim() as f64;
        let base = self.base.local_lipschitz(lo, hi)?;
        Some(base + self.amplitude.abs() * sup_norm(&self.direction) * n * 3.1 / self.radius)
    }
}

/// `x -> f(x) + shift`.
pub struct Shifted<M> {
    pub base: M,
    pub shift: Vec<f64>,
}

impl<M: Map> Map for Shifted<M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.base.eval_into(x, out);
        for (o, s) in out.iter_mut().zip(&self.shift) {
            *o += s;
        }
    }

    fn label(&self) -> String {
        format!("{}+shift", self.base.label())
    }

    fn differential(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.base.differential(x)
    }

    fn enclose(&self, lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let (mut a, mut b) = self.base.enclose(lo, hi)?;
        for i in 0..a.len() {
            a[i] += self.shift[i];
            b[i] += self.shift[i];
        }
        Some((a, b))
    }

    fn local_lipschitz(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        self.base.local_lipschitz(lo, hi)
    }
}

/// Sup-norm radial odd reflection of a map defined on a cube `Q(c, r)`:
/// with `t = ||x - c||_inf / r > 1`,
/// `f(x) = 2 f(c + (x - c)/t) - f(c + (x - c)(2 - t)/t)`.
///
/// Reproduces affine maps exactly and keeps Lipschitz or Hölder bounds up to
/// a constant. Valid for `t < 2`.
pub struct RadialExtension<M> {
    pub base: M,
    pub cube: SupCube,
}

impl<M: Map> RadialExtension<M> {
    pub fn new(base: M, cube: SupCube) -> Self {
        Self { base, cube }
    }

    /// Extension from the reference cube `[-1, 1]^n`.
    pub fn unit(base: M) -> Self {
        let n = base.dim();
        Self::new(base, SupCube::unit(n))
    }
}

impl<M: Map> Map for RadialExtension<M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let c = self.cube.center();
        let t = self.cube.sup_dist(x) / self.cube.half_side();
        if t <= 1.0 {
            self.base.eval_into(x, out);
            return;
        }
        let n = x.len();
        let back_scale = ((2.0 - t) / t).max(0.0);
        let on: Vec<f64> = (0..n).map(|i| c[i] + (x[i] - c[i]) / t).collect();
        let inner: Vec<f64> = (0..n).map(|i| c[i] + (x[i] - c[i]) * back_scale).collect();
        let mut a = vec![0.0; n];
        self.base.eval_into(&on, &mut a);
        self.base.eval_into(&inner, out);
        for i in 0..n {
            out[i] = 2.0 * a[i] - out[i];
        }
    }

    fn label(&self) -> String {
        self.base.label()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_square_values_and_jacobian() {
        let f = ComplexPower::new(2).unwrap();
        assert_eq!(f.eval(&[1.0, 2.0]), vec![-3.0, 4.0]);
        // J = |f'|^2 = 4 |z|^2
        let j = f.jacobian(&[1.0, 2.0]).unwrap();
        assert!((j - 20.0).abs() < 1e-12);
    }

    #[test]
    fn complex_power_lipschitz_bounds_samples() {
        let f = ComplexPower::new(3).unwrap();
        let lo = [0.2, -0.4];
        let hi = [0.3, -0.3];
        let l = f.local_lipschitz(&lo, &hi).unwrap();
        let a = f.eval(&lo);
        let b = f.eval(&hi);
        let d = a.iter().zip(&b).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(d <= l * 0.1 + 1e-15);
    }

    #[test]
    fn affine_enclosure_contains_image() {
        let f = Affine::new(vec![1.0, -2.0, 0.5, 3.0], vec![0.1, 0.0], "a").unwrap();
        let (a, b) = f.enclose(&[-1.0, 0.0], &[1.0, 0.5]).unwrap();
        for x in [[-1.0, 0.0], [1.0, 0.5], [0.3, 0.2]] {
            let y = f.eval(&x);
            for i in 0..2 {
                assert!(a[i] <= y[i] && y[i] <= b[i]);
            }
        }
    }

    #[test]
    fn radial_extension_reproduces_linear_maps() {
        let f = Affine::new(vec![2.0, 1.0, -1.0, 0.5], vec![0.0, 0.0], "l").unwrap();
        let ext = RadialExtension::unit(f.clone());
        for x in [[1.3, 0.2], [-1.5, 1.9], [0.4, -1.2]] {
            let a = ext.eval(&x);
            let b = f.eval(&x);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_extension_is_continuous_at_the_boundary() {
        let f = ComplexPower::new(2).unwrap();
        let ext = RadialExtension::unit(f);
        let a = ext.eval(&[1.0 + 1e-9, 0.4]);
        let b = f.eval(&[1.0, 0.4]);
        assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8);
    }

    #[test]
    fn bumped_differential_matches_finite_difference() {
        let m = Bumped {
            base: Affine::identity(2),
            amplitude: 0.3,
            center: vec![0.1, 0.0],
            radius: 0.5,
            direction: vec![1.0, 0.0],
        };
        let x = [0.2, 0.15];
        let d = m.differential(&x).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fp = m.eval(&xp);
            let fm = m.eval(&xm);
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - d[i * 2 + j]).abs() < 1e-6);
            }
        }
    }
}
