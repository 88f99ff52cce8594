//! Self-similar piecewise-radial Cantor maps.
//!
//! At level `k` the reference cube `(-1, 1)^n` carries `2^{nk}` core cubes
//! `Q_v = Q(z_v, r_k)` nested inside tiles `Q'_v = Q(z_v, r_{k-1}/2)`. The
//! level-`k` map sends the annulus `Q'_v \ Q_v` radially (in the sup norm)
//! onto the image annulus with radii `r~_{k-1}/2` and `r~_k` via the profile
//! `rho_k(t) = alpha_k t + beta_k`, and stretches the deepest core cubes
//! homogeneously. Two parameter families are provided:
//!
//! * [`Variant::LusinN`]: a homeomorphism whose image Cantor set has positive
//!   measure although the domain Cantor set is null.
//! * [`Variant::Orientation`]: `alpha_k < 0`, so the Jacobian is negative on
//!   every annulus; composed with a reflection it is positive almost
//!   everywhere while the degree is `-1`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::geometry::{sup_norm, ExactCube, SupCube, Vertex, VertexPath};
use crate::maps::Map;
use crate::quadrature::{gauss_legendre, integrate_piecewise};

/// Largest dimension supported by the stack-allocated evaluator.
pub const MAX_DIM: usize = 8;

/// Relative tolerance for deciding that a point sits on a region interface.
const INTERFACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    LusinN,
    Orientation,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::LusinN => "lusin-n",
            Variant::Orientation => "orientation",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "lusin-n" | "lusin" => Ok(Variant::LusinN),
            "orientation" => Ok(Variant::Orientation),
            other => param(format!("unknown variant {other:?}")),
        }
    }
}

/// Parameters of a Cantor construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CantorMapSpec {
    pub n: usize,
    pub variant: Variant,
    pub alpha: f64,
    /// `A`: `2^{(1-alpha)/alpha}` for the Lusin variant, the decay exponent
    /// of `a_k = 2^{-Ak}` for the orientation variant.
    pub a: f64,
    /// `B`: growth exponent of `b_k = 2^{Bk}` (orientation variant only).
    pub b: f64,
    pub level: usize,
}

impl CantorMapSpec {
    pub fn lusin_n(n: usize, alpha: f64, level: usize) -> Result<Self> {
        let a = 2f64.powf((1.0 - alpha) / alpha);
        let spec = Self {
            n,
            variant: Variant::LusinN,
            alpha,
            a,
            b: 0.0,
            level,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn orientation(n: usize, alpha: f64, a: f64, b: f64, level: usize) -> Result<Self> {
        let spec = Self {
            n,
            variant: Variant::Orientation,
            alpha,
            a,
            b,
            level,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The default orientation example: `alpha = 1/2, A = 1/2, B = 1/5`.
    pub fn orientation_default(n: usize, level: usize) -> Result<Self> {
        Self::orientation(n, 0.5, 0.5, 0.2, level)
    }

    pub fn with_level(&self, level: usize) -> Self {
        Self {
            level,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > MAX_DIM {
            return param(format!("dimension must be in 2..={MAX_DIM}, got {}", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return param(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.level > 60 {
            return param("levels above 60 underflow double precision");
        }
        match self.variant {
            Variant::LusinN => {
                if ((2.0 * self.a).powf(self.alpha) - 2.0).abs() > 1e-12 {
                    return param(format!(
                        "Lusin variant needs (2A)^alpha = 2, got A = {}",
                        self.a
                    ));
                }
                if self.b != 0.0 {
                    return param("Lusin variant does not use B");
                }
            }
            Variant::Orientation => {
                if !(self.a > 0.0) {
                    return param("orientation variant needs A > 0");
                }
                if !(self.b > 0.0 && self.b < 1.0) {
                    return param(format!("B must lie in (0, 1), got {}", self.b));
                }
                if self.b + self.a >= (1.0 + self.a) * (1.0 - self.alpha) {
                    return param(format!(
                        "orientation variant needs B + A < (1 + A)(1 - alpha); got {} >= {}",
                        self.b + self.a,
                        (1.0 + self.a) * (1.0 - self.alpha)
                    ));
                }
            }
        }
        Ok(())
    }

    /// `m` with `A = 2^m` when the Lusin radii are dyadic rationals.
    pub fn dyadic_exponent(&self) -> Option<u32> {
        if self.variant != Variant::LusinN {
            return None;
        }
        let m = (1.0 - self.alpha) / self.alpha;
        let r = m.round();
        ((m - r).abs() < 1e-12 && r >= 1.0).then_some(r as u32)
    }

    pub fn a_seq(&self, k: usize) -> f64 {
        match self.variant {
            Variant::LusinN => self.a.powi(-(k as i32)),
            Variant::Orientation => 2f64.powf(-self.a * k as f64),
        }
    }

    /// `b_k`, normalized so that `b_0 = 1`.
    pub fn b_seq(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match self.variant {
            Variant::LusinN => 0.5 * (1.0 - 1.0 / self.a) + self.a.powi(-(k as i32)),
            Variant::Orientation => 2f64.powf(self.b * k as f64),
        }
    }

    pub fn radius(&self, k: usize) -> f64 {
        self.a_seq(k) * 0.5f64.powi(k as i32)
    }

    pub fn image_radius(&self, k: usize) -> f64 {
        self.b_seq(k) * 0.5f64.powi(k as i32)
    }

    /// `(alpha_k, beta_k)` solving `alpha r_k + beta = r~_k` and
    /// `alpha r_{k-1}/2 + beta = r~_{k-1}/2`.
    pub fn annulus_coefficients(&self, k: usize) -> Result<(f64, f64)> {
        if k == 0 {
            return param("annulus levels start at 1");
        }
        let (r, rp) = (self.radius(k), 0.5 * self.radius(k - 1));
        let (rt, rtp) = (self.image_radius(k), 0.5 * self.image_radius(k - 1));
        let alpha = (rtp - rt) / (rp - r);
        Ok((alpha, rt - alpha * r))
    }

    fn pow2(exp: i64) -> BigRational {
        let two = BigInt::from(2);
        if exp >= 0 {
            BigRational::from_integer(num_traits::pow(two, exp as usize))
        } else {
            BigRational::new(BigInt::one(), num_traits::pow(two, (-exp) as usize))
        }
    }

    pub fn exact_radius(&self, k: usize) -> Option<BigRational> {
        let m = self.dyadic_exponent()? as i64;
        Some(Self::pow2(-(m + 1) * k as i64))
    }

    pub fn exact_b(&self, k: usize) -> Option<BigRational> {
        let m = self.dyadic_exponent()? as i64;
        if k == 0 {
            return Some(BigRational::one());
        }
        let half = BigRational::new(1.into(), 2.into());
        Some(&half * (BigRational::one() - Self::pow2(-m)) + Self::pow2(-m * k as i64))
    }

    pub fn exact_image_radius(&self, k: usize) -> Option<BigRational> {
        Some(self.exact_b(k)? * Self::pow2(-(k as i64)))
    }

    /// Limit of the image union measure, `(1 - 1/A)^n` for the Lusin variant.
    pub fn image_limit_measure(&self) -> Option<f64> {
        (self.variant == Variant::LusinN).then(|| (1.0 - 1.0 / self.a).powi(self.n as i32))
    }
}

/// Exact or floating-point measure value.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureValue {
    Exact(BigRational),
    Approx(f64),
}

impl MeasureValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            MeasureValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            MeasureValue::Approx(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            MeasureValue::Exact(r) => Some(r),
            MeasureValue::Approx(_) => None,
        }
    }
}

impl fmt::Display for MeasureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureValue::Exact(r) => write!(f, "{r}"),
            MeasureValue::Approx(v) => write!(f, "{v:.17e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Domain,
    Image,
}

/// Lebesgue measure of the union of the level-`k` core cubes (domain side)
/// or of their image cubes.
pub fn level_union_measure(spec: &CantorMapSpec, side: Side, k: usize) -> Result<MeasureValue> {
    spec.validate()?;
    if k == 0 {
        return param("level union measures start at k = 1");
    }
    let n = spec.n;
    let count = 2f64.powi((n * k) as i32);
    match side {
        Side::Domain => {
            if let Some(r) = spec.exact_radius(k) {
                let cube = BigRational::from_integer(2.into()) * r;
                let mut v = num_traits::pow(cube, n);
                v *= num_traits::pow(BigRational::from_integer(2.into()), n * k);
                return Ok(MeasureValue::Exact(v));
            }
            Ok(MeasureValue::Approx(count * (2.0 * spec.radius(k)).powi(n as i32)))
        }
        Side::Image => {
            if let Some(rt) = spec.exact_image_radius(k) {
                let cube = BigRational::from_integer(2.into()) * rt;
                let mut v = num_traits::pow(cube, n);
                v *= num_traits::pow(BigRational::from_integer(2.into()), n * k);
                return Ok(MeasureValue::Exact(v));
            }
            Ok(MeasureValue::Approx(
                image_projection_length(spec, k)?.powi(n as i32),
            ))
        }
    }
}

/// Length of the union of the one-dimensional projections of the level-`k`
/// image cubes. Image cubes form a product set, so the union measure is
/// this length to the power `n`; image cubes may overlap for the
/// orientation variant, which is why intervals are merged.
pub fn image_projection_length(spec: &CantorMapSpec, k: usize) -> Result<f64> {
    if k > 24 {
        return param("projection merge is limited to k <= 24");
    }
    let mut centers = vec![0.0_f64];
    for j in 1..=k {
        let step = 0.5 * spec.image_radius(j - 1);
        centers = centers
            .iter()
            .flat_map(|c| [c - step, c + step])
            .collect();
    }
    let rt = spec.image_radius(k);
    centers.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let (mut lo, mut hi) = (centers[0] - rt, centers[0] + rt);
    for c in &centers[1..] {
        let (a, b) = (c - rt, c + rt);
        if a <= hi {
            hi = hi.max(b);
        } else {
            total += hi - lo;
            (lo, hi) = (a, b);
        }
    }
    Ok(total + hi - lo)
}

/// Integral over `(-1, 1)^n` of the pointwise Jacobian restricted to the
/// annuli of levels `1..=k`, computed from the radial profiles by
/// Gauss–Legendre quadrature in the sup-norm radius.
pub fn pointwise_jacobian_integral(spec: &CantorMapSpec, k: usize) -> Result<f64> {
    spec.validate()?;
    let n = spec.n as i32;
    let rule = gauss_legendre(24);
    let mut total = 0.0;
    for j in 1..=k {
        let (al, be) = spec.annulus_coefficients(j)?;
        let (a, b) = (spec.radius(j), 0.5 * spec.radius(j - 1));
        // |sup-sphere of radius t| = 2n (2t)^{n-1}
        let shell = integrate_piecewise(
            |t| {
                let rho = al * t + be;
                al * (rho / t).powi(n - 1) * 2.0 * n as f64 * (2.0 * t).powi(n - 1)
            },
            &[a, b],
            &rule,
        );
        total += 2f64.powi(n * j as i32) * shell;
    }
    Ok(total)
}

/// Region classification of a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionTag {
    OutsideAll,
    Annulus { level: usize, path: VertexPath },
    CoreCube { level: usize, path: VertexPath },
    CantorLimit,
}

impl RegionTag {
    pub fn kind(&self) -> &'static str {
        match self {
            RegionTag::OutsideAll => "outside",
            RegionTag::Annulus { .. } => "annulus",
            RegionTag::CoreCube { .. } => "core",
            RegionTag::CantorLimit => "cantor-limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    /// The level-`K` approximant.
    LevelK,
    /// The limit map, truncated where the tail bound drops below `tolerance`.
    Limit { tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Differential {
    /// Sup-norm operator norm.
    pub derivative_norm: f64,
    pub jacobian: f64,
    pub tag: RegionTag,
    /// Row-major matrix.
    pub matrix: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Descent {
    /// Level of the annulus or core reached; 0 means the identity region.
    level: usize,
    annulus: bool,
    z: [f64; MAX_DIM],
    zt: [f64; MAX_DIM],
    path: [u32; 64],
}

/// A level-`K` (or limit) Cantor map ready for evaluation.
#[derive(Debug, Clone)]
pub struct PiecewiseRadialMap {
    spec: CantorMapSpec,
    mode: EvalMode,
    reflected: bool,
    depth: usize,
    r: Vec<f64>,
    rt: Vec<f64>,
    al: Vec<f64>,
    be: Vec<f64>,
    /// `env[k]`: sup-norm radius about `z~_v` containing `f(Q'_v)` at level `k`.
    env: Vec<f64>,
}

impl PiecewiseRadialMap {
    pub fn new(spec: CantorMapSpec) -> Result<Self> {
        Self::with_mode(spec, EvalMode::LevelK)
    }

    pub fn with_mode(spec: CantorMapSpec, mode: EvalMode) -> Result<Self> {
        spec.validate()?;
        let depth = match mode {
            EvalMode::LevelK => spec.level,
            EvalMode::Limit { tolerance } => limit_depth(&spec, tolerance)?,
        };
        let mut r = vec![1.0];
        let mut rt = vec![1.0];
        let mut al = vec![1.0];
        let mut be = vec![0.0];
        for k in 1..=depth {
            r.push(spec.radius(k));
            rt.push(spec.image_radius(k));
            let (a, b) = spec.annulus_coefficients(k)?;
            al.push(a);
            be.push(b);
        }
        let mut env = vec![0.0; depth + 1];
        if depth > 0 {
            env[depth] = (0.5 * rt[depth - 1]).max(rt[depth]);
            for k in (1..depth).rev() {
                env[k] = (0.5 * rt[k - 1]).max(rt[k]).max(0.5 * rt[k] + env[k + 1]);
            }
        }
        Ok(Self {
            spec,
            mode,
            reflected: false,
            depth,
            r,
            rt,
            al,
            be,
            env,
        })
    }

    /// `x -> f(-x_1, x_2, ..., x_n)`.
    pub fn reflected(mut self) -> Self {
        self.reflected = !self.reflected;
        self
    }

    pub fn is_reflected(&self) -> bool {
        self.reflected
    }

    pub fn spec(&self) -> &CantorMapSpec {
        &self.spec
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    /// Number of construction levels the evaluator resolves.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Stretch factor `r~_D / r_D` on the deepest core cubes.
    pub fn core_stretch(&self) -> f64 {
        self.rt[self.depth] / self.r[self.depth]
    }

    fn reflect_point(&self, x: &[f64]) -> [f64; MAX_DIM] {
        let mut p = [0.0; MAX_DIM];
        p[..x.len()].copy_from_slice(x);
        if self.reflected {
            p[0] = -p[0];
        }
        p
    }

    fn descend(&self, x: &[f64]) -> Descent {
        let n = self.spec.n;
        let mut d = Descent {
            level: 0,
            annulus: false,
            z: [0.0; MAX_DIM],
            zt: [0.0; MAX_DIM],
            path: [0; 64],
        };
        for k in 1..=self.depth {
            let (h, ht) = (0.5 * self.r[k - 1], 0.5 * self.rt[k - 1]);
            let mut mask = 0u32;
            let mut t = 0.0_f64;
            for i in 0..n {
                if x[i] >= d.z[i] {
                    mask |= 1 << i;
                    d.z[i] += h;
                    d.zt[i] += ht;
                } else {
                    d.z[i] -= h;
                    d.zt[i] -= ht;
                }
                t = t.max((x[i] - d.z[i]).abs());
            }
            d.path[k - 1] = mask;
            d.level = k;
            if t >= self.r[k] {
                d.annulus = true;
                return d;
            }
        }
        d
    }

    fn eval_descent(&self, x: &[f64], d: &Descent, out: &mut [f64]) {
        let n = self.spec.n;
        if d.level == 0 {
            out[..n].copy_from_slice(&x[..n]);
            return;
        }
        let k = d.level;
        if d.annulus {
            let t = (0..n).fold(0.0_f64, |m, i| m.max((x[i] - d.z[i]).abs()));
            let s = self.al[k] + self.be[k] / t;
            for i in 0..n {
                out[i] = d.zt[i] + s * (x[i] - d.z[i]);
            }
        } else {
            let c = self.rt[k] / self.r[k];
            for i in 0..n {
                out[i] = d.zt[i] + c * (x[i] - d.z[i]);
            }
        }
    }

    /// `f(x)` for `x` in the closed reference cube.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        Ok(Map::eval(self, x))
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.n || !(sup_norm(x) <= 1.0 + 1e-12) || x.iter().any(|v| v.is_nan())
        {
            return Err(Error::Domain {
                point: x.to_vec(),
                domain: "[-1,1]^n".into(),
            });
        }
        Ok(())
    }

    fn path_of(&self, d: &Descent) -> VertexPath {
        let n = self.spec.n;
        VertexPath::new(
            d.path[..d.level]
                .iter()
                .map(|&m| Vertex::from_mask(m, n))
                .collect(),
        )
        .expect("uniform dimension")
    }

    /// Region classification at the evaluator depth.
    pub fn region(&self, x: &[f64]) -> Result<RegionTag> {
        self.check_domain(x)?;
        let p = self.reflect_point(x);
        let d = self.descend(&p[..self.spec.n]);
        Ok(self.tag_of(&p[..self.spec.n], &d))
    }

    fn tag_of(&self, x: &[f64], d: &Descent) -> RegionTag {
        if d.level == 0 || sup_norm(x) >= 1.0 {
            return RegionTag::OutsideAll;
        }
        if d.annulus {
            RegionTag::Annulus {
                level: d.level,
                path: self.path_of(d),
            }
        } else if matches!(self.mode, EvalMode::Limit { .. }) {
            RegionTag::CantorLimit
        } else {
            RegionTag::CoreCube {
                level: d.level,
                path: self.path_of(d),
            }
        }
    }

    /// Derivative from the sup-norm radial model. Fails on region
    /// interfaces, on ties of the maximal coordinate and in the residual
    /// Cantor set (limit mode).
    pub fn analytic_differential(&self, x: &[f64]) -> Result<Differential> {
        self.check_domain(x)?;
        let n = self.spec.n;
        let p = self.reflect_point(x);
        let p = &p[..n];
        let undefined = |reason: &str| Error::UndefinedDerivative {
            point: x.to_vec(),
            reason: reason.into(),
        };
        if sup_norm(p) >= 1.0 - INTERFACE_TOL {
            return Err(undefined("boundary of the reference cube"));
        }
        let d = self.descend(p);
        let tag = self.tag_of(p, &d);
        let mut m = vec![0.0; n * n];
        match tag {
            RegionTag::CantorLimit => return Err(undefined("residual Cantor set")),
            RegionTag::OutsideAll | RegionTag::CoreCube { .. } => {
                let c = if d.level == 0 { 1.0 } else { self.rt[d.level] / self.r[d.level] };
                let tol = INTERFACE_TOL * self.r[d.level.saturating_sub(1)];
                if d.level > 0 {
                    let t = (0..n).fold(0.0_f64, |a, i| a.max((p[i] - d.z[i]).abs()));
                    if self.r[d.level] - t <= tol {
                        return Err(undefined("core cube boundary"));
                    }
                }
                for i in 0..n {
                    m[i * n + i] = c;
                }
            }
            RegionTag::Annulus { level: k, .. } => {
                let diff: Vec<f64> = (0..n).map(|i| p[i] - d.z[i]).collect();
                let t = sup_norm(&diff);
                let tol = INTERFACE_TOL * self.r[k - 1];
                if t - self.r[k] <= tol || 0.5 * self.r[k - 1] - t <= tol {
                    return Err(undefined("annulus boundary"));
                }
                let imax = (0..n)
                    .max_by(|&a, &b| diff[a].abs().total_cmp(&diff[b].abs()))
                    .unwrap();
                if (0..n).any(|j| j != imax && t - diff[j].abs() <= tol) {
                    return Err(undefined("tie in the maximal coordinate"));
                }
                let s = self.al[k] + self.be[k] / t;
                let rp = self.al[k];
                let sigma = diff[imax].signum();
                for i in 0..n {
                    m[i * n + i] = s;
                    m[i * n + imax] += (rp - s) * diff[i] / t * sigma;
                }
            }
        }
        if self.reflected {
            for i in 0..n {
                m[i * n] = -m[i * n];
            }
        }
        let jacobian = {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| m[i * n..(i + 1) * n].to_vec()).collect();
            crate::geometry::determinant(rows)
        };
        let derivative_norm = (0..n)
            .map(|i| m[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Differential {
            derivative_norm,
            jacobian,
            tag,
            matrix: m,
        })
    }

    /// Closed-form Jacobian in the sup-norm model: `rho' (rho/t)^{n-1}` on
    /// annuli and `(r~/r)^n` on core cubes; sign flipped when reflected.
    pub fn model_jacobian(&self, x: &[f64]) -> Result<f64> {
        let d = self.analytic_differential(x)?;
        let n = self.spec.n as i32;
        let p = self.reflect_point(x);
        let desc = self.descend(&p[..self.spec.n]);
        let value = match d.tag {
            RegionTag::Annulus { level: k, .. } => {
                let t = (0..self.spec.n).fold(0.0_f64, |a, i| a.max((p[i] - desc.z[i]).abs()));
                let rho = self.al[k] * t + self.be[k];
                self.al[k] * (rho / t).powi(n - 1)
            }
            RegionTag::CoreCube { level, .. } => (self.rt[level] / self.r[level]).powi(n),
            _ => 1.0,
        };
        Ok(if self.reflected { -value } else { value })
    }

    /// Centered finite-difference Jacobian with the given step.
    pub fn finite_difference_jacobian(&self, x: &[f64], step: f64) -> f64 {
        let n = self.spec.n;
        let mut rows = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += step;
            xm[j] -= step;
            let fp = Map::eval(self, &xp);
            let fm = Map::eval(self, &xm);
            for i in 0..n {
                rows[i][j] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        crate::geometry::determinant(rows)
    }

    /// Domain radius of the region at `x`, used to scale finite differences.
    pub fn local_scale(&self, x: &[f64]) -> f64 {
        let p = self.reflect_point(x);
        let d = self.descend(&p[..self.spec.n]);
        self.r[d.level]
    }

    /// Global sup-norm Lipschitz bound.
    pub fn lipschitz_bound(&self) -> f64 {
        let mut l = self.core_stretch();
        for k in 1..=self.depth {
            let s_max = (self.rt[k] / self.r[k]).max(self.rt[k - 1] / self.r[k - 1]);
            l = l.max(self.al[k].abs()).max(2.0 * s_max - self.al[k]);
        }
        l
    }

    /// Lower bound `m` with `||f(x) - f(y)|| >= m ||x - y||` (Lusin variant).
    pub fn inverse_lipschitz_bound(&self) -> Result<f64> {
        if self.spec.variant != Variant::LusinN {
            return param("only the Lusin variant is injective");
        }
        let mut l = 1.0 / self.core_stretch();
        for k in 1..=self.depth {
            let inv_a = 1.0 / self.al[k];
            let s_max = (self.r[k] / self.rt[k]).max(self.r[k - 1] / self.rt[k - 1]);
            l = l.max(inv_a.abs()).max(2.0 * s_max - inv_a);
        }
        Ok(1.0 / l)
    }

    /// Domain and image core cubes of level `k <= depth`.
    pub fn level_cubes(&self, k: usize) -> Result<Vec<CubePair>> {
        if k > self.depth {
            return param(format!("level {k} exceeds the evaluator depth {}", self.depth));
        }
        let n = self.spec.n;
        let mut out = vec![(VertexPath::root(), vec![0.0; n], vec![0.0; n])];
        for j in 1..=k {
            let (h, ht) = (0.5 * self.r[j - 1], 0.5 * self.rt[j - 1]);
            out = out
                .into_iter()
                .flat_map(|(p, z, zt)| {
                    Vertex::all(n).map(move |v| {
                        let zc: Vec<f64> = (0..n).map(|i| z[i] + h * v.sign(i)).collect();
                        let ztc: Vec<f64> = (0..n).map(|i| zt[i] + ht * v.sign(i)).collect();
                        (p.child(v), zc, ztc)
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|(path, z, zt)| {
                Ok(CubePair {
                    path,
                    domain: SupCube::new(z, self.r[k])?,
                    image: SupCube::new(zt, self.rt[k])?,
                })
            })
            .collect()
    }

    /// Exact outer tiles `Q'_v` and cores `Q_v` of level `k` (dyadic radii only).
    pub fn exact_level_cubes(&self, k: usize) -> Result<Vec<(ExactCube, ExactCube)>> {
        let spec = &self.spec;
        let n = spec.n;
        let Some(_) = spec.dyadic_exponent() else {
            return param("exact cubes need dyadic radii");
        };
        let half = BigRational::new(1.into(), 2.into());
        let mut centers = vec![vec![BigRational::zero(); n]];
        for j in 1..=k {
            let h = spec.exact_radius(j - 1).unwrap() * &half;
            centers = centers
                .into_iter()
                .flat_map(|z| {
                    let h = h.clone();
                    Vertex::all(n).map(move |v| {
                        (0..n)
                            .map(|i| {
                                if v.sign(i) > 0.0 {
                                    &z[i] + &h
                                } else {
                                    &z[i] - &h
                                }
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
        }
        let outer = spec.exact_radius(k.saturating_sub(1)).unwrap() * &half;
        let core = spec.exact_radius(k).unwrap();
        Ok(centers
            .into_iter()
            .map(|c| {
                (
                    ExactCube {
                        center: c.clone(),
                        half_side: outer.clone(),
                    },
                    ExactCube {
                        center: c,
                        half_side: core.clone(),
                    },
                )
            })
            .collect())
    }

    fn enclose_rec(
        &self,
        lo: &[f64],
        hi: &[f64],
        k: usize,
        z: &[f64],
        zt: &[f64],
        out_lo: &mut [f64],
        out_hi: &mut [f64],
    ) {
        let n = self.spec.n;
        let merge = |a: f64, b: f64, i: usize, ol: &mut [f64], oh: &mut [f64]| {
            ol[i] = ol[i].min(a);
            oh[i] = oh[i].max(b);
        };
        if k > self.depth {
            let c = self.rt[self.depth] / self.r[self.depth];
            for i in 0..n {
                merge(
                    zt[i] + c * (lo[i] - z[i]),
                    zt[i] + c * (hi[i] - z[i]),
                    i,
                    out_lo,
                    out_hi,
                );
            }
            return;
        }
        let (h, ht) = (0.5 * self.r[k - 1], 0.5 * self.rt[k - 1]);
        let mut zc = [0.0; MAX_DIM];
        let mut ztc = [0.0; MAX_DIM];
        let mut blo = [0.0; MAX_DIM];
        let mut bhi = [0.0; MAX_DIM];
        'vertex: for mask in 0..(1u32 << n) {
            let mut full = true;
            for i in 0..n {
                let sg = if mask & (1 << i) != 0 { 1.0 } else { -1.0 };
                zc[i] = z[i] + h * sg;
                ztc[i] = zt[i] + ht * sg;
                blo[i] = lo[i].max(zc[i] - h);
                bhi[i] = hi[i].min(zc[i] + h);
                if blo[i] > bhi[i] {
                    continue 'vertex;
                }
                full &= lo[i] <= zc[i] - h && hi[i] >= zc[i] + h;
            }
            if full {
                for i in 0..n {
                    let e = self.env[k];
                    merge(ztc[i] - e, ztc[i] + e, i, out_lo, out_hi);
                }
                continue;
            }
            let mut t_min = 0.0_f64;
            let mut t_max = 0.0_f64;
            for i in 0..n {
                let (a, b) = (blo[i] - zc[i], bhi[i] - zc[i]);
                let near = if a > 0.0 {
                    a
                } else if b < 0.0 {
                    -b
                } else {
                    0.0
                };
                t_min = t_min.max(near);
                t_max = t_max.max(a.abs().max(b.abs()));
            }
            if t_max > self.r[k] {
                let ta = t_min.max(self.r[k]);
                let tb = t_max.min(h);
                let (al, be) = (self.al[k], self.be[k]);
                let (sa, sb) = (al + be / ta, al + be / tb);
                let (s_lo, s_hi) = (sa.min(sb), sa.max(sb));
                let rho_max = (al * ta + be).abs().max((al * tb + be).abs());
                for i in 0..n {
                    let (a, b) = (blo[i] - zc[i], bhi[i] - zc[i]);
                    let c = [s_lo * a, s_lo * b, s_hi * a, s_hi * b];
                    let pl = c.iter().cloned().fold(f64::INFINITY, f64::min).max(-rho_max);
                    let ph = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max).min(rho_max);
                    merge(ztc[i] + pl, ztc[i] + ph, i, out_lo, out_hi);
                }
            }
            if t_min < self.r[k] {
                let rk = self.r[k];
                let mut clo = [0.0; MAX_DIM];
                let mut chi = [0.0; MAX_DIM];
                for i in 0..n {
                    clo[i] = blo[i].max(zc[i] - rk);
                    chi[i] = bhi[i].min(zc[i] + rk);
                }
                self.enclose_rec(
                    &clo[..n],
                    &chi[..n],
                    k + 1,
                    &zc[..n],
                    &ztc[..n],
                    out_lo,
                    out_hi,
                );
            }
        }
    }

    /// `int_{box} J_{f_K}` for the level-`K` map, by exact sub-cube
    /// bookkeeping and Gauss–Legendre quadrature in the sup-norm radius on
    /// partially covered annuli. For the Lusin variant this is the image
    /// measure `|f_K(box)|` (area formula for a Lipschitz homeomorphism).
    pub fn jacobian_integral_over_box(&self, lo: &[f64], hi: &[f64]) -> Result<f64> {
        let n = self.spec.n;
        if lo.len() != n || hi.len() != n || lo.iter().zip(hi).any(|(a, b)| a > b) {
            return param("box bounds must have length n with lo <= hi");
        }
        if self.mode != EvalMode::LevelK {
            return param("box integrals use the level-K map");
        }
        let (mut l, mut h) = (lo.to_vec(), hi.to_vec());
        if self.reflected {
            (l[0], h[0]) = (-hi[0], -lo[0]);
        }
        for i in 0..n {
            l[i] = l[i].max(-1.0);
            h[i] = h[i].min(1.0);
            if l[i] >= h[i] {
                return Ok(0.0);
            }
        }
        let rule = gauss_legendre(16);
        let v = self.integral_rec(&l, &h, 1, &vec![0.0; n], &rule);
        Ok(if self.reflected { -v } else { v })
    }

    fn integral_rec(
        &self,
        lo: &[f64],
        hi: &[f64],
        k: usize,
        z: &[f64],
        rule: &(Vec<f64>, Vec<f64>),
    ) -> f64 {
        let n = self.spec.n;
        if k > self.depth {
            let c = self.rt[self.depth] / self.r[self.depth];
            let vol: f64 = (0..n).map(|i| hi[i] - lo[i]).product();
            return c.powi(n as i32) * vol;
        }
        let h = 0.5 * self.r[k - 1];
        let rk = self.r[k];
        let (al, be) = (self.al[k], self.be[k]);
        let mut total = 0.0;
        'vertex: for mask in 0..(1u32 << n) {
            let mut zc = vec![0.0; n];
            let mut blo = vec![0.0; n];
            let mut bhi = vec![0.0; n];
            let mut full = true;
            for i in 0..n {
                let sg = if mask & (1 << i) != 0 { 1.0 } else { -1.0 };
                zc[i] = z[i] + h * sg;
                blo[i] = lo[i].max(zc[i] - h);
                bhi[i] = hi[i].min(zc[i] + h);
                if blo[i] >= bhi[i] {
                    continue 'vertex;
                }
                full &= lo[i] <= zc[i] - h && hi[i] >= zc[i] + h;
            }
            if full {
                total += self.rt[k - 1].powi(n as i32);
                continue;
            }
            // Relative box, and breakpoints of the sphere-section area in t.
            let a: Vec<f64> = (0..n).map(|i| blo[i] - zc[i]).collect();
            let b: Vec<f64> = (0..n).map(|i| bhi[i] - zc[i]).collect();
            let mut breaks = vec![rk, h];
            for i in 0..n {
                for v in [a[i].abs(), b[i].abs()] {
                    if v > rk && v < h {
                        breaks.push(v);
                    }
                }
            }
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let area = |t: f64| -> f64 {
                let mut s = 0.0;
                for i in 0..n {
                    let mut faces = 0.0;
                    if a[i] <= t && t <= b[i] {
                        faces += 1.0;
                    }
                    if a[i] <= -t && -t <= b[i] {
                        faces += 1.0;
                    }
                    if faces == 0.0 {
                        continue;
                    }
                    let mut prod = faces;
                    for j in 0..n {
                        if j != i {
                            prod *= (b[j].min(t) - a[j].max(-t)).max(0.0);
                        }
                    }
                    s += prod;
                }
                s
            };
            total += integrate_piecewise(
                |t| {
                    let rho = al * t + be;
                    al * (rho / t).powi(n as i32 - 1) * area(t)
                },
                &breaks,
                rule,
            );
            let clo: Vec<f64> = (0..n).map(|i| blo[i].max(zc[i] - rk)).collect();
            let chi: Vec<f64> = (0..n).map(|i| bhi[i].min(zc[i] + rk)).collect();
            if clo.iter().zip(&chi).all(|(p, q)| p < q) {
                total += self.integral_rec(&clo, &chi, k + 1, &zc, rule);
            }
        }
        total
    }

    /// `int_{Q0} J_{f_K} psi` for the level-`K` map. Each annulus is
    /// integrated in sup-norm polar coordinates `x = z + t w`, where the
    /// Jacobian depends on `t` only, with Gauss–Legendre rules of the given
    /// order in `t` and on every face of the unit sup-sphere; cores use a
    /// tensor rule. Exact up to quadrature error for smooth `psi`.
    pub fn jacobian_pairing(&self, psi: &(dyn Fn(&[f64]) -> f64 + Sync), order: usize) -> Result<f64> {
        if self.mode != EvalMode::LevelK {
            return param("Jacobian pairings use the level-K map");
        }
        let n = self.spec.n;
        let rule = gauss_legendre(order.max(2));
        let sign = if self.reflected { -1.0 } else { 1.0 };
        // psi composed with the reflection, so the recursion sees f itself.
        let g = |x: &[f64]| -> f64 {
            if self.reflected {
                let mut y = x.to_vec();
                y[0] = -y[0];
                psi(&y)
            } else {
                psi(x)
            }
        };
        if self.depth == 0 {
            return Ok(tensor_cube_integral(&g, &vec![0.0; n], 1.0, &rule));
        }
        let tiles: Vec<f64> = (0..(1u32 << n))
            .into_par_iter()
            .map(|mask| {
                let z: Vec<f64> = (0..n)
                    .map(|i| if mask & (1 << i) != 0 { 0.5 } else { -0.5 })
                    .collect();
                self.pairing_rec(&g, 1, &z, &rule)
            })
            .collect();
        Ok(sign * tiles.iter().sum::<f64>())
    }

    fn pairing_rec(
        &self,
        g: &(dyn Fn(&[f64]) -> f64 + Sync),
        k: usize,
        z: &[f64],
        rule: &(Vec<f64>, Vec<f64>),
    ) -> f64 {
        let n = self.spec.n;
        let outer = 0.5 * self.r[k - 1];
        let rk = self.r[k];
        let (al, be) = (self.al[k], self.be[k]);
        let annulus = sup_polar_integral(
            &|t: f64, x: &[f64]| al * ((al * t + be) / t).powi(n as i32 - 1) * g(x),
            z,
            rk,
            outer,
            rule,
        );
        let core = if k == self.depth {
            let c = (self.rt[k] / self.r[k]).powi(n as i32);
            c * tensor_cube_integral(g, z, rk, rule)
        } else {
            let h = 0.5 * rk;
            let mut s = 0.0;
            for mask in 0..(1u32 << n) {
                let zc: Vec<f64> = (0..n)
                    .map(|i| z[i] + if mask & (1 << i) != 0 { h } else { -h })
                    .collect();
                s += self.pairing_rec(g, k + 1, &zc, rule);
            }
            s
        };
        annulus + core
    }

    /// Hölder quotient sampling with the construction exponent on `[-1,1]^n`.
    pub fn holder_certificate(&self, pairs: usize, seed: u64) -> Result<HolderCertificate> {
        holder_certificate(self, self.spec.alpha, &SupCube::unit(self.spec.n), pairs, seed)
    }
}

/// `int_{Q(z, r)} g` by a tensor Gauss–Legendre rule.
fn tensor_cube_integral(
    g: &dyn Fn(&[f64]) -> f64,
    z: &[f64],
    r: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let n = z.len();
    let m = rule.0.len();
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    for mut idx in 0..m.pow(n as u32) {
        let mut w = 1.0;
        for i in 0..n {
            let j = idx % m;
            idx /= m;
            x[i] = z[i] + r * rule.0[j];
            w *= r * rule.1[j];
        }
        total += w * g(&x);
    }
    total
}

/// `int_{Q(z, r1) \ Q(z, r0)} g(t, x) dx` with `t = ||x - z||_inf`, using
/// `dx = t^{n-1} dt dsigma(w)` over the faces of the unit sup-sphere.
fn sup_polar_integral(
    g: &dyn Fn(f64, &[f64]) -> f64,
    z: &[f64],
    r0: f64,
    r1: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let n = z.len();
    let m = rule.0.len();
    let face_nodes = m.pow(n as u32 - 1);
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    for (tj, tw) in rule.0.iter().zip(&rule.1) {
        let t = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * tj;
        let wt = 0.5 * (r1 - r0) * tw * t.powi(n as i32 - 1);
        for axis in 0..n {
            for side in [-1.0, 1.0] {
                for mut idx in 0..face_nodes {
                    let mut w = wt;
                    for i in 0..n {
                        if i == axis {
                            x[i] = z[i] + side * t;
                            continue;
                        }
                        let j = idx % m;
                        idx /= m;
                        x[i] = z[i] + t * rule.0[j];
                        w *= rule.1[j];
                    }
                    total += w * g(t, &x);
                }
            }
        }
    }
    total
}

/// Smallest depth whose tail bound `2 sum_{i>=k} r~_i` is below `tolerance`.
pub fn limit_depth(spec: &CantorMapSpec, tolerance: f64) -> Result<usize> {
    if !(tolerance > 0.0) {
        return param("limit tolerance must be positive");
    }
    let max_depth = (1..=60)
        .take_while(|&k| spec.radius(k) > 1e-13)
        .last()
        .unwrap_or(1);
    for k in 1..=max_depth {
        let tail: f64 = (k..k + 400).map(|i| spec.image_radius(i)).sum();
        if 2.0 * tail < tolerance {
            return Ok(k);
        }
    }
    param(format!(
        "tail bound cannot reach {tolerance:e} before the radii underflow (max depth {max_depth})"
    ))
}

impl Map for PiecewiseRadialMap {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let p = self.reflect_point(x);
        let p = &p[..self.spec.n];
        let d = self.descend(p);
        self.eval_descent(p, &d, out);
    }

    fn label(&self) -> String {
        let mode = match self.mode {
            EvalMode::LevelK => format!("level={}", self.depth),
            EvalMode::Limit { tolerance } => format!("limit(tol={tolerance:e},depth={})", self.depth),
        };
        format!(
            "{}{}(alpha={},{})",
            if self.reflected { "reflected-" } else { "" },
            self.spec.variant,
            self.spec.alpha,
            mode
        )
    }

    fn differential(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.analytic_differential(x).ok().map(|d| d.matrix)
    }

    fn enclose(&self, lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.spec.n;
        let (mut l, mut h) = (lo.to_vec(), hi.to_vec());
        if self.reflected {
            (l[0], h[0]) = (-hi[0], -lo[0]);
        }
        if l.iter().zip(&h).any(|(a, b)| *a < -1.0 - 1e-12 || *b > 1.0 + 1e-12) {
            return None;
        }
        let mut out_lo = vec![f64::INFINITY; n];
        let mut out_hi = vec![f64::NEG_INFINITY; n];
        if self.depth == 0 {
            return Some((l, h));
        }
        self.enclose_rec(&l, &h, 1, &vec![0.0; n], &vec![0.0; n], &mut out_lo, &mut out_hi);
        Some((out_lo, out_hi))
    }

    fn local_lipschitz(&self, _lo: &[f64], _hi: &[f64]) -> Option<f64> {
        Some(self.lipschitz_bound())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubePair {
    pub path: VertexPath,
    pub domain: SupCube,
    pub image: SupCube,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderCertificate {
    pub empirical_seminorm: f64,
    pub pairs_examined: usize,
    pub exponent: f64,
}

/// Largest sampled `||f(x) - f(y)||_inf / ||x - y||_inf^exponent` over
/// seeded pairs in `cube`: half uniform pairs, half close pairs at
/// log-uniform separations down to `1e-8` of the cube size.
pub fn holder_certificate(
    f: &dyn Map,
    exponent: f64,
    cube: &SupCube,
    pairs: usize,
    seed: u64,
) -> Result<HolderCertificate> {
    if pairs == 0 {
        return param("holder certificate needs at least one pair");
    }
    if !(exponent > 0.0 && exponent <= 1.0) {
        return param("Hölder exponent must lie in (0, 1]");
    }
    let n = cube.dim();
    let lo = cube.lower();
    let hi = cube.upper();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    for i in 0..pairs {
        let x: Vec<f64> = (0..n).map(|j| rng.gen_range(lo[j]..hi[j])).collect();
        let y: Vec<f64> = if i % 2 == 0 {
            (0..n).map(|j| rng.gen_range(lo[j]..hi[j])).collect()
        } else {
            let scale = cube.half_side() * 10f64.powf(-rng.gen_range(0.0..8.0));
            (0..n)
                .map(|j| (x[j] + scale * rng.gen_range(-1.0..1.0)).clamp(lo[j], hi[j]))
                .collect()
        };
        let dist = x.iter().zip(&y).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if dist == 0.0 {
            continue;
        }
        f.eval_into(&x, &mut fx);
        f.eval_into(&y, &mut fy);
        let df = fx.iter().zip(&fy).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        best = best.max(df / dist.powf(exponent));
    }
    Ok(HolderCertificate {
        empirical_seminorm: best,
        pairs_examined: pairs,
        exponent,
    })
}
