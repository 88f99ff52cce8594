//! Gagliardo and Hölder seminorms, the scale-free embedding comparison and
//! hyperplane-slice seminorms.
//!
//! The Gagliardo double integral
//! `int int |f(x) - f(y)|^p / |x - y|^{d + sp} dx dy`
//! is estimated either on a midpoint grid or by Monte Carlo. On the grid,
//! pairs inside one cell are excluded and replaced by a local model
//! `|f(x) - f(y)| ~ L_i |x - y|^alpha`, with `L_i` the largest neighbour
//! difference quotient of cell `i` and `alpha` the certified Hölder exponent.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::geometry::SupCube;
use crate::maps::Map;
use crate::quadrature::gauss_legendre;

/// Quadrature used by a seminorm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature {
    /// Midpoint grid with `N` cells per axis; history at `N/4, N/2, N`.
    Grid(usize),
    /// Importance-sampled pairs; history at `samples/4, samples/2, samples`.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Integration domain: a cube, or the slice of a cube by `x_axis = offset`.
#[derive(Debug, Clone, PartialEq)]
pub enum SeminormDomain {
    Cube(SupCube),
    Slice {
        cube: SupCube,
        axis: usize,
        offset: f64,
    },
}

impl SeminormDomain {
    /// Dimension of the integration domain.
    pub fn dim(&self) -> usize {
        match self {
            SeminormDomain::Cube(c) => c.dim(),
            SeminormDomain::Slice { cube, .. } => cube.dim() - 1,
        }
    }

    /// The integration cube in its own coordinates.
    fn chart_cube(&self) -> Result<SupCube> {
        match self {
            SeminormDomain::Cube(c) => Ok(c.clone()),
            SeminormDomain::Slice { cube, axis, .. } => {
                let center: Vec<f64> = cube
                    .center()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i != axis)
                    .map(|(_, v)| *v)
                    .collect();
                SupCube::new(center, cube.half_side())
            }
        }
    }

    /// Embeds chart coordinates into the ambient space.
    fn embed(&self, u: &[f64], x: &mut Vec<f64>) {
        x.clear();
        match self {
            SeminormDomain::Cube(_) => x.extend_from_slice(u),
            SeminormDomain::Slice { axis, offset, .. } => {
                x.extend_from_slice(&u[..*axis]);
                x.push(*offset);
                x.extend_from_slice(&u[*axis..]);
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SeminormDomain::Cube(c) => c.describe(),
            SeminormDomain::Slice { cube, axis, offset } => {
                format!("{}|x{}={}", cube.describe(), axis, offset)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeminormParams {
    pub s: f64,
    pub p: f64,
    pub domain: SeminormDomain,
    pub quadrature: Quadrature,
    /// Hölder exponent of the local model; `None` means Lipschitz.
    pub holder_exponent: Option<f64>,
}

impl SeminormParams {
    pub fn new(s: f64, p: f64, domain: SeminormDomain, quadrature: Quadrature) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return param("smoothness s must lie in (0, 1)");
        }
        if !(p > 1.0) || !p.is_finite() {
            return param("integrability p must exceed 1");
        }
        if let SeminormDomain::Slice { cube, axis, offset } = &domain {
            if *axis >= cube.dim() || cube.dim() < 2 {
                return param("slice axis out of range");
            }
            if (offset - cube.center()[*axis]).abs() > cube.half_side() {
                return param("slice offset outside the cube");
            }
        }
        match quadrature {
            Quadrature::Grid(n) if n < 4 => return param("grid quadrature needs at least 4 cells"),
            Quadrature::MonteCarlo { samples, .. } if samples < 16 => {
                return param("Monte Carlo quadrature needs at least 16 samples")
            }
            _ => {}
        }
        Ok(Self {
            s,
            p,
            domain,
            quadrature,
            holder_exponent: None,
        })
    }

    pub fn with_holder_exponent(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return param("Hölder exponent must lie in (0, 1]");
        }
        self.holder_exponent = Some(alpha);
        Ok(self)
    }
}

/// Exponents `((1 - s) n, 1 / (1 - s))` of the space paired against
/// `W^{s, n/s}` in the distributional Jacobian. Exposed as a preset only;
/// the smoothness may exceed one, which the estimators here do not cover.
pub fn dual_exponents(s: f64, n: usize) -> Result<(f64, f64)> {
    if !(s > 0.0 && s < 1.0) || n == 0 {
        return param("dual exponents need s in (0, 1) and n >= 1");
    }
    Ok(((1.0 - s) * n as f64, 1.0 / (1.0 - s)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeminormEstimate {
    /// Finest-resolution estimate of the `p`-th power of the seminorm.
    pub value: f64,
    pub method: String,
    /// `(resolution, value)` from coarse to fine.
    pub history: Vec<(usize, f64)>,
}

impl SeminormEstimate {
    /// Relative change over the last refinement.
    pub fn last_relative_change(&self) -> f64 {
        let k = self.history.len();
        let (a, b) = (self.history[k - 2].1, self.history[k - 1].1);
        if b == 0.0 && a == 0.0 {
            0.0
        } else {
            (b - a).abs() / b.abs().max(a.abs())
        }
    }

    /// The seminorm itself, `value^{1/p}`.
    pub fn seminorm(&self, p: f64) -> f64 {
        self.value.powf(1.0 / p)
    }
}

impl fmt::Display for SeminormEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} ({})", self.value, self.method)
    }
}

/// `int int_{[0,1]^d x [0,1]^d} |x - y|^{beta - d} dx dy` for `beta > 0`.
///
/// Written in sup-norm polar coordinates `u = x - y = t w`, the cube
/// autocorrelation `prod (1 - |u_i|)` integrates in closed form in `t`,
/// leaving a smooth integral over one face of the unit sup-sphere.
pub fn self_cell_constant(d: usize, beta: f64) -> f64 {
    assert!(beta > 0.0 && d >= 1);
    let face = |w: &[f64]| -> f64 {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        // elementary symmetric polynomials of |w_i|
        let mut e = vec![0.0; d + 1];
        e[0] = 1.0;
        for v in w {
            let a = v.abs();
            for k in (1..=d).rev() {
                e[k] += e[k - 1] * a;
            }
        }
        let series: f64 = (0..=d)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * e[k] / (beta + k as f64))
            .sum();
        norm.powf(beta - d as f64) * series
    };
    if d == 1 {
        return 2.0 * face(&[1.0]);
    }
    // One face (w_0 = 1) times 2d by symmetry; the remaining coordinates
    // range over [0, 1] with a factor 2 each.
    let rule = gauss_legendre(24);
    let m = d - 1;
    let mut w = vec![1.0; d];
    let mut total = 0.0;
    let count = rule.0.len().pow(m as u32);
    for mut idx in 0..count {
        let mut weight = 1.0;
        for slot in w.iter_mut().skip(1) {
            let j = idx % rule.0.len();
            idx /= rule.0.len();
            *slot = 0.5 * (rule.0[j] + 1.0);
            weight *= 0.5 * rule.1[j];
        }
        total += weight * face(&w);
    }
    2.0 * d as f64 * 2f64.powi(m as i32) * total
}

/// Values of `f` at the cell midpoints of an `N^d` grid on the chart cube.
fn midpoint_values(f: &dyn Map, domain: &SeminormDomain, chart: &SupCube, n_cells: usize) -> Vec<f64> {
    let d = chart.dim();
    let m = f.dim();
    let h = 2.0 * chart.half_side() / n_cells as f64;
    let lo = chart.lower();
    let total = n_cells.pow(d as u32);
    let mut out = vec![0.0; total * m];
    out.par_chunks_mut(m * 1024).enumerate().for_each(|(chunk, block)| {
        let mut u = vec![0.0; d];
        let mut x = Vec::with_capacity(d + 1);
        for (k, v) in block.chunks_mut(m).enumerate() {
            let mut idx = chunk * 1024 + k;
            for a in 0..d {
                u[a] = lo[a] + (idx % n_cells) as f64 * h + 0.5 * h;
                idx /= n_cells;
            }
            domain.embed(&u, &mut x);
            f.eval_into(&x, v);
        }
    });
    out
}

fn euclid_diff_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if p == 2.0 {
        sq
    } else {
        sq.powf(0.5 * p)
    }
}

/// Grid estimate at one resolution.
fn grid_estimate(f: &dyn Map, params: &SeminormParams, n_cells: usize) -> Result<f64> {
    let chart = params.domain.chart_cube()?;
    let d = chart.dim();
    let m = f.dim();
    let (s, p) = (params.s, params.p);
    let alpha = params.holder_exponent.unwrap_or(1.0);
    let beta = p * (alpha - s);
    if !(beta > 0.0) {
        return param("local model needs the Hölder exponent to exceed s");
    }
    let h = 2.0 * chart.half_side() / n_cells as f64;
    let vals = midpoint_values(f, &params.domain, &chart, n_cells);
    let total = n_cells.pow(d as u32);
    let multi = |mut i: usize| -> Vec<i64> {
        (0..d)
            .map(|_| {
                let v = (i % n_cells) as i64;
                i /= n_cells;
                v
            })
            .collect()
    };
    let flat = |mi: &[i64]| -> usize { mi.iter().rev().fold(0usize, |acc, &v| acc * n_cells + v as usize) };
    // Kernel table over nonnegative offset magnitudes.
    let expo = -(d as f64 + s * p) / 2.0;
    let kernel = |off: &[i64]| -> f64 {
        let r2: f64 = off.iter().map(|&o| (o as f64 * h).powi(2)).sum();
        r2.powf(expo)
    };
    // Half of the offset lattice: first nonzero component positive.
    let span = 2 * n_cells - 1;
    let offsets: Vec<(Vec<i64>, f64)> = (0..span.pow(d as u32))
        .filter_map(|mut k| {
            let off: Vec<i64> = (0..d)
                .map(|_| {
                    let v = (k % span) as i64 - (n_cells as i64 - 1);
                    k /= span;
                    v
                })
                .collect();
            let first = off.iter().rev().find(|&&v| v != 0)?;
            (*first > 0).then(|| {
                let kv = kernel(&off);
                (off, kv)
            })
        })
        .collect();
    let vol = h.powi(d as i32);
    // (pair sum, sum of L_i^p) per chunk, reduced in a fixed order.
    let partial: Vec<(f64, f64)> = (0..total)
        .into_par_iter()
        .chunks(64)
        .map(|chunk| {
            let (mut pairs, mut local) = (0.0, 0.0);
            let mut nb = vec![0i64; d];
            for i in chunk {
                let mi = multi(i);
                let vi = &vals[i * m..(i + 1) * m];
                'off: for (off, kv) in &offsets {
                    for a in 0..d {
                        nb[a] = mi[a] + off[a];
                        if nb[a] < 0 || nb[a] >= n_cells as i64 {
                            continue 'off;
                        }
                    }
                    let j = flat(&nb);
                    pairs += kv * euclid_diff_pow(vi, &vals[j * m..(j + 1) * m], p);
                }
                let mut lmax = 0.0_f64;
                for a in 0..d {
                    for delta in [-1i64, 1] {
                        nb.copy_from_slice(&mi);
                        nb[a] += delta;
                        if nb[a] < 0 || nb[a] >= n_cells as i64 {
                            continue;
                        }
                        let j = flat(&nb);
                        lmax = lmax.max(euclid_diff_pow(vi, &vals[j * m..(j + 1) * m], p));
                    }
                }
                local += lmax;
            }
            (pairs, local)
        })
        .collect();
    let pair_sum: f64 = partial.iter().map(|c| c.0).sum();
    let lip_sum: f64 = partial.iter().map(|c| c.1).sum();
    // Self-cell pairs: L_i^p h^{d+beta} K(d, beta), with L_i^p = lmax / h^{alpha p}.
    let local = lip_sum / h.powf(alpha * p) * h.powf(d as f64 + beta) * self_cell_constant(d, beta);
    Ok(2.0 * pair_sum * vol * vol + local)
}

/// Monte Carlo estimate from the first `count` samples of a fixed stream.
fn monte_carlo_prefixes(
    f: &dyn Map,
    params: &SeminormParams,
    samples: usize,
    seed: u64,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    let chart = params.domain.chart_cube()?;
    let d = chart.dim();
    let (s, p) = (params.s, params.p);
    let alpha = params.holder_exponent.unwrap_or(1.0);
    let gamma = p * (alpha - s);
    if !(gamma > 0.0) {
        return param("importance density needs the Hölder exponent to exceed s");
    }
    let h_min: f64 = 1e-6;
    let r_max = 2.0 * chart.half_side() * (d as f64).sqrt();
    let (lo, hi) = (chart.lower(), chart.upper());
    let vol = chart.volume();
    let sphere = unit_sphere_area(d);
    let norm = r_max.powf(gamma) - h_min.powf(gamma);
    // Fixed-size batches keep the result independent of the thread count.
    const BATCH: usize = 4096;
    let batches = samples.div_ceil(BATCH);
    let sums: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut x = Vec::with_capacity(d + 1);
            let mut y = Vec::with_capacity(d + 1);
            let mut out = Vec::with_capacity(BATCH);
            for _ in (b * BATCH)..((b + 1) * BATCH).min(samples) {
                let u: Vec<f64> = (0..d).map(|a| rng.gen_range(lo[a]..hi[a])).collect();
                let (dir, dn) = unit_direction(&mut rng, d);
                let t: f64 = rng.gen();
                let r = (h_min.powf(gamma) + t * norm).powf(1.0 / gamma);
                let w: Vec<f64> = (0..d).map(|a| u[a] + r * dir[a] / dn).collect();
                if (0..d).any(|a| w[a] <= lo[a] || w[a] >= hi[a]) {
                    out.push(0.0);
                    continue;
                }
                params.domain.embed(&u, &mut x);
                params.domain.embed(&w, &mut y);
                let fx = f.eval(&x);
                let fy = f.eval(&y);
                let integrand = euclid_diff_pow(&fx, &fy, p) / r.powf(d as f64 + s * p);
                let pdf = gamma * r.powf(gamma - 1.0) / norm / (sphere * r.powf(d as f64 - 1.0));
                out.push(vol * integrand / pdf);
            }
            out
        })
        .collect();
    let flat: Vec<f64> = sums.into_iter().flatten().collect();
    Ok(checkpoints
        .iter()
        .map(|&c| flat[..c].iter().sum::<f64>() / c as f64)
        .collect())
}

/// Uniform direction by rejection from the cube; returns it unnormalized
/// together with its length.
fn unit_direction(rng: &mut ChaCha8Rng, d: usize) -> (Vec<f64>, f64) {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return (v, n);
        }
    }
}

/// Surface area of the unit sphere in `R^d`, via `S_d = 2 pi S_{d-2} / (d - 2)`.
fn unit_sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            let mut a = if d % 2 == 0 { 2.0 * PI } else { 4.0 * PI };
            let mut k = if d % 2 == 0 { 2 } else { 3 };
            while k < d {
                a *= 2.0 * PI / k as f64;
                k += 2;
            }
            a
        }
    }
}

/// `p`-th power of the Gagliardo seminorm with a three-step history.
pub fn gagliardo_seminorm(f: &dyn Map, params: &SeminormParams) -> Result<SeminormEstimate> {
    let chart = params.domain.chart_cube()?;
    if chart.half_side() <= 0.0 {
        return param("degenerate seminorm domain");
    }
    match params.quadrature {
        Quadrature::Grid(n) => {
            let levels = [n / 4, n / 2, n];
            let history = levels
                .iter()
                .map(|&k| Ok((k, grid_estimate(f, params, k)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(SeminormEstimate {
                value: history[2].1,
                method: format!("grid(N={n})"),
                history,
            })
        }
        Quadrature::MonteCarlo { samples, seed } => {
            let checkpoints = [samples / 4, samples / 2, samples];
            let values = monte_carlo_prefixes(f, params, samples, seed, &checkpoints)?;
            Ok(SeminormEstimate {
                value: values[2],
                method: format!("monte-carlo(samples={samples},seed={seed})"),
                history: checkpoints.iter().copied().zip(values).collect(),
            })
        }
    }
}

/// `(int |f|^p)^{1/p}` by the midpoint rule on `N^d` cells.
pub fn lp_norm(f: &dyn Map, cube: &SupCube, p: f64, n_cells: usize) -> Result<f64> {
    if !(p >= 1.0) || n_cells == 0 {
        return param("L^p norm needs p >= 1 and a positive grid");
    }
    let domain = SeminormDomain::Cube(cube.clone());
    let vals = midpoint_values(f, &domain, cube, n_cells);
    let m = f.dim();
    let vol = (2.0 * cube.half_side() / n_cells as f64).powi(cube.dim() as i32);
    let zero = vec![0.0; m];
    let sum: f64 = vals.chunks(m).map(|v| euclid_diff_pow(v, &zero, p)).sum();
    Ok((sum * vol).powf(1.0 / p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderComparison {
    /// `alpha = s - d/p`.
    pub alpha: f64,
    /// Sampled `sup |f(x) - f(y)| / |x - y|^alpha`.
    pub holder_seminorm: f64,
    /// Gagliardo seminorm (not its `p`-th power).
    pub gagliardo_value: f64,
    pub ratio: f64,
}

/// Sampled Hölder seminorm on the chart cube, Euclidean norms throughout.
pub fn holder_seminorm(
    f: &dyn Map,
    domain: &SeminormDomain,
    alpha: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return param("Hölder exponent must lie in (0, 1]");
    }
    let chart = domain.chart_cube()?;
    let d = chart.dim();
    let (lo, hi) = (chart.lower(), chart.upper());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for i in 0..pairs {
        // Unit-cube coordinates so the sample pattern is scale invariant.
        let a: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = if i % 2 == 0 {
            (0..d).map(|_| rng.gen::<f64>()).collect()
        } else {
            let scale = 10f64.powf(-rng.gen_range(0.0..6.0));
            a.iter().map(|v| (v + scale * rng.gen_range(-1.0..1.0)).clamp(0.0, 1.0)).collect()
        };
        let u: Vec<f64> = (0..d).map(|k| lo[k] + a[k] * (hi[k] - lo[k])).collect();
        let w: Vec<f64> = (0..d).map(|k| lo[k] + b[k] * (hi[k] - lo[k])).collect();
        let dist = u.iter().zip(&w).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        if dist == 0.0 {
            continue;
        }
        domain.embed(&u, &mut x);
        domain.embed(&w, &mut y);
        let df = euclid_diff_pow(&f.eval(&x), &f.eval(&y), 2.0).sqrt();
        best = best.max(df / dist.powf(alpha));
    }
    Ok(best)
}

/// Both sides of the scale-free embedding `[f]_{C^{0,s-d/p}} <= C [f]_{W^{s,p}}`.
pub fn holder_vs_gagliardo(
    f: &dyn Map,
    params: &SeminormParams,
    pairs: usize,
    seed: u64,
) -> Result<HolderComparison> {
    let d = params.domain.dim();
    if !(params.s * params.p > d as f64) {
        return Err(Error::EmbeddingInapplicable {
            s: params.s,
            p: params.p,
            d,
        });
    }
    let alpha = params.s - d as f64 / params.p;
    let holder = holder_seminorm(f, &params.domain, alpha, pairs, seed)?;
    let g = gagliardo_seminorm(f, params)?.seminorm(params.p);
    let ratio = if g > 0.0 {
        holder / g
    } else if holder == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(HolderComparison {
        alpha,
        holder_seminorm: holder,
        gagliardo_value: g,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    /// `(offset, p-th power of the slice seminorm)`.
    pub per_offset: Vec<(f64, f64)>,
    /// Trapezoid integral of the slice values over the offsets.
    pub integral: f64,
    /// `p`-th power of the full-domain seminorm.
    pub full: f64,
    /// `integral / full`, the empirical slicing constant.
    pub ratio: f64,
}

/// Slice seminorms along `x_axis = r` for each offset, their integral over
/// `r`, and the full-domain seminorm.
pub fn slice_seminorm(
    f: &dyn Map,
    cube: &SupCube,
    axis: usize,
    offsets: &[f64],
    s: f64,
    p: f64,
    quadrature: Quadrature,
) -> Result<SliceReport> {
    if offsets.len() < 2 {
        return param("slice integration needs at least two offsets");
    }
    if offsets.windows(2).any(|w| w[1] <= w[0]) {
        return param("slice offsets must be increasing");
    }
    let per_offset = offsets
        .iter()
        .map(|&r| {
            let params = SeminormParams::new(
                s,
                p,
                SeminormDomain::Slice {
                    cube: cube.clone(),
                    axis,
                    offset: r,
                },
                quadrature,
            )?;
            Ok((r, gagliardo_seminorm(f, &params)?.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let integral: f64 = per_offset
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    let full = gagliardo_seminorm(f, &SeminormParams::new(s, p, SeminormDomain::Cube(cube.clone()), quadrature)?)?.value;
    let ratio = if full > 0.0 {
        integral / full
    } else if integral == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SliceReport {
        per_offset,
        integral,
        full,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Affine;

    /// `int int_{[-1,1]^2} |x - y|^{beta - 1}` for the identity in one dimension.
    fn identity_1d(beta: f64) -> f64 {
        2f64.powf(beta + 2.0) / (beta * (beta + 1.0))
    }

    #[test]
    fn self_cell_constant_closed_forms() {
        for beta in [0.3, 1.0, 2.5] {
            let k = self_cell_constant(1, beta);
            assert!((k - 2.0 / (beta * (beta + 1.0))).abs() < 1e-14);
        }
        // beta = d: integrand is one
        assert!((self_cell_constant(2, 2.0) - 1.0).abs() < 1e-12);
        assert!((self_cell_constant(3, 3.0) - 1.0).abs() < 1e-10);
        // mean squared distance in the unit square is 1/3
        assert!((self_cell_constant(2, 4.0) - 1.0 / 3.0).abs() < 1e-12);
        // mean inverse distance in the unit square
        let oracle = 4.0 / 3.0 * (1.0 - 2f64.sqrt()) + 4.0 * (1.0 + 2f64.sqrt()).ln();
        assert!((self_cell_constant(2, 1.0) - oracle).abs() < 1e-8);
    }

    #[test]
    fn grid_seminorm_of_identity() {
        let f = Affine::identity(1);
        for (s, p) in [(0.5, 2.0), (0.3, 3.0), (0.8, 1.5)] {
            let params =
                SeminormParams::new(s, p, SeminormDomain::Cube(SupCube::unit(1)), Quadrature::Grid(256)).unwrap();
            let est = gagliardo_seminorm(&f, &params).unwrap();
            let exact = identity_1d(p * (1.0 - s));
            // error decays like h^{p(1-s)}, slowest for the last pair
            let tol = if p * (1.0 - s) < 0.5 { 3e-2 } else { 2e-3 };
            assert!((est.value - exact).abs() / exact < tol, "{s} {p}: {} vs {exact}", est.value);
            assert_eq!(est.history.len(), 3);
        }
        let f2 = Affine::identity(2);
        let params =
            SeminormParams::new(0.5, 2.0, SeminormDomain::Cube(SupCube::unit(2)), Quadrature::Grid(64)).unwrap();
        let est = gagliardo_seminorm(&f2, &params).unwrap();
        let exact = 8.0 * self_cell_constant(2, 1.0);
        assert!((est.value - exact).abs() / exact < 5e-3, "{} vs {exact}", est.value);
    }

    #[test]
    fn monte_carlo_seminorm_of_identity() {
        let f = Affine::identity(2);
        let q = Quadrature::MonteCarlo {
            samples: 200_000,
            seed: 7,
        };
        let params = SeminormParams::new(0.5, 2.0, SeminormDomain::Cube(SupCube::unit(2)), q).unwrap();
        let a = gagliardo_seminorm(&f, &params).unwrap();
        let exact = 8.0 * self_cell_constant(2, 1.0);
        assert!((a.value - exact).abs() / exact < 2e-2, "{} vs {exact}", a.value);
        let b = gagliardo_seminorm(&f, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn embedding_requires_sp_above_d() {
        let f = Affine::identity(2);
        let params =
            SeminormParams::new(0.5, 4.0, SeminormDomain::Cube(SupCube::unit(2)), Quadrature::Grid(16)).unwrap();
        assert!(matches!(
            holder_vs_gagliardo(&f, &params, 100, 1),
            Err(Error::EmbeddingInapplicable { .. })
        ));
        let params =
            SeminormParams::new(0.8, 4.0, SeminormDomain::Cube(SupCube::unit(2)), Quadrature::Grid(32)).unwrap();
        let cmp = holder_vs_gagliardo(&f, &params, 2000, 1).unwrap();
        assert!((cmp.alpha - 0.3).abs() < 1e-12);
        assert!(cmp.ratio.is_finite() && cmp.ratio > 0.0);
    }

    #[test]
    fn constant_map_has_zero_seminorm() {
        let f = Affine::constant(vec![1.0, 2.0]);
        let params =
            SeminormParams::new(0.9, 4.0, SeminormDomain::Cube(SupCube::unit(2)), Quadrature::Grid(16)).unwrap();
        assert_eq!(gagliardo_seminorm(&f, &params).unwrap().value, 0.0);
        assert_eq!(holder_vs_gagliardo(&f, &params, 100, 1).unwrap().ratio, 0.0);
    }

    #[test]
    fn slices_of_identity() {
        let f = Affine::identity(2);
        let rep = slice_seminorm(&f, &SupCube::unit(2), 0, &[-0.5, 0.0, 0.5], 0.5, 2.0, Quadrature::Grid(128)).unwrap();
        // every slice sees the one-dimensional identity
        for (_, v) in &rep.per_offset {
            assert!((v - identity_1d(1.0)).abs() / identity_1d(1.0) < 5e-3);
        }
        assert!((rep.integral - identity_1d(1.0)).abs() < 0.02);
        assert!(rep.ratio > 0.0);
        assert!(slice_seminorm(&f, &SupCube::unit(2), 0, &[0.0], 0.5, 2.0, Quadrature::Grid(16)).is_err());
    }

    #[test]
    fn lp_norm_of_identity() {
        let f = Affine::identity(1);
        let v = lp_norm(&f, &SupCube::unit(1), 2.0, 1000).unwrap();
        assert!((v - (2.0f64 / 3.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn dual_exponents_preset() {
        let (s, p) = dual_exponents(0.25, 2).unwrap();
        assert!((s - 1.5).abs() < 1e-15 && (p - 4.0 / 3.0).abs() < 1e-15);
        assert!(dual_exponents(1.0, 2).is_err());
    }
}
