//! Distributional Jacobians through mollified approximants, image measures,
//! Ciarlet–Nečas checks and preimage counting.
//!
//! A map `f` is smoothed as `F = sum_m c_m kappa_eps(x - y_m) f(y_m)` over a
//! lattice `y_m` of spacing `h = eps / taps`, with the tensor kernel
//! `kappa(t) = (315/256)(1 - t^2)^4`. `F` is a genuine `C^3` function whose
//! derivatives at lattice nodes are exact finite sums, so `int J_F phi` is a
//! trapezoid sum of exactly computed Jacobians. The pairing `J_f(phi)` is the
//! limit of these values as `eps -> 0`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cantor::{CantorMapSpec, EvalMode, PiecewiseRadialMap, Variant};
use crate::degree::{CertStatus, Domain, GridFunction, PlDegree};
use crate::error::{param, Error, Result};
use crate::geometry::{determinant, RegularGrid, SupCube};
use crate::maps::{Map, RadialExtension};
use crate::norms::{gagliardo_seminorm, lp_norm, Quadrature, SeminormDomain, SeminormParams};
use crate::quadrature::geometric_extrapolate;
use crate::testfn::{SmoothCutoff, TestFunction};

/// Normalized mollifier profile on `[-1, 1]`.
pub fn kernel(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        315.0 / 256.0 * (1.0 - t * t).powi(4)
    }
}

pub fn kernel_derivative(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        -315.0 / 32.0 * t * (1.0 - t * t).powi(3)
    }
}

/// Lattice weights for value and derivative at one scale. The value weights
/// sum to one and the derivative weights differentiate linear functions
/// exactly; each set uses a single normalization constant.
fn lattice_weights(taps: usize, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let t = taps as i64;
    let raw: Vec<f64> = (-t..=t).map(|j| kernel(j as f64 / taps as f64)).collect();
    let sum: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|v| v / sum).collect();
    let draw: Vec<f64> = (-t..=t)
        .map(|j| kernel_derivative(j as f64 / taps as f64))
        .collect();
    // F'(x_i) = sum_j D_j f(x_i - j h); for f(y) = y this is -h sum_j j D_j.
    let h = eps / taps as f64;
    let moment: f64 = (-t..=t).zip(&draw).map(|(j, d)| j as f64 * d).sum();
    let d: Vec<f64> = draw.iter().map(|v| -v / (h * moment)).collect();
    (w, d)
}

/// Settings of a mollified sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierSettings {
    /// Strictly decreasing kernel radii.
    pub scales: Vec<f64>,
    /// Lattice nodes per kernel radius.
    pub taps: usize,
}

impl MollifierSettings {
    /// `count` scales halving from `coarsest`.
    pub fn halving(coarsest: f64, count: usize, taps: usize) -> Self {
        Self {
            scales: (0..count).map(|k| coarsest * 0.5f64.powi(k as i32)).collect(),
            taps,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.scales.is_empty() || self.scales.iter().any(|s| !(*s > 0.0)) {
            return param("mollifier scales must be positive");
        }
        if self.scales.windows(2).any(|w| w[1] >= w[0]) {
            return param("mollifier scales must be strictly decreasing");
        }
        if self.taps < 2 {
            return param("mollifier needs at least two lattice nodes per radius");
        }
        Ok(())
    }
}

/// Smoothed approximant on a lattice box: values and differentials at the
/// nodes `lo + i h`.
#[derive(Debug, Clone)]
pub struct MollifiedField {
    pub scale: f64,
    pub spacing: f64,
    pub lo: Vec<f64>,
    pub shape: Vec<usize>,
    /// `n` values per node.
    pub values: Vec<f64>,
    /// Row-major `n x n` differential per node.
    pub differentials: Vec<f64>,
}

impl MollifiedField {
    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn node(&self, mut index: usize) -> Vec<f64> {
        self.shape
            .iter()
            .enumerate()
            .map(|(a, &m)| {
                let i = index % m;
                index /= m;
                self.lo[a] + i as f64 * self.spacing
            })
            .collect()
    }

    pub fn value(&self, index: usize) -> &[f64] {
        let n = self.shape.len();
        &self.values[index * n..(index + 1) * n]
    }

    pub fn jacobian(&self, index: usize) -> f64 {
        let n = self.shape.len();
        let d = &self.differentials[index * n * n..(index + 1) * n * n];
        match n {
            1 => d[0],
            2 => d[0] * d[3] - d[1] * d[2],
            _ => determinant((0..n).map(|i| d[i * n..(i + 1) * n].to_vec()).collect()),
        }
    }

    /// `sum_i h^n J_F(x_i) w(x_i, F(x_i))` in fixed node order.
    pub fn pairing(&self, weight: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync)) -> f64 {
        let vol = self.spacing.powi(self.shape.len() as i32);
        let partial: Vec<f64> = (0..self.node_count())
            .into_par_iter()
            .chunks(8192)
            .map(|chunk| {
                let mut s = 0.0;
                for i in chunk {
                    let w = weight(&self.node(i), self.value(i));
                    if w != 0.0 {
                        s += w * self.jacobian(i);
                    }
                }
                s
            })
            .collect();
        vol * partial.iter().sum::<f64>()
    }
}

/// Smooth approximants of a map at decreasing scales. Outside `domain` the
/// map is continued by sup-norm radial reflection.
pub struct MollifiedSequence<'a> {
    source: &'a dyn Map,
    domain: SupCube,
    settings: MollifierSettings,
}

impl<'a> MollifiedSequence<'a> {
    pub fn new(source: &'a dyn Map, domain: SupCube, settings: MollifierSettings) -> Result<Self> {
        settings.validate()?;
        if source.dim() != domain.dim() {
            return param("map and domain dimensions differ");
        }
        if settings.scales[0] >= domain.half_side() {
            return param("mollifier scales must be smaller than the domain half side");
        }
        Ok(Self {
            source,
            domain,
            settings,
        })
    }

    pub fn scales(&self) -> &[f64] {
        &self.settings.scales
    }

    pub fn domain(&self) -> &SupCube {
        &self.domain
    }

    pub fn label(&self) -> String {
        self.source.label()
    }

    /// Approximant at `scale` on the lattice box covering `[lo, hi]`.
    pub fn field(&self, scale: f64, lo: &[f64], hi: &[f64]) -> Result<MollifiedField> {
        let n = self.domain.dim();
        let taps = self.settings.taps;
        let h = scale / taps as f64;
        let shape: Vec<usize> = (0..n)
            .map(|a| ((hi[a] - lo[a]) / h - 1e-9).ceil().max(0.0) as usize + 1)
            .collect();
        let total: usize = shape.iter().product();
        if total > 40_000_000 {
            return param(format!(
                "mollified lattice of {total} nodes is too large; use coarser scales"
            ));
        }
        // Sample lattice padded by `taps` nodes per side.
        let pshape: Vec<usize> = shape.iter().map(|m| m + 2 * taps).collect();
        let plo: Vec<f64> = lo.iter().map(|v| v - taps as f64 * h).collect();
        let ext = RadialExtension::new(self.source, self.domain.clone());
        let ptotal: usize = pshape.iter().product();
        let mut samples = vec![0.0; ptotal * n];
        samples
            .par_chunks_mut(n * 4096)
            .enumerate()
            .for_each(|(chunk, out)| {
                let mut x = vec![0.0; n];
                for (k, v) in out.chunks_mut(n).enumerate() {
                    let mut idx = chunk * 4096 + k;
                    for a in 0..n {
                        x[a] = plo[a] + (idx % pshape[a]) as f64 * h;
                        idx /= pshape[a];
                    }
                    ext.eval_into(&x, v);
                }
            });
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                point: vec![],
                domain: "mollifier lattice left the extension range".into(),
            });
        }
        let (w, d) = lattice_weights(taps, scale);
        let smooth = |deriv_axis: Option<usize>| -> Vec<f64> {
            let mut data = samples.clone();
            let mut cur = pshape.clone();
            for a in 0..n {
                let weights = if deriv_axis == Some(a) { &d } else { &w };
                data = convolve_axis(&data, &cur, n, a, weights);
                cur[a] -= 2 * taps;
            }
            data
        };
        let values = smooth(None);
        let mut differentials = vec![0.0; total * n * n];
        for j in 0..n {
            let dj = smooth(Some(j));
            for node in 0..total {
                for i in 0..n {
                    differentials[node * n * n + i * n + j] = dj[node * n + i];
                }
            }
        }
        Ok(MollifiedField {
            scale,
            spacing: h,
            lo: lo.to_vec(),
            shape,
            values,
            differentials,
        })
    }

    /// Sampled sup distance between each approximant and the source on the
    /// closed domain, one value per scale.
    pub fn approximation_errors(&self) -> Result<Vec<f64>> {
        let (lo, hi) = (self.domain.lower(), self.domain.upper());
        self.settings
            .scales
            .iter()
            .map(|&eps| {
                let field = self.field(eps, &lo, &hi)?;
                let stride = (field.node_count() / 20_000).max(1);
                let mut worst = 0.0_f64;
                for i in (0..field.node_count()).step_by(stride) {
                    let fx = self.source.eval(&field.node(i));
                    worst = worst.max(crate::geometry::sup_dist(&fx, field.value(i)));
                }
                Ok(worst)
            })
            .collect()
    }
}

/// One-dimensional convolution along `axis`, shrinking it by `weights.len() - 1`.
fn convolve_axis(data: &[f64], shape: &[usize], comps: usize, axis: usize, weights: &[f64]) -> Vec<f64> {
    let taps2 = weights.len() - 1;
    let mut out_shape = shape.to_vec();
    out_shape[axis] -= taps2;
    let stride: usize = shape[..axis].iter().product::<usize>() * comps;
    let out_total: usize = out_shape.iter().product::<usize>() * comps;
    let inner: usize = stride;
    let m_in = shape[axis];
    let m_out = out_shape[axis];
    let mut out = vec![0.0; out_total];
    out.par_chunks_mut(inner * m_out)
        .enumerate()
        .for_each(|(o, block)| {
            let src = &data[o * inner * m_in..(o + 1) * inner * m_in];
            for i in 0..m_out {
                let dst = &mut block[i * inner..(i + 1) * inner];
                // Output node i sits at input node i + taps; weight index j
                // corresponds to offset j - taps, sample x_i - (j - taps) h.
                for (j, wj) in weights.iter().enumerate() {
                    if *wj == 0.0 {
                        continue;
                    }
                    let s = &src[(i + taps2 - j) * inner..(i + taps2 - j + 1) * inner];
                    for (d, v) in dst.iter_mut().zip(s) {
                        *d += wj * v;
                    }
                }
            }
        });
    out
}

/// Per-scale Jacobian pairings and their extrapolated limit.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianPairing {
    /// `(eps, int J_{f_eps} phi)` from coarse to fine.
    pub per_scale: Vec<(f64, f64)>,
    pub limit: f64,
    /// Size of the last correction, used as an error indicator.
    pub error_indicator: f64,
    /// Successive differences shrink.
    pub cauchy: bool,
    pub label: String,
}

impl JacobianPairing {
    fn from_values(per_scale: Vec<(f64, f64)>, label: String) -> Result<Self> {
        let values: Vec<f64> = per_scale.iter().map(|p| p.1).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Quadrature {
                detail: format!("non-finite Jacobian pairing: {values:?}"),
            });
        }
        let m = values.len();
        let last = values[m - 1];
        let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let cauchy = diffs.windows(2).all(|w| w[1] <= w[0] * 1.05 + 1e-14);
        let step = diffs.last().copied().unwrap_or(0.0);
        let limit = match geometric_extrapolate(&values) {
            Some(e) if (e - last).abs() <= 4.0 * step + 1e-15 => e,
            _ => last,
        };
        Ok(Self {
            per_scale,
            limit,
            error_indicator: step.max((limit - last).abs()),
            cauchy,
            label,
        })
    }
}

fn support_box(phi: &dyn TestFunction, domain: &SupCube) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = phi.support();
    let n = domain.dim();
    let lo: Vec<f64> = (0..n).map(|i| lo[i].max(domain.center()[i] - domain.half_side())).collect();
    let hi: Vec<f64> = (0..n).map(|i| hi[i].min(domain.center()[i] + domain.half_side())).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return param("test function support misses the domain");
    }
    Ok((lo, hi))
}

/// `J_f(phi) = lim int J_{f_eps} phi` along the sequence's scales.
pub fn distributional_jacobian(seq: &MollifiedSequence, phi: &dyn TestFunction) -> Result<JacobianPairing> {
    Ok(pair_many(seq, &[phi])?.remove(0))
}

/// Pairings against several test functions sharing the approximants.
pub fn pair_many(seq: &MollifiedSequence, phis: &[&dyn TestFunction]) -> Result<Vec<JacobianPairing>> {
    let n = seq.domain.dim();
    if phis.iter().any(|p| p.dim() != n) {
        return param("test function dimension mismatch");
    }
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for phi in phis {
        let (a, b) = support_box(*phi, &seq.domain)?;
        for i in 0..n {
            lo[i] = lo[i].min(a[i]);
            hi[i] = hi[i].max(b[i]);
        }
    }
    let mut per: Vec<Vec<(f64, f64)>> = vec![Vec::new(); phis.len()];
    for &eps in &seq.settings.scales {
        let field = seq.field(eps, &lo, &hi)?;
        for (k, phi) in phis.iter().enumerate() {
            let v = field.pairing(&|x, _| phi.value(x));
            per[k].push((eps, v));
        }
    }
    per.into_iter()
        .zip(phis)
        .map(|(p, phi)| JacobianPairing::from_values(p, format!("{} vs {}", seq.label(), phi.label())))
        .collect()
}

/// `J_f(psi o f)`: pairs each approximant `F` with `psi(F(x))` over the domain.
pub fn composed_pairing(seq: &MollifiedSequence, psi: &dyn TestFunction) -> Result<JacobianPairing> {
    let (lo, hi) = (seq.domain.lower(), seq.domain.upper());
    let mut per = Vec::new();
    for &eps in &seq.settings.scales {
        let field = seq.field(eps, &lo, &hi)?;
        per.push((eps, field.pairing(&|_, fx| psi.value(fx))));
    }
    JacobianPairing::from_values(per, format!("{} vs {} o f", seq.label(), psi.label()))
}

/// `|J_f(psi) - J_g(psi)|` against the fractional-norm product bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BnRatio {
    pub pairing_f: f64,
    pub pairing_g: f64,
    pub pairing_difference: f64,
    /// `||f - g||_{W^{s,n}} (||f||^{n-1} + ||g||^{n-1}) ||grad psi||_inf`
    /// with `s = (n-1)/n`, without the unknown constant.
    pub seminorm_product_bound: f64,
    pub ratio: f64,
}

/// Jacobian pairing provider for [`bn_difference_ratio`].
pub enum PairingSource<'a> {
    /// Mollified approximants of a general map.
    Mollified(&'a dyn Map, SupCube, MollifierSettings),
    /// Direct per-region quadrature for a level-`K` Cantor map, which is
    /// Lipschitz, so its distributional and pointwise Jacobians agree.
    Cantor(&'a PiecewiseRadialMap),
}

impl PairingSource<'_> {
    fn map(&self) -> &dyn Map {
        match self {
            PairingSource::Mollified(m, _, _) => *m,
            PairingSource::Cantor(m) => *m,
        }
    }

    fn pairing(&self, psi: &dyn TestFunction) -> Result<f64> {
        match self {
            PairingSource::Mollified(m, d, s) => {
                let seq = MollifiedSequence::new(*m, d.clone(), s.clone())?;
                Ok(distributional_jacobian(&seq, psi)?.limit)
            }
            PairingSource::Cantor(m) => m.jacobian_pairing(&|x: &[f64]| psi.value(x), 8),
        }
    }
}

struct Difference<'a> {
    f: &'a dyn Map,
    g: &'a dyn Map,
}

impl Map for Difference<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.f.eval_into(x, out);
        let g = self.g.eval(x);
        for (o, v) in out.iter_mut().zip(g) {
            *o -= v;
        }
    }
    fn label(&self) -> String {
        format!("{}-{}", self.f.label(), self.g.label())
    }
}

/// Empirical constant in the Jacobian difference bound on `domain`. The
/// fractional norms are `(||u||_p^p + [u]_{s,p}^p)^{1/p}` estimated on a grid
/// with `grid` cells per axis.
pub fn bn_difference_ratio(
    f: &PairingSource,
    g: &PairingSource,
    psi: &dyn TestFunction,
    domain: &SupCube,
    grid: usize,
) -> Result<BnRatio> {
    let n = domain.dim();
    let s = (n as f64 - 1.0) / n as f64;
    let p = n as f64;
    let pf = f.pairing(psi)?;
    let pg = g.pairing(psi)?;
    let norm = |m: &dyn Map| -> Result<f64> {
        let params = SeminormParams::new(s, p, SeminormDomain::Cube(domain.clone()), Quadrature::Grid(grid))?;
        let semi = gagliardo_seminorm(m, &params)?.value;
        let lp = lp_norm(m, domain, p, grid)?;
        Ok((lp.powf(p) + semi).powf(1.0 / p))
    };
    let diff = Difference {
        f: f.map(),
        g: g.map(),
    };
    let nd = norm(&diff)?;
    let nf = norm(f.map())?;
    let ng = norm(g.map())?;
    let bound = nd * (nf.powf(p - 1.0) + ng.powf(p - 1.0)) * psi.gradient_bound();
    let d = (pf - pg).abs();
    Ok(BnRatio {
        pairing_f: pf,
        pairing_g: pg,
        pairing_difference: d,
        seminorm_product_bound: bound,
        ratio: if bound > 0.0 { d / bound } else if d == 0.0 { 0.0 } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMethod {
    RasterImage,
    LevelFormula,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub lower: f64,
    pub upper: f64,
    pub method: MeasureMethod,
}

impl MeasureEstimate {
    pub fn new(lower: f64, upper: f64, method: MeasureMethod) -> Result<Self> {
        if !(lower >= 0.0 && lower <= upper) {
            return param(format!("invalid measure interval [{lower}, {upper}]"));
        }
        Ok(Self { lower, upper, method })
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn relative_width(&self) -> f64 {
        if self.upper == 0.0 {
            0.0
        } else {
            (self.upper - self.lower) / self.upper
        }
    }
}

/// Rasterized image set with certified inner and outer cell sets.
#[derive(Debug, Clone)]
pub struct ImageRaster {
    pub target: RegularGrid,
    /// Cells that may meet `f(U)`.
    pub outer: Vec<bool>,
    /// Cells certified inside `f(U)`.
    pub inner: Vec<bool>,
    /// Cells that may meet `f(dU)`.
    pub boundary: Vec<bool>,
    pub estimate: MeasureEstimate,
}

impl ImageRaster {
    /// Heuristic upper bound for `|f(dU)|` from the boundary raster.
    pub fn boundary_measure(&self) -> f64 {
        let vol = self.target.spacing().powi(self.target.dim() as i32);
        self.boundary.iter().filter(|b| **b).count() as f64 * vol
    }
}

/// Axis box `f(cell)` is certified to lie in, from the node values and the
/// cell oscillation.
fn cell_image_box(f: &GridFunction, cell: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = f.grid();
    let n = grid.dim();
    let w = f.cell_oscillation(cell)?;
    let strides = grid.node_strides();
    let base = grid.cell_base_node(cell);
    let mut vmin = vec![f64::INFINITY; n];
    let mut vmax = vec![f64::NEG_INFINITY; n];
    for m in 0..(1usize << n) {
        let node = base
            + (0..n)
                .filter(|a| m & (1 << a) != 0)
                .map(|a| strides[a])
                .sum::<usize>();
        for (i, v) in f.value(node).iter().enumerate() {
            vmin[i] = vmin[i].min(*v);
            vmax[i] = vmax[i].max(*v);
        }
    }
    let lo = (0..n).map(|i| (vmax[i] - w).min(vmin[i])).collect();
    let hi = (0..n).map(|i| (vmin[i] + w).max(vmax[i])).collect();
    Ok((lo, hi))
}

fn mark_box(target: &RegularGrid, lo: &[f64], hi: &[f64], marks: &mut [bool]) {
    let n = target.dim();
    let mut ranges = Vec::with_capacity(n);
    for a in 0..n {
        // cell_range pads by one cell on the low side; trim to the exact hits.
        let Some((s, e)) = target.cell_range(a, lo[a], hi[a]) else {
            return;
        };
        let h = target.spacing();
        let start = target.cube().center()[a] - target.cube().half_side();
        let s = (s..=e).find(|&i| start + (i + 1) as f64 * h >= lo[a]).unwrap_or(e);
        let e = (s..=e).rev().find(|&i| start + i as f64 * h <= hi[a]).unwrap_or(s);
        ranges.push((s, e));
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        marks[target.cell_index(&idx)] = true;
        let mut a = 0;
        loop {
            if a == n {
                return;
            }
            if idx[a] < ranges[a].1 {
                idx[a] += 1;
                break;
            }
            idx[a] = ranges[a].0;
            a += 1;
        }
    }
}

/// Certified bounds on `|f(U)|` for a map sampled on a grid over `U`.
///
/// Upper: target cells meeting the certified box of some source cell.
/// Lower: components of the raster avoiding every boundary-cell box on which
/// the PL degree (certified against the boundary) is nonzero; such
/// components lie inside `f(U)`.
pub fn image_raster(f: &GridFunction, raster: usize) -> Result<ImageRaster> {
    if !f.has_certificate() {
        return Err(Error::MissingModulus);
    }
    let grid = f.grid();
    let n = grid.dim();
    let u = grid.cube().clone();
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.cell_count())
        .into_par_iter()
        .map(|c| cell_image_box(f, c))
        .collect::<Result<_>>()?;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for (a, b) in &boxes {
        for i in 0..n {
            lo[i] = lo[i].min(a[i]);
            hi[i] = hi[i].max(b[i]);
        }
    }
    let half = (0..n).map(|i| 0.5 * (hi[i] - lo[i])).fold(0.0, f64::max);
    let center: Vec<f64> = (0..n).map(|i| 0.5 * (lo[i] + hi[i])).collect();
    // One spare cell on each side keeps the unbounded component connected.
    let pad = 2.0 * half / raster as f64;
    let target = RegularGrid::new(SupCube::new(center, half.max(1e-12) + pad)?, raster + 2)?;
    let cells = target.cell_count();
    let mut outer = vec![false; cells];
    let mut boundary = vec![false; cells];
    let domain = Domain::Cube(u.clone());
    for (c, (a, b)) in boxes.iter().enumerate() {
        mark_box(&target, a, b, &mut outer);
        let (clo, chi) = grid.cell_bounds(c);
        if !domain.box_inside(&clo, &chi) {
            mark_box(&target, a, b, &mut boundary);
        }
    }
    // Flood fill the complement of the boundary raster.
    let engine = PlDegree::new(f)?;
    let prepared = engine.prepare(&domain)?;
    let mut label = vec![u32::MAX; cells];
    let mut inner = vec![false; cells];
    let mut next = 0u32;
    for start in 0..cells {
        if boundary[start] || label[start] != u32::MAX {
            continue;
        }
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        label[start] = next;
        while let Some(c) = queue.pop_front() {
            members.push(c);
            let multi = target.cell_multi(c);
            for a in 0..n {
                for delta in [-1i64, 1] {
                    let v = multi[a] as i64 + delta;
                    if v < 0 || v >= target.subdivisions() as i64 {
                        continue;
                    }
                    let mut m2 = multi.clone();
                    m2[a] = v as usize;
                    let c2 = target.cell_index(&m2);
                    if !boundary[c2] && label[c2] == u32::MAX {
                        label[c2] = next;
                        queue.push_back(c2);
                    }
                }
            }
        }
        next += 1;
        // Degree is constant on the component; try a few representatives.
        let mut nonzero = false;
        let picks = [0, members.len() / 2, members.len() - 1];
        for &k in &picks {
            let (a, b) = target.cell_bounds(members[k]);
            let y: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
            match engine.degree_prepared(&prepared, &y) {
                Ok(r) => {
                    nonzero = r.value != 0;
                    break;
                }
                Err(Error::RefineGrid { .. } | Error::Degenerate { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        if nonzero {
            for c in members {
                inner[c] = true;
            }
        }
    }
    let vol = target.spacing().powi(n as i32);
    let up = outer.iter().filter(|b| **b).count() as f64 * vol;
    let low = inner.iter().filter(|b| **b).count() as f64 * vol;
    Ok(ImageRaster {
        target,
        outer,
        inner,
        boundary,
        estimate: MeasureEstimate::new(low, up, MeasureMethod::RasterImage)?,
    })
}

/// Bounds on `|f(U)|`; `f` must carry a modulus or per-cell certificate.
pub fn image_measure(f: &GridFunction, raster: usize) -> Result<MeasureEstimate> {
    Ok(image_raster(f, raster)?.estimate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnVerdict {
    Holds,
    Fails,
    Inconclusive,
}

impl std::fmt::Display for CnVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CnVerdict::Holds => "CN_HOLDS",
            CnVerdict::Fails => "CN_FAILS",
            CnVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Settings for [`ciarlet_necas_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct CnSettings {
    /// Cutoff widths, strictly decreasing so the cutoffs increase to `chi_U`.
    pub cutoffs: Vec<f64>,
    pub mollifier: MollifierSettings,
    /// Source grid cells per axis on `U` for the image raster.
    pub source_grid: usize,
    /// Target raster cells per axis.
    pub raster: usize,
}

impl CnSettings {
    /// Cutoffs `4h, 2h, h` and mollifier scales `h/2, h/4, h/8`.
    pub fn with_base(h: f64, source_grid: usize, raster: usize) -> Self {
        Self {
            cutoffs: vec![4.0 * h, 2.0 * h, h],
            mollifier: MollifierSettings::halving(0.5 * h, 3, 4),
            source_grid,
            raster,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnReport {
    /// Extrapolated `J_f(U)`.
    pub jacobian_measure: f64,
    /// `(delta, J_f(psi_delta))` for each cutoff.
    pub bracketing: Vec<(f64, f64)>,
    pub pairings: Vec<JacobianPairing>,
    pub image: MeasureEstimate,
    /// Rasterized `|f(dU)|` bound, heuristic evidence for `|f(dU)| = 0`.
    pub boundary_image_measure: f64,
    pub verdict: CnVerdict,
}

/// Verdict rule: holds when `J` is inside the image interval inflated by 2%,
/// inconclusive within 10% or when the interval is wider than 25%, fails
/// otherwise.
pub fn cn_verdict(jacobian_measure: f64, image: &MeasureEstimate) -> CnVerdict {
    let j = jacobian_measure;
    if image.relative_width() > 0.25 {
        return CnVerdict::Inconclusive;
    }
    if j >= image.lower * 0.98 && j <= image.upper * 1.02 {
        CnVerdict::Holds
    } else if j >= image.lower * 0.90 && j <= image.upper * 1.10 {
        CnVerdict::Inconclusive
    } else {
        CnVerdict::Fails
    }
}

/// Compares `J_f(U)` with `|f(U)|` for `U` inside `domain`.
pub fn ciarlet_necas_check(
    f: &dyn Map,
    domain: &SupCube,
    u: &SupCube,
    settings: &CnSettings,
) -> Result<CnReport> {
    if !domain.contains_cube(u, 1e-12) {
        return param("U must lie inside the domain");
    }
    if settings.cutoffs.len() < 2 || settings.cutoffs.windows(2).any(|w| w[1] >= w[0]) {
        return param("cutoff widths must be strictly decreasing so the cutoffs increase");
    }
    let cutoffs: Vec<SmoothCutoff> = settings
        .cutoffs
        .iter()
        .map(|&d| SmoothCutoff::new(u.clone(), d))
        .collect::<Result<_>>()?;
    let seq = MollifiedSequence::new(f, domain.clone(), settings.mollifier.clone())?;
    let refs: Vec<&dyn TestFunction> = cutoffs.iter().map(|c| c as &dyn TestFunction).collect();
    let pairings = pair_many(&seq, &refs)?;
    let bracketing: Vec<(f64, f64)> = settings
        .cutoffs
        .iter()
        .zip(&pairings)
        .map(|(d, p)| (*d, p.limit))
        .collect();
    let vals: Vec<f64> = bracketing.iter().map(|b| b.1).collect();
    let last = *vals.last().unwrap();
    let jacobian_measure = match geometric_extrapolate(&vals) {
        Some(e) if (e - last).abs() <= 2.0 * (last - vals[vals.len() - 2]).abs() + 1e-15 => e,
        _ => last,
    };
    let gf = GridFunction::sample(f, RegularGrid::new(u.clone(), settings.source_grid)?)?;
    let raster = image_raster(&gf, settings.raster)?;
    let verdict = cn_verdict(jacobian_measure, &raster.estimate);
    Ok(CnReport {
        jacobian_measure,
        bracketing,
        pairings,
        image: raster.estimate,
        boundary_image_measure: raster.boundary_measure(),
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovCheck {
    pub lhs: JacobianPairing,
    pub rhs: f64,
    pub difference: f64,
    pub relative_difference: f64,
    /// `Inconclusive` when `supp psi` is not certified away from `f(dOmega)`.
    pub status: CertStatus,
}

/// `J_f(psi o f)` against `int deg(f, Omega, y) psi(y) dy`.
pub fn change_of_variables_check(
    f: &dyn Map,
    omega: &SupCube,
    psi: &dyn TestFunction,
    mollifier: &MollifierSettings,
    degree_grid: usize,
    image_nodes: usize,
) -> Result<CovCheck> {
    let gf = GridFunction::sample(f, RegularGrid::new(omega.clone(), degree_grid)?)?;
    // Certify supp psi against the boundary image.
    let (slo, shi) = psi.support();
    let grid = gf.grid();
    let domain = Domain::Cube(omega.clone());
    let mut separated = true;
    for c in 0..grid.cell_count() {
        let (lo, hi) = grid.cell_bounds(c);
        if domain.box_inside(&lo, &hi) {
            continue;
        }
        let (a, b) = cell_image_box(&gf, c)?;
        if (0..a.len()).all(|i| a[i] <= shi[i] && b[i] >= slo[i]) {
            separated = false;
            break;
        }
    }
    let seq = MollifiedSequence::new(f, omega.clone(), mollifier.clone())?;
    let lhs = composed_pairing(&seq, psi)?;
    if !separated {
        return Ok(CovCheck {
            lhs,
            rhs: f64::NAN,
            difference: f64::NAN,
            relative_difference: f64::NAN,
            status: CertStatus::Inconclusive,
        });
    }
    let (rhs, _) = crate::degree::degree_weighted_integral(&gf, &domain, psi, image_nodes)?;
    let difference = lhs.limit - rhs;
    Ok(CovCheck {
        relative_difference: difference.abs() / rhs.abs().max(1e-300),
        lhs,
        rhs,
        difference,
        status: CertStatus::Holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreimageCount {
    pub components: usize,
    /// Smallest admissible `epsilon`: the largest cell oscillation.
    pub minimum_epsilon: f64,
}

/// Connected components (face adjacency of grid nodes) of
/// `{x : ||f(x) - y||_inf < epsilon}`.
pub fn preimage_count(f: &GridFunction, y: &[f64], epsilon: f64) -> Result<PreimageCount> {
    let minimum = f.max_oscillation()?;
    if !(epsilon > minimum) {
        return Err(Error::EpsilonTooSmall {
            epsilon,
            minimum,
        });
    }
    let grid = f.grid();
    let n = grid.dim();
    let count = grid.node_count();
    let inside: Vec<bool> = (0..count)
        .into_par_iter()
        .map(|i| crate::geometry::sup_dist(f.value(i), y) < epsilon)
        .collect();
    let strides = grid.node_strides();
    let m = grid.nodes_per_axis();
    let mut seen = vec![false; count];
    let mut components = 0;
    for start in 0..count {
        if !inside[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let multi = grid.node_multi(v);
            for a in 0..n {
                if multi[a] > 0 {
                    let w = v - strides[a];
                    if inside[w] && !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
                if multi[a] + 1 < m {
                    let w = v + strides[a];
                    if inside[w] && !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    Ok(PreimageCount {
        components,
        minimum_epsilon: minimum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub level: usize,
    pub verdict: CnVerdict,
    pub jacobian_measure: f64,
    pub image: MeasureEstimate,
    /// `|f_k(U)| = int_U J_{f_k}` by per-region quadrature.
    pub image_measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
    /// Successive differences of `|f_k(U)|`.
    pub gaps: Vec<f64>,
    /// Successive gaps shrink by the required factor.
    pub converging: CertStatus,
}

/// Ciarlet–Nečas verdicts and image measures along the construction levels.
pub fn cn_stability_experiment(
    spec: &CantorMapSpec,
    levels: &[usize],
    u: &SupCube,
    settings: &CnSettings,
    contraction: f64,
) -> Result<StabilityTable> {
    if spec.variant != Variant::LusinN {
        return param("the stability experiment needs the Lusin (N) variant");
    }
    if levels.len() < 2 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return param("levels must be increasing, at least two");
    }
    let q0 = SupCube::unit(spec.n);
    let mut rows = Vec::new();
    for &k in levels {
        let f = PiecewiseRadialMap::with_mode(spec.with_level(k), EvalMode::LevelK)?;
        let report = ciarlet_necas_check(&f, &q0, u, settings)?;
        let exact = f.jacobian_integral_over_box(&u.lower(), &u.upper())?;
        rows.push(StabilityRow {
            level: k,
            verdict: report.verdict,
            jacobian_measure: report.jacobian_measure,
            image: report.image,
            image_measure: exact,
        });
    }
    let gaps: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[1].image_measure - w[0].image_measure).abs())
        .collect();
    let converging = if rows.iter().any(|r| r.verdict == CnVerdict::Inconclusive) {
        CertStatus::Inconclusive
    } else if gaps
        .windows(2)
        .all(|w| w[1] <= w[0] / contraction || w[0] < 1e-15)
    {
        CertStatus::Holds
    } else {
        CertStatus::Fails
    };
    Ok(StabilityTable {
        rows,
        gaps,
        converging,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionReport {
    /// Points where the limit-map derivative is defined.
    pub defined: usize,
    /// Among those, points with positive Jacobian.
    pub positive: usize,
    /// PL degrees at the sampled targets.
    pub degrees: Vec<i64>,
    /// Targets whose degree query could not be certified.
    pub uncertified: usize,
}

impl ReflectionReport {
    pub fn positive_fraction(&self) -> f64 {
        self.positive as f64 / self.defined.max(1) as f64
    }
}

/// Sign statistics of the reflected orientation-reversing map: pointwise
/// Jacobian of the limit map at random points and the degree of the
/// level-`K` map at random interior targets.
pub fn reflection_diagnostic(
    spec: &CantorMapSpec,
    samples: usize,
    targets: usize,
    grid: usize,
    seed: u64,
) -> Result<ReflectionReport> {
    let n = spec.n;
    let limit = PiecewiseRadialMap::with_mode(spec.clone(), EvalMode::Limit { tolerance: 1e-5 })?.reflected();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let signs: Vec<Option<bool>> = points
        .par_iter()
        .map(|x| limit.analytic_differential(x).ok().map(|d| d.jacobian > 0.0))
        .collect();
    let defined = signs.iter().filter(|s| s.is_some()).count();
    let positive = signs.iter().filter(|s| **s == Some(true)).count();
    let level = PiecewiseRadialMap::new(spec.clone())?.reflected();
    let gf = GridFunction::sample(&level, RegularGrid::new(SupCube::unit(n), grid)?)?;
    let engine = PlDegree::new(&gf)?;
    let prepared = engine.prepare(&Domain::Cube(SupCube::unit(n)))?;
    let mut degrees = Vec::new();
    let mut uncertified = 0;
    for _ in 0..targets {
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.9..0.9)).collect();
        match engine.degree_prepared(&prepared, &y) {
            Ok(r) => degrees.push(r.value),
            Err(Error::RefineGrid { .. } | Error::Degenerate { .. }) => uncertified += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(ReflectionReport {
        defined,
        positive,
        degrees,
        uncertified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Affine, ComplexPower};
    use crate::testfn::PolyBump;

    #[test]
    fn kernel_is_normalized() {
        let rule = crate::quadrature::gauss_legendre(10);
        let v = crate::quadrature::integrate_gl(kernel, -1.0, 1.0, &rule);
        assert!((v - 1.0).abs() < 1e-14);
        let h = 1e-6;
        let fd = (kernel(0.3 + h) - kernel(0.3 - h)) / (2.0 * h);
        assert!((fd - kernel_derivative(0.3)).abs() < 1e-8);
    }

    #[test]
    fn lattice_weights_reproduce_linear_maps() {
        let (w, d) = lattice_weights(5, 0.1);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let h = 0.02;
        let slope: f64 = d.iter().enumerate().map(|(j, dj)| dj * -((j as f64 - 5.0) * h)).sum();
        assert!((slope - 1.0).abs() < 1e-13);
    }

    #[test]
    fn affine_map_has_exact_jacobian_field() {
        let f = Affine::new(vec![2.0, 1.0, -0.5, 1.5], vec![0.3, 0.0], "a").unwrap();
        let seq = MollifiedSequence::new(&f, SupCube::unit(2), MollifierSettings::halving(0.2, 2, 4)).unwrap();
        let field = seq.field(0.1, &[-0.5, -0.5], &[0.5, 0.5]).unwrap();
        for i in [0, 17, field.node_count() - 1] {
            assert!((field.jacobian(i) - 3.5).abs() < 1e-12);
            let x = field.node(i);
            let fx = f.eval(&x);
            assert!(crate::geometry::sup_dist(&fx, field.value(i)) < 1e-12);
        }
    }

    #[test]
    fn smooth_map_pairing_matches_classical_integral() {
        let f = ComplexPower::new(2).unwrap();
        let phi = PolyBump::new(vec![0.1, -0.2], 0.6, 3).unwrap();
        let seq = MollifiedSequence::new(&f, SupCube::unit(2), MollifierSettings::halving(0.1, 3, 6)).unwrap();
        let p = distributional_jacobian(&seq, &phi).unwrap();
        // classical: J = 4|z|^2
        let rule = crate::quadrature::gauss_legendre(12);
        let exact = crate::quadrature::integrate_gl(
            |x| crate::quadrature::integrate_gl(|y| 4.0 * (x * x + y * y) * phi.value(&[x, y]), -0.8, 0.4, &rule),
            -0.5,
            0.7,
            &rule,
        );
        for (_, v) in &p.per_scale {
            assert!((v - exact).abs() < 1e-3 * exact.abs(), "{v} vs {exact}");
        }
        assert!((p.limit - exact).abs() < 1e-4 * exact.abs());
    }

    #[test]
    fn identity_image_measure_brackets_volume() {
        let f = Affine::identity(2);
        let gf = GridFunction::sample(&f, RegularGrid::new(SupCube::new(vec![0.0, 0.0], 0.5).unwrap(), 128).unwrap()).unwrap();
        let m = image_measure(&gf, 256).unwrap();
        assert!(m.lower <= 1.0 && 1.0 <= m.upper, "{m:?}");
        assert!(m.relative_width() < 0.08, "{m:?}");
        let c = Affine::constant(vec![0.2, 0.1]);
        let gc = GridFunction::sample(&c, RegularGrid::new(SupCube::unit(2), 16).unwrap()).unwrap();
        let mc = image_measure(&gc, 64).unwrap();
        assert!(mc.upper < 1e-6 && mc.lower == 0.0);
    }

    #[test]
    fn verdict_rule() {
        let m = MeasureEstimate::new(3.9, 4.1, MeasureMethod::RasterImage).unwrap();
        assert_eq!(cn_verdict(4.0, &m), CnVerdict::Holds);
        assert_eq!(cn_verdict(4.3, &m), CnVerdict::Inconclusive);
        assert_eq!(cn_verdict(8.0, &m), CnVerdict::Fails);
        let wide = MeasureEstimate::new(1.0, 4.0, MeasureMethod::RasterImage).unwrap();
        assert_eq!(cn_verdict(2.0, &wide), CnVerdict::Inconclusive);
        assert!(MeasureEstimate::new(2.0, 1.0, MeasureMethod::Quadrature).is_err());
    }

    #[test]
    fn preimages_of_square_map() {
        let f = ComplexPower::new(2).unwrap();
        let gf = GridFunction::sample(&f, RegularGrid::new(SupCube::unit(2), 128).unwrap()).unwrap();
        let c = preimage_count(&gf, &[0.25, 0.0], 0.1).unwrap();
        assert_eq!(c.components, 2);
        let id = GridFunction::sample(&Affine::identity(2), RegularGrid::new(SupCube::unit(2), 64).unwrap()).unwrap();
        assert_eq!(preimage_count(&id, &[0.3, -0.2], 0.05).unwrap().components, 1);
        assert!(matches!(
            preimage_count(&gf, &[0.25, 0.0], 1e-6),
            Err(Error::EpsilonTooSmall { .. })
        ));
    }

    #[test]
    fn non_monotone_cutoffs_are_rejected() {
        let f = Affine::identity(2);
        let mut s = CnSettings::with_base(0.05, 32, 64);
        s.cutoffs = vec![0.05, 0.1];
        assert!(ciarlet_necas_check(&f, &SupCube::unit(2), &SupCube::unit(2), &s).is_err());
    }
}
