//! Topological degree of sampled maps via piecewise-linear interpolation on
//! the Kuhn triangulation, with certified boundary gaps.
//!
//! A query `deg(f, Omega, y)` is answered by the PL interpolant `g` of the
//! grid samples. Every grid cell carries an oscillation bound `w_c` with
//! `||f(x) - f(x')|| <= w_c` on the cell, hence `||f - g|| <= w_c` there. If
//! `||f - g|| < dist(y, f(dOmega))` on the boundary cells, the straight-line
//! homotopy between `f` and `g` avoids `y` on `dOmega` and both degrees agree.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::geometry::{kuhn_patterns, solve_linear, Hyperplane, RegularGrid, SupCube};
use crate::maps::Map;
use crate::testfn::TestFunction;

/// Certified Hölder modulus `||f(x) - f(y)||_inf <= C ||x - y||_inf^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    pub alpha: f64,
    pub constant: f64,
}

/// Tri-state outcome of a hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStatus {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for CertStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertStatus::Holds => "HOLDS",
            CertStatus::Fails => "FAILS",
            CertStatus::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// A map sampled at the nodes of a regular grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: RegularGrid,
    values: Vec<f64>,
    modulus: Option<Modulus>,
    cell_osc: Option<Vec<f64>>,
    label: String,
}

impl GridFunction {
    /// Samples `f` at every node and attaches per-cell oscillation bounds
    /// when `f` provides enclosures or local Lipschitz constants.
    pub fn sample(f: &dyn Map, grid: RegularGrid) -> Result<Self> {
        let n = grid.dim();
        if f.dim() != n {
            return param("map and grid dimensions differ");
        }
        let mut values = vec![0.0; grid.node_count() * n];
        values
            .par_chunks_mut(n * 1024)
            .enumerate()
            .for_each(|(chunk, out)| {
                for (k, v) in out.chunks_mut(n).enumerate() {
                    let x = grid.node(chunk * 1024 + k);
                    f.eval_into(&x, v);
                }
            });
        if values.iter().any(|v| !v.is_finite()) {
            return param("sampled map values must be finite");
        }
        let osc: Option<Vec<f64>> = (0..grid.cell_count())
            .into_par_iter()
            .map(|c| {
                let (lo, hi) = grid.cell_bounds(c);
                f.oscillation(&lo, &hi)
            })
            .collect();
        Ok(Self {
            grid,
            values,
            modulus: None,
            cell_osc: osc,
            label: f.label(),
        })
    }

    pub fn from_values(
        grid: RegularGrid,
        values: Vec<f64>,
        modulus: Option<Modulus>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if values.len() != grid.node_count() * grid.dim() {
            return param("value array does not match the grid");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return param("grid values must be finite");
        }
        if let Some(m) = modulus {
            if !(m.alpha > 0.0 && m.alpha <= 1.0 && m.constant >= 0.0) {
                return param("modulus needs alpha in (0, 1] and C >= 0");
            }
        }
        Ok(Self {
            grid,
            values,
            modulus,
            cell_osc: None,
            label: label.into(),
        })
    }

    pub fn with_modulus(mut self, modulus: Modulus) -> Self {
        self.modulus = Some(modulus);
        self
    }

    pub fn grid(&self) -> &RegularGrid {
        &self.grid
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn modulus(&self) -> Option<Modulus> {
        self.modulus
    }

    pub fn has_certificate(&self) -> bool {
        self.cell_osc.is_some() || self.modulus.is_some()
    }

    pub fn value(&self, node: usize) -> &[f64] {
        let n = self.grid.dim();
        &self.values[node * n..(node + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Bound on `sup ||f(x) - f(x')||_inf` over the cell.
    pub fn cell_oscillation(&self, cell: usize) -> Result<f64> {
        let from_cells = self.cell_osc.as_ref().map(|o| o[cell]);
        let from_modulus = self
            .modulus
            .map(|m| m.constant * self.grid.spacing().powf(m.alpha));
        match (from_cells, from_modulus) {
            (Some(a), Some(b)) => Ok(a.min(b)),
            (Some(a), None) | (None, Some(a)) => Ok(a),
            (None, None) => Err(Error::MissingModulus),
        }
    }

    /// Largest cell oscillation.
    pub fn max_oscillation(&self) -> Result<f64> {
        (0..self.grid.cell_count())
            .map(|c| self.cell_oscillation(c))
            .try_fold(0.0_f64, |m, v| v.map(|v| m.max(v)))
    }

    /// PL interpolant on the Kuhn triangulation.
    pub fn interpolate(&self, x: &[f64]) -> Vec<f64> {
        let n = self.grid.dim();
        let (cell, local) = self.grid.locate(x);
        let base = self.grid.node_index(&cell);
        let strides = self.grid.node_strides();
        // Sort local coordinates descending; walk the corresponding simplex.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| local[b].total_cmp(&local[a]));
        let mut out = self.value(base).to_vec();
        let mut node = base;
        let mut prev = self.value(base).to_vec();
        for &axis in &order {
            node += strides[axis];
            let v = self.value(node);
            let w = local[axis];
            for i in 0..n {
                out[i] += w * (v[i] - prev[i]);
            }
            prev = v.to_vec();
        }
        out
    }

    /// Spot-checks the Hölder modulus on random node pairs.
    pub fn spot_check_modulus(&self, pairs: usize, seed: u64) -> Result<CertStatus> {
        let m = self.modulus.ok_or(Error::MissingModulus)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = self.grid.node_count();
        for _ in 0..pairs {
            let (a, b) = (rng.gen_range(0..nodes), rng.gen_range(0..nodes));
            if a == b {
                continue;
            }
            let d = crate::geometry::sup_dist(&self.grid.node(a), &self.grid.node(b));
            let df = crate::geometry::sup_dist(self.value(a), self.value(b));
            if df > m.constant * d.powf(m.alpha) * (1.0 + 1e-12) {
                return Ok(CertStatus::Fails);
            }
        }
        Ok(CertStatus::Holds)
    }

    /// Axis box containing all sampled values inflated by the oscillation.
    pub fn image_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for v in self.values.chunks(n) {
            for i in 0..n {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        let pad = self.max_oscillation().unwrap_or(0.0);
        (
            lo.iter().map(|v| v - pad).collect(),
            hi.iter().map(|v| v + pad).collect(),
        )
    }
}

/// The PL interpolant as a continuous map on the grid cube (clamped outside).
impl Map for GridFunction {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.interpolate(x));
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn oscillation(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        let n = self.grid.dim();
        let mut ranges = Vec::with_capacity(n);
        for i in 0..n {
            ranges.push(self.grid.cell_range(i, lo[i], hi[i])?);
        }
        // Values of the interpolant on the box lie in the hull of the node
        // values of the cells it meets.
        let strides = self.grid.node_strides();
        let mut vlo = vec![f64::INFINITY; n];
        let mut vhi = vec![f64::NEG_INFINITY; n];
        for_each_multi(&ranges, |multi| {
            let base = self.grid.node_index(multi);
            for m in 0..(1usize << n) {
                let node = base
                    + (0..n)
                        .filter(|a| m & (1 << a) != 0)
                        .map(|a| strides[a])
                        .sum::<usize>();
                for (i, v) in self.value(node).iter().enumerate() {
                    vlo[i] = vlo[i].min(*v);
                    vhi[i] = vhi[i].max(*v);
                }
            }
        });
        Some((0..n).map(|i| vhi[i] - vlo[i]).fold(0.0, f64::max))
    }
}

/// Degree domain: a cube, the part of a cube on one side of a hyperplane,
/// or a union of cubes.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Cube(SupCube),
    HalfCube {
        cube: SupCube,
        plane: Hyperplane,
        /// Keep `u . x > t` when true, `u . x < t` otherwise.
        positive: bool,
    },
    Union(Vec<SupCube>),
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Cube(c) => c.contains(x),
            Domain::HalfCube {
                cube,
                plane,
                positive,
            } => {
                let s = plane.signed_distance(x);
                cube.contains(x) && if *positive { s > 0.0 } else { s < 0.0 }
            }
            Domain::Union(cs) => cs.iter().any(|c| c.contains(x)),
        }
    }

    /// Whether the closed box meets the closure of the domain.
    pub fn box_meets_closure(&self, lo: &[f64], hi: &[f64]) -> bool {
        let meets_cube = |c: &SupCube| {
            (0..lo.len()).all(|i| {
                lo[i] <= c.center()[i] + c.half_side() && hi[i] >= c.center()[i] - c.half_side()
            })
        };
        match self {
            Domain::Cube(c) => meets_cube(c),
            Domain::HalfCube {
                cube,
                plane,
                positive,
            } => {
                if !meets_cube(cube) {
                    return false;
                }
                let (l, h) = clip_box(lo, hi, cube);
                let (a, b) = plane.box_range(&l, &h);
                if *positive {
                    b >= 0.0
                } else {
                    a <= 0.0
                }
            }
            Domain::Union(cs) => cs.iter().any(meets_cube),
        }
    }

    /// Whether the closed box lies inside the open domain (conservative for
    /// unions: only single-cube containment is recognised).
    pub fn box_inside(&self, lo: &[f64], hi: &[f64]) -> bool {
        let inside_cube = |c: &SupCube| {
            (0..lo.len()).all(|i| {
                lo[i] > c.center()[i] - c.half_side() && hi[i] < c.center()[i] + c.half_side()
            })
        };
        match self {
            Domain::Cube(c) => inside_cube(c),
            Domain::HalfCube {
                cube,
                plane,
                positive,
            } => {
                if !inside_cube(cube) {
                    return false;
                }
                let (a, b) = plane.box_range(lo, hi);
                if *positive {
                    a > 0.0
                } else {
                    b < 0.0
                }
            }
            Domain::Union(cs) => cs.iter().any(inside_cube),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Cube(c) | Domain::HalfCube { cube: c, .. } => (c.lower(), c.upper()),
            Domain::Union(cs) => {
                let n = cs[0].dim();
                let mut lo = vec![f64::INFINITY; n];
                let mut hi = vec![f64::NEG_INFINITY; n];
                for c in cs {
                    for i in 0..n {
                        lo[i] = lo[i].min(c.center()[i] - c.half_side());
                        hi[i] = hi[i].max(c.center()[i] + c.half_side());
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::Cube(c) => c.describe(),
            Domain::HalfCube {
                cube,
                plane,
                positive,
            } => format!(
                "{}∩{{u.x{}{}}}",
                cube.describe(),
                if *positive { ">" } else { "<" },
                plane.offset()
            ),
            Domain::Union(cs) => cs
                .iter()
                .map(|c| c.describe())
                .collect::<Vec<_>>()
                .join("∪"),
        }
    }
}

fn clip_box(lo: &[f64], hi: &[f64], c: &SupCube) -> (Vec<f64>, Vec<f64>) {
    let l = (0..lo.len())
        .map(|i| lo[i].max(c.center()[i] - c.half_side()))
        .collect();
    let h = (0..lo.len())
        .map(|i| hi[i].min(c.center()[i] + c.half_side()))
        .collect();
    (l, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeReport {
    pub value: i64,
    pub target: Vec<f64>,
    pub domain: String,
    /// Certified lower bound for `dist(y, f(dOmega))`.
    pub boundary_gap: f64,
    /// Largest interpolation error bound on the boundary cells.
    pub interpolation_error: f64,
    pub resolution: usize,
    pub perturbation_retries: usize,
}

/// Boundary cells of a domain with their oscillation bounds.
#[derive(Debug, Clone)]
pub struct PreparedDomain {
    pub domain: Domain,
    cells: Vec<(usize, f64)>,
    max_osc: f64,
}

impl PreparedDomain {
    pub fn boundary_cell_count(&self) -> usize {
        self.cells.len()
    }
}

/// Precomputed PL image of every Kuhn simplex with a bucket index.
pub struct PlDegree<'a> {
    f: &'a GridFunction,
    simplex_nodes: Vec<u32>,
    parity: Vec<i8>,
    bucket_lo: Vec<f64>,
    bucket_size: Vec<f64>,
    buckets_per_axis: usize,
    bucket_offsets: Vec<u32>,
    bucket_items: Vec<u32>,
    eps: f64,
}

const MAX_RETRIES: usize = 8;
const BARY_TOL: f64 = 1e-12;

impl<'a> PlDegree<'a> {
    pub fn new(f: &'a GridFunction) -> Result<Self> {
        let grid = f.grid();
        let n = grid.dim();
        if n > 4 {
            return param("PL degree supports dimensions up to 4");
        }
        let patterns = kuhn_patterns(n);
        let strides = grid.node_strides();
        let offsets: Vec<Vec<usize>> = patterns.iter().map(|p| p.node_offsets(&strides)).collect();
        let cells = grid.cell_count();
        let per = patterns.len();
        let total = cells * per;
        if total >= u32::MAX as usize {
            return param("grid too large for the simplex index");
        }
        let mut simplex_nodes = Vec::with_capacity(total * (n + 1));
        let mut parity = Vec::with_capacity(total);
        for c in 0..cells {
            let base = grid.cell_base_node(c);
            for (p, off) in patterns.iter().zip(&offsets) {
                for o in off {
                    simplex_nodes.push((base + o) as u32);
                }
                parity.push(p.parity);
            }
        }
        let (lo, hi) = {
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            for v in f.values().chunks(n) {
                for i in 0..n {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
            (lo, hi)
        };
        let buckets_per_axis = grid.subdivisions().clamp(1, 1024);
        let bucket_size: Vec<f64> = (0..n)
            .map(|i| ((hi[i] - lo[i]) / buckets_per_axis as f64).max(1e-300))
            .collect();
        let bucket_count = buckets_per_axis.pow(n as u32);
        let bucket_range = |s: usize| -> Vec<(usize, usize)> {
            let nodes = &simplex_nodes[s * (n + 1)..(s + 1) * (n + 1)];
            (0..n)
                .map(|i| {
                    let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
                    for &nd in nodes {
                        let v = f.value(nd as usize)[i];
                        a = a.min(v);
                        b = b.max(v);
                    }
                    let ia = ((a - lo[i]) / bucket_size[i]).floor().max(0.0) as usize;
                    let ib = ((b - lo[i]) / bucket_size[i]).floor().max(0.0) as usize;
                    (ia.min(buckets_per_axis - 1), ib.min(buckets_per_axis - 1))
                })
                .collect()
        };
        let for_each_bucket = |ranges: &[(usize, usize)], mut visit: Box<dyn FnMut(usize) + '_>| {
            let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
            loop {
                let flat = idx
                    .iter()
                    .rev()
                    .fold(0, |acc, &i| acc * buckets_per_axis + i);
                visit(flat);
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
        };
        let ranges: Vec<Vec<(usize, usize)>> =
            (0..total).into_par_iter().map(bucket_range).collect();
        let mut counts = vec![0u32; bucket_count + 1];
        for r in &ranges {
            for_each_bucket(r, Box::new(|b| counts[b + 1] += 1));
        }
        for b in 0..bucket_count {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; counts[bucket_count] as usize];
        for (s, r) in ranges.iter().enumerate() {
            for_each_bucket(
                r,
                Box::new(|b| {
                    items[fill[b] as usize] = s as u32;
                    fill[b] += 1;
                }),
            );
        }
        let scale = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max).max(1e-12);
        Ok(Self {
            f,
            simplex_nodes,
            parity,
            bucket_lo: lo,
            bucket_size,
            buckets_per_axis,
            bucket_offsets: counts,
            bucket_items: items,
            eps: 1e-9 * scale / grid.subdivisions() as f64,
        })
    }

    pub fn grid_function(&self) -> &GridFunction {
        self.f
    }

    /// Collects boundary cells of `domain` with their oscillation bounds.
    pub fn prepare(&self, domain: &Domain) -> Result<PreparedDomain> {
        let grid = self.f.grid();
        let n = grid.dim();
        let (dlo, dhi) = domain.bounding_box();
        let mut ranges = Vec::with_capacity(n);
        for i in 0..n {
            match grid.cell_range(i, dlo[i], dhi[i]) {
                Some(r) => ranges.push(r),
                None => return param("domain does not meet the grid"),
            }
        }
        // Closure of the domain must lie inside the closed grid cube.
        let gc = grid.cube();
        for i in 0..n {
            if dlo[i] < gc.center()[i] - gc.half_side() - 1e-12
                || dhi[i] > gc.center()[i] + gc.half_side() + 1e-12
            {
                return param(format!(
                    "domain {} is not inside the grid cube {}",
                    domain.describe(),
                    gc.describe()
                ));
            }
        }
        let mut cells = Vec::new();
        let mut max_osc = 0.0_f64;
        for_each_multi(&ranges, |multi| {
            let c = grid.cell_index(multi);
            let (lo, hi) = grid.cell_bounds(c);
            if domain.box_meets_closure(&lo, &hi) && !domain.box_inside(&lo, &hi) {
                cells.push(c);
            }
        });
        let mut out = Vec::with_capacity(cells.len());
        for c in cells {
            let w = self.f.cell_oscillation(c)?;
            max_osc = max_osc.max(w);
            out.push((c, w));
        }
        Ok(PreparedDomain {
            domain: domain.clone(),
            cells: out,
            max_osc,
        })
    }

    /// Certified gap and the PL degree on a prepared domain.
    pub fn degree_prepared(&self, prepared: &PreparedDomain, y: &[f64]) -> Result<DegreeReport> {
        let grid = self.f.grid();
        let n = grid.dim();
        if y.len() != n {
            return param("target dimension mismatch");
        }
        let (gap, margin) = gaps_over(self.f, &prepared.cells, y);
        let err = prepared.max_osc;
        if !(margin > 0.0) {
            let alpha = self.f.modulus().map(|m| m.alpha).unwrap_or(1.0);
            let factor = if gap > 0.0 {
                (2.0 * err / gap).powf(1.0 / alpha).ceil().max(2.0)
            } else {
                2.0
            };
            return Err(Error::RefineGrid {
                gap,
                interpolation_error: err,
                suggested_subdivisions: (grid.subdivisions() as f64 * factor) as usize,
            });
        }
        let (value, retries) = self.signed_count(&prepared.domain, y)?;
        Ok(DegreeReport {
            value,
            target: y.to_vec(),
            domain: prepared.domain.describe(),
            boundary_gap: gap,
            interpolation_error: err,
            resolution: grid.subdivisions(),
            perturbation_retries: retries,
        })
    }

    pub fn degree(&self, domain: &Domain, y: &[f64]) -> Result<DegreeReport> {
        let prepared = self.prepare(domain)?;
        self.degree_prepared(&prepared, y)
    }

    /// Preimages of `y` under the PL interpolant with the orientation sign.
    pub fn pl_preimages(&self, y: &[f64]) -> Result<Vec<(Vec<f64>, i8)>> {
        let (_, hits) = self.hits_with_retry(y)?;
        Ok(hits)
    }

    fn signed_count(&self, domain: &Domain, y: &[f64]) -> Result<(i64, usize)> {
        let (retries, hits) = self.hits_with_retry(y)?;
        let value = hits
            .iter()
            .filter(|(x, _)| domain.contains(x))
            .map(|(_, s)| *s as i64)
            .sum();
        Ok((value, retries))
    }

    fn hits_with_retry(&self, y: &[f64]) -> Result<(usize, Vec<(Vec<f64>, i8)>)> {
        let n = y.len();
        const C: f64 = 0.754_877_666_246_692_7;
        for retry in 0..=MAX_RETRIES {
            let yy: Vec<f64> = if retry == 0 {
                y.to_vec()
            } else {
                let e = self.eps * 2f64.powi(retry as i32 - 1);
                (0..n).map(|i| y[i] + e * C.powi(i as i32 + 1)).collect()
            };
            if let Some(hits) = self.hits(&yy) {
                return Ok((retry, hits));
            }
        }
        Err(Error::Degenerate {
            retries: MAX_RETRIES,
        })
    }

    /// Simplices whose image contains `y`; `None` on a facet tie.
    fn hits(&self, y: &[f64]) -> Option<Vec<(Vec<f64>, i8)>> {
        let n = y.len();
        let mut bucket = 0usize;
        for i in (0..n).rev() {
            let b = ((y[i] - self.bucket_lo[i]) / self.bucket_size[i]).floor();
            if b < 0.0 || b >= self.buckets_per_axis as f64 + 1.0 {
                return Some(Vec::new());
            }
            let b = (b as usize).min(self.buckets_per_axis - 1);
            bucket = bucket * self.buckets_per_axis + b;
        }
        let items = &self.bucket_items
            [self.bucket_offsets[bucket] as usize..self.bucket_offsets[bucket + 1] as usize];
        let grid = self.f.grid();
        let mut out = Vec::new();
        for &s in items {
            let s = s as usize;
            let nodes = &self.simplex_nodes[s * (n + 1)..(s + 1) * (n + 1)];
            let Some((lam, det)) = barycentric(self.f, nodes, y) else {
                continue;
            };
            let min = lam.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -BARY_TOL {
                continue;
            }
            if min <= BARY_TOL {
                return None;
            }
            let mut x = vec![0.0; n];
            for (l, &nd) in lam.iter().zip(nodes) {
                let p = grid.node(nd as usize);
                for i in 0..n {
                    x[i] += l * p[i];
                }
            }
            out.push((x, (det.signum() as i8) * self.parity[s]));
        }
        Some(out)
    }
}

/// Barycentric coordinates of `y` in the image simplex and its orientation
/// determinant; `None` for a degenerate image.
fn barycentric(f: &GridFunction, nodes: &[u32], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    let p0 = f.value(nodes[0] as usize);
    if n == 2 {
        let p1 = f.value(nodes[1] as usize);
        let p2 = f.value(nodes[2] as usize);
        let orient = |a: &[f64], b: &[f64], c: &[f64]| {
            (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        };
        let det = orient(p0, p1, p2);
        if det == 0.0 {
            return None;
        }
        let l0 = orient(y, p1, p2) / det;
        let l1 = orient(p0, y, p2) / det;
        let l2 = orient(p0, p1, y) / det;
        return Some((vec![l0, l1, l2], det));
    }
    let m: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            (1..=n)
                .map(|j| f.value(nodes[j] as usize)[r] - p0[r])
                .collect()
        })
        .collect();
    let det = crate::geometry::determinant(m.clone());
    if det == 0.0 {
        return None;
    }
    let b: Vec<f64> = (0..n).map(|r| y[r] - p0[r]).collect();
    let rest = solve_linear(m, b)?;
    let l0 = 1.0 - rest.iter().sum::<f64>();
    let mut lam = vec![l0];
    lam.extend(rest);
    Some((lam, det))
}

fn for_each_multi(ranges: &[(usize, usize)], mut visit: impl FnMut(&[usize])) {
    let n = ranges.len();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        visit(&idx);
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

/// One-off degree query.
pub fn degree(f: &GridFunction, domain: &Domain, y: &[f64]) -> Result<DegreeReport> {
    PlDegree::new(f)?.degree(domain, y)
}

/// Sup distance from `y` to the box `[lo_i, hi_i]` (zero inside).
fn box_distance(y: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| (lo[i] - y[i]).max(y[i] - hi[i]).max(0.0))
        .fold(0.0, f64::max)
}

/// For each cell with oscillation `w`, `f(cell)` lies in the box
/// `[max_v f(v) - w, min_v f(v) + w]` while both `f` and its PL interpolant
/// (and every convex combination) lie in `[min_v f(v) - w, max_v f(v) + w]`.
/// Returns the minimum over cells of the distances from `y` to these two
/// boxes: a lower bound for `dist(y, f(S))` and the homotopy margin.
fn gaps_over(f: &GridFunction, cells: &[(usize, f64)], y: &[f64]) -> (f64, f64) {
    let grid = f.grid();
    let strides = grid.node_strides();
    let n = grid.dim();
    let mut gap = f64::INFINITY;
    let mut margin = f64::INFINITY;
    let mut vmin = vec![0.0; n];
    let mut vmax = vec![0.0; n];
    for &(c, w) in cells {
        let base = grid.cell_base_node(c);
        vmin.fill(f64::INFINITY);
        vmax.fill(f64::NEG_INFINITY);
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
        let tight_lo: Vec<f64> = vmax.iter().map(|v| v - w).collect();
        let tight_hi: Vec<f64> = vmin.iter().map(|v| v + w).collect();
        let loose_lo: Vec<f64> = vmin.iter().map(|v| v - w).collect();
        let loose_hi: Vec<f64> = vmax.iter().map(|v| v + w).collect();
        gap = gap.min(box_distance(y, &tight_lo, &tight_hi));
        margin = margin.min(box_distance(y, &loose_lo, &loose_hi));
    }
    (gap, margin)
}

/// Lower bound for `dist(y, f(S))` where `S` is the union of grid cells
/// selected by `select(lo, hi)`.
fn certified_distance(
    f: &GridFunction,
    y: &[f64],
    select: impl Fn(&[f64], &[f64]) -> bool,
) -> Result<f64> {
    let grid = f.grid();
    let mut cells = Vec::new();
    for c in 0..grid.cell_count() {
        let (lo, hi) = grid.cell_bounds(c);
        if select(&lo, &hi) {
            cells.push((c, f.cell_oscillation(c)?));
        }
    }
    Ok(gaps_over(f, &cells, y).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityReport {
    pub lhs: Option<i64>,
    pub parts: Option<(i64, i64)>,
    pub rhs: Option<i64>,
    /// Certified lower bound for `dist(y, f(U \ (U1 ∪ U2)))`.
    pub separation: f64,
    pub status: CertStatus,
    pub detail: String,
}

/// `deg(f, U, y) = deg(f, U1, y) + deg(f, U2, y)` for disjoint subcubes.
pub fn degree_additivity_check(
    f: &GridFunction,
    u: &SupCube,
    u1: &SupCube,
    u2: &SupCube,
    y: &[f64],
) -> Result<AdditivityReport> {
    if !u.contains_cube(u1, 0.0) || !u.contains_cube(u2, 0.0) {
        return param("U1 and U2 must lie inside U");
    }
    let disjoint = (0..u.dim()).any(|i| {
        (u1.center()[i] - u2.center()[i]).abs() >= u1.half_side() + u2.half_side()
    });
    if !disjoint {
        return param("U1 and U2 must be disjoint");
    }
    let whole = Domain::Cube(u.clone());
    let d1 = Domain::Cube(u1.clone());
    let d2 = Domain::Cube(u2.clone());
    let separation = certified_distance(f, y, |lo, hi| {
        whole.box_meets_closure(lo, hi) && !d1.box_inside(lo, hi) && !d2.box_inside(lo, hi)
    })?;
    let inconclusive = |detail: String| AdditivityReport {
        lhs: None,
        parts: None,
        rhs: None,
        separation,
        status: CertStatus::Inconclusive,
        detail,
    };
    if !(separation > 0.0) {
        return Ok(inconclusive(format!(
            "target not separated from f(U minus the pieces): bound {separation:.3e}"
        )));
    }
    let engine = PlDegree::new(f)?;
    let mut degs = Vec::new();
    for d in [&whole, &d1, &d2] {
        match engine.degree(d, y) {
            Ok(r) => degs.push(r.value),
            Err(e @ (Error::RefineGrid { .. } | Error::Degenerate { .. })) => {
                return Ok(inconclusive(e.to_string()))
            }
            Err(e) => return Err(e),
        }
    }
    let rhs = degs[1] + degs[2];
    Ok(AdditivityReport {
        lhs: Some(degs[0]),
        parts: Some((degs[1], degs[2])),
        rhs: Some(rhs),
        separation,
        status: if degs[0] == rhs {
            CertStatus::Holds
        } else {
            CertStatus::Fails
        },
        detail: String::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub degree_f: Option<i64>,
    pub degree_g: Option<i64>,
    /// Upper bound for `||f - g||_inf` on the closed domain.
    pub distance_bound: f64,
    pub boundary_gap: f64,
    pub status: CertStatus,
}

/// `deg(f, D, y) = deg(g, D, y)` when `||f - g|| < dist(y, f(dD))`. Both
/// functions must be sampled on the same grid.
pub fn degree_stability_check(
    f: &GridFunction,
    g: &GridFunction,
    domain: &Domain,
    y: &[f64],
) -> Result<StabilityReport> {
    if f.grid() != g.grid() {
        return param("stability check needs both maps on the same grid");
    }
    let grid = f.grid();
    let n = grid.dim();
    let mut distance_bound = 0.0_f64;
    for c in 0..grid.cell_count() {
        let (lo, hi) = grid.cell_bounds(c);
        if !domain.box_meets_closure(&lo, &hi) {
            continue;
        }
        let base = grid.cell_base_node(c);
        let d = crate::geometry::sup_dist(f.value(base), g.value(base));
        distance_bound =
            distance_bound.max(d + f.cell_oscillation(c)? + g.cell_oscillation(c)?);
    }
    let fe = PlDegree::new(f)?;
    let prepared = fe.prepare(domain)?;
    let (gap, _) = gaps_over(f, &prepared.cells, y);
    let mut report = StabilityReport {
        degree_f: None,
        degree_g: None,
        distance_bound,
        boundary_gap: gap,
        status: CertStatus::Inconclusive,
    };
    if !(distance_bound < gap) {
        return Ok(report);
    }
    let df = fe.degree_prepared(&prepared, y);
    let ge = PlDegree::new(g)?;
    let dg = ge.degree(domain, y);
    match (df, dg) {
        (Ok(a), Ok(b)) => {
            report.degree_f = Some(a.value);
            report.degree_g = Some(b.value);
            report.status = if a.value == b.value {
                CertStatus::Holds
            } else {
                CertStatus::Fails
            };
        }
        (Err(e), _) | (_, Err(e)) => match e {
            Error::RefineGrid { .. } | Error::Degenerate { .. } => {}
            other => return Err(other),
        },
    }
    let _ = n;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeOfVariablesReport {
    pub lhs: f64,
    pub rhs: f64,
    pub difference: f64,
    pub relative_difference: f64,
    /// Fraction of `|psi|` quadrature weight whose degree query failed.
    pub failed_weight_fraction: f64,
}

/// Quadrature settings for [`degree_change_of_variables`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovSettings {
    /// Grid subdivisions for the degree computation.
    pub degree_grid: usize,
    /// Panels per axis for the Jacobian side.
    pub panels: usize,
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Nodes per axis for the degree-weighted side.
    pub image_nodes: usize,
}

impl Default for CovSettings {
    fn default() -> Self {
        Self {
            degree_grid: 256,
            panels: 64,
            order: 6,
            image_nodes: 256,
        }
    }
}

/// `int_G J_f psi(f) dx` against `int deg(f, G, y) psi(y) dy` for a `C^1`
/// map with analytic Jacobian.
pub fn degree_change_of_variables(
    f: &dyn Map,
    g: &SupCube,
    psi: &dyn TestFunction,
    settings: CovSettings,
) -> Result<ChangeOfVariablesReport> {
    let n = g.dim();
    if f.dim() != n || psi.dim() != n {
        return param("map, cube and test function dimensions differ");
    }
    let lhs = jacobian_side(f, g, psi, settings.panels, settings.order)?;
    let gf = GridFunction::sample(f, RegularGrid::new(g.clone(), settings.degree_grid)?)?;
    let (rhs, failed) = degree_weighted_integral(&gf, &Domain::Cube(g.clone()), psi, settings.image_nodes)?;
    let difference = lhs - rhs;
    Ok(ChangeOfVariablesReport {
        lhs,
        rhs,
        difference,
        relative_difference: difference.abs() / rhs.abs().max(1e-300),
        failed_weight_fraction: failed,
    })
}

fn jacobian_side(
    f: &dyn Map,
    g: &SupCube,
    psi: &dyn TestFunction,
    panels: usize,
    order: usize,
) -> Result<f64> {
    let n = g.dim();
    let rule = crate::quadrature::gauss_legendre(order);
    let lo = g.lower();
    let width = 2.0 * g.half_side() / panels as f64;
    let per_axis: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let a = p as f64 * width;
            rule.0
                .iter()
                .zip(&rule.1)
                .map(move |(x, w)| (a + 0.5 * width * (x + 1.0), 0.5 * width * w))
        })
        .collect();
    let m = per_axis.len();
    let total = m.pow(n as u32);
    let partial: Vec<Result<f64>> = (0..total)
        .into_par_iter()
        .chunks(4096)
        .map(|chunk| {
            let mut s = 0.0;
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            for mut idx in chunk {
                let mut w = 1.0;
                for a in 0..n {
                    let (t, wt) = per_axis[idx % m];
                    idx /= m;
                    x[a] = lo[a] + t;
                    w *= wt;
                }
                f.eval_into(&x, &mut y);
                let p = psi.value(&y);
                if p == 0.0 {
                    continue;
                }
                let j = f.jacobian(&x).ok_or_else(|| Error::UndefinedDerivative {
                    point: x.clone(),
                    reason: "map has no analytic Jacobian here".into(),
                })?;
                s += w * j * p;
            }
            Ok(s)
        })
        .collect();
    partial.into_iter().sum()
}

/// `int deg(f, D, y) psi(y) dy` by tensor trapezoid quadrature over the
/// support of `psi`. Returns the value and the fraction of `|psi|` weight
/// whose degree query could not be certified.
pub fn degree_weighted_integral(
    f: &GridFunction,
    domain: &Domain,
    psi: &dyn TestFunction,
    nodes_per_axis: usize,
) -> Result<(f64, f64)> {
    let n = f.grid().dim();
    if nodes_per_axis < 2 {
        return param("need at least two quadrature nodes per axis");
    }
    let engine = PlDegree::new(f)?;
    let prepared = engine.prepare(domain)?;
    let (slo, shi) = psi.support();
    let (ilo, ihi) = f.image_bounds();
    let lo: Vec<f64> = (0..n).map(|i| slo[i].max(ilo[i])).collect();
    let hi: Vec<f64> = (0..n).map(|i| shi[i].min(ihi[i])).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Ok((0.0, 0.0));
    }
    let m = nodes_per_axis;
    let h: Vec<f64> = (0..n).map(|i| (hi[i] - lo[i]) / (m - 1) as f64).collect();
    let total = m.pow(n as u32);
    let parts: Vec<Result<(f64, f64, f64)>> = (0..total)
        .into_par_iter()
        .chunks(1024)
        .map(|chunk| {
            let mut acc = 0.0;
            let mut failed = 0.0;
            let mut weight = 0.0;
            let mut y = vec![0.0; n];
            for mut idx in chunk {
                let mut w = 1.0;
                for a in 0..n {
                    let i = idx % m;
                    idx /= m;
                    y[a] = lo[a] + i as f64 * h[a];
                    w *= h[a] * if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
                }
                let p = psi.value(&y);
                if p == 0.0 {
                    continue;
                }
                weight += w * p.abs();
                match engine.degree_prepared(&prepared, &y) {
                    Ok(r) => acc += w * p * r.value as f64,
                    Err(Error::RefineGrid { .. } | Error::Degenerate { .. }) => {
                        failed += w * p.abs()
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok((acc, failed, weight))
        })
        .collect();
    let (mut acc, mut failed, mut weight) = (0.0, 0.0, 0.0);
    for p in parts {
        let (a, fl, w) = p?;
        acc += a;
        failed += fl;
        weight += w;
    }
    let frac = if weight > 0.0 { failed / weight } else { 0.0 };
    if frac > 1e-3 {
        return Err(Error::Quadrature {
            detail: format!(
                "degree queries failed on {:.3}% of the test-function weight; refine the degree grid",
                100.0 * frac
            ),
        });
    }
    Ok((acc, frac))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    pub total: Option<i64>,
    pub side_a: Option<i64>,
    pub side_b: Option<i64>,
    /// Nonzero degree on both sides: preimages on either side of the plane.
    pub multiplicity_flag: bool,
    /// Certified lower bound for `dist(y, f(H ∩ U))`.
    pub plane_gap: f64,
    pub status: CertStatus,
}

/// Degrees on `U` and on both sides of `H`.
pub fn hyperplane_split_test(
    f: &GridFunction,
    u: &SupCube,
    y: &[f64],
    plane: &Hyperplane,
) -> Result<SplitReport> {
    let whole = Domain::Cube(u.clone());
    let plane_gap = certified_distance(f, y, |lo, hi| {
        if !whole.box_meets_closure(lo, hi) {
            return false;
        }
        let (l, h) = clip_box(lo, hi, u);
        let (a, b) = plane.box_range(&l, &h);
        a <= 0.0 && b >= 0.0
    })?;
    let mut report = SplitReport {
        total: None,
        side_a: None,
        side_b: None,
        multiplicity_flag: false,
        plane_gap,
        status: CertStatus::Inconclusive,
    };
    if !(plane_gap > 0.0) {
        return Ok(report);
    }
    let engine = PlDegree::new(f)?;
    let sides = [
        whole.clone(),
        Domain::HalfCube {
            cube: u.clone(),
            plane: plane.clone(),
            positive: false,
        },
        Domain::HalfCube {
            cube: u.clone(),
            plane: plane.clone(),
            positive: true,
        },
    ];
    let mut degs = Vec::new();
    for d in &sides {
        match engine.degree(d, y) {
            Ok(r) => degs.push(r.value),
            Err(Error::RefineGrid { .. } | Error::Degenerate { .. }) => return Ok(report),
            Err(e) => return Err(e),
        }
    }
    report.total = Some(degs[0]);
    report.side_a = Some(degs[1]);
    report.side_b = Some(degs[2]);
    report.multiplicity_flag = degs[1] != 0 && degs[2] != 0;
    report.status = if degs[0] == degs[1] + degs[2] {
        CertStatus::Holds
    } else {
        CertStatus::Fails
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Affine, Bumped, ComplexPower, SmoothFold};
    use crate::testfn::PolyBump;

    fn sampled(f: &dyn Map, n: usize, subdiv: usize) -> GridFunction {
        GridFunction::sample(f, RegularGrid::new(SupCube::unit(n), subdiv).unwrap()).unwrap()
    }

    fn q0(n: usize) -> Domain {
        Domain::Cube(SupCube::unit(n))
    }

    #[test]
    fn identity_and_reflection() {
        for n in [2, 3] {
            let id = sampled(&Affine::identity(n), n, 8);
            assert_eq!(degree(&id, &q0(n), &vec![0.0; n]).unwrap().value, 1);
            let r = sampled(&Affine::reflection(n), n, 8);
            assert_eq!(degree(&r, &q0(n), &vec![0.0; n]).unwrap().value, -1);
        }
    }

    #[test]
    fn complex_square_counts_two() {
        let g = sampled(&ComplexPower::new(2).unwrap(), 2, 64);
        let r = degree(&g, &q0(2), &[0.25, 0.0]).unwrap();
        assert_eq!(r.value, 2);
        assert!(r.boundary_gap > 0.5);
    }

    #[test]
    fn outside_image_has_degree_zero() {
        let g = sampled(&Affine::identity(2), 2, 32);
        assert_eq!(degree(&g, &Domain::Cube(SupCube::new(vec![0.0, 0.0], 0.5).unwrap()), &[0.8, 0.0]).unwrap().value, 0);
    }

    #[test]
    fn target_on_boundary_image_requests_refinement() {
        let g = sampled(&Affine::identity(2), 2, 8);
        match degree(&g, &q0(2), &[1.0, 0.0]) {
            Err(Error::RefineGrid { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vertex_ties_are_perturbed() {
        // y at a grid node of the identity is a vertex of several simplices.
        let g = sampled(&Affine::identity(2), 2, 8);
        let r = degree(&g, &q0(2), &[0.0, 0.0]).unwrap();
        assert_eq!(r.value, 1);
        assert!(r.perturbation_retries >= 1);
    }

    #[test]
    fn missing_modulus_is_reported() {
        let grid = RegularGrid::new(SupCube::unit(2), 16).unwrap();
        let values: Vec<f64> = (0..grid.node_count()).flat_map(|i| grid.node(i)).collect();
        let g = GridFunction::from_values(grid, values, None, "raw").unwrap();
        assert!(matches!(degree(&g, &q0(2), &[0.1, 0.1]), Err(Error::MissingModulus)));
        let g = g.with_modulus(Modulus {
            alpha: 1.0,
            constant: 1.0,
        });
        assert_eq!(degree(&g, &q0(2), &[0.1, 0.1]).unwrap().value, 1);
        assert_eq!(g.spot_check_modulus(1000, 1).unwrap(), CertStatus::Holds);
    }

    #[test]
    fn interpolation_is_exact_for_affine_maps() {
        let f = Affine::new(vec![1.0, 2.0, -0.5, 0.3], vec![0.1, -0.2], "a").unwrap();
        let g = sampled(&f, 2, 5);
        let x = [0.123, -0.77];
        let a = g.interpolate(&x);
        let b = f.eval(&x);
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }

    #[test]
    fn additivity_examples() {
        let id = sampled(&Affine::identity(2), 2, 32);
        let u = SupCube::unit(2);
        let u1 = SupCube::new(vec![-0.5, 0.0], 0.45).unwrap();
        let u2 = SupCube::new(vec![0.5, 0.0], 0.45).unwrap();
        let r = degree_additivity_check(&id, &u, &u1, &u2, &[-0.5, 0.1]).unwrap();
        assert_eq!((r.lhs, r.parts), (Some(1), Some((1, 0))));
        assert_eq!(r.status, CertStatus::Holds);

        let sq = sampled(&ComplexPower::new(2).unwrap(), 2, 128);
        let r = degree_additivity_check(&sq, &u, &u1, &u2, &[0.25, 0.0]).unwrap();
        assert_eq!(r.parts, Some((1, 1)));
        assert_eq!(r.status, CertStatus::Holds);

        // target in the gap between pieces: inconclusive, not a crash
        let r = degree_additivity_check(&id, &u, &u1, &u2, &[0.0, 0.0]).unwrap();
        assert_eq!(r.status, CertStatus::Inconclusive);
    }

    #[test]
    fn stability_examples() {
        let f = Affine::identity(2);
        let g = Bumped {
            base: Affine::identity(2),
            amplitude: 0.01,
            center: vec![0.0, 0.0],
            radius: 0.5,
            direction: vec![1.0, 0.0],
        };
        let fs = sampled(&f, 2, 32);
        let gs = sampled(&g, 2, 32);
        let r = degree_stability_check(&fs, &gs, &q0(2), &[0.0, 0.0]).unwrap();
        assert_eq!(r.status, CertStatus::Holds);
        assert_eq!((r.degree_f, r.degree_g), (Some(1), Some(1)));

        let big = Bumped {
            base: Affine::identity(2),
            amplitude: 3.0,
            center: vec![0.0, 0.0],
            radius: 0.9,
            direction: vec![1.0, 0.0],
        };
        let bs = sampled(&big, 2, 32);
        let r = degree_stability_check(&fs, &bs, &q0(2), &[0.0, 0.0]).unwrap();
        assert_eq!(r.status, CertStatus::Inconclusive);
    }

    #[test]
    fn change_of_variables_for_scaling() {
        let f = Affine::scaling(2, 2.0);
        let psi = PolyBump::new(vec![0.2, -0.1], 1.5, 3).unwrap();
        let r = degree_change_of_variables(&f, &SupCube::unit(2), &psi, CovSettings {
            degree_grid: 32,
            panels: 16,
            order: 6,
            image_nodes: 129,
        })
        .unwrap();
        let exact = psi.integral().unwrap();
        assert!((r.lhs - exact).abs() < 1e-6 * exact);
        assert!(r.relative_difference < 1e-3, "{r:?}");
    }

    #[test]
    fn split_test_identity_and_fold() {
        let id = sampled(&Affine::identity(2), 2, 32);
        let h = Hyperplane::axis(2, 0, 0.0).unwrap();
        let r = hyperplane_split_test(&id, &SupCube::unit(2), &[0.3, 0.2], &h).unwrap();
        assert_eq!((r.side_a, r.side_b), (Some(0), Some(1)));
        assert!(!r.multiplicity_flag);

        let fold = sampled(&SmoothFold::new(2, 0.1).unwrap(), 2, 64);
        let r = hyperplane_split_test(&fold, &SupCube::unit(2), &[0.25, 0.0], &h).unwrap();
        assert!(r.multiplicity_flag, "{r:?}");
        assert_eq!((r.side_a, r.side_b), (Some(-1), Some(1)));
    }

    #[test]
    fn half_cube_boundary_detection() {
        let d = Domain::HalfCube {
            cube: SupCube::unit(2),
            plane: Hyperplane::axis(2, 0, 0.0).unwrap(),
            positive: true,
        };
        assert!(d.box_meets_closure(&[-0.1, 0.0], &[0.0, 0.1]));
        assert!(!d.box_inside(&[-0.1, 0.0], &[0.1, 0.1]));
        assert!(d.box_inside(&[0.1, 0.0], &[0.2, 0.1]));
        assert!(!d.box_meets_closure(&[-0.3, 0.0], &[-0.1, 0.1]));
    }
}
