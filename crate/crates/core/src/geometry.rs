//! Sup-norm cubes, vertex-index paths, regular grids and their Kuhn
//! (Freudenthal) triangulation.

use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{param, Result};

/// Comparison tolerance for floating-point construction cubes.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// Open axis-aligned cube `{x : max_i |x_i - c_i| < r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupCube {
    center: Vec<f64>,
    half_side: f64,
}

impl SupCube {
    pub fn new(center: Vec<f64>, half_side: f64) -> Result<Self> {
        if center.is_empty() {
            return param("cube needs at least one coordinate");
        }
        if !(half_side > 0.0) || !half_side.is_finite() {
            return param(format!("cube half side must be positive, got {half_side}"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return param("cube center must be finite");
        }
        Ok(Self { center, half_side })
    }

    /// The reference cube `(-1, 1)^n`.
    pub fn unit(n: usize) -> Self {
        Self {
            center: vec![0.0; n],
            half_side: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_side(&self) -> f64 {
        self.half_side
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_side).powi(self.dim() as i32)
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.half_side).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center.iter().map(|c| c + self.half_side).collect()
    }

    /// Sup-norm distance from the center.
    pub fn sup_dist(&self, x: &[f64]) -> f64 {
        sup_dist(&self.center, x)
    }

    /// Open membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.sup_dist(x) < self.half_side
    }

    pub fn contains_closed(&self, x: &[f64], tol: f64) -> bool {
        self.sup_dist(x) <= self.half_side + tol
    }

    pub fn on_boundary(&self, x: &[f64], tol: f64) -> bool {
        (self.sup_dist(x) - self.half_side).abs() <= tol
    }

    /// Signed sup-norm distance to the boundary (positive inside).
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.half_side - self.sup_dist(x)
    }

    /// Whether the closed cube contains the closed cube `other`.
    pub fn contains_cube(&self, other: &SupCube, tol: f64) -> bool {
        self.sup_dist(&other.center) + other.half_side <= self.half_side + tol
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.center.clone(), self.half_side * factor)
    }

    pub fn describe(&self) -> String {
        let c: Vec<String> = self.center.iter().map(|v| format!("{v}")).collect();
        format!("Q([{}];{})", c.join(" "), self.half_side)
    }
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()))
}

pub fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Exact-rational cube, used when the construction radii are rational.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCube {
    pub center: Vec<BigRational>,
    pub half_side: BigRational,
}

impl ExactCube {
    pub fn volume(&self) -> BigRational {
        let side = &self.half_side + &self.half_side;
        let mut v = BigRational::from_integer(1.into());
        for _ in 0..self.center.len() {
            v *= &side;
        }
        v
    }

    /// Closed containment of `other` in `self`.
    pub fn contains_cube(&self, other: &ExactCube) -> bool {
        self.center.iter().zip(&other.center).all(|(a, b)| {
            let d = (a - b).abs();
            d + &other.half_side <= self.half_side
        })
    }

    /// Whether the open cubes are disjoint.
    pub fn disjoint(&self, other: &ExactCube) -> bool {
        self.center.iter().zip(&other.center).any(|(a, b)| {
            let d = (a - b).abs();
            d >= &self.half_side + &other.half_side
        })
    }
}

/// A vertex of `[-1, 1]^n`, stored as a sign mask (bit `i` set means `+1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Vertex {
    mask: u32,
    dim: u8,
}

impl Vertex {
    pub fn from_mask(mask: u32, dim: usize) -> Self {
        debug_assert!(dim < 32);
        Self {
            mask: mask & ((1u32 << dim) - 1),
            dim: dim as u8,
        }
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.is_empty() || signs.len() >= 32 {
            return param("vertex dimension must be in 1..32");
        }
        let mut mask = 0;
        for (i, s) in signs.iter().enumerate() {
            match s {
                1 => mask |= 1 << i,
                -1 => {}
                _ => return param(format!("vertex entries must be +1 or -1, got {s}")),
            }
        }
        Ok(Self::from_mask(mask, signs.len()))
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    #[inline]
    pub fn sign(&self, i: usize) -> f64 {
        if self.mask & (1 << i) != 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.dim())
            .map(|i| if self.mask & (1 << i) != 0 { 1 } else { -1 })
            .collect()
    }

    /// All `2^n` vertices.
    pub fn all(dim: usize) -> impl Iterator<Item = Vertex> {
        (0..(1u32 << dim)).map(move |m| Vertex::from_mask(m, dim))
    }
}

/// Sequence of vertex labels `[v_1, ..., v_k]` indexing a level-`k` cube.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct VertexPath {
    entries: Vec<Vertex>,
}

impl VertexPath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn new(entries: Vec<Vertex>) -> Result<Self> {
        if let Some(first) = entries.first() {
            if entries.iter().any(|v| v.dim() != first.dim()) {
                return param("vertex path entries must share a dimension");
            }
        }
        Ok(Self { entries })
    }

    pub fn level(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vertex] {
        &self.entries
    }

    pub fn child(&self, v: Vertex) -> Self {
        let mut entries = self.entries.clone();
        entries.push(v);
        Self { entries }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.entries.is_empty() {
            None
        } else {
            Some(Self {
                entries: self.entries[..self.entries.len() - 1].to_vec(),
            })
        }
    }

    /// All `2^{nk}` paths of length `k`.
    pub fn all(dim: usize, level: usize) -> Vec<VertexPath> {
        let mut paths = vec![VertexPath::root()];
        for _ in 0..level {
            paths = paths
                .iter()
                .flat_map(|p| Vertex::all(dim).map(move |v| p.child(v)))
                .collect();
        }
        paths
    }
}

/// `Q(c + r_parent/2 * v, r_child)`.
pub fn child_cube(
    parent_center: &[f64],
    parent_level_radius: f64,
    vertex: Vertex,
    child_radius: f64,
) -> Result<SupCube> {
    if !(parent_level_radius > 0.0) || !(child_radius > 0.0) {
        return param("child cube radii must be positive");
    }
    if vertex.dim() != parent_center.len() {
        return param("vertex dimension does not match the parent center");
    }
    let center = parent_center
        .iter()
        .enumerate()
        .map(|(i, c)| c + 0.5 * parent_level_radius * vertex.sign(i))
        .collect();
    SupCube::new(center, child_radius)
}

/// Regular grid with `subdivisions` cells per axis over a closed cube.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularGrid {
    cube: SupCube,
    subdivisions: usize,
}

impl RegularGrid {
    pub fn new(cube: SupCube, subdivisions: usize) -> Result<Self> {
        if subdivisions == 0 {
            return param("grid needs at least one subdivision per axis");
        }
        let n = cube.dim();
        let nodes = (subdivisions as f64 + 1.0).powi(n as i32);
        if nodes > 4.0e8 {
            return param(format!("grid with {nodes:.0} nodes is too large"));
        }
        Ok(Self { cube, subdivisions })
    }

    pub fn cube(&self) -> &SupCube {
        &self.cube
    }

    pub fn dim(&self) -> usize {
        self.cube.dim()
    }

    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.cube.half_side() / self.subdivisions as f64
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.subdivisions + 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis().pow(self.dim() as u32)
    }

    pub fn cell_count(&self) -> usize {
        self.subdivisions.pow(self.dim() as u32)
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let lo = self.cube.center()[axis] - self.cube.half_side();
        if i == self.subdivisions {
            self.cube.center()[axis] + self.cube.half_side()
        } else {
            lo + i as f64 * self.spacing()
        }
    }

    /// Flattened node index, axis 0 fastest.
    pub fn node_index(&self, multi: &[usize]) -> usize {
        let m = self.nodes_per_axis();
        multi.iter().rev().fold(0, |acc, &i| acc * m + i)
    }

    pub fn node_multi(&self, mut index: usize) -> Vec<usize> {
        let m = self.nodes_per_axis();
        (0..self.dim())
            .map(|_| {
                let i = index % m;
                index /= m;
                i
            })
            .collect()
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        self.node_multi(index)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_coord(a, i))
            .collect()
    }

    pub fn node_from_multi(&self, multi: &[usize]) -> Vec<f64> {
        multi
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_coord(a, i))
            .collect()
    }

    /// Node-index stride for each axis.
    pub fn node_strides(&self) -> Vec<usize> {
        let m = self.nodes_per_axis();
        (0..self.dim()).map(|a| m.pow(a as u32)).collect()
    }

    pub fn cell_multi(&self, mut index: usize) -> Vec<usize> {
        let m = self.subdivisions;
        (0..self.dim())
            .map(|_| {
                let i = index % m;
                index /= m;
                i
            })
            .collect()
    }

    pub fn cell_index(&self, multi: &[usize]) -> usize {
        let m = self.subdivisions;
        multi.iter().rev().fold(0, |acc, &i| acc * m + i)
    }

    /// Node index of the lower corner of a cell.
    pub fn cell_base_node(&self, cell: usize) -> usize {
        self.node_index(&self.cell_multi(cell))
    }

    pub fn cell_bounds(&self, cell: usize) -> (Vec<f64>, Vec<f64>) {
        let multi = self.cell_multi(cell);
        let lo = multi
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_coord(a, i))
            .collect();
        let hi = multi
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_coord(a, i + 1))
            .collect();
        (lo, hi)
    }

    /// Range of cell indices along `axis` whose closed cells meet `[lo, hi]`.
    pub fn cell_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let h = self.spacing();
        let start = self.cube.center()[axis] - self.cube.half_side();
        let a = ((lo - start) / h).floor() - 1.0;
        let b = ((hi - start) / h).ceil();
        let a = a.max(0.0) as usize;
        let b = (b.min(self.subdivisions as f64 - 1.0)).max(-1.0);
        if b < 0.0 {
            return None;
        }
        let b = b as usize;
        (a <= b).then_some((a, b))
    }

    /// Locate the cell containing `x` (clamped to the grid) and the local
    /// coordinates in `[0, 1]^n`.
    pub fn locate(&self, x: &[f64]) -> (Vec<usize>, Vec<f64>) {
        let h = self.spacing();
        let mut cell = Vec::with_capacity(self.dim());
        let mut local = Vec::with_capacity(self.dim());
        for (a, xa) in x.iter().enumerate() {
            let start = self.cube.center()[a] - self.cube.half_side();
            let u = ((xa - start) / h).clamp(0.0, self.subdivisions as f64);
            let i = (u.floor() as usize).min(self.subdivisions - 1);
            cell.push(i);
            local.push((u - i as f64).clamp(0.0, 1.0));
        }
        (cell, local)
    }
}

/// Kuhn simplex pattern inside a unit cell: vertex `j` is the sum of the
/// first `j` axis steps in `perm`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KuhnPattern {
    pub perm: Vec<usize>,
    /// Sign of the permutation, equal to the orientation of the simplex.
    pub parity: i8,
}

pub fn kuhn_patterns(n: usize) -> Vec<KuhnPattern> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut perms = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut perms);
    perms
        .into_iter()
        .map(|perm| {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| perm[i] > perm[j])
                .count();
            KuhnPattern {
                perm,
                parity: if inversions % 2 == 0 { 1 } else { -1 },
            }
        })
        .collect()
}

impl KuhnPattern {
    /// Node-index offsets of the `n + 1` vertices, relative to the cell base.
    pub fn node_offsets(&self, strides: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.perm.len() + 1);
        let mut acc = 0;
        out.push(0);
        for &a in &self.perm {
            acc += strides[a];
            out.push(acc);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    pub nodes: Vec<usize>,
}

impl Simplex {
    pub fn signed_volume(&self) -> f64 {
        let n = self.vertices.len() - 1;
        let m: Vec<Vec<f64>> = (1..=n)
            .map(|j| {
                self.vertices[j]
                    .iter()
                    .zip(&self.vertices[0])
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        determinant(m) / factorial(n)
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Kuhn decomposition of one grid cell into `n!` positively oriented simplices.
pub fn simplices_of_cell(grid: &RegularGrid, cell: usize) -> Result<Vec<Simplex>> {
    if cell >= grid.cell_count() {
        return param(format!(
            "cell index {cell} out of range (grid has {} cells)",
            grid.cell_count()
        ));
    }
    let base = grid.cell_base_node(cell);
    let strides = grid.node_strides();
    Ok(kuhn_patterns(grid.dim())
        .into_iter()
        .map(|pat| {
            let mut nodes: Vec<usize> = pat
                .node_offsets(&strides)
                .into_iter()
                .map(|o| base + o)
                .collect();
            if pat.parity < 0 {
                let k = nodes.len();
                nodes.swap(k - 2, k - 1);
            }
            Simplex {
                vertices: nodes.iter().map(|&i| grid.node(i)).collect(),
                nodes,
            }
        })
        .collect())
}

/// Hyperplane `{x : u . x = t}` with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return param(format!("hyperplane normal must be unit length, got {norm}"));
        }
        Ok(Self { normal, offset })
    }

    /// Normalizes `direction` first.
    pub fn from_direction(direction: &[f64], offset: f64) -> Result<Self> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return param("hyperplane direction must be nonzero");
        }
        Ok(Self {
            normal: direction.iter().map(|v| v / norm).collect(),
            offset,
        })
    }

    pub fn axis(n: usize, axis: usize, offset: f64) -> Result<Self> {
        if axis >= n {
            return param("axis out of range");
        }
        let mut normal = vec![0.0; n];
        normal[axis] = 1.0;
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `u . x - t`.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() - self.offset
    }

    /// Range of `u . x - t` over the box `[lo, hi]`.
    pub fn box_range(&self, lo: &[f64], hi: &[f64]) -> (f64, f64) {
        let mut a = -self.offset;
        let mut b = -self.offset;
        for ((u, l), h) in self.normal.iter().zip(lo).zip(hi) {
            let (p, q) = (u * l, u * h);
            a += p.min(q);
            b += p.max(q);
        }
        (a, b)
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    match n {
        0 => return 1.0,
        1 => return m[0][0],
        2 => return m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => {}
    }
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    det
}

/// Solve `m x = b` (row-major `m`); `None` when singular.
pub(crate) fn solve_linear(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &c| m[a][col].abs().total_cmp(&m[c][col].abs()))?;
        if m[pivot][col] == 0.0 {
            return None;
        }
        m.swap(pivot, col);
        b.swap(pivot, col);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                for k in col..n {
                    m[row][k] -= factor * m[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{ToPrimitive, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn child_cube_level_one() {
        let v = Vertex::from_signs(&[1, 1]).unwrap();
        let q = child_cube(&[0.0, 0.0], 1.0, v, 0.25).unwrap();
        assert_eq!(q.center(), &[0.5, 0.5]);
        assert_eq!(q.half_side(), 0.25);
    }

    #[test]
    fn child_cube_tangent_to_parent_corner() {
        let parent = SupCube::new(vec![0.3, -0.2, 0.1], 0.8).unwrap();
        let v = Vertex::from_signs(&[-1, -1, -1]).unwrap();
        let q = child_cube(parent.center(), 0.8, v, 0.4).unwrap();
        let lower_parent = parent.lower();
        for (a, b) in q.lower().iter().zip(&lower_parent) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(parent.contains_cube(&q, 1e-15));
    }

    #[test]
    fn child_of_child_recursion() {
        // r0 = 1, r1 = 1/4: z = 0 + r0/2 (+1,-1) + r1/2 (+1,+1)
        let v1 = Vertex::from_signs(&[1, -1]).unwrap();
        let v2 = Vertex::from_signs(&[1, 1]).unwrap();
        let q1 = child_cube(&[0.0, 0.0], 1.0, v1, 0.25).unwrap();
        let q2 = child_cube(q1.center(), 0.25, v2, 1.0 / 16.0).unwrap();
        assert_eq!(q2.center(), &[0.5 + 0.125, -0.5 + 0.125]);
    }

    #[test]
    fn child_cube_rejects_bad_radius() {
        let v = Vertex::from_signs(&[1, 1]).unwrap();
        assert!(child_cube(&[0.0, 0.0], 1.0, v, 0.0).is_err());
        assert!(child_cube(&[0.0, 0.0], -1.0, v, 0.1).is_err());
    }

    #[test]
    fn open_membership_and_boundary() {
        let q = SupCube::unit(2);
        assert!(q.contains(&[0.99, -0.5]));
        assert!(!q.contains(&[1.0, 0.0]));
        assert!(q.on_boundary(&[1.0, 0.3], 1e-12));
        assert!(q.contains_closed(&[1.0, 0.3], 0.0));
    }

    #[test]
    fn kuhn_counts_and_orientation() {
        for n in 2..=3 {
            let grid = RegularGrid::new(SupCube::unit(n), 1).unwrap();
            let simplices = simplices_of_cell(&grid, 0).unwrap();
            assert_eq!(simplices.len(), if n == 2 { 2 } else { 6 });
            for s in &simplices {
                assert!(s.signed_volume() > 0.0);
            }
        }
    }

    #[test]
    fn kuhn_volumes_sum_to_cell_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=3 {
            for _ in 0..5 {
                let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let r = rng.gen_range(0.1..1.5);
                let subdiv = rng.gen_range(1..5);
                let grid = RegularGrid::new(SupCube::new(center, r).unwrap(), subdiv).unwrap();
                let cell = rng.gen_range(0..grid.cell_count());
                let total: f64 = simplices_of_cell(&grid, cell)
                    .unwrap()
                    .iter()
                    .map(|s| s.signed_volume())
                    .sum();
                let h = grid.spacing();
                let expected = h.powi(n as i32);
                assert!((total - expected).abs() < 1e-12 * expected.max(1.0));
            }
        }
    }

    #[test]
    fn kuhn_simplices_tile_the_cell() {
        // Every random point of the cell lies in exactly one simplex interior.
        let grid = RegularGrid::new(SupCube::unit(3), 1).unwrap();
        let simplices = simplices_of_cell(&grid, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hits = simplices
                .iter()
                .filter(|s| {
                    let m: Vec<Vec<f64>> = (0..3)
                        .map(|r| (1..=3).map(|j| s.vertices[j][r] - s.vertices[0][r]).collect())
                        .collect();
                    let b: Vec<f64> = (0..3).map(|r| x[r] - s.vertices[0][r]).collect();
                    let lam = solve_linear(m, b).unwrap();
                    let l0 = 1.0 - lam.iter().sum::<f64>();
                    l0 > 0.0 && lam.iter().all(|&l| l > 0.0)
                })
                .count();
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn shared_faces_cancel() {
        // Boundary of the union: each interior (n-1)-face appears twice with
        // opposite induced orientation, so the oriented face sum vanishes
        // except on the cell boundary. Checked in 2D via edge multiset.
        use std::collections::HashMap;
        let grid = RegularGrid::new(SupCube::unit(2), 3).unwrap();
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for cell in 0..grid.cell_count() {
            for s in simplices_of_cell(&grid, cell).unwrap() {
                for k in 0..3 {
                    let (a, b) = (s.nodes[k], s.nodes[(k + 1) % 3]);
                    if a < b {
                        *edges.entry((a, b)).or_default() += 1;
                    } else {
                        *edges.entry((b, a)).or_default() -= 1;
                    }
                }
            }
        }
        let unbalanced = edges.values().filter(|&&v| v != 0).count();
        // Only the 4 * 3 boundary edges of the 3x3 grid survive.
        assert_eq!(unbalanced, 12);
    }

    #[test]
    fn simplices_reject_out_of_range_cell() {
        let grid = RegularGrid::new(SupCube::unit(2), 2).unwrap();
        assert!(simplices_of_cell(&grid, 4).is_err());
    }

    #[test]
    fn hyperplane_validation() {
        assert!(Hyperplane::new(vec![1.0, 1.0], 0.0).is_err());
        let h = Hyperplane::from_direction(&[3.0, 4.0], 1.0).unwrap();
        assert!((h.signed_distance(&[0.6, 0.8]) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn exact_cube_volume() {
        let half = BigRational::new(1.into(), 4.into());
        let c = ExactCube {
            center: vec![BigRational::zero(), BigRational::zero()],
            half_side: half,
        };
        assert_eq!(c.volume().to_f64().unwrap(), 0.25);
    }

    #[test]
    fn grid_locate_and_nodes() {
        let grid = RegularGrid::new(SupCube::unit(2), 4).unwrap();
        let (cell, local) = grid.locate(&[0.1, -0.9]);
        assert_eq!(cell, vec![2, 0]);
        assert!((local[0] - 0.2).abs() < 1e-12);
        assert!((local[1] - 0.2).abs() < 1e-12);
        assert_eq!(grid.node(grid.node_count() - 1), vec![1.0, 1.0]);
    }
}
