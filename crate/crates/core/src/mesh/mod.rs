//! Conforming triangular meshes.
//!
//! Triangles are stored counter-clockwise. Local edge `i` of a triangle is the
//! edge opposite local vertex `i`, traversed from vertex `i+1` to `i+2`
//! (indices mod 3). Each triangle carries the local index of its refinement
//! edge for newest-vertex bisection, a generation counter and a flag telling
//! whether it lies inside the quantity-of-interest region.

mod dump;
mod refine;
mod skeleton;

pub use dump::{parse_dump, write_dump, MeshDump};
pub use refine::{bisect, refine, SplitRule};
pub use skeleton::{eta_e, penalty_factor, Edge, Skeleton};

use thiserror::Error;

/// Spatial dimension of every mesh in this crate.
pub const DIM: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {0} is degenerate (signed area {1:e})")]
    Degenerate(usize, f64),
    #[error("triangle {0} references vertex {1} which does not exist")]
    BadVertex(usize, usize),
    #[error("triangle index {0} out of range")]
    BadIndex(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifold(usize, usize),
    #[error("edge ({0}, {1}) is traversed in the same direction by two triangles")]
    Orientation(usize, usize),
    #[error("hanging node {2} on edge ({0}, {1})")]
    HangingNode(usize, usize, usize),
    #[error("region {0:?} is not strictly inside the domain")]
    InvalidRegion(Rect),
    #[error("subdivision count must be at least 1")]
    BadSubdivision,
    #[error("edge index {0} out of range")]
    BadEdge(usize),
}

/// Axis-aligned rectangle `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn is_proper(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }

    /// Closed containment with an absolute slack `tol`.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }

    pub fn contains_strictly(&self, p: [f64; 2]) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    refinement_edge: Vec<u8>,
    generation: Vec<u32>,
    in_region: Vec<bool>,
    region: Option<Rect>,
}

pub(crate) fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Neumaier summation; plain sums over millions of triangles lose ~1e-11.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

fn signed_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

impl Mesh {
    /// Builds a mesh from raw connectivity.
    ///
    /// Clockwise triangles are flipped to counter-clockwise. Refinement edges
    /// are seeded on the longest edge (lowest local index on ties) and
    /// triangles whose centroid lies in `region` are tagged.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        region: Option<Rect>,
    ) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= vertices.len() {
                    return Err(MeshError::BadVertex(t, v));
                }
            }
            let a = signed_area([vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
            let scale = dist(vertices[tri[0]], vertices[tri[1]])
                .max(dist(vertices[tri[1]], vertices[tri[2]]))
                .max(dist(vertices[tri[2]], vertices[tri[0]]));
            if a.abs() <= 1e-14 * scale * scale || !a.is_finite() {
                return Err(MeshError::Degenerate(t, a));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }
        let refinement_edge = triangles
            .iter()
            .map(|tri| {
                let len = |i: usize| dist(vertices[tri[(i + 1) % 3]], vertices[tri[(i + 2) % 3]]);
                let mut best = 0;
                for i in 1..3 {
                    if len(i) > len(best) * (1.0 + 1e-12) {
                        best = i;
                    }
                }
                best as u8
            })
            .collect();
        let n = triangles.len();
        let mut mesh = Mesh {
            vertices,
            triangles,
            refinement_edge,
            generation: vec![0; n],
            in_region: vec![false; n],
            region,
        };
        if let Some(r) = region {
            mesh.in_region = (0..n).map(|t| r.contains_strictly(mesh.centroid(t))).collect();
        }
        Ok(mesh)
    }

    pub(crate) fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
        generation: Vec<u32>,
        in_region: Vec<bool>,
        region: Option<Rect>,
    ) -> Self {
        Mesh { vertices, triangles, refinement_edge, generation, in_region, region }
    }

    /// Tensor grid on the given coordinate lines, each cell split along its
    /// SW-NE diagonal. Only cells whose centre satisfies `keep` are meshed.
    pub fn from_grid(
        xs: &[f64],
        ys: &[f64],
        keep: impl Fn([f64; 2]) -> bool,
        region: Option<Rect>,
    ) -> Result<Self, MeshError> {
        let nx = xs.len();
        let mut index = vec![usize::MAX; nx * ys.len()];
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut vid = |i: usize, j: usize, vertices: &mut Vec<[f64; 2]>| {
            let k = j * nx + i;
            if index[k] == usize::MAX {
                index[k] = vertices.len();
                vertices.push([xs[i], ys[j]]);
            }
            index[k]
        };
        for j in 0..ys.len().saturating_sub(1) {
            for i in 0..nx.saturating_sub(1) {
                let centre = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])];
                if !keep(centre) {
                    continue;
                }
                let p00 = vid(i, j, &mut vertices);
                let p10 = vid(i + 1, j, &mut vertices);
                let p11 = vid(i + 1, j + 1, &mut vertices);
                let p01 = vid(i, j + 1, &mut vertices);
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
            }
        }
        Mesh::new(vertices, triangles, region)
    }

    /// Cross-shaped domain `(-2,2)x(-1,1) U (-1,1)x(-2,2)` on the unit grid
    /// with the sides of the QoI square `(1.2,1.4)x(0.2,0.4)` added as grid
    /// lines, so that the square is a single cell.
    pub fn cross() -> Self {
        let xs = [-2.0, -1.0, 0.0, 1.0, 1.2, 1.4, 2.0];
        let ys = [-2.0, -1.0, 0.0, 0.2, 0.4, 1.0, 2.0];
        let keep = |c: [f64; 2]| (c[0].abs() < 2.0 && c[1].abs() < 1.0) || (c[0].abs() < 1.0 && c[1].abs() < 2.0);
        Mesh::from_grid(&xs, &ys, keep, Some(Rect::new(1.2, 1.4, 0.2, 0.4))).expect("cross grid is valid")
    }

    /// Unit square meshed with `10 n` cells per direction, with the grid lines
    /// nearest to the sides of `region` moved onto them.
    pub fn unit_square(n: usize, region: Rect) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::BadSubdivision);
        }
        let unit = Rect::new(0.0, 1.0, 0.0, 1.0);
        if !region.is_proper()
            || !unit.contains_strictly([region.x0, region.y0])
            || !unit.contains_strictly([region.x1, region.y1])
        {
            return Err(MeshError::InvalidRegion(region));
        }
        let m = 10 * n;
        let snap = |lo: f64, hi: f64| {
            let gap = 0.3 / m as f64;
            let mut lines: Vec<f64> = (0..=m)
                .map(|i| i as f64 / m as f64)
                .filter(|&l| l == 0.0 || l == 1.0 || ((l - lo).abs() >= gap && (l - hi).abs() >= gap))
                .collect();
            lines.extend([lo, hi]);
            lines.sort_by(f64::total_cmp);
            lines.dedup();
            lines
        };
        let xs = snap(region.x0, region.x1);
        let ys = snap(region.y0, region.y1);
        Mesh::from_grid(&xs, &ys, |_| true, Some(region))
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn refinement_edge(&self, t: usize) -> usize {
        self.refinement_edge[t] as usize
    }

    pub fn generation(&self, t: usize) -> u32 {
        self.generation[t]
    }

    pub fn in_region(&self, t: usize) -> bool {
        self.in_region[t]
    }

    pub fn region(&self) -> Option<Rect> {
        self.region
    }

    pub fn coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(self.coords(t))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let p = self.coords(t);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    /// Length of local edge `i`.
    pub fn edge_length(&self, t: usize, i: usize) -> f64 {
        let p = self.coords(t);
        dist(p[(i + 1) % 3], p[(i + 2) % 3])
    }

    pub fn perimeter(&self, t: usize) -> f64 {
        (0..3).map(|i| self.edge_length(t, i)).sum()
    }

    /// Diameter `h_T`, i.e. the longest edge.
    pub fn diameter(&self, t: usize) -> f64 {
        (0..3).map(|i| self.edge_length(t, i)).fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        compensated_sum((0..self.n_triangles()).map(|t| self.area(t)))
    }

    /// Area of the triangles tagged as lying in the QoI region.
    pub fn region_area(&self) -> f64 {
        compensated_sum((0..self.n_triangles()).filter(|&t| self.in_region[t]).map(|t| self.area(t)))
    }

    /// Smallest interior angle of triangle `t`, in radians.
    pub fn min_angle(&self, t: usize) -> f64 {
        let p = self.coords(t);
        (0..3)
            .map(|i| {
                let a = p[i];
                let u = [p[(i + 1) % 3][0] - a[0], p[(i + 1) % 3][1] - a[1]];
                let v = [p[(i + 2) % 3][0] - a[0], p[(i + 2) % 3][1] - a[1]];
                let c = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                c.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_angle_overall(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.min_angle(t)).fold(f64::INFINITY, f64::min)
    }

    /// Whether the tagged triangles tile the QoI region exactly.
    pub fn is_region_conforming(&self) -> bool {
        let Some(r) = self.region else { return false };
        let scale = r.area().max(f64::MIN_POSITIVE);
        let tol = 1e-12 * (r.x1 - r.x0).abs().max((r.y1 - r.y0).abs());
        let inside_ok = (0..self.n_triangles())
            .filter(|&t| self.in_region[t])
            .all(|t| self.coords(t).iter().all(|&p| r.contains(p, tol)));
        inside_ok && ((self.region_area() - r.area()).abs() <= 1e-10 * scale)
    }
}
