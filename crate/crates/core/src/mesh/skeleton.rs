use std::collections::HashMap;

use super::{midpoint, Mesh, MeshError, DIM};

/// One geometric edge of the skeleton.
///
/// `vertices` is ordered as traversed counter-clockwise by `left` (the
/// triangle `T+`), and `normal` points out of `left`. On the boundary this is
/// the outward normal of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub left: usize,
    pub left_local: usize,
    pub right: Option<(usize, usize)>,
    pub normal: [f64; 2],
    pub length: f64,
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.right.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    n_interior: usize,
}

impl Skeleton {
    /// Extracts every geometric edge exactly once. `T+` of an interior edge
    /// is the adjacent triangle with the smaller index.
    ///
    /// Fails on edges shared by more than two triangles, on inconsistent
    /// orientation and on hanging nodes left behind by bisection (a vertex
    /// sitting at the midpoint of a boundary-classified edge).
    pub fn new(mesh: &Mesh) -> Result<Self, MeshError> {
        if mesh.n_triangles() == 0 {
            return Err(MeshError::Empty);
        }
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(2 * mesh.n_triangles());
        let mut edges: Vec<Edge> = Vec::with_capacity(2 * mesh.n_triangles());
        let mut triangle_edges = vec![[usize::MAX; 3]; mesh.n_triangles()];
        for (t, (tri, slots)) in mesh.triangles().iter().zip(triangle_edges.iter_mut()).enumerate() {
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        let pa = mesh.vertex(a);
                        let pb = mesh.vertex(b);
                        let d = [pb[0] - pa[0], pb[1] - pa[1]];
                        let length = d[0].hypot(d[1]);
                        lookup.insert(key, edges.len());
                        slots[i] = edges.len();
                        edges.push(Edge {
                            vertices: [a, b],
                            left: t,
                            left_local: i,
                            right: None,
                            normal: [d[1] / length, -d[0] / length],
                            length,
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.right.is_some() {
                            return Err(MeshError::NonManifold(key.0, key.1));
                        }
                        if edge.vertices != [b, a] {
                            return Err(MeshError::Orientation(key.0, key.1));
                        }
                        edge.right = Some((t, i));
                        slots[i] = e;
                    }
                }
            }
        }
        let positions: HashMap<(u64, u64), usize> = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(v, p)| ((p[0].to_bits(), p[1].to_bits()), v))
            .collect();
        for edge in edges.iter().filter(|e| !e.is_interior()) {
            let m = midpoint(mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1]));
            if let Some(&v) = positions.get(&(m[0].to_bits(), m[1].to_bits())) {
                return Err(MeshError::HangingNode(edge.vertices[0], edge.vertices[1], v));
            }
        }
        let n_interior = edges.iter().filter(|e| e.is_interior()).count();
        Ok(Skeleton { edges, triangle_edges, n_interior })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.edges.len() - self.n_interior
    }

    /// Skeleton edge indices of the three local edges of triangle `t`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }
}

/// Leading factor `(p_t + 1)(p_t + d) / d` of the interior penalty.
pub fn penalty_factor(p_t: usize, d: usize) -> f64 {
    ((p_t + 1) * (p_t + d)) as f64 / d as f64
}

/// Interior penalty `eta_e`: the leading factor times the perimeter/area
/// ratio of the adjacent triangle, averaged over both sides on interior
/// edges.
pub fn eta_e(mesh: &Mesh, skeleton: &Skeleton, edge: usize, p_t: usize) -> Result<f64, MeshError> {
    let e = skeleton.edges.get(edge).ok_or(MeshError::BadEdge(edge))?;
    let ratio = |t: usize| {
        let area = mesh.area(t);
        if area <= 0.0 {
            Err(MeshError::Degenerate(t, area))
        } else {
            Ok(mesh.perimeter(t) / area)
        }
    };
    let shape = match e.right {
        Some((r, _)) => 0.5 * (ratio(e.left)? + ratio(r)?),
        None => ratio(e.left)?,
    };
    Ok(penalty_factor(p_t, DIM) * shape)
}
