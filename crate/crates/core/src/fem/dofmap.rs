use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::{AffineMap, BasisError, LagrangeElement};
use crate::mesh::{Mesh, Skeleton};
use crate::sparse::{SparseOperator, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    Continuous,
    Broken,
}

/// Element-to-global degree-of-freedom table for a Lagrange space.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    continuity: Continuity,
    element: LagrangeElement,
    table: Vec<usize>,
    n_dofs: usize,
    boundary_dofs: Vec<usize>,
    fingerprint: u64,
}

fn fingerprint(mesh: &Mesh) -> u64 {
    let mut h = DefaultHasher::new();
    mesh.triangles().hash(&mut h);
    for p in mesh.vertices() {
        p[0].to_bits().hash(&mut h);
        p[1].to_bits().hash(&mut h);
    }
    h.finish()
}

/// Builds the dof map of the degree-`degree` Lagrange space on `mesh`.
///
/// Continuous spaces number vertices first, then edge-interior nodes in
/// skeleton order (oriented along the stored edge direction), then
/// element-interior nodes. Broken spaces number element by element.
pub fn build_space(mesh: &Mesh, degree: usize, continuity: Continuity) -> Result<DofMap, BasisError> {
    let element = LagrangeElement::new(degree)?;
    let nloc = element.n_basis();
    let nt = mesh.n_triangles();
    let mut table = vec![0; nt * nloc];
    let (n_dofs, boundary_dofs) = match continuity {
        Continuity::Broken => {
            table.iter_mut().enumerate().for_each(|(k, d)| *d = k);
            (nt * nloc, Vec::new())
        }
        Continuity::Continuous => {
            let skel = Skeleton::new(mesh)?;
            let nv = mesh.n_vertices();
            let per_edge = degree - 1;
            let edge_base = nv;
            let interior_base = nv + skel.n_edges() * per_edge;
            let n_int = element.interior_nodes().len();
            for t in 0..nt {
                let tri = mesh.triangle(t);
                let dofs = &mut table[t * nloc..(t + 1) * nloc];
                dofs[..3].copy_from_slice(&tri);
                for (i, &e) in skel.triangle_edges(t).iter().enumerate() {
                    let forward = skel.edge(e).vertices[0] == tri[(i + 1) % 3];
                    for (k, local) in element.edge_nodes(i).enumerate() {
                        let kk = if forward { k } else { per_edge - 1 - k };
                        dofs[local] = edge_base + e * per_edge + kk;
                    }
                }
                for (k, local) in element.interior_nodes().enumerate() {
                    dofs[local] = interior_base + t * n_int + k;
                }
            }
            let mut boundary = Vec::new();
            for (e, edge) in skel.edges().iter().enumerate() {
                if !edge.is_interior() {
                    boundary.extend(edge.vertices);
                    boundary.extend((0..per_edge).map(|k| edge_base + e * per_edge + k));
                }
            }
            boundary.sort_unstable();
            boundary.dedup();
            (interior_base + nt * n_int, boundary)
        }
    };
    Ok(DofMap { continuity, element, table, n_dofs, boundary_dofs, fingerprint: fingerprint(mesh) })
}

impl DofMap {
    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn element(&self) -> &LagrangeElement {
        &self.element
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.element.n_basis()
    }

    pub fn n_elements(&self) -> usize {
        self.table.len() / self.n_local()
    }

    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let n = self.n_local();
        &self.table[t * n..(t + 1) * n]
    }

    /// Dofs on the domain boundary (continuous spaces only; empty otherwise).
    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn is_built_on(&self, mesh: &Mesh) -> bool {
        self.n_elements() == mesh.n_triangles() && self.fingerprint == fingerprint(mesh)
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs];
        for t in 0..mesh.n_triangles() {
            let map = AffineMap::new(mesh.coords(t));
            for (&dof, &node) in self.element_dofs(t).iter().zip(self.element.nodes()) {
                out[dof] = f(map.map(node));
            }
        }
        out
    }

    /// Evaluates the function with coefficients `coeffs` on triangle `t` at
    /// reference point `xi`.
    pub fn evaluate(&self, coeffs: &[f64], t: usize, xi: [f64; 2]) -> f64 {
        self.element.eval(xi).iter().zip(self.element_dofs(t)).map(|(phi, &d)| phi * coeffs[d]).sum()
    }
}

/// Matrix `C` (`n_dg x n_cg`) with `C w` the broken-space coefficients of
/// the continuous function `w`.
pub fn embedding_matrix(cg: &DofMap, dg: &DofMap) -> Result<SparseOperator, BasisError> {
    if cg.fingerprint != dg.fingerprint || cg.n_elements() != dg.n_elements() {
        return Err(BasisError::MeshMismatch);
    }
    if dg.continuity != Continuity::Broken {
        return Err(BasisError::NotBroken);
    }
    if cg.degree() > dg.degree() {
        return Err(BasisError::DegreeOrder(cg.degree(), dg.degree()));
    }
    let same = cg.degree() == dg.degree();
    // values of the cg basis at the dg nodes, identical on every element
    let local: Vec<Vec<f64>> = dg.element.nodes().iter().map(|&n| cg.element.eval(n)).collect();
    let mut b = TripletBuilder::with_capacity(dg.n_dofs, cg.n_dofs, dg.n_dofs * if same { 1 } else { cg.n_local() });
    for t in 0..dg.n_elements() {
        let rows = dg.element_dofs(t);
        let cols = cg.element_dofs(t);
        if same {
            for (&r, &c) in rows.iter().zip(cols) {
                b.push(r, c, 1.0);
            }
            continue;
        }
        for (j, &r) in rows.iter().enumerate() {
            for (i, &c) in cols.iter().enumerate() {
                let v = local[j][i];
                if v.abs() > 1e-14 {
                    b.push(r, c, v);
                }
            }
        }
    }
    Ok(b.build())
}
