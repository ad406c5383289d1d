//! Assembly of the interior-penalty/upwind dG operator, the Gram matrix of
//! the test-space inner product, the load vector and the QoI functional.
//!
//! Jumps are `v+ - v-` with `T+` the left triangle of the skeleton edge and
//! the normal pointing out of `T+`. On boundary edges jump and average both
//! reduce to the single trace.

use thiserror::Error;

use crate::fem::{edge_rule, triangle_rule, AffineMap, BasisError, Continuity, DofMap};
use crate::mesh::{eta_e, Mesh, MeshError, Rect, Skeleton};
use crate::problem::{ProblemDef, ProblemError};
use crate::sparse::{SparseOperator, TripletBuilder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("test space must be broken")]
    NotBroken,
    #[error("dof map was not built on this mesh")]
    MeshMismatch,
    #[error("degenerate norm: kappa, gamma and beta are all zero")]
    DegenerateNorm,
    #[error("mesh is not conforming to the QoI region {0:?}")]
    NotRegionConforming(Rect),
    #[error("vector of length {0} does not match {1} dofs")]
    Length(usize, usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Negative part `max(-x, 0)`.
#[inline]
fn neg(x: f64) -> f64 {
    (-x).max(0.0)
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// One side of an edge as seen by the edge quadrature.
struct Side {
    t: usize,
    /// Coefficient of this trace in the jump (`+1` for `T+`, `-1` for `T-`).
    jump: f64,
    /// Coefficient of this trace in the average (1 on the boundary).
    avg: f64,
    /// Basis values per edge quadrature point.
    phi: Vec<Vec<f64>>,
    /// Normal derivatives `grad(phi) . n` per edge quadrature point.
    dn: Vec<Vec<f64>>,
}

struct EdgeData {
    sides: Vec<Side>,
    points: Vec<[f64; 2]>,
    /// Quadrature weights scaled by the edge length.
    weights: Vec<f64>,
    normal: [f64; 2],
    eta: f64,
}

/// Precomputed reference tables and penalties for one (mesh, space, problem)
/// triple.
pub struct Assembler<'a> {
    mesh: &'a Mesh,
    skel: &'a Skeleton,
    dg: &'a DofMap,
    prob: &'a ProblemDef,
    eta: Vec<f64>,
    vol_pts: Vec<[f64; 2]>,
    vol_w: Vec<f64>,
    vol_phi: Vec<Vec<f64>>,
    vol_grad: Vec<Vec<[f64; 2]>>,
    edge_s: Vec<f64>,
    edge_w: Vec<f64>,
    /// `[local edge][q]` tables at parameter `s_q` from local vertex `i+1`.
    edge_phi: [Vec<Vec<f64>>; 3],
    edge_grad: [Vec<Vec<[f64; 2]>>; 3],
}

impl<'a> Assembler<'a> {
    pub fn new(mesh: &'a Mesh, skel: &'a Skeleton, dg: &'a DofMap, prob: &'a ProblemDef) -> Result<Self, AssemblyError> {
        if dg.continuity() != Continuity::Broken {
            return Err(AssemblyError::NotBroken);
        }
        if !dg.is_built_on(mesh) {
            return Err(AssemblyError::MeshMismatch);
        }
        prob.validate()?;
        let pt = dg.degree();
        let el = dg.element();
        let vol = triangle_rule(2 * pt + 2)?;
        let edge = edge_rule(2 * pt + 2)?;
        let eta = (0..skel.n_edges()).map(|e| eta_e(mesh, skel, e, pt)).collect::<Result<Vec<_>, _>>()?;
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mut edge_phi: [Vec<Vec<f64>>; 3] = Default::default();
        let mut edge_grad: [Vec<Vec<[f64; 2]>>; 3] = Default::default();
        for i in 0..3 {
            let (a, b): ([f64; 2], [f64; 2]) = (corners[(i + 1) % 3], corners[(i + 2) % 3]);
            for q in &edge.points {
                let x = [a[0] + q[0] * (b[0] - a[0]), a[1] + q[0] * (b[1] - a[1])];
                edge_phi[i].push(el.eval(x));
                edge_grad[i].push(el.grad(x));
            }
        }
        Ok(Assembler {
            mesh,
            skel,
            dg,
            prob,
            eta,
            vol_phi: vol.points.iter().map(|&x| el.eval(x)).collect(),
            vol_grad: vol.points.iter().map(|&x| el.grad(x)).collect(),
            vol_pts: vol.points,
            vol_w: vol.weights,
            edge_s: edge.points.iter().map(|p| p[0]).collect(),
            edge_w: edge.weights,
            edge_phi,
            edge_grad,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dg.n_dofs()
    }

    /// Penalty `eta_e` of skeleton edge `e`.
    pub fn eta(&self, e: usize) -> f64 {
        self.eta[e]
    }

    fn physical_grads(&self, map: &AffineMap, q: usize) -> Vec<[f64; 2]> {
        self.vol_grad[q].iter().map(|&g| map.grad(g)).collect()
    }

    fn edge_data(&self, e: usize) -> EdgeData {
        let edge = self.skel.edge(e);
        let a = self.mesh.vertex(edge.vertices[0]);
        let b = self.mesh.vertex(edge.vertices[1]);
        let nq = self.edge_s.len();
        let points = self.edge_s.iter().map(|&s| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]).collect();
        let weights = self.edge_w.iter().map(|w| w * edge.length).collect();
        let side = |t: usize, local: usize, reversed: bool, jump: f64, avg: f64| {
            let map = AffineMap::new(self.mesh.coords(t));
            let idx = |q: usize| if reversed { nq - 1 - q } else { q };
            let phi = (0..nq).map(|q| self.edge_phi[local][idx(q)].clone()).collect();
            let dn = (0..nq)
                .map(|q| self.edge_grad[local][idx(q)].iter().map(|&g| dot(map.grad(g), edge.normal)).collect())
                .collect();
            Side { t, jump, avg, phi, dn }
        };
        let sides = match edge.right {
            None => vec![side(edge.left, edge.left_local, false, 1.0, 1.0)],
            Some((r, rl)) => vec![side(edge.left, edge.left_local, false, 1.0, 0.5), side(r, rl, true, -1.0, 0.5)],
        };
        EdgeData { sides, points, weights, normal: edge.normal, eta: self.eta[e] }
    }

    /// dG operator with `B[i][j] = b_h(phi_j, phi_i)`.
    pub fn bh(&self) -> SparseOperator {
        let p = self.prob;
        let (kappa, gamma, eps) = (p.kappa, p.gamma, p.epsilon());
        let n = self.dg.n_local();
        let mut out = TripletBuilder::with_capacity(self.n_dofs(), self.n_dofs(), n * n * (self.mesh.n_triangles() * 4));
        let mut local = vec![0.0; n * n];
        for t in 0..self.mesh.n_triangles() {
            let map = AffineMap::new(self.mesh.coords(t));
            local.iter_mut().for_each(|v| *v = 0.0);
            for (q, &xi) in self.vol_pts.iter().enumerate() {
                let x = map.map(xi);
                let w = self.vol_w[q] * map.det();
                let bx = p.velocity.at(x);
                let g = self.physical_grads(&map, q);
                let phi = &self.vol_phi[q];
                for j in 0..n {
                    let adv = dot(bx, g[j]) + gamma * phi[j];
                    for i in 0..n {
                        local[i * n + j] += w * (kappa * dot(g[j], g[i]) + adv * phi[i]);
                    }
                }
            }
            scatter(&mut out, self.dg.element_dofs(t), self.dg.element_dofs(t), &local);
        }
        for e in 0..self.skel.n_edges() {
            let d = self.edge_data(e);
            let boundary = d.sides.len() == 1;
            for test in &d.sides {
                for trial in &d.sides {
                    local.iter_mut().for_each(|v| *v = 0.0);
                    for q in 0..d.weights.len() {
                        let bn = dot(p.velocity.at(d.points[q]), d.normal);
                        let (pi, pj) = (&test.phi[q], &trial.phi[q]);
                        let (di, dj) = (&test.dn[q], &trial.dn[q]);
                        let jj = test.jump * trial.jump;
                        let mass = if boundary { kappa * d.eta + neg(bn) } else { kappa * d.eta * jj + 0.5 * bn.abs() * jj - bn * trial.jump * test.avg };
                        for j in 0..n {
                            for i in 0..n {
                                let v = mass * pj[j] * pi[i] - kappa * trial.avg * dj[j] * test.jump * pi[i]
                                    + eps * kappa * trial.jump * pj[j] * test.avg * di[i];
                                local[i * n + j] += d.weights[q] * v;
                            }
                        }
                    }
                    scatter(&mut out, self.dg.element_dofs(test.t), self.dg.element_dofs(trial.t), &local);
                }
            }
        }
        out.build()
    }

    fn check_norm(&self) -> Result<(), AssemblyError> {
        let p = self.prob;
        if p.kappa == 0.0 && p.gamma == 0.0 && p.beta == 0.0 {
            return Err(AssemblyError::DegenerateNorm);
        }
        Ok(())
    }

    /// Gram matrix of the test-space inner product.
    pub fn gram(&self) -> Result<SparseOperator, AssemblyError> {
        self.check_norm()?;
        let p = self.prob;
        let n = self.dg.n_local();
        let react = p.gamma + p.beta / p.domain_scale;
        let mut out = TripletBuilder::with_capacity(self.n_dofs(), self.n_dofs(), n * n * (self.mesh.n_triangles() * 4));
        let mut local = vec![0.0; n * n];
        for t in 0..self.mesh.n_triangles() {
            let map = AffineMap::new(self.mesh.coords(t));
            let stream = p.beta_l() * self.mesh.diameter(t);
            local.iter_mut().for_each(|v| *v = 0.0);
            for (q, &xi) in self.vol_pts.iter().enumerate() {
                let x = map.map(xi);
                let w = self.vol_w[q] * map.det();
                let bx = p.velocity.at(x);
                let g = self.physical_grads(&map, q);
                let bg: Vec<f64> = g.iter().map(|&gi| dot(bx, gi)).collect();
                let phi = &self.vol_phi[q];
                for j in 0..n {
                    for i in 0..n {
                        local[i * n + j] += w * (p.kappa * dot(g[j], g[i]) + react * phi[j] * phi[i] + stream * bg[j] * bg[i]);
                    }
                }
            }
            scatter(&mut out, self.dg.element_dofs(t), self.dg.element_dofs(t), &local);
        }
        for e in 0..self.skel.n_edges() {
            let d = self.edge_data(e);
            for test in &d.sides {
                for trial in &d.sides {
                    local.iter_mut().for_each(|v| *v = 0.0);
                    for q in 0..d.weights.len() {
                        let bn = dot(p.velocity.at(d.points[q]), d.normal);
                        let c = d.weights[q] * (p.kappa * d.eta + 0.5 * bn.abs()) * test.jump * trial.jump;
                        for j in 0..n {
                            for i in 0..n {
                                local[i * n + j] += c * trial.phi[q][j] * test.phi[q][i];
                            }
                        }
                    }
                    scatter(&mut out, self.dg.element_dofs(test.t), self.dg.element_dofs(trial.t), &local);
                }
            }
        }
        Ok(out.build())
    }

    /// Load vector `L[i] = l_h(phi_i)`.
    pub fn lh(&self) -> Vec<f64> {
        let p = self.prob;
        let mut out = vec![0.0; self.n_dofs()];
        if !p.source.is_zero() {
            for t in 0..self.mesh.n_triangles() {
                let map = AffineMap::new(self.mesh.coords(t));
                let dofs = self.dg.element_dofs(t);
                for (q, &xi) in self.vol_pts.iter().enumerate() {
                    let c = self.vol_w[q] * map.det() * p.source.at(map.map(xi));
                    for (i, &dof) in dofs.iter().enumerate() {
                        out[dof] += c * self.vol_phi[q][i];
                    }
                }
            }
        }
        if !p.dirichlet.is_zero() {
            for e in (0..self.skel.n_edges()).filter(|&e| !self.skel.edge(e).is_interior()) {
                let d = self.edge_data(e);
                let side = &d.sides[0];
                let dofs = self.dg.element_dofs(side.t);
                for q in 0..d.weights.len() {
                    let x = d.points[q];
                    let g = p.dirichlet.at(x);
                    let bn = dot(p.velocity.at(x), d.normal);
                    let mass = neg(bn) + p.kappa * d.eta;
                    for (i, &dof) in dofs.iter().enumerate() {
                        out[dof] += d.weights[q] * g * (p.epsilon() * p.kappa * side.dn[q][i] + mass * side.phi[q][i]);
                    }
                }
            }
        }
        out
    }

    fn check_len(&self, v: &[f64]) -> Result<(), AssemblyError> {
        if v.len() != self.n_dofs() {
            return Err(AssemblyError::Length(v.len(), self.n_dofs()));
        }
        Ok(())
    }

    /// Volume part of the local pairing on triangle `t`.
    fn volume_pairing(&self, t: usize, w: &[f64], v: &[f64]) -> f64 {
        let p = self.prob;
        let map = AffineMap::new(self.mesh.coords(t));
        let dofs = self.dg.element_dofs(t);
        let react = p.gamma + p.beta / p.domain_scale;
        let stream = p.beta_l() * self.mesh.diameter(t);
        let mut sum = 0.0;
        for (q, &xi) in self.vol_pts.iter().enumerate() {
            let (mut wv, mut vv) = (0.0, 0.0);
            let (mut wg, mut vg) = ([0.0; 2], [0.0; 2]);
            for (i, &dof) in dofs.iter().enumerate() {
                let phi = self.vol_phi[q][i];
                let g = map.grad(self.vol_grad[q][i]);
                wv += w[dof] * phi;
                vv += v[dof] * phi;
                wg = [wg[0] + w[dof] * g[0], wg[1] + w[dof] * g[1]];
                vg = [vg[0] + v[dof] * g[0], vg[1] + v[dof] * g[1]];
            }
            let bx = p.velocity.at(map.map(xi));
            let f = p.kappa * dot(wg, vg) + react * wv * vv + stream * dot(bx, wg) * dot(bx, vg);
            sum += self.vol_w[q] * map.det() * f;
        }
        sum
    }

    /// `S_e(w, v)`; on boundary edges the jump is the trace.
    fn edge_pairing(&self, e: usize, w: &[f64], v: &[f64]) -> f64 {
        let d = self.edge_data(e);
        let mut sum = 0.0;
        for q in 0..d.weights.len() {
            let (mut jw, mut jv) = (0.0, 0.0);
            for s in &d.sides {
                for (i, &dof) in self.dg.element_dofs(s.t).iter().enumerate() {
                    jw += s.jump * w[dof] * s.phi[q][i];
                    jv += s.jump * v[dof] * s.phi[q][i];
                }
            }
            let bn = dot(self.prob.velocity.at(d.points[q]), d.normal);
            sum += d.weights[q] * (self.prob.kappa * d.eta + 0.5 * bn.abs()) * jw * jv;
        }
        sum
    }

    /// Element-local pairing `(w, v)_T`: volume terms, boundary-edge terms in
    /// full and half of every interior-edge jump term.
    pub fn local_pairing(&self, w: &[f64], v: &[f64], t: usize) -> Result<f64, AssemblyError> {
        self.check_len(w)?;
        self.check_len(v)?;
        if t >= self.mesh.n_triangles() {
            return Err(MeshError::BadIndex(t).into());
        }
        let mut sum = self.volume_pairing(t, w, v);
        for e in self.skel.triangle_edges(t) {
            let s = self.edge_pairing(e, w, v);
            sum += if self.skel.edge(e).is_interior() { 0.5 * s } else { s };
        }
        Ok(sum)
    }

    /// `(w, v)_T` for every triangle, each edge evaluated once.
    pub fn local_pairings(&self, w: &[f64], v: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        self.check_len(w)?;
        self.check_len(v)?;
        let mut out: Vec<f64> = (0..self.mesh.n_triangles()).map(|t| self.volume_pairing(t, w, v)).collect();
        for (e, edge) in self.skel.edges().iter().enumerate() {
            let s = self.edge_pairing(e, w, v);
            match edge.right {
                None => out[edge.left] += s,
                Some((r, _)) => {
                    out[edge.left] += 0.5 * s;
                    out[r] += 0.5 * s;
                }
            }
        }
        Ok(out)
    }
}

fn scatter(out: &mut TripletBuilder, rows: &[usize], cols: &[usize], local: &[f64]) {
    let n = cols.len();
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let v = local[i * n + j];
            if v != 0.0 {
                out.push(r, c, v);
            }
        }
    }
}

pub fn assemble_bh(mesh: &Mesh, skel: &Skeleton, dg: &DofMap, prob: &ProblemDef) -> Result<SparseOperator, AssemblyError> {
    Ok(Assembler::new(mesh, skel, dg, prob)?.bh())
}

pub fn assemble_gram(mesh: &Mesh, skel: &Skeleton, dg: &DofMap, prob: &ProblemDef) -> Result<SparseOperator, AssemblyError> {
    Assembler::new(mesh, skel, dg, prob)?.gram()
}

pub fn assemble_lh(mesh: &Mesh, skel: &Skeleton, dg: &DofMap, prob: &ProblemDef) -> Result<Vec<f64>, AssemblyError> {
    Ok(Assembler::new(mesh, skel, dg, prob)?.lh())
}

pub fn local_pairing(
    mesh: &Mesh,
    skel: &Skeleton,
    dg: &DofMap,
    prob: &ProblemDef,
    w: &[f64],
    v: &[f64],
    t: usize,
) -> Result<f64, AssemblyError> {
    Assembler::new(mesh, skel, dg, prob)?.local_pairing(w, v, t)
}

/// `q[i]` = mean of basis function `i` over `omega0`, for any dof map on a
/// mesh whose tagged triangles tile `omega0`.
pub fn assemble_qoi(mesh: &Mesh, dofmap: &DofMap, omega0: Rect) -> Result<Vec<f64>, AssemblyError> {
    if !dofmap.is_built_on(mesh) {
        return Err(AssemblyError::MeshMismatch);
    }
    if mesh.region() != Some(omega0) || !mesh.is_region_conforming() {
        return Err(AssemblyError::NotRegionConforming(omega0));
    }
    let rule = triangle_rule(dofmap.degree())?;
    let el = dofmap.element();
    let mut ref_int = vec![0.0; el.n_basis()];
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        for (r, phi) in ref_int.iter_mut().zip(el.eval(*x)) {
            *r += w * phi;
        }
    }
    let scale = 1.0 / omega0.area();
    let mut q = vec![0.0; dofmap.n_dofs()];
    for t in (0..mesh.n_triangles()).filter(|&t| mesh.in_region(t)) {
        let det = 2.0 * mesh.area(t);
        for (&dof, r) in dofmap.element_dofs(t).iter().zip(&ref_int) {
            q[dof] += scale * det * r;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_space;
    use crate::problem::{ScalarField, Symmetry, VectorField};
    use crate::sparse::dot as vdot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const R0: Rect = Rect::new(0.7, 0.8, 0.3, 0.5);

    fn two() -> Mesh {
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![[0, 1, 2], [0, 2, 3]], None).unwrap()
    }

    fn diffusion(sym: Symmetry) -> ProblemDef {
        ProblemDef::new(1.0, VectorField::Constant([0.0, 0.0]), 0.0, R0).with_symmetry(sym)
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Hand sum of `eta_e |e|` over boundary edges.
    fn boundary_penalty(m: &Mesh, s: &Skeleton, pt: usize) -> f64 {
        (0..s.n_edges()).filter(|&e| !s.edge(e).is_interior()).map(|e| eta_e(m, s, e, pt).unwrap() * s.edge(e).length).sum()
    }

    #[test]
    fn constant_diffusion_sees_only_boundary_penalty() {
        let m = two();
        let s = Skeleton::new(&m).unwrap();
        for pt in 1..=3 {
            let dg = build_space(&m, pt, Continuity::Broken).unwrap();
            let prob = diffusion(Symmetry::Sip);
            let one = vec![1.0; dg.n_dofs()];
            let expect = boundary_penalty(&m, &s, pt);
            let b = assemble_bh(&m, &s, &dg, &prob).unwrap();
            let g = assemble_gram(&m, &s, &dg, &prob).unwrap();
            assert!((b.bilinear(&one, &one) - expect).abs() <= 1e-11 * expect);
            assert!((g.bilinear(&one, &one) - expect).abs() <= 1e-11 * expect);
        }
    }

    #[test]
    fn pure_advection_constant_sees_inflow_length() {
        let m = Mesh::unit_square(1, R0).unwrap();
        let s = Skeleton::new(&m).unwrap();
        let dg = build_space(&m, 1, Continuity::Broken).unwrap();
        let prob = ProblemDef::new(0.0, VectorField::Constant([1.0, 0.0]), 0.0, R0);
        let b = assemble_bh(&m, &s, &dg, &prob).unwrap();
        let one = vec![1.0; dg.n_dofs()];
        assert!((b.bilinear(&one, &one) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn nip_energy_identity_and_sip_coercivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mesh::cross();
        let s = Skeleton::new(&m).unwrap();
        for pt in [1, 2] {
            let dg = build_space(&m, pt, Continuity::Broken).unwrap();
            let g = assemble_gram(&m, &s, &dg, &diffusion(Symmetry::Sip)).unwrap();
            let nip = assemble_bh(&m, &s, &dg, &diffusion(Symmetry::Nip)).unwrap();
            let sip = assemble_bh(&m, &s, &dg, &diffusion(Symmetry::Sip)).unwrap();
            assert!(sip.asymmetry() <= 1e-12 * sip.max_abs());
            for _ in 0..20 {
                let v = random(dg.n_dofs(), &mut rng);
                let norm = g.bilinear(&v, &v);
                assert!((nip.bilinear(&v, &v) - norm).abs() <= 1e-11 * norm);
                assert!(sip.bilinear(&v, &v) >= 0.5 * norm);
            }
        }
    }

    #[test]
    fn upwind_part_is_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = Mesh::unit_square(1, R0).unwrap();
        let s = Skeleton::new(&m).unwrap();
        let dg = build_space(&m, 2, Continuity::Broken).unwrap();
        let prob = ProblemDef::new(0.0, VectorField::Constant([3.0, 1.0]), 0.0, R0);
        let b = assemble_bh(&m, &s, &dg, &prob).unwrap();
        for _ in 0..50 {
            let v = random(dg.n_dofs(), &mut rng);
            assert!(b.bilinear(&v, &v) >= -1e-12 * b.max_abs());
        }
    }

    #[test]
    fn gram_symmetric_and_degenerate_rejected() {
        let m = Mesh::unit_square(1, R0).unwrap();
        let s = Skeleton::new(&m).unwrap();
        let dg = build_space(&m, 2, Continuity::Broken).unwrap();
        let prob = ProblemDef::new(0.3, VectorField::variable(|x| [1.0 + x[1], -x[0]]), 2.0, R0).with_beta(2.0);
        let g = assemble_gram(&m, &s, &dg, &prob).unwrap();
        assert!(g.asymmetry() <= 1e-12 * g.max_abs());
        let none = ProblemDef::new(0.0, VectorField::Constant([0.0, 0.0]), 0.0, R0);
        assert_eq!(assemble_gram(&m, &s, &dg, &none), Err(AssemblyError::DegenerateNorm));
    }

    #[test]
    fn streamline_term_vanishes_without_advection() {
        let m = two();
        let s = Skeleton::new(&m).unwrap();
        let dg = build_space(&m, 2, Continuity::Broken).unwrap();
        let a = ProblemDef::new(1.0, VectorField::Constant([0.0, 0.0]), 1.0, R0);
        let g = assemble_gram(&m, &s, &dg, &a).unwrap();
        // same matrix when beta_l is nonzero but b = 0 pointwise
        let b = a.clone().with_beta(0.0);
        assert_eq!(g, assemble_gram(&m, &s, &dg, &b).unwrap());
        assert_eq!(a.beta_l(), 0.0);
    }

    #[test]
    fn load_vector_examples() {
        let m = Mesh::cross();
        let s = Skeleton::new(&m).unwrap();
        let dg = build_space(&m, 1, Continuity::Broken).unwrap();
        let prob = diffusion(Symmetry::Sip).with_source(ScalarField::Constant(1.0));
        let l = assemble_lh(&m, &s, &dg, &prob).unwrap();
        assert!((l.iter().sum::<f64>() - 12.0).abs() <= 1e-10);
        let zero = assemble_lh(&m, &s, &dg, &diffusion(Symmetry::Sip)).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn inflow_load_support() {
        let m = Mesh::unit_square(1, R0).unwrap();
        let s = Skeleton::new(&m).unwrap();
        let dg = build_space(&m, 1, Continuity::Broken).unwrap();
        let u = |x: [f64; 2]| 2.0 + (10.0 * (x[1] - x[0] / 3.0 - 0.25)).tanh() + (1000.0 * (x[1] - x[0] / 3.0 - 0.75)).tanh();
        let prob = ProblemDef::new(0.0, VectorField::Constant([3.0, 1.0]), 0.0, R0).with_dirichlet(ScalarField::variable(u));
        let l = assemble_lh(&m, &s, &dg, &prob).unwrap();
        let mut inflow = vec![false; dg.n_dofs()];
        for edge in s.edges().iter().filter(|e| !e.is_interior()) {
            let a = m.vertex(edge.vertices[0]);
            let b = m.vertex(edge.vertices[1]);
            if (a[0] == 0.0 && b[0] == 0.0) || (a[1] == 0.0 && b[1] == 0.0) {
                for (i, &d) in dg.element_dofs(edge.left).iter().enumerate() {
                    // the vertex opposite the edge has a vanishing trace
                    if i != edge.left_local {
                        inflow[d] = true;
                    }
                }
            }
        }
        assert!(l.iter().any(|&v| v != 0.0));
        for (d, &v) in l.iter().enumerate() {
            assert_eq!(v != 0.0, inflow[d], "dof {d}: {v}");
        }
    }

    #[test]
    fn qoi_examples() {
        let m = Mesh::cross();
        let r = m.region().unwrap();
        for (deg, cont) in [(1, Continuity::Continuous), (2, Continuity::Broken), (3, Continuity::Continuous)] {
            let space = build_space(&m, deg, cont).unwrap();
            let q = assemble_qoi(&m, &space, r).unwrap();
            assert!((vdot(&q, &space.interpolate(&m, |_| 1.0)) - 1.0).abs() <= 1e-12);
            assert!((vdot(&q, &space.interpolate(&m, |x| x[0])) - 1.3).abs() <= 1e-12);
            assert_eq!(vdot(&q, &vec![0.0; space.n_dofs()]), 0.0);
        }
        let space = build_space(&m, 1, Continuity::Broken).unwrap();
        let other = Rect::new(1.25, 1.4, 0.2, 0.4);
        assert_eq!(assemble_qoi(&m, &space, other), Err(AssemblyError::NotRegionConforming(other)));
    }

    #[test]
    fn localization_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = crate::mesh::bisect(&Mesh::unit_square(1, R0).unwrap(), &[0, 40, 100]).unwrap();
        let s = Skeleton::new(&m).unwrap();
        let dg = build_space(&m, 2, Continuity::Broken).unwrap();
        let prob = ProblemDef::new(0.5, VectorField::Constant([3.0, 1.0]), 10.0, R0);
        let asm = Assembler::new(&m, &s, &dg, &prob).unwrap();
        let g = asm.gram().unwrap();
        for _ in 0..10 {
            let w = random(dg.n_dofs(), &mut rng);
            let v = random(dg.n_dofs(), &mut rng);
            let local = asm.local_pairings(&w, &v).unwrap();
            let total = g.bilinear(&w, &v);
            let scale = g.bilinear(&w, &w).sqrt() * g.bilinear(&v, &v).sqrt();
            assert!((local.iter().sum::<f64>() - total).abs() <= 1e-11 * scale);
            assert!(asm.local_pairings(&w, &w).unwrap().iter().all(|&x| x >= 0.0));
            let t = rng.gen_range(0..m.n_triangles());
            assert!((asm.local_pairing(&w, &v, t).unwrap() - local[t]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn continuous_function_has_no_interior_jump_terms() {
        // Hand-built 2-element mesh: for a globally linear function only the
        // volume and boundary-trace terms survive.
        let m = two();
        let s = Skeleton::new(&m).unwrap();
        let dg = build_space(&m, 1, Continuity::Broken).unwrap();
        let prob = diffusion(Symmetry::Sip);
        let asm = Assembler::new(&m, &s, &dg, &prob).unwrap();
        let w = dg.interpolate(&m, |x| 1.0 + x[0] - 2.0 * x[1]);
        let interior = (0..s.n_edges()).find(|&e| s.edge(e).is_interior()).unwrap();
        assert!(asm.edge_pairing(interior, &w, &w).abs() <= 1e-14);
        for t in 0..2 {
            let mut expect = asm.volume_pairing(t, &w, &w);
            for e in s.triangle_edges(t) {
                if !s.edge(e).is_interior() {
                    expect += asm.edge_pairing(e, &w, &w);
                }
            }
            assert!((asm.local_pairing(&w, &w, t).unwrap() - expect).abs() <= 1e-13);
        }
    }

    #[test]
    fn shape_errors() {
        let m = two();
        let s = Skeleton::new(&m).unwrap();
        let cg = build_space(&m, 1, Continuity::Continuous).unwrap();
        let prob = diffusion(Symmetry::Sip);
        assert!(matches!(Assembler::new(&m, &s, &cg, &prob), Err(AssemblyError::NotBroken)));
        let dg = build_space(&m, 1, Continuity::Broken).unwrap();
        let asm = Assembler::new(&m, &s, &dg, &prob).unwrap();
        assert_eq!(asm.local_pairings(&[1.0], &[1.0]), Err(AssemblyError::Length(1, 6)));
    }
}
