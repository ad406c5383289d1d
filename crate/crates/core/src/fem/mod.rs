//! Lagrange spaces on triangles: reference elements, quadrature, dof maps
//! and the embedding of the continuous trial space into the broken test
//! space.

mod dofmap;
mod lagrange;
mod quadrature;

pub use dofmap::{build_space, embedding_matrix, Continuity, DofMap};
pub use lagrange::{n_local, LagrangeElement, MAX_DEGREE};
pub use quadrature::{edge_rule, triangle_rule, QuadratureRule, MAX_EXACTNESS};

use thiserror::Error;

use crate::mesh::MeshError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("polynomial degree {0} outside 1..={max}", max = MAX_DEGREE)]
    Degree(usize),
    #[error("no quadrature rule of exactness {0} (maximum {max})", max = MAX_EXACTNESS)]
    QuadratureTooHigh(usize),
    #[error("dof maps were built on different meshes")]
    MeshMismatch,
    #[error("embedding target must be a broken space")]
    NotBroken,
    #[error("trial degree {0} exceeds test degree {1}")]
    DegreeOrder(usize, usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Affine map from the reference triangle onto a physical triangle.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    origin: [f64; 2],
    jac: [[f64; 2]; 2],
    det: f64,
}

impl AffineMap {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        AffineMap { origin: p[0], jac, det }
    }

    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn inverse(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            (self.jac[1][1] * d[0] - self.jac[0][1] * d[1]) / self.det,
            (-self.jac[1][0] * d[0] + self.jac[0][0] * d[1]) / self.det,
        ]
    }

    /// Jacobian determinant, twice the physical area.
    pub fn det(&self) -> f64 {
        self.det
    }

    /// Maps a reference gradient to a physical one: `J^{-T} g`.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            (self.jac[1][1] * g[0] - self.jac[1][0] * g[1]) / self.det,
            (-self.jac[0][1] * g[0] + self.jac[0][0] * g[1]) / self.det,
        ]
    }
}
