//! Equispaced Lagrange elements on the reference triangle, built from
//! Silvester's barycentric products.
//!
//! Node order: the three vertices, then the interior nodes of local edge 0
//! (vertex 1 to vertex 2), edge 1 (2 to 0), edge 2 (0 to 1), then the
//! element-interior nodes. Barycentrics are `l0 = 1 - x - y`, `l1 = x`,
//! `l2 = y`.

use super::BasisError;

pub const MAX_DEGREE: usize = 4;

const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeElement {
    degree: usize,
    /// Barycentric multi-indices `(a0, a1, a2)` with `a0 + a1 + a2 = degree`.
    indices: Vec<[usize; 3]>,
    nodes: Vec<[f64; 2]>,
}

/// Number of basis functions of the degree-`p` space on a triangle.
pub fn n_local(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

impl LagrangeElement {
    pub fn new(degree: usize) -> Result<Self, BasisError> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(BasisError::Degree(degree));
        }
        let p = degree;
        let mut indices = vec![[p, 0, 0], [0, p, 0], [0, 0, p]];
        for k in 1..p {
            indices.push([0, p - k, k]);
        }
        for k in 1..p {
            indices.push([k, 0, p - k]);
        }
        for k in 1..p {
            indices.push([p - k, k, 0]);
        }
        for a1 in 1..p {
            for a2 in 1..p {
                if a1 + a2 < p {
                    indices.push([p - a1 - a2, a1, a2]);
                }
            }
        }
        let nodes = indices.iter().map(|a| [a[1] as f64 / p as f64, a[2] as f64 / p as f64]).collect();
        Ok(LagrangeElement { degree, indices, nodes })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_basis(&self) -> usize {
        self.indices.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Local node indices lying strictly inside local edge `i`, ordered
    /// from local vertex `i + 1` to `i + 2`.
    pub fn edge_nodes(&self, i: usize) -> std::ops::Range<usize> {
        let start = 3 + i * (self.degree - 1);
        start..start + self.degree - 1
    }

    pub fn interior_nodes(&self) -> std::ops::Range<usize> {
        3 + 3 * (self.degree - 1)..self.n_basis()
    }

    /// `R_a(l) = prod_{m < a} (p l - m) / (m + 1)` and its derivative.
    fn silvester(&self, a: usize, l: f64) -> (f64, f64) {
        let p = self.degree as f64;
        let mut val = 1.0;
        let mut der = 0.0;
        for m in 0..a {
            let f = (p * l - m as f64) / (m + 1) as f64;
            der = der * f + val * p / (m + 1) as f64;
            val *= f;
        }
        (val, der)
    }

    fn tables(&self, x: [f64; 2]) -> [[(f64, f64); MAX_DEGREE + 1]; 3] {
        let lam = [1.0 - x[0] - x[1], x[0], x[1]];
        let mut r = [[(0.0, 0.0); MAX_DEGREE + 1]; 3];
        for (row, &l) in r.iter_mut().zip(&lam) {
            for (a, slot) in row.iter_mut().enumerate().take(self.degree + 1) {
                *slot = self.silvester(a, l);
            }
        }
        r
    }

    /// Values of every basis function at reference point `x`.
    pub fn eval(&self, x: [f64; 2]) -> Vec<f64> {
        let r = self.tables(x);
        self.indices.iter().map(|a| r[0][a[0]].0 * r[1][a[1]].0 * r[2][a[2]].0).collect()
    }

    /// Reference gradients of every basis function at `x`.
    pub fn grad(&self, x: [f64; 2]) -> Vec<[f64; 2]> {
        let r = self.tables(x);
        self.indices
            .iter()
            .map(|a| {
                let v = [r[0][a[0]], r[1][a[1]], r[2][a[2]]];
                let mut g = [0.0; 2];
                for k in 0..3 {
                    let d = v[k].1 * v[(k + 1) % 3].0 * v[(k + 2) % 3].0;
                    g[0] += d * BARY_GRAD[k][0];
                    g[1] += d * BARY_GRAD[k][1];
                }
                g
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_points() -> Vec<[f64; 2]> {
        vec![[0.1, 0.2], [0.0, 0.0], [0.33, 0.33], [0.9, 0.05], [0.5, 0.5], [0.0, 0.7]]
    }

    #[test]
    fn degrees_out_of_range() {
        assert_eq!(LagrangeElement::new(0), Err(BasisError::Degree(0)));
        assert_eq!(LagrangeElement::new(5), Err(BasisError::Degree(5)));
    }

    #[test]
    fn partition_of_unity_and_zero_gradient_sum() {
        for p in 1..=MAX_DEGREE {
            let e = LagrangeElement::new(p).unwrap();
            assert_eq!(e.n_basis(), n_local(p));
            for x in sample_points() {
                assert!((e.eval(x).iter().sum::<f64>() - 1.0).abs() <= 1e-13);
                let g = e.grad(x).iter().fold([0.0, 0.0], |s, g| [s[0] + g[0], s[1] + g[1]]);
                assert!(g[0].abs() <= 1e-11 && g[1].abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn kronecker_property() {
        for p in 1..=MAX_DEGREE {
            let e = LagrangeElement::new(p).unwrap();
            for (j, &node) in e.nodes().iter().enumerate() {
                for (i, v) in e.eval(node).into_iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() <= 1e-13, "p={p} phi_{i}(node_{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        for p in 1..=MAX_DEGREE {
            let e = LagrangeElement::new(p).unwrap();
            for x in sample_points() {
                let g = e.grad(x);
                let fx = e.eval([x[0] + h, x[1]]);
                let bx = e.eval([x[0] - h, x[1]]);
                let fy = e.eval([x[0], x[1] + h]);
                let by = e.eval([x[0], x[1] - h]);
                for i in 0..e.n_basis() {
                    assert!((g[i][0] - (fx[i] - bx[i]) / (2.0 * h)).abs() <= 1e-6);
                    assert!((g[i][1] - (fy[i] - by[i]) / (2.0 * h)).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn reproduces_polynomials_of_its_degree() {
        for p in 1..=MAX_DEGREE {
            let e = LagrangeElement::new(p).unwrap();
            let f = |x: [f64; 2]| (x[0] + 2.0 * x[1] - 0.3).powi(p as i32) + x[1];
            let coeffs: Vec<f64> = e.nodes().iter().map(|&n| f(n)).collect();
            for x in sample_points() {
                let v: f64 = e.eval(x).iter().zip(&coeffs).map(|(a, b)| a * b).sum();
                assert!((v - f(x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn edge_nodes_lie_on_their_edge_in_order() {
        let e = LagrangeElement::new(4).unwrap();
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for i in 0..3 {
            let (a, b) = (verts[(i + 1) % 3], verts[(i + 2) % 3]);
            for (k, n) in e.edge_nodes(i).enumerate() {
                let t = (k + 1) as f64 / 4.0;
                let expect = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                assert!((e.nodes()[n][0] - expect[0]).abs() < 1e-15 && (e.nodes()[n][1] - expect[1]).abs() < 1e-15);
            }
        }
        assert_eq!(e.interior_nodes().len(), 3);
    }
}
