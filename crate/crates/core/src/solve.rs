//! Sparse direct solves: the residual-minimization saddle system (one LU,
//! primal and adjoint right-hand sides), the square dG system and its
//! transpose, and Cholesky solves with the Gram matrix.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Mat, Side};
use thiserror::Error;

use crate::sparse::{SparseOperator, TripletBuilder};

/// Backward-error tolerance every reported solve must meet.
pub const RESIDUAL_TOL: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("solution is not finite")]
    NotFinite,
    #[error("relative residual {1:e} of {0} exceeds {RESIDUAL_TOL:e}")]
    Residual(&'static str, f64),
    #[error("dimension mismatch: expected {0}, got {1}")]
    Dimension(usize, usize),
}

/// `max |A x - b| / max(|A| |x| + |b|)`: componentwise scaled so that exact
/// zero right-hand sides do not divide by zero.
pub fn relative_residual(a: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let scale = a.abs_matvec(x).iter().zip(b).map(|(s, bi)| s + bi.abs()).fold(0.0, f64::max);
    let r = ax.iter().zip(b).map(|(y, bi)| (y - bi).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

fn to_mat(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn from_mat(m: &Mat<f64>) -> Result<Vec<f64>, SolveError> {
    let v: Vec<f64> = (0..m.nrows()).map(|i| m[(i, 0)]).collect();
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(SolveError::NotFinite)
    }
}

/// LU factorization of a square sparse operator with iterative refinement.
pub struct LuSolver {
    a: SparseOperator,
    at: SparseOperator,
    lu: Lu<usize, f64>,
}

impl LuSolver {
    pub fn new(a: &SparseOperator) -> Result<Self, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::Dimension(a.nrows(), a.ncols()));
        }
        let lu = a.to_faer().sp_lu().map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        Ok(LuSolver { a: a.clone(), at: a.transpose(), lu })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn raw(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>, SolveError> {
        let mut m = to_mat(b);
        if transpose {
            self.lu.solve_transpose_in_place(m.as_mut());
        } else {
            self.lu.solve_in_place(m.as_mut());
        }
        from_mat(&m)
    }

    /// Solves `A x = b` (or `A^T x = b`) and returns `x` with its relative
    /// residual after up to three refinement steps.
    pub fn solve_refined(&self, b: &[f64], transpose: bool) -> Result<(Vec<f64>, f64), SolveError> {
        if b.len() != self.dim() {
            return Err(SolveError::Dimension(self.dim(), b.len()));
        }
        let op = if transpose { &self.at } else { &self.a };
        let mut x = self.raw(b, transpose)?;
        let mut res = relative_residual(op, &x, b);
        for _ in 0..REFINEMENT_STEPS {
            if res <= 1e-15 {
                break;
            }
            let r: Vec<f64> = b.iter().zip(op.matvec(&x)).map(|(bi, ai)| bi - ai).collect();
            let d = self.raw(&r, transpose)?;
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
            let cres = relative_residual(op, &cand, b);
            if cres >= res {
                break;
            }
            x = cand;
            res = cres;
        }
        Ok((x, res))
    }
}

/// Residuals and timings of one saddle-point solve. Residuals are recomputed
/// from the original blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Relative residual of the first block row `G e + BC u = rhs_V`.
    pub block_v: f64,
    /// Relative residual of the second block row `(BC)^T e = rhs_U`.
    pub block_u: f64,
    pub factorizations: usize,
    pub solve_ms: f64,
}

/// `K = [[G, BC], [(BC)^T, 0]]` factorized once and reused for the primal and
/// adjoint right-hand sides.
pub struct SaddleSystem {
    g: SparseOperator,
    bc: SparseOperator,
    bct: SparseOperator,
    solver: LuSolver,
    factorizations: usize,
    factor_ms: f64,
}

/// Solution of a saddle solve: `v` lives in the test space, `u` in the trial
/// space.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub report: SolveReport,
}

impl SaddleSystem {
    pub fn new(g: &SparseOperator, b: &SparseOperator, c: &SparseOperator) -> Result<Self, SolveError> {
        let nv = g.nrows();
        if g.ncols() != nv || b.nrows() != nv || b.ncols() != nv {
            return Err(SolveError::Dimension(nv, b.nrows()));
        }
        if c.nrows() != nv {
            return Err(SolveError::Dimension(nv, c.nrows()));
        }
        let nu = c.ncols();
        let bc = b.matmul(c);
        let bct = bc.transpose();
        let mut k = TripletBuilder::with_capacity(nv + nu, nv + nu, g.nnz() + 2 * bc.nnz());
        for (i, j, v) in g.triplets() {
            k.push(i, j, v);
        }
        for (i, j, v) in bc.triplets() {
            k.push(i, nv + j, v);
            k.push(nv + j, i, v);
        }
        let start = Instant::now();
        let solver = LuSolver::new(&k.build())?;
        Ok(SaddleSystem {
            g: g.clone(),
            bc,
            bct,
            solver,
            factorizations: 1,
            factor_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn n_v(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.bc.ncols()
    }

    /// Number of numeric factorizations performed on this system.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    pub fn factor_ms(&self) -> f64 {
        self.factor_ms
    }

    pub fn bc(&self) -> &SparseOperator {
        &self.bc
    }

    fn solve(&self, rhs_v: &[f64], rhs_u: &[f64]) -> Result<SaddleSolution, SolveError> {
        let (nv, nu) = (self.n_v(), self.n_u());
        if rhs_v.len() != nv {
            return Err(SolveError::Dimension(nv, rhs_v.len()));
        }
        if rhs_u.len() != nu {
            return Err(SolveError::Dimension(nu, rhs_u.len()));
        }
        let start = Instant::now();
        let rhs: Vec<f64> = rhs_v.iter().chain(rhs_u).copied().collect();
        let (x, _) = self.solver.solve_refined(&rhs, false)?;
        let (v, u) = (x[..nv].to_vec(), x[nv..].to_vec());

        let gv = self.g.matvec(&v);
        let bcu = self.bc.matvec(&u);
        let scale_v = self
            .g
            .abs_matvec(&v)
            .iter()
            .zip(self.bc.abs_matvec(&u))
            .zip(rhs_v)
            .map(|((a, b), r)| a + b + r.abs())
            .fold(0.0, f64::max);
        let r_v = gv.iter().zip(&bcu).zip(rhs_v).map(|((a, b), r)| (a + b - r).abs()).fold(0.0, f64::max);
        let bctv = self.bct.matvec(&v);
        let scale_u = self.bct.abs_matvec(&v).iter().zip(rhs_u).map(|(a, r)| a + r.abs()).fold(0.0, f64::max);
        let r_u = bctv.iter().zip(rhs_u).map(|(a, r)| (a - r).abs()).fold(0.0, f64::max);
        let rel = |r: f64, s: f64| if s == 0.0 { r } else { r / s };
        let report = SolveReport {
            block_v: rel(r_v, scale_v),
            block_u: rel(r_u, scale_u),
            factorizations: self.factorizations(),
            solve_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        if report.block_v > RESIDUAL_TOL {
            return Err(SolveError::Residual("first block row", report.block_v));
        }
        if report.block_u > RESIDUAL_TOL {
            return Err(SolveError::Residual("second block row", report.block_u));
        }
        Ok(SaddleSolution { v, u, report })
    }

    /// `G e + BC u = l`, `(BC)^T e = 0`; returns `(e, u)` as `(v, u)`.
    pub fn solve_primal(&self, l: &[f64]) -> Result<SaddleSolution, SolveError> {
        self.solve(l, &vec![0.0; self.n_u()])
    }

    /// `G v + BC w = 0`, `(BC)^T v = q_U`; returns `(v*, w*)` as `(v, u)`.
    pub fn solve_adjoint(&self, q_u: &[f64]) -> Result<SaddleSolution, SolveError> {
        self.solve(&vec![0.0; self.n_v()], q_u)
    }
}

/// One LU of the square dG operator, used for both `B x = L` and
/// `B^T x = q`.
pub struct DgSolver {
    solver: LuSolver,
}

impl DgSolver {
    pub fn new(b: &SparseOperator) -> Result<Self, SolveError> {
        Ok(DgSolver { solver: LuSolver::new(b)? })
    }

    fn checked(&self, rhs: &[f64], transpose: bool, what: &'static str) -> Result<Vec<f64>, SolveError> {
        let (x, res) = self.solver.solve_refined(rhs, transpose)?;
        if res > RESIDUAL_TOL {
            return Err(SolveError::Residual(what, res));
        }
        Ok(x)
    }

    pub fn solve(&self, l: &[f64]) -> Result<Vec<f64>, SolveError> {
        self.checked(l, false, "dG system")
    }

    pub fn solve_transpose(&self, q: &[f64]) -> Result<Vec<f64>, SolveError> {
        self.checked(q, true, "transposed dG system")
    }
}

/// Sparse Cholesky factorization of the Gram matrix.
pub struct GramSolver {
    g: SparseOperator,
    llt: Llt<usize, f64>,
}

impl GramSolver {
    pub fn new(g: &SparseOperator) -> Result<Self, SolveError> {
        if g.nrows() != g.ncols() {
            return Err(SolveError::Dimension(g.nrows(), g.ncols()));
        }
        let llt = g.to_faer().sp_cholesky(Side::Lower).map_err(|e| SolveError::NotSpd(format!("{e:?}")))?;
        Ok(GramSolver { g: g.clone(), llt })
    }

    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>, SolveError> {
        if r.len() != self.g.nrows() {
            return Err(SolveError::Dimension(self.g.nrows(), r.len()));
        }
        let mut m = to_mat(r);
        self.llt.solve_in_place(m.as_mut());
        let mut x = from_mat(&m)?;
        let mut res = relative_residual(&self.g, &x, r);
        for _ in 0..REFINEMENT_STEPS {
            if res <= 1e-15 {
                break;
            }
            let d: Vec<f64> = r.iter().zip(self.g.matvec(&x)).map(|(a, b)| a - b).collect();
            let mut m = to_mat(&d);
            self.llt.solve_in_place(m.as_mut());
            let cand: Vec<f64> = x.iter().zip(from_mat(&m)?).map(|(a, b)| a + b).collect();
            let cres = relative_residual(&self.g, &cand, r);
            if cres >= res {
                break;
            }
            x = cand;
            res = cres;
        }
        if res > 0.1 * RESIDUAL_TOL {
            return Err(SolveError::Residual("Gram system", res));
        }
        Ok(x)
    }
}

pub fn solve_dg_primal(b: &SparseOperator, l: &[f64]) -> Result<Vec<f64>, SolveError> {
    DgSolver::new(b)?.solve(l)
}

pub fn solve_dg_adjoint(b: &SparseOperator, q_v: &[f64]) -> Result<Vec<f64>, SolveError> {
    DgSolver::new(b)?.solve_transpose(q_v)
}

pub fn solve_gram(g: &SparseOperator, r: &[f64]) -> Result<Vec<f64>, SolveError> {
    GramSolver::new(g)?.solve(r)
}

/// Dual norm `sqrt(r^T G^{-1} r)` of a test-space functional.
pub fn dual_norm(gram: &GramSolver, r: &[f64]) -> Result<f64, SolveError> {
    let x = gram.solve(r)?;
    Ok(crate::sparse::dot(&x, r).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spd(n: usize, rng: &mut ChaCha8Rng) -> SparseOperator {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 4.0 + rng.gen::<f64>());
            if i + 1 < n {
                let v = rng.gen_range(-1.0..1.0);
                b.push(i, i + 1, v);
                b.push(i + 1, i, v);
            }
        }
        b.build()
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn gram_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = spd(40, &mut rng);
        assert_eq!(solve_gram(&g, &vec![0.0; 40]).unwrap(), vec![0.0; 40]);
        let y = random(40, &mut rng);
        let x = solve_gram(&g, &g.matvec(&y)).unwrap();
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() <= 1e-10));
        let mut bad = TripletBuilder::new(2, 2);
        bad.push(0, 0, 1.0);
        bad.push(1, 1, -1.0);
        assert!(matches!(GramSolver::new(&bad.build()), Err(SolveError::NotSpd(_))));
    }

    #[test]
    fn saddle_blocks_and_single_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (nv, nu) = (30, 10);
        let g = spd(nv, &mut rng);
        let mut b = TripletBuilder::new(nv, nv);
        for i in 0..nv {
            b.push(i, i, 2.0);
            b.push(i, (i + 3) % nv, rng.gen_range(-0.5..0.5));
        }
        let b = b.build();
        let mut c = TripletBuilder::new(nv, nu);
        for j in 0..nu {
            c.push(3 * j, j, 1.0);
            c.push(3 * j + 1, j, 0.5);
        }
        let c = c.build();
        let sys = SaddleSystem::new(&g, &b, &c).unwrap();
        let zero = sys.solve_primal(&vec![0.0; nv]).unwrap();
        assert!(zero.v.iter().chain(&zero.u).all(|&x| x == 0.0));
        let l = random(nv, &mut rng);
        let p = sys.solve_primal(&l).unwrap();
        assert!(p.report.block_v <= RESIDUAL_TOL && p.report.block_u <= RESIDUAL_TOL);
        // energy identity: e^T G e = e^T l
        let eg = g.bilinear(&p.v, &p.v);
        assert!((eg - dot(&p.v, &l)).abs() <= 1e-10 * eg);
        let q = random(nu, &mut rng);
        let a = sys.solve_adjoint(&q).unwrap();
        let t = g.bilinear(&a.v, &a.v) + dot(&a.v, &sys.bc().matvec(&a.u));
        assert!(t.abs() <= 1e-10 * g.bilinear(&a.v, &a.v));
        assert_eq!(sys.factorizations(), 1);
    }

    #[test]
    fn dg_solver_and_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 25;
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 3.0);
            b.push(i, (i + 1) % n, 1.0);
            b.push((i + 2) % n, i, -0.7);
        }
        let b = b.build();
        let l = random(n, &mut rng);
        let x = solve_dg_primal(&b, &l).unwrap();
        assert!(relative_residual(&b, &x, &l) <= 1e-12);
        let y = solve_dg_adjoint(&b, &l).unwrap();
        assert!(relative_residual(&b.transpose(), &y, &l) <= 1e-12);
        assert_eq!(solve_dg_primal(&b, &vec![0.0; n]).unwrap(), vec![0.0; n]);
        let mut sing = TripletBuilder::new(2, 2);
        sing.push(0, 0, 1.0);
        sing.push(0, 1, 1.0);
        assert!(solve_dg_primal(&sing.build(), &[1.0, 1.0]).is_err());
    }
}
