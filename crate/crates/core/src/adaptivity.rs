//! Dörfler marking and the solve, estimate, mark, refine loop.

use std::time::Instant;

use thiserror::Error;

use crate::assembly::{assemble_qoi, Assembler, AssemblyError};
use crate::estimators::{adjoint_residual, element_indicators, EstimatorError, EstimatorKind, IndicatorField, IndicatorScaling};
use crate::fem::{build_space, embedding_matrix, BasisError, Continuity};
use crate::history::ConvergenceRecord;
use crate::mesh::{refine, Mesh, MeshError, Skeleton, SplitRule};
use crate::problem::ProblemDef;
use crate::solve::{DgSolver, GramSolver, SaddleSystem, SolveError};
use crate::sparse::{dot, sub};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdaptError {
    #[error("theta must lie in (0, 1], got {0}")]
    Theta(f64),
    #[error("nothing to mark: all indicators are zero")]
    NothingToMark,
    #[error("indicator {0} is not a finite nonnegative number")]
    BadIndicator(usize),
    #[error("trial degree must be at least 1 and the degree increment 0 or 1 (got p = {0}, dp = {1})")]
    Degrees(usize, usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkSet {
    /// Marked elements in descending indicator order.
    pub elements: Vec<usize>,
    pub theta: f64,
    /// Fraction of the indicator total covered by the marked elements.
    pub covered: f64,
}

/// Marks the shortest prefix of the indicators sorted in descending order
/// (ties broken by ascending index) whose sum reaches `theta` times the
/// total. The element that crosses the threshold is included.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Result<MarkSet, AdaptError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(AdaptError::Theta(theta));
    }
    if let Some(i) = indicators.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(AdaptError::BadIndicator(i));
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    // summing in sorted order makes the full prefix equal the total exactly
    let total: f64 = order.iter().map(|&i| indicators[i]).sum();
    if total <= 0.0 {
        return Err(AdaptError::NothingToMark);
    }
    let goal = theta * total;
    let mut sum = 0.0;
    let mut elements = Vec::new();
    for &i in &order {
        sum += indicators[i];
        elements.push(i);
        if sum >= goal {
            break;
        }
    }
    Ok(MarkSet { elements, theta, covered: sum / total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOptions {
    pub kind: EstimatorKind,
    pub p: usize,
    pub dp: usize,
    pub theta: f64,
    pub max_levels: usize,
    /// Stop before solving a level whose total dof count exceeds this.
    pub ndof_cap: usize,
    pub scaling: IndicatorScaling,
    pub split: SplitRule,
    /// Always compute the adjoint residual when the test space has at most
    /// this many dofs, so the efficiency diagnostics are available.
    pub diagnostics_limit: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            kind: EstimatorKind::GoaAdjointResidual,
            p: 1,
            dp: 0,
            theta: 0.2,
            max_levels: 14,
            ndof_cap: 2_000_000,
            scaling: IndicatorScaling::Standard,
            split: SplitRule::Full,
            diagnostics_limit: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    MaxLevels,
    NdofCap,
    EstimatorExhausted,
    Failed(AdaptError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub history: Vec<ConvergenceRecord>,
    pub stop: StopReason,
    /// Mesh of the last solved level.
    pub final_mesh: Mesh,
}

impl AdaptiveRun {
    pub fn completed(&self) -> bool {
        self.stop == StopReason::MaxLevels
    }
}

/// What the level observer sees after a level is solved and estimated.
pub struct LevelView<'a> {
    pub mesh: &'a Mesh,
    pub indicators: &'a IndicatorField,
    pub record: &'a ConvergenceRecord,
}

/// Everything one level produces.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub record: ConvergenceRecord,
    pub indicators: IndicatorField,
    pub eps_h: Vec<f64>,
    pub u_h: Vec<f64>,
    pub u_dg: Vec<f64>,
    pub v_star: Vec<f64>,
    pub v_dg_star: Vec<f64>,
    pub eps_star: Option<Vec<f64>>,
}

fn rel(r: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        r.abs() / scale
    } else {
        r.abs()
    }
}

fn max_abs(terms: &[f64]) -> f64 {
    terms.iter().fold(0.0, |m, t| m.max(t.abs()))
}

/// Solves and estimates on a fixed mesh.
pub fn solve_level(prob: &ProblemDef, mesh: &Mesh, opts: &AdaptiveOptions, level: usize) -> Result<LevelSolution, AdaptError> {
    let start = Instant::now();
    let skel = Skeleton::new(mesh)?;
    let cg = build_space(mesh, opts.p, Continuity::Continuous)?;
    let dg = build_space(mesh, opts.p + opts.dp, Continuity::Broken)?;
    let asm = Assembler::new(mesh, &skel, &dg, prob)?;
    let b = asm.bh();
    let g = asm.gram()?;
    let l = asm.lh();
    let c = embedding_matrix(&cg, &dg)?;
    let q_v = assemble_qoi(mesh, &dg, prob.omega0)?;
    let q_u = assemble_qoi(mesh, &cg, prob.omega0)?;

    let sys = SaddleSystem::new(&g, &b, &c)?;
    let primal = sys.solve_primal(&l)?;
    let adjoint = sys.solve_adjoint(&q_u)?;
    let (eps_h, u_h) = (primal.v, primal.u);
    let v_star = adjoint.v;

    let dgs = DgSolver::new(&b)?;
    let u_dg = dgs.solve(&l)?;
    let v_dg_star = dgs.solve_transpose(&q_v)?;
    let d = sub(&v_dg_star, &v_star);

    let need_eps_star = opts.kind == EstimatorKind::GoaAdjointResidual || dg.n_dofs() <= opts.diagnostics_limit;
    let gram = if need_eps_star { Some(GramSolver::new(&g)?) } else { None };
    let eps_star = match &gram {
        Some(gs) => Some(adjoint_residual(gs, &b, &v_star, &q_v)?),
        None => None,
    };

    let aux = match opts.kind {
        EstimatorKind::Energy => None,
        EstimatorKind::GoaAdjointDg => Some(d.as_slice()),
        EstimatorKind::GoaAdjointResidual => eps_star.as_deref(),
    };
    let indicators = element_indicators(opts.kind, &asm, &eps_h, aux, opts.scaling)?;

    // identity diagnostics, each scaled by its largest participating term
    let cu = c.matvec(&u_h);
    let bcu = b.matvec(&cu);
    let a_terms = [dot(&v_dg_star, &bcu), dot(&v_star, &bcu)];
    let norm = |x: &[f64]| g.bilinear(x, x).max(0.0).sqrt();
    let (n_eps, n_vs, n_d) = (norm(&eps_h), norm(&v_star), norm(&d));
    let c_terms = [dot(&q_u, &u_h), dot(&l, &v_star)];
    let bu_dg = b.matvec(&u_dg);
    let d_terms = [dot(&v_star, &bu_dg), dot(&v_star, &bcu)];
    let ortho = [
        rel(a_terms[0] - a_terms[1], max_abs(&a_terms)),
        rel(g.bilinear(&v_star, &eps_h), n_vs * n_eps),
        rel(c_terms[0] - c_terms[1], max_abs(&c_terms)),
        rel(d_terms[0] - d_terms[1], max_abs(&d_terms)),
    ];
    let qoi_uh = dot(&q_u, &u_h);
    let qoi_udg = dot(&q_v, &u_dg);
    let t1 = qoi_udg - dot(&q_v, &cu);
    let t2 = g.bilinear(&eps_h, &d);
    let t3 = dot(&l, &d);
    let chain_scale = max_abs(&[qoi_udg, dot(&q_v, &cu), dot(&l, &v_dg_star), dot(&l, &v_star), n_eps * n_d]);
    let chain = [rel(t1 - t2, chain_scale), rel(t2 - t3, chain_scale)];
    let c_min = rel(g.bilinear(&v_star, &d), n_vs * n_d);
    let err_dg = sub(&u_dg, &cu);
    let efficiency = n_eps / norm(&err_dg);
    let adjoint_efficiency = eps_star.as_ref().map_or(f64::NAN, |e| norm(e) / n_d);

    let (rel_err, rel_err_dg) = match prob.exact_qoi {
        Some(q) => ((q - qoi_uh).abs() / q.abs(), (q - qoi_udg).abs() / q.abs()),
        None => (f64::NAN, f64::NAN),
    };
    let record = ConvergenceRecord {
        level,
        n_v: dg.n_dofs(),
        n_u: cg.n_dofs(),
        ndofs: dg.n_dofs() + cg.n_dofs(),
        nelems: mesh.n_triangles(),
        estimate: indicators.global,
        qoi_uh,
        qoi_udg,
        rel_err,
        rel_err_dg,
        ortho,
        chain,
        c_min,
        efficiency,
        adjoint_efficiency,
        solve_residual: primal.report.block_v.max(primal.report.block_u).max(adjoint.report.block_v).max(adjoint.report.block_u),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(LevelSolution { record, indicators, eps_h, u_h, u_dg, v_star, v_dg_star, eps_star })
}

fn total_dofs(mesh: &Mesh, opts: &AdaptiveOptions) -> Result<usize, AdaptError> {
    let cg = build_space(mesh, opts.p, Continuity::Continuous)?;
    Ok(cg.n_dofs() + mesh.n_triangles() * crate::fem::n_local(opts.p + opts.dp))
}

/// Runs the adaptive loop from `initial`. Errors during a level end the run
/// with the history of the levels completed so far.
pub fn run_adaptive(
    prob: &ProblemDef,
    initial: &Mesh,
    opts: &AdaptiveOptions,
    mut observer: impl FnMut(&LevelView<'_>),
) -> AdaptiveRun {
    let mut history = Vec::new();
    let mut mesh = initial.clone();
    let fail = |history, mesh, e: AdaptError| AdaptiveRun { history, stop: StopReason::Failed(e), final_mesh: mesh };
    if opts.p < 1 || opts.dp > 1 {
        return fail(history, mesh, AdaptError::Degrees(opts.p, opts.dp));
    }
    if !(opts.theta > 0.0 && opts.theta <= 1.0) {
        return fail(history, mesh, AdaptError::Theta(opts.theta));
    }
    for level in 0..opts.max_levels {
        match total_dofs(&mesh, opts) {
            Ok(n) if n > opts.ndof_cap => return AdaptiveRun { history, stop: StopReason::NdofCap, final_mesh: mesh },
            Ok(_) => {}
            Err(e) => return fail(history, mesh, e),
        }
        let sol = match solve_level(prob, &mesh, opts, level) {
            Ok(s) => s,
            Err(e) => return fail(history, mesh, e),
        };
        observer(&LevelView { mesh: &mesh, indicators: &sol.indicators, record: &sol.record });
        let scale = sol.record.qoi_uh.abs().max(sol.indicators.local.iter().fold(0.0, |m: f64, x| m.max(*x)));
        let exhausted = sol.indicators.total() <= 0.0 || sol.record.estimate <= 1e-15 * scale.max(f64::MIN_POSITIVE);
        history.push(sol.record);
        if level + 1 == opts.max_levels {
            break;
        }
        if exhausted {
            return AdaptiveRun { history, stop: StopReason::EstimatorExhausted, final_mesh: mesh };
        }
        let marked = match dorfler_mark(&sol.indicators.local, opts.theta) {
            Ok(m) => m,
            Err(AdaptError::NothingToMark) => return AdaptiveRun { history, stop: StopReason::EstimatorExhausted, final_mesh: mesh },
            Err(e) => return fail(history, mesh, e),
        };
        mesh = match refine(&mesh, &marked.elements, opts.split) {
            Ok(m) => m,
            Err(e) => return fail(history, mesh, e.into()),
        };
    }
    AdaptiveRun { history, stop: StopReason::MaxLevels, final_mesh: mesh }
}
