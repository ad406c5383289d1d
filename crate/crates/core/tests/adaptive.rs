use goafem::catalog::{lookup, ProblemParams};
use goafem::history::write_csv;
use goafem::solve::dual_norm;
use goafem::sparse::{norm_inf, sub};
use goafem::{
    build_space, embedding_matrix, run_adaptive, solve_level, AdaptiveOptions, Assembler, Continuity, EstimatorKind,
    GramSolver, Mesh, ProblemDef, Skeleton, StopReason,
};

fn setup(name: &str, gamma: f64) -> (ProblemDef, Mesh) {
    let e = lookup(name).unwrap();
    let params = ProblemParams { gamma, ..ProblemParams::default() };
    (e.problem(&params).unwrap(), e.initial_mesh(&params).unwrap())
}

fn opts(kind: EstimatorKind, levels: usize) -> AdaptiveOptions {
    AdaptiveOptions { kind, max_levels: levels, ..AdaptiveOptions::default() }
}

#[test]
fn single_level_does_not_refine() {
    let (prob, mesh) = setup("cross_diffusion", 0.0);
    let mut seen = 0;
    let run = run_adaptive(&prob, &mesh, &opts(EstimatorKind::GoaAdjointResidual, 1), |v| {
        assert_eq!(v.mesh, &mesh);
        seen += 1;
    });
    assert_eq!(seen, 1);
    assert_eq!(run.history.len(), 1);
    assert_eq!(run.stop, StopReason::MaxLevels);
    assert_eq!(run.final_mesh, mesh);
}

#[test]
fn histories_are_reproducible() {
    let (prob, mesh) = setup("advection_reaction", 0.0);
    let csv = || {
        let run = run_adaptive(&prob, &mesh, &opts(EstimatorKind::GoaAdjointDg, 5), |_| {});
        let records: Vec<_> = run.history.iter().map(|r| r.without_timing()).collect();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        (buf, run.final_mesh)
    };
    assert_eq!(csv(), csv());
}

#[test]
fn levels_and_dofs_increase() {
    let (prob, mesh) = setup("advection_reaction", 1000.0);
    let run = run_adaptive(&prob, &mesh, &opts(EstimatorKind::GoaAdjointResidual, 8), |_| {});
    assert_eq!(run.history.len(), 8);
    for (i, w) in run.history.windows(2).enumerate() {
        assert_eq!(w[0].level, i);
        assert_eq!(w[1].level, i + 1);
        assert!(w[1].ndofs > w[0].ndofs);
        assert!(w[1].nelems > w[0].nelems);
    }
    for r in &run.history {
        assert_eq!(r.ndofs, r.n_v + r.n_u);
    }
}

#[test]
fn ndof_cap_stops_early() {
    let (prob, mesh) = setup("cross_diffusion", 0.0);
    let run = run_adaptive(&prob, &mesh, &AdaptiveOptions { ndof_cap: 400, ..opts(EstimatorKind::Energy, 14) }, |_| {});
    assert_eq!(run.stop, StopReason::NdofCap);
    assert!(!run.history.is_empty() && run.history.len() < 14);
    assert!(run.history.iter().all(|r| r.ndofs <= 400));
}

#[test]
fn energy_run_on_cross_grows_and_decreases() {
    let (prob, mesh) = setup("cross_diffusion", 0.0);
    let run = run_adaptive(&prob, &mesh, &opts(EstimatorKind::Energy, 14), |_| {});
    assert!(run.completed());
    let h = &run.history;
    assert!(h.windows(2).all(|w| w[1].ndofs > w[0].ndofs));
    let decreasing = h.windows(2).filter(|w| w[1].estimate < w[0].estimate).count();
    assert!(decreasing >= 10, "estimate decreased on {decreasing} of 13 steps");
}

#[test]
fn goal_oriented_run_on_cross_gains_two_orders() {
    let (prob, mesh) = setup("cross_diffusion", 0.0);
    let run = run_adaptive(&prob, &mesh, &opts(EstimatorKind::GoaAdjointResidual, 14), |_| {});
    let (first, last) = (run.history[0].rel_err, run.history.last().unwrap().rel_err);
    assert!(last * 100.0 < first, "{first:e} -> {last:e}");
}

#[test]
fn efficiency_ratio_is_bounded() {
    let (prob, mesh) = setup("cross_diffusion", 0.0);
    let run = run_adaptive(&prob, &mesh, &opts(EstimatorKind::GoaAdjointResidual, 8), |_| {});
    let eff: Vec<f64> = run.history.iter().map(|r| r.efficiency).collect();
    assert!(eff.iter().all(|&e| e.is_finite() && e > 0.0));
    let (lo, hi) = eff.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    assert!(hi / lo <= 100.0, "{eff:?}");
    assert!(run.history.iter().all(|r| r.adjoint_efficiency.is_finite() && r.adjoint_efficiency > 0.0));
}

/// Level-0 quantities checked against matrices assembled independently.
#[test]
fn level_quantities_match_direct_evaluation() {
    for (name, gamma) in [("cross_diffusion", 0.0), ("advection_reaction", 0.0), ("advection_reaction", 1000.0), ("adr_generic", 0.0)] {
        let (prob, mesh) = setup(name, gamma);
        let o = opts(EstimatorKind::GoaAdjointDg, 1);
        let sol = solve_level(&prob, &mesh, &o, 0).unwrap();
        let skel = Skeleton::new(&mesh).unwrap();
        let cg = build_space(&mesh, 1, Continuity::Continuous).unwrap();
        let dg = build_space(&mesh, 1, Continuity::Broken).unwrap();
        let asm = Assembler::new(&mesh, &skel, &dg, &prob).unwrap();
        let (b, g, l) = (asm.bh(), asm.gram().unwrap(), asm.lh());
        let c = embedding_matrix(&cg, &dg).unwrap();
        let gs = GramSolver::new(&g).unwrap();

        // the residual representative is orthogonal to the trial space
        let bc = b.matmul(&c);
        assert!(norm_inf(&bc.matvec_transpose(&sol.eps_h)) <= 1e-10 * norm_inf(&l), "{name}");

        // a priori bound ||e_h|| <= ||l_h||_*
        let eps_norm = g.bilinear(&sol.eps_h, &sol.eps_h).sqrt();
        assert!(eps_norm <= dual_norm(&gs, &l).unwrap() * (1.0 + 1e-10), "{name}");

        // e* = G^{-1} B^T (v_dg* - v*)
        let d = sub(&sol.v_dg_star, &sol.v_star);
        let direct = gs.solve(&b.matvec_transpose(&d)).unwrap();
        let eps_star = sol.eps_star.as_ref().unwrap();
        let scale = g.bilinear(&direct, &direct).sqrt();
        let diff = sub(eps_star, &direct);
        assert!(g.bilinear(&diff, &diff).sqrt() <= 1e-9 * scale, "{name}");

        // (v*, v_dg*) = (v*, v*)
        let ratio = g.bilinear(&sol.v_star, &sol.v_dg_star) / g.bilinear(&sol.v_star, &sol.v_star);
        assert!((ratio - 1.0).abs() <= 1e-8, "{name}: {ratio}");

        // l_h(1) = integral of f for pure diffusion with f = 1
        if name == "cross_diffusion" {
            assert!((l.iter().sum::<f64>() - 12.0).abs() <= 1e-9);
        }
    }
}
