//! Global error estimates and element indicators built from the residual
//! representatives.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::assembly::{Assembler, AssemblyError};
use crate::solve::{GramSolver, SolveError};
use crate::sparse::{sub, SparseOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// `||e_h||^2` with local `(e_h, e_h)_T`.
    Energy,
    /// `|(e_h, v_dg* - v*)|` with the dG adjoint.
    GoaAdjointDg,
    /// `|(e_h, e*)|` with the adjoint residual representative.
    GoaAdjointResidual,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Energy, EstimatorKind::GoaAdjointDg, EstimatorKind::GoaAdjointResidual];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Energy => "energy",
            EstimatorKind::GoaAdjointDg => "goa-dg",
            EstimatorKind::GoaAdjointResidual => "goa-residual",
        }
    }

    pub fn needs_aux(self) -> bool {
        self != EstimatorKind::Energy
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown estimator {s:?} (expected energy, goa-dg or goa-residual)"))
    }
}

/// How local indicators are scaled before marking. `Standard` squares the
/// energy indicators and keeps goal-oriented products unsquared; `Inverted`
/// does the opposite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndicatorScaling {
    #[default]
    Standard,
    Inverted,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("estimator {0} needs an auxiliary adjoint vector")]
    MissingAux(EstimatorKind),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub kind: EstimatorKind,
    pub local: Vec<f64>,
    pub global: f64,
}

impl IndicatorField {
    pub fn total(&self) -> f64 {
        self.local.iter().sum()
    }
}

/// Adjoint residual representative `e* = G^{-1} (q_V - B^T v*)`.
pub fn adjoint_residual(gram: &GramSolver, b: &SparseOperator, v_star: &[f64], q_v: &[f64]) -> Result<Vec<f64>, SolveError> {
    gram.solve(&sub(q_v, &b.matvec_transpose(v_star)))
}

/// Per-element indicators through the localized inner product. The global
/// value is the sum of the local pairings, which equals the Gram form.
pub fn element_indicators(
    kind: EstimatorKind,
    asm: &Assembler<'_>,
    eps_h: &[f64],
    aux: Option<&[f64]>,
    scaling: IndicatorScaling,
) -> Result<IndicatorField, EstimatorError> {
    let ee = asm.local_pairings(eps_h, eps_h)?;
    if kind == EstimatorKind::Energy {
        let global = ee.iter().sum::<f64>().max(0.0);
        let local = match scaling {
            IndicatorScaling::Standard => ee.iter().map(|x| x.max(0.0)).collect(),
            IndicatorScaling::Inverted => ee.iter().map(|x| x.max(0.0).sqrt()).collect(),
        };
        return Ok(IndicatorField { kind, local, global });
    }
    let aux = aux.ok_or(EstimatorError::MissingAux(kind))?;
    let aa = asm.local_pairings(aux, aux)?;
    let ea = asm.local_pairings(eps_h, aux)?;
    let local = ee
        .iter()
        .zip(&aa)
        .map(|(e, a)| {
            let prod = e.max(0.0).sqrt() * a.max(0.0).sqrt();
            match scaling {
                IndicatorScaling::Standard => prod,
                IndicatorScaling::Inverted => prod * prod,
            }
        })
        .collect();
    Ok(IndicatorField { kind, local, global: ea.iter().sum::<f64>().abs() })
}

/// `e_h^T G e_h` (energy) or `|e_h^T G aux|` (goal-oriented kinds).
pub fn global_estimate(kind: EstimatorKind, g: &SparseOperator, eps_h: &[f64], aux: Option<&[f64]>) -> Result<f64, EstimatorError> {
    match kind {
        EstimatorKind::Energy => Ok(g.bilinear(eps_h, eps_h).max(0.0)),
        _ => Ok(g.bilinear(eps_h, aux.ok_or(EstimatorError::MissingAux(kind))?).abs()),
    }
}
