//! Built-in benchmark problems with their initial meshes and reference values.

use std::fmt;

use crate::fem::edge_rule;
use crate::mesh::{Mesh, MeshError, Rect};
use crate::problem::{ProblemDef, ProblemError, ScalarField, Symmetry, VectorField};

pub const CROSS_QOI: f64 = 0.407617863684;
pub const CROSS_OMEGA0: Rect = Rect::new(1.2, 1.4, 0.2, 0.4);
pub const ADVECTION_OMEGA0: Rect = Rect::new(0.7, 0.8, 0.3, 0.5);
pub const ADVECTION_VELOCITY: [f64; 2] = [3.0, 1.0];

/// Agreement required between successive subdivisions of the QoI oracle.
pub const ORACLE_TOL: f64 = 1e-10;

/// Smooth profile with an internal layer of width `1e-1` and one of width
/// `1e-3`, both aligned with the velocity `(3, 1)`.
pub fn advection_solution(x: [f64; 2]) -> f64 {
    let s = x[1] - x[0] / 3.0;
    2.0 + (10.0 * (s - 0.25)).tanh() + (1000.0 * (s - 0.75)).tanh()
}

/// Mean of [`advection_solution`] over the advection QoI region by
/// composite tensor Gauss quadrature (degree 20 per panel). The panel count
/// doubles until two successive values agree to [`ORACLE_TOL`].
pub fn advection_reference_qoi() -> f64 {
    let r = ADVECTION_OMEGA0;
    let rule = edge_rule(20).expect("degree 20 is supported");
    let integrate = |k: usize| {
        let (hx, hy) = ((r.x1 - r.x0) / k as f64, (r.y1 - r.y0) / k as f64);
        let mut sum = 0.0;
        for i in 0..k {
            for j in 0..k {
                for (px, wx) in rule.points.iter().zip(&rule.weights) {
                    for (py, wy) in rule.points.iter().zip(&rule.weights) {
                        let x = [r.x0 + hx * (i as f64 + px[0]), r.y0 + hy * (j as f64 + py[0])];
                        sum += wx * wy * advection_solution(x);
                    }
                }
            }
        }
        sum * hx * hy / r.area()
    };
    let mut k = 1;
    let mut prev = integrate(k);
    loop {
        k *= 2;
        let next = integrate(k);
        if (next - prev).abs() <= ORACLE_TOL || k >= 1 << 10 {
            return next;
        }
        prev = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    CrossDiffusion,
    AdvectionReaction,
    AdrGeneric,
}

/// Constants for `adr_generic` on the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericData {
    pub kappa: f64,
    pub velocity: [f64; 2],
    pub source: f64,
    pub dirichlet: f64,
    pub omega0: Rect,
}

impl Default for GenericData {
    fn default() -> Self {
        GenericData { kappa: 1.0, velocity: [0.0, 0.0], source: 1.0, dirichlet: 0.0, omega0: ADVECTION_OMEGA0 }
    }
}

/// Parameters shared by all catalog constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub symmetry: Symmetry,
    pub gamma: f64,
    pub generic: GenericData,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams { symmetry: Symmetry::Sip, gamma: 0.0, generic: GenericData::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub id: ProblemId,
    pub name: &'static str,
    pub summary: &'static str,
    pub default_levels: usize,
}

pub const CATALOG: [CatalogEntry; 3] = [
    CatalogEntry {
        id: ProblemId::CrossDiffusion,
        name: "cross_diffusion",
        summary: "-Δu = 1 on a cross-shaped domain, u = 0 on the boundary",
        default_levels: 14,
    },
    CatalogEntry {
        id: ProblemId::AdvectionReaction,
        name: "advection_reaction",
        summary: "b·∇u + γu = f on the unit square with two internal layers",
        default_levels: 18,
    },
    CatalogEntry {
        id: ProblemId::AdrGeneric,
        name: "adr_generic",
        summary: "constant-coefficient advection-diffusion-reaction on the unit square",
        default_levels: 14,
    },
];

pub fn catalog() -> &'static [CatalogEntry] {
    &CATALOG
}

pub fn lookup(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.name).collect()
}

impl fmt::Display for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<20} {}", self.name, self.summary)
    }
}

impl CatalogEntry {
    pub fn problem(&self, params: &ProblemParams) -> Result<ProblemDef, ProblemError> {
        let prob = match self.id {
            ProblemId::CrossDiffusion => ProblemDef::new(1.0, VectorField::Constant([0.0, 0.0]), 0.0, CROSS_OMEGA0)
                .with_source(ScalarField::Constant(1.0))
                .with_domain_scale(2.0 * std::f64::consts::SQRT_2)
                .with_exact_qoi(CROSS_QOI),
            ProblemId::AdvectionReaction => {
                let gamma = params.gamma;
                ProblemDef::new(0.0, VectorField::Constant(ADVECTION_VELOCITY), gamma, ADVECTION_OMEGA0)
                    .with_source(ScalarField::variable(move |x| gamma * advection_solution(x)))
                    .with_dirichlet(ScalarField::variable(advection_solution))
                    .with_exact_solution(ScalarField::variable(advection_solution))
                    .with_exact_qoi(advection_reference_qoi())
            }
            ProblemId::AdrGeneric => {
                let g = params.generic;
                ProblemDef::new(g.kappa, VectorField::Constant(g.velocity), params.gamma, g.omega0)
                    .with_source(ScalarField::Constant(g.source))
                    .with_dirichlet(ScalarField::Constant(g.dirichlet))
            }
        }
        .with_symmetry(params.symmetry);
        prob.validate()?;
        Ok(prob)
    }

    pub fn initial_mesh(&self, params: &ProblemParams) -> Result<Mesh, MeshError> {
        match self.id {
            ProblemId::CrossDiffusion => Ok(Mesh::cross()),
            ProblemId::AdvectionReaction => Mesh::unit_square(1, ADVECTION_OMEGA0),
            ProblemId::AdrGeneric => Mesh::unit_square(1, params.generic.omega0),
        }
    }

    /// Regularity offset `r` in the optimal QoI rate `NDOFs^-(p + r)`.
    pub fn regime(&self, params: &ProblemParams) -> f64 {
        match self.id {
            ProblemId::CrossDiffusion | ProblemId::AdrGeneric => 0.0,
            ProblemId::AdvectionReaction if params.gamma > 0.0 => 1.0,
            ProblemId::AdvectionReaction => 0.5,
        }
    }
}
