//! Coefficients and data of a stationary advection-diffusion-reaction
//! problem `-div(kappa grad u) + b . grad u + gamma u = f`, `u = g` on the
//! boundary, together with the quantity of interest (mean over a rectangle).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::mesh::Rect;

pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    Variable(ScalarFn),
}

impl ScalarField {
    pub fn variable(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Variable(Arc::new(f))
    }

    #[inline]
    pub fn at(&self, x: [f64; 2]) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Variable(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Constant(c) if *c == 0.0)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Variable(_) => f.write_str("Variable(..)"),
        }
    }
}

#[derive(Clone)]
pub enum VectorField {
    Constant([f64; 2]),
    Variable(VectorFn),
}

impl VectorField {
    pub fn variable(f: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> Self {
        VectorField::Variable(Arc::new(f))
    }

    #[inline]
    pub fn at(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            VectorField::Constant(c) => *c,
            VectorField::Variable(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorField::Constant(c) if c[0] == 0.0 && c[1] == 0.0)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Constant(c) => write!(f, "Constant({c:?})"),
            VectorField::Variable(_) => f.write_str("Variable(..)"),
        }
    }
}

/// Interior-penalty variant: symmetric (`epsilon = -1`) or nonsymmetric
/// (`epsilon = +1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Sip,
    Nip,
}

impl Symmetry {
    pub fn epsilon(self) -> f64 {
        match self {
            Symmetry::Sip => -1.0,
            Symmetry::Nip => 1.0,
        }
    }

    pub fn from_epsilon(eps: i32) -> Option<Self> {
        match eps {
            -1 => Some(Symmetry::Sip),
            1 => Some(Symmetry::Nip),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("{0} must be finite and nonnegative, got {1}")]
    Negative(&'static str, f64),
    #[error("domain scale L must be positive, got {0}")]
    DomainScale(f64),
}

#[derive(Debug, Clone)]
pub struct ProblemDef {
    pub kappa: f64,
    pub velocity: VectorField,
    pub gamma: f64,
    pub source: ScalarField,
    pub dirichlet: ScalarField,
    pub symmetry: Symmetry,
    pub omega0: Rect,
    /// `sup |b|` (Euclidean).
    pub beta: f64,
    /// Diameter of the largest disc contained in the domain.
    pub domain_scale: f64,
    pub exact_solution: Option<ScalarField>,
    pub exact_qoi: Option<f64>,
}

impl ProblemDef {
    /// Homogeneous problem with zero data, SIP, `L = 1`. `beta` is taken
    /// from a constant velocity; for a variable one call
    /// [`ProblemDef::with_beta`].
    pub fn new(kappa: f64, velocity: VectorField, gamma: f64, omega0: Rect) -> Self {
        let beta = match &velocity {
            VectorField::Constant(b) => b[0].hypot(b[1]),
            VectorField::Variable(_) => 0.0,
        };
        ProblemDef {
            kappa,
            velocity,
            gamma,
            source: ScalarField::Constant(0.0),
            dirichlet: ScalarField::Constant(0.0),
            symmetry: Symmetry::Sip,
            omega0,
            beta,
            domain_scale: 1.0,
            exact_solution: None,
            exact_qoi: None,
        }
    }

    pub fn with_source(mut self, f: ScalarField) -> Self {
        self.source = f;
        self
    }

    pub fn with_dirichlet(mut self, g: ScalarField) -> Self {
        self.dirichlet = g;
        self
    }

    pub fn with_symmetry(mut self, s: Symmetry) -> Self {
        self.symmetry = s;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_domain_scale(mut self, l: f64) -> Self {
        self.domain_scale = l;
        self
    }

    pub fn with_exact_solution(mut self, u: ScalarField) -> Self {
        self.exact_solution = Some(u);
        self
    }

    pub fn with_exact_qoi(mut self, q: f64) -> Self {
        self.exact_qoi = Some(q);
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.symmetry.epsilon()
    }

    /// Streamline weight `1 / beta`, or 0 without advection.
    pub fn beta_l(&self) -> f64 {
        if self.beta > 0.0 {
            1.0 / self.beta
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        for (name, v) in [("kappa", self.kappa), ("gamma", self.gamma), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ProblemError::Negative(name, v));
            }
        }
        if !(self.domain_scale.is_finite() && self.domain_scale > 0.0) {
            return Err(ProblemError::DomainScale(self.domain_scale));
        }
        Ok(())
    }
}
