//! Adaptive residual-minimizing finite elements for 2D
//! advection-diffusion-reaction problems with goal-oriented error control.

pub mod adaptivity;
pub mod assembly;
pub mod catalog;
pub mod estimators;
pub mod fem;
pub mod history;
pub mod mesh;
pub mod problem;
pub mod solve;
pub mod sparse;

pub use adaptivity::{dorfler_mark, run_adaptive, solve_level, AdaptError, AdaptiveOptions, AdaptiveRun, LevelView, MarkSet, StopReason};
pub use catalog::{catalog, lookup, CatalogEntry, ProblemId, ProblemParams};
pub use estimators::{EstimatorKind, IndicatorField, IndicatorScaling};
pub use history::{ConvergenceRecord, CSV_HEADER};
pub use fem::{build_space, embedding_matrix, BasisError, Continuity, DofMap};
pub use assembly::{assemble_bh, assemble_gram, assemble_lh, assemble_qoi, local_pairing, Assembler, AssemblyError};
pub use mesh::{bisect, Mesh, MeshError, Rect, Skeleton};
pub use problem::{ProblemDef, ScalarField, Symmetry, VectorField};
pub use solve::{solve_dg_adjoint, solve_dg_primal, solve_gram, DgSolver, GramSolver, SaddleSolution, SaddleSystem, SolveError, SolveReport};
pub use sparse::SparseOperator;
