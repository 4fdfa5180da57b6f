//! Lower bounds on the total variation distance between two measures from
//! their moments, via a hierarchy of semidefinite relaxations.

pub mod basis;
pub mod certificate;
pub mod dd;
pub mod error;
pub mod extraction;
pub mod measures;
pub mod moments;
pub mod quadrature;
pub mod relaxation;
pub mod solver;

pub use error::{Result, TvError};
pub use measures::{AtomicMeasure, MeasureSpec};
pub use moments::{basis_indices, moment_matrix, riesz, MomentSequence, MultiIndex, Polynomial};
pub use relaxation::{solve_hierarchy, solve_level, HierarchyResult, RelaxationSettings};
pub use solver::{SolveStatus, SolverSettings};
