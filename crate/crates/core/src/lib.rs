//! Multi-objective optimization of thermal-spray process parameters over
//! gamma log-link response-surface models.

pub mod csvio;
pub mod desirability;
pub mod error;
pub mod glm;
pub mod nsga2;
pub mod pareto;
pub mod problem;
pub mod registry;
pub mod sampling;
pub mod space;
pub mod weighted_sum;

pub use error::{Error, Result};
pub use glm::{GammaLogLinearModel, ModelTerm, TermKind};
pub use pareto::{Candidate, Direction, ObjectiveVector, SolutionSet};
pub use problem::{Problem, ProblemSpec};
pub use registry::ModelRegistry;
pub use space::{ParameterSpace, ParameterVector};
