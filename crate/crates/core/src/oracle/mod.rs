//! Exact reference computations for small instances: the extensive primal
//! program, the unrolled dual recursion, a grid check of the conjugate
//! representation of the dual value functions, and a backward upper bound
//! from trial states.

mod coperspective;
mod dual_exact;
mod extensive;
mod philpott;

pub use coperspective::{coperspective_check, CoperspectiveReport, CoperspectiveSample};
pub use dual_exact::{exact_dual_first_stage, exact_dual_value};
pub use extensive::{exact_cost_to_go, solve_extensive_primal, solve_extensive_with_tol, subinstance, ExtensiveSolution};
pub use philpott::{philpott_upper_bound, PhilpottBound, TrialPointSet};
