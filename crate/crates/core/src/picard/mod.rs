//! Agent dynamics coupled to the field: the Picard operator, contraction
//! horizons, local and continued solves, and a-priori bounds.

mod bounds;
mod horizon;
mod path;
mod solve;

pub use bounds::{apriori_grad_bound, gronwall_bound_B, gronwall_constants, k1, k2, GronwallConstants};
pub use horizon::{contraction_s, horizon_certificate, horizon_t1, HorizonCertificate};
pub use path::{uniform_times, AgentPath};
pub use solve::{
    apply_psi, apply_psi_after, picard_on_grid, solve_global, solve_local, GlobalSolution,
    GradientMode, LocalSolution, SegmentReport, SolverOptions,
};
