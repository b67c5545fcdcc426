//! Deterministic numerical core: seeded RNG, small dense linear algebra,
//! feedforward networks with analytic gradients, and Adam.

mod adam;
mod gradcheck;
mod linalg;
mod net;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{
    grad_check, grad_check_against, quadratic_probe, rel_error, GradCheckReport, ParamSite,
    FD_STEP, REL_ERROR_FLOOR,
};
pub use linalg::{dot, matvec, median, orthonormalize, round_f32, sq_dist, sq_norm, Lu, PIVOT_FLOOR};
pub use net::{Activation, DenseNet, NetGrads, Workspace, NET_MAGIC, NET_VERSION};
pub use rng::{sub_seed, Rng};
