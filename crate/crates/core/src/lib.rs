//! Semi-global control of the 1D semilinear wave equation
//! `v_tt - v_xx + f(x, v) = 1_ω u` on (0, 1) with Dirichlet conditions.
//!
//! The pipeline stabilizes with damped feedback, walks the connection graph of
//! the damped flow's equilibria (forward along heteroclinic orbits, backward by
//! time reversal with velocity flips), and closes every junction with an exact
//! local control computed by a Gramian conjugate-gradient solve.

pub mod attractor;
pub mod equilibria;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod localctl;
pub mod nonlinearity;
pub mod par;
pub mod planner;
pub mod state;
pub mod wavesolver;

pub use error::{Result, WaveError};
pub use grid::{apply_laplacian, ControlRegion, Grid};
pub use nonlinearity::{Nonlinearity, NonlinearityKind, Order};
pub use state::{energy, x_distance, x_inner, x_norm, ControlSignal, State};
pub use wavesolver::{ForcingMode, ModeTag, Trajectory};
