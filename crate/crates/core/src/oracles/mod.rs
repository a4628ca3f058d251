//! Independent numerical solutions used to check the closed forms: a
//! Crank–Nicolson solver for the one-factor reduced equation and two Monte
//! Carlo engines, one in the reduced coordinates and one simulating both
//! factors directly.

pub mod fd;
pub mod mc;

pub use fd::{cn_solve, GridConfig, GridSolution};
pub use mc::{mc_forward, mc_spot, McConfig, McEstimate, Monitoring, SpotClaim};
