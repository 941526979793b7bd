//! Solver for the two-time equilibrium Riccati equation (ERE) arising in
//! time-inconsistent stochastic linear-quadratic control.
//!
//! The unknown `P(t, s)` lives on the triangle `0 <= t <= s <= T` and couples
//! to itself through its diagonal: the feedback gain
//!
//! ```text
//! Theta(s) = -[R(s,s) + D(s)' P(s,s) D(s)]^{-1} [B(s)' P(s,s) + D(s)' P(s,s) C(s)]
//! ```
//!
//! enters the coefficients of every row equation. The solver iterates on the
//! gain: freeze `Theta`, integrate the resulting family of backward Lyapunov
//! matrix ODEs row by row, re-derive the gain from the new diagonal, repeat
//! until the gain is stationary. A windowed variant performs the same
//! iteration block-backward from the terminal time with an adaptive window
//! size controlled by the measured contraction factor.
//!
//! Crate layout:
//!
//! - [`problem`]: grids, coefficient paths, triangular fields, validation of
//!   the positivity/monotonicity assumptions, and the a priori bounds.
//! - [`lyapunov`]: the frozen-gain backward RK4 integrator (the deterministic
//!   realization of the conditional-expectation map).
//! - [`picard`]: the gain-to-gain map, global and windowed fixed-point
//!   iteration, contraction diagnostics.
//! - [`mollify`]: bump-kernel smoothing of non-smooth weights and
//!   coefficients, preserving positivity and monotonicity.
//! - [`oracle`]: independent Monte Carlo verification (Euler-Maruyama
//!   simulation of the closed-loop fundamental solution, cost functionals,
//!   equilibrium perturbation test) and the classical Riccati cross-check.
//! - [`io`]: JSON problem files, CSV/JSON result bundles.
//! - [`cli`]: the `ere` command line: solve, verify, convergence studies.

pub mod cli;
pub mod io;
pub mod lyapunov;
pub mod mollify;
pub mod oracle;
pub mod picard;
pub mod problem;

pub use problem::{
    apriori_bound, theta_bound, validate_problem, DiagonalField, Interp, MatrixPath, ProblemError,
    ProblemSpec, Strategy, TimeGrid, TwoTimeField, ValidationReport,
};
