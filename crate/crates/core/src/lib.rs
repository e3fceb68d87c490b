//! Optimal one- and two-choice stopping values for i.i.d. variables whose
//! distribution behaves like `x^α` near zero.
//!
//! The statistician observes `X_n, …, X_1` in that order and wants to stop on
//! a value as small as possible. With one choice the scaled value
//! `n·F(V_n¹)` tends to `1 + 1/α`; with two choices it tends to
//! `h^α(b_α)`, where `b_α` is the unique root of
//! `H(y) = ∫₀^y h + (1/α − y)·h(y)` and
//! `h(y) = (y / (1 + αy/(α+1)))^{1/α}`.
//!
//! Modules:
//!
//! * [`dist`]: the power-law-at-zero family, quantiles and seeded sampling.
//! * [`dp`]: exact finite-n dynamic programming for `F(x) = x^α` on `[0, 1]`.
//! * [`limits`]: the limiting functions, the root `b_α` and the table of
//!   asymptotic constants.
//! * [`recursion`]: the scaled recursion `Z_n` for a monotone profile, the
//!   sandwich bounds and the stopped-moment recursion.
//! * [`sim`]: Monte Carlo evaluation of the optimal policies.

pub mod dist;
pub mod dp;
mod error;
pub mod limits;
pub mod numerics;
pub mod profile;
pub mod published;
pub mod recursion;
pub mod sim;

pub use dist::{Alpha, PowerLawDist, Sampler, StreamFactory, TrialStream, UniformStream};
pub use dp::{dp_sweep, DpSweep, DpTrace, GnGrid};
pub use error::{Error, Result};
pub use limits::{solve_b_alpha, LimitConstants};
pub use profile::Profile;
pub use sim::{PolicyKind, SimReport};
