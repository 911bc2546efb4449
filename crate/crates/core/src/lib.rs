//! Sparse (bang-bang) minimum-effort control for integrator chains.
//!
//! The crate covers the closed-form L-infinity optimal control of an
//! `n`-th order integrator, its encoding as a spike train, exact trajectory
//! integration, discretized LP / least-squares solvers that reproduce and
//! extend the closed form, ballistic-segment extraction from reaching
//! trials, and model scoring against the minimum-jerk baseline.

pub mod analytic;
pub mod error;
pub mod eval;
pub mod io;
pub mod movement;
pub mod numeric;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    BallisticSegment, BangBangSignal, Impulse, IntegratorChain, MovementTask, PiecewiseTrajectory,
    PolySegment, SampleTable, SampledSeries, Sign, SpikeTrain, StateVector, Trial,
};
