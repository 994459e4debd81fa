//! Numerical laboratory for binormal-flow polygons and the Riemann function.
//!
//! Each module owns one computation. `theta_sums` evaluates the Riemann-function
//! family with certified tails. `selfsimilar` integrates the corner profile.
//! `nls_remainder` and `frame_evolution` evolve the corner remainder system
//! and the parallel frame of polygonal solutions. `bf_simulator` solves the
//! Schrödinger map directly. `multifractal` measures scaling exponents.
//! `io` writes reproducible artifacts.

pub mod bf_simulator;
pub mod error;
pub mod fit;
pub mod frame_evolution;
pub mod io;
pub mod multifractal;
pub mod nls_remainder;
pub mod ode;
pub mod quad;
pub mod selfsimilar;
pub mod theta_sums;

pub use bf_simulator::{GridCurve, PolygonalLineSpec};
pub use error::{Error, Result};
pub use frame_evolution::{CornerTrajectory, FrameOptions, FramePoint};
pub use io::{Cell, ColumnKind, RunConfig, RunMetadata, Table};
pub use nls_remainder::{AlphaSequence, CornerParams, RemainderOptions, RemainderTrajectory};
pub use num_complex::Complex64;
pub use ode::OdeStats;
pub use selfsimilar::{CVec3, FrenetState, Profile, Vec3};
pub use theta_sums::{RationalTorsion, ThetaFamilyParams, TruncatedSum};
