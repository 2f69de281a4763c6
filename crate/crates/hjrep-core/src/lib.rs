//! Numerical construction and verification of epigraphical representations of
//! convex Hamiltonians.
//!
//! Given a Hamiltonian `H(t,x,p)` that is convex in `p`, the crate builds the
//! pair `(f, l)` with
//!
//! ```text
//! H(t,x,p) = sup_{a in R^{n+1}} { <p, f(t,x,a)> - l(t,x,a) }
//! ```
//!
//! by selecting, for each control `a`, the Steiner point of the epigraph of
//! the Legendre-Fenchel conjugate `H*(t,x,.)` clamped to the ball
//! `B(a, 2 d(a, epi H*))`. On top of the construction it provides:
//!
//! - [`geom`]: compact-convex-set primitives in the plane (support function,
//!   projection, Hausdorff distance, ball-clamped intersection, Steiner point);
//! - [`hamiltonian`]: model registry, numerical conjugation and truncated
//!   epigraph slices;
//! - [`representation`]: the parameterization `e = (f, l)` and its audits
//!   (Lipschitz ratio, growth bounds, fixed-point property, stability gaps);
//! - [`value`]: value functions computed three ways (variational
//!   transcription, control transcription, monotone finite differences) plus
//!   equality/regularity/stability audits;
//! - [`tube`]: epigraph tubes, contingent-cone tangency probes and flow
//!   invariance of inclusion trajectories.
//!
//! All operations are pure functions of immutable inputs and are
//! deterministic for a fixed configuration and seed.

pub mod error;
pub mod geom;
pub mod hamiltonian;
pub(crate) mod num1d;
pub mod report;
pub mod representation;
pub mod rng;
pub mod tube;
pub mod value;

pub use error::CoreError;
pub use geom::{clamp_intersection, hausdorff, steiner_point, Ball, ConvexBody, Polygon};
pub use hamiltonian::{
    builtin, conjugate_domain_bound, epigraph_slice, hausdorff_slice_gap, EpigraphSlice, ExtReal,
    HamiltonianModel, ModelParams,
};
pub use report::AuditRecord;
pub use representation::{parameterize, RepresentationOutput};
pub use tube::Tube;
pub use value::{ControlSignal, RegularityConstants, TerminalCost, Trajectory, ValueField};

