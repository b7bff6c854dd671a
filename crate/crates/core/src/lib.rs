//! Two-way continuous collision handling for step-and-project simulation.
//!
//! The central operator is [`twoway::resolve`], which moves a mesh from an
//! intersection-free state `x` toward a (possibly penetrating) target `y`
//! along a piecewise-linear path that never passes through an intersection.
//! Around it sit a broad phase ([`proximity`]), constraint assembly
//! ([`constraints`]), inexact LCP solvers ([`backward`]), the conservative
//! advancement rule ([`forward`]), a small mass-spring simulator
//! ([`dynamics`]) and independent verification oracles ([`testkit`]).

pub mod backward;
pub mod constraints;
pub mod dynamics;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod normal_flow;
pub mod proximity;
pub mod scene;
pub mod testkit;
pub mod twoway;

pub use error::{Error, Result};
pub use geometry::{MeshState, Simplex, Topology, Vec3};
pub use twoway::{repair, resolve, ResolveConfig, ResolveStats};
