//! Verification oracles kept independent of the production path:
//! a double-double CCD certifier, a static intersection finder, an
//! enumerating LCP solver, finite differences and seeded scene generators.

pub mod ccd;
pub mod dd;
pub mod distance;
pub mod fd;
pub mod fixtures;
pub mod intersect;
pub mod lcp;
mod sweep;

pub use ccd::{ccd_certify, certify_path, Certainty, CertifyReport, PathSegment, Violation};
pub use lcp::lcp_enumerate;
