//! Multibeam satellite capacity optimization.
//!
//! The crate models the forward downlink of a multibeam satellite as a set of
//! beams sharing `N` resource slots (carriers in the frequency domain, time
//! slots in the beam-hopping time domain). Its pieces:
//!
//! - [`scenario`]: beam layout, antenna pattern, channel matrix, traffic and
//!   payload configuration.
//! - [`sinr`]: signal / interference / SINR tables from a resource mask, and
//!   the frequency/time duality check.
//! - [`phy`]: SINR to spectral efficiency (Shannon and DVB-S2 ModCods) and the
//!   per-beam throughput sum.
//! - [`p1`]: the iterative interference-aware carrier allocator and the
//!   regular 7-color reuse baseline.
//! - [`p2`]: closed-form interference-free slot allocators with a numeric
//!   projected-gradient oracle.
//! - [`linkgap`]: forward link budget chain and the NOFR/BH spectral
//!   efficiency gap.
//! - [`metrics`] and [`experiment`]: evaluation metrics and reproducible
//!   sweeps that write CSV/JSON result sets.

pub mod error;
pub mod experiment;
pub mod linkgap;
pub mod metrics;
pub mod p1;
pub mod p2;
pub mod phy;
pub mod scenario;
pub mod sinr;

pub use error::{Error, Result};
pub use scenario::Domain;
