//! Exact-arithmetic laboratory for lacunary Walsh series.
//!
//! Functions on `[0,1]` are represented as step functions over the dyadic
//! partition of some order `n` ([`DyadicStep`]). On top of that sit the
//! Paley-numbered Walsh system ([`walsh`]), rearrangement-invariant norms
//! including the exponential Orlicz (Luxemburg) norms and local spaces
//! ([`norms`]), empirical Khintchine-constant scans ([`khintchine`]) and the
//! finite-dimensional operator identities on the span of order-`n` dyadic
//! indicators ([`projection`]).
//!
//! Only finite-dimensional statements are checked here. Embedding conditions
//! such as `G ⊂ X` or anything involving associate spaces are not computable
//! and are represented only through the finite identities and scans.

pub mod dyadic;
pub mod error;
pub mod exact;
pub mod khintchine;
pub mod norms;
pub mod projection;
mod sampling;
pub mod walsh;

pub use dyadic::{DistributionTable, DyadicInterval, DyadicSet, DyadicStep, UniformStep};
pub use error::{Error, Result};
pub use norms::NormSpec;
pub use walsh::{LacunarySeq, PaleyIndex, SignMatrix};

/// Largest supported dyadic order (16384 cells).
pub const MAX_ORDER: u32 = 14;
