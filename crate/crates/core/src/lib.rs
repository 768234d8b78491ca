//! Design and evaluation of finite-blocklength coset secrecy codes for the
//! binary erasure wiretap channel.
//!
//! * [`gf2`]: GF(2) vectors, generator matrices, rank and subspace enumeration
//! * [`exact`]: exhaustive metrics over every erasure pattern
//! * [`continuous`]: closed-form metrics and gradients on column fractions
//! * [`descent`]: the boundary-compliant constrained gradient descent
//! * [`constructions`]: reference codes (random, LDPC dual, subspace exclusion, BKLC-incremental)
//! * [`bounds`]: finite-blocklength achievability and converse limits
//! * [`codefile`]: JSON code and seed-matrix files

pub mod bounds;
pub mod codefile;
pub mod constructions;
pub mod continuous;
pub mod descent;
pub mod error;
pub mod exact;
pub mod gf2;
pub mod rng;

pub use continuous::CodeDefVector;
pub use error::{Error, Result};
pub use exact::MetricReport;
pub use gf2::{BitVector, GeneratorMatrix, Subspace};
