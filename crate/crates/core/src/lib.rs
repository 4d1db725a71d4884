//! Fibonacci and Galois NLFSRs over algebraic normal form, the shifting
//! transformation between them, and the Grain-80/128 ciphers built on top.
//!
//! Registers are bit vectors `x[0..n]` clocked simultaneously: bit `i`
//! takes `f_i`, which defaults to the shift `x[i+1]` (bit `n-1` to `x[0]`).
//! Only bits whose feedback differs from the shift are stored.

pub mod anf;
pub mod codec;
pub mod error;
pub mod fsr;
pub mod galois;
pub mod grain;
pub mod text;
pub mod timing;

pub use anf::{AnfExpr, ProductTerm, RegId, Var};
pub use codec::BitOrder;
pub use error::{AnfError, CodecError, GrainError, ParseError, SpecError, TransformError};
pub use fsr::{Injection, RegisterSpec, Signal, SystemSpec, SystemState};
pub use galois::{Counterexample, Verdict};
pub use grain::{GrainVariant, InitMode, Transcription};
