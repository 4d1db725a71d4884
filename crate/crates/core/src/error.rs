use thiserror::Error;

use crate::anf::{RegId, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnfError {
    #[error("variable {0} has no assigned value")]
    Unassigned(Var),
    #[error("term {term} mentions a variable outside register {register}")]
    ForeignVariable { register: RegId, term: String },
}

/// Problems building or driving a [`SystemSpec`](crate::fsr::SystemSpec).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("register {0} declared twice")]
    DuplicateRegister(RegId),
    #[error("register {0} has zero length")]
    EmptyRegister(RegId),
    #[error("register {0} is not declared")]
    UnknownRegister(RegId),
    #[error("index {index} is out of range for register {register} of length {length}")]
    IndexOutOfRange {
        register: RegId,
        index: usize,
        length: usize,
    },
    #[error("output {0} declared twice")]
    DuplicateOutput(String),
    #[error("output {0} is not declared")]
    UnknownOutput(String),
    #[error("outputs form a reference cycle through {0}")]
    OutputCycle(String),
    #[error("feedback of {register}[{bit}] references output {output}")]
    OutputInFeedback {
        register: RegId,
        bit: usize,
        output: String,
    },
    #[error("state does not match the system: {0}")]
    StateMismatch(String),
    #[error("{register}[{index}] is not a plain shift copy {offset} clocks ahead")]
    NotUnrollable {
        register: RegId,
        index: usize,
        offset: usize,
    },
    #[error("unknown watch target {0}")]
    UnknownWatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Anf(#[from] AnfError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("term {term} is not present in the feedback of {register}[{bit}]")]
    MissingTerm {
        register: RegId,
        bit: usize,
        term: String,
    },
    #[error("register is not uniform: {0}")]
    NonUniform(String),
    #[error("feedback of bit {bit} below the top bit uses foreign variable in {term}")]
    ForeignBelowTop { bit: usize, term: String },
    #[error("Galois register does not collapse to the given Fibonacci register: {0}")]
    CollapseMismatch(String),
    #[error("registers have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("register of length {length} exceeds the exhaustive limit of {limit}")]
    RegisterTooLarge { length: usize, limit: usize },
    #[error("register {0} reads other registers and cannot be enumerated on its own")]
    NotAutonomous(RegId),
    #[error("state has {got} bits, register needs {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("systems differ outside register {0}")]
    SystemMismatch(RegId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrainError {
    #[error("unknown variant {0}")]
    UnknownVariant(String),
    #[error("{what} must be {expected} bits, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("hex text has odd length {0}")]
    OddLength(usize),
    #[error("invalid hex digit {0:?} at offset {1}")]
    BadDigit(char, usize),
    #[error("expected {expected} bytes, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("padding bits of register {0} are not zero")]
    NonZeroPadding(String),
    #[error("bad cycle counter {0:?}")]
    BadCycle(String),
}

/// Syntax or semantic error in a text document, with a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}
