// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unsupported cell type `{cell}`")]
    UnsupportedCell { line: usize, cell: String },
    #[error("net `{net}` has multiple drivers")]
    MultipleDrivers { net: String },
    #[error("net `{net}` is used but never declared")]
    UndeclaredNet { net: String },
    #[error("net `{net}` has no driver")]
    UndrivenNet { net: String },
    #[error("combinational cycle through net `{net}`")]
    CombinationalCycle { net: String },
    #[error("name `{name}` already exists in the host netlist")]
    NameCollision { name: String },
    #[error("sequential template needs a clock net and none was identified")]
    MissingClock,
    #[error("invalid port binding: {0}")]
    InvalidBinding(String),
    #[error("no such net `{0}`")]
    UnknownNet(String),
    #[error("entropy is undefined for sequential cells")]
    SequentialCell,
    #[error("training class `{0}` is empty")]
    EmptyClass(&'static str),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too few samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("netlists do not share the same primary input/output interface")]
    InterfaceMismatch,
    #[error("design has no eligible candidate nets")]
    NoCandidates,
    #[error("need {need} candidates, only {got} available")]
    InsufficientCandidates { need: usize, got: usize },
    #[error("no legal payload net for the trigger set")]
    NoLegalPayload,
    #[error("virtual Trojan pool is empty")]
    PoolEmpty,
    #[error("only {got} nets have rare-side probability <= {theta}, need {need}")]
    InsufficientRareNets { theta: f64, need: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model bundle schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
