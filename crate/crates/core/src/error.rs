use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("edge {{{u}, {v}}} has weight {w}; weights must be at least 1")]
    WeightTooSmall { u: NodeId, v: NodeId, w: i64 },
    #[error("edge {{{u}, {v}}} has weight {w} above the bound n^{c} = {bound}")]
    WeightTooLarge { u: NodeId, v: NodeId, w: u64, c: u32, bound: u64 },
    #[error("node id {id} out of range for n = {n}")]
    NodeOutOfRange { id: NodeId, n: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no connected graph after {0} attempts; p_edge too small")]
    GenerationExhausted(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("round limit {max_rounds} exceeded")]
    RoundLimitExceeded { max_rounds: u64 },
    #[error("node {node} sent more than one message over an edge in round {round}")]
    BandwidthViolation { node: NodeId, round: u64 },
    #[error("node {node} addressed non-neighbor {target}")]
    NotANeighbor { node: NodeId, target: NodeId },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoutingError {
    #[error("no table entry at node {node} for {target}")]
    MissingEntry { node: NodeId, target: NodeId },
    #[error("malformed label: {0}")]
    MalformedLabel(String),
    #[error("parent pointers contain a cycle through node {0}")]
    CycleDetected(NodeId),
    #[error("route from {from} to {to} did not terminate within {hops} hops")]
    RouteLoop { from: NodeId, to: NodeId, hops: usize },
    #[error("route from {from} to {to} is stuck at node {at}")]
    Stuck { from: NodeId, to: NodeId, at: NodeId },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("node {0} detected no skeleton node")]
    NoSkeletonInRange(NodeId),
    #[error("node {node} has no level-{level} pivot in its tables")]
    PivotMissing { node: NodeId, level: u32 },
    #[error("sampling produced an empty set {0} times in a row")]
    ResampleExhausted(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
