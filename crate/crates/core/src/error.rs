use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the trajectory pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate: lat={lat}, lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("invalid timestamp: {0}")]
    InvalidTimestamp(f64),
    #[error("non-positive time interval ({0} s) between waypoints")]
    NonPositiveInterval(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed GPX: {0}")]
    MalformedGpx(String),
    #[error("GPX track has no usable points")]
    EmptyTrack,

    #[error("malformed OSM document: {0}")]
    MalformedOsm(String),
    #[error("way {way_id} references missing node {node_id}")]
    DanglingNodeRef { way_id: i64, node_id: i64 },
    #[error("unknown node {0}")]
    UnknownNode(i64),
    #[error("no route between anchors")]
    Unreachable,

    #[error("no point of the segment has a candidate road")]
    NoMatch,
    #[error("remote match service unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("remote service rejected the request: {code}: {message}")]
    RemoteRejected { code: String, message: String },
    #[error("could not parse service response: {0}")]
    ParseError(String),

    #[error("node {node_id} is not on way {way_id}")]
    NodeNotOnWay { way_id: i64, node_id: i64 },

    #[error("participant has zero total trip duration")]
    ZeroDuration,

    #[error("route entry ({from_node} -> {to_node}) does not correspond to a network arc")]
    UnknownArc { from_node: i64, to_node: i64 },
    #[error("ground-truth route has zero length")]
    ZeroTruthLength,

    #[error("no input files found in {0}")]
    NoInput(PathBuf),
    #[error("failed to load road network from {path}: {reason}")]
    NetworkLoadFailure { path: PathBuf, reason: String },
    #[error("missing output of a previous stage: {0}")]
    MissingStageOutput(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status for the command-line tool: 2 for bad input,
    /// 3 when a remote backend fails, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RemoteUnavailable(_) | Error::RemoteRejected { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
