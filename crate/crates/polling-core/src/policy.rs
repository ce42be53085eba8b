//! Service disciplines for the polling server.

use serde::{Deserialize, Serialize};

/// How the server decides whom to serve while touring the circle.
///
/// Under the globally gated discipline, a gate snapshot is taken each time
/// the server passes the depot; during the following tour only customers
/// present at the snapshot are served. Under the exhaustive discipline the
/// server serves every customer it encounters, including those who arrived
/// after the current tour began.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    #[serde(rename = "gg", alias = "globally_gated")]
    GloballyGated,
    Exhaustive,
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Policy::GloballyGated => write!(f, "gg"),
            Policy::Exhaustive => write!(f, "exhaustive"),
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gg" | "globally_gated" => Ok(Policy::GloballyGated),
            "exhaustive" => Ok(Policy::Exhaustive),
            other => Err(format!(
                "unknown policy {other:?}; expected \"gg\" or \"exhaustive\""
            )),
        }
    }
}
