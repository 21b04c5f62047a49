use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How external services (model, search, scraping) are reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Call live endpoints only.
    #[default]
    Live,
    /// Call live endpoints and write every response to the fixture stores.
    Record,
    /// Serve every response from fixtures; never touch the network.
    Replay,
}

impl Mode {
    pub const ENV: &'static str = "HIFI_MODE";

    pub fn from_env() -> Result<Self, String> {
        match std::env::var(Self::ENV) {
            Ok(v) if !v.trim().is_empty() => v.parse(),
            _ => Ok(Mode::Live),
        }
    }

    pub fn uses_network(self) -> bool {
        self != Mode::Replay
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(format!("invalid mode `{other}` (expected live, record or replay)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Live => "live",
            Mode::Record => "record",
            Mode::Replay => "replay",
        })
    }
}
