use super::RunError;
use crate::world::{generate_world, load_world, MultiFloorWorld, WorldSpec};
use std::path::PathBuf;
use std::str::FromStr;

/// Where an episode's world comes from.
///
/// Written as a directory path, or `gen:` followed by an inline JSON spec
/// (`gen:{"n_floors":3}`), comma-separated `key=value` pairs
/// (`gen:n_floors=3,M=96`), a path to a JSON spec file, or nothing for the
/// default spec.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldSource {
    Dir(PathBuf),
    Generate(WorldSpec),
}

impl FromStr for WorldSource {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some(spec) = s.strip_prefix("gen:") else {
            return Ok(WorldSource::Dir(PathBuf::from(s)));
        };
        let spec = spec.trim();
        let parsed = if spec.is_empty() {
            Ok(WorldSpec::default())
        } else if spec.starts_with('{') {
            serde_json::from_str(spec).map_err(|e| e.to_string())
        } else if spec.contains('=') {
            let mut obj = serde_json::Map::new();
            for pair in spec.split(',') {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| RunError::Config(format!("expected key=value, got `{pair}`")))?;
                let value = serde_json::from_str(v.trim())
                    .map_err(|_| RunError::Config(format!("`{k}` needs a numeric value, got `{v}`")))?;
                obj.insert(k.trim().to_string(), value);
            }
            serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| e.to_string())
        } else {
            let text = std::fs::read_to_string(spec)
                .map_err(|e| RunError::Config(format!("cannot read world spec {spec}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed
            .map(WorldSource::Generate)
            .map_err(|e| RunError::Config(format!("invalid world spec `{spec}`: {e}")))
    }
}

impl WorldSource {
    /// Loads or generates the world; `seed` is used for generation only.
    /// A missing directory is a configuration error.
    pub fn resolve(&self, seed: u64) -> Result<MultiFloorWorld, RunError> {
        match self {
            WorldSource::Dir(dir) if !dir.is_dir() => Err(RunError::Config(format!(
                "world directory {} does not exist",
                dir.display()
            ))),
            WorldSource::Dir(dir) => Ok(load_world(dir)?),
            WorldSource::Generate(spec) => Ok(generate_world(seed, spec)?),
        }
    }
}
