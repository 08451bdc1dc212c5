use super::{run_episode, write_outputs, RunConfig, RunError, WorldSource};
use crate::policies::PolicyKind;
use crate::world::{MultiFloorWorld, WorldSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Worlds of a batch: explicit sources, or `count` generated worlds with
/// seeds `base_seed..base_seed + count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchWorlds {
    Sources(Vec<String>),
    Generated {
        spec: WorldSpec,
        count: usize,
        #[serde(default)]
        base_seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedList {
    /// Seeds `0..n`.
    Count(u64),
    List(Vec<u64>),
}

impl SeedList {
    fn seeds(&self) -> Vec<u64> {
        match self {
            SeedList::Count(n) => (0..*n).collect(),
            SeedList::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub worlds: BatchWorlds,
    pub policies: Vec<PolicyKind>,
    pub seeds: SeedList,
    #[serde(default)]
    pub config: RunConfig,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Output directory for `runs.csv` and `aggregate.json`.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Also write each episode's outputs under `episodes/`.
    #[serde(default)]
    pub save_episodes: bool,
}

/// Result row of one `(world, policy, seed)` episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub world: String,
    pub policy: String,
    pub seed: u64,
    pub steps: usize,
    pub cr: f64,
    pub ca: f64,
    pub path_length: f64,
    pub apl: f64,
    pub sr: f64,
    pub status: String,
    pub nodes: usize,
    pub visited_edges: usize,
}

pub const RUNS_HEADER: &str = "world,policy,seed,steps,cr,ca,path_length,apl,sr,status,nodes,visited_edges";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub runs: usize,
    pub cr: MeanStd,
    pub ca: MeanStd,
    pub apl: MeanStd,
    pub sr: MeanStd,
    pub steps: MeanStd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    /// Rows ordered by world, policy, seed.
    pub rows: Vec<RunRow>,
    pub aggregate: BTreeMap<String, PolicyAggregate>,
}

impl BatchOutcome {
    pub fn runs_csv(&self) -> String {
        let mut out = String::from(RUNS_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.4},{:.6},{},{},{},{}",
                r.world, r.policy, r.seed, r.steps, r.cr, r.ca, r.path_length, r.apl, r.sr, r.status,
                r.nodes, r.visited_edges
            )
            .expect("writing to a string");
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        let runs = dir.join("runs.csv");
        std::fs::write(&runs, self.runs_csv()).map_err(|e| RunError::io(&runs, e))?;
        let agg = dir.join("aggregate.json");
        let text = serde_json::to_string_pretty(&self.aggregate).expect("serializable");
        std::fs::write(&agg, text).map_err(|e| RunError::io(&agg, e))
    }
}

fn load_worlds(worlds: &BatchWorlds) -> Result<Vec<(String, MultiFloorWorld)>, RunError> {
    match worlds {
        BatchWorlds::Sources(list) => list
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let source: WorldSource = s.parse()?;
                let label = match &source {
                    WorldSource::Dir(d) => d.display().to_string(),
                    WorldSource::Generate(_) => format!("gen{i}"),
                };
                Ok((label, source.resolve(i as u64)?))
            })
            .collect(),
        BatchWorlds::Generated {
            spec,
            count,
            base_seed,
        } => (0..*count as u64)
            .into_par_iter()
            .map(|i| {
                let seed = base_seed + i;
                Ok((format!("gen{seed}"), crate::world::generate_world(seed, spec)?))
            })
            .collect(),
    }
}

/// Runs every `(world, policy, seed)` combination.
pub fn run_batch(batch: &BatchConfig) -> Result<BatchOutcome, RunError> {
    if batch.policies.is_empty() {
        return Err(RunError::Config(
            "no policies given; add for example \"policies\": [\"nearest\", \"utility\"]".into(),
        ));
    }
    let seeds = batch.seeds.seeds();
    if seeds.is_empty() {
        return Err(RunError::Config("no seeds given".into()));
    }
    batch.config.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = batch.parallelism {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| RunError::Config(format!("cannot start worker threads: {e}")))?;
    pool.install(|| {
        let worlds = load_worlds(&batch.worlds)?;
        let mut jobs: Vec<(usize, &PolicyKind, u64)> = Vec::new();
        for w in 0..worlds.len() {
            for p in &batch.policies {
                jobs.extend(seeds.iter().map(|&s| (w, p, s)));
            }
        }
        let rows = jobs
            .par_iter()
            .map(|&(w, kind, seed)| {
                let (label, world) = &worlds[w];
                let record = run_episode(world, kind, &batch.config, seed)?;
                if let (true, Some(out)) = (batch.save_episodes, &batch.out) {
                    let dir = out
                        .join("episodes")
                        .join(format!("{label}_{}_{seed}", kind.to_string().replace([':', ' ', '/'], "_")));
                    write_outputs(&record, &dir, serde_json::json!({ "seed": seed }))?;
                }
                let m = record.metrics();
                Ok(RunRow {
                    world: label.clone(),
                    policy: kind.to_string(),
                    seed,
                    steps: m.steps,
                    cr: m.cr,
                    ca: m.ca,
                    path_length: m.path_length,
                    apl: m.apl,
                    sr: m.sr,
                    status: record.summary.final_status.to_string(),
                    nodes: record.summary.nodes,
                    visited_edges: record.summary.visited_edges,
                })
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        let mut aggregate = BTreeMap::new();
        for kind in &batch.policies {
            let name = kind.to_string();
            let mine: Vec<&RunRow> = rows.iter().filter(|r| r.policy == name).collect();
            let col = |f: fn(&RunRow) -> f64| MeanStd::of(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            aggregate.insert(
                name,
                PolicyAggregate {
                    runs: mine.len(),
                    cr: col(|r| r.cr),
                    ca: col(|r| r.ca),
                    apl: col(|r| r.apl),
                    sr: col(|r| r.sr),
                    steps: col(|r| r.steps as f64),
                },
            );
        }
        Ok(BatchOutcome { rows, aggregate })
    })
}
