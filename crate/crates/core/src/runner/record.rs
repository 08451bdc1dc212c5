use super::RunError;
use crate::mapping::{coverage, dump_maps};
use crate::topology::{ExplorationStatus, TopologyGraph};
use crate::world::MultiFloorWorld;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const CSV_HEADER: &str = "step,floor,x,y,heading,status,cr_floor,ca_floor,path_len,goal_x,goal_y";

/// State after `step` primitive steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub step: usize,
    pub floor: usize,
    /// Position in meters.
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub status: ExplorationStatus,
    pub cr_floor: f64,
    /// Covered area of the current floor in m².
    pub ca_floor: f64,
    /// Cumulative path length in meters.
    pub path_len: f64,
    /// Active goal in meters.
    pub goal: Option<(f64, f64)>,
}

impl StepRow {
    fn write_csv(&self, out: &mut String) {
        let (gx, gy) = match self.goal {
            Some((x, y)) => (format!("{x:.4}"), format!("{y:.4}")),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{},{:.6},{:.6},{:.4},{},{}",
            self.step,
            self.floor,
            self.x,
            self.y,
            self.heading,
            self.status,
            self.cr_floor,
            self.ca_floor,
            self.path_len,
            gx,
            gy
        )
        .expect("writing to a string");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorMetrics {
    pub floor: usize,
    pub cr: f64,
    pub ca: f64,
}

/// Terminal summary of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    /// Coverage of every world floor, visited or not.
    pub floors: Vec<FloorMetrics>,
    pub steps: usize,
    pub path_length: f64,
    pub collisions: usize,
    pub final_status: ExplorationStatus,
    pub nodes: usize,
    pub visited_edges: usize,
    pub edges: usize,
    pub wall_time_s: f64,
}

impl EpisodeSummary {
    pub(super) fn from_run(
        world: &MultiFloorWorld,
        graph: &TopologyGraph,
        steps: usize,
        path_length: f64,
        collisions: usize,
        final_status: ExplorationStatus,
        wall_time_s: f64,
    ) -> Self {
        let floors = (0..world.n_floors())
            .map(|f| match graph.node(f) {
                Some(n) => {
                    let c = coverage(&n.map, world.floor(f));
                    FloorMetrics { floor: f, cr: c.cr, ca: c.ca }
                }
                None => FloorMetrics { floor: f, cr: 0.0, ca: 0.0 },
            })
            .collect();
        Self {
            floors,
            steps,
            path_length,
            collisions,
            final_status,
            nodes: graph.nodes().len(),
            visited_edges: graph.visited_edge_count(),
            edges: graph.edges().len(),
            wall_time_s,
        }
    }
}

/// Everything produced by one episode.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub rows: Vec<StepRow>,
    pub summary: EpisodeSummary,
    pub graph: TopologyGraph,
}

impl EpisodeRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            row.write_csv(&mut out);
        }
        out
    }

    pub fn metrics(&self) -> MetricsSummary {
        compute_metrics(&self.summary)
    }
}

/// Coverage metrics of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    /// Mean coverage ratio over the world's floors.
    pub cr: f64,
    /// Total covered area in m².
    pub ca: f64,
    /// Covered area per meter travelled.
    pub apl: f64,
    /// Set when nothing was travelled and APL is reported as 0.
    pub apl_degenerate: bool,
    /// 1 when the mean coverage ratio exceeds 0.95.
    pub sr: f64,
    pub path_length: f64,
    pub steps: usize,
}

pub fn compute_metrics(summary: &EpisodeSummary) -> MetricsSummary {
    let n = summary.floors.len().max(1) as f64;
    let cr = summary.floors.iter().map(|f| f.cr).sum::<f64>() / n;
    let ca = summary.floors.iter().map(|f| f.ca).sum::<f64>();
    let degenerate = summary.path_length <= 0.0;
    MetricsSummary {
        cr,
        ca,
        apl: if degenerate { 0.0 } else { ca / summary.path_length },
        apl_degenerate: degenerate,
        sr: if cr > 0.95 { 1.0 } else { 0.0 },
        path_length: summary.path_length,
        steps: summary.steps,
    }
}

pub fn write_episode_csv(record: &EpisodeRecord, path: &Path) -> Result<(), RunError> {
    std::fs::write(path, record.to_csv()).map_err(|e| RunError::io(path, e))
}

/// Writes `episode.csv`, `summary.json`, `topology.json` and the map dump
/// under `maps/`.
pub fn write_outputs(record: &EpisodeRecord, dir: &Path, extra: serde_json::Value) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    write_episode_csv(record, &dir.join("episode.csv"))?;
    let mut summary = serde_json::json!({
        "summary": record.summary,
        "metrics": record.metrics(),
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (summary.as_object_mut(), extra) {
        obj.extend(more);
    }
    let write_json = |name: &str, value: &serde_json::Value| {
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(value).expect("serializable");
        std::fs::write(&path, text).map_err(|e| RunError::io(&path, e))
    };
    write_json("summary.json", &summary)?;
    write_json(
        "topology.json",
        &serde_json::to_value(record.graph.to_dump()).expect("serializable"),
    )?;
    let maps = dir.join("maps");
    dump_maps(record.graph.nodes().values().map(|n| &n.map), &maps).map_err(|e| RunError::io(&maps, e))
}
