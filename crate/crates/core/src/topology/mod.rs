//! Floor-stair topology graph, the exploration state machine and stair goals.

mod fsm;
mod stairs;

pub use fsm::{
    choose_policy, fsm_step, is_floor_done, ExplorationStatus, FloorDoneParams, FloorProgress,
    PolicyRole,
};
pub use stairs::{nearest_stair_goal, on_stair_goal, Centroid, StairCrossing, MIN_ASPECT};

use crate::grid::{components4, Cell};
use crate::mapping::FloorMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("no unvisited stair on floor {floor}")]
    NoUnvisitedStair { floor: usize },
}

/// A stair between two adjacent floors as discovered by the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct StairEdgeRecord {
    pub id: u32,
    /// Oracle instance id, when the detector reports one.
    pub link: Option<u32>,
    /// Floor the stair was first seen on.
    pub near_floor: usize,
    /// Other floor; `near_floor + 1` until the stair is traversed.
    pub far_floor: usize,
    /// Whether `far_floor` was confirmed by a traversal.
    pub far_resolved: bool,
    regions: BTreeMap<usize, Vec<Cell>>,
    pub visited: bool,
    pub discovered_at: usize,
}

impl StairEdgeRecord {
    pub fn new(id: u32, link: Option<u32>, near_floor: usize, step: usize) -> Self {
        Self {
            id,
            link,
            near_floor,
            far_floor: near_floor + 1,
            far_resolved: false,
            regions: BTreeMap::new(),
            visited: false,
            discovered_at: step,
        }
    }

    /// Stair cells seen on `floor`, sorted by `(y, x)`.
    pub fn region_on(&self, floor: usize) -> Option<&[Cell]> {
        self.regions.get(&floor).map(Vec::as_slice).filter(|r| !r.is_empty())
    }

    pub fn set_region(&mut self, floor: usize, mut cells: Vec<Cell>) {
        cells.sort_by_key(|c| (c.y, c.x));
        cells.dedup();
        self.regions.insert(floor, cells);
    }

    /// `(lower, upper)` floor pair.
    pub fn floors(&self) -> (usize, usize) {
        (self.near_floor.min(self.far_floor), self.near_floor.max(self.far_floor))
    }

    pub fn touches(&self, floor: usize) -> bool {
        self.near_floor == floor || self.far_floor == floor
    }

    /// Bounding-box membership of `cell` in the region on `floor`.
    pub fn bbox_contains(&self, floor: usize, cell: Cell) -> bool {
        let Some(r) = self.region_on(floor) else {
            return false;
        };
        let (x0, x1) = (r.iter().map(|c| c.x).min().unwrap(), r.iter().map(|c| c.x).max().unwrap());
        let (y0, y1) = (r[0].y, r[r.len() - 1].y);
        (x0..=x1).contains(&cell.x) && (y0..=y1).contains(&cell.y)
    }
}

/// A floor of the graph with the agent's map of it.
#[derive(Debug, Clone)]
pub struct FloorNode {
    pub map: FloorMap,
    pub done: bool,
    /// Last coverage ratio reported by the runner.
    pub cr: f64,
    pub progress: FloorProgress,
    /// The 2D policy found nothing left to explore here.
    pub exhausted: bool,
    /// Stair the agent arrived through, `None` for the spawn floor.
    pub arrival_edge: Option<u32>,
    seen_revision: Option<u64>,
}

impl FloorNode {
    fn new(map: FloorMap) -> Self {
        Self {
            map,
            done: false,
            cr: 0.0,
            progress: FloorProgress::default(),
            exhausted: false,
            arrival_edge: None,
            seen_revision: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TopologyGraph {
    size: usize,
    resolution: f64,
    nodes: BTreeMap<usize, FloorNode>,
    edges: Vec<StairEdgeRecord>,
}

impl TopologyGraph {
    pub fn new(size: usize, resolution: f64) -> Self {
        Self {
            size,
            resolution,
            nodes: BTreeMap::new(),
            edges: Vec::new(),
        }
    }

    pub fn nodes(&self) -> &BTreeMap<usize, FloorNode> {
        &self.nodes
    }

    pub fn node(&self, floor: usize) -> Option<&FloorNode> {
        self.nodes.get(&floor)
    }

    pub fn node_mut(&mut self, floor: usize) -> Option<&mut FloorNode> {
        self.nodes.get_mut(&floor)
    }

    /// Adds a node for `floor` if missing; returns whether one was added.
    pub fn ensure_node(&mut self, floor: usize) -> bool {
        if self.nodes.contains_key(&floor) {
            return false;
        }
        let map = FloorMap::new(floor, self.size, self.resolution);
        self.nodes.insert(floor, FloorNode::new(map));
        true
    }

    pub fn edges(&self) -> &[StairEdgeRecord] {
        &self.edges
    }

    pub fn edge(&self, id: u32) -> Option<&StairEdgeRecord> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn visited_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.visited).count()
    }

    /// Refreshes the node of `floor` and the stair edges seen on it from the
    /// node's stair mask. Returns the ids of newly created edges.
    ///
    /// Each 4-connected stair component joins the edge that already owns an
    /// overlapping cell on this floor or shares its instance id; otherwise it
    /// starts a new edge. Calling again without map changes is a no-op.
    pub fn update_graph(&mut self, floor: usize, step: usize) -> Vec<u32> {
        self.ensure_node(floor);
        let node = self.nodes.get_mut(&floor).expect("node exists");
        let revision = node.map.stair_revision();
        if node.seen_revision == Some(revision) {
            return Vec::new();
        }
        node.seen_revision = Some(revision);
        let mask = node.map.stair_mask().clone();
        let comps = components4(self.size, |c| mask.get(c).is_some());

        let mut assigned: BTreeMap<u32, Vec<Cell>> = BTreeMap::new();
        let mut created = Vec::new();
        for comp in comps {
            let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
            for c in &comp {
                if let Some(l) = mask.get(*c) {
                    *counts.entry(*l).or_default() += 1;
                }
            }
            let link = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(l, _)| *l);
            let cells: HashSet<Cell> = comp.iter().copied().collect();
            let owner = self.edges.iter().find(|e| {
                e.region_on(floor).is_some_and(|r| r.iter().any(|c| cells.contains(c)))
                    || (link.is_some() && e.link == link && (e.touches(floor) || !e.far_resolved))
            });
            let id = match owner {
                Some(e) => e.id,
                None => {
                    let id = self.edges.len() as u32;
                    self.edges.push(StairEdgeRecord::new(id, link, floor, step));
                    created.push(id);
                    id
                }
            };
            assigned.entry(id).or_default().extend(comp);
        }
        for (id, cells) in assigned {
            let edge = &mut self.edges[id as usize];
            edge.set_region(floor, cells);
        }
        created
    }

    /// Edge the agent just crossed from `from` with its last cell `last`.
    /// Prefers `active`, then a region containing `last`, then the instance
    /// id. Creates an edge if the stair was never seen.
    pub fn transition_edge(
        &mut self,
        from: usize,
        last: Cell,
        active: Option<u32>,
        link: Option<u32>,
        step: usize,
    ) -> u32 {
        if let Some(id) = active.filter(|id| self.edge(*id).is_some()) {
            return id;
        }
        if let Some(e) = self.edges.iter().find(|e| e.bbox_contains(from, last)) {
            return e.id;
        }
        if let Some(e) = self.edges.iter().find(|e| link.is_some() && e.link == link) {
            return e.id;
        }
        let id = self.edges.len() as u32;
        let mut e = StairEdgeRecord::new(id, link, from, step);
        e.set_region(from, vec![last]);
        self.edges.push(e);
        id
    }

    /// Marks `edge` traversed from `from` to `to` and adds the node for `to`
    /// if it is new.
    pub fn record_transition(&mut self, edge: u32, from: usize, to: usize) {
        let e = &mut self.edges[edge as usize];
        e.near_floor = from;
        e.far_floor = to;
        e.far_resolved = true;
        e.visited = true;
        if self.ensure_node(to) {
            self.nodes.get_mut(&to).expect("just added").arrival_edge = Some(edge);
        }
    }

    fn has_pending(&self, floor: usize) -> bool {
        self.nodes.get(&floor).is_some_and(|n| !n.done)
            || self
                .edges
                .iter()
                .any(|e| !e.visited && e.region_on(floor).is_some())
    }

    /// Floors reachable from `floor` through traversed stairs, with the first
    /// edge on a shortest route to each.
    fn routes(&self, floor: usize) -> BTreeMap<usize, Option<u32>> {
        let mut first: BTreeMap<usize, Option<u32>> = BTreeMap::new();
        first.insert(floor, None);
        let mut queue = VecDeque::from([floor]);
        while let Some(f) = queue.pop_front() {
            for e in self.edges.iter().filter(|e| e.visited && e.touches(f)) {
                let other = if e.near_floor == f { e.far_floor } else { e.near_floor };
                if !first.contains_key(&other) {
                    let hop = first[&f].or(Some(e.id));
                    first.insert(other, hop);
                    queue.push_back(other);
                }
            }
        }
        first
    }

    /// No reachable floor has an unfinished node or an unvisited stair.
    pub fn all_visited(&self, floor: usize) -> bool {
        !self.routes(floor).keys().any(|f| self.has_pending(*f))
    }

    /// Traversed stair on `floor` leading toward the nearest floor with
    /// pending work.
    pub fn route_toward_pending(&self, floor: usize) -> Option<u32> {
        let routes = self.routes(floor);
        let mut order: Vec<(usize, usize)> = routes
            .keys()
            .filter(|f| **f != floor && self.has_pending(**f))
            .map(|f| (f.abs_diff(floor), *f))
            .collect();
        order.sort();
        order.first().and_then(|(_, f)| routes[f])
    }

    /// Machine-readable snapshot for analysis tools.
    pub fn to_dump(&self) -> TopologyDump {
        let centroid = |e: &StairEdgeRecord, f: usize| {
            e.region_on(f).and_then(Centroid::of).map(|c| {
                let (x, y) = c.as_f64();
                [x, y]
            })
        };
        TopologyDump {
            nodes: self
                .nodes
                .iter()
                .map(|(f, n)| NodeDump {
                    floor: *f,
                    cr: n.cr,
                    done: n.done,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    let (lo, hi) = e.floors();
                    EdgeDump {
                        id: e.id,
                        floors: [lo, hi],
                        centroid_lower: centroid(e, lo),
                        centroid_upper: centroid(e, hi),
                        visited: e.visited,
                    }
                })
                .collect(),
        }
    }

    /// Floors with a node, ascending.
    pub fn floors(&self) -> BTreeSet<usize> {
        self.nodes.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDump {
    pub floor: usize,
    #[serde(rename = "CR")]
    pub cr: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDump {
    pub id: u32,
    pub floors: [usize; 2],
    /// Region centroid in cell coordinates on the lower floor.
    pub centroid_lower: Option<[f64; 2]>,
    pub centroid_upper: Option<[f64; 2]>,
    pub visited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDump {
    pub nodes: Vec<NodeDump>,
    pub edges: Vec<EdgeDump>,
}
