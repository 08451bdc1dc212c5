use super::FloorMap;
use crate::grid::{Cell, CellState};
use crate::world::Pose;

/// Channel order of [`ObservationStack`].
pub const CHANNEL_NAMES: [&str; 8] = [
    "local_obstacle",
    "local_explored",
    "local_pose",
    "local_trajectory",
    "global_obstacle",
    "global_explored",
    "global_pose",
    "global_trajectory",
];

/// Eight `side × side` channels with values in `[0, 1]` plus the heading.
///
/// The first four channels crop the agent-centered window (zero outside
/// the map), the last four max-pool the whole map down to the window size.
/// Channels are row-major: index `row * side + col`, rows along `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationStack {
    side: usize,
    channels: Vec<Vec<f32>>,
    heading: f64,
}

impl ObservationStack {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn channel(&self, i: usize) -> &[f32] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f32>] {
        &self.channels
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.channels[channel][row * self.side + col]
    }

    /// Max-pools every channel to `side × side`.
    pub fn downsample(&self, side: usize) -> ObservationStack {
        assert!(side > 0 && side <= self.side);
        let channels = self
            .channels
            .iter()
            .map(|ch| max_pool(self.side, side, |c| ch[c.y * self.side + c.x]))
            .collect();
        ObservationStack {
            side,
            channels,
            heading: self.heading,
        }
    }
}

fn bin(i: usize, from: usize, to: usize) -> std::ops::Range<usize> {
    (i * from / to)..((i + 1) * from / to).max(i * from / to + 1)
}

fn max_pool(from: usize, to: usize, value: impl Fn(Cell) -> f32) -> Vec<f32> {
    let mut out = vec![0.0f32; to * to];
    for row in 0..to {
        for col in 0..to {
            let mut best = 0.0f32;
            for y in bin(row, from, to) {
                for x in bin(col, from, to) {
                    best = best.max(value(Cell::new(x, y)));
                }
            }
            out[row * to + col] = best;
        }
    }
    out
}

/// Builds the stacked observation for a window of side `side` (≤ map size).
pub fn build_observation(map: &FloorMap, pose: &Pose, side: usize) -> ObservationStack {
    let m = map.size();
    assert!(side > 0 && side <= m, "window side must lie in 1..=M");
    let agent = pose
        .cell(map.resolution(), m)
        .expect("pose must lie inside the map");
    let obstacle = |c: Cell| (map.state(c) == CellState::Occupied) as u8 as f32;
    let explored = |c: Cell| (map.state(c) != CellState::Unknown) as u8 as f32;
    let trajectory = |c: Cell| (*map.visits().get(c) > 0) as u8 as f32;
    let pose_ch = |c: Cell| (c == agent) as u8 as f32;

    let half = (side / 2) as i64;
    let local = |f: &dyn Fn(Cell) -> f32| {
        let mut out = vec![0.0f32; side * side];
        for row in 0..side {
            for col in 0..side {
                if let Some(c) = agent.offset(col as i64 - half, row as i64 - half, m) {
                    out[row * side + col] = f(c);
                }
            }
        }
        out
    };
    let channels = vec![
        local(&obstacle),
        local(&explored),
        local(&pose_ch),
        local(&trajectory),
        max_pool(m, side, obstacle),
        max_pool(m, side, explored),
        max_pool(m, side, pose_ch),
        max_pool(m, side, trajectory),
    ];
    ObservationStack {
        side,
        channels,
        heading: pose.heading,
    }
}
