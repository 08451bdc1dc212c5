use multifloor_explore::frontier::{detect_frontiers, is_frontier_cell};
use multifloor_explore::grid::{line_cells, Cell, CellState};
use multifloor_explore::mapping::FloorMap;
use multifloor_explore::policies::{
    build_policy, compute_reward, PolicyContext, PolicyKind, PolicyParams, RewardParams,
};
use multifloor_explore::topology::{nearest_stair_goal, Centroid, StairEdgeRecord, TopologyGraph};
use multifloor_explore::world::{
    generate_world, step_agent, wrap_angle, MotionCommand, MotionLimits, MultiFloorWorld, Pose, Sensor,
    WorldSpec,
};
use proptest::prelude::*;
use std::collections::BTreeSet;
use std::sync::OnceLock;

fn worlds() -> &'static [MultiFloorWorld] {
    static WORLDS: OnceLock<Vec<MultiFloorWorld>> = OnceLock::new();
    WORLDS.get_or_init(|| {
        (0..4)
            .map(|seed| {
                let spec = WorldSpec { n_floors: 2, size: 64, ..WorldSpec::default() };
                generate_world(seed, &spec).expect("world generates")
            })
            .collect()
    })
}

/// The `k`-th traversable cell of a floor, wrapping around.
fn free_cell(world: &MultiFloorWorld, floor: usize, k: usize) -> Cell {
    let cells: Vec<Cell> = world
        .floor(floor)
        .cells()
        .filter(|&c| world.is_traversable(floor, c))
        .collect();
    cells[k % cells.len()]
}

/// Map built by sensing from a few poses on floor 0.
fn partial_map(world: &MultiFloorWorld, picks: &[(usize, f64)]) -> FloorMap {
    let sensor = Sensor::new(2.0, std::f64::consts::FRAC_PI_2, world.resolution());
    let mut map = FloorMap::new(0, world.size(), world.resolution());
    for &(k, heading) in picks {
        let pose = Pose::at_cell(0, free_cell(world, 0, k), world.resolution(), heading);
        map.integrate(&sensor.sense(world, &pose)).expect("same floor");
    }
    map
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sensor_matches_full_recast(w in 0usize..4, floor in 0usize..2, k in any::<usize>(),
                                  heading in -3.14f64..3.14, range in 0.3f64..3.0, fov in 0.5f64..6.3) {
        let world = &worlds()[w];
        let origin = free_cell(world, floor, k);
        let pose = Pose::at_cell(floor, origin, world.resolution(), heading);
        let frame = Sensor::new(range, fov, world.resolution()).sense(world, &pose);
        let got: BTreeSet<Cell> = frame.visible_free.iter().chain(&frame.visible_occupied).copied().collect();
        prop_assert_eq!(got.len(), frame.len(), "no cell reported twice");

        let grid = world.floor(floor);
        let range_cells = range / world.resolution();
        let mut want = BTreeSet::from([origin]);
        for c in grid.cells() {
            let (dx, dy) = (c.x as i64 - origin.x as i64, c.y as i64 - origin.y as i64);
            if (dx, dy) == (0, 0) || ((dx * dx + dy * dy) as f64).sqrt() > range_cells + 1e-9 {
                continue;
            }
            if fov < 2.0 * std::f64::consts::PI
                && wrap_angle((dy as f64).atan2(dx as f64) - heading).abs() >= fov / 2.0
            {
                continue;
            }
            let line = line_cells((origin.x as i64, origin.y as i64), (c.x as i64, c.y as i64));
            let blocked = line[1..line.len() - 1]
                .iter()
                .any(|&(x, y)| *grid.get(Cell::new(x as usize, y as usize)) == CellState::Occupied);
            if !blocked {
                want.insert(c);
            }
        }
        prop_assert_eq!(&got, &want);
        for c in &frame.visible_free {
            prop_assert_eq!(*grid.get(*c), CellState::Free);
        }
        for d in &frame.stair_detections {
            prop_assert!(got.contains(&d.cell));
            prop_assert_eq!(world.stair_mask(floor).get(d.cell), &Some(d.link));
        }
    }

    #[test]
    fn motion_never_ends_on_an_occupied_cell(w in 0usize..4, k in any::<usize>(),
                                             commands in prop::collection::vec((any::<bool>(), -1.0f64..1.0), 1..120)) {
        let world = &worlds()[w];
        let limits = MotionLimits::default();
        let mut pose = Pose::at_cell(0, free_cell(world, 0, k), world.resolution(), 0.0);
        for (forward, amount) in commands {
            let cmd = if forward {
                MotionCommand::Forward(amount.abs() * 0.4)
            } else {
                MotionCommand::Rotate(amount * 1.2)
            };
            let out = step_agent(world, &pose, cmd, &limits);
            prop_assert!(world.point_traversable(out.pose.floor, out.pose.x, out.pose.y));
            prop_assert!(out.travelled <= limits.max_forward + 1e-9);
            prop_assert!(out.pose.heading >= -std::f64::consts::PI && out.pose.heading < std::f64::consts::PI);
            pose = out.pose;
        }
    }

    #[test]
    fn integration_is_idempotent_and_commutative(w in 0usize..4, a in any::<usize>(), b in any::<usize>(),
                                                 ha in -3.14f64..3.14, hb in -3.14f64..3.14) {
        let world = &worlds()[w];
        let sensor = Sensor::new(3.0, std::f64::consts::FRAC_PI_2, world.resolution());
        let pa = Pose::at_cell(0, free_cell(world, 0, a), world.resolution(), ha);
        let pb = Pose::at_cell(0, free_cell(world, 0, b), world.resolution(), hb);
        let (fa, fb) = (sensor.sense(world, &pa), sensor.sense(world, &pb));

        let mut once = FloorMap::new(0, world.size(), world.resolution());
        once.integrate(&fa).unwrap();
        let mut twice = once.clone();
        twice.integrate(&fa).unwrap();
        prop_assert_eq!(once.explored(), twice.explored());
        prop_assert_eq!(once.stair_mask(), twice.stair_mask());

        let mut ab = once.clone();
        ab.integrate(&fb).unwrap();
        let mut ba = FloorMap::new(0, world.size(), world.resolution());
        ba.integrate(&fb).unwrap();
        ba.integrate(&fa).unwrap();
        prop_assert_eq!(ab.explored(), ba.explored());
        prop_assert_eq!(ab.stair_mask(), ba.stair_mask());
        prop_assert!(ab.known_cells() >= once.known_cells());
    }

    #[test]
    fn frontier_edges_partition_retained_cells(w in 0usize..4, picks in prop::collection::vec((any::<usize>(), -3.14f64..3.14), 1..5),
                                               min_edge in 1usize..8) {
        let map = partial_map(&worlds()[w], &picks);
        let fs = detect_frontiers(&map, min_edge);
        let all: BTreeSet<Cell> = fs.cells.iter().copied().collect();
        for c in map.explored().cells() {
            prop_assert_eq!(all.contains(&c), is_frontier_cell(&map, c));
        }
        let mut seen = BTreeSet::new();
        for e in &fs.edges {
            prop_assert!(e.len() >= min_edge);
            for c in &e.cells {
                prop_assert!(all.contains(c));
                prop_assert!(seen.insert(*c), "cell in two edges");
            }
            prop_assert!(e.cells.contains(&e.goal) || map.state(e.goal) == CellState::Free);
        }
    }

    #[test]
    fn policy_goals_stay_inside_the_window(w in 0usize..4, picks in prop::collection::vec((any::<usize>(), -3.14f64..3.14), 1..5),
                                           window in 8usize..80, policy in 0usize..4, seed in any::<u64>()) {
        let world = &worlds()[w];
        let map = partial_map(world, &picks);
        let fs = detect_frontiers(&map, 1);
        let pose = Pose::at_cell(0, free_cell(world, 0, picks[0].0), world.resolution(), picks[0].1);
        let ctx = PolicyContext::new(&map, pose, &fs, window, 0, 2.0, &[]);
        let kind = [PolicyKind::Nearest, PolicyKind::Utility, PolicyKind::RrtNbv, PolicyKind::Stochastic][policy].clone();
        let mut p = build_policy(&kind, &PolicyParams::default(), seed).unwrap();
        if let Ok(goal) = p.select_goal(&ctx) {
            prop_assert!(ctx.window.contains(goal.cell), "{kind} goal {:?} outside {:?}", goal.cell, ctx.window);
            prop_assert!(ctx.window.side <= window.min(world.size()));
        }
    }

    #[test]
    fn reward_ignores_frontier_order(w in 0usize..4, picks in prop::collection::vec((any::<usize>(), -3.14f64..3.14), 2..5),
                                     goal in any::<usize>(), rotate in any::<usize>()) {
        let world = &worlds()[w];
        let before = partial_map(world, &picks[..1]);
        let after = partial_map(world, &picks);
        let fs = detect_frontiers(&before, 1);
        let goal = free_cell(world, 0, goal);
        let params = RewardParams::default();
        let base = compute_reward(&before, &after, goal, &fs, &params);
        let mut shuffled = fs.clone();
        if !shuffled.edges.is_empty() {
            let n = shuffled.edges.len();
            shuffled.edges.rotate_left(rotate % n);
            shuffled.edges.reverse();
        }
        prop_assert_eq!(base, compute_reward(&before, &after, goal, &shuffled, &params));
        prop_assert!(base.r_g >= 0.0);
    }

    #[test]
    fn nearest_stair_matches_brute_force(regions in prop::collection::vec(
                                             (prop::collection::btree_set((0usize..40, 0usize..40), 1..10), any::<bool>()), 1..6),
                                         ax in 0usize..40, ay in 0usize..40) {
        let mut edges = Vec::new();
        for (id, (cells, visited)) in regions.iter().enumerate() {
            let mut e = StairEdgeRecord::new(id as u32, None, 0, 0);
            e.set_region(0, cells.iter().map(|&(x, y)| Cell::new(x, y)).collect());
            e.visited = *visited;
            edges.push(e);
        }
        let agent = Cell::new(ax, ay);
        // Squared distance to the mean scaled by n², compared across edges by
        // cross-multiplying with the other edge's n².
        let score = |cells: &BTreeSet<(usize, usize)>| {
            let n = cells.len() as i128;
            let sx: i128 = cells.iter().map(|c| c.0 as i128).sum();
            let sy: i128 = cells.iter().map(|c| c.1 as i128).sum();
            let (dx, dy) = (sx - n * ax as i128, sy - n * ay as i128);
            (dx * dx + dy * dy, n * n)
        };
        let mut best: Option<(usize, (i128, i128))> = None;
        for (id, (cells, visited)) in regions.iter().enumerate() {
            if *visited {
                continue;
            }
            let s = score(cells);
            if best.is_none_or(|(_, b)| s.0 * b.1 < b.0 * s.1) {
                best = Some((id, s));
            }
        }
        match (best, nearest_stair_goal(&edges, 0, agent)) {
            (None, Err(_)) => {}
            (Some((id, _)), Ok((got, goal))) => {
                prop_assert_eq!(got as usize, id);
                let c = Centroid::of(edges[id].region_on(0).unwrap()).unwrap();
                let (mx, my) = c.as_f64();
                prop_assert!((goal.x as f64 - mx).abs() <= 0.5 && (goal.y as f64 - my).abs() <= 0.5);
            }
            (b, g) => prop_assert!(false, "brute {:?} vs {:?}", b, g),
        }
    }

    #[test]
    fn update_graph_is_idempotent(w in 0usize..4, picks in prop::collection::vec((any::<usize>(), -3.14f64..3.14), 1..8)) {
        let world = &worlds()[w];
        let sensor = Sensor::new(5.0, std::f64::consts::FRAC_PI_2, world.resolution());
        let mut graph = TopologyGraph::new(world.size(), world.resolution());
        graph.ensure_node(0);
        for (step, &(k, heading)) in picks.iter().enumerate() {
            let pose = Pose::at_cell(0, free_cell(world, 0, k), world.resolution(), heading);
            graph.node_mut(0).unwrap().map.integrate(&sensor.sense(world, &pose)).unwrap();
            graph.update_graph(0, step);
            let edges = graph.edges().to_vec();
            prop_assert!(graph.update_graph(0, step).is_empty());
            prop_assert_eq!(graph.edges(), &edges[..]);
        }
        let ids: BTreeSet<u32> = graph.edges().iter().map(|e| e.id).collect();
        prop_assert_eq!(ids.len(), graph.edges().len());
    }
}
