use std::collections::{BTreeMap, BTreeSet};

use gridthor_bench::episode::initial_world;
use gridthor_bench::replay::TrajectoryOverlay;
use gridthor_bench::report::{read_rows, rows_from_csv, rows_to_csv, ROWS_FILE, TABLE_FILE};
use gridthor_bench::suite::{participant_sequences, plan_trials, shipped_suite, Participants, SuiteConfig};
use gridthor_bench::{
    emit_report, estimate_optimal_ticks, run_episode, run_suite, Adoption, EpisodeLimits, EpisodeRequest, EpisodeResult,
    HumanSeat, ReportFormat, RunReport, Setting,
};
use gridthor_core::catalog::ObjectKind;
use gridthor_core::nav::{FrontierRobot, HumanProxy, Policy, ProxyParams};
use gridthor_core::replay::replay_from_reader;
use gridthor_core::scene::{CellKind, Grid, ReceptacleAnchor};
use gridthor_core::seed::{derive_seed, rng_from};
use gridthor_core::sim::run_local;
use gridthor_core::world::{Capability, Containment, ObjectInstance, Role};
use gridthor_core::{shipped, Cell, ErrorCode, GoalSpec, Heading, Rect, SceneSpec, TaskSpec, World};
use proptest::prelude::*;
use rand::Rng;

fn walled(width: usize, height: usize) -> Grid {
    let mut g = Grid::new(width, height, CellKind::Wall);
    for y in 1..height as i32 - 1 {
        for x in 1..width as i32 - 1 {
            g.set(Cell::new(x, y), CellKind::Floor);
        }
    }
    g
}

fn scene(grid: Grid, anchors: Vec<ReceptacleAnchor>) -> SceneSpec {
    SceneSpec {
        scene_id: "hand".into(),
        name: "hand".into(),
        cell_size: 0.25,
        grid,
        receptacle_anchors: anchors,
        spawn_regions: vec![],
    }
}

fn fridge(region: Rect, openable: bool) -> ReceptacleAnchor {
    ReceptacleAnchor {
        category: "fridge".into(),
        region,
        openable,
    }
}

fn apple(id: &str, at: Cell) -> ObjectInstance {
    ObjectInstance {
        object_id: id.into(),
        category: "apple".into(),
        kind: ObjectKind::Target,
        position: at,
        containment: Containment::OnFloor,
        openable: false,
        is_open: false,
        region: None,
    }
}

fn hand_world(spec: SceneSpec, apples: &[Cell], human: Cell, goal: GoalSpec) -> World {
    let mut w = World::new(spec).unwrap();
    for (i, c) in apples.iter().enumerate() {
        w.insert_object(apple(&format!("apple_{}", i + 1), *c)).unwrap();
    }
    w.set_goal(goal, &shipped::registry()).unwrap();
    w.add_agent_at("human", Role::Human, Capability::ALL.into_iter().collect(), human, Heading::new(0).unwrap())
        .unwrap();
    w
}

#[test]
fn corridor_hand_trace() {
    // one-cell corridor: human at x=1, apple at x=21, closed fridge at x=22.
    // Best plan: 19 cells to x=20 (10 ticks), pick (1), one cell back onto
    // x=21 next to the fridge (1), open (1), place (1) = 14.
    let mut grid = Grid::new(25, 10, CellKind::Wall);
    for x in 1..24 {
        grid.set(Cell::new(x, 1), CellKind::Floor);
    }
    let spec = scene(grid, vec![fridge(Rect::new(22, 1, 22, 1), true)]);
    let w = hand_world(spec.clone(), &[Cell::new(21, 1)], Cell::new(1, 1), GoalSpec::manipulation("apple", "fridge"));
    assert_eq!(estimate_optimal_ticks(&w).unwrap(), 14);

    // an already-open fridge saves the open tick
    let mut open = w.clone();
    open.objects.get_mut("fridge_1").unwrap().is_open = true;
    assert_eq!(estimate_optimal_ticks(&open).unwrap(), 13);
}

#[test]
fn navigation_within_range_costs_nothing() {
    let spec = scene(walled(30, 10), vec![]);
    let nav = GoalSpec::navigation("apple");
    // detector range 1.5 m = 6 cells
    let near = hand_world(spec.clone(), &[Cell::new(8, 3)], Cell::new(2, 3), nav.clone());
    assert_eq!(estimate_optimal_ticks(&near).unwrap(), 0);
    let far = hand_world(spec, &[Cell::new(25, 3)], Cell::new(2, 3), nav);
    // 23 cells, the last 6 free: ceil(17 / 2)
    assert_eq!(estimate_optimal_ticks(&far).unwrap(), 9);
}

#[test]
fn a_buried_goal_is_unreachable() {
    // scenes are connected, so the only way to lose the target is to bury
    // it in a block of wall
    let mut grid = walled(20, 10);
    for y in 4..7 {
        for x in 11..14 {
            grid.set(Cell::new(x, y), CellKind::Wall);
        }
    }
    let spec = scene(grid, vec![fridge(Rect::new(15, 3, 16, 3), false)]);
    let w = hand_world(spec.clone(), &[Cell::new(12, 5)], Cell::new(2, 3), GoalSpec::manipulation("apple", "fridge"));
    assert_eq!(estimate_optimal_ticks(&w).unwrap_err().code, ErrorCode::Unreachable);
    let w = hand_world(spec, &[Cell::new(12, 5)], Cell::new(2, 3), GoalSpec::navigation("apple"));
    assert_eq!(estimate_optimal_ticks(&w).unwrap_err().code, ErrorCode::Unreachable);
}

/// Tick-level search over (cell, carrying) states: a move reaches any cell
/// within two orthogonal steps, picking needs a cell in the 8-neighbourhood
/// of the apple, placing one in the 8-neighbourhood of the fridge region
/// (with an extra tick to open it first when closed).
fn tick_search(w: &World, apple: Cell, fridge: &[Cell], closed: bool) -> Option<u64> {
    let grid = &w.scene.grid;
    let walkable = |c: Cell| grid.is_floor(c);
    let touches = |c: Cell, cells: &[Cell]| {
        !cells.contains(&c) && cells.iter().any(|t| (t.x - c.x).abs() <= 1 && (t.y - c.y).abs() <= 1)
    };
    let moves = |c: Cell| -> BTreeSet<Cell> {
        let mut out = BTreeSet::from([c]);
        let mut frontier = vec![c];
        for _ in 0..2 {
            let mut next = Vec::new();
            for f in frontier {
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let n = Cell::new(f.x + dx, f.y + dy);
                    if walkable(n) && out.insert(n) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        out
    };
    // Dijkstra with unit and multi-tick edges over (cell, carrying)
    let start = (w.human().unwrap().position, false);
    let mut best: BTreeMap<(Cell, bool), u64> = BTreeMap::from([(start, 0)]);
    let mut queue = BTreeSet::from([(0u64, start)]);
    while let Some((t, (c, carrying))) = queue.pop_first() {
        if best.get(&(c, carrying)).is_some_and(|b| *b < t) {
            continue;
        }
        if carrying && touches(c, fridge) {
            return Some(t + 1 + u64::from(closed));
        }
        let mut edges: Vec<((Cell, bool), u64)> = moves(c).into_iter().map(|n| ((n, carrying), 1)).collect();
        if !carrying && touches(c, &[apple]) {
            edges.push(((c, true), 1));
        }
        for (s, cost) in edges {
            let nt = t + cost;
            if best.get(&s).is_none_or(|b| nt < *b) {
                best.insert(s, nt);
                queue.insert((nt, s));
            }
        }
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn manipulation_estimate_matches_tick_search(seed in any::<u64>(), closed in any::<bool>()) {
        let mut rng = rng_from(seed);
        let (wd, ht) = (rng.gen_range(10..18usize), rng.gen_range(10..14usize));
        let mut grid = walled(wd, ht);
        let fx = rng.gen_range(1..wd as i32 - 2);
        let fy = rng.gen_range(1..ht as i32 - 1);
        let region = Rect::new(fx, fy, fx + 1, fy);
        for _ in 0..(wd * ht / 6) {
            let c = Cell::new(rng.gen_range(1..wd as i32 - 1), rng.gen_range(1..ht as i32 - 1));
            if region.contains(c) || !grid.is_floor(c) {
                continue;
            }
            // keep the floor connected, as every valid scene is
            grid.set(c, CellKind::Wall);
            let floor = grid.floor_count();
            if grid.reachable_from(grid.floor_cells().next().unwrap()).len() != floor {
                grid.set(c, CellKind::Floor);
            }
        }
        let free: Vec<Cell> = grid.floor_cells().filter(|c| !region.contains(*c)).collect();
        prop_assume!(free.len() >= 2);
        let a = free[rng.gen_range(0..free.len())];
        let h = free[rng.gen_range(0..free.len())];
        prop_assume!(a != h);
        let spec = scene(grid, vec![fridge(region, closed)]);
        let w = hand_world(spec, &[a], h, GoalSpec::manipulation("apple", "fridge"));
        let fridge_cells: Vec<Cell> = region.cells().collect();
        let want = tick_search(&w, a, &fridge_cells, closed);
        match estimate_optimal_ticks(&w) {
            Ok(t) => prop_assert_eq!(Some(t), want),
            Err(e) => {
                prop_assert_eq!(e.code, ErrorCode::Unreachable);
                prop_assert_eq!(want, None);
            }
        }
    }
}

fn shipped_task(index: usize) -> (TaskSpec, SceneSpec) {
    let task = shipped_suite(shipped::DEFAULT_BASE_SEED).unwrap().swap_remove(index);
    let scene = shipped::scenes().into_iter().find(|s| s.scene_id == task.scene_id).unwrap();
    (task, scene)
}

fn request<'a>(
    task: &'a TaskSpec,
    scene: &'a SceneSpec,
    registry: &'a gridthor_core::CategoryRegistry,
    setting: Setting,
    replay_dir: Option<&'a std::path::Path>,
) -> EpisodeRequest<'a> {
    EpisodeRequest {
        task,
        scene,
        registry,
        setting,
        seed: shipped::DEFAULT_BASE_SEED,
        participant: 0,
        trial_index: 0,
        human: HumanSeat::Proxy {
            params: ProxyParams::default(),
            seed: 7,
        },
        custom_robot: None,
        limits: EpisodeLimits::default(),
        replay_dir,
    }
}

#[test]
fn no_robot_trials_have_no_adoption_or_trust() {
    let (task, scene) = shipped_task(0);
    let registry = shipped::registry();
    let run = run_episode(request(&task, &scene, &registry, Setting::NoRobot, None)).unwrap();
    assert_eq!(run.result.adopted, Adoption::NotApplicable);
    assert_eq!(run.result.trust, None);
    assert_eq!(run.result.messages_sent, 0);
    assert!(!run.result.broken);
    assert_eq!(run.world.agents.len(), 1);
}

#[test]
fn the_same_trial_twice_is_identical() {
    let (task, scene) = shipped_task(4);
    let registry = shipped::registry();
    let dir = tempfile::tempdir().unwrap();
    let a = run_episode(request(&task, &scene, &registry, Setting::Frontier, Some(dir.path()))).unwrap();
    let first = std::fs::read(a.result.replay_path.as_ref().unwrap()).unwrap();
    let b = run_episode(request(&task, &scene, &registry, Setting::Frontier, Some(dir.path()))).unwrap();
    let second = std::fs::read(b.result.replay_path.as_ref().unwrap()).unwrap();
    assert_eq!(a.result, b.result);
    assert_eq!(first, second);
    assert_eq!(a.log.to_text(), b.log.to_text());
    assert_eq!(a.world.state_hash(), b.world.state_hash());
    // the trust of a proxy follows the trial's time-weighted success
    let t = a.result.trust.unwrap();
    assert!((1..=7).contains(&t));
    assert_eq!(f64::from(t), (7.0 * a.result.twsr).round().clamp(1.0, 7.0));
}

#[test]
fn a_remote_trial_equals_the_local_simulation() {
    let registry = shipped::registry();
    for index in [1, 9, 17] {
        let (task, scene) = shipped_task(index);
        let remote = run_episode(request(&task, &scene, &registry, Setting::Frontier, None)).unwrap();

        let mut world = initial_world(&scene, &task, &registry, shipped::DEFAULT_BASE_SEED, &EpisodeLimits::default())
            .unwrap();
        let robot = world
            .spawn_agent(Role::Robot, [Capability::Navigate, Capability::Communicate].into_iter().collect())
            .unwrap();
        let mut policies: BTreeMap<String, Box<dyn Policy>> = BTreeMap::new();
        let target = task.goal.target_category.clone();
        policies.insert(robot, Box::new(FrontierRobot::new(scene.width(), scene.height(), scene.cell_size, target)));
        policies.insert(
            "human".into(),
            Box::new(HumanProxy::new(
                scene.width(),
                scene.height(),
                scene.cell_size,
                task.goal.clone(),
                ProxyParams::default(),
                7,
            )),
        );
        let local = run_local(world, &mut policies, None);
        assert_eq!(local.world.tick, remote.world.tick, "task {}", task.task_id);
        assert_eq!(local.world.state_hash(), remote.world.state_hash(), "task {}", task.task_id);
    }
}

#[test]
fn replays_reproduce_and_reject_damage() {
    let (task, scene) = shipped_task(2);
    let registry = shipped::registry();
    let dir = tempfile::tempdir().unwrap();
    let run = run_episode(request(&task, &scene, &registry, Setting::Oracle, Some(dir.path()))).unwrap();
    let path = std::path::PathBuf::from(run.result.replay_path.unwrap());
    let replay = gridthor_bench::replay::replay_file(&path).unwrap();
    assert_eq!(replay.final_hash, run.world.state_hash());
    assert_eq!(replay.final_world().tick, run.result.elapsed_ticks);

    let overlay = TrajectoryOverlay::from_replay(&replay);
    assert_eq!(overlay.polylines.len(), run.world.agents.len());
    for (agent, line) in &overlay.polylines {
        let trail = &run.world.trajectories[agent];
        assert_eq!(line.len(), trail.len());
        assert_eq!(line.last().copied(), Some([run.world.agents[agent].position.x, run.world.agents[agent].position.y]));
    }
    let out = dir.path().join("traj.json");
    overlay.write_to(&out).unwrap();
    let back: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(back["final_hash"], overlay.final_hash.as_str());

    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let truncated = lines[..lines.len() / 2].join("\n");
    let err = replay_from_reader(truncated.as_bytes()).unwrap_err();
    assert_eq!(err.code, ErrorCode::Parse);
    let half_line = format!("{}\n{}", lines[0], &lines[1][..lines[1].len() / 2]);
    assert_eq!(replay_from_reader(half_line.as_bytes()).unwrap_err().code, ErrorCode::Parse);
    let tampered = text.replacen("\"hash\":\"", "\"hash\":\"0", 1);
    assert_eq!(replay_from_reader(tampered.as_bytes()).unwrap_err().code, ErrorCode::HashMismatch);
}

fn row(setting: Setting, success: bool, adopted: Adoption, broken: bool) -> EpisodeResult {
    EpisodeResult {
        task_id: "t".into(),
        scene_id: "s".into(),
        setting,
        participant: 0,
        trial_index: 0,
        success,
        elapsed_ticks: 40,
        tick_duration_ms: 250,
        optimal_ticks: 20,
        twsr: if success { 0.5 } else { 0.0 },
        adopted,
        messages_sent: 1,
        trust: Some(4),
        seed: 1,
        replay_path: None,
        broken,
    }
}

#[test]
fn aggregates_by_hand() {
    use Adoption::*;
    let rows = vec![
        row(Setting::Frontier, true, Adopted, false),
        row(Setting::Frontier, true, NotAdopted, false),
        row(Setting::Frontier, true, Adopted, false),
        row(Setting::Frontier, false, NotAdopted, false),
        // broken trials never count, whatever they claim
        row(Setting::Frontier, true, Adopted, true),
        row(Setting::Oracle, true, Adopted, false),
        row(Setting::Oracle, false, Adopted, false),
        row(Setting::Oracle, true, NotAdopted, false),
    ];
    let report = RunReport::from_rows(&Setting::STANDARD, rows);
    // no no_robot rows: that setting is left out
    assert_eq!(report.summaries.len(), 2);
    assert!(report.summary(Setting::NoRobot).is_none());
    let f = report.summary(Setting::Frontier).unwrap();
    assert_eq!((f.trials, f.broken), (4, 1));
    assert_eq!(f.sr, 0.75);
    assert_eq!(f.twsr, 0.375);
    assert_eq!(f.adoption, Some(0.5));
    let o = report.summary(Setting::Oracle).unwrap();
    assert_eq!(o.adoption, Some(2.0 / 3.0));
    assert_eq!(
        report.render_table(),
        "Robot setting | SR (%) | TWSR (%) | Adoption Rate (%)\n\
         Frontier | 75.0 | 37.5 | 50.0\n\
         Oracle | 66.7 | 33.3 | 66.7\n"
    );
    assert_eq!(rows_from_csv(&rows_to_csv(&report.rows).unwrap()).unwrap(), report.rows);
}

#[test]
fn a_damaged_rows_file_names_the_row() {
    let mut text = rows_to_csv(&[row(Setting::Oracle, true, Adoption::Adopted, false)]).unwrap();
    text.push_str("t,s,oracle,zero,0,true,1,250,1,1.0,true,0,,1,,false\n");
    let err = rows_from_csv(&text).unwrap_err();
    assert_eq!(err.code, ErrorCode::Parse);
    assert!(err.to_string().contains("row 2"), "{err}");
}

#[test]
fn every_participant_meets_every_scene_once() {
    let scenes = shipped::scenes();
    let tasks = shipped_suite(shipped::DEFAULT_BASE_SEED).unwrap();
    let seqs = participant_sequences(&tasks, &scenes, 6, shipped::DEFAULT_BASE_SEED);
    let mut uses: BTreeMap<&str, usize> = BTreeMap::new();
    for seq in &seqs {
        let seen: BTreeSet<&str> = seq.iter().map(|t| t.scene_id.as_str()).collect();
        assert_eq!(seq.len(), scenes.len());
        assert_eq!(seen.len(), scenes.len());
        for t in seq {
            *uses.entry(t.task_id.as_str()).or_default() += 1;
        }
    }
    // three tasks per scene, six participants: each task played twice
    assert_eq!(uses.len(), tasks.len());
    assert!(uses.values().all(|n| *n == 2));
    // orders differ between participants but are fixed by the seed
    assert_ne!(seqs[0], seqs[1]);
    assert_eq!(seqs, participant_sequences(&tasks, &scenes, 6, shipped::DEFAULT_BASE_SEED));
}

#[test]
fn a_small_suite_writes_its_report() {
    let scenes = shipped::scenes();
    let registry = shipped::registry();
    let all = shipped_suite(shipped::DEFAULT_BASE_SEED).unwrap();
    let tasks: Vec<TaskSpec> = all.into_iter().filter(|t| t.scene_id == scenes[0].scene_id).collect();
    let cfg = SuiteConfig {
        tasks: &tasks,
        scenes: &scenes,
        registry: &registry,
        settings: vec![Setting::NoRobot, Setting::Oracle],
        participants: Participants::Proxies {
            count: 2,
            params: ProxyParams::default(),
        },
        base_seed: 5,
        limits: EpisodeLimits::default(),
        replay_dir: None,
        custom_robot: None,
        parallel: 3,
    };
    let plan = plan_trials(&cfg);
    assert_eq!(plan.len(), 4);
    assert_eq!(plan.iter().map(|t| t.setting).collect::<Vec<_>>()[..2], [Setting::NoRobot; 2]);
    let report = run_suite(&cfg).unwrap();
    assert_eq!(report.rows.len(), 4);
    for (r, t) in report.rows.iter().zip(&plan) {
        assert_eq!((r.setting, r.participant, &r.task_id), (t.setting, t.participant, &t.task.task_id));
        assert_eq!(r.seed, 5);
    }
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&report, &[ReportFormat::Table, ReportFormat::Rows], dir.path()).unwrap();
    assert_eq!(written, vec![dir.path().join(TABLE_FILE), dir.path().join(ROWS_FILE)]);
    let reloaded = RunReport::from_rows(&cfg.settings, read_rows(&dir.path().join(ROWS_FILE)).unwrap());
    assert_eq!(reloaded.render_table(), std::fs::read_to_string(dir.path().join(TABLE_FILE)).unwrap());

    let mut empty = cfg.clone();
    empty.settings.clear();
    assert_eq!(run_suite(&empty).unwrap_err().code, ErrorCode::BadArg);
}

#[test]
fn proxy_seeds_differ_per_participant() {
    let a = derive_seed(1, &["proxy", "0"]);
    let b = derive_seed(1, &["proxy", "1"]);
    assert_ne!(a, b);
}
