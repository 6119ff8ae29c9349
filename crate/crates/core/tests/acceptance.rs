//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use role_engine::assignment::{gra_solve, QualificationMatrix};
use role_engine::cli::{cmd_bench, load_scenario, load_suite, BenchRow, Overrides};
use role_engine::engine::{plan_roles, run_central};
use role_engine::envmap::*;
use role_engine::gp::*;
use role_engine::role_playing::SharingMode;
use role_engine::{Point2, State};

use common::*;

const BENCH_BUDGET: Duration = Duration::from_secs(300);
const JACOBIAN_TOL: f64 = 1e-5;
const CLOSED_FORM_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn mean_iterations(rows: &[&BenchRow]) -> f64 {
    let v: Vec<f64> = rows.iter().filter_map(|r| r.report.as_ref()?.iterations_mean).collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn emap_vs_straight() -> Outcome {
    let suite = load_suite(&scenarios().join("exp1_suite.toml")).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let rows = cmd_bench(&suite, tmp.path(), &Overrides::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let of = |mode: &str| -> Vec<&BenchRow> { rows.iter().filter(|r| r.mode == mode).collect() };
    let (emap, straight) = (of("emap"), of("straight"));
    let pct = |rs: &[&BenchRow]| 100.0 * rs.iter().filter(|r| r.feasible()).count() as f64 / rs.len().max(1) as f64;
    let (fe, fs) = (pct(&emap), pct(&straight));
    let (ie, is) = (mean_iterations(&emap), mean_iterations(&straight));
    check(
        emap.len() == 24 && straight.len() == 24 && fe == 100.0 && fs < fe && ie < is && elapsed < BENCH_BUDGET,
        format!(
            "feasible emap {fe:.1}% straight {fs:.1}%, mean iterations emap {ie:.2} straight {is:.2}, {:.1} s (budget {} s)",
            elapsed.as_secs_f64(),
            BENCH_BUDGET.as_secs()
        ),
    )
}

fn gra_vs_nn() -> Outcome {
    let suite = load_suite(&scenarios().join("exp2_suite.toml")).map_err(|e| e.to_string())?;
    for s in &suite.scenarios {
        let mut radii: Vec<f64> = s.agents.iter().map(|a| a.robot.radius).collect();
        radii.dedup();
        if s.agents.len() != 6 || radii.len() < 2 {
            return Err(format!("{} is not a 6-robot mixed-size scenario", s.name));
        }
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rows = cmd_bench(&suite, tmp.path(), &Overrides::default()).map_err(|e| e.to_string())?;
    let cost = |name: &str, mode: &str| {
        rows.iter().find(|r| r.scenario == name && r.mode == mode).and_then(|r| r.report.as_ref()?.total_cost)
    };
    let mut lines = Vec::new();
    for s in &suite.scenarios {
        let (Some(g), Some(n)) = (cost(&s.name, "gra"), cost(&s.name, "nn")) else {
            return Err(format!("{}: missing cost", s.name));
        };
        if g > n {
            return Err(format!("{}: gra {g:.4} > nn {n:.4}", s.name));
        }
        lines.push(format!("{} {g:.3}<={n:.3}", s.name));

        let plan = plan_roles(s).map_err(|e| e.to_string())?;
        let (m, nr) = (plan.q.m, plan.q.n);
        let q: Vec<f64> = (0..m).flat_map(|i| (0..nr).map(move |j| (i, j))).map(|(i, j)| plan.q.get(i, j)).collect();
        let (want, _) = brute_force(&q, m, nr).ok_or(format!("{}: brute force found nothing", s.name))?;
        if plan.assignment.total_cost != want {
            return Err(format!("{}: gra {} vs brute force {want}", s.name, plan.assignment.total_cost));
        }
    }
    let mut instances = 0;
    for n in 1..=6 {
        for seed in 0..100u64 {
            let q = matrix(n, n, 7919 * seed + n as u64, if seed % 2 == 0 { 0.0 } else { 0.2 }, None);
            let got = gra_solve(&QualificationMatrix::from_costs(n, n, q.clone()).unwrap()).ok().map(|a| a.total_cost);
            let want = brute_force(&q, n, n).map(|b| b.0);
            if got != want {
                return Err(format!("n {n} seed {seed}: {got:?} vs brute force {want:?}"));
            }
            instances += 1;
        }
    }
    Ok(format!("{}; brute force agrees on {instances} instances with m = n <= 6 and on every suite Q", lines.join(", ")))
}

fn sharing_modes() -> Outcome {
    let base = load_scenario(&scenarios().join("exp3_crossing.toml")).map_err(|e| e.to_string())?;
    if base.agents.len() != 4 {
        return Err(format!("expected 4 robots, found {}", base.agents.len()));
    }
    let run = |mode: SharingMode| {
        let mut s = base.clone();
        Overrides { sharing: Some(mode), ..Overrides::default() }.apply(&mut s).map_err(|e| e.to_string())?;
        run_central(&s).map_err(|e| e.to_string())?.metrics.ok_or(format!("{mode:?}: no metrics"))
    };
    let (cf, lp) = (run(SharingMode::ConflictField)?, run(SharingMode::LastPosition)?);
    check(
        cf.min_distance > lp.min_distance && cf.avg_jerk < lp.avg_jerk,
        format!(
            "min distance conflict_field {:.4} m last_position {:.4} m, avg jerk {:.4} vs {:.4}",
            cf.min_distance, lp.min_distance, cf.avg_jerk, lp.avg_jerk
        ),
    )
}

fn hallway_swap() -> Outcome {
    let base = load_scenario(&scenarios().join("exp4_hallway.toml")).map_err(|e| e.to_string())?;
    let g = &base.grid;
    let mid = g.width() / 2;
    let width = (0..g.height()).filter(|&r| !g.is_occupied(mid, r)).count() as f64 * g.resolution();
    let diameters: f64 = base.agents.iter().map(|a| 2.0 * a.robot.radius).sum();
    if width >= diameters {
        return Err(format!("hallway {width} m is not narrower than {diameters} m"));
    }
    let mut parts = vec![format!("hallway {width:.2} m < {diameters:.2} m")];
    for mode in [SharingMode::ConflictField, SharingMode::PairwiseFactor] {
        let mut s = base.clone();
        Overrides { sharing: Some(mode), ..Overrides::default() }.apply(&mut s).map_err(|e| e.to_string())?;
        let outcome = run_central(&s).map_err(|e| e.to_string())?;
        if let Some(reason) = outcome.aborted {
            return Err(format!("{mode:?} aborted: {reason}"));
        }
        let m = outcome.metrics.ok_or("no metrics")?;
        let trace = outcome.trace.ok_or("no trace")?;
        let last = trace.frames.len() - 1;
        let arrived = s.roles.iter().all(|role| {
            let agent = s.agents.iter().position(|a| Some(a.agent_id) == role.reserved_for).unwrap();
            (trace.position(last, agent) - role.destination).norm() <= 0.05
        });
        if m.collision_frames != 0 || !arrived {
            return Err(format!("{mode:?}: {} collision frames, arrived {arrived}", m.collision_frames));
        }
        parts.push(format!("{mode:?}: 0 collision frames, min distance {:.3} m", m.min_distance));
    }
    Ok(parts.join(", "))
}

fn lm_steps_monotone() -> Result<usize, String> {
    let mut accepted = 0;
    for (i, &(y0, y1, sigma)) in [(0.6, 1.4, 0.05), (1.0, 1.0, 0.1), (1.2, 0.7, 0.2), (0.9, 1.3, 0.3)].iter().enumerate() {
        let n = 10 + 6 * i;
        let plan = PlanSettings { steps: n, total_time: 8.0, ..PlanSettings::default() };
        let mut robot = robot();
        robot.sigma_obs = sigma;
        let init = straight(Point2::new(0.2, y0), Point2::new(3.0, y1), n, 8.0);
        let anchors = Anchors { start: init[0], start_mask: FixMask::Full, goal: Some(init[n]) };
        let factors = trajectory_factors(n + 1, &robot, 0, &anchors, &plan);
        let report = solve_lm(&factors, &init, &plan.prior().unwrap(), Some(&Circles), &SolverParams::default())
            .map_err(|e| e.to_string())?;
        if report.accepted_errors.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("cost rose in problem {i}: {:?}", report.accepted_errors));
        }
        accepted += report.accepted_errors.len() - 1;
    }
    Ok(accepted)
}

fn closed_forms() -> f64 {
    let qc = Matrix2::new(0.7, 0.1, 0.1, 0.3);
    let mut worst: f64 = 0.0;
    for dt in [0.01, 0.1, 0.5, 2.0] {
        let mut phi = Matrix4::identity();
        phi[(0, 2)] = dt;
        phi[(1, 3)] = dt;
        worst = worst.max((transition(dt) - phi).abs().max());
        let (a, b, c) = (dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt);
        let mut q = Matrix4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                q[(i, j)] = a * qc[(i, j)];
                q[(i, j + 2)] = b * qc[(i, j)];
                q[(i + 2, j)] = b * qc[(i, j)];
                q[(i + 2, j + 2)] = c * qc[(i, j)];
            }
        }
        worst = worst.max((process_noise(dt, &qc).unwrap() - q).abs().max() / q.abs().max());
    }
    worst
}

fn prior_on_mean() -> f64 {
    let prior = GpPrior::isotropic(1.0, 0.25).unwrap();
    let mut states = vec![State::new(0.3, -1.2, 0.7, 0.4)];
    for _ in 0..40 {
        let next = prior.phi() * states.last().unwrap();
        states.push(next);
    }
    prior.cost(&states)
}

fn off_tridiagonal_mass() -> f64 {
    let n = 12;
    let plan = PlanSettings { steps: n, total_time: 6.0, ..PlanSettings::default() };
    let states = straight(Point2::new(0.4, 0.9), Point2::new(2.8, 1.1), n, 6.0);
    let anchors = Anchors { start: states[0], start_mask: FixMask::Full, goal: Some(states[n]) };
    let mut factors = trajectory_factors(n + 1, &robot(), 0, &anchors, &plan);
    factors.push(Factor::PairwiseConflict { k: 5, other: Point2::new(1.4, 1.0), radii: 0.2, epsilon: 0.1, sigma: 0.05 });
    let lin = linearize(&factors, &states, &plan.prior().unwrap(), Some(&Circles)).unwrap();
    let (a, _) = lin.to_dense();
    let h = a.transpose() * &a;
    let mut mass: f64 = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            if i.abs_diff(j) > 1 {
                mass = mass.max(h.view((4 * i, 4 * j), (4, 4)).abs().max());
            }
        }
    }
    mass + (h - lin.normal_system().to_dense()).abs().max()
}

fn numerical_core() -> Outcome {
    let jac = max_jacobian_error(100, 7);
    let accepted = lm_steps_monotone()?;
    let forms = closed_forms();
    let prior = prior_on_mean();
    let mass = off_tridiagonal_mass();
    check(
        jac < JACOBIAN_TOL && forms < CLOSED_FORM_TOL && prior == 0.0 && mass < 1e-9,
        format!(
            "(a) jacobian max error {jac:.2e} < {JACOBIAN_TOL:.0e}, (b) {accepted} accepted LM steps monotone, \
             (c) closed-form error {forms:.1e}, (d) F_gp(mu) = {prior}, (e) off-band mass {mass:.1e}"
        ),
    )
}

fn geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut grids = 0;
    for (w, h) in [(1, 1), (1, 64), (64, 1), (7, 13), (32, 32), (64, 48), (64, 64), (64, 64)] {
        for density in [0.05, 0.3] {
            let grid = random_grid(&mut rng, w, h, density);
            let sdf = compute_sdf(&grid);
            let worst = sdf.values().iter().zip(brute_sdf(&grid)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if worst > grid.resolution() {
                return Err(format!("SDF {w}x{h}: error {worst} exceeds one cell"));
            }
            grids += 1;
        }
    }

    let mut emaps = 0;
    let mut queries = 0;
    while emaps < 100 {
        let emap = random_emap(&mut rng);
        let n = emap.nodes.len();
        if n < 2 {
            continue;
        }
        emaps += 1;
        for _ in 0..5 {
            let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
            let want = dijkstra(&emap, s)[t];
            let got = astar_octile(&emap, s, t).map_err(|e| e.to_string())?.map_or(f64::INFINITY, |p| p.cost);
            let same = (got.is_infinite() && want.is_infinite()) || (got - want).abs() <= 1e-9 * want.max(1.0);
            if !same {
                return Err(format!("A* {got} vs Dijkstra {want}"));
            }
            queries += 1;
        }
    }

    let wall = "#".repeat(40);
    let open = ".".repeat(40);
    let rows = [&wall, &wall, &open, &open, &open, &wall, &wall].map(String::as_str);
    let skeleton = destair(&skeletonize(&OccupancyGrid::from_ascii(&rows, 0.05).unwrap()));
    let mut cols: Vec<usize> = skeleton.iter().map(|(c, _)| c).collect();
    cols.sort();
    let centered = skeleton.iter().all(|(_, r)| r == 3);
    let contiguous = cols.windows(2).all(|w| w[1] == w[0] + 1);
    check(
        centered && contiguous && cols.len() >= 36,
        format!(
            "SDF within one cell on {grids} grids up to 64x64, A* = Dijkstra on {queries} queries over {emaps} E-Maps, \
             corridor skeleton on row 3 covering {} of 40 columns",
            cols.len()
        ),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let file = scenarios().join("exp3_crossing.toml");
    let mut traces = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let o = Command::new(env!("CARGO_BIN_EXE_role-engine"))
            .arg("simulate")
            .arg(&file)
            .args(["--seed", "41", "--out-dir"])
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(String::from_utf8_lossy(&o.stderr).into_owned());
        }
        traces.push(std::fs::read(dir.join("trace.csv")).map_err(|e| e.to_string())?);
    }
    check(
        !traces[0].is_empty() && traces[0] == traces[1],
        format!("two simulate runs with seed 41 wrote {} and {} byte traces, identical: {}", traces[0].len(), traces[1].len(), traces[0] == traces[1]),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 E-Map vs straight init", emap_vs_straight),
        ("2 GRA vs NN", gra_vs_nn),
        ("3 sharing modes", sharing_modes),
        ("4 hallway swap", hallway_swap),
        ("5 numerical core", numerical_core),
        ("6 geometry", geometry),
        ("7 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(msg) => println!("[PASS] {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
