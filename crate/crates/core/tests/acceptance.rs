//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the summary is always printed. Exits
//! non-zero if any criterion fails. The learning smoke test (9) and the
//! directional report (10) dominate the runtime.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use weavelane::config::RunConfig;
use weavelane::env::{
    compute_reward, headway_penalty, lane_reward, observe, run_episode, BaselinePolicy, EnvConfig,
    MultiAgentEnv, NeighborSlot, Observation, RandomPolicy, RewardBreakdown, RewardWeights,
    DETECTION_RANGE, EGO_FEATURES, NEIGHBOR_FEATURES, OBS_DIM,
};
use weavelane::eval::{episode_seeds, evaluate};
use weavelane::exec::Exec;
use weavelane::metrics::{
    aggregate_runs, comparison_text, density_map, density_svg, trajectory_svg, write_comparison_csv,
    DensityMap, EmissionCoefficients, ScenarioRuns,
};
use weavelane::policy::{NetPolicy, PolicyNet};
use weavelane::ppo::{clipped_objective, compute_gae, ppo_loss, train, LossCoefficients, Sample, TrainConfig, Trainer};
use weavelane::road::{Blinker, EventFlags, LaneId, Route, Scenario, Vehicle, VehicleId, World};

// Tolerances and budgets.
const REWARD_TOL: f64 = 1e-12;
const REWARD_BUDGET_S: f64 = 1.0;
const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
/// Relative-error denominator floor: `|a − n| / max(|a|, |n|, FD_FLOOR)`.
const FD_FLOOR: f64 = 1e-6;
const FD_NETWORKS: usize = 12;
const FD_BUDGET_S: f64 = 30.0;
const GAE_TOL: f64 = 1e-10;
const SAFETY_EPISODES: usize = 30;
const SAFETY_BUDGET_S: f64 = 300.0;
const FUZZ_CASES: usize = 10_000;
const SMOKE_SEEDS: [u64; 3] = [1, 2, 3];
const SMOKE_ITERATIONS: u64 = 50;
const SMOKE_SAMPLES: usize = 4000;
const SMOKE_INFLOW: f64 = 1200.0;
const REPORT_EPISODES: usize = 30;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn archive_dir() -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&d).expect("archive dir");
    d
}

// 1 ─ reward terms

fn vehicle(lane: LaneId, pos: f64, speed: f64, route: Route) -> Vehicle {
    Vehicle {
        id: VehicleId(0),
        pos,
        lane,
        speed,
        accel: 0.0,
        length: weavelane::road::VEHICLE_LENGTH,
        route,
        blinker: Blinker::Off,
        controlled: true,
        spawn_time: 0.0,
        exit_time: None,
        last_intent: Default::default(),
    }
}

fn reward_fidelity() -> Outcome {
    let t0 = Instant::now();
    let mut err = 0.0f64;
    let mut note = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        let e = (got - want).abs();
        err = err.max(e);
        if e >= REWARD_TOL {
            note.push(format!("{name}: {got} vs {want}"));
        }
    };
    check("l(0, desired)", lane_reward(0.0, true, 200.0), 1.0);
    check("l(200, undesired)", lane_reward(200.0, false, 200.0), -1.0);
    check("l(200, desired)", lane_reward(200.0, true, 200.0), 0.0);
    check("l(50, desired)", lane_reward(50.0, true, 200.0), 0.75);
    check("l(0, undesired)", lane_reward(0.0, false, 200.0), 0.0);
    check("h(0.5 s)", headway_penalty(0.5, 1.0), -0.5);
    check("h(1 s)", headway_penalty(1.0, 1.0), 0.0);
    check("h(0 s)", headway_penalty(0.0, 1.0), -1.0);
    check("h(no leader)", headway_penalty(f64::INFINITY, 1.0), 0.0);

    // Each binary fires exactly with its event and nothing else moves.
    let net = weavelane::road::RoadNetwork::default();
    let w = RewardWeights::default();
    let v = vehicle(LaneId(1), 300.0, 20.0, Route::ThroughFreeway);
    let base = compute_reward(&net, &v, EventFlags::default(), 2.0, &w);
    check("c silent", base.c, 0.0);
    check("s silent", base.s, 0.0);
    check("b silent", base.b, 0.0);
    for (flag, name) in [
        (EventFlags::LANE_CHANGED, "c"),
        (EventFlags::IMPROPER_INTENT, "s"),
        (EventFlags::EMERGENCY_BRAKE, "b"),
    ] {
        let r = compute_reward(&net, &v, flag, 2.0, &w);
        let got = [("c", r.c), ("s", r.s), ("b", r.b)];
        for (n, x) in got {
            check(&format!("{n} under {name}"), x, if n == name { -1.0 } else { 0.0 });
        }
        check(&format!("v under {name}"), r.v, base.v);
        check(&format!("l under {name}"), r.l, base.l);
        check(&format!("h under {name}"), r.h, base.h);
    }

    // Totals recompose exactly from breakdowns.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut exact = true;
    for _ in 0..1000 {
        let bin = |r: &mut ChaCha8Rng| if r.gen_bool(0.5) { -1.0 } else { 0.0 };
        let (c, s, b) = (bin(&mut rng), bin(&mut rng), bin(&mut rng));
        let r = RewardBreakdown::compose(
            rng.gen_range(0.0..1.0),
            rng.gen_range(-1.0..1.0),
            c,
            s,
            b,
            rng.gen_range(-1.0..0.0),
            &w,
        );
        let manual = w.speed * r.v + w.lane * r.l + w.lane_change * r.c + w.improper * r.s + w.emergency * r.b + w.headway * r.h;
        exact &= r.total == manual;
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = note.is_empty() && exact && secs < REWARD_BUDGET_S;
    outcome(pass, format!("max err {err:.1e}, totals exact {exact}, {secs:.3} s {}", note.join("; ")))
}

// 2 ─ PPO gradient

fn random_batch(net: &PolicyNet, rng: &mut ChaCha8Rng, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|k| {
            let obs = Observation(std::array::from_fn(|_| rng.gen_range(0.0..1.0)));
            let d = net.forward(obs.as_slice()).unwrap();
            let action = d.sample(rng);
            let lp = d.log_prob(action);
            // Ratios well inside or well outside the clip band, away from the kinks.
            let shift = if k % 3 == 0 {
                rng.gen_range(0.4..0.8) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            } else {
                rng.gen_range(-0.1..0.1)
            };
            Sample {
                obs,
                action,
                log_prob_old: lp + shift,
                value_old: d.value,
                advantage: rng.gen_range(-2.0..2.0),
                ret: rng.gen_range(-3.0..3.0),
            }
        })
        .collect()
}

fn ppo_gradient() -> Outcome {
    let t0 = Instant::now();
    let coef = LossCoefficients {
        clip: 0.2,
        value: 0.5,
        entropy: 0.01,
    };
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.3).unwrap();
    for k in 0..FD_NETWORKS {
        let mut net = PolicyNet::init(4, 100 + k as u64);
        for p in net.params.iter_mut() {
            *p += noise.sample(&mut rng);
        }
        net.clamp_log_std();
        let batch = random_batch(&net, &mut rng, 24);
        let refs: Vec<&Sample> = batch.iter().collect();
        let analytic = ppo_loss(&net, &refs, &coef).unwrap().grad;
        for i in 0..net.params.len() {
            let mut plus = net.clone();
            plus.params[i] += FD_STEP;
            let mut minus = net.clone();
            minus.params[i] -= FD_STEP;
            let numeric =
                (ppo_loss(&plus, &refs, &coef).unwrap().loss - ppo_loss(&minus, &refs, &coef).unwrap().loss) / (2.0 * FD_STEP);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(FD_FLOOR);
            worst = worst.max(rel);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst < FD_REL_TOL && secs < FD_BUDGET_S,
        format!("{FD_NETWORKS} networks, max rel err {worst:.2e} (< {FD_REL_TOL:e}), {secs:.1} s"),
    )
}

// 3 ─ GAE

fn gae_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gamma = 0.99;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=10);
        let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut values: Vec<f64> = (0..=n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut dones = vec![false; n];
        if rng.gen_bool(0.5) {
            dones[n - 1] = true;
            values[n] = 0.0;
        }
        let (adv, _) = compute_gae(&rewards, &values, &dones, gamma, 1.0).unwrap();
        for t in 0..n {
            let mut g = 0.0;
            for (k, r) in rewards[t..].iter().enumerate() {
                g += gamma.powi(k as i32) * r;
            }
            g += gamma.powi((n - t) as i32) * values[n];
            worst = worst.max((adv[t] - (g - values[t])).abs());
        }
    }
    let (hand, _) = compute_gae(&[1.0, 1.0], &[0.0; 3], &[false, false], 0.99, 0.95).unwrap();
    let hand_ok = (hand[0] - 1.9405).abs() < 1e-12 && hand[1] == 1.0;
    outcome(
        worst < GAE_TOL && hand_ok,
        format!("100 trajectories, max |GAE(1) − MC| {worst:.1e}; hand example [{:.4}, {:.4}]", hand[0], hand[1]),
    )
}

// 4 ─ clipping

fn clipping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = true;
    for _ in 0..100_000 {
        let ratio = rng.gen_range(0.0..3.0);
        let adv = rng.gen_range(-5.0..5.0);
        let eps = rng.gen_range(0.01..0.5);
        let obj = clipped_objective(ratio, adv, eps);
        ok &= obj == (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv);
        ok &= obj <= ratio * adv;
    }
    // Same parameters: ratio exactly 1, nothing clipped, objective is the mean advantage.
    let net = PolicyNet::init(16, 4);
    let batch: Vec<Sample> = random_batch(&net, &mut rng, 64)
        .into_iter()
        .map(|mut s| {
            s.log_prob_old = net.forward(s.obs.as_slice()).unwrap().log_prob(s.action);
            s
        })
        .collect();
    let refs: Vec<&Sample> = batch.iter().collect();
    let out = ppo_loss(&net, &refs, &LossCoefficients { clip: 0.2, value: 0.0, entropy: 0.0 }).unwrap();
    let mean_adv = batch.iter().map(|s| s.advantage).sum::<f64>() / batch.len() as f64;
    let identity = out.clip_fraction == 0.0 && (out.policy_loss + mean_adv).abs() < 1e-12;
    outcome(ok && identity, format!("100000 triples exact {ok}; unit-ratio identity {identity}"))
}

// 5 ─ safety and conservation

fn lane_overlaps(world: &World) -> usize {
    let mut faults = 0;
    for lane in world.network().lanes() {
        let mut on: Vec<&Vehicle> = world.vehicles.iter().filter(|v| v.lane == lane).collect();
        on.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        for w in on.windows(2) {
            if w[1].pos - w[1].length < w[0].pos {
                faults += 1;
            }
        }
    }
    faults
}

fn safety() -> Outcome {
    let t0 = Instant::now();
    let mut cfg = EnvConfig::default();
    cfg.scenario.inflow.freeway_rate = 1500.0;
    cfg.scenario.inflow.ramp_rate = 1500.0;
    let (mut faults, mut leaks, mut steps, mut vehicles) = (0usize, 0usize, 0u64, 0u64);
    for k in 0..SAFETY_EPISODES as u64 {
        let mut env = MultiAgentEnv::new(&cfg, 5000 + k, true, false).unwrap();
        while !env.finished() {
            if env.step(&RandomPolicy).is_err() {
                faults += 1;
                break;
            }
            faults += lane_overlaps(&env.world);
            leaks += usize::from(!env.world.census().conserved());
            steps += 1;
        }
        vehicles += env.world.census().generated;
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        faults == 0 && leaks == 0 && secs < SAFETY_BUDGET_S,
        format!("{SAFETY_EPISODES} episodes, {steps} steps, {vehicles} vehicles: {faults} overlap faults, {leaks} census breaks, {secs:.1} s"),
    )
}

// 6 ─ observation contract

fn expected_observation(world: &World, i: usize) -> [f64; OBS_DIM] {
    let net = world.network();
    let vs = &world.vehicles;
    let ego = &vs[i];
    let vf = net.freeway_speed_limit;
    let u = |x: f64| x.clamp(0.0, 1.0);
    let dest = |r: Route| if r == Route::ExitOffRamp { 1.0 } else { 0.0 };
    let rank = net.lateral_rank(ego.lane) as f64 / 3.0;
    let mut out = [0.0; OBS_DIM];
    out[..EGO_FEATURES].copy_from_slice(&[u(ego.speed / vf), u(ego.pos / 500.0), rank, rank, dest(ego.route)]);
    let block = |o: &Vehicle| {
        [
            u((o.pos - ego.pos).abs() / DETECTION_RANGE),
            u(o.speed / vf),
            if o.blinker == Blinker::Off { 0.0 } else { 1.0 },
            dest(o.route),
        ]
    };
    let lanes = [
        (Some(ego.lane), NeighborSlot::Leader, NeighborSlot::Follower),
        (net.left_of(ego.lane, ego.pos), NeighborSlot::LeftFront, NeighborSlot::LeftRear),
        (net.right_of(ego.lane, ego.pos), NeighborSlot::RightFront, NeighborSlot::RightRear),
    ];
    for (lane, fs, rs) in lanes {
        let Some(lane) = lane else { continue };
        let others = vs.iter().enumerate().filter(|&(j, v)| j != i && v.lane == lane);
        let front = others
            .clone()
            .filter(|(_, v)| v.pos >= ego.pos && v.pos - ego.pos <= DETECTION_RANGE)
            .min_by(|a, b| a.1.pos.total_cmp(&b.1.pos));
        let rear = others
            .filter(|(_, v)| v.pos < ego.pos && ego.pos - v.pos <= DETECTION_RANGE)
            .max_by(|a, b| a.1.pos.total_cmp(&b.1.pos));
        let f = front.map_or([1.0, u(net.speed_limit(lane, ego.pos) / vf), 0.0, 0.0], |(_, v)| block(v));
        let r = rear.map_or([1.0, 0.0, 0.0, 0.0], |(_, v)| block(v));
        let at = |s: NeighborSlot| EGO_FEATURES + s as usize * NEIGHBOR_FEATURES;
        out[at(fs)..at(fs) + NEIGHBOR_FEATURES].copy_from_slice(&f);
        out[at(rs)..at(rs) + NEIGHBOR_FEATURES].copy_from_slice(&r);
    }
    out
}

fn observation_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let routes = [Route::ThroughFreeway, Route::ExitOffRamp, Route::EnterFromOnRamp];
    let blinkers = [Blinker::Off, Blinker::Left, Blinker::Right];
    let (mut checked, mut range_bad, mut mismatch, mut left_zero, mut leader_fill) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut first = String::new();
    for case in 0..FUZZ_CASES {
        let mut w = World::new(Scenario::default(), case as u64).unwrap();
        let net = w.network().clone();
        for _ in 0..rng.gen_range(1..=25) {
            let lane = LaneId(rng.gen_range(0..4));
            let (lo, hi) = if net.is_aux(lane) { (net.aux_start(), net.aux_end()) } else { (0.0, net.mainline_length()) };
            let id = w.insert_vehicle(lane, rng.gen_range(lo..=hi), rng.gen_range(0.0..40.0), routes[rng.gen_range(0..3)]);
            let i = w.index_of(id).unwrap();
            w.vehicles[i].blinker = blinkers[rng.gen_range(0..3)];
        }
        let traffic = w.traffic();
        for i in 0..w.vehicles.len() {
            let o = observe(&traffic, i);
            checked += 1;
            range_bad += o.0.iter().filter(|x| !(0.0..=1.0).contains(*x)).count();
            let want = expected_observation(&w, i);
            if o.0 != want {
                mismatch += 1;
                if first.is_empty() {
                    first = format!(" first mismatch case {case}: {:?} vs {:?}", o.0, want);
                }
            }
            let ego = &w.vehicles[i];
            if ego.lane == LaneId(2) {
                left_zero += 1;
                if o.neighbor(NeighborSlot::LeftFront) != [0.0; 4] || o.neighbor(NeighborSlot::LeftRear) != [0.0; 4] {
                    mismatch += 1;
                }
            }
            let has_leader = w.vehicles.iter().enumerate().any(|(j, v)| {
                j != i && v.lane == ego.lane && v.pos >= ego.pos && v.pos - ego.pos <= DETECTION_RANGE
            });
            if !net.is_aux(ego.lane) && !has_leader {
                leader_fill += 1;
                if o.neighbor(NeighborSlot::Leader) != [1.0, 1.0, 0.0, 0.0] {
                    mismatch += 1;
                }
            }
        }
    }
    outcome(
        range_bad == 0 && mismatch == 0,
        format!(
            "{FUZZ_CASES} worlds, {checked} observations: {range_bad} out of range, {mismatch} oracle mismatches \
             ({left_zero} leftmost-lane egos, {leader_fill} mainline egos without leader){first}"
        ),
    )
}

// 7 ─ density map

fn density_invariant() -> Outcome {
    let mut cfg = EnvConfig::default();
    cfg.scenario.sim.episode_steps = 600;
    let net = cfg.scenario.network.clone();
    let (start, end) = net.control_zone();
    let (mut rows, mut bad_rows, mut roundtrip) = (0usize, 0usize, true);
    for (k, inflow) in [900.0, 1200.0, 1500.0].into_iter().enumerate() {
        cfg.scenario.inflow.freeway_rate = inflow;
        cfg.scenario.inflow.ramp_rate = inflow;
        let mut env = MultiAgentEnv::new(&cfg, 70 + k as u64, false, true).unwrap();
        let mut census = Vec::new();
        while !env.finished() {
            env.step(&BaselinePolicy).unwrap();
            census.push(env.world.vehicles.iter().filter(|v| v.pos >= start && v.pos < end).count() as u32);
        }
        let log = env.take_log().expect("log recorded");
        let map = density_map(&log, &net, 10.0);
        rows += map.counts.len();
        bad_rows += map.row_sums().iter().zip(&census).filter(|(a, b)| a != b).count();
        bad_rows += map.counts.len().abs_diff(census.len());

        let mut csv = Vec::new();
        map.write_csv(&mut csv).unwrap();
        let back = DensityMap::read_csv(csv.as_slice(), log.dt).unwrap();
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        roundtrip &= back == map && again == csv && density_svg(&back, 5.7) == density_svg(&map, 5.7);
    }
    outcome(
        bad_rows == 0 && roundtrip,
        format!("{rows} rows, {bad_rows} differ from the live census; CSV/SVG round trip lossless {roundtrip}"),
    )
}

// 8 ─ determinism

fn determinism() -> Outcome {
    let mut cfg = EnvConfig::default();
    cfg.scenario.sim.episode_steps = 400;
    let a = run_episode(&RandomPolicy, &cfg, 8).unwrap();
    let b = run_episode(&RandomPolicy, &cfg, 8).unwrap();
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.log.write_csv(&mut ca).unwrap();
    b.log.write_csv(&mut cb).unwrap();
    let logs = ca == cb && a.system_rewards.iter().map(|x| x.to_bits()).eq(b.system_rewards.iter().map(|x| x.to_bits()));

    let tc = TrainConfig {
        samples_per_iteration: 600,
        num_envs: 3,
        minibatch_size: 256,
        epochs: 2,
        hidden: 16,
        iterations: 3,
        ..TrainConfig::default()
    };
    let dir = archive_dir().join("determinism");
    let mut curves = Vec::new();
    for (n, exec) in [Exec::Sequential, Exec::Sequential, Exec::Parallel { workers: 3 }].into_iter().enumerate() {
        let d = dir.join(format!("run{n}"));
        let _ = fs::remove_dir_all(&d);
        let mut t = Trainer::new(tc.clone(), cfg.clone(), 8, exec).unwrap();
        train(&mut t, &d, |_| {}).unwrap();
        curves.push(fs::read(d.join("reward_curve.csv")).unwrap());
    }
    let curve_ok = curves[0] == curves[1] && curves[0] == curves[2];

    let seeds = episode_seeds(8, 3);
    let coef = EmissionCoefficients::default();
    let svgs = |exec| {
        evaluate(&BaselinePolicy, &cfg, &coef, &seeds, exec)
            .unwrap()
            .iter()
            .map(|r| {
                let m = density_map(&r.log, &cfg.scenario.network, 10.0);
                density_svg(&m, 6.0) + &trajectory_svg(&r.log, &cfg.scenario.network)
            })
            .collect::<Vec<_>>()
    };
    let svg_ok = svgs(Exec::Sequential) == svgs(Exec::Parallel { workers: 3 });
    outcome(
        logs && curve_ok && svg_ok,
        format!("episode logs {logs}, reward curves (1 and 3 workers) {curve_ok}, SVGs (1 and 3 workers) {svg_ok}"),
    )
}

// 9 and 10 ─ learning smoke test and directional report

fn smoke_env() -> EnvConfig {
    let mut env = EnvConfig::default();
    env.scenario.inflow.freeway_rate = SMOKE_INFLOW;
    env.scenario.inflow.ramp_rate = SMOKE_INFLOW;
    env
}

fn learning_smoke(nets: &mut Vec<PolicyNet>) -> Outcome {
    let t0 = Instant::now();
    let cfg = TrainConfig {
        samples_per_iteration: SMOKE_SAMPLES,
        iterations: SMOKE_ITERATIONS,
        ..TrainConfig::default()
    };
    let mut improved = 0;
    let mut parts = Vec::new();
    for seed in SMOKE_SEEDS {
        let mut t = Trainer::new(cfg.clone(), smoke_env(), seed, Exec::default()).unwrap();
        let mut curve = String::from("iteration,total_env_steps,mean_system_reward\n");
        let mut rewards = Vec::new();
        while t.iteration < SMOKE_ITERATIONS {
            let s = t.step().unwrap();
            curve += &format!("{},{},{}\n", s.iteration, s.total_env_steps, s.mean_system_reward);
            rewards.push(s.mean_system_reward);
        }
        fs::write(archive_dir().join(format!("smoke_seed{seed}.csv")), curve).unwrap();
        let first = rewards[..5].iter().sum::<f64>() / 5.0;
        let last = rewards[rewards.len() - 5..].iter().sum::<f64>() / 5.0;
        improved += usize::from(last > first);
        parts.push(format!("seed {seed}: {first:.2} -> {last:.2}"));
        nets.push(t.net.clone());
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(improved >= 2, format!("{improved}/3 improved ({}), {secs:.0} s", parts.join(", ")))
}

fn directional_report(nets: &[PolicyNet]) -> Outcome {
    let Some(net) = nets.first() else {
        return outcome(false, "no trained network from criterion 9");
    };
    let env = smoke_env();
    let coef = EmissionCoefficients::default();
    let seeds = episode_seeds(SMOKE_SEEDS[0], REPORT_EPISODES);
    let records = |p: &dyn weavelane::env::Policy| {
        evaluate(p, &env, &coef, &seeds, Exec::default())
            .unwrap()
            .into_iter()
            .map(|r| r.record)
            .collect::<Vec<_>>()
    };
    let baseline = records(&BaselinePolicy);
    let rl = records(&NetPolicy::greedy(net));
    let table = aggregate_runs(&[ScenarioRuns {
        inflow_vphpl: SMOKE_INFLOW,
        baseline,
        rl,
    }])
    .unwrap();
    let text = comparison_text(&table);
    let dir = archive_dir();
    let mut csv = Vec::new();
    write_comparison_csv(&table, &mut csv).unwrap();
    fs::write(dir.join("directional_report.csv"), csv).unwrap();
    fs::write(dir.join("directional_report.txt"), &text).unwrap();
    println!("{text}");
    outcome(
        true,
        format!("non-gating; {REPORT_EPISODES} episodes at {SMOKE_INFLOW} vphpl archived to {}", dir.display()),
    )
}

// 11 ─ unit conversions

fn unit_conversions() -> Outcome {
    // 1 mi = 1609.344 m, 1 h = 3600 s.
    let hand = |mph: f64| format!("{:.4}", mph * 1609.344 / 3600.0);
    let (free, ramp) = (hand(65.0), hand(40.0));
    let mut cfg = RunConfig::default();
    cfg.set_inflow(1500.0);
    let echo = cfg.echo();
    let ok = free == "29.0576"
        && ramp == "17.8816"
        && echo.contains(&format!("freeway_speed_limit = {free}\n"))
        && echo.contains(&format!("ramp_speed_limit = {ramp}\n"))
        && echo.contains("freeway_rate = 1500.0\n");
    outcome(ok, format!("hand conversion {free} / {ramp} m/s; echo carries both and inflow 1500 vphpl"))
}

fn main() {
    let mut nets = Vec::new();
    let criteria: Vec<(u32, &str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        (1, "reward-function fidelity", Box::new(reward_fidelity)),
        (2, "PPO gradient correctness", Box::new(ppo_gradient)),
        (3, "GAE oracle", Box::new(gae_oracle)),
        (4, "clipping semantics", Box::new(clipping)),
        (5, "simulator safety and conservation", Box::new(safety)),
        (6, "observation contract", Box::new(observation_contract)),
        (7, "density-map invariant", Box::new(density_invariant)),
        (8, "determinism", Box::new(determinism)),
        (9, "learning smoke test", Box::new(|| learning_smoke(&mut nets))),
    ];
    let mut results = Vec::new();
    let mut run = |id: u32, name: &str, f: Box<dyn FnOnce() -> Outcome + '_>| {
        let t0 = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let line = format!(
            "criterion {id:>2} {}  {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        println!("{line}");
        results.push((o.pass, line));
    };
    for (id, name, f) in criteria {
        run(id, name, f);
    }
    run(10, "directional comparison", Box::new(|| directional_report(&nets)));
    run(11, "unit-conversion constants", Box::new(unit_conversions));

    println!("\nacceptance summary");
    for (_, line) in &results {
        println!("{line}");
    }
    let failed = results.iter().filter(|(p, _)| !p).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
