use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use weavelane::config::RunConfig;
use weavelane::env::{BaselinePolicy, Policy};
use weavelane::eval::{episode_seeds, evaluate, EpisodeResult};
use weavelane::exec::Exec;
use weavelane::metrics::{
    aggregate_runs, comparison_svg, comparison_text, density_map, line_svg, mean_std, metric_value,
    render_outputs, write_comparison_csv, write_records_csv, DensityMap, MetricsError, MetricsRecord,
    ScenarioRuns, TABLE_METRICS,
};
use weavelane::policy::{Checkpoint, NetPolicy, PolicyError};
use weavelane::ppo::{train, PpoError, Trainer, CURVE_FILE};
use weavelane::road::{EpisodeLog, VEHICLE_LENGTH};

use crate::rundir::{self, EvalRun, RunMeta};
use crate::{Cli, Cmd, Fail, PolicyKind};

pub fn run(cli: Cli) -> Result<(), Fail> {
    let exec = Exec::from_workers(cli.workers);
    match &cli.cmd {
        Cmd::Train { max_iterations, resume } => {
            let mut cfg = load_config(&cli)?;
            if let Some(n) = max_iterations {
                cfg.train.iterations = *n;
            }
            let out = cli.out.clone().unwrap_or_else(|| cfg.out_dir.join("train"));
            cmd_train(&cfg, &out, resume.as_deref(), exec)
        }
        Cmd::Evaluate { policy, checkpoint } => {
            let cfg = load_config(&cli)?;
            cmd_evaluate(&cfg, cli.out.clone(), *policy, checkpoint.as_deref(), exec)
        }
        Cmd::Baseline => {
            let cfg = load_config(&cli)?;
            cmd_evaluate(&cfg, cli.out.clone(), PolicyKind::Baseline, None, exec)
        }
        Cmd::Report { dirs, baseline, rl } => {
            let out = match &cli.out {
                Some(o) => o.clone(),
                None => load_config(&cli)?.out_dir.join("report"),
            };
            cmd_report(dirs, baseline, rl, &out)
        }
        Cmd::Plot { dirs } => cmd_plot(dirs),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Fail> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| Fail::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(rate) = cli.inflow {
        cfg.set_inflow(rate);
    }
    if let Some(n) = cli.episodes {
        if n == 0 {
            return Err(Fail::Usage("--episodes must be at least 1".into()));
        }
        cfg.eval.episodes = n;
    }
    cfg.validate().map_err(|e| Fail::Usage(e.to_string()))?;
    Ok(cfg)
}

fn ppo_fail(e: PpoError) -> Fail {
    match e {
        PpoError::Policy(PolicyError::Checkpoint(_)) | PpoError::Format(_) => Fail::Data(e.to_string()),
        PpoError::Config(_) => Fail::Usage(e.to_string()),
        _ => Fail::Runtime(e.to_string()),
    }
}

fn metrics_fail(e: MetricsError) -> Fail {
    match e {
        MetricsError::Mismatch(_) | MetricsError::Csv(_) => Fail::Data(e.to_string()),
        _ => Fail::Runtime(e.to_string()),
    }
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, Fail> {
    Checkpoint::load(path).map_err(|e| match e {
        PolicyError::Io(io) => Fail::Usage(format!("cannot read checkpoint {}: {io}", path.display())),
        e => Fail::Data(format!("{}: {e}", path.display())),
    })
}

fn cmd_train(cfg: &RunConfig, out: &Path, resume: Option<&Path>, exec: Exec) -> Result<(), Fail> {
    rundir::write_echo(out, cfg)?;
    let env = cfg.env_config();
    let mut trainer = match resume {
        Some(p) => Trainer::resume(cfg.train.clone(), env, cfg.seed, exec, load_checkpoint(p)?),
        None => Trainer::new(cfg.train.clone(), env, cfg.seed, exec),
    }
    .map_err(ppo_fail)?;
    train(&mut trainer, out, |s| {
        println!(
            "iter {:>4}  steps {:>9}  reward {:>9.4}  clip {:.3}  log_std {:+.3}{}",
            s.iteration,
            s.total_env_steps,
            s.mean_system_reward,
            s.clip_fraction,
            s.log_std,
            s.warning.as_deref().map(|w| format!("  warning: {w}")).unwrap_or_default()
        );
    })
    .map_err(ppo_fail)?;
    let curve = rundir::read_curve(&out.join(CURVE_FILE))?;
    rundir::write(
        &out.join("reward_curve.svg"),
        line_svg("Reward curve", "Iteration", "Mean system reward per step", &curve),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

fn density_scale(cfg: &RunConfig) -> f64 {
    DensityMap::jam_count(&cfg.network, cfg.eval.density_bin, VEHICLE_LENGTH, cfg.driver.min_gap)
}

fn write_episode(cfg: &RunConfig, dir: &Path, log: &EpisodeLog) -> Result<(), Fail> {
    let map = density_map(log, &cfg.network, cfg.eval.density_bin);
    render_outputs(log, &map, &cfg.network, density_scale(cfg), dir).map_err(metrics_fail)
}

fn summary_csv(records: &[MetricsRecord]) -> String {
    let mut s = String::from("metric,mean,std\n");
    let keys = std::iter::once("mean_speed_mps").chain(TABLE_METRICS.iter().map(|(k, _)| *k));
    for key in keys {
        let xs: Vec<f64> = records.iter().filter_map(|r| metric_value(r, key)).collect();
        let (m, sd) = mean_std(&xs);
        let _ = writeln!(s, "{key},{m},{sd}");
    }
    s
}

fn cmd_evaluate(
    cfg: &RunConfig,
    out: Option<PathBuf>,
    kind: PolicyKind,
    checkpoint: Option<&Path>,
    exec: Exec,
) -> Result<(), Fail> {
    let inflow = cfg.inflow.freeway_rate;
    let out = out.unwrap_or_else(|| cfg.out_dir.join(format!("{}_{inflow}vphpl", kind.name())));
    let ck = match (kind, checkpoint) {
        (PolicyKind::Rl, None) => return Err(Fail::Usage("--policy rl needs --checkpoint".into())),
        (PolicyKind::Rl, Some(p)) => Some(load_checkpoint(p)?),
        (PolicyKind::Baseline, _) => None,
    };
    let net_policy = ck.as_ref().map(|c| NetPolicy::greedy(&c.net));
    let policy: &dyn Policy = match &net_policy {
        Some(p) => p,
        None => &BaselinePolicy,
    };

    let seeds = episode_seeds(cfg.seed, cfg.eval.episodes);
    let results = evaluate(policy, &cfg.env_config(), &cfg.emissions, &seeds, exec)
        .map_err(|e| Fail::Runtime(e.to_string()))?;

    rundir::write_echo(&out, cfg)?;
    let meta = RunMeta {
        policy: kind.name().into(),
        checkpoint: checkpoint.map(|p| p.display().to_string()),
        inflow_vphpl: inflow,
        episodes: results.len(),
        seed: cfg.seed,
    };
    rundir::write(&out.join(rundir::RUN_FILE), toml::to_string_pretty(&meta).expect("meta serializes"))?;
    for (k, r) in results.iter().enumerate() {
        write_episode_dir(cfg, &rundir::episode_dir(&out, k), r)?;
    }
    let records: Vec<MetricsRecord> = results.into_iter().map(|r| r.record).collect();
    let mut buf = Vec::new();
    write_records_csv(&records, &mut buf).map_err(metrics_fail)?;
    rundir::write(&out.join(rundir::METRICS_FILE), buf)?;
    let summary = summary_csv(&records);
    rundir::write(&out.join(rundir::SUMMARY_FILE), &summary)?;
    println!("{} policy, {inflow} vphpl, {} episodes", kind.name(), records.len());
    print!("{summary}");
    println!("wrote {}", out.display());
    Ok(())
}

fn write_episode_dir(cfg: &RunConfig, dir: &Path, r: &EpisodeResult) -> Result<(), Fail> {
    write_episode(cfg, dir, &r.log)?;
    let mut rewards = String::from("step,system_reward\n");
    for (k, x) in r.system_rewards.iter().enumerate() {
        let _ = writeln!(rewards, "{k},{x}");
    }
    rundir::write(&dir.join("rewards.csv"), rewards)
}

fn cmd_report(dirs: &[PathBuf], baseline: &[PathBuf], rl: &[PathBuf], out: &Path) -> Result<(), Fail> {
    let mut runs: Vec<(bool, EvalRun)> = Vec::new();
    for d in dirs {
        let r = rundir::read_eval_run(d)?;
        let is_rl = match r.meta.policy.as_str() {
            "rl" => true,
            "baseline" => false,
            other => return Err(Fail::Data(format!("{}: unknown policy {other:?}", d.display()))),
        };
        runs.push((is_rl, r));
    }
    for d in baseline {
        runs.push((false, rundir::read_eval_run(d)?));
    }
    for d in rl {
        runs.push((true, rundir::read_eval_run(d)?));
    }
    if runs.is_empty() {
        return Err(Fail::Usage("report needs run directories".into()));
    }

    let mut inflows: Vec<f64> = runs.iter().map(|(_, r)| r.meta.inflow_vphpl).collect();
    inflows.sort_by(f64::total_cmp);
    inflows.dedup();
    let mut scenarios = Vec::new();
    for inflow in inflows {
        let pick = |want_rl: bool| -> Result<&EvalRun, Fail> {
            let found: Vec<&EvalRun> = runs
                .iter()
                .filter(|(is_rl, r)| *is_rl == want_rl && r.meta.inflow_vphpl == inflow)
                .map(|(_, r)| r)
                .collect();
            let role = if want_rl { "RL" } else { "baseline" };
            match found.as_slice() {
                [one] => Ok(one),
                [] => Err(Fail::Data(format!("no {role} run for the {inflow} vphpl scenario"))),
                _ => Err(Fail::Data(format!("more than one {role} run for the {inflow} vphpl scenario"))),
            }
        };
        let (b, r) = (pick(false)?, pick(true)?);
        if b.config.scenario() != r.config.scenario() || b.config.emissions != r.config.emissions {
            return Err(Fail::Data(format!(
                "scenario mismatch between {} and {}",
                b.dir.display(),
                r.dir.display()
            )));
        }
        scenarios.push(ScenarioRuns {
            inflow_vphpl: inflow,
            baseline: b.records.clone(),
            rl: r.records.clone(),
        });
    }
    let table = aggregate_runs(&scenarios).map_err(metrics_fail)?;
    let text = comparison_text(&table);
    let mut csv = Vec::new();
    write_comparison_csv(&table, &mut csv).map_err(metrics_fail)?;
    rundir::write(&out.join("comparison.csv"), csv)?;
    rundir::write(&out.join("comparison.txt"), &text)?;
    rundir::write(&out.join("comparison.svg"), comparison_svg(&table))?;
    print!("{text}");
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_plot(dirs: &[PathBuf]) -> Result<(), Fail> {
    if dirs.is_empty() {
        return Err(Fail::Usage("plot needs run directories".into()));
    }
    for d in dirs {
        let cfg = rundir::read_echo(d)?;
        let curve = d.join(CURVE_FILE);
        if curve.exists() {
            let pts = rundir::read_curve(&curve)?;
            rundir::write(
                &d.join("reward_curve.svg"),
                line_svg("Reward curve", "Iteration", "Mean system reward per step", &pts),
            )?;
        }
        let episodes = d.join(rundir::EPISODES_DIR);
        if !episodes.exists() {
            continue;
        }
        let mut eps: Vec<PathBuf> = fs::read_dir(&episodes)
            .map_err(|e| rundir::io_fail(&episodes, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("log.csv").exists())
            .collect();
        eps.sort();
        for ep in eps {
            let path = ep.join("log.csv");
            let file = fs::File::open(&path).map_err(|e| rundir::io_fail(&path, e))?;
            let log = EpisodeLog::read_csv(file, cfg.sim.dt, Some(cfg.sim.episode_steps))
                .map_err(|e| Fail::Data(format!("{}: {e}", path.display())))?;
            write_episode(&cfg, &ep, &log)?;
        }
        println!("plotted {}", d.display());
    }
    Ok(())
}
