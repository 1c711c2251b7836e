use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use scmp_core::audit::{audit, AuditTolerance};
use scmp_core::bench::{generate_benchmark, run_suite, BenchParams, GoalLayout};
use scmp_core::config::PlannerConfig;
use scmp_core::conflict_tree::{plan_stages, PlanLimits};
use scmp_core::io::{
    bench_report_to_string, load_scenario, load_solution, write_solution, write_text, BenchReportFile, SolutionFile,
};
use scmp_core::metrics::{run_metrics, RunMetrics};
use scmp_core::model::AgentSpec;
use scmp_core::render::{default_snapshots, render_svg, RenderOptions};
use scmp_core::scenario::Scenario;

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "scmp", version, about = "Cooperative motion planning for car-like agents in formation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a scenario and write the solution with its metrics.
    Plan(PlanArgs),
    /// Generate seeded benchmark scenarios, plan them and report.
    Bench(BenchArgs),
    /// Audit a solution file against its scenario.
    Check(CheckArgs),
    /// Draw a solution as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct Overrides {
    /// Low-level successor budget per search.
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Planner config field, e.g. `closest_reward_r=0.5`. Repeatable.
    #[arg(long = "config-override", value_name = "KEY=VALUE")]
    config_override: Vec<String>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Wall-clock cap in seconds.
    #[arg(long, default_value_t = 90.0)]
    time_limit: f64,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Include the measured runtime (makes output run-dependent).
    #[arg(long)]
    emit_runtime: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50.0)]
    width: f64,
    #[arg(long, default_value_t = 50.0)]
    height: f64,
    #[arg(long, default_value_t = 25)]
    obstacles: usize,
    #[arg(long, default_value_t = 0.8)]
    obstacle_radius: f64,
    /// Group sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    groups: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    outliers: usize,
    /// Shuffle group blocks and outlier goals instead of translating starts.
    #[arg(long)]
    shuffled: bool,
    /// Number of scenarios; scenario i uses seed `seed + i`.
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 90.0)]
    time_limit: f64,
    #[arg(long)]
    emit_runtime: bool,
    /// Plan scenarios one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Ticks at which footprints are drawn; defaults to start, middle, end.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<u32>>,
}

fn apply_overrides(config: &mut PlannerConfig, o: &Overrides) -> Result<()> {
    let mut value = serde_json::to_value(&*config)?;
    let fields = value.as_object_mut().expect("config is an object");
    for kv in &o.config_override {
        let (key, raw) = kv.split_once('=').with_context(|| format!("override `{kv}` is not KEY=VALUE"))?;
        if !fields.contains_key(key) {
            bail!("unknown config key `{key}`");
        }
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        fields.insert(key.to_string(), parsed);
    }
    *config = serde_json::from_value(value).context("invalid config override")?;
    if let Some(n) = o.node_budget {
        config.node_budget = n;
    }
    if let Some(s) = o.seed {
        config.seed = s;
    }
    Ok(())
}

fn time_limit(seconds: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(seconds).with_context(|| format!("invalid time limit {seconds}"))
}

fn plan(args: &PlanArgs) -> Result<u8> {
    let mut scenario = load_scenario(&args.scenario)?;
    apply_overrides(&mut scenario.config, &args.overrides)?;
    scenario.validate().context("scenario after overrides")?;
    let limits = PlanLimits::new(Some(time_limit(args.time_limit)?), scenario.config.node_budget);
    info!("planning {} agents over {} stages", scenario.num_agents(), scenario.stages.len());
    match plan_stages(&scenario, &limits) {
        Ok(plan) => {
            let (metrics, groups) = run_metrics(&scenario, &plan);
            let file = SolutionFile::success(&scenario, &plan, &metrics, &groups, args.emit_runtime);
            write_solution(&file, &args.out)?;
            if let Some(svg) = &args.svg {
                let opts = RenderOptions { snapshots: default_snapshots(&plan.trajectories), ..Default::default() };
                write_text(svg, &render_svg(&scenario, &plan.trajectories, &plan.stage_ends, &opts))?;
            }
            println!("{}", summary_line(&metrics));
            Ok(EXIT_OK)
        }
        Err((err, stats)) => {
            let metrics = RunMetrics::failure(&stats);
            let file = SolutionFile::failure(&scenario, &metrics, &err.to_string(), args.emit_runtime);
            write_solution(&file, &args.out)?;
            eprintln!("planning failed: {err}");
            Ok(EXIT_FAILED)
        }
    }
}

fn summary_line(m: &RunMetrics) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    format!(
        "success={} flowtime={:.3}s low_level={} high_level={} ad={} cd={} runtime={:.2}s",
        m.success,
        m.avg_flowtime_s,
        m.low_level_nodes,
        m.high_level_nodes,
        opt(m.ad_rad),
        opt(m.cd_m),
        m.runtime_s
    )
}

fn bench(args: &BenchArgs) -> Result<u8> {
    let params = BenchParams {
        width: args.width,
        height: args.height,
        obstacle_count: args.obstacles,
        obstacle_radius: args.obstacle_radius,
        groups: args.groups.clone(),
        outliers: args.outliers,
        goal_layout: if args.shuffled { GoalLayout::Shuffled } else { GoalLayout::Translated },
    };
    let first_seed = args.overrides.seed.unwrap_or(0);
    let spec = AgentSpec::benchmark();
    let mut scenarios = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let seed = first_seed + i as u64;
        let mut s = generate_benchmark(&params, &spec, seed).with_context(|| format!("scenario with seed {seed}"))?;
        apply_overrides(&mut s.config, &args.overrides)?;
        s.config.seed = seed;
        s.validate()?;
        scenarios.push(s);
    }
    let report = run_suite(&scenarios, time_limit(args.time_limit)?, !args.sequential);
    let file = BenchReportFile::new(&params, first_seed, args.time_limit, &report, args.emit_runtime);
    write_text(&args.out, &bench_report_to_string(&file))?;
    print!("{}", table(&file));
    Ok(EXIT_OK)
}

fn table(r: &BenchReportFile) -> String {
    let opt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |v| format!("{v:.p$}"));
    let mut s = format!("{:>5} {:>6} {:>7} {:>11} {:>10} {:>6} {:>8} {:>8}\n", "idx", "seed", "success", "flowtime_s", "low_level", "high", "ad_rad", "cd_m");
    for run in &r.runs {
        let m = &run.metrics;
        s += &format!(
            "{:>5} {:>6} {:>7} {:>11.3} {:>10} {:>6} {:>8} {:>8}\n",
            run.index,
            run.seed,
            m.success,
            m.avg_flowtime_s,
            m.low_level_nodes,
            m.high_level_nodes,
            opt(m.ad_rad, 4),
            opt(m.cd_m, 3)
        );
    }
    let sm = &r.summary;
    s += &format!(
        "success {:.1}%  single-shot {:.1}%  flowtime {} s  low-level {:.1}  high-level {:.2}  AD {} rad  CD {} m\n",
        100.0 * sm.success_rate,
        100.0 * sm.single_shot_rate,
        opt(sm.mean_flowtime_s, 3),
        sm.mean_low_level_nodes,
        sm.mean_high_level_nodes,
        opt(sm.mean_ad_rad, 4),
        opt(sm.mean_cd_m, 3)
    );
    s
}

fn load_pair(scenario: &Path, solution: &Path) -> Result<(Scenario, SolutionFile)> {
    let scenario = load_scenario(scenario)?;
    let solution = load_solution(solution)?;
    Ok((scenario, solution))
}

fn check(args: &CheckArgs) -> Result<u8> {
    let (scenario, solution) = load_pair(&args.scenario, &args.solution)?;
    if !solution.metrics.success {
        println!("FAIL: solution reports a planning failure");
        return Ok(EXIT_FAILED);
    }
    if (solution.sample_time - scenario.spec.sample_time).abs() > 1e-12 {
        println!("FAIL: sample time {} does not match the scenario", solution.sample_time);
        return Ok(EXIT_FAILED);
    }
    let trajs = match solution.trajectories() {
        Ok(t) => t,
        Err(e) => {
            println!("FAIL: {e}");
            return Ok(EXIT_FAILED);
        }
    };
    let violations = audit(&scenario, &trajs, &solution.stage_ends, &AuditTolerance::FILE);
    if violations.is_empty() {
        println!("OK: {} agents, {} stages, no violations", trajs.len(), solution.stage_ends.len());
        return Ok(EXIT_OK);
    }
    for v in &violations {
        println!("FAIL: {v}");
    }
    Ok(EXIT_FAILED)
}

fn render(args: &RenderArgs) -> Result<u8> {
    let (scenario, solution) = load_pair(&args.scenario, &args.solution)?;
    let trajs = solution.trajectories()?;
    let snapshots = args.snapshots.clone().unwrap_or_else(|| default_snapshots(&trajs));
    let opts = RenderOptions { snapshots, ..Default::default() };
    write_text(&args.out, &render_svg(&scenario, &trajs, &solution.stage_ends, &opts))?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCMP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let result = match &cli.command {
        Command::Plan(a) => plan(a),
        Command::Bench(a) => bench(a),
        Command::Check(a) => check(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
