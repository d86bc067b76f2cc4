//! Experiment driver: plans and schedules collectives, verifies them
//! against the brute-force oracle, estimates completion times, and emits
//! cost/power/power-budget reports as CSV or key/value text.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 invariant violation
//! (oracle mismatch or contention), 4 infeasible power budget.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use ramp_core::baselines::{default_dims, strategy_plan, StrategyKind};
use ramp_core::config::{fmt_float, Config};
use ramp_core::engine::{plan_collective_rooted, plan_to_text, CollectiveOp, Variant4};
use ramp_core::estimator::{
    ramp_completion_on, strategy_completion, CompletionBreakdown, EstimatorConfig, NodeSpec,
};
use ramp_core::funcsim::verify_ramp_collective;
use ramp_core::params::{derived_quantities, RampParams, SubnetKind};
use ramp_core::physmodel::{
    cost_report, power_report, walk_budget, ComponentChain, SystemKind, UnitCosts,
};
use ramp_core::topo::{build_topology, select_nodes, select_ramp_box, TopologyKind, TopologySpec};
use ramp_core::transcoder::{build_schedule, verify_contention, ScheduleConfig};
use ramp_core::workloads::{iteration_time, CollectiveLoad, SystemModel, WorkloadConfig};

#[derive(Parser)]
#[command(name = "ramp", version, about = "Optical collective-network planner and estimator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a collective plan (summary or per-node records).
    Plan(PlanArgs),
    /// Build the physical schedule and emit it as CSV.
    Schedule(ScheduleArgs),
    /// Run the functional oracle and contention sweep.
    Verify(VerifyArgs),
    /// Estimate completion time for one scenario.
    Estimate(EstimateArgs),
    /// Sweep operations, strategies, sizes and scales into a CSV table.
    Sweep(SweepArgs),
    /// Network cost report.
    Cost(CostArgs),
    /// Network power report.
    Power(CostArgs),
    /// Optical power-budget walk.
    Budget(BudgetArgs),
    /// Training iteration/time report for a workload config.
    Workload(WorkloadArgs),
    /// Derived scalability quantities for a parameter set.
    Report(ParamsArgs),
}

#[derive(Args, Clone)]
struct ParamsArgs {
    /// Parameter config file (keys ramp.x, ramp.j, ramp.lambda, ramp.b,
    /// ramp.line_rate, ramp.subnet); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    x: Option<u32>,
    #[arg(long)]
    j: Option<u32>,
    #[arg(long)]
    lambda: Option<u32>,
    #[arg(long)]
    b: Option<u32>,
    /// Line rate per transceiver, e.g. 400Gbps.
    #[arg(long)]
    line_rate: Option<String>,
    /// Subnet fabric: bs, rb or rs.
    #[arg(long)]
    subnet: Option<String>,
}

const PARAM_KEYS: [&str; 6] =
    ["ramp.x", "ramp.j", "ramp.lambda", "ramp.b", "ramp.line_rate", "ramp.subnet"];

impl ParamsArgs {
    fn params(&self) -> anyhow::Result<RampParams> {
        let cfg = match &self.config {
            Some(path) => {
                let c = Config::load(&resolve_config(path))?;
                c.check_known(&PARAM_KEYS)?;
                c
            }
            None => Config::default(),
        };
        let x = self.x.map(Ok).unwrap_or_else(|| cfg.u64_or("ramp.x", 32).map(|v| v as u32))?;
        let j = self.j.map(Ok).unwrap_or_else(|| cfg.u64_or("ramp.j", 32).map(|v| v as u32))?;
        let lambda = self
            .lambda
            .map(Ok)
            .unwrap_or_else(|| cfg.u64_or("ramp.lambda", 64).map(|v| v as u32))?;
        let b = self.b.map(Ok).unwrap_or_else(|| cfg.u64_or("ramp.b", 1).map(|v| v as u32))?;
        let rate_text = self
            .line_rate
            .clone()
            .or_else(|| cfg.get("ramp.line_rate").map(str::to_string))
            .unwrap_or_else(|| "400Gbps".to_string());
        let rate = ramp_core::config::parse_u64_with_units(&rate_text)
            .ok_or_else(|| anyhow::anyhow!("bad line rate `{rate_text}`"))?;
        let subnet_text = self
            .subnet
            .clone()
            .or_else(|| cfg.get("ramp.subnet").map(str::to_string))
            .unwrap_or_else(|| "bs".to_string());
        let subnet = match subnet_text.to_ascii_lowercase().as_str() {
            "bs" | "broadcast-select" => SubnetKind::BroadcastSelect,
            "rb" | "route-broadcast" => SubnetKind::RouteBroadcast,
            "rs" | "route-switch" => SubnetKind::RouteSwitch,
            other => anyhow::bail!("unknown subnet kind `{other}`"),
        };
        Ok(RampParams::new(x, j, lambda, b, rate)?.with_subnet(subnet))
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    params: ParamsArgs,
    #[arg(long)]
    op: String,
    /// Message size (bytes, or with a unit suffix).
    #[arg(long, default_value = "1GB")]
    msg: String,
    #[arg(long, default_value_t = 2)]
    variant4: u8,
    #[arg(long, default_value_t = 0)]
    root: u64,
    /// Emit the full per-node record table instead of the summary.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[command(flatten)]
    params: ParamsArgs,
    #[arg(long)]
    op: String,
    #[arg(long, default_value = "1GB")]
    msg: String,
    #[arg(long, default_value_t = 2)]
    variant4: u8,
    #[arg(long, default_value_t = 0)]
    root: u64,
    #[arg(long, default_value_t = 20)]
    slot_ns: u64,
    #[arg(long, default_value_t = 0.05)]
    overhead: f64,
    #[arg(long, default_value_t = 20)]
    reconfig_ns: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest communication-group count in the sweep.
    #[arg(long, default_value_t = 4)]
    max_x: u32,
    /// Restrict to one operation.
    #[arg(long)]
    op: Option<String>,
    /// Run every operation and shape (the default).
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, default_value = "ramp")]
    topology: String,
    /// Strategy for baseline topologies: ring, hier or torus.
    #[arg(long, default_value = "ring")]
    strategy: String,
    #[arg(long, default_value = "all-reduce")]
    op: String,
    #[arg(long, default_value_t = 65_536)]
    workers: u64,
    #[arg(long, default_value = "1GB")]
    msg: String,
    /// Node capacity for the scenario.
    #[arg(long, default_value = "2.4Tbps")]
    node_rate: String,
    #[arg(long, default_value_t = 1)]
    oversub: u64,
    #[arg(long, default_value_t = 20)]
    reconfig_ns: u64,
    /// Also print the topology's hierarchy table.
    #[arg(long)]
    hierarchy: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "all-reduce")]
    op: String,
    /// Comma-separated: ramp,ring,hier,torus.
    #[arg(long, default_value = "ramp,ring,hier,torus")]
    strategies: String,
    /// Comma-separated message sizes.
    #[arg(long, default_value = "100MB,1GB,10GB")]
    msg: String,
    /// Worker range lo..hi, swept geometrically.
    #[arg(long, default_value = "16..65536")]
    n: String,
    #[arg(long, default_value = "2.4Tbps")]
    node_rate: String,
    #[arg(long, default_value_t = 1)]
    oversub: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// ramp, hpc or dcn.
    #[arg(long, default_value = "ramp")]
    system: String,
    #[arg(long, default_value_t = 65_536)]
    scale: u64,
    /// Intra-to-inter oversubscription (EPS systems).
    #[arg(long, default_value_t = 1)]
    oversub: u64,
    #[arg(long, default_value = "12.8Tbps")]
    node_bw: String,
}

#[derive(Args)]
struct BudgetArgs {
    #[command(flatten)]
    params: ParamsArgs,
    /// Launch power in dBm.
    #[arg(long, default_value_t = 10.0)]
    launch: f64,
    /// Chain definition file overriding the default chain.
    #[arg(long)]
    chain: Option<PathBuf>,
}

#[derive(Args)]
struct WorkloadArgs {
    /// Workload config file.
    #[arg(long)]
    config: PathBuf,
    /// Systems to evaluate: ramp, fat-tree-ring, fat-tree-hier,
    /// fat-tree-torus, topoopt-ring.
    #[arg(long, default_value = "ramp,fat-tree-hier,topoopt-ring")]
    systems: String,
}

fn main() -> ExitCode {
    // Die quietly when a pager closes the pipe.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<ramp_core::Error>() {
                Some(ramp_core::Error::Contention(_))
                | Some(ramp_core::Error::OracleMismatch(_)) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_size(s: &str) -> anyhow::Result<u64> {
    ramp_core::config::parse_u64_with_units(s)
        .ok_or_else(|| anyhow::anyhow!("bad size `{s}`"))
}

fn parse_op(s: &str) -> anyhow::Result<CollectiveOp> {
    CollectiveOp::parse(s).ok_or_else(|| anyhow::anyhow!("unknown operation `{s}`"))
}

fn parse_variant(v: u8) -> anyhow::Result<Variant4> {
    match v {
        1 => Ok(Variant4::Pairwise),
        2 => Ok(Variant4::DeviceShift),
        other => anyhow::bail!("variant4 must be 1 or 2, got {other}"),
    }
}

/// NodeSpec used by estimate/sweep/workload scenarios: a contemporary
/// accelerator profile (HBM-class memory bandwidth, half precision).
fn scenario_node_spec() -> NodeSpec {
    NodeSpec {
        mem_bw_bytes_per_s: 1.3e12,
        peak_ops_per_s: 3.12e14,
        clk_ns: 0.7,
        elem_bytes: 2,
        step_setup_ns: 0.0,
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Report(args) => {
            let p = args.params()?;
            let r = derived_quantities(&p)?;
            println!("nodes = {}", r.nodes);
            println!("node_capacity_bps = {}", r.node_capacity_bps);
            println!("total_capacity_bps = {}", r.total_capacity_bps);
            println!("bisection_bps = {}", r.bisection_bps);
            println!("subnet_count = {}", r.subnet_count);
            println!("fibre_count = {}", r.fibre_count);
            println!("link_count = {}", r.link_count);
            println!("transceiver_count = {}", r.transceiver_count);
            println!(
                "min_slot_message_bytes = {}",
                ramp_core::min_message_per_slot(p.line_rate_bps, 20, 0.05)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Plan(args) => {
            let p = args.params.params()?;
            let op = parse_op(&args.op)?;
            let variant = parse_variant(args.variant4)?;
            let msg = parse_size(&args.msg)?;
            let plan = plan_collective_rooted(op, msg, &p, variant, args.root, 2)?;
            if args.full {
                write_or_print(&args.out, &plan_to_text(&plan))?;
            } else {
                let mut text =
                    String::from("step,family,round,subgroup_size,msg_bytes,buffer_op,local_op\n");
                for (i, s) in plan.steps.iter().enumerate() {
                    text.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        i,
                        s.family.index(),
                        s.round.map(|(r, _)| r).unwrap_or(0),
                        s.d,
                        s.msg_bytes,
                        s.buffer_op.label(),
                        s.local_op.label()
                    ));
                }
                write_or_print(&args.out, &text)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Schedule(args) => {
            let p = args.params.params()?;
            let op = parse_op(&args.op)?;
            let variant = parse_variant(args.variant4)?;
            let msg = parse_size(&args.msg)?;
            let plan = plan_collective_rooted(op, msg, &p, variant, args.root, 2)?;
            let cfg = ScheduleConfig {
                slot_ns: args.slot_ns,
                overhead_fraction: args.overhead,
                reconfig_ns: args.reconfig_ns,
                io_latency_ns: 100,
            };
            let sched = build_schedule(&plan, &cfg)?;
            let report = verify_contention(&sched, p.subnet);
            write_or_print(&args.out, &sched.to_csv())?;
            if !report.is_empty() {
                eprintln!("contention violations: {}", report.violations.len());
                for v in report.violations.iter().take(5) {
                    eprintln!("  {:?} {}", v.kind, v.detail);
                }
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let only: Option<CollectiveOp> = match &args.op {
                Some(s) => Some(parse_op(s)?),
                None => None,
            };
            let _ = args.all;
            let mut cases = Vec::new();
            for x in 2..=args.max_x.max(2) {
                for j in 1..=x {
                    for mult in [1u32, 2, 4] {
                        cases.push(RampParams::new(x, j, x * mult, 1, 400_000_000_000)?);
                    }
                }
            }
            let mut points = Vec::new();
            for p in &cases {
                for variant in [Variant4::DeviceShift, Variant4::Pairwise] {
                    for op in CollectiveOp::ALL {
                        if let Some(o) = only {
                            if o != op {
                                continue;
                            }
                        }
                        points.push((*p, variant, op));
                    }
                }
            }
            let results: Vec<Option<String>> = points
                .par_iter()
                .map(|(p, variant, op)| {
                    verify_ramp_collective(*op, p, *variant).err().map(|e| {
                        format!(
                            "FAIL x={} J={} L={} v{} {}: {e}",
                            p.x,
                            p.j,
                            p.lambda,
                            variant.label(),
                            op.label()
                        )
                    })
                })
                .collect();
            let failures = results.iter().flatten().count();
            for line in results.iter().flatten() {
                eprintln!("{line}");
            }
            println!("verified {} cases, {failures} failures", points.len());
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::Estimate(args) => {
            let spec = scenario_node_spec();
            let op = parse_op(&args.op)?;
            let msg = parse_size(&args.msg)?;
            let node_rate = parse_size(&args.node_rate)?;
            if args.hierarchy {
                if let Some(kind) = TopologyKind::parse(&args.topology) {
                    let mut tspec = TopologySpec::new(args.workers.max(16), node_rate);
                    tspec.oversub = args.oversub;
                    if let Ok(t) = build_topology(kind, &tspec) {
                        print!("{}", t.hierarchy_csv());
                    }
                }
            }
            let (label, bt) = estimate_one(
                &args.topology,
                &args.strategy,
                op,
                args.workers,
                msg,
                node_rate,
                args.oversub,
                args.reconfig_ns,
                &spec,
            )?;
            println!("scenario,op,workers,msg_bytes,h2h_ns,h2t_ns,compute_ns,total_ns");
            println!(
                "{label},{},{},{},{},{},{},{}",
                op.label(),
                args.workers,
                msg,
                fmt_float(bt.h2h_ns),
                fmt_float(bt.h2t_ns),
                fmt_float(bt.compute_ns),
                fmt_float(bt.total_ns)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            let op = parse_op(&args.op)?;
            let node_rate = parse_size(&args.node_rate)?;
            let spec = scenario_node_spec();
            let msgs: Vec<u64> =
                args.msg.split(',').map(parse_size).collect::<anyhow::Result<Vec<_>>>()?;
            let (lo, hi) = args
                .n
                .split_once("..")
                .ok_or_else(|| anyhow::anyhow!("worker range must be lo..hi"))?;
            let (lo, hi) = (lo.parse::<u64>()?, hi.parse::<u64>()?);
            // Scenario points run in a worker pool; rows merge back in
            // deterministic scenario order.
            let mut points = Vec::new();
            for strat in args.strategies.split(',') {
                let mut n = lo.max(2);
                while n <= hi {
                    for &m in &msgs {
                        points.push((strat.to_string(), n, m));
                    }
                    n *= 4;
                }
            }
            let rows: Vec<anyhow::Result<String>> = points
                .par_iter()
                .map(|(strat, n, m)| {
                    let topo_name = if strat == "ramp" { "ramp" } else { "fat-tree" };
                    let (label, bt) = estimate_one(
                        topo_name, strat, op, *n, *m, node_rate, args.oversub, 20, &spec,
                    )?;
                    Ok(format!(
                        "{label},{},{},{},{},{},{},{}\n",
                        op.label(),
                        n,
                        m,
                        fmt_float(bt.h2h_ns),
                        fmt_float(bt.h2t_ns),
                        fmt_float(bt.compute_ns),
                        fmt_float(bt.total_ns)
                    ))
                })
                .collect();
            let mut text =
                String::from("strategy,op,workers,msg_bytes,h2h_ns,h2t_ns,compute_ns,total_ns\n");
            for row in rows {
                text.push_str(&row?);
            }
            write_or_print(&args.out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cost(args) => {
            let kind = SystemKind::parse(&args.system)
                .ok_or_else(|| anyhow::anyhow!("unknown system `{}`", args.system))?;
            let node_bw = parse_size(&args.node_bw)?;
            let r = cost_report(
                kind,
                args.scale,
                node_bw,
                args.oversub,
                None,
                &UnitCosts::default(),
            )?;
            println!("system = {}", r.counts.kind.label());
            println!("nodes = {}", r.counts.nodes);
            println!("ports_per_node = {}", r.counts.ports_per_node);
            println!("transceivers = {}", r.counts.transceivers);
            println!("switches = {}", r.counts.switches);
            println!("couplers = {}", r.counts.couplers);
            println!("transceiver_cost_usd = {}", r.transceiver_cost);
            println!("switch_cost_usd = {:.0}", r.switch_cost);
            println!("trx_cost_share_pct = {}", r.trx_cost_share_pct);
            println!("total_cost_usd = {}", r.total_cost);
            println!("cost_per_gbps_usd = {}", r.cost_per_gbps);
            Ok(ExitCode::SUCCESS)
        }
        Command::Power(args) => {
            let kind = SystemKind::parse(&args.system)
                .ok_or_else(|| anyhow::anyhow!("unknown system `{}`", args.system))?;
            let node_bw = parse_size(&args.node_bw)?;
            let r = power_report(
                kind,
                args.scale,
                node_bw,
                args.oversub,
                None,
                &UnitCosts::default(),
            )?;
            println!("system = {}", r.counts.kind.label());
            println!("components_per_path = {}", r.counts.components_per_path);
            println!("energy_pj_per_bit_path = {}", r.energy_pj_per_bit_path);
            println!("power_mw_per_gbps = {}", r.power_mw_per_gbps);
            println!("total_mw = {}", r.total_mw);
            Ok(ExitCode::SUCCESS)
        }
        Command::Budget(args) => {
            let p = args.params.params()?;
            let mut chain = match &args.chain {
                Some(path) => load_chain(path)?,
                None => ComponentChain::default_for(&p, p.subnet),
            };
            chain.launch_dbm = args.launch;
            let trace = walk_budget(&chain);
            println!("stage,power_dbm");
            for (label, dbm) in &trace.stages {
                println!("{label},{}", fmt_float(*dbm));
            }
            println!("min_dbm,{}", fmt_float(trace.min_dbm));
            println!("receiver_dbm,{}", fmt_float(trace.receiver_dbm));
            println!("feasible,{}", trace.feasible);
            Ok(if trace.feasible { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }
        Command::Workload(args) => {
            let w = load_workload(&args.config)?;
            println!("system,workload,compute_ns,comm_ns,total_ns,comm_fraction,training_time_ns");
            for sys in args.systems.split(',') {
                let model = system_model(sys)?;
                let r = iteration_time(&w, &model)?;
                println!(
                    "{},{},{},{},{},{},{}",
                    r.system,
                    r.workload,
                    fmt_float(r.compute_ns),
                    fmt_float(r.comm_ns),
                    fmt_float(r.total_ns),
                    fmt_float(r.comm_fraction),
                    fmt_float(r.training_time_ns)
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn estimate_one(
    topology: &str,
    strategy: &str,
    op: CollectiveOp,
    workers: u64,
    msg: u64,
    node_rate: u64,
    oversub: u64,
    reconfig_ns: u64,
    spec: &NodeSpec,
) -> anyhow::Result<(String, CompletionBreakdown)> {
    if topology == "ramp" || strategy == "ramp" {
        // Match the requested node rate by scaling the per-transceiver
        // line rate of the maximum-scale configuration.
        let base = RampParams::max_scale();
        let rate = (node_rate / base.x as u64).max(1);
        let phys = RampParams { line_rate_bps: rate, ..base };
        let sub = select_ramp_box(&phys, workers)?;
        let plan = ramp_core::plan_collective(op, msg, &sub, Variant4::DeviceShift)?;
        let cfg = EstimatorConfig { reconfig_ns, ..Default::default() };
        return Ok(("ramp".to_string(), ramp_completion_on(&plan, &phys, spec, &cfg)));
    }
    let kind = TopologyKind::parse(topology)
        .ok_or_else(|| anyhow::anyhow!("unknown topology `{topology}`"))?;
    let skind = StrategyKind::parse(strategy)
        .ok_or_else(|| anyhow::anyhow!("unknown strategy `{strategy}`"))?;
    let mut tspec = TopologySpec::new(workers.max(16), node_rate);
    tspec.oversub = oversub;
    let t = build_topology(kind, &tspec)?;
    let placement = select_nodes(&t, workers)?;
    let radices: Vec<u64> = t.tiers.iter().map(|x| x.down_radix).collect();
    let dims = default_dims(skind, workers, &radices);
    let plan = strategy_plan(skind, op, workers, &dims, msg)?;
    let bt = strategy_completion(&plan, &t, &placement, spec);
    Ok((format!("{}-{}", kind.label(), skind.label()), bt))
}

fn system_model(name: &str) -> anyhow::Result<SystemModel> {
    let spec = scenario_node_spec();
    match name {
        "ramp" => Ok(SystemModel::Ramp {
            params: RampParams::max_scale(),
            spec,
            cfg: EstimatorConfig::default(),
        }),
        _ => {
            let (topo, strat) = name.rsplit_once('-').ok_or_else(|| {
                anyhow::anyhow!("system must be `ramp` or `<topology>-<strategy>`")
            })?;
            let kind = TopologyKind::parse(topo)
                .ok_or_else(|| anyhow::anyhow!("unknown topology `{topo}`"))?;
            let skind = StrategyKind::parse(strat)
                .ok_or_else(|| anyhow::anyhow!("unknown strategy `{strat}`"))?;
            let mut tspec = TopologySpec::new(65_536, 2_400_000_000_000);
            if kind == TopologyKind::FatTree {
                tspec.oversub = 12;
            }
            let t = build_topology(kind, &tspec)?;
            Ok(SystemModel::Baseline { topology: t, strategy: skind, spec })
        }
    }
}

const WORKLOAD_KEYS: [&str; 7] = [
    "workload.name",
    "workload.dp_level",
    "workload.mp_level",
    "workload.compute_per_iter",
    "workload.train_steps",
    "workload.overlap",
    "collective.*",
];

/// Resolves a config path, falling back to RAMP_CONFIG_DIR for relative
/// names that do not exist in the working directory.
fn resolve_config(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("RAMP_CONFIG_DIR") {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

fn load_workload(path: &Path) -> anyhow::Result<WorkloadConfig> {
    let cfg = Config::load(&resolve_config(path))?;
    cfg.check_known(&WORKLOAD_KEYS)?;
    let mut collectives = Vec::new();
    for i in 1.. {
        let prefix = format!("collective.{i}.");
        let Some(op) = cfg.get(&format!("{prefix}op")) else { break };
        let op = parse_op(op)?;
        collectives.push(CollectiveLoad {
            op,
            msg_bytes: ramp_core::config::parse_u64_with_units(
                cfg.require(&format!("{prefix}msg"))?,
            )
            .ok_or_else(|| anyhow::anyhow!("bad collective msg size"))?,
            comm_size: cfg.u64_or(&format!("{prefix}comm"), 2)?,
            count: cfg.u64_or(&format!("{prefix}count"), 1)?,
            stride: cfg.u64_or(&format!("{prefix}stride"), 1)?,
        });
    }
    Ok(WorkloadConfig {
        name: cfg.require("workload.name")?.to_string(),
        dp_level: cfg.u64_or("workload.dp_level", 1)?,
        mp_level: cfg.u64_or("workload.mp_level", 1)?,
        compute_ns_per_iter: cfg
            .get_duration_ns("workload.compute_per_iter")?
            .ok_or_else(|| anyhow::anyhow!("missing workload.compute_per_iter"))?
            as f64,
        train_steps: cfg.u64_or("workload.train_steps", 1)?,
        collectives,
        overlap: cfg.f64_or("workload.overlap", 0.0)?,
    })
}

fn load_chain(path: &Path) -> anyhow::Result<ComponentChain> {
    let cfg = Config::load(&resolve_config(path))?;
    let launch = cfg.f64_or("launch_dbm", 10.0)?;
    let mut elements = Vec::new();
    for i in 1.. {
        let label = cfg.get(&format!("element.{i}.label"));
        let gain = cfg.get(&format!("element.{i}.gain_db"));
        match (label, gain) {
            (Some(l), Some(g)) => elements.push(ramp_core::physmodel::ChainElement::new(
                l.to_string(),
                g.parse::<f64>()?,
            )),
            _ => break,
        }
    }
    Ok(ComponentChain { launch_dbm: launch, elements })
}
