//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line with the measured values.
//!
//! Tolerances are pinned here, in code. Band criteria assert membership;
//! exact criteria assert equality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ramp_core::baselines::{default_dims, strategy_plan, StrategyKind};
use ramp_core::engine::{
    broadcast_completion_ns, broadcast_plan, plan_collective, plan_collective_rooted,
    step_count, CollectiveOp, Variant4,
};
use ramp_core::estimator::{
    ramp_completion, reduction_speedup, strategy_completion, EstimatorConfig, NodeSpec,
};
use ramp_core::funcsim::verify_ramp_collective;
use ramp_core::params::{derived_quantities, min_message_per_slot, RampParams};
use ramp_core::physmodel::{
    cost_report, power_report, walk_budget, ComponentChain, SystemKind, UnitCosts,
};
use ramp_core::topo::{build_topology, select_nodes, TopologyKind, TopologySpec};
use ramp_core::workloads::{iteration_time, CollectiveLoad, SystemModel, WorkloadConfig};
use ramp_core::SubnetKind;

fn pass(criterion: &str, detail: &str) {
    println!("PASS {criterion}: {detail}");
}

/// Scenario node profile shared by the estimator criteria: HBM-class
/// memory bandwidth, half-precision elements.
fn accel_spec() -> NodeSpec {
    NodeSpec {
        mem_bw_bytes_per_s: 1.3e12,
        peak_ops_per_s: 3.12e14,
        clk_ns: 0.7,
        elem_bytes: 2,
        step_setup_ns: 0.0,
    }
}

/// Criterion 1: schedule-level functional equivalence with the brute-force
/// oracle and an empty contention report, for every collective operation,
/// every shape with x, J in {2,3,4} (J <= x), Λ in {x, 2x, 4x}, and both
/// last-step variants.
#[test]
fn criterion_1_oracle_equivalence_and_contention_free() {
    let start = std::time::Instant::now();
    let mut cases = Vec::new();
    for x in [2u32, 3, 4] {
        for j in 1..=x {
            for mult in [1u32, 2, 4] {
                for variant in [Variant4::DeviceShift, Variant4::Pairwise] {
                    for op in CollectiveOp::ALL {
                        cases.push((x, j, x * mult, variant, op));
                    }
                }
            }
        }
    }
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|(x, j, lam, variant, op)| {
            let p = RampParams::new(*x, *j, *lam, 1, 400_000_000_000).unwrap();
            verify_ramp_collective(*op, &p, *variant).err().map(|e| {
                format!("x={x} J={j} L={lam} v{} {}: {e}", variant.label(), op.label())
            })
        })
        .collect();
    assert!(failures.is_empty(), "{} failures:\n{}", failures.len(), failures.join("\n"));
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 300, "sweep took {elapsed:?}, budget is 5 minutes");
    pass(
        "criterion 1 (oracle equivalence)",
        &format!("{} cases oracle-equal and contention-free in {elapsed:?}", cases.len()),
    );
}

/// Criterion 2: the 54-node worked example. Reduce-scatter on
/// (x = J = 3, Λ = 6) runs in exactly 4 steps with per-step message
/// fractions 1/3, 1/9, 1/27 and a final pairwise exchange.
#[test]
fn criterion_2_fifty_four_node_worked_example() {
    let p = RampParams::new(3, 3, 6, 1, 400_000_000_000).unwrap();
    let m = 54 * 27u64; // divisible unit so the fractions are exact
    let plan =
        plan_collective_rooted(CollectiveOp::ReduceScatter, m, &p, Variant4::DeviceShift, 0, 1)
            .unwrap();
    assert_eq!(plan.algorithmic_steps(), 4);
    let sizes: Vec<u64> = plan.steps.iter().map(|s| s.msg_bytes).collect();
    assert_eq!(sizes, vec![m / 3, m / 9, m / 27, m / 54]);
    assert_eq!(plan.steps[3].d, 2, "last step exchanges between pairs");
    pass(
        "criterion 2 (54-node example)",
        "4 steps with fractions 1/3, 1/9, 1/27, then pairwise 1/54",
    );
}

/// Criterion 3: step-count laws. RAMP needs ceil(log_x N) steps (4 at the
/// maximum scale), rings need N−1, hierarchies sum their per-dim steps;
/// the strategy ordering matches.
#[test]
fn criterion_3_step_count_law() {
    // ceil(log_x N) for balanced boxes.
    for (x, j, lam) in [(32u32, 32u32, 64u32), (3, 3, 6), (2, 2, 4), (4, 4, 16)] {
        let p = RampParams::new(x, j, lam, 1, 1).unwrap();
        let n = p.nodes() as f64;
        let expect = (n.ln() / (x as f64).ln()).ceil() as usize;
        assert_eq!(
            step_count(CollectiveOp::ReduceScatter, &p),
            expect,
            "x={x} J={j} L={lam}"
        );
    }
    let p = RampParams::max_scale();
    assert_eq!(step_count(CollectiveOp::ReduceScatter, &p), 4);
    assert_eq!(step_count(CollectiveOp::AllReduce, &p), 8);

    // Baseline step counts and the published ordering.
    for n in [64u64, 1024, 65_536] {
        let ring =
            strategy_plan(StrategyKind::Ring, CollectiveOp::ReduceScatter, n, &[n], n * 64)
                .unwrap();
        assert_eq!(ring.step_count() as u64, n - 1);
        let dims = default_dims(StrategyKind::Hierarchical, n, &[8, 8, 8, 8, 16]);
        let hier =
            strategy_plan(StrategyKind::Hierarchical, CollectiveOp::ReduceScatter, n, &dims, n * 64)
                .unwrap();
        let expect: u64 = dims.iter().map(|d| d - 1).sum();
        assert_eq!(hier.step_count() as u64, expect);
        let tdims = default_dims(StrategyKind::Torus2D, n, &[]);
        let torus =
            strategy_plan(StrategyKind::Torus2D, CollectiveOp::ReduceScatter, n, &tdims, n * 64)
                .unwrap();
        let ramp_steps = step_count(
            CollectiveOp::ReduceScatter,
            &RampParams::new(32, 32.min(n as u32 / 64).max(1), 64, 1, 1).unwrap_or(p),
        );
        assert!(ramp_steps <= 4);
        assert!(hier.step_count() <= torus.step_count());
        assert!(torus.step_count() < ring.step_count());
        assert!((ramp_steps as u64) < expect.min(n - 1));
    }
    pass(
        "criterion 3 (step counts)",
        "ramp=ceil(log_x N) (4 at max scale), ring=N-1, hierarchical/torus per dimension sums",
    );
}

/// Criterion 4: scalability formulas at maximum scale, exact.
#[test]
fn criterion_4_scalability_formulas() {
    let p = RampParams::max_scale();
    let r = derived_quantities(&p).unwrap();
    assert_eq!(r.nodes, 65_536);
    assert_eq!(r.node_capacity_bps, 12_800_000_000_000);
    assert_eq!(r.total_capacity_bps, 838_860_800_000_000_000); // 0.84 Eb/s
    assert_eq!(min_message_per_slot(p.line_rate_bps, 20, 0.05), 950);
    pass(
        "criterion 4 (scalability)",
        "65,536 nodes, 12.8 Tb/s per node, 0.84 Eb/s total, 950 B slot minimum",
    );
}

/// Criterion 5: reconfiguration-delay sensitivity of a scatter at maximum
/// scale. With a 200 ns in-out latency, every delay up to 200 ns leaves
/// completion exactly at 1.000; a 10 ms delay lands in the published
/// [7.2, 6412]x band across the message sweep.
///
/// Note: the band and a decade-wide message sweep pin each other. With
/// four overlapped reconfigurations per scatter the published endpoints
/// are reproduced by the 10 MB - 10 GB sweep (10 GB -> 7.2x, 10 MB ->
/// ~6.4e3x); a sweep shifted a decade higher would leave the band at its
/// large end for any linear-time model, since the band spans 890x while
/// three decades of message size span 1000x.
#[test]
fn criterion_5_reconfiguration_table() {
    let p = RampParams::max_scale();
    let spec = accel_spec();
    let cfg0 = EstimatorConfig { reconfig_ns: 0, io_latency_ns: 200, ..Default::default() };
    let sizes: [u64; 4] = [10_000_000, 100_000_000, 1_000_000_000, 10_000_000_000];
    let mut ratios = Vec::new();
    for &m in &sizes {
        let plan = plan_collective(CollectiveOp::Scatter, m, &p, Variant4::DeviceShift).unwrap();
        let base = ramp_completion(&plan, &spec, &cfg0).total_ns;
        // Exact constancy while reconfiguration hides under the I/O latency.
        for rec in [10u64, 50, 100, 200] {
            let cfg = EstimatorConfig { reconfig_ns: rec, io_latency_ns: 200, ..cfg0 };
            let t = ramp_completion(&plan, &spec, &cfg).total_ns;
            assert_eq!(t, base, "normalized completion must be exactly 1.000 at {rec} ns");
        }
        let slow = EstimatorConfig { reconfig_ns: 10_000_000, io_latency_ns: 200, ..cfg0 };
        let t = ramp_completion(&plan, &spec, &slow).total_ns;
        let ratio = t / base;
        // Band endpoints carry the published rounding: 7.2 is quoted to one
        // decimal, 6412 to unit precision.
        assert!(
            (7.15..=6412.5).contains(&ratio),
            "10 ms ratio {ratio:.2} at {m} B outside [7.2, 6412]"
        );
        ratios.push(format!("{m}B:{ratio:.1}x"));
    }
    pass(
        "criterion 5 (reconfiguration)",
        &format!("constant at 1.000 up to 200 ns; 10 ms gives {}", ratios.join(" ")),
    );
}

/// Criterion 6: roofline reduction speedup. A 32-to-1 half-precision
/// reduce of a 1 GB vector beats the 2-to-1 chain by 2.8x (within 15%),
/// monotonically in the source count.
#[test]
fn criterion_6_reduction_compute_speedup() {
    let spec = accel_spec();
    let s = reduction_speedup(32, 1 << 30, &spec);
    assert!((s - 2.8).abs() / 2.8 <= 0.15, "speedup {s:.3} outside 2.8 +/- 15%");
    let mut prev = 0.0;
    for k in 2..=64 {
        let v = reduction_speedup(k, 1 << 30, &spec);
        assert!(v + 1e-12 >= prev, "not monotone at k={k}");
        prev = v;
    }
    pass("criterion 6 (reduction speedup)", &format!("32-to-1 speedup {s:.2}x, monotone in k"));
}

fn matched_bw_baseline(
    strategy: StrategyKind,
    op: CollectiveOp,
    n: u64,
    msg: u64,
    node_rate: u64,
    oversub: u64,
) -> f64 {
    let mut tspec = TopologySpec::new(n, node_rate);
    tspec.oversub = oversub;
    let t = build_topology(TopologyKind::FatTree, &tspec).unwrap();
    let placement = select_nodes(&t, n).unwrap();
    let radices: Vec<u64> = t.tiers.iter().map(|x| x.down_radix).collect();
    let dims = default_dims(strategy, n, &radices);
    let plan = strategy_plan(strategy, op, n, &dims, msg).unwrap();
    strategy_completion(&plan, &t, &placement, &accel_spec()).total_ns
}

fn ramp_time(op: CollectiveOp, msg: u64, line_rate: u64) -> f64 {
    let p = RampParams { line_rate_bps: line_rate, ..RampParams::max_scale() };
    let plan = plan_collective(op, msg, &p, Variant4::DeviceShift).unwrap();
    ramp_completion(&plan, &accel_spec(), &EstimatorConfig::default()).total_ns
}

/// Criterion 7: matched-bandwidth algorithmic comparison at N = 65,536 and
/// 2.4 Tb/s per node on a 1:1 fat-tree: all-reduce speedup over the ring
/// strategy within [9, 10000] and over the hierarchical strategy within
/// [1.16, 10], across 100 MB - 10 GB.
#[test]
fn criterion_7_matched_bandwidth_comparison() {
    let start = std::time::Instant::now();
    let n = 65_536u64;
    let rate = 2_400_000_000_000u64;
    let per_trx = rate / 32;
    let mut lines = Vec::new();
    for m in [100_000_000u64, 1_000_000_000, 10_000_000_000] {
        let ramp = ramp_time(CollectiveOp::AllReduce, m, per_trx);
        let ring = matched_bw_baseline(StrategyKind::Ring, CollectiveOp::AllReduce, n, m, rate, 1);
        let hier =
            matched_bw_baseline(StrategyKind::Hierarchical, CollectiveOp::AllReduce, n, m, rate, 1);
        let ring_speedup = ring / ramp;
        let hier_speedup = hier / ramp;
        assert!(
            (9.0..=10_000.0).contains(&ring_speedup),
            "ring speedup {ring_speedup:.2} at {m} B outside [9, 10000]"
        );
        assert!(
            (1.16..=10.0).contains(&hier_speedup),
            "hierarchical speedup {hier_speedup:.3} at {m} B outside [1.16, 10]"
        );
        lines.push(format!("{m}B ring {ring_speedup:.1}x hier {hier_speedup:.2}x"));
    }
    assert!(start.elapsed().as_secs() < 60, "full-scale estimate exceeded a minute");
    pass("criterion 7 (matched bandwidth)", &lines.join("; "));
}

/// Criterion 8: full-system comparison at maximum scale with a 1 GB
/// message: the best realistic baseline loses by at least 7.6x (within
/// 50%) on reduce-scatter and 171x (within 50%) on all-to-all, and the
/// all-to-all speedup strictly exceeds the reduce-scatter speedup.
#[test]
fn criterion_8_full_system_comparison() {
    let n = 65_536u64;
    let m = 1_000_000_000u64;
    let spec = accel_spec();
    let best_baseline = |op: CollectiveOp| -> f64 {
        let mut best = f64::MAX;
        // Oversubscribed fat-tree with each ring-family strategy.
        for strat in [StrategyKind::Ring, StrategyKind::Hierarchical, StrategyKind::Torus2D] {
            best = best.min(matched_bw_baseline(strat, op, n, m, 2_400_000_000_000, 12));
        }
        // 2D torus fabric.
        let t = build_topology(TopologyKind::Torus2D, &TopologySpec::new(n, 2_400_000_000_000))
            .unwrap();
        let placement = select_nodes(&t, n).unwrap();
        let dims = default_dims(StrategyKind::Torus2D, n, &[]);
        let plan = strategy_plan(StrategyKind::Torus2D, op, n, &dims, m).unwrap();
        best = best.min(strategy_completion(&plan, &t, &placement, &spec).total_ns);
        // Fixed-circuit OCS ring.
        let t = build_topology(
            TopologyKind::DegreeLimitedOcs,
            &TopologySpec::new(n, 1_600_000_000_000),
        )
        .unwrap();
        let placement = select_nodes(&t, n).unwrap();
        let plan = strategy_plan(StrategyKind::Ring, op, n, &[n], m).unwrap();
        best = best.min(strategy_completion(&plan, &t, &placement, &spec).total_ns);
        best
    };
    let rs_speedup =
        best_baseline(CollectiveOp::ReduceScatter) / ramp_time(CollectiveOp::ReduceScatter, m, 400_000_000_000);
    let a2a_speedup =
        best_baseline(CollectiveOp::AllToAll) / ramp_time(CollectiveOp::AllToAll, m, 400_000_000_000);
    assert!(rs_speedup >= 7.6 * 0.5, "reduce-scatter speedup {rs_speedup:.2} below 3.8");
    assert!(a2a_speedup >= 171.0 * 0.5, "all-to-all speedup {a2a_speedup:.1} below 85.5");
    assert!(
        a2a_speedup > rs_speedup,
        "ordering violated: all-to-all {a2a_speedup:.1} vs reduce-scatter {rs_speedup:.1}"
    );
    pass(
        "criterion 8 (full system)",
        &format!("reduce-scatter {rs_speedup:.1}x, all-to-all {a2a_speedup:.0}x, ordering holds"),
    );
}

/// Criterion 9: cost and power tables under the published unit
/// assumptions.
#[test]
fn criterion_9_cost_and_power_tables() {
    let units = UnitCosts::default();
    let bw = 12_800_000_000_000u64;
    let ramp_cost = cost_report(SystemKind::Ramp, 65_536, bw, 1, None, &units).unwrap();
    assert!((ramp_cost.cost_per_gbps.lo - 1.62).abs() < 0.05);
    assert!((ramp_cost.cost_per_gbps.hi - 3.12).abs() < 0.05);
    let hpc_cost = cost_report(SystemKind::HpcFatTree, 65_536, bw, 1, None, &units).unwrap();
    assert!(
        (hpc_cost.cost_per_gbps.lo - 20.02).abs() / 20.02 <= 0.10,
        "HPC {} $/Gb/s",
        hpc_cost.cost_per_gbps
    );
    let ramp_power = power_report(SystemKind::Ramp, 65_536, bw, 1, None, &units).unwrap();
    assert!((ramp_power.energy_pj_per_bit_path.lo - 8.5).abs() < 0.05);
    assert!((ramp_power.energy_pj_per_bit_path.hi - 9.5).abs() < 0.05);
    assert!(ramp_power.total_mw.lo >= 7.0 && ramp_power.total_mw.hi <= 8.05);
    let hpc_power = power_report(SystemKind::HpcFatTree, 65_536, bw, 1, None, &units).unwrap();
    assert!((hpc_power.energy_pj_per_bit_path.lo - 383.0).abs() / 383.0 <= 0.10);
    assert!((hpc_power.total_mw.lo - 306.0).abs() / 306.0 <= 0.10);
    pass(
        "criterion 9 (cost/power)",
        &format!(
            "ramp {} $/Gb/s, {} pJ/bit, {} MW; hpc {:.2} $/Gb/s, {:.0} pJ/bit, {:.0} MW",
            ramp_cost.cost_per_gbps,
            ramp_power.energy_pj_per_bit_path,
            ramp_power.total_mw,
            hpc_cost.cost_per_gbps.lo,
            hpc_power.energy_pj_per_bit_path.lo,
            hpc_power.total_mw.lo
        ),
    );
}

/// Criterion 10: the analytic broadcast pipeline depth sits within one
/// stage of the brute-force optimum for 100 randomized (m, alpha, beta)
/// triples.
#[test]
fn criterion_10_broadcast_pipeline_depth() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x52414d50);
    for trial in 0..100 {
        let m = rng.random_range(1_000u64..100_000_000_000);
        let alpha = rng.random_range(100.0..100_000.0); // ns
        let beta = 10f64.powf(rng.random_range(-4.0..-1.0)); // ns per byte
        let s = rng.random_range(3u32..6);
        let bp = broadcast_plan(m, s, alpha, beta).unwrap();
        // Brute force over k in [1, 4k*].
        let hi = (bp.k * 4).max(8);
        let best_k = (1..=hi)
            .min_by(|a, b| {
                broadcast_completion_ns(m, s, alpha, beta, *a)
                    .total_cmp(&broadcast_completion_ns(m, s, alpha, beta, *b))
            })
            .unwrap();
        assert!(
            bp.k.abs_diff(best_k) <= 1,
            "trial {trial}: analytic k={} vs brute-force {best_k} (m={m}, a={alpha}, b={beta})",
            bp.k
        );
    }
    pass("criterion 10 (broadcast pipeline)", "analytic k within +/-1 of optimum on 100 trials");
}

/// Criterion 11: power-budget walker. The worst-case fabric at maximum
/// scale is feasible with the default chain, every passive stage strictly
/// attenuates, and dropping one amplifier flips feasibility.
#[test]
fn criterion_11_power_budget_walker() {
    let p = RampParams::max_scale();
    let chain = ComponentChain::default_for(&p, SubnetKind::BroadcastSelect);
    let trace = walk_budget(&chain);
    assert!(trace.feasible, "default broadcast-select chain infeasible: {:?}", trace.stages);
    for (i, el) in chain.elements.iter().enumerate() {
        let before = trace.stages[i].1;
        let after = trace.stages[i + 1].1;
        if el.is_amplifier() {
            assert!(after > before, "{} should amplify", el.label);
        } else {
            assert!(after < before, "{} should attenuate", el.label);
        }
    }
    let mut cut = chain.clone();
    let pos = cut.elements.iter().position(|e| e.is_amplifier()).unwrap();
    cut.elements.remove(pos);
    assert!(!walk_budget(&cut).feasible, "removing an amplifier must break the budget");
    pass(
        "criterion 11 (power budget)",
        &format!(
            "feasible at min {:.2} dBm / receiver {:.2} dBm; monotone; amplifier removal flips",
            trace.min_dbm, trace.receiver_dbm
        ),
    );
}

fn load_workload_config(text: &str) -> WorkloadConfig {
    let cfg = ramp_core::config::Config::parse(text).unwrap();
    let mut collectives = Vec::new();
    for i in 1.. {
        let prefix = format!("collective.{i}.");
        let Some(op) = cfg.get(&format!("{prefix}op")) else { break };
        collectives.push(CollectiveLoad {
            op: CollectiveOp::parse(op).unwrap(),
            msg_bytes: ramp_core::config::parse_u64_with_units(
                cfg.require(&format!("{prefix}msg")).unwrap(),
            )
            .unwrap(),
            comm_size: cfg.u64_or(&format!("{prefix}comm"), 2).unwrap(),
            count: cfg.u64_or(&format!("{prefix}count"), 1).unwrap(),
            stride: cfg.u64_or(&format!("{prefix}stride"), 1).unwrap(),
        });
    }
    WorkloadConfig {
        name: cfg.require("workload.name").unwrap().to_string(),
        dp_level: cfg.u64_or("workload.dp_level", 1).unwrap(),
        mp_level: cfg.u64_or("workload.mp_level", 1).unwrap(),
        compute_ns_per_iter: cfg.get_duration_ns("workload.compute_per_iter").unwrap().unwrap()
            as f64,
        train_steps: cfg.u64_or("workload.train_steps", 1).unwrap(),
        collectives,
        overlap: cfg.f64_or("workload.overlap", 0.0).unwrap(),
    }
}

/// Criterion 12: the shipped transformer-training configs put the optical
/// system's communication share in [0.6%, 11%] and the baselines in
/// [23.8%, 94.6%].
#[test]
fn criterion_12_workload_communication_fractions() {
    let spec = accel_spec();
    let ramp = SystemModel::Ramp {
        params: RampParams::max_scale(),
        spec,
        cfg: EstimatorConfig::default(),
    };
    let mut ft_spec = TopologySpec::new(65_536, 2_400_000_000_000);
    ft_spec.oversub = 12;
    let fat_tree = SystemModel::Baseline {
        topology: build_topology(TopologyKind::FatTree, &ft_spec).unwrap(),
        strategy: StrategyKind::Ring,
        spec,
    };
    let topoopt = SystemModel::Baseline {
        topology: build_topology(
            TopologyKind::DegreeLimitedOcs,
            &TopologySpec::new(65_536, 1_600_000_000_000),
        )
        .unwrap(),
        strategy: StrategyKind::Ring,
        spec,
    };
    let mut lines = Vec::new();
    for name in ["megatron_8k", "megatron_32k"] {
        let text = std::fs::read_to_string(format!(
            "{}/../../configs/{name}.cfg",
            env!("CARGO_MANIFEST_DIR")
        ))
        .unwrap();
        let w = load_workload_config(&text);
        let r = iteration_time(&w, &ramp).unwrap();
        assert!(
            (0.006..=0.11).contains(&r.comm_fraction),
            "{name}: optical comm fraction {:.4} outside [0.6%, 11%]",
            r.comm_fraction
        );
        for base in [&fat_tree, &topoopt] {
            let b = iteration_time(&w, base).unwrap();
            assert!(
                (0.238..=0.946).contains(&b.comm_fraction),
                "{name} on {}: comm fraction {:.4} outside [23.8%, 94.6%]",
                b.comm_fraction,
                b.system
            );
        }
        lines.push(format!("{name}: ramp {:.1}%", r.comm_fraction * 100.0));
    }
    pass("criterion 12 (workloads)", &lines.join("; "));
}
