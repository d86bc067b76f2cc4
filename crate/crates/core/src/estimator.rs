//! Analytic completion-time model: per-step critical-path bandwidth and
//! latency, head-to-head / head-to-tail decomposition, and roofline
//! compute time.
//!
//! The model is a lower bound: switching is deterministic at its minimum
//! latency, links run at their ideal share, and no queueing occurs.

use crate::baselines::{CommPattern, StrategyPlan};
use crate::engine::plan::{CollectivePlan, ExchangeKind, LocalOp};
use crate::engine::subgroups::{Step, Variant4};
use crate::error::{Error, Result};
use crate::params::RampParams;
use crate::topo::{Placement, Topology, TopologyKind};
use crate::transcoder::effective_pair_bw_bps;

/// Compute-node characteristics used by the roofline model.
#[derive(Debug, Clone, Copy)]
pub struct NodeSpec {
    /// Memory bandwidth β in bytes/second.
    pub mem_bw_bytes_per_s: f64,
    /// Peak compute throughput π in element operations/second.
    pub peak_ops_per_s: f64,
    /// Clock period in nanoseconds; charged once per local operation.
    pub clk_ns: f64,
    /// Element width in bytes (half precision by default).
    pub elem_bytes: u32,
    /// Per-algorithmic-step software/launch latency.
    pub step_setup_ns: f64,
}

impl Default for NodeSpec {
    fn default() -> Self {
        NodeSpec {
            mem_bw_bytes_per_s: 1.0e12,
            peak_ops_per_s: 1.0e14,
            clk_ns: 1.0,
            elem_bytes: 2,
            step_setup_ns: 0.0,
        }
    }
}

/// Timed components of one algorithmic step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepTime {
    pub h2h_ns: f64,
    pub h2t_ns: f64,
    pub compute_ns: f64,
}

/// Completion-time decomposition of a collective.
#[derive(Debug, Clone, Default)]
pub struct CompletionBreakdown {
    pub steps: Vec<StepTime>,
    pub h2h_ns: f64,
    pub h2t_ns: f64,
    pub compute_ns: f64,
    pub total_ns: f64,
}

impl CompletionBreakdown {
    fn push(&mut self, s: StepTime) {
        self.h2h_ns += s.h2h_ns;
        self.h2t_ns += s.h2t_ns;
        self.compute_ns += s.compute_ns;
        self.total_ns += s.h2h_ns + s.h2t_ns + s.compute_ns;
        self.steps.push(s);
    }

    pub fn total_seconds(&self) -> f64 {
        self.total_ns * 1e-9
    }
}

/// Scenario-level switching parameters.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorConfig {
    pub slot_ns: u64,
    /// Circuit reconfiguration delay for OCS fabrics; overlapped with the
    /// node's in-out latency when it fits.
    pub reconfig_ns: u64,
    /// Minimum node in-out latency.
    pub io_latency_ns: u64,
    /// Node-to-node propagation on the optical fabric.
    pub prop_ns: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { slot_ns: 20, reconfig_ns: 20, io_latency_ns: 100, prop_ns: 1300 }
    }
}

/// Roofline time for a k-to-1 local operation on `seg_bytes` per source:
/// (k+1)·seg bytes moved, (k−1) ops per element.
pub fn roofline_compute(op: LocalOp, sources: u32, seg_bytes: u64, spec: &NodeSpec) -> f64 {
    match op {
        LocalOp::Reduce => {
            let k = sources.max(1) as f64;
            let bytes_moved = (k + 1.0) * seg_bytes as f64;
            let flops = (k - 1.0) * seg_bytes as f64 / spec.elem_bytes as f64;
            let t_s = (bytes_moved / spec.mem_bw_bytes_per_s).max(flops / spec.peak_ops_per_s);
            t_s * 1e9 + spec.clk_ns
        }
        // Copies and flag logic ride along with the I/O path.
        LocalOp::Identity | LocalOp::Reshape | LocalOp::LogicalAnd => 0.0,
    }
}

/// The 2-to-1 chain a single-source algorithm performs: k−1 sequential
/// pairwise reductions.
pub fn sequential_reduce_compute(sources: u32, seg_bytes: u64, spec: &NodeSpec) -> f64 {
    let steps = sources.saturating_sub(1) as f64;
    let per = roofline_compute(LocalOp::Reduce, 2, seg_bytes, spec);
    steps * per
}

/// Reduction-compute speedup of one k-to-1 operation over the sequential
/// 2-to-1 chain at equal data volume.
pub fn reduction_speedup(k: u32, seg_bytes: u64, spec: &NodeSpec) -> f64 {
    sequential_reduce_compute(k, seg_bytes, spec) / roofline_compute(LocalOp::Reduce, k, seg_bytes, spec)
}

/// Effective bandwidth and latency of the worst path of one strategy step
/// on a switched or routed topology.
///
/// Bandwidth: at every hierarchy level the step's exiting flows share the
/// subtree's uplink capacity (size·rate/σ); the flow rate is the minimum
/// share along its path, capped by the transceiver rate. Routed rings and
/// tori divide the per-direction rate by the hop count a rotation spans.
pub fn critical_path(
    pattern: &CommPattern,
    t: &Topology,
    placement: &Placement,
    workers: u64,
) -> (f64, f64) {
    let node_rate = t.io.node_rate_bps() as f64;
    let span = pattern.rank_span().min(workers.saturating_sub(1));
    let distance = pattern.rank_distance().min(workers.saturating_sub(1)).max(1);
    match t.kind {
        TopologyKind::FatTree => {
            let worst_lvl = t.crossing_level(placement.first_node, placement.first_node + span);
            // A crossing flow is first capped by the node's inter-system
            // share (the oversubscription, applied once), then by its share
            // of each exited subtree's uplink capacity.
            let mut bw: f64 = node_rate / t.binding_oversub(worst_lvl) as f64;
            for lvl in 1..worst_lvl {
                let s = t.subtree_size(lvl);
                let uplink = s as f64 * node_rate / t.binding_oversub(worst_lvl) as f64;
                let exiting = distance.min(s) as f64;
                bw = bw.min(uplink / exiting);
            }
            let lat = t.pair_latency_ns(placement.first_node, placement.first_node + span);
            (bw, lat as f64)
        }
        TopologyKind::Ring | TopologyKind::DegreeLimitedOcs => {
            // One logical direction; a distance-d flow holds d consecutive
            // links, so each link carries d concurrent flows.
            let per_dir = t.io.trx_rate_bps as f64;
            let bw = per_dir / distance as f64;
            let lat = t.io.io_latency_ns as f64
                + t.io.mem_to_trx_ns as f64
                + t.prop_ns as f64 * distance as f64;
            (bw, lat)
        }
        TopologyKind::Torus2D => {
            let (r, c) = t.torus_dims.unwrap_or((1, t.nodes));
            // Dimension-ordered route: hops split across the two dims.
            let dr = (distance / c).min(r / 2).max(if distance >= c { 1 } else { 0 });
            let dc = (distance % c).min(c / 2);
            let hops = (dr + dc).max(1);
            let per_dir = t.io.trx_rate_bps as f64;
            let bw = per_dir / hops as f64;
            let lat = t.io.io_latency_ns as f64
                + t.io.mem_to_trx_ns as f64
                + t.prop_ns as f64 * hops as f64;
            (bw, lat)
        }
        TopologyKind::Ramp => {
            let p = placement.ramp_box.or(t.ramp).expect("ramp params");
            let bw = effective_pair_bw_bps(&p, 2) as f64;
            (bw, t.prop_ns as f64 + t.io.io_latency_ns as f64 + t.io.mem_to_trx_ns as f64)
        }
    }
}

fn slot_round(h2t_ns: f64, slot_ns: u64) -> f64 {
    let slots = (h2t_ns / slot_ns as f64).ceil().max(1.0);
    slots * slot_ns as f64
}

/// Completion time of a RAMP collective plan.
pub fn ramp_completion(
    plan: &CollectivePlan,
    spec: &NodeSpec,
    cfg: &EstimatorConfig,
) -> CompletionBreakdown {
    ramp_completion_on(plan, &plan.params, spec, cfg)
}

/// Completion time of a RAMP plan executed on physical hardware `phys`.
/// A job placed in a sub-box keeps the full machine's transceiver groups,
/// so bandwidth derives from the physical parameter set while the plan's
/// own parameters shape the steps.
pub fn ramp_completion_on(
    plan: &CollectivePlan,
    phys: &RampParams,
    spec: &NodeSpec,
    cfg: &EstimatorConfig,
) -> CompletionBreakdown {
    let p = phys;
    let mut out = CompletionBreakdown::default();
    let prop_ns = cfg.prop_ns as f64;
    for step in &plan.steps {
        let pair_bw = if step.exchange == ExchangeKind::BroadcastStage {
            p.node_capacity_bps() as f64
        } else if plan.variant == Variant4::Pairwise
            && step.family == Step::S4
            && step.round.is_some()
        {
            // Formula-1 last step drives every transceiver group per pair.
            (p.x as u64 * p.b as u64 * p.line_rate_bps) as f64
        } else {
            effective_pair_bw_bps(p, step.d.max(2)) as f64
        };
        // Circuits hold across consecutive slots, so the per-slot guard
        // time amortizes away for multi-slot transfers; only the epoch
        // quantization remains.
        let raw_h2t = step.bytes_per_pair as f64 * 8.0 / pair_bw * 1e9;
        let h2t = slot_round(raw_h2t, cfg.slot_ns);
        // Reconfiguration overlaps the node's in-out processing; only the
        // excess beyond the I/O latency is exposed.
        let io = (cfg.io_latency_ns as f64).max(cfg.reconfig_ns as f64);
        let h2h = prop_ns + spec.step_setup_ns + io;
        let compute = match step.local_op {
            LocalOp::Reduce => {
                let sources = if step.round.is_some() { 2 } else { step.d };
                roofline_compute(LocalOp::Reduce, sources, step.msg_bytes, spec)
            }
            other => roofline_compute(other, step.d, step.msg_bytes, spec),
        };
        out.push(StepTime { h2h_ns: h2h, h2t_ns: h2t, compute_ns: compute });
    }
    out
}

/// Completion time of a baseline strategy plan on a topology.
pub fn strategy_completion(
    plan: &StrategyPlan,
    t: &Topology,
    placement: &Placement,
    spec: &NodeSpec,
) -> CompletionBreakdown {
    let mut out = CompletionBreakdown::default();
    for step in &plan.steps {
        let (bw, lat) = critical_path(&step.comm, t, placement, plan.workers);
        let h2t = step.bytes_per_pair as f64 * 8.0 / bw * 1e9;
        let h2h = lat + spec.step_setup_ns;
        let compute = match step.local_op {
            LocalOp::Reduce => roofline_compute(LocalOp::Reduce, 2, step.bytes_per_pair, spec),
            other => roofline_compute(other, 2, step.bytes_per_pair, spec),
        };
        out.push(StepTime { h2h_ns: h2h, h2t_ns: h2t, compute_ns: compute });
    }
    out
}

/// Completion time for any plan on its topology.
pub fn completion_time(
    plan: PlanRef<'_>,
    t: &Topology,
    placement: &Placement,
    spec: &NodeSpec,
    cfg: &EstimatorConfig,
) -> Result<CompletionBreakdown> {
    match plan {
        PlanRef::Ramp(p) => {
            if t.kind != TopologyKind::Ramp {
                return Err(Error::Unsupported(
                    "collective plans of this kind run on the optical fabric".to_string(),
                ));
            }
            Ok(ramp_completion(p, spec, cfg))
        }
        PlanRef::Strategy(s) => Ok(strategy_completion(s, t, placement, spec)),
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PlanRef<'a> {
    Ramp(&'a CollectivePlan),
    Strategy(&'a StrategyPlan),
}
