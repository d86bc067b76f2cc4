//! Collective plans: ordered algorithmic steps with per-step message sizes,
//! buffer/local operations and exchange semantics.

use crate::error::{Error, Result};
use crate::params::RampParams;

use super::subgroups::{nodes_per_subgroup, step_active, Step, Variant4, ALL_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollectiveOp {
    ReduceScatter,
    AllGather,
    AllReduce,
    Reduce,
    Barrier,
    AllToAll,
    Scatter,
    Gather,
    Broadcast,
}

impl CollectiveOp {
    pub const ALL: [CollectiveOp; 9] = [
        CollectiveOp::ReduceScatter,
        CollectiveOp::AllGather,
        CollectiveOp::AllReduce,
        CollectiveOp::Reduce,
        CollectiveOp::Barrier,
        CollectiveOp::AllToAll,
        CollectiveOp::Scatter,
        CollectiveOp::Gather,
        CollectiveOp::Broadcast,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            CollectiveOp::ReduceScatter => "reduce-scatter",
            CollectiveOp::AllGather => "all-gather",
            CollectiveOp::AllReduce => "all-reduce",
            CollectiveOp::Reduce => "reduce",
            CollectiveOp::Barrier => "barrier",
            CollectiveOp::AllToAll => "all-to-all",
            CollectiveOp::Scatter => "scatter",
            CollectiveOp::Gather => "gather",
            CollectiveOp::Broadcast => "broadcast",
        }
    }

    pub fn parse(s: &str) -> Option<CollectiveOp> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL.into_iter().find(|op| op.label() == norm)
    }

    pub fn has_root(&self) -> bool {
        matches!(
            self,
            CollectiveOp::Reduce
                | CollectiveOp::Scatter
                | CollectiveOp::Gather
                | CollectiveOp::Broadcast
        )
    }
}

impl std::fmt::Display for CollectiveOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Transformation applied to the buffer before transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferOp {
    /// Divide the buffer into `d` addressable contiguous segments.
    Reshape,
    /// Grow the buffer by a factor `d`, placing the original at the local
    /// digit slot.
    Copy,
    Identity,
}

/// Transformation applied to received data after a communication step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalOp {
    /// Element-wise associative merge of the received vectors.
    Reduce,
    /// All-to-all transpose over (source, rank), flattened.
    Reshape,
    /// Barrier liveness flag conjunction.
    LogicalAnd,
    Identity,
}

impl LocalOp {
    pub fn label(&self) -> &'static str {
        match self {
            LocalOp::Reduce => "reduce",
            LocalOp::Reshape => "reshape",
            LocalOp::LogicalAnd => "and",
            LocalOp::Identity => "identity",
        }
    }
}

impl BufferOp {
    pub fn label(&self) -> &'static str {
        match self {
            BufferOp::Reshape => "reshape",
            BufferOp::Copy => "copy",
            BufferOp::Identity => "identity",
        }
    }
}

/// Communication pattern of one plan step within each subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeKind {
    /// Split the working buffer into `d` digit-indexed segments and send
    /// segment digit(w) to member w. Receivers merge with their own kept
    /// segment (reduce-scatter / scatter direction).
    SegmentScatter,
    /// Send the whole working buffer to the other members; receivers
    /// concatenate blocks ordered by sender digit (all-gather direction).
    BlockGather,
    /// Send the destination block indexed by the receiver's digit; the
    /// buffer length is conserved (all-to-all).
    BlockExchange,
    /// Zero-byte liveness token.
    Signal,
    /// Pipelined tree broadcast stage.
    BroadcastStage,
}

/// One executed step of a collective plan.
#[derive(Debug, Clone)]
pub struct PlanStep {
    /// Subgroup family the step runs on. Broadcast stages use S1 as a
    /// placeholder and are identified by `exchange`.
    pub family: Step,
    /// Pairwise-variant sub-step: (round, total rounds). Communication is
    /// restricted to digit pairs (q, q + round).
    pub round: Option<(u32, u32)>,
    /// Nodes per subgroup at this step.
    pub d: u32,
    /// Working-buffer size per holder before the step, in bytes.
    pub input_bytes: u64,
    /// The step's tabulated message size (working-buffer size after the
    /// step for data-sizing collectives; per-pair size for all-to-all).
    pub msg_bytes: u64,
    /// Bytes sent over each (src, dst) pair of the step.
    pub bytes_per_pair: u64,
    pub buffer_op: BufferOp,
    pub local_op: LocalOp,
    pub exchange: ExchangeKind,
    /// Restrict transfers to the root flow (scatter/gather phases).
    pub rooted: bool,
}

/// Pipelined-tree broadcast sizing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadcastPlan {
    /// Pipeline stage count.
    pub k: u64,
    /// Tree diameter (levels).
    pub s: u32,
    /// Total sequential stages k + s − 2.
    pub steps: u64,
    /// Bytes per stage, m/k (last stage may be short).
    pub per_stage_bytes: u64,
}

/// Stage count for a pipelined tree broadcast: k = √(m·(s−2)·β / α),
/// rounded to the nearest positive integer.
///
/// `beta_ns_per_byte` is the inverse of the total node capacity.
pub fn broadcast_plan(
    msg_bytes: u64,
    s: u32,
    alpha_ns: f64,
    beta_ns_per_byte: f64,
) -> Result<BroadcastPlan> {
    if s < 3 {
        return Err(Error::Unsupported(format!("broadcast tree diameter must be >= 3, got {s}")));
    }
    if !(alpha_ns > 0.0) || !(beta_ns_per_byte > 0.0) {
        return Err(Error::InvalidParameter("alpha and beta must be positive".to_string()));
    }
    let k_star =
        ((msg_bytes as f64 * (s as f64 - 2.0) * beta_ns_per_byte) / alpha_ns).sqrt();
    let k = (k_star.round() as u64).max(1);
    Ok(BroadcastPlan {
        k,
        s,
        steps: k + s as u64 - 2,
        per_stage_bytes: msg_bytes.div_ceil(k),
    })
}

/// Pipelined broadcast completion time for a given stage count; the
/// brute-force counterpart of [`broadcast_plan`].
pub fn broadcast_completion_ns(
    msg_bytes: u64,
    s: u32,
    alpha_ns: f64,
    beta_ns_per_byte: f64,
    k: u64,
) -> f64 {
    let stages = (k + s as u64 - 2) as f64;
    stages * (alpha_ns + msg_bytes as f64 / k as f64 * beta_ns_per_byte)
}

/// A fully resolved collective plan for one RAMP parameter set.
#[derive(Debug, Clone)]
pub struct CollectivePlan {
    pub op: CollectiveOp,
    pub params: RampParams,
    pub variant: Variant4,
    /// Original message size before padding.
    pub requested_bytes: u64,
    /// Working message size after padding to a multiple of N elements.
    pub msg_bytes: u64,
    pub elem_bytes: u32,
    /// Collective rank of the root for rooted operations.
    pub root: u64,
    pub steps: Vec<PlanStep>,
    pub broadcast: Option<BroadcastPlan>,
}

impl CollectivePlan {
    /// Number of algorithmic steps (pairwise rounds of one family count
    /// once).
    pub fn algorithmic_steps(&self) -> usize {
        let mut count = 0usize;
        let mut last: Option<(Step, bool)> = None;
        for s in &self.steps {
            let key = (s.family, s.exchange == ExchangeKind::BlockGather);
            if s.round.is_none() || last != Some(key) {
                count += 1;
            }
            last = Some(key);
        }
        count
    }

    pub fn active_families(&self) -> Vec<Step> {
        ALL_STEPS
            .into_iter()
            .filter(|s| step_active(*s, &self.params))
            .collect()
    }
}

/// Default setup latency used to size broadcast pipelines when the caller
/// provides none: propagation plus node and software latency.
pub const DEFAULT_BROADCAST_ALPHA_NS: f64 = 1400.0;

fn forward_ops(op: CollectiveOp) -> (BufferOp, LocalOp) {
    match op {
        CollectiveOp::ReduceScatter | CollectiveOp::AllReduce | CollectiveOp::Reduce => {
            (BufferOp::Reshape, LocalOp::Reduce)
        }
        CollectiveOp::Scatter => (BufferOp::Reshape, LocalOp::Identity),
        CollectiveOp::AllToAll => (BufferOp::Reshape, LocalOp::Reshape),
        CollectiveOp::Barrier => (BufferOp::Identity, LocalOp::LogicalAnd),
        _ => (BufferOp::Identity, LocalOp::Identity),
    }
}

/// Expands one family step of a scatter-direction phase, splitting the
/// pairwise variant's last step into one-to-one rounds.
fn push_forward_step(
    steps: &mut Vec<PlanStep>,
    family: Step,
    d: u32,
    input: u64,
    buffer_op: BufferOp,
    local_op: LocalOp,
    exchange: ExchangeKind,
    rooted: bool,
    pairwise: bool,
) -> u64 {
    let out = input / d as u64;
    let per_pair = match exchange {
        ExchangeKind::Signal => 0,
        _ => out,
    };
    if pairwise {
        for r in 1..d {
            steps.push(PlanStep {
                family,
                round: Some((r, d - 1)),
                d,
                input_bytes: input,
                msg_bytes: out,
                bytes_per_pair: per_pair,
                buffer_op,
                local_op,
                exchange,
                rooted,
            });
        }
    } else {
        steps.push(PlanStep {
            family,
            round: None,
            d,
            input_bytes: input,
            msg_bytes: out,
            bytes_per_pair: per_pair,
            buffer_op,
            local_op,
            exchange,
            rooted,
        });
    }
    out
}

/// Expands one family step of a gather-direction phase.
fn push_backward_step(
    steps: &mut Vec<PlanStep>,
    family: Step,
    d: u32,
    input: u64,
    rooted: bool,
    pairwise: bool,
) -> u64 {
    let out = input * d as u64;
    if pairwise {
        for r in 1..d {
            steps.push(PlanStep {
                family,
                round: Some((r, d - 1)),
                d,
                input_bytes: input,
                msg_bytes: out,
                bytes_per_pair: input,
                buffer_op: BufferOp::Copy,
                local_op: LocalOp::Identity,
                exchange: ExchangeKind::BlockGather,
                rooted,
            });
        }
    } else {
        steps.push(PlanStep {
            family,
            round: None,
            d,
            input_bytes: input,
            msg_bytes: out,
            bytes_per_pair: input,
            buffer_op: BufferOp::Copy,
            local_op: LocalOp::Identity,
            exchange: ExchangeKind::BlockGather,
            rooted,
        });
    }
    out
}

/// Builds the plan for `op` with message size `msg_bytes` on `p`.
///
/// Messages that do not divide into N equal elements are padded up to the
/// next multiple of N elements; the padding is stripped on completion.
pub fn plan_collective(
    op: CollectiveOp,
    msg_bytes: u64,
    p: &RampParams,
    variant: Variant4,
) -> Result<CollectivePlan> {
    plan_collective_rooted(op, msg_bytes, p, variant, 0, 2)
}

pub fn plan_collective_rooted(
    op: CollectiveOp,
    msg_bytes: u64,
    p: &RampParams,
    variant: Variant4,
    root: u64,
    elem_bytes: u32,
) -> Result<CollectivePlan> {
    p.validate()?;
    if !p.plannable() {
        return Err(Error::Unsupported(format!(
            "device count {} does not tile into device groups of {}",
            p.lambda, p.x
        )));
    }
    if op.has_root() && root >= p.nodes() {
        return Err(Error::InvalidParameter(format!(
            "root rank {root} out of range for {} nodes",
            p.nodes()
        )));
    }
    let n = p.nodes();
    let unit = n * elem_bytes as u64;
    let needs_padding = !matches!(op, CollectiveOp::Barrier | CollectiveOp::Broadcast | CollectiveOp::AllGather | CollectiveOp::Gather);
    let padded = if needs_padding { msg_bytes.div_ceil(unit).max(1) * unit } else { msg_bytes };

    let forward: Vec<Step> = ALL_STEPS.into_iter().filter(|s| step_active(*s, p)).collect();
    let mut steps: Vec<PlanStep> = Vec::new();
    let mut broadcast = None;

    let pairwise_last = |s: Step| variant == Variant4::Pairwise && s == Step::S4;

    match op {
        CollectiveOp::ReduceScatter | CollectiveOp::Scatter => {
            let (buf, loc) = forward_ops(op);
            let mut cur = padded;
            for s in &forward {
                cur = push_forward_step(
                    &mut steps,
                    *s,
                    nodes_per_subgroup(*s, p),
                    cur,
                    buf,
                    loc,
                    ExchangeKind::SegmentScatter,
                    op == CollectiveOp::Scatter,
                    pairwise_last(*s),
                );
            }
        }
        CollectiveOp::AllGather | CollectiveOp::Gather => {
            let mut cur = padded.max(1);
            for s in forward.iter().rev() {
                cur = push_backward_step(
                    &mut steps,
                    *s,
                    nodes_per_subgroup(*s, p),
                    cur,
                    op == CollectiveOp::Gather,
                    pairwise_last(*s),
                );
            }
        }
        CollectiveOp::AllReduce | CollectiveOp::Reduce => {
            let mut cur = padded;
            for s in &forward {
                cur = push_forward_step(
                    &mut steps,
                    *s,
                    nodes_per_subgroup(*s, p),
                    cur,
                    BufferOp::Reshape,
                    LocalOp::Reduce,
                    ExchangeKind::SegmentScatter,
                    false,
                    pairwise_last(*s),
                );
            }
            for s in forward.iter().rev() {
                cur = push_backward_step(
                    &mut steps,
                    *s,
                    nodes_per_subgroup(*s, p),
                    cur,
                    op == CollectiveOp::Reduce,
                    pairwise_last(*s),
                );
            }
            debug_assert_eq!(cur, padded);
        }
        CollectiveOp::AllToAll => {
            let (buf, loc) = forward_ops(op);
            for s in &forward {
                let d = nodes_per_subgroup(*s, p);
                let per_pair = padded / d as u64;
                if pairwise_last(*s) {
                    for r in 1..d {
                        steps.push(PlanStep {
                            family: *s,
                            round: Some((r, d - 1)),
                            d,
                            input_bytes: padded,
                            msg_bytes: per_pair,
                            bytes_per_pair: per_pair,
                            buffer_op: buf,
                            local_op: loc,
                            exchange: ExchangeKind::BlockExchange,
                            rooted: false,
                        });
                    }
                } else {
                    steps.push(PlanStep {
                        family: *s,
                        round: None,
                        d,
                        input_bytes: padded,
                        msg_bytes: per_pair,
                        bytes_per_pair: per_pair,
                        buffer_op: buf,
                        local_op: loc,
                        exchange: ExchangeKind::BlockExchange,
                        rooted: false,
                    });
                }
            }
        }
        CollectiveOp::Barrier => {
            for s in &forward {
                let d = nodes_per_subgroup(*s, p);
                if pairwise_last(*s) {
                    for r in 1..d {
                        steps.push(PlanStep {
                            family: *s,
                            round: Some((r, d - 1)),
                            d,
                            input_bytes: 0,
                            msg_bytes: 0,
                            bytes_per_pair: 0,
                            buffer_op: BufferOp::Identity,
                            local_op: LocalOp::LogicalAnd,
                            exchange: ExchangeKind::Signal,
                            rooted: false,
                        });
                    }
                } else {
                    steps.push(PlanStep {
                        family: *s,
                        round: None,
                        d,
                        input_bytes: 0,
                        msg_bytes: 0,
                        bytes_per_pair: 0,
                        buffer_op: BufferOp::Identity,
                        local_op: LocalOp::LogicalAnd,
                        exchange: ExchangeKind::Signal,
                        rooted: false,
                    });
                }
            }
        }
        CollectiveOp::Broadcast => {
            // Root, relay and leaf levels: a logical tree of diameter 3.
            let s = 3;
            let beta_ns_per_byte = 8.0e9 / p.node_capacity_bps() as f64;
            let bp = broadcast_plan(msg_bytes.max(1), s, DEFAULT_BROADCAST_ALPHA_NS, beta_ns_per_byte)?;
            for stage in 0..bp.steps {
                steps.push(PlanStep {
                    family: Step::S1,
                    round: Some((stage as u32 + 1, bp.steps as u32)),
                    d: p.x,
                    input_bytes: msg_bytes,
                    msg_bytes: bp.per_stage_bytes,
                    bytes_per_pair: bp.per_stage_bytes,
                    buffer_op: BufferOp::Identity,
                    local_op: LocalOp::Identity,
                    exchange: ExchangeKind::BroadcastStage,
                    rooted: true,
                });
            }
            broadcast = Some(bp);
        }
    }

    Ok(CollectivePlan {
        op,
        params: *p,
        variant,
        requested_bytes: msg_bytes,
        msg_bytes: padded,
        elem_bytes,
        root,
        steps,
        broadcast,
    })
}
