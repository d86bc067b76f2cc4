//! The collective planner: subgroup maps, information map, buffer and
//! local operations, per-step message sizes.

pub mod plan;
pub mod subgroups;

pub use plan::{
    broadcast_completion_ns, broadcast_plan, plan_collective, plan_collective_rooted,
    BroadcastPlan, BufferOp, CollectiveOp, CollectivePlan, ExchangeKind, LocalOp, PlanStep,
};
pub use subgroups::{
    collective_rank, info_portion, node_of_rank, nodes_per_subgroup, radices, step_active,
    subgroup_count, subgroup_id, subgroup_members, Step, Variant4, ALL_STEPS,
};

use crate::params::RampParams;

/// Plan export: one record per node per step (rank, subgroup id, portion,
/// message bytes, op codes). Line-oriented, for diffing against goldens.
pub fn plan_to_text(plan: &CollectivePlan) -> String {
    let p = &plan.params;
    let mut out = String::from("node,rank,step,family,round,subgroup,portion,msg_bytes,buffer_op,local_op\n");
    for (idx, step) in plan.steps.iter().enumerate() {
        for node in p.all_nodes() {
            let rank = collective_rank(node, p, plan.variant);
            let (sg, portion) = if step.exchange == plan::ExchangeKind::BroadcastStage {
                (0, 0)
            } else {
                (
                    subgroup_id(node, step.family, p, plan.variant).unwrap_or(0),
                    info_portion(node, step.family, p, plan.variant),
                )
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                node.flat_index(p),
                rank,
                idx,
                step.family.index(),
                step.round.map(|(r, _)| r).unwrap_or(0),
                sg,
                portion,
                step.msg_bytes,
                step.buffer_op.label(),
                step.local_op.label(),
            ));
        }
    }
    out
}

/// Number of algorithmic steps for a collective on a parameter set, without
/// materializing a plan.
pub fn step_count(op: CollectiveOp, p: &RampParams) -> usize {
    let active = subgroups::ALL_STEPS
        .into_iter()
        .filter(|s| step_active(*s, p))
        .count();
    match op {
        CollectiveOp::AllReduce | CollectiveOp::Reduce => 2 * active,
        _ => active,
    }
}
