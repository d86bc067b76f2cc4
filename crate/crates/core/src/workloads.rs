//! Training-time composition: collective estimates plus externally
//! measured compute times give per-iteration and whole-run figures for
//! data/model-parallel workloads.

use crate::baselines::{default_dims, strategy_plan, StrategyKind};
use crate::engine::plan::{plan_collective, CollectiveOp};
use crate::engine::Variant4;
use crate::error::{Error, Result};
use crate::estimator::{ramp_completion_on, strategy_completion, EstimatorConfig, NodeSpec};
use crate::params::RampParams;
use crate::topo::{select_nodes, select_ramp_box, Topology};

/// One recurring collective of a training iteration.
#[derive(Debug, Clone)]
pub struct CollectiveLoad {
    pub op: CollectiveOp,
    pub msg_bytes: u64,
    /// Communicator size (DP or MP level).
    pub comm_size: u64,
    /// Occurrences per iteration.
    pub count: u64,
    /// Job-rank stride between communicator members: 1 for model-parallel
    /// groups, the MP level for data-parallel groups.
    pub stride: u64,
}

/// A workload: parallelism levels, measured compute time and the
/// per-iteration collective list. Compute times are inputs, never derived
/// from model structure here.
#[derive(Debug, Clone)]
pub struct WorkloadConfig {
    pub name: String,
    pub dp_level: u64,
    pub mp_level: u64,
    pub compute_ns_per_iter: f64,
    pub train_steps: u64,
    pub collectives: Vec<CollectiveLoad>,
    /// Fraction of communication hidden under compute, 0 by default.
    pub overlap: f64,
}

impl WorkloadConfig {
    pub fn workers(&self) -> u64 {
        self.dp_level * self.mp_level
    }

    pub fn validate(&self) -> Result<()> {
        if self.dp_level == 0 || self.mp_level == 0 {
            return Err(Error::InvalidParameter("parallelism levels must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::InvalidParameter("overlap must lie in [0, 1]".into()));
        }
        for c in &self.collectives {
            if c.comm_size < 2 {
                return Err(Error::InvalidParameter(format!(
                    "collective {} needs a communicator of at least 2",
                    c.op.label()
                )));
            }
        }
        Ok(())
    }
}

/// The system a workload runs on.
#[derive(Debug, Clone)]
pub enum SystemModel {
    Ramp { params: RampParams, spec: NodeSpec, cfg: EstimatorConfig },
    Baseline { topology: Topology, strategy: StrategyKind, spec: NodeSpec },
}

impl SystemModel {
    pub fn label(&self) -> String {
        match self {
            SystemModel::Ramp { .. } => "ramp".to_string(),
            SystemModel::Baseline { topology, strategy, .. } => {
                format!("{}-{}", topology.kind.label(), strategy.label())
            }
        }
    }

    pub fn capacity_nodes(&self) -> u64 {
        match self {
            SystemModel::Ramp { params, .. } => params.nodes(),
            SystemModel::Baseline { topology, .. } => topology.nodes,
        }
    }

    /// Completion time of one collective over `comm_size` workers whose
    /// members sit `stride` job ranks apart.
    pub fn collective_ns(
        &self,
        op: CollectiveOp,
        msg_bytes: u64,
        comm_size: u64,
        stride: u64,
    ) -> Result<f64> {
        match self {
            SystemModel::Ramp { params, spec, cfg } => {
                // Single-hop all-to-all fabric: member placement does not
                // change the path.
                let sub = select_ramp_box(params, comm_size)?;
                let plan = plan_collective(op, msg_bytes, &sub, Variant4::DeviceShift)?;
                Ok(ramp_completion_on(&plan, params, spec, cfg).total_ns)
            }
            SystemModel::Baseline { topology, strategy, spec } => {
                let radices: Vec<u64> =
                    topology.tiers.iter().map(|t| t.down_radix).collect();
                let dims = default_dims(*strategy, comm_size, &radices);
                let plan = strategy_plan(*strategy, op, comm_size, &dims, msg_bytes)?
                    .with_rank_stride(stride.max(1));
                let span_nodes = (comm_size * stride.max(1)).min(topology.nodes);
                let placement = select_nodes(topology, span_nodes)?;
                Ok(strategy_completion(&plan, topology, &placement, spec).total_ns)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub system: String,
    pub workload: String,
    pub compute_ns: f64,
    pub comm_ns: f64,
    pub total_ns: f64,
    pub comm_fraction: f64,
    pub training_time_ns: f64,
}

/// Per-iteration time: compute plus the serial sum of collective times
/// (reduced by the configured overlap factor), and the whole training run.
pub fn iteration_time(w: &WorkloadConfig, system: &SystemModel) -> Result<IterationReport> {
    w.validate()?;
    if w.workers() > system.capacity_nodes() {
        return Err(Error::InsufficientNodes {
            requested: w.workers(),
            available: system.capacity_nodes(),
        });
    }
    let mut comm_ns = 0.0;
    for c in &w.collectives {
        comm_ns +=
            c.count as f64 * system.collective_ns(c.op, c.msg_bytes, c.comm_size, c.stride)?;
    }
    let exposed = comm_ns * (1.0 - w.overlap);
    let total = w.compute_ns_per_iter + exposed;
    Ok(IterationReport {
        system: system.label(),
        workload: w.name.clone(),
        compute_ns: w.compute_ns_per_iter,
        comm_ns: exposed,
        total_ns: total,
        comm_fraction: if total > 0.0 { exposed / total } else { 0.0 },
        training_time_ns: total * w.train_steps as f64,
    })
}

/// Iteration-speedup identity when compute shrinks by `factor` at fixed
/// communication. With communication fraction f, the speedup is
/// 1 / (1/factor · (1−f) + f).
pub fn compute_scaling_speedup(comm_fraction: f64, factor: f64) -> f64 {
    1.0 / ((1.0 - comm_fraction) / factor + comm_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::{build_topology, TopologySpec};

    fn ramp_system() -> SystemModel {
        SystemModel::Ramp {
            params: RampParams::max_scale(),
            spec: NodeSpec {
                mem_bw_bytes_per_s: 1.3e12,
                peak_ops_per_s: 3.12e14,
                clk_ns: 0.7,
                elem_bytes: 2,
                step_setup_ns: 0.0,
            },
            cfg: EstimatorConfig::default(),
        }
    }

    #[test]
    fn zero_collectives_means_zero_comm_fraction() {
        let w = WorkloadConfig {
            name: "compute-only".into(),
            dp_level: 4,
            mp_level: 2,
            compute_ns_per_iter: 1e9,
            train_steps: 10,
            collectives: Vec::new(),
            overlap: 0.0,
        };
        let r = iteration_time(&w, &ramp_system()).unwrap();
        assert_eq!(r.comm_fraction, 0.0);
        assert_eq!(r.total_ns, 1e9);
    }

    #[test]
    fn training_time_is_iteration_times_steps() {
        let w = WorkloadConfig {
            name: "w".into(),
            dp_level: 32,
            mp_level: 1,
            compute_ns_per_iter: 5e9,
            train_steps: 1000,
            collectives: vec![CollectiveLoad {
                op: CollectiveOp::AllReduce,
                msg_bytes: 1 << 30,
                comm_size: 32,
                count: 1,
                stride: 1,
            }],
            overlap: 0.0,
        };
        let r = iteration_time(&w, &ramp_system()).unwrap();
        assert!((r.training_time_ns - r.total_ns * 1000.0).abs() < 1.0);
        assert!(r.comm_ns > 0.0);
    }

    #[test]
    fn worker_overflow_is_rejected() {
        let w = WorkloadConfig {
            name: "big".into(),
            dp_level: 65_536,
            mp_level: 2,
            compute_ns_per_iter: 1.0,
            train_steps: 1,
            collectives: Vec::new(),
            overlap: 0.0,
        };
        assert!(iteration_time(&w, &ramp_system()).is_err());
    }

    #[test]
    fn baseline_comm_exceeds_ramp_comm() {
        let w = WorkloadConfig {
            name: "mp-heavy".into(),
            dp_level: 32,
            mp_level: 4,
            compute_ns_per_iter: 5.6e9,
            train_steps: 1,
            collectives: vec![CollectiveLoad {
                op: CollectiveOp::AllReduce,
                msg_bytes: 150 << 20,
                comm_size: 4,
                count: 168,
                stride: 1,
            }],
            overlap: 0.0,
        };
        let ramp = iteration_time(&w, &ramp_system()).unwrap();
        let mut spec = TopologySpec::new(65_536, 2_400_000_000_000);
        spec.oversub = 12;
        let ft = build_topology(crate::topo::TopologyKind::FatTree, &spec).unwrap();
        let base = SystemModel::Baseline {
            topology: ft,
            strategy: StrategyKind::Hierarchical,
            spec: NodeSpec::default(),
        };
        let eps = iteration_time(&w, &base).unwrap();
        assert!(eps.comm_fraction > ramp.comm_fraction);
    }

    #[test]
    fn compute_scaling_identity() {
        // Low communication fractions convert compute speedups almost
        // fully into iteration speedups.
        let s = compute_scaling_speedup(0.11, 2.0);
        assert!((s - 1.80).abs() < 0.02, "{s}");
        let s2 = compute_scaling_speedup(0.006, 2.0);
        assert!(s2 > 1.94 && s2 < 2.0);
    }

    #[test]
    fn overlap_reduces_exposed_communication() {
        let mut w = WorkloadConfig {
            name: "w".into(),
            dp_level: 16,
            mp_level: 1,
            compute_ns_per_iter: 1e9,
            train_steps: 1,
            collectives: vec![CollectiveLoad {
                op: CollectiveOp::AllReduce,
                msg_bytes: 1 << 28,
                comm_size: 16,
                count: 1,
                stride: 1,
            }],
            overlap: 0.0,
        };
        let none = iteration_time(&w, &ramp_system()).unwrap();
        w.overlap = 0.5;
        let half = iteration_time(&w, &ramp_system()).unwrap();
        assert!((half.comm_ns - none.comm_ns / 2.0).abs() < 1.0);
    }
}
