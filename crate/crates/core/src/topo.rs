//! Physical topologies and their hierarchy tables, plus greedy node
//! selection for a job.
//!
//! The estimator works analytically, so a topology is its hierarchy
//! descriptor rather than an explicit graph: per tier, the fan-out, switch
//! latency, link propagation latency and oversubscription.

use crate::error::{Error, Result};
use crate::params::RampParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Ramp,
    FatTree,
    Torus2D,
    Ring,
    /// Fixed-circuit OCS with a per-node degree budget.
    DegreeLimitedOcs,
}

impl TopologyKind {
    pub fn label(&self) -> &'static str {
        match self {
            TopologyKind::Ramp => "ramp",
            TopologyKind::FatTree => "fat-tree",
            TopologyKind::Torus2D => "torus2d",
            TopologyKind::Ring => "ring",
            TopologyKind::DegreeLimitedOcs => "degree-limited-ocs",
        }
    }

    pub fn parse(s: &str) -> Option<TopologyKind> {
        match s.to_ascii_lowercase().as_str() {
            "ramp" => Some(TopologyKind::Ramp),
            "fat-tree" | "fattree" | "fat_tree" => Some(TopologyKind::FatTree),
            "torus2d" | "torus" | "2d-torus" => Some(TopologyKind::Torus2D),
            "ring" => Some(TopologyKind::Ring),
            "degree-limited-ocs" | "topoopt" | "ocs" => Some(TopologyKind::DegreeLimitedOcs),
            _ => None,
        }
    }
}

/// One hierarchy level of a switched topology, from the node outward.
#[derive(Debug, Clone, Copy)]
pub struct Tier {
    /// Children per switch: nodes (tier 0) or lower-tier groups.
    pub down_radix: u64,
    pub switch_latency_ns: u64,
    /// Propagation latency of links to this tier.
    pub link_latency_ns: u64,
    /// Intra-to-inter oversubscription crossing this tier (σ:1).
    pub oversub: u64,
}

/// Node I/O characteristics.
#[derive(Debug, Clone, Copy)]
pub struct NodeIo {
    pub trx_count: u32,
    pub trx_rate_bps: u64,
    pub mem_to_trx_ns: u64,
    /// Minimum in-out latency per node.
    pub io_latency_ns: u64,
}

impl NodeIo {
    pub fn node_rate_bps(&self) -> u64 {
        self.trx_count as u64 * self.trx_rate_bps
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub kind: TopologyKind,
    pub nodes: u64,
    pub io: NodeIo,
    /// Hierarchy levels, innermost first (switched kinds).
    pub tiers: Vec<Tier>,
    /// Circuit reconfiguration delay (OCS kinds).
    pub reconfig_ns: u64,
    /// Node-to-node propagation for flat kinds.
    pub prop_ns: u64,
    pub ramp: Option<RampParams>,
    pub torus_dims: Option<(u64, u64)>,
    /// Logical circuits per node (ring and degree-limited kinds).
    pub degree: u32,
}

impl Topology {
    /// Number of nodes inside one tier-`t` subtree (t = 0 means a single
    /// node).
    pub fn subtree_size(&self, t: usize) -> u64 {
        self.tiers[..t].iter().map(|tier| tier.down_radix).product()
    }

    /// Binding oversubscription for a flow crossing up to tier `t`: the
    /// intra-to-inter ratio applies once, at the boundary where it is
    /// configured.
    pub fn binding_oversub(&self, t: usize) -> u64 {
        self.tiers[..t].iter().map(|tier| tier.oversub.max(1)).max().unwrap_or(1)
    }

    /// Hierarchy level crossed by two node indexes under contiguous
    /// placement: 0 = same node, k = common ancestor at tier k.
    pub fn crossing_level(&self, a: u64, b: u64) -> usize {
        if a == b {
            return 0;
        }
        for t in 1..=self.tiers.len() {
            if a / self.subtree_size(t) == b / self.subtree_size(t) {
                return t;
            }
        }
        self.tiers.len()
    }

    /// One-way latency between two placed nodes: propagation plus switch
    /// traversal up to the common ancestor and down.
    pub fn pair_latency_ns(&self, a: u64, b: u64) -> u64 {
        let base = self.io.io_latency_ns + self.io.mem_to_trx_ns;
        match self.kind {
            TopologyKind::Ramp => base + self.prop_ns,
            TopologyKind::Ring | TopologyKind::DegreeLimitedOcs => {
                let hops = self.ring_hops(a, b);
                base + self.prop_ns * hops.max(1)
            }
            TopologyKind::Torus2D => {
                let (r, c) = self.torus_dims.unwrap_or((1, self.nodes));
                let (ar, ac) = (a / c, a % c);
                let (br, bc) = (b / c, b % c);
                let dr = torus_dist(ar, br, r);
                let dc = torus_dist(ac, bc, c);
                base + self.prop_ns * (dr + dc).max(1)
            }
            TopologyKind::FatTree => {
                let lvl = self.crossing_level(a, b);
                let mut lat = base;
                for t in 0..lvl {
                    // Up and down through each tier's links; one switch at
                    // the top, two traversals per intermediate tier.
                    lat += 2 * self.tiers[t].link_latency_ns;
                    lat += self.tiers[t].switch_latency_ns
                        * if t + 1 == lvl { 1 } else { 2 };
                }
                lat
            }
        }
    }

    fn ring_hops(&self, a: u64, b: u64) -> u64 {
        let d = a.abs_diff(b);
        d.min(self.nodes - d)
    }

    /// Worst-case pair latency in a placement of `workers` contiguous
    /// nodes.
    pub fn diameter_latency_ns(&self, workers: u64) -> u64 {
        self.pair_latency_ns(0, workers.saturating_sub(1))
    }

    /// Hierarchy table export for inspection.
    pub fn hierarchy_csv(&self) -> String {
        let mut out =
            String::from("tier,down_radix,subtree_nodes,switch_latency_ns,link_latency_ns,oversub\n");
        for (i, t) in self.tiers.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i + 1,
                t.down_radix,
                self.subtree_size(i + 1),
                t.switch_latency_ns,
                t.link_latency_ns,
                t.oversub
            ));
        }
        out
    }
}

fn torus_dist(a: u64, b: u64, n: u64) -> u64 {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Size/technology knobs for [`build_topology`].
#[derive(Debug, Clone)]
pub struct TopologySpec {
    pub nodes: u64,
    /// Unidirectional node capacity in bits/second.
    pub node_rate_bps: u64,
    /// Intra-to-inter oversubscription for switched kinds (σ:1).
    pub oversub: u64,
    /// Fat-tree per-tier fan-out, innermost first. Empty selects the
    /// default scaled profile.
    pub tier_radices: Vec<u64>,
    pub torus_dims: Option<(u64, u64)>,
    pub ramp: Option<RampParams>,
}

impl TopologySpec {
    pub fn new(nodes: u64, node_rate_bps: u64) -> Self {
        TopologySpec { nodes, node_rate_bps, oversub: 1, tier_radices: Vec::new(), torus_dims: None, ramp: None }
    }
}

/// Default fat-tree fan-outs reproducing the 65,536-node scaled profile:
/// 8 devices per server, then four switched tiers.
pub const DEFAULT_FAT_TREE_RADICES: [u64; 5] = [8, 8, 8, 8, 16];

/// Builds a topology with the default technology parameters for its kind.
pub fn build_topology(kind: TopologyKind, spec: &TopologySpec) -> Result<Topology> {
    match kind {
        TopologyKind::FatTree => {
            let radices: Vec<u64> = if spec.tier_radices.is_empty() {
                DEFAULT_FAT_TREE_RADICES.to_vec()
            } else {
                spec.tier_radices.clone()
            };
            // Trim unused outer tiers; reject overflow.
            let mut tiers = Vec::new();
            let mut cap = 1u64;
            let switch_lat = [100u64, 350, 350, 350, 350, 350];
            let link_lat = [20u64, 10, 50, 1250, 1250, 1250];
            for (i, r) in radices.iter().enumerate() {
                if cap >= spec.nodes {
                    break;
                }
                tiers.push(Tier {
                    down_radix: *r,
                    switch_latency_ns: switch_lat[i.min(switch_lat.len() - 1)],
                    link_latency_ns: link_lat[i.min(link_lat.len() - 1)],
                    oversub: if i == 0 { 1 } else { spec.oversub },
                });
                cap *= r;
            }
            if cap < spec.nodes {
                return Err(Error::Unsupported(format!(
                    "fat-tree tiers {:?} reach only {} of {} nodes",
                    radices, cap, spec.nodes
                )));
            }
            Ok(Topology {
                kind,
                nodes: spec.nodes,
                io: NodeIo {
                    trx_count: 1,
                    trx_rate_bps: spec.node_rate_bps,
                    mem_to_trx_ns: 0,
                    io_latency_ns: 100,
                },
                tiers,
                reconfig_ns: 0,
                prop_ns: 0,
                ramp: None,
                torus_dims: None,
                degree: 1,
            })
        }
        TopologyKind::Ramp => {
            let p = spec.ramp.unwrap_or_else(RampParams::max_scale);
            p.validate()?;
            Ok(Topology {
                kind,
                nodes: p.nodes(),
                io: NodeIo {
                    trx_count: p.x * p.b,
                    trx_rate_bps: p.line_rate_bps,
                    mem_to_trx_ns: 0,
                    io_latency_ns: 100,
                },
                tiers: Vec::new(),
                reconfig_ns: 20,
                prop_ns: 1300,
                ramp: Some(p),
                torus_dims: None,
                degree: p.x * p.b,
            })
        }
        TopologyKind::Torus2D => {
            let dims = spec.torus_dims.unwrap_or_else(|| {
                let c = if spec.nodes > 128 * 128 { 512 } else { 128 };
                (spec.nodes.div_ceil(c), c)
            });
            if dims.0 * dims.1 < spec.nodes {
                return Err(Error::Unsupported("torus dims too small".to_string()));
            }
            // Worst-case per-hop propagation from the longer dimension.
            let prop = if dims.1 >= 512 { 520 } else { 156 };
            Ok(Topology {
                kind,
                nodes: spec.nodes,
                io: NodeIo {
                    trx_count: 4,
                    trx_rate_bps: spec.node_rate_bps / 4,
                    mem_to_trx_ns: 0,
                    io_latency_ns: 100,
                },
                tiers: Vec::new(),
                reconfig_ns: 0,
                prop_ns: prop,
                ramp: None,
                torus_dims: Some(dims),
                degree: 4,
            })
        }
        TopologyKind::Ring => Ok(Topology {
            kind,
            nodes: spec.nodes,
            io: NodeIo {
                trx_count: 2,
                trx_rate_bps: spec.node_rate_bps / 2,
                mem_to_trx_ns: 0,
                io_latency_ns: 100,
            },
            tiers: Vec::new(),
            reconfig_ns: 0,
            prop_ns: 156,
            ramp: None,
            torus_dims: None,
            degree: 2,
        }),
        TopologyKind::DegreeLimitedOcs => Ok(Topology {
            kind,
            nodes: spec.nodes,
            io: NodeIo {
                trx_count: 1,
                trx_rate_bps: 1_600_000_000_000,
                mem_to_trx_ns: 0,
                io_latency_ns: 100,
            },
            tiers: Vec::new(),
            reconfig_ns: 10_000_000, // 10 ms; circuits are fixed up front
            prop_ns: 260,
            ramp: None,
            torus_dims: None,
            degree: 1,
        }),
    }
}

/// A job's worker selection.
#[derive(Debug, Clone)]
pub struct Placement {
    pub workers: u64,
    /// Contiguous node-index range (greedy fill, lowest rank first).
    pub first_node: u64,
    /// Highest hierarchy level any pair crosses (fat-tree), or 0.
    pub tier_span: usize,
    /// Selected sub-box for RAMP jobs.
    pub ramp_box: Option<RampParams>,
}

impl Placement {
    pub fn logical_diameter_hops(&self) -> usize {
        self.tier_span
    }
}

/// Greedy node selection: fill the highest-bandwidth groups first; at
/// bandwidth parity take the lowest overall latency (smallest spanned
/// hierarchy). Deterministic: lowest node index wins ties.
pub fn select_nodes(t: &Topology, workers: u64) -> Result<Placement> {
    if workers > t.nodes {
        return Err(Error::InsufficientNodes { requested: workers, available: t.nodes });
    }
    if workers == 0 {
        return Err(Error::InvalidParameter("zero workers requested".to_string()));
    }
    match t.kind {
        TopologyKind::Ramp => {
            let p = t.ramp.as_ref().expect("ramp topology has params");
            let sub = select_ramp_box(p, workers)?;
            Ok(Placement { workers, first_node: 0, tier_span: 0, ramp_box: Some(sub) })
        }
        TopologyKind::FatTree => {
            let span = (1..=t.tiers.len())
                .find(|lvl| t.subtree_size(*lvl) >= workers)
                .unwrap_or(t.tiers.len());
            Ok(Placement { workers, first_node: 0, tier_span: span, ramp_box: None })
        }
        _ => Ok(Placement { workers, first_node: 0, tier_span: 0, ramp_box: None }),
    }
}

/// Smallest RAMP sub-box (x', J', Λ') hosting `workers` nodes while
/// minimizing the number of algorithmic steps, then box size; ties go to
/// the widest fan-out x' (more transceiver groups drive each step).
pub fn select_ramp_box(p: &RampParams, workers: u64) -> Result<RampParams> {
    if workers < 2 {
        return Err(Error::InvalidParameter("a collective needs two workers".to_string()));
    }
    let mut best: Option<((u32, u64, i64), RampParams)> = None;
    for x in 2..=p.x {
        for j in 1..=p.j.min(x) {
            // Λ' is a multiple of x' (or 1) and at most Λ.
            let mut lams: Vec<u32> = (1..=p.lambda / x).map(|k| k * x).collect();
            lams.push(1);
            for lam in lams {
                let n = x as u64 * j as u64 * lam as u64;
                if n < workers {
                    continue;
                }
                let sub = RampParams {
                    x,
                    j,
                    lambda: lam,
                    b: p.b,
                    line_rate_bps: p.line_rate_bps,
                    subnet: p.subnet,
                };
                let steps = crate::engine::step_count(
                    crate::engine::CollectiveOp::ReduceScatter,
                    &sub,
                ) as u32;
                let key = (steps, n, -(x as i64));
                let better = match &best {
                    None => true,
                    Some((bk, _)) => key < *bk,
                };
                if better {
                    best = Some((key, sub));
                }
            }
        }
    }
    best.map(|(_, sub)| sub)
        .ok_or_else(|| Error::InsufficientNodes { requested: workers, available: p.nodes() })
}
