//! Ring, hierarchical-ring and 2D-torus collective strategies for the
//! baseline topologies, with a token-level functional simulation checked
//! against the same brute-force oracle as the RAMP collectives.
//!
//! Ranks decompose into mixed-radix digits over the hierarchy dims, dim 0
//! innermost (contiguous ranks share the innermost group, matching greedy
//! placement). Each phase runs a ring collective over one dim; the chunk a
//! node owns after a reduce-scatter phase is indexed by its digit path.

use std::collections::BTreeMap;

use crate::engine::plan::{CollectiveOp, LocalOp};
use crate::error::{Error, Result};
use crate::funcsim::{oracle, Elem, NodeFinal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Ring,
    Hierarchical,
    Torus2D,
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Ring => "ring",
            StrategyKind::Hierarchical => "hierarchical",
            StrategyKind::Torus2D => "torus",
        }
    }

    pub fn parse(s: &str) -> Option<StrategyKind> {
        match s.to_ascii_lowercase().as_str() {
            "ring" => Some(StrategyKind::Ring),
            "hierarchical" | "hier" => Some(StrategyKind::Hierarchical),
            "torus" | "torus2d" | "2d-torus" => Some(StrategyKind::Torus2D),
            _ => None,
        }
    }
}

/// Communication pattern of one strategy step, described analytically so
/// the estimator can place it on a topology without enumerating pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommPattern {
    /// Every ring member sends to its successor; rings of `len` nodes whose
    /// members are `stride` ranks apart.
    RingNeighbor { len: u64, stride: u64 },
    /// Pairwise rotation round: rank i exchanges with i ± r·stride inside
    /// rings of `len`.
    Rotation { len: u64, stride: u64, r: u64 },
}

impl CommPattern {
    pub fn ring_len(&self) -> u64 {
        match self {
            CommPattern::RingNeighbor { len, .. } | CommPattern::Rotation { len, .. } => *len,
        }
    }

    /// Logical distance between communicating ranks, in rank units.
    pub fn rank_distance(&self) -> u64 {
        match self {
            CommPattern::RingNeighbor { stride, .. } => *stride,
            CommPattern::Rotation { stride, r, len } => (stride * r).min(stride * (len - r)),
        }
    }

    /// Widest rank span inside one communicating ring (for placement-level
    /// latency: the wrap-around pair).
    pub fn rank_span(&self) -> u64 {
        match self {
            CommPattern::RingNeighbor { len, stride } => (len - 1) * stride,
            CommPattern::Rotation { len, stride, r } => (stride * r).max(stride * (len - r)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StrategyStep {
    pub comm: CommPattern,
    pub bytes_per_pair: u64,
    pub local_op: LocalOp,
}

/// An ordered list of communication steps realizing one collective with a
/// ring-family strategy.
#[derive(Debug, Clone)]
pub struct StrategyPlan {
    pub kind: StrategyKind,
    pub op: CollectiveOp,
    pub workers: u64,
    pub dims: Vec<u64>,
    pub msg_bytes: u64,
    pub steps: Vec<StrategyStep>,
}

impl StrategyPlan {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Total bytes one node sends across all steps; the hierarchical-vs-
    /// ring byte audit uses this.
    pub fn total_bytes_per_node(&self) -> u64 {
        self.steps.iter().map(|s| s.bytes_per_pair).sum()
    }

    /// Widens every step's rank stride: a communicator whose members sit
    /// `s` job ranks apart (data-parallel peers across model-parallel
    /// groups) keeps its step structure but spans s-times the distance.
    pub fn with_rank_stride(mut self, s: u64) -> Self {
        if s > 1 {
            for step in &mut self.steps {
                step.comm = match step.comm {
                    CommPattern::RingNeighbor { len, stride } => {
                        CommPattern::RingNeighbor { len, stride: stride * s }
                    }
                    CommPattern::Rotation { len, stride, r } => {
                        CommPattern::Rotation { len, stride: stride * s, r }
                    }
                };
            }
        }
        self
    }

    /// Plan export in the schedule CSV shape minus the optical columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,pattern,ring_len,stride,round,bytes_per_pair,local_op\n");
        for (i, s) in self.steps.iter().enumerate() {
            let (pat, len, stride, round) = match s.comm {
                CommPattern::RingNeighbor { len, stride } => ("ring", len, stride, 0),
                CommPattern::Rotation { len, stride, r } => ("rotation", len, stride, r),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                i, pat, len, stride, round, s.bytes_per_pair,
                s.local_op.label()
            ));
        }
        out
    }
}

fn stride_of(dims: &[u64], phase: usize) -> u64 {
    dims[..phase].iter().product()
}

fn ring_steps(
    steps: &mut Vec<StrategyStep>,
    dims: &[u64],
    phase: usize,
    count: u64,
    bytes: u64,
    local_op: LocalOp,
) {
    let comm = CommPattern::RingNeighbor { len: dims[phase], stride: stride_of(dims, phase) };
    for _ in 0..count {
        steps.push(StrategyStep { comm, bytes_per_pair: bytes, local_op });
    }
}

/// Builds the step list for `op` on `n` workers partitioned into `dims`
/// (product must equal n). The flat ring uses dims = [n].
pub fn strategy_plan(
    kind: StrategyKind,
    op: CollectiveOp,
    n: u64,
    dims: &[u64],
    msg_bytes: u64,
) -> Result<StrategyPlan> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two workers".to_string()));
    }
    if dims.is_empty() || dims.iter().product::<u64>() != n {
        return Err(Error::InvalidParameter(format!(
            "dims {dims:?} do not factor {n} workers"
        )));
    }
    if kind == StrategyKind::Torus2D && dims.len() > 2 {
        return Err(Error::Unsupported("a 2D torus has at most two dims".to_string()));
    }
    let mut steps = Vec::new();
    let phases = dims.len();
    // Per-phase working sizes for scatter-direction ops.
    let mut size = vec![msg_bytes; phases + 1];
    for p in 0..phases {
        size[p + 1] = size[p] / dims[p];
    }
    match op {
        CollectiveOp::ReduceScatter => {
            for p in 0..phases {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Reduce);
            }
        }
        CollectiveOp::AllGather => {
            for p in (0..phases).rev() {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Identity);
            }
        }
        CollectiveOp::AllReduce => {
            for p in 0..phases {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Reduce);
            }
            for p in (0..phases).rev() {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Identity);
            }
        }
        CollectiveOp::Reduce => {
            for p in 0..phases {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Reduce);
            }
            for p in 0..phases {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Identity);
            }
        }
        CollectiveOp::Barrier => {
            for p in 0..phases {
                ring_steps(&mut steps, dims, p, dims[p] - 1, 1, LocalOp::LogicalAnd);
            }
        }
        CollectiveOp::AllToAll => {
            // Rotation rounds over the full communicator. The hierarchical
            // variants bring no data advantage to all-to-all (volume is
            // conserved per step), so all strategies share the rotation.
            for r in 1..n {
                steps.push(StrategyStep {
                    comm: CommPattern::Rotation { len: n, stride: 1, r },
                    bytes_per_pair: msg_bytes / n,
                    local_op: LocalOp::Reshape,
                });
            }
        }
        CollectiveOp::Scatter => {
            for p in (0..phases).rev() {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Identity);
            }
        }
        CollectiveOp::Gather => {
            for p in 0..phases {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Identity);
            }
        }
        CollectiveOp::Broadcast => {
            // Scatter then all-gather, the standard two-pass ring broadcast.
            for p in (0..phases).rev() {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Identity);
            }
            for p in (0..phases).rev() {
                ring_steps(&mut steps, dims, p, dims[p] - 1, size[p + 1], LocalOp::Identity);
            }
        }
    }
    Ok(StrategyPlan { kind, op, workers: n, dims: dims.to_vec(), msg_bytes, steps })
}

/// Default hierarchy dims for a strategy on `n` workers.
pub fn default_dims(kind: StrategyKind, n: u64, tier_radices: &[u64]) -> Vec<u64> {
    match kind {
        StrategyKind::Ring => vec![n],
        StrategyKind::Hierarchical => {
            // Follow the placement tiers, inner tiers first; fold whatever
            // does not tile into the outermost ring.
            let mut dims = Vec::new();
            let mut rest = n;
            for r in tier_radices {
                if rest <= 1 {
                    break;
                }
                let d = (*r).min(rest);
                if d > 1 && rest % d == 0 {
                    dims.push(d);
                    rest /= d;
                } else {
                    break;
                }
            }
            if rest > 1 {
                dims.push(rest);
            }
            if dims.is_empty() {
                dims.push(n);
            }
            dims
        }
        StrategyKind::Torus2D => {
            // Most balanced factorization r·c = n with r ≤ c.
            let mut best = (1, n);
            let mut r = 1;
            while r * r <= n {
                if n % r == 0 {
                    best = (r, n / r);
                }
                r += 1;
            }
            if best.0 == 1 {
                vec![n]
            } else {
                vec![best.0, best.1]
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Functional simulation
// ---------------------------------------------------------------------------

type Held = BTreeMap<u64, Elem>;

fn digit(rank: u64, dims: &[u64], phase: usize) -> u64 {
    (rank / stride_of(dims, phase)) % dims[phase]
}

/// Members of the phase-`p` ring containing `rank`, ordered by digit.
fn ring_members(rank: u64, dims: &[u64], phase: usize) -> Vec<u64> {
    let stride = stride_of(dims, phase);
    let base = rank - digit(rank, dims, phase) * stride;
    (0..dims[phase]).map(|q| base + q * stride).collect()
}

fn ring_bases(n: u64, dims: &[u64], phase: usize) -> Vec<u64> {
    (0..n).filter(|r| digit(*r, dims, phase) == 0).collect()
}

/// Ring reduce-scatter at segment granularity: ring members hold equal
/// segment sets; position q ends owning the digit-q sub-class, reduced.
fn ring_rs_phase(state: &mut [Held], n: u64, dims: &[u64], phase: usize) {
    let d = dims[phase] as usize;
    if d < 2 {
        return;
    }
    for base in ring_bases(n, dims, phase) {
        let ring = ring_members(base, dims, phase);
        let mut next: Vec<Held> = vec![Held::new(); d];
        for (q, node) in ring.iter().enumerate() {
            let held = std::mem::take(&mut state[*node as usize]);
            for (seg, e) in held {
                let w = digit(seg, dims, phase) as usize;
                let slot = &mut next[w];
                match slot.get_mut(&seg) {
                    Some(acc) => acc.merge_from(&e),
                    None => {
                        slot.insert(seg, e);
                    }
                }
            }
            let _ = q;
        }
        for (q, node) in ring.iter().enumerate() {
            state[*node as usize] = std::mem::take(&mut next[q]);
        }
    }
}

/// Ring all-gather: every member ends with the union of the ring's sets.
fn ring_ag_phase(state: &mut [Held], n: u64, dims: &[u64], phase: usize) {
    let d = dims[phase] as usize;
    if d < 2 {
        return;
    }
    for base in ring_bases(n, dims, phase) {
        let ring = ring_members(base, dims, phase);
        let mut union = Held::new();
        for node in &ring {
            for (seg, e) in &state[*node as usize] {
                union.insert(*seg, e.clone());
            }
        }
        for node in &ring {
            state[*node as usize] = union.clone();
        }
    }
}

/// Scatter along one dim: the holder splits its set by ring digit.
fn ring_scatter_phase(state: &mut [Held], n: u64, dims: &[u64], phase: usize) {
    let d = dims[phase] as usize;
    if d < 2 {
        return;
    }
    for base in ring_bases(n, dims, phase) {
        let ring = ring_members(base, dims, phase);
        let holder = ring.iter().find(|m| !state[**m as usize].is_empty()).copied();
        let Some(h) = holder else { continue };
        let full = std::mem::take(&mut state[h as usize]);
        for (q, node) in ring.iter().enumerate() {
            let sub: Held = full
                .iter()
                .filter(|(seg, _)| digit(**seg, dims, phase) as usize == q)
                .map(|(s, e)| (*s, e.clone()))
                .collect();
            state[*node as usize] = sub;
        }
    }
}

/// Gather along one dim into the member on the root path.
fn ring_gather_phase(
    state: &mut [Held],
    n: u64,
    dims: &[u64],
    phase: usize,
    is_parent: &dyn Fn(u64) -> bool,
) {
    let d = dims[phase] as usize;
    if d < 2 {
        return;
    }
    for base in ring_bases(n, dims, phase) {
        let ring = ring_members(base, dims, phase);
        let Some(parent) = ring.iter().find(|m| is_parent(**m)).copied() else {
            continue;
        };
        if ring.iter().all(|m| *m == parent || state[*m as usize].is_empty()) {
            continue;
        }
        let mut union = Held::new();
        for node in &ring {
            for (seg, e) in std::mem::take(&mut state[*node as usize]) {
                union.insert(seg, e);
            }
        }
        state[parent as usize] = union;
    }
}

/// Executes a strategy on symbolic payloads; the result is indexed by rank
/// and compared against [`oracle`]. Message granularity is one element per
/// rank segment.
pub fn simulate(
    kind: StrategyKind,
    op: CollectiveOp,
    n: u64,
    dims: &[u64],
    root: u64,
) -> Result<Vec<NodeFinal>> {
    let _ = kind; // all strategies share the phase machinery through dims
    if dims.iter().product::<u64>() != n {
        return Err(Error::InvalidParameter("dims do not factor n".to_string()));
    }
    let phases = dims.len();
    let m = n;
    let shares_prefix = |a: u64, b: u64, upto: usize| -> bool {
        (0..upto).all(|p| digit(a, dims, p) == digit(b, dims, p))
    };

    match op {
        CollectiveOp::Barrier => {
            let mut heard: Vec<std::collections::BTreeSet<u64>> =
                (0..n).map(|r| std::collections::BTreeSet::from([r])).collect();
            for p in 0..phases {
                let d = dims[p] as usize;
                for _t in 1..d {
                    let prev = heard.clone();
                    for r in 0..n {
                        let ring = ring_members(r, dims, p);
                        let q = digit(r, dims, p) as usize;
                        let pred = ring[(q + d - 1) % d];
                        heard[r as usize].extend(prev[pred as usize].iter().copied());
                    }
                }
            }
            return Ok(heard.into_iter().map(NodeFinal::Heard).collect());
        }
        CollectiveOp::AllToAll => {
            // Rotation rounds: at round r every rank extracts the chunk its
            // send buffer holds for rank i+r and hands it over directly.
            let send: Vec<Vec<Elem>> = (0..n)
                .map(|i| (0..n).map(|dst| Elem::single(i, dst)).collect())
                .collect();
            let mut recv: Vec<Vec<Elem>> =
                (0..n).map(|_| vec![Elem::default(); n as usize]).collect();
            for i in 0..n {
                recv[i as usize][i as usize] = send[i as usize][i as usize].clone();
            }
            for r in 1..n {
                for i in 0..n {
                    let dst = (i + r) % n;
                    recv[dst as usize][i as usize] = send[i as usize][dst as usize].clone();
                }
            }
            return Ok(recv.into_iter().map(NodeFinal::Data).collect());
        }
        _ => {}
    }

    let mut state: Vec<Held> = (0..n)
        .map(|r| {
            let start_with_data = match op {
                CollectiveOp::Scatter | CollectiveOp::Broadcast => r == root,
                CollectiveOp::AllGather | CollectiveOp::Gather => true,
                _ => true,
            };
            if !start_with_data {
                return Held::new();
            }
            match op {
                // Gather-direction ops start with the node's own block.
                CollectiveOp::AllGather | CollectiveOp::Gather => {
                    Held::from([(r, Elem::single(r, 0))])
                }
                _ => (0..m).map(|seg| (seg, Elem::single(r, seg))).collect(),
            }
        })
        .collect();

    match op {
        CollectiveOp::ReduceScatter => {
            for p in 0..phases {
                ring_rs_phase(&mut state, n, dims, p);
            }
        }
        CollectiveOp::AllGather => {
            for p in (0..phases).rev() {
                ring_ag_phase(&mut state, n, dims, p);
            }
        }
        CollectiveOp::AllReduce => {
            for p in 0..phases {
                ring_rs_phase(&mut state, n, dims, p);
            }
            for p in (0..phases).rev() {
                ring_ag_phase(&mut state, n, dims, p);
            }
        }
        CollectiveOp::Reduce => {
            for p in 0..phases {
                ring_rs_phase(&mut state, n, dims, p);
            }
            for p in 0..phases {
                ring_gather_phase(&mut state, n, dims, p, &|node| shares_prefix(root, node, p + 1));
            }
        }
        CollectiveOp::Scatter => {
            for p in (0..phases).rev() {
                ring_scatter_phase(&mut state, n, dims, p);
            }
        }
        CollectiveOp::Gather => {
            for p in 0..phases {
                ring_gather_phase(&mut state, n, dims, p, &|node| shares_prefix(root, node, p + 1));
            }
        }
        CollectiveOp::Broadcast => {
            for p in (0..phases).rev() {
                ring_scatter_phase(&mut state, n, dims, p);
            }
            for p in (0..phases).rev() {
                ring_ag_phase(&mut state, n, dims, p);
            }
        }
        _ => unreachable!(),
    }

    let finals: Vec<NodeFinal> = (0..n)
        .map(|r| {
            let held = &state[r as usize];
            match op {
                CollectiveOp::Reduce | CollectiveOp::Gather if r != root => {
                    // Non-root buffers are untouched by the collective.
                    match op {
                        CollectiveOp::Gather => {
                            NodeFinal::Data(vec![Elem::single(r, 0)])
                        }
                        _ => NodeFinal::Data(
                            (0..m).map(|seg| Elem::single(r, seg)).collect(),
                        ),
                    }
                }
                _ => NodeFinal::Data(held.values().cloned().collect()),
            }
        })
        .collect();
    Ok(finals)
}

/// Runs one strategy case against the brute-force oracle.
pub fn verify_strategy(kind: StrategyKind, op: CollectiveOp, n: u64, dims: &[u64]) -> Result<()> {
    let root = if op.has_root() { n / 2 } else { 0 };
    let got = simulate(kind, op, n, dims, root)?;
    let m = match op {
        CollectiveOp::AllGather | CollectiveOp::Gather => 1,
        _ => n,
    };
    let want = oracle(op, n, m, root);
    for r in 0..n as usize {
        match (&got[r], &want[r]) {
            (NodeFinal::Heard(g), NodeFinal::Heard(w)) => {
                if g != w {
                    return Err(Error::OracleMismatch(format!(
                        "{} {} rank {r}: heard {} want {}",
                        kind.label(),
                        op.label(),
                        g.len(),
                        w.len()
                    )));
                }
            }
            (NodeFinal::Data(g), NodeFinal::Data(w)) => {
                if g != w {
                    return Err(Error::OracleMismatch(format!(
                        "{} {} rank {r} differs ({} vs {} elems)",
                        kind.label(),
                        op.label(),
                        g.len(),
                        w.len()
                    )));
                }
            }
            _ => return Err(Error::OracleMismatch("state kind mismatch".to_string())),
        }
    }
    Ok(())
}
