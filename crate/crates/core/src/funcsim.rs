//! Functional simulator: executes a schedule on symbolic payloads and
//! checks the end state against brute-force collective semantics.
//!
//! Every element of a node's buffer is a multiset of (origin rank, segment
//! index) tokens. Reduction is multiset union, so reduction order is
//! irrelevant and any misrouted byte shows up as a wrong token. A numeric
//! spot-check mode maps token multisets to f64 sums.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::plan::{CollectiveOp, CollectivePlan, ExchangeKind, LocalOp};
use crate::engine::subgroups::{collective_rank, info_portion, Variant4};
use crate::error::{Error, Result};
use crate::params::{NodeCoord, RampParams};
use crate::transcoder::Schedule;

pub type Token = (u64, u64);

/// One buffer element: a multiset of contribution tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Elem(pub BTreeMap<Token, u32>);

impl Elem {
    pub fn single(origin: u64, segment: u64) -> Self {
        let mut m = BTreeMap::new();
        m.insert((origin, segment), 1);
        Elem(m)
    }

    pub fn merge_from(&mut self, other: &Elem) {
        for (tok, count) in &other.0 {
            *self.0.entry(*tok).or_insert(0) += count;
        }
    }

    pub fn token_count(&self) -> u64 {
        self.0.values().map(|c| *c as u64).sum()
    }

    /// Numeric view: the sum of a value function over the multiset.
    pub fn numeric(&self, value: impl Fn(u64, u64) -> f64) -> f64 {
        self.0.iter().map(|((o, s), c)| value(*o, *s) * *c as f64).sum()
    }
}

/// Final state of one node, indexed by collective rank.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeFinal {
    Data(Vec<Elem>),
    Heard(BTreeSet<u64>),
}

fn initial_buffer(rank: u64, m_elems: u64) -> Vec<Elem> {
    (0..m_elems).map(|e| Elem::single(rank, e)).collect()
}

/// Brute-force collective semantics: the ground truth every mapping
/// formula is checked against. O(N²·m).
pub fn oracle(op: CollectiveOp, n: u64, m_elems: u64, root: u64) -> Vec<NodeFinal> {
    let seg = if n > 0 { m_elems / n } else { 0 };
    (0..n)
        .map(|rank| match op {
            CollectiveOp::ReduceScatter => {
                let mut out = Vec::with_capacity(seg as usize);
                for i in 0..seg {
                    let mut e = Elem::default();
                    for origin in 0..n {
                        e.merge_from(&Elem::single(origin, rank * seg + i));
                    }
                    out.push(e);
                }
                NodeFinal::Data(out)
            }
            CollectiveOp::AllGather => NodeFinal::Data(
                (0..n * m_elems)
                    .map(|i| Elem::single(i / m_elems, i % m_elems))
                    .collect(),
            ),
            CollectiveOp::AllReduce => {
                let mut out = Vec::with_capacity(m_elems as usize);
                for e in 0..m_elems {
                    let mut el = Elem::default();
                    for origin in 0..n {
                        el.merge_from(&Elem::single(origin, e));
                    }
                    out.push(el);
                }
                NodeFinal::Data(out)
            }
            CollectiveOp::Reduce => {
                if rank == root {
                    let mut out = Vec::with_capacity(m_elems as usize);
                    for e in 0..m_elems {
                        let mut el = Elem::default();
                        for origin in 0..n {
                            el.merge_from(&Elem::single(origin, e));
                        }
                        out.push(el);
                    }
                    NodeFinal::Data(out)
                } else {
                    NodeFinal::Data(initial_buffer(rank, m_elems))
                }
            }
            CollectiveOp::Barrier => NodeFinal::Heard((0..n).collect()),
            CollectiveOp::AllToAll => NodeFinal::Data(
                (0..n * seg)
                    .map(|i| {
                        let origin = i / seg;
                        Elem::single(origin, rank * seg + i % seg)
                    })
                    .collect(),
            ),
            CollectiveOp::Scatter => NodeFinal::Data(
                (0..seg).map(|i| Elem::single(root, rank * seg + i)).collect(),
            ),
            CollectiveOp::Gather => {
                if rank == root {
                    NodeFinal::Data(
                        (0..n * m_elems)
                            .map(|i| Elem::single(i / m_elems, i % m_elems))
                            .collect(),
                    )
                } else {
                    NodeFinal::Data(initial_buffer(rank, m_elems))
                }
            }
            CollectiveOp::Broadcast => {
                NodeFinal::Data((0..m_elems).map(|e| Elem::single(root, e)).collect())
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
struct NodeState {
    data: Vec<Elem>,
    heard: BTreeSet<u64>,
    /// Flat ids of the sources whose blocks the buffer currently holds, in
    /// buffer order. Pre-computable from the maps alone; the executor uses
    /// it the way a real node uses its information lookup table.
    prov: Vec<u64>,
    snapshot: Vec<Elem>,
    prov_snapshot: Vec<u64>,
    acc: Vec<Elem>,
    gathered: Vec<Option<(Vec<Elem>, Vec<u64>)>>,
    chunks: BTreeMap<u32, Vec<Elem>>,
}

/// Extracts the all-to-all block for a destination digit: the buffer is
/// viewed as [source blocks][d][rest] and the middle index selected.
fn a2a_block(buf: &[Elem], groups: usize, d: usize, digit: usize) -> Vec<Elem> {
    let rest = buf.len() / (groups * d);
    let mut out = Vec::with_capacity(groups * rest);
    for g in 0..groups {
        let start = (g * d + digit) * rest;
        out.extend_from_slice(&buf[start..start + rest]);
    }
    out
}

/// Executes a schedule on symbolic payloads. The plan must be built with
/// one-byte elements so byte indices coincide with element indices.
///
/// Returns the final state of every node, indexed by collective rank.
pub fn execute_schedule(plan: &CollectivePlan, schedule: &Schedule) -> Result<Vec<NodeFinal>> {
    let p = &plan.params;
    let variant = plan.variant;
    if plan.elem_bytes != 1 {
        return Err(Error::Unsupported(
            "functional execution requires one-byte elements".to_string(),
        ));
    }
    let n = p.nodes();
    let m = plan.msg_bytes;
    let rank_of: Vec<u64> = p.all_nodes().map(|c| collective_rank(c, p, variant)).collect();
    let root_flat = p
        .all_nodes()
        .position(|c| collective_rank(c, p, variant) == plan.root)
        .unwrap_or(0) as u64;

    let mut state: Vec<NodeState> = (0..n)
        .map(|flat| {
            let rank = rank_of[flat as usize];
            let mut st = NodeState { prov: vec![flat], ..Default::default() };
            match plan.op {
                CollectiveOp::Barrier => {
                    st.heard.insert(rank);
                }
                CollectiveOp::Scatter | CollectiveOp::Broadcast => {
                    if flat == root_flat {
                        st.data = initial_buffer(rank, m);
                    }
                }
                _ => st.data = initial_buffer(rank, m),
            }
            st
        })
        .collect();
    let initial: Vec<Vec<Elem>> = state.iter().map(|s| s.data.clone()).collect();

    for (idx, step) in plan.steps.iter().enumerate() {
        let sstep = schedule
            .steps
            .get(idx)
            .ok_or_else(|| Error::ShapeMismatch("schedule shorter than plan".to_string()))?;
        // Logical messages: transceiver stripes of one pair collapse.
        let mut messages: BTreeSet<(u64, u64, Option<u32>)> = BTreeSet::new();
        for t in &sstep.transfers {
            messages.insert((t.src.flat_index(p), t.dst.flat_index(p), t.chunk));
        }
        let digit =
            |flat: u64| info_portion(p.coord_of_flat(flat), step.family, p, variant) as usize;
        let d = step.d as usize;
        let first_round = step.round.map(|(r, _)| r == 1).unwrap_or(true);
        let last_round = step.round.map(|(r, total)| r == total).unwrap_or(true);

        match step.exchange {
            ExchangeKind::Signal => {
                let outgoing: Vec<BTreeSet<u64>> =
                    state.iter().map(|s| s.heard.clone()).collect();
                for (src, dst, _) in &messages {
                    let heard = outgoing[*src as usize].clone();
                    state[*dst as usize].heard.extend(heard);
                }
            }
            ExchangeKind::SegmentScatter => {
                if first_round {
                    for st in state.iter_mut() {
                        st.snapshot = std::mem::take(&mut st.data);
                        st.acc.clear();
                    }
                }
                let mut incoming: Vec<Vec<(u64, Vec<Elem>)>> = vec![Vec::new(); n as usize];
                for (src, dst, _) in &messages {
                    let buf = &state[*src as usize].snapshot;
                    if buf.is_empty() {
                        return Err(Error::OracleMismatch(format!(
                            "node {src} transmits at step {idx} without data"
                        )));
                    }
                    if buf.len() % d != 0 {
                        return Err(Error::ShapeMismatch(format!(
                            "buffer of {} elems does not split {d} ways",
                            buf.len()
                        )));
                    }
                    let seg = buf.len() / d;
                    let w = digit(*dst);
                    incoming[*dst as usize]
                        .push((*src, buf[w * seg..(w + 1) * seg].to_vec()));
                }
                for flat in 0..n as usize {
                    let own_digit = digit(flat as u64);
                    let holder = !state[flat].snapshot.is_empty();
                    let inc = std::mem::take(&mut incoming[flat]);
                    match step.local_op {
                        LocalOp::Reduce => {
                            if state[flat].acc.is_empty() && holder {
                                let buf = &state[flat].snapshot;
                                let seg = buf.len() / d;
                                state[flat].acc =
                                    buf[own_digit * seg..(own_digit + 1) * seg].to_vec();
                            }
                            for (_, seg) in inc {
                                if state[flat].acc.is_empty() {
                                    state[flat].acc = seg;
                                } else {
                                    if state[flat].acc.len() != seg.len() {
                                        return Err(Error::ShapeMismatch(format!(
                                            "reduce lengths differ at node {flat}"
                                        )));
                                    }
                                    for (a, b) in state[flat].acc.iter_mut().zip(seg.iter()) {
                                        a.merge_from(b);
                                    }
                                }
                            }
                        }
                        _ => {
                            // Scatter: keep own segment if a holder, else
                            // adopt the received piece.
                            if holder && state[flat].acc.is_empty() {
                                let buf = &state[flat].snapshot;
                                let seg = buf.len() / d;
                                state[flat].acc =
                                    buf[own_digit * seg..(own_digit + 1) * seg].to_vec();
                            }
                            for (_, seg) in inc {
                                state[flat].acc = seg;
                            }
                        }
                    }
                }
                if last_round {
                    for st in state.iter_mut() {
                        st.data = std::mem::take(&mut st.acc);
                        st.snapshot.clear();
                    }
                }
            }
            ExchangeKind::BlockGather => {
                if first_round {
                    for st in state.iter_mut() {
                        st.snapshot = std::mem::take(&mut st.data);
                        st.gathered = vec![None; d];
                    }
                }
                for (src, dst, _) in &messages {
                    let block = state[*src as usize].snapshot.clone();
                    if block.is_empty() {
                        return Err(Error::OracleMismatch(format!(
                            "node {src} gathers nothing at step {idx}"
                        )));
                    }
                    let w = digit(*src);
                    state[*dst as usize].gathered[w] = Some((block, Vec::new()));
                }
                if last_round {
                    for flat in 0..n as usize {
                        let own = digit(flat as u64);
                        let had_incoming =
                            state[flat].gathered.iter().any(|b| b.is_some());
                        if !step.rooted || had_incoming {
                            // Completing node: own block joins the received
                            // ones, ordered by digit.
                            if state[flat].snapshot.is_empty() {
                                return Err(Error::OracleMismatch(format!(
                                    "node {flat} gathers with an empty buffer"
                                )));
                            }
                            state[flat].gathered[own] =
                                Some((state[flat].snapshot.clone(), Vec::new()));
                            let mut out = Vec::new();
                            for (w, b) in state[flat].gathered.iter_mut().enumerate() {
                                match b.take() {
                                    Some((block, _)) => out.extend(block),
                                    None => {
                                        return Err(Error::OracleMismatch(format!(
                                            "node {flat} missing gather block {w}"
                                        )))
                                    }
                                }
                            }
                            state[flat].data = out;
                        } else {
                            // Non-parent in a rooted gather: carries its
                            // buffer unchanged.
                            state[flat].data = std::mem::take(&mut state[flat].snapshot);
                        }
                        state[flat].gathered.clear();
                        state[flat].snapshot.clear();
                    }
                }
            }
            ExchangeKind::BlockExchange => {
                if first_round {
                    for st in state.iter_mut() {
                        st.snapshot = std::mem::take(&mut st.data);
                        st.prov_snapshot = std::mem::take(&mut st.prov);
                        st.gathered = vec![None; d];
                    }
                }
                for (src, dst, _) in &messages {
                    let g = state[*src as usize].prov_snapshot.len();
                    let buf = &state[*src as usize].snapshot;
                    if g == 0 || buf.len() % (g * d) != 0 {
                        return Err(Error::ShapeMismatch(format!(
                            "all-to-all buffer of {} elems does not split {}x{} ways",
                            buf.len(),
                            g,
                            d
                        )));
                    }
                    let block = a2a_block(buf, g, d, digit(*dst));
                    let prov = state[*src as usize].prov_snapshot.clone();
                    state[*dst as usize].gathered[digit(*src)] = Some((block, prov));
                }
                if last_round {
                    for flat in 0..n as usize {
                        let own = digit(flat as u64);
                        let g = state[flat].prov_snapshot.len();
                        let buf = state[flat].snapshot.clone();
                        if buf.is_empty() {
                            continue;
                        }
                        let own_prov = state[flat].prov_snapshot.clone();
                        state[flat].gathered[own] =
                            Some((a2a_block(&buf, g, d, own), own_prov));
                        // Re-order the d·g source blocks by collective rank
                        // of their origin; the information map pre-computes
                        // this placement offline.
                        let rest = buf.len() / (g * d);
                        let mut entries: Vec<(u64, Vec<Elem>)> = Vec::with_capacity(g * d);
                        for (w, slot) in state[flat].gathered.iter().enumerate() {
                            let (block, prov) = slot.as_ref().ok_or_else(|| {
                                Error::OracleMismatch(format!(
                                    "node {flat} missing all-to-all block {w}"
                                ))
                            })?;
                            for (gi, origin) in prov.iter().enumerate() {
                                entries.push((
                                    *origin,
                                    block[gi * rest..(gi + 1) * rest].to_vec(),
                                ));
                            }
                        }
                        entries.sort_by_key(|(origin, _)| rank_of[*origin as usize]);
                        let mut out = Vec::with_capacity(buf.len());
                        let mut prov = Vec::with_capacity(g * d);
                        for (origin, chunk) in entries {
                            prov.push(origin);
                            out.extend(chunk);
                        }
                        state[flat].data = out;
                        state[flat].prov = prov;
                        state[flat].gathered.clear();
                        state[flat].snapshot.clear();
                        state[flat].prov_snapshot.clear();
                    }
                }
            }
            ExchangeKind::BroadcastStage => {
                // Seed the root's chunks lazily.
                let bp = plan.broadcast.expect("broadcast plan");
                if state[root_flat as usize].chunks.is_empty()
                    && !state[root_flat as usize].data.is_empty()
                {
                    let per = bp.per_stage_bytes as usize;
                    let data = state[root_flat as usize].data.clone();
                    for c in 0..bp.k as usize {
                        let lo = c * per;
                        let hi = ((c + 1) * per).min(data.len());
                        state[root_flat as usize]
                            .chunks
                            .insert(c as u32, data[lo..hi.max(lo)].to_vec());
                    }
                }
                for (src, dst, chunk) in &messages {
                    let c = chunk.ok_or_else(|| {
                        Error::ShapeMismatch("broadcast transfer without chunk".to_string())
                    })?;
                    let payload = state[*src as usize].chunks.get(&c).cloned().ok_or_else(
                        || {
                            Error::OracleMismatch(format!(
                                "node {src} relays chunk {c} before receiving it"
                            ))
                        },
                    )?;
                    state[*dst as usize].chunks.insert(c, payload);
                }
            }
        }
    }

    // Broadcast: materialize chunk maps into buffers.
    if plan.op == CollectiveOp::Broadcast {
        let k = plan.broadcast.map(|b| b.k).unwrap_or(1) as u32;
        for (flat, st) in state.iter_mut().enumerate() {
            if flat as u64 == root_flat {
                continue;
            }
            let mut out = Vec::new();
            for c in 0..k {
                let chunk = st.chunks.get(&c).ok_or_else(|| {
                    Error::OracleMismatch(format!("node {flat} missing broadcast chunk {c}"))
                })?;
                out.extend(chunk.iter().cloned());
            }
            st.data = out;
        }
    }
    // Rooted gather-style collectives leave non-root inputs untouched.
    if matches!(plan.op, CollectiveOp::Gather | CollectiveOp::Reduce) {
        for flat in 0..n as usize {
            if flat as u64 != root_flat {
                state[flat].data = initial[flat].clone();
            }
        }
    }

    // Order final states by collective rank.
    let mut by_rank: Vec<(u64, NodeFinal)> = state
        .into_iter()
        .enumerate()
        .map(|(flat, st)| {
            let rank = rank_of[flat];
            let fin = if plan.op == CollectiveOp::Barrier {
                NodeFinal::Heard(st.heard)
            } else {
                NodeFinal::Data(st.data)
            };
            (rank, fin)
        })
        .collect();
    by_rank.sort_by_key(|(r, _)| *r);
    Ok(by_rank.into_iter().map(|(_, f)| f).collect())
}

/// Compares an executed schedule against the brute-force oracle; reports
/// the first divergent node on failure.
pub fn check_against_oracle(
    plan: &CollectivePlan,
    got: &[NodeFinal],
) -> Result<()> {
    let n = plan.params.nodes();
    let want = oracle(plan.op, n, plan.msg_bytes, plan.root);
    for rank in 0..n as usize {
        if got[rank] != want[rank] {
            return Err(Error::OracleMismatch(format!(
                "op {} rank {rank}: expected {}, got {}",
                plan.op,
                summarize(&want[rank]),
                summarize(&got[rank]),
            )));
        }
    }
    Ok(())
}

fn summarize(f: &NodeFinal) -> String {
    match f {
        NodeFinal::Heard(h) => format!("heard {} peers", h.len()),
        NodeFinal::Data(d) => {
            let tokens: u64 = d.iter().map(|e| e.token_count()).sum();
            let head: Vec<String> = d
                .iter()
                .take(2)
                .map(|e| {
                    let toks: Vec<String> =
                        e.0.iter().map(|((o, s), c)| format!("{o}:{s}x{c}")).collect();
                    format!("[{}]", toks.join(","))
                })
                .collect();
            format!("{} elems / {} tokens, head {}", d.len(), tokens, head.join(" "))
        }
    }
}

/// Plans, schedules, executes and verifies one collective end to end:
/// schedule-level functional equivalence with the oracle plus an empty
/// contention report.
pub fn verify_ramp_collective(
    op: CollectiveOp,
    p: &RampParams,
    variant: Variant4,
) -> Result<()> {
    use crate::engine::plan::plan_collective_rooted;
    use crate::transcoder::{build_schedule, verify_contention, ScheduleConfig};

    let n = p.nodes();
    let m = match op {
        CollectiveOp::Barrier => 0,
        CollectiveOp::AllGather | CollectiveOp::Gather => n.min(8),
        CollectiveOp::Broadcast => 2 * n,
        _ => n,
    };
    let root = if op.has_root() { n / 3 } else { 0 };
    let plan = plan_collective_rooted(op, m, p, variant, root, 1)?;
    let schedule = build_schedule(&plan, &ScheduleConfig::default())?;
    let report = verify_contention(&schedule, p.subnet);
    if !report.is_empty() {
        return Err(Error::Contention(format!(
            "{} violations, first: {:?}",
            report.violations.len(),
            report.violations[0]
        )));
    }
    let got = execute_schedule(&plan, &schedule)?;
    check_against_oracle(&plan, &got)
}

/// Token conservation audit used by property tests: total token count of a
/// state vector.
pub fn total_tokens(states: &[NodeFinal]) -> u64 {
    states
        .iter()
        .map(|s| match s {
            NodeFinal::Data(d) => d.iter().map(|e| e.token_count()).sum(),
            NodeFinal::Heard(h) => h.len() as u64,
        })
        .sum()
}

pub fn node_of_rank_label(p: &RampParams, variant: Variant4, rank: u64) -> NodeCoord {
    crate::engine::subgroups::node_of_rank(rank, p, variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::plan::plan_collective_rooted;
    use crate::transcoder::{build_schedule, ScheduleConfig};

    #[test]
    fn reduce_merges_sources_numerically() {
        // Three sources contributing [1,1], [2,2], [3,3] reduce to [6,6].
        let mut a = Elem::single(0, 0);
        a.merge_from(&Elem::single(1, 0));
        a.merge_from(&Elem::single(2, 0));
        let value = |origin: u64, _seg: u64| (origin + 1) as f64;
        assert_eq!(a.numeric(value), 6.0);
        assert_eq!(a.token_count(), 3);
    }

    #[test]
    fn identity_oracle_for_single_node() {
        let got = oracle(CollectiveOp::AllReduce, 1, 4, 0);
        assert_eq!(got[0], NodeFinal::Data(initial_buffer(0, 4)));
    }

    #[test]
    fn all_to_all_oracle_is_a_transpose() {
        // N=3, one segment each: node i ends with segment i of every node
        // in source order.
        let got = oracle(CollectiveOp::AllToAll, 3, 3, 0);
        for (i, st) in got.iter().enumerate() {
            let NodeFinal::Data(d) = st else { panic!() };
            for (j, e) in d.iter().enumerate() {
                assert_eq!(e, &Elem::single(j as u64, i as u64));
            }
        }
    }

    #[test]
    fn scatter_oracle_hands_each_node_its_segment() {
        let got = oracle(CollectiveOp::Scatter, 4, 8, 0);
        let NodeFinal::Data(d) = &got[2] else { panic!() };
        assert_eq!(d.len(), 2);
        assert_eq!(d[0], Elem::single(0, 4));
    }

    #[test]
    fn reduce_scatter_segments_are_reshaped_thirds() {
        // A 54-element buffer reshapes into 3 contiguous segments of 18;
        // after step 1 every node keeps exactly one of them.
        let p = RampParams::new(3, 3, 6, 1, 400_000_000_000).unwrap();
        let plan = plan_collective_rooted(
            CollectiveOp::ReduceScatter,
            54,
            &p,
            Variant4::DeviceShift,
            0,
            1,
        )
        .unwrap();
        assert_eq!(plan.steps[0].input_bytes / plan.steps[0].d as u64, 18);
        let schedule = build_schedule(&plan, &ScheduleConfig::default()).unwrap();
        let got = execute_schedule(&plan, &schedule).unwrap();
        check_against_oracle(&plan, &got).unwrap();
        if let NodeFinal::Data(d) = &got[0] {
            assert_eq!(d.len(), 1);
            assert_eq!(d[0].token_count(), 54);
        }
    }

    #[test]
    fn divergence_reports_the_offending_node() {
        let p = RampParams::new(2, 1, 2, 1, 400_000_000_000).unwrap();
        let plan = plan_collective_rooted(
            CollectiveOp::ReduceScatter,
            4,
            &p,
            Variant4::DeviceShift,
            0,
            1,
        )
        .unwrap();
        let mut schedule = build_schedule(&plan, &ScheduleConfig::default()).unwrap();
        // Drop one transfer: the receiver misses a contribution.
        schedule.steps[0].transfers.pop();
        schedule.steps[0].transfers.pop();
        let got = execute_schedule(&plan, &schedule).unwrap();
        let err = check_against_oracle(&plan, &got).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("rank"), "dump should name the divergent node: {msg}");
    }
}
