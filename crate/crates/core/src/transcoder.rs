//! Translates a collective plan into a physical schedule: transceiver
//! group, subnet, wavelength and timeslot per transfer, plus the
//! contention verifier that certifies the result.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::plan::{CollectivePlan, CollectiveOp, ExchangeKind, PlanStep};
use crate::engine::subgroups::{info_portion, subgroup_members, Step, Variant4};
use crate::error::{Error, Result};
use crate::params::{min_message_per_slot, NodeCoord, RampParams, SubnetKind};

/// One transceiver's share of a pair communication in one step.
#[derive(Debug, Clone)]
pub struct Transfer {
    /// Index into the plan's step list.
    pub step_idx: usize,
    pub src: NodeCoord,
    pub dst: NodeCoord,
    pub trx_group: u32,
    pub trx_in_group: u32,
    pub wavelength: u32,
    pub slot_start: u64,
    pub slot_count: u64,
    /// Bytes carried by this transceiver.
    pub bytes: u64,
    /// Total bytes of the (src, dst) pair this row belongs to.
    pub pair_bytes: u64,
    /// Broadcast pipeline chunk carried, when applicable.
    pub chunk: Option<u32>,
}

impl Transfer {
    /// Subnet identifier (g_src, g_dst, transceiver group).
    pub fn subnet(&self) -> (u32, u32, u32) {
        (self.src.g, self.dst.g, self.trx_group)
    }

    fn overlaps(&self, other: &Transfer) -> bool {
        let a0 = self.slot_start;
        let a1 = self.slot_start + self.slot_count;
        let b0 = other.slot_start;
        let b1 = other.slot_start + other.slot_count;
        a0 < b1 && b0 < a1
    }
}

/// All transfers of one plan step, aligned to synchronized slot epochs.
#[derive(Debug, Clone)]
pub struct ScheduleStep {
    pub plan_step: usize,
    pub transfers: Vec<Transfer>,
    pub slot_start: u64,
    pub slot_span: u64,
}

#[derive(Debug, Clone)]
pub struct Schedule {
    pub params: RampParams,
    pub variant: Variant4,
    pub op: CollectiveOp,
    pub slot_ns: u64,
    pub reconfig_ns: u64,
    pub io_latency_ns: u64,
    /// Payload bytes one transceiver carries per slot.
    pub payload_per_slot: u64,
    pub steps: Vec<ScheduleStep>,
    /// Set when some message needed padding up to the one-slot minimum.
    pub sub_slot_padding: bool,
}

impl Schedule {
    pub fn total_slots(&self) -> u64 {
        self.steps.last().map(|s| s.slot_start + s.slot_span).unwrap_or(0)
    }

    pub fn transfer_count(&self) -> usize {
        self.steps.iter().map(|s| s.transfers.len()).sum()
    }

    /// CSV export, one transfer per row; the golden-file regression format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "step,src,dst,trx_group,trx_in_group,g_src,g_dst,wavelength,slot_start,slot_count,bytes\n",
        );
        for step in &self.steps {
            for t in &step.transfers {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    t.step_idx,
                    t.src.flat_index(&self.params),
                    t.dst.flat_index(&self.params),
                    t.trx_group,
                    t.trx_in_group,
                    t.src.g,
                    t.dst.g,
                    t.wavelength,
                    t.slot_start,
                    t.slot_count,
                    t.bytes
                ));
            }
        }
        out
    }
}

/// Timeslot, reconfiguration and epoch parameters for schedule building.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleConfig {
    pub slot_ns: u64,
    pub overhead_fraction: f64,
    pub reconfig_ns: u64,
    pub io_latency_ns: u64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            slot_ns: 20,
            overhead_fraction: 0.05,
            reconfig_ns: 20,
            io_latency_ns: 100,
        }
    }
}

/// Transceiver group for a source-destination pair:
/// (g_src + g_dst + j_src) mod x.
pub fn transceiver_group(src: NodeCoord, dst: NodeCoord, p: &RampParams) -> u32 {
    ((src.g as u64 + dst.g as u64 + src.j as u64) % p.x as u64) as u32
}

/// Extra transceiver groups usable per pair when the subgroup is smaller
/// than the communication-group count:
/// ⌊(x − ⌊x/d⌋·(d−1)) / (d−1)⌋.
pub fn additional_trx(d: u32, x: u32) -> Result<u32> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("subgroup size must be >= 2, got {d}")));
    }
    let used = (x / d) as u64 * (d as u64 - 1);
    let free = (x as u64).saturating_sub(used);
    Ok((free / (d as u64 - 1)) as u32)
}

/// Effective unidirectional I/O bandwidth of a node exchanging with a
/// subgroup of `d` nodes: B·b·(1 + extra)·(d − 1).
pub fn effective_io_bw_bps(p: &RampParams, d: u32) -> u64 {
    if d < 2 {
        return 0;
    }
    let extra = additional_trx(d, p.x).unwrap_or(0);
    p.line_rate_bps * p.b as u64 * (1 + extra as u64) * (d as u64 - 1)
}

/// Per-pair effective bandwidth: B·b·(1 + extra).
pub fn effective_pair_bw_bps(p: &RampParams, d: u32) -> u64 {
    if d < 2 {
        return 0;
    }
    let extra = additional_trx(d, p.x).unwrap_or(0);
    p.line_rate_bps * p.b as u64 * (1 + extra as u64)
}

/// Wavelength channel for a pair. Broadcast-select fabrics receive at the
/// destination's fixed wavelength; wavelength-routed fabrics follow the
/// cyclic AWGR relation (λ_src + λ_dst) mod Λ.
pub fn wavelength_for(src: NodeCoord, dst: NodeCoord, kind: SubnetKind, lambda: u32) -> u32 {
    match kind {
        SubnetKind::BroadcastSelect => dst.lam,
        SubnetKind::RouteBroadcast | SubnetKind::RouteSwitch => {
            ((src.lam as u64 + dst.lam as u64) % lambda as u64) as u32
        }
    }
}

#[derive(Debug, Clone)]
struct Pair {
    src: NodeCoord,
    dst: NodeCoord,
    bytes: u64,
    chunk: Option<u32>,
    /// Transceiver groups granted to the pair.
    trx: Vec<u32>,
    wave: u32,
}

/// Grants each pair up to `target` transceiver groups such that no node
/// reuses a group for two peers in one wave and no subnet carries the same
/// wavelength twice. Pairs that cannot be fully served in a wave continue
/// in the next one.
fn assign_transceivers(
    pairs: &mut [Pair],
    p: &RampParams,
    target: u32,
    kind: SubnetKind,
) {
    let x = p.x;
    let mut remaining: Vec<u32> = vec![target; pairs.len()];
    let mut wave = 0u32;
    loop {
        let pending: Vec<usize> =
            (0..pairs.len()).filter(|i| remaining[*i] > 0 && pairs[*i].trx.is_empty()).collect();
        let growing: Vec<usize> = (0..pairs.len()).filter(|i| remaining[*i] > 0).collect();
        if growing.is_empty() {
            break;
        }
        let mut src_used: BTreeSet<(u64, u32)> = BTreeSet::new();
        let mut dst_used: BTreeSet<(u64, u32)> = BTreeSet::new();
        let mut subnet_used: BTreeSet<(u32, u32, u32, u32)> = BTreeSet::new();
        let mut granted_this_wave = false;
        // Round-robin: one grant per pair per pass until nothing moves.
        loop {
            let mut progressed = false;
            for &i in &growing {
                if remaining[i] == 0 {
                    continue;
                }
                let base = transceiver_group(pairs[i].src, pairs[i].dst, p);
                let w = wavelength_for(pairs[i].src, pairs[i].dst, kind, p.lambda);
                let sf = pairs[i].src.flat_index(p);
                let df = pairs[i].dst.flat_index(p);
                let found = (0..x).map(|off| (base + off) % x).find(|t| {
                    !src_used.contains(&(sf, *t))
                        && !dst_used.contains(&(df, *t))
                        && !subnet_used.contains(&(pairs[i].src.g, pairs[i].dst.g, *t, w))
                        && !pairs[i].trx.contains(t)
                });
                if let Some(t) = found {
                    src_used.insert((sf, t));
                    dst_used.insert((df, t));
                    subnet_used.insert((pairs[i].src.g, pairs[i].dst.g, t, w));
                    if pairs[i].trx.is_empty() {
                        pairs[i].wave = wave;
                    }
                    if pairs[i].wave == wave {
                        pairs[i].trx.push(t);
                        remaining[i] -= 1;
                        progressed = true;
                        granted_this_wave = true;
                    }
                }
            }
            if !progressed {
                break;
            }
        }
        // A pair that received nothing across a full wave while still empty
        // would loop forever; that cannot happen (its endpoints free up in
        // a fresh wave), but guard anyway.
        if !granted_this_wave {
            debug_assert!(pending.is_empty(), "transceiver assignment stalled");
            break;
        }
        // Pairs that got some groups this wave are done growing; they keep
        // what they have (slot math uses the actual grant).
        for &i in &growing {
            if !pairs[i].trx.is_empty() {
                remaining[i] = 0;
            }
        }
        wave += 1;
    }
}

/// Forward holder chain for rooted collectives: holders[t] is the set of
/// nodes carrying data after `t` forward steps.
pub fn holder_chain(
    root: NodeCoord,
    families: &[Step],
    p: &RampParams,
    variant: Variant4,
) -> Vec<BTreeSet<NodeCoord>> {
    let mut chain = vec![BTreeSet::from([root])];
    for fam in families {
        let prev = chain.last().unwrap().clone();
        let mut next = BTreeSet::new();
        for h in prev {
            for m in subgroup_members(h, *fam, p, variant).expect("active family") {
                next.insert(m);
            }
        }
        chain.push(next);
    }
    chain
}

/// Enumerates the (src, dst, bytes) pairs of one plan step.
fn step_pairs(
    plan: &CollectivePlan,
    step: &PlanStep,
    p: &RampParams,
    chain: Option<&Vec<BTreeSet<NodeCoord>>>,
    forward_pos: usize,
    backward: bool,
) -> Result<Vec<Pair>> {
    let variant = plan.variant;
    let mut pairs = Vec::new();
    let mut seen_groups: BTreeSet<u64> = BTreeSet::new();
    for node in p.all_nodes() {
        let id = crate::engine::subgroups::subgroup_id(node, step.family, p, variant)?;
        if !seen_groups.insert(id) {
            continue;
        }
        let members = subgroup_members(node, step.family, p, variant)?;
        let digit_of = |n: NodeCoord| info_portion(n, step.family, p, variant);
        match (step.rooted, backward) {
            (false, _) => {
                if let Some((r, _)) = step.round {
                    // One-to-one rounds: q -> q + r by digit.
                    let by_digit: BTreeMap<u32, NodeCoord> =
                        members.iter().map(|m| (digit_of(*m), *m)).collect();
                    let d = step.d;
                    for (q, src) in &by_digit {
                        let dst = by_digit[&((q + r) % d)];
                        pairs.push(Pair {
                            src: *src,
                            dst,
                            bytes: step.bytes_per_pair,
                            chunk: None,
                            trx: Vec::new(),
                            wave: 0,
                        });
                    }
                } else {
                    for src in &members {
                        for dst in &members {
                            if src != dst {
                                pairs.push(Pair {
                                    src: *src,
                                    dst: *dst,
                                    bytes: step.bytes_per_pair,
                                    chunk: None,
                                    trx: Vec::new(),
                                    wave: 0,
                                });
                            }
                        }
                    }
                }
            }
            (true, false) => {
                // Scatter flow: only current holders distribute.
                let holders = &chain.expect("rooted step needs holder chain")[forward_pos];
                let sg_holders: Vec<&NodeCoord> =
                    members.iter().filter(|m| holders.contains(m)).collect();
                debug_assert!(sg_holders.len() <= 1, "holder sets must be disjoint");
                if let Some(&&h) = sg_holders.first() {
                    if let Some((r, _)) = step.round {
                        let by_digit: BTreeMap<u32, NodeCoord> =
                            members.iter().map(|m| (digit_of(*m), *m)).collect();
                        let dst = by_digit[&((digit_of(h) + r) % step.d)];
                        if dst != h {
                            pairs.push(Pair {
                                src: h,
                                dst,
                                bytes: step.bytes_per_pair,
                                chunk: None,
                                trx: Vec::new(),
                                wave: 0,
                            });
                        }
                    } else {
                        for dst in &members {
                            if *dst != h {
                                pairs.push(Pair {
                                    src: h,
                                    dst: *dst,
                                    bytes: step.bytes_per_pair,
                                    chunk: None,
                                    trx: Vec::new(),
                                    wave: 0,
                                });
                            }
                        }
                    }
                }
            }
            (true, true) => {
                // Gather flow: members funnel into the parent holder.
                // Subgroups without a parent are idle at this depth.
                let parents = &chain.expect("rooted step needs holder chain")[forward_pos];
                let sg_parents: Vec<&NodeCoord> =
                    members.iter().filter(|m| parents.contains(m)).collect();
                debug_assert!(sg_parents.len() <= 1, "gather parents must be unique");
                let Some(&&parent) = sg_parents.first() else {
                    continue;
                };
                if let Some((r, _)) = step.round {
                    let by_digit: BTreeMap<u32, NodeCoord> =
                        members.iter().map(|m| (digit_of(*m), *m)).collect();
                    let pq = digit_of(parent);
                    let src = by_digit[&((pq + step.d - r % step.d) % step.d)];
                    if src != parent {
                        pairs.push(Pair {
                            src,
                            dst: parent,
                            bytes: step.bytes_per_pair,
                            chunk: None,
                            trx: Vec::new(),
                            wave: 0,
                        });
                    }
                } else {
                    for src in &members {
                        if *src != parent {
                            pairs.push(Pair {
                                src: *src,
                                dst: parent,
                                bytes: step.bytes_per_pair,
                                chunk: None,
                                trx: Vec::new(),
                                wave: 0,
                            });
                        }
                    }
                }
            }
        }
    }
    pairs.sort_by_key(|pr| (pr.src.flat_index(p), pr.dst.flat_index(p)));
    Ok(pairs)
}

/// Broadcast stage pairs: the root stripes each chunk across its x
/// transceiver groups to every relay (same node number, all racks and
/// groups); relays forward earlier chunks to their assigned wavelengths.
fn broadcast_stage_pairs(
    plan: &CollectivePlan,
    p: &RampParams,
    root: NodeCoord,
    stage: u32,
) -> Vec<Pair> {
    let bp = plan.broadcast.expect("broadcast plan");
    let k = bp.k as u32;
    let mut pairs = Vec::new();
    let relays: Vec<NodeCoord> = p
        .all_nodes()
        .filter(|n| n.lam == root.lam && *n != root)
        .collect();
    let chunk_bytes = |c: u32| -> u64 {
        if c + 1 == k {
            plan.msg_bytes - bp.per_stage_bytes * (k as u64 - 1)
        } else {
            bp.per_stage_bytes
        }
    };
    // Root multicast of chunk `stage`.
    if stage < k {
        for dst in &relays {
            pairs.push(Pair {
                src: root,
                dst: *dst,
                bytes: chunk_bytes(stage),
                chunk: Some(stage),
                trx: Vec::new(),
                wave: 0,
            });
        }
    }
    // Relay multicast of chunk `stage - 1` to the remaining wavelengths.
    if stage >= 1 && stage - 1 < k && !relays.is_empty() {
        let wavelengths: Vec<u32> = (0..p.lambda).filter(|w| *w != root.lam).collect();
        for (i, w) in wavelengths.iter().enumerate() {
            let relay = relays[i % relays.len()];
            for dst in p.all_nodes().filter(|n| n.lam == *w) {
                pairs.push(Pair {
                    src: relay,
                    dst,
                    bytes: chunk_bytes(stage - 1),
                    chunk: Some(stage - 1),
                    trx: Vec::new(),
                    wave: (i / relays.len()) as u32,
                });
            }
        }
    }
    pairs
}

/// Builds the physical schedule for a plan.
pub fn build_schedule(plan: &CollectivePlan, cfg: &ScheduleConfig) -> Result<Schedule> {
    let p = &plan.params;
    let payload = min_message_per_slot(p.line_rate_bps, cfg.slot_ns, cfg.overhead_fraction);
    if payload == 0 {
        return Err(Error::InvalidParameter("slot too short for any payload".to_string()));
    }
    let variant = plan.variant;
    let forward = plan.active_families();
    let chain = if plan.op.has_root() && plan.op != CollectiveOp::Broadcast {
        let root = crate::engine::subgroups::node_of_rank(plan.root, p, variant);
        Some(holder_chain(root, &forward, p, variant))
    } else {
        None
    };

    let mut steps = Vec::new();
    let mut cursor = 0u64;
    let mut sub_slot_padding = false;

    // Forward position bookkeeping: how many forward family steps have
    // completed before each plan step (pairwise rounds advance it once,
    // after the last round).
    let mut fwd_done = 0usize;
    let mut bwd_seen = 0usize;

    for (idx, step) in plan.steps.iter().enumerate() {
        let mut pairs = if step.exchange == ExchangeKind::BroadcastStage {
            let root = crate::engine::subgroups::node_of_rank(plan.root, p, variant);
            broadcast_stage_pairs(plan, p, root, step.round.unwrap().0 - 1)
        } else {
            let backward = step.exchange == ExchangeKind::BlockGather;
            let pos = if backward {
                // Gather steps run families in reverse: parents sit at the
                // chain entry matching the number of families still ahead.
                forward.len() - 1 - bwd_seen
            } else {
                fwd_done
            };
            step_pairs(plan, step, p, chain.as_ref(), pos, backward)?
        };

        // Per-pair transceiver target.
        let target = if step.exchange == ExchangeKind::BroadcastStage {
            p.x
        } else if variant == Variant4::Pairwise && step.family == Step::S4 && step.round.is_some()
        {
            // Formula-1 last step uses every transceiver group per pair.
            p.x
        } else {
            1 + additional_trx(step.d.max(2), p.x).unwrap_or(0)
        };
        assign_transceivers(&mut pairs, p, target, p.subnet);

        // Slot accounting: synchronized epochs sized by the slowest pair.
        let mut max_slots = 1u64;
        for pr in &pairs {
            let n_trx = (pr.trx.len() as u64).max(1) * p.b as u64;
            let slots = pr.bytes.div_ceil(payload * n_trx).max(1);
            if pr.bytes > 0 && pr.bytes < payload {
                sub_slot_padding = true;
            }
            max_slots = max_slots.max(slots);
        }
        let n_waves = pairs.iter().map(|pr| pr.wave + 1).max().unwrap_or(1) as u64;

        let mut transfers = Vec::new();
        for pr in &pairs {
            let kind = p.subnet;
            let w = wavelength_for(pr.src, pr.dst, kind, p.lambda);
            let n = pr.trx.len().max(1) as u64 * p.b as u64;
            let slot_start = cursor + pr.wave as u64 * max_slots;
            let slot_count = pr.bytes.div_ceil(payload * n).max(1);
            let mut carried = 0u64;
            let mut lane = 0u64;
            for t in &pr.trx {
                for plane in 0..p.b {
                    let upto = pr.bytes * (lane + 1) / n;
                    transfers.push(Transfer {
                        step_idx: idx,
                        src: pr.src,
                        dst: pr.dst,
                        trx_group: *t,
                        trx_in_group: plane,
                        wavelength: w,
                        slot_start,
                        slot_count,
                        bytes: upto - carried,
                        pair_bytes: pr.bytes,
                        chunk: pr.chunk,
                    });
                    carried = upto;
                    lane += 1;
                }
            }
        }
        steps.push(ScheduleStep {
            plan_step: idx,
            transfers,
            slot_start: cursor,
            slot_span: n_waves * max_slots,
        });
        cursor += n_waves * max_slots;

        // Advance family bookkeeping.
        let last_round = step.round.map(|(r, total)| r == total).unwrap_or(true);
        if step.exchange == ExchangeKind::BlockGather {
            if last_round {
                bwd_seen += 1;
            }
        } else if step.exchange != ExchangeKind::BroadcastStage && last_round {
            fwd_done += 1;
        }
    }

    Ok(Schedule {
        params: *p,
        variant,
        op: plan.op,
        slot_ns: cfg.slot_ns,
        reconfig_ns: cfg.reconfig_ns,
        io_latency_ns: cfg.io_latency_ns,
        payload_per_slot: payload,
        steps,
        sub_slot_padding,
    })
}

/// A detected conflict on the optical fabric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subnet: (u32, u32, u32),
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Two transmitters drive the same wavelength in one coupler domain.
    WavelengthCollision,
    /// More concurrent transmissions than wavelength channels.
    CapacityExceeded,
    /// A receiver gate would have to admit two sources at once.
    ReceiverConflict,
    /// A transceiver would have to hold two states at once.
    TransmitterConflict,
}

#[derive(Debug, Clone, Default)]
pub struct ContentionReport {
    pub violations: Vec<Violation>,
}

impl ContentionReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a schedule against the contention rules of the given fabric.
pub fn verify_contention(schedule: &Schedule, kind: SubnetKind) -> ContentionReport {
    let mut report = ContentionReport::default();
    let p = &schedule.params;
    let all: Vec<&Transfer> =
        schedule.steps.iter().flat_map(|s| s.transfers.iter()).collect();

    // Subnet-level wavelength rules.
    let mut by_subnet: BTreeMap<(u32, u32, u32, u32), Vec<&Transfer>> = BTreeMap::new();
    for t in &all {
        let (a, b, c) = t.subnet();
        by_subnet.entry((a, b, c, t.trx_in_group)).or_default().push(t);
    }
    for ((gs, gd, tg, _plane), ts) in &by_subnet {
        for (i, a) in ts.iter().enumerate() {
            for b in &ts[i + 1..] {
                if !a.overlaps(b) || a.src == b.src {
                    continue;
                }
                let collides = match kind {
                    SubnetKind::BroadcastSelect => a.wavelength == b.wavelength,
                    SubnetKind::RouteBroadcast => {
                        a.wavelength == b.wavelength && a.dst.lam == b.dst.lam
                    }
                    SubnetKind::RouteSwitch => {
                        a.wavelength == b.wavelength
                            && a.dst.lam == b.dst.lam
                            && a.dst.j == b.dst.j
                    }
                };
                if collides {
                    report.violations.push(Violation {
                        kind: ViolationKind::WavelengthCollision,
                        subnet: (*gs, *gd, *tg),
                        detail: format!(
                            "{} and {} both drive wavelength {} (slots {}..{} / {}..{})",
                            a.src,
                            b.src,
                            a.wavelength,
                            a.slot_start,
                            a.slot_start + a.slot_count,
                            b.slot_start,
                            b.slot_start + b.slot_count
                        ),
                    });
                }
            }
        }
        if kind == SubnetKind::BroadcastSelect {
            // Concurrent transmissions per subnet never exceed Λ.
            let mut events: Vec<(u64, i64, (u64, u32))> = Vec::new();
            for t in ts {
                let key = (t.src.flat_index(p), t.wavelength);
                events.push((t.slot_start, 1, key));
                events.push((t.slot_start + t.slot_count, -1, key));
            }
            events.sort();
            let mut active: BTreeMap<(u64, u32), i64> = BTreeMap::new();
            for (_, delta, key) in events {
                *active.entry(key).or_insert(0) += delta;
                active.retain(|_, v| *v > 0);
                if active.len() as u64 > p.lambda as u64 {
                    report.violations.push(Violation {
                        kind: ViolationKind::CapacityExceeded,
                        subnet: (*gs, *gd, *tg),
                        detail: format!(
                            "{} concurrent transmissions exceed {} wavelength channels",
                            active.len(),
                            p.lambda
                        ),
                    });
                    break;
                }
            }
        }
    }

    // Receiver gates: one source per receiver per slot.
    let mut by_rx: BTreeMap<(u64, u32, u32), Vec<&Transfer>> = BTreeMap::new();
    for t in &all {
        by_rx
            .entry((t.dst.flat_index(p), t.trx_group, t.trx_in_group))
            .or_default()
            .push(t);
    }
    for ((_, tg, _), ts) in &by_rx {
        for (i, a) in ts.iter().enumerate() {
            for b in &ts[i + 1..] {
                if a.overlaps(b) && a.src != b.src {
                    report.violations.push(Violation {
                        kind: ViolationKind::ReceiverConflict,
                        subnet: (a.src.g, a.dst.g, *tg),
                        detail: format!(
                            "receiver {} trx {} hears {} and {}",
                            a.dst, tg, a.src, b.src
                        ),
                    });
                }
            }
        }
    }

    // Transmitter state: one wavelength (and payload) per transceiver per slot.
    let mut by_tx: BTreeMap<(u64, u32, u32), Vec<&Transfer>> = BTreeMap::new();
    for t in &all {
        by_tx
            .entry((t.src.flat_index(p), t.trx_group, t.trx_in_group))
            .or_default()
            .push(t);
    }
    for ((_, tg, _), ts) in &by_tx {
        for (i, a) in ts.iter().enumerate() {
            for b in &ts[i + 1..] {
                if a.overlaps(b) && (a.wavelength != b.wavelength || a.chunk != b.chunk) {
                    report.violations.push(Violation {
                        kind: ViolationKind::TransmitterConflict,
                        subnet: (a.src.g, a.dst.g, *tg),
                        detail: format!(
                            "transmitter {} trx {} asked for wavelengths {} and {}",
                            a.src, tg, a.wavelength, b.wavelength
                        ),
                    });
                }
                // Unicast steps must not fan out: same transceiver, same
                // slot, two destinations is multicast and only broadcast
                // chunks may do it.
                if a.overlaps(b) && a.chunk.is_none() && a.dst != b.dst {
                    report.violations.push(Violation {
                        kind: ViolationKind::TransmitterConflict,
                        subnet: (a.src.g, a.dst.g, *tg),
                        detail: format!("transmitter {} trx {} fans out without multicast", a.src, tg),
                    });
                }
            }
        }
    }

    report
}
