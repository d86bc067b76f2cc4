//! Optical power-budget walker and network cost/power calculators.
//!
//! Budget walking is plain dB bookkeeping over an ordered component chain;
//! feasibility requires the trace to stay above the minimum path power and
//! to reach the detector above its sensitivity. Cost and power reports
//! derive component counts from the topology structure and carry the
//! published unit-cost intervals end to end.

use crate::error::{Error, Result};
use crate::params::{RampParams, SubnetKind};

/// Detector sensitivity floor.
pub const RECEIVER_MIN_DBM: f64 = -15.0;
/// Minimum optical power anywhere along the path.
pub const PATH_MIN_DBM: f64 = -20.0;
/// Default SOA gain.
pub const SOA_GAIN_DB: f64 = 21.0;
/// Default AWGR insertion loss.
pub const AWGR_LOSS_DB: f64 = 5.0;
/// Default excess loss of splitters and couplers.
pub const EXCESS_LOSS_DB: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ChainElement {
    pub label: String,
    /// Gain (positive) or loss (negative) in dB.
    pub gain_db: f64,
}

impl ChainElement {
    pub fn new(label: impl Into<String>, gain_db: f64) -> Self {
        ChainElement { label: label.into(), gain_db }
    }

    pub fn splitter(ports: u32) -> Self {
        ChainElement::new(
            format!("splitter-1x{ports}"),
            -10.0 * (ports as f64).log10() - EXCESS_LOSS_DB,
        )
    }

    pub fn coupler(ports: u64) -> Self {
        ChainElement::new(
            format!("coupler-{ports}x{ports}"),
            -10.0 * (ports as f64).log10() - EXCESS_LOSS_DB,
        )
    }

    pub fn combiner(ports: u32) -> Self {
        ChainElement::new(
            format!("combiner-{ports}x1"),
            -10.0 * (ports as f64).log10() - EXCESS_LOSS_DB,
        )
    }

    pub fn soa(label: &str) -> Self {
        ChainElement::new(format!("soa-{label}"), SOA_GAIN_DB)
    }

    pub fn is_amplifier(&self) -> bool {
        self.gain_db > 0.0
    }
}

#[derive(Debug, Clone)]
pub struct ComponentChain {
    pub launch_dbm: f64,
    pub elements: Vec<ChainElement>,
}

impl ComponentChain {
    /// Default end-to-end chain for a subnet kind at the given scale:
    /// modulator, booster, gated splitter, core fabric, gated receive path
    /// and filter.
    pub fn default_for(p: &RampParams, kind: SubnetKind) -> Self {
        let x = p.x;
        let core: Vec<ChainElement> = match kind {
            SubnetKind::BroadcastSelect => {
                vec![ChainElement::coupler(p.lambda as u64 * p.j as u64)]
            }
            SubnetKind::RouteBroadcast => vec![
                ChainElement::new("awgr", -AWGR_LOSS_DB),
                ChainElement::coupler(p.j as u64),
            ],
            SubnetKind::RouteSwitch => vec![
                ChainElement::new("awgr", -AWGR_LOSS_DB),
                ChainElement::splitter(p.j),
                ChainElement::soa("crossbar"),
                ChainElement::combiner(p.j),
            ],
        };
        let mut elements = vec![
            ChainElement::new("modulator", -6.0),
            ChainElement::soa("booster"),
            ChainElement::splitter(x),
            ChainElement::soa("tx-gate"),
        ];
        elements.extend(core);
        elements.push(ChainElement::soa("rx-gate"));
        elements.push(ChainElement::combiner(x));
        elements.push(ChainElement::new("filter", -3.0));
        ComponentChain { launch_dbm: 10.0, elements }
    }
}

#[derive(Debug, Clone)]
pub struct BudgetTrace {
    /// Power after each element, starting with the launch power.
    pub stages: Vec<(String, f64)>,
    pub feasible: bool,
    pub min_dbm: f64,
    pub receiver_dbm: f64,
}

/// Walks the chain, accumulating dBm after every element.
pub fn walk_budget(chain: &ComponentChain) -> BudgetTrace {
    let mut stages = vec![("launch".to_string(), chain.launch_dbm)];
    let mut level = chain.launch_dbm;
    let mut min = level;
    for el in &chain.elements {
        level += el.gain_db;
        min = min.min(level);
        stages.push((el.label.clone(), level));
    }
    BudgetTrace {
        feasible: min >= PATH_MIN_DBM && level >= RECEIVER_MIN_DBM,
        stages,
        min_dbm: min,
        receiver_dbm: level,
    }
}

// ---------------------------------------------------------------------------
// Cost and power
// ---------------------------------------------------------------------------

/// Closed interval carried through the cost arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn scale(&self, k: f64) -> Self {
        Interval { lo: self.lo * k, hi: self.hi * k }
    }

    pub fn add(&self, other: Interval) -> Self {
        Interval { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if (self.hi - self.lo).abs() < 1e-9 {
            write!(f, "{:.2}", self.lo)
        } else {
            write!(f, "{:.2}-{:.2}", self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    /// Fat-tree HPC pod from 40-port 200 Gb/s switches.
    HpcFatTree,
    /// Fat-tree DCN from 64-port 100 Gb/s switches.
    DcnFatTree,
    Ramp,
}

impl SystemKind {
    pub fn label(&self) -> &'static str {
        match self {
            SystemKind::HpcFatTree => "hpc",
            SystemKind::DcnFatTree => "dcn",
            SystemKind::Ramp => "ramp",
        }
    }

    pub fn parse(s: &str) -> Option<SystemKind> {
        match s.to_ascii_lowercase().as_str() {
            "hpc" | "hpc-fat-tree" | "superpod" => Some(SystemKind::HpcFatTree),
            "dcn" | "dcn-fat-tree" => Some(SystemKind::DcnFatTree),
            "ramp" => Some(SystemKind::Ramp),
            _ => None,
        }
    }
}

/// Published unit costs and powers.
#[derive(Debug, Clone)]
pub struct UnitCosts {
    pub eps_trx_cost_per_gbps: f64,
    pub ocs_trx_cost: Interval,
    pub hpc_switch_cost: f64,
    pub dcn_switch_cost: f64,
    pub coupler_cost: f64,
    pub hpc_switch_power_w: f64,
    pub dcn_switch_power_w: f64,
    pub soa_power_w: f64,
    pub hpc_trx_power_w: f64,
    pub dcn_trx_power_w: f64,
    pub ocs_trx_power_w: Interval,
}

impl Default for UnitCosts {
    fn default() -> Self {
        UnitCosts {
            eps_trx_cost_per_gbps: 1.0,
            ocs_trx_cost: Interval::new(600.0, 1200.0),
            hpc_switch_cost: 23_700.0,
            dcn_switch_cost: 44_000.0,
            coupler_cost: 3_000.0,
            hpc_switch_power_w: 404.0,
            dcn_switch_power_w: 320.0,
            soa_power_w: 0.88,
            hpc_trx_power_w: 4.35,
            dcn_trx_power_w: 2.5,
            ocs_trx_power_w: Interval::new(3.4, 3.8),
        }
    }
}

/// Structural counts for a system scaled to `nodes` endpoints at
/// `node_bw_bps` per node and the given intra-to-inter oversubscription.
#[derive(Debug, Clone)]
pub struct SystemCounts {
    pub kind: SystemKind,
    pub nodes: u64,
    pub node_bw_bps: u64,
    pub oversub: u64,
    /// Ports per node and parallel network copies for EPS kinds.
    pub ports_per_node: u64,
    pub transceivers: u64,
    pub switches: u64,
    pub couplers: u64,
    /// Active components along one path.
    pub components_per_path: u32,
    pub port_rate_bps: u64,
    pub switch_radix: u64,
}

/// Derives component counts. Electrically switched systems are folded
/// three-tier Clos networks (5 switch positions per radix of endpoints, 6
/// transceivers per endpoint path) replicated into parallel copies until
/// the per-node bandwidth matches; the optical system counts follow the
/// closed-form subnet formulas.
pub fn system_counts(
    kind: SystemKind,
    nodes: u64,
    node_bw_bps: u64,
    oversub: u64,
    ramp: Option<&RampParams>,
) -> Result<SystemCounts> {
    match kind {
        SystemKind::Ramp => {
            let p = ramp.copied().unwrap_or_else(RampParams::max_scale);
            let b = p.b as u64;
            let x = p.x as u64;
            Ok(SystemCounts {
                kind,
                nodes: p.nodes(),
                node_bw_bps: p.node_capacity_bps(),
                oversub: 1,
                ports_per_node: x * b,
                transceivers: b * x * x * p.j as u64 * p.lambda as u64,
                switches: 0,
                couplers: b * x * x * x,
                components_per_path: 2,
                port_rate_bps: p.line_rate_bps,
                switch_radix: 0,
            })
        }
        SystemKind::HpcFatTree | SystemKind::DcnFatTree => {
            let (port_rate, radix) = match kind {
                SystemKind::HpcFatTree => (200_000_000_000u64, 40u64),
                _ => (100_000_000_000u64, 64u64),
            };
            if oversub == 0 {
                return Err(Error::InvalidParameter("oversubscription must be >= 1".to_string()));
            }
            let ports_per_node = (node_bw_bps / oversub / port_rate).max(1);
            let endpoints = nodes * ports_per_node;
            Ok(SystemCounts {
                kind,
                nodes,
                node_bw_bps,
                oversub,
                ports_per_node,
                transceivers: 6 * endpoints,
                switches: 5 * endpoints / radix,
                couplers: 0,
                components_per_path: 11, // 6 transceivers + 5 switches
                port_rate_bps: port_rate,
                switch_radix: radix,
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct CostReport {
    pub counts: SystemCounts,
    pub transceiver_cost: Interval,
    pub switch_cost: f64,
    pub total_cost: Interval,
    /// Transceiver share of total cost, percent.
    pub trx_cost_share_pct: Interval,
    pub cost_per_gbps: Interval,
}

pub fn cost_report(
    kind: SystemKind,
    nodes: u64,
    node_bw_bps: u64,
    oversub: u64,
    ramp: Option<&RampParams>,
    units: &UnitCosts,
) -> Result<CostReport> {
    let counts = system_counts(kind, nodes, node_bw_bps, oversub, ramp)?;
    let (trx_cost, switch_cost) = match kind {
        SystemKind::Ramp => (
            units.ocs_trx_cost.scale(counts.transceivers as f64),
            counts.couplers as f64 * units.coupler_cost,
        ),
        SystemKind::HpcFatTree => (
            Interval::point(
                counts.transceivers as f64
                    * units.eps_trx_cost_per_gbps
                    * (counts.port_rate_bps as f64 / 1e9),
            ),
            counts.switches as f64 * units.hpc_switch_cost,
        ),
        SystemKind::DcnFatTree => (
            Interval::point(
                counts.transceivers as f64
                    * units.eps_trx_cost_per_gbps
                    * (counts.port_rate_bps as f64 / 1e9),
            ),
            counts.switches as f64 * units.dcn_switch_cost,
        ),
    };
    let total = trx_cost.add(Interval::point(switch_cost));
    // Delivered capacity: the full node bandwidth for the optical system,
    // the inter-system bandwidth (after oversubscription) for EPS.
    let gbps = counts.nodes as f64 * counts.node_bw_bps as f64 / counts.oversub as f64 / 1e9;
    Ok(CostReport {
        trx_cost_share_pct: Interval::new(
            100.0 * trx_cost.lo / (trx_cost.lo + switch_cost),
            100.0 * trx_cost.hi / (trx_cost.hi + switch_cost),
        ),
        counts,
        transceiver_cost: trx_cost,
        switch_cost,
        total_cost: total,
        cost_per_gbps: Interval::new(total.lo / gbps, total.hi / gbps),
    })
}

#[derive(Debug, Clone)]
pub struct PowerReport {
    pub counts: SystemCounts,
    pub energy_pj_per_bit_path: Interval,
    pub power_mw_per_gbps: Interval,
    pub total_mw: Interval,
}

pub fn power_report(
    kind: SystemKind,
    nodes: u64,
    node_bw_bps: u64,
    oversub: u64,
    ramp: Option<&RampParams>,
    units: &UnitCosts,
) -> Result<PowerReport> {
    let counts = system_counts(kind, nodes, node_bw_bps, oversub, ramp)?;
    let gbit = counts.port_rate_bps as f64 / 1e9;
    let (pj_per_bit, total_w) = match kind {
        SystemKind::Ramp => {
            // One chain of active devices per path; the passive subnets
            // draw nothing. Total active paths equal the transceiver count.
            let pj = Interval::new(
                units.ocs_trx_power_w.lo / gbit * 1000.0,
                units.ocs_trx_power_w.hi / gbit * 1000.0,
            );
            let total = units.ocs_trx_power_w.scale(counts.transceivers as f64);
            (pj, total)
        }
        SystemKind::HpcFatTree | SystemKind::DcnFatTree => {
            let (trx_w, sw_w) = match kind {
                SystemKind::HpcFatTree => (units.hpc_trx_power_w, units.hpc_switch_power_w),
                _ => (units.dcn_trx_power_w, units.dcn_switch_power_w),
            };
            let sw_pj = sw_w / (counts.switch_radix as f64 * gbit) * 1000.0;
            let trx_pj = trx_w / gbit * 1000.0;
            let pj = Interval::point(6.0 * trx_pj + 5.0 * sw_pj);
            let total = Interval::point(
                counts.transceivers as f64 * trx_w + counts.switches as f64 * sw_w,
            );
            (pj, total)
        }
    };
    Ok(PowerReport {
        counts,
        energy_pj_per_bit_path: pj_per_bit,
        power_mw_per_gbps: pj_per_bit, // pJ/bit equals mW/Gb/s numerically
        total_mw: total_w.scale(1e-6),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_chain_traces_launch_power() {
        let chain = ComponentChain { launch_dbm: 10.0, elements: Vec::new() };
        let t = walk_budget(&chain);
        assert_eq!(t.stages.len(), 1);
        assert_eq!(t.receiver_dbm, 10.0);
        assert!(t.feasible);
    }

    #[test]
    fn broadcast_select_max_scale_is_feasible() {
        let chain =
            ComponentChain::default_for(&RampParams::max_scale(), SubnetKind::BroadcastSelect);
        let t = walk_budget(&chain);
        assert!(t.feasible, "trace: {:?}", t.stages);
        assert!(t.min_dbm >= PATH_MIN_DBM);
        assert!(t.receiver_dbm >= RECEIVER_MIN_DBM);
    }

    #[test]
    fn passive_elements_strictly_decrease_the_trace() {
        let chain =
            ComponentChain::default_for(&RampParams::max_scale(), SubnetKind::BroadcastSelect);
        let t = walk_budget(&chain);
        for (i, el) in chain.elements.iter().enumerate() {
            let before = t.stages[i].1;
            let after = t.stages[i + 1].1;
            if el.is_amplifier() {
                assert!(after > before);
            } else {
                assert!(after < before, "{} did not attenuate", el.label);
            }
        }
    }

    #[test]
    fn removing_an_amplifier_flips_feasibility() {
        let mut chain =
            ComponentChain::default_for(&RampParams::max_scale(), SubnetKind::BroadcastSelect);
        let pos = chain.elements.iter().position(|e| e.is_amplifier()).unwrap();
        chain.elements.remove(pos);
        assert!(!walk_budget(&chain).feasible);
    }

    #[test]
    fn ramp_cost_report_matches_published_interval() {
        let r = cost_report(
            SystemKind::Ramp,
            65_536,
            12_800_000_000_000,
            1,
            None,
            &UnitCosts::default(),
        )
        .unwrap();
        assert_eq!(r.counts.transceivers, 2_097_152);
        assert_eq!(r.counts.couplers, 32_768);
        assert!((r.cost_per_gbps.lo - 1.62).abs() < 0.05, "{}", r.cost_per_gbps);
        assert!((r.cost_per_gbps.hi - 3.12).abs() < 0.05, "{}", r.cost_per_gbps);
    }

    #[test]
    fn hpc_cost_report_near_published_value() {
        let r = cost_report(
            SystemKind::HpcFatTree,
            65_536,
            12_800_000_000_000,
            1,
            None,
            &UnitCosts::default(),
        )
        .unwrap();
        assert_eq!(r.counts.ports_per_node, 64);
        assert!((r.counts.transceivers as f64 - 25.2e6).abs() / 25.2e6 < 0.01);
        assert!((r.counts.switches as f64 - 530e3).abs() / 530e3 < 0.02);
        assert!((r.cost_per_gbps.lo - 20.02).abs() / 20.02 < 0.10, "{}", r.cost_per_gbps);
    }

    #[test]
    fn oversubscribing_shrinks_the_switch_count_proportionally() {
        let one = cost_report(SystemKind::HpcFatTree, 65_536, 12_800_000_000_000, 1, None, &UnitCosts::default()).unwrap();
        let sixty_four = cost_report(SystemKind::HpcFatTree, 65_536, 12_800_000_000_000, 64, None, &UnitCosts::default()).unwrap();
        assert_eq!(one.counts.switches / 64, sixty_four.counts.switches);
    }

    #[test]
    fn ramp_power_report_matches_published_interval() {
        let r = power_report(
            SystemKind::Ramp,
            65_536,
            12_800_000_000_000,
            1,
            None,
            &UnitCosts::default(),
        )
        .unwrap();
        assert!((r.energy_pj_per_bit_path.lo - 8.5).abs() < 0.01);
        assert!((r.energy_pj_per_bit_path.hi - 9.5).abs() < 0.01);
        assert!(r.total_mw.lo > 7.0 && r.total_mw.hi < 8.1, "{}", r.total_mw);
        assert_eq!(r.counts.components_per_path, 2);
    }

    #[test]
    fn hpc_power_report_near_published_values() {
        let r = power_report(
            SystemKind::HpcFatTree,
            65_536,
            12_800_000_000_000,
            1,
            None,
            &UnitCosts::default(),
        )
        .unwrap();
        assert!((r.energy_pj_per_bit_path.lo - 383.0).abs() / 383.0 < 0.01);
        assert!((r.total_mw.lo - 306.0).abs() / 306.0 < 0.10, "{}", r.total_mw);
        assert_eq!(r.counts.components_per_path, 11);
    }

    #[test]
    fn doubling_line_rate_halves_energy_per_bit() {
        let base = RampParams::max_scale();
        let fast = RampParams { line_rate_bps: base.line_rate_bps * 2, ..base };
        let u = UnitCosts::default();
        let a = power_report(SystemKind::Ramp, 0, 0, 1, Some(&base), &u).unwrap();
        let b = power_report(SystemKind::Ramp, 0, 0, 1, Some(&fast), &u).unwrap();
        assert!((a.energy_pj_per_bit_path.lo / b.energy_pj_per_bit_path.lo - 2.0).abs() < 1e-9);
    }
}
