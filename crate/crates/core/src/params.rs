//! Architecture parameter set, node addressing and the closed-form
//! scalability formulas.
//!
//! All bandwidths are stored in bits per second, durations in integer
//! nanoseconds and message sizes in bytes, so slot arithmetic stays exact.

use crate::error::{Error, Result};

/// Choice of passive fabric inside each subnet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubnetKind {
    /// Star coupler, fixed-wavelength receivers (B&S).
    BroadcastSelect,
    /// Parallel AWGRs followed by per-port star couplers (R&B).
    RouteBroadcast,
    /// Parallel AWGRs followed by SOA-gated crossbars (R&S).
    RouteSwitch,
}

impl SubnetKind {
    pub fn label(&self) -> &'static str {
        match self {
            SubnetKind::BroadcastSelect => "broadcast-select",
            SubnetKind::RouteBroadcast => "route-broadcast",
            SubnetKind::RouteSwitch => "route-switch",
        }
    }
}

/// The architecture tuple (x, J, Λ, b, B).
///
/// * `x`  — number of communication groups (also transceiver groups per node)
/// * `j`  — racks per communication group, J ≤ x
/// * `lambda` — devices per rack; equals the wavelength channel count
/// * `b`  — transceivers per transceiver group (parallel spatial planes)
/// * `line_rate_bps` — effective line rate B of one transceiver
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RampParams {
    pub x: u32,
    pub j: u32,
    pub lambda: u32,
    pub b: u32,
    pub line_rate_bps: u64,
    pub subnet: SubnetKind,
}

impl RampParams {
    pub fn new(x: u32, j: u32, lambda: u32, b: u32, line_rate_bps: u64) -> Result<Self> {
        let p = RampParams { x, j, lambda, b, line_rate_bps, subnet: SubnetKind::BroadcastSelect };
        p.validate()?;
        Ok(p)
    }

    /// The maximum-scalability configuration: x = J = 32, Λ = 64, b = 1,
    /// B = 400 Gb/s, which yields 65,536 nodes at 12.8 Tb/s each.
    pub fn max_scale() -> Self {
        RampParams {
            x: 32,
            j: 32,
            lambda: 64,
            b: 1,
            line_rate_bps: 400_000_000_000,
            subnet: SubnetKind::BroadcastSelect,
        }
    }

    pub fn with_subnet(mut self, subnet: SubnetKind) -> Self {
        self.subnet = subnet;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.x < 2 {
            return Err(Error::InvalidParameter(format!("x must be >= 2, got {}", self.x)));
        }
        if self.j < 1 || self.lambda < 1 || self.b < 1 {
            return Err(Error::InvalidParameter(
                "J, lambda and b must all be >= 1".to_string(),
            ));
        }
        // Re-arrangeable non-blocking condition: racks per group never exceed
        // the transceiver (communication-group) count.
        if self.j > self.x {
            return Err(Error::InvalidParameter(format!(
                "J must be <= x ({} > {})",
                self.j, self.x
            )));
        }
        if self.line_rate_bps == 0 {
            return Err(Error::InvalidParameter("line rate must be positive".to_string()));
        }
        Ok(())
    }

    /// Total node count N = Λ·J·x.
    pub fn nodes(&self) -> u64 {
        self.lambda as u64 * self.j as u64 * self.x as u64
    }

    /// Number of device groups per rack (groups of x consecutive device
    /// numbers). Zero when Λ < x.
    pub fn device_groups(&self) -> u32 {
        self.lambda / self.x
    }

    /// Unidirectional node I/O capacity b·x·B.
    pub fn node_capacity_bps(&self) -> u64 {
        self.b as u64 * self.x as u64 * self.line_rate_bps
    }

    /// True when the collective mapping formulas apply: the devices of a rack
    /// must tile into complete device groups (or collapse to a single device).
    pub fn plannable(&self) -> bool {
        self.lambda == 1 || self.lambda % self.x == 0
    }

    pub fn coord_of_flat(&self, flat: u64) -> NodeCoord {
        let lam = (flat % self.lambda as u64) as u32;
        let rest = flat / self.lambda as u64;
        let j = (rest % self.j as u64) as u32;
        let g = (rest / self.j as u64) as u32;
        NodeCoord { g, j, lam }
    }

    pub fn all_nodes(&self) -> impl Iterator<Item = NodeCoord> + '_ {
        (0..self.nodes()).map(|f| self.coord_of_flat(f))
    }
}

/// A worker address: communication group `g`, rack `j`, device number `lam`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeCoord {
    pub g: u32,
    pub j: u32,
    pub lam: u32,
}

impl NodeCoord {
    pub fn new(g: u32, j: u32, lam: u32) -> Self {
        NodeCoord { g, j, lam }
    }

    /// Flat coordinate index g·J·Λ + j·Λ + λ. Nodes of one rack are
    /// contiguous under this ordering.
    pub fn flat_index(&self, p: &RampParams) -> u64 {
        (self.g as u64 * p.j as u64 + self.j as u64) * p.lambda as u64 + self.lam as u64
    }

    /// Device-group number floor(λ/x).
    pub fn device_group(&self, p: &RampParams) -> u32 {
        self.lam / p.x
    }

    pub fn in_bounds(&self, p: &RampParams) -> bool {
        self.g < p.x && self.j < p.j && self.lam < p.lambda
    }
}

impl std::fmt::Display for NodeCoord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(g{},j{},n{})", self.g, self.j, self.lam)
    }
}

/// Derived scalability and resource-count quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleReport {
    pub nodes: u64,
    pub node_capacity_bps: u64,
    pub total_capacity_bps: u128,
    /// Raw capacity crossing a bisection, counting the x parallel subnet
    /// paths per node pair: (Λ·J·x³/2)·b·B.
    pub bisection_bps: u128,
    /// b·x³ passive subnets, one per communication-group pair per
    /// transceiver-group member.
    pub subnet_count: u64,
    /// 2·b·J·x³ fibres.
    pub fibre_count: u64,
    /// 2·J·x² physical (ribboned) links.
    pub link_count: u64,
    /// b·x²·J·Λ transceivers in the whole system.
    pub transceiver_count: u64,
}

/// Evaluates the closed-form scalability formulas for a parameter set.
pub fn derived_quantities(p: &RampParams) -> Result<ScaleReport> {
    p.validate()?;
    let x = p.x as u64;
    let j = p.j as u64;
    let lambda = p.lambda as u64;
    let b = p.b as u64;
    let nodes = p.nodes();
    let node_capacity_bps = p.node_capacity_bps();
    Ok(ScaleReport {
        nodes,
        node_capacity_bps,
        total_capacity_bps: nodes as u128 * node_capacity_bps as u128,
        bisection_bps: (lambda * j * x * x * x) as u128 / 2 * (b * p.line_rate_bps) as u128,
        subnet_count: b * x * x * x,
        fibre_count: 2 * b * j * x * x * x,
        link_count: 2 * j * x * x,
        transceiver_count: b * x * x * j * lambda,
    })
}

/// Largest message that fits in one timeslot on one transceiver:
/// floor(B · slot · (1 − overhead) / 8) bytes.
pub fn min_message_per_slot(line_rate_bps: u64, slot_ns: u64, overhead_fraction: f64) -> u64 {
    assert!(
        (0.0..1.0).contains(&overhead_fraction),
        "overhead fraction must be in [0, 1)"
    );
    let bits_in_slot = (line_rate_bps as u128 * slot_ns as u128) / 1_000_000_000u128;
    let payload_bits = bits_in_slot as f64 * (1.0 - overhead_fraction);
    (payload_bits / 8.0).floor() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_scale_matches_headline_numbers() {
        let p = RampParams::max_scale();
        let r = derived_quantities(&p).unwrap();
        assert_eq!(r.nodes, 65_536);
        assert_eq!(r.node_capacity_bps, 12_800_000_000_000); // 12.8 Tb/s
        assert_eq!(r.total_capacity_bps, 838_860_800_000_000_000); // ~0.84 Eb/s
        assert_eq!(r.subnet_count, 32_768);
        assert_eq!(r.transceiver_count, 2_097_152);
        assert_eq!(r.fibre_count, 2 * 32 * 32768);
        assert_eq!(r.link_count, 2 * 32 * 1024);
    }

    #[test]
    fn smallest_valid_system() {
        let p = RampParams::new(2, 1, 1, 1, 1).unwrap();
        let r = derived_quantities(&p).unwrap();
        assert_eq!(r.nodes, 2);
        assert_eq!(r.node_capacity_bps, 2);
    }

    #[test]
    fn figure_example_54_nodes() {
        let p = RampParams::new(3, 3, 6, 1, 400_000_000_000).unwrap();
        assert_eq!(derived_quantities(&p).unwrap().nodes, 54);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(RampParams::new(1, 1, 1, 1, 1).is_err());
        assert!(RampParams::new(2, 3, 1, 1, 1).is_err()); // J > x
        assert!(RampParams::new(2, 1, 1, 1, 0).is_err());
    }

    #[test]
    fn node_capacity_times_nodes_is_total() {
        for (x, j, lam) in [(2, 1, 2), (3, 3, 6), (4, 2, 8), (32, 32, 64)] {
            let p = RampParams::new(x, j, lam, 1, 400_000_000_000).unwrap();
            let r = derived_quantities(&p).unwrap();
            assert_eq!(r.total_capacity_bps, r.nodes as u128 * r.node_capacity_bps as u128);
        }
    }

    #[test]
    fn flat_index_round_trips() {
        let p = RampParams::new(3, 2, 6, 1, 1).unwrap();
        for f in 0..p.nodes() {
            let c = p.coord_of_flat(f);
            assert!(c.in_bounds(&p));
            assert_eq!(c.flat_index(&p), f);
        }
    }

    #[test]
    fn subnet_count_scales_cubically_at_fixed_b() {
        let counts: Vec<u64> = (2..=8u32)
            .map(|x| {
                let p = RampParams::new(x, 1, x, 1, 1).unwrap();
                derived_quantities(&p).unwrap().subnet_count
            })
            .collect();
        for (i, x) in (2..=8u64).enumerate() {
            assert_eq!(counts[i], x * x * x);
        }
    }

    #[test]
    fn slot_payload_examples() {
        // 400 Gb/s, 20 ns slot, 5% reconfiguration overhead.
        assert_eq!(min_message_per_slot(400_000_000_000, 20, 0.05), 950);
        assert_eq!(min_message_per_slot(400_000_000_000, 20, 0.0), 1000);
        assert_eq!(min_message_per_slot(400_000_000_000, 0, 0.05), 0);
    }
}
