//! Per-step subgroup maps and the information map.
//!
//! Every algorithmic step partitions the node set into subgroups; the nodes
//! of one subgroup perform a partial collective in parallel. The information
//! map assigns each node the portion (digit) of the working buffer it keeps
//! or contributes at that step. The digits across the four steps, read as a
//! mixed-radix number with radices (x, x, J, Λ/x), are a bijection onto
//! [0, N) and define the node's collective rank.
//!
//! Two formulations exist for the last step:
//!
//! * [`Variant4::Pairwise`] (variant 1) groups nodes of the same
//!   device-group position and rack whose communication group advances by
//!   `j` per device group; members exchange one-to-one over Λ/x − 1 rounds.
//! * [`Variant4::DeviceShift`] (variant 2, the default) groups nodes whose
//!   communication group advances by one per device group; the whole
//!   subgroup exchanges in a single step.
//!
//! The two formulations demand matching "rotation" coefficients in the
//! step-3 membership and in the information map; see docs/mapping-notes.md
//! for the derivation and the partition/uniqueness checks that pin them
//! down.

use crate::error::{Error, Result};
use crate::params::{NodeCoord, RampParams};

/// Formulation used for the fourth algorithmic step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant4 {
    /// Formula 1: one-to-one exchange rounds inside each subgroup.
    Pairwise,
    /// Formula 2: single all-to-all exchange inside each subgroup.
    #[default]
    DeviceShift,
}

impl Variant4 {
    pub fn label(&self) -> &'static str {
        match self {
            Variant4::Pairwise => "1",
            Variant4::DeviceShift => "2",
        }
    }
}

/// Algorithmic steps, in execution order for scatter-direction collectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    S1,
    S2,
    S3,
    S4,
}

pub const ALL_STEPS: [Step; 4] = [Step::S1, Step::S2, Step::S3, Step::S4];

impl Step {
    pub fn index(&self) -> usize {
        match self {
            Step::S1 => 1,
            Step::S2 => 2,
            Step::S3 => 3,
            Step::S4 => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Step> {
        match i {
            1 => Some(Step::S1),
            2 => Some(Step::S2),
            3 => Some(Step::S3),
            4 => Some(Step::S4),
            _ => None,
        }
    }
}

#[inline]
fn modx(v: i64, x: u32) -> u32 {
    v.rem_euclid(x as i64) as u32
}

/// Number of nodes per subgroup at `step` (the #NS column). A value of 1
/// means the step is inactive.
pub fn nodes_per_subgroup(step: Step, p: &RampParams) -> u32 {
    match step {
        Step::S1 => p.x,
        Step::S2 => {
            if p.lambda >= p.x {
                p.x
            } else {
                1
            }
        }
        Step::S3 => p.j,
        Step::S4 => p.device_groups().max(1),
    }
}

/// Number of subgroups at `step` (the #SG column).
pub fn subgroup_count(step: Step, p: &RampParams) -> u64 {
    p.nodes() / nodes_per_subgroup(step, p) as u64
}

pub fn step_active(step: Step, p: &RampParams) -> bool {
    nodes_per_subgroup(step, p) > 1
}

/// Subgroup identifier of `n` at `step`.
///
/// Step 1: λ + Λ·j. Step 2: (λ−g) mod x + Λ·j + ⌊λ/x⌋·x.
/// Step 3: (λ + Λ·(j − g·c)) mod Λx with the rotation coefficient of the
/// chosen variant. Step 4 per the variant formula.
pub fn subgroup_id(n: NodeCoord, step: Step, p: &RampParams, variant: Variant4) -> Result<u64> {
    if !step_active(step, p) {
        return Err(Error::InactiveStep { step: step.index() });
    }
    let x = p.x;
    let lam_count = p.lambda as u64;
    let g = n.g as i64;
    let j = n.j as i64;
    let lam = n.lam as i64;
    let q = n.device_group(p) as i64;
    Ok(match step {
        Step::S1 => n.lam as u64 + lam_count * n.j as u64,
        Step::S2 => {
            modx(lam - g, x) as u64 + lam_count * n.j as u64 + (n.device_group(p) * x) as u64
        }
        Step::S3 => {
            // The subgroup invariant is (j·c − g) mod x where c is the
            // communication-group rotation per rack: c = 1 for the
            // device-shift variant, c = 1 + q for the pairwise variant.
            let c = match variant {
                Variant4::DeviceShift => 1,
                Variant4::Pairwise => 1 + q,
            };
            n.lam as u64 + lam_count * modx(j * c - g, x) as u64
        }
        Step::S4 => match variant {
            Variant4::Pairwise => {
                (n.lam % x) as u64
                    + (x as u64) * modx(g - j * q, x) as u64
                    + (x as u64 * x as u64) * n.j as u64
            }
            Variant4::DeviceShift => {
                (x as u64 * x as u64) * n.j as u64
                    + (x as u64) * modx(g - q, x) as u64
                    + (n.lam % x) as u64
            }
        },
    })
}

/// All members of the subgroup of `n` at `step`, ordered by the enumeration
/// variable. Includes `n` itself exactly once.
pub fn subgroup_members(
    n: NodeCoord,
    step: Step,
    p: &RampParams,
    variant: Variant4,
) -> Result<Vec<NodeCoord>> {
    if !step_active(step, p) {
        return Err(Error::InactiveStep { step: step.index() });
    }
    let x = p.x;
    let g = n.g as i64;
    let j = n.j as i64;
    let lam = n.lam as i64;
    let q = n.device_group(p) as i64;
    let r = n.lam % x; // position within the device group
    Ok(match step {
        Step::S1 => (0..x).map(|gamma| NodeCoord::new(modx(g + gamma as i64, x), n.j, n.lam)).collect(),
        Step::S2 => (0..x)
            .map(|gamma| {
                let dev = (modx(lam % x as i64 + gamma as i64, x)) + q as u32 * x;
                NodeCoord::new(modx(g + gamma as i64, x), n.j, dev)
            })
            .collect(),
        Step::S3 => {
            let c = match variant {
                Variant4::DeviceShift => 1,
                Variant4::Pairwise => 1 + q,
            };
            (0..p.j)
                .map(|gamma| {
                    NodeCoord::new(modx(g + (gamma as i64 - j) * c, x), gamma, n.lam)
                })
                .collect()
        }
        Step::S4 => {
            let dg = p.device_groups() as i64;
            match variant {
                Variant4::Pairwise => {
                    // Communication group advances by j per device group.
                    let base = modx(g - j * q, x);
                    (0..dg)
                        .map(|gamma| {
                            NodeCoord::new(
                                modx(base as i64 + j * gamma, x),
                                n.j,
                                r + x * gamma as u32,
                            )
                        })
                        .collect()
                }
                Variant4::DeviceShift => {
                    // Communication group advances by one per device group.
                    let base = modx(g - q, x);
                    (0..dg)
                        .map(|gamma| {
                            NodeCoord::new(
                                modx(base as i64 + gamma, x),
                                n.j,
                                r + x * gamma as u32,
                            )
                        })
                        .collect()
                }
            }
        }
    })
}

/// Information portion (digit) of `n` at `step`.
///
/// Returns 0 for inactive steps so that the digit tuple stays a valid
/// mixed-radix number for degenerate shapes.
pub fn info_portion(n: NodeCoord, step: Step, p: &RampParams, variant: Variant4) -> u32 {
    if !step_active(step, p) {
        return 0;
    }
    let x = p.x;
    let g = n.g as i64;
    let j = n.j as i64;
    let lam = n.lam as i64;
    let q = n.device_group(p) as i64;
    // The device-group term rotates with the same coefficient as the step-4
    // communication-group advance: q·j for the pairwise variant, q for the
    // device-shift variant.
    let rot = match variant {
        Variant4::Pairwise => q * j,
        Variant4::DeviceShift => q,
    };
    match step {
        Step::S1 => modx(g - lam - j - rot, x),
        Step::S2 => modx(g - j - rot, x),
        Step::S3 => n.j,
        Step::S4 => n.device_group(p),
    }
}

/// Digit radices per step: (x, x, J, Λ/x), with inactive steps collapsed
/// to radix 1.
pub fn radices(p: &RampParams) -> [u32; 4] {
    [
        nodes_per_subgroup(Step::S1, p),
        nodes_per_subgroup(Step::S2, p),
        nodes_per_subgroup(Step::S3, p),
        nodes_per_subgroup(Step::S4, p),
    ]
}

/// Collective rank of a node: the mixed-radix number formed by its digits
/// across the four steps, step 1 most significant. Bijective onto [0, N).
pub fn collective_rank(n: NodeCoord, p: &RampParams, variant: Variant4) -> u64 {
    let rad = radices(p);
    let mut rank: u64 = 0;
    for (i, step) in ALL_STEPS.iter().enumerate() {
        rank = rank * rad[i] as u64 + info_portion(n, *step, p, variant) as u64;
    }
    rank
}

/// Inverse of [`collective_rank`].
pub fn node_of_rank(rank: u64, p: &RampParams, variant: Variant4) -> NodeCoord {
    // N is small in every planning context where this is needed; a direct
    // scan keeps the inverse trivially consistent with the forward map.
    p.all_nodes()
        .find(|n| collective_rank(*n, p, variant) == rank)
        .expect("rank out of range")
}
