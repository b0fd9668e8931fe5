//! The 9-slot TDMA frame: queue construction, simultaneous-activation SINR
//! measurement, and the throughput accounting of each scheme.
//!
//! A frame has one slot per sub-lattice. Within a slot the cells of that
//! sub-lattice serve their reception queues in lock-step: step `k` activates
//! the `k`-th queued reception of every cell that still has work, all
//! transmitters at maximum power `P0` and rate `f_R(gamma_min(n))`. A slot
//! runs until its longest queue drains.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::{multicast_route_cap, asymmetric_route_cap};
use crate::channel::{gamma_min, rate};
use crate::error::{Error, Result};
use crate::geometry::{cell_of, sublattice_of, Lattice};
use crate::routing::{CellLoad, Hop, HybridMode, LegTag};
use crate::traffic::{Model, NetworkInstance, Role};
use crate::{real, Real};

/// One queued reception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Queued {
    pub tx: usize,
    pub rx: usize,
    pub stream: usize,
    pub degraded: bool,
}

/// The reception queue of one cell within its slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellQueue {
    /// Linear cell index.
    pub cell: usize,
    pub receptions: Vec<Queued>,
}

/// The 9-slot frame plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub slots: [Vec<CellQueue>; 9],
}

impl Frame {
    pub fn total_receptions(&self) -> usize {
        self.slots.iter().flatten().map(|q| q.receptions.len()).sum()
    }

    /// The number of lock-step activations a slot needs to drain.
    pub fn steps_in_slot(&self, slot: usize) -> usize {
        self.slots[slot].iter().map(|q| q.receptions.len()).max().unwrap_or(0)
    }
}

/// Assigns every wireless hop to the slot of its receiver's cell and orders
/// each cell's queue round-robin across streams, so every stream gets its
/// share each frame.
pub fn build_frame<'a, T: Real>(
    streams: impl IntoIterator<Item = (usize, &'a [Hop])>,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
) -> Result<Frame> {
    // per cell, per stream, hops in route order
    let mut per_cell: BTreeMap<usize, BTreeMap<usize, Vec<Queued>>> = BTreeMap::new();
    for (stream, hops) in streams {
        for hop in hops {
            if hop.leg == LegTag::Backhaul {
                continue;
            }
            let cell = lat.cell_index(cell_of(&inst.positions[hop.rx], lat)?);
            per_cell.entry(cell).or_default().entry(stream).or_default().push(Queued {
                tx: hop.tx,
                rx: hop.rx,
                stream,
                degraded: hop.degraded,
            });
        }
    }

    let mut slots: [Vec<CellQueue>; 9] = Default::default();
    for (cell, by_stream) in per_cell {
        let mut queues: Vec<std::vec::IntoIter<Queued>> =
            by_stream.into_values().map(|v| v.into_iter()).collect();
        let mut receptions = Vec::new();
        loop {
            let before = receptions.len();
            for q in &mut queues {
                if let Some(item) = q.next() {
                    receptions.push(item);
                }
            }
            if receptions.len() == before {
                break;
            }
        }
        let coord = lat.coord_of_index(cell);
        slots[sublattice_of(coord).0 as usize].push(CellQueue { cell, receptions });
    }
    Ok(Frame { slots })
}

/// One simulated reception.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord<T> {
    pub tx: usize,
    pub rx: usize,
    pub stream: usize,
    pub slot: u8,
    pub gamma: T,
    pub rate: T,
    pub success: bool,
    pub degraded: bool,
}

impl<T: Real> TransmissionRecord<T> {
    pub const CSV_HEADER: &'static str = "tx,rx,stream,slot,gamma,rate,success,degraded";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.tx, self.rx, self.stream, self.slot, self.gamma, self.rate, self.success,
            self.degraded
        )
    }
}

/// Floor statistics of a simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FloorStats {
    pub receptions: usize,
    pub non_degraded: usize,
    pub non_degraded_above_floor: usize,
    pub degraded: usize,
    /// Failures that would have passed with the noise term removed.
    pub noise_attributable: usize,
}

impl FloorStats {
    pub fn floor_fraction(&self) -> f64 {
        if self.non_degraded == 0 {
            1.0
        } else {
            self.non_degraded_above_floor as f64 / self.non_degraded as f64
        }
    }

    pub fn merge(&mut self, other: &FloorStats) {
        self.receptions += other.receptions;
        self.non_degraded += other.non_degraded;
        self.non_degraded_above_floor += other.non_degraded_above_floor;
        self.degraded += other.degraded;
        self.noise_attributable += other.noise_attributable;
    }
}

/// Activates step `step` of `slot`: the `step`-th queued reception of every
/// cell of the slot's sub-lattice that still has work, simultaneously.
pub fn simulate_step<T: Real>(
    frame: &Frame,
    slot: usize,
    step: usize,
    inst: &NetworkInstance<T>,
) -> Result<Vec<TransmissionRecord<T>>> {
    if slot >= 9 {
        return Err(Error::invalid(format!("slot {slot} out of range")));
    }
    let floor = gamma_min(real(inst.n as f64), &inst.fading.model, &inst.params)?;
    let tx_rate = rate(floor, &inst.params)?;
    simulate_step_inner(frame, slot, step, inst, floor, tx_rate).map(|(records, _)| records)
}

fn simulate_step_inner<T: Real>(
    frame: &Frame,
    slot: usize,
    step: usize,
    inst: &NetworkInstance<T>,
    floor: T,
    tx_rate: T,
) -> Result<(Vec<TransmissionRecord<T>>, FloorStats)> {
    let active: Vec<&Queued> = frame.slots[slot]
        .iter()
        .filter(|q| step < q.receptions.len())
        .map(|q| &q.receptions[step])
        .collect();
    let mut records = Vec::with_capacity(active.len());
    let mut stats = FloorStats::default();
    for (i, recv) in active.iter().enumerate() {
        let rx_pos = &inst.positions[recv.rx];
        let mut signal = T::zero();
        let mut interference = T::zero();
        for (j, other) in active.iter().enumerate() {
            // a node never interferes with its own reception; the case only
            // arises when a degraded long hop schedules it as a remote
            // transmitter in the same step
            if j != i && other.tx == recv.rx {
                continue;
            }
            let d = inst.positions[other.tx].distance(rx_pos);
            if d == T::zero() {
                return Err(Error::CoincidentNodes { i: other.tx, j: recv.rx });
            }
            let f = inst.fading.sample(other.tx, recv.rx)?;
            let p = inst.params.k * f * d.powf(-inst.params.alpha) * inst.params.p0;
            if j == i {
                signal = p;
            } else {
                interference = interference + p;
            }
        }
        let gamma = signal / (inst.params.eta + interference);
        let success = gamma >= floor;
        stats.receptions += 1;
        if recv.degraded {
            stats.degraded += 1;
        } else {
            stats.non_degraded += 1;
            if success {
                stats.non_degraded_above_floor += 1;
            }
        }
        if !success && interference > T::zero() && signal / interference >= floor {
            stats.noise_attributable += 1;
        }
        records.push(TransmissionRecord {
            tx: recv.tx,
            rx: recv.rx,
            stream: recv.stream,
            slot: slot as u8,
            gamma,
            rate: tx_rate,
            success,
            degraded: recv.degraded,
        });
    }
    Ok((records, stats))
}

/// Outcome of a full frame simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult<T> {
    pub records: Vec<TransmissionRecord<T>>,
    pub floor: FloorStats,
}

/// Runs every slot until its longest queue drains; each hop is simulated
/// exactly once.
pub fn simulate_frame<T: Real>(frame: &Frame, inst: &NetworkInstance<T>) -> Result<FrameResult<T>> {
    let floor = gamma_min(real(inst.n as f64), &inst.fading.model, &inst.params)?;
    let tx_rate = rate(floor, &inst.params)?;
    let mut records = Vec::with_capacity(frame.total_receptions());
    let mut floor_stats = FloorStats::default();
    for slot in 0..9 {
        for step in 0..frame.steps_in_slot(slot) {
            let (mut recs, stats) = simulate_step_inner(frame, slot, step, inst, floor, tx_rate)?;
            records.append(&mut recs);
            floor_stats.merge(&stats);
        }
    }
    Ok(FrameResult { records, floor: floor_stats })
}

/// Whether a throughput figure comes from the closed-form `r_max` or from the
/// measured per-cell load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThroughputMode {
    Formula,
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput<T> {
    pub per_stream: T,
    pub aggregate: T,
    pub mode: ThroughputMode,
}

fn floor_rate<T: Real>(inst: &NetworkInstance<T>) -> Result<T> {
    let g = gamma_min(real(inst.n as f64), &inst.fading.model, &inst.params)?;
    rate(g, &inst.params)
}

/// Asymmetric scheme: `lambda = f_R(gamma_min) / (3 * 9 * r_max)` in formula
/// mode; in measured mode the slot share is divided by the worst cell's
/// actual reception count (which already includes the up-to-3 receptions of
/// destination cells), `lambda = f_R(gamma_min) / (9 * max receptions)`.
pub fn throughput_asymmetric<T: Real>(
    inst: &NetworkInstance<T>,
    loads: &CellLoad,
    mode: ThroughputMode,
) -> Result<Throughput<T>> {
    if inst.model != Model::Asymmetric {
        return Err(Error::invalid("throughput_asymmetric needs an asymmetric instance"));
    }
    let fr = floor_rate(inst)?;
    let per_stream = match mode {
        ThroughputMode::Formula => {
            fr / (real::<T>(27.0) * asymmetric_route_cap(real(inst.n as f64), inst.d)?)
        }
        ThroughputMode::Measured => {
            fr / (real::<T>(9.0) * real::<T>(loads.max_receptions().max(1) as f64))
        }
    };
    Ok(Throughput { per_stream, aggregate: per_stream * real(inst.n as f64), mode })
}

/// Multicast scheme: same slot accounting with the multicast `r_max`;
/// the aggregate counts every (stream, destination) delivery.
pub fn throughput_multicast<T: Real>(
    inst: &NetworkInstance<T>,
    loads: &CellLoad,
    mode: ThroughputMode,
) -> Result<Throughput<T>> {
    if inst.model != Model::Multicast {
        return Err(Error::invalid("throughput_multicast needs a multicast instance"));
    }
    let fr = floor_rate(inst)?;
    let per_stream = match mode {
        ThroughputMode::Formula => {
            fr / (real::<T>(27.0) * multicast_route_cap(real(inst.n as f64), inst.d)?)
        }
        ThroughputMode::Measured => {
            fr / (real::<T>(9.0) * real::<T>(loads.max_receptions().max(1) as f64))
        }
    };
    let streams = real::<T>(inst.n as f64) * real::<T>(inst.m as f64);
    Ok(Throughput { per_stream, aggregate: per_stream * streams, mode })
}

/// Largest client population over the cells of the cluster lattice.
pub fn max_clients_per_cell<T: Real>(inst: &NetworkInstance<T>, lat: &Lattice<T>) -> Result<u32> {
    let client_role = match inst.model {
        Model::Cluster => Role::Client,
        Model::Hybrid => Role::Wireless,
        _ => return Err(Error::invalid("client occupancy needs a cluster or hybrid instance")),
    };
    let mut counts = vec![0u32; lat.g as usize];
    for i in inst.nodes_with_role(client_role) {
        counts[lat.cell_index(cell_of(&inst.positions[i], lat)?)] += 1;
    }
    Ok(counts.into_iter().max().unwrap_or(0))
}

/// Cluster scheme: each slot is split into `2 * [27/2 n^{1-d} ln n]`
/// intervals (formula mode), or `2 * max clients per cell` intervals of the
/// cell's slot share as measured; the aggregate multiplies by the `2n`
/// streams.
pub fn throughput_cluster<T: Real>(
    inst: &NetworkInstance<T>,
    max_clients: u32,
    mode: ThroughputMode,
) -> Result<Throughput<T>> {
    if inst.model != Model::Cluster && inst.model != Model::Hybrid {
        return Err(Error::invalid("throughput_cluster needs a cluster (or hybrid) instance"));
    }
    let fr = floor_rate(inst)?;
    let n = real::<T>(inst.n as f64);
    let per_stream = match mode {
        ThroughputMode::Formula => fr / (real::<T>(27.0) * n.powf(T::one() - inst.d) * n.ln()),
        ThroughputMode::Measured => {
            fr / (real::<T>(9.0) * real::<T>(2.0) * real::<T>(max_clients.max(1) as f64))
        }
    };
    Ok(Throughput { per_stream, aggregate: per_stream * real::<T>(2.0) * n, mode })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridThroughput<T> {
    /// Half the cluster-scheme aggregate with the access points as heads.
    pub infrastructure: T,
    /// The ad hoc closed form: `n` times the uniform-traffic per-node rate.
    pub adhoc: T,
    pub best: HybridMode,
}

/// Formula-mode hybrid throughput: both modes evaluated, best selected.
pub fn throughput_hybrid<T: Real>(inst: &NetworkInstance<T>) -> Result<HybridThroughput<T>> {
    if inst.model != Model::Hybrid {
        return Err(Error::invalid("throughput_hybrid needs a hybrid instance"));
    }
    let cluster = throughput_cluster(inst, 0, ThroughputMode::Formula)?;
    let infrastructure = cluster.aggregate / real(2.0);

    let n = real::<T>(inst.n as f64);
    let a = inst.params.alpha;
    let three = real::<T>(3.0);
    let model = &inst.fading.model;
    let bracket = real::<T>(10.0).powf(-(a + three) / real(2.0)) / real(648.0)
        * ((three * a - real(6.0)) / (three * a - real(5.0)))
        * (inst.params.w * model.q * model.f_m / inst.params.gamma_gap);
    let adhoc = bracket * n.sqrt() / n.ln().powf(real(1.5));

    let best =
        if infrastructure >= adhoc { HybridMode::Infrastructure } else { HybridMode::AdHoc };
    Ok(HybridThroughput { infrastructure, adhoc, best })
}
