//! Route construction: median-fading relay selection, in-cell delivery,
//! L-shaped multihop routes, three-leg multicast trees, cluster attachment,
//! hybrid mode selection, and per-cell load accounting.
//!
//! Every hop is restricted to links whose fading coefficient is at least the
//! model median `f_m`. At finite `n` an eligible relay can be missing; those
//! hops complete anyway through the best available link and carry a
//! `degraded` flag, which downstream statistics use to exclude them from the
//! SINR-floor counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cell_of, CellCoord, Lattice};
use crate::traffic::{Endpoint, Model, NetworkInstance, Role};
use crate::Real;

/// Which leg of a scheme a hop belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LegTag {
    /// Along the source's column (L-route).
    Vertical,
    /// Along the destination's row (L-route).
    Horizontal,
    /// First hop of a two-hop in-cell delivery.
    InCellRelay,
    /// Hop that reaches the destination node.
    InCellFinal,
    /// Multicast: along the source's row.
    Leg1,
    /// Multicast: down the spaced vertical columns.
    Leg2,
    /// Multicast: short horizontal attachment run.
    Leg3,
    /// Cluster / hybrid: single wireless hop between a node and a head or
    /// access point in the same cell.
    Access,
    /// Hybrid: the wired hop between access points. Consumes no wireless
    /// resources; load accounting skips it.
    Backhaul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub tx: usize,
    pub rx: usize,
    pub leg: LegTag,
    /// Set when the hop could not honour the `f >= f_m` rule (or had to span
    /// a cell gap).
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub stream: usize,
    pub hops: Vec<Hop>,
    pub cells_crossed: Vec<CellCoord>,
}

impl Route {
    pub fn degraded(&self) -> bool {
        self.hops.iter().any(|h| h.degraded)
    }

    /// Consecutive hops must chain: the receiver of hop `k` transmits hop
    /// `k + 1`.
    pub fn chain_is_valid(&self) -> bool {
        self.hops.windows(2).all(|w| w[0].rx == w[1].tx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticastTree {
    pub stream: usize,
    pub edges: Vec<Hop>,
    /// Columns carrying a vertical leg, ascending.
    pub leg2_columns: Vec<u32>,
    /// Per destination: the cell where its packet left the spread structure.
    pub attachments: Vec<(usize, CellCoord)>,
}

impl MulticastTree {
    pub fn degraded(&self) -> bool {
        self.edges.iter().any(|h| h.degraded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HybridMode {
    Infrastructure,
    AdHoc,
}

/// Node ids per cell for one eligibility class, in ascending id order.
#[derive(Debug, Clone)]
pub struct CellOccupancy {
    cells: Vec<Vec<usize>>,
}

impl CellOccupancy {
    pub fn build<T: Real>(
        inst: &NetworkInstance<T>,
        lat: &Lattice<T>,
        eligible: impl Fn(usize, Role) -> bool,
    ) -> Result<Self> {
        let mut cells = vec![Vec::new(); lat.g as usize];
        for (i, (&role, pos)) in inst.roles.iter().zip(&inst.positions).enumerate() {
            if eligible(i, role) {
                cells[lat.cell_index(cell_of(pos, lat)?)].push(i);
            }
        }
        Ok(CellOccupancy { cells })
    }

    /// The relay-eligible class of the instance's model: source nodes in
    /// asymmetric networks, every node in multicast, clients in cluster,
    /// wireless nodes in hybrid.
    pub fn relay_eligible<T: Real>(inst: &NetworkInstance<T>, lat: &Lattice<T>) -> Result<Self> {
        let keep = match inst.model {
            Model::Asymmetric => Role::Source,
            Model::Multicast => Role::Wireless,
            Model::Cluster => Role::Client,
            Model::Hybrid => Role::Wireless,
        };
        Self::build(inst, lat, |_, r| r == keep)
    }

    pub fn in_cell<T: Real>(&self, lat: &Lattice<T>, cell: CellCoord) -> &[usize] {
        &self.cells[lat.cell_index(cell)]
    }

    pub fn counts(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().map(|c| c.len())
    }
}

/// Result of one relay scan: the best candidate meeting the median threshold
/// and the best candidate overall.
struct Scan {
    qualified: Option<usize>,
    any: Option<usize>,
}

fn scan_cell<T: Real>(
    from: usize,
    candidates: &[usize],
    inst: &NetworkInstance<T>,
    exclude: &[usize],
) -> Scan {
    let f_m = inst.fading.model.f_m;
    let mut best_q: Option<(T, usize)> = None;
    let mut best_a: Option<(T, usize)> = None;
    for &c in candidates {
        if c == from || exclude.contains(&c) {
            continue;
        }
        let f = inst
            .fading
            .sample(from, c)
            .expect("from != candidate by construction");
        // strictly-greater keeps the smallest id on ties
        if best_a.is_none_or(|(bf, _)| f > bf) {
            best_a = Some((f, c));
        }
        if f >= f_m && best_q.is_none_or(|(bf, _)| f > bf) {
            best_q = Some((f, c));
        }
    }
    Scan {
        qualified: best_q.map(|(_, c)| c),
        any: best_a.map(|(_, c)| c),
    }
}

/// Picks the relay-eligible node in `cell` whose fading to `from` is at least
/// `f_m`, preferring the largest coefficient and breaking ties toward the
/// smallest id. Errors with `NoEligibleRelay` when no candidate qualifies;
/// the caller decides the degraded fallback.
pub fn relay_in_cell<T: Real>(
    from: usize,
    cell: CellCoord,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    occ: &CellOccupancy,
    exclude: &[usize],
) -> Result<usize> {
    let scan = scan_cell(from, occ.in_cell(lat, cell), inst, exclude);
    scan.qualified
        .ok_or(Error::NoEligibleRelay(cell.v1, cell.v2))
}

/// Relay choice with the degraded fallback applied: `None` only when the
/// cell holds no candidate at all.
fn pick_hop<T: Real>(
    carrier: usize,
    cell: CellCoord,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    occ: &CellOccupancy,
    exclude: &[usize],
    leg: LegTag,
) -> Option<Hop> {
    let scan = scan_cell(carrier, occ.in_cell(lat, cell), inst, exclude);
    match (scan.qualified, scan.any) {
        (Some(rx), _) => Some(Hop { tx: carrier, rx, leg, degraded: false }),
        (None, Some(rx)) => Some(Hop { tx: carrier, rx, leg, degraded: true }),
        (None, None) => None,
    }
}

/// Delivers a packet held by `carrier` to `dest` inside one cell: a direct
/// hop when their coefficient is at least `f_m`, otherwise two hops through a
/// relay whose links both meet the threshold.
pub fn in_cell_delivery<T: Real>(
    carrier: usize,
    dest: usize,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    occ: &CellOccupancy,
) -> Vec<Hop> {
    if carrier == dest {
        return Vec::new();
    }
    let f_m = inst.fading.model.f_m;
    let direct = inst.fading.sample(carrier, dest).expect("carrier != dest");
    if direct >= f_m {
        return vec![Hop { tx: carrier, rx: dest, leg: LegTag::InCellFinal, degraded: false }];
    }

    // rank two-link relays by the weaker of their coefficients, ties to the
    // smallest id
    let cell = match cell_of(&inst.positions[dest], lat) {
        Ok(c) => c,
        Err(_) => {
            return vec![Hop { tx: carrier, rx: dest, leg: LegTag::InCellFinal, degraded: true }]
        }
    };
    let mut best_q: Option<(T, usize)> = None;
    let mut best_a: Option<(T, usize)> = None;
    for &r in occ.in_cell(lat, cell) {
        if r == carrier || r == dest {
            continue;
        }
        let f1 = inst.fading.sample(carrier, r).expect("distinct");
        let f2 = inst.fading.sample(r, dest).expect("distinct");
        let weak = f1.min(f2);
        if best_a.is_none_or(|(bf, _)| weak > bf) {
            best_a = Some((weak, r));
        }
        if f1 >= f_m && f2 >= f_m && best_q.is_none_or(|(bf, _)| weak > bf) {
            best_q = Some((weak, r));
        }
    }
    match (best_q, best_a) {
        (Some((_, r)), _) => vec![
            Hop { tx: carrier, rx: r, leg: LegTag::InCellRelay, degraded: false },
            Hop { tx: r, rx: dest, leg: LegTag::InCellFinal, degraded: false },
        ],
        // no relay meets both thresholds: best available relay, flagged
        (None, Some((_, r))) => {
            let d1 = inst.fading.sample(carrier, r).expect("distinct") < f_m;
            let d2 = inst.fading.sample(r, dest).expect("distinct") < f_m;
            vec![
                Hop { tx: carrier, rx: r, leg: LegTag::InCellRelay, degraded: d1 },
                Hop { tx: r, rx: dest, leg: LegTag::InCellFinal, degraded: d2 },
            ]
        }
        // no other node in the cell: direct degraded hop
        (None, None) => {
            vec![Hop { tx: carrier, rx: dest, leg: LegTag::InCellFinal, degraded: true }]
        }
    }
}

/// Walks one leg of an L-route: hops cell by cell toward `target`, changing
/// only the given coordinate. Cells without any candidate are crossed by a
/// single longer, degraded hop.
#[allow(clippy::too_many_arguments)]
fn walk_leg<T: Real>(
    carrier: &mut usize,
    current: &mut CellCoord,
    target: CellCoord,
    vertical: bool,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    occ: &CellOccupancy,
    hops: &mut Vec<Hop>,
    cells: &mut Vec<CellCoord>,
    leg: LegTag,
) {
    loop {
        let (cur, tgt) = if vertical { (current.v2, target.v2) } else { (current.v1, target.v1) };
        if cur == tgt {
            break;
        }
        let step: i64 = if tgt > cur { 1 } else { -1 };
        let next = if vertical {
            CellCoord { v1: current.v1, v2: (current.v2 as i64 + step) as u32 }
        } else {
            CellCoord { v1: (current.v1 as i64 + step) as u32, v2: current.v2 }
        };
        cells.push(next);
        if let Some(mut hop) = pick_hop(*carrier, next, inst, lat, occ, &[], leg) {
            // a hop that skipped one or more empty cells violates the
            // neighbouring-cell rule and counts as degraded
            if let Ok(tx_cell) = cell_of(&inst.positions[*carrier], lat) {
                let gap = tx_cell.v1.abs_diff(next.v1) + tx_cell.v2.abs_diff(next.v2);
                if gap > 1 {
                    hop.degraded = true;
                }
            }
            *carrier = hop.rx;
            hops.push(hop);
        }
        *current = next;
    }
}

/// The asymmetric-scheme route: a vertical leg along the source's column, a
/// horizontal leg along the destination's row, then in-cell delivery.
pub fn l_route<T: Real>(
    stream: usize,
    src: usize,
    dst: usize,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    occ: &CellOccupancy,
) -> Result<Route> {
    let src_cell = cell_of(&inst.positions[src], lat)?;
    let dst_cell = cell_of(&inst.positions[dst], lat)?;
    let mut hops = Vec::new();
    let mut cells = vec![src_cell];
    let mut carrier = src;
    let mut current = src_cell;

    let corner = CellCoord { v1: src_cell.v1, v2: dst_cell.v2 };
    walk_leg(
        &mut carrier, &mut current, corner, true, inst, lat, occ, &mut hops, &mut cells,
        LegTag::Vertical,
    );
    walk_leg(
        &mut carrier, &mut current, dst_cell, false, inst, lat, occ, &mut hops, &mut cells,
        LegTag::Horizontal,
    );

    // the legs normally leave the packet with a relay inside the destination
    // cell; if every candidate cell on the way was empty it is delivered by
    // one long degraded hop
    let carrier_cell = cell_of(&inst.positions[carrier], lat)?;
    if carrier_cell == dst_cell {
        hops.extend(in_cell_delivery(carrier, dst, inst, lat, occ));
    } else {
        hops.push(Hop { tx: carrier, rx: dst, leg: LegTag::InCellFinal, degraded: true });
    }
    Ok(Route { stream, hops, cells_crossed: cells })
}

/// Spacing (in cells) between the vertical legs of a multicast tree:
/// `max(1, round(n^{(1-d)/2} / (3 sqrt(ln n))))`.
pub fn multicast_spacing<T: Real>(n: usize, d: T) -> u32 {
    let nf = n as f64;
    let df = d.to_f64().unwrap_or(0.5);
    let h = nf.powf((1.0 - df) / 2.0) / (3.0 * nf.ln().sqrt());
    (h.round().max(1.0)) as u32
}

/// Builds the three-leg multicast tree for one demand.
///
/// Leg 1 spreads the packet across the source's row in both directions;
/// leg 2 propagates every `h`-th column (aligned to the source's column) over
/// its full height; leg 3 carries the packet from the nearest leg-2 column
/// horizontally to each destination's cell, where in-cell delivery finishes.
/// A cell holds the packet after its first reception; later legs re-use the
/// holder instead of receiving again, which keeps the structure a tree.
pub fn multicast_tree<T: Real>(
    stream: usize,
    src: usize,
    dests: &[usize],
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    occ: &CellOccupancy,
) -> Result<MulticastTree> {
    let h = multicast_spacing(inst.n, inst.d);
    let src_cell = cell_of(&inst.positions[src], lat)?;
    let mut holders: Vec<Option<usize>> = vec![None; lat.g as usize];
    holders[lat.cell_index(src_cell)] = Some(src);
    let mut edges = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn extend<T: Real>(
        carrier0: usize,
        path: impl Iterator<Item = CellCoord>,
        leg: LegTag,
        inst: &NetworkInstance<T>,
        lat: &Lattice<T>,
        occ: &CellOccupancy,
        holders: &mut [Option<usize>],
        edges: &mut Vec<Hop>,
    ) {
        let mut carrier = carrier0;
        for cell in path {
            let idx = lat.cell_index(cell);
            if let Some(held) = holders[idx] {
                carrier = held;
                continue;
            }
            if let Some(hop) = pick_hop(carrier, cell, inst, lat, occ, &[], leg) {
                carrier = hop.rx;
                holders[idx] = Some(hop.rx);
                edges.push(hop);
            }
            // empty cell: the packet keeps travelling with the same carrier
        }
    }

    // leg 1: both directions along the source's row
    let row = src_cell.v2;
    extend(
        src,
        ((src_cell.v1 + 1)..=lat.r).map(|c| CellCoord { v1: c, v2: row }),
        LegTag::Leg1,
        inst, lat, occ, &mut holders, &mut edges,
    );
    extend(
        src,
        (1..src_cell.v1).rev().map(|c| CellCoord { v1: c, v2: row }),
        LegTag::Leg1,
        inst, lat, occ, &mut holders, &mut edges,
    );

    // leg 2: full columns at every h-th column aligned with the source's
    let leg2_columns: Vec<u32> = (1..=lat.r)
        .filter(|c| (*c as i64 - src_cell.v1 as i64).rem_euclid(h as i64) == 0)
        .collect();
    for &col in &leg2_columns {
        let seed_cell = CellCoord { v1: col, v2: row };
        let Some(seed_holder) = holders[lat.cell_index(seed_cell)] else {
            continue; // leg 1 never reached this column (empty cells)
        };
        extend(
            seed_holder,
            ((row + 1)..=lat.r).map(|v2| CellCoord { v1: col, v2 }),
            LegTag::Leg2,
            inst, lat, occ, &mut holders, &mut edges,
        );
        extend(
            seed_holder,
            (1..row).rev().map(|v2| CellCoord { v1: col, v2 }),
            LegTag::Leg2,
            inst, lat, occ, &mut holders, &mut edges,
        );
    }

    // leg 3: nearest leg-2 column to each destination, ties toward the
    // smaller column index, then a horizontal run within the destination row
    let mut attachments = Vec::with_capacity(dests.len());
    for &dest in dests {
        let dc = cell_of(&inst.positions[dest], lat)?;
        let attach = if holders[lat.cell_index(dc)].is_some() {
            dc
        } else {
            let col = *leg2_columns
                .iter()
                .min_by_key(|c| (c.abs_diff(dc.v1), **c))
                .expect("the source column always carries a vertical leg");
            let start = CellCoord { v1: col, v2: dc.v2 };
            let step: i64 = if dc.v1 >= col { 1 } else { -1 };
            let path: Vec<CellCoord> = (0..=col.abs_diff(dc.v1))
                .map(|k| CellCoord { v1: (col as i64 + step * k as i64) as u32, v2: dc.v2 })
                .collect();
            // enter at the held cell closest to the destination, then relay
            // the rest of the way
            if let Some(enter) = path.iter().rposition(|c| holders[lat.cell_index(*c)].is_some()) {
                let carrier = holders[lat.cell_index(path[enter])].unwrap();
                extend(
                    carrier,
                    path[enter + 1..].iter().copied(),
                    LegTag::Leg3,
                    inst, lat, occ, &mut holders, &mut edges,
                );
            } else {
                // the column never received the packet: fall back to a long
                // degraded hop straight from the source
                let idx = lat.cell_index(dc);
                let scan = scan_cell(src, occ.in_cell(lat, dc), inst, &[dest]);
                if let Some(rx) = scan.qualified.or(scan.any) {
                    holders[idx] = Some(rx);
                    edges.push(Hop { tx: src, rx, leg: LegTag::Leg3, degraded: true });
                }
            }
            start
        };
        match holders[lat.cell_index(dc)] {
            Some(holder) => edges.extend(in_cell_delivery(holder, dest, inst, lat, occ)),
            None => edges.push(Hop { tx: src, rx: dest, leg: LegTag::InCellFinal, degraded: true }),
        }
        attachments.push((dest, attach));
    }

    Ok(MulticastTree { stream, edges, leg2_columns, attachments })
}

/// Result of attaching a client to a cluster head (or a wireless node to an
/// access point).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub head: usize,
    /// The `f >= f_m` rule (or even the own-cell rule) could not be honoured.
    pub degraded: bool,
    /// No head in the client's own cell; the nearest one elsewhere serves it.
    pub out_of_cell: bool,
}

/// Finds a head in the client's own cell with fading at least `f_m`,
/// tie-broken like `relay_in_cell`. Falls back to the best head in the cell,
/// then to the nearest head anywhere, flagging the stream.
pub fn cluster_attach<T: Real>(
    client: usize,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    heads: &CellOccupancy,
) -> Result<Attachment> {
    let cell = cell_of(&inst.positions[client], lat)?;
    let scan = scan_cell(client, heads.in_cell(lat, cell), inst, &[]);
    if let Some(head) = scan.qualified {
        return Ok(Attachment { head, degraded: false, out_of_cell: false });
    }
    if let Some(head) = scan.any {
        return Ok(Attachment { head, degraded: true, out_of_cell: false });
    }
    // empty cell: nearest head globally, ties toward the smaller id
    let head_role = match inst.model {
        Model::Hybrid => Role::AccessPoint,
        _ => Role::ClusterHead,
    };
    let mut best: Option<(T, usize)> = None;
    for i in inst.nodes_with_role(head_role) {
        let d = inst.positions[client].distance(&inst.positions[i]);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    match best {
        Some((_, head)) => Ok(Attachment { head, degraded: true, out_of_cell: true }),
        None => Err(Error::NoHeadInCell(cell.v1, cell.v2)),
    }
}

/// A hybrid-network route in the requested mode.
///
/// Infrastructure: one wireless hop to a nearby access point, a wired
/// backhaul edge, and one wireless hop from an access point near the
/// destination. Ad hoc: an L-route among the wireless nodes, ignoring the
/// access points entirely.
pub fn hybrid_route<T: Real>(
    stream: usize,
    src: usize,
    dst: usize,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    occ: &CellOccupancy,
    mode: HybridMode,
) -> Result<Route> {
    match mode {
        HybridMode::AdHoc => l_route(stream, src, dst, inst, lat, occ),
        HybridMode::Infrastructure => {
            let up = cluster_attach(src, inst, lat, occ)?;
            let down = cluster_attach(dst, inst, lat, occ)?;
            let mut hops = vec![Hop {
                tx: src,
                rx: up.head,
                leg: LegTag::Access,
                degraded: up.degraded,
            }];
            if up.head != down.head {
                hops.push(Hop { tx: up.head, rx: down.head, leg: LegTag::Backhaul, degraded: false });
            }
            hops.push(Hop { tx: down.head, rx: dst, leg: LegTag::Access, degraded: down.degraded });
            let cells = vec![
                cell_of(&inst.positions[src], lat)?,
                cell_of(&inst.positions[dst], lat)?,
            ];
            Ok(Route { stream, hops, cells_crossed: cells })
        }
    }
}

/// Builds all asymmetric L-routes of an instance.
pub fn asymmetric_routes<T: Real>(
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
) -> Result<Vec<Route>> {
    if inst.model != Model::Asymmetric {
        return Err(Error::invalid("asymmetric_routes needs an asymmetric instance"));
    }
    let occ = CellOccupancy::relay_eligible(inst, lat)?;
    inst.demands
        .par_iter()
        .map(|dmd| match (dmd.source, dmd.dests.as_slice()) {
            (Endpoint::Node(s), [Endpoint::Node(t)]) => {
                l_route(dmd.stream, s, *t, inst, lat, &occ)
            }
            _ => Err(Error::invalid("malformed asymmetric demand")),
        })
        .collect()
}

/// Builds all multicast trees of an instance.
pub fn multicast_trees<T: Real>(
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
) -> Result<Vec<MulticastTree>> {
    if inst.model != Model::Multicast {
        return Err(Error::invalid("multicast_trees needs a multicast instance"));
    }
    let occ = CellOccupancy::relay_eligible(inst, lat)?;
    inst.demands
        .par_iter()
        .map(|dmd| {
            let Endpoint::Node(src) = dmd.source else {
                return Err(Error::invalid("malformed multicast demand"));
            };
            let dests: Vec<usize> = dmd
                .dests
                .iter()
                .map(|e| match e {
                    Endpoint::Node(v) => Ok(*v),
                    Endpoint::AnyHead => Err(Error::invalid("multicast demand with any-head")),
                })
                .collect::<Result<_>>()?;
            multicast_tree(dmd.stream, src, &dests, inst, lat, &occ)
        })
        .collect()
}

/// Builds the single-hop cluster routes: per client one uplink to its head
/// and one downlink back.
pub fn cluster_routes<T: Real>(inst: &NetworkInstance<T>, lat: &Lattice<T>) -> Result<Vec<Route>> {
    if inst.model != Model::Cluster {
        return Err(Error::invalid("cluster_routes needs a cluster instance"));
    }
    let heads = CellOccupancy::build(inst, lat, |_, r| r == Role::ClusterHead)?;
    inst.demands
        .par_iter()
        .map(|dmd| {
            let (client, uplink) = match (dmd.source, dmd.dests.as_slice()) {
                (Endpoint::Node(c), [Endpoint::AnyHead]) => (c, true),
                (Endpoint::AnyHead, [Endpoint::Node(c)]) => (*c, false),
                _ => return Err(Error::invalid("malformed cluster demand")),
            };
            let att = cluster_attach(client, inst, lat, &heads)?;
            let hop = if uplink {
                Hop { tx: client, rx: att.head, leg: LegTag::Access, degraded: att.degraded }
            } else {
                Hop { tx: att.head, rx: client, leg: LegTag::Access, degraded: att.degraded }
            };
            Ok(Route {
                stream: dmd.stream,
                hops: vec![hop],
                cells_crossed: vec![cell_of(&inst.positions[client], lat)?],
            })
        })
        .collect()
}

/// Builds all hybrid routes in the requested mode.
pub fn hybrid_routes<T: Real>(
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
    mode: HybridMode,
) -> Result<Vec<Route>> {
    if inst.model != Model::Hybrid {
        return Err(Error::invalid("hybrid_routes needs a hybrid instance"));
    }
    let occ = match mode {
        HybridMode::AdHoc => CellOccupancy::relay_eligible(inst, lat)?,
        HybridMode::Infrastructure => {
            CellOccupancy::build(inst, lat, |_, r| r == Role::AccessPoint)?
        }
    };
    inst.demands
        .par_iter()
        .map(|dmd| match (dmd.source, dmd.dests.as_slice()) {
            (Endpoint::Node(s), [Endpoint::Node(t)]) => {
                hybrid_route(dmd.stream, s, *t, inst, lat, &occ, mode)
            }
            _ => Err(Error::invalid("malformed hybrid demand")),
        })
        .collect()
}

/// Per-cell load figures: distinct routes touching each cell, exact reception
/// counts, and the column/row concentration figures `M_j` and `N_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLoad {
    pub r: u32,
    /// Distinct streams with at least one reception in the cell.
    pub routes_crossing: Vec<u32>,
    /// Wireless receptions per cell (backhaul edges excluded).
    pub receptions: Vec<u32>,
    /// Per column: primary nodes whose cell shares that column.
    pub sources_per_column: Vec<u32>,
    /// Per row: secondary nodes whose cell shares that row.
    pub dests_per_row: Vec<u32>,
}

impl CellLoad {
    pub fn max_receptions(&self) -> u32 {
        self.receptions.iter().copied().max().unwrap_or(0)
    }

    pub fn max_routes_crossing(&self) -> u32 {
        self.routes_crossing.iter().copied().max().unwrap_or(0)
    }

    pub fn max_sources_per_column(&self) -> u32 {
        self.sources_per_column.iter().copied().max().unwrap_or(0)
    }

    pub fn max_dests_per_row(&self) -> u32 {
        self.dests_per_row.iter().copied().max().unwrap_or(0)
    }
}

/// Aggregates loads over `(stream, hops)` lists (routes or tree edges).
pub fn cell_loads<'a, T: Real>(
    streams: impl IntoIterator<Item = (usize, &'a [Hop])>,
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
) -> Result<CellLoad> {
    let g = lat.g as usize;
    let mut receptions = vec![0u32; g];
    let mut routes_crossing = vec![0u32; g];
    let mut touched = Vec::new();
    for (_stream, hops) in streams {
        touched.clear();
        for hop in hops {
            if hop.leg == LegTag::Backhaul {
                continue;
            }
            let idx = lat.cell_index(cell_of(&inst.positions[hop.rx], lat)?);
            receptions[idx] += 1;
            touched.push(idx);
        }
        touched.sort_unstable();
        touched.dedup();
        for &idx in &touched {
            routes_crossing[idx] += 1;
        }
    }

    let (src_role, dst_role) = match inst.model {
        Model::Asymmetric => (Role::Source, Role::Destination),
        Model::Multicast => (Role::Wireless, Role::Wireless),
        Model::Cluster => (Role::Client, Role::ClusterHead),
        Model::Hybrid => (Role::Wireless, Role::AccessPoint),
    };
    let mut sources_per_column = vec![0u32; lat.r as usize];
    let mut dests_per_row = vec![0u32; lat.r as usize];
    for (i, &role) in inst.roles.iter().enumerate() {
        let cell = cell_of(&inst.positions[i], lat)?;
        if role == src_role {
            sources_per_column[(cell.v1 - 1) as usize] += 1;
        }
        if role == dst_role {
            dests_per_row[(cell.v2 - 1) as usize] += 1;
        }
    }

    Ok(CellLoad {
        r: lat.r,
        routes_crossing,
        receptions,
        sources_per_column,
        dests_per_row,
    })
}
