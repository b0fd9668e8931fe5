//! Monte Carlo verification of the concentration claims and the scaling
//! campaigns that estimate throughput exponents.
//!
//! A campaign fans a seed out into per-trial seeds with a splittable counter,
//! so results are identical whether trials run serially or across any number
//! of workers. Each trial builds an instance, routes it, measures the cell
//! loads, and evaluates the per-claim booleans; an optional frame simulation
//! adds the SINR-floor statistic.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{multicast_route_cap, urn_concentration_bound, asymmetric_route_cap, REGIME_GUARD};
use crate::channel::{ChannelParams, FadingModel, PairFading};
use crate::error::{Error, Result};
use crate::geometry::{cell_of, Lattice};
use crate::routing::{
    asymmetric_routes, cell_loads, cluster_routes, hybrid_routes, multicast_trees, CellLoad,
    HybridMode,
};
use crate::schedule::{
    build_frame, max_clients_per_cell, simulate_frame, throughput_asymmetric, throughput_cluster,
    throughput_hybrid, throughput_multicast, FloorStats, ThroughputMode,
};
use crate::traffic::{
    gen_asymmetric, gen_cluster, gen_hybrid, gen_multicast, Model, NetworkInstance, Role,
};
use crate::{real, rng, Real};

/// Outcome of the balls-in-urns verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnConcentrationOutcome<T> {
    pub trials: usize,
    /// Fraction of trials in which every urn stayed inside the band.
    pub frequency: T,
    /// The analytic lower bound (possibly negative, hence vacuous).
    pub bound: T,
}

/// Drops `n` balls into `m` urns per trial and checks
/// `(1 - eps) n/m <= b_j <= (1 + eps) n/m` for every urn.
pub fn verify_urn_concentration<T: Real>(
    trials: usize,
    n: usize,
    m: usize,
    eps: T,
    seed: u64,
) -> Result<UrnConcentrationOutcome<T>> {
    if trials == 0 {
        return Err(Error::invalid("verify_urn_concentration needs at least one trial"));
    }
    let bound = urn_concentration_bound(n, m, eps)?;
    let epsf = eps.to_f64().unwrap_or(0.0);
    let lo = (1.0 - epsf) * n as f64 / m as f64;
    let hi = (1.0 + epsf) * n as f64 / m as f64;
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::chacha(seed, rng::TAG_TRIAL, t as u64);
            let mut urns = vec![0u32; m];
            for _ in 0..n {
                urns[rng.gen_range(0..m)] += 1;
            }
            urns.iter().all(|&b| (b as f64) >= lo && (b as f64) <= hi) as usize
        })
        .sum();
    Ok(UrnConcentrationOutcome {
        trials,
        frequency: real::<T>(hits as f64 / trials as f64),
        bound,
    })
}

/// Outcome of the fading-maximum verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingMaximumOutcome<T> {
    pub trials: usize,
    /// Fraction of trials with `max f_ij <= (3/q) ln n`.
    pub frequency: T,
    pub threshold: T,
    /// Set when the pair budget forced subsampling.
    pub subsampled: bool,
}

/// Streams the maximum over the `n(n-1)/2` pair coefficients (or a uniform
/// subsample when the budget is smaller) and compares it to `(3/q) ln n`.
pub fn verify_fading_maximum<T: Real>(
    trials: usize,
    n: usize,
    model: &FadingModel<T>,
    seed: u64,
    pair_budget: u64,
) -> Result<FadingMaximumOutcome<T>> {
    if trials == 0 || n < 2 {
        return Err(Error::invalid("verify_fading_maximum needs trials >= 1 and n >= 2"));
    }
    let total_pairs = n as u64 * (n as u64 - 1) / 2;
    let subsampled = total_pairs > pair_budget;
    let threshold = real::<T>(3.0) / model.q * real::<T>((n as f64).ln());
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let pf = PairFading::new(rng::derive(seed, rng::TAG_TRIAL, t as u64), *model);
            let mut max = T::zero();
            if subsampled {
                let mut rng = rng::chacha(seed, rng::TAG_FADING, t as u64);
                for _ in 0..pair_budget {
                    let i = rng.gen_range(0..n);
                    let j = rng.gen_range(0..n - 1);
                    let j = if j >= i { j + 1 } else { j };
                    let f = pf.sample(i, j).expect("i != j");
                    if f > max {
                        max = f;
                    }
                }
            } else {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let f = pf.sample(i, j).expect("i != j");
                        if f > max {
                            max = f;
                        }
                    }
                }
            }
            (max <= threshold) as usize
        })
        .sum();
    Ok(FadingMaximumOutcome {
        trials,
        frequency: real::<T>(hits as f64 / trials as f64),
        threshold,
        subsampled,
    })
}

/// Maximum fading coefficient over the instance's node pairs, subsampled
/// uniformly once the pair count exceeds the budget.
pub fn max_pair_fading<T: Real>(inst: &NetworkInstance<T>, pair_budget: u64) -> T {
    let n = inst.node_count();
    if n < 2 {
        return T::zero();
    }
    let total_pairs = n as u64 * (n as u64 - 1) / 2;
    let mut max = T::zero();
    if total_pairs > pair_budget {
        let mut rng = rng::chacha(inst.seed, rng::TAG_FADING, 1);
        for _ in 0..pair_budget {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n - 1);
            let j = if j >= i { j + 1 } else { j };
            let f = inst.fading.sample(i, j).expect("i != j");
            if f > max {
                max = f;
            }
        }
    } else {
        for i in 0..n {
            for j in (i + 1)..n {
                let f = inst.fading.sample(i, j).expect("i != j");
                if f > max {
                    max = f;
                }
            }
        }
    }
    max
}

/// Per-claim booleans for one generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OccupancyOutcome {
    /// Source counts per primary-lattice cell within `[9 ln n / 2, 27 ln n / 2]`.
    pub cell_band: Option<bool>,
    /// Column source counts at most `(9/2) sqrt(n ln n)`.
    pub column_cap: Option<bool>,
    /// Row destination counts under the d-regime bound.
    pub row_cap: Option<bool>,
    /// Cluster-lattice client counts within `[9/2, 27/2] n^{1-d} ln n`.
    pub client_band: Option<bool>,
    /// Cluster-lattice head counts within `[9/2, 27/2] ln n`.
    pub head_band: Option<bool>,
}

/// Compares exact per-cell counts with the scheme's concentration bands.
/// Which claims apply depends on the instance's model.
pub fn verify_occupancy<T: Real>(
    inst: &NetworkInstance<T>,
    lat: &Lattice<T>,
) -> Result<OccupancyOutcome> {
    let n = inst.n as f64;
    let ln_n = n.ln();
    let d = inst.d.to_f64().unwrap_or(0.5);
    let mut out = OccupancyOutcome::default();

    let count_cells = |role: Role| -> Result<Vec<u32>> {
        let mut counts = vec![0u32; lat.g as usize];
        for i in inst.nodes_with_role(role) {
            counts[lat.cell_index(cell_of(&inst.positions[i], lat)?)] += 1;
        }
        Ok(counts)
    };

    match inst.model {
        Model::Asymmetric | Model::Multicast | Model::Hybrid => {
            let primary_role = match inst.model {
                Model::Asymmetric => Role::Source,
                _ => Role::Wireless,
            };
            let counts = count_cells(primary_role)?;
            let lo = 4.5 * ln_n;
            let hi = 13.5 * ln_n;
            out.cell_band =
                Some(counts.iter().all(|&c| (c as f64) >= lo && (c as f64) <= hi));

            let mut per_column = vec![0u32; lat.r as usize];
            for i in inst.nodes_with_role(primary_role) {
                per_column[(cell_of(&inst.positions[i], lat)?.v1 - 1) as usize] += 1;
            }
            out.column_cap = Some(
                per_column.iter().all(|&c| (c as f64) <= 4.5 * (n * ln_n).sqrt()),
            );

            if inst.model == Model::Asymmetric && (d - 0.5).abs() + 1e-12 >= REGIME_GUARD {
                let mut per_row = vec![0u32; lat.r as usize];
                for i in inst.nodes_with_role(Role::Destination) {
                    per_row[(cell_of(&inst.positions[i], lat)?.v2 - 1) as usize] += 1;
                }
                let cap = if d > 0.5 {
                    4.5 * n.powf(d - 0.5) * ln_n.sqrt()
                } else {
                    2.0 / (1.0 - 2.0 * d)
                };
                out.row_cap = Some(per_row.iter().all(|&c| (c as f64) <= cap));
            }
        }
        Model::Cluster => {
            let clients = count_cells(Role::Client)?;
            let lo = 4.5 * n.powf(1.0 - d) * ln_n;
            let hi = 13.5 * n.powf(1.0 - d) * ln_n;
            out.client_band =
                Some(clients.iter().all(|&c| (c as f64) >= lo && (c as f64) <= hi));
            let heads = count_cells(Role::ClusterHead)?;
            let lo = 4.5 * ln_n;
            let hi = 13.5 * ln_n;
            out.head_band = Some(heads.iter().all(|&c| (c as f64) >= lo && (c as f64) <= hi));
        }
    }
    Ok(out)
}

/// Ordinary least squares on `(ln n, ln aggregate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit<T> {
    pub points: Vec<(T, T)>,
    pub slope: T,
    pub intercept: T,
    /// Root-mean-square residual in log space.
    pub residual: T,
}

pub fn fit_scaling<T: Real>(points: &[(T, T)]) -> Result<ScalingFit<T>> {
    if points.len() < 3 {
        return Err(Error::invalid("scaling fit needs at least 3 points"));
    }
    if points.iter().any(|&(n, a)| n <= T::zero() || a <= T::zero()) {
        return Err(Error::invalid("scaling fit needs positive coordinates"));
    }
    let logs: Vec<(T, T)> = points.iter().map(|&(n, a)| (n.ln(), a.ln())).collect();
    let len = real::<T>(logs.len() as f64);
    let mean_x = logs.iter().map(|p| p.0).fold(T::zero(), |s, v| s + v) / len;
    let mean_y = logs.iter().map(|p| p.1).fold(T::zero(), |s, v| s + v) / len;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for &(x, y) in &logs {
        sxx = sxx + (x - mean_x) * (x - mean_x);
        sxy = sxy + (x - mean_x) * (y - mean_y);
    }
    if sxx == T::zero() {
        return Err(Error::invalid("scaling fit needs at least two distinct n"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut sse = T::zero();
    for &(x, y) in &logs {
        let e = y - (intercept + slope * x);
        sse = sse + e * e;
    }
    Ok(ScalingFit {
        points: points.to_vec(),
        slope,
        intercept,
        residual: (sse / len).sqrt(),
    })
}

/// Which claims a trial evaluated, with their outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Claims {
    pub cell_band: Option<bool>,
    pub column_cap: Option<bool>,
    pub row_cap: Option<bool>,
    pub cluster_bands: Option<bool>,
    pub fading_max: Option<bool>,
    pub route_cap: Option<bool>,
    pub tree_route_cap: Option<bool>,
    pub sinr_floor: Option<bool>,
}

/// One trial's measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary<T> {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub claims: Claims,
    pub max_cell_receptions: u32,
    pub max_routes_crossing: u32,
    pub max_fading: T,
    pub degraded_hop_fraction: T,
    pub aggregate_measured: T,
    /// Closed-form aggregate; absent where the formula is undefined
    /// (asymmetric d inside the regime guard).
    pub aggregate_formula: Option<T>,
    pub floor: Option<FloorStats>,
}

/// Campaign controls beyond the instance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignOptions {
    /// Simulate a full frame per trial and record the SINR-floor statistic.
    pub simulate_floor: bool,
    /// Pair budget for the per-trial fading maximum (subsampled above it).
    pub fading_pair_budget: u64,
    /// Threshold on the non-degraded floor fraction for the per-trial
    /// `sinr_floor` boolean.
    pub floor_threshold: f64,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            simulate_floor: false,
            fading_pair_budget: 2_000_000,
            floor_threshold: 0.99,
        }
    }
}

/// Aggregated campaign output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult<T> {
    pub model: Model,
    pub d: T,
    pub trials_per_n: usize,
    pub per_trial: Vec<TrialSummary<T>>,
    /// Per-n mean measured aggregate, in grid order.
    pub mean_aggregate: Vec<(usize, T)>,
    /// Fraction of evaluated trials in which each claim held.
    pub claim_frequencies: BTreeMap<String, f64>,
    /// Log-log fit over `mean_aggregate` (needs >= 3 grid points).
    pub fit: Option<ScalingFit<T>>,
}

/// Everything a single trial builds before statistics are taken: the
/// instance, its scheme lattice, the hop lists of every stream, the cell
/// loads, and both throughput figures.
#[derive(Debug, Clone)]
pub struct SchemeBuild<T> {
    pub inst: NetworkInstance<T>,
    pub lattice: Lattice<T>,
    pub streams: Vec<(usize, Vec<crate::routing::Hop>)>,
    pub loads: CellLoad,
    pub aggregate_measured: T,
    /// Absent where the closed form is undefined (asymmetric d inside the
    /// regime guard).
    pub aggregate_formula: Option<T>,
}

/// Generates an instance and runs its model's scheme end to end.
pub fn build_scheme<T: Real>(
    model: Model,
    n: usize,
    d: T,
    trial_seed: u64,
    params: ChannelParams<T>,
    fading: FadingModel<T>,
) -> Result<SchemeBuild<T>> {
    let inst = match model {
        Model::Asymmetric => gen_asymmetric(n, d, trial_seed, params, fading)?,
        Model::Multicast => gen_multicast(n, d, trial_seed, params, fading)?,
        Model::Cluster => gen_cluster(n, d, trial_seed, params, fading)?,
        Model::Hybrid => gen_hybrid(n, d, trial_seed, params, fading)?,
    };
    let (lattice, streams): (Lattice<T>, Vec<(usize, Vec<crate::routing::Hop>)>) = match model {
        Model::Asymmetric => {
            let lat = Lattice::build(inst.n)?;
            let routes = asymmetric_routes(&inst, &lat)?;
            (lat, routes.into_iter().map(|r| (r.stream, r.hops)).collect())
        }
        Model::Multicast => {
            let lat = Lattice::build(inst.n)?;
            let trees = multicast_trees(&inst, &lat)?;
            (lat, trees.into_iter().map(|t| (t.stream, t.edges)).collect())
        }
        Model::Cluster => {
            let lat = Lattice::for_cluster(inst.n, d)?;
            let routes = cluster_routes(&inst, &lat)?;
            (lat, routes.into_iter().map(|r| (r.stream, r.hops)).collect())
        }
        Model::Hybrid => {
            // simulate whichever mode the formula comparison prefers
            let t = throughput_hybrid(&inst)?;
            let (mode, lat) = match t.best {
                HybridMode::Infrastructure => {
                    (HybridMode::Infrastructure, Lattice::for_cluster(inst.n, d)?)
                }
                HybridMode::AdHoc => (HybridMode::AdHoc, Lattice::build(inst.n)?),
            };
            let routes = hybrid_routes(&inst, &lat, mode)?;
            (lat, routes.into_iter().map(|r| (r.stream, r.hops)).collect())
        }
    };
    let loads =
        cell_loads(streams.iter().map(|(s, h)| (*s, h.as_slice())), &inst, &lattice)?;

    let (measured, formula) = match model {
        Model::Asymmetric => (
            throughput_asymmetric(&inst, &loads, ThroughputMode::Measured)?.aggregate,
            throughput_asymmetric(&inst, &loads, ThroughputMode::Formula)
                .ok()
                .map(|t| t.aggregate),
        ),
        Model::Multicast => (
            throughput_multicast(&inst, &loads, ThroughputMode::Measured)?.aggregate,
            Some(throughput_multicast(&inst, &loads, ThroughputMode::Formula)?.aggregate),
        ),
        Model::Cluster => {
            let s_max = max_clients_per_cell(&inst, &lattice)?;
            (
                throughput_cluster(&inst, s_max, ThroughputMode::Measured)?.aggregate,
                Some(throughput_cluster(&inst, 0, ThroughputMode::Formula)?.aggregate),
            )
        }
        Model::Hybrid => {
            let t = throughput_hybrid(&inst)?;
            let measured = match t.best {
                HybridMode::Infrastructure => {
                    let s_max = max_clients_per_cell(&inst, &lattice)?;
                    throughput_cluster(&inst, s_max, ThroughputMode::Measured)?.aggregate
                        / real(2.0)
                }
                HybridMode::AdHoc => {
                    let fr = crate::channel::rate(
                        crate::channel::gamma_min(
                            real(inst.n as f64),
                            &inst.fading.model,
                            &inst.params,
                        )?,
                        &inst.params,
                    )?;
                    fr / (real::<T>(9.0) * real::<T>(loads.max_receptions().max(1) as f64))
                        * real(inst.n as f64)
                }
            };
            (measured, Some(t.infrastructure.max(t.adhoc)))
        }
    };

    Ok(SchemeBuild {
        inst,
        lattice,
        streams,
        loads,
        aggregate_measured: measured,
        aggregate_formula: formula,
    })
}

/// Runs one deterministic trial: generate, route, load, verify, and (when
/// enabled) simulate a frame.
pub fn run_trial<T: Real>(
    model: Model,
    n: usize,
    d: T,
    trial_seed: u64,
    params: ChannelParams<T>,
    fading: FadingModel<T>,
    opts: &CampaignOptions,
) -> Result<TrialSummary<T>> {
    let build = build_scheme(model, n, d, trial_seed, params, fading)?;
    let SchemeBuild { inst, lattice: lat, streams, loads, aggregate_measured, aggregate_formula } =
        build;

    let mut claims = Claims::default();
    match model {
        Model::Asymmetric => {
            if let Ok(rmax) = asymmetric_route_cap(real::<T>(n as f64), d) {
                claims.route_cap = Some(real::<T>(loads.max_routes_crossing() as f64) <= rmax);
            }
        }
        Model::Multicast => {
            let rmax = multicast_route_cap(real::<T>(n as f64), d)?;
            claims.tree_route_cap = Some(real::<T>(loads.max_routes_crossing() as f64) <= rmax);
        }
        _ => {}
    }

    let occ = verify_occupancy(&inst, &lat)?;
    claims.cell_band = occ.cell_band;
    claims.column_cap = occ.column_cap;
    claims.row_cap = occ.row_cap;
    claims.cluster_bands = match (occ.client_band, occ.head_band) {
        (Some(a), Some(b)) => Some(a && b),
        _ => None,
    };

    // fading maximum over (sub)sampled pairs of this instance
    let max_fading = max_pair_fading(&inst, opts.fading_pair_budget);
    let fading_cap =
        real::<T>(3.0) / fading.q * real::<T>((inst.node_count() as f64).ln());
    claims.fading_max = Some(max_fading <= fading_cap);

    let mut degraded = 0u64;
    let mut hops = 0u64;
    for (_, hs) in &streams {
        hops += hs.len() as u64;
        degraded += hs.iter().filter(|h| h.degraded).count() as u64;
    }

    let floor = if opts.simulate_floor {
        let frame =
            build_frame(streams.iter().map(|(s, h)| (*s, h.as_slice())), &inst, &lat)?;
        let result = simulate_frame(&frame, &inst)?;
        claims.sinr_floor = Some(result.floor.floor_fraction() >= opts.floor_threshold);
        Some(result.floor)
    } else {
        None
    };

    Ok(TrialSummary {
        trial: 0,
        seed: trial_seed,
        n,
        claims,
        max_cell_receptions: loads.max_receptions(),
        max_routes_crossing: loads.max_routes_crossing(),
        max_fading,
        degraded_hop_fraction: if hops == 0 {
            T::zero()
        } else {
            real(degraded as f64 / hops as f64)
        },
        aggregate_measured,
        aggregate_formula,
        floor,
    })
}

/// Deterministic fan-out over an `n` grid: `trials` independent draws per
/// grid point, aggregated claim frequencies, and the log-log throughput fit.
#[allow(clippy::too_many_arguments)]
pub fn run_campaign<T: Real>(
    model: Model,
    d: T,
    n_grid: &[usize],
    trials: usize,
    params: ChannelParams<T>,
    fading: FadingModel<T>,
    seed: u64,
    opts: &CampaignOptions,
) -> Result<CampaignResult<T>> {
    if n_grid.is_empty() || trials == 0 {
        return Err(Error::invalid("campaign needs a nonempty grid and trials >= 1"));
    }
    let jobs: Vec<(usize, usize, usize)> = n_grid
        .iter()
        .enumerate()
        .flat_map(|(gi, &n)| (0..trials).map(move |t| (gi, n, t)))
        .collect();
    let mut per_trial: Vec<TrialSummary<T>> = jobs
        .into_par_iter()
        .map(|(gi, n, t)| {
            let trial_seed = rng::derive(seed, rng::TAG_TRIAL, (gi * 1_000_003 + t) as u64);
            let mut summary = run_trial(model, n, d, trial_seed, params, fading, opts)?;
            summary.trial = gi * trials + t;
            Ok(summary)
        })
        .collect::<Result<_>>()?;
    per_trial.sort_by_key(|s| s.trial);

    let mut mean_aggregate = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let xs = &per_trial[gi * trials..(gi + 1) * trials];
        let sum = xs.iter().map(|s| s.aggregate_measured).fold(T::zero(), |a, v| a + v);
        mean_aggregate.push((n, sum / real(trials as f64)));
    }

    let mut freq: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut tally = |name: &str, v: Option<bool>| {
        if let Some(b) = v {
            let e = freq.entry(name.to_string()).or_insert((0, 0));
            e.1 += 1;
            if b {
                e.0 += 1;
            }
        }
    };
    for s in &per_trial {
        tally("cell_band", s.claims.cell_band);
        tally("column_cap", s.claims.column_cap);
        tally("row_cap", s.claims.row_cap);
        tally("cluster_bands", s.claims.cluster_bands);
        tally("fading_max", s.claims.fading_max);
        tally("route_cap", s.claims.route_cap);
        tally("tree_route_cap", s.claims.tree_route_cap);
        tally("sinr_floor", s.claims.sinr_floor);
    }
    let claim_frequencies =
        freq.into_iter().map(|(k, (hit, tot))| (k, hit as f64 / tot as f64)).collect();

    let fit = if mean_aggregate.len() >= 3 {
        let pts: Vec<(T, T)> =
            mean_aggregate.iter().map(|&(n, a)| (real::<T>(n as f64), a)).collect();
        fit_scaling(&pts).ok()
    } else {
        None
    };

    Ok(CampaignResult {
        model,
        d,
        trials_per_n: trials,
        per_trial,
        mean_aggregate,
        claim_frequencies,
        fit,
    })
}
