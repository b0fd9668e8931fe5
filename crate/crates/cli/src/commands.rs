//! The four subcommands: run, verify, bounds, sweep.

use std::collections::BTreeMap;

use serde::Serialize;

use capsim_core::bounds::{
    hybrid_crossover_d, asymmetric_bounds, multicast_lower, cluster_bounds, hybrid_lowers, BoundReport,
};
use capsim_core::channel::gamma_min;
use capsim_core::schedule::{build_frame, simulate_frame};
use capsim_core::stats::{
    build_scheme, run_campaign, verify_urn_concentration, verify_fading_maximum, CampaignOptions, CampaignResult,
};
use capsim_core::traffic::{secondary_count, Model};
use capsim_core::{rng, Error as CoreError};

use crate::config::{ExperimentConfig, Format};
use crate::output::{config_hash, write_csv, write_json};

pub enum CommandError {
    Runtime(String),
    StrictFailed,
}

impl From<CoreError> for CommandError {
    fn from(e: CoreError) -> Self {
        CommandError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::Runtime(format!("io error: {e}"))
    }
}

type CmdResult = Result<(), CommandError>;

#[derive(Serialize)]
struct ThroughputRow {
    trial: usize,
    seed: u64,
    n: usize,
    aggregate_measured: f64,
    aggregate_formula: Option<f64>,
    max_cell_receptions: u32,
    floor_fraction: f64,
    degraded_receptions: usize,
}

#[derive(Serialize)]
struct RunReport {
    model: String,
    d: f64,
    fading: String,
    trials: Vec<ThroughputRow>,
}

/// Generates instances, routes them, simulates frames, and writes the
/// throughput and transmission artifacts. Instance-level artifacts
/// (instance.json, routes.csv, transmissions.csv) describe trial 0.
pub fn cmd_run(config: &ExperimentConfig) -> CmdResult {
    if config.dry_run {
        println!(
            "run plan: model={} d={} n={:?} trials={} fading={} seed={} out={}",
            config.model,
            config.d,
            config.n,
            config.trials,
            config.fading,
            config.seed,
            config.out.display()
        );
        return Ok(());
    }
    let model: Model = config.parsed_model().map_err(|e| CommandError::Runtime(e.0))?;
    let fading = config.fading_model().map_err(|e| CommandError::Runtime(e.0))?;
    let params = config.channel_params().map_err(|e| CommandError::Runtime(e.0))?;
    let n = config.n[0];
    let hash = config_hash(config);

    let mut rows = Vec::with_capacity(config.trials);
    for t in 0..config.trials {
        let trial_seed = rng::trial_seed(config.seed, t as u64);
        let build = build_scheme(model, n, config.d, trial_seed, params, fading)?;
        let frame = build_frame(
            build.streams.iter().map(|(s, h)| (*s, h.as_slice())),
            &build.inst,
            &build.lattice,
        )?;
        let result = simulate_frame(&frame, &build.inst)?;

        if t == 0 {
            if config.wants(Format::Json) {
                write_json(&config.out.join("instance.json"), &hash, &build.inst)?;
            }
            if config.wants(Format::Csv) {
                let positions = &build.inst.positions;
                let route_rows = build.streams.iter().flat_map(|(stream, hops)| {
                    hops.iter().enumerate().map(move |(k, h)| {
                        format!(
                            "{},{},{},{},{},{},{},{},{},{}",
                            stream,
                            k,
                            serde_json::to_value(h.leg)
                                .ok()
                                .and_then(|v| v.as_str().map(String::from))
                                .unwrap_or_default(),
                            h.tx,
                            h.rx,
                            positions[h.tx].x,
                            positions[h.tx].y,
                            positions[h.rx].x,
                            positions[h.rx].y,
                            h.degraded
                        )
                    })
                });
                write_csv(
                    &config.out.join("routes.csv"),
                    &hash,
                    "stream,hop,leg,tx,rx,tx_x,tx_y,rx_x,rx_y,degraded",
                    route_rows,
                )?;
                write_csv(
                    &config.out.join("transmissions.csv"),
                    &hash,
                    capsim_core::TransmissionRecord64::CSV_HEADER,
                    result.records.iter().map(|r| r.csv_row()),
                )?;
            }
        }

        rows.push(ThroughputRow {
            trial: t,
            seed: trial_seed,
            n,
            aggregate_measured: build.aggregate_measured,
            aggregate_formula: build.aggregate_formula,
            max_cell_receptions: build.loads.max_receptions(),
            floor_fraction: result.floor.floor_fraction(),
            degraded_receptions: result.floor.degraded,
        });
    }

    if config.wants(Format::Csv) {
        write_csv(
            &config.out.join("throughput.csv"),
            &hash,
            "trial,seed,n,aggregate_measured,aggregate_formula,max_cell_receptions,floor_fraction,degraded_receptions",
            rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    r.trial,
                    r.seed,
                    r.n,
                    r.aggregate_measured,
                    r.aggregate_formula.map(|v| v.to_string()).unwrap_or_default(),
                    r.max_cell_receptions,
                    r.floor_fraction,
                    r.degraded_receptions
                )
            }),
        )?;
    }
    if config.wants(Format::Json) {
        let report = RunReport {
            model: config.model.clone(),
            d: config.d,
            fading: config.fading.clone(),
            trials: rows,
        };
        write_json(&config.out.join("throughput.json"), &hash, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClaimRow {
    claim: String,
    frequency: f64,
    reference: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    urn_band: ClaimRow,
    fading_max: ClaimRow,
    campaign_claims: Vec<ClaimRow>,
    all_pass: bool,
}

/// Monte Carlo verification: balls-in-urns and fading-maximum checks plus a
/// floor-enabled campaign whose per-claim frequencies are compared with the
/// bundled thresholds.
pub fn cmd_verify(config: &ExperimentConfig) -> CmdResult {
    if config.dry_run {
        println!(
            "verify plan: model={} d={} n={:?} trials={} fading={} seed={}",
            config.model, config.d, config.n, config.trials, config.fading, config.seed
        );
        return Ok(());
    }
    let model: Model = config.parsed_model().map_err(|e| CommandError::Runtime(e.0))?;
    let fading = config.fading_model().map_err(|e| CommandError::Runtime(e.0))?;
    let params = config.channel_params().map_err(|e| CommandError::Runtime(e.0))?;
    let n = *config.n.last().expect("validated nonempty");
    let hash = config_hash(config);

    // balls-in-urns at the instance scale: n primary nodes, m(n) urns
    let m = secondary_count(n, config.d);
    let l1 = verify_urn_concentration::<f64>(config.trials.max(10), n, m, 0.5, config.seed)?;
    let sigma = (0.25 / l1.trials as f64).sqrt();
    let urn_band = ClaimRow {
        claim: format!("urn_band n={n} m={m} eps=0.5"),
        frequency: l1.frequency,
        reference: l1.bound,
        pass: l1.frequency >= (l1.bound - 3.0 * sigma).max(0.0),
    };

    let l2 = verify_fading_maximum::<f64>(config.trials.max(10), n, &fading, config.seed, 2_000_000)?;
    let fading_max = ClaimRow {
        claim: format!("fading_max n={n} threshold={}", l2.threshold),
        frequency: l2.frequency,
        reference: 0.95,
        pass: l2.frequency >= 0.95,
    };

    let opts =
        CampaignOptions { simulate_floor: true, ..CampaignOptions::default() };
    let campaign = run_campaign(
        model,
        config.d,
        &config.n,
        config.trials,
        params,
        fading,
        config.seed,
        &opts,
    )?;
    let thresholds: BTreeMap<&str, f64> = [
        ("cell_band", 0.9),
        ("column_cap", 0.9),
        ("row_cap", 0.9),
        ("cluster_bands", 0.9),
        ("fading_max", 0.9),
        ("route_cap", 0.95),
        ("tree_route_cap", 0.95),
        ("sinr_floor", 0.95),
    ]
    .into_iter()
    .collect();
    let campaign_claims: Vec<ClaimRow> = campaign
        .claim_frequencies
        .iter()
        .map(|(k, &f)| {
            let reference = *thresholds.get(k.as_str()).unwrap_or(&0.9);
            ClaimRow { claim: k.clone(), frequency: f, reference, pass: f >= reference }
        })
        .collect();

    let all_pass = urn_band.pass && fading_max.pass && campaign_claims.iter().all(|c| c.pass);
    let report = VerifyReport { urn_band, fading_max, campaign_claims, all_pass };

    println!("claim frequencies (threshold in parentheses):");
    let show = |c: &ClaimRow| {
        println!(
            "  [{}] {} -> {:.4} ({:.4})",
            if c.pass { "pass" } else { "FAIL" },
            c.claim,
            c.frequency,
            c.reference
        );
    };
    show(&report.urn_band);
    show(&report.fading_max);
    report.campaign_claims.iter().for_each(show);

    if config.wants(Format::Json) {
        write_json(&config.out.join("verify.json"), &hash, &report)?;
    }
    if config.wants(Format::Csv) {
        let rows = std::iter::once(&report.urn_band)
            .chain(std::iter::once(&report.fading_max))
            .chain(report.campaign_claims.iter())
            .map(|c| format!("{},{},{},{}", c.claim, c.frequency, c.reference, c.pass));
        write_csv(&config.out.join("verify.csv"), &hash, "claim,frequency,reference,pass", rows)?;
    }

    if config.strict && !report.all_pass {
        return Err(CommandError::StrictFailed);
    }
    Ok(())
}

/// Evaluates the model's closed-form bounds over the n grid.
pub fn cmd_bounds(config: &ExperimentConfig) -> CmdResult {
    if config.dry_run {
        println!("bounds plan: model={} d={} n={:?}", config.model, config.d, config.n);
        return Ok(());
    }
    let model: Model = config.parsed_model().map_err(|e| CommandError::Runtime(e.0))?;
    let fading = config.fading_model().map_err(|e| CommandError::Runtime(e.0))?;
    let params = config.channel_params().map_err(|e| CommandError::Runtime(e.0))?;
    let hash = config_hash(config);

    let mut reports: Vec<BoundReport<f64>> = Vec::with_capacity(config.n.len());
    for &n in &config.n {
        let nf = n as f64;
        let report = match model {
            Model::Asymmetric => asymmetric_bounds(nf, config.d, &params, &fading)?,
            Model::Cluster => cluster_bounds(nf, config.d, &params, &fading)?,
            Model::Multicast => {
                let lower = multicast_lower(nf, config.d, &params, &fading)?;
                let mut components = BTreeMap::new();
                components
                    .insert("gamma_min".to_string(), gamma_min(nf, &fading, &params)?);
                components.insert(
                    "r_max".to_string(),
                    capsim_core::bounds::multicast_route_cap(nf, config.d)?,
                );
                BoundReport { model, n: nf, d: config.d, lower, upper: None, components }
            }
            Model::Hybrid => {
                let (infra, adhoc) = hybrid_lowers(nf, config.d, &params, &fading)?;
                let mut components = BTreeMap::new();
                components.insert("infrastructure".to_string(), infra);
                components.insert("adhoc".to_string(), adhoc);
                components
                    .insert("crossover_d".to_string(), hybrid_crossover_d(nf, &params, &fading)?);
                BoundReport {
                    model,
                    n: nf,
                    d: config.d,
                    lower: infra.max(adhoc),
                    upper: None,
                    components,
                }
            }
        };
        reports.push(report);
    }

    if config.wants(Format::Csv) {
        let header = reports[0].csv_header();
        write_csv(
            &config.out.join("bounds.csv"),
            &hash,
            &header,
            reports.iter().map(|r| r.csv_row()),
        )?;
    }
    if config.wants(Format::Json) {
        #[derive(Serialize)]
        struct BoundsReport<'a> {
            reports: &'a [BoundReport<f64>],
        }
        write_json(&config.out.join("bounds.json"), &hash, &BoundsReport { reports: &reports })?;
    }
    for r in &reports {
        println!(
            "{} n={} d={}: lower={:e}{}",
            r.model,
            r.n,
            r.d,
            r.lower,
            r.upper.map(|u| format!(" upper={u:e}")).unwrap_or_default()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepReport {
    model: String,
    d: f64,
    trials_per_n: usize,
    slope: Option<f64>,
    intercept: Option<f64>,
    residual: Option<f64>,
    mean_aggregate: Vec<(usize, f64)>,
    claim_frequencies: BTreeMap<String, f64>,
}

/// Scaling sweep: a campaign over the n grid, a log-log fit, and a
/// gnuplot-consumable table with the theory bounds side by side.
pub fn cmd_sweep(config: &ExperimentConfig) -> CmdResult {
    if config.dry_run {
        println!(
            "sweep plan: model={} d={} n={:?} trials={} fading={} seed={} workers={}",
            config.model,
            config.d,
            config.n,
            config.trials,
            config.fading,
            config.seed,
            config.workers
        );
        return Ok(());
    }
    let model: Model = config.parsed_model().map_err(|e| CommandError::Runtime(e.0))?;
    let fading = config.fading_model().map_err(|e| CommandError::Runtime(e.0))?;
    let params = config.channel_params().map_err(|e| CommandError::Runtime(e.0))?;
    let hash = config_hash(config);

    let campaign: CampaignResult<f64> = run_campaign(
        model,
        config.d,
        &config.n,
        config.trials,
        params,
        fading,
        config.seed,
        &CampaignOptions::default(),
    )?;

    // theory columns per n
    let mut rows = Vec::with_capacity(config.n.len());
    for (gi, &(n, mean)) in campaign.mean_aggregate.iter().enumerate() {
        let nf = n as f64;
        let (lower, upper) = match model {
            Model::Asymmetric => {
                let r = asymmetric_bounds(nf, config.d, &params, &fading)?;
                (r.lower, r.upper)
            }
            Model::Multicast => (multicast_lower(nf, config.d, &params, &fading)?, None),
            Model::Cluster => {
                let r = cluster_bounds(nf, config.d, &params, &fading)?;
                (r.lower, r.upper)
            }
            Model::Hybrid => {
                let (a, b) = hybrid_lowers(nf, config.d, &params, &fading)?;
                (a.max(b), None)
            }
        };
        let formula_mean = {
            let xs = &campaign.per_trial[gi * config.trials..(gi + 1) * config.trials];
            let vals: Vec<f64> = xs.iter().filter_map(|s| s.aggregate_formula).collect();
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        };
        rows.push(format!(
            "{},{},{},{},{}",
            n,
            mean,
            formula_mean.map(|v| v.to_string()).unwrap_or_default(),
            lower,
            upper.map(|u| u.to_string()).unwrap_or_default()
        ));
    }

    if config.wants(Format::Csv) {
        write_csv(
            &config.out.join("sweep.csv"),
            &hash,
            "n,aggregate_measured_mean,aggregate_formula_mean,theory_lower,theory_upper",
            rows,
        )?;
        // one row per trial for downstream analysis
        let fmt_claim = |c: Option<bool>| c.map(|b| b.to_string()).unwrap_or_default();
        write_csv(
            &config.out.join("trials.csv"),
            &hash,
            "trial,seed,n,aggregate_measured,aggregate_formula,max_cell_receptions,max_routes_crossing,max_fading,degraded_hop_fraction,cell_band,column_cap,row_cap,cluster_bands,fading_max,route_cap,tree_route_cap",
            campaign.per_trial.iter().map(|t| {
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    t.trial,
                    t.seed,
                    t.n,
                    t.aggregate_measured,
                    t.aggregate_formula.map(|v| v.to_string()).unwrap_or_default(),
                    t.max_cell_receptions,
                    t.max_routes_crossing,
                    t.max_fading,
                    t.degraded_hop_fraction,
                    fmt_claim(t.claims.cell_band),
                    fmt_claim(t.claims.column_cap),
                    fmt_claim(t.claims.row_cap),
                    fmt_claim(t.claims.cluster_bands),
                    fmt_claim(t.claims.fading_max),
                    fmt_claim(t.claims.route_cap),
                    fmt_claim(t.claims.tree_route_cap),
                )
            }),
        )?;
    }
    let report = SweepReport {
        model: config.model.clone(),
        d: config.d,
        trials_per_n: config.trials,
        slope: campaign.fit.as_ref().map(|f| f.slope),
        intercept: campaign.fit.as_ref().map(|f| f.intercept),
        residual: campaign.fit.as_ref().map(|f| f.residual),
        mean_aggregate: campaign.mean_aggregate.clone(),
        claim_frequencies: campaign.claim_frequencies.clone(),
    };
    if config.wants(Format::Json) {
        write_json(&config.out.join("sweep.json"), &hash, &report)?;
    }
    match report.slope {
        Some(s) => println!("fitted aggregate-throughput exponent: {s:.4}"),
        None => println!("fit unavailable (need at least 3 grid points)"),
    }
    Ok(())
}

