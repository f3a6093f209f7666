//! Monte-Carlo experiment drivers.
//!
//! Each driver realizes per-trial channels from derived sub-streams (the
//! trial is the parallel unit), runs the configured searches, and folds the
//! per-trial outputs into deterministic tables. Identical spec and seed
//! produce identical outputs at any worker-thread count.

use crate::channel::{
    apply_snr_scaling, fraunhofer_distance, free_space_path_loss, los_matrix, rician_sample,
    substream, ArrayGeometry, LinkSet, RicianSpec,
};
use crate::composite::{
    build_h2, stack_channel, PhaseConfig, RelayParams, Structure,
};
use crate::error::{Error, Result};
use crate::harness::output::{ci95_half_width, mean_std, Cell, ExperimentOutput, Json, Table};
use crate::harness::scenario::ScenarioSpec;
use crate::linalg::CMat;
use crate::metrics::{
    average_snr, capped_spectral_efficiency, rank_indicator, spectral_efficiency, throughput,
    LinkReport,
};
use crate::optimize::{
    bg_optimize, effective_first_hop, joint_es_visit, separate_es_visit, ChannelOracle, EsOptions,
    RisAdditiveOracle, SeOracle, SweepOrder,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Distance from the base station to the primary device, meters.
const BS_DISTANCE_M: f64 = 7.0;
/// Histogram bin width in bps/Hz.
const HIST_BIN_WIDTH: f64 = 0.1;
/// Evaluation budget for the exhaustive searches (admits the full-scale
/// joint search at q = 8, Nc = 4).
const ES_BUDGET: u128 = 1 << 25;

/// Link indices of the sub-stream derivation.
const LINK_H1: u64 = 1;
const LINK_HC: u64 = 2;
const LINK_HP: u64 = 3;
const LINK_BENCH: u64 = 4;
const LINK_HP_LOW: u64 = 5;
/// Optimizer streams start here; slots encode (system, sweep point).
const LINK_BG_BASE: u64 = 16;

/// One trial's channel draws, at the unit-variance entry convention
/// (no SNR scaling yet). Path loss, when enabled, is already folded into
/// the relay hops.
#[derive(Debug, Clone)]
pub struct TrialChannels {
    /// The validated channel triplet (direct link, first hop, relay hop).
    pub links: LinkSet,
    /// Low-band relay hop feeding the primary's existing antennas; carrier
    /// of the additive baseline.
    pub hp_low: CMat,
    /// Co-located (n1+n2)-antenna benchmark direct channel.
    pub bench: CMat,
}

/// Realizes the channel set of one trial. `distance_override_m`, when set,
/// moves the collaborator along its configured direction to that distance.
pub fn realize_trial(
    spec: &ScenarioSpec,
    trial: u64,
    distance_override_m: Option<f64>,
) -> Result<TrialChannels> {
    let lam_l = spec.lambda_low();
    let lam_h = spec.lambda_high();

    let mut co_pos = spec.co_position_m();
    if let Some(d) = distance_override_m {
        let norm = (co_pos[0] * co_pos[0] + co_pos[1] * co_pos[1] + co_pos[2] * co_pos[2]).sqrt();
        co_pos = if norm > 0.0 {
            [co_pos[0] / norm * d, co_pos[1] / norm * d, co_pos[2] / norm * d]
        } else {
            [d, 0.0, 0.0]
        };
    }
    let co_dist = (co_pos[0] * co_pos[0] + co_pos[1] * co_pos[1] + co_pos[2] * co_pos[2]).sqrt();
    if spec.path_loss && !(co_dist > 0.0) {
        return Err(Error::Config("path loss needs a nonzero collaborator distance".into()));
    }

    let origin = [0.0, 0.0, 0.0];
    let bs_pos = [0.0, BS_DISTANCE_M, 0.0];
    let bs_low = ArrayGeometry::ula(spec.m, lam_l, bs_pos)?;
    let pr_low = ArrayGeometry::ula(spec.n1, lam_l, origin)?;
    let pr_high = ArrayGeometry::ula(spec.n2, lam_h, origin)?;
    let co_low = ArrayGeometry::ula(spec.nc, lam_l, co_pos)?;
    let co_high = ArrayGeometry::ula(spec.nc, lam_h, co_pos)?;
    let bench_low = ArrayGeometry::ula(spec.n1 + spec.n2, lam_l, origin)?;

    let draw = |kappa: f64, tx: &ArrayGeometry, rx: &ArrayGeometry, lam: f64, link: u64| -> Result<CMat> {
        let los = los_matrix(tx, rx, lam)?;
        let rspec = RicianSpec::new(kappa, spec.seed, rx.len(), tx.len())?;
        let mut rng = substream(spec.seed, link, trial);
        rician_sample(&rspec, &los, &mut rng)
    };

    let h1 = draw(spec.kappa1, &bs_low, &pr_low, lam_l, LINK_H1)?;
    let hc = draw(spec.kappa_c, &bs_low, &co_low, lam_l, LINK_HC)?;
    let mut hp = draw(spec.kappa_p, &co_high, &pr_high, lam_h, LINK_HP)?;
    let mut hp_low = draw(spec.kappa_p, &co_low, &pr_low, lam_l, LINK_HP_LOW)?;
    let bench = draw(spec.kappa1, &bs_low, &bench_low, lam_l, LINK_BENCH)?;

    if spec.path_loss {
        let g_h = free_space_path_loss(co_dist, lam_h)?.sqrt();
        hp *= Complex64::new(g_h, 0.0);
        let g_l = free_space_path_loss(co_dist, lam_l)?.sqrt();
        hp_low *= Complex64::new(g_l, 0.0);
    }

    let links = LinkSet::new(h1, hc, hp, spec.snr_db, spec.f_low_hz, spec.f_high_hz)?;
    Ok(TrialChannels { links, hp_low, bench })
}

/// Far-field boundary of the relay hop, from the larger of the two
/// high-band apertures.
pub fn relay_fraunhofer_distance(spec: &ScenarioSpec) -> f64 {
    let lam_h = spec.lambda_high();
    let ap_pr = (spec.n2.saturating_sub(1)) as f64 * lam_h / 2.0;
    let ap_co = (spec.nc.saturating_sub(1)) as f64 * lam_h / 2.0;
    fraunhofer_distance(ap_pr.max(ap_co), lam_h)
}

fn bin_of(se: f64) -> i64 {
    (se / HIST_BIN_WIDTH).floor() as i64
}

fn merge_bins(into: &mut BTreeMap<i64, u64>, from: &BTreeMap<i64, u64>) {
    for (&k, &v) in from {
        *into.entry(k).or_insert(0) += v;
    }
}

fn bins_table(bins: &BTreeMap<i64, u64>) -> Table {
    let mut t = Table::new(vec!["se_bin_left".into(), "count".into()]);
    for (&k, &v) in bins {
        t.push(vec![Cell::Float(k as f64 * HIST_BIN_WIDTH), Cell::UInt(v)]);
    }
    t
}

fn percentile(sorted_population: &[f64], se: f64) -> f64 {
    let idx = sorted_population.partition_point(|&x| x <= se);
    100.0 * idx as f64 / sorted_population.len() as f64
}

fn relay_params(spec: &ScenarioSpec, structure: Structure) -> Result<RelayParams> {
    RelayParams::new(spec.rho, structure, true)
}

/// SE equality up to a few ulps: configurations in the same per-block
/// global-phase orbit evaluate to mathematically equal SE but can differ in
/// the last bits.
pub fn se_matches(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
}

/// Enumerates the full diversity-structure grid per channel draw and both
/// separate-search orders, pooling SE histograms and per-trial optima.
pub fn run_histogram_experiment(spec: &ScenarioSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    if spec.structure != Structure::S2 {
        return Err(Error::Config(
            "the histogram experiment enumerates the diversity structure; set structure = s2".into(),
        ));
    }

    struct TrialOut {
        row: Vec<Cell>,
        joint_se: f64,
        sep_t_se: f64,
        sep_r_se: f64,
        joint_bins: BTreeMap<i64, u64>,
        t_bins: BTreeMap<i64, u64>,
        r_bins: BTreeMap<i64, u64>,
    }

    let opts = EsOptions { budget: ES_BUDGET, quotient: false };
    let outs: Vec<TrialOut> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<TrialOut> {
            let ch = realize_trial(spec, trial, None)?;
            let (h1s, hcs) = apply_snr_scaling(&ch.links.h1, &ch.links.hc, spec.snr_db);
            let params = relay_params(spec, Structure::S2)?;
            let mut oracle = ChannelOracle::new(&h1s, &hcs, &ch.links.hp, &params)?;

            let mut joint_bins = BTreeMap::new();
            let joint = joint_es_visit(&mut oracle, spec.q, spec.nc, Structure::S2, &opts, |se| {
                *joint_bins.entry(bin_of(se)).or_insert(0) += 1;
            })?;
            let mut t_bins = BTreeMap::new();
            let sep_t = separate_es_visit(&mut oracle, spec.q, spec.nc, SweepOrder::TFirst, &opts, |se| {
                *t_bins.entry(bin_of(se)).or_insert(0) += 1;
            })?;
            let mut r_bins = BTreeMap::new();
            let sep_r = separate_es_visit(&mut oracle, spec.q, spec.nc, SweepOrder::RFirst, &opts, |se| {
                *r_bins.entry(bin_of(se)).or_insert(0) += 1;
            })?;

            let row = vec![
                Cell::UInt(trial),
                Cell::Float(joint.best_se),
                Cell::Str(joint.best_config.describe()),
                Cell::Float(sep_t.best_se),
                Cell::Str(sep_t.best_config.describe()),
                Cell::Float(sep_r.best_se),
                Cell::Str(sep_r.best_config.describe()),
                Cell::UInt(joint.evaluations),
                Cell::UInt(sep_t.evaluations + sep_r.evaluations),
            ];
            Ok(TrialOut {
                row,
                joint_se: joint.best_se,
                sep_t_se: sep_t.best_se,
                sep_r_se: sep_r.best_se,
                joint_bins,
                t_bins,
                r_bins,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Table::new(
        [
            "trial",
            "joint_opt_se",
            "joint_opt_config",
            "sep_tfirst_opt_se",
            "sep_tfirst_opt_config",
            "sep_rfirst_opt_se",
            "sep_rfirst_opt_config",
            "joint_evaluations",
            "separate_evaluations",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    let mut joint_bins = BTreeMap::new();
    let mut t_bins = BTreeMap::new();
    let mut r_bins = BTreeMap::new();
    let mut joint_ses = Vec::with_capacity(outs.len());
    let mut match_t = 0u64;
    let mut match_r = 0u64;
    for out in &outs {
        records.push(out.row.clone());
        merge_bins(&mut joint_bins, &out.joint_bins);
        merge_bins(&mut t_bins, &out.t_bins);
        merge_bins(&mut r_bins, &out.r_bins);
        joint_ses.push(out.joint_se);
        if se_matches(out.sep_t_se, out.joint_se) {
            match_t += 1;
        }
        if se_matches(out.sep_r_se, out.joint_se) {
            match_r += 1;
        }
    }
    let (mean_joint, _) = mean_std(&joint_ses);
    let n = outs.len() as f64;

    let aggregates = vec![
        ("mean_joint_opt_se".into(), Json::Num(mean_joint)),
        ("separate_tfirst_match_rate".into(), Json::Num(match_t as f64 / n)),
        ("separate_rfirst_match_rate".into(), Json::Num(match_r as f64 / n)),
        ("histogram_bin_width".into(), Json::Num(HIST_BIN_WIDTH)),
    ];
    let plotdata = vec![
        ("hist_joint".to_string(), bins_table(&joint_bins)),
        ("hist_sep_tfirst".to_string(), bins_table(&t_bins)),
        ("hist_sep_rfirst".to_string(), bins_table(&r_bins)),
    ];
    Ok(ExperimentOutput { name: "histogram".into(), records, plotdata, aggregates, spec: spec.clone() })
}

/// Runs the blind greedy optimizer against the separate-search population
/// and tracks the percentile rank of its SE after every update, for both
/// block orders.
pub fn run_trajectory_experiment(spec: &ScenarioSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    if spec.structure != Structure::S2 {
        return Err(Error::Config(
            "the trajectory experiment targets the diversity structure; set structure = s2".into(),
        ));
    }
    let iterations = 2 * spec.nc * spec.rounds;
    let opts = EsOptions { budget: ES_BUDGET, quotient: false };

    struct TrialOut {
        row: Vec<Cell>,
        pcts: [Vec<f64>; 2],
        ratios: [f64; 2],
    }

    let orders = [SweepOrder::TFirst, SweepOrder::RFirst];
    let outs: Vec<TrialOut> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<TrialOut> {
            let ch = realize_trial(spec, trial, None)?;
            let (h1s, hcs) = apply_snr_scaling(&ch.links.h1, &ch.links.hc, spec.snr_db);
            let params = relay_params(spec, Structure::S2)?;

            let mut row = vec![Cell::UInt(trial)];
            let mut pcts: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            let mut ratios = [0.0f64; 2];
            for (oi, order) in orders.iter().enumerate() {
                let mut oracle = ChannelOracle::new(&h1s, &hcs, &ch.links.hp, &params)?;
                let mut pop = Vec::new();
                let sep = separate_es_visit(&mut oracle, spec.q, spec.nc, *order, &opts, |se| pop.push(se))?;
                pop.sort_by(|a, b| a.partial_cmp(b).unwrap());

                let mut rng = substream(spec.seed, LINK_BG_BASE + oi as u64, trial);
                let bg = bg_optimize(
                    &mut oracle,
                    spec.q,
                    spec.nc,
                    Structure::S2,
                    *order,
                    spec.rounds,
                    spec.rms_trials,
                    &mut rng,
                );
                pcts[oi] = bg.trajectory.iter().map(|&(_, se)| percentile(&pop, se)).collect();
                ratios[oi] = bg.best_se / sep.best_se;
                row.extend([
                    Cell::Float(sep.best_se),
                    Cell::Float(bg.best_se),
                    Cell::Float(ratios[oi]),
                    Cell::Float(*pcts[oi].last().unwrap()),
                    Cell::Str(bg.best_config.describe()),
                    Cell::UInt(bg.evaluations),
                ]);
            }
            Ok(TrialOut { row, pcts, ratios })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut columns = vec!["trial".to_string()];
    for order in &orders {
        let tag = order.label().replace('-', "");
        for col in ["sep_opt_se", "bg_final_se", "bg_final_ratio", "bg_final_percentile", "bg_config", "bg_evaluations"] {
            columns.push(format!("{col}_{tag}"));
        }
    }
    let mut records = Table::new(columns);
    let mut pct_sums: [Vec<f64>; 2] = [vec![0.0; iterations + 1], vec![0.0; iterations + 1]];
    let mut ratio_sums = [0.0f64; 2];
    for out in &outs {
        records.push(out.row.clone());
        for oi in 0..2 {
            for (i, p) in out.pcts[oi].iter().enumerate() {
                pct_sums[oi][i] += p;
            }
            ratio_sums[oi] += out.ratios[oi];
        }
    }
    let n = outs.len() as f64;
    let mut plotdata = Vec::new();
    let mut aggregates = Vec::new();
    for (oi, order) in orders.iter().enumerate() {
        let tag = order.label().replace('-', "");
        let mut t = Table::new(vec!["iteration".into(), "mean_percentile".into()]);
        for (i, s) in pct_sums[oi].iter().enumerate() {
            t.push(vec![Cell::UInt(i as u64), Cell::Float(s / n)]);
        }
        plotdata.push((format!("trajectory_{tag}"), t));
        aggregates.push((format!("mean_percentile_rms_{tag}"), Json::Num(pct_sums[oi][0] / n)));
        aggregates.push((format!("mean_percentile_nc_{tag}"), Json::Num(pct_sums[oi][spec.nc] / n)));
        aggregates.push((format!("mean_percentile_2nc_{tag}"), Json::Num(pct_sums[oi][2 * spec.nc] / n)));
        aggregates.push((format!("mean_percentile_final_{tag}"), Json::Num(pct_sums[oi][iterations] / n)));
        aggregates.push((format!("mean_final_ratio_{tag}"), Json::Num(ratio_sums[oi] / n)));
    }
    Ok(ExperimentOutput { name: "trajectory".into(), records, plotdata, aggregates, spec: spec.clone() })
}

/// Evaluated systems of the SNR sweep, in column order.
pub const SNR_SWEEP_SYSTEMS: [&str; 7] =
    ["pr_only", "s1_phi1", "s1_bg", "s2_bg", "s2_cf", "bench", "ris_bg"];

/// Mean SE (with 95% confidence intervals) versus SNR for the fixed system
/// set: direct link only, unoptimized and optimized relaying in both
/// structures, the closed-form diversity solution, the co-located antenna
/// benchmark, and the additive same-band baseline.
pub fn run_snr_sweep(spec: &ScenarioSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    if spec.snr_sweep_db.is_empty() {
        return Err(Error::Config("snr_sweep_db must not be empty".into()));
    }
    let snrs = spec.snr_sweep_db.clone();
    let nsys = SNR_SWEEP_SYSTEMS.len();

    let outs: Vec<(Vec<Cell>, Vec<f64>)> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<(Vec<Cell>, Vec<f64>)> {
            let ch = realize_trial(spec, trial, None)?;
            let mut row = vec![Cell::UInt(trial)];
            let mut ses = Vec::with_capacity(snrs.len() * nsys);
            for (si, &snr) in snrs.iter().enumerate() {
                let values = evaluate_snr_point(spec, &ch, snr, trial, si as u64)?;
                for v in values {
                    row.push(Cell::Float(v));
                    ses.push(v);
                }
            }
            Ok((row, ses))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut columns = vec!["trial".to_string()];
    for snr in &snrs {
        for sys in SNR_SWEEP_SYSTEMS {
            columns.push(format!("se_{sys}_snr{snr}"));
        }
    }
    let mut records = Table::new(columns);
    for (row, _) in &outs {
        records.push(row.clone());
    }

    let mut plot = Table::new({
        let mut c = vec!["snr_db".to_string()];
        for sys in SNR_SWEEP_SYSTEMS {
            c.push(format!("mean_se_{sys}"));
            c.push(format!("ci_lo_{sys}"));
            c.push(format!("ci_hi_{sys}"));
        }
        c
    });
    let mut aggregates = Vec::new();
    for (si, &snr) in snrs.iter().enumerate() {
        let mut prow = vec![Cell::Float(snr)];
        for (ki, sys) in SNR_SWEEP_SYSTEMS.iter().enumerate() {
            let values: Vec<f64> = outs.iter().map(|(_, ses)| ses[si * nsys + ki]).collect();
            let (mean, std) = mean_std(&values);
            let hw = ci95_half_width(std, values.len());
            prow.push(Cell::Float(mean));
            prow.push(Cell::Float(mean - hw));
            prow.push(Cell::Float(mean + hw));
            aggregates.push((format!("mean_se_{sys}_snr{snr}"), Json::Num(mean)));
            aggregates.push((format!("ci95_half_width_{sys}_snr{snr}"), Json::Num(hw)));
        }
        plot.push(prow);
    }
    Ok(ExperimentOutput {
        name: "snr_sweep".into(),
        records,
        plotdata: vec![("se_vs_snr".into(), plot)],
        aggregates,
        spec: spec.clone(),
    })
}

/// SE of each sweep system at one SNR point, in `SNR_SWEEP_SYSTEMS` order.
fn evaluate_snr_point(
    spec: &ScenarioSpec,
    ch: &TrialChannels,
    snr_db: f64,
    trial: u64,
    point: u64,
) -> Result<Vec<f64>> {
    let (h1s, hcs) = apply_snr_scaling(&ch.links.h1, &ch.links.hc, snr_db);
    let (bench_s, _) = apply_snr_scaling(&ch.bench, &ch.bench, snr_db);
    let params = relay_params(spec, Structure::S2)?;
    let mut oracle = ChannelOracle::new(&h1s, &hcs, &ch.links.hp, &params)?;
    let stream = |slot: u64| substream(spec.seed, LINK_BG_BASE + 8 + slot * 4096 + point, trial);

    let se_pr = oracle.base_se();

    let phi1 = PhaseConfig::zeros(Structure::S1, spec.nc, spec.q)?;
    let se_s1_phi1 = oracle.evaluate(&phi1);

    let mut rng = stream(0);
    let s1_bg = bg_optimize(
        &mut oracle, spec.q, spec.nc, Structure::S1, spec.order, spec.rounds, spec.rms_trials, &mut rng,
    );

    let mut rng = stream(1);
    let s2_bg = bg_optimize(
        &mut oracle, spec.q, spec.nc, Structure::S2, spec.order, spec.rounds, spec.rms_trials, &mut rng,
    );

    let hc_eff = effective_first_hop(&hcs, &h1s)?;
    let (phi_t, phi_r) = crate::optimize::closed_form_structure2(&ch.links.hp, &hc_eff)?;
    let h2_cf = crate::composite::h2_structure2_from_phases(
        &ch.links.hp, &hcs, &phi_t, &phi_r, spec.rho, 1.0 / (spec.nc as f64).sqrt(),
    )?;
    let se_s2_cf = spectral_efficiency(&stack_channel(&h1s, &h2_cf)?);

    let se_bench = spectral_efficiency(&bench_s);

    let mut ris_oracle = RisAdditiveOracle::new(&h1s, &hcs, &ch.hp_low, &params)?;
    let mut rng = stream(2);
    let ris_bg = bg_optimize(
        &mut ris_oracle, spec.q, spec.nc, Structure::S2, spec.order, spec.rounds, spec.rms_trials, &mut rng,
    );

    Ok(vec![se_pr, se_s1_phi1, s1_bg.best_se, s2_bg.best_se, se_s2_cf, se_bench, ris_bg.best_se])
}

/// Evaluated systems of the distance sweep, in column order.
pub const DISTANCE_SWEEP_SYSTEMS: [&str; 6] =
    ["pr_only", "bench", "ris_bg", "co_phi1", "s1_bg", "s2_bg"];

// The rank indicator and throughput are declared proxy models.
const SWEEP_METRICS: [&str; 4] = ["snr", "se", "proxy_ri", "proxy_tp"];

/// SNR, SE, proxy-RI and proxy-TP versus collaborator distance, with the
/// relay-hop path loss driving the trends and the far-field boundary marked
/// in the plot data. Requires path loss enabled.
pub fn run_distance_sweep(spec: &ScenarioSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    if !spec.path_loss {
        return Err(Error::Config("the distance sweep needs path_loss = on".into()));
    }
    if spec.distances_m.is_empty() {
        return Err(Error::Config("distances_m must not be empty".into()));
    }
    let distances = spec.distances_m.clone();
    let nsys = DISTANCE_SWEEP_SYSTEMS.len();
    let nmet = SWEEP_METRICS.len();

    let outs: Vec<(Vec<Cell>, Vec<f64>)> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<(Vec<Cell>, Vec<f64>)> {
            let mut row = vec![Cell::UInt(trial)];
            let mut all = Vec::with_capacity(distances.len() * nsys * nmet);
            for (di, &d) in distances.iter().enumerate() {
                let ch = realize_trial(spec, trial, Some(d))?;
                let metrics = evaluate_distance_point(spec, &ch, trial, di as u64)?;
                for m in metrics {
                    row.push(Cell::Float(m));
                    all.push(m);
                }
            }
            Ok((row, all))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut columns = vec!["trial".to_string()];
    for d in &distances {
        for sys in DISTANCE_SWEEP_SYSTEMS {
            for met in SWEEP_METRICS {
                columns.push(format!("{met}_{sys}_d{d}"));
            }
        }
    }
    let mut records = Table::new(columns);
    for (row, _) in &outs {
        records.push(row.clone());
    }

    let fraunhofer_m = relay_fraunhofer_distance(spec);
    let mut plotdata = Vec::new();
    for (mi, met) in SWEEP_METRICS.iter().enumerate() {
        let mut t = Table::new({
            let mut c = vec!["distance_m".to_string(), "beyond_fraunhofer".to_string()];
            for sys in DISTANCE_SWEEP_SYSTEMS {
                c.push(format!("mean_{met}_{sys}"));
            }
            c
        });
        for (di, &d) in distances.iter().enumerate() {
            let mut prow = vec![Cell::Float(d), Cell::UInt(u64::from(d > fraunhofer_m))];
            for ki in 0..nsys {
                let values: Vec<f64> =
                    outs.iter().map(|(_, all)| all[(di * nsys + ki) * nmet + mi]).collect();
                let (mean, _) = mean_std(&values);
                prow.push(Cell::Float(mean));
            }
            t.push(prow);
        }
        plotdata.push((format!("{met}_vs_distance"), t));
    }
    let aggregates = vec![("fraunhofer_distance_m".into(), Json::Num(fraunhofer_m))];
    Ok(ExperimentOutput {
        name: "distance_sweep".into(),
        records,
        plotdata,
        aggregates,
        spec: spec.clone(),
    })
}

/// (snr, se, ri, tp) per system at one distance, flattened in system order.
fn evaluate_distance_point(
    spec: &ScenarioSpec,
    ch: &TrialChannels,
    trial: u64,
    point: u64,
) -> Result<Vec<f64>> {
    let (h1s, hcs) = apply_snr_scaling(&ch.links.h1, &ch.links.hc, spec.snr_db);
    let (bench_s, _) = apply_snr_scaling(&ch.bench, &ch.bench, spec.snr_db);
    let stream = |slot: u64| substream(spec.seed, LINK_BG_BASE + (1 << 20) + slot * 4096 + point, trial);
    let report_cells = |r: &LinkReport| [r.snr_db, r.se_bps_hz, r.ri as f64, r.tp_mbps];

    let mut out = Vec::with_capacity(DISTANCE_SWEEP_SYSTEMS.len() * 4);

    let pr = LinkReport::evaluate(&h1s, None, spec.bandwidth_hz, spec.overhead)?;
    out.extend(report_cells(&pr));

    let bench = LinkReport::evaluate(&bench_s, None, spec.bandwidth_hz, spec.overhead)?;
    out.extend(report_cells(&bench));

    // Additive same-band baseline, greedy-optimized; its channel replaces
    // the direct link rather than stacking onto it.
    let params2 = relay_params(spec, Structure::S2)?;
    let mut ris_oracle = RisAdditiveOracle::new(&h1s, &hcs, &ch.hp_low, &params2)?;
    let mut rng = stream(0);
    let ris = bg_optimize(
        &mut ris_oracle, spec.q, spec.nc, Structure::S2, spec.order, spec.rounds, spec.rms_trials, &mut rng,
    );
    let (phi_r, phi_t) = ris.best_config.s2_vectors()?;
    let c = 1.0 / (spec.nc as f64).sqrt();
    let a = &ch.hp_low * &phi_t * Complex64::new(spec.rho.sqrt() * c, 0.0);
    let hrow = phi_r.adjoint() * &hcs;
    let h_ris = crate::composite::ris_additive_channel(&h1s, &a, &hrow)?;
    out.extend([
        average_snr(&h_ris),
        spectral_efficiency(&h_ris),
        rank_indicator(&h_ris) as f64,
        throughput(capped_spectral_efficiency(&h_ris), spec.bandwidth_hz, spec.overhead)?,
    ]);

    let params1 = relay_params(spec, Structure::S1)?;
    let phi1 = PhaseConfig::zeros(Structure::S1, spec.nc, spec.q)?;
    let h2_phi1 = build_h2(&ch.links.hp, &hcs, &phi1, &params1)?;
    let co = LinkReport::evaluate(&h1s, Some(&h2_phi1), spec.bandwidth_hz, spec.overhead)?;
    out.extend(report_cells(&co));

    let mut oracle = ChannelOracle::new(&h1s, &hcs, &ch.links.hp, &params2)?;
    let mut rng = stream(1);
    let s1 = bg_optimize(
        &mut oracle, spec.q, spec.nc, Structure::S1, spec.order, spec.rounds, spec.rms_trials, &mut rng,
    );
    let h2_s1 = build_h2(&ch.links.hp, &hcs, &s1.best_config, &params1)?;
    let s1_rep = LinkReport::evaluate(&h1s, Some(&h2_s1), spec.bandwidth_hz, spec.overhead)?;
    out.extend(report_cells(&s1_rep));

    let mut rng = stream(2);
    let s2 = bg_optimize(
        &mut oracle, spec.q, spec.nc, Structure::S2, spec.order, spec.rounds, spec.rms_trials, &mut rng,
    );
    let h2_s2 = build_h2(&ch.links.hp, &hcs, &s2.best_config, &params2)?;
    let s2_rep = LinkReport::evaluate(&h1s, Some(&h2_s2), spec.bandwidth_hz, spec.overhead)?;
    out.extend(report_cells(&s2_rep));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::output::fmt_f64;

    fn tiny_spec() -> ScenarioSpec {
        ScenarioSpec {
            nc: 1,
            q: 2,
            trials: 1,
            n1: 2,
            n2: 2,
            m: 2,
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn histogram_tiny_enumeration() {
        let spec = tiny_spec();
        let out = run_histogram_experiment(&spec).unwrap();
        assert_eq!(out.records.rows.len(), 1);
        let joint_total: u64 = out
            .plotdata
            .iter()
            .find(|(n, _)| n == "hist_joint")
            .map(|(_, t)| {
                t.rows.iter().map(|r| match r[1] {
                    Cell::UInt(c) => c,
                    _ => 0,
                }).sum()
            })
            .unwrap();
        assert_eq!(joint_total, 4); // q^(2 nc) = 2^2

        let row = &out.records.rows[0];
        let (Cell::Float(joint), Cell::Float(sep_t), Cell::Float(sep_r)) = (&row[1], &row[3], &row[5]) else {
            panic!("unexpected cell types");
        };
        assert_eq!(joint, sep_t);
        assert_eq!(joint, sep_r);
    }

    #[test]
    fn histogram_rank_one_position_matches_every_trial() {
        let spec = ScenarioSpec {
            trials: 10,
            q: 4,
            nc: 3,
            n1: 2,
            n2: 2,
            m: 3,
            co_ue_position: [10.0, 10.0, 10.0],
            ..ScenarioSpec::default()
        };
        let out = run_histogram_experiment(&spec).unwrap();
        assert_eq!(out.aggregate_f64("separate_tfirst_match_rate"), Some(1.0));
        assert_eq!(out.aggregate_f64("separate_rfirst_match_rate"), Some(1.0));
    }

    #[test]
    fn histogram_rejects_multiplexing_structure() {
        let spec = ScenarioSpec { structure: Structure::S1, ..tiny_spec() };
        assert!(run_histogram_experiment(&spec).is_err());
    }

    #[test]
    fn histogram_propagates_budget_refusal() {
        let spec = ScenarioSpec { q: 8, nc: 8, trials: 1, ..ScenarioSpec::default() };
        match run_histogram_experiment(&spec) {
            Err(crate::error::Error::BudgetExceeded { required, .. }) => {
                assert_eq!(required, (8u128).pow(16));
            }
            other => panic!("expected budget refusal, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_rms_worse_than_final() {
        let spec = ScenarioSpec {
            trials: 30,
            q: 4,
            nc: 2,
            n1: 2,
            n2: 2,
            m: 3,
            ..ScenarioSpec::default()
        };
        let out = run_trajectory_experiment(&spec).unwrap();
        for tag in ["tfirst", "rfirst"] {
            let rms = out.aggregate_f64(&format!("mean_percentile_rms_{tag}")).unwrap();
            let fin = out.aggregate_f64(&format!("mean_percentile_final_{tag}")).unwrap();
            assert!(rms < fin, "{tag}: rms {rms} vs final {fin}");
        }
    }

    #[test]
    fn snr_sweep_stacked_systems_dominate_direct_link() {
        let spec = ScenarioSpec {
            trials: 40,
            q: 4,
            nc: 2,
            n1: 2,
            n2: 2,
            m: 3,
            snr_sweep_db: vec![0.0, 20.0],
            ..ScenarioSpec::default()
        };
        let out = run_snr_sweep(&spec).unwrap();
        for &snr in &[0.0, 20.0] {
            let pr = out.aggregate_f64(&format!("mean_se_pr_only_snr{snr}")).unwrap();
            for sys in ["s1_phi1", "s1_bg", "s2_bg", "s2_cf", "bench", "ris_bg"] {
                let se = out.aggregate_f64(&format!("mean_se_{sys}_snr{snr}")).unwrap();
                assert!(se >= pr - 1e-9, "{sys} mean {se} below direct {pr} at {snr} dB");
            }
        }
    }

    #[test]
    fn distance_sweep_requires_path_loss() {
        let spec = ScenarioSpec { trials: 2, ..ScenarioSpec::default() };
        assert!(run_distance_sweep(&spec).is_err());
    }

    #[test]
    fn distance_sweep_trends() {
        let spec = ScenarioSpec {
            trials: 60,
            q: 4,
            nc: 2,
            n1: 2,
            n2: 2,
            m: 3,
            path_loss: true,
            rho: 100.0,
            distances_m: vec![0.05, 0.2, 0.5, 1.0, 2.0],
            co_ue_position: [1.0, 1.0, 1.0],
            ..ScenarioSpec::default()
        };
        let out = run_distance_sweep(&spec).unwrap();
        let se_table = &out.plotdata.iter().find(|(n, _)| n == "se_vs_distance").unwrap().1;
        let pr_col = se_table.column("mean_se_pr_only").unwrap();
        let co_col = se_table.column("mean_se_s1_bg").unwrap();
        let gaps: Vec<f64> = se_table
            .rows
            .iter()
            .map(|r| match (&r[co_col], &r[pr_col]) {
                (Cell::Float(c), Cell::Float(p)) => c - p,
                _ => panic!(),
            })
            .collect();
        // Relay contribution shrinks toward the direct-only level over the tail.
        assert!(gaps[0] > gaps[gaps.len() - 1], "gaps {gaps:?}");
        let tail = &gaps[gaps.len() - 3..];
        for w in tail.windows(2) {
            assert!(w[1] <= w[0] + 0.05, "tail not shrinking: {gaps:?}");
        }

        let snr_table = &out.plotdata.iter().find(|(n, _)| n == "snr_vs_distance").unwrap().1;
        let snr_col = snr_table.column("mean_snr_s1_bg").unwrap();
        let snrs: Vec<f64> = snr_table
            .rows
            .iter()
            .map(|r| match &r[snr_col] {
                Cell::Float(v) => *v,
                _ => panic!(),
            })
            .collect();
        for w in snrs.windows(2) {
            assert!(w[1] <= w[0] + 0.2, "relay SNR should decay with distance: {snrs:?}");
        }
    }

    #[test]
    fn distance_zero_pathloss_limit_matches_snr_point() {
        // With path loss off, a distance override equal to the configured
        // position's range reproduces the sweep-position channels exactly.
        let spec = ScenarioSpec { trials: 3, n1: 2, n2: 2, m: 3, nc: 2, ..ScenarioSpec::default() };
        let d = {
            let p = spec.co_position_m();
            (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
        };
        for trial in 0..3 {
            let a = realize_trial(&spec, trial, None).unwrap();
            let b = realize_trial(&spec, trial, Some(d)).unwrap();
            assert!((&a.links.hp - &b.links.hp).norm() < 1e-9 * a.links.hp.norm());
            assert_eq!(a.links.h1, b.links.h1);
        }
    }

    #[test]
    fn records_are_deterministic_across_reruns() {
        let spec = ScenarioSpec { trials: 5, q: 2, nc: 2, n1: 2, n2: 2, m: 2, ..ScenarioSpec::default() };
        let a = run_histogram_experiment(&spec).unwrap();
        let b = run_histogram_experiment(&spec).unwrap();
        assert_eq!(a.records.to_csv(), b.records.to_csv());
        assert_eq!(fmt_f64(a.aggregate_f64("mean_joint_opt_se").unwrap()),
                   fmt_f64(b.aggregate_f64("mean_joint_opt_se").unwrap()));
    }
}
