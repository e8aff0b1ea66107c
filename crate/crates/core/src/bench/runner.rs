//! Sweep execution: deterministic per-cell seeding, parallel over
//! (cell, estimator, seed) work items, failure-tolerant records.

use rayon::prelude::*;

use crate::bench::config::{EstimatorKind, ExperimentConfig, LambdaSpec, SweepAxis};
use crate::datagen::{self, GenConfig, GroundTruth, MultiTaskDataset, TaskData};
use crate::error::Result;
use crate::estimators::{
    self, FitOptions, FitResult, LambdaRule,
};
use crate::matops::{self, RealMatrix};
use crate::meta;
use crate::metrics::{self, MetricRecord};
use crate::rng::{hash64, stream_rng};
use nalgebra::DVector;

/// One raw CSV row: a metric record tagged with its sweep position.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub sweep_axis: String,
    pub cell_value: f64,
    pub rec: MetricRecord,
}

/// One aggregate CSV row.
#[derive(Debug, Clone)]
pub struct AggRecord {
    pub sweep_axis: String,
    pub cell_value: f64,
    pub estimator: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Dataset seed for one (cell, rep): shared across estimators so they are
/// compared on identical data.
pub fn cell_data_seed(base_seed: u64, axis: SweepAxis, cell_value: f64, rep: u64) -> u64 {
    hash64(&[
        &base_seed.to_le_bytes(),
        axis.name().as_bytes(),
        &cell_value.to_bits().to_le_bytes(),
        b"data",
        &rep.to_le_bytes(),
    ])
}

/// Initialization seed for one (cell, rep, estimator): independent streams
/// per estimator.
pub fn cell_init_seed(base_seed: u64, axis: SweepAxis, cell_value: f64, rep: u64, est: EstimatorKind) -> u64 {
    hash64(&[
        &base_seed.to_le_bytes(),
        axis.name().as_bytes(),
        &cell_value.to_bits().to_le_bytes(),
        b"init",
        est.name().as_bytes(),
        &rep.to_le_bytes(),
    ])
}

struct CellEnv {
    gt: GroundTruth,
    data: MultiTaskDataset,
    new_task: Option<(TaskData, DVector<f64>)>,
}

fn build_cell_env(cfg: &ExperimentConfig, cell_value: f64, rep: u64) -> Result<CellEnv> {
    let (d, r, m, t, sigma) = cfg.cell_dims(cell_value);
    let data_seed = cell_data_seed(cfg.base_seed, cfg.sweep_axis, cell_value, rep);
    let mut gen = GenConfig::new(d, r, m, t, sigma, data_seed)?;
    gen.feature_dist = cfg.feature_dist;
    gen.param_scheme = cfg.param_scheme;
    let gt = datagen::gen_ground_truth(&gen)?;
    let data = datagen::gen_dataset(&gen, &gt)?;
    let new_task = if cfg.transfer {
        let mut rng = stream_rng(data_seed, "new-task", 0);
        Some(datagen::gen_new_task(&gen, &gt.b, &mut rng))
    } else {
        None
    };
    Ok(CellEnv { gt, data, new_task })
}

fn resolve_lambda(cfg: &ExperimentConfig, env: &CellEnv, opts: &FitOptions) -> Result<f64> {
    let data = &env.data;
    match &cfg.lambda {
        LambdaSpec::Theory => Ok(estimators::lambda_theory(data.d, data.m, data.t, data.sigma)),
        LambdaSpec::Fixed(v) => Ok(*v),
        LambdaSpec::CrossValidated(grid) => {
            let grid = match grid {
                Some(g) => g.clone(),
                None => {
                    let center = estimators::lambda_theory(data.d, data.m, data.t, data.sigma);
                    let lo = (center / 100.0).log10();
                    let hi = (center * 100.0).log10();
                    (0..10)
                        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / 9.0))
                        .collect()
                }
            };
            estimators::select_lambda_cv(
                data,
                &LambdaRule::CrossValidated { grid, holdout_frac: 0.25 },
                opts,
            )
        }
    }
}

fn run_estimator(
    cfg: &ExperimentConfig,
    env: &CellEnv,
    est: EstimatorKind,
    opts: &FitOptions,
) -> Result<FitResult> {
    let data = &env.data;
    match est {
        EstimatorKind::Nuc => {
            let lambda = resolve_lambda(cfg, env, opts)?;
            estimators::fit_nuclear_fista(data, lambda, opts)
        }
        EstimatorKind::NucFw => {
            // Feasibility radius from the data alone: nuclear norm of the
            // unregularized per-task least-squares fit.
            let ols = estimators::fit_single_task(data)?;
            let radius = matops::nuclear_norm(&ols.mhat).max(1e-8);
            estimators::fit_nuclear_frankwolfe(data, radius, opts)
        }
        EstimatorKind::Bm => estimators::fit_burer_monteiro(data, cfg.r, opts),
        EstimatorKind::Altmin => estimators::fit_altmin(data, cfg.r, opts),
        EstimatorKind::Mom => estimators::fit_mom(data, cfg.r),
        EstimatorKind::Single => estimators::fit_single_task(data),
        EstimatorKind::Oracle => estimators::fit_oracle(data, &env.gt.b),
    }
}

/// Subspace used for angle/transfer metrics: the estimator's own basis when
/// it produces one, otherwise the top-r left singular subspace of M̂.
fn estimator_subspace(fit: &FitResult, r: usize) -> Option<RealMatrix> {
    if let Some(b) = &fit.subspace {
        return Some(b.clone());
    }
    meta::extract_subspace(&fit.mhat, r).ok().map(|s| s.basis)
}

/// Runs one estimator on one (cell, rep) and converts the fit into a metric
/// record. Solver failures become a record with NaN metrics and
/// `converged = false` rather than an error.
pub fn run_cell(
    cfg: &ExperimentConfig,
    cell_value: f64,
    rep: u64,
    est: EstimatorKind,
) -> Result<RawRecord> {
    let (d, r, m, t, sigma) = cfg.cell_dims(cell_value);
    let env = build_cell_env(cfg, cell_value, rep)?;
    let seed = cell_data_seed(cfg.base_seed, cfg.sweep_axis, cell_value, rep);
    let opts = FitOptions {
        max_iters: cfg.max_iters,
        rel_tol: cfg.rel_tol,
        init_seed: cell_init_seed(cfg.base_seed, cfg.sweep_axis, cell_value, rep, est),
        ..FitOptions::default()
    };

    let rec = match run_estimator(cfg, &env, est, &opts) {
        Ok(fit) => {
            let frob = metrics::frob_normalized(&fit.mhat, &env.gt.mstar, t)?;
            let per_task = metrics::per_task_mean_err(&fit.mhat, &env.gt.mstar)?;
            let sub = if est == EstimatorKind::Single {
                None
            } else {
                estimator_subspace(&fit, r)
            };
            let sin_theta = match &sub {
                Some(b) => matops::sin_principal_angle(&env.gt.b, b).ok(),
                None => None,
            };
            let transfer_err = match (&env.new_task, &sub) {
                (Some((task, theta_star)), Some(b)) => meta::transfer_fit(b, task, None)
                    .ok()
                    .map(|tr| (&tr.theta_hat - theta_star).norm()),
                (Some((task, theta_star)), None) => {
                    // Single-task baseline for transfer: min-norm least
                    // squares on the raw features.
                    matops::lstsq_min_norm(&task.x, &task.y)
                        .ok()
                        .map(|(theta, _)| (&theta - theta_star).norm())
                }
                _ => None,
            };
            MetricRecord {
                estimator: est.name().to_string(),
                d,
                r,
                m,
                t,
                sigma,
                seed,
                frob_normalized: frob,
                sin_theta,
                per_task_mean_err: per_task,
                transfer_err,
                runtime_ms: if cfg.record_runtime { fit.runtime_ms } else { f64::NAN },
                iterations: fit.iterations,
                converged: fit.converged,
            }
        }
        Err(_) => MetricRecord {
            estimator: est.name().to_string(),
            d,
            r,
            m,
            t,
            sigma,
            seed,
            frob_normalized: f64::NAN,
            sin_theta: None,
            per_task_mean_err: f64::NAN,
            transfer_err: None,
            runtime_ms: f64::NAN,
            iterations: 0,
            converged: false,
        },
    };
    Ok(RawRecord {
        sweep_axis: cfg.sweep_axis.name().to_string(),
        cell_value,
        rec,
    })
}

/// Runs the full sweep. Work items (cell × estimator × seed) execute in
/// parallel; the output order is fixed by sorting on
/// (cell_value, estimator, seed) afterwards, so results are independent of
/// scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RawRecord>> {
    let mut items: Vec<(f64, EstimatorKind, u64)> = Vec::new();
    for &cv in &cfg.sweep_values {
        for &est in &cfg.estimators {
            for rep in 0..cfg.n_seeds as u64 {
                items.push((cv, est, rep));
            }
        }
    }
    let mut records = items
        .par_iter()
        .map(|&(cv, est, rep)| run_cell(cfg, cv, rep, est))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        a.cell_value
            .partial_cmp(&b.cell_value)
            .unwrap()
            .then_with(|| a.rec.estimator.cmp(&b.rec.estimator))
            .then_with(|| a.rec.seed.cmp(&b.rec.seed))
    });
    Ok(records)
}

/// Per-(cell, estimator, metric) mean/std/n over seeds, skipping non-finite
/// or absent values. std is the population standard deviation.
pub fn aggregate(records: &[RawRecord]) -> Vec<AggRecord> {
    use std::collections::BTreeMap;
    // Key ordering matches the raw-record sort: (cell bits asc, estimator).
    let mut groups: BTreeMap<(u64, String), Vec<&RawRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.cell_value.to_bits(), r.rec.estimator.clone()))
            .or_default()
            .push(r);
    }
    let metrics: [(&str, fn(&MetricRecord) -> Option<f64>); 5] = [
        ("frob_normalized", |m| Some(m.frob_normalized)),
        ("sin_theta", |m| m.sin_theta),
        ("per_task_mean_err", |m| Some(m.per_task_mean_err)),
        ("transfer_err", |m| m.transfer_err),
        ("runtime_ms", |m| Some(m.runtime_ms)),
    ];
    let mut out = Vec::new();
    for ((_, estimator), group) in groups {
        let first = group[0];
        for (name, get) in metrics {
            let vals: Vec<f64> = group
                .iter()
                .filter_map(|r| get(&r.rec))
                .filter(|v| v.is_finite())
                .collect();
            if vals.is_empty() {
                continue;
            }
            let n = vals.len();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            out.push(AggRecord {
                sweep_axis: first.sweep_axis.clone(),
                cell_value: first.cell_value,
                estimator: estimator.clone(),
                metric: name.to_string(),
                mean,
                std: var.sqrt(),
                n,
            });
        }
    }
    out
}
