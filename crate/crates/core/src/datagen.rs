//! Synthetic data generation: planted low-rank parameter matrices, feature
//! and noise sampling, and complete multi-task datasets with deterministic
//! per-task streams.

use std::io::{BufRead, Write};

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{MtlError, Result};
use crate::matops::{self, RealMatrix, SvdRank};
use crate::rng::stream_rng;

/// Feature distribution for the design rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureDist {
    /// i.i.d. standard normal coordinates.
    Gaussian,
    /// Per-coordinate mixture `cos(kπ/2d)·ξ + sin(kπ/2d)·η` with
    /// ξ ~ U[−√3, √3], η ~ N(0,1), k = 1..d. Unit variance per coordinate
    /// but non-spherically-symmetric fourth moments.
    Adversarial,
}

impl FeatureDist {
    pub fn name(self) -> &'static str {
        match self {
            FeatureDist::Gaussian => "gaussian",
            FeatureDist::Adversarial => "adversarial",
        }
    }
}

/// How the coefficient matrix alpha is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamScheme {
    /// alpha entries i.i.d. N(0,1).
    Gaussian,
    /// First r columns i.i.d. N(0,1); remaining T−r columns sampled
    /// uniformly with replacement among those r columns.
    Duplicated,
}

impl ParamScheme {
    pub fn name(self) -> &'static str {
        match self {
            ParamScheme::Gaussian => "gaussian",
            ParamScheme::Duplicated => "duplicated",
        }
    }
}

/// One experimental generation cell.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub d: usize,
    pub r: usize,
    pub m: usize,
    pub t: usize,
    pub sigma: f64,
    pub feature_dist: FeatureDist,
    pub param_scheme: ParamScheme,
    pub seed: u64,
    /// Diagnostic bound on max squared column norm; never enforced.
    pub task_norm_bound: f64,
}

impl GenConfig {
    pub fn new(d: usize, r: usize, m: usize, t: usize, sigma: f64, seed: u64) -> Result<Self> {
        let cfg = GenConfig {
            d,
            r,
            m,
            t,
            sigma,
            feature_dist: FeatureDist::Gaussian,
            param_scheme: ParamScheme::Gaussian,
            seed,
            task_norm_bound: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.r == 0 || self.m == 0 || self.t == 0 {
            return Err(MtlError::invalid("GenConfig: dimensions must be positive"));
        }
        if self.r > self.d.min(self.t) {
            return Err(MtlError::invalid(format!(
                "GenConfig: r={} exceeds min(d={}, T={})",
                self.r, self.d, self.t
            )));
        }
        if self.sigma < 0.0 {
            return Err(MtlError::invalid("GenConfig: sigma must be nonnegative"));
        }
        Ok(())
    }
}

/// Planted parameter matrix with its factorization.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// d×T, equals `b * alpha`.
    pub mstar: RealMatrix,
    /// d×r with orthonormal columns.
    pub b: RealMatrix,
    /// r×T coefficients.
    pub alpha: RealMatrix,
}

/// One task: m feature rows and m labels.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub x: RealMatrix,
    pub y: DVector<f64>,
}

/// T tasks drawn from one generation cell.
#[derive(Debug, Clone)]
pub struct MultiTaskDataset {
    pub tasks: Vec<TaskData>,
    pub d: usize,
    pub m: usize,
    pub t: usize,
    pub sigma: f64,
    pub feature_dist: FeatureDist,
    pub seed: u64,
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> RealMatrix {
    // Column-major fill order.
    RealMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Ground truth per the synthetic protocol: B is the top-r left singular
/// vectors of a d×d standard-normal matrix; alpha per `param_scheme`.
pub fn gen_ground_truth(cfg: &GenConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut rng_b = stream_rng(cfg.seed, "ground-truth-b", 0);
    let g = normal_matrix(cfg.d, cfg.d, &mut rng_b);
    let b = matops::svd(&g, SvdRank::Top(cfg.r))?.u;

    let mut rng_a = stream_rng(cfg.seed, "ground-truth-alpha", 0);
    let alpha = match cfg.param_scheme {
        ParamScheme::Gaussian => normal_matrix(cfg.r, cfg.t, &mut rng_a),
        ParamScheme::Duplicated => {
            let base = normal_matrix(cfg.r, cfg.r, &mut rng_a);
            let mut rng_pick = stream_rng(cfg.seed, "ground-truth-alpha-dup", 0);
            let mut alpha = RealMatrix::zeros(cfg.r, cfg.t);
            for j in 0..cfg.r.min(cfg.t) {
                alpha.set_column(j, &base.column(j));
            }
            for j in cfg.r..cfg.t {
                let pick = rng_pick.gen_range(0..cfg.r);
                alpha.set_column(j, &base.column(pick));
            }
            alpha
        }
    };
    let mstar = &b * &alpha;
    Ok(GroundTruth { mstar, b, alpha })
}

/// n×d matrix of i.i.d. feature rows from the named distribution. Every
/// coordinate has mean 0 and variance 1 for both distributions.
pub fn sample_features(
    dist: FeatureDist,
    d: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> RealMatrix {
    let mut x = RealMatrix::zeros(n, d);
    match dist {
        FeatureDist::Gaussian => {
            for i in 0..n {
                for k in 0..d {
                    x[(i, k)] = StandardNormal.sample(rng);
                }
            }
        }
        FeatureDist::Adversarial => {
            let sqrt3 = 3.0f64.sqrt();
            let unif = Uniform::new_inclusive(-sqrt3, sqrt3);
            for i in 0..n {
                for k in 0..d {
                    // 1-based coordinate index: angle kπ/(2d) ∈ (0, π/2].
                    let angle = (k as f64 + 1.0) / d as f64 * std::f64::consts::FRAC_PI_2;
                    let xi: f64 = unif.sample(rng);
                    let eta: f64 = StandardNormal.sample(rng);
                    x[(i, k)] = angle.cos() * xi + angle.sin() * eta;
                }
            }
        }
    }
    x
}

/// Full multi-task dataset: per-task stream `(seed, "task", t)` draws the m
/// feature rows first, then the m noise values, so tasks can be generated
/// concurrently with sequential-identical results.
pub fn gen_dataset(cfg: &GenConfig, gt: &GroundTruth) -> Result<MultiTaskDataset> {
    cfg.validate()?;
    if gt.mstar.nrows() != cfg.d || gt.mstar.ncols() != cfg.t {
        return Err(MtlError::invalid(format!(
            "gen_dataset: ground truth is {}x{}, config wants {}x{}",
            gt.mstar.nrows(),
            gt.mstar.ncols(),
            cfg.d,
            cfg.t
        )));
    }
    let tasks = (0..cfg.t)
        .map(|t| {
            let mut rng = stream_rng(cfg.seed, "task", t as u64);
            let x = sample_features(cfg.feature_dist, cfg.d, cfg.m, &mut rng);
            let mut y = &x * gt.mstar.column(t);
            for i in 0..cfg.m {
                let eps: f64 = StandardNormal.sample(&mut rng);
                y[i] += cfg.sigma * eps;
            }
            TaskData { x, y }
        })
        .collect();
    Ok(MultiTaskDataset {
        tasks,
        d: cfg.d,
        m: cfg.m,
        t: cfg.t,
        sigma: cfg.sigma,
        feature_dist: cfg.feature_dist,
        seed: cfg.seed,
    })
}

/// A fresh (T+1)-st task: draws alpha_{T+1} ~ N(0, I_r), sets the true
/// parameter vector to B·alpha_{T+1}, and samples m noisy observations.
pub fn gen_new_task(
    cfg: &GenConfig,
    gt_b: &RealMatrix,
    rng: &mut ChaCha8Rng,
) -> (TaskData, DVector<f64>) {
    let r = gt_b.ncols();
    let alpha_new = DVector::from_fn(r, |_, _| StandardNormal.sample(rng));
    let true_params = gt_b * &alpha_new;
    let x = sample_features(cfg.feature_dist, cfg.d, cfg.m, rng);
    let mut y = &x * &true_params;
    for i in 0..cfg.m {
        let eps: f64 = StandardNormal.sample(rng);
        y[i] += cfg.sigma * eps;
    }
    (TaskData { x, y }, true_params)
}

/// Max over tasks of the squared column norm (the diversity diagnostic C).
pub fn max_task_norm(gt: &GroundTruth) -> f64 {
    gt.mstar
        .column_iter()
        .map(|c| c.norm_squared())
        .fold(0.0, f64::max)
}

/// Text dump: header `MTLDATA v1 d m T sigma seed`, then per task a `task t`
/// line followed by m lines of d feature values and the label, 17
/// significant digits. Round-trips f64 values bitwise.
pub fn write_dataset<W: Write>(data: &MultiTaskDataset, w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "MTLDATA v1 {} {} {} {:.16e} {}",
        data.d, data.m, data.t, data.sigma, data.seed
    )?;
    for (t, task) in data.tasks.iter().enumerate() {
        writeln!(w, "task {t}")?;
        for i in 0..data.m {
            let mut line = String::new();
            for k in 0..data.d {
                line.push_str(&format!("{:.16e} ", task.x[(i, k)]));
            }
            line.push_str(&format!("{:.16e}", task.y[i]));
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

/// Reads the [`write_dataset`] format. The dump does not record the feature
/// distribution, so the returned dataset reports `gaussian`.
pub fn read_dataset<R: BufRead>(r: R) -> Result<MultiTaskDataset> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| MtlError::Parse { line: 1, msg: "empty input".into() })?;
    let header = header.map_err(|e| MtlError::Parse { line: 1, msg: e.to_string() })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 7 || parts[0] != "MTLDATA" || parts[1] != "v1" {
        return Err(MtlError::Parse {
            line: 1,
            msg: "expected header 'MTLDATA v1 d m T sigma seed'".into(),
        });
    }
    let parse_err = |line: usize, msg: &str| MtlError::Parse { line, msg: msg.into() };
    let d: usize = parts[2].parse().map_err(|_| parse_err(1, "bad d"))?;
    let m: usize = parts[3].parse().map_err(|_| parse_err(1, "bad m"))?;
    let t: usize = parts[4].parse().map_err(|_| parse_err(1, "bad T"))?;
    let sigma: f64 = parts[5].parse().map_err(|_| parse_err(1, "bad sigma"))?;
    let seed: u64 = parts[6].parse().map_err(|_| parse_err(1, "bad seed"))?;

    let mut tasks = Vec::with_capacity(t);
    for task_idx in 0..t {
        let (ln, marker) = lines
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of input"))?;
        let marker = marker.map_err(|e| parse_err(ln + 1, &e.to_string()))?;
        if marker != format!("task {task_idx}") {
            return Err(parse_err(ln + 1, &format!("expected 'task {task_idx}'")));
        }
        let mut x = RealMatrix::zeros(m, d);
        let mut y = DVector::zeros(m);
        for i in 0..m {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| parse_err(0, "unexpected end of input"))?;
            let row = row.map_err(|e| parse_err(ln + 1, &e.to_string()))?;
            let vals: Vec<&str> = row.split_whitespace().collect();
            if vals.len() != d + 1 {
                return Err(parse_err(ln + 1, &format!("expected {} values", d + 1)));
            }
            for k in 0..d {
                x[(i, k)] = vals[k]
                    .parse()
                    .map_err(|_| parse_err(ln + 1, "bad feature value"))?;
            }
            y[i] = vals[d]
                .parse()
                .map_err(|_| parse_err(ln + 1, "bad label value"))?;
        }
        tasks.push(TaskData { x, y });
    }
    Ok(MultiTaskDataset {
        tasks,
        d,
        m,
        t,
        sigma,
        feature_dist: FeatureDist::Gaussian,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_cfg() -> GenConfig {
        GenConfig::new(10, 2, 5, 8, 0.5, 42).unwrap()
    }

    #[test]
    fn ground_truth_invariants() {
        let cfg = small_cfg();
        let gt = gen_ground_truth(&cfg).unwrap();
        assert_eq!(gt.b.shape(), (10, 2));
        assert_eq!(gt.alpha.shape(), (2, 8));
        let btb = gt.b.transpose() * &gt.b;
        assert!((btb - RealMatrix::identity(2, 2)).norm() < 1e-10);
        assert!((&gt.b * &gt.alpha - &gt.mstar).norm() < 1e-10);
        let rank = matops::svd(&gt.mstar, crate::matops::SvdRank::Full)
            .unwrap()
            .s
            .iter()
            .filter(|s| **s > 1e-8)
            .count();
        assert!(rank <= 2);
    }

    #[test]
    fn ground_truth_full_rank_shape_case() {
        let cfg = GenConfig::new(4, 4, 3, 4, 0.0, 1).unwrap();
        let gt = gen_ground_truth(&cfg).unwrap();
        assert_eq!(gt.b.shape(), (4, 4));
        let btb = gt.b.transpose() * &gt.b;
        assert!((btb - RealMatrix::identity(4, 4)).norm() < 1e-10);
    }

    #[test]
    fn ground_truth_rejects_bad_rank() {
        assert!(GenConfig::new(4, 5, 3, 10, 0.0, 1).is_err());
    }

    #[test]
    fn duplicated_scheme_has_at_most_r_distinct_columns() {
        let mut cfg = GenConfig::new(6, 2, 3, 5, 0.0, 7).unwrap();
        cfg.param_scheme = ParamScheme::Duplicated;
        let gt = gen_ground_truth(&cfg).unwrap();
        let mut distinct: Vec<DVector<f64>> = Vec::new();
        for j in 0..5 {
            let col = gt.alpha.column(j).into_owned();
            if !distinct.iter().any(|c| (c - &col).norm() < 1e-14) {
                distinct.push(col);
            }
        }
        assert!(distinct.len() <= 2, "{} distinct columns", distinct.len());
    }

    #[test]
    fn noiseless_labels_satisfy_model() {
        let mut cfg = small_cfg();
        cfg.sigma = 0.0;
        let gt = gen_ground_truth(&cfg).unwrap();
        let data = gen_dataset(&cfg, &gt).unwrap();
        for (t, task) in data.tasks.iter().enumerate() {
            let expect = &task.x * gt.mstar.column(t);
            assert!((expect - &task.y).amax() < 1e-12);
        }
    }

    #[test]
    fn seed_determinism() {
        let cfg = small_cfg();
        let gt1 = gen_ground_truth(&cfg).unwrap();
        let gt2 = gen_ground_truth(&cfg).unwrap();
        assert_eq!(gt1.mstar, gt2.mstar);
        let d1 = gen_dataset(&cfg, &gt1).unwrap();
        let d2 = gen_dataset(&cfg, &gt2).unwrap();
        for (a, b) in d1.tasks.iter().zip(&d2.tasks) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
        }
    }

    #[test]
    fn feature_variance_calibration() {
        for dist in [FeatureDist::Gaussian, FeatureDist::Adversarial] {
            let mut rng = stream_rng(5, "variance-check", 0);
            let n = 200_000;
            let x = sample_features(dist, 2, n, &mut rng);
            for k in 0..2 {
                let col = x.column(k);
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                assert!((var - 1.0).abs() < 0.01, "{} var {}", dist.name(), var);
                assert!(mean.abs() < 0.01);
            }
        }
    }

    #[test]
    fn isotropy_second_moment() {
        // Assumption-1 check: empirical second moment within 0.05 of I
        // entrywise at d=10 over 1e5 samples.
        for dist in [FeatureDist::Gaussian, FeatureDist::Adversarial] {
            let d = 10;
            let mut rng = stream_rng(11, "isotropy", 0);
            let n = 100_000;
            let x = sample_features(dist, d, n, &mut rng);
            let second = x.transpose() * &x / n as f64;
            for i in 0..d {
                for j in 0..d {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (second[(i, j)] - target).abs() < 0.05,
                        "{} moment[{i},{j}] = {}",
                        dist.name(),
                        second[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn new_task_lies_in_span() {
        let mut cfg = small_cfg();
        cfg.sigma = 0.0;
        let gt = gen_ground_truth(&cfg).unwrap();
        let mut rng = stream_rng(cfg.seed, "new-task", 0);
        let (task, truth) = gen_new_task(&cfg, &gt.b, &mut rng);
        assert_eq!(task.x.shape(), (cfg.m, cfg.d));
        assert!((&task.x * &truth - &task.y).amax() < 1e-12);
        let as_col = RealMatrix::from_column_slice(cfg.d, 1, truth.as_slice());
        let angle = matops::sin_principal_angle(&gt.b, &as_col).unwrap();
        assert!(angle < 1e-8);
    }

    #[test]
    fn max_task_norm_cases() {
        let gt = GroundTruth {
            mstar: RealMatrix::identity(2, 2),
            b: RealMatrix::identity(2, 2),
            alpha: RealMatrix::identity(2, 2),
        };
        assert_abs_diff_eq!(max_task_norm(&gt), 1.0);
        let zero = GroundTruth {
            mstar: RealMatrix::zeros(2, 2),
            b: RealMatrix::identity(2, 2),
            alpha: RealMatrix::zeros(2, 2),
        };
        assert_abs_diff_eq!(max_task_norm(&zero), 0.0);
    }

    #[test]
    fn task_norms_concentrate_near_r() {
        // ‖Bα^(t)‖² = ‖α^(t)‖² ~ χ²_r, so the mean column norm² ≈ r.
        let cfg = GenConfig::new(30, 5, 2, 2000, 0.0, 3).unwrap();
        let gt = gen_ground_truth(&cfg).unwrap();
        let mean: f64 = gt
            .mstar
            .column_iter()
            .map(|c| c.norm_squared())
            .sum::<f64>()
            / cfg.t as f64;
        assert!((mean - 5.0).abs() < 0.5, "mean column norm² {mean}");
    }

    #[test]
    fn dump_round_trips_bitwise() {
        let cfg = small_cfg();
        let gt = gen_ground_truth(&cfg).unwrap();
        let data = gen_dataset(&cfg, &gt).unwrap();
        let mut buf = Vec::new();
        write_dataset(&data, &mut buf).unwrap();
        let back = read_dataset(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back.d, data.d);
        assert_eq!(back.sigma, data.sigma);
        assert_eq!(back.seed, data.seed);
        for (a, b) in data.tasks.iter().zip(&back.tasks) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
        }
    }
}
