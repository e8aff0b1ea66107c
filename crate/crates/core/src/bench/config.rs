//! Flat key=value experiment configuration: `#` comments, comma-separated
//! lists, documented defaults.

use crate::datagen::{FeatureDist, ParamScheme};
use crate::error::{MtlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Tasks,
    TaskSize,
    Sigma,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Tasks => "T",
            SweepAxis::TaskSize => "m",
            SweepAxis::Sigma => "sigma",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "T" => Some(SweepAxis::Tasks),
            "m" => Some(SweepAxis::TaskSize),
            "sigma" => Some(SweepAxis::Sigma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Nuc,
    NucFw,
    Bm,
    Altmin,
    Mom,
    Single,
    Oracle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        EstimatorKind::Nuc,
        EstimatorKind::NucFw,
        EstimatorKind::Bm,
        EstimatorKind::Altmin,
        EstimatorKind::Mom,
        EstimatorKind::Single,
        EstimatorKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Nuc => "nuc",
            EstimatorKind::NucFw => "nuc_fw",
            EstimatorKind::Bm => "bm",
            EstimatorKind::Altmin => "altmin",
            EstimatorKind::Mom => "mom",
            EstimatorKind::Single => "single",
            EstimatorKind::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// How the nuc estimator's λ is chosen during a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    Theory,
    Fixed(f64),
    /// Grid-search cross-validation; `None` grid means the default
    /// logarithmic 10-point grid spanning [λ_theory/100, λ_theory·100].
    CrossValidated(Option<Vec<f64>>),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub d: usize,
    pub r: usize,
    /// Fixed task size (ignored when sweeping m).
    pub m: usize,
    /// Fixed task count (ignored when sweeping T).
    pub t: usize,
    /// Fixed noise level (ignored when sweeping sigma).
    pub sigma: f64,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub lambda: LambdaSpec,
    pub feature_dist: FeatureDist,
    pub param_scheme: ParamScheme,
    /// Run the new-task transfer pipeline per cell.
    pub transfer: bool,
    /// Write measured wall time into the runtime_ms column. Off by default:
    /// timings are not reproducible, and sweep output is promised to be
    /// byte-identical across reruns.
    pub record_runtime: bool,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub output_path: String,
}

fn perr(line: usize, msg: impl Into<String>) -> MtlError {
    MtlError::Parse { line, msg: msg.into() }
}

/// Parses the flat key=value format. Unknown keys and invariant violations
/// are reported with the offending key and line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut d = 100usize;
    let mut r = 5usize;
    let mut m = 10usize;
    let mut t = 800usize;
    let mut sigma = 1.0f64;
    let mut sweep_axis: Option<SweepAxis> = None;
    let mut sweep_values: Vec<f64> = Vec::new();
    let mut estimators: Vec<EstimatorKind> = EstimatorKind::ALL.to_vec();
    let mut n_seeds = 12usize;
    let mut base_seed = 0u64;
    let mut lambda = LambdaSpec::Theory;
    let mut feature_dist = FeatureDist::Gaussian;
    let mut param_scheme = ParamScheme::Gaussian;
    let mut transfer = false;
    let mut record_runtime = false;
    let mut max_iters = 5000usize;
    let mut rel_tol = 1e-8f64;
    let mut output_path = "bench_out".to_string();

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(ln, format!("expected key=value, got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| perr(ln, format!("key '{key}': {what} ('{value}')"));
        match key {
            "d" => d = value.parse().map_err(|_| bad("expected positive integer"))?,
            "r" => r = value.parse().map_err(|_| bad("expected positive integer"))?,
            "m" => m = value.parse().map_err(|_| bad("expected positive integer"))?,
            "T" => t = value.parse().map_err(|_| bad("expected positive integer"))?,
            "sigma" => sigma = value.parse().map_err(|_| bad("expected real"))?,
            "sweep_axis" => {
                sweep_axis =
                    Some(SweepAxis::parse(value).ok_or_else(|| bad("expected T, m or sigma"))?)
            }
            "sweep_values" => {
                sweep_values = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("expected comma-separated reals"))?;
            }
            "estimators" => {
                estimators = value
                    .split(',')
                    .map(|v| {
                        EstimatorKind::parse(v.trim())
                            .ok_or_else(|| perr(ln, format!("unknown estimator '{}'", v.trim())))
                    })
                    .collect::<Result<_>>()?;
            }
            "n_seeds" => n_seeds = value.parse().map_err(|_| bad("expected positive integer"))?,
            "base_seed" => base_seed = value.parse().map_err(|_| bad("expected integer"))?,
            "lambda" => {
                lambda = if value == "theory" {
                    LambdaSpec::Theory
                } else if value == "cv" {
                    LambdaSpec::CrossValidated(None)
                } else if let Some(v) = value.strip_prefix("fixed:") {
                    LambdaSpec::Fixed(v.parse().map_err(|_| bad("expected fixed:<real>"))?)
                } else {
                    return Err(bad("expected theory, cv or fixed:<real>"));
                }
            }
            "lambda_grid" => {
                let grid: Vec<f64> = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("expected comma-separated reals"))?;
                lambda = LambdaSpec::CrossValidated(Some(grid));
            }
            "feature_dist" => {
                feature_dist = match value {
                    "gaussian" => FeatureDist::Gaussian,
                    "adversarial" => FeatureDist::Adversarial,
                    _ => return Err(bad("expected gaussian or adversarial")),
                }
            }
            "param_scheme" => {
                param_scheme = match value {
                    "gaussian" => ParamScheme::Gaussian,
                    "duplicated" => ParamScheme::Duplicated,
                    _ => return Err(bad("expected gaussian or duplicated")),
                }
            }
            "transfer" => {
                transfer = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad("expected true or false")),
                }
            }
            "record_runtime" => {
                record_runtime = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad("expected true or false")),
                }
            }
            "max_iters" => max_iters = value.parse().map_err(|_| bad("expected positive integer"))?,
            "rel_tol" => rel_tol = value.parse().map_err(|_| bad("expected positive real"))?,
            "output" => output_path = value.to_string(),
            _ => return Err(perr(ln, format!("unknown key '{key}'"))),
        }
    }

    let sweep_axis = sweep_axis
        .ok_or_else(|| MtlError::invalid("config: missing required key 'sweep_axis'"))?;
    if sweep_values.is_empty() {
        return Err(MtlError::invalid("config: sweep_values must be nonempty"));
    }
    if !sweep_values.windows(2).all(|w| w[0] < w[1]) {
        return Err(MtlError::invalid(
            "config: sweep_values must be strictly increasing",
        ));
    }
    if n_seeds == 0 {
        return Err(MtlError::invalid("config: n_seeds must be ≥ 1"));
    }
    if estimators.is_empty() {
        return Err(MtlError::invalid("config: estimators must be nonempty"));
    }
    if matches!(sweep_axis, SweepAxis::Tasks | SweepAxis::TaskSize)
        && sweep_values
            .iter()
            .any(|v| v.fract() != 0.0 || *v < 1.0)
    {
        return Err(MtlError::invalid(
            "config: T/m sweep values must be positive integers",
        ));
    }

    Ok(ExperimentConfig {
        d,
        r,
        m,
        t,
        sigma,
        sweep_axis,
        sweep_values,
        estimators,
        n_seeds,
        base_seed,
        lambda,
        feature_dist,
        param_scheme,
        transfer,
        record_runtime,
        max_iters,
        rel_tol,
        output_path,
    })
}

impl ExperimentConfig {
    /// Resolved (d, r, m, T, sigma) for one cell of the sweep.
    pub fn cell_dims(&self, cell_value: f64) -> (usize, usize, usize, usize, f64) {
        match self.sweep_axis {
            SweepAxis::Tasks => (self.d, self.r, self.m, cell_value as usize, self.sigma),
            SweepAxis::TaskSize => (self.d, self.r, cell_value as usize, self.t, self.sigma),
            SweepAxis::Sigma => (self.d, self.r, self.m, self.t, cell_value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_count_sweep_config() {
        let cfg = parse_config("sweep_axis=T\nsweep_values=100,200,400,800\nm=10").unwrap();
        assert_eq!(cfg.sweep_axis, SweepAxis::Tasks);
        assert_eq!(cfg.sweep_values, vec![100.0, 200.0, 400.0, 800.0]);
        assert_eq!(cfg.m, 10);
        assert_eq!(cfg.d, 100);
        assert_eq!(cfg.r, 5);
        assert_eq!(cfg.sigma, 1.0);
        assert_eq!(cfg.n_seeds, 12);
    }

    #[test]
    fn empty_config_rejected_for_missing_axis() {
        assert!(parse_config("").is_err());
    }

    #[test]
    fn non_increasing_sweep_rejected() {
        assert!(parse_config("sweep_axis=T\nsweep_values=400,200").is_err());
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse_config("sweep_axis=T\nsweep_values=10\nbogus=1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn comments_and_lists() {
        let cfg = parse_config(
            "# correlated features\nsweep_axis=T\nsweep_values=100,200 # cells\nestimators=nuc,mom\nfeature_dist=adversarial\nparam_scheme=duplicated\nlambda=fixed:0.05\ntransfer=true",
        )
        .unwrap();
        assert_eq!(cfg.estimators, vec![EstimatorKind::Nuc, EstimatorKind::Mom]);
        assert_eq!(cfg.lambda, LambdaSpec::Fixed(0.05));
        assert!(cfg.transfer);
    }

    #[test]
    fn unknown_estimator_rejected() {
        assert!(parse_config("sweep_axis=T\nsweep_values=10\nestimators=nuc,xyz").is_err());
    }
}
