//! Empirical diagnostic suites for the design-matrix operator norm, the
//! effective noise level, and the restricted-strong-convexity lower bound.
//! Shared by `bench check` and the acceptance tests.

use rand_distr::{Distribution, StandardNormal};

use crate::datagen::{self, FeatureDist};
use crate::matops::{self, RealMatrix};
use crate::rng::stream_rng;

/// Outcome of one diagnostic suite.
#[derive(Debug, Clone)]
pub struct DiagnosticOutcome {
    pub name: &'static str,
    pub passes: usize,
    pub trials: usize,
    pub required: usize,
}

impl DiagnosticOutcome {
    pub fn ok(&self) -> bool {
        self.passes >= self.required
    }
}

/// Design operator norm: ‖X_t‖₂ ≤ 3(√d + √m) for m i.i.d. standard normal
/// d-vectors, d=40, m=8, required in ≥ 99% of 1000 trials.
pub fn design_norm_diagnostic(seed: u64) -> DiagnosticOutcome {
    let (d, m, trials) = (40usize, 8usize, 1000usize);
    let bound = 3.0 * ((d as f64).sqrt() + (m as f64).sqrt());
    let passes = (0..trials as u64)
        .filter(|&trial| {
            let mut rng = stream_rng(seed, "diag-design-norm", trial);
            let x = datagen::sample_features(FeatureDist::Gaussian, d, m, &mut rng);
            matops::spectral_norm(&x) <= bound
        })
        .count();
    DiagnosticOutcome {
        name: "design_operator_norm",
        passes,
        trials,
        required: 990,
    }
}

/// Effective noise level: for a fixed M with ‖M‖_* = 1,
/// |(1/mT)Σ ε⟨x, M^(t)⟩| ≤ 10σ√((T + d²/m)/(mT²)) in ≥ 99% of 500 trials
/// at d=20, m=5, T=100, σ=1.
pub fn noise_level_diagnostic(seed: u64) -> DiagnosticOutcome {
    let (d, m, t, sigma, trials) = (20usize, 5usize, 100usize, 1.0f64, 500usize);
    let (df, mf, tf) = (d as f64, m as f64, t as f64);
    let bound = 10.0 * sigma * ((tf + df * df / mf) / (mf * tf * tf)).sqrt();

    // Fixed direction matrix, normalized to unit nuclear norm.
    let mut rng_m = stream_rng(seed, "diag-noise-m", 0);
    let mut mat = RealMatrix::from_fn(d, t, |_, _| StandardNormal.sample(&mut rng_m));
    mat /= matops::nuclear_norm(&mat);

    let passes = (0..trials as u64)
        .filter(|&trial| {
            let mut rng = stream_rng(seed, "diag-noise", trial);
            let mut acc = 0.0;
            for col in 0..t {
                for _ in 0..m {
                    let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    let dot: f64 = (0..d).map(|k| x[k] * mat[(k, col)]).sum();
                    acc += sigma * eps * dot;
                }
            }
            (acc / (mf * tf)).abs() <= bound
        })
        .count();
    DiagnosticOutcome {
        name: "effective_noise_level",
        passes,
        trials,
        required: 495,
    }
}

/// Restricted strong convexity: for random rank-2r matrices Δ of unit
/// Frobenius norm at d=20, T=100, m=5, r=3, the empirical operator satisfies
/// ‖L(Δ)‖_F² ≥ 0.1/T in ≥ 95% of 200 trials.
pub fn rsc_diagnostic(seed: u64) -> DiagnosticOutcome {
    let (d, m, t, r, trials) = (20usize, 5usize, 100usize, 3usize, 200usize);
    let threshold = 0.1 / t as f64;
    let passes = (0..trials as u64)
        .filter(|&trial| {
            let mut rng = stream_rng(seed, "diag-rsc", trial);
            // random rank-2r matrix of unit Frobenius norm
            let left = RealMatrix::from_fn(d, 2 * r, |_, _| StandardNormal.sample(&mut rng));
            let right = RealMatrix::from_fn(2 * r, t, |_, _| StandardNormal.sample(&mut rng));
            let mut delta = left * right;
            delta /= delta.norm();
            let mut acc = 0.0;
            for col in 0..t {
                let x = datagen::sample_features(FeatureDist::Gaussian, d, m, &mut rng);
                acc += (x * delta.column(col)).norm_squared();
            }
            acc / (m * t) as f64 >= threshold
        })
        .count();
    DiagnosticOutcome {
        name: "restricted_strong_convexity",
        passes,
        trials,
        required: 190,
    }
}

/// Moment identity: with Gaussian features, σ=0 and a single direction e₁,
/// the empirical moment matrix over n samples approaches 2e₁e₁ᵀ + I. Returns
/// the max entrywise deviation.
pub fn moment_identity_deviation(seed: u64, d: usize, n: usize) -> f64 {
    let mut rng = stream_rng(seed, "diag-moment", 0);
    // Single synthetic task: y = ⟨e₁, x⟩, built in manageable batches.
    let batch = 100_000.min(n);
    let mut acc = RealMatrix::zeros(d, d);
    let mut remaining = n;
    while remaining > 0 {
        let take = batch.min(remaining);
        let x = datagen::sample_features(FeatureDist::Gaussian, d, take, &mut rng);
        for i in 0..take {
            let xi = x.row(i).transpose();
            let y = xi[0];
            acc.ger(y * y, &xi, &xi, 1.0);
        }
        remaining -= take;
    }
    acc /= n as f64;
    let mut expected = RealMatrix::identity(d, d);
    expected[(0, 0)] = 3.0; // 2·e₁e₁ᵀ + I
    (acc - expected).amax()
}

pub fn run_all(seed: u64) -> Vec<DiagnosticOutcome> {
    vec![
        design_norm_diagnostic(seed),
        noise_level_diagnostic(seed),
        rsc_diagnostic(seed),
    ]
}
