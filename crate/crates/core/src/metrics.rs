//! Error metrics and theoretical rate overlays (constants and log factors
//! dropped; shape comparisons only, never pass/fail thresholds by value).

use crate::error::{MtlError, Result};
use crate::matops::RealMatrix;

/// One CSV row of a benchmark run.
#[derive(Debug, Clone)]
pub struct MetricRecord {
    pub estimator: String,
    pub d: usize,
    pub r: usize,
    pub m: usize,
    pub t: usize,
    pub sigma: f64,
    pub seed: u64,
    /// ‖M̂ − M*‖_F / √T
    pub frob_normalized: f64,
    /// Sine of the largest principal angle vs the true subspace; absent for
    /// estimators without a subspace (single-task).
    pub sin_theta: Option<f64>,
    /// Mean over tasks of ‖M̂^(t) − M*^(t)‖.
    pub per_task_mean_err: f64,
    /// New-task transfer error ‖θ̂ − θ*‖, when the transfer pipeline ran.
    pub transfer_err: Option<f64>,
    pub runtime_ms: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// ‖Mhat − Mstar‖_F / √T.
pub fn frob_normalized(mhat: &RealMatrix, mstar: &RealMatrix, t: usize) -> Result<f64> {
    if mhat.shape() != mstar.shape() {
        return Err(MtlError::invalid(format!(
            "frob_normalized: shapes {:?} vs {:?}",
            mhat.shape(),
            mstar.shape()
        )));
    }
    Ok((mhat - mstar).norm() / (t as f64).sqrt())
}

/// Mean over tasks of the per-column estimation error.
pub fn per_task_mean_err(mhat: &RealMatrix, mstar: &RealMatrix) -> Result<f64> {
    if mhat.shape() != mstar.shape() {
        return Err(MtlError::invalid("per_task_mean_err: shape mismatch"));
    }
    let t = mhat.ncols();
    Ok((0..t)
        .map(|j| (mhat.column(j) - mstar.column(j)).norm())
        .sum::<f64>()
        / t as f64)
}

/// Trace-norm rate skeleton σ√(r(d²/m + T)/m) + √(rd(d+T)/m²).
pub fn rate_tracenorm(sigma: f64, r: usize, d: usize, m: usize, t: usize) -> f64 {
    let (rf, df, mf, tf) = (r as f64, d as f64, m as f64, t as f64);
    sigma * (rf * (df * df / mf + tf) / mf).sqrt() + (rf * df * (df + tf) / (mf * mf)).sqrt()
}

/// Single-task rate σ√(dT/m).
pub fn rate_single(sigma: f64, d: usize, m: usize, t: usize) -> f64 {
    sigma * (d as f64 * t as f64 / m as f64).sqrt()
}

/// Oracle rate σ√(rT/m).
pub fn rate_oracle(sigma: f64, r: usize, m: usize, t: usize) -> f64 {
    sigma * (r as f64 * t as f64 / m as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn frob_normalized_cases() {
        let a = DMatrix::identity(2, 2);
        assert_eq!(frob_normalized(&a, &a, 2).unwrap(), 0.0);

        // difference = I₂, T=2 → √2/√2 = 1
        let zero = DMatrix::zeros(2, 2);
        assert_abs_diff_eq!(frob_normalized(&a, &zero, 2).unwrap(), 1.0, epsilon = 1e-12);

        // every difference column unit norm → 1
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let z3 = DMatrix::zeros(2, 3);
        assert_abs_diff_eq!(frob_normalized(&b, &z3, 3).unwrap(), 1.0, epsilon = 1e-12);

        assert!(frob_normalized(&a, &z3, 2).is_err());
    }

    #[test]
    fn rate_values() {
        assert_abs_diff_eq!(rate_tracenorm(1.0, 5, 100, 10, 800), 30.0 + 4500f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(rate_single(1.0, 100, 10, 800), 8000f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(rate_oracle(1.0, 5, 10, 800), 20.0, epsilon = 1e-12);
        assert_eq!(rate_single(0.0, 100, 10, 800), 0.0);
        assert_eq!(rate_oracle(0.0, 5, 10, 800), 0.0);
        // σ=0 leaves only the second trace-norm term
        assert_abs_diff_eq!(rate_tracenorm(0.0, 5, 100, 10, 800), 4500f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn rate_scaling_in_t() {
        // doubling T at T ≫ d²/m scales the first trace-norm term by √2
        let base = rate_tracenorm(1.0, 5, 10, 10, 100_000) - rate_tracenorm(0.0, 5, 10, 10, 100_000);
        let dbl = rate_tracenorm(1.0, 5, 10, 10, 200_000) - rate_tracenorm(0.0, 5, 10, 10, 200_000);
        assert!((dbl / base - 2f64.sqrt()).abs() < 1e-3);
        assert_abs_diff_eq!(
            rate_single(1.0, 20, 5, 400) / rate_single(1.0, 20, 5, 200),
            2f64.sqrt(),
            epsilon = 1e-12
        );
        // r=d reduces the oracle rate to the single rate
        assert_eq!(rate_oracle(1.0, 20, 5, 100), rate_single(1.0, 20, 5, 100));
    }

    proptest! {
        #[test]
        fn oracle_never_exceeds_single(sigma in 0.0f64..3.0, r in 1usize..10, extra in 0usize..30, m in 1usize..20, t in 1usize..500) {
            let d = r + extra;
            prop_assert!(rate_oracle(sigma, r, m, t) <= rate_single(sigma, d, m, t) + 1e-12);
        }

        #[test]
        fn frob_normalized_symmetric(seed in 0u64..200) {
            let mut rng = crate::rng::stream_rng(seed, "metrics-prop", 0);
            use rand::Rng;
            let a = DMatrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
            let b = DMatrix::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
            let ab = frob_normalized(&a, &b, 4).unwrap();
            let ba = frob_normalized(&b, &a, 4).unwrap();
            prop_assert!((ab - ba).abs() < 1e-14);
        }
    }
}
