//! Meta-learning transfer: rank-r projection of a fitted matrix, subspace
//! extraction, and least-squares estimation on a new task inside the
//! estimated subspace.

use nalgebra::DVector;

use crate::datagen::TaskData;
use crate::error::{MtlError, Result};
use crate::matops::{self, RealMatrix, SvdRank};

/// Orthonormal basis spanning the best rank-r approximation of a fitted
/// matrix, with a flag for a spectral-gap tie at position r.
#[derive(Debug, Clone)]
pub struct SubspaceEstimate {
    /// d×r, orthonormal columns.
    pub basis: RealMatrix,
    /// True when the r-th and (r+1)-th singular values coincide within
    /// 1e-12, making the rank-r projection non-unique. The basis is still
    /// returned (an arbitrary choice among the minimizers).
    pub gap_ambiguous: bool,
}

/// Top-r left singular vectors of `mhat`, spanning the column space of its
/// best rank-r approximation.
pub fn extract_subspace(mhat: &RealMatrix, r: usize) -> Result<SubspaceEstimate> {
    if r == 0 || r > mhat.nrows().min(mhat.ncols()) {
        return Err(MtlError::invalid(format!(
            "extract_subspace: r={r} out of range for {}x{}",
            mhat.nrows(),
            mhat.ncols()
        )));
    }
    let f = matops::svd(mhat, SvdRank::Full)?;
    let gap_ambiguous = f.s.len() > r && (f.s[r - 1] - f.s[r]).abs() <= 1e-12;
    Ok(SubspaceEstimate {
        basis: f.u.columns(0, r).into_owned(),
        gap_ambiguous,
    })
}

/// Result of fitting a new task inside an estimated subspace.
#[derive(Debug, Clone)]
pub struct TransferResult {
    /// d×r orthonormal basis used for the fit.
    pub btilde: RealMatrix,
    /// r coefficients from least squares on the projected features.
    pub alpha_new: DVector<f64>,
    /// d-vector parameter estimate, equals `btilde · alpha_new`.
    pub theta_hat: DVector<f64>,
    /// Sine of the largest principal angle vs the ground-truth subspace,
    /// when one was supplied.
    pub sin_theta: Option<f64>,
    /// Pseudoinverse fallback was needed (m < r or degenerate projection).
    pub pseudo_fallback: bool,
}

/// Least squares of the new task's labels on X·B̃; minimum-norm solution
/// when the projected system is rank-deficient. `true_b`, when available,
/// fills the subspace-angle diagnostic.
pub fn transfer_fit(
    btilde: &RealMatrix,
    new_task: &TaskData,
    true_b: Option<&RealMatrix>,
) -> Result<TransferResult> {
    if new_task.x.ncols() != btilde.nrows() {
        return Err(MtlError::invalid(format!(
            "transfer_fit: features have d={}, subspace has d={}",
            new_task.x.ncols(),
            btilde.nrows()
        )));
    }
    let z = &new_task.x * btilde;
    let (alpha_new, pseudo_fallback) = matops::lstsq_min_norm(&z, &new_task.y)?;
    let theta_hat = btilde * &alpha_new;
    let sin_theta = match true_b {
        Some(b) => Some(matops::sin_principal_angle(b, btilde)?),
        None => None,
    };
    Ok(TransferResult {
        btilde: btilde.clone(),
        alpha_new,
        theta_hat,
        sin_theta,
        pseudo_fallback,
    })
}

/// The subspace-angle bound √(min(1, 4r·err²/(T·ν))) with
/// ν = r·λ_r(M*M*ᵀ/T), capped at 1.
pub fn subspace_angle_bound(mhat_err_frob: f64, r: usize, t: usize, nu: f64) -> Result<f64> {
    if nu <= 0.0 {
        return Err(MtlError::invalid(
            "subspace_angle_bound: nu must be > 0 (degenerate task spectrum)",
        ));
    }
    if mhat_err_frob < 0.0 {
        return Err(MtlError::invalid("subspace_angle_bound: negative error"));
    }
    let sin_sq = 4.0 * r as f64 * mhat_err_frob * mhat_err_frob / (t as f64 * nu);
    Ok(sin_sq.min(1.0).sqrt())
}

/// ν = r·λ_r(M*M*ᵀ/T) computed from a ground-truth matrix, used only for
/// bound verification in synthetic runs.
pub fn instance_nu(mstar: &RealMatrix, r: usize) -> Result<f64> {
    let t = mstar.ncols();
    let f = matops::svd(mstar, SvdRank::Full)?;
    if r == 0 || r > f.s.len() {
        return Err(MtlError::invalid("instance_nu: r out of range"));
    }
    // λ_r(M*M*ᵀ/T) = σ_r(M*)²/T
    Ok(r as f64 * f.s[r - 1] * f.s[r - 1] / t as f64)
}
