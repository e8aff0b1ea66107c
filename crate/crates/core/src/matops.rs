//! Dense linear-algebra primitives shared by all estimators: SVD,
//! singular-value thresholding, norms, principal angles, rank truncation.
//!
//! All operations are pure functions of their inputs and safe to call from
//! concurrent experiment runs.

use nalgebra::{DMatrix, DVector};

use crate::error::{MtlError, Result};

/// Dense real matrix used throughout the crate.
pub type RealMatrix = DMatrix<f64>;

/// How many singular triplets [`svd`] should return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdRank {
    Full,
    Top(usize),
}

/// Thin SVD factors: `U diag(S) Vᵀ` reconstructs the input (for `Full`).
///
/// `u` is rows×k with orthonormal columns, `s` nonincreasing and nonnegative,
/// `v` cols×k with orthonormal columns. Column signs are arbitrary; all
/// downstream uses (angles, truncation, thresholding) are sign-invariant.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: RealMatrix,
    pub s: DVector<f64>,
    pub v: RealMatrix,
}

impl SvdFactors {
    /// `U diag(S) Vᵀ`.
    pub fn reconstruct(&self) -> RealMatrix {
        let mut scaled = self.u.clone();
        for (j, col) in scaled.column_iter_mut().enumerate() {
            let mut col = col;
            col *= self.s[j];
        }
        &scaled * self.v.transpose()
    }
}

/// Top-k (or full) singular value decomposition.
pub fn svd(a: &RealMatrix, k: SvdRank) -> Result<SvdFactors> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(MtlError::invalid("svd: dimension-zero input"));
    }
    let keep = match k {
        SvdRank::Full => a.nrows().min(a.ncols()),
        SvdRank::Top(k) => {
            if k == 0 || k > a.nrows().min(a.ncols()) {
                return Err(MtlError::invalid(format!(
                    "svd: k={k} out of range for {}x{} matrix",
                    a.nrows(),
                    a.ncols()
                )));
            }
            k
        }
    };
    let f = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| MtlError::Divergence("svd did not converge".into()))?;
    let u = f.u.expect("svd requested u");
    let vt = f.v_t.expect("svd requested v_t");
    let s = f.singular_values;

    // nalgebra returns them sorted nonincreasing; sort anyway so the
    // SvdFactors invariant never depends on backend behavior.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());

    let mut u_out = RealMatrix::zeros(a.nrows(), keep);
    let mut v_out = RealMatrix::zeros(a.ncols(), keep);
    let mut s_out = DVector::zeros(keep);
    for (dst, &src) in order.iter().take(keep).enumerate() {
        u_out.set_column(dst, &u.column(src));
        v_out.set_column(dst, &vt.row(src).transpose());
        s_out[dst] = s[src].max(0.0);
    }
    Ok(SvdFactors {
        u: u_out,
        s: s_out,
        v: v_out,
    })
}

/// Singular value thresholding: the proximal map of `threshold·‖·‖_*`.
/// Soft-thresholds every singular value by `threshold`.
pub fn svt(a: &RealMatrix, threshold: f64) -> Result<RealMatrix> {
    if threshold < 0.0 {
        return Err(MtlError::invalid("svt: negative threshold"));
    }
    let mut f = svd(a, SvdRank::Full)?;
    for s in f.s.iter_mut() {
        *s = (*s - threshold).max(0.0);
    }
    Ok(f.reconstruct())
}

/// Sum of singular values.
pub fn nuclear_norm(a: &RealMatrix) -> f64 {
    svd(a, SvdRank::Full).map(|f| f.s.sum()).unwrap_or(0.0)
}

/// Largest singular value by power iteration (tolerance 1e-10, max 1000
/// iterations on the Gram operator).
pub fn spectral_norm(a: &RealMatrix) -> f64 {
    top_singular_triplet(a).1
}

/// Top singular triplet `(u, s, v)` of `a` by power iteration on `AᵀA`.
///
/// The start vector is a fixed pseudo-random direction so the result is
/// deterministic; a handful of restarts guard against an unlucky start
/// orthogonal to the leading singular vector.
pub fn top_singular_triplet(a: &RealMatrix) -> (DVector<f64>, f64, DVector<f64>) {
    let (rows, cols) = (a.nrows(), a.ncols());
    let frob = a.norm();
    if frob == 0.0 || rows == 0 || cols == 0 {
        return (
            DVector::zeros(rows.max(1)),
            0.0,
            DVector::zeros(cols.max(1)),
        );
    }

    let mut best: Option<(DVector<f64>, f64, DVector<f64>)> = None;
    for restart in 0..3u64 {
        // Deterministic quasi-random start.
        let mut v = DVector::from_fn(cols, |i, _| {
            let x = ((i as f64 + 1.3) * (restart as f64 * 7.7 + 2.1)).sin();
            x + 1e-3
        });
        v /= v.norm();
        let mut sigma = 0.0f64;
        for _ in 0..1000 {
            let av = a * &v;
            let mut w = a.transpose() * av;
            let wn = w.norm();
            if wn == 0.0 {
                break;
            }
            w /= wn;
            let sigma_new = (a * &w).norm();
            let rel = (sigma_new - sigma).abs() / sigma_new.max(f64::MIN_POSITIVE);
            v = w;
            sigma = sigma_new;
            if rel < 1e-10 {
                break;
            }
        }
        let av = a * &v;
        let s = av.norm();
        let u = if s > 0.0 { av / s } else { DVector::zeros(rows) };
        if best.as_ref().map_or(true, |(_, bs, _)| s > *bs) {
            best = Some((u, s, v.clone()));
        }
        // A restart only matters when the estimate collapsed to zero.
        if best.as_ref().unwrap().1 > 1e-14 * frob {
            break;
        }
    }
    best.unwrap()
}

/// Orthonormal basis of the column span via rank-revealing QR.
/// Errors if the numerical rank is below the column count.
fn orthonormalize(b: &RealMatrix, what: &str) -> Result<RealMatrix> {
    let cols = b.ncols();
    if cols == 0 || b.nrows() == 0 {
        return Err(MtlError::invalid(format!("{what}: empty matrix")));
    }
    if cols > b.nrows() {
        return Err(MtlError::invalid(format!(
            "{what}: more columns ({cols}) than rows ({})",
            b.nrows()
        )));
    }
    let qr = b.clone().col_piv_qr();
    let tol = 1e-10 * spectral_norm(b);
    let r = qr.r();
    let rank = (0..cols).take_while(|&i| r[(i, i)].abs() > tol).count();
    if rank < cols {
        return Err(MtlError::DegenerateSubspace(format!(
            "{what}: numerical rank {rank} < {cols} columns"
        )));
    }
    let q = qr.q();
    Ok(q.columns(0, cols).into_owned())
}

/// Sine of the largest principal angle between the column spans of `b1` and
/// `b2`. Inputs need not be orthonormal; they are orthonormalized internally
/// with a rank-revealing factorization (tolerance `1e-10·spectral_norm`).
pub fn sin_principal_angle(b1: &RealMatrix, b2: &RealMatrix) -> Result<f64> {
    if b1.nrows() != b2.nrows() {
        return Err(MtlError::invalid(format!(
            "sin_principal_angle: row counts differ ({} vs {})",
            b1.nrows(),
            b2.nrows()
        )));
    }
    let q1 = orthonormalize(b1, "sin_principal_angle(b1)")?;
    let q2 = orthonormalize(b2, "sin_principal_angle(b2)")?;
    let g = q1.transpose() * q2;
    let f = svd(&g, SvdRank::Full)?;
    // Largest angle <-> smallest of the min(r1, r2) singular values.
    let smin = f.s[f.s.len() - 1].clamp(0.0, 1.0);
    Ok((1.0 - smin * smin).max(0.0).sqrt())
}

/// Best rank-r approximation in Frobenius norm (top-r SVD reconstruction).
pub fn rank_r_truncate(a: &RealMatrix, r: usize) -> Result<RealMatrix> {
    if r == 0 || r > a.nrows().min(a.ncols()) {
        return Err(MtlError::invalid(format!(
            "rank_r_truncate: r={r} out of range for {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(svd(a, SvdRank::Top(r))?.reconstruct())
}

/// Minimum-norm least-squares solution of `a x = b` via SVD pseudoinverse,
/// singular value cutoff `1e-10·σ_max`. Returns the solution and whether the
/// cutoff dropped any direction (rank-deficient system).
pub fn lstsq_min_norm(a: &RealMatrix, b: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let f = svd(a, SvdRank::Full)?;
    let smax = f.s[0];
    let cutoff = 1e-10 * smax;
    let mut dropped = false;
    let utb = f.u.transpose() * b;
    let mut coeff = DVector::zeros(f.s.len());
    for i in 0..f.s.len() {
        if f.s[i] > cutoff && f.s[i] > 0.0 {
            coeff[i] = utb[i] / f.s[i];
        } else {
            dropped = true;
        }
    }
    Ok((&f.v * coeff, dropped))
}
