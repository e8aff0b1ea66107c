//! The six parameter-matrix estimators compared in the experiments, plus
//! regularization-parameter selection.
//!
//! All fits are pure given `(data, options, seeds)` and single-threaded;
//! the bench harness parallelizes across cells and replicates.

use std::time::Instant;

use nalgebra::DVector;

use crate::datagen::{MultiTaskDataset, TaskData};
use crate::error::{MtlError, Result};
use crate::matops::{self, RealMatrix, SvdRank};
use crate::rng::stream_rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Fixed step from the Lipschitz constant of the smooth part.
    Lipschitz,
    /// Backtracking on the quadratic upper bound.
    Backtracking,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Relative objective change stopping rule: |f_old − f_new| / max(1, |f_old|).
    pub rel_tol: f64,
    pub step_rule: StepRule,
    pub init_seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 5000,
            rel_tol: 1e-8,
            step_rule: StepRule::Lipschitz,
            init_seed: 0,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.rel_tol <= 0.0 {
            return Err(MtlError::invalid("FitOptions: max_iters ≥ 1, rel_tol > 0"));
        }
        Ok(())
    }
}

/// Estimated parameter matrix plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub mhat: RealMatrix,
    pub iterations: usize,
    pub final_objective: f64,
    pub converged: bool,
    pub runtime_ms: f64,
    /// Orthonormal d×r basis for factor-based methods.
    pub subspace: Option<RealMatrix>,
    /// Diagnostic flags (pseudoinverse fallbacks, restarts, ...).
    pub notes: Vec<String>,
}

/// Regularization selection rule for the nuclear-norm estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaRule {
    /// λ = (σ/√T)·√((T + d²/m)/(mT)).
    Theory,
    Fixed(f64),
    CrossValidated { grid: Vec<f64>, holdout_frac: f64 },
}

fn check_dims(m: &RealMatrix, data: &MultiTaskDataset, what: &str) -> Result<()> {
    if m.nrows() != data.d || m.ncols() != data.t {
        return Err(MtlError::invalid(format!(
            "{what}: matrix is {}x{}, dataset wants {}x{}",
            m.nrows(),
            m.ncols(),
            data.d,
            data.t
        )));
    }
    Ok(())
}

/// Mean squared residual over all mT samples.
pub fn smooth_objective(m: &RealMatrix, data: &MultiTaskDataset) -> f64 {
    let mt = (data.m * data.t) as f64;
    data.tasks
        .iter()
        .enumerate()
        .map(|(t, task)| (&task.x * m.column(t) - &task.y).norm_squared())
        .sum::<f64>()
        / mt
}

/// Gradient of [`smooth_objective`]: column t is (2/mT)·X_tᵀ(X_t m_t − y_t).
pub fn smooth_gradient(m: &RealMatrix, data: &MultiTaskDataset) -> RealMatrix {
    let mt = (data.m * data.t) as f64;
    let mut g = RealMatrix::zeros(data.d, data.t);
    for (t, task) in data.tasks.iter().enumerate() {
        let resid = &task.x * m.column(t) - &task.y;
        g.set_column(t, &(task.x.transpose() * resid * (2.0 / mt)));
    }
    g
}

/// (1/mT)·Σ(y − ⟨x, m_t⟩)² + λ‖M‖_*.
pub fn objective_nuclear(m: &RealMatrix, data: &MultiTaskDataset, lambda: f64) -> Result<f64> {
    check_dims(m, data, "objective_nuclear")?;
    let nuc = if lambda > 0.0 { matops::nuclear_norm(m) } else { 0.0 };
    Ok(smooth_objective(m, data) + lambda * nuc)
}

/// The experiment-protocol regularization formula.
pub fn lambda_theory(d: usize, m: usize, t: usize, sigma: f64) -> f64 {
    let (df, mf, tf) = (d as f64, m as f64, t as f64);
    sigma / tf.sqrt() * ((tf + df * df / mf) / (mf * tf)).sqrt()
}

fn lipschitz_constant(data: &MultiTaskDataset) -> f64 {
    let mt = (data.m * data.t) as f64;
    let max_gram = data
        .tasks
        .iter()
        .map(|task| {
            let s = matops::spectral_norm(&task.x);
            s * s
        })
        .fold(0.0, f64::max);
    2.0 / mt * max_gram
}

/// Accelerated proximal gradient (FISTA) for the nuclear-norm regularized
/// objective, with a function-value restart so the recorded objective
/// sequence is nonincreasing. Starts from M = 0; the task-diversity ball
/// constraint is not enforced.
pub fn fit_nuclear_fista(
    data: &MultiTaskDataset,
    lambda: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    if lambda < 0.0 {
        return Err(MtlError::invalid("fit_nuclear_fista: lambda must be ≥ 0"));
    }
    let start = Instant::now();
    let lip = lipschitz_constant(data);
    if lip <= 0.0 {
        return Err(MtlError::invalid("fit_nuclear_fista: zero design"));
    }
    let mut step = 1.0 / lip;

    let prox = |y: &RealMatrix, step: f64| -> Result<RealMatrix> {
        let g = smooth_gradient(y, data);
        if lambda > 0.0 {
            matops::svt(&(y - g * step), lambda * step)
        } else {
            Ok(y - g * step)
        }
    };

    let mut m = RealMatrix::zeros(data.d, data.t);
    let mut y = m.clone();
    let mut f_m = objective_nuclear(&m, data, lambda)?;
    let mut theta = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;
    let mut restarts = 0usize;

    for k in 0..opts.max_iters {
        iterations = k + 1;
        if opts.step_rule == StepRule::Backtracking {
            // Grow the step back a little each iteration, then backtrack.
            step *= 1.5;
            loop {
                let cand = prox(&y, step)?;
                let fy = smooth_objective(&y, data);
                let gy = smooth_gradient(&y, data);
                let diff = &cand - &y;
                let quad = fy + gy.dot(&diff) + diff.norm_squared() / (2.0 * step);
                if smooth_objective(&cand, data) <= quad + 1e-15 || step < 1e-16 {
                    break;
                }
                step *= 0.5;
            }
        }
        let mut cand = prox(&y, step)?;
        let mut f_cand = objective_nuclear(&cand, data, lambda)?;
        if !f_cand.is_finite() {
            return Err(MtlError::Divergence(
                "fit_nuclear_fista: non-finite objective".into(),
            ));
        }
        if f_cand > f_m {
            // Restart: drop momentum and take a plain proximal step from the
            // last accepted point, which cannot increase the objective.
            cand = prox(&m, step)?;
            f_cand = objective_nuclear(&cand, data, lambda)?;
            theta = 1.0;
            restarts += 1;
        }
        let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_new;
        y = &cand + (&cand - &m) * momentum;
        theta = theta_new;

        let rel = (f_m - f_cand).abs() / f_m.abs().max(1.0);
        m = cand;
        f_m = f_cand;
        if rel < opts.rel_tol {
            converged = true;
            break;
        }
    }

    let mut notes = Vec::new();
    if restarts > 0 {
        notes.push(format!("fista: {restarts} function-value restarts"));
    }
    Ok(FitResult {
        mhat: m,
        iterations,
        final_objective: f_m,
        converged,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        subspace: None,
        notes,
    })
}

/// Frank-Wolfe on the constrained problem min f(M) s.t. ‖M‖_* ≤ radius,
/// with the classic 2/(k+2) step and the top singular pair of the gradient
/// as linear minimization oracle. Every iterate is feasible.
pub fn fit_nuclear_frankwolfe(
    data: &MultiTaskDataset,
    radius: f64,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    if radius <= 0.0 {
        return Err(MtlError::invalid("fit_nuclear_frankwolfe: radius must be > 0"));
    }
    let start = Instant::now();
    let mut m = RealMatrix::zeros(data.d, data.t);
    let f0 = smooth_objective(&m, data);
    let mut f = f0;
    let mut converged = false;
    let mut iterations = 0;

    for k in 0..opts.max_iters {
        iterations = k + 1;
        let g = smooth_gradient(&m, data);
        let (u, s_top, v) = matops::top_singular_triplet(&g);
        let vertex = (&u * v.transpose()) * (-radius);
        // duality gap ⟨M − S, ∇f⟩ = ⟨M, ∇f⟩ + radius·σ₁(∇f)
        let gap = m.dot(&g) + radius * s_top;
        if gap < opts.rel_tol * f0.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        let gamma = 2.0 / (k as f64 + 2.0);
        m = &m * (1.0 - gamma) + vertex * gamma;
        f = smooth_objective(&m, data);
        if !f.is_finite() {
            return Err(MtlError::Divergence(
                "fit_nuclear_frankwolfe: non-finite objective".into(),
            ));
        }
    }

    Ok(FitResult {
        mhat: m,
        iterations,
        final_objective: f,
        converged,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        subspace: None,
        notes: Vec::new(),
    })
}

/// Joint gradient descent on the factors of M = UVᵀ with backtracking line
/// search (halving from step 1.0, Armijo constant 1e-4). Init entries are
/// i.i.d. N(0, 1/d) drawn from `opts.init_seed`.
pub fn fit_burer_monteiro(
    data: &MultiTaskDataset,
    r: usize,
    opts: &FitOptions,
) -> Result<FitResult> {
    opts.validate()?;
    if r == 0 || r > data.d.min(data.t) {
        return Err(MtlError::invalid(format!(
            "fit_burer_monteiro: r={r} out of range"
        )));
    }
    let start = Instant::now();
    let scale = (1.0 / data.d as f64).sqrt();
    let mut rng = stream_rng(opts.init_seed, "bm-init", 0);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut u = RealMatrix::from_fn(data.d, r, |_, _| normal() * scale);
    let mut v = RealMatrix::from_fn(data.t, r, |_, _| normal() * scale);

    let obj = |u: &RealMatrix, v: &RealMatrix| smooth_objective(&(u * v.transpose()), data);
    let mut f = obj(&u, &v);
    let mut converged = false;
    let mut iterations = 0;
    const ARMIJO: f64 = 1e-4;

    for k in 0..opts.max_iters {
        iterations = k + 1;
        let m = &u * v.transpose();
        let g_m = smooth_gradient(&m, data);
        let g_u = &g_m * &v;
        let g_v = g_m.transpose() * &u;
        let grad_sq = g_u.norm_squared() + g_v.norm_squared();
        if grad_sq == 0.0 {
            converged = true;
            break;
        }
        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1e-16 {
            let u_new = &u - &g_u * step;
            let v_new = &v - &g_v * step;
            let f_new = obj(&u_new, &v_new);
            if !f_new.is_finite() {
                return Err(MtlError::Divergence(
                    "fit_burer_monteiro: non-finite objective".into(),
                ));
            }
            if f_new <= f - ARMIJO * step * grad_sq {
                let rel = (f - f_new).abs() / f.abs().max(1.0);
                u = u_new;
                v = v_new;
                f = f_new;
                accepted = true;
                if rel < opts.rel_tol {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            converged = converged || !accepted;
            break;
        }
    }

    let subspace = matops::svd(&u, SvdRank::Full)
        .ok()
        .map(|f| f.u.columns(0, r.min(f.u.ncols())).into_owned());
    Ok(FitResult {
        mhat: &u * v.transpose(),
        iterations,
        final_objective: f,
        converged,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        subspace,
        notes: Vec::new(),
    })
}

/// Symmetric d×d moment matrix (1/(m·|S|))·Σ y²·x xᵀ over the given tasks.
pub fn moment_matrix(tasks: &[TaskData]) -> Result<RealMatrix> {
    if tasks.is_empty() {
        return Err(MtlError::invalid("moment_matrix: empty task set"));
    }
    let d = tasks[0].x.ncols();
    let m = tasks[0].x.nrows();
    let mut acc = RealMatrix::zeros(d, d);
    for task in tasks {
        for i in 0..task.x.nrows() {
            let xi = task.x.row(i).transpose();
            let w = task.y[i] * task.y[i];
            acc.ger(w, &xi, &xi, 1.0);
        }
    }
    acc /= (m * tasks.len()) as f64;
    // exact symmetry despite floating-point accumulation order
    let sym = (&acc + acc.transpose()) * 0.5;
    Ok(sym)
}

/// Top-r eigenvectors of a symmetric PSD matrix, ordered by eigenvalue.
/// Also returns the r-th eigenvalue for rank-deficiency checks.
fn top_eigvecs(a: &RealMatrix, r: usize) -> Result<(RealMatrix, f64)> {
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut b = RealMatrix::zeros(a.nrows(), r);
    for (dst, &src) in order.iter().take(r).enumerate() {
        b.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((b, eig.eigenvalues[order[r - 1]]))
}

/// Per-task least squares of y on the projected features X·B; returns the
/// r×|tasks| coefficients and whether any system needed the pseudoinverse.
fn projected_lstsq(tasks: &[TaskData], b: &RealMatrix) -> Result<(RealMatrix, bool)> {
    let r = b.ncols();
    let mut alpha = RealMatrix::zeros(r, tasks.len());
    let mut fallback = false;
    for (t, task) in tasks.iter().enumerate() {
        let z = &task.x * b;
        let (sol, dropped) = matops::lstsq_min_norm(&z, &task.y)?;
        fallback |= dropped;
        alpha.set_column(t, &sol);
    }
    Ok((alpha, fallback))
}

/// Cross-fitted Method of Moments: the subspace for each half of the tasks
/// is estimated from the moment matrix of the other half, then coefficients
/// are fitted by per-task least squares in the projected r-space.
pub fn fit_mom(data: &MultiTaskDataset, r: usize) -> Result<FitResult> {
    if data.t < 2 {
        return Err(MtlError::invalid("fit_mom: needs T ≥ 2"));
    }
    if r == 0 || r > data.d {
        return Err(MtlError::invalid(format!("fit_mom: r={r} out of range")));
    }
    let start = Instant::now();
    let split = data.t.div_ceil(2); // ⌈T/2⌉
    let (first, second) = data.tasks.split_at(split);

    let (b1, _) = top_eigvecs(&moment_matrix(second)?, r)?;
    let (b2, _) = top_eigvecs(&moment_matrix(first)?, r)?;
    let (alpha1, fb1) = projected_lstsq(first, &b1)?;
    let (alpha2, fb2) = projected_lstsq(second, &b2)?;

    let mut mhat = RealMatrix::zeros(data.d, data.t);
    let m1 = &b1 * alpha1;
    let m2 = &b2 * alpha2;
    for t in 0..split {
        mhat.set_column(t, &m1.column(t));
    }
    for t in split..data.t {
        mhat.set_column(t, &m2.column(t - split));
    }

    let mut notes = Vec::new();
    if fb1 || fb2 {
        notes.push("mom: pseudoinverse fallback in projected least squares".into());
    }
    let final_objective = smooth_objective(&mhat, data);
    Ok(FitResult {
        mhat,
        iterations: 1,
        final_objective,
        converged: true,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        subspace: Some(b1),
        notes,
    })
}

/// Block least squares: alternate per-task coefficients given B and a global
/// d·r least squares for B given the coefficients, re-orthonormalizing B
/// after each update. B is initialized from the Method of Moments subspace.
pub fn fit_altmin(data: &MultiTaskDataset, r: usize, opts: &FitOptions) -> Result<FitResult> {
    fit_altmin_with_init(data, r, opts, None)
}

/// [`fit_altmin`] with an explicit orthonormal initial subspace.
pub fn fit_altmin_with_init(
    data: &MultiTaskDataset,
    r: usize,
    opts: &FitOptions,
    init_b: Option<&RealMatrix>,
) -> Result<FitResult> {
    opts.validate()?;
    if r == 0 || r > data.d.min(data.t) {
        return Err(MtlError::invalid(format!("fit_altmin: r={r} out of range")));
    }
    let start = Instant::now();
    let mut notes = Vec::new();

    let mut b = match init_b {
        Some(b0) => b0.clone(),
        None => {
            let moment = moment_matrix(&data.tasks)?;
            let (b0, eig_r) = top_eigvecs(&moment, r)?;
            let eig_max = matops::spectral_norm(&moment);
            if eig_r <= 1e-12 * eig_max.max(f64::MIN_POSITIVE) {
                // Moment matrix rank-deficient: random orthonormal fallback.
                notes.push("altmin: moment init rank-deficient, random fallback".into());
                let mut rng = stream_rng(opts.init_seed, "altmin-init", 0);
                let g = RealMatrix::from_fn(data.d, r, |_, _| StandardNormal.sample(&mut rng));
                matops::svd(&g, SvdRank::Top(r))?.u
            } else {
                b0
            }
        }
    };

    let xtx: Vec<RealMatrix> = data
        .tasks
        .iter()
        .map(|task| task.x.transpose() * &task.x)
        .collect();
    let xty: Vec<DVector<f64>> = data
        .tasks
        .iter()
        .map(|task| task.x.transpose() * &task.y)
        .collect();

    let mut f = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut fallback = false;
    let dr = data.d * r;

    for k in 0..opts.max_iters {
        iterations = k + 1;

        // (a) per-task r×r normal equations for the coefficients.
        let mut alpha = RealMatrix::zeros(r, data.t);
        for t in 0..data.t {
            let gram = b.transpose() * &xtx[t] * &b;
            let rhs = b.transpose() * &xty[t];
            match gram.clone().cholesky() {
                Some(ch) => alpha.set_column(t, &ch.solve(&rhs)),
                None => {
                    fallback = true;
                    let z = &data.tasks[t].x * &b;
                    let (sol, _) = matops::lstsq_min_norm(&z, &data.tasks[t].y)?;
                    alpha.set_column(t, &sol);
                }
            }
        }

        // (b) global least squares for B given the coefficients:
        // gram = Σ_t (α_t α_tᵀ) ⊗ (X_tᵀ X_t) acting on vec(B), column-major.
        let mut gram = RealMatrix::zeros(dr, dr);
        let mut rhs = DVector::zeros(dr);
        for t in 0..data.t {
            let a = alpha.column(t);
            for p in 0..r {
                for q in 0..r {
                    let w = a[p] * a[q];
                    if w != 0.0 {
                        let mut block = gram.view_mut((p * data.d, q * data.d), (data.d, data.d));
                        block += &(&xtx[t] * w);
                    }
                }
            }
            for p in 0..r {
                let mut seg = rhs.rows_mut(p * data.d, data.d);
                seg.axpy(a[p], &xty[t], 1.0);
            }
        }
        let vec_b = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => {
                fallback = true;
                let (sol, _) = matops::lstsq_min_norm(&gram, &rhs)?;
                sol
            }
        };
        let b_raw = RealMatrix::from_column_slice(data.d, r, vec_b.as_slice());

        // Objective measured before re-orthonormalization: block coordinate
        // descent makes this sequence nonincreasing.
        let m_raw = &b_raw * &alpha;
        let f_new = smooth_objective(&m_raw, data);
        if !f_new.is_finite() {
            return Err(MtlError::Divergence("fit_altmin: non-finite objective".into()));
        }

        b = match matops::svd(&b_raw, SvdRank::Full) {
            Ok(fac) => fac.u,
            Err(_) => b,
        };

        let rel = if f.is_finite() {
            (f - f_new).abs() / f.abs().max(1.0)
        } else {
            f64::INFINITY
        };
        f = f_new;
        if rel < opts.rel_tol {
            converged = true;
            break;
        }
    }

    // Final coefficients in the orthonormalized basis.
    let (alpha, fb) = projected_lstsq(&data.tasks, &b)?;
    fallback |= fb;
    let mhat = &b * alpha;
    let final_objective = smooth_objective(&mhat, data);
    if fallback {
        notes.push("altmin: pseudoinverse fallback in normal equations".into());
    }
    Ok(FitResult {
        mhat,
        iterations,
        final_objective,
        converged,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        subspace: Some(b),
        notes,
    })
}

/// Independent minimum-norm least squares per task (pseudoinverse when m < d).
pub fn fit_single_task(data: &MultiTaskDataset) -> Result<FitResult> {
    let start = Instant::now();
    let mut mhat = RealMatrix::zeros(data.d, data.t);
    let mut fallback = false;
    for (t, task) in data.tasks.iter().enumerate() {
        let (sol, dropped) = matops::lstsq_min_norm(&task.x, &task.y)?;
        fallback |= dropped;
        mhat.set_column(t, &sol);
    }
    let final_objective = smooth_objective(&mhat, data);
    let mut notes = Vec::new();
    if fallback {
        notes.push("single: minimum-norm pseudoinverse used".into());
    }
    Ok(FitResult {
        mhat,
        iterations: 1,
        final_objective,
        converged: true,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        subspace: None,
        notes,
    })
}

/// Per-task least squares on the projected features X·B, where B is the
/// ground-truth subspace.
pub fn fit_oracle(data: &MultiTaskDataset, b: &RealMatrix) -> Result<FitResult> {
    if b.nrows() != data.d {
        return Err(MtlError::invalid("fit_oracle: subspace row count mismatch"));
    }
    let start = Instant::now();
    let (alpha, fallback) = projected_lstsq(&data.tasks, b)?;
    let mhat = b * alpha;
    let final_objective = smooth_objective(&mhat, data);
    let mut notes = Vec::new();
    if fallback {
        notes.push("oracle: pseudoinverse fallback".into());
    }
    Ok(FitResult {
        mhat,
        iterations: 1,
        final_objective,
        converged: true,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        subspace: Some(b.clone()),
        notes,
    })
}

/// Grid-search cross-validation for λ: fit on the first ⌈(1−frac)·m⌉ samples
/// of each task, score mean squared error on the held-out remainder, return
/// the grid value with minimal validation error (ties toward larger λ).
pub fn select_lambda_cv(
    data: &MultiTaskDataset,
    rule: &LambdaRule,
    opts: &FitOptions,
) -> Result<f64> {
    let (grid, frac) = match rule {
        LambdaRule::CrossValidated { grid, holdout_frac } => (grid, *holdout_frac),
        _ => {
            return Err(MtlError::invalid(
                "select_lambda_cv: rule must be cross_validated",
            ))
        }
    };
    if grid.is_empty() {
        return Err(MtlError::invalid("select_lambda_cv: empty grid"));
    }
    if !(0.0 < frac && frac < 1.0) {
        return Err(MtlError::invalid("select_lambda_cv: holdout_frac in (0,1)"));
    }
    let train_m = ((1.0 - frac) * data.m as f64).ceil() as usize;
    if train_m == 0 || train_m >= data.m {
        return Err(MtlError::invalid(format!(
            "select_lambda_cv: holdout size {} with m={}",
            data.m - train_m.min(data.m),
            data.m
        )));
    }

    let train_tasks: Vec<TaskData> = data
        .tasks
        .iter()
        .map(|task| TaskData {
            x: task.x.rows(0, train_m).into_owned(),
            y: task.y.rows(0, train_m).into_owned(),
        })
        .collect();
    let train = MultiTaskDataset {
        tasks: train_tasks,
        d: data.d,
        m: train_m,
        t: data.t,
        sigma: data.sigma,
        feature_dist: data.feature_dist,
        seed: data.seed,
    };

    let mut grid: Vec<f64> = grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let mut best = (f64::INFINITY, grid[0]);
    for &lambda in &grid {
        if lambda <= 0.0 {
            return Err(MtlError::invalid("select_lambda_cv: grid values must be > 0"));
        }
        let fit = fit_nuclear_fista(&train, lambda, opts)?;
        let mut err = 0.0;
        let mut n = 0usize;
        for (t, task) in data.tasks.iter().enumerate() {
            for i in train_m..data.m {
                let pred = task.x.row(i).transpose().dot(&fit.mhat.column(t));
                err += (task.y[i] - pred) * (task.y[i] - pred);
                n += 1;
            }
        }
        err /= n as f64;
        // Ascending grid + non-strict comparison: ties go to the larger λ.
        if err <= best.0 {
            best = (err, lambda);
        }
    }
    Ok(best.1)
}
