//! Search-direction subproblem.
//!
//! Minimizes `1/2 dᵀBd + gᵀd` over `cᵀd <= rhs`, `d >= lb` for a symmetric
//! positive-definite `B` with a primal active-set method. The feasible set has
//! one general inequality plus simple bounds, so every equality-constrained
//! subproblem reduces to Cholesky solves on the free block of `B`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("quadratic term is not positive definite")]
    NotPositiveDefinite,
    #[error("no feasible point for the bound/volume system")]
    Infeasible,
    #[error("active-set iteration limit exceeded")]
    IterationLimit,
}

/// Optimum of the subproblem with its Karush-Kuhn-Tucker multipliers:
/// `B d + g + mu c - zeta = 0`, `mu >= 0` on the volume inequality and
/// `zeta >= 0` on the lower bounds.
#[derive(Debug, Clone)]
pub struct QpResult {
    pub direction: Vec<f64>,
    pub volume_multiplier: f64,
    pub bound_multipliers: Vec<f64>,
    pub objective: f64,
}

const MULTIPLIER_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-12;

/// Solves the subproblem to its unique minimizer.
///
/// Ties in the blocking-constraint selection break toward the lowest bound
/// index, with the volume constraint ordered last, so the path of working
/// sets is deterministic.
pub fn solve_qp(
    b: &DMatrix<f64>,
    g: &[f64],
    c: &[f64],
    rhs: f64,
    lb: &[f64],
) -> Result<QpResult, QpError> {
    let m = g.len();
    if b.nrows() != m || b.ncols() != m || c.len() != m || lb.len() != m {
        return Err(QpError::Dimension(format!(
            "B is {}x{}, |g|={}, |c|={}, |lb|={}",
            b.nrows(),
            b.ncols(),
            m,
            c.len(),
            lb.len()
        )));
    }
    if lb.iter().any(|v| !v.is_finite()) {
        return Err(QpError::Dimension("bounds must be finite".into()));
    }

    let g = DVector::from_column_slice(g);
    let c_vec = DVector::from_column_slice(c);
    let lb = DVector::from_column_slice(lb);

    // Feasible start: the origin if admissible, otherwise the bound corner.
    let mut d: DVector<f64> = DVector::zeros(m);
    for i in 0..m {
        d[i] = d[i].max(lb[i]);
    }
    if c_vec.dot(&d) > rhs + 1e-12 * (1.0 + rhs.abs()) {
        d = lb.clone();
        if c_vec.dot(&d) > rhs + 1e-12 * (1.0 + rhs.abs()) {
            return Err(QpError::Infeasible);
        }
    }

    let scale = 1.0 + lb.amax();
    let mut active = vec![false; m];
    for i in 0..m {
        active[i] = (d[i] - lb[i]).abs() <= 1e-14 * scale;
    }
    let mut vol_active = (c_vec.dot(&d) - rhs).abs() <= 1e-12 * (1.0 + rhs.abs());

    let max_iter = 50 * (m + 2);
    for _ in 0..max_iter {
        let free: Vec<usize> = (0..m).filter(|&i| !active[i]).collect();
        let (target, mu) = solve_equality_qp(b, &g, &c_vec, rhs, &lb, &active, &free, vol_active)?;

        let step = &target - &d;
        let step_norm = step.amax();
        if step_norm <= 1e-12 * (1.0 + d.amax()) {
            // At the minimizer of the current working set; check multipliers.
            let grad = b * &d + &g + &c_vec * mu;
            let mut worst: Option<(f64, usize)> = None; // (multiplier, constraint id)
            for i in 0..m {
                if active[i] && grad[i] < -MULTIPLIER_TOL {
                    match worst {
                        Some((v, _)) if v <= grad[i] => {}
                        _ => worst = Some((grad[i], i)),
                    }
                }
            }
            if vol_active && mu < -MULTIPLIER_TOL {
                match worst {
                    Some((v, _)) if v <= mu => {}
                    _ => worst = Some((mu, m)),
                }
            }
            match worst {
                None => {
                    let mut zeta = vec![0.0; m];
                    for i in 0..m {
                        if active[i] {
                            zeta[i] = grad[i].max(0.0);
                        }
                    }
                    let mu = if vol_active { mu.max(0.0) } else { 0.0 };
                    let objective = 0.5 * (b * &d).dot(&d) + g.dot(&d);
                    return Ok(QpResult {
                        direction: d.iter().copied().collect(),
                        volume_multiplier: mu,
                        bound_multipliers: zeta,
                        objective,
                    });
                }
                Some((_, i)) if i == m => vol_active = false,
                Some((_, i)) => active[i] = false,
            }
            continue;
        }

        // Longest admissible move toward the working-set minimizer, adding
        // the first blocking constraint encountered at the smallest ratio.
        let mut alpha = 1.0;
        let mut blocking: Option<usize> = None; // bound index, `m` for volume
        for i in 0..m {
            if !active[i] && step[i] < -PIVOT_TOL * scale {
                let ratio = (lb[i] - d[i]) / step[i];
                if ratio < alpha - 1e-12 {
                    alpha = ratio.max(0.0);
                    blocking = Some(i);
                }
            }
        }
        if !vol_active {
            let cd = c_vec.dot(&step);
            if cd > PIVOT_TOL * (1.0 + rhs.abs()) {
                let ratio = (rhs - c_vec.dot(&d)) / cd;
                if ratio < alpha - 1e-12 {
                    alpha = ratio.max(0.0);
                    blocking = Some(m);
                }
            }
        }

        d += alpha * &step;
        match blocking {
            Some(i) if i == m => {
                vol_active = true;
            }
            Some(i) => {
                d[i] = lb[i];
                active[i] = true;
            }
            None => {}
        }
    }
    Err(QpError::IterationLimit)
}

/// Minimizer of the quadratic on the affine set `d_i = lb_i (i active)` plus
/// `cᵀd = rhs` when the volume constraint is in the working set. Returns the
/// point and the volume multiplier (zero when inactive).
#[allow(clippy::too_many_arguments)]
fn solve_equality_qp(
    b: &DMatrix<f64>,
    g: &DVector<f64>,
    c: &DVector<f64>,
    rhs: f64,
    lb: &DVector<f64>,
    active: &[bool],
    free: &[usize],
    vol_active: bool,
) -> Result<(DVector<f64>, f64), QpError> {
    let m = g.len();
    let nf = free.len();
    let mut d = DVector::zeros(m);
    let mut fixed_volume = 0.0;
    for i in 0..m {
        if active[i] {
            d[i] = lb[i];
            fixed_volume += c[i] * lb[i];
        }
    }
    if nf == 0 {
        return Ok((d, 0.0));
    }

    let mut bff = DMatrix::zeros(nf, nf);
    let mut rhs_f = DVector::zeros(nf);
    let mut c_f = DVector::zeros(nf);
    for (p, &i) in free.iter().enumerate() {
        for (q, &j) in free.iter().enumerate() {
            bff[(p, q)] = b[(i, j)];
        }
        let mut acc = -g[i];
        for j in 0..m {
            if active[j] {
                acc -= b[(i, j)] * lb[j];
            }
        }
        rhs_f[p] = acc;
        c_f[p] = c[i];
    }

    let chol = cholesky(&bff)?;
    let z1 = chol_solve(&chol, &rhs_f);
    if !vol_active {
        for (p, &i) in free.iter().enumerate() {
            d[i] = z1[p];
        }
        return Ok((d, 0.0));
    }

    let z2 = chol_solve(&chol, &c_f);
    let denom = c_f.dot(&z2);
    if denom.abs() < PIVOT_TOL {
        // The volume normal is orthogonal to the free block; the equality
        // cannot be enforced through the free variables.
        for (p, &i) in free.iter().enumerate() {
            d[i] = z1[p];
        }
        return Ok((d, 0.0));
    }
    let mu = (c_f.dot(&z1) - (rhs - fixed_volume)) / denom;
    for (p, &i) in free.iter().enumerate() {
        d[i] = z1[p] - mu * z2[p];
    }
    Ok((d, mu))
}

/// Whether the subproblem factorization would accept `a` as positive
/// definite; the curvature-model update uses this to pre-screen candidates.
pub(crate) fn is_numerically_pd(a: &DMatrix<f64>) -> bool {
    cholesky(a).is_ok()
}

/// Lower-triangular Cholesky factor; fails when a pivot falls below the
/// tolerance, which is how a non-positive-definite `B` surfaces.
fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>, QpError> {
    let n = a.nrows();
    let scale = a.diagonal().amax().max(1.0);
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= PIVOT_TOL * scale || !sum.is_finite() {
                    return Err(QpError::NotPositiveDefinite);
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

fn chol_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    x
}
