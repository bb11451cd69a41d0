//! Brute-force reference solvers.
//!
//! These are deliberately naive: the LP oracle enumerates every candidate
//! vertex and the QP oracle enumerates every active set. They share no code
//! with the simplex and active-set implementations they validate, so the test
//! suites can compare the two routes on randomized instances.

use crate::lp::LpProblem;

/// Maximizes an LP by enumerating all basis/bound assignments.
///
/// Only intended for tiny instances (a handful of variables). Requires every
/// variable to have at least one finite bound or to be forced basic; instances
/// without a feasible vertex return `None`. Unboundedness is not detected, so
/// callers must supply bounded instances.
pub fn lp_vertex_enumeration(p: &LpProblem) -> Option<(f64, Vec<f64>)> {
    let n = p.num_vars();
    let m = p.num_rows();
    if m > n {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;

    // Choose the basic set, then park each nonbasic variable at a finite bound.
    for basic in combinations(n, m) {
        let nonbasic: Vec<usize> = (0..n).filter(|j| !basic.contains(j)).collect();
        let mut sides = vec![0u8; nonbasic.len()];
        loop {
            let mut ok = true;
            let mut x = vec![0.0; n];
            for (pos, &j) in nonbasic.iter().enumerate() {
                let v = if sides[pos] == 0 { p.lower[j] } else { p.upper[j] };
                if !v.is_finite() {
                    ok = false;
                    break;
                }
                x[j] = v;
            }
            if ok {
                let mut a = vec![vec![0.0; m]; m];
                let mut b = vec![0.0; m];
                for i in 0..m {
                    for (col, &j) in basic.iter().enumerate() {
                        a[i][col] = p.rows[i][j];
                    }
                    let mut acc = p.rhs[i];
                    for &j in &nonbasic {
                        acc -= p.rows[i][j] * x[j];
                    }
                    b[i] = acc;
                }
                if let Some(xb) = solve_dense(&a, &b) {
                    for (col, &j) in basic.iter().enumerate() {
                        x[j] = xb[col];
                    }
                    if feasible(p, &x) {
                        let val = dot(&p.objective, &x);
                        match &best {
                            Some((bv, _)) if *bv >= val => {}
                            _ => best = Some((val, x.clone())),
                        }
                    }
                }
            }
            // Next bound assignment.
            let mut carry = true;
            for s in sides.iter_mut() {
                if *s == 0 {
                    *s = 1;
                    carry = false;
                    break;
                }
                *s = 0;
            }
            if carry {
                break;
            }
        }
    }
    best
}

fn feasible(p: &LpProblem, x: &[f64]) -> bool {
    let tol = 1e-7;
    for j in 0..x.len() {
        if x[j] < p.lower[j] - tol || x[j] > p.upper[j] + tol {
            return false;
        }
    }
    for (row, &b) in p.rows.iter().zip(&p.rhs) {
        if (dot(row, x) - b).abs() > tol * (1.0 + b.abs()) {
            return false;
        }
    }
    true
}

/// Globally minimizes `1/2 dᵀBd + gᵀd` subject to `cᵀd <= rhs`, `d >= lb`
/// by enumerating every active set and testing the KKT conditions.
///
/// `B` is a row-major symmetric positive-definite matrix. Intended for
/// dimensions small enough that `2^(m+1)` enumerations are trivial.
pub fn qp_active_set_enumeration(
    b: &[Vec<f64>],
    g: &[f64],
    c: &[f64],
    rhs: f64,
    lb: &[f64],
) -> Option<QpReference> {
    let m = g.len();
    let tol = 1e-8;
    let mut best: Option<QpReference> = None;

    for mask in 0u32..(1u32 << (m + 1)) {
        let vol_active = mask & 1 == 1;
        let active: Vec<usize> = (0..m).filter(|i| mask >> (i + 1) & 1 == 1).collect();
        let free: Vec<usize> = (0..m).filter(|i| !active.contains(i)).collect();

        // Equality-constrained KKT system in the free coordinates plus the
        // volume multiplier when its constraint is active.
        let nf = free.len();
        let dim = nf + usize::from(vol_active);
        let mut a = vec![vec![0.0; dim]; dim];
        let mut r = vec![0.0; dim];
        for (p1, &i) in free.iter().enumerate() {
            for (p2, &j) in free.iter().enumerate() {
                a[p1][p2] = b[i][j];
            }
            let mut acc = -g[i];
            for &j in &active {
                acc -= b[i][j] * lb[j];
            }
            r[p1] = acc;
            if vol_active {
                a[p1][nf] = c[i];
            }
        }
        if vol_active {
            for (p2, &j) in free.iter().enumerate() {
                a[nf][p2] = c[j];
            }
            let mut acc = rhs;
            for &j in &active {
                acc -= c[j] * lb[j];
            }
            r[nf] = acc;
        }

        let Some(sol) = solve_dense(&a, &r) else {
            continue;
        };
        let mut d = vec![0.0; m];
        for &j in &active {
            d[j] = lb[j];
        }
        for (p1, &i) in free.iter().enumerate() {
            d[i] = sol[p1];
        }
        let mu = if vol_active { sol[nf] } else { 0.0 };

        // Bound multipliers from stationarity.
        let mut zeta = vec![0.0; m];
        for &j in &active {
            let mut acc = g[j] + mu * c[j];
            for k in 0..m {
                acc += b[j][k] * d[k];
            }
            zeta[j] = acc;
        }

        // KKT screening.
        if mu < -tol || zeta.iter().any(|&z| z < -tol) {
            continue;
        }
        if free.iter().any(|&i| d[i] < lb[i] - tol) {
            continue;
        }
        let cd = dot(c, &d);
        if cd > rhs + tol * (1.0 + rhs.abs()) {
            continue;
        }

        let mut obj = dot(g, &d);
        for i in 0..m {
            for j in 0..m {
                obj += 0.5 * d[i] * b[i][j] * d[j];
            }
        }
        match &best {
            Some(prev) if prev.objective <= obj + 1e-12 => {}
            _ => {
                best = Some(QpReference {
                    direction: d,
                    volume_multiplier: mu,
                    bound_multipliers: zeta,
                    objective: obj,
                });
            }
        }
    }
    best
}

/// KKT point found by [`qp_active_set_enumeration`].
#[derive(Debug, Clone)]
pub struct QpReference {
    pub direction: Vec<f64>,
    pub volume_multiplier: f64,
    pub bound_multipliers: Vec<f64>,
    pub objective: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting; `None` on a singular system.
fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-11 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for k in col..=n {
                        let upd = m[col][k];
                        m[r][k] -= f * upd;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // Advance to the next lexicographic k-subset.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
