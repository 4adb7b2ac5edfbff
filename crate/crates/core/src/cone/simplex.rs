//! Dense primal simplex for the l1 conic fit
//!
//! ```text
//! minimize   sum_i (s+_i + s-_i)
//! subject to sum_k lambda_k g_k + s+ - s- = t,   lambda, s+, s- >= 0
//! ```
//!
//! whose dual is `max <t, y>` subject to `<g_k, y> <= 0` and `|y_i| <= 1`.
//! The slack basis (after flipping rows with `t_i < 0`) is feasible, so no
//! phase one is needed. Entering columns follow Bland's rule; the leaving
//! row comes from a Harris ratio test, which favours large pivots among
//! near-ties.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const REDUCED_COST_EPS: f64 = 1e-11;
const PIVOT_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct L1Fit {
    /// Nonnegative generator coefficients.
    pub coeffs: Vec<f64>,
    /// Optimal dual vector, `|y_i| <= 1`.
    pub dual: Vec<f64>,
    /// Optimal objective, the l1 distance from the target to the cone.
    pub objective: f64,
}

pub(crate) fn l1_fit(generators: &[Vec<f64>], target: &[f64]) -> Result<L1Fit> {
    let d = target.len();
    let k = generators.len();
    if generators.iter().any(|g| g.len() != d) {
        return Err(Error::Dimension(format!("generators must have length {d}")));
    }
    let ncols = k + 2 * d;
    let stride = ncols + 1;
    let mut tab = vec![0.0; d * stride];
    let mut basis = vec![0usize; d];

    for i in 0..d {
        let sign = if target[i] < 0.0 { -1.0 } else { 1.0 };
        let row = &mut tab[i * stride..(i + 1) * stride];
        for (c, g) in generators.iter().enumerate() {
            row[c] = sign * g[i];
        }
        row[k + i] = sign;
        row[k + d + i] = -sign;
        row[ncols] = sign * target[i];
        basis[i] = if sign > 0.0 { k + i } else { k + d + i };
    }

    let cost = |c: usize| if c < k { 0.0 } else { 1.0 };
    // Reduced costs r_c = c_c - sum_i c_B(i) T_ic; all basic costs are 1.
    let mut reduced: Vec<f64> = (0..ncols)
        .map(|c| cost(c) - (0..d).map(|i| tab[i * stride + c]).sum::<f64>())
        .collect();

    let max_pivots = 50 * (d + ncols) + 1000;
    let mut pivots = 0usize;
    let mut stalls = 0usize;
    while let Some(enter) = (0..ncols).find(|&c| reduced[c] < -REDUCED_COST_EPS) {
        let Some(pr) = harris_row(&tab, stride, d, ncols, enter) else {
            // An improving column without a blocking row is round-off: the
            // objective is bounded below by zero.
            reduced[enter] = 0.0;
            stalls += 1;
            if stalls > ncols {
                return Err(Error::Numerical("no blocking row for an improving column".into()));
            }
            continue;
        };
        pivot(&mut tab, stride, d, pr, enter, &mut reduced);
        basis[pr] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::IterationLimit(max_pivots));
        }
    }

    let mut coeffs = vec![0.0; k];
    for i in 0..d {
        if basis[i] < k {
            coeffs[basis[i]] = tab[i * stride + ncols].max(0.0);
        }
    }
    let dual = refactored_dual(generators, target, &basis)
        .unwrap_or_else(|| (0..d).map(|i| (1.0 - reduced[k + i]).clamp(-1.0, 1.0)).collect());
    let objective = (0..d)
        .filter(|&i| basis[i] >= k)
        .map(|i| tab[i * stride + ncols].max(0.0))
        .sum();
    Ok(L1Fit { coeffs, dual, objective })
}

/// Dual `y` of the final basis from a fresh LU solve of `B^T y' = c_B` on the
/// original columns, free of the round-off accumulated in the tableau.
fn refactored_dual(generators: &[Vec<f64>], target: &[f64], basis: &[usize]) -> Option<Vec<f64>> {
    let d = target.len();
    let k = generators.len();
    let sign: Vec<f64> = target.iter().map(|&t| if t < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut b = DMatrix::zeros(d, d);
    let mut cost = DVector::zeros(d);
    for (r, &c) in basis.iter().enumerate() {
        if c < k {
            for i in 0..d {
                b[(i, r)] = sign[i] * generators[c][i];
            }
        } else if c < k + d {
            b[(c - k, r)] = sign[c - k];
            cost[r] = 1.0;
        } else {
            b[(c - k - d, r)] = -sign[c - k - d];
            cost[r] = 1.0;
        }
    }
    let y = b.transpose().lu().solve(&cost)?;
    if y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((0..d).map(|i| (sign[i] * y[i]).clamp(-1.0, 1.0)).collect())
}

/// Two-pass Harris ratio test: the largest pivot among the rows whose ratio
/// is within the feasibility tolerance of the minimum.
fn harris_row(tab: &[f64], stride: usize, rows: usize, rhs: usize, enter: usize) -> Option<usize> {
    let bound = (0..rows)
        .filter(|&i| tab[i * stride + enter] > PIVOT_EPS)
        .map(|i| (tab[i * stride + rhs].max(0.0) + FEAS_EPS) / tab[i * stride + enter])
        .fold(f64::INFINITY, f64::min);
    if !bound.is_finite() {
        return None;
    }
    (0..rows)
        .filter(|&i| {
            let a = tab[i * stride + enter];
            a > PIVOT_EPS && tab[i * stride + rhs].max(0.0) / a <= bound
        })
        .max_by(|&i, &j| tab[i * stride + enter].total_cmp(&tab[j * stride + enter]))
}

fn pivot(tab: &mut [f64], stride: usize, rows: usize, pr: usize, pc: usize, reduced: &mut [f64]) {
    let inv = 1.0 / tab[pr * stride + pc];
    for v in &mut tab[pr * stride..(pr + 1) * stride] {
        *v *= inv;
    }
    tab[pr * stride + pc] = 1.0;
    let pivot_row: Vec<f64> = tab[pr * stride..(pr + 1) * stride].to_vec();
    for i in 0..rows {
        if i == pr {
            continue;
        }
        let f = tab[i * stride + pc];
        if f != 0.0 {
            let row = &mut tab[i * stride..(i + 1) * stride];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[pc] = 0.0;
        }
    }
    let f = reduced[pc];
    if f != 0.0 {
        for (r, p) in reduced.iter_mut().zip(&pivot_row) {
            *r -= f * p;
        }
        reduced[pc] = 0.0;
    }
}
