//! Modified Szász-Mirakjan operator
//! `M_n(f; x) = exp(-n phi(x)) sum_k (n phi(x))^k / k! f(phi^{-1}(k / n))`
//! with `phi(x) = (1 - x) / v`, and a numerical probe of the exponential
//! family `exp(-n (1 - x) / v)` used in the density argument.

use serde::{Deserialize, Serialize};

use crate::grid::GridFunction;
use crate::{Error, Result};

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirakjanEval {
    pub n: usize,
    pub v: f64,
    pub tail_tol: f64,
}

impl MirakjanEval {
    pub fn new(n: usize, v: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("order n must be at least 1".into()));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::OutOfRange(format!("velocity {v} must be positive")));
        }
        Ok(Self { n, v, tail_tol: DEFAULT_TAIL_TOL })
    }

    pub fn phi(&self, x: f64) -> f64 {
        ((1.0 - x) / self.v).max(0.0)
    }

    /// Inverse of `phi` on `[0, 1/v]`; larger arguments map to `x = 0`.
    pub fn phi_inv(&self, y: f64) -> f64 {
        (1.0 - self.v * y).max(0.0)
    }

    /// `n phi(x) + 10 sqrt(n phi(x)) + 20`.
    pub fn cutoff(&self, x: f64) -> usize {
        let lambda = self.n as f64 * self.phi(x);
        (lambda + 10.0 * lambda.sqrt() + 20.0).ceil() as usize
    }
}

/// How the operator samples its argument at the nodes `k / n`.
pub enum Sampler<'a> {
    /// `f(phi^{-1}(k / n))` with the clamp.
    Plain(&'a dyn Fn(f64) -> f64),
    /// `psi(k / n)` for `f = psi o phi`, bypassing the inverse.
    Warped(&'a dyn Fn(f64) -> f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirakjanValue {
    pub value: f64,
    /// Chernoff bound on the Poisson mass beyond the cutoff.
    pub tail: f64,
    pub k_cut: usize,
}

fn poisson_tail_bound(lambda: f64, k: usize) -> f64 {
    let k = k as f64;
    if lambda == 0.0 {
        return 0.0;
    }
    if k <= lambda {
        return 1.0;
    }
    // P(K > k) <= exp(-lambda) (e lambda / k)^k.
    (-lambda + k - k * (k / lambda).ln()).exp()
}

pub fn mirakjan_apply(cfg: &MirakjanEval, f: &Sampler<'_>, x: f64) -> Result<MirakjanValue> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("x = {x} outside [0, 1]")));
    }
    let n = cfg.n as f64;
    let lambda = n * cfg.phi(x);
    let k_cut = cfg.cutoff(x);
    let tail = poisson_tail_bound(lambda, k_cut);
    if tail > cfg.tail_tol {
        return Err(Error::Numerical(format!("Poisson tail {tail:e} beyond k = {k_cut}")));
    }
    let sample = |k: usize| {
        let y = k as f64 / n;
        match f {
            Sampler::Plain(g) => g(cfg.phi_inv(y)),
            Sampler::Warped(psi) => psi(y),
        }
    };
    if lambda == 0.0 {
        return Ok(MirakjanValue { value: sample(0), tail, k_cut });
    }
    let ln_lambda = lambda.ln();
    let mut ln_p = -lambda;
    let mut value = 0.0;
    for k in 0..=k_cut {
        if k > 0 {
            ln_p += ln_lambda - (k as f64).ln();
        }
        value += ln_p.exp() * sample(k);
    }
    Ok(MirakjanValue { value, tail, k_cut })
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MirakjanRow {
    pub n: usize,
    pub x: f64,
    pub approx: f64,
    pub exact: f64,
    pub error: f64,
}

/// `M_n f` against `f` on `points` uniform nodes for every `n` in `orders`.
pub fn mirakjan_table(
    orders: &[usize],
    v: f64,
    points: usize,
    f: &dyn Fn(f64) -> f64,
) -> Result<Vec<MirakjanRow>> {
    let mut rows = Vec::with_capacity(orders.len() * points);
    for &n in orders {
        let cfg = MirakjanEval::new(n, v)?;
        for p in 0..points {
            let x = p as f64 / (points - 1) as f64;
            let approx = mirakjan_apply(&cfg, &Sampler::Plain(f), x)?.value;
            let exact = f(x);
            rows.push(MirakjanRow { n, x, approx, exact, error: (approx - exact).abs() });
        }
    }
    Ok(rows)
}

/// Largest error per order in a table.
pub fn sup_errors(rows: &[MirakjanRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((n, e)) if *n == r.n => *e = e.max(r.error),
            _ => out.push((r.n, r.error)),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityReport {
    /// `(n, int_0^1 exp(-n (1 - x) / v) g(x) dx)`.
    pub pairings: Vec<(usize, f64)>,
    pub all_nonnegative: bool,
    /// Smallest `n` with a negative pairing.
    pub first_violation: Option<usize>,
    /// `L^p` norm of the negative part of `g`.
    pub negative_part: f64,
    /// All pairings nonnegative although `g` has a negative region.
    pub flagged: bool,
}

/// For each trial dual `g` (first edge of the grid function), compares the
/// sign of the exponential pairings with the sign of `g` itself.
pub fn exponential_family_density_check(
    v: f64,
    p: f64,
    duals: &[GridFunction],
    orders: &[usize],
) -> Result<Vec<DensityReport>> {
    if !(v > 0.0) || !(p >= 1.0) {
        return Err(Error::OutOfRange(format!("need v > 0 and p >= 1, got v = {v}, p = {p}")));
    }
    duals
        .iter()
        .map(|g| {
            let points = g.points();
            let pairings: Vec<(usize, f64)> = orders
                .iter()
                .map(|&n| {
                    let kernel = GridFunction::from_fn(1, points, |_, x| (-(n as f64) * (1.0 - x) / v).exp());
                    let prod: Vec<f64> = kernel.edge(0).iter().zip(g.edge(0)).map(|(a, b)| a * b).collect();
                    (n, crate::grid::trapezoid(&prod))
                })
                .collect();
            let first_violation = pairings.iter().find(|(_, s)| *s < 0.0).map(|(n, _)| *n);
            let neg: Vec<f64> = g.edge(0).iter().map(|v| (-v).max(0.0).powf(p)).collect();
            let negative_part = crate::grid::trapezoid(&neg).powf(1.0 / p);
            let has_negative = g.edge(0).iter().any(|&v| v < 0.0);
            Ok(DensityReport {
                all_nonnegative: first_violation.is_none(),
                first_violation,
                negative_part,
                flagged: first_violation.is_none() && has_negative,
                pairings,
            })
        })
        .collect()
}
