//! Finitely generated cones: membership, polar triviality and comparison with
//! the positive orthant, each with a dual certificate.
//!
//! Membership of `t` in the closed conic hull of `g_1, ..., g_K` is decided by
//! the linear program `max <t, phi>` subject to `<g_k, phi> <= 0` and
//! `|phi|_inf <= 1`; `t` is a member iff the optimum is at most `tol`. The
//! optimal `phi` is a separating functional whenever the verdict is false.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_GRID_TOL: f64 = 1e-6;

/// Why a cone question was answered negatively.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `<g, phi> <= tol` for every generator while `witness > tol`, where the
    /// witness is `<target, phi>` for membership, or `phi_i` for the tested
    /// coordinate direction in the full-space and orthant questions.
    Separating { phi: Vec<f64>, witness: f64 },
    /// `phi <= 0` but `<g, phi> = value > tol` for the listed generator, so
    /// the hull leaves the positive orthant.
    Escaping { phi: Vec<f64>, generator: usize, value: f64 },
}

impl Certificate {
    pub fn phi(&self) -> &[f64] {
        match self {
            Certificate::Separating { phi, .. } | Certificate::Escaping { phi, .. } => phi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub verdict: bool,
    pub certificate: Option<Certificate>,
    /// One coefficient vector per target reproduced (a single target for
    /// membership, every tested basis direction otherwise).
    pub coefficients: Vec<Vec<f64>>,
    pub residual: f64,
    pub tol: f64,
    /// Coordinate direction that failed, for the full-space and orthant questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub index: usize,
    pub sign: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_inputs(generators: &[Vec<f64>], d: usize, tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("tolerance {tol} must be positive")));
    }
    if let Some(bad) = generators.iter().position(|g| g.len() != d) {
        return Err(Error::Dimension(format!(
            "generator {bad} has length {}, expected {d}",
            generators[bad].len()
        )));
    }
    Ok(())
}

/// Generators rescaled to unit sup-norm; zero generators are dropped.
struct Scaled {
    vectors: Vec<Vec<f64>>,
    origin: Vec<(usize, f64)>,
    count: usize,
}

impl Scaled {
    fn new(generators: &[Vec<f64>]) -> Self {
        let mut vectors = Vec::new();
        let mut origin = Vec::new();
        for (k, g) in generators.iter().enumerate() {
            let s = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if s > 0.0 && s.is_finite() {
                vectors.push(g.iter().map(|v| v / s).collect());
                origin.push((k, s));
            }
        }
        Self { vectors, origin, count: generators.len() }
    }

    fn unscale(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.count];
        for (c, &(k, s)) in coeffs.iter().zip(&self.origin) {
            out[k] = c / s;
        }
        out
    }
}

fn sup_residual(generators: &[Vec<f64>], coeffs: &[f64], target: &[f64]) -> f64 {
    (0..target.len())
        .map(|i| {
            let s: f64 = generators.iter().zip(coeffs).map(|(g, c)| c * g[i]).sum();
            (s - target[i]).abs()
        })
        .fold(0.0, f64::max)
}

struct Membership {
    member: bool,
    coeffs: Vec<f64>,
    phi: Vec<f64>,
    value: f64,
    residual: f64,
}

fn member_scaled(scaled: &Scaled, raw: &[Vec<f64>], target: &[f64], tol: f64) -> Result<Membership> {
    let fit = simplex::l1_fit(&scaled.vectors, target)?;
    let coeffs = scaled.unscale(&fit.coeffs);
    let residual = sup_residual(raw, &coeffs, target);
    let value = dot(target, &fit.dual);
    Ok(Membership {
        member: fit.objective <= tol,
        coeffs,
        phi: fit.dual,
        value,
        residual,
    })
}

/// Is `target` in the closed conic hull of `generators` (within `tol`)?
pub fn cone_member(generators: &[Vec<f64>], target: &[f64], tol: f64) -> Result<ConeReport> {
    check_inputs(generators, target.len(), tol)?;
    let scaled = Scaled::new(generators);
    let m = member_scaled(&scaled, generators, target, tol)?;
    Ok(if m.member {
        ConeReport {
            verdict: true,
            certificate: None,
            coefficients: vec![m.coeffs],
            residual: m.residual,
            tol,
            direction: None,
        }
    } else {
        ConeReport {
            verdict: false,
            certificate: Some(Certificate::Separating { phi: m.phi, witness: m.value }),
            coefficients: Vec::new(),
            residual: m.value,
            tol,
            direction: None,
        }
    })
}

fn basis_vector(d: usize, i: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = sign;
    e
}

/// Is the polar of the generated cone `{0}`, i.e. is the cone all of `R^d`?
/// Every `+e_i` and `-e_i` is tested for membership.
pub fn polar_is_trivial(generators: &[Vec<f64>], dim: usize, tol: f64) -> Result<ConeReport> {
    check_inputs(generators, dim, tol)?;
    if dim == 0 {
        return Err(Error::Dimension("cone dimension must be positive".into()));
    }
    let scaled = Scaled::new(generators);
    let mut coefficients = Vec::with_capacity(2 * dim);
    let mut residual = 0.0f64;
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let target = basis_vector(dim, i, sign);
            let m = member_scaled(&scaled, generators, &target, tol)?;
            if !m.member {
                return Ok(ConeReport {
                    verdict: false,
                    certificate: Some(Certificate::Separating { phi: m.phi, witness: m.value }),
                    coefficients: Vec::new(),
                    residual: m.value,
                    tol,
                    direction: Some(Direction { index: i, sign }),
                });
            }
            residual = residual.max(m.residual);
            coefficients.push(m.coeffs);
        }
    }
    Ok(ConeReport { verdict: true, certificate: None, coefficients, residual, tol, direction: None })
}

/// Does the closed conic hull equal the positive orthant `R^d_+`?
pub fn cone_equals_positive_orthant(
    generators: &[Vec<f64>],
    dim: usize,
    tol: f64,
) -> Result<ConeReport> {
    check_inputs(generators, dim, tol)?;
    if dim == 0 {
        return Err(Error::Dimension("cone dimension must be positive".into()));
    }
    for (k, g) in generators.iter().enumerate() {
        if let Some((i, &v)) = g.iter().enumerate().find(|(_, &v)| v < -tol) {
            return Ok(ConeReport {
                verdict: false,
                certificate: Some(Certificate::Escaping {
                    phi: basis_vector(dim, i, -1.0),
                    generator: k,
                    value: -v,
                }),
                coefficients: Vec::new(),
                residual: -v,
                tol,
                direction: Some(Direction { index: i, sign: -1.0 }),
            });
        }
    }
    let scaled = Scaled::new(generators);
    let mut coefficients = Vec::with_capacity(dim);
    let mut residual = 0.0f64;
    for i in 0..dim {
        let target = basis_vector(dim, i, 1.0);
        let m = member_scaled(&scaled, generators, &target, tol)?;
        if !m.member {
            return Ok(ConeReport {
                verdict: false,
                certificate: Some(Certificate::Separating { phi: m.phi, witness: m.value }),
                coefficients: Vec::new(),
                residual: m.value,
                tol,
                direction: Some(Direction { index: i, sign: 1.0 }),
            });
        }
        residual = residual.max(m.residual);
        coefficients.push(m.coeffs);
    }
    Ok(ConeReport { verdict: true, certificate: None, coefficients, residual, tol, direction: None })
}

/// Re-checks a negative report by direct arithmetic. Returns the largest
/// pairing `<g / |g|_inf, phi>` for a separating certificate; the cone is
/// unchanged by rescaling generators, so pairings are measured at unit scale.
pub fn recheck_certificate(
    generators: &[Vec<f64>],
    certificate: &Certificate,
    tol: f64,
) -> std::result::Result<f64, String> {
    match certificate {
        Certificate::Separating { phi, witness } => {
            let worst = generators
                .iter()
                .map(|g| {
                    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    if scale > 0.0 { dot(g, phi) / scale } else { 0.0 }
                })
                .fold(f64::NEG_INFINITY, f64::max);
            if worst > tol {
                return Err(format!("generator pairing {worst} exceeds {tol}"));
            }
            if !(*witness > tol) {
                return Err(format!("witness {witness} does not exceed {tol}"));
            }
            if phi.iter().all(|v| v.abs() <= tol) {
                return Err("certificate is numerically zero".into());
            }
            Ok(worst.max(0.0))
        }
        Certificate::Escaping { phi, generator, value } => {
            if phi.iter().any(|&v| v > 0.0) {
                return Err("escaping certificate must be nonpositive".into());
            }
            let g = generators.get(*generator).ok_or("generator index out of range")?;
            let p = dot(g, phi);
            if (p - value).abs() > 1e-12 * value.abs().max(1.0) || !(p > tol) {
                return Err(format!("escaping pairing {p} does not exceed {tol}"));
            }
            Ok(p)
        }
    }
}
