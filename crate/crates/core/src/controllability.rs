//! Frequency-domain controllability decisions.
//!
//! A [`FrequencyFamily`] supplies the transfer matrices `A(mu) = Gamma D_mu`
//! and the lifts `D_mu` of boundary data into (a discretized) state space.
//! Generators are pooled over the sampled frequencies and handed to the cone
//! tests: the polar test for controllability with positive controls, the
//! orthant test for positive controllability.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cone::{self, ConeReport};
use crate::grid::trapezoid_weights;
use crate::heat::HeatNetwork;
use crate::transport::TransportSystem;
use crate::{Error, Result};

pub const DEFAULT_MU_COUNT: usize = 8;
pub const TARGET_RADIUS: f64 = 0.9;
const MAX_SQUARINGS: usize = 64;
const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Dense reachable set under nonnegative controls.
    ControlConstrained,
    /// Reachable set dense in the positive orthant.
    Positive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Controllable,
    NotControllable,
    Inconclusive,
}

impl Decision {
    fn from_verdict(v: bool) -> Self {
        if v {
            Decision::Controllable
        } else {
            Decision::NotControllable
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TransportRank,
    TransportFrequency,
    Theorem1,
    Theorem2,
}

/// Spectral radius by repeated squaring, `r = lim ||A^(2^k)||^(1/2^k)`,
/// with the norm growth tracked in log space. Exact zero for nilpotent input
/// once a power vanishes.
pub fn spectral_radius(m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("{} x {} matrix is not square", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let norm1 = |b: &DMatrix<f64>| b.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let mut b = m.clone();
    let n0 = norm1(&b);
    if n0 == 0.0 {
        return Ok(0.0);
    }
    if !n0.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    b /= n0;
    let mut log_norm = n0.ln();
    let mut power = 1.0f64;
    let mut estimate = n0;
    // A nilpotent matrix of order n vanishes once 2^k >= n; do not stop earlier.
    let min_squarings = (m.nrows() as f64).log2().ceil() as usize + 1;
    for k in 0..MAX_SQUARINGS {
        b = &b * &b;
        let n = norm1(&b);
        if n == 0.0 {
            return Ok(0.0);
        }
        b /= n;
        log_norm = 2.0 * log_norm + n.ln();
        power *= 2.0;
        let next = (log_norm / power).exp();
        if k >= min_squarings && (next - estimate).abs() <= tol * next.max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::IterationLimit(MAX_SQUARINGS))
}

/// Frequency-dependent data of a boundary control system.
pub trait FrequencyFamily {
    fn name(&self) -> &'static str;
    /// Number of network edges.
    fn edges(&self) -> usize;
    fn boundary_dim(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// Frequencies must exceed this bound.
    fn floor(&self) -> f64;
    fn transfer(&self, mu: f64) -> Result<DMatrix<f64>>;
    fn lift(&self, mu: f64, d: &DVector<f64>) -> Result<Vec<f64>>;
    /// `boundary_dim x n` control matrix.
    fn control(&self) -> DMatrix<f64>;
    fn is_positive(&self) -> bool;
    /// Quadrature weights turning coordinates into `L^2` pairings.
    fn mass_weights(&self) -> Option<Vec<f64>> {
        None
    }
    fn grid_points(&self) -> Option<usize> {
        None
    }
}

/// Transport network reduced to edge amplitudes: `D_mu d` is represented by
/// `(I_out_w)^T d`, the profile `exp((q_j - mu)(1 - x) / v_j)` being a fixed
/// positive factor on each edge.
pub struct TransportEdgeFamily<'a>(pub &'a TransportSystem);

impl FrequencyFamily for TransportEdgeFamily<'_> {
    fn name(&self) -> &'static str {
        "transport_edges"
    }
    fn edges(&self) -> usize {
        self.0.n_edges()
    }
    fn boundary_dim(&self) -> usize {
        self.0.n_vertices()
    }
    fn state_dim(&self) -> usize {
        self.0.n_edges()
    }
    fn floor(&self) -> f64 {
        self.0.growth_bound().max(0.0)
    }
    fn transfer(&self, mu: f64) -> Result<DMatrix<f64>> {
        Ok(self.0.transfer(mu)?.into_inner())
    }
    fn lift(&self, _mu: f64, d: &DVector<f64>) -> Result<Vec<f64>> {
        Ok(self.0.distribute(d).as_slice().to_vec())
    }
    fn control(&self) -> DMatrix<f64> {
        self.0.control().as_matrix().clone()
    }
    fn is_positive(&self) -> bool {
        true
    }
}

/// Heat network with `D_mu d = diag(xi_j(x)) d` sampled on a uniform grid.
pub struct HeatGridFamily<'a> {
    pub net: &'a HeatNetwork,
    pub points: usize,
}

impl FrequencyFamily for HeatGridFamily<'_> {
    fn name(&self) -> &'static str {
        "heat_grid"
    }
    fn edges(&self) -> usize {
        self.net.n_edges()
    }
    fn boundary_dim(&self) -> usize {
        self.net.n_edges()
    }
    fn state_dim(&self) -> usize {
        self.net.n_edges() * self.points
    }
    fn floor(&self) -> f64 {
        self.net.spectral_bound()
    }
    fn transfer(&self, mu: f64) -> Result<DMatrix<f64>> {
        self.net.transfer(mu)
    }
    fn lift(&self, mu: f64, d: &DVector<f64>) -> Result<Vec<f64>> {
        Ok(self.net.dirichlet_apply(mu, d, self.points)?.values().to_vec())
    }
    fn control(&self) -> DMatrix<f64> {
        self.net.control().clone()
    }
    fn is_positive(&self) -> bool {
        self.net.is_positive()
    }
    fn mass_weights(&self) -> Option<Vec<f64>> {
        let w = trapezoid_weights(self.points);
        Some((0..self.net.n_edges()).flat_map(|_| w.iter().copied()).collect())
    }
    fn grid_points(&self) -> Option<usize> {
        Some(self.points)
    }
}

/// Heat network reduced to the flux amplitudes `d` (the `xi_j` shapes
/// factored out). Diagnostic only: it cannot see the spatial structure.
pub struct HeatAmplitudeFamily<'a>(pub &'a HeatNetwork);

impl FrequencyFamily for HeatAmplitudeFamily<'_> {
    fn name(&self) -> &'static str {
        "heat_amplitudes"
    }
    fn edges(&self) -> usize {
        self.0.n_edges()
    }
    fn boundary_dim(&self) -> usize {
        self.0.n_edges()
    }
    fn state_dim(&self) -> usize {
        self.0.n_edges()
    }
    fn floor(&self) -> f64 {
        self.0.spectral_bound()
    }
    fn transfer(&self, mu: f64) -> Result<DMatrix<f64>> {
        self.0.transfer(mu)
    }
    fn lift(&self, _mu: f64, d: &DVector<f64>) -> Result<Vec<f64>> {
        Ok(d.as_slice().to_vec())
    }
    fn control(&self) -> DMatrix<f64> {
        self.0.control().clone()
    }
    fn is_positive(&self) -> bool {
        self.0.is_positive()
    }
}

/// User overrides for [`FrequencyProbe::auto`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

/// Sampled frequencies `mu_k = floor + (mu_min - floor) 2^k` and the Neumann
/// truncation order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProbe {
    pub floor: f64,
    pub mu_min: f64,
    pub mu_count: usize,
    pub n_max: usize,
    /// `r(A(mu_min))`.
    pub radius: f64,
    pub samples: Vec<f64>,
}

impl FrequencyProbe {
    pub fn new(family: &dyn FrequencyFamily, mu_min: f64, mu_count: usize, n_max: usize) -> Result<Self> {
        let floor = family.floor();
        if !(mu_min > floor) || !mu_min.is_finite() {
            return Err(Error::OutOfRange(format!("mu_min = {mu_min} must exceed {floor}")));
        }
        if mu_count == 0 {
            return Err(Error::OutOfRange("at least one frequency sample is needed".into()));
        }
        let radius = spectral_radius(&family.transfer(mu_min)?, 1e-12)?;
        let samples = (0..mu_count).map(|k| floor + (mu_min - floor) * 2f64.powi(k as i32)).collect();
        Ok(Self { floor, mu_min, mu_count, n_max, radius, samples })
    }

    /// Smallest `floor + 2^j`, `j >= -10`, with `r(A(mu)) <= 0.9`, unless
    /// overridden.
    pub fn auto(family: &dyn FrequencyFamily, settings: &ProbeSettings) -> Result<Self> {
        let mu_count = settings.mu_count.unwrap_or(DEFAULT_MU_COUNT);
        let n_max = settings.n_max.unwrap_or_else(|| family.edges().saturating_sub(1).max(16));
        if let Some(mu_min) = settings.mu_min {
            return Self::new(family, mu_min, mu_count, n_max);
        }
        let floor = family.floor();
        for j in -10..=60 {
            let mu = floor + 2f64.powi(j);
            if spectral_radius(&family.transfer(mu)?, 1e-12)? <= TARGET_RADIUS {
                return Self::new(family, mu, mu_count, n_max);
            }
        }
        Err(Error::Numerical("no frequency with r(A(mu)) <= 0.9 below 2^60".into()))
    }

    /// `r^(n_max + 1) / (1 - r)`.
    pub fn neumann_tail(&self) -> f64 {
        if self.radius >= 1.0 {
            f64::INFINITY
        } else {
            self.radius.powi(self.n_max as i32 + 1) / (1.0 - self.radius)
        }
    }
}

/// A generator with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub mu: Option<f64>,
    pub power: Option<usize>,
    pub input: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuDecision {
    pub mu: f64,
    pub radius: f64,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub family: String,
    pub state_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub mode: Mode,
    pub decision: Decision,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<FrequencyProbe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ConeReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_mu: Vec<MuDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neumann_tail: Option<f64>,
    /// Certificate divided by the quadrature weights, an `L^2` density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<f64>>,
    pub discretization: Discretization,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub generators: Vec<Generator>,
}

impl Verdict {
    fn new(mode: Mode, method: Method, family: &dyn FrequencyFamily, tol: f64) -> Self {
        Self {
            mode,
            decision: Decision::Inconclusive,
            method,
            probe: None,
            report: None,
            per_mu: Vec::new(),
            neumann_tail: None,
            density: None,
            discretization: Discretization {
                family: family.name().into(),
                state_dim: family.state_dim(),
                points: family.grid_points(),
                tol,
            },
            notes: Vec::new(),
            generators: Vec::new(),
        }
    }

    pub fn generator_values(&self) -> Vec<Vec<f64>> {
        self.generators.iter().map(|g| g.values.clone()).collect()
    }

    /// Re-checks the certificate of a negative verdict against the stored
    /// generators; returns the largest pairing.
    pub fn recheck(&self) -> std::result::Result<f64, String> {
        let report = self.report.as_ref().ok_or("verdict has no cone report")?;
        let cert = report.certificate.as_ref().ok_or("verdict has no certificate")?;
        cone::recheck_certificate(&self.generator_values(), cert, report.tol)
    }

    fn finish(mut self, report: ConeReport, family: &dyn FrequencyFamily) -> Self {
        self.decision = Decision::from_verdict(report.verdict);
        if let (Some(cert), Some(w)) = (&report.certificate, family.mass_weights()) {
            self.density = Some(cert.phi().iter().zip(&w).map(|(p, w)| p / w).collect());
        }
        self.report = Some(report);
        self
    }
}

fn check_inputs(family: &dyn FrequencyFamily, probe: &FrequencyProbe) -> Result<()> {
    let k = family.control();
    if k.nrows() != family.boundary_dim() {
        return Err(Error::Dimension(format!(
            "control matrix has {} rows, boundary space has dimension {}",
            k.nrows(),
            family.boundary_dim()
        )));
    }
    if probe.samples.iter().any(|&mu| !(mu > family.floor())) {
        return Err(Error::OutOfRange(format!("frequencies must exceed {}", family.floor())));
    }
    Ok(())
}

fn condition_1(m: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    let n1 = |b: &DMatrix<f64>| b.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    n1(m) * n1(inv)
}

/// Generators `D_mu (I - A(mu))^{-1} K e_l` over the sampled frequencies;
/// controllable with positive controls iff their hull is the whole space.
pub fn decide_theorem1(family: &dyn FrequencyFamily, probe: &FrequencyProbe, tol: f64) -> Result<Verdict> {
    check_inputs(family, probe)?;
    let mut verdict = Verdict::new(Mode::ControlConstrained, Method::Theorem1, family, tol);
    verdict.probe = Some(probe.clone());
    let k = family.control();
    let nb = family.boundary_dim();
    for &mu in &probe.samples {
        let resolvent = DMatrix::identity(nb, nb) - family.transfer(mu)?;
        let inv = match resolvent.clone().try_inverse() {
            Some(inv) if condition_1(&resolvent, &inv) < SINGULAR_CONDITION => inv,
            _ => {
                verdict.notes.push(format!("I - A(mu) is numerically singular at mu = {mu}"));
                return Ok(verdict);
            }
        };
        let y = inv * &k;
        for l in 0..k.ncols() {
            let values = family.lift(mu, &y.column(l).into_owned())?;
            verdict.generators.push(Generator { mu: Some(mu), power: None, input: l, values });
        }
    }
    let report = cone::polar_is_trivial(&verdict.generator_values(), family.state_dim(), tol)?;
    Ok(verdict.finish(report, family))
}

fn neumann_generators(
    family: &dyn FrequencyFamily,
    mu: f64,
    n_max: usize,
) -> Result<Vec<Generator>> {
    let a = family.transfer(mu)?;
    let mut p = family.control();
    let mut out = Vec::new();
    for n in 0..=n_max {
        for l in 0..p.ncols() {
            let values = family.lift(mu, &p.column(l).into_owned())?;
            out.push(Generator { mu: Some(mu), power: Some(n), input: l, values });
        }
        p = &a * p;
    }
    Ok(out)
}

/// Generators `D_mu A(mu)^n K e_l`, `n <= n_max`, over the sampled
/// frequencies; positively controllable iff their hull is the positive orthant.
pub fn decide_theorem2(family: &dyn FrequencyFamily, probe: &FrequencyProbe, tol: f64) -> Result<Verdict> {
    check_inputs(family, probe)?;
    if !family.is_positive() || family.control().iter().any(|&v| v < 0.0) {
        return Err(Error::OutOfRange(
            "positive mode needs a nonnegative coupling and control matrix".into(),
        ));
    }
    let mut verdict = Verdict::new(Mode::Positive, Method::Theorem2, family, tol);
    verdict.probe = Some(probe.clone());
    if probe.radius >= 1.0 {
        verdict.notes.push(format!("r(A(mu_min)) = {} is not below one", probe.radius));
        return Ok(verdict);
    }
    verdict.neumann_tail = Some(probe.neumann_tail());
    for &mu in &probe.samples {
        verdict.generators.extend(neumann_generators(family, mu, probe.n_max)?);
    }
    let report = cone::cone_equals_positive_orthant(&verdict.generator_values(), family.state_dim(), tol)?;
    Ok(verdict.finish(report, family))
}

/// Frequency test for transport: the orthant test per sampled `mu` and on
/// the pooled set. Samples that disagree are reported in the notes.
pub fn decide_transport_frequency(
    sys: &TransportSystem,
    probe: &FrequencyProbe,
    tol: f64,
) -> Result<Verdict> {
    let family = TransportEdgeFamily(sys);
    check_inputs(&family, probe)?;
    let mut verdict = Verdict::new(Mode::Positive, Method::TransportFrequency, &family, tol);
    verdict.probe = Some(probe.clone());
    if probe.radius >= 1.0 {
        verdict.notes.push(format!("r(A(mu_min)) = {} is not below one", probe.radius));
        return Ok(verdict);
    }
    verdict.neumann_tail = Some(probe.neumann_tail());
    let dim = family.state_dim();
    for &mu in &probe.samples {
        let gens = neumann_generators(&family, mu, probe.n_max)?;
        let values: Vec<Vec<f64>> = gens.iter().map(|g| g.values.clone()).collect();
        let report = cone::cone_equals_positive_orthant(&values, dim, tol)?;
        let radius = spectral_radius(&family.transfer(mu)?, 1e-12)?;
        verdict.per_mu.push(MuDecision { mu, radius, decision: Decision::from_verdict(report.verdict) });
        verdict.generators.extend(gens);
    }
    if verdict.per_mu.windows(2).any(|w| w[0].decision != w[1].decision) {
        verdict.notes.push("frequency samples disagree".into());
    }
    let report = cone::cone_equals_positive_orthant(&verdict.generator_values(), dim, tol)?;
    Ok(verdict.finish(report, &family))
}

/// Kalman-type test `(I_out_w)^T A^m K e_l`, `m < M`, for undamped,
/// single-velocity, strongly connected networks. Other systems fall back to
/// [`decide_transport_frequency`] with an automatic probe.
pub fn decide_transport_rank(sys: &TransportSystem, tol: f64) -> Result<Verdict> {
    let family = TransportEdgeFamily(sys);
    let mut reasons = Vec::new();
    if !sys.is_undamped() {
        reasons.push("nonzero absorption");
    }
    if sys.single_velocity().is_none() {
        reasons.push("several velocities");
    }
    if !sys.graph().is_strongly_connected() {
        reasons.push("graph not strongly connected");
    }
    if !reasons.is_empty() {
        let probe = FrequencyProbe::auto(&family, &ProbeSettings::default())?;
        let mut v = decide_transport_frequency(sys, &probe, tol)?;
        v.notes.push(format!("rank test not applicable ({}); used the frequency test", reasons.join(", ")));
        return Ok(v);
    }
    let mut verdict = Verdict::new(Mode::Positive, Method::TransportRank, &family, tol);
    let a = sys.graph().adjacency().into_inner();
    let k = family.control();
    let mut p = k.clone();
    for m in 0..sys.n_edges() {
        for l in 0..k.ncols() {
            let values = family.lift(0.0, &p.column(l).into_owned())?;
            verdict.generators.push(Generator { mu: None, power: Some(m), input: l, values });
        }
        p = &a * p;
    }
    let report = cone::cone_equals_positive_orthant(&verdict.generator_values(), family.state_dim(), tol)?;
    Ok(verdict.finish(report, &family))
}
