//! Coupled heat equations `dz_j/dt = c_j z_j'' - q_j z_j` on `[0, 1]` with
//! `z_j'(0) = 0` and the Robin coupling `z'(1) = B z(0) + K u`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::grid::{trapezoid_weights, ControlSignal, GridFunction, Trajectory};
use crate::{Error, Result};

pub const DEFAULT_MODES: usize = 64;
pub const DEFAULT_POINTS: usize = 201;

#[derive(Clone, Debug, PartialEq)]
pub struct HeatNetwork {
    diffusivity: Vec<f64>,
    absorption: Vec<f64>,
    coupling: DMatrix<f64>,
    control: DMatrix<f64>,
}

impl HeatNetwork {
    pub fn new(
        diffusivity: Vec<f64>,
        absorption: Vec<f64>,
        coupling: DMatrix<f64>,
        control: DMatrix<f64>,
    ) -> Result<Self> {
        let m = diffusivity.len();
        if m == 0 {
            return Err(Error::Dimension("heat network needs at least one edge".into()));
        }
        if absorption.len() != m {
            return Err(Error::Dimension(format!("expected {m} absorption constants")));
        }
        if let Some(c) = diffusivity.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::OutOfRange(format!("diffusivity {c} must be positive")));
        }
        if let Some(q) = absorption.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
            return Err(Error::OutOfRange(format!("absorption {q} must be positive")));
        }
        if coupling.shape() != (m, m) {
            return Err(Error::Dimension(format!("coupling must be {m} x {m}")));
        }
        if control.nrows() != m || control.ncols() == 0 {
            return Err(Error::Dimension(format!("control matrix must be {m} x n with n >= 1")));
        }
        if coupling.iter().chain(control.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("coupling and control must be finite".into()));
        }
        Ok(Self { diffusivity, absorption, coupling, control })
    }

    /// Three edges in series, `B` the subdiagonal shift, control `b` on edge 1.
    pub fn path(c: [f64; 3], q: [f64; 3], b: f64) -> Result<Self> {
        let coupling = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let control = DMatrix::from_row_slice(3, 1, &[b, 0.0, 0.0]);
        Self::new(c.to_vec(), q.to_vec(), coupling, control)
    }

    pub fn n_edges(&self) -> usize {
        self.diffusivity.len()
    }

    pub fn inputs(&self) -> usize {
        self.control.ncols()
    }

    pub fn diffusivity(&self) -> &[f64] {
        &self.diffusivity
    }

    pub fn absorption(&self) -> &[f64] {
        &self.absorption
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn control(&self) -> &DMatrix<f64> {
        &self.control
    }

    pub fn coupling_is_positive(&self) -> bool {
        self.coupling.iter().all(|&v| v >= 0.0)
    }

    pub fn control_is_positive(&self) -> bool {
        self.control.iter().all(|&v| v >= 0.0)
    }

    pub fn is_positive(&self) -> bool {
        self.coupling_is_positive() && self.control_is_positive()
    }

    /// Spectral bound of the decoupled generator, `-min_j q_j`.
    pub fn spectral_bound(&self) -> f64 {
        -self.absorption.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn eigenvalue(&self, j: usize, k: usize) -> f64 {
        let kk = k as f64 * PI;
        -self.absorption[j] - self.diffusivity[j] * kk * kk
    }

    fn rate(&self, mu: f64, j: usize) -> Result<f64> {
        let s2 = (mu + self.absorption[j]) / self.diffusivity[j];
        if !(s2 > 0.0) || !mu.is_finite() {
            return Err(Error::OutOfRange(format!(
                "frequency {mu} must exceed -q_{} = {}",
                j + 1,
                -self.absorption[j]
            )));
        }
        Ok(s2.sqrt())
    }

    /// `xi_j(x) = cosh(s x) / (s sinh s)`, `s = sqrt((mu + q_j) / c_j)`.
    pub fn xi(&self, mu: f64, j: usize, x: f64) -> Result<f64> {
        let s = self.rate(mu, j)?;
        Ok(xi_stable(s, x))
    }

    /// `<xi_j, cos(k pi .)> = (-1)^k / (s^2 + (k pi)^2)`.
    pub fn xi_cosine_pairing(&self, mu: f64, j: usize, k: usize) -> Result<f64> {
        let s = self.rate(mu, j)?;
        let kk = k as f64 * PI;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign / (s * s + kk * kk))
    }

    /// `A(mu) = B diag(xi_j(0))`.
    pub fn transfer(&self, mu: f64) -> Result<DMatrix<f64>> {
        let d = (0..self.n_edges()).map(|j| self.xi(mu, j, 0.0)).collect::<Result<Vec<_>>>()?;
        Ok(&self.coupling * DMatrix::from_diagonal(&DVector::from_vec(d)))
    }

    /// `D_mu d` sampled on `points` nodes.
    pub fn dirichlet_apply(&self, mu: f64, d: &DVector<f64>, points: usize) -> Result<GridFunction> {
        if d.len() != self.n_edges() {
            return Err(Error::Dimension(format!("boundary data needs {} entries", self.n_edges())));
        }
        let s = (0..self.n_edges()).map(|j| self.rate(mu, j)).collect::<Result<Vec<_>>>()?;
        Ok(GridFunction::from_fn(self.n_edges(), points, |j, x| xi_stable(s[j], x) * d[j]))
    }

    /// Checks that `B` is the series shift and `K` acts on edge 1 only; returns `b`.
    pub fn path_gain(&self) -> Result<f64> {
        let shift = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        if self.n_edges() != 3 || self.coupling != shift {
            return Err(Error::Topology("expected the three-edge path coupling".into()));
        }
        if self.control.ncols() != 1 || self.control[(1, 0)] != 0.0 || self.control[(2, 0)] != 0.0 {
            return Err(Error::Topology("expected a single control on edge 1".into()));
        }
        Ok(self.control[(0, 0)])
    }
}

fn xi_stable(s: f64, x: f64) -> f64 {
    (s * (x - 1.0)).exp() * (1.0 + (-2.0 * s * x).exp()) / (s * (1.0 - (-2.0 * s).exp()))
}

pub fn xi_kernel(net: &HeatNetwork, mu: f64, j: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("x = {x} outside [0, 1]")));
    }
    net.xi(mu, j, x)
}

pub fn heat_transfer(net: &HeatNetwork, mu: f64) -> Result<DMatrix<f64>> {
    net.transfer(mu)
}

/// `(xi_1(x) b u, xi_2(x) xi_1(0) b u, xi_3(x) xi_2(0) xi_1(0) b u)`.
pub fn path_h_operator(net: &HeatNetwork, mu: f64, u: f64, points: usize) -> Result<GridFunction> {
    let b = net.path_gain()?;
    let s = (0..3).map(|j| net.rate(mu, j)).collect::<Result<Vec<_>>>()?;
    let amp = [b * u, xi_stable(s[0], 0.0) * b * u, xi_stable(s[1], 0.0) * xi_stable(s[0], 0.0) * b * u];
    Ok(GridFunction::from_fn(3, points, |j, x| xi_stable(s[j], x) * amp[j]))
}

/// Cosine modes `cos(k pi x)`, `k = 0..=k_max`, sampled on a uniform grid.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    k_max: usize,
    points: usize,
    modes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(k_max: usize, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::OutOfRange("a grid needs at least two nodes".into()));
        }
        let h = 1.0 / (points - 1) as f64;
        let modes = (0..=k_max)
            .map(|k| (0..points).map(|p| (k as f64 * PI * p as f64 * h).cos()).collect())
            .collect();
        Ok(Self { k_max, points, modes, weights: trapezoid_weights(points) })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn mode(&self, k: usize) -> &[f64] {
        &self.modes[k]
    }

    /// `||cos(k pi .)||^2` on `[0, 1]`.
    pub fn norm_sq(k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            0.5
        }
    }

    /// Trapezoid pairings `<f, cos(k pi .)>`.
    pub fn pairings(&self, f: &[f64]) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| m.iter().zip(f).zip(&self.weights).map(|((a, b), w)| a * b * w).sum())
            .collect()
    }

    /// Expansion coefficients `<f, phi_k> / ||phi_k||^2`.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        self.pairings(f).into_iter().enumerate().map(|(k, c)| c / Self::norm_sq(k)).collect()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.points];
        for (c, m) in coeffs.iter().zip(&self.modes) {
            for (o, v) in out.iter_mut().zip(m) {
                *o += c * v;
            }
        }
        out
    }
}

/// Truncated cosine-series semigroup together with a bound on the discarded
/// modes (for `t = 0`, the grid `L^2` distance to the projection).
pub fn heat_semigroup_apply(
    net: &HeatNetwork,
    basis: &SpectralBasis,
    h: &GridFunction,
    t: f64,
) -> Result<(GridFunction, f64)> {
    if !(t >= 0.0) {
        return Err(Error::OutOfRange(format!("time {t} must be nonnegative")));
    }
    check_grid(net, basis, h)?;
    let mut out = GridFunction::zeros(net.n_edges(), basis.points()).with_norm(h.p_norm);
    let mut tail = 0.0f64;
    for j in 0..net.n_edges() {
        let coeffs: Vec<f64> = basis
            .coefficients(h.edge(j))
            .into_iter()
            .enumerate()
            .map(|(k, c)| c * (net.eigenvalue(j, k) * t).exp())
            .collect();
        out.edge_mut(j).copy_from_slice(&basis.synthesize(&coeffs));
        if t > 0.0 {
            let l1: f64 = h.edge(j).iter().map(|v| v.abs()).collect::<Vec<_>>().iter().sum::<f64>()
                * h.spacing();
            tail = tail.max(2.0 * l1 * series_tail(|k| (net.eigenvalue(j, k) * t).exp(), basis.k_max()));
        }
    }
    if t == 0.0 {
        let mut diff = h.clone();
        for (d, o) in diff.values_mut().iter_mut().zip(out.values()) {
            *d -= o;
        }
        tail = diff.with_norm(2.0).norm();
    }
    Ok((out, tail))
}

fn series_tail(term: impl Fn(usize) -> f64, k_max: usize) -> f64 {
    let mut total = 0.0;
    for k in k_max + 1.. {
        let v = term(k);
        total += v;
        if v <= 1e-17 * total.max(1e-300) || k > k_max + 100_000 {
            break;
        }
    }
    total
}

/// Result of [`heat_simulate_mild`].
#[derive(Clone, Debug)]
pub struct HeatRun {
    pub trajectory: Trajectory,
    /// Sup-norm bound on the modes discarded by the truncation.
    pub tail: f64,
    /// Boundary flux `g(t) = B z(t, 0) + K u(t)` at the recorded times.
    pub flux: Vec<DVector<f64>>,
}

impl HeatRun {
    /// Entries below `-(tail + 64 eps scale)`; smaller negatives are the
    /// round-off and truncation floor of the modal representation.
    pub fn positivity_violations(&self) -> usize {
        let scale = self
            .trajectory
            .states
            .iter()
            .flat_map(|s| s.values().iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        self.trajectory.positivity_violations(self.tail + 64.0 * f64::EPSILON * scale.max(1.0))
    }
}

/// Mild solution by boundary lifting. The state is split as
/// `z = xi^0(x) g + w`, where `xi^0` is the `mu = 0` Dirichlet profile carrying
/// the boundary flux `g` and `w` satisfies homogeneous Neumann conditions. `w`
/// evolves exactly mode by mode; `g` is held over each step and refreshed
/// from `B z(0) + K u`, the jump being absorbed into `w` through the exact
/// cosine coefficients of `xi^0`.
pub fn heat_simulate_mild(
    net: &HeatNetwork,
    basis: &SpectralBasis,
    h0: &GridFunction,
    u: &ControlSignal,
    t_final: f64,
    dt: f64,
) -> Result<HeatRun> {
    check_grid(net, basis, h0)?;
    if !(dt > 0.0) {
        return Err(Error::OutOfRange(format!("time step {dt} must be positive")));
    }
    if !(t_final >= 0.0) {
        return Err(Error::OutOfRange(format!("final time {t_final} must be nonnegative")));
    }
    if u.inputs() != net.inputs() {
        return Err(Error::Dimension(format!(
            "control signal has {} inputs, K has {} columns",
            u.inputs(),
            net.inputs()
        )));
    }
    let m = net.n_edges();
    let kn = basis.k_max() + 1;
    let points = basis.points();
    let lift: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..points).map(|p| net.xi(0.0, j, p as f64 / (points - 1) as f64)).collect())
        .collect::<Result<_>>()?;
    let lift0: Vec<f64> = (0..m).map(|j| net.xi(0.0, j, 0.0)).collect::<Result<_>>()?;
    let lift_coeffs: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            (0..kn)
                .map(|k| Ok(net.xi_cosine_pairing(0.0, j, k)? / SpectralBasis::norm_sq(k)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let decay: Vec<Vec<f64>> =
        (0..m).map(|j| (0..kn).map(|k| (net.eigenvalue(j, k) * dt).exp()).collect()).collect();
    let lift_tail: f64 = (0..m)
        .map(|j| {
            let sq = net.absorption[j] / net.diffusivity[j];
            let damp = (net.eigenvalue(j, kn) * dt).exp();
            damp * series_tail(|k| 2.0 / (sq + (k as f64 * PI).powi(2)), basis.k_max())
        })
        .fold(0.0, f64::max);

    let flux_at = |z0: &DVector<f64>, t: f64| -> DVector<f64> {
        &net.coupling * z0 + &net.control * DVector::from_column_slice(u.at(t))
    };
    let trace0 = DVector::from_iterator(m, (0..m).map(|j| h0.edge(j)[0]));
    let mut g = flux_at(&trace0, 0.0);
    let mut w: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut c = basis.coefficients(h0.edge(j));
            for (ck, lk) in c.iter_mut().zip(&lift_coeffs[j]) {
                *ck -= lk * g[j];
            }
            c
        })
        .collect();

    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut trajectory = Trajectory { times: vec![0.0], states: vec![h0.clone()] };
    let mut flux = vec![g.clone()];
    let mut tail = 0.0f64;
    for step in 0..steps {
        let t_next = (step + 1) as f64 * dt;
        for j in 0..m {
            for (wk, dk) in w[j].iter_mut().zip(&decay[j]) {
                *wk *= dk;
            }
        }
        let mut z = GridFunction::zeros(m, points).with_norm(h0.p_norm);
        for j in 0..m {
            let free = basis.synthesize(&w[j]);
            for ((zp, fp), lp) in z.edge_mut(j).iter_mut().zip(&free).zip(&lift[j]) {
                *zp = lp * g[j] + fp;
            }
        }
        let z0 = DVector::from_iterator(m, (0..m).map(|j| lift0[j] * g[j] + w[j].iter().sum::<f64>()));
        let g_next = flux_at(&z0, t_next);
        let jump = &g_next - &g;
        tail = tail.max(lift_tail * jump.amax());
        for j in 0..m {
            for (wk, lk) in w[j].iter_mut().zip(&lift_coeffs[j]) {
                *wk -= lk * jump[j];
            }
        }
        g = g_next;
        trajectory.times.push(t_next);
        trajectory.states.push(z);
        flux.push(g.clone());
    }
    Ok(HeatRun { trajectory, tail, flux })
}

/// Stationary flux for a constant control: `g = (I - B diag xi^0(0))^{-1} K u`.
pub fn stationary_flux(net: &HeatNetwork, u: &[f64]) -> Result<DVector<f64>> {
    let m = net.n_edges();
    let a = DMatrix::identity(m, m) - net.transfer(0.0)?;
    let rhs = &net.control * DVector::from_column_slice(u);
    a.lu().solve(&rhs).ok_or_else(|| Error::Numerical("I - A(0) is singular".into()))
}

fn check_grid(net: &HeatNetwork, basis: &SpectralBasis, h: &GridFunction) -> Result<()> {
    if h.n_edges() != net.n_edges() || h.points() != basis.points() {
        return Err(Error::Dimension(format!(
            "grid function is {} x {}, expected {} x {}",
            h.n_edges(),
            h.points(),
            net.n_edges(),
            basis.points()
        )));
    }
    Ok(())
}
