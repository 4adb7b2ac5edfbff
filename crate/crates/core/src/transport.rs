//! Transport equations `dz_j/dt = v_j dz_j/dx + q_j z_j` on the edges of a
//! directed graph, each edge identified with `[0, 1]` and parameterized
//! against the flow (material enters at `x = 1` and leaves at `x = 0`).
//!
//! Vertex balance: `z(t, 1) = (I_out_w)^T (I_in z(t, 0) + K u(t))`.
//! The per-edge constant `q_j` is signed: negative values damp.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::graph::{Incidence, NetworkGraph};
use crate::grid::{ControlSignal, GridFunction, Trajectory};
use crate::matrix::PositiveMatrix;
use crate::{Error, Result};

const SHIFT_SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Velocity {
    Single(f64),
    PerEdge(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct TransportSystem {
    graph: NetworkGraph,
    incidence: Incidence,
    velocity: Velocity,
    absorption: Vec<f64>,
    control: PositiveMatrix,
}

impl TransportSystem {
    /// `absorption` holds the signed per-edge constants; `control` is `N x n`.
    pub fn new(
        graph: NetworkGraph,
        velocity: Velocity,
        absorption: Vec<f64>,
        control: PositiveMatrix,
    ) -> Result<Self> {
        let m = graph.n_edges();
        match &velocity {
            Velocity::Single(v) if !(*v > 0.0 && v.is_finite()) => {
                return Err(Error::OutOfRange(format!("velocity {v} must be positive")));
            }
            Velocity::PerEdge(vs) => {
                if vs.len() != m {
                    return Err(Error::Dimension(format!("expected {m} velocities")));
                }
                if let Some(v) = vs.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(Error::OutOfRange(format!("velocity {v} must be positive")));
                }
            }
            _ => {}
        }
        if absorption.len() != m || absorption.iter().any(|q| !q.is_finite()) {
            return Err(Error::Dimension(format!("expected {m} finite absorption constants")));
        }
        if control.rows() != graph.n_vertices() {
            return Err(Error::Dimension(format!(
                "control matrix needs {} rows, got {}",
                graph.n_vertices(),
                control.rows()
            )));
        }
        let incidence = graph.incidence_matrices();
        Ok(Self { graph, incidence, velocity, absorption, control })
    }

    /// Undamped system with one velocity on every edge.
    pub fn simple(graph: NetworkGraph, v: f64, control: PositiveMatrix) -> Result<Self> {
        let m = graph.n_edges();
        Self::new(graph, Velocity::Single(v), vec![0.0; m], control)
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }

    pub fn control(&self) -> &PositiveMatrix {
        &self.control
    }

    pub fn absorption(&self) -> &[f64] {
        &self.absorption
    }

    pub fn n_edges(&self) -> usize {
        self.graph.n_edges()
    }

    pub fn n_vertices(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn velocity(&self, j: usize) -> f64 {
        match &self.velocity {
            Velocity::Single(v) => *v,
            Velocity::PerEdge(vs) => vs[j],
        }
    }

    pub fn single_velocity(&self) -> Option<f64> {
        match &self.velocity {
            Velocity::Single(v) => Some(*v),
            Velocity::PerEdge(vs) => {
                let v0 = vs[0];
                vs.iter().all(|&v| v == v0).then_some(v0)
            }
        }
    }

    pub fn is_undamped(&self) -> bool {
        self.absorption.iter().all(|&q| q == 0.0)
    }

    /// Largest signed absorption constant; the Dirichlet profiles decay in
    /// frequency once `mu` exceeds it.
    pub fn growth_bound(&self) -> f64 {
        self.absorption.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(I_out_w)^T d`: boundary data distributed onto outgoing edges.
    pub fn distribute(&self, d: &DVector<f64>) -> DVector<f64> {
        self.incidence.out_weighted.as_matrix().transpose() * d
    }

    /// Free semigroup (zero inflow at `x = 1`); for `t > 0` the value is
    /// `exp(q t) f(x + v t)` when `x + v t < 1` and zero otherwise.
    pub fn free_semigroup_apply(&self, f: &GridFunction, t: f64) -> Result<GridFunction> {
        if !(t >= 0.0) {
            return Err(Error::OutOfRange(format!("time {t} must be nonnegative")));
        }
        self.check_grid(f)?;
        let points = f.points();
        let mut out = GridFunction::zeros(f.n_edges(), points).with_norm(f.p_norm);
        for j in 0..self.n_edges() {
            let v = self.velocity(j);
            let damp = (self.absorption[j] * t).exp();
            let shift = v * t * (points - 1) as f64;
            let snapped = shift.round();
            let src = f.edge(j);
            let dst = out.edge_mut(j);
            if (shift - snapped).abs() <= SHIFT_SNAP {
                let s = snapped as usize;
                // Characteristics that reach x = 1 carry the zero inflow.
                let limit = if s == 0 { points } else { points - 1 };
                for p in 0..points {
                    if p + s < limit {
                        dst[p] = damp * src[p + s];
                    }
                }
            } else {
                for (p, slot) in dst.iter_mut().enumerate() {
                    let x = p as f64 / (points - 1) as f64 + v * t;
                    if x < 1.0 {
                        *slot = damp * f.interpolate(j, x);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `D_mu d`: the solution of `mu f = A_m f` with `f(1) = (I_out_w)^T d`.
    pub fn dirichlet_apply(&self, mu: f64, d: &DVector<f64>, points: usize) -> Result<GridFunction> {
        self.check_mu(mu)?;
        if d.len() != self.n_vertices() {
            return Err(Error::Dimension(format!("boundary data needs {} entries", self.n_vertices())));
        }
        let edge_values = self.distribute(d);
        Ok(GridFunction::from_fn(self.n_edges(), points, |j, x| {
            let rate = (self.absorption[j] - mu) / self.velocity(j);
            (rate * (1.0 - x)).exp() * edge_values[j]
        })
        .with_norm(1.0))
    }

    /// Boundary observation `Gamma f = I_in f(0)`.
    pub fn observe(&self, f: &GridFunction) -> DVector<f64> {
        let traces = DVector::from_iterator(self.n_edges(), (0..self.n_edges()).map(|j| f.edge(j)[0]));
        self.incidence.inn.as_matrix() * traces
    }

    /// Transfer matrix `Gamma D_mu = I_in diag(exp((q_j - mu) / v_j)) (I_out_w)^T`.
    pub fn transfer(&self, mu: f64) -> Result<PositiveMatrix> {
        self.check_mu(mu)?;
        let m = self.n_edges();
        let decay = DMatrix::from_diagonal(&DVector::from_iterator(
            m,
            (0..m).map(|j| ((self.absorption[j] - mu) / self.velocity(j)).exp()),
        ));
        let t = self.incidence.inn.as_matrix() * decay * self.incidence.out_weighted.as_matrix().transpose();
        PositiveMatrix::new(t)
    }

    /// `exp(-mu / v) A` for undamped single-velocity systems.
    pub fn transfer_simple(&self, mu: f64) -> Result<PositiveMatrix> {
        self.check_mu(mu)?;
        let v = self.single_velocity().ok_or_else(|| {
            Error::OutOfRange("transfer_simple needs a single velocity".into())
        })?;
        if !self.is_undamped() {
            return Err(Error::OutOfRange("transfer_simple needs zero absorption".into()));
        }
        self.graph.adjacency().scale((-mu / v).exp())
    }

    /// `R(mu, A) f`: solves `mu r - v r' - q r = f` with `r(1) = 0`, i.e.
    /// `r(x) = (1/v) int_x^1 exp(-(mu - q)(y - x)/v) f(y) dy`, by the
    /// composite trapezoid rule.
    pub fn resolvent_apply(&self, mu: f64, f: &GridFunction) -> Result<GridFunction> {
        self.check_mu(mu)?;
        self.check_grid(f)?;
        let points = f.points();
        let h = f.spacing();
        let mut out = GridFunction::zeros(f.n_edges(), points).with_norm(f.p_norm);
        for j in 0..self.n_edges() {
            let v = self.velocity(j);
            let decay = (-(mu - self.absorption[j]) * h / v).exp();
            let src = f.edge(j);
            let dst = out.edge_mut(j);
            dst[points - 1] = 0.0;
            for p in (0..points - 1).rev() {
                dst[p] = decay * dst[p + 1] + 0.5 * h / v * (src[p] + decay * src[p + 1]);
            }
        }
        Ok(out)
    }

    /// Largest time step that moves every edge by a whole number of nodes.
    pub fn exact_step(&self, points: usize) -> Result<f64> {
        let vmin = (0..self.n_edges()).map(|j| self.velocity(j)).fold(f64::INFINITY, f64::min);
        let dt = 1.0 / ((points - 1) as f64 * vmin);
        self.shifts(dt, points)?;
        Ok(dt)
    }

    fn shifts(&self, dt: f64, points: usize) -> Result<Vec<usize>> {
        (0..self.n_edges())
            .map(|j| {
                let s = self.velocity(j) * dt * (points - 1) as f64;
                let r = s.round();
                if (s - r).abs() > SHIFT_SNAP * s.max(1.0) || r < 1.0 || r > (points - 1) as f64 {
                    Err(Error::Cfl(format!(
                        "edge {j}: v dt / dx = {s} is not a whole number of nodes in 1..{}",
                        points - 1
                    )))
                } else {
                    Ok(r as usize)
                }
            })
            .collect()
    }

    /// Mild solution by exact shifts along characteristics. The inflow at
    /// `x = 1` is rebuilt from the outflow traces and the control at the
    /// instant each characteristic enters the edge.
    pub fn simulate_mild(
        &self,
        f0: &GridFunction,
        u: &ControlSignal,
        t_final: f64,
        dt: f64,
        positive: bool,
    ) -> Result<Trajectory> {
        self.check_grid(f0)?;
        if u.inputs() != self.control.cols() {
            return Err(Error::Dimension(format!(
                "control signal has {} inputs, K has {} columns",
                u.inputs(),
                self.control.cols()
            )));
        }
        if positive && (f0.min() < 0.0 || !u.is_nonnegative()) {
            return Err(Error::OutOfRange("positive mode needs nonnegative data".into()));
        }
        if !(t_final >= 0.0) {
            return Err(Error::OutOfRange(format!("final time {t_final} must be nonnegative")));
        }
        let points = f0.points();
        let shifts = self.shifts(dt, points)?;
        let h = f0.spacing();
        let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
        let out_w = self.incidence.out_weighted.as_matrix();
        let inn = self.incidence.inn.as_matrix();
        let k = self.control.as_matrix();

        let mut traj = Trajectory { times: vec![0.0], states: vec![f0.clone()] };
        let mut z = f0.clone();
        for step in 0..steps {
            let t = step as f64 * dt;
            let mut next = GridFunction::zeros(self.n_edges(), points).with_norm(f0.p_norm);
            for (j, &s) in shifts.iter().enumerate() {
                let v = self.velocity(j);
                let q = self.absorption[j];
                let damp = (q * dt).exp();
                for p in 0..points {
                    let value = if p + s < points {
                        damp * z.edge(j)[p + s]
                    } else {
                        // Enters at x = 1 at time tau, travels (1 - x_p) / v.
                        let travel = (points - 1 - p) as f64 * h / v;
                        let tau = t + dt - travel;
                        let inflow = self.inflow(&z, t, tau, u, out_w, inn, k, j);
                        (q * travel).exp() * inflow
                    };
                    next.edge_mut(j)[p] = value;
                }
            }
            z = next;
            traj.times.push((step + 1) as f64 * dt);
            traj.states.push(z.clone());
        }
        Ok(traj)
    }

    #[allow(clippy::too_many_arguments)]
    fn inflow(
        &self,
        z: &GridFunction,
        t: f64,
        tau: f64,
        u: &ControlSignal,
        out_w: &DMatrix<f64>,
        inn: &DMatrix<f64>,
        k: &DMatrix<f64>,
        edge: usize,
    ) -> f64 {
        let elapsed = tau - t;
        let tail = self.graph.edges()[edge].tail;
        let weight = out_w[(tail, edge)];
        if weight == 0.0 {
            return 0.0;
        }
        let mut vertex = 0.0;
        for kk in 0..self.n_edges() {
            if inn[(tail, kk)] != 0.0 {
                let x = self.velocity(kk) * elapsed;
                vertex += (self.absorption[kk] * elapsed).exp() * z.interpolate(kk, x);
            }
        }
        let control = u.at(tau);
        for (l, ul) in control.iter().enumerate() {
            vertex += k[(tail, l)] * ul;
        }
        weight * vertex
    }

    fn check_mu(&self, mu: f64) -> Result<()> {
        if mu.is_finite() {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!("frequency {mu} must be finite")))
        }
    }

    fn check_grid(&self, f: &GridFunction) -> Result<()> {
        if f.n_edges() != self.n_edges() {
            return Err(Error::Dimension(format!(
                "grid function has {} edges, system has {}",
                f.n_edges(),
                self.n_edges()
            )));
        }
        Ok(())
    }
}

/// Scattering kernel samples `ell_j(0, v_a, v_b)` on a uniform velocity grid.
#[derive(Clone, Debug)]
pub struct KineticKernel {
    pub v_min: f64,
    pub v_max: f64,
    /// `ell[j][a][b]`, one `Q x Q` table per edge.
    pub ell: Vec<Vec<Vec<f64>>>,
}

impl KineticKernel {
    pub fn new(v_min: f64, v_max: f64, ell: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if !(v_min > 0.0) || v_max < v_min {
            return Err(Error::OutOfRange(format!(
                "velocity range [{v_min}, {v_max}] must satisfy 0 < v_min <= v_max"
            )));
        }
        let q = ell.first().map_or(0, Vec::len);
        if q == 0 || ell.iter().any(|t| t.len() != q || t.iter().any(|r| r.len() != q)) {
            return Err(Error::Dimension("kernel tables must be Q x Q per edge".into()));
        }
        if ell.iter().flatten().flatten().any(|&v| !(v >= 0.0)) {
            return Err(Error::OutOfRange("kernel samples must be nonnegative".into()));
        }
        Ok(Self { v_min, v_max, ell })
    }

    /// `ell == 1` on `q_points` velocity nodes for every edge.
    pub fn uniform(m: usize, v_min: f64, v_max: f64, q_points: usize) -> Result<Self> {
        Self::new(v_min, v_max, vec![vec![vec![1.0; q_points]; q_points]; m])
    }

    pub fn nodes(&self) -> usize {
        self.ell[0].len()
    }

    pub fn velocity(&self, a: usize) -> f64 {
        let q = self.nodes();
        if q == 1 {
            self.v_min
        } else {
            self.v_min + (self.v_max - self.v_min) * a as f64 / (q - 1) as f64
        }
    }

    /// Trapezoid weights; a single node carries unit mass.
    pub fn weights(&self) -> Vec<f64> {
        let q = self.nodes();
        if q == 1 {
            return vec![1.0];
        }
        let h = (self.v_max - self.v_min) / (q - 1) as f64;
        (0..q).map(|a| if a == 0 || a == q - 1 { 0.5 * h } else { h }).collect()
    }
}

/// Kinetic transfer operator for an undamped network:
/// `(A(mu) g)_k(v) = sum_j sum_i in_kj w_ij int ell_j(0, v, v') exp(-mu / v') g_i(v') dv'`.
/// `g` is `N x Q` (one row per vertex).
pub fn transfer_kinetic(
    graph: &NetworkGraph,
    kernel: &KineticKernel,
    mu: f64,
    g: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let (n, m, q) = (graph.n_vertices(), graph.n_edges(), kernel.nodes());
    if kernel.ell.len() != m {
        return Err(Error::Dimension(format!("kernel needs {m} edge tables")));
    }
    if g.len() != n || g.iter().any(|r| r.len() != q) {
        return Err(Error::Dimension(format!("boundary data must be {n} x {q}")));
    }
    let w = kernel.weights();
    let decay: Vec<f64> = (0..q).map(|b| (-mu / kernel.velocity(b)).exp()).collect();
    let mut out = vec![vec![0.0; q]; n];
    for (j, e) in graph.edges().iter().enumerate() {
        let src = &g[e.tail];
        for (a, slot) in out[e.head].iter_mut().enumerate() {
            let integral: f64 =
                (0..q).map(|b| w[b] * kernel.ell[j][a][b] * decay[b] * src[b]).sum();
            *slot += e.weight * integral;
        }
    }
    Ok(out)
}
