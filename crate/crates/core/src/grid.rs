use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Composite trapezoid weights for `points` uniform nodes on `[0, 1]`.
pub fn trapezoid_weights(points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs at least two nodes");
    let h = 1.0 / (points - 1) as f64;
    let mut w = vec![h; points];
    w[0] = 0.5 * h;
    w[points - 1] = 0.5 * h;
    w
}

pub fn trapezoid(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let h = 1.0 / (n - 1) as f64;
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Per-edge samples on the uniform grid `x_p = p / (P - 1)` of `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    n_edges: usize,
    points: usize,
    values: Vec<f64>,
    /// Exponent used by [`GridFunction::norm`].
    pub p_norm: f64,
}

impl GridFunction {
    pub fn zeros(n_edges: usize, points: usize) -> Self {
        assert!(points >= 2, "a grid needs at least two nodes");
        Self { n_edges, points, values: vec![0.0; n_edges * points], p_norm: 2.0 }
    }

    pub fn from_fn(n_edges: usize, points: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut g = Self::zeros(n_edges, points);
        for j in 0..n_edges {
            for p in 0..points {
                let x = g.x(p);
                g.values[j * points + p] = f(j, x);
            }
        }
        g
    }

    pub fn from_values(n_edges: usize, points: usize, values: Vec<f64>) -> Result<Self> {
        if points < 2 || values.len() != n_edges * points {
            return Err(Error::Dimension(format!(
                "expected {n_edges} x {points} samples, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid function has non-finite entries".into()));
        }
        Ok(Self { n_edges, points, values, p_norm: 2.0 })
    }

    pub fn with_norm(mut self, p: f64) -> Self {
        self.p_norm = p;
        self
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.points - 1) as f64
    }

    pub fn x(&self, p: usize) -> f64 {
        p as f64 / (self.points - 1) as f64
    }

    pub fn edge(&self, j: usize) -> &[f64] {
        &self.values[j * self.points..(j + 1) * self.points]
    }

    pub fn edge_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.points..(j + 1) * self.points]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Piecewise-linear interpolation of edge `j` at `x` in `[0, 1]`.
    pub fn interpolate(&self, j: usize, x: f64) -> f64 {
        let e = self.edge(j);
        let s = x.clamp(0.0, 1.0) * (self.points - 1) as f64;
        let p = (s.floor() as usize).min(self.points - 2);
        let t = s - p as f64;
        if t == 0.0 {
            e[p]
        } else {
            (1.0 - t) * e[p] + t * e[p + 1]
        }
    }

    /// Trapezoid `L^p` norm over all edges.
    pub fn norm(&self) -> f64 {
        let p = self.p_norm;
        let total: f64 = (0..self.n_edges)
            .map(|j| {
                let powered: Vec<f64> = self.edge(j).iter().map(|v| v.abs().powf(p)).collect();
                trapezoid(&powered)
            })
            .sum();
        total.powf(1.0 / p)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Trapezoid pairing `sum_j int f_j g_j dx`.
    pub fn pairing(&self, other: &GridFunction) -> f64 {
        (0..self.n_edges)
            .map(|j| {
                let prod: Vec<f64> =
                    self.edge(j).iter().zip(other.edge(j)).map(|(a, b)| a * b).collect();
                trapezoid(&prod)
            })
            .sum()
    }
}

/// Piecewise-constant control samples: `samples[k]` acts on
/// `[k dt, (k + 1) dt)`; the last sample holds afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub dt: f64,
    pub samples: Vec<Vec<f64>>,
}

impl ControlSignal {
    pub fn new(dt: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::OutOfRange(format!("control time step {dt} must be positive")));
        }
        if let Some(first) = samples.first() {
            if samples.iter().any(|s| s.len() != first.len()) {
                return Err(Error::Dimension("control samples have different lengths".into()));
            }
        }
        Ok(Self { dt, samples })
    }

    pub fn zero(inputs: usize) -> Self {
        Self { dt: 1.0, samples: vec![vec![0.0; inputs]] }
    }

    pub fn constant(value: Vec<f64>) -> Self {
        Self { dt: 1.0, samples: vec![value] }
    }

    pub fn inputs(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.samples.iter().flatten().all(|&u| u >= 0.0)
    }

    pub fn at(&self, t: f64) -> &[f64] {
        if self.samples.is_empty() {
            return &[];
        }
        let k = if t <= 0.0 { 0 } else { (t / self.dt + 1e-9).floor() as usize };
        &self.samples[k.min(self.samples.len() - 1)]
    }
}

/// Recorded states of a simulation.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
}

impl Trajectory {
    pub fn positivity_violations(&self, floor: f64) -> usize {
        self.states.iter().map(|s| s.values().iter().filter(|&&v| v < -floor).count()).sum()
    }

    pub fn min_value(&self) -> f64 {
        self.states.iter().map(GridFunction::min).fold(f64::INFINITY, f64::min)
    }
}
