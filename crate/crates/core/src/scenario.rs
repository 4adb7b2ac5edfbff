//! JSON scenario files. Vertex indices are 1-based in files and 0-based in
//! the library.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::controllability::{Mode, ProbeSettings};
use crate::graph::{Edge, NetworkGraph};
use crate::heat::{HeatNetwork, DEFAULT_MODES, DEFAULT_POINTS};
use crate::matrix::PositiveMatrix;
use crate::transport::{TransportSystem, Velocity};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Transport,
    Heat,
}

/// How `params.absorption` is read for transport: `damping` values `q >= 0`
/// enter the equation as `-q`; `signed` values enter as given.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionSign {
    #[default]
    Damping,
    Signed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: usize,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub matrix: Vec<Vec<f64>>,
    pub positive: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Velocity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusivity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorption: Option<Vec<f64>>,
    #[serde(default)]
    pub absorption_sign: AbsorptionSign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSpec {
    /// Grid nodes per edge.
    pub points: usize,
    /// Highest cosine mode retained.
    pub modes: usize,
    /// Velocity nodes for kinetic kernels.
    pub velocity_points: usize,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        Self { points: DEFAULT_POINTS, modes: DEFAULT_MODES, velocity_points: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<MatrixSpec>,
    pub params: Params,
    pub control: ControlSpec,
    #[serde(default)]
    pub discretization: DiscretizationSpec,
    #[serde(default)]
    pub probe: ProbeSettings,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { path: path.into(), message: message.into() });
    }
}

fn matrix_shape(c: &mut Collector, path: &str, m: &[Vec<f64>], rows: usize, cols: Option<usize>) {
    if m.len() != rows {
        c.push(path, format!("expected {rows} rows, found {}", m.len()));
        return;
    }
    let width = cols.unwrap_or_else(|| m.first().map_or(0, Vec::len));
    if width == 0 {
        c.push(path, "matrix needs at least one column");
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != width {
            c.push(format!("{path}[{i}]"), format!("expected {width} entries, found {}", row.len()));
        }
        for (l, v) in row.iter().enumerate() {
            if !v.is_finite() {
                c.push(format!("{path}[{i}][{l}]"), "entry must be finite");
            }
        }
    }
}

fn first_negative(m: &[Vec<f64>]) -> Option<(usize, usize, f64)> {
    m.iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().enumerate().map(move |(l, &v)| (i, l, v)))
        .find(|&(_, _, v)| v < 0.0)
}

fn positive_vector(c: &mut Collector, path: &str, v: Option<&Vec<f64>>, len: usize, strict: bool) {
    let Some(v) = v else {
        c.push(path, "field is required");
        return;
    };
    if v.len() != len {
        c.push(path, format!("expected {len} entries, found {}", v.len()));
    }
    for (j, x) in v.iter().enumerate() {
        let ok = x.is_finite() && if strict { *x > 0.0 } else { *x >= 0.0 };
        if !ok {
            c.push(format!("{path}[{j}]"), format!("{x} must be {}", if strict { "positive" } else { "nonnegative" }));
        }
    }
}

fn to_dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, cols, |i, l| m[i][l])
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| Error::Scenario { path: "$".into(), message: e.to_string() })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Every schema and invariant violation, with field paths.
    pub fn violations(&self) -> Vec<Violation> {
        let mut c = Collector(Vec::new());
        let d = &self.discretization;
        if d.points < 2 {
            c.push("discretization.points", "need at least two grid nodes");
        }
        if d.velocity_points == 0 {
            c.push("discretization.velocity_points", "need at least one velocity node");
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                c.push("tol", "tolerance must be positive");
            }
        }
        if self.probe.mu_count == Some(0) {
            c.push("probe.mu_count", "need at least one frequency sample");
        }
        if self.probe.mu_min.is_some_and(|m| !m.is_finite()) {
            c.push("probe.mu_min", "must be finite");
        }
        match self.kind {
            Kind::Transport => self.transport_violations(&mut c),
            Kind::Heat => self.heat_violations(&mut c),
        }
        if self.control.positive || self.mode == Mode::Positive {
            if let Some((i, l, v)) = first_negative(&self.control.matrix) {
                c.push(format!("control.matrix[{i}][{l}]"), format!("{v} violates the positivity constraint"));
            }
        }
        if self.mode == Mode::Positive && !self.control.positive {
            c.push("control.positive", "positive mode needs a control marked positive");
        }
        c.0
    }

    fn transport_violations(&self, c: &mut Collector) {
        if self.coupling.is_some() {
            c.push("coupling", "transport scenarios take a graph, not a coupling matrix");
        }
        if self.params.diffusivity.is_some() {
            c.push("params.diffusivity", "not a transport parameter");
        }
        let Some(g) = &self.graph else {
            c.push("graph", "field is required for transport");
            return;
        };
        if g.vertices == 0 {
            c.push("graph.vertices", "need at least one vertex");
        }
        if g.edges.is_empty() {
            c.push("graph.edges", "need at least one edge");
        }
        let mut sums = vec![0.0; g.vertices];
        for (j, e) in g.edges.iter().enumerate() {
            for (name, v) in [("tail", e.tail), ("head", e.head)] {
                if v == 0 || v > g.vertices {
                    c.push(format!("graph.edges[{j}].{name}"), format!("vertex {v} outside 1..={}", g.vertices));
                }
            }
            if !(e.weight > 0.0 && e.weight <= 1.0) {
                c.push(format!("graph.edges[{j}].weight"), format!("{} must lie in (0, 1]", e.weight));
            } else if (1..=g.vertices).contains(&e.tail) {
                sums[e.tail - 1] += e.weight;
            }
        }
        for (i, s) in sums.iter().enumerate() {
            if *s > 0.0 && (s - 1.0).abs() > 1e-12 {
                c.push("graph.edges", format!("outgoing weights of vertex {} sum to {s}", i + 1));
            }
        }
        let m = g.edges.len();
        match &self.params.velocity {
            None => c.push("params.velocity", "field is required for transport"),
            Some(Velocity::Single(v)) => {
                if !(*v > 0.0 && v.is_finite()) {
                    c.push("params.velocity", format!("{v} must be positive"));
                }
            }
            Some(Velocity::PerEdge(vs)) => positive_vector(c, "params.velocity", Some(vs), m, true),
        }
        if let Some(q) = &self.params.absorption {
            let strict = false;
            match self.params.absorption_sign {
                AbsorptionSign::Damping => positive_vector(c, "params.absorption", Some(q), m, strict),
                AbsorptionSign::Signed => {
                    if q.len() != m || q.iter().any(|x| !x.is_finite()) {
                        c.push("params.absorption", format!("expected {m} finite entries"));
                    }
                }
            }
        }
        matrix_shape(c, "control.matrix", &self.control.matrix, g.vertices, None);
        if let Some((i, l, v)) = first_negative(&self.control.matrix) {
            if !self.control.positive && self.mode != Mode::Positive {
                c.push(format!("control.matrix[{i}][{l}]"), format!("{v}: transport controls act through nonnegative K"));
            }
        }
    }

    fn heat_violations(&self, c: &mut Collector) {
        if self.graph.is_some() {
            c.push("graph", "heat scenarios take a coupling matrix, not a graph");
        }
        if self.params.velocity.is_some() {
            c.push("params.velocity", "not a heat parameter");
        }
        let Some(b) = &self.coupling else {
            c.push("coupling", "field is required for heat");
            return;
        };
        let m = b.matrix.len();
        if m == 0 {
            c.push("coupling.matrix", "need at least one edge");
            return;
        }
        matrix_shape(c, "coupling.matrix", &b.matrix, m, Some(m));
        positive_vector(c, "params.diffusivity", self.params.diffusivity.as_ref(), m, true);
        positive_vector(c, "params.absorption", self.params.absorption.as_ref(), m, true);
        if self.params.absorption_sign != AbsorptionSign::Damping {
            c.push("params.absorption_sign", "heat absorption is a damping constant");
        }
        matrix_shape(c, "control.matrix", &self.control.matrix, m, None);
        if self.mode == Mode::Positive {
            if let Some((i, l, v)) = first_negative(&b.matrix) {
                c.push(format!("coupling.matrix[{i}][{l}]"), format!("{v}: positive mode needs a nonnegative coupling"));
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Scenario { path: v.path, message: v.message }),
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(match self.kind {
            Kind::Transport => crate::cone::DEFAULT_TOL,
            Kind::Heat => crate::cone::DEFAULT_GRID_TOL,
        })
    }

    pub fn transport(&self) -> Result<TransportSystem> {
        self.validate()?;
        let g = self.graph.as_ref().ok_or_else(|| Error::Scenario {
            path: "graph".into(),
            message: "not a transport scenario".into(),
        })?;
        let edges = g.edges.iter().map(|e| Edge::new(e.tail - 1, e.head - 1, e.weight)).collect();
        let graph = NetworkGraph::new(g.vertices, edges)?;
        let m = graph.n_edges();
        let absorption = match (&self.params.absorption, self.params.absorption_sign) {
            (None, _) => vec![0.0; m],
            (Some(q), AbsorptionSign::Damping) => q.iter().map(|v| -v).collect(),
            (Some(q), AbsorptionSign::Signed) => q.clone(),
        };
        let velocity = self.params.velocity.clone().unwrap_or(Velocity::Single(1.0));
        let k = PositiveMatrix::new(to_dmatrix(&self.control.matrix))?;
        TransportSystem::new(graph, velocity, absorption, k)
    }

    pub fn heat(&self) -> Result<HeatNetwork> {
        self.validate()?;
        let b = self.coupling.as_ref().ok_or_else(|| Error::Scenario {
            path: "coupling".into(),
            message: "not a heat scenario".into(),
        })?;
        HeatNetwork::new(
            self.params.diffusivity.clone().unwrap_or_default(),
            self.params.absorption.clone().unwrap_or_default(),
            to_dmatrix(&b.matrix),
            to_dmatrix(&self.control.matrix),
        )
    }

    /// Directed `n`-cycle, unit velocity, control `b` at vertex 1.
    pub fn cycle(n: usize, b: f64) -> Self {
        let mut k = vec![vec![0.0]; n];
        k[0][0] = b;
        Self {
            kind: Kind::Transport,
            graph: Some(GraphSpec {
                vertices: n,
                edges: (1..=n).map(|i| EdgeSpec { tail: i, head: i % n + 1, weight: 1.0 }).collect(),
            }),
            coupling: None,
            params: Params { velocity: Some(Velocity::Single(1.0)), ..Params::default() },
            control: ControlSpec { matrix: k, positive: b >= 0.0 },
            discretization: DiscretizationSpec::default(),
            probe: ProbeSettings::default(),
            mode: Mode::Positive,
            tol: None,
        }
    }

    /// Three heat equations in series with unit constants and control `b` on edge 1.
    pub fn heat_path(b: f64, mode: Mode) -> Self {
        Self {
            kind: Kind::Heat,
            graph: None,
            coupling: Some(MatrixSpec {
                matrix: vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            }),
            params: Params {
                diffusivity: Some(vec![1.0; 3]),
                absorption: Some(vec![1.0; 3]),
                ..Params::default()
            },
            control: ControlSpec { matrix: vec![vec![b], vec![0.0], vec![0.0]], positive: b >= 0.0 },
            discretization: DiscretizationSpec::default(),
            probe: ProbeSettings::default(),
            mode,
            tol: None,
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text).map_err(|e| match e {
        Error::Scenario { path: field, message } => Error::Scenario {
            path: field,
            message: format!("{message} (in {})", path.display()),
        },
        other => other,
    })
}

pub fn write_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    std::fs::write(path, scenario.to_json()?)?;
    Ok(())
}
