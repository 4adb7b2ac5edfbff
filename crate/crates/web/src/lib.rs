//! WebAssembly bindings for the browser demo. Every export takes and returns
//! JSON text; failures come back as `{"error": "..."}`.

use posnet::appendix::{mirakjan_table, sup_errors};
use posnet::cli::run_analyze;
use posnet::heat::{heat_simulate_mild, SpectralBasis};
use posnet::scenario::Kind;
use posnet::{ControlSignal, GridFunction, Mode, Scenario};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_FRAMES: usize = 240;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn parse(text: &str) -> Result<Scenario, String> {
    Scenario::from_json(text).map_err(|e| e.to_string())
}

/// Built-in scenario by name, pretty-printed.
pub fn preset_json(name: &str) -> Result<Value, String> {
    let scenario = match name {
        "cycle3" => Scenario::cycle(3, 1.0),
        "cycle6" => Scenario::cycle(6, 1.0),
        "heat_path" => Scenario::heat_path(1.0, Mode::Positive),
        "heat_path_signed" => Scenario::heat_path(-1.0, Mode::ControlConstrained),
        other => return Err(format!("unknown preset `{other}`")),
    };
    serde_json::to_value(&scenario).map_err(|e| e.to_string())
}

/// Verdict plus the generator count.
pub fn analyze_json(text: &str) -> Result<Value, String> {
    let scenario = parse(text)?;
    let verdict = run_analyze(&scenario).map_err(|e| e.to_string())?;
    let mut v = serde_json::to_value(&verdict).map_err(|e| e.to_string())?;
    v["generator_count"] = json!(verdict.generators.len());
    v["recheck"] = match verdict.recheck() {
        Ok(p) => json!({ "ok": true, "worst_pairing": p }),
        Err(e) if verdict.report.as_ref().is_some_and(|r| r.verdict) => json!({ "ok": true, "note": e }),
        Err(e) => json!({ "ok": false, "note": e }),
    };
    Ok(v)
}

/// Simulation from rest under the control `amplitude` on `[0, pulse)` and
/// zero afterwards. Frames are thinned to at most 240.
pub fn simulate_json(text: &str, amplitude: f64, pulse: f64, t_final: f64) -> Result<Value, String> {
    let scenario = parse(text)?;
    if !(amplitude.is_finite() && pulse > 0.0 && t_final > 0.0 && t_final <= 50.0) {
        return Err("need a finite amplitude, pulse > 0 and 0 < t_final <= 50".into());
    }
    let points = scenario.discretization.points.min(101);
    let inputs = scenario.control.matrix.first().map_or(0, Vec::len);
    let u = ControlSignal::new(pulse, vec![vec![amplitude; inputs], vec![0.0; inputs]]).map_err(|e| e.to_string())?;
    let (times, states, tail) = match scenario.kind {
        Kind::Transport => {
            let sys = scenario.transport().map_err(|e| e.to_string())?;
            let dt = sys.exact_step(points).map_err(|e| e.to_string())?;
            let f0 = GridFunction::zeros(sys.n_edges(), points);
            let traj = sys.simulate_mild(&f0, &u, t_final, dt, false).map_err(|e| e.to_string())?;
            (traj.times, traj.states, None)
        }
        Kind::Heat => {
            let net = scenario.heat().map_err(|e| e.to_string())?;
            let basis = SpectralBasis::new(scenario.discretization.modes, points).map_err(|e| e.to_string())?;
            let h0 = GridFunction::zeros(net.n_edges(), points);
            let run = heat_simulate_mild(&net, &basis, &h0, &u, t_final, 0.01).map_err(|e| e.to_string())?;
            (run.trajectory.times, run.trajectory.states, Some(run.tail))
        }
    };
    let stride = states.len().div_ceil(MAX_FRAMES).max(1);
    let keep: Vec<usize> = (0..states.len()).filter(|i| i % stride == 0 || *i == states.len() - 1).collect();
    let min = states.iter().map(GridFunction::min).fold(f64::INFINITY, f64::min);
    let max = states.iter().flat_map(|s| s.values().iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({
        "edges": states[0].n_edges(),
        "points": points,
        "times": keep.iter().map(|&i| times[i]).collect::<Vec<_>>(),
        "frames": keep.iter().map(|&i| states[i].values().to_vec()).collect::<Vec<_>>(),
        "min": min,
        "max": max,
        "tail": tail,
    }))
}

/// `M_n f` for `f(x) = x` at each order, with sup errors.
pub fn szasz_json(orders: &[usize], v: f64, points: usize) -> Result<Value, String> {
    if orders.is_empty() || orders.len() > 12 || orders.iter().any(|&n| n == 0 || n > 4096) {
        return Err("give 1 to 12 orders between 1 and 4096".into());
    }
    let points = points.clamp(2, 401);
    let rows = mirakjan_table(orders, v, points, &|x| x).map_err(|e| e.to_string())?;
    let curves: Vec<Value> = orders
        .iter()
        .map(|&n| json!({ "n": n, "values": rows.iter().filter(|r| r.n == n).map(|r| r.approx).collect::<Vec<_>>() }))
        .collect();
    let x: Vec<f64> = rows.iter().take(points).map(|r| r.x).collect();
    let errors: Vec<Value> = sup_errors(&rows).into_iter().map(|(n, e)| json!({ "n": n, "sup_error": e })).collect();
    Ok(json!({ "x": x, "curves": curves, "errors": errors }))
}

#[wasm_bindgen]
pub fn preset(name: &str) -> String {
    respond(preset_json(name))
}

#[wasm_bindgen]
pub fn analyze(scenario: &str) -> String {
    respond(analyze_json(scenario))
}

#[wasm_bindgen]
pub fn simulate(scenario: &str, amplitude: f64, pulse: f64, t_final: f64) -> String {
    respond(simulate_json(scenario, amplitude, pulse, t_final))
}

#[wasm_bindgen]
pub fn szasz(orders: &str, v: f64, points: usize) -> String {
    let parsed: Result<Vec<usize>, String> = orders
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("`{s}` is not an order")))
        .collect();
    respond(parsed.and_then(|o| szasz_json(&o, v, points)))
}
