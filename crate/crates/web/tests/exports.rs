use browser_demo::{analyze, preset, simulate, szasz};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn presets_round_trip_through_analyze() {
    let cycle = preset("cycle3");
    let v = parse(&analyze(&cycle));
    assert_eq!(v["decision"], "controllable");
    assert_eq!(v["generator_count"], 3);
    assert!(parse(&preset("nope"))["error"].is_string());
}

#[test]
fn signed_heat_path_has_a_rechecked_certificate() {
    let mut s = parse(&preset("heat_path_signed"));
    s["discretization"]["points"] = 41.into();
    let v = parse(&analyze(&s.to_string()));
    assert_eq!(v["decision"], "not_controllable");
    assert_eq!(v["recheck"]["ok"], true);
}

#[test]
fn simulation_frames_are_thinned_and_positive() {
    let v = parse(&simulate(&preset("cycle3"), 1.0, 0.3, 20.0));
    let frames = v["frames"].as_array().unwrap();
    assert!(frames.len() <= 241);
    assert_eq!(frames[0].as_array().unwrap().len(), 3 * v["points"].as_u64().unwrap() as usize);
    assert!(v["min"].as_f64().unwrap() >= 0.0);
    let heat = parse(&simulate(&preset("heat_path"), 1.0, 0.5, 1.0));
    assert!(heat["max"].as_f64().unwrap() > 0.0);
    assert!(parse(&simulate("{", 1.0, 1.0, 1.0))["error"].is_string());
}

#[test]
fn szasz_errors_shrink() {
    let v = parse(&szasz("8, 32, 128", 1.0, 51));
    let e: Vec<f64> = v["errors"].as_array().unwrap().iter().map(|r| r["sup_error"].as_f64().unwrap()).collect();
    assert!(e[0] > e[1] && e[1] > e[2]);
    assert_eq!(v["x"].as_array().unwrap().len(), 51);
    assert!(parse(&szasz("8,x", 1.0, 51))["error"].is_string());
}
