//! Prints the stability report for the frozen orbit at a chosen step size.
//!
//! Usage: cargo run --release --example report [step]

use octorbit::search::{OrbitSolution, SearchConfig};
use octorbit::stability::analyze;

fn main() {
    let step: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("step must be a number"))
        .unwrap_or(1e-4);
    let period = 0.527482;
    let sol = OrbitSolution {
        alpha: 2.698372,
        beta: 1.484464,
        tau: period / 12.0,
        period,
        period_t: 0.0,
        energy: -1.0,
    };
    let mut sc = SearchConfig::default();
    sc.integrator.step = step;
    let report = analyze(&sol, &sc).expect("analysis failed");
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}
