//! Median pathwise decay slope as the noise strength grows.

use rough_delay::equation::EquationDocument;
use rough_delay::fbm::Hurst;
use rough_delay::harness::stability_sweep;

const SPEC: &str = r#"{
  "dim": 1, "noise_dim": 1, "delay": 1.0,
  "drift": { "current": [-1.0], "memory": [0.3] },
  "measure": { "atoms": [{ "location": -1.0, "weight": [1.0] }] },
  "diffusion": { "profile": "linear", "current": [1.0] }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let doc: EquationDocument = serde_json::from_str(SPEC)?;
    let eps: Vec<f64> = (0..=5).map(|i| 0.2 * i as f64).collect();
    let table = stability_sweep(&doc, &eps, Hurst::new(0.4)?, 1.0 / 32.0, 30.0, 9, 16)?;
    println!("drift abscissa {:.4}", table.abscissa);
    println!("{:>8} {:>12} {:>8} {:>7}", "eps", "median", "aborted", "stable");
    for row in &table.rows {
        println!(
            "{:>8.2} {:>12.5} {:>8.3} {:>7}",
            row.epsilon,
            row.median_slope.unwrap_or(f64::NAN),
            row.abort_fraction,
            row.stable
        );
    }
    println!("largest stable eps {:?}, monotone {}", table.largest_stable_epsilon, table.monotone_trend);
    Ok(())
}
