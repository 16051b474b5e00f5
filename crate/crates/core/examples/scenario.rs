//! Run a small TOML scenario twice and confirm the outputs are identical.

use std::fs;

use rough_delay::harness::run_scenario;

const SCENARIO: &str = r#"
name = "example"
seed = 21
out_dir = "out"

[equation]
dim = 1
noise_dim = 1
delay = 1.0
drift = { current = [-1.0], memory = [0.3] }
measure = { atoms = [{ location = -1.0, weight = [1.0] }] }
diffusion = { profile = "linear", current = [0.05] }

[[task]]
kind = "solve"
paths = 3
horizon = 4.0

[[task]]
kind = "spectrum"

[[task]]
kind = "lyapunov"
segments = 16
iters = 40
"#;

fn snapshot(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = dir.path().join("scenario.toml");
    fs::write(&config, SCENARIO)?;

    let first = run_scenario(&config)?;
    let before = snapshot(&first.out_dir);
    let second = run_scenario(&config)?;
    for task in &second.tasks {
        println!("{:>2} {:<10} {:?} -> {}", task.index, task.kind, task.status, task.output);
    }
    println!("byte-identical rerun: {}", before == snapshot(&second.out_dir));
    Ok(())
}
