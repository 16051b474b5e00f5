//! Solve `dy = (-y_t + 0.3 y_{t-1}) dt + 0.2 y_t dB^H_t` for a few drivers.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rough_delay::cocycle::DriverEnsemble;
use rough_delay::diffusion::{Profile, SeparableDiffusion};
use rough_delay::equation::EquationSpec;
use rough_delay::fbm::Hurst;
use rough_delay::solver::{constant_history, Solver, SolverOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = SeparableDiffusion::new(
        Profile::Linear,
        DMatrix::zeros(1, 1),
        vec![DMatrix::from_element(1, 1, 0.2)],
        vec![DMatrix::zeros(1, 1)],
    );
    let spec = EquationSpec::scalar_dde(-1.0, 0.3, 1.0)?.with_diffusion(Arc::new(g))?;
    let step = 1.0 / 64.0;
    let solver = Solver::new(&spec, step)?;
    let steps = solver.steps_for(10.0)?;
    let ensemble = DriverEnsemble::for_spec(&spec, Hurst::new(0.4)?, step, 10.0, 11, 4)?;
    let xi = constant_history(DVector::from_element(1, 1.0), solver.delay_steps(), 1);

    for i in 0..ensemble.len() {
        let sol = solver.run(&xi, &ensemble.driver(i)?, steps, &SolverOptions::default())?;
        let worst = sol.norm_log().iter().map(|s| s.controlled_norm).fold(0.0, f64::max);
        println!(
            "path {i}: y(5) = {:+.5}  y(10) = {:+.5}  max segment norm {worst:.3}",
            sol.value(steps as isize / 2)[0],
            sol.final_value()[0]
        );
    }
    Ok(())
}
