//! Compare the tangent (variational) solution with a finite difference of
//! two nonlinear solves.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rough_delay::cocycle::DriverEnsemble;
use rough_delay::controlled::ControlledSegment;
use rough_delay::diffusion::{Profile, SeparableDiffusion};
use rough_delay::equation::EquationSpec;
use rough_delay::fbm::Hurst;
use rough_delay::solver::{constant_history, directional_derivative, solve};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = SeparableDiffusion::new(
        Profile::Tanh,
        DMatrix::from_element(1, 1, 0.1),
        vec![DMatrix::from_element(1, 1, 0.5)],
        vec![DMatrix::from_element(1, 1, 0.3)],
    );
    let spec = EquationSpec::scalar_dde(-0.5, 0.4, 1.0)?.with_diffusion(Arc::new(g))?;
    let (step, horizon) = (1.0 / 64.0, 2.0);
    let drp = DriverEnsemble::for_spec(&spec, Hurst::new(0.4)?, step, horizon, 5, 1)?.driver(0)?;
    let k = spec.delay_steps(step)?;
    let xi = constant_history(DVector::from_element(1, 0.7), k, 1);
    let direction = ControlledSegment::from_smooth(
        -(k as isize),
        (0..=k).map(|i| DVector::from_element(1, (i as f64 * step).cos())).collect(),
        1,
    )?;

    let tangent = directional_derivative(&spec, &xi, &drp, horizon, &direction)?;
    let eps = 1e-6;
    let plus = solve(&spec, &xi.axpy(eps, &direction), &drp, horizon)?;
    let minus = solve(&spec, &xi.axpy(-eps, &direction), &drp, horizon)?;
    let fd = (plus.final_value() - minus.final_value()) / (2.0 * eps);
    println!("tangent  D_xi y(2) = {:.8}", tangent.final_value()[0]);
    println!("central difference = {:.8}", fd[0]);
    Ok(())
}
