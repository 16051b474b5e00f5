//! Leading Lyapunov exponents of the linearized cocycle, deterministic and
//! with linear multiplicative fBm noise.

use std::sync::Arc;

use nalgebra::DMatrix;
use rough_delay::cocycle::{lyapunov_spectrum, DriverEnsemble, Linearization, LyapunovOptions};
use rough_delay::diffusion::{Profile, SeparableDiffusion};
use rough_delay::equation::EquationSpec;
use rough_delay::fbm::Hurst;
use rough_delay::spectrum::spectral_report;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = EquationSpec::scalar_dde(0.0, -0.5, 1.0)?;
    let m = 32;
    let step = spec.delay / m as f64;
    let opts = LyapunovOptions {
        exponents: 3,
        iterations: 100,
        ..LyapunovOptions::default()
    };
    let steps = (opts.burn_in + opts.iterations) * m;
    let drp = DriverEnsemble::new(Hurst::new(0.4)?, 1, step, m, steps, 1, 1)?.driver(0)?;

    let report = lyapunov_spectrum(&spec, &drp, &Linearization::ZeroStationary, &opts)?;
    let roots = spectral_report(&spec)?;
    println!("deterministic exponents {:?}", report.exponents);
    println!("rightmost root real part {:?}", roots.abscissa);

    let g = SeparableDiffusion::new(
        Profile::Linear,
        DMatrix::zeros(1, 1),
        vec![DMatrix::from_element(1, 1, 0.1)],
        vec![DMatrix::zeros(1, 1)],
    );
    let noisy = spec.with_diffusion(Arc::new(g))?;
    let report = lyapunov_spectrum(&noisy, &drp, &Linearization::ZeroStationary, &opts)?;
    println!("noisy exponents {:?} ± {:?}", report.exponents, report.stderr);
    Ok(())
}
