//! Characteristic roots of `y' = a y(t) + b y(t-r)`, checked against the
//! decay rate of the deterministic solution semigroup.

use num_complex::Complex64;
use rough_delay::equation::EquationSpec;
use rough_delay::spectrum::{char_det, decay_rate_estimate, find_roots, spectral_report, Rect};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = 1.0;
    let spec = EquationSpec::scalar_dde(0.0, -0.5, r)?;
    let report = find_roots(&spec, Rect::new(-3.0, 1.0, -20.0, 20.0))?;
    println!("{} roots in the rectangle (winding {})", report.root_count(), report.winding);
    for root in report.roots.iter().take(6) {
        println!("  {:+.6} {:+.6}i   |det| = {:.1e}", root.re, root.im, root.residual);
    }

    let abscissa = spectral_report(&spec)?.abscissa.unwrap();
    let decay = decay_rate_estimate(&spec, 60.0 * r, r / 128.0)?;
    println!("spectral abscissa {abscissa:.6}, semigroup decay {decay:.6}");

    // b = -π/(2r) puts a root on the imaginary axis
    let critical = EquationSpec::scalar_dde(0.0, -std::f64::consts::FRAC_PI_2 / r, r)?;
    let z = Complex64::new(0.0, std::f64::consts::FRAC_PI_2 / r);
    println!("|det Δ(iπ/2r)| = {:.2e}", char_det(&critical, z).norm());
    Ok(())
}
