//! Integrate `sin(X_t) cos(X_{t-r})` against a delayed fBm lift and watch the
//! local expansion residual shrink faster than the interval.

use nalgebra::{DMatrix, DVector};
use rough_delay::controlled::{compose_with_g, ControlledSegment};
use rough_delay::diffusion::FiniteDifferenceMap;
use rough_delay::fbm::{FbmSampler, Hurst, UniformGrid};
use rough_delay::integral::{delayed_rough_integral, local_expansion_residual_nodes, riemann_sum_nodes};
use rough_delay::lift::{lift_piecewise_linear, DelayedRoughPath};

fn driver(drp: &DelayedRoughPath, start: isize, len: usize) -> ControlledSegment {
    let values = (0..len).map(|i| drp.value(drp.node(start + i as isize).unwrap())).collect();
    ControlledSegment::new(start, values, vec![DMatrix::identity(1, 1); len]).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (h, k, n) = (1.0 / 1024.0, 256, 1024);
    let path = FbmSampler::new(UniformGrid::new(h, k, n)?, Hurst::new(0.4)?, 1)?.sample_path(3, 0);
    let drp = lift_piecewise_linear(&path, k)?;
    let g = FiniteDifferenceMap::new(1, 1, |x: &DVector<f64>, y: &DVector<f64>| {
        DMatrix::from_element(1, 1, x[0].sin() * y[0].cos())
    });
    let zeta = compose_with_g(&driver(&drp, 0, n + 1), &driver(&drp, -(k as isize), n + 1), &g, k)?;

    let integral = delayed_rough_integral(&zeta, &drp, 0.0, 1.0)?;
    let riemann = riemann_sum_nodes(&zeta, &drp, 0, n as isize)?;
    println!("rough integral over [0,1] = {:.6}", integral.values().last().unwrap()[0]);
    println!("left Riemann sum          = {:.6}", riemann[0]);

    println!("{:>8} {:>12}", "cells", "residual");
    for cells in [4, 16, 64, 256] {
        let r = local_expansion_residual_nodes(&zeta, &drp, 100, 100 + cells)?;
        println!("{cells:>8} {r:>12.3e}");
    }
    Ok(())
}
