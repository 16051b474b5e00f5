//! Lift one fBm path with its delayed Lévy area, check Chen's relation and
//! report the Hölder norms of the lift.

use rough_delay::fbm::{FbmSampler, Hurst, UniformGrid};
use rough_delay::lift::lift_piecewise_linear;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 1.0 / 512.0;
    let k = 128; // r = 0.25
    let grid = UniformGrid::new(h, k, 512)?;
    let path = FbmSampler::new(grid, Hurst::new(0.4)?, 2)?.sample_path(7, 0);
    let mut drp = lift_piecewise_linear(&path, k)?;

    let o = drp.origin();
    let area = drp.area(o, o + 256);
    let delayed = drp.delayed_area(o, o + 256).expect("history covers the delay");
    println!("X_(0,0.5)        = {:?}", drp.increment(o, o + 256).as_slice());
    println!("area (0,0.5)     = {:?}", area.as_slice());
    println!("delayed area     = {:?}", delayed.as_slice());

    drp.materialize_pairs(o, o + 512)?;
    println!("Chen residual    = {:.3e}", drp.validate_chen());
    let norms = drp.holder_norms(0.35)?;
    println!("Hölder norms     = {norms:?}");

    // shifting moves the origin only
    let shifted = drp.shift(64)?;
    println!("shifted origin   = {} (was {})", shifted.origin(), drp.origin());
    Ok(())
}
