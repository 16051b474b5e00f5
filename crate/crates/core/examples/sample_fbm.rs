//! Draw fBm paths and compare the empirical variance of `B_t` with `t^{2H}`.

use rough_delay::fbm::{FbmSampler, Hurst, UniformGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hurst = Hurst::new(0.4)?;
    let grid = UniformGrid::from_span(1.0 / 128.0, 0.5, 2.0)?;
    let sampler = FbmSampler::new(grid.clone(), hurst, 1)?;
    let paths = sampler.sample(42, 4000);

    println!("{:>6} {:>10} {:>10}", "t", "var", "t^2H");
    for t in [-0.5, 0.25, 1.0, 2.0] {
        let k = grid.index_of(t).expect("on grid");
        let var = paths.iter().map(|p| p.value(k)[0].powi(2)).sum::<f64>() / paths.len() as f64;
        println!("{t:>6} {var:>10.4} {:>10.4}", t.abs().powf(2.0 * hurst.value()));
    }
    Ok(())
}
