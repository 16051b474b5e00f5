//! Compensated Riemann sums for `∫ ζ d𝐗` against a delayed rough path.

use nalgebra::DVector;
use thiserror::Error;

use crate::controlled::{ControlledSegment, DelayedControlledSegment, SegmentError};
use crate::lift::DelayedRoughPath;

#[derive(Debug, Error, PartialEq)]
pub enum IntegralError {
    #[error("time {0} is not on the driver grid")]
    Misaligned(f64),
    #[error("bounds [{a}, {b}] are reversed")]
    Reversed { a: f64, b: f64 },
    #[error("interval nodes [{from}, {to}] not covered by the integrand window [{start}, {end}]")]
    WindowMismatch { from: isize, to: isize, start: isize, end: isize },
    #[error("integrand delay {integrand} differs from the driver delay {driver}")]
    DelayMismatch { integrand: usize, driver: usize },
    #[error(transparent)]
    Segment(#[from] SegmentError),
}

/// Node offset from the driver origin of a grid-aligned time.
pub fn grid_offset(drp: &DelayedRoughPath, t: f64) -> Result<isize, IntegralError> {
    let k = t / drp.step();
    let r = k.round();
    if (k - r).abs() > 1e-9 * k.abs().max(1.0) || drp.node(r as isize).is_none() {
        return Err(IntegralError::Misaligned(t));
    }
    Ok(r as isize)
}

/// `ζ_{t_j} X_{t_j,t_{j+1}} + ζ⁰_{t_j} 𝕏_{t_j,t_{j+1}} + ζ¹_{t_j} 𝕏_{t_j,t_{j+1}}(-r)`
/// for absolute nodes `i < j` using local integrand index `l`.
fn germ(zeta: &DelayedControlledSegment, l: usize, drp: &DelayedRoughPath, i: usize, j: usize) -> DVector<f64> {
    let area = drp.area(i, j);
    let delayed = drp.delayed_area(i, j).expect("window checked against the delay");
    &zeta.zeta()[l] * drp.increment(i, j) + zeta.zeta0()[l].apply_area(&area) + zeta.zeta1()[l].apply_area(&delayed)
}

fn check_window(zeta: &DelayedControlledSegment, drp: &DelayedRoughPath, from: isize, to: isize) -> Result<usize, IntegralError> {
    if zeta.delay_steps() != drp.delay_steps() {
        return Err(IntegralError::DelayMismatch {
            integrand: zeta.delay_steps(),
            driver: drp.delay_steps(),
        });
    }
    if from < zeta.start() || to > zeta.end() {
        return Err(IntegralError::WindowMismatch {
            from,
            to,
            start: zeta.start(),
            end: zeta.end(),
        });
    }
    Ok(zeta.driver_base(drp)?)
}

/// Integral over node offsets `[from, to]`, returned as a controlled path
/// starting at zero with Gubinelli derivative `ζ`.
pub fn delayed_rough_integral_nodes(
    zeta: &DelayedControlledSegment,
    drp: &DelayedRoughPath,
    from: isize,
    to: isize,
) -> Result<ControlledSegment, IntegralError> {
    if from > to {
        return Err(IntegralError::Reversed {
            a: from as f64 * drp.step(),
            b: to as f64 * drp.step(),
        });
    }
    let base = check_window(zeta, drp, from, to)?;
    let offset = (from - zeta.start()) as usize;
    let n = zeta.zeta()[0].nrows();
    let len = (to - from) as usize + 1;
    let mut values = Vec::with_capacity(len);
    let mut acc = DVector::zeros(n);
    values.push(acc.clone());
    for j in 0..len - 1 {
        let (l, node) = (offset + j, base + offset + j);
        acc += germ(zeta, l, drp, node, node + 1);
        values.push(acc.clone());
    }
    let derivs = zeta.zeta()[offset..offset + len].to_vec();
    Ok(ControlledSegment::new(from, values, derivs)?)
}

/// `t ↦ ∫_a^t ζ d𝐗` on `[a, b]`, summed over consecutive grid cells.
pub fn delayed_rough_integral(
    zeta: &DelayedControlledSegment,
    drp: &DelayedRoughPath,
    a: f64,
    b: f64,
) -> Result<ControlledSegment, IntegralError> {
    if a > b {
        return Err(IntegralError::Reversed { a, b });
    }
    delayed_rough_integral_nodes(zeta, drp, grid_offset(drp, a)?, grid_offset(drp, b)?)
}

/// `|∫_s^t ζ d𝐗 - ζ_s X_{s,t} - ζ⁰_s 𝕏_{s,t} - ζ¹_s 𝕏_{s,t}(-r)|` between
/// node offsets.
pub fn local_expansion_residual_nodes(
    zeta: &DelayedControlledSegment,
    drp: &DelayedRoughPath,
    s: isize,
    t: isize,
) -> Result<f64, IntegralError> {
    let integral = delayed_rough_integral_nodes(zeta, drp, s, t)?;
    let base = zeta.driver_base(drp)?;
    let l = (s - zeta.start()) as usize;
    let total = integral.values().last().expect("non-empty");
    Ok((total - germ(zeta, l, drp, base + l, base + l + (t - s) as usize)).norm())
}

pub fn local_expansion_residual(zeta: &DelayedControlledSegment, drp: &DelayedRoughPath, s: f64, t: f64) -> Result<f64, IntegralError> {
    local_expansion_residual_nodes(zeta, drp, grid_offset(drp, s)?, grid_offset(drp, t)?)
}

/// First-order Riemann sum `Σ ζ_{t_j} X_{t_j,t_{j+1}}`, for comparison with
/// Young integration.
pub fn riemann_sum_nodes(zeta: &DelayedControlledSegment, drp: &DelayedRoughPath, from: isize, to: isize) -> Result<DVector<f64>, IntegralError> {
    let base = check_window(zeta, drp, from, to)?;
    let offset = (from - zeta.start()) as usize;
    let mut acc = DVector::zeros(zeta.zeta()[0].nrows());
    for j in 0..(to - from).max(0) as usize {
        let node = base + offset + j;
        acc += &zeta.zeta()[offset + j] * drp.cell_increment(node);
    }
    Ok(acc)
}
