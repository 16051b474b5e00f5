use std::sync::Arc;

use serde::Serialize;

use super::{config_err, runtime, HarnessError};
use crate::cocycle::{pathwise_decay_estimate, DriverEnsemble};
use crate::diffusion::SeparableDiffusion;
use crate::equation::EquationDocument;
use crate::fbm::Hurst;
use crate::solver::{constant_history, Solver};
use crate::spectrum::spectral_abscissa;

/// A row is stable when the median slope is negative and fewer than this
/// fraction of paths blew up.
pub const MAX_STABLE_ABORT_FRACTION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub median_slope: Option<f64>,
    pub abort_fraction: f64,
    pub completed: usize,
    pub aborted: usize,
    pub degenerate: usize,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Spectral abscissa of the drift alone.
    pub abscissa: f64,
    /// Largest ε such that every row up to it is stable.
    pub largest_stable_epsilon: Option<f64>,
    /// Median slopes do not decrease with ε by more than `trend_tolerance`
    /// (a row with a missing median counts as `+∞`).
    pub monotone_trend: bool,
    pub trend_tolerance: f64,
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["epsilon", "median_slope", "abort_fraction", "completed", "aborted", "degenerate", "stable"])
            .map_err(runtime)?;
        for r in &self.rows {
            w.write_record([
                format!("{}", r.epsilon),
                r.median_slope.map(|s| format!("{s}")).unwrap_or_default(),
                format!("{}", r.abort_fraction),
                r.completed.to_string(),
                r.aborted.to_string(),
                r.degenerate.to_string(),
                r.stable.to_string(),
            ])
            .map_err(runtime)?;
        }
        w.into_inner().map_err(runtime)
    }
}

/// Median pathwise decay slope as the diffusion of `doc` is scaled by each
/// ε. Every ε reuses the same driver ensemble, so differences between rows
/// come from ε alone.
///
/// Requires the drift to be exponentially stable.
pub fn stability_sweep(
    doc: &EquationDocument,
    epsilons: &[f64],
    hurst: Hurst,
    step: f64,
    horizon: f64,
    seed: u64,
    paths: usize,
) -> Result<SweepTable, HarnessError> {
    let base = doc.to_spec().map_err(config_err)?;
    let drift_only = base
        .with_diffusion(Arc::new(SeparableDiffusion::zero(base.dim, base.noise_dim)))
        .map_err(config_err)?;
    let abscissa = spectral_abscissa(&drift_only).map_err(runtime)?;
    if !(abscissa < 0.0) {
        return Err(config_err(format!("drift is not stable: spectral abscissa {abscissa}")));
    }
    let ensemble = DriverEnsemble::for_spec(&base, hurst, step, horizon, seed, paths).map_err(config_err)?;
    let k = Solver::new(&base, step).map_err(config_err)?.delay_steps();
    let xi = constant_history(doc.initial_value().map_err(config_err)?, k, base.noise_dim);
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut scaled = doc.clone();
        scaled.epsilon = Some(doc.epsilon.unwrap_or(1.0) * eps);
        let spec = scaled.to_spec().map_err(config_err)?;
        let summary = pathwise_decay_estimate(&spec, &xi, &ensemble, horizon).map_err(config_err)?;
        let completed = summary.paths.len() - summary.aborted - summary.degenerate;
        let abort_fraction = summary.abort_fraction();
        rows.push(SweepRow {
            epsilon: eps,
            median_slope: summary.median,
            abort_fraction,
            completed,
            aborted: summary.aborted,
            degenerate: summary.degenerate,
            stable: summary.median.is_some_and(|m| m < 0.0) && abort_fraction < MAX_STABLE_ABORT_FRACTION,
        });
    }
    let mut order: Vec<&SweepRow> = rows.iter().collect();
    order.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let largest_stable_epsilon = order.iter().take_while(|r| r.stable).last().map(|r| r.epsilon);
    let trend_tolerance = 0.1 * abscissa.abs();
    let slope = |r: &SweepRow| r.median_slope.unwrap_or(f64::INFINITY);
    let monotone_trend = order.windows(2).all(|w| slope(w[1]) >= slope(w[0]) - trend_tolerance);
    Ok(SweepTable {
        rows,
        abscissa,
        largest_stable_epsilon,
        monotone_trend,
        trend_tolerance,
    })
}
