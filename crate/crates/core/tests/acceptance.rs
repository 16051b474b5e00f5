//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the lines appear in plain
//! `cargo test` output.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rough_delay::cocycle::{
    cocycle_apply, lyapunov_spectrum, pathwise_decay_estimate, DriverEnsemble, Linearization, LyapunovOptions,
    SegmentState,
};
use rough_delay::controlled::{compose_with_g, ControlledSegment};
use rough_delay::diffusion::{Profile, SeparableDiffusion};
use rough_delay::equation::{DelayAtom, DensityPiece, EquationSpec, LinearDrift, SignedDelayMeasure};
use rough_delay::fbm::{FbmSampler, Hurst, UniformGrid};
use rough_delay::harness::run_scenario;
use rough_delay::integral::local_expansion_residual_nodes;
use rough_delay::lift::{lift_piecewise_linear, DelayedRoughPath, PairAreas};
use rough_delay::solver::{constant_history, directional_derivative, solve};
use rough_delay::spectrum::{char_det, decay_rate_estimate, find_roots, semigroup_apply, spectral_abscissa, Rect};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fbm_lift(hurst: f64, dim: usize, h: f64, left: usize, right: usize, k: usize, seed: u64, idx: u64) -> DelayedRoughPath {
    let grid = UniformGrid::new(h, left, right).unwrap();
    let path = FbmSampler::new(grid, Hurst::new(hurst).unwrap(), dim).unwrap().sample_path(seed, idx);
    lift_piecewise_linear(&path, k).unwrap()
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

fn scalar_g(profile: Profile, constant: f64, current: f64, delayed: f64) -> Arc<SeparableDiffusion> {
    Arc::new(SeparableDiffusion::new(
        profile,
        DMatrix::from_element(1, 1, constant),
        vec![DMatrix::from_element(1, 1, current)],
        vec![DMatrix::from_element(1, 1, delayed)],
    ))
}

/// Areas of the piecewise-linear path straight from the segment geometry:
/// on a linear piece the integrand is linear, so the midpoint rule is exact.
fn oracle_areas(drp: &DelayedRoughPath, i: usize, j: usize) -> PairAreas {
    let d = drp.dim();
    let k = drp.delay_steps();
    let x = |n: usize| drp.base().value(n).to_vec();
    let mut area = DMatrix::zeros(d, d);
    let mut delayed = (i >= k).then(|| DMatrix::zeros(d, d));
    for m in i..j {
        let (a0, a1) = (x(m), x(m + 1));
        for p in 0..d {
            for q in 0..d {
                area[(p, q)] += (0.5 * (a0[p] + a1[p]) - x(i)[p]) * (a1[q] - a0[q]);
            }
        }
        if let Some(del) = delayed.as_mut() {
            let (b0, b1) = (x(m - k), x(m + 1 - k));
            for p in 0..d {
                for q in 0..d {
                    del[(p, q)] += (0.5 * (b0[p] + b1[p]) - x(i - k)[p]) * (a1[q] - a0[q]);
                }
            }
        }
    }
    PairAreas { area, delayed }
}

fn criterion_1() -> Outcome {
    let hursts = [0.35, 0.4, 0.45, 0.5];
    let worst = (0..100u64)
        .into_par_iter()
        .map(|p| {
            let h = 1.0 / 512.0;
            let k = 64;
            let mut drp = fbm_lift(hursts[p as usize % 4], 2, h, k, 512, k, 1000, p);
            let mut rng = ChaCha8Rng::seed_from_u64(p);
            let n = drp.nodes();
            for _ in 0..20 {
                let i = rng.random_range(0..n - 2);
                let j = rng.random_range(i + 2..n);
                drp.set_pair_areas(i, j, oracle_areas(&drp, i, j));
            }
            drp.validate_chen()
        })
        .reduce(|| 0.0, f64::max);
    check(worst < 1e-10, format!("max relative Chen residual {worst:.2e} over 100 lifts (< 1e-10)"))
}

/// Mean of the delayed area diagonal over `(0, 0.5)` with `r = 0.25`.
fn levy_mean(hurst: f64, paths: u64) -> (Vec<f64>, Vec<f64>) {
    let (h, k, right) = (1.0 / 512.0, 128, 256);
    let grid = UniformGrid::new(h, k, right).unwrap();
    let sampler = FbmSampler::new(grid, Hurst::new(hurst).unwrap(), 2).unwrap();
    let samples: Vec<[f64; 2]> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let drp = lift_piecewise_linear(&sampler.sample_path(2024, p), k).unwrap();
            let o = drp.origin();
            let a = drp.delayed_area(o, o + right).unwrap();
            [a[(0, 0)], a[(1, 1)]]
        })
        .collect();
    let n = paths as f64;
    (0..2)
        .map(|c| {
            let mean = samples.iter().map(|s| s[c]).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .unzip()
}

fn criterion_2() -> Outcome {
    let (r, t) = (0.25f64, 0.5f64);
    let mut lines = Vec::new();
    let mut ok = true;
    for hurst in [0.4, 0.5] {
        let target = -hurst * r.powf(2.0 * hurst - 1.0) * t + 0.5 * ((t + r).powf(2.0 * hurst) - r.powf(2.0 * hurst));
        let (means, ses) = levy_mean(hurst, 20_000);
        for c in 0..2 {
            let z = (means[c] - target) / ses[c];
            ok &= z.abs() < 4.0;
            lines.push(format!("H={hurst} [{c}{c}] mean {:.5} target {target:.5} z={z:.2}", means[c]));
        }
    }
    check(ok, lines.join("; "))
}

fn criterion_3() -> Outcome {
    let hurst = 0.4;
    let (h, k) = (1.0 / 1024.0, 256);
    let grid = UniformGrid::new(h, k, 128).unwrap();
    let sampler = FbmSampler::new(grid, Hurst::new(hurst).unwrap(), 1).unwrap();
    let cells = [8usize, 16, 32, 64, 128];
    let samples: Vec<Vec<f64>> = (0..4000u64)
        .into_par_iter()
        .map(|p| {
            let drp = lift_piecewise_linear(&sampler.sample_path(77, p), k).unwrap();
            let o = drp.origin();
            cells.iter().map(|&c| drp.delayed_area(o, o + c).unwrap()[(0, 0)]).collect()
        })
        .collect();
    let n = samples.len() as f64;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (i, &c) in cells.iter().enumerate() {
        let mean = samples.iter().map(|s| s[i]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        lx.push((c as f64 * h).ln());
        ly.push(var.ln());
    }
    let slope = fit_slope(&lx, &ly);
    check(
        (slope - 4.0 * hurst).abs() <= 0.3,
        format!("variance slope {slope:.3}, expected 4H = {:.1} ± 0.3", 4.0 * hurst),
    )
}

fn criterion_4() -> Outcome {
    let (beta, gamma) = (0.35, 0.35);
    let (h, k, n) = (1.0 / 1024.0, 128, 512);
    let g = SeparableDiffusion::new(
        Profile::Tanh,
        DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, -0.2]),
        vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 0.3]), DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 1.0, -0.4])],
        vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.2]), DMatrix::from_row_slice(2, 2, &[0.0, 0.7, -0.5, 0.1])],
    );
    let lengths = [2usize, 4, 8, 16, 32, 64];
    let per_path: Vec<Vec<f64>> = (0..100u64)
        .into_par_iter()
        .map(|p| {
            let drp = fbm_lift(0.4, 2, h, k, n, k, 31, p);
            let seg = |start: isize| {
                let values = (0..=n).map(|i| drp.value(drp.node(start + i as isize).unwrap())).collect();
                ControlledSegment::new(start, values, vec![DMatrix::identity(2, 2); n + 1]).unwrap()
            };
            let zeta = compose_with_g(&seg(0), &seg(-(k as isize)), &g, k).unwrap();
            lengths
                .iter()
                .map(|&len| {
                    let starts: Vec<isize> = (0..(n - 64) as isize).step_by(37).collect();
                    starts
                        .iter()
                        .map(|&s| local_expansion_residual_nodes(&zeta, &drp, s, s + len as isize).unwrap())
                        .sum::<f64>()
                        / starts.len() as f64
                })
                .collect()
        })
        .collect();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (i, &len) in lengths.iter().enumerate() {
        let mean = per_path.iter().map(|v| v[i]).sum::<f64>() / per_path.len() as f64;
        lx.push((len as f64 * h).ln());
        ly.push(mean.ln());
    }
    let slope = fit_slope(&lx, &ly);
    let bound = 2.0 * beta + gamma - 0.15;
    check(slope >= bound, format!("residual slope {slope:.3} (>= {bound:.2})"))
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let h = 1e-3;

    // (a) y' = -y: no delay feedback, e^{-t}
    let spec = EquationSpec::scalar_dde(-1.0, 0.0, 1.0).unwrap();
    let drp = fbm_lift(0.4, 1, h, 1000, 2000, 1000, 1, 0);
    let xi = constant_history(DVector::from_element(1, 1.0), 1000, 1);
    let sol = solve(&spec, &xi, &drp, 2.0).unwrap();
    let err = (0..=2000).map(|j| (sol.value(j)[0] - (-(j as f64) * h).exp()).abs()).fold(0.0, f64::max);
    ok &= err < 1e-6;
    lines.push(format!("(a) ODE max error {err:.1e}"));

    // (b) dy = 0.7 dX: y = y_0 + 0.7 (X_t - X_0)
    let spec = EquationSpec::scalar_dde(0.0, 0.0, 1.0).unwrap().with_diffusion(scalar_g(Profile::Linear, 0.7, 0.0, 0.0)).unwrap();
    let drp = fbm_lift(0.4, 1, 1.0 / 256.0, 256, 1024, 256, 5, 0);
    let xi = constant_history(DVector::from_element(1, 0.3), 256, 1);
    let sol = solve(&spec, &xi, &drp, 4.0).unwrap();
    let o = drp.origin();
    let err = (0..=1024usize)
        .map(|j| (sol.value(j as isize)[0] - (0.3 + 0.7 * drp.increment(o, o + j)[0])).abs())
        .fold(0.0, f64::max);
    ok &= err < 1e-12;
    lines.push(format!("(b) additive noise max error {err:.1e}"));

    // (c) y' = y(t-1), ξ ≡ 1: y(2) = 3.5
    let spec = EquationSpec::scalar_dde(0.0, 1.0, 1.0).unwrap();
    let drp = fbm_lift(0.4, 1, h, 1000, 2000, 1000, 1, 0);
    let xi = constant_history(DVector::from_element(1, 1.0), 1000, 1);
    let y2 = solve(&spec, &xi, &drp, 2.0).unwrap().final_value()[0];
    ok &= (y2 - 3.5).abs() < 1e-4;
    lines.push(format!("(c) y(2) = {y2:.8}"));

    // (d) G ≡ 0 against the deterministic semigroup, 2x2 with atom and density
    let spec = EquationSpec::new(
        LinearDrift::new(DMatrix::from_row_slice(2, 2, &[-1.0, 0.4, 0.2, -0.5]), DMatrix::identity(2, 2)),
        SignedDelayMeasure {
            atoms: vec![DelayAtom { location: -1.0, weight: DMatrix::from_row_slice(2, 2, &[0.3, 0.0, -0.2, 0.1]) }],
            density: vec![DensityPiece { from: -0.5, to: 0.0, weight: DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.5, 0.0]) }],
        },
        Arc::new(SeparableDiffusion::zero(2, 1)),
        1.0,
    )
    .unwrap();
    let (step, k) = (1.0 / 128.0, 128usize);
    let drp = fbm_lift(0.4, 1, step, k, 3 * k, k, 9, 0);
    let hist: Vec<DVector<f64>> = (0..=k)
        .map(|i| {
            let s = i as f64 * step - 1.0;
            DVector::from_vec(vec![(3.0 * s).cos(), 1.0 + s])
        })
        .collect();
    let xi = ControlledSegment::from_smooth(-(k as isize), hist.clone(), 1).unwrap();
    let sol = solve(&spec, &xi, &drp, 3.0).unwrap();
    let sg = semigroup_apply(&spec, &hist, step, 3.0).unwrap();
    let err = (0..=k).map(|i| (sol.value((2 * k + i) as isize) - &sg[i]).norm()).fold(0.0, f64::max);
    ok &= err < 1e-6;
    lines.push(format!("(d) semigroup max node error {err:.1e}"));
    check(ok, lines.join("; "))
}

fn criterion_6() -> Outcome {
    let spec = EquationSpec::scalar_dde(-0.8, 0.5, 1.0)
        .unwrap()
        .with_diffusion(scalar_g(Profile::Tanh, 0.1, 0.6, 0.4))
        .unwrap();
    let k = 32;
    let results: Vec<bool> = (0..20u64)
        .into_par_iter()
        .map(|p| {
            let drp = fbm_lift(0.4, 1, 1.0 / 32.0, k, 5 * k, k, 404, p);
            let xi = SegmentState(ControlledSegment::constant(-(k as isize), k + 1, DVector::from_element(1, 0.8), 1));
            [(1, 1), (1, 2), (2, 3)].iter().all(|&(p, q)| {
                let direct = cocycle_apply(&spec, &xi, &drp, p + q).unwrap();
                let first = cocycle_apply(&spec, &xi, &drp, p).unwrap();
                let composed = cocycle_apply(&spec, &first, &drp.shift((p * k) as isize).unwrap(), q).unwrap();
                direct.0.values() == composed.0.values() && direct.0.derivs() == composed.0.derivs()
            })
        })
        .collect();
    let exact = results.iter().filter(|b| **b).count();
    check(exact == 20, format!("{exact}/20 paths bit-identical for (p,q) in (1,1),(1,2),(2,3)"))
}

fn criterion_7() -> Outcome {
    let g = SeparableDiffusion::new(
        Profile::Tanh,
        DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.2, -0.1]),
        vec![DMatrix::from_row_slice(2, 2, &[0.8, 0.1, 0.0, 0.4]), DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.3, 0.0])],
        vec![DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.2]), DMatrix::from_row_slice(2, 2, &[0.1, -0.2, 0.4, 0.3])],
    );
    let spec = EquationSpec::new(
        LinearDrift::new(DMatrix::from_row_slice(2, 2, &[-0.5, 0.3, -0.2, -0.4]), DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.1, -0.3])),
        SignedDelayMeasure::atom(-1.0, DMatrix::identity(2, 2)),
        Arc::new(g),
        1.0,
    )
    .unwrap();
    let (step, k, horizon) = (1.0 / 64.0, 64usize, 2.0);
    let drp = fbm_lift(0.4, 2, step, k, 2 * k, k, 808, 0);
    let xi = ControlledSegment::from_smooth(
        -(k as isize),
        (0..=k).map(|i| DVector::from_vec(vec![0.5 + 0.2 * i as f64 / k as f64, -0.3])).collect(),
        2,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (c, f) = (rng.random_range(-1.0..1.0), rng.random_range(0.5..3.0));
        let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let dir = ControlledSegment::from_smooth(
            -(k as isize),
            (0..=k)
                .map(|i| {
                    let s = i as f64 / k as f64;
                    DVector::from_vec(vec![a + c * (f * s).sin(), b * (1.0 - s)])
                })
                .collect(),
            2,
        )
        .unwrap();
        let tangent = directional_derivative(&spec, &xi, &drp, horizon, &dir).unwrap();
        let eps = 1e-6;
        let plus = solve(&spec, &xi.axpy(eps, &dir), &drp, horizon).unwrap();
        let minus = solve(&spec, &xi.axpy(-eps, &dir), &drp, horizon).unwrap();
        let scale = (0..=2 * k as isize).map(|j| tangent.value(j).norm()).fold(0.0, f64::max);
        for j in 0..=2 * k as isize {
            let fd = (plus.value(j) - minus.value(j)) / (2.0 * eps);
            worst = worst.max((tangent.value(j) - fd).norm() / scale);
        }
    }
    check(worst < 1e-3, format!("max relative tangent vs finite difference {worst:.2e} over 10 directions"))
}

fn criterion_8() -> Outcome {
    let spec = EquationSpec::scalar_dde(0.0, -0.5, 1.0).unwrap();
    let m = 64;
    let step = 1.0 / m as f64;
    let opts = LyapunovOptions {
        iterations: 200,
        ..LyapunovOptions::default()
    };
    let steps = (opts.burn_in + opts.iterations) * m;
    let drp = fbm_lift(0.4, 1, step, m, steps, m, 3, 0);
    let mu = lyapunov_spectrum(&spec, &drp, &Linearization::ZeroStationary, &opts).unwrap().exponents[0];
    let roots = find_roots(&spec, Rect::new(-3.0, 1.0, -30.0, 30.0)).unwrap();
    let lambda = roots.abscissa.unwrap();
    check(
        (mu - lambda).abs() < 1e-2,
        format!("mu_1 = {mu:.5}, max Re root = {lambda:.5}, gap {:.1e}", (mu - lambda).abs()),
    )
}

fn criterion_9() -> Outcome {
    let r = 1.0;
    let spec = EquationSpec::scalar_dde(0.0, -PI / (2.0 * r), r).unwrap();
    let det = char_det(&spec, Complex64::new(0.0, PI / (2.0 * r))).norm();
    let lambda = spectral_abscissa(&spec).unwrap();
    check(
        det < 1e-12 && lambda.abs() < 1e-8,
        format!("|det| = {det:.1e}, spectral abscissa {lambda:.1e}"),
    )
}

fn criterion_10() -> Outcome {
    let two = EquationSpec::new(
        LinearDrift::new(DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -0.6]), DMatrix::identity(2, 2)),
        SignedDelayMeasure {
            atoms: vec![DelayAtom { location: -1.0, weight: DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.3, -0.2]) }],
            density: vec![DensityPiece { from: -1.0, to: -0.5, weight: DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.2, 0.0]) }],
        },
        Arc::new(SeparableDiffusion::zero(2, 1)),
        1.0,
    )
    .unwrap();
    let specs = [
        ("a=0,b=-0.5", EquationSpec::scalar_dde(0.0, -0.5, 1.0).unwrap()),
        ("a=-1,b=0.3", EquationSpec::scalar_dde(-1.0, 0.3, 1.0).unwrap()),
        ("2x2", two),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, spec) in &specs {
        let lambda = spectral_abscissa(spec).unwrap();
        let decay = decay_rate_estimate(spec, 60.0, 1.0 / 128.0).unwrap();
        ok &= lambda < 0.0 && (decay - lambda).abs() < 1e-2;
        lines.push(format!("{name}: decay {decay:.4} vs abscissa {lambda:.4}"));
    }
    check(ok, lines.join("; "))
}

fn criterion_11() -> Outcome {
    let base = EquationSpec::scalar_dde(-1.0, 0.3, 1.0).unwrap();
    let lambda = spectral_abscissa(&base).unwrap();
    let spec = base.with_diffusion(scalar_g(Profile::Linear, 0.0, 0.05, 0.0)).unwrap();
    let step = 1.0 / 32.0;
    let ensemble = DriverEnsemble::for_spec(&spec, Hurst::new(0.4).unwrap(), step, 30.0, 11, 200).unwrap();
    let xi = constant_history(DVector::from_element(1, 1.0), 32, 1);
    let s = pathwise_decay_estimate(&spec, &xi, &ensemble, 30.0).unwrap();
    let median = s.median.unwrap_or(f64::NAN);
    check(
        lambda <= -0.3 && median < 0.0 && s.abort_fraction() < 0.05,
        format!("lambda_1 {lambda:.4}, median slope {median:.4}, abort fraction {:.3}", s.abort_fraction()),
    )
}

fn criterion_12() -> Outcome {
    let g = SeparableDiffusion::new(
        Profile::Tanh,
        DMatrix::zeros(2, 1),
        // 0.03² + 0.04² = 0.05²
        vec![DMatrix::from_column_slice(2, 1, &[0.03, 0.0]), DMatrix::zeros(2, 1)],
        vec![DMatrix::zeros(2, 1), DMatrix::from_column_slice(2, 1, &[0.0, 0.04])],
    );
    let norm = g.linearization_norm();
    let spec = EquationSpec::new(
        LinearDrift::new(DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.0, -0.8]), DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, 0.2])),
        SignedDelayMeasure::atom(-1.0, DMatrix::identity(2, 2)),
        Arc::new(g),
        1.0,
    )
    .unwrap();
    let step = 1.0 / 32.0;
    let ensemble = DriverEnsemble::for_spec(&spec, Hurst::new(0.4).unwrap(), step, 30.0, 12, 100).unwrap();
    let y0 = DVector::from_vec(vec![0.006, 0.008]);
    let xi = constant_history(y0.clone(), 32, 1);
    let s = pathwise_decay_estimate(&spec, &xi, &ensemble, 30.0).unwrap();
    let median = s.median.unwrap_or(f64::NAN);
    check(
        (norm - 0.05).abs() < 1e-12 && (y0.norm() - 1e-2).abs() < 1e-15 && median < 0.0,
        format!("|DG(0,0)| = {norm:.3}, |xi| = {:.0e}, median slope {median:.4} over {} paths", y0.norm(), s.paths.len()),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

const SCENARIO: &str = r#"
name = "reproducibility"
seed = 13
out_dir = "out"

[equation]
dim = 1
noise_dim = 1
delay = 1.0
drift = { current = [-1.0], memory = [0.3] }
measure = { atoms = [{ location = -1.0, weight = [1.0] }] }
diffusion = { profile = "linear", current = [0.05] }

[[task]]
kind = "sample-fbm"
span = [0.25, 1.0]
step = 0.0078125
paths = 3
out = "fbm.csv"

[[task]]
kind = "lift"
in = "fbm.csv"
delay_steps = 32

[[task]]
kind = "solve"
paths = 4
horizon = 3.0

[[task]]
kind = "lyapunov"
segments = 16
iters = 30
k = 2

[[task]]
kind = "decay"
paths = 6
horizon = 20.0
step = 0.0625

[[task]]
kind = "spectrum"

[[task]]
kind = "stability-sweep"
paths = 4
horizon = 20.0
step = 0.0625
epsilons = [0.0, 1.0, 3.0]
"#;

fn criterion_13() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    fs::write(&config, SCENARIO).unwrap();
    let first = run_scenario(&config).unwrap();
    let a = snapshot(&first.out_dir);
    let second = run_scenario(&config).unwrap();
    let b = snapshot(&second.out_dir);
    let same = a == b;
    check(
        same && first.exit_code() == 0 && a.len() >= 15,
        format!("{} files across {} tasks, byte-identical rerun: {same}", a.len(), first.tasks.len()),
    )
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 13] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
        (13, criterion_13),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (n, run) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n:>2}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
