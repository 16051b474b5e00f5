use nalgebra::DMatrix;
use proptest::prelude::*;
use rough_delay::fbm::{FbmSampler, Hurst, SampledPath, UniformGrid};
use rough_delay::lift::{lift_piecewise_linear, DelayedRoughPath, LiftDocument};

fn arbitrary_path(dim: usize, left: usize, right: usize, values: &[f64]) -> SampledPath {
    let grid = UniformGrid::new(0.1, left, right).unwrap();
    let n = grid.len();
    let o = grid.origin_index();
    let mut v: Vec<f64> = values.iter().cycle().take(n * dim).copied().collect();
    // pin the origin to zero as sampled paths are
    for c in 0..dim {
        v[o * dim + c] = 0.0;
    }
    SampledPath::new(grid, dim, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chen_holds_on_arbitrary_paths(
        dim in 1usize..4,
        k in 1usize..6,
        right in 2usize..20,
        values in prop::collection::vec(-5.0f64..5.0, 1..200),
    ) {
        let drp = lift_piecewise_linear(&arbitrary_path(dim, k, right, &values), k).unwrap();
        let n = drp.nodes();
        for s in 0..n {
            for u in s + 1..n {
                for t in u + 1..n.min(u + 4) {
                    prop_assert!(drp.chen_residual(s, u, t) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shifts_compose_exactly(a in -5isize..6, b in -5isize..6, seed in 0u64..50) {
        let grid = UniformGrid::new(0.05, 12, 40).unwrap();
        let p = FbmSampler::new(grid, Hurst::new(0.4).unwrap(), 2).unwrap().sample_path(seed, 0);
        let drp = lift_piecewise_linear(&p, 4).unwrap();
        let two = drp.shift(a).unwrap().shift(b).unwrap();
        let one = drp.shift(a + b).unwrap();
        for i in -2isize..20 {
            for j in i + 1..i + 6 {
                let (x0, x1) = (two.node(i).unwrap(), two.node(j).unwrap());
                let (y0, y1) = (one.node(i).unwrap(), one.node(j).unwrap());
                prop_assert_eq!(two.increment(x0, x1), one.increment(y0, y1));
                prop_assert_eq!(two.area(x0, x1), one.area(y0, y1));
                prop_assert_eq!(two.delayed_area(x0, x1), one.delayed_area(y0, y1));
            }
        }
    }

    #[test]
    fn area_symmetric_part_is_half_square(values in prop::collection::vec(-3.0f64..3.0, 1..100), dim in 1usize..4) {
        // Sym(𝕏_{s,t}) = ½ X_{s,t} ⊗ X_{s,t} for a geometric lift
        let drp = lift_piecewise_linear(&arbitrary_path(dim, 2, 15, &values), 2).unwrap();
        let (i, j) = (1, drp.nodes() - 1);
        let a = drp.area(i, j);
        let x = drp.increment(i, j);
        let sym = (&a + a.transpose()) * 0.5;
        let expect: DMatrix<f64> = &x * x.transpose() * 0.5;
        prop_assert!((sym - expect).norm() < 1e-10 * (1.0 + x.norm_squared()));
    }
}

#[test]
fn tampered_pair_is_detected() {
    let grid = UniformGrid::new(0.05, 8, 60).unwrap();
    let p = FbmSampler::new(grid, Hurst::new(0.4).unwrap(), 2).unwrap().sample_path(1, 0);
    let mut drp = lift_piecewise_linear(&p, 8).unwrap();
    drp.materialize_pairs(10, 40).unwrap();
    assert!(drp.validate_chen() < 1e-12);
    let mut pair = rough_delay::lift::PairAreas {
        area: drp.area(12, 30),
        delayed: drp.delayed_area(12, 30),
    };
    pair.area[(0, 1)] += 1e-3;
    drp.set_pair_areas(12, 30, pair);
    assert!(drp.validate_chen() > 1e-5);
}

#[test]
fn shift_is_a_time_translation() {
    let grid = UniformGrid::new(0.05, 10, 50).unwrap();
    let p = FbmSampler::new(grid, Hurst::new(0.45).unwrap(), 1).unwrap().sample_path(4, 0);
    let drp = lift_piecewise_linear(&p, 5).unwrap();
    let shifted = drp.shift(7).unwrap();
    let o = drp.origin();
    // times are relative to the new origin; increments are unchanged
    assert_eq!(shifted.node(0), Some(o + 7));
    assert_eq!(shifted.delayed_area(o + 7, o + 20), drp.delayed_area(o + 7, o + 20));
    assert_eq!(drp.homogeneous_distance(&drp, 0.4).unwrap(), 0.0);
    assert!(drp.homogeneous_distance(&shifted, 0.4).unwrap() > 0.0);
}

#[test]
fn holder_norm_scales_with_path() {
    let grid = UniformGrid::new(0.01, 20, 100).unwrap();
    let p = FbmSampler::new(grid.clone(), Hurst::new(0.4).unwrap(), 2).unwrap().sample_path(2, 0);
    let scaled = SampledPath::new(grid, 2, p.raw_values().iter().map(|v| 3.0 * v).collect()).unwrap();
    let a = lift_piecewise_linear(&p, 20).unwrap().holder_norms(0.35).unwrap();
    let b = lift_piecewise_linear(&scaled, 20).unwrap().holder_norms(0.35).unwrap();
    // first level scales with the dilation, second level with its square
    assert!((b.x_gamma - 3.0 * a.x_gamma).abs() < 1e-9 * b.x_gamma);
    assert!((b.area_2gamma - 9.0 * a.area_2gamma).abs() < 1e-9 * b.area_2gamma);
    assert!((b.delayed_area_2gamma - 9.0 * a.delayed_area_2gamma).abs() < 1e-9 * b.delayed_area_2gamma);
}

#[test]
fn json_round_trip_is_exact() {
    let grid = UniformGrid::new(0.02, 10, 30).unwrap();
    let p = FbmSampler::new(grid, Hurst::new(0.4).unwrap(), 2).unwrap().sample_path(8, 1);
    let drp = lift_piecewise_linear(&p, 10).unwrap();
    let text = serde_json::to_string(&drp.to_document(Some(0.4))).unwrap();
    let doc: LiftDocument = serde_json::from_str(&text).unwrap();
    let back = DelayedRoughPath::from_document(&doc).unwrap();
    for m in 10..drp.nodes() - 1 {
        assert_eq!(back.cell_area(m), drp.cell_area(m));
        assert_eq!(back.cell_delayed_area(m), drp.cell_delayed_area(m));
    }
}
