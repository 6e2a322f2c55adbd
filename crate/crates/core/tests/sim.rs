use fibrescan::field::GridSpec;
use fibrescan::rng::seeded;
use fibrescan::sim::geometry::segment_distance_sq;
use fibrescan::sim::*;
use fibrescan::sphere::{principal_axis, AcgParams, Axis, UnitVector3};
use fibrescan::Error;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn brute_segment_distance(a0: Point3, a1: Point3, b0: Point3, b1: Point3) -> f64 {
    let n = 400;
    let at = |p: Point3, q: Point3, t: f64| [0, 1, 2].map(|k| p[k] + t * (q[k] - p[k]));
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let p = at(a0, a1, i as f64 / n as f64);
        for j in 0..=n {
            let q = at(b0, b1, j as f64 / n as f64);
            best = best.min((0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt());
        }
    }
    best
}

fn point() -> impl Strategy<Value = Point3> {
    [-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segment_distance_matches_dense_sampling(a0 in point(), a1 in point(), b0 in point(), b1 in point()) {
        let exact = segment_distance_sq(a0, a1, b0, b1).sqrt();
        let brute = brute_segment_distance(a0, a1, b0, b1);
        // the grid search overestimates by at most half a grid step per segment
        prop_assert!(exact <= brute + 1e-9);
        prop_assert!(brute - exact < 0.05, "{} vs {}", exact, brute);
    }

    #[test]
    fn segment_distance_is_symmetric(a0 in point(), a1 in point(), b0 in point(), b1 in point()) {
        let d1 = segment_distance_sq(a0, a1, b0, b1);
        let d2 = segment_distance_sq(b1, b0, a1, a0);
        prop_assert!((d1 - d2).abs() < 1e-9);
    }
}

#[test]
fn zero_length_segment_is_rejected() {
    assert!(segment_distance([1.0; 3], [1.0; 3], [0.0; 3], [1.0, 0.0, 0.0]).is_err());
}

fn small_layered(seed: u64) -> RsaConfig {
    let outer = AcgParams::new(UnitVector3::E1, 0.1).unwrap();
    let middle = AcgParams::new(UnitVector3::E2, 0.5).unwrap();
    RsaConfig::three_layers(
        [100.0; 3],
        20.0,
        1.0,
        outer,
        middle,
        LayerTarget::VolumeFraction(0.05),
        seed,
    )
}

#[test]
fn rsa_capsules_never_overlap() {
    let cfg = small_layered(3);
    let f = generate_rsa(&cfg, &mut seeded(3)).unwrap();
    assert!(f.len() > 300);
    for i in 0..f.len() {
        for j in 0..i {
            let d = segment_distance_sq(f[i].p0, f[i].p1, f[j].p0, f[j].p1);
            assert!(
                d >= 4.0 - 1e-9,
                "fibres {i} and {j} at distance {}",
                d.sqrt()
            );
        }
    }
}

#[test]
fn rsa_is_reproducible() {
    let cfg = small_layered(9);
    let a = generate_rsa(&cfg, &mut seeded(9)).unwrap();
    let b = generate_rsa(&cfg, &mut seeded(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn layer_concentration_follows_the_configuration() {
    let cfg = small_layered(4);
    let f = generate_rsa(&cfg, &mut seeded(4)).unwrap();
    let layer_of = |z: f64| {
        cfg.layers
            .iter()
            .position(|l| z >= l.lo && z < l.hi)
            .unwrap()
    };
    let mut groups: [Vec<UnitVector3>; 3] = Default::default();
    for fib in &f {
        groups[layer_of(fib.midpoint()[2])].push(fib.direction().unwrap());
    }
    let largest_eig = |xs: &[UnitVector3]| {
        let ax = principal_axis(xs, &vec![1.0; xs.len()]).unwrap();
        xs.iter().map(|u| u.dot(&ax).powi(2)).sum::<f64>() / xs.len() as f64
    };
    let e: Vec<f64> = groups.iter().map(|g| largest_eig(g)).collect();
    assert!(e[0] > e[1] && e[2] > e[1], "{e:?}");
    let mid = principal_axis(&groups[1], &vec![1.0; groups[1].len()]).unwrap();
    assert!(mid.y().abs() > 0.9);
}

#[test]
fn homogeneous_volume_fraction_is_met() {
    let acg = AcgParams::new(UnitVector3::E1, 0.1).unwrap();
    let cfg = RsaConfig::homogeneous(
        [100.0; 3],
        20.0,
        1.0,
        acg,
        LayerTarget::VolumeFraction(0.08),
        1,
    );
    let f = generate_rsa(&cfg, &mut seeded(1)).unwrap();
    let vf: f64 = f.iter().map(|x| x.volume()).sum::<f64>() / 1e6;
    assert!((vf - 0.08).abs() < 0.002, "{vf}");
    assert_eq!(cfg.slab_axis, Axis::Z);
}

#[test]
fn voxel_count_approximates_capsule_volume() {
    let acg = AcgParams::new(UnitVector3::E1, 0.5).unwrap();
    let cfg = RsaConfig::homogeneous([80.0; 3], 20.0, 2.0, acg, LayerTarget::Count(150), 2);
    let f = generate_rsa(&cfg, &mut seeded(2)).unwrap();
    let v = voxelize(&f, [80, 80, 80]);
    let exact: f64 = f.iter().map(|x| x.volume()).sum();
    let rel = (v.count() as f64 - exact).abs() / exact;
    assert!(rel < 0.03, "{} voxels vs {exact}", v.count());
}

#[test]
fn straight_fibre_gives_its_own_direction() {
    let f = Fibre {
        p0: [1.0, 15.0, 15.0],
        p1: [29.0, 15.0, 15.0],
        radius: 1.0,
    };
    let grid = GridSpec::for_domain([30.0; 3], 6.0, 1).unwrap();
    let d = local_direction_field(&[f], &grid).unwrap();
    assert_eq!(d.occupied(), 5);
    for (i, u) in d.iter_occupied() {
        assert_eq!(i[1], 2);
        assert!((u.x().abs() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn block_field_is_blockwise_normal() {
    let f = generate_block_gaussian_field([30, 30, 30], 3, &mut seeded(8)).unwrap();
    let mut reps = Vec::new();
    for k in (0..30).step_by(3) {
        for j in (0..30).step_by(3) {
            for i in (0..30).step_by(3) {
                let v = f.get([i, j, k]).unwrap();
                for d in 0..27 {
                    let idx = [i + d % 3, j + (d / 3) % 3, k + d / 9];
                    assert_eq!(f.get(idx).unwrap(), v);
                }
                reps.push(v);
            }
        }
    }
    reps.sort_by(f64::total_cmp);
    let n = Normal::new(0.0, 1.0).unwrap();
    let ks = reps
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = n.cdf(x);
            (c - i as f64 / reps.len() as f64)
                .abs()
                .max(((i + 1) as f64 / reps.len() as f64 - c).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS statistic for n = 1000
    assert!(ks < 1.63 / (reps.len() as f64).sqrt(), "KS {ks}");
}

#[test]
fn anomaly_outside_the_grid_is_rejected() {
    use fibrescan::changepoint::BoxParam;
    let f = fibrescan::field::ScalarField3::zeros([4, 4, 4]);
    let b = BoxParam::new([2, 2, 2], [3, 1, 1]);
    assert!(matches!(
        inject_anomaly(&f, &b, 1.0),
        Err(Error::InvalidArgument(_))
    ));
    let ok = inject_anomaly(&f, &BoxParam::new([1, 1, 1], [2, 2, 2]), 1.5).unwrap();
    assert_eq!(ok.values().iter().sum::<f64>(), 12.0);
}
