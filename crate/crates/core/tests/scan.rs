mod common;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use raman_pair::pair::ScatterOptions;
use raman_pair::scan::{
    argmax_direction, direction, evaluate_direction, polarization_sweep, scan_sphere, sphere_grid, write_scan_csv, Measure, NodeFlag,
    MAX_RESOLUTION, MIN_RESOLUTION,
};
use raman_pair::{AtomSpec, CondensateSpinor, HalfInt, PumpConfig};

fn h(d: i32) -> HalfInt {
    HalfInt::from_doubled(d)
}

fn sodium() -> (AtomSpec, PumpConfig, CondensateSpinor) {
    let na = AtomSpec::sodium();
    let pump = PumpConfig::y_propagating_pi(na.resonance() - TAU * 1e10);
    (na, pump, CondensateSpinor::single(h(2), h(0)).unwrap())
}

const TWO_DEG: f64 = PI / 90.0;

#[test]
fn grid_shape() {
    let (dt, dp, nodes) = sphere_grid(TWO_DEG).unwrap();
    assert!((dt - TWO_DEG).abs() < 1e-15 && (dp - TWO_DEG).abs() < 1e-15);
    assert_eq!(nodes.len(), 2 + 89 * 180);
    assert_eq!(nodes[0], (0.0, 0.0));
    assert_eq!(*nodes.last().unwrap(), (PI, 0.0));
    let (_, _, coarse) = sphere_grid(MAX_RESOLUTION).unwrap();
    assert_eq!(coarse.len(), 2 + 5 * 12);
    // Steps never exceed the request.
    let (dt, dp, _) = sphere_grid(0.07).unwrap();
    assert!(dt <= 0.07 && dp <= 0.07);
    assert!(sphere_grid(MIN_RESOLUTION * 0.5).is_err());
    assert!(sphere_grid(MAX_RESOLUTION * 1.5).is_err());
    assert!(sphere_grid(f64::NAN).is_err());
    assert_eq!(direction(0.0, 1.0), [0.0, 0.0, 1.0]);
    assert_eq!(direction(PI, 1.0), [0.0, 0.0, -1.0]);
}

#[test]
fn concurrence_scan_peaks_on_the_axis() {
    let (na, pump, cond) = sodium();
    let map = scan_sphere(&na, &pump, &cond, TWO_DEG, Measure::ConcurrenceAfterFilter(h(2)), &ScatterOptions::default()).unwrap();
    let best = argmax_direction(&map).unwrap();
    assert_eq!((best.theta, best.phi), (0.0, 0.0));
    assert!(best.measure >= 1.0 - 1e-6);
    let ties: Vec<_> = map.nodes.iter().filter(|n| n.flag == NodeFlag::Ok && n.measure >= best.measure - 1e-6).collect();
    assert!(ties.iter().all(|n| n.theta == 0.0 || n.theta == PI), "{} near-maximal nodes", ties.len());
    let south = map.nodes.last().unwrap();
    assert!((south.measure - best.measure).abs() < 1e-12);
}

#[test]
fn nodes_reproduce_direct_evaluation() {
    let (na, pump, cond) = sodium();
    let opts = ScatterOptions::default();
    let measures = [Measure::Entropy, Measure::ConcurrenceAfterFilter(h(4)), Measure::ConditionalOverlap];
    let mut rng = common::rng(31);
    for m in measures {
        let map = scan_sphere(&na, &pump, &cond, PI / 30.0, m, &opts).unwrap();
        for _ in 0..10 {
            let n = &map.nodes[rng.gen_range(0..map.nodes.len())];
            let (v, flag, w) = evaluate_direction(&na, &pump, &cond, &n.direction, m, &opts).unwrap();
            assert_eq!(flag, n.flag);
            assert_eq!(w, n.channel_weights);
            assert!(v == n.measure || (v.is_nan() && n.measure.is_nan()));
        }
    }
}

#[test]
fn mirror_symmetry_of_entropy() {
    // The π pump along ŷ is symmetric under z → −z.
    let (na, pump, cond) = sodium();
    let map = scan_sphere(&na, &pump, &cond, PI / 18.0, Measure::Entropy, &ScatterOptions::default()).unwrap();
    let (nt, np) = ((PI / map.theta_step).round() as usize, (TAU / map.phi_step).round() as usize);
    for i in 1..nt {
        for j in 0..np {
            let a = &map.nodes[1 + (i - 1) * np + j];
            let b = &map.nodes[1 + (nt - i - 1) * np + j];
            assert!((a.measure - b.measure).abs() < 1e-9 || (a.measure.is_nan() && b.measure.is_nan()));
        }
    }
}

#[test]
fn flags_are_reported() {
    let (na, pump, cond) = sodium();
    let map = scan_sphere(&na, &pump, &cond, MAX_RESOLUTION, Measure::ConditionalOverlap, &ScatterOptions::default()).unwrap();
    for n in &map.nodes {
        match n.flag {
            NodeFlag::Ok => assert!((0.0..=1.0).contains(&n.measure)),
            _ => assert!(n.measure.is_nan()),
        }
    }
}

#[test]
fn byte_identical_reruns() {
    let (na, pump, cond) = sodium();
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let map = pool
            .install(|| scan_sphere(&na, &pump, &cond, PI / 36.0, Measure::Entropy, &ScatterOptions::default()))
            .unwrap();
        let mut out = Vec::new();
        write_scan_csv(&map, &mut out).unwrap();
        out
    };
    let a = render(1);
    assert_eq!(a, render(4));
    assert_eq!(a, render(4));
}

#[test]
fn measure_names_round_trip() {
    for m in [Measure::Entropy, Measure::ConcurrenceAfterFilter(h(2)), Measure::ConcurrenceAfterFilter(h(4)), Measure::ConditionalOverlap] {
        assert_eq!(m.to_string().parse::<Measure>().unwrap(), m);
    }
    assert!("concurrence".parse::<Measure>().is_err());
}

#[test]
fn pump_polarization_sweep() {
    let (na, pump, cond) = sodium();
    let opts = ScatterOptions::default();
    let z = [0.0, 0.0, 1.0];
    let sweep = polarization_sweep(&na, &pump, &cond, &z, 36, Measure::ConcurrenceAfterFilter(h(2)), &opts).unwrap();
    assert_eq!(sweep.len(), 36);
    // χ = 0 is the π-polarized pump.
    assert!((sweep[0].measure - 1.0).abs() < 1e-9);
    for p in &sweep {
        assert!(p.flag != NodeFlag::Ok || (0.0..=1.0 + 1e-12).contains(&p.measure));
    }
    assert_eq!(sweep, polarization_sweep(&na, &pump, &cond, &z, 36, Measure::ConcurrenceAfterFilter(h(2)), &opts).unwrap());
    assert!(polarization_sweep(&na, &pump, &cond, &z, 0, Measure::Entropy, &opts).is_err());
}
