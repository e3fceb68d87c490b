use proptest::prelude::*;
use twochoice::dp::dp_sweep;
use twochoice::limits::solve_b_alpha;
use twochoice::profile::{LimitProfile, PowerProfile};
use twochoice::recursion::{
    run_to_convergence, sandwich_bounds, step, trajectory, RecursionSpec, StopRule,
};
use twochoice::Alpha;

fn alpha(a: f64) -> Alpha {
    Alpha::new(a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positivity_propagates(a in 0.2f64..8.0, c in 1e-3f64..50.0, m in 1usize..40) {
        let al = alpha(a);
        let spec = RecursionSpec::new(al, LimitProfile { alpha: al }, m, c).unwrap();
        let mut s = spec.start();
        for _ in 0..200 {
            s = step(&spec, s).unwrap();
            prop_assert!(s.z > 0.0 && s.z.is_finite());
        }
    }

    #[test]
    fn step_is_monotone_in_start_value(a in 0.3f64..5.0, c in 0.05f64..5.0, bump in 1e-3f64..1.0) {
        let al = alpha(a);
        let q = PowerProfile { alpha: al };
        let lo = RecursionSpec::new(al, q, 10, c).unwrap();
        let hi = RecursionSpec::new(al, q, 10, c + bump).unwrap();
        prop_assert!(step(&lo, lo.start()).unwrap().z <= step(&hi, hi.start()).unwrap().z);
    }
}

#[test]
fn limit_does_not_depend_on_start_value() {
    let al = alpha(1.0);
    let d = solve_b_alpha(al).d_alpha;
    let stop = StopRule {
        stall_tol: 1e-6,
        ..StopRule::default()
    };
    for c in [0.1 * d, d, 10.0 * d] {
        let spec = RecursionSpec::new(al, LimitProfile { alpha: al }, 2, c).unwrap();
        let z = match run_to_convergence(&spec, stop) {
            Ok(r) => r.z,
            Err(twochoice::Error::NoConvergence { window, .. }) => window.last().unwrap().1,
            Err(e) => panic!("{e}"),
        };
        assert!((z - d).abs() < 1e-2, "c {c}: {z}");
    }
}

#[test]
fn drift_points_toward_the_limit() {
    for a in [0.5, 1.0, 3.0] {
        let al = alpha(a);
        let d = solve_b_alpha(al).d_alpha;
        for c in [0.5 * d, 2.0 * d] {
            let spec = RecursionSpec::new(al, LimitProfile { alpha: al }, 100, c).unwrap();
            let traj = trajectory(&spec, 3000).unwrap();
            for w in traj.windows(2) {
                let gap = w[0].z - d;
                if gap < -0.01 {
                    assert!(w[1].z > w[0].z, "α {a} n {}", w[0].n);
                } else if gap > 0.01 {
                    assert!(w[1].z < w[0].z, "α {a} n {}", w[0].n);
                }
            }
        }
    }
}

#[test]
fn upper_recursion_reaches_two_choice_limit() {
    let al = alpha(1.0);
    let spec = RecursionSpec::new(al, LimitProfile { alpha: al }, 2, 2.0 / 3.0).unwrap();
    let z = trajectory(&spec, 10_000).unwrap().last().unwrap().z;
    assert!((z - 1.16562).abs() < 5e-3, "{z}");
}

#[test]
fn sandwich_gap_shrinks_with_j() {
    let al = alpha(1.0);
    let n = 3000;
    let traces = dp_sweep(al, n, 4096).unwrap();
    let triples = sandwich_bounds(al, &[32, 64, 128], &traces, n).unwrap();
    let gaps: Vec<f64> = triples.iter().map(|t| t.upper - t.lower).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn bounds_near_two_choice_limit_for_large_j() {
    let al = alpha(1.0);
    let n = 10_000;
    let traces = dp_sweep(al, n, 8192).unwrap();
    let t = sandwich_bounds(al, &[128], &traces, n).unwrap()[0];
    assert!((t.lower - 1.16562).abs() < 2e-2, "{t:?}");
    assert!((t.upper - 1.16562).abs() < 2e-2, "{t:?}");
}

#[test]
fn sandwich_rejects_short_traces() {
    let al = alpha(1.0);
    let traces = dp_sweep(al, 100, 512).unwrap();
    assert!(sandwich_bounds(al, &[64], &traces, 500).is_err());
}
