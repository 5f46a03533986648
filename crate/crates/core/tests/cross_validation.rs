//! Weak-drive amplitudes against the full master-equation steady state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use upb_core::analytic::{analytic_g2, steady_amplitudes};
use upb_core::dynamics::{g2_zero, steady_state_for, Tolerances};
use upb_core::hilbert::Mode;
use upb_core::model::ModelParams;
use upb_core::sweep::{find_minima, run_sweep, Axis, Method, Observable, Param, SweepSpec};

fn grid(omega: f64) -> Vec<ModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100)
        .map(|_| ModelParams {
            g: rng.gen_range(0.1..=3.0),
            chi: rng.gen_range(0.0..=10.0),
            delta: rng.gen_range(-4.0..=4.0),
            omega_drv: omega,
            ..Default::default()
        })
        .collect()
}

/// Points where the amplitude g² misses the numerical one by more than `rtol`.
fn disagreements(omega: f64, rtol: f64) -> Vec<String> {
    grid(omega)
        .into_iter()
        .filter_map(|p| {
            let num = g2_zero(&steady_state_for(&p, &Tolerances::default()).unwrap(), Mode::Cw).unwrap();
            let an = analytic_g2(&steady_amplitudes(&p).unwrap()).unwrap().approximate;
            let rel = (an - num).abs() / num;
            (rel > rtol).then(|| {
                format!("Δ={:.3} g={:.3} χ={:.3}: numeric {num:.5e} analytic {an:.5e} ({:.1}%)", p.delta, p.g, p.chi, 100.0 * rel)
            })
        })
        .collect()
}

#[test]
fn weak_drive_limit_within_two_percent() {
    let bad = disagreements(0.01, 0.02);
    assert!(bad.is_empty(), "{} of 100 points:\n{}", bad.len(), bad.join("\n"));
}

#[test]
fn working_drive_within_ten_percent() {
    let bad = disagreements(0.1, 0.1);
    assert!(bad.is_empty(), "{} of 100 points:\n{}", bad.len(), bad.join("\n"));
}

#[test]
fn numeric_and_analytic_dips_coincide() {
    let mut spec = SweepSpec::new(ModelParams::default(), Axis::new(Param::Delta, -4.0, 4.0, 401));
    spec.method = Method::Both;
    spec.observables = vec![Observable::G2Cw, Observable::G2Analytic];
    let table = run_sweep(&spec).unwrap();
    let step = spec.axis1.step();
    let num = find_minima(&table, "g2_cw").unwrap();
    let an = find_minima(&table, "g2_analytic").unwrap();
    assert_eq!(num.len(), an.len(), "{num:?} vs {an:?}");
    for (a, b) in num.iter().zip(&an) {
        assert!((a.position - b.position).abs() <= step + 1e-9, "{num:?} vs {an:?}");
    }
    for target in [-1.05, 0.0, 1.05] {
        assert!(num.iter().any(|m| (m.position - target).abs() <= 0.05), "{num:?}");
    }
}
