//! Average and worst-case loss against sampling oracles.

mod common;

use common::{apply_kraus, random_triple, tr};
use lossbench_core::analysis::{average_loss, state_loss, worst_case_state};
use lossbench_core::linalg;
use lossbench_core::noise::{basis_loss_channel, random_lossy_channel, LossModelSpec};
use lossbench_core::rng;
use lossbench_core::{
    average_survival, prop1_check, state_survival, worst_case_loss, DensityMatrix,
};

#[test]
fn average_survival_matches_haar_monte_carlo() {
    let n = 20_000;
    for dim in [2usize, 3, 4] {
        let t = random_triple(dim, 40 + dim as u64);
        let mut r = rng::from_seed(dim as u64);
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                tr(&apply_kraus(
                    t.channel.kraus(),
                    &linalg::random_pure_state(dim, &mut r),
                ))
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sem = (var / n as f64).sqrt();
        let exact = average_survival(&t.channel);
        assert!(
            (mean - exact).abs() < 5.0 * sem,
            "d={dim}: {mean} ± {sem} vs {exact}"
        );
    }
}

#[test]
fn worst_case_dominates_random_states_and_is_attained() {
    for dim in [2usize, 3, 4] {
        let ch = random_lossy_channel(dim, 0.3, 500 + dim as u64).unwrap();
        let worst = worst_case_loss(&ch);
        let mut r = rng::from_seed(17);
        let mut best: f64 = 0.0;
        for _ in 0..20_000 {
            let psi = DensityMatrix::new(dim, linalg::random_pure_state(dim, &mut r)).unwrap();
            best = best.max(state_loss(&ch, &psi).unwrap());
        }
        assert!(best <= worst + 1e-12);
        // Random search gets close only in small dimension.
        if dim == 2 {
            assert!(worst - best < 1e-3, "{worst} vs {best}");
        }
        let attained = state_loss(&ch, &worst_case_state(&ch)).unwrap();
        assert!((attained - worst).abs() < 1e-12);
    }
}

#[test]
fn survival_operator_reproduces_state_survival() {
    let t = random_triple(3, 5);
    let m = t.channel.survival_operator();
    let via_operator = tr(&(m * t.rho.matrix())) / tr(t.rho.matrix());
    let via_kraus = tr(&apply_kraus(t.channel.kraus(), t.rho.matrix())) / tr(t.rho.matrix());
    assert!((via_operator - via_kraus).abs() < 1e-14);
    assert!((state_survival(&t.channel, &t.rho).unwrap() - via_kraus).abs() < 1e-14);
}

#[test]
fn worst_case_bound_over_random_channels() {
    for dim in [2usize, 3, 4] {
        for seed in 0..1000u64 {
            let scale = 0.01 + 0.98 * ((seed * 7919) % 1000) as f64 / 1000.0;
            let ch = random_lossy_channel(dim, scale, seed).unwrap();
            let worst = worst_case_loss(&ch);
            let avg = average_loss(&ch);
            assert!(worst <= dim as f64 * avg + 1e-10, "d={dim} seed={seed}");
        }
    }
}

#[test]
fn single_level_loss_saturates_bound() {
    for dim in [2usize, 3, 4] {
        for i in 0..10 {
            let alpha = 0.05 + 0.1 * i as f64;
            let ch = basis_loss_channel(&LossModelSpec::new(alpha, 0, dim).unwrap()).unwrap();
            let r = prop1_check(&ch);
            assert!(r.satisfied);
            assert!(
                r.slack.abs() < 1e-12,
                "d={dim} alpha={alpha}: slack {}",
                r.slack
            );
        }
    }
}
