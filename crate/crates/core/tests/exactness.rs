//! The sequence average over every Pauli word equals the twirl iteration and
//! the closed form `D(Q)·S(ρ|E)·S(E)^{m−1}`.

mod common;

use common::{apply_kraus, random_triple, scale, tr, tr_product};
use lossbench_core::gates::pauli_gateset;
use lossbench_core::linalg::{self, CMatrix};
use lossbench_core::protocol::{exact_sequence_average, final_state, ProtocolConfig};

/// Mean of `Tr[Q ρ_k]` over all `4^m` words, built depth-first so shared
/// prefixes are applied once.
fn enumerate(
    gates: &[CMatrix],
    kraus: &[CMatrix],
    q: &CMatrix,
    rho: &CMatrix,
    depth: usize,
) -> f64 {
    if depth == 0 {
        return tr_product(q, rho);
    }
    let noisy = apply_kraus(kraus, rho);
    gates
        .iter()
        .map(|g| enumerate(gates, kraus, q, &(g * &noisy * g.adjoint()), depth - 1))
        .sum::<f64>()
        / gates.len() as f64
}

#[test]
fn brute_force_matches_twirl_and_closed_form() {
    let set = pauli_gateset();
    for seed in 0..20u64 {
        let t = random_triple(2, 1000 + seed);
        let kraus = t.channel.kraus();
        let d_q = tr(t.q.matrix()) / 2.0;
        let s_rho = tr(&apply_kraus(kraus, t.rho.matrix())) / tr(t.rho.matrix());
        let s_avg = tr(&apply_kraus(kraus, &scale(&linalg::identity(2), 0.5)));
        let cfg = ProtocolConfig::new(set.clone(), t.channel.clone(), t.rho.clone(), t.q.clone());
        for m in 1..=6usize {
            let brute = enumerate(set.gates(), kraus, t.q.matrix(), t.rho.matrix(), m);
            let twirled = exact_sequence_average(&cfg, m).unwrap();
            let closed = d_q * s_rho * s_avg.powi(m as i32 - 1);
            assert!(
                (brute - twirled).abs() < 1e-12,
                "seed {seed} m {m}: {brute} vs {twirled}"
            );
            assert!(
                (brute - closed).abs() < 1e-12,
                "seed {seed} m {m}: {brute} vs {closed}"
            );
        }
    }
}

#[test]
fn engine_final_state_matches_reference_composition() {
    let set = pauli_gateset();
    let t = random_triple(2, 77);
    let cfg = ProtocolConfig::new(set.clone(), t.channel.clone(), t.rho.clone(), t.q.clone());
    let word = [1usize, 3, 0, 2, 2, 1];
    let mut rho = t.rho.matrix().clone();
    for &k in &word {
        let g = &set.gates()[k];
        rho = g * apply_kraus(t.channel.kraus(), &rho) * g.adjoint();
    }
    let engine = final_state(&cfg, &word).unwrap();
    assert!(linalg::max_abs_diff(&engine, &rho) < 1e-14);
}
