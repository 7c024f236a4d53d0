use mbl_core::hamiltonian::{build_hamiltonian, dense_spectrum, sample_disorder, Boundary};
use mbl_core::propagator::{evolve_on_grid, exact_expv, lanczos_expv, EvolveOptions, KrylovConfig, PropagatorKind, TimeGrid};
use mbl_core::states::{product_state, Preset};

#[test]
fn krylov_matches_dense_for_every_small_chain() {
    for len in 2..=10 {
        for (k, boundary) in [Boundary::Open, Boundary::Periodic].into_iter().enumerate() {
            let d = sample_disorder(len, 4.0, 11, (len * 2 + k) as u64).unwrap();
            let h = build_hamiltonian(len, 1.0, 1.0, &d, boundary).unwrap();
            let eig = dense_spectrum(&h).unwrap();
            let psi = product_state(&Preset::DomainsY.expand(len)).unwrap();
            let a = lanczos_expv(&h, &psi, 37.0, &KrylovConfig::default()).unwrap();
            let b = exact_expv(&eig, &psi, 37.0).unwrap();
            assert!(a.fidelity(&b) >= 1.0 - 1e-9, "L = {len}, {boundary:?}");
        }
    }
}

#[test]
fn all_propagation_modes_agree_on_a_grid() {
    let d = sample_disorder(6, 10.0, 3, 0).unwrap();
    let h = build_hamiltonian(6, 1.0, 1.0, &d, Boundary::Periodic).unwrap();
    let psi = product_state(&Preset::NeelX.expand(6)).unwrap();
    let grid = TimeGrid::logarithmic(0.1, 1e3, 10).unwrap();
    let collect = |opts: EvolveOptions| {
        let mut states = Vec::new();
        evolve_on_grid(&h, &psi, &grid, &opts, |_, s| {
            states.push(s.clone());
            Ok(())
        })
        .unwrap();
        states
    };
    let full = collect(EvolveOptions::default());
    let blocked = collect(EvolveOptions {
        sector_blocked: true,
        ..Default::default()
    });
    let exact = collect(EvolveOptions {
        propagator: PropagatorKind::Exact,
        ..Default::default()
    });
    for ((f, b), e) in full.iter().zip(&blocked).zip(&exact) {
        let max_diff = f
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-8, "{max_diff}");
        assert!(f.fidelity(e) >= 1.0 - 1e-9);
    }
}
