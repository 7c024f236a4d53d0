//! Shared fixtures for the benchmarks.

use mbl_core::hamiltonian::{build_hamiltonian, sample_disorder, Boundary, SparseHamiltonian};
use mbl_core::propagator::{lanczos_expv, KrylovConfig, StateVector};
use mbl_core::states::{product_state, Preset};

/// Periodic Heisenberg chain (Δ = 1) at disorder `w`, realization 0.
pub fn chain(len: usize, w: f64) -> SparseHamiltonian {
    let d = sample_disorder(len, w, 2019, 0).expect("valid disorder");
    build_hamiltonian(len, 1.0, 1.0, &d, Boundary::Periodic).expect("valid chain")
}

pub fn neel_x(len: usize) -> StateVector {
    product_state(&Preset::NeelX.expand(len)).expect("valid preset")
}

/// A generic entangled state: the Néel state evolved for a while.
pub fn evolved(len: usize) -> StateVector {
    lanczos_expv(&chain(len, 5.0), &neel_x(len), 10.0, &KrylovConfig::default()).expect("propagation")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let h = chain(6, 1.0);
        assert_eq!(h.dim(), 64);
        assert!((evolved(6).norm() - 1.0).abs() < 1e-10);
    }
}
