//! Dynamics of the random-field XXZ chain and the analysis of its local
//! entanglement: sparse Hamiltonians in the `z` basis, Lanczos time
//! evolution, single-site and block entropies, power spectra, and
//! logarithmic-growth fits over disorder ensembles.

pub mod analysis;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod observables;
pub mod propagator;
pub mod runner;
pub mod spectral;
pub mod states;

pub use error::{Error, Result};
pub use hamiltonian::{
    build_hamiltonian, build_phenomenological_two_spin, dense_spectrum, sample_disorder, Boundary,
    DisorderRealization, EigenDecomposition, SparseHamiltonian,
};
pub use observables::{entropy_record, EntropyRecord};
pub use propagator::{
    evolve_on_grid, exact_expv, lanczos_expv, EvolveOptions, KrylovConfig, PropagatorKind,
    StateVector, TimeGrid,
};
pub use states::{hub_stats, product_state, HubStats, Preset, ProductStateSpec};
pub use runner::{aggregate, run_experiment, EnsembleResult, EnsembleSeries, ExperimentConfig};
