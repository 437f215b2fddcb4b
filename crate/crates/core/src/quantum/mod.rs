//! Exact dynamics of the long-range XY chain in fixed-magnetization sectors.

mod basis;
mod hamiltonian;
mod propagate;
mod single;
mod state;
mod trace;

pub use basis::{binomial, SectorBasis, MAX_SITES};
pub use hamiltonian::{apply_hamiltonian, apply_hamiltonian_rows, dense_hamiltonian, energy};
pub use propagate::{evolve, EvolutionEngine, Method, Propagator};
pub use single::single_excitation_profile;
pub use state::{measure_sigma_z, spin, QuantumState};
pub use trace::{
    full_trace_correlation, sector_trace_correlation, typicality_trace, DEFAULT_BRUTE_FORCE_CAP,
};
