//! Quantum sampling of the Euclidean path integral of Z2 lattice gauge
//! theory, simulated on a classical statevector.
//!
//! The pipeline: build a hypercubic [`lattice::Lattice`], gauge fix it,
//! prepare the ground state of the Glauber parent Hamiltonian by Trotterised
//! adiabatic evolution ([`quantum`]), measure it to obtain gauge
//! configurations ([`ensemble`]), and check everything against brute-force
//! enumeration and a classical Markov chain ([`classical`]).

pub mod classical;
pub mod eigen;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod limits;
pub mod quantum;
pub mod stats;

pub use classical::{Coupling, SpinConfig};
pub use ensemble::{Ensemble, EnsembleMeta, Sampler};
pub use error::{CoreError, Result};
pub use lattice::{gauge_fix, Boundary, GaugeFixing, Lattice};
pub use quantum::{Schedule, StartKind, StateVector};
pub use stats::{Method, ObservableEstimate};
