//! Size caps for exhaustive enumeration and dense statevectors.

use std::env;

pub const MAX_FREE_LINKS_ENV: &str = "Z2Q_MAX_FREE_LINKS";
pub const DEFAULT_MAX_FREE_LINKS: usize = 24;
/// Dense Hamiltonians are for verification only.
pub const DENSE_HAMILTONIAN_MAX_QUBITS: usize = 12;
pub const EIGENSOLVER_MAX_QUBITS: usize = 20;

/// Largest number of free links that may be enumerated or held as a
/// statevector. Reads `Z2Q_MAX_FREE_LINKS`, falling back to 24.
pub fn enumeration_cap() -> usize {
    env::var(MAX_FREE_LINKS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .map(|cap: usize| cap.min(40))
        .unwrap_or(DEFAULT_MAX_FREE_LINKS)
}
