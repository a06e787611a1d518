//! Parent Hamiltonian of the Glauber chain, its Trotterised adiabatic
//! evolution on a statevector, and measurement sampling.
//!
//! Qubit `q` carries free link `gf.free()[q]`. Bit value 0 is `U = +1`
//! (Z eigenvalue +1), bit value 1 is `U = -1`. The Hamiltonian is
//!
//! ```text
//! H = sum_n 1/2 (I - tanh(beta C_n) Z_n - sech(beta C_n) X_n)
//! ```
//!
//! where `C_n` is the (diagonal) staple sum around link `n`. For each value
//! of `C_n` the bracket is a rank-one projector, so every term exponentiates
//! in closed form: `exp(-i dt h) = I + (e^{-i dt} - 1) h`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classical::{check_beta, Coupling, SpinConfig};
use crate::eigen::{lowest_eigenpairs, LanczosOptions, LinearOperator};
use crate::ensemble::{Ensemble, EnsembleMeta, Sampler};
use crate::error::{CoreError, Result};
use crate::lattice::{GaugeFixing, Lattice};
use crate::limits::{enumeration_cap, DENSE_HAMILTONIAN_MAX_QUBITS, EIGENSOLVER_MAX_QUBITS};

/// Qubit masks are packed into a `u64`.
const MAX_MASK_QUBITS: usize = 63;

fn parity_sign(x: u64) -> i32 {
    1 - 2 * (x.count_ones() & 1) as i32
}

fn check_register(n_free: usize) -> Result<()> {
    let cap = enumeration_cap().min(MAX_MASK_QUBITS);
    if n_free > cap {
        Err(CoreError::CapExceeded { n_free, cap })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    n_qubits: usize,
}

impl StateVector {
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector { amps, n_qubits }
    }

    /// Equal superposition: the `beta = 0` ground state.
    pub fn uniform(n_qubits: usize) -> Self {
        let a = (1u64 << n_qubits) as f64;
        StateVector {
            amps: vec![Complex64::new(a.sqrt().recip(), 0.0); 1 << n_qubits],
            n_qubits,
        }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(CoreError::InvalidParameter(format!(
                "amplitude count {} is not a power of two",
                amps.len()
            )));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        let state = StateVector { amps, n_qubits };
        if (state.norm() - 1.0).abs() > 1e-10 {
            return Err(CoreError::InvalidParameter(format!(
                "state is not normalised (norm {})",
                state.norm()
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Plaquettes as qubit masks; fixed links contribute `+1` and are dropped.
#[derive(Debug, Clone)]
pub struct PlaquetteMasks {
    masks: Vec<u64>,
    n_qubits: usize,
}

impl PlaquetteMasks {
    pub fn new(lattice: &Lattice, gf: &GaugeFixing) -> Result<Self> {
        check_register(gf.n_free())?;
        Ok(PlaquetteMasks {
            masks: lattice
                .plaquettes()
                .iter()
                .map(|p| gf.qubit_mask(&p.links))
                .collect(),
            n_qubits: gf.n_free(),
        })
    }

    pub fn plaquette_sum(&self, index: u64) -> i32 {
        self.masks.iter().map(|&m| parity_sign(index & m)).sum()
    }

    /// Classical action of basis state `index`, evaluated on the fly.
    pub fn action(&self, index: u64, beta: f64) -> f64 {
        -beta * self.plaquette_sum(index) as f64
    }

    pub fn n_plaquettes(&self) -> usize {
        self.masks.len()
    }
}

/// Diagonal of the action operator over all `2^N_free` basis states.
pub fn encode_action_diagonal(lattice: &Lattice, gf: &GaugeFixing, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let masks = PlaquetteMasks::new(lattice, gf)?;
    Ok((0..1u64 << masks.n_qubits)
        .map(|b| masks.action(b, beta))
        .collect())
}

/// One Glauber term `h_n` of the parent Hamiltonian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkTerm {
    pub qubit: usize,
    pub link: usize,
    /// Free links appearing in the staples of `link`, ascending qubit order.
    pub neighbor_qubits: Vec<usize>,
    /// `staple_table[a]` is `C_n` when neighbour `neighbor_qubits[i]` has bit
    /// `i` of `a`.
    pub staple_table: Vec<i32>,
    /// One qubit mask per staple.
    pub staple_masks: Vec<u64>,
}

impl LinkTerm {
    pub fn n_staples(&self) -> usize {
        self.staple_masks.len()
    }

    /// `C_n` for a full basis index. Bit `qubit` of `index` is ignored.
    #[inline]
    pub fn staple_sum(&self, index: u64) -> i32 {
        self.staple_masks
            .iter()
            .map(|&m| parity_sign(index & m))
            .sum()
    }

    /// Table lookup route to `C_n`, gathering the neighbour bits first.
    pub fn staple_sum_from_table(&self, index: u64) -> i32 {
        let key = self
            .neighbor_qubits
            .iter()
            .enumerate()
            .fold(0usize, |k, (i, &q)| k | (((index >> q) & 1) as usize) << i);
        self.staple_table[key]
    }
}

pub fn build_link_terms(lattice: &Lattice, gf: &GaugeFixing) -> Result<Vec<LinkTerm>> {
    check_register(gf.n_free())?;
    gf.free()
        .iter()
        .enumerate()
        .map(|(qubit, &link)| {
            let staple_masks: Vec<u64> = lattice
                .staples_of(link)?
                .iter()
                .map(|s| gf.qubit_mask(&s.links))
                .collect();
            let all = staple_masks.iter().fold(0u64, |a, &m| a | m);
            let neighbor_qubits: Vec<usize> =
                (0..gf.n_free()).filter(|&q| all >> q & 1 == 1).collect();
            let staple_table = (0..1usize << neighbor_qubits.len())
                .map(|a| {
                    let index = neighbor_qubits
                        .iter()
                        .enumerate()
                        .fold(0u64, |idx, (i, &q)| idx | (((a >> i) & 1) as u64) << q);
                    staple_masks.iter().map(|&m| parity_sign(index & m)).sum()
                })
                .collect();
            Ok(LinkTerm {
                qubit,
                link,
                neighbor_qubits,
                staple_table,
                staple_masks,
            })
        })
        .collect()
}

/// `(tanh(beta c), sech(beta c))`, with the `beta = inf` limit taken
/// analytically.
pub fn term_coefficients(c: i32, beta: Coupling) -> (f64, f64) {
    match beta {
        Coupling::Finite(b) => {
            let x = b * c as f64;
            (x.tanh(), x.cosh().recip())
        }
        Coupling::Infinite if c == 0 => (0.0, 1.0),
        Coupling::Infinite => (c.signum() as f64, 0.0),
    }
}

/// Largest staple count among the terms; staple sums lie in `[-k, k]`.
fn max_staples(terms: &[LinkTerm]) -> usize {
    terms.iter().map(LinkTerm::n_staples).max().unwrap_or(0)
}

/// Matrix-free `H(beta)` acting on real vectors.
pub struct ParentHamiltonian<'a> {
    terms: &'a [LinkTerm],
    n_qubits: usize,
    /// `(tanh, sech)` indexed by `c + max_staples`.
    coefficients: Vec<(f64, f64)>,
    offset: i32,
}

impl<'a> ParentHamiltonian<'a> {
    pub fn new(terms: &'a [LinkTerm], n_qubits: usize, beta: Coupling) -> Self {
        let k = max_staples(terms) as i32;
        ParentHamiltonian {
            terms,
            n_qubits,
            coefficients: (-k..=k).map(|c| term_coefficients(c, beta)).collect(),
            offset: k,
        }
    }
}

impl LinearOperator for ParentHamiltonian<'_> {
    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n_terms = self.terms.len() as f64;
        for (o, v) in out.iter_mut().zip(x) {
            *o = 0.5 * n_terms * v;
        }
        for term in self.terms {
            let bit = 1usize << term.qubit;
            for i in 0..x.len() {
                let (t, s) = self.coefficients[(term.staple_sum(i as u64) + self.offset) as usize];
                let z = if i & bit == 0 { 1.0 } else { -1.0 };
                out[i] -= 0.5 * (t * z * x[i] + s * x[i ^ bit]);
            }
        }
    }
}

/// Dense `H(beta)` for verification on small registers.
pub fn build_dense_hamiltonian(
    terms: &[LinkTerm],
    n_qubits: usize,
    beta: Coupling,
) -> Result<DMatrix<f64>> {
    if n_qubits > DENSE_HAMILTONIAN_MAX_QUBITS {
        return Err(CoreError::CapExceeded {
            n_free: n_qubits,
            cap: DENSE_HAMILTONIAN_MAX_QUBITS,
        });
    }
    let dim = 1usize << n_qubits;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for term in terms {
        let bit = 1usize << term.qubit;
        for i in 0..dim {
            let (t, s) = term_coefficients(term.staple_sum(i as u64), beta);
            let z = if i & bit == 0 { 1.0 } else { -1.0 };
            h[(i, i)] += 0.5 * (1.0 - t * z);
            h[(i, i ^ bit)] -= 0.5 * s;
        }
    }
    Ok(h)
}

/// `amps[b] = e^{-S(b)/2} / sqrt(Z)`, real and positive.
pub fn ground_state_reference(
    lattice: &Lattice,
    gf: &GaugeFixing,
    beta: Coupling,
) -> Result<StateVector> {
    let masks = PlaquetteMasks::new(lattice, gf)?;
    let beta = match beta {
        Coupling::Infinite => return Ok(StateVector::basis_state(gf.n_free(), 0)),
        Coupling::Finite(b) => {
            check_beta(b)?;
            b
        }
    };
    let s_min = -beta * masks.n_plaquettes() as f64;
    let weights: Vec<f64> = (0..1u64 << gf.n_free())
        .map(|b| (-(masks.action(b, beta) - s_min) / 2.0).exp())
        .collect();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    Ok(StateVector {
        amps: weights
            .iter()
            .map(|w| Complex64::new(w / norm, 0.0))
            .collect(),
        n_qubits: gf.n_free(),
    })
}

/// `exp(-i dt h)` for every staple value in `[-k, k]`, as 2x2 matrices
/// `[[u00, u01], [u10, u11]]` in the (U=+1, U=-1) basis.
fn term_unitaries(k: usize, beta: Coupling, dt: f64) -> Vec<[Complex64; 4]> {
    let phase = Complex64::from_polar(1.0, -dt) - 1.0;
    (-(k as i32)..=k as i32)
        .map(|c| {
            let (t, s) = term_coefficients(c, beta);
            let one = Complex64::new(1.0, 0.0);
            [
                one + phase * 0.5 * (1.0 - t),
                phase * (-0.5 * s),
                phase * (-0.5 * s),
                one + phase * 0.5 * (1.0 + t),
            ]
        })
        .collect()
}

fn apply_term_with(
    state: &mut StateVector,
    term: &LinkTerm,
    unitaries: &[[Complex64; 4]],
    offset: i32,
) {
    let bit = 1usize << term.qubit;
    let dim = state.amps.len();
    let amps = &mut state.amps;
    for hi in (0..dim).step_by(bit << 1) {
        for i in hi..hi + bit {
            let j = i | bit;
            let u = &unitaries[(term.staple_sum(i as u64) + offset) as usize];
            let (a0, a1) = (amps[i], amps[j]);
            amps[i] = u[0] * a0 + u[1] * a1;
            amps[j] = u[2] * a0 + u[3] * a1;
        }
    }
}

/// Apply `exp(-i dt h_n)` exactly, in place.
pub fn apply_term_evolution(state: &mut StateVector, term: &LinkTerm, beta: Coupling, dt: f64) {
    let k = term.n_staples();
    let unitaries = term_unitaries(k, beta, dt);
    apply_term_with(state, term, &unitaries, k as i32);
}

/// One first-order Trotter step: every term once, ascending qubit order.
pub fn trotter_step(state: &mut StateVector, terms: &[LinkTerm], beta: Coupling, dt: f64) {
    let k = max_staples(terms);
    let unitaries = term_unitaries(k, beta, dt);
    for term in terms {
        apply_term_with(state, term, &unitaries, k as i32);
    }
}

/// Registers up to this size cache a per-pair staple lookup for every term.
const TABLE_MAX_QUBITS: usize = 20;

/// Repeated Trotter steps over a fixed set of terms.
///
/// For small registers the staple value of every amplitude pair is
/// tabulated once, which removes the bit gathering from the inner loop.
pub struct TrotterPropagator<'a> {
    terms: &'a [LinkTerm],
    k: usize,
    /// Per term, `c + k` for each pair in iteration order.
    tables: Option<Vec<Vec<u8>>>,
}

impl<'a> TrotterPropagator<'a> {
    pub fn new(terms: &'a [LinkTerm], n_qubits: usize) -> Self {
        let k = max_staples(terms);
        let tables = (n_qubits <= TABLE_MAX_QUBITS).then(|| {
            terms
                .iter()
                .map(|term| {
                    let bit = 1usize << term.qubit;
                    let dim = 1usize << n_qubits;
                    let mut table = Vec::with_capacity(dim / 2);
                    for hi in (0..dim).step_by(bit << 1) {
                        for i in hi..hi + bit {
                            table.push((term.staple_sum(i as u64) + k as i32) as u8);
                        }
                    }
                    table
                })
                .collect()
        });
        TrotterPropagator { terms, k, tables }
    }

    pub fn step(&self, state: &mut StateVector, beta: Coupling, dt: f64) {
        let unitaries = term_unitaries(self.k, beta, dt);
        let Some(tables) = &self.tables else {
            for term in self.terms {
                apply_term_with(state, term, &unitaries, self.k as i32);
            }
            return;
        };
        let dim = state.amps.len();
        let amps = &mut state.amps;
        for (term, table) in self.terms.iter().zip(tables) {
            let bit = 1usize << term.qubit;
            for (block, keys) in (0..dim).step_by(bit << 1).zip(table.chunks_exact(bit)) {
                let (lo, up) = amps[block..block + (bit << 1)].split_at_mut(bit);
                for ((a, b), &c) in lo.iter_mut().zip(up.iter_mut()).zip(keys) {
                    let u = &unitaries[c as usize];
                    let (a0, a1) = (*a, *b);
                    *a = u[0] * a0 + u[1] * a1;
                    *b = u[2] * a0 + u[3] * a1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StartKind {
    /// Uniform superposition, `beta' = 0`.
    Hot,
    /// All links `+1`, `beta' = inf`.
    Cold,
}

impl fmt::Display for StartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StartKind::Hot => "hot",
            StartKind::Cold => "cold",
        })
    }
}

impl FromStr for StartKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hot" => Ok(StartKind::Hot),
            "cold" => Ok(StartKind::Cold),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown start '{other}' (expected hot or cold)"
            ))),
        }
    }
}

/// Adiabatic path from the start coupling to `beta_target` over time `T`.
///
/// Hot starts ramp `beta'` linearly; cold starts ramp `g^2 = 1/beta'`
/// linearly, i.e. `beta'(t) = beta T / t`. Each Trotter step uses the
/// coupling at its midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub kind: StartKind,
    pub beta_target: f64,
    pub total_time: f64,
    steps: usize,
}

impl Schedule {
    /// `dt` is shrunk so that `T / dt` is a whole number of steps.
    pub fn new(kind: StartKind, beta_target: f64, total_time: f64, dt: f64) -> Result<Self> {
        check_beta(beta_target)?;
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "total time must be positive, got {total_time}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let ratio = total_time / dt;
        // tolerate representation error in e.g. 0.6 / 0.2
        let steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
            ratio.round()
        } else {
            ratio.ceil()
        }
        .max(1.0) as usize;
        Ok(Schedule {
            kind,
            beta_target,
            total_time,
            steps,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    pub fn coupling_at(&self, t: f64) -> Coupling {
        let s = t / self.total_time;
        match self.kind {
            StartKind::Hot => Coupling::Finite(self.beta_target * s),
            StartKind::Cold if s <= 0.0 => Coupling::Infinite,
            StartKind::Cold => Coupling::Finite(self.beta_target / s),
        }
    }

    /// Coupling used during step `k` (midpoint rule).
    pub fn step_coupling(&self, k: usize) -> Coupling {
        self.coupling_at((k as f64 + 0.5) * self.dt())
    }

    pub fn initial_state(&self, n_qubits: usize) -> StateVector {
        match self.kind {
            StartKind::Hot => StateVector::uniform(n_qubits),
            StartKind::Cold => StateVector::basis_state(n_qubits, 0),
        }
    }
}

pub fn adiabatic_evolve(
    lattice: &Lattice,
    gf: &GaugeFixing,
    schedule: &Schedule,
) -> Result<StateVector> {
    let terms = build_link_terms(lattice, gf)?;
    let mut state = schedule.initial_state(gf.n_free());
    evolve_schedule(&mut state, &terms, schedule);
    Ok(state)
}

/// Run every Trotter step of `schedule` on `state`.
pub fn evolve_schedule(state: &mut StateVector, terms: &[LinkTerm], schedule: &Schedule) {
    let dt = schedule.dt();
    let propagator = TrotterPropagator::new(terms, state.n_qubits);
    for k in 0..schedule.steps() {
        propagator.step(state, schedule.step_coupling(k), dt);
    }
}

/// Evolve for `steps` Trotter steps at a fixed coupling.
pub fn evolve_fixed(
    state: &mut StateVector,
    terms: &[LinkTerm],
    beta: Coupling,
    dt: f64,
    steps: usize,
) {
    let propagator = TrotterPropagator::new(terms, state.n_qubits);
    for _ in 0..steps {
        propagator.step(state, beta, dt);
    }
}

/// `(1/N_plaq) sum_plaq <Z_i Z_j Z_k Z_l>`.
pub fn expectation_plaquette(
    state: &StateVector,
    lattice: &Lattice,
    gf: &GaugeFixing,
) -> Result<f64> {
    if state.n_qubits != gf.n_free() {
        return Err(CoreError::LengthMismatch {
            expected: gf.n_free(),
            found: state.n_qubits,
            context: "statevector qubits vs. free links".into(),
        });
    }
    let masks = PlaquetteMasks::new(lattice, gf)?;
    let total: f64 = state
        .amps
        .iter()
        .enumerate()
        .map(|(b, a)| a.norm_sqr() * masks.plaquette_sum(b as u64) as f64)
        .sum();
    Ok(total / masks.n_plaquettes() as f64)
}

/// Measure every qubit `shots` times, returning full link configurations.
pub fn sample_configs(
    state: &StateVector,
    lattice: &Lattice,
    gf: &GaugeFixing,
    beta: f64,
    shots: usize,
    seed: u64,
) -> Result<Ensemble> {
    if state.n_qubits != gf.n_free() {
        return Err(CoreError::LengthMismatch {
            expected: gf.n_free(),
            found: state.n_qubits,
            context: "statevector qubits vs. free links".into(),
        });
    }
    let probs = state.probabilities();
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    let cdf: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p / total;
            acc
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = cdf.len() - 1;
    let configs = (0..shots)
        .map(|_| {
            let u: f64 = rng.gen();
            let index = cdf.partition_point(|&c| c <= u).min(last);
            SpinConfig::from_basis_index(gf, index as u64)
        })
        .collect();

    let mut meta = EnsembleMeta::new(lattice, beta, Sampler::Quantum, seed);
    meta.fixed_links = Some(gf.fixed().to_vec());
    meta.params.insert("shots".into(), shots.to_string());
    Ensemble::new(meta, configs)
}

/// The `k` lowest eigenvalues of `H(beta)` from the matrix-free operator.
pub fn lowest_eigenvalues(
    terms: &[LinkTerm],
    n_qubits: usize,
    beta: Coupling,
    k: usize,
) -> Result<Vec<f64>> {
    if n_qubits > EIGENSOLVER_MAX_QUBITS {
        return Err(CoreError::CapExceeded {
            n_free: n_qubits,
            cap: EIGENSOLVER_MAX_QUBITS,
        });
    }
    let op = ParentHamiltonian::new(terms, n_qubits, beta);
    Ok(lowest_eigenpairs(&op, k, LanczosOptions::default())?
        .into_iter()
        .map(|p| p.value)
        .collect())
}
