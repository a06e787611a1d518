//! Classical side: link configurations, the plaquette action, the brute-force
//! partition-function oracle and the Glauber-dynamics Markov chain.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensemble::{Ensemble, EnsembleMeta, Sampler};
use crate::error::{CoreError, Result};
use crate::lattice::{GaugeFixing, Lattice};
use crate::limits::enumeration_cap;

/// One assignment of `±1` to every link of a lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    values: Vec<i8>,
}

impl SpinConfig {
    pub fn ones(n_links: usize) -> Self {
        SpinConfig {
            values: vec![1; n_links],
        }
    }

    pub fn from_values(values: Vec<i8>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(CoreError::InvalidParameter(format!(
                "link {pos} has value {} (expected +1 or -1)",
                values[pos]
            )));
        }
        Ok(SpinConfig { values })
    }

    /// Full configuration for a basis index of the gauge-fixed register:
    /// bit `q` set means the link on qubit `q` is `-1`; fixed links are `+1`.
    pub fn from_basis_index(gf: &GaugeFixing, index: u64) -> Self {
        let mut config = SpinConfig::ones(gf.n_links());
        config.set_from_basis_index(gf, index);
        config
    }

    pub fn set_from_basis_index(&mut self, gf: &GaugeFixing, index: u64) {
        self.values.fill(1);
        for (q, &link) in gf.free().iter().enumerate() {
            if index >> q & 1 == 1 {
                self.values[link] = -1;
            }
        }
    }

    /// Inverse of [`SpinConfig::from_basis_index`]. `None` if a fixed link is `-1`.
    pub fn basis_index(&self, gf: &GaugeFixing) -> Option<u64> {
        if gf.fixed().iter().any(|&l| self.values[l] != 1) {
            return None;
        }
        Some(
            gf.free()
                .iter()
                .enumerate()
                .filter(|&(_, &l)| self.values[l] == -1)
                .fold(0u64, |acc, (q, _)| acc | 1 << q),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, link: usize) -> i8 {
        self.values[link]
    }

    pub fn flip(&mut self, link: usize) {
        self.values[link] = -self.values[link];
    }

    pub fn respects(&self, gf: &GaugeFixing) -> bool {
        self.values.len() == gf.n_links() && gf.fixed().iter().all(|&l| self.values[l] == 1)
    }

    /// Flip every link touching `site`: a Z2 gauge transformation with
    /// `Lambda = -1` at that site.
    pub fn gauge_transform(&mut self, lattice: &Lattice, site: usize) {
        for l in lattice.incident_links(site) {
            self.flip(l);
        }
    }

    fn check_len(&self, lattice: &Lattice) -> Result<()> {
        if self.values.len() == lattice.n_links() {
            Ok(())
        } else {
            Err(CoreError::LengthMismatch {
                expected: lattice.n_links(),
                found: self.values.len(),
                context: "configuration length vs. lattice links".into(),
            })
        }
    }

    fn product(&self, links: &[usize]) -> i32 {
        links.iter().map(|&l| self.values[l] as i32).product()
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if *v == 1 { "+1" } else { "-1" })?;
        }
        Ok(())
    }
}

/// Inverse coupling `beta = 1/g^2`, with the weak-coupling limit kept as a
/// separate variant instead of a float infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Finite(f64),
    Infinite,
}

impl Coupling {
    pub fn finite(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta >= 0.0 {
            Ok(Coupling::Finite(beta))
        } else {
            Err(CoreError::InvalidParameter(format!(
                "beta must be finite and non-negative, got {beta}"
            )))
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Coupling::Finite(b) => Some(b),
            Coupling::Infinite => None,
        }
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    Coupling::finite(beta).map(|_| ())
}

pub fn plaquette_values(config: &SpinConfig, lattice: &Lattice) -> Result<Vec<i32>> {
    config.check_len(lattice)?;
    Ok(lattice
        .plaquettes()
        .iter()
        .map(|p| config.product(&p.links))
        .collect())
}

fn plaquette_sum(config: &SpinConfig, lattice: &Lattice) -> i64 {
    lattice
        .plaquettes()
        .iter()
        .map(|p| config.product(&p.links) as i64)
        .sum()
}

/// `S = -beta * sum_plaq U_i U_j U_k U_l`.
pub fn action(config: &SpinConfig, lattice: &Lattice, beta: f64) -> Result<f64> {
    config.check_len(lattice)?;
    Ok(-beta * plaquette_sum(config, lattice) as f64)
}

pub fn plaquette_average(config: &SpinConfig, lattice: &Lattice) -> Result<f64> {
    config.check_len(lattice)?;
    Ok(plaquette_sum(config, lattice) as f64 / lattice.n_plaquettes() as f64)
}

/// Sum over the staples of `link` of the product of their three links.
pub fn staple_sum(config: &SpinConfig, lattice: &Lattice, link: usize) -> Result<i32> {
    config.check_len(lattice)?;
    Ok(lattice
        .staples_of(link)?
        .iter()
        .map(|s| config.product(&s.links))
        .sum())
}

/// Action change from flipping `link`: `2 beta U_n C_n`.
pub fn delta_action(config: &SpinConfig, link: usize, lattice: &Lattice, beta: f64) -> Result<f64> {
    let c = staple_sum(config, lattice, link)?;
    Ok(2.0 * beta * (config.get(link) as i32 * c) as f64)
}

/// Glauber acceptance `e^{-dS} / (1 + e^{-dS})`, evaluated without overflow.
pub fn glauber_acceptance(delta_s: f64) -> f64 {
    if delta_s >= 0.0 {
        let e = (-delta_s).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + delta_s.exp())
    }
}

/// Probability that one Glauber step moves `config` to the configuration
/// with `link` flipped (selection `1/N_free` times acceptance).
pub fn glauber_transition_probability(
    config: &SpinConfig,
    link: usize,
    lattice: &Lattice,
    gf: &GaugeFixing,
    beta: f64,
) -> Result<f64> {
    if gf.is_fixed(link) {
        return Ok(0.0);
    }
    let ds = delta_action(config, link, lattice, beta)?;
    Ok(glauber_acceptance(ds) / gf.n_free() as f64)
}

/// One heat-bath update: pick a free link uniformly, flip it with the Glauber
/// probability. Returns whether the link was flipped.
pub fn glauber_step<R: Rng + ?Sized>(
    config: &mut SpinConfig,
    lattice: &Lattice,
    gf: &GaugeFixing,
    beta: f64,
    rng: &mut R,
) -> bool {
    if gf.n_free() == 0 {
        return false;
    }
    let link = gf.free()[rng.gen_range(0..gf.n_free())];
    let c: i32 = lattice.staple_sum_unchecked(config, link);
    let ds = 2.0 * beta * (config.get(link) as i32 * c) as f64;
    if rng.gen::<f64>() < glauber_acceptance(ds) {
        config.flip(link);
        true
    } else {
        false
    }
}

impl Lattice {
    // hot-loop staple sum without bounds re-validation or allocation
    fn staple_sum_unchecked(&self, config: &SpinConfig, link: usize) -> i32 {
        self.plaquettes_of(link)
            .iter()
            .map(|&p| config.product(&self.plaquettes()[p].links) * config.get(link) as i32)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McmcParams {
    /// Thermalisation sweeps before the first stored configuration.
    pub n_therm: usize,
    pub n_configs: usize,
    /// Sweeps between stored configurations.
    pub stride: usize,
}

impl Default for McmcParams {
    fn default() -> Self {
        McmcParams {
            n_therm: 100,
            n_configs: 1000,
            stride: 10,
        }
    }
}

/// Glauber chain from the all-ones start. One sweep is `N_free` single-link
/// steps.
pub fn mcmc_run(
    lattice: &Lattice,
    gf: &GaugeFixing,
    beta: f64,
    params: McmcParams,
    seed: u64,
) -> Result<Ensemble> {
    check_beta(beta)?;
    if params.n_configs == 0 || params.stride == 0 {
        return Err(CoreError::InvalidParameter(
            "n_configs and stride must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut config = SpinConfig::ones(lattice.n_links());
    let sweep = gf.n_free();

    for _ in 0..params.n_therm * sweep {
        glauber_step(&mut config, lattice, gf, beta, &mut rng);
    }
    let mut configs = Vec::with_capacity(params.n_configs);
    for i in 0..params.n_configs {
        if i > 0 {
            for _ in 0..params.stride * sweep {
                glauber_step(&mut config, lattice, gf, beta, &mut rng);
            }
        }
        configs.push(config.clone());
    }

    let mut meta = EnsembleMeta::new(lattice, beta, Sampler::Mcmc, seed);
    meta.fixed_links = Some(gf.fixed().to_vec());
    meta.params
        .insert("n_therm".into(), params.n_therm.to_string());
    meta.params
        .insert("stride".into(), params.stride.to_string());
    Ensemble::new(meta, configs)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

const ENUMERATION_CHUNK: u64 = 1 << 12;

/// `<O> = (1/Z) sum_U O(U) e^{-S(U)}` by enumerating every gauge-fixed
/// configuration. Weights are shifted by the action lower bound
/// `-beta N_plaq` so they never exceed one.
///
/// The enumeration is split into fixed-size chunks whose partial sums are
/// combined in order, so the result does not depend on the thread count.
pub fn exact_expectation<F>(
    lattice: &Lattice,
    gf: &GaugeFixing,
    beta: f64,
    observable: F,
) -> Result<f64>
where
    F: Fn(&SpinConfig) -> f64 + Sync,
{
    check_beta(beta)?;
    let cap = enumeration_cap();
    if gf.n_free() > cap {
        return Err(CoreError::CapExceeded {
            n_free: gf.n_free(),
            cap,
        });
    }
    let s_min = -beta * lattice.n_plaquettes() as f64;
    let total = 1u64 << gf.n_free();
    let n_chunks = total.div_ceil(ENUMERATION_CHUNK);

    let partials: Vec<(CompensatedSum, CompensatedSum)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut z = CompensatedSum::default();
            let mut num = CompensatedSum::default();
            let mut config = SpinConfig::ones(lattice.n_links());
            let start = chunk * ENUMERATION_CHUNK;
            for index in start..(start + ENUMERATION_CHUNK).min(total) {
                config.set_from_basis_index(gf, index);
                let s = -beta * plaquette_sum(&config, lattice) as f64;
                let w = (-(s - s_min)).exp();
                z.add(w);
                num.add(w * observable(&config));
            }
            (z, num)
        })
        .collect();

    let mut z = CompensatedSum::default();
    let mut num = CompensatedSum::default();
    for (pz, pn) in &partials {
        z.add(pz.sum);
        z.add(pz.carry);
        num.add(pn.sum);
        num.add(pn.carry);
    }
    Ok(num.value() / z.value())
}

/// Exact average plaquette, the benchmark observable.
pub fn exact_plaquette(lattice: &Lattice, gf: &GaugeFixing, beta: f64) -> Result<f64> {
    exact_expectation(lattice, gf, beta, |c| {
        plaquette_sum(c, lattice) as f64 / lattice.n_plaquettes() as f64
    })
}
