//! Stored gauge configurations and their analysis.
//!
//! # File format
//!
//! UTF-8 text with LF line endings. A header of `key=value` lines is followed
//! by one line per configuration holding every link value as `+1` or `-1`,
//! space separated, in global link order:
//!
//! ```text
//! format_version=1
//! dims=2,2,2,2
//! boundary=open
//! beta=0.7
//! sampler=quantum
//! seed=42
//! n_configs=2
//! n_links=32
//! fixed_links=0,1,2,...
//! param.T=40
//! checksum=1c291ca3
//! +1 +1 -1 ...
//! +1 -1 +1 ...
//! ```
//!
//! `checksum` is the CRC-32 of the body bytes. `fixed_links` is `none` when
//! no gauge fixing was applied. Keys prefixed `param.` carry free-form
//! creation parameters. The header ends at the first line without `=`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use tempfile::NamedTempFile;

use crate::classical::{check_beta, SpinConfig};
use crate::error::{CoreError, Result};
use crate::lattice::{Boundary, GaugeFixing, Lattice};
use crate::stats::{self, Method, ObservableEstimate};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampler {
    Quantum,
    Mcmc,
}

impl Sampler {
    /// Shots are independent; Markov-chain samples are autocorrelated.
    pub fn default_method(self) -> Method {
        match self {
            Sampler::Quantum => Method::Plain,
            Sampler::Mcmc => Method::Binned,
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampler::Quantum => "quantum",
            Sampler::Mcmc => "mcmc",
        })
    }
}

impl FromStr for Sampler {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(Sampler::Quantum),
            "mcmc" => Ok(Sampler::Mcmc),
            other => Err(CoreError::MalformedHeader(format!(
                "unknown sampler '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMeta {
    pub dims: Vec<usize>,
    pub boundary: Boundary,
    pub beta: f64,
    pub sampler: Sampler,
    pub seed: u64,
    /// Spanning-tree links forced to `+1`, if the ensemble is gauge fixed.
    pub fixed_links: Option<Vec<usize>>,
    pub params: BTreeMap<String, String>,
}

impl EnsembleMeta {
    pub fn new(lattice: &Lattice, beta: f64, sampler: Sampler, seed: u64) -> Self {
        EnsembleMeta {
            dims: lattice.dims().to_vec(),
            boundary: lattice.boundary(),
            beta,
            sampler,
            seed,
            fixed_links: None,
            params: BTreeMap::new(),
        }
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(&self.dims, self.boundary)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    meta: EnsembleMeta,
    configs: Vec<SpinConfig>,
}

impl Ensemble {
    pub fn new(meta: EnsembleMeta, configs: Vec<SpinConfig>) -> Result<Self> {
        check_beta(meta.beta)?;
        let lattice = meta.lattice()?;
        let n_links = lattice.n_links();
        if let Some(fixed) = &meta.fixed_links {
            if let Some(&bad) = fixed.iter().find(|&&l| l >= n_links) {
                return Err(CoreError::LinkOutOfRange {
                    index: bad,
                    n_links,
                });
            }
        }
        for (i, c) in configs.iter().enumerate() {
            if c.len() != n_links {
                return Err(CoreError::LengthMismatch {
                    expected: n_links,
                    found: c.len(),
                    context: format!("configuration {i}"),
                });
            }
            if let Some(fixed) = &meta.fixed_links {
                if let Some(&l) = fixed.iter().find(|&&l| c.get(l) != 1) {
                    return Err(CoreError::MalformedConfig {
                        line: i,
                        reason: format!("gauge-fixed link {l} is -1"),
                    });
                }
            }
        }
        Ok(Ensemble { meta, configs })
    }

    pub fn meta(&self) -> &EnsembleMeta {
        &self.meta
    }

    /// Record a creation parameter under `param.<key>` in the header.
    pub fn set_param(&mut self, key: &str, value: impl ToString) -> Result<()> {
        let value = value.to_string();
        if key.is_empty() || key.contains(['=', '\n']) || value.contains('\n') {
            return Err(CoreError::InvalidParameter(format!(
                "unusable header parameter '{key}'"
            )));
        }
        self.meta.params.insert(key.to_string(), value);
        Ok(())
    }

    pub fn configs(&self) -> &[SpinConfig] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn gauge_fixing(&self) -> Option<GaugeFixing> {
        let lattice = self.meta.lattice().ok()?;
        GaugeFixing::from_fixed(lattice.n_links(), self.meta.fixed_links.as_ref()?)
    }

    /// Append another ensemble drawn on the same lattice at the same coupling.
    pub fn concat(&self, other: &Ensemble) -> Result<Ensemble> {
        let (a, b) = (&self.meta, &other.meta);
        if a.dims != b.dims || a.boundary != b.boundary || a.beta.to_bits() != b.beta.to_bits() {
            return Err(CoreError::InvalidParameter(
                "ensembles differ in lattice or coupling".into(),
            ));
        }
        let mut configs = self.configs.clone();
        configs.extend_from_slice(&other.configs);
        Ok(Ensemble {
            meta: self.meta.clone(),
            configs,
        })
    }

    pub fn series<F: Fn(&SpinConfig) -> f64>(&self, observable: F) -> Vec<f64> {
        self.configs.iter().map(observable).collect()
    }

    fn body(&self) -> String {
        let mut body = String::with_capacity(self.configs.len() * (3 * self.meta_links() + 1));
        for c in &self.configs {
            body.push_str(&c.to_string());
            body.push('\n');
        }
        body
    }

    fn meta_links(&self) -> usize {
        self.configs.first().map_or(0, SpinConfig::len)
    }

    pub fn to_text(&self) -> Result<String> {
        let lattice = self.meta.lattice()?;
        let body = self.body();
        let m = &self.meta;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("format_version", FORMAT_VERSION.to_string());
        kv("dims", join(&m.dims));
        kv("boundary", m.boundary.to_string());
        kv("beta", m.beta.to_string());
        kv("sampler", m.sampler.to_string());
        kv("seed", m.seed.to_string());
        kv("n_configs", self.configs.len().to_string());
        kv("n_links", lattice.n_links().to_string());
        kv(
            "fixed_links",
            m.fixed_links.as_deref().map_or_else(|| "none".into(), join),
        );
        for (k, v) in &m.params {
            kv(&format!("param.{k}"), v.clone());
        }
        kv(
            "checksum",
            format!("{:08x}", crc32fast::hash(body.as_bytes())),
        );
        out.push_str(&body);
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Ensemble> {
        let mut header: BTreeMap<&str, &str> = BTreeMap::new();
        let mut params = BTreeMap::new();
        let mut rest = text;
        while let Some((line, tail)) = rest.split_once('\n') {
            let Some((k, v)) = line.split_once('=') else {
                break;
            };
            if let Some(p) = k.strip_prefix("param.") {
                params.insert(p.to_string(), v.to_string());
            } else if header.insert(k, v).is_some() {
                return Err(CoreError::MalformedHeader(format!("duplicate key '{k}'")));
            }
            rest = tail;
        }
        let body = rest;

        let get = |k: &str| {
            header
                .get(k)
                .copied()
                .ok_or_else(|| CoreError::MalformedHeader(format!("missing key '{k}'")))
        };
        fn parse<T: FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| CoreError::MalformedHeader(format!("bad value for '{k}': '{v}'")))
        }
        fn parse_list(k: &str, v: &str) -> Result<Vec<usize>> {
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|x| parse(k, x)).collect()
        }

        let version: u32 = parse("format_version", get("format_version")?)?;
        if version != FORMAT_VERSION {
            return Err(CoreError::MalformedHeader(format!(
                "unsupported format_version {version}"
            )));
        }
        for k in header.keys() {
            if !matches!(
                *k,
                "format_version"
                    | "dims"
                    | "boundary"
                    | "beta"
                    | "sampler"
                    | "seed"
                    | "n_configs"
                    | "n_links"
                    | "fixed_links"
                    | "checksum"
            ) {
                return Err(CoreError::MalformedHeader(format!("unknown key '{k}'")));
            }
        }
        let dims = parse_list("dims", get("dims")?)?;
        let boundary: Boundary = get("boundary")?
            .parse()
            .map_err(|e: CoreError| CoreError::MalformedHeader(e.to_string()))?;
        let beta: f64 = parse("beta", get("beta")?)?;
        let sampler: Sampler = get("sampler")?.parse()?;
        let seed: u64 = parse("seed", get("seed")?)?;
        let n_configs: usize = parse("n_configs", get("n_configs")?)?;
        let n_links: usize = parse("n_links", get("n_links")?)?;
        let fixed_links = match get("fixed_links")? {
            "none" => None,
            v => Some(parse_list("fixed_links", v)?),
        };
        let checksum = u32::from_str_radix(get("checksum")?, 16)
            .map_err(|_| CoreError::MalformedHeader("checksum is not hex".into()))?;

        let lattice =
            Lattice::new(&dims, boundary).map_err(|e| CoreError::MalformedHeader(e.to_string()))?;
        if lattice.n_links() != n_links {
            return Err(CoreError::MalformedHeader(format!(
                "n_links={n_links} does not match dims ({} links)",
                lattice.n_links()
            )));
        }

        if !body.is_empty() && !body.ends_with('\n') {
            let complete = body.matches('\n').count();
            return Err(CoreError::LengthMismatch {
                expected: n_configs,
                found: complete,
                context: "body ends inside a configuration line (truncated file)".into(),
            });
        }
        let lines: Vec<&str> = body.lines().collect();
        if lines.len() != n_configs {
            return Err(CoreError::LengthMismatch {
                expected: n_configs,
                found: lines.len(),
                context: "configuration count".into(),
            });
        }
        let mut configs = Vec::with_capacity(n_configs);
        for (i, line) in lines.iter().enumerate() {
            let tokens: Vec<&str> = line.split(' ').collect();
            if tokens.len() != n_links {
                return Err(CoreError::LengthMismatch {
                    expected: n_links,
                    found: tokens.len(),
                    context: format!("links on configuration line {i}"),
                });
            }
            let values = tokens
                .iter()
                .map(|t| match *t {
                    "+1" => Ok(1),
                    "-1" => Ok(-1),
                    other => Err(CoreError::MalformedConfig {
                        line: i,
                        reason: format!("unexpected token '{other}'"),
                    }),
                })
                .collect::<Result<Vec<i8>>>()?;
            configs.push(SpinConfig::from_values(values)?);
        }

        let found = crc32fast::hash(body.as_bytes());
        if found != checksum {
            return Err(CoreError::ChecksumMismatch {
                expected: checksum,
                found,
            });
        }

        let meta = EnsembleMeta {
            dims,
            boundary,
            beta,
            sampler,
            seed,
            fixed_links,
            params,
        };
        Ensemble::new(meta, configs)
    }
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Write atomically: the file appears under `path` only once complete.
pub fn save(ensemble: &Ensemble, path: &Path) -> Result<()> {
    let text = ensemble.to_text()?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CoreError::Io(e.error))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Ensemble> {
    let text = fs::read_to_string(path)?;
    Ensemble::from_text(&text)
}

/// Mean and error of `observable` over the ensemble. Without an explicit
/// method the sampler's default is used.
pub fn estimate<F>(
    ensemble: &Ensemble,
    observable: F,
    method: Option<Method>,
) -> Result<ObservableEstimate>
where
    F: Fn(&SpinConfig) -> f64,
{
    let method = method.unwrap_or_else(|| ensemble.meta.sampler.default_method());
    stats::estimate(&ensemble.series(observable), method)
}
