//! Mean and error estimators for observable time series.

use std::fmt;
use std::str::FromStr;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Plain,
    Jackknife,
    Binned,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Plain => "plain",
            Method::Jackknife => "jackknife",
            Method::Binned => "binned",
        })
    }
}

impl FromStr for Method {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Ok(Method::Plain),
            "jackknife" => Ok(Method::Jackknife),
            "binned" => Ok(Method::Binned),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown estimation method '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableEstimate {
    pub mean: f64,
    pub error: f64,
    pub n_samples: usize,
    pub method: Method,
}

/// Smallest bin count the binning analysis will accept before stopping.
pub const MIN_BINS: usize = 8;
/// Relative change in the binned error below which it counts as converged.
pub const PLATEAU_TOLERANCE: f64 = 0.1;

pub fn estimate(samples: &[f64], method: Method) -> Result<ObservableEstimate> {
    match method {
        Method::Plain => plain(samples),
        Method::Jackknife => jackknife(samples),
        Method::Binned => binned(samples),
    }
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

fn require(samples: &[f64], needed: usize) -> Result<()> {
    if samples.len() < needed {
        Err(CoreError::TooFewSamples {
            needed,
            found: samples.len(),
        })
    } else {
        Ok(())
    }
}

/// Standard error of the mean, `s / sqrt(n)` with the unbiased `s`.
fn standard_error(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let m = mean(samples);
    let var = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

pub fn plain(samples: &[f64]) -> Result<ObservableEstimate> {
    require(samples, 2)?;
    Ok(ObservableEstimate {
        mean: mean(samples),
        error: standard_error(samples),
        n_samples: samples.len(),
        method: Method::Plain,
    })
}

/// Delete-one jackknife of the sample mean.
pub fn jackknife(samples: &[f64]) -> Result<ObservableEstimate> {
    require(samples, 2)?;
    let n = samples.len() as f64;
    let total: f64 = samples.iter().sum();
    let loo: Vec<f64> = samples.iter().map(|x| (total - x) / (n - 1.0)).collect();
    let loo_mean = mean(&loo);
    let var = loo.iter().map(|t| (t - loo_mean).powi(2)).sum::<f64>() * (n - 1.0) / n;
    Ok(ObservableEstimate {
        mean: mean(samples),
        error: var.sqrt(),
        n_samples: samples.len(),
        method: Method::Jackknife,
    })
}

fn bin_error(samples: &[f64], bin_size: usize) -> f64 {
    let bins: Vec<f64> = samples
        .chunks_exact(bin_size)
        .map(|c| c.iter().sum::<f64>() / bin_size as f64)
        .collect();
    standard_error(&bins)
}

/// Binning analysis: the bin size doubles until the error changes by less
/// than [`PLATEAU_TOLERANCE`] or fewer than [`MIN_BINS`] bins would remain.
pub fn binned(samples: &[f64]) -> Result<ObservableEstimate> {
    require(samples, 2)?;
    let mut bin_size = 1;
    let mut error = bin_error(samples, 1);
    loop {
        let next = bin_size * 2;
        if samples.len() / next < MIN_BINS {
            break;
        }
        let next_error = bin_error(samples, next);
        let converged = if error > 0.0 {
            ((next_error - error) / error).abs() < PLATEAU_TOLERANCE
        } else {
            next_error == 0.0
        };
        error = next_error;
        bin_size = next;
        if converged {
            break;
        }
    }
    Ok(ObservableEstimate {
        mean: mean(samples),
        error,
        n_samples: samples.len(),
        method: Method::Binned,
    })
}
