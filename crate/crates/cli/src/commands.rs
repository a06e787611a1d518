use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use z2q_core::classical::{self, McmcParams};
use z2q_core::ensemble;
use z2q_core::limits::enumeration_cap;
use z2q_core::quantum::{
    self, build_link_terms, evolve_schedule, expectation_plaquette, sample_configs,
};
use z2q_core::stats;
use z2q_core::{gauge_fix, Boundary, Ensemble, Lattice, Method, Schedule, StartKind};

use crate::args::*;
use crate::error::{CliError, CliResult};

/// CSV output: `# key=value` reproducibility lines, then a header row.
pub struct Table {
    meta: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(command: &str, columns: Vec<&'static str>) -> Self {
        let mut t = Table {
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        };
        t.meta("z2q_version", env!("CARGO_PKG_VERSION"));
        t.meta("command", command);
        t
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    fn write_to<W: Write>(&self, mut w: W) -> CliResult<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        Ok(())
    }

    fn write(&self, out: Option<&Path>) -> CliResult<()> {
        match out {
            Some(path) => self.write_to(io::BufWriter::new(File::create(path)?)),
            None => self.write_to(io::stdout().lock()),
        }
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Comma list, or `start:stop:step` with both ends included.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |what: &str| CliError::Usage(format!("grid '{spec}': {what}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [list] => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(num)
            .collect::<CliResult<Vec<f64>>>()?,
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step.is_nan() || step <= 0.0 || b < a {
                return Err(bad("need start <= stop and step > 0"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            // rounding keeps 0.1:1.5:0.2 on the decimal values it names
            (0..=n)
                .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        _ => return Err(bad("expected a comma list or start:stop:step")),
    };
    if values.is_empty() {
        return Err(bad("empty"));
    }
    Ok(values)
}

fn betas(args: &BetaArgs) -> CliResult<Vec<f64>> {
    let values = match (args.beta, &args.beta_grid) {
        (Some(b), None) => vec![b],
        (None, Some(grid)) => parse_grid(grid)?,
        _ => {
            return Err(CliError::Usage(
                "one of --beta or --beta-grid is required".into(),
            ))
        }
    };
    if let Some(b) = values.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(CliError::Usage(format!(
            "beta must be finite and >= 0, got {b}"
        )));
    }
    Ok(values)
}

fn times(args: &ScheduleArgs) -> CliResult<Vec<f64>> {
    let values = match (args.t, &args.t_grid) {
        (Some(t), None) => vec![t],
        (None, Some(grid)) => parse_grid(grid)?,
        _ => return Err(CliError::Usage("one of --T or --T-grid is required".into())),
    };
    if let Some(t) = values.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(CliError::Usage(format!(
            "T must be finite and > 0, got {t}"
        )));
    }
    if !(args.dt.is_finite() && args.dt > 0.0) {
        return Err(CliError::Usage(format!(
            "dt must be finite and > 0, got {}",
            args.dt
        )));
    }
    Ok(values)
}

fn lattice(args: &LatticeArgs) -> CliResult<Lattice> {
    let (mut dims, mut boundary) = match args.preset {
        Some(Preset::Hypercube) => (Some(vec![2; 4]), Boundary::Open),
        None => (None, Boundary::Open),
    };
    if let Some(d) = &args.dims {
        dims = Some(d.clone());
    }
    if let Some(b) = args.boundary {
        boundary = b.into();
    }
    let dims =
        dims.ok_or_else(|| CliError::Usage("one of --dims or --preset is required".into()))?;
    Ok(Lattice::new(&dims, boundary)?)
}

fn lattice_meta(table: &mut Table, lat: &Lattice) {
    table.meta("dims", join(lat.dims()));
    table.meta("boundary", lat.boundary());
}

fn sort_rows(keys: &mut [(Vec<f64>, Vec<String>)]) {
    keys.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

pub fn exact(args: &ExactArgs) -> CliResult<()> {
    let lat = lattice(&args.lattice)?;
    let betas = betas(&args.beta)?;
    let gf = gauge_fix(&lat);
    let mut table = Table::new("exact", vec!["beta", "P_exact"]);
    lattice_meta(&mut table, &lat);
    table.meta("beta_grid", join(&betas));
    table.meta("n_free", gf.n_free());
    table.meta("max_free_links", enumeration_cap());

    let mut rows = betas
        .par_iter()
        .map(|&b| {
            let p = classical::exact_plaquette(&lat, &gf, b)?;
            Ok((vec![b], vec![b.to_string(), p.to_string()]))
        })
        .collect::<CliResult<Vec<_>>>()?;
    sort_rows(&mut rows);
    table.rows = rows.into_iter().map(|r| r.1).collect();
    table.write(args.out.as_deref())
}

pub fn mcmc(args: &McmcArgs) -> CliResult<()> {
    let lat = lattice(&args.lattice)?;
    let betas = betas(&args.beta)?;
    if args.out.is_some() && betas.len() > 1 {
        return Err(CliError::Usage(
            "--out stores one ensemble; use a single --beta".into(),
        ));
    }
    if args.n_configs == 0 || args.stride == 0 {
        return Err(CliError::Usage(
            "--n-configs and --stride must be positive".into(),
        ));
    }
    let params = McmcParams {
        n_therm: args.n_therm,
        n_configs: args.n_configs,
        stride: args.stride,
    };
    let gf = gauge_fix(&lat);
    let mut table = Table::new(
        "mcmc",
        vec![
            "beta",
            "n_configs",
            "n_therm",
            "stride",
            "P",
            "P_error",
            "method",
        ],
    );
    lattice_meta(&mut table, &lat);
    table.meta("beta_grid", join(&betas));
    table.meta("seed", args.common.seed);
    table.meta("n_configs", args.n_configs);
    table.meta("n_therm", args.n_therm);
    table.meta("stride", args.stride);

    let runs = betas
        .par_iter()
        .map(|&b| {
            let ens = classical::mcmc_run(&lat, &gf, b, params, args.common.seed)?;
            let est = plaquette_estimate(&ens, &lat, None)?;
            let row = vec![
                b.to_string(),
                args.n_configs.to_string(),
                args.n_therm.to_string(),
                args.stride.to_string(),
                est.mean.to_string(),
                est.error.to_string(),
                est.method.to_string(),
            ];
            Ok(((vec![b], row), ens))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if let (Some(path), Some((_, ens))) = (&args.out, runs.first()) {
        ensemble::save(ens, path)?;
        table.meta("ensemble", path.display());
    }
    let mut rows: Vec<_> = runs.into_iter().map(|r| r.0).collect();
    sort_rows(&mut rows);
    table.rows = rows.into_iter().map(|r| r.1).collect();
    table.write(None)
}

fn schedules(betas: &[f64], times: &[f64], args: &ScheduleArgs) -> CliResult<Vec<Schedule>> {
    let kind: StartKind = args.start.into();
    let mut out = Vec::with_capacity(betas.len() * times.len());
    for &b in betas {
        for &t in times {
            out.push(Schedule::new(kind, b, t, args.dt)?);
        }
    }
    Ok(out)
}

fn schedule_meta(table: &mut Table, args: &ScheduleArgs, betas: &[f64], times: &[f64]) {
    table.meta("beta_grid", join(betas));
    table.meta("T_grid", join(times));
    table.meta("dt", args.dt);
    table.meta("start", StartKind::from(args.start));
}

pub fn adiabatic(args: &AdiabaticArgs) -> CliResult<()> {
    let lat = lattice(&args.lattice)?;
    let betas = betas(&args.beta)?;
    let times = times(&args.schedule)?;
    let schedules = schedules(&betas, &times, &args.schedule)?;
    let gf = gauge_fix(&lat);
    let terms = build_link_terms(&lat, &gf)?;

    let mut table = Table::new(
        "adiabatic",
        vec![
            "beta",
            "T",
            "dt",
            "dt_effective",
            "steps",
            "start",
            "P",
            "norm",
        ],
    );
    lattice_meta(&mut table, &lat);
    schedule_meta(&mut table, &args.schedule, &betas, &times);
    table.meta("n_free", gf.n_free());

    let mut rows = schedules
        .par_iter()
        .map(|s| {
            let mut state = s.initial_state(gf.n_free());
            evolve_schedule(&mut state, &terms, s);
            let p = expectation_plaquette(&state, &lat, &gf)?;
            Ok((
                vec![s.beta_target, s.total_time],
                vec![
                    s.beta_target.to_string(),
                    s.total_time.to_string(),
                    args.schedule.dt.to_string(),
                    s.dt().to_string(),
                    s.steps().to_string(),
                    s.kind.to_string(),
                    p.to_string(),
                    state.norm().to_string(),
                ],
            ))
        })
        .collect::<CliResult<Vec<_>>>()?;
    sort_rows(&mut rows);
    table.rows = rows.into_iter().map(|r| r.1).collect();
    table.write(args.out.as_deref())
}

pub fn sample(args: &SampleArgs) -> CliResult<()> {
    let lat = lattice(&args.lattice)?;
    let betas = betas(&args.beta)?;
    let times = times(&args.schedule)?;
    let (&[beta], &[t]) = (betas.as_slice(), times.as_slice()) else {
        return Err(CliError::Usage(
            "sample takes a single --beta and --T".into(),
        ));
    };
    let shots = match args.shots {
        Some(n) if n > 0 => n,
        _ => return Err(CliError::Usage("--shots must be a positive integer".into())),
    };
    let path = args
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("sample needs --out for the ensemble file".into()))?;
    let schedule = Schedule::new(args.schedule.start.into(), beta, t, args.schedule.dt)?;
    let gf = gauge_fix(&lat);
    let state = quantum::adiabatic_evolve(&lat, &gf, &schedule)?;
    let p_state = expectation_plaquette(&state, &lat, &gf)?;
    let mut ens = sample_configs(&state, &lat, &gf, beta, shots, args.common.seed)?;
    ens.set_param("T", t)?;
    ens.set_param("dt", args.schedule.dt)?;
    ens.set_param("dt_effective", schedule.dt())?;
    ens.set_param("steps", schedule.steps())?;
    ens.set_param("start", schedule.kind)?;
    ensemble::save(&ens, path)?;

    // a single shot has a mean but no error bar
    let (mean, error) = match plaquette_estimate(&ens, &lat, None) {
        Ok(e) => (e.mean, e.error),
        Err(CliError::Core(z2q_core::CoreError::TooFewSamples { .. })) => (
            classical::plaquette_average(&ens.configs()[0], &lat)?,
            f64::NAN,
        ),
        Err(e) => return Err(e),
    };
    let mut table = Table::new(
        "sample",
        vec![
            "beta",
            "T",
            "dt_effective",
            "start",
            "shots",
            "P",
            "P_error",
            "P_statevector",
        ],
    );
    lattice_meta(&mut table, &lat);
    schedule_meta(&mut table, &args.schedule, &betas, &times);
    table.meta("shots", shots);
    table.meta("seed", args.common.seed);
    table.meta("ensemble", path.display());
    table.rows.push(vec![
        beta.to_string(),
        t.to_string(),
        schedule.dt().to_string(),
        schedule.kind.to_string(),
        shots.to_string(),
        mean.to_string(),
        error.to_string(),
        p_state.to_string(),
    ]);
    table.write(None)
}

fn plaquette_estimate(
    ens: &Ensemble,
    lat: &Lattice,
    method: Option<Method>,
) -> CliResult<stats::ObservableEstimate> {
    let series = ens
        .configs()
        .iter()
        .map(|c| classical::plaquette_average(c, lat))
        .collect::<z2q_core::Result<Vec<f64>>>()?;
    let method = method.unwrap_or_else(|| ens.meta().sampler.default_method());
    Ok(stats::estimate(&series, method)?)
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let input = args
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("analyze needs --input".into()))?;
    if args.observables.is_empty() {
        return Err(CliError::Usage("--observables is empty".into()));
    }
    let ens = ensemble::load(input)?;
    let meta = ens.meta();
    let lat = meta.lattice()?;
    let method = args.method.map(Method::from);

    let mut table = Table::new(
        "analyze",
        vec![
            "observable",
            "index",
            "mean",
            "error",
            "n_samples",
            "method",
        ],
    );
    table.meta("input", input.display());
    lattice_meta(&mut table, &lat);
    table.meta("beta", meta.beta);
    table.meta("sampler", meta.sampler);
    table.meta("seed", meta.seed);
    table.meta("n_configs", ens.len());
    if let Some(m) = method {
        table.meta("method", m);
    }

    let mut observables = args.observables.clone();
    observables.sort();
    observables.dedup();
    let chosen = method.unwrap_or_else(|| meta.sampler.default_method());
    let row = |name: &str, index: String, e: stats::ObservableEstimate| {
        vec![
            name.to_string(),
            index,
            e.mean.to_string(),
            e.error.to_string(),
            e.n_samples.to_string(),
            e.method.to_string(),
        ]
    };
    for obs in observables {
        match obs {
            Observable::Plaquette => {
                let e = plaquette_estimate(&ens, &lat, method)?;
                table.rows.push(row("plaquette", String::new(), e));
            }
            Observable::Plaquettes => {
                let values = ens
                    .configs()
                    .iter()
                    .map(|c| classical::plaquette_values(c, &lat))
                    .collect::<z2q_core::Result<Vec<_>>>()?;
                for p in 0..lat.n_plaquettes() {
                    let series: Vec<f64> = values.iter().map(|v| v[p] as f64).collect();
                    table.rows.push(row(
                        "plaquette_value",
                        p.to_string(),
                        stats::estimate(&series, chosen)?,
                    ));
                }
            }
            Observable::ActionDensity => {
                let n_sites = lat.n_sites() as f64;
                let series = ens
                    .configs()
                    .iter()
                    .map(|c| classical::action(c, &lat, meta.beta).map(|s| s / n_sites))
                    .collect::<z2q_core::Result<Vec<f64>>>()?;
                table.rows.push(row(
                    "action_density",
                    String::new(),
                    stats::estimate(&series, chosen)?,
                ));
            }
        }
    }
    table.write(args.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1, 0.3,0.7").unwrap(), vec![0.1, 0.3, 0.7]);
        let g = parse_grid("0.1:1.5:0.2").unwrap();
        assert_eq!(g, [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        for bad in ["", "a", "1:0:1", "0:1:0", "1:2", ","] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
