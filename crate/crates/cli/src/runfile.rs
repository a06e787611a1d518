//! `key=value` run files. Each key names a long flag without the dashes;
//! blank lines and `#` comments are ignored.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Flags that exclude each other; a command-line occurrence of either one
/// suppresses both from the run file.
const EXCLUSIVE: &[&[&str]] = &[&["beta", "beta-grid"], &["T", "T-grid"]];

pub fn parse(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("run file line {}: expected key=value", n + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k == "run-file" || k == "run_file" {
            return Err(CliError::Usage(format!(
                "run file line {}: invalid key '{k}'",
                n + 1
            )));
        }
        entries.push((k.replace('_', "-"), v.to_string()));
    }
    Ok(entries)
}

fn flag_name(arg: &str) -> Option<&str> {
    let name = arg.strip_prefix("--")?;
    Some(name.split_once('=').map_or(name, |(k, _)| k))
}

fn run_file_path(args: &[OsString]) -> CliResult<Option<OsString>> {
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--run-file" {
            return args
                .get(i + 1)
                .cloned()
                .map(Some)
                .ok_or_else(|| CliError::Usage("--run-file needs a path".into()));
        }
        if let Some(p) = s.strip_prefix("--run-file=") {
            return Ok(Some(p.into()));
        }
    }
    Ok(None)
}

/// Splice run-file entries into `args` after the subcommand, skipping any
/// flag already given on the command line.
pub fn expand(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = run_file_path(&args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))?;
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| flag_name(&a.to_string_lossy()).map(str::to_string))
        .collect();
    let suppressed = |key: &str| {
        given.iter().any(|g| g == key)
            || EXCLUSIVE.iter().any(|group| {
                group.contains(&key) && group.iter().any(|k| given.iter().any(|g| g == k))
            })
    };
    let mut extra = Vec::new();
    for (k, v) in parse(&text)? {
        if !suppressed(&k) {
            extra.push(OsString::from(format!("--{k}={v}")));
        }
    }
    let mut out = args;
    let at = 2.min(out.len());
    out.splice(at..at, extra);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_and_skips_comments() {
        let e = parse("# run\nbeta=0.7\n\n dims = 2,2 \nbeta_grid=0.1,0.2\n").unwrap();
        assert_eq!(
            e,
            vec![
                ("beta".into(), "0.7".into()),
                ("dims".into(), "2,2".into()),
                ("beta-grid".into(), "0.1,0.2".into()),
            ]
        );
        assert!(parse("beta").is_err());
        assert!(parse("run-file=x").is_err());
    }

    #[test]
    fn command_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.txt");
        fs::write(&path, "beta=0.7\nseed=5\nT-grid=10,20\ndt=0.5\n").unwrap();
        let args = os(&[
            "z2q",
            "adiabatic",
            "--T",
            "40",
            "--run-file",
            path.to_str().unwrap(),
            "--seed=9",
        ]);
        let out = expand(args).unwrap();
        let out: Vec<String> = out
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect();
        assert_eq!(&out[..4], &["z2q", "adiabatic", "--beta=0.7", "--dt=0.5"]);
        assert!(!out
            .iter()
            .any(|a| a.starts_with("--T-grid") || a == "--seed=5"));
    }
}
