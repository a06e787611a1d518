//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use z2q_core::classical::{self, exact_plaquette, glauber_transition_probability, SpinConfig};
use z2q_core::quantum::{
    build_dense_hamiltonian, build_link_terms, expectation_plaquette, ground_state_reference,
};
use z2q_core::{gauge_fix, Boundary, Coupling, Lattice};

/// Total evolution time beyond which both starts sit within 0.01 of the
/// exact plaquette on the benchmark lattice at beta = 0.7.
const T_STAR: f64 = 1280.0;
const BETA: f64 = 0.7;
const EXACT_RUNTIME: Duration = Duration::from_secs(10);
const ADIABATIC_RUNTIME: Duration = Duration::from_secs(300);

struct Run {
    stdout: String,
    elapsed: Duration,
}

fn z2q(args: &[&str]) -> Result<Run, String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_z2q"))
        .args(args)
        .env_remove("Z2Q_MAX_FREE_LINKS")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "z2q {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(Run {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        elapsed,
    })
}

/// Data rows as `(column, value)` pairs.
fn rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    r.records()
        .map(|rec| {
            header
                .iter()
                .cloned()
                .zip(rec.unwrap().iter().map(str::to_string))
                .collect()
        })
        .collect()
}

fn field(row: &[(String, String)], name: &str) -> f64 {
    row.iter()
        .find(|(k, _)| k == name)
        .unwrap_or_else(|| panic!("missing column {name}"))
        .1
        .parse()
        .unwrap()
}

struct Adiabatic {
    p: f64,
    norm: f64,
    elapsed: Duration,
}

fn adiabatic(
    beta: f64,
    t: f64,
    dt: f64,
    start: &str,
    norms: &mut Vec<(f64, f64)>,
) -> Result<Adiabatic, String> {
    let (b, t_s, dt_s) = (beta.to_string(), t.to_string(), dt.to_string());
    let run = z2q(&[
        "adiabatic",
        "--preset",
        "hypercube",
        "--beta",
        &b,
        "--T",
        &t_s,
        "--dt",
        &dt_s,
        "--start",
        start,
    ])?;
    let r = &rows(&run.stdout)[0];
    let a = Adiabatic {
        p: field(r, "P"),
        norm: field(r, "norm"),
        elapsed: run.elapsed,
    };
    norms.push((t, a.norm));
    Ok(a)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { pass, detail })
}

fn hypercube() -> Lattice {
    Lattice::new(&[2, 2, 2, 2], Boundary::Open).unwrap()
}

fn exact_reference() -> f64 {
    let lat = hypercube();
    exact_plaquette(&lat, &gauge_fix(&lat), BETA).unwrap()
}

fn exact_oracle() -> Result<Outcome, String> {
    let run = z2q(&["exact", "--preset", "hypercube", "--beta", "0.7"])?;
    let p = field(&rows(&run.stdout)[0], "P_exact");
    outcome(
        (p - 0.753).abs() <= 0.001 && run.elapsed < EXACT_RUNTIME,
        format!(
            "P = {p:.6} (|P - 0.753| = {:.1e} <= 1e-3), {:.2?} < 10s",
            (p - 0.753).abs(),
            run.elapsed
        ),
    )
}

struct Convergence {
    hot: Vec<(f64, Adiabatic)>,
    cold: Vec<(f64, Adiabatic)>,
}

const CONVERGENCE_TIMES: [f64; 2] = [T_STAR, 2.0 * T_STAR];

fn convergence(norms: &mut Vec<(f64, f64)>) -> Result<Convergence, String> {
    let mut c = Convergence {
        hot: Vec::new(),
        cold: Vec::new(),
    };
    for t in CONVERGENCE_TIMES {
        c.hot.push((t, adiabatic(BETA, t, 0.2, "hot", norms)?));
        c.cold.push((t, adiabatic(BETA, t, 0.2, "cold", norms)?));
    }
    Ok(c)
}

fn adiabatic_convergence(c: &Convergence, exact: f64) -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, runs) in [("hot", &c.hot), ("cold", &c.cold)] {
        for (t, a) in runs {
            let d = a.p - exact;
            pass &= d.abs() <= 0.01 && a.elapsed < ADIABATIC_RUNTIME;
            parts.push(format!("{label} T={t}: {d:+.4} ({:.0?})", a.elapsed));
        }
    }
    let gap = (c.hot[0].1.p - c.cold[0].1.p).abs();
    pass &= gap <= 0.01;
    parts.push(format!("|hot - cold| at T*={T_STAR}: {gap:.4}"));
    outcome(pass, parts.join(", "))
}

fn beta_sweep(norms: &mut Vec<(f64, f64)>) -> Result<Outcome, String> {
    let lat = hypercube();
    let gf = gauge_fix(&lat);
    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut pass = true;
    for beta in [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5] {
        let start = if beta <= BETA { "hot" } else { "cold" };
        let a = adiabatic(beta, T_STAR, 0.2, start, norms)?;
        let d = (a.p - exact_plaquette(&lat, &gf, beta).map_err(|e| e.to_string())?).abs();
        pass &= a.elapsed < ADIABATIC_RUNTIME;
        if d > worst.1 {
            worst = (beta, d);
        }
    }
    pass &= worst.1 <= 0.015;
    outcome(
        pass,
        format!(
            "beta in 0.1..1.5 at T={T_STAR} (hot for beta <= 0.7, cold above): max |P - P_exact| = {:.4} at beta = {:.1} (<= 0.015)",
            worst.1, worst.0
        ),
    )
}

fn trotter_consistency(c: &Convergence, norms: &mut Vec<(f64, f64)>) -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, fine) in [("hot", &c.hot[0].1), ("cold", &c.cold[0].1)] {
        let coarse = adiabatic(BETA, T_STAR, 0.5, label, norms)?;
        let d = (fine.p - coarse.p).abs();
        pass &= d <= 0.02;
        parts.push(format!("{label}: |P(0.2) - P(0.5)| = {d:.4}"));
    }
    outcome(pass, format!("T={T_STAR}, {} (<= 0.02)", parts.join(", ")))
}

fn hamiltonian_suite() -> Result<Outcome, String> {
    let lattices: &[(&[usize], Boundary)] = &[
        (&[2, 2], Boundary::Open),
        (&[3, 3], Boundary::Open),
        (&[2, 5], Boundary::Open),
        (&[3, 4], Boundary::Open),
        (&[4, 4], Boundary::Open),
        (&[2, 2, 2], Boundary::Open),
        (&[2, 2, 3], Boundary::Open),
        (&[3, 3], Boundary::Periodic),
    ];
    let (mut herm, mut low, mut overlap) = (0.0f64, 0.0f64, 1.0f64);
    let mut cases = 0;
    for &(dims, boundary) in lattices {
        let lat = Lattice::new(dims, boundary).unwrap();
        let gf = gauge_fix(&lat);
        let terms = build_link_terms(&lat, &gf).map_err(|e| e.to_string())?;
        for beta in [0.0, 0.7, 1.5] {
            let h = build_dense_hamiltonian(&terms, gf.n_free(), Coupling::Finite(beta))
                .map_err(|e| e.to_string())?;
            herm = herm.max((&h - h.transpose()).amax());
            let eig = SymmetricEigen::new(h);
            let (i0, &e0) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            low = low.max(e0.abs());
            let reference = ground_state_reference(&lat, &gf, Coupling::Finite(beta))
                .map_err(|e| e.to_string())?;
            let r = DVector::from_iterator(
                reference.amplitudes().len(),
                reference.amplitudes().iter().map(|a| a.re),
            );
            let v = eig.eigenvectors.column(i0);
            overlap = overlap.min(v.dot(&r).powi(2));
            cases += 1;
        }
    }
    outcome(
        herm <= 1e-12 && low <= 1e-9 && overlap >= 1.0 - 1e-9,
        format!(
            "{cases} cases, N_free <= 12: max |H - H^T| = {herm:.1e}, max |E0| = {low:.1e}, min overlap = 1 - {:.1e}",
            1.0 - overlap
        ),
    )
}

fn ground_state_identity() -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    for dims in [&[2, 2][..], &[3, 3], &[2, 2, 2, 2]] {
        let lat = Lattice::new(dims, Boundary::Open).unwrap();
        let gf = gauge_fix(&lat);
        for beta in [0.0, 0.3, 0.7, 1.2] {
            let state = ground_state_reference(&lat, &gf, Coupling::Finite(beta))
                .map_err(|e| e.to_string())?;
            let q = expectation_plaquette(&state, &lat, &gf).map_err(|e| e.to_string())?;
            let c = exact_plaquette(&lat, &gf, beta).map_err(|e| e.to_string())?;
            worst = worst.max((q - c).abs());
        }
    }
    outcome(
        worst <= 1e-10,
        format!("2x2, 3x3, 2^4 at beta in {{0, 0.3, 0.7, 1.2}}: max diff {worst:.1e} (<= 1e-10)"),
    )
}

/// Sampling runs use a short hot-start evolution; the comparison is against
/// that state's own expectation value.
const SAMPLING_T: f64 = 80.0;

fn sampling_chain() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let t = SAMPLING_T.to_string();
    let mut errors = Vec::new();
    let mut big = None;
    for (i, shots) in [1_000usize, 10_000, 100_000].into_iter().enumerate() {
        let path = dir.path().join(format!("q{shots}.ens"));
        let path_s = path.to_str().unwrap();
        let seed = (17 + i).to_string();
        let run = z2q(&[
            "sample",
            "--preset",
            "hypercube",
            "--beta",
            "0.7",
            "--T",
            &t,
            "--shots",
            &shots.to_string(),
            "--seed",
            &seed,
            "--out",
            path_s,
        ])?;
        let p_state = field(&rows(&run.stdout)[0], "P_statevector");
        let analysis = z2q(&["analyze", "--input", path_s, "--observables", "plaquette"])?;
        let r = &rows(&analysis.stdout)[0];
        let (mean, err) = (field(r, "mean"), field(r, "error"));
        errors.push((shots, err));
        if shots == 100_000 {
            big = Some((mean, err, p_state));
        }
    }
    let (mean, err, p_state) = big.unwrap();
    let sigmas = (mean - p_state).abs() / err;
    let mut pass = sigmas <= 3.0;
    let mut ratios = Vec::new();
    for w in errors.windows(2) {
        let ratio = w[0].1 / w[1].1 / (w[1].0 as f64 / w[0].0 as f64).sqrt();
        pass &= (ratio - 1.0).abs() <= 0.25;
        ratios.push(format!("{ratio:.3}"));
    }
    outcome(
        pass,
        format!(
            "1e5 shots after save/load: |P - P_state| = {:.1e} = {sigmas:.2} sigma (<= 3); error ratio / sqrt(10) = [{}] (within 25%)",
            (mean - p_state).abs(),
            ratios.join(", ")
        ),
    )
}

fn mcmc_cross_check(exact: f64) -> Result<Outcome, String> {
    let run = z2q(&[
        "mcmc",
        "--preset",
        "hypercube",
        "--beta",
        "0.7",
        "--n-configs",
        "10000",
        "--seed",
        "2024",
    ])?;
    let r = &rows(&run.stdout)[0];
    let (p, err) = (field(r, "P"), field(r, "P_error"));
    let sigmas = (p - exact).abs() / err;

    let lat = hypercube();
    let gf = gauge_fix(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let beta = rng.gen_range(0.0..2.0);
        let x = SpinConfig::from_basis_index(&gf, rng.gen_range(0..1u64 << gf.n_free()));
        let link = gf.free()[rng.gen_range(0..gf.n_free())];
        let mut y = x.clone();
        y.flip(link);
        let forward = glauber_transition_probability(&x, link, &lat, &gf, beta).unwrap();
        let backward = glauber_transition_probability(&y, link, &lat, &gf, beta).unwrap();
        let sx = classical::action(&x, &lat, beta).unwrap();
        let sy = classical::action(&y, &lat, beta).unwrap();
        // pi(x) T(x->y) = pi(y) T(y->x), weights relative to x
        let lhs = forward;
        let rhs = (-(sy - sx)).exp() * backward;
        worst = worst.max((lhs - rhs).abs() / lhs.max(rhs));
    }
    outcome(
        sigmas <= 3.0 && worst <= 1e-12,
        format!(
            "P = {p:.4} +- {err:.4} (binned), {sigmas:.2} sigma from exact (<= 3); detailed balance max rel. violation {worst:.1e} (<= 1e-12)"
        ),
    )
}

fn plane_reduction() -> Result<Outcome, String> {
    let mut worst = 0.0f64;
    let mut n = 0;
    for dims in [[2, 2], [3, 3], [2, 6], [4, 4], [5, 3]] {
        let lat = Lattice::new(&dims, Boundary::Open).unwrap();
        let gf = gauge_fix(&lat);
        for beta in [0.0, 0.1, 0.5, 0.7, 1.0, 2.0] {
            let p = exact_plaquette(&lat, &gf, beta).map_err(|e| e.to_string())?;
            worst = worst.max((p - beta.tanh()).abs());
            n += 1;
        }
    }
    outcome(
        worst <= 1e-10,
        format!("{n} open D=2 cases: max |P - tanh(beta)| = {worst:.1e} (<= 1e-10)"),
    )
}

fn normalization(norms: &[(f64, f64)]) -> Result<Outcome, String> {
    let longest = norms.iter().map(|n| n.0).fold(0.0, f64::max);
    let worst = norms.iter().map(|n| (n.1 - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        !norms.is_empty() && worst < 1e-8,
        format!(
            "{} runs up to T={longest}: max |norm - 1| = {worst:.1e} (< 1e-8)",
            norms.len()
        ),
    )
}

fn main() {
    let mut out = std::io::stdout();
    let mut failed = 0;
    let mut report = |n: u32, name: &str, result: Result<Outcome, String>| {
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, e),
        };
        if !pass {
            failed += 1;
        }
        let _ = writeln!(
            out,
            "criterion {n:>2} {} {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        let _ = out.flush();
    };
    let exact = exact_reference();
    let mut norms = Vec::new();

    report(1, "exact oracle", exact_oracle());
    let conv = convergence(&mut norms);
    match &conv {
        Ok(c) => {
            report(2, "adiabatic convergence", adiabatic_convergence(c, exact));
            report(3, "beta sweep", beta_sweep(&mut norms));
            report(4, "trotter consistency", trotter_consistency(c, &mut norms));
        }
        Err(e) => {
            report(2, "adiabatic convergence", Err(e.clone()));
            report(3, "beta sweep", beta_sweep(&mut norms));
            report(4, "trotter consistency", Err(e.clone()));
        }
    }
    report(5, "hamiltonian correctness", hamiltonian_suite());
    report(6, "ground state identity", ground_state_identity());
    report(7, "sampling chain", sampling_chain());
    report(8, "mcmc cross-check", mcmc_cross_check(exact));
    report(9, "plane reduction", plane_reduction());
    report(10, "normalization", normalization(&norms));

    let _ = writeln!(out, "acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
