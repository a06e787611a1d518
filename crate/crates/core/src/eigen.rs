//! Matrix-free Lanczos for the low end of a real symmetric spectrum.
//!
//! Eigenpairs are found one at a time with explicit restarts. Converged
//! vectors are locked and projected out of every later Krylov space, so
//! degenerate eigenvalues are resolved with their full multiplicity.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `out = A * x`
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Absolute residual `||A x - theta x||` accepted as converged.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            krylov_dim: 48,
            max_restarts: 500,
            tolerance: 1e-9,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Two passes of classical Gram-Schmidt against every vector in `sets`.
fn orthogonalize(x: &mut [f64], sets: &[&[Vec<f64>]]) {
    for _ in 0..2 {
        for b in sets.iter().flat_map(|s| s.iter()) {
            let c = dot(b, x);
            axpy(-c, b, x);
        }
    }
}

/// The `k` lowest eigenpairs, ascending.
pub fn lowest_eigenpairs<A: LinearOperator>(
    op: &A,
    k: usize,
    options: LanczosOptions,
) -> Result<Vec<Eigenpair>> {
    let n = op.dim();
    if k > n {
        return Err(CoreError::InvalidParameter(format!(
            "requested {k} eigenvalues of a {n}-dimensional operator"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut pairs = Vec::with_capacity(k);

    while pairs.len() < k {
        let mut start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        orthogonalize(&mut start, &[&locked]);
        normalize(&mut start);

        let remaining = n - locked.len();
        let m = options.krylov_dim.min(remaining).max(1);
        let mut converged = None;
        let mut last_residual = f64::INFINITY;
        for _ in 0..options.max_restarts {
            let pair = lanczos_pass(op, &start, &locked, m);
            last_residual = pair.residual;
            if pair.residual <= options.tolerance {
                converged = Some(pair);
                break;
            }
            start = pair.vector;
        }
        match converged {
            Some(pair) => {
                locked.push(pair.vector.clone());
                pairs.push(pair);
            }
            None => {
                return Err(CoreError::NonConvergence {
                    iterations: options.max_restarts,
                    residual: last_residual,
                })
            }
        }
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(pairs)
}

/// One Lanczos run of at most `m` steps; returns the lowest Ritz pair.
fn lanczos_pass<A: LinearOperator>(
    op: &A,
    start: &[f64],
    locked: &[Vec<f64>],
    m: usize,
) -> Eigenpair {
    let n = op.dim();
    let mut basis: Vec<Vec<f64>> = vec![start.to_vec()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![0.0; n];

    for j in 0..m {
        op.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        orthogonalize(&mut w, &[locked, &basis]);
        let mut b = normalize(&mut w);
        if b > 1e-12 {
            // a small norm amplifies whatever survived; clean once more
            orthogonalize(&mut w, &[locked, &basis]);
            b *= normalize(&mut w);
        }
        if j + 1 == m || b < 1e-12 {
            break;
        }
        beta.push(b);
        basis.push(w.clone());
    }

    let size = alpha.len();
    let mut t = DMatrix::<f64>::zeros(size, size);
    for i in 0..size {
        t[(i, i)] = alpha[i];
        if i + 1 < size {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("tridiagonal matrix is non-empty");
    let y = eig.eigenvectors.column(idx);

    let mut x = vec![0.0; n];
    for (i, q) in basis.iter().take(size).enumerate() {
        axpy(y[i], q, &mut x);
    }
    orthogonalize(&mut x, &[locked]);
    normalize(&mut x);

    op.apply(&x, &mut w);
    let value = dot(&x, &w);
    axpy(-value, &x, &mut w);
    let residual = dot(&w, &w).sqrt();
    Eigenpair {
        value,
        vector: x,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diagonal(Vec<f64>);

    impl LinearOperator for Diagonal {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            for ((o, d), xi) in out.iter_mut().zip(&self.0).zip(x) {
                *o = d * xi;
            }
        }
    }

    struct Dense(DMatrix<f64>);

    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (0..x.len()).map(|j| self.0[(i, j)] * x[j]).sum();
            }
        }
    }

    #[test]
    fn resolves_degenerate_levels() {
        let mut d: Vec<f64> = vec![3.0, 1.0, 0.0, 1.0, 1.0, 2.0];
        d.extend((0..200).map(|i| 4.0 + i as f64 * 0.01));
        let pairs = lowest_eigenpairs(&Diagonal(d), 5, LanczosOptions::default()).unwrap();
        let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        for (got, want) in values.iter().zip([0.0, 1.0, 1.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-9, "{values:?}");
        }
    }

    #[test]
    fn matches_dense_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 60;
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        let sym = &a + a.transpose();
        let mut reference: Vec<f64> = SymmetricEigen::new(sym.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        reference.sort_by(f64::total_cmp);
        let pairs = lowest_eigenpairs(&Dense(sym), 4, LanczosOptions::default()).unwrap();
        for (p, r) in pairs.iter().zip(&reference) {
            assert!((p.value - r).abs() < 1e-8, "{} vs {}", p.value, r);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let d: Vec<f64> = (0..500).map(|i| i as f64 * 1e-3).collect();
        let options = LanczosOptions {
            krylov_dim: 3,
            max_restarts: 2,
            tolerance: 1e-14,
            seed: 1,
        };
        match lowest_eigenpairs(&Diagonal(d), 1, options) {
            Err(CoreError::NonConvergence { residual, .. }) => assert!(residual > 1e-14),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
