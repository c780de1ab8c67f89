//! Sparse symmetric (skyline) storage, LDLᵀ factorization and a shift-invert
//! subspace-iteration eigensolver for `K v = λ M v`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Symmetric matrix in skyline (variable-band) storage. Column `j` keeps the
/// entries of rows `first[j]..=j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkylineMatrix {
    n: usize,
    first: Vec<usize>,
    cols: Vec<Vec<f64>>,
}

impl SkylineMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            first: (0..n).collect(),
            cols: vec![vec![0.0]; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `value` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        assert!(c < self.n, "index ({i}, {j}) out of range for dimension {}", self.n);
        if r < self.first[c] {
            let extra = self.first[c] - r;
            let col = &mut self.cols[c];
            let mut grown = vec![0.0; extra + col.len()];
            grown[extra..].copy_from_slice(col);
            *col = grown;
            self.first[c] = r;
        }
        self.cols[c][r - self.first[c]] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        if r < self.first[c] {
            0.0
        } else {
            self.cols[c][r - self.first[c]]
        }
    }

    /// Returns `self + alpha * other`, merging profiles.
    pub fn add_scaled(&self, alpha: f64, other: &SkylineMatrix) -> SkylineMatrix {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for j in 0..other.n {
            for (k, v) in other.cols[j].iter().enumerate() {
                if *v != 0.0 {
                    out.add(other.first[j] + k, j, alpha * v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            let f = self.first[j];
            let col = &self.cols[j];
            let last = col.len() - 1;
            y[j] += col[last] * x[j];
            for (k, a) in col[..last].iter().enumerate() {
                let i = f + k;
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
    }

    /// Symmetric quadratic/bilinear form `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for (k, v) in self.cols[j].iter().enumerate() {
                let i = self.first[j] + k;
                d[(i, j)] = *v;
                d[(j, i)] = *v;
            }
        }
        d
    }

    /// Removes the listed rows and columns (homogeneous Dirichlet elimination).
    pub fn eliminate(&self, removed: &[usize]) -> (SkylineMatrix, Vec<usize>) {
        let kept: Vec<usize> = (0..self.n).filter(|i| !removed.contains(i)).collect();
        let mut map = vec![usize::MAX; self.n];
        for (new, old) in kept.iter().enumerate() {
            map[*old] = new;
        }
        let mut out = SkylineMatrix::zeros(kept.len());
        for j in 0..self.n {
            if map[j] == usize::MAX {
                continue;
            }
            for (k, v) in self.cols[j].iter().enumerate() {
                let i = self.first[j] + k;
                if map[i] != usize::MAX && *v != 0.0 {
                    out.add(map[i], map[j], *v);
                }
            }
        }
        (out, kept)
    }

    pub fn max_abs(&self) -> f64 {
        self.cols
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `A = L D Lᵀ` in the skyline profile of `A` (no pivoting).
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    first: Vec<usize>,
    lower: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

impl LdlFactor {
    pub fn new(a: &SkylineMatrix) -> Result<Self> {
        let n = a.n;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lower: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut diag = vec![0.0; n];
        for j in 0..n {
            let fj = a.first[j];
            let col = &a.cols[j];
            let mut g = vec![0.0; j - fj];
            for i in fj..j {
                let fi = a.first[i];
                let lo = fi.max(fj);
                let li = &lower[i];
                let mut s = 0.0;
                for r in lo..i {
                    s += li[r - fi] * g[r - fj];
                }
                g[i - fj] = col[i - fj] - s;
            }
            let mut d = col[j - fj];
            let mut lcol = vec![0.0; j - fj];
            for i in fj..j {
                let l = g[i - fj] / diag[i];
                d -= l * g[i - fj];
                lcol[i - fj] = l;
            }
            if !(d.abs() > 1e-15 * scale) {
                return Err(Error::SingularPivot { row: j, pivot: d });
            }
            diag[j] = d;
            lower.push(lcol);
        }
        Ok(Self {
            n,
            first: a.first.clone(),
            lower,
            diag,
        })
    }

    /// Number of negative pivots: the count of eigenvalues of the pencil below
    /// the shift when the factored matrix is `K − σM` with `M` positive-definite.
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|d| **d < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for j in 0..self.n {
            let f = self.first[j];
            let s: f64 = self.lower[j]
                .iter()
                .enumerate()
                .map(|(k, l)| l * x[f + k])
                .sum();
            x[j] -= s;
        }
        for j in 0..self.n {
            x[j] /= self.diag[j];
        }
        for j in (0..self.n).rev() {
            let f = self.first[j];
            let xj = x[j];
            for (k, l) in self.lower[j].iter().enumerate() {
                x[f + k] -= l * xj;
            }
        }
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// One generalized eigenpair, `vector` normalized so that `vᵀ M v = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Relative residual `‖Kv − λMv‖ / (‖Kv‖ + |λ|‖Mv‖)` required per pair.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Extra subspace vectors beyond the requested count.
    pub guard_vectors: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 500,
            guard_vectors: 10,
            seed: 0x5eed,
        }
    }
}

fn m_orthonormalize(m: &SkylineMatrix, vs: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let n = m.dim();
    for i in 0..vs.len() {
        for attempt in 0..4 {
            let before = m.bilinear(&vs[i], &vs[i]).sqrt();
            for _ in 0..2 {
                let mv = m.mul_vec(&vs[i]);
                for j in 0..i {
                    let c = dot(&vs[j], &mv);
                    let (head, tail) = vs.split_at_mut(i);
                    for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                        *a -= c * b;
                    }
                }
            }
            let after = m.bilinear(&vs[i], &vs[i]).sqrt();
            if after > 1e-8 * before && after > 0.0 {
                vs[i].iter_mut().for_each(|v| *v /= after);
                break;
            }
            // Collapsed direction: restart it from noise.
            vs[i] = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            if attempt == 3 {
                let nn = m.bilinear(&vs[i], &vs[i]).sqrt();
                vs[i].iter_mut().for_each(|v| *v /= nn);
            }
        }
    }
}

/// Eigenpairs of `K v = λ M v` with `λ` nearest `shift`, sorted by `|λ − shift|`.
///
/// `M` must be symmetric positive-definite; `K − shift·M` must be
/// nonsingular (the pole is nudged if a pivot vanishes).
pub fn eigs_near(
    k: &SkylineMatrix,
    m: &SkylineMatrix,
    shift: f64,
    count: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = k.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "stiffness is {n}x{n}, mass is {0}x{0}",
            m.dim()
        )));
    }
    if count == 0 || count > n {
        return Err(Error::invalid(format!(
            "requested {count} eigenpairs from a problem of dimension {n}"
        )));
    }
    let p = (count + opts.guard_vectors).max(2 * count).min(n);
    if p == n || n <= 300 {
        return dense_eigs_near(k, m, shift, count);
    }
    // A shift almost on an eigenvalue amplifies that direction so much that
    // the rest of the subspace loses precision; retry from displaced poles
    // while still ranking by the requested shift.
    let mut last = None;
    for offset in [0.0, 1.3e-3, -2.9e-3] {
        let sigma = shift + offset * shift.abs().max(1.0);
        match subspace_iteration(k, m, sigma, shift, count, p, opts) {
            Ok(pairs) => return Ok(pairs),
            Err(e @ Error::NonConvergence { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn factor_near(k: &SkylineMatrix, m: &SkylineMatrix, sigma: f64) -> Result<LdlFactor> {
    match LdlFactor::new(&k.add_scaled(-sigma, m)) {
        Ok(f) => Ok(f),
        Err(Error::SingularPivot { .. }) => LdlFactor::new(&k.add_scaled(-(sigma * (1.0 + 1e-9) + 1e-12), m)),
        Err(e) => Err(e),
    }
}

fn subspace_iteration(
    k: &SkylineMatrix,
    m: &SkylineMatrix,
    sigma: f64,
    shift: f64,
    count: usize,
    p: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = k.dim();
    let factor = factor_near(k, m, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();

    let mut worst = f64::INFINITY;
    let mut converged = 0;
    let (mut best, mut stalled) = (f64::INFINITY, 0);
    for iteration in 0..opts.max_iterations {
        let mut y: Vec<Vec<f64>> = x.iter().map(|v| factor.solve(&m.mul_vec(v))).collect();
        m_orthonormalize(m, &mut y, &mut rng);
        let ky: Vec<Vec<f64>> = y.iter().map(|v| k.mul_vec(v)).collect();
        let mut kr = DMatrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let v = dot(&y[a], &ky[b]);
                kr[(a, b)] = v;
                kr[(b, a)] = v;
            }
        }
        let eig = SymmetricEigen::new(kr);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| {
            (eig.eigenvalues[a] - shift)
                .abs()
                .total_cmp(&(eig.eigenvalues[b] - shift).abs())
        });
        x = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (a, ya) in y.iter().enumerate() {
                    let q = eig.eigenvectors[(a, c)];
                    for (vi, yi) in v.iter_mut().zip(ya) {
                        *vi += q * yi;
                    }
                }
                v
            })
            .collect();
        let values: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();

        let residuals: Vec<f64> = (0..count)
            .map(|i| relative_residual(k, m, values[i], &x[i]))
            .collect();
        worst = residuals.iter().cloned().fold(0.0, f64::max);
        converged = residuals.iter().filter(|r| **r < opts.tolerance).count();
        // Only a plateau near the precision floor counts as a stall.
        if worst < 0.5 * best {
            (best, stalled) = (worst, 0);
        } else if worst < 1e-6 {
            stalled += 1;
        }
        if stalled > 12 && converged < count {
            return Err(Error::NonConvergence { iterations: iteration + 1, residual: worst, converged, requested: count });
        }
        if converged == count {
            return Ok((0..count)
                .map(|i| EigenPair {
                    value: values[i],
                    vector: x[i].clone(),
                    residual: residuals[i],
                })
                .collect());
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual: worst,
        converged,
        requested: count,
    })
}

/// `‖Kv − λMv‖ / (‖Kv‖ + |λ|‖Mv‖)`.
pub fn relative_residual(k: &SkylineMatrix, m: &SkylineMatrix, value: f64, v: &[f64]) -> f64 {
    let kv = k.mul_vec(v);
    let mv = m.mul_vec(v);
    let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - value * b).collect();
    norm(&r) / (norm(&kv) + value.abs() * norm(&mv)).max(f64::MIN_POSITIVE)
}

/// Dense fallback for small problems: Cholesky reduction of `M`.
fn dense_eigs_near(
    k: &SkylineMatrix,
    m: &SkylineMatrix,
    shift: f64,
    count: usize,
) -> Result<Vec<EigenPair>> {
    let kd = k.to_dense();
    let md = m.to_dense();
    let chol = md
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("mass matrix is not positive-definite"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::invalid("singular mass factor"))?;
    let a = &linv * kd * linv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        (eig.eigenvalues[a] - shift)
            .abs()
            .total_cmp(&(eig.eigenvalues[b] - shift).abs())
    });
    let lt_inv = linv.transpose();
    Ok(order[..count]
        .iter()
        .map(|&c| {
            let v = &lt_inv * eig.eigenvectors.column(c);
            let vector: Vec<f64> = v.iter().copied().collect();
            let value = eig.eigenvalues[c];
            let residual = relative_residual(k, m, value, &vector);
            EigenPair {
                value,
                vector,
                residual,
            }
        })
        .collect())
}
