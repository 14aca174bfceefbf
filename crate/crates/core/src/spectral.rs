//! Dirichlet spectra of `A = I - (neighbour average)`, the positive version
//! of the normalized discrete Laplacian, on intervals (closed form) and on
//! finite site sets (dense or iterative).
//!
//! Throughout, `λ_n` are eigenvalues of `A`, so that survival terms decay as
//! `e^{-t λ_n}`.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::env::Site;
use crate::error::{Error, Result};

/// `ℓ_1 = π²/8`, the principal Dirichlet eigenvalue of `-(1/2) d²/dx²` on
/// `(-1, 1)`.
pub const ELL1: f64 = PI * PI / 8.0;

/// Site sets up to this size are diagonalized densely.
pub const DENSE_THRESHOLD: usize = 512;
/// Default cap on the size of a site set passed to [`principal_eigenvalue`].
pub const DEFAULT_SITE_CAP: usize = 100_000;

fn angle(l: usize, n: usize) -> f64 {
    (n + 1) as f64 * PI / (l + 1) as f64
}

/// `λ_n = 1 - cos((n+1)π/(l+1))`, evaluated as `2 sin²` to keep relative
/// accuracy for long intervals.
pub fn interval_eigenvalue(l: usize, n: usize) -> f64 {
    let s = (0.5 * angle(l, n)).sin();
    2.0 * s * s
}

/// `ψ_n(x) = sqrt(2/(l+1)) sin((n+1)π(x+1)/(l+1))` for `x = 0..l-1`.
pub fn interval_eigenvector(l: usize, n: usize, x: usize) -> f64 {
    (2.0 / (l + 1) as f64).sqrt() * (angle(l, n) * (x + 1) as f64).sin()
}

/// `(ψ_n, 1)`: zero for odd `n`, `sqrt(2/(l+1)) cot(α/2)` for even `n`.
pub fn interval_mass(l: usize, n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let half = 0.5 * angle(l, n);
    (2.0 / (l + 1) as f64).sqrt() * half.cos() / half.sin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSpectrum {
    pub length: usize,
    pub eigenvalues: Vec<f64>,
    pub psi0_values: Vec<f64>,
    pub psi0_mass: f64,
    pub psi_n_mass: Vec<f64>,
}

pub fn interval_spectrum(l: usize) -> Result<IntervalSpectrum> {
    if l == 0 {
        return Err(Error::EmptySpectrum);
    }
    let eigenvalues = (0..l).map(|n| interval_eigenvalue(l, n)).collect();
    let psi0_values = (0..l).map(|x| interval_eigenvector(l, 0, x)).collect();
    let psi_n_mass: Vec<f64> = (0..l).map(|n| interval_mass(l, n)).collect();
    Ok(IntervalSpectrum {
        length: l,
        eigenvalues,
        psi0_values,
        psi0_mass: psi_n_mass[0],
        psi_n_mass,
    })
}

/// A central value with a relative error bound, and the absolute interval
/// `[c(1-b), c(1+b)]` widened outward by a few ulps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticEnvelope {
    pub central_value: f64,
    pub relative_error_bound: f64,
    pub lo: f64,
    pub hi: f64,
}

impl AsymptoticEnvelope {
    pub fn new(central_value: f64, relative_error_bound: f64) -> Self {
        let widen = 4.0 * f64::EPSILON;
        let a = central_value * (1.0 - relative_error_bound);
        let b = central_value * (1.0 + relative_error_bound);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Self {
            central_value,
            relative_error_bound,
            lo: a - widen * a.abs(),
            hi: b + widen * b.abs(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Signed relative deviation of `x` from the central value.
    pub fn relative_deviation(&self, x: f64) -> f64 {
        (x - self.central_value) / self.central_value
    }
}

/// `λ_0 ≈ 4ℓ_1/(l+1)²` with relative error at most `π²/(12(1+l)²)`.
pub fn lambda0_envelope(l: usize) -> AsymptoticEnvelope {
    let m = (l + 1) as f64;
    AsymptoticEnvelope::new(4.0 * ELL1 / (m * m), PI * PI / (12.0 * m * m))
}

/// `λ_1 - λ_0 ≈ 12ℓ_1/(l+1)²` with relative error at most `10/(1+l)²`.
pub fn gap_envelope(l: usize) -> AsymptoticEnvelope {
    let m = (l + 1) as f64;
    AsymptoticEnvelope::new(12.0 * ELL1 / (m * m), 10.0 / (m * m))
}

/// `(ψ_0, 1) ≈ sqrt(2(l+1)/ℓ_1)` with relative error at most `10/(1+l)`.
///
/// The closed form behaves like `sqrt((l+1)/ℓ_1)`, a factor `sqrt(2)` below
/// this central value, so for `l >= 34` the exact mass falls outside. See
/// [`psi0_mass_envelope_corrected`].
pub fn psi0_mass_envelope(l: usize) -> AsymptoticEnvelope {
    let m = (l + 1) as f64;
    AsymptoticEnvelope::new((2.0 * m / ELL1).sqrt(), 10.0 / m)
}

/// Same bound around `sqrt((l+1)/ℓ_1)`, the actual leading behaviour of
/// `sqrt(2/(l+1)) cot(π/(2(l+1)))`.
pub fn psi0_mass_envelope_corrected(l: usize) -> AsymptoticEnvelope {
    let m = (l + 1) as f64;
    AsymptoticEnvelope::new((m / ELL1).sqrt(), 10.0 / m)
}

/// Nearest-neighbour graph on a finite site set.
#[derive(Debug, Clone)]
pub(crate) struct SiteGraph {
    pub dim: usize,
    pub neighbours: Vec<Vec<usize>>,
}

impl SiteGraph {
    pub fn new(sites: &[Site], dim: usize) -> Result<Self> {
        if let Some(bad) = sites.iter().find(|s| s.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: bad.len(),
            });
        }
        let index: HashMap<&[i64], usize> = sites
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_slice(), i))
            .collect();
        if index.len() != sites.len() {
            return Err(Error::Domain("site set contains duplicates".into()));
        }
        let mut probe = vec![0i64; dim];
        let neighbours = sites
            .iter()
            .map(|s| {
                let mut out = Vec::with_capacity(2 * dim);
                probe.copy_from_slice(s);
                for axis in 0..dim {
                    for step in [-1i64, 1] {
                        probe[axis] += step;
                        if let Some(&j) = index.get(probe.as_slice()) {
                            out.push(j);
                        }
                        probe[axis] -= step;
                    }
                }
                out
            })
            .collect();
        Ok(Self { dim, neighbours })
    }

    pub fn len(&self) -> usize {
        self.neighbours.len()
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut comps = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                comp.push(i);
                for &j in &self.neighbours[i] {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Dense `A` restricted to `members` (indices into this graph).
    pub fn dense_operator(&self, members: &[usize]) -> DMatrix<f64> {
        let local: HashMap<usize, usize> =
            members.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let w = 1.0 / (2 * self.dim) as f64;
        let n = members.len();
        let mut a = DMatrix::<f64>::identity(n, n);
        for (k, &i) in members.iter().enumerate() {
            for j in &self.neighbours[i] {
                if let Some(&m) = local.get(j) {
                    a[(k, m)] = -w;
                }
            }
        }
        a
    }
}

/// Full spectrum of `A` on a site set, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `n` is the normalized eigenvector for `eigenvalues[n]`.
    pub eigenvectors: DMatrix<f64>,
}

impl DenseSpectrum {
    /// `(ψ_n, 1)` for each `n`.
    pub fn masses(&self) -> Vec<f64> {
        (0..self.eigenvalues.len())
            .map(|n| self.eigenvectors.column(n).sum())
            .collect()
    }
}

fn sorted_eigen(a: DMatrix<f64>) -> DenseSpectrum {
    let eig = SymmetricEigen::new(a);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        fix_sign(col.as_mut_slice());
        vectors.set_column(k, &col);
    }
    DenseSpectrum {
        eigenvalues,
        eigenvectors: vectors,
    }
}

/// Makes the largest-magnitude entry positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Dense diagonalization of `A` on `sites` (Dirichlet outside).
pub fn dense_spectrum(sites: &[Site], dim: usize, cap: usize) -> Result<DenseSpectrum> {
    if sites.is_empty() {
        return Err(Error::Domain("empty site set".into()));
    }
    if sites.len() > cap {
        return Err(Error::Size {
            size: sites.len(),
            cap,
        });
    }
    let graph = SiteGraph::new(sites, dim)?;
    let all: Vec<usize> = (0..sites.len()).collect();
    Ok(sorted_eigen(graph.dense_operator(&all)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense up to [`DENSE_THRESHOLD`] sites per component, iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub cap: usize,
    pub method: EigenMethod,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_SITE_CAP,
            method: EigenMethod::Auto,
            tolerance: 1e-9,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalEigenpair {
    pub eigenvalue: f64,
    /// Normalized, indexed like the input sites; zero off the minimizing
    /// component.
    pub eigenvector: Vec<f64>,
}

/// Smallest eigenvalue of `A` with Dirichlet condition outside `sites`.
pub fn principal_eigenvalue(sites: &[Site], dim: usize) -> Result<f64> {
    principal_eigenpair(sites, dim, &EigenOptions::default()).map(|p| p.eigenvalue)
}

pub fn principal_eigenpair(
    sites: &[Site],
    dim: usize,
    opts: &EigenOptions,
) -> Result<PrincipalEigenpair> {
    if sites.is_empty() {
        return Err(Error::Domain("empty site set".into()));
    }
    if sites.len() > opts.cap {
        return Err(Error::Size {
            size: sites.len(),
            cap: opts.cap,
        });
    }
    let graph = SiteGraph::new(sites, dim)?;
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    // The operator is block diagonal over connected components.
    for comp in graph.components() {
        let dense = match opts.method {
            EigenMethod::Auto => comp.len() <= DENSE_THRESHOLD,
            EigenMethod::Dense => true,
            EigenMethod::Iterative => false,
        };
        let (lambda, vec) = if dense {
            let spec = sorted_eigen(graph.dense_operator(&comp));
            (
                spec.eigenvalues[0],
                spec.eigenvectors.column(0).iter().copied().collect(),
            )
        } else {
            inverse_iteration(&graph, &comp, opts)?
        };
        if best.as_ref().is_none_or(|b| lambda < b.0) {
            best = Some((lambda, comp, vec));
        }
    }
    let (eigenvalue, comp, vec) = best.expect("nonempty site set has a component");
    let mut eigenvector = vec![0.0; sites.len()];
    for (k, &i) in comp.iter().enumerate() {
        eigenvector[i] = vec[k];
    }
    fix_sign(&mut eigenvector);
    Ok(PrincipalEigenpair {
        eigenvalue,
        eigenvector,
    })
}

/// Sparse `A` restricted to one component, in local indices.
struct LocalOperator {
    neighbours: Vec<Vec<usize>>,
    weight: f64,
    /// Component is a path `0 - 1 - ... - n-1` in local order.
    is_path: bool,
}

impl LocalOperator {
    fn new(graph: &SiteGraph, comp: &[usize]) -> Self {
        let local: HashMap<usize, usize> = comp.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let neighbours: Vec<Vec<usize>> = comp
            .iter()
            .map(|&i| {
                graph.neighbours[i]
                    .iter()
                    .filter_map(|j| local.get(j).copied())
                    .collect()
            })
            .collect();
        let is_path = graph.dim == 1
            && neighbours
                .iter()
                .enumerate()
                .all(|(k, nb)| nb.iter().all(|&j| j + 1 == k || k + 1 == j));
        Self {
            neighbours,
            weight: 1.0 / (2 * graph.dim) as f64,
            is_path,
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (k, nb) in self.neighbours.iter().enumerate() {
            let s: f64 = nb.iter().map(|&j| x[j]).sum();
            out[k] = x[k] - self.weight * s;
        }
    }

    /// Solves `A y = b`; tridiagonal elimination on paths, conjugate
    /// gradients otherwise.
    fn solve(&self, b: &[f64], y: &mut [f64]) {
        if self.is_path {
            self.solve_tridiagonal(b, y);
        } else {
            self.solve_cg(b, y);
        }
    }

    fn solve_tridiagonal(&self, b: &[f64], y: &mut [f64]) {
        let n = b.len();
        let off = -self.weight;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = 1.0;
        c[0] = off / denom;
        d[0] = b[0] / denom;
        for i in 1..n {
            denom = 1.0 - off * c[i - 1];
            c[i] = off / denom;
            d[i] = (b[i] - off * d[i - 1]) / denom;
        }
        y[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = d[i] - c[i] * y[i + 1];
        }
    }

    fn solve_cg(&self, b: &[f64], y: &mut [f64]) {
        let n = b.len();
        y.copy_from_slice(b);
        let mut ay = vec![0.0; n];
        self.apply(y, &mut ay);
        let mut r: Vec<f64> = b.iter().zip(&ay).map(|(bi, ai)| bi - ai).collect();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        let target = 1e-26 * dot(b, b);
        for _ in 0..10 * n + 100 {
            if rr <= target {
                break;
            }
            self.apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                y[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

fn inverse_iteration(
    graph: &SiteGraph,
    comp: &[usize],
    opts: &EigenOptions,
) -> Result<(f64, Vec<f64>)> {
    let op = LocalOperator::new(graph, comp);
    let n = comp.len();
    // The principal eigenvector is positive on a connected set, so a
    // constant start has nonzero overlap with it.
    let mut x = vec![1.0; n];
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        op.solve(&x, &mut y);
        normalize(&mut y);
        std::mem::swap(&mut x, &mut y);
        op.apply(&x, &mut ax);
        let rq = dot(&x, &ax);
        let res: f64 = ax
            .iter()
            .zip(&x)
            .map(|(a, v)| (a - rq * v).powi(2))
            .sum::<f64>()
            .sqrt();
        residual = res / rq;
        let change = (rq - lambda).abs() / rq;
        lambda = rq;
        // The Rayleigh quotient error is quadratic in the residual.
        if residual <= opts.tolerance.sqrt() * 1e-1
            || (iteration > 2 && change <= opts.tolerance * 1e-3)
        {
            return Ok((lambda, x));
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iterations,
        residual,
    })
}
