//! Small dense symmetric-matrix algebra.
//!
//! Everything here works on matrices of dimension at most a few dozen:
//! Schur products, modified Hessians `A*CA • Hess B`, definiteness tests
//! with the worst eigenvalue as witness, kernel projections of `AD`,
//! minors, and the Sherman–Morrison rank-one inverse.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::report::CheckReport;

/// Default relative tolerance used by checkers when the caller supplies none.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Relative singular-value threshold below which `AD²A*` is treated as singular.
pub const SINGULAR_REL: f64 = 1e-10;

/// Largest dimension for which minors are enumerated combinatorially.
pub const MAX_COMBINATORIAL_DIM: usize = 8;

/// A real symmetric matrix. Construction symmetrizes, so `m[i][j] == m[j][i]`
/// holds bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::usage(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        SymMatrix(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::usage("rows of a symmetric matrix must all have length dim"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self::symmetrized(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| 0.0)
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrix(&self.0 * s)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn determinant(&self) -> f64 {
        self.0.clone().determinant()
    }

    /// `|det| / (1 + Π‖row_i‖)`, the scale-free saturation measure.
    pub fn relative_determinant(&self) -> f64 {
        let rows: f64 = self.0.row_iter().map(|r| r.norm()).product();
        self.determinant().abs() / (1.0 + rows)
    }

    /// Kronecker product with the identity `I_n`, ordered block-wise:
    /// entry `(i, j)` of `self` becomes the block `m[i][j] * I_n`.
    pub fn kron_identity(&self, n: usize) -> SymMatrix {
        let d = self.dim();
        SymMatrix::from_fn(d * n, |r, c| {
            if r % n == c % n {
                self.0[(r / n, c / n)]
            } else {
                0.0
            }
        })
    }
}

/// The `k × n` matrix `A` with columns `a_1, …, a_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSystem {
    a: DMatrix<f64>,
    full_rank: bool,
}

impl ColumnSystem {
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        let (k, n) = a.shape();
        if k == 0 || n == 0 {
            return Err(Error::usage("column system must be non-empty"));
        }
        if k > n {
            return Err(Error::usage(format!("column system needs k <= n, got k={k}, n={n}")));
        }
        let full_rank = numerical_rank(&a) == k;
        Ok(Self { a, full_rank })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.len();
        let k = columns.first().map(Vec::len).unwrap_or(0);
        if columns.iter().any(|c| c.len() != k) {
            return Err(Error::usage("all columns must have the same length"));
        }
        Self::from_matrix(DMatrix::from_fn(k, n, |i, j| columns[j][i]))
    }

    /// Columns `e_1..e_{n-1}` followed by `last` (the Ehrhard/Prékopa–Leindler layout).
    pub fn basis_plus(last: &[f64]) -> Result<Self> {
        let k = last.len();
        let mut cols: Vec<Vec<f64>> = (0..k)
            .map(|j| (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        cols.push(last.to_vec());
        Self::from_columns(&cols)
    }

    /// `a_1 = (1, 0)`, `a_2 = (p, sqrt(1 - p²))`.
    pub fn correlated_pair(p: f64) -> Result<Self> {
        if !(p > -1.0 && p < 1.0) {
            return Err(Error::usage(format!("correlation must lie in (-1, 1), got {p}")));
        }
        Self::from_columns(&[vec![1.0, 0.0], vec![p, (1.0 - p * p).sqrt()]])
    }

    pub fn k(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn is_full_rank(&self) -> bool {
        self.full_rank
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.a.column(j).iter().copied().collect()
    }

    /// `A* C A`, whose entries are `<C a_i, a_j>`.
    pub fn gram(&self, c: &SymMatrix) -> Result<DMatrix<f64>> {
        if c.dim() != self.k() {
            return Err(Error::usage(format!(
                "C is {}x{} but the columns live in R^{}",
                c.dim(),
                c.dim(),
                self.k()
            )));
        }
        Ok(self.a.transpose() * c.as_matrix() * &self.a)
    }

    /// `<C a_j, a_j>` for every column.
    pub fn speeds(&self, c: &SymMatrix) -> Result<Vec<f64>> {
        let g = self.gram(c)?;
        Ok((0..self.n()).map(|j| g[(j, j)]).collect())
    }
}

/// An orthogonal projector.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection(DMatrix<f64>);

impl Projection {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.trace().round().max(0.0) as usize
    }

    /// The congruence `P M P`.
    pub fn compress(&self, m: &SymMatrix) -> Result<SymMatrix> {
        if m.dim() != self.dim() {
            return Err(Error::usage("projection and matrix dimensions differ"));
        }
        SymMatrix::new(&self.0 * m.as_matrix() * &self.0)
    }
}

/// Outcome of a negative-semidefiniteness test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Definiteness {
    pub nsd: bool,
    pub worst_eigenvalue: f64,
}

/// Outcome of a minor-vanishing test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinorTest {
    pub vanish: bool,
    /// Largest `|minor|` (combinatorial path) or the `s`-th singular value.
    pub worst: f64,
}

pub fn schur_product(m1: &SymMatrix, m2: &SymMatrix) -> Result<SymMatrix> {
    if m1.dim() != m2.dim() {
        return Err(Error::usage(format!(
            "Schur product of {}x{} and {}x{}",
            m1.dim(),
            m1.dim(),
            m2.dim(),
            m2.dim()
        )));
    }
    SymMatrix::new(m1.as_matrix().component_mul(m2.as_matrix()))
}

/// `A*CA • Hess B`: entry `(i, j)` is `<C a_i, a_j> ∂_ij B`.
pub fn modified_hessian(sys: &ColumnSystem, c: &SymMatrix, hess: &SymMatrix) -> Result<SymMatrix> {
    if hess.dim() != sys.n() {
        return Err(Error::usage(format!(
            "Hessian is {}x{} but the system has {} columns",
            hess.dim(),
            hess.dim(),
            sys.n()
        )));
    }
    let g = sys.gram(c)?;
    SymMatrix::new(g.component_mul(hess.as_matrix()))
}

pub fn is_nsd(m: &SymMatrix, tol: f64) -> Definiteness {
    let worst = m.max_eigenvalue();
    Definiteness {
        nsd: worst <= tol,
        worst_eigenvalue: worst,
    }
}

/// Orthogonal projector onto `ker T` for a `k × m` matrix `T`.
///
/// Uses `I - T*(TT*)⁻¹T` when `TT*` is well conditioned and falls back to a
/// singular value decomposition otherwise.
pub fn null_space_projector(t: &DMatrix<f64>) -> Projection {
    let m = t.ncols();
    let gram = t * t.transpose();
    let ev = SymmetricEigen::new(gram.clone()).eigenvalues;
    let max = ev.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let min = ev.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    if max > 0.0 && min >= SINGULAR_REL * max {
        if let Some(inv) = gram.try_inverse() {
            let p = DMatrix::identity(m, m) - t.transpose() * inv * t;
            return Projection(symmetrize(p));
        }
    }
    let svd = t.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let mut p = DMatrix::identity(m, m);
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if smax > 0.0 && s > SINGULAR_REL * smax {
            let v = v_t.row(idx).transpose();
            p -= &v * v.transpose();
        }
    }
    Projection(symmetrize(p))
}

/// Projector onto `K(x) = ker AD(x)`, with `D = diag(∇B(x))`.
pub fn kernel_projection(sys: &ColumnSystem, grad: &[f64]) -> Result<Projection> {
    if grad.len() != sys.n() {
        return Err(Error::usage(format!(
            "gradient has {} entries, system has {} columns",
            grad.len(),
            sys.n()
        )));
    }
    let ad = scale_columns(sys.matrix(), grad);
    Ok(null_space_projector(&ad))
}

/// `A D` for a diagonal `D` given by its entries.
pub fn scale_columns(a: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut ad = a.clone();
    for (j, &dj) in d.iter().enumerate() {
        ad.column_mut(j).scale_mut(dj);
    }
    ad
}

/// Tests whether every `s × s` minor of `m` is at most `tol` in absolute value.
///
/// Dimensions up to [`MAX_COMBINATORIAL_DIM`] enumerate the minors; larger
/// matrices compare the `s`-th largest singular value with `tol` instead.
pub fn minors_vanish(m: &SymMatrix, s: usize, tol: f64) -> Result<MinorTest> {
    let n = m.dim();
    if s == 0 || s > n {
        return Err(Error::usage(format!("minor size {s} outside 1..={n}")));
    }
    let worst = if n <= MAX_COMBINATORIAL_DIM {
        let subsets = combinations(n, s);
        let mut worst = 0.0_f64;
        for rows in &subsets {
            for cols in &subsets {
                let sub = DMatrix::from_fn(s, s, |i, j| m.get(rows[i], cols[j]));
                worst = worst.max(sub.determinant().abs());
            }
        }
        worst
    } else {
        let mut sv: Vec<f64> = m.as_matrix().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv[s - 1]
    };
    Ok(MinorTest {
        vanish: worst <= tol,
        worst,
    })
}

/// `(bn² a aᵀ + D₂²)⁻¹` by the Sherman–Morrison formula.
pub fn sherman_morrison(d2: &[f64], a: &[f64], bn: f64) -> Result<SymMatrix> {
    if d2.len() != a.len() {
        return Err(Error::usage("diagonal and vector lengths differ"));
    }
    if let Some(j) = d2.iter().position(|&d| d == 0.0) {
        return Err(Error::usage(format!("diagonal entry {j} is zero")));
    }
    let inv_sq: Vec<f64> = d2.iter().map(|d| 1.0 / (d * d)).collect();
    let w: Vec<f64> = inv_sq.iter().zip(a).map(|(i, a)| i * a).collect();
    let denom = 1.0 + bn * bn * a.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>();
    let n = d2.len();
    Ok(SymMatrix::from_fn(n, |i, j| {
        let diag = if i == j { inv_sq[i] } else { 0.0 };
        diag - bn * bn * w[i] * w[j] / denom
    }))
}

/// Symmetric square root of a positive semidefinite matrix; eigenvalues below
/// `1e-12` (relative) are clamped to zero.
pub fn psd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -1e-12 * scale {
            return Err(Error::precondition(format!("matrix is not positive semidefinite (eigenvalue {v})")));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    SymMatrix::new(q * DMatrix::from_diagonal(&vals) * q.transpose())
}

pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.singular_values();
    let smax = sv.iter().fold(0.0_f64, |m, &v| m.max(v));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&v| v > SINGULAR_REL * smax).count()
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    SymMatrix::symmetrized(m).0
}


/// All `s`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        out.push(idx.clone());
        let mut i = s;
        while i > 0 && idx[i - 1] == n - s + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Random-instance check of the kernel projector and the Sherman–Morrison
/// inverse: `P² = P`, `ADP = 0` and `(bn² aaᵀ + D₂²)⁻¹` against a dense
/// inverse. Each residual is relative to the size of the matrices involved.
pub fn kernel_algebra_check(instances: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut idem, mut kern, mut sm) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..instances {
        let k = rng.random_range(1..=3);
        let n = k + rng.random_range(1..=3);
        let a = DMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
        let grad: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.2..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let p = kernel_projection(&ColumnSystem::from_matrix(a.clone())?, &grad)?;
        let pm = p.matrix();
        idem = idem.max((pm * pm - pm).amax());
        let ad = scale_columns(&a, &grad);
        kern = kern.max((&ad * pm).amax() / ad.amax().max(1.0));

        let d2: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bn = rng.random_range(-2.0..2.0);
        let fast = sherman_morrison(&d2, &v, bn)?;
        let vv = DMatrix::from_column_slice(n, 1, &v);
        let dense = (&vv * vv.transpose() * (bn * bn) + DMatrix::from_diagonal(&DVector::from_iterator(n, d2.iter().map(|d| d * d))))
            .try_inverse()
            .ok_or_else(|| Error::domain("dense inverse failed"))?;
        sm = sm.max((fast.as_matrix() - &dense).amax() / dense.amax().max(1.0));
    }
    let mut r = CheckReport::scalar("kernel-algebra", idem.max(kern).max(sm), tol)
        .with_extra("idempotence", idem)
        .with_extra("annihilation", kern)
        .with_extra("sherman_morrison", sm);
    r.grid = instances;
    r.settle();
    Ok(r.timed(start))
}
