//! Dense complex operator algebra: charge and Fock basis operators, tensor
//! products, and Hermitian eigendecomposition with deterministic conventions.
//!
//! Every operator carries its subsystem factorization (`factor_dims`) so that
//! composite-space bookkeeping is explicit rather than positional folklore.
//! Dense storage is deliberate: the largest problem treated here is a few
//! hundred dimensions, far below the point where sparsity pays for itself.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense complex square matrix on a composite Hilbert space.
#[derive(Clone, Debug)]
pub struct Operator {
    entries: Array2<Complex64>,
    factor_dims: Vec<usize>,
}

impl Operator {
    /// Wrap a dense matrix, declaring its subsystem factorization.
    pub fn new(entries: Array2<Complex64>, factor_dims: Vec<usize>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::Validation(format!(
                "operator must be square, got {rows}x{cols}"
            )));
        }
        let prod: usize = factor_dims.iter().product();
        if factor_dims.is_empty() || prod != rows {
            return Err(Error::Validation(format!(
                "factor dims {factor_dims:?} do not multiply to dimension {rows}"
            )));
        }
        Ok(Self {
            entries,
            factor_dims,
        })
    }

    /// Wrap a dense matrix as a single-factor operator.
    pub fn from_matrix(entries: Array2<Complex64>) -> Result<Self> {
        let dim = entries.nrows();
        Self::new(entries, vec![dim])
    }

    /// Identity on the composite space with the given factorization.
    pub fn identity(factor_dims: &[usize]) -> Self {
        let dim: usize = factor_dims.iter().product();
        Self {
            entries: Array2::eye(dim),
            factor_dims: factor_dims.to_vec(),
        }
    }

    /// Zero operator with the given factorization.
    pub fn zeros(factor_dims: &[usize]) -> Self {
        let dim: usize = factor_dims.iter().product();
        Self {
            entries: Array2::from_elem((dim, dim), ZERO),
            factor_dims: factor_dims.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    #[cfg(test)]
    pub(crate) fn entries_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.entries
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let dim = self.dim();
        let mut out = Array2::from_elem((dim, dim), ZERO);
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] = self.entries[(j, i)].conj();
            }
        }
        Self {
            entries: out,
            factor_dims: self.factor_dims.clone(),
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// max|A - A^dag| < tol * max|A| (zero operators count as Hermitian).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs();
        if scale == 0.0 {
            return true;
        }
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst < tol * scale
    }

    /// self * other (asserts matching dimensions).
    pub fn matmul(&self, other: &Operator) -> Operator {
        assert_eq!(
            self.dim(),
            other.dim(),
            "operator product dimension mismatch"
        );
        let dim = self.dim();
        let mut out = Array2::from_elem((dim, dim), ZERO);
        matmul_into(
            &mut out,
            &self.entries.view(),
            &other.entries.view(),
            ONE,
            ZERO,
        );
        Operator {
            entries: out,
            factor_dims: self.factor_dims.clone(),
        }
    }

    /// self + alpha * other, in place.
    pub fn add_scaled(&mut self, alpha: Complex64, other: &Operator) {
        assert_eq!(self.dim(), other.dim(), "operator sum dimension mismatch");
        self.entries.zip_mut_with(&other.entries, |a, b| {
            *a += alpha * b;
        });
    }

    /// alpha * self.
    pub fn scaled(&self, alpha: Complex64) -> Operator {
        Operator {
            entries: self.entries.mapv(|z| alpha * z),
            factor_dims: self.factor_dims.clone(),
        }
    }

    /// Commutator [self, other].
    pub fn commutator(&self, other: &Operator) -> Operator {
        let mut ab = self.matmul(other);
        let ba = other.matmul(self);
        ab.add_scaled(-ONE, &ba);
        ab
    }
}

/// c = alpha * a * b + beta * c through the tuned complex gemm kernel.
///
/// This is the single hot matrix product used by the Lindblad integrator;
/// everything else in the crate is small enough not to care.
pub(crate) fn matmul_into(
    c: &mut Array2<Complex64>,
    a: &ArrayView2<Complex64>,
    b: &ArrayView2<Complex64>,
    alpha: Complex64,
    beta: Complex64,
) {
    let (m, ka) = a.dim();
    let (kb, n) = b.dim();
    assert_eq!(ka, kb, "gemm inner dimension mismatch");
    assert_eq!(c.dim(), (m, n), "gemm output dimension mismatch");
    let (rsa, csa) = (a.strides()[0], a.strides()[1]);
    let (rsb, csb) = (b.strides()[0], b.strides()[1]);
    let (rsc, csc) = (c.strides()[0], c.strides()[1]);
    // num_complex::Complex64 is repr(C) { re: f64, im: f64 }, layout-identical
    // to the [f64; 2] pairs the kernel consumes.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            ka,
            n,
            [alpha.re, alpha.im],
            a.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            [beta.re, beta.im],
            c.as_mut_ptr() as *mut [f64; 2],
            rsc,
            csc,
        );
    }
}

/// Truncated bosonic annihilation operator, <n-1|a|n> = sqrt(n).
pub fn fock_annihilation(n_fock: usize) -> Result<Operator> {
    if n_fock < 2 {
        return Err(Error::Validation(format!(
            "fock truncation must be >= 2, got {n_fock}"
        )));
    }
    let mut a = Array2::from_elem((n_fock, n_fock), ZERO);
    for n in 1..n_fock {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(a, vec![n_fock])
}

/// Charge-basis operators on |-n_max> ... |n_max>.
///
/// Returns (n_op, raise_phase): the Cooper-pair number operator and the
/// phase raising operator sum |n+1><n| (truncated at the top edge), so that
/// cos(phi) = (raise + raise^dag)/2.
pub fn charge_operators(n_max: usize) -> Result<(Operator, Operator)> {
    if n_max < 1 {
        return Err(Error::Validation(format!(
            "charge truncation must be >= 1, got {n_max}"
        )));
    }
    let dim = 2 * n_max + 1;
    let mut n_op = Array2::from_elem((dim, dim), ZERO);
    let mut raise = Array2::from_elem((dim, dim), ZERO);
    for i in 0..dim {
        n_op[(i, i)] = Complex64::new(i as f64 - n_max as f64, 0.0);
        if i + 1 < dim {
            raise[(i + 1, i)] = ONE;
        }
    }
    Ok((
        Operator::new(n_op, vec![dim])?,
        Operator::new(raise, vec![dim])?,
    ))
}

/// sigma_x on a two-level factor.
pub fn pauli_x() -> Operator {
    let mut m = Array2::from_elem((2, 2), ZERO);
    m[(0, 1)] = ONE;
    m[(1, 0)] = ONE;
    Operator {
        entries: m,
        factor_dims: vec![2],
    }
}

/// sigma_z = diag(-1, +1): index 0 is the qubit ground state, so a term
/// (omega/2) sigma_z places the ground at -omega/2.
pub fn pauli_z() -> Operator {
    let mut m = Array2::from_elem((2, 2), ZERO);
    m[(0, 0)] = -ONE;
    m[(1, 1)] = ONE;
    Operator {
        entries: m,
        factor_dims: vec![2],
    }
}

/// Kronecker product of the operators in order; factor_dims concatenate.
pub fn tensor(ops: &[&Operator]) -> Operator {
    assert!(!ops.is_empty(), "tensor of an empty operator list");
    let mut entries = ops[0].entries.clone();
    let mut dims = ops[0].factor_dims.clone();
    for op in &ops[1..] {
        entries = kron(&entries, &op.entries);
        dims.extend_from_slice(&op.factor_dims);
    }
    Operator {
        entries,
        factor_dims: dims,
    }
}

fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ma, na) = a.dim();
    let (mb, nb) = b.dim();
    let mut out = Array2::from_elem((ma * mb, na * nb), ZERO);
    for ia in 0..ma {
        for ja in 0..na {
            let aij = a[(ia, ja)];
            if aij == ZERO {
                continue;
            }
            for ib in 0..mb {
                for jb in 0..nb {
                    out[(ia * mb + ib, ja * nb + jb)] = aij * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Eigendecomposition of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// Ascending eigenvalues (units are whatever the caller put in H).
    pub eigenvalues: Vec<f64>,
    /// Column k is the normalized eigenvector of eigenvalues[k].
    pub eigenvectors: Array2<Complex64>,
}

/// Relative Hermiticity tolerance enforced on eigensystem inputs.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Lowest-k eigenpairs of a Hermitian operator, ascending, with a
/// deterministic basis convention:
///
/// - eigenvalues sorted ascending;
/// - within a degenerate group (spacing below 1e-10 of the spectral scale)
///   vectors are ordered by the row index of their largest-magnitude
///   component;
/// - each vector's largest-magnitude component (ties: lowest index) is made
///   real positive.
///
/// The convention makes dressed-basis matrix elements reproducible across
/// runs and platforms.
pub fn eigensystem(h: &Operator, k: Option<usize>) -> Result<EigenSystem> {
    if !h.is_hermitian(HERMITICITY_TOL) {
        return Err(Error::Validation(
            "eigensystem input is not Hermitian".into(),
        ));
    }
    let dim = h.dim();
    let keep = k.unwrap_or(dim);
    if keep == 0 || keep > dim {
        return Err(Error::Validation(format!(
            "requested {keep} eigenpairs from a dimension-{dim} operator"
        )));
    }

    let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| h.entries[(i, j)]);
    let decomp = m.symmetric_eigen();

    // sort ascending
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        decomp.eigenvalues[a]
            .partial_cmp(&decomp.eigenvalues[b])
            .expect("non-finite eigenvalue")
    });
    let mut values: Vec<f64> = order.iter().map(|&i| decomp.eigenvalues[i]).collect();
    let mut columns: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&i| decomp.eigenvectors.column(i).iter().copied().collect())
        .collect();

    // degeneracy-aware reordering
    let scale = values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            let mut group: Vec<(usize, usize)> = (start..end)
                .map(|idx| (argmax_abs(&columns[idx]), idx))
                .collect();
            group.sort_by_key(|&(anchor, idx)| (anchor, idx));
            let vals: Vec<f64> = (start..end).map(|i| values[i]).collect();
            let cols: Vec<Vec<Complex64>> = group
                .iter()
                .map(|&(_, idx)| std::mem::take(&mut columns[idx]))
                .collect();
            for (offset, col) in cols.into_iter().enumerate() {
                columns[start + offset] = col;
                values[start + offset] = vals[offset];
            }
        }
        start = end;
    }

    // phase convention
    let mut vectors = Array2::from_elem((dim, keep), ZERO);
    for (col_idx, col) in columns.iter().take(keep).enumerate() {
        let anchor = argmax_abs(col);
        let pivot = col[anchor];
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            ONE
        };
        for (row, &c) in col.iter().enumerate() {
            vectors[(row, col_idx)] = phase * c;
        }
    }
    values.truncate(keep);

    Ok(EigenSystem {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

fn argmax_abs(col: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_norm = -1.0f64;
    for (i, c) in col.iter().enumerate() {
        let n = c.norm_sqr();
        if n > best_norm + 1e-300 && n > best_norm {
            // strict improvement keeps the lowest index on exact ties
            best_norm = n;
            best = i;
        }
    }
    best
}
