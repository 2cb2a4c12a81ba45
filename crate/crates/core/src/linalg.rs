//! Dense complex linear algebra sized for few-qubit work (dimensions up to 64).
//!
//! Everything is built on [`ComplexMatrix`], a row-major `Vec<Complex64>` store.
//! The Hermitian eigensolver is a cyclic complex Jacobi iteration: at these
//! dimensions it is exact to near machine precision, has no external
//! dependencies, and gives us full control over eigenvalue ordering, the
//! eigenvector phase gauge, and degeneracy grouping, all of which downstream
//! reconstruction code relies on.
//!
//! Conventions used throughout the crate:
//! * qubit 1 is the leftmost ket label and the most significant bit of a basis
//!   index, so |b1 b2 b3> has index b1*4 + b2*2 + b3;
//! * eigenvalues are returned in descending order (stable under ties);
//! * each eigenvector is gauged so its largest-magnitude component is real
//!   and positive.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for accepting a matrix as Hermitian, relative to max(1, ||m||_F).
pub const HERMITICITY_TOL: f64 = 1e-8;
/// Eigenvalues above -PSD_CLIP and below zero are clipped to zero; anything
/// more negative is an error where positive semidefiniteness is required.
pub const PSD_CLIP: f64 = 1e-8;
/// Adjacent eigenvalues closer than this are reported as one degeneracy group.
pub const DEGENERACY_TOL: f64 = 1e-7;
/// Jacobi sweep target for the off-diagonal Frobenius norm, relative to
/// max(1, ||m||_F). Eigenvalues are accurate to about this times the matrix
/// scale, so negatives within that band are solver noise, not signal.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidInput("matrix must be non-empty".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let data: Vec<Complex64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(ComplexMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Diagonal matrix from real entries.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = ComplexMatrix::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, Complex64::new(e, 0.0));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c) + a * other.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}x{} to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (r, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, x) in v.iter().enumerate() {
                acc += self.get(r, c) * x;
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the difference; shapes must match.
    pub fn distance(&self, other: &ComplexMatrix) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }

    /// Largest absolute entry of the difference.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// ||m - m^dag||_F <= HERMITICITY_TOL * max(1, ||m||_F).
    pub fn is_hermitian(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        self.hermiticity_deviation() <= HERMITICITY_TOL * self.frobenius_norm().max(1.0)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                acc += (self.get(r, c) - self.get(c, r).conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// (m + m^dag)/2.
    pub fn hermitize(&self) -> ComplexMatrix {
        assert!(self.is_square(), "hermitize of a non-square matrix");
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = (self.get(r, c) + self.get(c, r).conj()) * 0.5;
                out.set(r, c, v);
            }
        }
        out
    }

    /// Outer product column * row^dag of two vectors.
    pub fn outer(col: &[Complex64], row: &[Complex64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(col.len(), row.len());
        for (r, a) in col.iter().enumerate() {
            for (c, b) in row.iter().enumerate() {
                out.set(r, c, a * b.conj());
            }
        }
        out
    }

    fn check_same_shape(&self, other: &ComplexMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Kronecker product; the first factor supplies the most significant index
/// bits, matching the qubit-1-leftmost convention.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let av = a.get(ar, ac);
            if av.norm_sqr() == 0.0 {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out.set(ar * b.rows + br, ac * b.cols + bc, av * b.get(br, bc));
                }
            }
        }
    }
    out
}

/// Number of qubits for a 2^n-dimensional square matrix.
pub fn qubit_count(m: &ComplexMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let dim = m.rows();
    if !dim.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Partial trace over the qubits not listed in `keep`.
///
/// `keep` holds 1-based qubit indices in strictly increasing order; the
/// result acts on the kept qubits in their original relative order.
pub fn partial_trace(m: &ComplexMatrix, keep: &[usize]) -> Result<ComplexMatrix> {
    let n = qubit_count(m)?;
    if keep.is_empty() {
        return Err(Error::InvalidInput("keep list must be non-empty".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "keep list must be strictly increasing".into(),
        ));
    }
    if keep.iter().any(|&q| q < 1 || q > n) {
        return Err(Error::InvalidInput(format!(
            "keep list {keep:?} out of range for {n} qubits"
        )));
    }
    let k = keep.len();
    let traced: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
    let mut out = ComplexMatrix::zeros(1 << k, 1 << k);
    // Assemble full indices bit by bit: kept bits come from the output
    // indices, traced bits are summed over diagonally.
    for r_out in 0..1usize << k {
        for c_out in 0..1usize << k {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..1usize << traced.len() {
                let mut r_full = 0usize;
                let mut c_full = 0usize;
                for (j, &q) in keep.iter().enumerate() {
                    let rb = (r_out >> (k - 1 - j)) & 1;
                    let cb = (c_out >> (k - 1 - j)) & 1;
                    r_full |= rb << (n - q);
                    c_full |= cb << (n - q);
                }
                for (j, &q) in traced.iter().enumerate() {
                    let tb = (t >> (traced.len() - 1 - j)) & 1;
                    r_full |= tb << (n - q);
                    c_full |= tb << (n - q);
                }
                acc += m.get(r_full, c_full);
            }
            out.set(r_out, c_out, acc);
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// Real eigenvalues, descending; ties keep the order the sweep produced.
    pub eigenvalues: Vec<f64>,
    /// Column i is the eigenvector of eigenvalues[i], gauged so the
    /// largest-magnitude component is real positive.
    pub eigenvectors: ComplexMatrix,
    /// Consecutive index runs whose eigenvalues agree within DEGENERACY_TOL.
    pub degeneracy_groups: Vec<Vec<usize>>,
}

impl EigenSystem {
    /// Eigenvector i as an owned column.
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        (0..self.eigenvectors.rows())
            .map(|r| self.eigenvectors.get(r, i))
            .collect()
    }
}

/// Cyclic complex Jacobi diagonalization.
///
/// Each rotation factors the (p,q) pivot as a phase times a real 2x2
/// rotation, annihilating the pivot exactly; sweeps repeat until the
/// off-diagonal Frobenius norm falls below 1e-12 relative to the input scale.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigenSystem> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let dev = m.hermiticity_deviation();
    if dev > HERMITICITY_TOL * m.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }

    let n = m.rows();
    let mut a = m.hermitize();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);
    let tol = JACOBI_TOL * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a.get(p, q);
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Phase factor turning the pivot real, then a real Jacobi
                // rotation on [[app, |apq|], [|apq|, aqq]].
                let phase = apq / mag;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G restricted to the (p,q) plane:
                //   [ c        s      ]
                //   [-s*ph^*   c*ph^* ]  with ph^* = conj(phase)
                let gpp = Complex64::new(c, 0.0);
                let gpq = Complex64::new(s, 0.0);
                let gqp = -s * phase.conj();
                let gqq = c * phase.conj();

                // A <- G^dag A G, applied as row then column updates.
                for j in 0..n {
                    let ap = a.get(p, j);
                    let aq = a.get(q, j);
                    a.set(p, j, gpp.conj() * ap + gqp.conj() * aq);
                    a.set(q, j, gpq.conj() * ap + gqq.conj() * aq);
                }
                for i in 0..n {
                    let ap = a.get(i, p);
                    let aq = a.get(i, q);
                    a.set(i, p, ap * gpp + aq * gqp);
                    a.set(i, q, ap * gpq + aq * gqq);
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, vp * gpp + vq * gqp);
                    v.set(i, q, vp * gpq + vq * gqq);
                }
                a.set(p, q, Complex64::new(0.0, 0.0));
                a.set(q, p, Complex64::new(0.0, 0.0));
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(Error::ConvergenceFailure {
            off_norm: off_diagonal_norm(&a),
        });
    }

    // Stable descending sort keeps tie order deterministic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .re
            .partial_cmp(&a.get(i, i).re)
            .expect("eigenvalues are finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut column: Vec<Complex64> = (0..n).map(|r| v.get(r, src)).collect();
        gauge_phase(&mut column);
        for (r, val) in column.into_iter().enumerate() {
            eigenvectors.set(r, col, val);
        }
    }

    let mut degeneracy_groups: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..n {
        if (eigenvalues[i - 1] - eigenvalues[i]).abs() < DEGENERACY_TOL {
            degeneracy_groups.last_mut().unwrap().push(i);
        } else {
            degeneracy_groups.push(vec![i]);
        }
    }

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        degeneracy_groups,
    })
}

/// Multiply by the phase that makes the largest-magnitude component real
/// positive (first index wins on magnitude ties).
pub fn gauge_phase(v: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = 0.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag + 1e-15 {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag == 0.0 {
        return;
    }
    let phase = v[best] / best_mag;
    let correction = phase.conj();
    for z in v.iter_mut() {
        *z *= correction;
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                acc += a.get(r, c).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Positive-semidefinite square root via eigendecomposition.
///
/// Eigenvalues in [-PSD_CLIP, 0) are clipped to zero; anything more negative
/// is an error. Returns the root and whether clipping occurred.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<(ComplexMatrix, bool)> {
    let eig = hermitian_eig(m)?;
    let mut clipped = false;
    let n = m.rows();
    // Negative eigenvalues within the eigensolver's own accuracy are exact
    // zeros, not clipping events; only report material negativity.
    let noise = JACOBI_TOL * m.frobenius_norm().max(1.0);
    let mut root = ComplexMatrix::zeros(n, n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let lambda = if lambda < 0.0 {
            if lambda < -PSD_CLIP {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: lambda });
            }
            if lambda < -noise {
                clipped = true;
            }
            0.0
        } else {
            lambda
        };
        if lambda == 0.0 {
            continue;
        }
        let sq = lambda.sqrt();
        let vec = eig.vector(i);
        for r in 0..n {
            for c in 0..n {
                let v = root.get(r, c) + sq * vec[r] * vec[c].conj();
                root.set(r, c, v);
            }
        }
    }
    Ok((root.hermitize(), clipped))
}
