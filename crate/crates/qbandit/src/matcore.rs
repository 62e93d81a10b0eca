//! Minimal dense linear algebra for small symmetric matrices.
//!
//! Every design matrix in this crate is at most a few dimensions wide (Bloch
//! vectors are 3-dimensional, recommender contexts reduce to at most three
//! effective coordinates), so the routines here favour robustness and
//! determinism over asymptotic speed:
//!
//! * [`eig_sym`] is a cyclic Jacobi eigensolver. Eigenvalues come back in
//!   ascending order, ties keep their input order, and every eigenvector is
//!   sign-normalised so that its largest-magnitude component is positive.
//!   This makes seeded runs bit-reproducible.
//! * Storage is dense row-major; there is no sparse path.

use crate::error::{Error, Result};

/// Largest matrix dimension accepted by the eigensolver.
pub const MAX_DIM: usize = 16;

/// Threshold below which a quadratic form is treated as a PSD violation.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// Smallest eigenvalue accepted by [`solve_psd`].
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// The `dim × dim` zero matrix.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// The `dim × dim` identity scaled by `s`.
    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = s;
        }
        m
    }

    /// The `dim × dim` identity.
    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    /// Diagonal matrix with the given diagonal.
    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from rows, checking squareness, symmetry and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::contract(format!(
                        "matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Trace.
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Matrix-vector product `M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Quadratic form `xᵀ M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// In-place `M ← M + w·a aᵀ`.
    pub fn add_rank1(&mut self, a: &[f64], w: f64) -> Result<()> {
        if a.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.len(),
            });
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::contract(format!(
                "rank-one weight must be finite and >= 0, got {w}"
            )));
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i * self.dim + j] += w * a[i] * a[j];
            }
        }
        Ok(())
    }

    /// Grows the matrix by one row and column, placing `diag` on the new
    /// diagonal entry and zeros elsewhere (`M ⊕ diag`).
    pub fn extend_diag(&mut self, diag: f64) {
        let n = self.dim + 1;
        let mut data = vec![0.0; n * n];
        for i in 0..self.dim {
            for j in 0..self.dim {
                data[i * n + j] = self.data[i * self.dim + j];
            }
        }
        data[n * n - 1] = diag;
        self.dim = n;
        self.data = data;
    }

    fn check_finite(&self) -> Result<()> {
        if self.data.iter().any(|x| !x.is_finite()) {
            Err(Error::NonFinite("matrix entry"))
        } else {
            Ok(())
        }
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Eigenvalues in nondecreasing order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    /// Smallest eigenvalue.
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    /// Largest eigenvalue.
    pub fn max(&self) -> f64 {
        *self.values.last().expect("nonempty decomposition")
    }

    /// Sum of log-eigenvalues (log-determinant); requires a positive-definite matrix.
    pub fn log_det(&self) -> f64 {
        self.values.iter().map(|v| v.ln()).sum()
    }

    /// Rebuilds `Σ λ_i v_i v_iᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.values.len();
        let mut m = SymMatrix::zeros(d);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..d {
                for j in 0..d {
                    m.data[i * d + j] += lam * v[i] * v[j];
                }
            }
        }
        m
    }

    /// Solves `M x = b` through the decomposition: `x = Σ v_i (v_i·b)/λ_i`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.min() <= SINGULAR_THRESHOLD {
            return Err(Error::Singular(self.min()));
        }
        let mut x = vec![0.0; b.len()];
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            let c = dot(v, b) / lam;
            axpy(&mut x, c, v);
        }
        Ok(x)
    }

    /// `‖x‖²_{M⁻¹} = Σ (v_i·x)²/λ_i`.
    pub fn inv_quad_form(&self, x: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(lam, v)| dot(v, x).powi(2) / lam)
            .sum()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomposition> {
    m.check_finite()?;
    let n = m.dim;
    if n == 0 {
        return Err(Error::contract("empty matrix"));
    }
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    let mut a = m.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let (app, aqq) = (a[p * n + p], a[q * n + q]);
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let t = if tau == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k * n + p], a[k * n + q]);
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: equal eigenvalues keep their input (diagonal) order.
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .partial_cmp(&a[j * n + j])
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..n).map(|k| v[k * n + j]).collect();
            let norm = norm(&col);
            col.iter_mut().for_each(|x| *x /= norm);
            fix_sign(&mut col);
            col
        })
        .collect();
    Ok(EigenDecomposition { values, vectors })
}

/// Flips `v` so that its largest-magnitude component (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-14 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Returns `V + w·a aᵀ`.
pub fn rank1_update(v: &SymMatrix, a: &[f64], w: f64) -> Result<SymMatrix> {
    let mut out = v.clone();
    out.add_rank1(a, w)?;
    Ok(out)
}

/// `√(xᵀ M x)` for positive-semidefinite `M`.
pub fn weighted_norm(x: &[f64], m: &SymMatrix) -> Result<f64> {
    if x.len() != m.dim {
        return Err(Error::DimensionMismatch {
            expected: m.dim,
            found: x.len(),
        });
    }
    let q = m.quad_form(x);
    if q < -PSD_TOLERANCE {
        return Err(Error::PsdViolation(q));
    }
    Ok(q.max(0.0).sqrt())
}

/// Solves `V x = b` for positive-definite `V`.
pub fn solve_psd(v: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != v.dim {
        return Err(Error::DimensionMismatch {
            expected: v.dim,
            found: b.len(),
        });
    }
    eig_sym(v)?.solve(b)
}

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y ← y + c·x`.
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += c * xi);
}

/// Returns `a / ‖a‖`, or `None` for the zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| a.iter().map(|x| x / n).collect())
}

/// Element-wise difference `a − b`.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eig_sym(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum_and_basis() {
        let e = eig_sym(&SymMatrix::diag(&[2.0, 5.0])).unwrap();
        assert_eq!(e.values, vec![2.0, 5.0]);
        assert_eq!(e.vectors, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn two_by_two_hand_solution() {
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = eig_sym(&m).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // Sign convention: largest-magnitude component positive (first on ties).
        assert_abs_diff_eq!(e.vectors[0][0], r, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[0][1], -r, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[1][0], r, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[1][1], r, epsilon = 1e-12);
    }

    #[test]
    fn eigenvector_sign_is_canonical() {
        let m = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -4.0]]).unwrap();
        let e = eig_sym(&m).unwrap();
        assert_eq!(e.vectors[0], vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_non_finite_and_oversized() {
        let mut m = SymMatrix::identity(2);
        m.data[0] = f64::NAN;
        assert!(matches!(eig_sym(&m), Err(Error::NonFinite(_))));
        assert!(matches!(
            eig_sym(&SymMatrix::identity(17)),
            Err(Error::DimensionTooLarge(17))
        ));
    }

    #[test]
    fn rank1_examples() {
        let u = rank1_update(&SymMatrix::identity(2), &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(u, SymMatrix::diag(&[2.0, 1.0]));
        let z = rank1_update(&SymMatrix::identity(2), &[3.0, -7.0], 0.0).unwrap();
        assert_eq!(z, SymMatrix::identity(2));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let u = rank1_update(&SymMatrix::identity(2), &[r, r], 2.0).unwrap();
        let want = [2.0, 1.0, 1.0, 2.0];
        for (a, b) in u.as_slice().iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(rank1_update(&SymMatrix::identity(2), &[1.0], 1.0).is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        assert_eq!(
            weighted_norm(&[1.0, 0.0], &SymMatrix::identity(2)).unwrap(),
            1.0
        );
        assert_eq!(
            weighted_norm(&[0.0, 0.0], &SymMatrix::identity(2)).unwrap(),
            0.0
        );
        let n = weighted_norm(&[1.0, 1.0], &SymMatrix::diag(&[4.0, 9.0])).unwrap();
        assert_abs_diff_eq!(n, 13f64.sqrt(), epsilon = 1e-15);
        let bad = SymMatrix::diag(&[-1.0, 1.0]);
        assert!(matches!(
            weighted_norm(&[1.0, 0.0], &bad),
            Err(Error::PsdViolation(_))
        ));
    }

    #[test]
    fn solve_examples() {
        assert_eq!(
            solve_psd(&SymMatrix::identity(2), &[3.0, 4.0]).unwrap(),
            vec![3.0, 4.0]
        );
        let x = solve_psd(&SymMatrix::diag(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-15);
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let x = solve_psd(&m, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(x[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], -1.0 / 3.0, epsilon = 1e-14);
        assert!(matches!(
            solve_psd(&SymMatrix::diag(&[1.0, 0.0]), &[1.0, 1.0]),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn extend_diag_appends_identity_block() {
        let mut m = SymMatrix::diag(&[2.0]);
        m.extend_diag(1.0);
        assert_eq!(m, SymMatrix::diag(&[2.0, 1.0]));
    }
}
