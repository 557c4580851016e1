//! Dense data matrices, column centering, the dual sample covariance and a
//! cyclic Jacobi eigensolver for the small `n x n` matrices that arise from it.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Smallest sample count accepted by [`DataMatrix`].
pub const MIN_SAMPLES: usize = 3;

/// Sweep cap for [`sym_eigen`].
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// A `d x n` data matrix whose columns are samples.
///
/// Values are stored column-major so each sample is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    d: usize,
    n: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from column-major values (`values[j * d + i]` is
    /// variable `i` of sample `j`).
    pub fn from_column_major(d: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return domain("data matrix needs at least one variable");
        }
        if n < MIN_SAMPLES {
            return domain(format!("data matrix needs n >= {MIN_SAMPLES} samples, got {n}"));
        }
        if values.len() != d * n {
            return Err(Error::Dimension(format!(
                "expected {} values for a {d}x{n} matrix, got {}",
                d * n,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k % d, col: k / d });
        }
        Ok(Self { d, n, values })
    }

    /// Builds a matrix from rows (one row per variable).
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        let n = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(i) = rows.iter().position(|r| r.as_ref().len() != n) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {n}",
                rows[i].as_ref().len()
            )));
        }
        let mut values = vec![0.0; d * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.as_ref().iter().enumerate() {
                values[j * d + i] = v;
            }
        }
        Self::from_column_major(d, n, values)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.d + row]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.get(i, j)).collect()
    }

    /// Swaps the roles of variables and samples.
    pub fn transpose(&self) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.d {
            values.extend((0..self.n).map(|j| self.get(i, j)));
        }
        Self::from_column_major(self.n, self.d, values)
    }

    /// Applies `f(row_index, value)` to every entry.
    pub fn map_rows(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let d = self.d;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % d, v))
            .collect();
        Self::from_column_major(self.d, self.n, values)
    }

    /// `X - X̄`: subtracts the sample mean vector from every column.
    pub fn center_columns(&self) -> DataMatrix {
        let (d, n) = (self.d, self.n);
        let mut mean = vec![0.0; d];
        for col in self.columns() {
            for (m, &v) in mean.iter_mut().zip(col) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut values = self.values.clone();
        for col in values.chunks_exact_mut(d) {
            for (v, m) in col.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        DataMatrix { d, n, values }
    }

    /// `(n-1)^{-1} XᵀX` for an already centered matrix.
    pub fn dual_covariance(&self) -> SymMatrix {
        let n = self.n;
        let scale = 1.0 / (n as f64 - 1.0);
        let mut values = vec![0.0; n * n];
        for j in 0..n {
            let cj = self.column(j);
            for k in j..n {
                let v = dot(cj, self.column(k)) * scale;
                values[j * n + k] = v;
                values[k * n + j] = v;
            }
        }
        SymMatrix { m: n, values }
    }

    /// `(n-1)^{-1} XXᵀ` for an already centered matrix. Dense `d x d`, so
    /// only sensible for small `d`.
    pub fn primal_covariance(&self) -> SymMatrix {
        let (d, n) = (self.d, self.n);
        let scale = 1.0 / (n as f64 - 1.0);
        let mut values = vec![0.0; d * d];
        for col in self.columns() {
            for r in 0..d {
                for s in r..d {
                    values[r * d + s] += col[r] * col[s];
                }
            }
        }
        for r in 0..d {
            for s in r..d {
                let v = values[r * d + s] * scale;
                values[r * d + s] = v;
                values[s * d + r] = v;
            }
        }
        SymMatrix { m: d, values }
    }

    /// `X v` for an `n`-vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must equal sample count");
        let mut out = vec![0.0; self.d];
        for (col, &w) in self.columns().zip(v) {
            for (o, &x) in out.iter_mut().zip(col) {
                *o += w * x;
            }
        }
        out
    }
}

/// See [`DataMatrix::center_columns`].
pub fn center_columns(x: &DataMatrix) -> DataMatrix {
    x.center_columns()
}

/// See [`DataMatrix::dual_covariance`].
pub fn dual_covariance(xc: &DataMatrix) -> SymMatrix {
    xc.dual_covariance()
}

/// Dense symmetric `m x m` matrix (row-major, both halves stored).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    m: usize,
    values: Vec<f64>,
}

impl SymMatrix {
    /// Symmetrizes `(A + Aᵀ)/2` from row-major input.
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return domain("symmetric matrix must be non-empty");
        }
        if values.len() != m * m {
            return Err(Error::Dimension(format!(
                "expected {} values for a {m}x{m} matrix, got {}",
                m * m,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / m, col: k % m });
        }
        let mut sym = values.clone();
        for r in 0..m {
            for s in r + 1..m {
                let v = 0.5 * (values[r * m + s] + values[s * m + r]);
                sym[r * m + s] = v;
                sym[s * m + r] = v;
            }
        }
        Ok(Self { m, values: sym })
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let m = entries.len();
        let mut values = vec![0.0; m * m];
        for (i, &e) in entries.iter().enumerate() {
            values[i * m + i] = e;
        }
        Self::new(m, values)
    }

    pub fn identity(m: usize) -> Self {
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            values[i * m + i] = 1.0;
        }
        Self { m, values }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.values[r * self.m + s]
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.values.chunks_exact(self.m).map(|row| dot(row, v)).collect()
    }
}

/// Eigenvalues in non-increasing order with matching orthonormal
/// eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// Column-major: eigenvector `j` occupies `[j*m, (j+1)*m)`.
    eigenvectors: Vec<f64>,
    sweeps: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, j: usize) -> &[f64] {
        let m = self.dim();
        &self.eigenvectors[j * m..(j + 1) * m]
    }

    /// Number of Jacobi sweeps used.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// `Σ λⱼ uⱼ uⱼᵀ`, row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let m = self.dim();
        let mut out = vec![0.0; m * m];
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let u = self.eigenvector(j);
            for r in 0..m {
                for s in 0..m {
                    out[r * m + s] += lam * u[r] * u[s];
                }
            }
        }
        out
    }
}

/// Full spectral decomposition of a symmetric matrix by cyclic Jacobi
/// rotations.
///
/// Eigenvalues come back sorted non-increasing. Each eigenvector is signed
/// so that its largest-magnitude component is positive (the first such
/// component on exact ties). The output is a deterministic function of the
/// input.
pub fn sym_eigen(a: &SymMatrix) -> Result<SpectralDecomposition> {
    let m = a.dim();
    let mut w = a.values().to_vec();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    // Entries below this are treated as zero even when the diagonal is tiny
    // (the dual covariance is always rank deficient).
    let abs_floor = f64::EPSILON * 1e-3 * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let apq = w[p * m + q];
                let app = w[p * m + p];
                let aqq = w[q * m + q];
                if apq.abs() <= abs_floor || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    w[p * m + q] = 0.0;
                    w[q * m + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;

                w[p * m + p] = app - t * apq;
                w[q * m + q] = aqq + t * apq;
                w[p * m + q] = 0.0;
                w[q * m + p] = 0.0;
                for k in 0..m {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = w[k * m + p];
                    let akq = w[k * m + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    w[k * m + p] = new_kp;
                    w[p * m + k] = new_kp;
                    w[k * m + q] = new_kq;
                    w[q * m + k] = new_kq;
                }
                for k in 0..m {
                    // v is row-major here: v[k*m + j] = component k of vector j
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps >= MAX_JACOBI_SWEEPS {
            let off_norm = off_diagonal_norm(&w, m);
            return Err(Error::NotConverged { sweeps, off_norm });
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[j * m + j].total_cmp(&w[i * m + i]));

    let mut eigenvalues = Vec::with_capacity(m);
    let mut eigenvectors = Vec::with_capacity(m * m);
    for &j in &order {
        eigenvalues.push(w[j * m + j]);
        let mut col: Vec<f64> = (0..m).map(|k| v[k * m + j]).collect();
        let pivot = col
            .iter()
            .enumerate()
            .fold(0, |best, (k, x)| if x.abs() > col[best].abs() { k } else { best });
        if col[pivot] < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        eigenvectors.extend(col);
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors, sweeps })
}

fn off_diagonal_norm(w: &[f64], m: usize) -> f64 {
    let mut s = 0.0;
    for r in 0..m {
        for c in 0..m {
            if r != c {
                s += w[r * m + c] * w[r * m + c];
            }
        }
    }
    s.sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(d: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..d * n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        DataMatrix::from_column_major(d, n, values).unwrap()
    }

    fn random_sym(m: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..m * m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        SymMatrix::new(m, values).unwrap()
    }

    #[test]
    fn rejects_too_few_samples_and_nan() {
        assert!(DataMatrix::from_rows(&[[1.0, 2.0]]).is_err());
        let err = DataMatrix::from_rows(&[[1.0, f64::NAN, 3.0]]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn constant_columns_center_to_zero() {
        let x = DataMatrix::from_rows(&[[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]).unwrap();
        assert!(x.center_columns().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centering_single_row() {
        let x = DataMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(x.center_columns().values(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn centering_matches_projection_matrix() {
        let (d, n) = (4, 5);
        let x = random_matrix(d, n, 11);
        // P_n = I - 11ᵀ/n built explicitly
        let p: Vec<f64> = (0..n * n)
            .map(|k| if k / n == k % n { 1.0 } else { 0.0 } - 1.0 / n as f64)
            .collect();
        let xc = x.center_columns();
        for i in 0..d {
            let row_sum: f64 = xc.row(i).iter().sum();
            assert!(row_sum.abs() < 1e-12);
            for j in 0..n {
                let expected: f64 = (0..n).map(|k| x.get(i, k) * p[k * n + j]).sum();
                assert_abs_diff_eq!(xc.get(i, j), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dual_covariance_hand_example() {
        let x = DataMatrix::from_rows(&[[0.0, 1.0, 2.0]]).unwrap();
        let sd = x.center_columns().dual_covariance();
        let expected = [0.5, 0.0, -0.5, 0.0, 0.0, 0.0, -0.5, 0.0, 0.5];
        assert_eq!(sd.values(), &expected);
    }

    #[test]
    fn dual_covariance_of_constant_data_is_zero() {
        let x = DataMatrix::from_rows(&[[3.0, 3.0, 3.0, 3.0]]).unwrap();
        assert!(x.center_columns().dual_covariance().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dual_and_primal_share_nonzero_spectrum() {
        let x = random_matrix(50, 6, 3);
        let xc = x.center_columns();
        let dual = sym_eigen(&xc.dual_covariance()).unwrap();
        let primal = sym_eigen(&xc.primal_covariance()).unwrap();
        for j in 0..5 {
            let a = dual.eigenvalues()[j];
            let b = primal.eigenvalues()[j];
            assert!((a - b).abs() <= 1e-8 * b.abs(), "{j}: {a} vs {b}");
        }
        assert!(dual.eigenvalues()[5].abs() < 1e-9 * xc.dual_covariance().trace());
    }

    #[test]
    fn identity_spectrum() {
        let e = sym_eigen(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum_and_axis_vectors() {
        let e = sym_eigen(&SymMatrix::diagonal(&[1.0, 3.0]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues(), &[3.0, 1.0]);
        assert_eq!(e.eigenvector(0), &[0.0, 1.0]);
        assert_eq!(e.eigenvector(1), &[1.0, 0.0]);
    }

    #[test]
    fn random_reconstruction_and_trace() {
        let a = random_sym(6, 42);
        let e = sym_eigen(&a).unwrap();
        let rec = e.reconstruct();
        let err: f64 = rec
            .iter()
            .zip(a.values())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9, "reconstruction error {err}");
        let sum: f64 = e.eigenvalues().iter().sum();
        assert!((sum - a.trace()).abs() <= 1e-9 * (1.0 + a.trace().abs()));
    }

    #[test]
    fn sign_convention_largest_component_positive() {
        let a = random_sym(7, 5);
        let e = sym_eigen(&a).unwrap();
        for j in 0..7 {
            let u = e.eigenvector(j);
            let big = u.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }

    fn check_decomposition(a: &SymMatrix, e: &SpectralDecomposition) {
        let m = a.dim();
        let tol = 1e-10 * (1.0 + a.frobenius_norm());
        for w in e.eigenvalues().windows(2) {
            assert!(w[0] >= w[1]);
        }
        for j in 0..m {
            let u = e.eigenvector(j);
            let au = a.mul_vec(u);
            let res: f64 = au
                .iter()
                .zip(u)
                .map(|(x, y)| (x - e.eigenvalues()[j] * y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= tol, "residual {res}");
            for k in 0..m {
                let ip = dot(u, e.eigenvector(k));
                let target = if j == k { 1.0 } else { 0.0 };
                assert!((ip - target).abs() <= 1e-10, "inner ({j},{k}) = {ip}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn jacobi_invariants(m in 1usize..12, seed in any::<u64>()) {
            let a = random_sym(m, seed);
            let e = sym_eigen(&a).unwrap();
            check_decomposition(&a, &e);
            let sum: f64 = e.eigenvalues().iter().sum();
            prop_assert!((sum - a.trace()).abs() <= 1e-9 * (1.0 + a.trace().abs()));
            prop_assert_eq!(sym_eigen(&a).unwrap(), e);
        }

        #[test]
        fn dual_spectrum_invariants(d in 1usize..40, n in 3usize..10, seed in any::<u64>()) {
            let x = random_matrix(d, n, seed);
            let xc = x.center_columns();
            prop_assert_eq!(xc.center_columns().values().len(), xc.values().len());
            for (a, b) in xc.center_columns().values().iter().zip(xc.values()) {
                prop_assert!((a - b).abs() < 1e-13);
            }
            let sd = xc.dual_covariance();
            let e = sym_eigen(&sd).unwrap();
            check_decomposition(&sd, &e);
            let tr = sd.trace();
            prop_assert!(e.eigenvalues()[n - 1].abs() <= 1e-9 * tr.max(f64::MIN_POSITIVE));
            prop_assert!(e.eigenvalues().iter().all(|&l| l >= -1e-9 * tr));
            let primal = sym_eigen(&xc.primal_covariance()).unwrap();
            prop_assert!((primal.eigenvalues().iter().sum::<f64>() - tr).abs() <= 1e-9 * tr);
            for j in 0..(n - 1).min(d) {
                let (a, b) = (e.eigenvalues()[j], primal.eigenvalues()[j]);
                prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300) + 1e-12 * tr, "{} vs {}", a, b);
            }
        }
    }
}
