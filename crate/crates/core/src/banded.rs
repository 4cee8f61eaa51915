//! Banded matrix storage and a symmetric positive definite banded Cholesky.
//!
//! Storage is diagonal-major: one contiguous run of entries per diagonal, so
//! the factorization and multiplication inner loops walk stride-1 slices.
//! With bandwidth w, a factorization costs O(n w^2) and a solve O(n w).

use crate::error::{Error, Result};
use ndarray::Array2;

/// General banded matrix. Entry (i, j) is identically zero whenever
/// j - i > upper_bw or i - j > lower_bw.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n_rows: usize,
    n_cols: usize,
    lower_bw: usize,
    upper_bw: usize,
    /// diags[d + lower_bw] holds the diagonal with offset d = j - i,
    /// ordered from the lowest sub-diagonal to the highest super-diagonal.
    diags: Vec<Vec<f64>>,
}

fn diag_len(n_rows: usize, n_cols: usize, d: isize) -> usize {
    let start_row = if d < 0 { (-d) as usize } else { 0 };
    let start_col = if d > 0 { d as usize } else { 0 };
    (n_rows - start_row).min(n_cols - start_col)
}

impl BandedMatrix {
    /// All-zero banded matrix with the given shape and bandwidths.
    pub fn zeros(n_rows: usize, n_cols: usize, lower_bw: usize, upper_bw: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        if lower_bw >= n_rows || upper_bw >= n_cols {
            return Err(Error::InvalidArgument(format!(
                "bandwidths ({lower_bw}, {upper_bw}) too large for a {n_rows}x{n_cols} matrix"
            )));
        }
        let diags = (-(lower_bw as isize)..=upper_bw as isize)
            .map(|d| vec![0.0; diag_len(n_rows, n_cols, d)])
            .collect();
        Ok(Self {
            n_rows,
            n_cols,
            lower_bw,
            upper_bw,
            diags,
        })
    }

    /// Identity matrix stored in band form.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n, 0, 0).expect("identity size");
        m.diags[0].fill(1.0);
        m
    }

    /// Builds band storage from a dense matrix, inferring the bandwidths
    /// from the nonzero pattern.
    pub fn from_dense(a: &Array2<f64>) -> Result<Self> {
        let (n_rows, n_cols) = a.dim();
        let mut lower_bw = 0usize;
        let mut upper_bw = 0usize;
        for ((i, j), &v) in a.indexed_iter() {
            if v != 0.0 {
                if i > j {
                    lower_bw = lower_bw.max(i - j);
                } else {
                    upper_bw = upper_bw.max(j - i);
                }
            }
        }
        let mut m = Self::zeros(n_rows, n_cols, lower_bw, upper_bw)?;
        for ((i, j), &v) in a.indexed_iter() {
            if v != 0.0 {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n_rows, self.n_cols));
        for (s, diag) in self.diags.iter().enumerate() {
            let d = s as isize - self.lower_bw as isize;
            let i0 = if d < 0 { (-d) as usize } else { 0 };
            for (idx, &v) in diag.iter().enumerate() {
                let i = i0 + idx;
                a[(i, (i as isize + d) as usize)] = v;
            }
        }
        a
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn lower_bw(&self) -> usize {
        self.lower_bw
    }

    pub fn upper_bw(&self) -> usize {
        self.upper_bw
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        let d = j as isize - i as isize;
        -(self.lower_bw as isize) <= d && d <= self.upper_bw as isize
    }

    /// Entry (i, j); zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n_rows && j < self.n_cols, "index out of range");
        if !self.in_band(i, j) {
            return 0.0;
        }
        let d = j as isize - i as isize;
        let i0 = if d < 0 { (-d) as usize } else { 0 };
        self.diags[(d + self.lower_bw as isize) as usize][i - i0]
    }

    /// Sets entry (i, j), which must lie inside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n_rows && j < self.n_cols, "index out of range");
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside the band");
        let d = j as isize - i as isize;
        let i0 = if d < 0 { (-d) as usize } else { 0 };
        self.diags[(d + self.lower_bw as isize) as usize][i - i0] = v;
    }

    /// Matrix-vector product A v. Cost O(n * bandwidth).
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: v.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        for (s, diag) in self.diags.iter().enumerate() {
            let d = s as isize - self.lower_bw as isize;
            let i0 = if d < 0 { (-d) as usize } else { 0 };
            let j0 = (i0 as isize + d) as usize;
            for (idx, &a) in diag.iter().enumerate() {
                y[i0 + idx] += a * v[j0 + idx];
            }
        }
        Ok(y)
    }

    /// Transposed product A^T u without forming the transpose.
    pub fn matvec_transpose(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: u.len(),
            });
        }
        let mut y = vec![0.0; self.n_cols];
        for (s, diag) in self.diags.iter().enumerate() {
            let d = s as isize - self.lower_bw as isize;
            let i0 = if d < 0 { (-d) as usize } else { 0 };
            let j0 = (i0 as isize + d) as usize;
            for (idx, &a) in diag.iter().enumerate() {
                y[j0 + idx] += a * u[i0 + idx];
            }
        }
        Ok(y)
    }

    /// Transpose; diagonals are reused with their offsets negated.
    pub fn transpose(&self) -> Self {
        let mut diags = self.diags.clone();
        diags.reverse();
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            lower_bw: self.upper_bw,
            upper_bw: self.lower_bw,
            diags,
        }
    }

    /// Banded product A B. The result has bandwidths equal to the sums of
    /// the operands' bandwidths, clamped to the result shape.
    pub fn mul(&self, other: &BandedMatrix) -> Result<BandedMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: other.n_rows,
            });
        }
        let n_rows = self.n_rows;
        let n_cols = other.n_cols;
        let lower = (self.lower_bw + other.lower_bw).min(n_rows - 1);
        let upper = (self.upper_bw + other.upper_bw).min(n_cols - 1);
        let mut c = BandedMatrix::zeros(n_rows, n_cols, lower, upper)?;
        for i in 0..n_rows {
            let j_lo = i.saturating_sub(lower);
            let j_hi = (i + upper).min(n_cols - 1);
            for j in j_lo..=j_hi {
                let t_lo = i.saturating_sub(self.lower_bw).max(j.saturating_sub(other.upper_bw));
                let t_hi = (i + self.upper_bw).min(j + other.lower_bw).min(self.n_cols - 1);
                let mut s = 0.0;
                let mut t = t_lo;
                while t <= t_hi {
                    s += self.get(i, t) * other.get(t, j);
                    t += 1;
                }
                if s != 0.0 {
                    c.set(i, j, s);
                }
            }
        }
        Ok(c)
    }

    /// Adds `values` to the main diagonal in place.
    pub fn add_diag(&mut self, values: &[f64]) -> Result<()> {
        let len = self.n_rows.min(self.n_cols);
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: values.len(),
            });
        }
        let main = &mut self.diags[self.lower_bw];
        for (a, &v) in main.iter_mut().zip(values) {
            *a += v;
        }
        Ok(())
    }

    /// Adds s * other in place; `other` must have the same shape and
    /// bandwidths no larger than this matrix's.
    pub fn add_scaled(&mut self, other: &BandedMatrix, s: f64) -> Result<()> {
        if other.n_rows != self.n_rows || other.n_cols != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: other.n_rows,
            });
        }
        if other.lower_bw > self.lower_bw || other.upper_bw > self.upper_bw {
            return Err(Error::InvalidArgument(
                "operand band exceeds target band".into(),
            ));
        }
        for (so, diag) in other.diags.iter().enumerate() {
            let d = so as isize - other.lower_bw as isize;
            let st = (d + self.lower_bw as isize) as usize;
            for (a, &v) in self.diags[st].iter_mut().zip(diag) {
                *a += s * v;
            }
        }
        Ok(())
    }
}

/// Cholesky factorization A = L L^T of a symmetric positive definite banded
/// matrix. The factor is reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedMatrix,
    n: usize,
    w: usize,
    /// Multiply-add count of the factorization inner loops; O(n w^2).
    flops: u64,
}

impl BandedCholesky {
    /// Factors a symmetric banded matrix, reading the lower triangle only.
    /// Fails with the offending pivot index if a nonpositive pivot arises.
    pub fn factor(a: &BandedMatrix) -> Result<Self> {
        if a.n_rows != a.n_cols {
            return Err(Error::InvalidArgument(
                "cholesky requires a square matrix".into(),
            ));
        }
        if a.lower_bw != a.upper_bw {
            return Err(Error::InvalidArgument(
                "cholesky requires symmetric bandwidths".into(),
            ));
        }
        let n = a.n_rows;
        let w = a.lower_bw;
        let mut l = BandedMatrix::zeros(n, n, w, 0)?;
        let mut flops: u64 = 0;
        // Row-oriented: L[i][j] for j in [i-w, i]. Within-band entries of
        // row i and row j are walked over the shared column range.
        for i in 0..n {
            let j_lo = i.saturating_sub(w);
            for j in j_lo..=i {
                let t_lo = j_lo.max(j.saturating_sub(w));
                let mut s = a.get(i, j);
                for t in t_lo..j {
                    s -= l.get(i, t) * l.get(j, t);
                    flops += 1;
                }
                if j < i {
                    l.set(i, j, s / l.get(j, j));
                } else {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    l.set(i, i, s.sqrt());
                }
            }
        }
        Ok(Self { l, n, w, flops })
    }

    pub fn flops(&self) -> u64 {
        self.flops
    }

    /// Solves A x = b via forward and backward substitution, O(n w).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        // L z = b
        for i in 0..self.n {
            let j_lo = i.saturating_sub(self.w);
            let mut s = x[i];
            for j in j_lo..i {
                s -= self.l.get(i, j) * x[j];
            }
            x[i] = s / self.l.get(i, i);
        }
        // L^T x = z
        for i in (0..self.n).rev() {
            let j_hi = (i + self.w).min(self.n - 1);
            let mut s = x[i];
            for j in i + 1..=j_hi {
                s -= self.l.get(j, i) * x[j];
            }
            x[i] = s / self.l.get(i, i);
        }
        Ok(x)
    }

    /// Solve followed by fixed-precision iterative refinement against the
    /// original matrix. Helps when the system is poorly conditioned, which
    /// happens for difference-operator Gram matrices at higher orders.
    pub fn solve_refined(&self, a: &BandedMatrix, b: &[f64], passes: usize) -> Result<Vec<f64>> {
        let mut x = self.solve(b)?;
        for _ in 0..passes {
            let ax = a.matvec(&x)?;
            let mut r_norm = 0.0f64;
            let mut r = vec![0.0; b.len()];
            for i in 0..b.len() {
                r[i] = b[i] - ax[i];
                r_norm = r_norm.max(r[i].abs());
            }
            let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if r_norm <= 1e-16 * (1.0 + b_norm) {
                break;
            }
            let dx = self.solve(&r)?;
            for i in 0..x.len() {
                x[i] += dx[i];
            }
        }
        Ok(x)
    }
}

/// Convenience wrapper: factor once and solve a single right-hand side,
/// checking the residual contract.
pub fn band_cholesky_solve(a: &BandedMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let chol = BandedCholesky::factor(a)?;
    chol.solve_refined(a, b, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_banded(
        rng: &mut ChaCha8Rng,
        n_rows: usize,
        n_cols: usize,
        lb: usize,
        ub: usize,
    ) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n_rows, n_cols, lb, ub).unwrap();
        for i in 0..n_rows {
            for j in i.saturating_sub(lb)..=(i + ub).min(n_cols - 1) {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    fn dense_matvec(a: &Array2<f64>, v: &[f64]) -> Vec<f64> {
        (0..a.nrows())
            .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum())
            .collect()
    }

    // Dense Cholesky + substitution, used as the solve oracle.
    fn dense_solve(a: &Array2<f64>, b: &[f64]) -> Vec<f64> {
        let n = a.nrows();
        let mut l = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[(i, j)];
                for t in 0..j {
                    s -= l[(i, t)] * l[(j, t)];
                }
                if j < i {
                    l[(i, j)] = s / l[(j, j)];
                } else {
                    l[(i, i)] = s.sqrt();
                }
            }
        }
        let mut x = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - l[(i, j)] * x[j];
            }
            x[i] /= l[(i, i)];
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - l[(j, i)] * x[j];
            }
            x[i] /= l[(i, i)];
        }
        x
    }

    #[test]
    fn identity_matvec() {
        let m = BandedMatrix::identity(3);
        let y = m.matvec(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn first_difference_annihilates_constants() {
        // D^(1) for n = 4 as a banded matrix.
        let mut d = BandedMatrix::zeros(3, 4, 0, 1).unwrap();
        for i in 0..3 {
            d.set(i, i, -1.0);
            d.set(i, i + 1, 1.0);
        }
        let y = d.matvec(&[5.0, 5.0, 5.0, 5.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn matvec_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(nr, nc, lb, ub) in &[(10, 10, 2, 3), (8, 12, 1, 4), (12, 8, 3, 0), (200, 200, 5, 5)]
        {
            let m = random_banded(&mut rng, nr, nc, lb, ub);
            let dense = m.to_dense();
            let v: Vec<f64> = (0..nc).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = m.matvec(&v).unwrap();
            let want = dense_matvec(&dense, &v);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()));
            }
            // transpose path
            let u: Vec<f64> = (0..nr).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got_t = m.matvec_transpose(&u).unwrap();
            let want_t = dense_matvec(&dense.t().to_owned(), &u);
            for (g, w) in got_t.iter().zip(&want_t) {
                assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()));
            }
        }
    }

    #[test]
    fn dense_round_trip_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(nr, nc, lb, ub) in &[(5, 5, 1, 2), (100, 100, 4, 4), (7, 9, 2, 3)] {
            let m = random_banded(&mut rng, nr, nc, lb, ub);
            let back = BandedMatrix::from_dense(&m.to_dense()).unwrap();
            for i in 0..nr {
                for j in 0..nc {
                    assert_eq!(m.get(i, j), back.get(i, j));
                }
            }
        }
    }

    #[test]
    fn banded_product_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_banded(&mut rng, 9, 7, 2, 1);
        let b = random_banded(&mut rng, 7, 10, 1, 3);
        let c = a.mul(&b).unwrap();
        let dense = a.to_dense().dot(&b.to_dense());
        for i in 0..9 {
            for j in 0..10 {
                assert!((c.get(i, j) - dense[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_identity() {
        let a = BandedMatrix::identity(5);
        let b = vec![3.0, -1.0, 0.5, 2.0, -7.0];
        let x = band_cholesky_solve(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn cholesky_tridiagonal_known_solution() {
        // tridiag(-1, 2, -1), n = 4, b = e_1 -> x = (0.8, 0.6, 0.4, 0.2)
        let mut a = BandedMatrix::zeros(4, 4, 1, 1).unwrap();
        for i in 0..4 {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
                a.set(i - 1, i, -1.0);
            }
        }
        let x = band_cholesky_solve(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let want = [0.8, 0.6, 0.4, 0.2];
        for (g, w) in x.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_matches_dense_solve_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [6usize, 20, 57] {
            for w in [1usize, 2, 4] {
                // SPD via M M^T + eps I with banded M.
                let m = random_banded(&mut rng, n, n, w, w);
                let mut a = m.mul(&m.transpose()).unwrap();
                let eps = vec![0.5; n];
                a.add_diag(&eps).unwrap();
                let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let x = band_cholesky_solve(&a, &b).unwrap();
                let want = dense_solve(&a.to_dense(), &b);
                for (g, w_) in x.iter().zip(&want) {
                    assert!((g - w_).abs() <= 1e-8 * (1.0 + w_.abs()));
                }
                // residual contract
                let ax = a.matvec(&x).unwrap();
                let binf = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                for i in 0..n {
                    assert!((ax[i] - b[i]).abs() <= 1e-8 * (1.0 + binf));
                }
            }
        }
    }

    #[test]
    fn cholesky_recovers_known_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [10usize, 80, 150] {
            let m = random_banded(&mut rng, n, n, 2, 2);
            let mut a = m.mul(&m.transpose()).unwrap();
            a.add_diag(&vec![1.0; n]).unwrap();
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.matvec(&x_true).unwrap();
            let x = band_cholesky_solve(&a, &b).unwrap();
            let scale = x_true.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            for (g, w) in x.iter().zip(&x_true) {
                assert!((g - w).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn non_spd_reports_pivot() {
        let mut a = BandedMatrix::zeros(3, 3, 1, 1).unwrap();
        a.set(0, 0, 1.0);
        a.set(1, 1, -2.0); // breaks positive definiteness at pivot 1
        a.set(2, 2, 1.0);
        match BandedCholesky::factor(&a) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn factorization_work_scales_with_n_w_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(n, w) in &[(50usize, 2usize), (200, 3), (400, 6)] {
            let m = random_banded(&mut rng, n, n, w, w);
            let mut a = m.mul(&m.transpose()).unwrap();
            a.add_diag(&vec![2.0 * (w as f64 + 1.0); n]).unwrap();
            // the product has bandwidth 2w; count against that width
            let wb = a.lower_bw();
            let chol = BandedCholesky::factor(&a).unwrap();
            assert!(chol.flops() <= (n as u64) * (wb as u64 + 1) * (wb as u64 + 1));
        }
    }

    #[test]
    fn matvec_dimension_mismatch_is_error() {
        let m = BandedMatrix::identity(4);
        assert!(matches!(
            m.matvec(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
