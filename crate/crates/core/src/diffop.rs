//! Discrete difference operators of arbitrary order, stored exactly.
//!
//! The order-m operator maps a length-n sequence to its m-th forward
//! differences. Every row carries the same integer stencil (alternating-sign
//! binomial coefficients), built by repeated composition with the first
//! difference; coefficients are kept as integers and converted to floating
//! point at apply time.

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use ndarray::Array2;

/// Supported derivative orders: k in 0..=10, i.e. operator order up to 11.
pub const MAX_ORDER: usize = 11;

/// The order-m discrete difference operator over n evenly spaced points,
/// shape (n - m) x n with bandwidth m + 1.
#[derive(Debug, Clone)]
pub struct DiffOp {
    n: usize,
    order: usize,
    /// Row stencil: row i has entry `coeffs[t]` in column i + t.
    coeffs: Vec<i64>,
}

impl DiffOp {
    /// Builds the operator by the recursion D^(m) = D^(1) D^(m-1).
    pub fn new(n: usize, order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "difference order must be in 1..={MAX_ORDER}, got {order}"
            )));
        }
        if n < order + 1 {
            return Err(Error::TooFewPoints {
                required: order + 1,
                order,
                got: n,
            });
        }
        let mut coeffs: Vec<i64> = vec![-1, 1];
        for _ in 1..order {
            // composing with the first difference: c'_t = c_{t-1} - c_t
            let mut next = vec![0i64; coeffs.len() + 1];
            for (t, slot) in next.iter_mut().enumerate() {
                let prev = if t > 0 { coeffs.get(t - 1).copied().unwrap_or(0) } else { 0 };
                let cur = coeffs.get(t).copied().unwrap_or(0);
                *slot = prev - cur;
            }
            coeffs = next;
        }
        Ok(Self { n, order, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of rows, n - order.
    pub fn n_rows(&self) -> usize {
        self.n - self.order
    }

    /// Integer row stencil, length order + 1.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Applies the operator: (D v)_i = sum_t c_t v_{i+t}.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        let m = self.n_rows();
        let mut out = vec![0.0; m];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for (t, &c) in self.coeffs.iter().enumerate() {
                s += c as f64 * v[i + t];
            }
            *o = s;
        }
        Ok(out)
    }

    /// Applies the transpose: (D^T u)_j = sum over rows i touching column j.
    pub fn apply_transpose(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows(),
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        for (i, &ui) in u.iter().enumerate() {
            for (t, &c) in self.coeffs.iter().enumerate() {
                out[i + t] += c as f64 * ui;
            }
        }
        Ok(out)
    }

    /// Transpose application with compensated summation. The dual vectors of
    /// the interior point solver can be many orders of magnitude larger than
    /// the data while their stencil combinations stay data-sized, so the
    /// plain sum loses the cancelled digits; this keeps them.
    pub fn apply_transpose_compensated(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows(),
                got: u.len(),
            });
        }
        let mut sum = vec![0.0f64; self.n];
        let mut comp = vec![0.0f64; self.n];
        for (i, &ui) in u.iter().enumerate() {
            for (t, &c) in self.coeffs.iter().enumerate() {
                let j = i + t;
                let c = c as f64;
                let p = c * ui;
                // exact product error via fused multiply-add
                let p_err = c.mul_add(ui, -p);
                // Neumaier update
                let s = sum[j] + p;
                let err = if sum[j].abs() >= p.abs() {
                    (sum[j] - s) + p
                } else {
                    (p - s) + sum[j]
                };
                sum[j] = s;
                comp[j] += err + p_err;
            }
        }
        for (s, c) in sum.iter_mut().zip(&comp) {
            *s += c;
        }
        Ok(sum)
    }

    /// Band-form copy of the operator, bandwidth order + 1.
    pub fn to_banded(&self) -> BandedMatrix {
        let m = self.n_rows();
        let mut b = BandedMatrix::zeros(m, self.n, 0, self.order).expect("valid shape");
        for i in 0..m {
            for (t, &c) in self.coeffs.iter().enumerate() {
                b.set(i, i + t, c as f64);
            }
        }
        b
    }

    /// The Gram matrix D D^T, symmetric positive definite and banded with
    /// `order` sub- and super-diagonals. Entries are exact integers: rows are
    /// shifts of one stencil, so each diagonal is constant.
    pub fn gram(&self) -> BandedMatrix {
        let m = self.n_rows();
        let w = self.order.min(m - 1);
        let mut g = BandedMatrix::zeros(m, m, w, w).expect("valid shape");
        for d in 0..=w {
            let mut s = 0i64;
            for t in 0..=(self.order - d) {
                s += self.coeffs[t] * self.coeffs[t + d];
            }
            let v = s as f64;
            for i in 0..m - d {
                g.set(i + d, i, v);
                g.set(i, i + d, v);
            }
        }
        g
    }

    /// The n x n Gram matrix D^T D, banded with `order` sub/super-diagonals.
    pub fn gram_transpose(&self) -> BandedMatrix {
        let mut g = BandedMatrix::zeros(self.n, self.n, self.order, self.order).expect("shape");
        for i in 0..self.n_rows() {
            for (a, &ca) in self.coeffs.iter().enumerate() {
                for (b, &cb) in self.coeffs.iter().enumerate() {
                    let v = g.get(i + a, i + b) + (ca * cb) as f64;
                    g.set(i + a, i + b, v);
                }
            }
        }
        g
    }
}

/// k-th order cumulative sum of a run of ones: sigma_i^(0) = 1 and
/// sigma_i^(k) = sum_{j<=i} sigma_j^(k-1). Closed form C(i+k-1, k).
pub fn cumsum_k(i: usize, k: usize) -> f64 {
    assert!(i >= 1, "cumulative sums are 1-indexed");
    binomial_u128((i + k - 1) as u128, k as u128) as f64
}

/// Table sigma_1^(k) ..= sigma_len^(k), computed by iterated prefix sums in
/// exact integer arithmetic.
pub fn cumsum_table(len: usize, k: usize) -> Vec<i128> {
    let mut cur = vec![1i128; len];
    for _ in 0..k {
        for i in 1..len {
            cur[i] += cur[i - 1];
        }
    }
    cur
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut num = 1u128;
    for t in 0..k {
        num = num * (n - t) / (t + 1);
    }
    num
}

/// Orthonormal basis for the polynomials of degree <= k sampled on the grid
/// x_i = i/n; spans the null space of the order-(k+1) difference operator.
pub fn poly_null_basis(n: usize, k: usize) -> Array2<f64> {
    assert!(n >= k + 2, "need n >= k + 2 grid points");
    let mut q = Array2::<f64>::zeros((n, k + 1));
    for j in 0..=k {
        for i in 0..n {
            let x = (i + 1) as f64 / n as f64;
            q[(i, j)] = x.powi(j as i32);
        }
    }
    // modified Gram-Schmidt, two passes
    for _ in 0..2 {
        for j in 0..=k {
            for t in 0..j {
                let r: f64 = (0..n).map(|i| q[(i, t)] * q[(i, j)]).sum();
                for i in 0..n {
                    q[(i, j)] -= r * q[(i, t)];
                }
            }
            let norm: f64 = (0..n).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
            for i in 0..n {
                q[(i, j)] /= norm;
            }
        }
    }
    q
}

/// Least-squares projection of y onto the degree-k polynomials over the grid.
pub fn polynomial_project(y: &[f64], k: usize) -> Vec<f64> {
    let n = y.len();
    let q = poly_null_basis(n, k);
    let mut out = vec![0.0; n];
    for j in 0..=k {
        let c: f64 = (0..n).map(|i| q[(i, j)] * y[i]).sum();
        for i in 0..n {
            out[i] += c * q[(i, j)];
        }
    }
    out
}
