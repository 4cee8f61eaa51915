//! Truncated power and falling factorial basis matrices over the even grid
//! x_i = i/n, plus continuous-time evaluation of a fitted sequence.
//!
//! Both bases share a polynomial block (columns 1..=k+1) and differ in their
//! hinge-like tail columns. For orders k = 0 and 1 the two matrices are
//! identical; from k = 2 on they differ, which is exactly the gap between the
//! adaptive regression spline and the difference-penalized fit.
//!
//! The falling factorial matrix H has a banded inverse, realized here as a
//! difference pyramid rather than an explicit matrix: converting between
//! fitted values and basis coefficients costs O(n k) and avoids the
//! catastrophic cancellation a dense multiply by H would incur.

use crate::diffop::cumsum_table;
use crate::error::{Error, Result};
use ndarray::Array2;

/// Dense basis matrices are only materialized up to this size; the banded
/// solvers never form them.
pub const DENSE_BASIS_CAP: usize = 5000;

/// Knot superset for the order-k bases: the inner grid points with
/// (k+2)/2 (k even) or (k+1)/2 (k odd) points trimmed from each side.
#[derive(Debug, Clone)]
pub struct KnotSet {
    knots: Vec<f64>,
    k: usize,
    n: usize,
}

impl KnotSet {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < k + 2 {
            return Err(Error::TooFewPoints {
                required: k + 2,
                order: k,
                got: n,
            });
        }
        let shift = if k % 2 == 0 { (k + 2) / 2 } else { (k + 1) / 2 };
        let knots = (1..=n - k - 1)
            .map(|i| (shift + i) as f64 / n as f64)
            .collect();
        Ok(Self { knots, k, n })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Which family the columns of a [`BasisMatrix`] come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    TruncatedPower,
    FallingFactorial,
}

/// Dense n x n evaluation matrix of a basis over the input grid.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    kind: BasisKind,
    k: usize,
    n: usize,
    entries: Array2<f64>,
}

impl BasisMatrix {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Entry (i, j) with 0-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Dense product with a coefficient vector.
    pub fn matvec(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: theta.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.entries[(i, j)] * theta[j];
            }
            out[i] = s;
        }
        Ok(out)
    }
}

fn check_basis_size(n: usize, k: usize) -> Result<()> {
    if n < k + 2 {
        return Err(Error::TooFewPoints {
            required: k + 2,
            order: k,
            got: n,
        });
    }
    if n > DENSE_BASIS_CAP {
        return Err(Error::SizeCap {
            cap: DENSE_BASIS_CAP,
            got: n,
        });
    }
    Ok(())
}

fn fill_poly_block(m: &mut Array2<f64>, n: usize, k: usize) {
    // columns j = 1..=k+1 (1-based): i^(j-1) / n^(j-1)
    for j in 0..=k {
        for i in 0..n {
            m[(i, j)] = (((i + 1) as f64) / n as f64).powi(j as i32);
        }
    }
}

/// Truncated power basis matrix over the grid, with knots from [`KnotSet`].
pub fn make_g(n: usize, k: usize) -> Result<BasisMatrix> {
    check_basis_size(n, k)?;
    let mut m = Array2::<f64>::zeros((n, n));
    fill_poly_block(&mut m, n, k);
    let knots = KnotSet::new(n, k)?;
    let nf = n as f64;
    for jj in 0..n - k - 1 {
        let t = knots.knots()[jj];
        let j = k + 1 + jj;
        for i in 0..n {
            let x = (i + 1) as f64 / nf;
            if x >= t {
                // 0^0 = 1 convention makes the k = 0 case the step function
                m[(i, j)] = if k == 0 { 1.0 } else { (x - t).powi(k as i32) };
            }
        }
    }
    Ok(BasisMatrix {
        kind: BasisKind::TruncatedPower,
        k,
        n,
        entries: m,
    })
}

/// Falling factorial basis matrix, built from k-th order cumulative sums:
/// tail entries sigma_(i-j+1)^(k) * k! / n^k below the diagonal.
pub fn make_h(n: usize, k: usize) -> Result<BasisMatrix> {
    check_basis_size(n, k)?;
    let mut m = Array2::<f64>::zeros((n, n));
    fill_poly_block(&mut m, n, k);
    let sigma = cumsum_table(n, k);
    let scale = factorial(k) / (n as f64).powi(k as i32);
    for j in k + 1..n {
        // 1-based column j+1 >= k+2; rows i > j - 1 (1-based), i.e. i0 >= j
        for i in j..n {
            m[(i, j)] = sigma[i - j] as f64 * scale;
        }
    }
    Ok(BasisMatrix {
        kind: BasisKind::FallingFactorial,
        k,
        n,
        entries: m,
    })
}

/// Falling factorial matrix by the product route
/// prod_{l=1..k} (i - (j - k - 1 + l)) / n^k; algebraically identical to
/// [`make_h`], kept as an independent construction for verification.
pub fn make_h_product(n: usize, k: usize) -> Result<BasisMatrix> {
    check_basis_size(n, k)?;
    let mut m = Array2::<f64>::zeros((n, n));
    fill_poly_block(&mut m, n, k);
    let nf = n as f64;
    for j1 in k + 2..=n {
        // 1-based rows i1 > j1 - 1
        for i1 in j1..=n {
            let mut p = 1.0;
            for l in 1..=k {
                p *= (i1 as f64 - (j1 as f64 - k as f64 - 1.0 + l as f64)) / nf;
            }
            m[(i1 - 1, j1 - 1)] = p;
        }
    }
    Ok(BasisMatrix {
        kind: BasisKind::FallingFactorial,
        k,
        n,
        entries: m,
    })
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Value of the j-th (1-based) falling factorial basis function at x.
///
/// Functions 1..=k+1 are the monomials; function k+1+j is the product of the
/// k shifted linear factors anchored at grid points j+1..=j+k, switched on
/// strictly right of x_(j+k). The strict inequality only matters for k = 0,
/// where it makes grid evaluation reproduce the matrix H exactly.
pub fn h_basis_value(n: usize, k: usize, j: usize, x: f64) -> f64 {
    debug_assert!(j >= 1 && j <= n);
    if j <= k + 1 {
        return x.powi((j - 1) as i32);
    }
    let jj = j - k - 1; // hinge index, 1-based
    let nf = n as f64;
    let gate = (jj + k) as f64 / nf;
    if x <= gate {
        return 0.0;
    }
    let mut p = 1.0;
    for l in 1..=k {
        p *= x - (jj + l) as f64 / nf;
    }
    p
}

/// Value of the j-th (1-based) truncated power basis function at x.
pub fn g_basis_value(n: usize, k: usize, j: usize, x: f64) -> f64 {
    debug_assert!(j >= 1 && j <= n);
    if j <= k + 1 {
        return x.powi((j - 1) as i32);
    }
    let shift = if k % 2 == 0 { (k + 2) / 2 } else { (k + 1) / 2 };
    let t = (shift + (j - k - 1)) as f64 / n as f64;
    if x < t {
        0.0
    } else if k == 0 {
        1.0
    } else {
        (x - t).powi(k as i32)
    }
}

/// Upper-triangular change of basis between scaled polynomial coefficients
/// and the heads of the difference pyramid:
/// W[m][p] = forward difference of order m of i^p, at i = 1.
///
/// The grid scaling n^(-p) is applied outside: keeping this matrix integer
/// makes its triangular solves well conditioned at every order, where the
/// scaled version degrades like n^k.
fn head_transform(k: usize) -> Array2<f64> {
    let mut w = Array2::<f64>::zeros((k + 1, k + 1));
    for p in 0..=k {
        // integer table i^p for i = 1..=k+1, then difference it in place
        let mut vals: Vec<i64> = (1..=(k + 1) as i64).map(|i| i.pow(p as u32)).collect();
        w[(0, p)] = vals[0] as f64;
        for m in 1..=k {
            for t in 0..vals.len() - 1 {
                vals[t] = vals[t + 1] - vals[t];
            }
            vals.pop();
            if m <= p {
                w[(m, p)] = vals[0] as f64;
            }
        }
    }
    w
}

/// Basis coefficients alpha with beta = H alpha, computed by the banded
/// recursion: repeated differencing with the heads retained, then a small
/// triangular solve for the polynomial block. O(n k).
pub fn alpha_from_beta(beta: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = beta.len();
    if n < k + 2 {
        return Err(Error::TooFewPoints {
            required: k + 2,
            order: k,
            got: n,
        });
    }
    let mut heads = vec![0.0; k + 1];
    let mut d = beta.to_vec();
    heads[0] = d[0];
    for m in 1..=k + 1 {
        for t in 0..d.len() - 1 {
            d[t] = d[t + 1] - d[t];
        }
        d.pop();
        if m <= k {
            heads[m] = d[0];
        }
    }
    let scale = (n as f64).powi(k as i32) / factorial(k);
    let mut alpha = vec![0.0; n];
    for (t, &v) in d.iter().enumerate() {
        alpha[k + 1 + t] = scale * v;
    }
    // back-substitution on the integer head transform; gamma_p = alpha_p / n^p
    let w = head_transform(k);
    let mut gamma = vec![0.0; k + 1];
    for m in (0..=k).rev() {
        let mut s = heads[m];
        for p in m + 1..=k {
            s -= w[(m, p)] * gamma[p];
        }
        gamma[m] = s / w[(m, m)];
    }
    for p in 0..=k {
        alpha[p] = gamma[p] * (n as f64).powi(p as i32);
    }
    Ok(alpha)
}

/// Fitted values beta = H alpha by the inverse recursion: the pyramid heads
/// come from the polynomial block and the tail is integrated back up by
/// cumulative sums. O(n k), numerically benign.
pub fn beta_from_alpha(alpha: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = alpha.len();
    if n < k + 2 {
        return Err(Error::TooFewPoints {
            required: k + 2,
            order: k,
            got: n,
        });
    }
    let w = head_transform(k);
    let gamma: Vec<f64> = (0..=k)
        .map(|p| alpha[p] / (n as f64).powi(p as i32))
        .collect();
    let mut heads = vec![0.0; k + 1];
    for m in 0..=k {
        let mut s = 0.0;
        for p in m..=k {
            s += w[(m, p)] * gamma[p];
        }
        heads[m] = s;
    }
    let scale = factorial(k) / (n as f64).powi(k as i32);
    let mut d: Vec<f64> = alpha[k + 1..].iter().map(|&a| a * scale).collect();
    for m in (0..=k).rev() {
        let mut up = vec![0.0; d.len() + 1];
        up[0] = heads[m];
        for t in 0..d.len() {
            up[t + 1] = up[t] + d[t];
        }
        d = up;
    }
    Ok(d)
}

/// Evaluates the fitted function f(x) = sum_j alpha_j h_j(x) at any x in
/// [0, 1]. At the input points this reproduces the fitted values.
pub fn eval_tf_function(alpha: &[f64], k: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { x });
    }
    let n = alpha.len();
    let mut s = 0.0;
    for j in 1..=(k + 1).min(n) {
        s += alpha[j - 1] * h_basis_value(n, k, j, x);
    }
    // hinge j (1-based col k+1+j) is active only when x > (j+k)/n
    let mut j = 1usize;
    while k + 1 + j <= n {
        let gate = (j + k) as f64 / n as f64;
        if x <= gate {
            break;
        }
        s += alpha[k + j] * h_basis_value(n, k, k + 1 + j, x);
        j += 1;
    }
    Ok(s)
}
