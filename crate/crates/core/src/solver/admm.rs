//! ADMM for the two-penalty variants: a difference penalty combined with
//! either a pure l1 penalty on the coefficients (sparse fits) or a second
//! difference penalty of another order (mixed-order fits).
//!
//! One splitting variable per penalty; the beta update is a banded SPD solve
//! in I + rho (A1^T A1 + A2^T A2). The penalty parameter starts at 1 and is
//! rebalanced by factors of 2 whenever the primal/dual residual ratio drifts
//! past 10.

use super::{soft_threshold, FitConfig};
use crate::banded::{BandedCholesky, BandedMatrix};
use crate::diffop::DiffOp;
use crate::error::{Error, Result};

/// Penalty operator: a discrete difference of some order, or the identity.
enum PenaltyOp {
    Diff(DiffOp),
    Identity(usize),
}

impl PenaltyOp {
    fn rows(&self) -> usize {
        match self {
            PenaltyOp::Diff(d) => d.n_rows(),
            PenaltyOp::Identity(n) => *n,
        }
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            PenaltyOp::Diff(d) => d.apply(v),
            PenaltyOp::Identity(_) => Ok(v.to_vec()),
        }
    }

    fn apply_transpose(&self, u: &[f64]) -> Result<Vec<f64>> {
        match self {
            PenaltyOp::Diff(d) => d.apply_transpose(u),
            PenaltyOp::Identity(_) => Ok(u.to_vec()),
        }
    }

    fn gram_transpose(&self, n: usize) -> BandedMatrix {
        match self {
            PenaltyOp::Diff(d) => d.gram_transpose(),
            PenaltyOp::Identity(_) => BandedMatrix::identity(n),
        }
    }

    fn order(&self) -> usize {
        match self {
            PenaltyOp::Diff(d) => d.order(),
            PenaltyOp::Identity(_) => 0,
        }
    }
}

/// Sparse variant: 0.5 ||y - b||^2 + lambda1 ||D^(k+1) b||_1 + lambda2 ||b||_1.
/// Both weights are raw (no grid scaling).
pub fn solve_sparse_tf(
    y: &[f64],
    k: usize,
    lambda1: f64,
    lambda2: f64,
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    let n = y.len();
    let op1 = PenaltyOp::Diff(DiffOp::new(n, k + 1)?);
    let op2 = PenaltyOp::Identity(n);
    two_penalty_admm(y, &op1, lambda1, &op2, lambda2, cfg)
}

/// Mixed variant: 0.5 ||y - b||^2 + lambda1 ||D^(k1+1) b||_1
/// + lambda2 ||D^(k2+1) b||_1 with k1 != k2.
pub fn solve_mixed_tf(
    y: &[f64],
    k1: usize,
    k2: usize,
    lambda1: f64,
    lambda2: f64,
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    if k1 == k2 {
        return Err(Error::InvalidArgument(
            "mixed orders must differ; use the single-penalty solver".into(),
        ));
    }
    let n = y.len();
    let op1 = PenaltyOp::Diff(DiffOp::new(n, k1 + 1)?);
    let op2 = PenaltyOp::Diff(DiffOp::new(n, k2 + 1)?);
    two_penalty_admm(y, &op1, lambda1, &op2, lambda2, cfg)
}

fn two_penalty_admm(
    y: &[f64],
    op1: &PenaltyOp,
    lambda1: f64,
    op2: &PenaltyOp,
    lambda2: f64,
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    if lambda1 < 0.0 || lambda2 < 0.0 {
        return Err(Error::InvalidArgument(
            "penalty weights must be nonnegative".into(),
        ));
    }
    let n = y.len();
    let m1 = op1.rows();
    let m2 = op2.rows();
    let order = op1.order().max(op2.order());

    // base system I + rho (A1^T A1 + A2^T A2)
    let gram: BandedMatrix = {
        let mut g = op1.gram_transpose(n);
        let g2 = op2.gram_transpose(n);
        // widen to the larger band before adding
        if g.lower_bw() < g2.lower_bw() {
            let mut wide = BandedMatrix::zeros(n, n, order, order)?;
            wide.add_scaled(&g, 1.0)?;
            g = wide;
        }
        g.add_scaled(&g2, 1.0)?;
        g
    };
    let factor_for = |rho: f64| -> Result<(BandedMatrix, BandedCholesky)> {
        let mut m = BandedMatrix::zeros(n, n, order, order)?;
        m.add_scaled(&gram, rho)?;
        m.add_diag(&vec![1.0; n])?;
        let chol = BandedCholesky::factor(&m)?;
        Ok((m, chol))
    };

    let mut rho = 1.0f64;
    let (mut sys, mut chol) = factor_for(rho)?;

    let mut beta = y.to_vec();
    let mut z1 = op1.apply(&beta)?;
    let mut z2 = op2.apply(&beta)?;
    let mut u1 = vec![0.0; m1];
    let mut u2 = vec![0.0; m2];

    let y_scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let eps = cfg.admm_tol * (n as f64).sqrt() * y_scale;

    let mut history: Vec<(f64, f64)> = Vec::new();

    for iter in 1..=cfg.admm_max_iter {
        // beta step
        let mut rhs = y.to_vec();
        let t1: Vec<f64> = z1.iter().zip(&u1).map(|(z, u)| z - u).collect();
        let t2: Vec<f64> = z2.iter().zip(&u2).map(|(z, u)| z - u).collect();
        for (r, v) in rhs.iter_mut().zip(op1.apply_transpose(&t1)?) {
            *r += rho * v;
        }
        for (r, v) in rhs.iter_mut().zip(op2.apply_transpose(&t2)?) {
            *r += rho * v;
        }
        beta = chol.solve_refined(&sys, &rhs, 1)?;

        // z and scaled dual steps
        let a1b = op1.apply(&beta)?;
        let a2b = op2.apply(&beta)?;
        let z1_old = std::mem::take(&mut z1);
        let z2_old = std::mem::take(&mut z2);
        z1 = a1b
            .iter()
            .zip(&u1)
            .map(|(a, u)| soft_threshold(a + u, lambda1 / rho))
            .collect();
        z2 = a2b
            .iter()
            .zip(&u2)
            .map(|(a, u)| soft_threshold(a + u, lambda2 / rho))
            .collect();
        for i in 0..m1 {
            u1[i] += a1b[i] - z1[i];
        }
        for i in 0..m2 {
            u2[i] += a2b[i] - z2[i];
        }

        // residuals
        let r_pri = {
            let mut s = 0.0;
            for i in 0..m1 {
                let d = a1b[i] - z1[i];
                s += d * d;
            }
            for i in 0..m2 {
                let d = a2b[i] - z2[i];
                s += d * d;
            }
            s.sqrt()
        };
        let s_dual = {
            let d1: Vec<f64> = z1.iter().zip(&z1_old).map(|(a, b)| a - b).collect();
            let d2: Vec<f64> = z2.iter().zip(&z2_old).map(|(a, b)| a - b).collect();
            let v1 = op1.apply_transpose(&d1)?;
            let v2 = op2.apply_transpose(&d2)?;
            let s: f64 = v1
                .iter()
                .zip(&v2)
                .map(|(a, b)| (a + b) * (a + b))
                .sum();
            rho * s.sqrt()
        };
        if r_pri <= eps && s_dual <= eps {
            return Ok(beta);
        }

        // residual balancing, at most once every 10 iterations
        if iter % 10 == 0 {
            let mut changed = false;
            if r_pri > 10.0 * s_dual {
                rho *= 2.0;
                for u in u1.iter_mut().chain(u2.iter_mut()) {
                    *u *= 0.5;
                }
                changed = true;
            } else if s_dual > 10.0 * r_pri {
                rho *= 0.5;
                for u in u1.iter_mut().chain(u2.iter_mut()) {
                    *u *= 2.0;
                }
                changed = true;
            }
            if changed {
                let (s, c) = factor_for(rho)?;
                sys = s;
                chol = c;
            }
            history.push((r_pri, s_dual));
            if history.len() > 8 {
                history.remove(0);
            }
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.admm_max_iter,
        detail: format!("admm residual history (primal, dual): {history:?}"),
    })
}
