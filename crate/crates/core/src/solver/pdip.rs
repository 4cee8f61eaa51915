//! Primal-dual interior point solver on the box-constrained dual.
//!
//! The fit minimizes 0.5 ||y - beta||^2 + lambda ||D beta||_1 with
//! D = D^(k+1). Its dual is the box-constrained quadratic
//!
//!     min_v 0.5 ||y - D^T v||^2   s.t.  ||v||_inf <= lambda,
//!
//! with the primal recovered as beta = y - D^T v. Each Newton step solves a
//! single banded SPD system in D D^T plus a positive diagonal (bandwidth
//! 2k + 3), so one iteration costs O(n).

use super::{FitConfig, SolverDiagnostics, TfProblem};
use crate::banded::BandedCholesky;
use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use std::time::Instant;

/// Solution triple: fitted values, dual vector, convergence evidence.
#[derive(Debug, Clone)]
pub struct TfSolution {
    pub beta: Vec<f64>,
    pub dual: Vec<f64>,
    pub diagnostics: SolverDiagnostics,
}

/// Solves the problem at a fixed lambda from a cold start.
pub fn solve_tf_pdip(problem: &TfProblem, cfg: &FitConfig) -> Result<TfSolution> {
    solve_tf_pdip_warm(problem, cfg, None)
}

/// Same solver, optionally warm-started from a previous dual vector (it is
/// clipped into the new box). Used across descending lambda grids.
pub fn solve_tf_pdip_warm(
    problem: &TfProblem,
    cfg: &FitConfig,
    warm: Option<&[f64]>,
) -> Result<TfSolution> {
    let start = Instant::now();
    let n = problem.n();
    let k = problem.k;
    let y = &problem.y;
    let lam = problem.lambda_effective();
    let d = DiffOp::new(n, k + 1)?;
    let m = d.n_rows();

    if lam <= 0.0 {
        return Ok(TfSolution {
            beta: y.clone(),
            dual: vec![0.0; m],
            diagnostics: SolverDiagnostics {
                converged: true,
                wall_time: start.elapsed().as_secs_f64(),
                ..Default::default()
            },
        });
    }

    let q = d.gram();
    let dy = d.apply(y)?;
    let dy_inf = dy.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // differences at or below this level are roundoff, not structure
    let zero_floor = 1e-13 * dy_inf;

    let mut v = vec![0.0; m];
    if let Some(w) = warm {
        if w.len() == m {
            let cap = 0.999 * lam;
            for (vi, &wi) in v.iter_mut().zip(w) {
                *vi = wi.clamp(-cap, cap);
            }
        }
    }
    let mut mu1: Vec<f64> = v.iter().map(|&vi| 1.0 / (lam - vi)).collect();
    let mut mu2: Vec<f64> = v.iter().map(|&vi| 1.0 / (lam + vi)).collect();

    let recover_beta = |v: &[f64]| -> Result<Vec<f64>> {
        let dtv = d.apply_transpose_compensated(v)?;
        Ok(y.iter().zip(&dtv).map(|(a, b)| a - b).collect())
    };

    // primal objective, dual objective, true duality gap
    let objectives = |v: &[f64], beta: &[f64]| -> Result<(f64, f64, f64)> {
        let dbeta = d.apply(beta)?;
        let mut pen = 0.0;
        let mut gap = 0.0;
        for (i, &db) in dbeta.iter().enumerate() {
            if db.abs() > zero_floor {
                pen += db.abs();
                gap += lam * db.abs() - v[i] * db;
            }
        }
        let fid: f64 = y
            .iter()
            .zip(beta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            * 0.5;
        let primal = fid + lam * pen;
        Ok((primal, primal - gap, gap))
    };

    // full KKT residual norm at barrier parameter t
    let residual_norm = |v: &[f64], mu1: &[f64], mu2: &[f64], t: f64| -> Result<f64> {
        let dtv = d.apply_transpose_compensated(v)?;
        let qv = d.apply(&dtv)?;
        let mut s = 0.0;
        for i in 0..m {
            let rd = qv[i] - dy[i] + mu1[i] - mu2[i];
            let f1 = v[i] - lam;
            let f2 = -v[i] - lam;
            let rc1 = -mu1[i] * f1 - 1.0 / t;
            let rc2 = -mu2[i] * f2 - 1.0 / t;
            s += rd * rd + rc1 * rc1 + rc2 * rc2;
        }
        Ok(s.sqrt())
    };

    let mut iterations = 0usize;
    let mut diag = SolverDiagnostics::default();
    let mut converged = false;
    let mut stalls = 0usize;

    for iter in 1..=cfg.max_iter {
        iterations = iter;

        // surrogate complementarity gap drives the barrier parameter
        let eta: f64 = (0..m)
            .map(|i| mu1[i] * (lam - v[i]) + mu2[i] * (lam + v[i]))
            .sum();
        let t = (cfg.mu_factor * 2.0 * m as f64 / eta).max(1e-12);

        let r_now = residual_norm(&v, &mu1, &mu2, t)?;

        // Newton system: (Q + diag(mu1/(lam-v) + mu2/(lam+v))) dv = rhs
        let dtv = d.apply_transpose_compensated(&v)?;
        let qv = d.apply(&dtv)?;
        let mut newton = q.clone();
        let mut dg = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let f1 = v[i] - lam;
            let f2 = -v[i] - lam;
            dg[i] = -mu1[i] / f1 - mu2[i] / f2;
            let rd = qv[i] - dy[i] + mu1[i] - mu2[i];
            rhs[i] = -rd + mu1[i] + 1.0 / (t * f1) - mu2[i] - 1.0 / (t * f2);
        }
        newton.add_diag(&dg)?;
        let chol = match BandedCholesky::factor(&newton) {
            Ok(c) => c,
            Err(Error::NotPositiveDefinite { pivot }) => {
                return Err(Error::NotConverged {
                    iterations: iter,
                    detail: format!(
                        "newton system lost positive definiteness at pivot {pivot}; gap {:.3e}",
                        diag.duality_gap
                    ),
                })
            }
            Err(e) => return Err(e),
        };
        let dv = chol.solve_refined(&newton, &rhs, 2)?;

        let mut dmu1 = vec![0.0; m];
        let mut dmu2 = vec![0.0; m];
        for i in 0..m {
            let f1 = v[i] - lam;
            let f2 = -v[i] - lam;
            dmu1[i] = -mu1[i] * dv[i] / f1 - mu1[i] - 1.0 / (t * f1);
            dmu2[i] = mu2[i] * dv[i] / f2 - mu2[i] - 1.0 / (t * f2);
        }

        // largest step keeping multipliers positive, then strict box
        // feasibility, then Armijo descent on the residual norm
        let mut s = 1.0f64;
        for i in 0..m {
            if dmu1[i] < 0.0 {
                s = s.min(-mu1[i] / dmu1[i]);
            }
            if dmu2[i] < 0.0 {
                s = s.min(-mu2[i] / dmu2[i]);
            }
        }
        s *= 0.99;
        loop {
            let ok = (0..m).all(|i| (v[i] + s * dv[i]).abs() < lam);
            if ok {
                break;
            }
            s *= cfg.ls_beta;
            if s < 1e-14 {
                break;
            }
        }
        let mut accepted = false;
        let mut trial_v = vec![0.0; m];
        let mut trial_m1 = vec![0.0; m];
        let mut trial_m2 = vec![0.0; m];
        for _ in 0..60 {
            for i in 0..m {
                trial_v[i] = v[i] + s * dv[i];
                trial_m1[i] = mu1[i] + s * dmu1[i];
                trial_m2[i] = mu2[i] + s * dmu2[i];
            }
            let r_new = residual_norm(&trial_v, &trial_m1, &trial_m2, t)?;
            if r_new <= (1.0 - cfg.ls_alpha * s) * r_now {
                accepted = true;
                break;
            }
            s *= cfg.ls_beta;
            if s < 1e-14 {
                break;
            }
        }
        if accepted {
            std::mem::swap(&mut v, &mut trial_v);
            std::mem::swap(&mut mu1, &mut trial_m1);
            std::mem::swap(&mut mu2, &mut trial_m2);
        }

        let beta = recover_beta(&v)?;
        let (primal, dual_obj, gap) = objectives(&v, &beta)?;
        diag.primal_obj = primal;
        diag.dual_obj = dual_obj;
        diag.duality_gap = gap;
        if gap <= cfg.tol * (1.0 + primal.abs()) {
            converged = true;
            break;
        }
        if accepted {
            stalls = 0;
        } else {
            // line search stalled: recenter the multipliers on the barrier
            // path at the current point and retry before giving up
            stalls += 1;
            if stalls > 3 {
                break;
            }
            for i in 0..m {
                mu1[i] = 1.0 / (t * (lam - v[i]));
                mu2[i] = 1.0 / (t * (lam + v[i]));
            }
        }
    }

    diag.iterations = iterations;
    diag.converged = converged;
    diag.wall_time = start.elapsed().as_secs_f64();

    if !converged {
        return Err(Error::NotConverged {
            iterations,
            detail: format!(
                "relative duality gap {:.3e} above tolerance {:.1e} (primal {:.6e}, dual {:.6e})",
                diag.duality_gap / (1.0 + diag.primal_obj.abs()),
                cfg.tol,
                diag.primal_obj,
                diag.dual_obj
            ),
        });
    }

    let beta = recover_beta(&v)?;
    Ok(TfSolution {
        beta,
        dual: v,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::polynomial_project;
    use crate::solver::{lambda_max, ScaleConvention};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn problem(y: Vec<f64>, k: usize, lam: f64) -> TfProblem {
        TfProblem::new(y, k, lam, ScaleConvention::Raw).unwrap()
    }

    #[test]
    fn zero_lambda_returns_data() {
        let y = vec![1.0, -0.5, 2.0, 0.25, 1.5];
        let sol = solve_tf_pdip(&problem(y.clone(), 1, 0.0), &FitConfig::default()).unwrap();
        assert_eq!(sol.beta, y);
        assert!(sol.diagnostics.converged);
    }

    #[test]
    fn huge_lambda_gives_polynomial_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..=2usize {
            let n = 30;
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lam = 2.0 * lambda_max(&y, k, ScaleConvention::Raw).unwrap();
            let sol = solve_tf_pdip(&problem(y.clone(), k, lam), &FitConfig::default()).unwrap();
            let proj = polynomial_project(&y, k);
            for (a, b) in sol.beta.iter().zip(&proj) {
                assert!((a - b).abs() < 1e-8, "k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kkt_conditions_hold_at_mid_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..=3usize {
            let n = 60;
            let y: Vec<f64> = (1..=n)
                .map(|i| (8.0 * i as f64 / n as f64).sin() + 0.3 * rng.gen_range(-1.0..1.0))
                .collect();
            let lam = 0.05 * lambda_max(&y, k, ScaleConvention::Raw).unwrap();
            let p = problem(y.clone(), k, lam);
            let sol = solve_tf_pdip(&p, &FitConfig::default()).unwrap();
            let diag = &sol.diagnostics;
            assert!(diag.converged);
            assert!(diag.duality_gap >= -1e-10);
            // dual feasibility
            let vinf = sol.dual.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(vinf <= lam * (1.0 + 1e-9));
            // stationarity: y - beta = D^T v
            let d = DiffOp::new(n, k + 1).unwrap();
            let dtv = d.apply_transpose(&sol.dual).unwrap();
            for i in 0..n {
                assert!((y[i] - sol.beta[i] - dtv[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn initialization_does_not_change_answer() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 50;
        let k = 2;
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lam = 0.1 * lambda_max(&y, k, ScaleConvention::Raw).unwrap();
        let p = problem(y, k, lam);
        let mut cfg = FitConfig::default();
        cfg.tol = 1e-10;
        let cold = solve_tf_pdip(&p, &cfg).unwrap();
        let junk: Vec<f64> = (0..n - k - 1).map(|_| rng.gen_range(-lam..lam)).collect();
        let warm = solve_tf_pdip_warm(&p, &cfg, Some(&junk)).unwrap();
        let rms: f64 = cold
            .beta
            .iter()
            .zip(&warm.beta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / (n as f64).sqrt();
        assert!(rms < 1e-7, "rms {rms}");
    }

    #[test]
    fn shrinks_objective_below_data_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 40;
        let k = 1;
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lam = 0.2 * lambda_max(&y, k, ScaleConvention::Raw).unwrap();
        let p = problem(y.clone(), k, lam);
        let sol = solve_tf_pdip(&p, &FitConfig::default()).unwrap();
        let d = DiffOp::new(n, k + 1).unwrap();
        let obj = |b: &[f64]| -> f64 {
            let fid: f64 = y.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() * 0.5;
            let pen: f64 = d.apply(b).unwrap().iter().map(|v| v.abs()).sum();
            fid + lam * pen
        };
        assert!(obj(&sol.beta) <= obj(&y) + 1e-10);
    }
}
