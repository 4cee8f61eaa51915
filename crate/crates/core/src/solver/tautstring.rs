//! Exact solver for the piecewise constant case (k = 0), which is
//! one-dimensional total variation denoising.
//!
//! Direct single-pass algorithm: walk the data keeping a candidate constant
//! segment together with the tube bounds a taut string through
//! [cumsum - lambda, cumsum + lambda] would have to respect; emit the segment
//! value whenever the string is forced to jump. Non-iterative and exact up
//! to floating point, so it serves as a ground-truth oracle for the other
//! solvers at k = 0.

/// Minimizes 0.5 ||y - b||^2 + lambda * sum |b_{i+1} - b_i| exactly.
pub fn solve_tf_tautstring(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    if n == 0 {
        return Vec::new();
    }
    if lambda <= 0.0 || n == 1 {
        return y.to_vec();
    }
    let mut x = vec![0.0; n];
    // current segment is y[k0..=k]; vmin/vmax are the lowest/highest
    // admissible segment values, umin/umax the running slack against the
    // lower/upper tube bound, km/kp the last indices where each bound was hit
    let mut k = 0usize;
    let mut k0 = 0usize;
    let mut km = 0usize;
    let mut kp = 0usize;
    let mut vmin = y[0] - lambda;
    let mut vmax = y[0] + lambda;
    let mut umin = lambda;
    let mut umax = -lambda;

    loop {
        if k == n - 1 {
            if umin < 0.0 {
                // lower bound violated at the boundary: the string jumps down
                for xi in &mut x[k0..=km] {
                    *xi = vmin;
                }
                k0 = km + 1;
                k = k0;
                km = k0;
                vmin = y[k];
                umin = lambda;
                umax = y[k] + lambda - vmax;
                continue;
            }
            if umax > 0.0 {
                // upper bound violated: jump up
                for xi in &mut x[k0..=kp] {
                    *xi = vmax;
                }
                k0 = kp + 1;
                k = k0;
                kp = k0;
                vmax = y[k];
                umax = -lambda;
                umin = y[k] - lambda - vmin;
                continue;
            }
            // string exits through the middle: close the last segment
            let v = vmin + umin / (k - k0 + 1) as f64;
            for xi in &mut x[k0..n] {
                *xi = v;
            }
            return x;
        }

        if y[k + 1] + umin < vmin - lambda {
            // segment cannot absorb the next point: negative jump at km
            for xi in &mut x[k0..=km] {
                *xi = vmin;
            }
            k0 = km + 1;
            k = k0;
            km = k0;
            kp = k0;
            vmin = y[k];
            vmax = y[k] + 2.0 * lambda;
            umin = lambda;
            umax = -lambda;
        } else if y[k + 1] + umax > vmax + lambda {
            // positive jump at kp
            for xi in &mut x[k0..=kp] {
                *xi = vmax;
            }
            k0 = kp + 1;
            k = k0;
            km = k0;
            kp = k0;
            vmin = y[k] - 2.0 * lambda;
            vmax = y[k];
            umin = lambda;
            umax = -lambda;
        } else {
            // extend the segment and tighten the bounds if a wall is touched
            k += 1;
            umin += y[k] - vmin;
            umax += y[k] - vmax;
            if umin >= lambda {
                vmin += (umin - lambda) / (k - k0 + 1) as f64;
                umin = lambda;
                km = k;
            }
            if umax <= -lambda {
                vmax += (umax + lambda) / (k - k0 + 1) as f64;
                umax = -lambda;
                kp = k;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    // Dual box-QP oracle: accelerated projected gradient on
    //     min_v 0.5 || y - D^T v ||^2, |v_i| <= lambda,
    // run far past the accuracy needed. Dual suboptimality bounds the primal
    // error, so beta = y - D^T v is exact to ~1e-9 here.
    fn tv_oracle(y: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
        let n = y.len();
        let m = n - 1;
        let apply_dt = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (i, &vi) in v.iter().enumerate() {
                out[i] -= vi;
                out[i + 1] += vi;
            }
            out
        };
        let apply_d = |b: &[f64]| -> Vec<f64> { (0..m).map(|i| b[i + 1] - b[i]).collect() };
        let mut v = vec![0.0; m];
        let mut v_prev = v.clone();
        let lip = 4.0;
        let mut tk = 1.0f64;
        for _ in 0..iters {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
            let momentum = (tk - 1.0) / t_next;
            let z: Vec<f64> = v
                .iter()
                .zip(&v_prev)
                .map(|(a, b)| a + momentum * (a - b))
                .collect();
            // gradient of 0.5||y - D^T z||^2 wrt z is -D(y - D^T z)
            let r: Vec<f64> = y
                .iter()
                .zip(apply_dt(&z))
                .map(|(a, b)| a - b)
                .collect();
            let g = apply_d(&r);
            v_prev = v;
            v = z
                .iter()
                .zip(&g)
                .map(|(zi, gi)| (zi + gi / lip).clamp(-lambda, lambda))
                .collect();
            tk = t_next;
        }
        let dtv = apply_dt(&v);
        y.iter().zip(&dtv).map(|(a, b)| a - b).collect()
    }

    #[test]
    fn zero_lambda_is_identity() {
        let y = vec![1.0, -2.0, 0.5];
        assert_eq!(solve_tf_tautstring(&y, 0.0), y);
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.gen_range(5..40);
            let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            y.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let lam = rng.gen_range(0.01..2.0);
            let x = solve_tf_tautstring(&y, lam);
            for w in x.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }

    #[test]
    fn preserves_total_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let n = rng.gen_range(2..60);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lam = rng.gen_range(0.0..1.5);
            let x = solve_tf_tautstring(&y, lam);
            let sy: f64 = y.iter().sum();
            let sx: f64 = x.iter().sum();
            assert!((sy - sx).abs() < 1e-9 * (1.0 + sy.abs()));
        }
    }

    #[test]
    fn large_lambda_gives_mean() {
        let y = vec![0.5, 2.0, -1.0, 1.5, 0.0];
        let x = solve_tf_tautstring(&y, 100.0);
        let mean: f64 = y.iter().sum::<f64>() / y.len() as f64;
        for v in x {
            assert!((v - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_dual_qp_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..25 {
            let n = rng.gen_range(2..12);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for &lam in &[0.05, 0.3, 1.0] {
                let got = solve_tf_tautstring(&y, lam);
                let want = tv_oracle(&y, lam, 40_000);
                for (g, w) in got.iter().zip(&want) {
                    assert!(
                        (g - w).abs() < 1e-7,
                        "trial {trial} n={n} lam={lam}: {got:?} vs {want:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn piecewise_constant_signal_recovered_at_small_lambda() {
        let mut y = vec![0.0; 30];
        for v in &mut y[10..20] {
            *v = 3.0;
        }
        let x = solve_tf_tautstring(&y, 0.01);
        // jumps survive, levels shrink by lambda-scale amounts only
        assert!((x[0] - y[0]).abs() < 0.01 + 1e-12);
        assert!((x[15] - y[15]).abs() < 0.01 + 1e-12);
    }
}
