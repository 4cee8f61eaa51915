//! Simulation scenarios, loss metrics, and the benchmark / convergence-rate
//! harnesses.
//!
//! Ground truths are pinned here so runs are reproducible: the "hills"
//! signal is a natural cubic spline through fixed control points whose knots
//! sit far apart on the left of the domain and bunch together on the right;
//! the chirp scenario is sin(4/x) + 1.5. All randomness flows from explicit
//! seeds, one stream per replicate, so parallel and serial runs agree.

use crate::banded::{BandedCholesky, BandedMatrix};
use crate::error::{Error, Result};
use crate::estimate::{
    fit_locally_adaptive_spline, fit_smoothing_spline, fit_split_smoothing_spline,
    fit_trend_filter, tune_smoothing_spline_to_df, tune_to_df,
};
use crate::solver::{lambda_max, FitConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::sync::OnceLock;
use std::time::Instant;

/// Hills control abscissae: interior knots are spaced 0.2-0.3 apart on the
/// left of the domain and 0.05 apart on the right.
pub const HILLS_XS: [f64; 8] = [0.0, 0.3, 0.6, 0.8, 0.85, 0.9, 0.95, 1.0];
/// Hills control ordinates: smooth swings on the left, three rapid hills on
/// the right.
pub const HILLS_YS: [f64; 8] = [1.0, 2.4, 1.1, 2.1, 0.7, 2.2, 0.6, 1.8];
/// Default noise level for the hills scenario.
pub const HILLS_NOISE_SD: f64 = 0.25;
/// Default noise level for the chirp scenario.
pub const DOPPLER_NOISE_SD: f64 = 0.4;
/// Default noise level for the rate harness.
pub const RATE_NOISE_SD: f64 = 0.25;
/// Loss restriction used by the chirp benchmark: the far-left cycles are
/// unresolvable at any practical df, so they are excluded from the loss.
pub const DOPPLER_RESTRICT_FROM: f64 = 0.175;

/// Simulation scenario switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Hills,
    Doppler,
    Custom,
}

impl Scenario {
    pub fn default_noise_sd(self) -> f64 {
        match self {
            Scenario::Hills => HILLS_NOISE_SD,
            Scenario::Doppler => DOPPLER_NOISE_SD,
            Scenario::Custom => 0.0,
        }
    }
}

/// One simulated data set over the even grid x_i = i/n.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f0: Option<Vec<f64>>,
    pub seed: u64,
    pub scenario: Scenario,
}

fn grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / n as f64).collect()
}

fn add_noise(f0: &[f64], sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    f0.iter()
        .map(|&v| v + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Chirp ground truth sin(4/x) + 1.5.
pub fn doppler_f0(x: f64) -> f64 {
    (4.0 / x).sin() + 1.5
}

/// Chirp scenario data.
pub fn gen_doppler(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::TooFewPoints {
            required: 10,
            order: 0,
            got: n,
        });
    }
    let x = grid(n);
    let f0: Vec<f64> = x.iter().map(|&v| doppler_f0(v)).collect();
    let y = add_noise(&f0, noise_sd, seed);
    Ok(Dataset {
        n,
        x,
        y,
        f0: Some(f0),
        seed,
        scenario: Scenario::Doppler,
    })
}

// Natural cubic spline through fixed control points; second derivatives are
// solved once from the standard tridiagonal system and cached.
struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m2: Vec<f64>,
}

impl NaturalSpline {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let m = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let interior = m - 2;
        let mut a = BandedMatrix::zeros(interior, interior, 1, 1).expect("spline system size");
        let mut rhs = vec![0.0; interior];
        for i in 0..interior {
            a.set(i, i, (h[i] + h[i + 1]) / 3.0);
            if i + 1 < interior {
                a.set(i, i + 1, h[i + 1] / 6.0);
                a.set(i + 1, i, h[i + 1] / 6.0);
            }
            rhs[i] = (ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i];
        }
        let chol = BandedCholesky::factor(&a).expect("diagonally dominant");
        let sol = chol.solve(&rhs).expect("sized");
        let mut m2 = vec![0.0; m];
        m2[1..m - 1].copy_from_slice(&sol);
        Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m2,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let m = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[m - 1]);
        let mut i = match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).expect("finite"))
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if i >= m - 1 {
            i = m - 2;
        }
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m2[i] + (b * b * b - b) * self.m2[i + 1]) * h * h / 6.0
    }
}

fn hills_spline() -> &'static NaturalSpline {
    static SPLINE: OnceLock<NaturalSpline> = OnceLock::new();
    SPLINE.get_or_init(|| NaturalSpline::new(&HILLS_XS, &HILLS_YS))
}

/// Hills ground truth: a C^2 piecewise cubic, smooth on [0, 0.8] and
/// oscillating through three hills on [0.8, 1].
pub fn hills_f0(x: f64) -> f64 {
    hills_spline().eval(x)
}

/// Hills scenario data.
pub fn gen_hills(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n < 20 {
        return Err(Error::TooFewPoints {
            required: 20,
            order: 0,
            got: n,
        });
    }
    let x = grid(n);
    let f0: Vec<f64> = x.iter().map(|&v| hills_f0(v)).collect();
    let y = add_noise(&f0, noise_sd, seed);
    Ok(Dataset {
        n,
        x,
        y,
        f0: Some(f0),
        seed,
        scenario: Scenario::Hills,
    })
}

/// Ground truth for the rate harness at order k: a function whose k-th
/// derivative has bounded total variation. Piecewise constant steps for
/// k = 0 and the piecewise linear interpolant of the hills control points
/// for k = 1; higher orders reuse the smooth hills curve.
pub fn rate_f0(k: usize, x: f64) -> f64 {
    match k {
        0 => {
            let mut v = HILLS_YS[0];
            for i in 1..HILLS_XS.len() {
                if x >= HILLS_XS[i] {
                    v = HILLS_YS[i];
                }
            }
            v
        }
        1 => {
            let x = x.clamp(0.0, 1.0);
            let mut i = 0;
            while i + 2 < HILLS_XS.len() && x > HILLS_XS[i + 1] {
                i += 1;
            }
            let w = (x - HILLS_XS[i]) / (HILLS_XS[i + 1] - HILLS_XS[i]);
            HILLS_YS[i] * (1.0 - w) + HILLS_YS[i + 1] * w
        }
        _ => hills_f0(x),
    }
}

/// Mean squared deviation over the grid, optionally restricted to points
/// with x_i >= restrict_from.
pub fn loss_mse(fit: &[f64], f0: &[f64], restrict_from: Option<f64>) -> Result<f64> {
    if fit.len() != f0.len() {
        return Err(Error::DimensionMismatch {
            expected: f0.len(),
            got: fit.len(),
        });
    }
    let n = fit.len();
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        let x = (i + 1) as f64 / n as f64;
        if restrict_from.map_or(true, |r| x >= r) {
            let e = fit[i] - f0[i];
            acc += e * e;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument(
            "loss restriction excludes every input point".into(),
        ));
    }
    Ok(acc / count as f64)
}

/// Estimator selector for the benchmark harness.
#[derive(Debug, Clone)]
pub enum Method {
    TrendFilter { k: usize },
    SmoothingSpline,
    LocallyAdaptiveSpline { k: usize },
    /// Two independent smoothing splines split at `split`; per-side df
    /// defaults to half the target when not given explicitly.
    SplitSmoothingSpline {
        split: f64,
        df_sides: Option<(f64, f64)>,
    },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::TrendFilter { k } => format!("trend_filter_k{k}"),
            Method::SmoothingSpline => "smoothing_spline".into(),
            Method::LocallyAdaptiveSpline { k } => format!("locally_adaptive_k{k}"),
            Method::SplitSmoothingSpline { .. } => "split_smoothing_spline".into(),
        }
    }
}

/// Per-(method, df target) benchmark summary.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub method: String,
    pub df_target: usize,
    pub losses: Vec<f64>,
    pub mean_loss: f64,
    pub stderr: f64,
    pub runtimes: Vec<f64>,
    pub failures: usize,
}

pub(crate) fn aggregate(method: String, df_target: usize, losses: Vec<f64>, runtimes: Vec<f64>, failures: usize) -> BenchResult {
    let m = if losses.is_empty() {
        f64::NAN
    } else {
        losses.iter().sum::<f64>() / losses.len() as f64
    };
    let stderr = if losses.len() > 1 {
        let var = losses.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (losses.len() - 1) as f64;
        (var / losses.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    BenchResult {
        method,
        df_target,
        losses,
        mean_loss: m,
        stderr,
        runtimes,
        failures,
    }
}

/// Benchmark run parameters.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub n: usize,
    /// Noise level; scenario default when absent.
    pub noise_sd: Option<f64>,
    pub df_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Loss restriction threshold on x.
    pub restrict_from: Option<f64>,
}

fn generate(scenario: Scenario, n: usize, sd: f64, seed: u64) -> Result<Dataset> {
    match scenario {
        Scenario::Hills => gen_hills(n, sd, seed),
        Scenario::Doppler => gen_doppler(n, sd, seed),
        Scenario::Custom => Err(Error::InvalidArgument(
            "custom scenario has no generator".into(),
        )),
    }
}

// df-targeted adaptive spline fit: bisection on the count of active
// penalized coefficients plus k + 1, mirroring the knot-count tuning.
fn tune_local_spline_to_df(
    y: &[f64],
    k: usize,
    target_df: usize,
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    let df_of = |theta: &[f64]| -> usize {
        let scale = theta[k + 1..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let thr = 1e-8 * (1.0 + scale);
        theta[k + 1..].iter().filter(|v| v.abs() > thr).count() + k + 1
    };
    let lam_hi = lambda_max(y, k, cfg.scale)? * 1.0001;
    let mut hi = lam_hi;
    let mut lo = lam_hi * 1e-6;
    let mut best: Option<(usize, Vec<f64>)> = None;
    for _ in 0..40 {
        let mid = (lo * hi).sqrt();
        let fit = fit_locally_adaptive_spline(y, k, mid, cfg)?;
        let df = df_of(&fit.theta);
        let better = best
            .as_ref()
            .map_or(true, |(b, _)| df.abs_diff(target_df) < b.abs_diff(target_df));
        if better {
            best = Some((df, fit.fitted.clone()));
        }
        if df == target_df {
            break;
        }
        if df > target_df {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.expect("at least one fit").1)
}

/// Runs every method over every df target for `replicates` simulated data
/// sets. Per-replicate failures are counted, not fatal. Replicates run in
/// parallel; results are identical to a serial run because each replicate
/// has its own seeded stream.
pub fn run_benchmark(bc: &BenchConfig, methods: &[Method], cfg: &FitConfig) -> Result<Vec<BenchResult>> {
    let sd = bc.noise_sd.unwrap_or_else(|| bc.scenario.default_noise_sd());
    let mut out = Vec::new();
    for method in methods {
        for &df in &bc.df_grid {
            // smoothing spline tuning does not depend on y: tune once
            let ss_lambda = match method {
                Method::SmoothingSpline => Some(tune_smoothing_spline_to_df(bc.n, df as f64)?),
                _ => None,
            };
            let split_lams = match method {
                Method::SplitSmoothingSpline { split, df_sides } => {
                    let (dl, dr) = df_sides.unwrap_or_else(|| {
                        let half = (df as f64 / 2.0).max(2.0);
                        (half, half)
                    });
                    Some((*split, dl, dr))
                }
                _ => None,
            };

            let runs: Vec<(Option<f64>, f64)> = (0..bc.replicates)
                .into_par_iter()
                .map(|rep| {
                    let seed = bc.seed.wrapping_add(rep as u64);
                    let data = match generate(bc.scenario, bc.n, sd, seed) {
                        Ok(d) => d,
                        Err(_) => return (None, 0.0),
                    };
                    let f0 = data.f0.as_ref().expect("generated scenarios carry f0");
                    let t0 = Instant::now();
                    let fitted: Result<Vec<f64>> = match method {
                        Method::TrendFilter { k } => {
                            tune_to_df(&data.y, *k, df, cfg).map(|f| f.beta)
                        }
                        Method::SmoothingSpline => {
                            fit_smoothing_spline(&data.y, ss_lambda.expect("tuned above"))
                                .map(|f| f.fitted)
                        }
                        Method::LocallyAdaptiveSpline { k } => {
                            tune_local_spline_to_df(&data.y, *k, df, cfg)
                        }
                        Method::SplitSmoothingSpline { .. } => {
                            let (split, dl, dr) = split_lams.expect("set above");
                            fit_split_smoothing_spline(&data.y, split, dl, dr)
                        }
                    };
                    let dt = t0.elapsed().as_secs_f64();
                    match fitted {
                        Ok(b) => (loss_mse(&b, f0, bc.restrict_from).ok(), dt),
                        Err(_) => (None, dt),
                    }
                })
                .collect();

            let mut losses = Vec::new();
            let mut runtimes = Vec::new();
            let mut failures = 0usize;
            for (loss, dt) in runs {
                runtimes.push(dt);
                match loss {
                    Some(l) => losses.push(l),
                    None => failures += 1,
                }
            }
            out.push(aggregate(method.name(), df, losses, runtimes, failures));
        }
    }
    Ok(out)
}

/// Result of a convergence-rate check.
#[derive(Debug, Clone)]
pub struct RateResult {
    /// Least squares slope of log mean loss against log n.
    pub slope: f64,
    pub n_grid: Vec<usize>,
    pub mean_losses: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub c_lambda: f64,
}

fn rate_dataset(k: usize, n: usize, sd: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let f0: Vec<f64> = grid(n).iter().map(|&x| rate_f0(k, x)).collect();
    let y = add_noise(&f0, sd, seed);
    (f0, y)
}

/// Picks the lambda scale constant by minimizing the mean loss over a
/// descending grid at the reference size; the rate check then applies
/// lambda = c * n^(1/(2k+3)) at every size.
pub fn calibrate_rate_constant(
    k: usize,
    n_ref: usize,
    replicates: usize,
    noise_sd: f64,
    seed: u64,
    cfg: &FitConfig,
) -> Result<f64> {
    let exponent = 1.0 / (2.0 * k as f64 + 3.0);
    let (_, y_probe) = rate_dataset(k, n_ref, noise_sd, seed);
    let lam_hi = lambda_max(&y_probe, k, cfg.scale)?;
    let grid_vals: Vec<f64> = (0..14).map(|g| lam_hi * 0.5 * 0.5f64.powi(g)).collect();

    let losses: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let (f0, y) = rate_dataset(k, n_ref, noise_sd, seed.wrapping_add(rep as u64));
            let mut warm: Option<Vec<f64>> = None;
            grid_vals
                .iter()
                .map(|&lam| {
                    match crate::solver::pdip::solve_tf_pdip_warm(
                        &crate::solver::TfProblem::new(y.clone(), k, lam, cfg.scale)
                            .expect("valid problem"),
                        cfg,
                        warm.as_deref(),
                    ) {
                        Ok(sol) => {
                            warm = Some(sol.dual.clone());
                            loss_mse(&sol.beta, &f0, None).unwrap_or(f64::INFINITY)
                        }
                        Err(_) => f64::INFINITY,
                    }
                })
                .collect()
        })
        .collect();

    let mut best_g = 0usize;
    let mut best_loss = f64::INFINITY;
    for g in 0..grid_vals.len() {
        let mean: f64 = losses.iter().map(|l| l[g]).sum::<f64>() / replicates as f64;
        if mean < best_loss {
            best_loss = mean;
            best_g = g;
        }
    }
    Ok(grid_vals[best_g] / (n_ref as f64).powf(exponent))
}

/// Fits at lambda = c * n^(1/(2k+3)) across the size grid and reports the
/// log-log slope of the mean loss, expected near -(2k+2)/(2k+3).
pub fn rate_check(
    k: usize,
    n_grid: &[usize],
    replicates: usize,
    c_lambda: f64,
    noise_sd: f64,
    seed: u64,
    cfg: &FitConfig,
) -> Result<RateResult> {
    if n_grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "rate check needs at least two sizes".into(),
        ));
    }
    let exponent = 1.0 / (2.0 * k as f64 + 3.0);
    let mut mean_losses = Vec::with_capacity(n_grid.len());
    let mut lambdas = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let lam = c_lambda * (n as f64).powf(exponent);
        lambdas.push(lam);
        let losses: Vec<f64> = (0..replicates)
            .into_par_iter()
            .map(|rep| {
                let (f0, y) = rate_dataset(k, n, noise_sd, seed.wrapping_add(rep as u64));
                match fit_trend_filter(&y, k, lam, cfg) {
                    Ok(fit) => loss_mse(&fit.beta, &f0, None).unwrap_or(f64::NAN),
                    Err(_) => f64::NAN,
                }
            })
            .collect();
        let ok: Vec<f64> = losses.into_iter().filter(|v| v.is_finite()).collect();
        if ok.is_empty() {
            return Err(Error::NotConverged {
                iterations: replicates,
                detail: format!("every replicate failed at n = {n}"),
            });
        }
        mean_losses.push(ok.iter().sum::<f64>() / ok.len() as f64);
    }
    // least squares slope of log(loss) on log(n)
    let xs: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mean_losses.iter().map(|&l| l.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(RateResult {
        slope: sxy / sxx,
        n_grid: n_grid.to_vec(),
        mean_losses,
        lambdas,
        c_lambda,
    })
}
