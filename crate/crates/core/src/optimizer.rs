//! Time optimisation of the transfer probability `R^2(t) = |f_N|^2 + |f_{N-1}|^2`.
//!
//! `R^2(t)` oscillates; the quantity of interest is its first significant
//! maximum `(t0, R^2_max)`. Across the inhomogeneity `phi` the maxima follow
//! `F_N(phi) = c_N - exp(-a_N phi pi - b_N)`, and `t0` grows like `N^gamma(phi)`.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::chain::{coupling_profile, spectral_decomposition, ChainSpec, SpectralDecomposition};
use crate::correlations::SenderState;
use crate::error::{Error, Result};

/// A grid maximum must exceed this to count as the first maximum.
pub const SIGNIFICANCE_FLOOR: f64 = 0.01;

/// Golden-section refinement stops once the bracket is narrower than this.
pub const REFINE_TOLERANCE: f64 = 1e-9;

const FIT_MAX_ITERATIONS: usize = 500;
const FIT_MAX_CONDITION: f64 = 1e12;

/// Coarse scan step: 0.05 up to N = 50, 0.1 beyond.
pub fn default_dt(n: usize) -> f64 {
    if n <= 50 {
        0.05
    } else {
        0.1
    }
}

pub fn default_t_max(n: usize) -> f64 {
    3.0 * n as f64
}

pub fn transfer_probability(decomp: &SpectralDecomposition, sender: &SenderState, t: f64) -> f64 {
    let block = decomp.receiver_block(t);
    let f = |row: usize| -> f64 {
        block[row]
            .iter()
            .zip(&sender.a)
            .map(|(p, a)| p * a)
            .sum::<num_complex::Complex64>()
            .norm_sqr()
    };
    f(0) + f(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeOptimum {
    pub t0: f64,
    pub r2max: f64,
    pub spec: ChainSpec,
    pub sender: SenderState,
    /// Grid node the refinement started from.
    pub coarse_t: f64,
    /// Width of the final golden-section bracket.
    pub refine_step: f64,
}

/// First interior local maximum of `R^2(t)` on `{0, dt, ..., t_max}` above
/// [`SIGNIFICANCE_FLOOR`], refined by golden-section search.
pub fn find_first_maximum(
    decomp: &SpectralDecomposition,
    sender: &SenderState,
    t_max: f64,
    dt: f64,
) -> Result<TimeOptimum> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    if !(dt > 0.0 && dt < t_max) {
        return Err(Error::InvalidInput(format!(
            "dt must lie in (0, t_max), got {dt}"
        )));
    }
    let r2 = |t: f64| transfer_probability(decomp, sender, t);
    let steps = (t_max / dt).floor() as usize;

    let mut prev = r2(0.0);
    let mut cur = r2(dt);
    for k in 1..steps {
        let next = r2((k + 1) as f64 * dt);
        if cur > prev && cur >= next && cur > SIGNIFICANCE_FLOOR {
            let coarse_t = k as f64 * dt;
            let (t0, r2max, width) =
                golden_section_max(&r2, coarse_t - dt, coarse_t + dt, REFINE_TOLERANCE);
            let (t0, r2max) = if r2max >= cur {
                (t0, r2max)
            } else {
                (coarse_t, cur)
            };
            return Ok(TimeOptimum {
                t0,
                r2max,
                spec: decomp.spec,
                sender: *sender,
                coarse_t,
                refine_step: width,
            });
        }
        prev = cur;
        cur = next;
    }
    Err(Error::NoMaximumFound {
        t_max,
        floor: SIGNIFICANCE_FLOOR,
    })
}

/// Scan with [`default_dt`] and [`default_t_max`].
pub fn find_first_maximum_default(
    decomp: &SpectralDecomposition,
    sender: &SenderState,
) -> Result<TimeOptimum> {
    let n = decomp.n();
    find_first_maximum(decomp, sender, default_t_max(n), default_dt(n))
}

/// Maximise a unimodal `f` on `[lo, hi]`. Returns `(argmax, max, bracket width)`.
fn golden_section_max(
    f: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1, hi - lo)
    } else {
        (x2, f2, hi - lo)
    }
}

fn optimum_for(n: usize, phi: f64, sender: &SenderState) -> Result<TimeOptimum> {
    let profile = coupling_profile(ChainSpec::new(n, phi)?)?;
    let decomp = spectral_decomposition(&profile)?;
    find_first_maximum_default(&decomp, sender)
}

/// One [`TimeOptimum`] per `phi`, in grid order.
pub fn phi_sweep(n: usize, phi_grid: &[f64], sender: &SenderState) -> Result<Vec<TimeOptimum>> {
    phi_grid
        .par_iter()
        .map(|&phi| optimum_for(n, phi, sender))
        .collect()
}

/// `phi = 0, 1/16, ..., 1/2`.
pub fn default_phi_grid() -> Vec<f64> {
    (0..=8).map(|k| k as f64 / 16.0).collect()
}

/// `F(phi) = c - exp(-a phi pi - b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub a_n: f64,
    pub b_n: f64,
    pub c_n: f64,
    /// Root-mean-square residual on the training grid.
    pub residual: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit or the parameters are not
    /// identifiable from the data (singular normal matrix at the solution).
    pub converged: bool,
}

impl FitResult {
    pub fn eval(&self, phi: f64) -> f64 {
        exponential_model(self.a_n, self.b_n, self.c_n, phi)
    }
}

pub fn exponential_model(a: f64, b: f64, c: f64, phi: f64) -> f64 {
    c - (-a * phi * PI - b).exp()
}

fn fit_cost(params: &Vector3<f64>, phi: &[f64], y: &[f64]) -> f64 {
    phi.iter()
        .zip(y)
        .map(|(&x, &y)| (exponential_model(params[0], params[1], params[2], x) - y).powi(2))
        .sum()
}

fn normal_equations(params: &Vector3<f64>, phi: &[f64], y: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for (&x, &y) in phi.iter().zip(y) {
        let e = (-params[0] * x * PI - params[1]).exp();
        let row = Vector3::new(PI * x * e, e, 1.0);
        let r = params[2] - e - y;
        jtj += row * row.transpose();
        jtr += row * r;
    }
    (jtj, jtr)
}

/// Levenberg-Marquardt fit of [`exponential_model`], started from
/// `c = max(data) + 0.03, a = 2, b = 0`.
pub fn fit_exponential(phi_grid: &[f64], r2max_values: &[f64]) -> Result<FitResult> {
    if phi_grid.len() != r2max_values.len() {
        return Err(Error::InvalidInput(format!(
            "grid has {} points but data has {}",
            phi_grid.len(),
            r2max_values.len()
        )));
    }
    if phi_grid.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 points to fit 3 parameters, got {}",
            phi_grid.len()
        )));
    }
    if phi_grid.iter().chain(r2max_values).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite fit data".into()));
    }

    let y_max = r2max_values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut params = Vector3::new(2.0, 0.0, y_max + 0.03);
    let mut cost = fit_cost(&params, phi_grid, r2max_values);
    let mut damping = 1e-3;
    let mut stopped = false;
    let mut iterations = 0;

    while iterations < FIT_MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&params, phi_grid, r2max_values);
        if jtr.amax() < 1e-15 {
            stopped = true;
            break;
        }
        let mut damped = jtj;
        for i in 0..3 {
            damped[(i, i)] += damping * jtj[(i, i)].max(1e-12);
        }
        let Some(step) = damped.cholesky().map(|c| c.solve(&(-jtr))) else {
            damping *= 10.0;
            continue;
        };
        let trial = params + step;
        let trial_cost = fit_cost(&trial, phi_grid, r2max_values);
        if trial_cost.is_finite() && trial_cost <= cost {
            let small_step = step.norm() <= 1e-12 * (params.norm() + 1e-12);
            let small_gain = cost - trial_cost <= 1e-15 * cost.max(1e-300);
            params = trial;
            cost = trial_cost;
            damping = (damping / 10.0).max(1e-15);
            if small_step || (small_gain && cost < 1e-28) {
                stopped = true;
                break;
            }
        } else {
            damping *= 10.0;
            if damping > 1e15 {
                stopped = true;
                break;
            }
        }
    }

    let (jtj, _) = normal_equations(&params, phi_grid, r2max_values);
    let eig = jtj.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let identifiable = lo > 0.0 && hi / lo < FIT_MAX_CONDITION;

    Ok(FitResult {
        a_n: params[0],
        b_n: params[1],
        c_n: params[2],
        residual: (cost / phi_grid.len() as f64).sqrt(),
        iterations,
        converged: stopped && identifiable,
    })
}

/// Large-N limit of the fitted maxima, `1.031 - exp(-2.232 phi pi + 0.03)`.
pub fn limiting_curve(phi: f64) -> f64 {
    1.031 - (-2.232 * phi * PI + 0.03).exp()
}

/// `(b, c)` fixed by `F(0) = 0` and `F(1/2) = 1` for a given `a`:
/// `c = exp(-b)` and `c (1 - exp(-a pi / 2)) = 1`.
pub fn limiting_boundary_coefficients(a: f64) -> (f64, f64) {
    let c = 1.0 / (1.0 - (-a * PI / 2.0).exp());
    (-c.ln(), c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub phi: f64,
    pub gamma: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared_stat: f64,
    /// `(N, t0)` pairs the regression was run on.
    pub points: Vec<(usize, f64)>,
}

/// Ordinary least squares `y = slope x + intercept`; returns `(slope, intercept, R^2)`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// Fit `log t0 = gamma log N + const` over the given chain lengths.
pub fn scaling_exponent(phi: f64, n_grid: &[usize], sender: &SenderState) -> Result<ScalingResult> {
    if n_grid.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 chain lengths, got {}",
            n_grid.len()
        )));
    }
    let optima: Vec<TimeOptimum> = n_grid
        .par_iter()
        .map(|&n| optimum_for(n, phi, sender))
        .collect::<Result<_>>()?;
    let points: Vec<(usize, f64)> = optima.iter().map(|o| (o.spec.n, o.t0)).collect();
    let log_n: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let log_t: Vec<f64> = points.iter().map(|&(_, t)| t.ln()).collect();
    let (gamma, intercept, r_squared_stat) = linear_regression(&log_n, &log_t);
    Ok(ScalingResult {
        phi,
        gamma,
        intercept,
        r_squared_stat,
        points,
    })
}

/// `N = 50, 100, ..., 300`.
pub fn default_n_grid() -> Vec<usize> {
    (1..=6).map(|k| 50 * k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn decomp(n: usize, phi: f64) -> SpectralDecomposition {
        spectral_decomposition(&coupling_profile(ChainSpec::new(n, phi).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn zero_at_start() {
        let d = decomp(20, 0.3);
        assert!(transfer_probability(&d, &SenderState::ground_site(), 0.0) < 1e-28);
    }

    #[test]
    fn homogeneous_chain_reference_time() {
        let d = decomp(20, 0.0);
        let r2 = transfer_probability(&d, &SenderState::ground_site(), 22.79);
        assert_abs_diff_eq!(r2, 0.63, epsilon = 0.01);
    }

    #[test]
    fn ekert_first_maximum_is_exact_transfer_time() {
        let d = decomp(20, 0.5);
        let opt = find_first_maximum_default(&d, &SenderState::ground_site()).unwrap();
        assert_abs_diff_eq!(opt.t0, PI * 19f64.sqrt(), epsilon = 1e-4);
        assert!(opt.r2max > 0.999_999);
        assert!((opt.t0 - opt.coarse_t).abs() <= default_dt(20));
    }

    #[test]
    fn local_maximum_certificate() {
        let d = decomp(20, 0.375);
        let s = SenderState::ground_site();
        let opt = find_first_maximum_default(&d, &s).unwrap();
        assert_abs_diff_eq!(opt.t0, 15.27, epsilon = 0.01);
        assert_abs_diff_eq!(opt.r2max, 0.98, epsilon = 0.01);
        for delta in [opt.refine_step, 1e-6, 1e-4] {
            assert!(opt.r2max >= transfer_probability(&d, &s, opt.t0 + delta));
            assert!(opt.r2max >= transfer_probability(&d, &s, opt.t0 - delta));
        }
    }

    #[test]
    fn no_maximum_in_short_window() {
        let d = decomp(40, 0.0);
        let err = find_first_maximum(&d, &SenderState::ground_site(), 2.0, 0.05).unwrap_err();
        assert!(matches!(err, Error::NoMaximumFound { .. }));
        assert!(find_first_maximum(&d, &SenderState::ground_site(), 0.0, 0.05).is_err());
        assert!(find_first_maximum(&d, &SenderState::ground_site(), 5.0, -0.1).is_err());
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, y, w) = golden_section_max(&|x: f64| 1.0 - (x - 0.37).powi(2), 0.0, 1.0, 1e-10);
        // a flat maximum only pins x to about sqrt(machine epsilon)
        assert_abs_diff_eq!(x, 0.37, epsilon = 1e-7);
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-15);
        assert!(w <= 1e-10);
    }

    #[test]
    fn fit_recovers_synthetic_coefficients() {
        let grid = default_phi_grid();
        let data: Vec<f64> = grid
            .iter()
            .map(|&p| exponential_model(2.232, -0.03, 1.031, p))
            .collect();
        let fit = fit_exponential(&grid, &data).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.a_n, 2.232, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.b_n, -0.03, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.c_n, 1.031, epsilon = 1e-6);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn fit_flags_constant_data() {
        let grid = default_phi_grid();
        let fit = fit_exponential(&grid, &vec![0.7; grid.len()]).unwrap();
        assert!(!fit.converged);
        assert!(fit.residual.is_finite());
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_exponential(&[0.0, 0.1, 0.2], &[0.1, 0.2, 0.3]).is_err());
        assert!(fit_exponential(&[0.0, 0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn limiting_curve_values() {
        // 40-digit reference evaluations
        assert_abs_diff_eq!(
            limiting_curve(0.0),
            0.000_545_466_046_483_062,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            limiting_curve(0.25),
            0.852_471_798_867_400_6,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            limiting_curve(0.5),
            1.000_069_650_771_142_5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn boundary_recipe_reproduces_rounded_coefficients() {
        let (b, c) = limiting_boundary_coefficients(2.232);
        assert_abs_diff_eq!(b, -0.03, epsilon = 1e-3);
        assert_abs_diff_eq!(c, 1.031, epsilon = 1e-3);
        assert_abs_diff_eq!(exponential_model(2.232, b, c, 0.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(exponential_model(2.232, b, c, 0.5), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn regression_on_exact_power_law() {
        let x: Vec<f64> = [50.0f64, 100.0, 150.0, 200.0]
            .iter()
            .map(|v| v.ln())
            .collect();
        let y: Vec<f64> = x.iter().map(|v| 0.75 * v + 1.5).collect();
        let (slope, intercept, r2) = linear_regression(&x, &y);
        assert_abs_diff_eq!(slope, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(intercept, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ekert_transfer_time_scales_as_square_root() {
        // t0 = pi sqrt(N - 1) exactly; the exponent tends to 1/2
        let x: Vec<f64> = [1000.0f64, 2000.0, 4000.0, 8000.0]
            .iter()
            .map(|v| v.ln())
            .collect();
        let y: Vec<f64> = [1000.0f64, 2000.0, 4000.0, 8000.0]
            .iter()
            .map(|n| (PI * (n - 1.0).sqrt()).ln())
            .collect();
        let (gamma, _, _) = linear_regression(&x, &y);
        assert_abs_diff_eq!(gamma, 0.5, epsilon = 1e-3);
    }

    #[test]
    fn scaling_needs_four_lengths() {
        assert!(scaling_exponent(0.5, &[20, 30, 40], &SenderState::ground_site()).is_err());
    }
}
