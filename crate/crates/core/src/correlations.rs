//! Sender and receiver states and the two receiver-side discords.
//!
//! The receiver density matrix, in the basis `|0>, |N-1>, |N>, |N (N-1)>`, is
//!
//! ```text
//! | 1 - R^2   0                0            0 |
//! | 0         |f_{N-1}|^2      f_{N-1} f_N^* 0 |
//! | 0         f_{N-1}^* f_N    |f_N|^2      0 |
//! | 0         0                0            0 |
//! ```
//!
//! so both discords depend only on `R_{N-1}^2 = |f_{N-1}|^2` and `R_N^2 = |f_N|^2`.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::chain::AmplitudeMatrix;
use crate::error::{check_unit_range, Error, Result};

/// Slack allowed on `R^2 <= 1` and on square-root arguments before a value is
/// treated as corrupt rather than rounded.
pub const CLAMP_WINDOW: f64 = 1e-12;

/// Default number of `eta` grid points for [`q_r_measurement_oracle`].
pub const DEFAULT_ETA_GRID: usize = 1001;

const PARABOLIC_STEPS: usize = 3;

/// Conditional entropies closer than this are treated as equal. On product
/// and pure receiver states the objective is flat in `eta` up to ~1e-14 of
/// rounding; ties resolve to the smallest `eta` so the argmin is reproducible.
const TIE_TOLERANCE: f64 = 1e-12;

/// `x log2 x` with `0 log 0 = 0`.
fn xlog2x(x: f64) -> f64 {
    if x < 1e-300 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Shannon entropy of the distribution `(p, 1 - p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SenderState {
    pub alpha1: f64,
    pub alpha2: f64,
    pub varphi1: f64,
    pub varphi2: f64,
    /// Amplitudes on sites 1, 2, 3.
    #[serde(skip)]
    pub a: [Complex64; 3],
}

impl SenderState {
    /// The state `|1>` used for time optimisation.
    pub fn ground_site() -> Self {
        sender_state(0.0, 0.0, 0.0, 0.0).expect("zero controls are in range")
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.iter().map(Complex64::norm_sqr).sum()
    }
}

/// Sender state with control angles `alpha1, alpha2` and control phases
/// `varphi1, varphi2`, all in `[0, 1]`.
pub fn sender_state(alpha1: f64, alpha2: f64, varphi1: f64, varphi2: f64) -> Result<SenderState> {
    check_unit_range("alpha1", alpha1, 0.0, 1.0, "[0, 1]")?;
    check_unit_range("alpha2", alpha2, 0.0, 1.0, "[0, 1]")?;
    check_unit_range("varphi1", varphi1, 0.0, 1.0, "[0, 1]")?;
    check_unit_range("varphi2", varphi2, 0.0, 1.0, "[0, 1]")?;

    let (s1, c1) = (alpha1 * PI / 2.0).sin_cos();
    let (s2, c2) = (alpha2 * PI / 2.0).sin_cos();
    let a = [
        Complex64::new(c1 * c2, 0.0),
        Complex64::from_polar(c2 * s1, 2.0 * PI * varphi1),
        Complex64::from_polar(s2, 2.0 * PI * varphi2),
    ];
    Ok(SenderState {
        alpha1,
        alpha2,
        varphi1,
        varphi2,
        a,
    })
}

/// Receiver amplitudes `f_{N-1}, f_N` and their polar decomposition
/// `f = R e^{2 pi i Phi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverState {
    pub f_nm1: Complex64,
    pub f_n: Complex64,
    pub r_nm1: f64,
    pub r_n: f64,
    pub phase_nm1: f64,
    pub phase_n: f64,
    /// `R^2 = R_{N-1}^2 + R_N^2`.
    pub rsq: f64,
}

fn unit_phase(z: Complex64) -> f64 {
    (z.arg() / (2.0 * PI)).rem_euclid(1.0)
}

impl ReceiverState {
    pub fn from_amplitudes(f_nm1: Complex64, f_n: Complex64) -> Result<Self> {
        let rsq = f_nm1.norm_sqr() + f_n.norm_sqr();
        if !rsq.is_finite() || rsq > 1.0 + CLAMP_WINDOW {
            return Err(Error::Domain(format!(
                "receiver population R^2 = {rsq} exceeds 1"
            )));
        }
        Ok(ReceiverState {
            f_nm1,
            f_n,
            r_nm1: f_nm1.norm(),
            r_n: f_n.norm(),
            phase_nm1: unit_phase(f_nm1),
            phase_n: unit_phase(f_n),
            rsq,
        })
    }

    /// Real, non-negative amplitudes with the given squared magnitudes.
    pub fn from_magnitudes(rsq_nm1: f64, rsq_n: f64) -> Result<Self> {
        check_unit_range("R_{N-1}^2", rsq_nm1, 0.0, 1.0 + CLAMP_WINDOW, "[0, 1]")?;
        check_unit_range("R_N^2", rsq_n, 0.0, 1.0 + CLAMP_WINDOW, "[0, 1]")?;
        Self::from_amplitudes(
            Complex64::new(rsq_nm1.sqrt(), 0.0),
            Complex64::new(rsq_n.sqrt(), 0.0),
        )
    }

    pub fn rsq_nm1(&self) -> f64 {
        self.f_nm1.norm_sqr()
    }

    pub fn rsq_n(&self) -> f64 {
        self.f_n.norm_sqr()
    }

    /// Same magnitudes, new phases.
    pub fn with_phases(&self, phase_nm1: f64, phase_n: f64) -> Result<Self> {
        Self::from_amplitudes(
            Complex64::from_polar(self.r_nm1, 2.0 * PI * phase_nm1),
            Complex64::from_polar(self.r_n, 2.0 * PI * phase_n),
        )
    }

    /// `rho^R` in the basis `|0>, |N-1>, |N>, |N (N-1)>`.
    pub fn density_matrix(&self) -> Matrix4<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        let mut rho = Matrix4::from_element(zero);
        rho[(0, 0)] = Complex64::new(1.0 - self.rsq, 0.0);
        rho[(1, 1)] = Complex64::new(self.f_nm1.norm_sqr(), 0.0);
        rho[(1, 2)] = self.f_nm1 * self.f_n.conj();
        rho[(2, 1)] = self.f_nm1.conj() * self.f_n;
        rho[(2, 2)] = Complex64::new(self.f_n.norm_sqr(), 0.0);
        rho
    }
}

/// `f_{N-1}` and `f_N` for a sender evolved by `amps`.
pub fn receiver_state(amps: &AmplitudeMatrix, sender: &SenderState) -> Result<ReceiverState> {
    let n = amps.n();
    let f = |row: usize| -> Complex64 { (1..=3).map(|j| sender.a[j - 1] * amps.get(row, j)).sum() };
    ReceiverState::from_amplitudes(f(n - 1), f(n))
}

/// Receiver state from the 2x3 sender-to-receiver block of the propagator
/// (row 0 is site `N - 1`, row 1 is site `N`).
pub fn receiver_from_block(
    block: &[[Complex64; 3]; 2],
    sender: &SenderState,
) -> Result<ReceiverState> {
    let f = |row: usize| -> Complex64 { (0..3).map(|j| sender.a[j] * block[row][j]).sum() };
    ReceiverState::from_amplitudes(f(0), f(1))
}

fn clamp_population(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Discord between the receiver and the rest of the chain:
/// `-R^2 log2 R^2 - (1 - R^2) log2 (1 - R^2)`.
pub fn q_ext(state: &ReceiverState) -> f64 {
    q_ext_from_rsq(state.rsq)
}

pub fn q_ext_from_rsq(rsq: f64) -> f64 {
    binary_entropy(clamp_population(rsq))
}

/// Discord with the measurement on node N, closed form (`eta = 0`).
///
/// `rsq_nm1`, `rsq_n` are the populations of nodes N-1 and N.
fn q_measured_on_n(rsq_nm1: f64, rsq_n: f64) -> Result<f64> {
    let rsq = clamp_population(rsq_nm1 + rsq_n);
    let arg = 1.0 - 4.0 * rsq_n * (1.0 - rsq);
    if arg < -CLAMP_WINDOW {
        return Err(Error::Domain(format!(
            "1 - 4 R_N^2 (1 - R^2) = {arg} is negative (R_N^2 = {rsq_n}, R^2 = {rsq})"
        )));
    }
    let s = arg.clamp(0.0, 1.0).sqrt();
    Ok(1.0 + binary_entropy(clamp_population(rsq_nm1))
        - binary_entropy(rsq)
        - 0.5 * xlog2x(1.0 - s)
        - 0.5 * xlog2x(1.0 + s))
}

/// Discord between the two receiver qubits, `min(Q_N, Q_{N-1})`.
pub fn q_r_closed_form(state: &ReceiverState) -> Result<f64> {
    q_r_from_magnitudes(state.rsq_nm1(), state.rsq_n())
}

pub fn q_r_from_magnitudes(rsq_nm1: f64, rsq_n: f64) -> Result<f64> {
    let q_n = q_measured_on_n(rsq_nm1, rsq_n)?;
    let q_nm1 = q_measured_on_n(rsq_n, rsq_nm1)?;
    Ok(q_n.min(q_nm1))
}

/// Result of the explicit minimisation over projective measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleDiscord {
    pub q_r: f64,
    /// Measurement on node N.
    pub q_n: f64,
    /// Measurement on node N-1.
    pub q_nm1: f64,
    /// Minimising `eta` for each side.
    pub eta_n: f64,
    pub eta_nm1: f64,
}

/// Conditional entropy `p_0 S_0 + p_1 S_1` after measuring node N with
/// parameter `eta`; `rho_m` and `rho_n` are the populations of N-1 and N.
fn conditional_entropy(rho_m: f64, rho_n: f64, eta: f64) -> f64 {
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let p = 0.5 * (1.0 + sign * eta * (1.0 - 2.0 * rho_m));
        if p <= 1e-300 {
            continue;
        }
        let shifted = 1.0 - 2.0 * rho_n + sign * eta * (1.0 - 2.0 * (rho_m + rho_n));
        let radicand = (1.0 - eta * eta) * rho_m * rho_n + 0.25 * shifted * shifted;
        let theta = (radicand.max(0.0).sqrt() / p).min(1.0);
        let s = -xlog2x((1.0 - theta) / 2.0) - xlog2x((1.0 + theta) / 2.0);
        total += p * s;
    }
    total
}

/// Dense grid on `[0, 1]` followed by successive parabolic interpolation
/// around the best node. Returns `(argmin, min)`; among near-equal minima
/// the smallest argument wins.
fn minimise_on_unit_interval(f: impl Fn(f64) -> f64, grid: usize) -> (f64, f64) {
    let h = 1.0 / (grid - 1) as f64;
    let values: Vec<f64> = (0..grid).map(|k| f(k as f64 * h)).collect();
    let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
    let best = values
        .iter()
        .position(|&v| v <= lowest + TIE_TOLERANCE)
        .unwrap();

    let centre = best.clamp(1, grid - 2);
    let mut pts = [
        ((centre - 1) as f64 * h, values[centre - 1]),
        (centre as f64 * h, values[centre]),
        ((centre + 1) as f64 * h, values[centre + 1]),
    ];
    let (lo, hi) = (pts[0].0, pts[2].0);
    let mut best_pt = (best as f64 * h, values[best]);

    for _ in 0..PARABOLIC_STEPS {
        let [(x0, y0), (x1, y1), (x2, y2)] = pts;
        let denom = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        if denom.abs() < 1e-300 {
            break;
        }
        let numer = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
        let x = (x1 - 0.5 * numer / denom).clamp(lo, hi);
        let y = f(x);
        if y < best_pt.1 - TIE_TOLERANCE {
            best_pt = (x, y);
        }
        // drop the worst of the four points, keep the rest sorted
        let mut all = [pts[0], pts[1], pts[2], (x, y)];
        all.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut keep = [all[0], all[1], all[2]];
        keep.sort_by(|a, b| a.0.total_cmp(&b.0));
        if keep[0].0 == keep[1].0 || keep[1].0 == keep[2].0 {
            break;
        }
        pts = keep;
    }
    best_pt
}

fn measured_discord(rho_m: f64, rho_n: f64, grid: usize) -> (f64, f64) {
    let rho_m = clamp_population(rho_m);
    let rho_n = clamp_population(rho_n);
    let lambda0 = clamp_population(rho_m + rho_n);
    // reduced entropies as labelled in the measurement formulas
    let s_reduced_nm1 = binary_entropy(rho_n);
    let s_reduced_n = binary_entropy(rho_m);
    let mutual = s_reduced_nm1 + s_reduced_n + xlog2x(lambda0) + xlog2x(1.0 - lambda0);
    let (eta, min_cond) =
        minimise_on_unit_interval(|eta| conditional_entropy(rho_m, rho_n, eta), grid);
    let classical = s_reduced_nm1 - min_cond;
    (mutual - classical, eta)
}

/// `Q_R` by explicit minimisation of the conditional entropy over the
/// measurement parameter `eta`, on both receiver nodes.
pub fn q_r_measurement_oracle(
    state: &ReceiverState,
    eta_grid_size: usize,
) -> Result<OracleDiscord> {
    if eta_grid_size < 101 {
        return Err(Error::InvalidInput(format!(
            "eta grid needs at least 101 points, got {eta_grid_size}"
        )));
    }
    let (m, n) = (state.rsq_nm1(), state.rsq_n());
    for (a, b) in [(m, n), (n, m)] {
        let arg = 1.0 - 4.0 * b * (1.0 - (a + b).min(1.0));
        if arg < -CLAMP_WINDOW {
            return Err(Error::Domain(format!(
                "1 - 4 R^2_i (1 - R^2) = {arg} is negative"
            )));
        }
    }
    let (q_n, eta_n) = measured_discord(m, n, eta_grid_size);
    let (q_nm1, eta_nm1) = measured_discord(n, m, eta_grid_size);
    Ok(OracleDiscord {
        q_r: q_n.min(q_nm1),
        q_n,
        q_nm1,
        eta_n,
        eta_nm1,
    })
}

/// Both discords and the populations they were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscordPair {
    pub q_ext: f64,
    pub q_r: f64,
    pub rsq: f64,
    pub rsq_nm1: f64,
    pub rsq_n: f64,
}

impl DiscordPair {
    pub fn of(state: &ReceiverState) -> Result<Self> {
        Ok(DiscordPair {
            q_ext: q_ext(state),
            q_r: q_r_closed_form(state)?,
            rsq: state.rsq,
            rsq_nm1: state.rsq_nm1(),
            rsq_n: state.rsq_n(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub r_sq: f64,
    pub r_nm1_sq: f64,
    pub q_ext: f64,
    pub q_r: f64,
}

/// For each fixed `R_{N-1}^2`, sweep `R^2` over `[R_{N-1}^2, 1]` in `samples`
/// points. The family `R_{N-1}^2 = 1` collapses to the single point `R^2 = 1`.
pub fn discord_curves(r_nm1_sq_values: &[f64], samples: usize) -> Result<Vec<CurveRow>> {
    if samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let mut rows = Vec::new();
    for &fixed in r_nm1_sq_values {
        check_unit_range("R_{N-1}^2", fixed, 0.0, 1.0, "[0, 1]")?;
        let count = if fixed == 1.0 { 1 } else { samples };
        for k in 0..count {
            let r_sq = if count == 1 {
                1.0
            } else {
                fixed + (1.0 - fixed) * k as f64 / (count - 1) as f64
            };
            let rsq_n = (r_sq - fixed).max(0.0);
            rows.push(CurveRow {
                r_sq,
                r_nm1_sq: fixed,
                q_ext: q_ext_from_rsq(r_sq),
                q_r: q_r_from_magnitudes(fixed, rsq_n)?,
            });
        }
    }
    Ok(rows)
}

/// `R_{N-1}^2 = 0, 0.1, ..., 1`.
pub fn default_curve_families() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}
