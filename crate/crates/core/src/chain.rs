//! XY chain in the one-excitation sector.
//!
//! The Hamiltonian `H = sum_i D_i (I_ix I_(i+1)x + I_iy I_(i+1)y)` with spin-1/2
//! operators `I = sigma / 2` conserves the total z-projection, so a single
//! flipped spin stays in the `N`-dimensional span of `|1>, ..., |N>`. There the
//! Hamiltonian is tridiagonal with zero diagonal and hopping `D_k / 2` between
//! sites `k` and `k + 1`.
//!
//! The factor 1/2 is not written out anywhere in the model's usual statement;
//! it follows from `I_x I_x + I_y I_y = (sigma_+ sigma_- + sigma_- sigma_+) / 2`
//! and is pinned by the Ekert profile: its spectrum is equally spaced with gap
//! `1 / sqrt(N - 1)`, giving perfect mirror transfer at `t = pi sqrt(N - 1)`,
//! which is 13.69 for `N = 20`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smallest admissible chain: sender (sites 1..3) and receiver (N-1, N) must not overlap.
pub const MIN_CHAIN_LENGTH: usize = 5;

/// Minimum spacing between adjacent eigenvalues before the spectrum is considered degenerate.
pub const MIN_EIGEN_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainSpec {
    pub n: usize,
    pub phi: f64,
}

impl ChainSpec {
    pub fn new(n: usize, phi: f64) -> Result<Self> {
        let spec = ChainSpec { n, phi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_CHAIN_LENGTH {
            return Err(Error::InvalidSpec(format!(
                "chain length {} is below {MIN_CHAIN_LENGTH}",
                self.n
            )));
        }
        if !(self.phi.is_finite() && (0.0..=0.5).contains(&self.phi)) {
            return Err(Error::InvalidSpec(format!(
                "phi = {} is outside [0, 0.5]",
                self.phi
            )));
        }
        Ok(())
    }
}

/// Exchange constants `D_1 .. D_{N-1}`; `d[i - 1]` couples sites `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingProfile {
    pub spec: ChainSpec,
    pub d: Vec<f64>,
}

impl CouplingProfile {
    /// Coupling between sites `i` and `i + 1` (1-based).
    pub fn coupling(&self, i: usize) -> f64 {
        self.d[i - 1]
    }
}

/// Inhomogeneous couplings interpolating between `D_i = 1` (`phi = 0`) and
/// `D_i = sqrt(i (N - i) / (N - 1))` (`phi = 1/2`).
pub fn coupling_profile(spec: ChainSpec) -> Result<CouplingProfile> {
    spec.validate()?;
    let n = spec.n as f64;
    let (sin, cos) = (spec.phi * PI).sin_cos();
    let root = (n - 1.0).sqrt();
    let norm = root * (cos + sin);
    let d = (1..spec.n)
        .map(|i| {
            let i = i as f64;
            (root * cos + sin * (i * (n - i)).sqrt()) / norm
        })
        .collect();
    Ok(CouplingProfile { spec, d })
}

/// Real symmetric tridiagonal Hamiltonian of the one-excitation sector.
pub fn hamiltonian_matrix(profile: &CouplingProfile) -> DMatrix<f64> {
    let n = profile.spec.n;
    let mut h = DMatrix::zeros(n, n);
    for (k, &dk) in profile.d.iter().enumerate() {
        h[(k, k + 1)] = 0.5 * dk;
        h[(k + 1, k)] = 0.5 * dk;
    }
    h
}

/// Eigen-decomposition `H = V diag(lambda) V^T`.
///
/// Eigenvalues are ascending; each eigenvector is signed so that its
/// largest-magnitude entry is positive (first such entry on ties).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub spec: ChainSpec,
    pub eigenvalues: Vec<f64>,
    /// Column `m` is the eigenvector of `eigenvalues[m]` in the site basis.
    pub eigenvectors: DMatrix<f64>,
}

pub fn spectral_decomposition(profile: &CouplingProfile) -> Result<SpectralDecomposition> {
    profile.spec.validate()?;
    decompose(profile.spec, hamiltonian_matrix(profile))
}

fn decompose(spec: ChainSpec, h: DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&m| eig.eigenvalues[m]).collect();
    if let Some(w) = eigenvalues
        .windows(2)
        .find(|w| w[1] - w[0] <= MIN_EIGEN_GAP)
    {
        return Err(Error::NumericalFailure(format!(
            "degenerate spectrum: eigenvalues {} and {} closer than {MIN_EIGEN_GAP}",
            w[0], w[1]
        )));
    }

    let mut eigenvectors = DMatrix::zeros(n, n);
    for (col, &m) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(m);
        let mut pivot = 0;
        for k in 1..n {
            if v[k].abs() > v[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(col, &(v * sign));
    }

    Ok(SpectralDecomposition {
        spec,
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |k, m| v[(k, m)] * self.eigenvalues[m]);
        scaled * v.transpose()
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&lambda| Complex64::from_polar(1.0, -lambda * t))
            .collect()
    }

    /// Single transition amplitude `<k| e^{-iHt} |j>`, sites 1-based. O(N).
    pub fn amplitude(&self, k: usize, j: usize, t: f64) -> Complex64 {
        let v = &self.eigenvectors;
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(m, &lambda)| Complex64::from_polar(v[(k - 1, m)] * v[(j - 1, m)], -lambda * t))
            .sum()
    }

    /// Amplitudes from the sender sites `1, 2, 3` to the receiver sites
    /// `N - 1` (row 0) and `N` (row 1). O(N) per call.
    pub fn receiver_block(&self, t: f64) -> [[Complex64; 3]; 2] {
        let n = self.n();
        let v = &self.eigenvectors;
        let mut block = [[Complex64::new(0.0, 0.0); 3]; 2];
        for (m, phase) in self.phases(t).into_iter().enumerate() {
            for (row, site) in [n - 2, n - 1].into_iter().enumerate() {
                let left = phase * v[(site, m)];
                for (col, cell) in block[row].iter_mut().enumerate() {
                    *cell += left * v[(col, m)];
                }
            }
        }
        block
    }

    /// `e^{-iHt} psi` for a state given in the site basis.
    pub fn evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let n = self.n();
        let v = &self.eigenvectors;
        let phases = self.phases(t);
        let coeffs: Vec<Complex64> = (0..n)
            .map(|m| phases[m] * (0..n).map(|j| psi[j] * v[(j, m)]).sum::<Complex64>())
            .collect();
        (0..n)
            .map(|k| (0..n).map(|m| coeffs[m] * v[(k, m)]).sum())
            .collect()
    }
}

/// Full propagator in the one-excitation sector at time `t`.
#[derive(Debug, Clone)]
pub struct AmplitudeMatrix {
    pub t: f64,
    /// Entry `(k - 1, j - 1)` is `p_kj(t) = <k| e^{-iHt} |j>`.
    pub p: DMatrix<Complex64>,
}

impl AmplitudeMatrix {
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// `p_kj`, sites 1-based.
    pub fn get(&self, k: usize, j: usize) -> Complex64 {
        self.p[(k - 1, j - 1)]
    }

    /// `r_kj = |p_kj|`.
    pub fn magnitude(&self, k: usize, j: usize) -> f64 {
        self.get(k, j).norm()
    }

    /// `chi_kj` in `[0, 1)` with `p_kj = r_kj e^{2 pi i chi_kj}`.
    pub fn phase(&self, k: usize, j: usize) -> f64 {
        (self.get(k, j).arg() / (2.0 * PI)).rem_euclid(1.0)
    }
}

/// `p_kj(t) = sum_m V_km e^{-i lambda_m t} V_jm`. Negative `t` runs the chain backwards.
pub fn amplitudes(decomp: &SpectralDecomposition, t: f64) -> AmplitudeMatrix {
    let n = decomp.n();
    let v = &decomp.eigenvectors;
    let phases = decomp.phases(t);
    let left = DMatrix::from_fn(n, n, |k, m| phases[m] * v[(k, m)]);
    let right = v.transpose().map(|x| Complex64::new(x, 0.0));
    AmplitudeMatrix { t, p: left * right }
}
