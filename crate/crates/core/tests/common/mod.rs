//! Brute-force reference: the XY chain on the full 2^N Hilbert space.
//!
//! Site `s` (1-based) is bit `s - 1` of the basis index; bit set means the
//! spin is excited. The Hamiltonian is applied term by term from explicit
//! Pauli operators, `D_i (I_x I_x + I_y I_y) = D_i / 4 (X X + Y Y)`, and the
//! propagator is a sliced Taylor series, so nothing here goes through the
//! one-excitation reduction or an eigensolver.

#![allow(dead_code)]

use nalgebra::Matrix4;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy)]
enum Pauli {
    X,
    Y,
}

/// `sigma |bit>` = `factor |bit ^ 1>`.
fn pauli_factor(op: Pauli, bit: bool) -> Complex64 {
    match (op, bit) {
        (Pauli::X, _) => Complex64::new(1.0, 0.0),
        (Pauli::Y, false) => I,
        (Pauli::Y, true) => -I,
    }
}

pub struct FullChain {
    pub n: usize,
    pub couplings: Vec<f64>,
}

impl FullChain {
    pub fn new(couplings: &[f64]) -> Self {
        FullChain {
            n: couplings.len() + 1,
            couplings: couplings.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn apply_hamiltonian(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; psi.len()];
        for (bond, &d) in self.couplings.iter().enumerate() {
            let (i, j) = (bond, bond + 1);
            for op in [Pauli::X, Pauli::Y] {
                for (x, &amp) in psi.iter().enumerate() {
                    if amp == ZERO {
                        continue;
                    }
                    let bi = x >> i & 1 == 1;
                    let bj = x >> j & 1 == 1;
                    let factor = pauli_factor(op, bi) * pauli_factor(op, bj);
                    let y = x ^ (1 << i) ^ (1 << j);
                    out[y] += amp * factor * (d / 4.0);
                }
            }
        }
        out
    }

    fn norm_bound(&self) -> f64 {
        self.couplings
            .iter()
            .map(|d| d.abs() / 2.0)
            .sum::<f64>()
            .max(1e-12)
    }

    /// `e^{-iHt} psi` by Taylor series over slices with `|H| dt <= 1/2`.
    pub fn evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let slices = ((t.abs() * self.norm_bound()) / 0.5).ceil().max(1.0) as usize;
        let dt = t / slices as f64;
        let mut state = psi.to_vec();
        for _ in 0..slices {
            let mut term = state.clone();
            let mut acc = state.clone();
            for k in 1..60 {
                let h_term = self.apply_hamiltonian(&term);
                let scale = -I * dt / k as f64;
                term = h_term.into_iter().map(|v| v * scale).collect();
                let size: f64 = term.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                for (a, v) in acc.iter_mut().zip(&term) {
                    *a += v;
                }
                if size < 1e-20 {
                    break;
                }
            }
            state = acc;
        }
        state
    }

    /// Basis index of the one-excitation state on `site` (1-based).
    pub fn site_index(site: usize) -> usize {
        1 << (site - 1)
    }

    pub fn one_excitation(&self, amplitudes: &[(usize, Complex64)]) -> Vec<Complex64> {
        let mut psi = vec![ZERO; self.dim()];
        for &(site, a) in amplitudes {
            psi[Self::site_index(site)] += a;
        }
        psi
    }

    /// `<k| e^{-iHt} |j>` from a full-space evolution.
    pub fn transition_amplitude(&self, k: usize, j: usize, t: f64) -> Complex64 {
        let psi = self.one_excitation(&[(j, Complex64::new(1.0, 0.0))]);
        self.evolve(&psi, t)[Self::site_index(k)]
    }

    /// Reduced state of sites N-1, N in the basis `|0>, |N-1>, |N>, |N (N-1)>`.
    pub fn receiver_density(&self, psi: &[Complex64]) -> Matrix4<Complex64> {
        let (bit_nm1, bit_n) = (self.n - 2, self.n - 1);
        let local = |x: usize| (x >> bit_nm1 & 1) | ((x >> bit_n & 1) << 1);
        let rest_mask = !((1usize << bit_nm1) | (1usize << bit_n));
        let mut rho = Matrix4::from_element(ZERO);
        for (x, &ax) in psi.iter().enumerate() {
            if ax == ZERO {
                continue;
            }
            for (y, &ay) in psi.iter().enumerate() {
                if x & rest_mask == y & rest_mask {
                    rho[(local(x), local(y))] += ax * ay.conj();
                }
            }
        }
        rho
    }
}

/// Von Neumann entropy in bits from a Hermitian matrix's eigenvalues.
pub fn von_neumann_entropy(rho: &Matrix4<Complex64>) -> f64 {
    rho.symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > 1e-300)
        .map(|&l| -l * l.log2())
        .sum()
}
