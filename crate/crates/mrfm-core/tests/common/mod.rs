//! Independent oracles shared by the integration suites: a brute-force
//! two-level Schrödinger integrator, a dense matrix exponential, and
//! standalone state-vector gate arithmetic. Nothing here calls back into the
//! code paths under test.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Flip probability of a two-level spin under a rectangular drive, by RK4
/// integration of iψ' = 2π H ψ with H = (f_R/2)σx − (δ/2)σz.
pub fn two_level_flip_probability(delta_hz: f64, rabi_hz: f64, duration_s: f64) -> f64 {
    let omega = (delta_hz * delta_hz + rabi_hz * rabi_hz).sqrt();
    let cycles = omega * duration_s;
    let steps = ((cycles * 5000.0).ceil() as usize).max(50_000);
    let dt = duration_s / steps as f64;
    let h = [
        Complex64::new(-delta_hz / 2.0, 0.0),
        Complex64::new(rabi_hz / 2.0, 0.0),
        Complex64::new(rabi_hz / 2.0, 0.0),
        Complex64::new(delta_hz / 2.0, 0.0),
    ];
    let deriv = |psi: [Complex64; 2]| {
        let minus_i_2pi = Complex64::new(0.0, -TAU);
        [
            minus_i_2pi * (h[0] * psi[0] + h[1] * psi[1]),
            minus_i_2pi * (h[2] * psi[0] + h[3] * psi[1]),
        ]
    };
    let mut psi = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    for _ in 0..steps {
        let k1 = deriv(psi);
        let k2 = deriv([psi[0] + 0.5 * dt * k1[0], psi[1] + 0.5 * dt * k1[1]]);
        let k3 = deriv([psi[0] + 0.5 * dt * k2[0], psi[1] + 0.5 * dt * k2[1]]);
        let k4 = deriv([psi[0] + dt * k3[0], psi[1] + dt * k3[1]]);
        psi[0] += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        psi[1] += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    psi[1].norm_sqr()
}

/// exp(A) for a square complex matrix by scaling-and-squaring with a Taylor
/// series.
pub fn expm(a: &[Complex64], dim: usize) -> Vec<Complex64> {
    let norm = (0..dim)
        .map(|r| (0..dim).map(|c| a[r * dim + c].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = 2.0f64.powi(squarings as i32);
    let scaled: Vec<Complex64> = a.iter().map(|x| x / scale).collect();

    let mut result = identity(dim);
    let mut term = identity(dim);
    for order in 1..=40 {
        term = mat_mul(&term, &scaled, dim);
        for entry in term.iter_mut() {
            *entry /= order as f64;
        }
        for (r, t) in result.iter_mut().zip(term.iter()) {
            *r += t;
        }
        let magnitude: f64 = term.iter().map(|x| x.norm()).sum();
        if magnitude < 1e-30 {
            break;
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result, dim);
    }
    result
}

pub fn identity(dim: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        m[i * dim + i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for k in 0..dim {
            let av = a[r * dim + k];
            if av.norm_sqr() == 0.0 {
                continue;
            }
            for c in 0..dim {
                out[r * dim + c] += av * b[k * dim + c];
            }
        }
    }
    out
}

pub fn mat_vec(a: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    let dim = v.len();
    (0..dim)
        .map(|r| (0..dim).map(|c| a[r * dim + c] * v[c]).sum())
        .collect()
}

/// Rotating-frame generator of a global rectangular pulse on an Ising chain:
/// diagonal energies (site frequencies, couplings, carrier) plus the drive on
/// every site. `site_frequencies` must already include any probe shift.
/// Returns −i·2π·H·τ ready for `expm`.
pub fn ising_pulse_generator(
    site_frequencies: &[f64],
    couplings: &[f64],
    carrier_hz: f64,
    rabi_hz: f64,
    duration_s: f64,
) -> Vec<Complex64> {
    let n = site_frequencies.len();
    let dim = 1 << n;
    let mut h = vec![Complex64::new(0.0, 0.0); dim * dim];
    let sign = |index: usize, site: usize| {
        if index & (1 << site) == 0 {
            1.0
        } else {
            -1.0
        }
    };
    for index in 0..dim {
        let mut energy = 0.0;
        for (site, f0) in site_frequencies.iter().enumerate() {
            energy += (carrier_hz - f0) * sign(index, site) / 2.0;
        }
        for (bond, j) in couplings.iter().enumerate() {
            energy -= j / 2.0 * sign(index, bond) * sign(index, bond + 1);
        }
        h[index * dim + index] = Complex64::new(energy, 0.0);
        for site in 0..n {
            let flipped = index ^ (1 << site);
            h[index * dim + flipped] += Complex64::new(rabi_hz / 2.0, 0.0);
        }
    }
    let factor = Complex64::new(0.0, -TAU * duration_s);
    h.iter().map(|x| factor * x).collect()
}

// ---- standalone state-vector gate arithmetic -------------------------------

pub fn apply_single_qubit(state: &mut [Complex64], site: usize, u: [[Complex64; 2]; 2]) {
    let mask = 1usize << site;
    for lower in 0..state.len() {
        if lower & mask != 0 {
            continue;
        }
        let upper = lower | mask;
        let a = state[lower];
        let b = state[upper];
        state[lower] = u[0][0] * a + u[0][1] * b;
        state[upper] = u[1][0] * a + u[1][1] * b;
    }
}

/// The ideal-mode x-rotation convention: e^{iθ/2} exp(−iθσx/2), so π is
/// exactly X and 2π the identity.
pub fn ideal_x_rotation(theta: f64) -> [[Complex64; 2]; 2] {
    let phase = Complex64::from_polar(1.0, theta / 2.0);
    let (sin, cos) = (theta / 2.0).sin_cos();
    let diag = phase * cos;
    let off = phase * Complex64::new(0.0, -sin);
    [[diag, off], [off, diag]]
}

/// Flip `target` on the components where `control` is in the ground state.
pub fn apply_inverse_cn(state: &mut [Complex64], control: usize, target: usize) {
    let cmask = 1usize << control;
    let tmask = 1usize << target;
    for index in 0..state.len() {
        if index & cmask == 0 && index & tmask == 0 {
            state.swap(index, index | tmask);
        }
    }
}

/// Flip `target` on the components where `control` is excited.
pub fn apply_cn_on_excited(state: &mut [Complex64], control: usize, target: usize) {
    let cmask = 1usize << control;
    let tmask = 1usize << target;
    for index in 0..state.len() {
        if index & cmask != 0 && index & tmask == 0 {
            state.swap(index, index | tmask);
        }
    }
}

pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    overlap.norm_sqr()
}

pub fn random_state(qubits: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex64> = (0..1usize << qubits)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm: f64 = raw.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|x| x / norm).collect()
}

/// Random product state over `qubits` sites.
pub fn random_product_state(qubits: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..qubits {
        let theta = rng.random::<f64>() * std::f64::consts::PI;
        let phi = rng.random::<f64>() * TAU;
        let amp0 = Complex64::new((theta / 2.0).cos(), 0.0);
        let amp1 = Complex64::from_polar((theta / 2.0).sin(), phi);
        let mut next = Vec::with_capacity(state.len() * 2);
        // site index grows with significance: new site occupies the high bit
        for &existing in &state {
            next.push(existing * amp0);
        }
        for &existing in &state {
            next.push(existing * amp1);
        }
        state = next;
    }
    state
}
