//! Jordan–Wigner realization of the doubled Majorana system.
//!
//! `2N` Majoranas live on `N` qubits in blocked order: `χ_j = ψ_j` for
//! `j < N` and `χ_{N+j} = ξ_j`. With `P_k = √2·χ_k`,
//!
//! ```text
//! P_{2m}   = Z_0 … Z_{m−1} X_m
//! P_{2m+1} = Z_0 … Z_{m−1} Y_m
//! ```
//!
//! so the left modes act only on qubits `0..N/2` (the low bits of a basis
//! index) and the right modes on the rest, up to even strings of `Z`.

use serde::{Deserialize, Serialize};

use crate::C64;

/// `i^phase · X^x Z^z`, with `X` applied before `Z` on each qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub phase: u8,
    pub x: u32,
    pub z: u32,
}

pub(crate) fn i_pow(e: u8) -> C64 {
    match e & 3 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString {
        phase: 0,
        x: 0,
        z: 0,
    };

    pub fn mul(self, rhs: PauliString) -> PauliString {
        let swap = 2 * ((self.z & rhs.x).count_ones() as u8 & 1);
        PauliString {
            phase: (self.phase + rhs.phase + swap) & 3,
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
        }
    }

    pub fn coefficient(self) -> C64 {
        i_pow(self.phase)
    }

    /// `out += scale · self · v`.
    pub fn apply_add(self, v: &[C64], scale: C64, out: &mut [C64]) {
        let c = scale * self.coefficient();
        for (b, &amp) in v.iter().enumerate() {
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let sign = if (self.z & b as u32).count_ones() % 2 == 1 {
                -c
            } else {
                c
            };
            out[b ^ self.x as usize] += sign * amp;
        }
    }

    pub fn apply(self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.apply_add(v, C64::new(1.0, 0.0), &mut out);
        out
    }
}

/// Pauli form of `P_k = √2·χ_k`.
pub fn majorana_pauli(k: usize) -> PauliString {
    let m = k / 2;
    let low = (1u32 << m) - 1;
    let bit = 1u32 << m;
    if k % 2 == 0 {
        PauliString {
            phase: 0,
            x: bit,
            z: low,
        }
    } else {
        // Y = i X Z
        PauliString {
            phase: 1,
            x: bit,
            z: low | bit,
        }
    }
}

/// Majorana string `Ψ_{v_L,v_R}` over `n` left and `n` right modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MajoranaString {
    pub n: usize,
    pub v_l: u32,
    pub v_r: u32,
}

impl MajoranaString {
    pub fn new(n: usize, v_l: u32, v_r: u32) -> Self {
        debug_assert!(n <= 16);
        Self { n, v_l, v_r }
    }

    /// Total weight `v_t = |v_L| + |v_R|`.
    pub fn weight(&self) -> u32 {
        self.v_l.count_ones() + self.v_r.count_ones()
    }

    /// `n = (|v_L| + 1)·|v_R|`.
    pub fn phase_exponent(&self) -> u32 {
        (self.v_l.count_ones() + 1) * self.v_r.count_ones()
    }

    /// Combined `2N`-bit selector, left bits low.
    pub fn bits(&self) -> u64 {
        self.v_l as u64 | ((self.v_r as u64) << self.n)
    }

    /// `i^{v_t(v_t−1)/2} · P_{k_1} ⋯ P_{k_m}` with ascending `k`.
    pub fn pauli(&self) -> PauliString {
        let bits = self.bits();
        let mut acc = PauliString::IDENTITY;
        for k in 0..2 * self.n {
            if bits >> k & 1 == 1 {
                acc = acc.mul(majorana_pauli(k));
            }
        }
        let m = self.weight();
        acc.phase = (acc.phase as u32 + m * m.saturating_sub(1) / 2) as u8 & 3;
        acc
    }
}

/// Dense `2^N × 2^N` matrix of a Pauli string (row-major), for tests and
/// small-N checks.
pub fn dense_pauli(p: PauliString, n_qubits: usize) -> Vec<Vec<C64>> {
    let dim = 1usize << n_qubits;
    let mut m = vec![vec![C64::new(0.0, 0.0); dim]; dim];
    let c = p.coefficient();
    for b in 0..dim {
        let sign = if (p.z & b as u32).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        m[b ^ p.x as usize][b] = c * sign;
    }
    m
}
