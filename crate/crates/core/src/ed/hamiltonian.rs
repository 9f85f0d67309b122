use faer::{Mat, Side as FaerSide};

use super::couplings::CouplingTensor;
use super::majorana::{MajoranaString, PauliString};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Hermitian Pauli terms `Σ_c J_c·2^{−q/2}·Ψ_c` of the SYK Hamiltonian on
/// one side. The string phase `i^{q(q−1)/2}` is exactly the Hamiltonian's.
pub fn hamiltonian_terms(c: &CouplingTensor, side: Side) -> Vec<(PauliString, f64)> {
    let scale = 2f64.powf(-(c.q as f64) / 2.0);
    c.entries
        .iter()
        .map(|e| {
            let s = match side {
                Side::Left => MajoranaString::new(c.n, e.mask(), 0),
                Side::Right => MajoranaString::new(c.n, 0, e.mask()),
            };
            (s.pauli(), e.value * scale)
        })
        .collect()
}

fn dense_from_terms(terms: &[(PauliString, f64)], n_qubits: usize) -> Mat<C64> {
    let dim = 1usize << n_qubits;
    let mut m = Mat::<C64>::zeros(dim, dim);
    for &(p, w) in terms {
        let c = p.coefficient() * w;
        for b in 0..dim {
            let sign = if (p.z & b as u32).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            m[(b ^ p.x as usize, b)] += c * sign;
        }
    }
    m
}

/// Dense Hamiltonian on the full doubled space of dimension `2^N`.
pub fn build_hamiltonian(c: &CouplingTensor, side: Side) -> Result<Mat<C64>> {
    if c.n > 10 {
        return Err(Error::TooLarge {
            n: c.n,
            limit: 10,
            what: "dense doubled-space Hamiltonian",
        });
    }
    Ok(dense_from_terms(&hamiltonian_terms(c, side), c.n))
}

/// Left Hamiltonian restricted to its own `2^{N/2}`-dimensional factor,
/// diagonalized once. On the doubled space `H = H_L ⊗ 1` with the left
/// factor on the low qubits.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub n: usize,
    pub matrix: Mat<C64>,
    pub energies: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl Hamiltonian {
    pub fn new(c: &CouplingTensor) -> Result<Self> {
        if c.n % 2 != 0 || c.n > 16 {
            return Err(Error::InvalidParameter(format!(
                "N must be even and at most 16, got {}",
                c.n
            )));
        }
        let matrix = dense_from_terms(&hamiltonian_terms(c, Side::Left), c.n / 2);
        let eig = matrix
            .self_adjoint_eigen(FaerSide::Lower)
            .map_err(|_| Error::Eigen)?;
        let s = eig.S().column_vector();
        let energies = (0..matrix.nrows()).map(|i| s[i].re).collect();
        Ok(Self {
            n: c.n,
            vectors: eig.U().to_owned(),
            matrix,
            energies,
        })
    }

    /// Dimension `2^{N/2}` of the left factor.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `tr e^{−zH}` over the left factor.
    pub fn partition(&self, z: C64) -> C64 {
        self.energies.iter().map(|&e| (-z * e).exp()).sum()
    }

    pub fn partition_real(&self, beta: f64) -> f64 {
        self.energies.iter().map(|&e| (-beta * e).exp()).sum()
    }

    /// `e^{−zH}` on the left factor.
    pub fn propagator(&self, z: C64) -> Mat<C64> {
        let v = &self.vectors;
        let d = self.dim();
        let scaled = Mat::from_fn(d, d, |i, k| v[(i, k)] * (-z * self.energies[k]).exp());
        &scaled * v.adjoint()
    }

    /// Rotate a left-factor operator into the eigenbasis: `V†·A·V`.
    pub fn to_eigenbasis(&self, a: &Mat<C64>) -> Mat<C64> {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// Apply a left-factor operator to a doubled-space state.
    pub fn apply_left(&self, op: &Mat<C64>, state: &[C64]) -> Vec<C64> {
        let d = self.dim();
        debug_assert_eq!(state.len(), d * d);
        let a = Mat::from_fn(d, d, |i, j| state[i + d * j]);
        let b = op * &a;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for j in 0..d {
            for i in 0..d {
                out[i + d * j] = b[(i, j)];
            }
        }
        out
    }
}

/// Dense left-factor matrix of `Ψ_{v,0}`.
pub fn left_string_matrix(n: usize, v: u32) -> Mat<C64> {
    dense_from_terms(&[(MajoranaString::new(n, v, 0).pauli(), 1.0)], n / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::couplings::ModelParams;

    #[test]
    fn single_coupling_spectrum() {
        let jp = 1.7;
        let c = CouplingTensor::single(4, vec![0, 1, 2, 3], jp).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        let mut e = h.energies.clone();
        e.sort_by(f64::total_cmp);
        assert_eq!(e.len(), 4);
        for (k, want) in [-jp / 4.0, -jp / 4.0, jp / 4.0, jp / 4.0].iter().enumerate() {
            assert!((e[k] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn traceless_and_hermitian_on_both_sides() {
        let c = CouplingTensor::sample(&ModelParams::new(6, 4, 1.0, 3)).unwrap();
        for side in [Side::Left, Side::Right] {
            let h = build_hamiltonian(&c, side).unwrap();
            let dim = h.nrows();
            let mut tr = C64::new(0.0, 0.0);
            for i in 0..dim {
                tr += h[(i, i)];
                for j in 0..dim {
                    assert!((h[(i, j)] - h[(j, i)].conj()).norm() < 1e-13);
                }
            }
            assert!(tr.norm() < 1e-12);
        }
    }

    #[test]
    fn left_factor_matches_doubled_matrix() {
        let c = CouplingTensor::sample(&ModelParams::new(6, 4, 1.0, 5)).unwrap();
        let full = build_hamiltonian(&c, Side::Left).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        let d = h.dim();
        for bl in 0..d {
            for br in 0..d {
                for cl in 0..d {
                    for cr in 0..d {
                        let want = if br == cr { h.matrix[(bl, cl)] } else { C64::new(0.0, 0.0) };
                        assert!((full[(bl + d * br, cl + d * cr)] - want).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let c = CouplingTensor::sample(&ModelParams::new(8, 4, 1.0, 9)).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        let u = h.propagator(C64::new(0.0, 0.0));
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((u[(i, j)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}
