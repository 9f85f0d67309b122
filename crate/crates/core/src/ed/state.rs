use faer::Mat;

use super::hamiltonian::Hamiltonian;
use super::majorana::majorana_pauli;
use crate::error::{Error, Result};
use crate::C64;

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = norm(v);
    for a in v.iter_mut() {
        *a /= n;
    }
    n
}

/// `(1 − 2iψ_jξ_j)/2`, the projector onto the kernel of `ψ_j + iξ_j`.
fn pair_projector(n: usize, j: usize, v: &[C64]) -> Vec<C64> {
    let p = majorana_pauli(j).mul(majorana_pauli(n + j));
    // 2iψξ = i·P_ψ P_ξ
    let mut out: Vec<C64> = v.iter().map(|a| a * 0.5).collect();
    p.apply_add(v, C64::new(0.0, -0.5), &mut out);
    out
}

/// The state annihilated by every `ψ_j + iξ_j`, built by projecting a
/// basis vector. Its global phase makes the first nonzero amplitude real.
pub fn build_epr(n: usize) -> Result<Vec<C64>> {
    if n % 2 != 0 || n == 0 || n > 16 {
        return Err(Error::InvalidParameter(format!(
            "N must be even and in 2..=16, got {n}"
        )));
    }
    let dim = 1usize << n;
    for start in 0..dim {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[start] = C64::new(1.0, 0.0);
        for j in 0..n {
            v = pair_projector(n, j, &v);
        }
        if norm(&v) > 1e-6 {
            normalize(&mut v);
            let phase = v.iter().find(|a| a.norm() > 1e-12).map(|a| a / a.norm());
            if let Some(ph) = phase {
                for a in v.iter_mut() {
                    *a /= ph;
                }
            }
            if epr_residual(n, &v) > 1e-10 {
                return Err(Error::DegenerateEpr);
            }
            return Ok(v);
        }
    }
    Err(Error::DegenerateEpr)
}

/// `max_j ‖(ψ_j + iξ_j)|v⟩‖`.
pub fn epr_residual(n: usize, v: &[C64]) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|j| {
            let mut out = vec![C64::new(0.0, 0.0); v.len()];
            majorana_pauli(j).apply_add(v, C64::new(s, 0.0), &mut out);
            majorana_pauli(n + j).apply_add(v, C64::new(0.0, s), &mut out);
            norm(&out)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct Tfd {
    pub state: Vec<C64>,
    pub beta: f64,
    /// `Z(β)` over the left factor, recovered from the pre-normalization norm.
    pub partition: f64,
}

/// `e^{−βH/2}|EPR⟩`, normalized.
pub fn build_tfd(h: &Hamiltonian, beta: f64, epr: &[C64]) -> Result<Tfd> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(Tfd {
            state: epr.to_vec(),
            beta,
            partition: h.dim() as f64,
        });
    }
    let op = h.propagator(C64::new(beta / 2.0, 0.0));
    let mut state = h.apply_left(&op, epr);
    let n = normalize(&mut state);
    Ok(Tfd {
        state,
        beta,
        partition: n * n * h.dim() as f64,
    })
}

/// `e^{−iHt}|state⟩` with `H` acting on the left factor.
pub fn evolve(h: &Hamiltonian, t: f64, state: &[C64]) -> Vec<C64> {
    if t == 0.0 {
        return state.to_vec();
    }
    let u = h.propagator(C64::new(0.0, t));
    h.apply_left(&u, state)
}

/// Propagator cache for repeated evolution at many times.
pub struct Evolver<'a> {
    h: &'a Hamiltonian,
    /// `V†` applied to the left index of the initial state.
    rotated: Mat<C64>,
}

impl<'a> Evolver<'a> {
    pub fn new(h: &'a Hamiltonian, state: &[C64]) -> Self {
        let d = h.dim();
        let a = Mat::from_fn(d, d, |i, j| state[i + d * j]);
        Self {
            h,
            rotated: h.vectors.adjoint() * &a,
        }
    }

    pub fn at(&self, t: f64) -> Vec<C64> {
        let d = self.h.dim();
        let phased = Mat::from_fn(d, d, |k, j| {
            self.rotated[(k, j)] * C64::new(0.0, -t * self.h.energies[k]).exp()
        });
        let b = &self.h.vectors * &phased;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for j in 0..d {
            for i in 0..d {
                out[i + d * j] = b[(i, j)];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::couplings::{CouplingTensor, ModelParams};
    use crate::ed::hamiltonian::{build_hamiltonian, Side};

    fn inner(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn epr_is_annihilated() {
        for n in [2, 4, 6, 8] {
            let v = build_epr(n).unwrap();
            assert!(epr_residual(n, &v) < 1e-12);
            assert!((norm(&v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tfd_energy_and_norm() {
        let c = CouplingTensor::sample(&ModelParams::new(6, 4, 1.0, 1)).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        let epr = build_epr(6).unwrap();
        let beta = 1.3;
        let tfd = build_tfd(&h, beta, &epr).unwrap();
        assert!((norm(&tfd.state) - 1.0).abs() < 1e-12);
        assert!((tfd.partition - h.partition_real(beta)).abs() < 1e-12 * tfd.partition);
        let full = build_hamiltonian(&c, Side::Left).unwrap();
        let dim = tfd.state.len();
        let hv: Vec<C64> = (0..dim)
            .map(|i| (0..dim).map(|j| full[(i, j)] * tfd.state[j]).sum())
            .collect();
        let e = inner(&tfd.state, &hv).re;
        let z = h.partition_real(beta);
        let thermal: f64 = h.energies.iter().map(|&x| x * (-beta * x).exp()).sum::<f64>() / z;
        assert!((e - thermal).abs() < 1e-12);
    }

    #[test]
    fn beta_zero_returns_epr() {
        let c = CouplingTensor::sample(&ModelParams::new(4, 4, 1.0, 1)).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        let epr = build_epr(4).unwrap();
        assert_eq!(build_tfd(&h, 0.0, &epr).unwrap().state, epr);
    }

    #[test]
    fn evolution_group_property() {
        let c = CouplingTensor::sample(&ModelParams::new(6, 4, 1.0, 2)).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        let s = build_tfd(&h, 0.7, &build_epr(6).unwrap()).unwrap().state;
        let a = evolve(&h, 0.9, &evolve(&h, 1.4, &s));
        let b = evolve(&h, 2.3, &s);
        let ev = Evolver::new(&h, &s).at(2.3);
        for i in 0..s.len() {
            assert!((a[i] - b[i]).norm() < 1e-10);
            assert!((ev[i] - b[i]).norm() < 1e-10);
        }
        assert!((norm(&b) - 1.0).abs() < 1e-12);
        assert_eq!(evolve(&h, 0.0, &s), s);
    }

    #[test]
    fn zero_coupling_leaves_state() {
        let h = Hamiltonian::new(&CouplingTensor::zero(4, 4)).unwrap();
        let s = build_epr(4).unwrap();
        let e = evolve(&h, 3.0, &s);
        for i in 0..s.len() {
            assert!((e[i] - s[i]).norm() < 1e-14);
        }
    }
}
