use super::hamiltonian::{left_string_matrix, Hamiltonian};
use super::majorana::{i_pow, MajoranaString};
use crate::error::{Error, Result};
use crate::C64;

/// `|Z(β + it)|²`.
pub fn exact_sff(h: &Hamiltonian, beta: f64, t: f64) -> f64 {
    h.partition(C64::new(beta, t)).norm_sqr()
}

/// `−ln(Z(2β)/Z(β)²)`.
pub fn exact_renyi2(h: &Hamiltonian, beta: f64) -> f64 {
    // shift energies by the ground state so large β does not underflow
    let e0 = h.energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let z1: f64 = h.energies.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
    let z2: f64 = h.energies.iter().map(|&e| (-2.0 * beta * (e - e0)).exp()).sum();
    -(z2 / (z1 * z1)).ln()
}

/// `i^n·tr(e^{−(β/2−it)H} Ψ_{v_L,0} e^{−(β/2+it)H} Ψ_{v_R,0}) / Z(β)`.
pub fn wightman_complex(h: &Hamiltonian, beta: f64, t: f64, v_l: u32, v_r: u32) -> Result<C64> {
    let z = h.partition_real(beta);
    if !(z > 0.0) {
        return Err(Error::InvalidParameter("Z(beta) must be positive".into()));
    }
    let a = h.to_eigenbasis(&left_string_matrix(h.n, v_l));
    let b = h.to_eigenbasis(&left_string_matrix(h.n, v_r));
    let d = h.dim();
    let zl = C64::new(beta / 2.0, -t);
    let zr = C64::new(beta / 2.0, t);
    let wl: Vec<C64> = h.energies.iter().map(|&e| (-zl * e).exp()).collect();
    let wr: Vec<C64> = h.energies.iter().map(|&e| (-zr * e).exp()).collect();
    let mut tr = C64::new(0.0, 0.0);
    for j in 0..d {
        for k in 0..d {
            tr += wl[j] * a[(j, k)] * wr[k] * b[(k, j)];
        }
    }
    let n = MajoranaString::new(h.n, v_l, v_r).phase_exponent();
    Ok(i_pow((n & 3) as u8) * tr / z)
}

pub fn wightman_coefficient(h: &Hamiltonian, beta: f64, t: f64, v_l: u32, v_r: u32) -> Result<f64> {
    Ok(wightman_complex(h, beta, t, v_l, v_r)?.re)
}

/// `|Z(β/2+it)|² / (Z(β)·2^{N/2})`, the exact mean of `(−i)^n c_{v,v}`.
pub fn averaged_coefficient(h: &Hamiltonian, beta: f64, t: f64) -> f64 {
    h.partition(C64::new(beta / 2.0, t)).norm_sqr() / (h.partition_real(beta) * h.dim() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::couplings::{CouplingTensor, ModelParams};

    #[test]
    fn sff_at_zero_time() {
        let c = CouplingTensor::sample(&ModelParams::new(8, 4, 1.0, 1)).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        let z = h.partition_real(0.8);
        assert!((exact_sff(&h, 0.8, 0.0) - z * z).abs() < 1e-10 * z * z);
    }

    #[test]
    fn two_level_sff() {
        let jp = 0.9;
        let h = Hamiltonian::new(&CouplingTensor::single(4, vec![0, 1, 2, 3], jp).unwrap()).unwrap();
        for &(beta, t) in &[(0.0, 1.0), (1.0, 2.5), (2.0, 7.0)] {
            let s = C64::new(beta, t) * (jp / 4.0);
            let want = (2.0 * (-s).exp() + 2.0 * s.exp()).norm_sqr();
            assert!((exact_sff(&h, beta, t) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn renyi_limits() {
        let c = CouplingTensor::sample(&ModelParams::new(8, 4, 1.0, 2)).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        assert!((exact_renyi2(&h, 0.0) - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!(exact_renyi2(&h, 400.0) < 1e-6);
    }

    #[test]
    fn wightman_at_origin() {
        let c = CouplingTensor::sample(&ModelParams::new(6, 4, 1.0, 3)).unwrap();
        let h = Hamiltonian::new(&c).unwrap();
        for v in 0..64u32 {
            let n = MajoranaString::new(6, v, v).phase_exponent();
            let w = wightman_complex(&h, 0.0, 0.0, v, v).unwrap();
            // Ψ_{v,0}² = 1, so the trace is Z(0) and only i^n survives
            assert!((w - i_pow((n & 3) as u8)).norm() < 1e-12);
        }
        assert!(wightman_complex(&h, 0.0, 0.0, 3, 5).unwrap().norm() < 1e-12);
    }
}
