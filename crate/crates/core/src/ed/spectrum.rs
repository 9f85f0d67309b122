use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::majorana::{i_pow, MajoranaString};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::C64;

/// Largest `N` for which the full coefficient vector is stored.
pub const STORE_LIMIT: usize = 8;
/// Largest `N` accepted at all.
pub const ENUMERATION_LIMIT: usize = 10;

/// Majorana spectrum of a pure state on the doubled system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MajoranaSpectrum {
    pub n: usize,
    /// `c_{v_L,v_R}` at index `v_L + 2^N·v_R`; `None` above [`STORE_LIMIT`].
    pub coefficients: Option<Vec<f64>>,
    pub sum_sq: f64,
    pub sum_quad: f64,
    /// Largest imaginary part met while forming the coefficients.
    pub max_imag: f64,
}

impl MajoranaSpectrum {
    pub fn get(&self, v_l: u32, v_r: u32) -> Option<f64> {
        self.coefficients
            .as_ref()
            .map(|c| c[v_l as usize | (v_r as usize) << self.n])
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
fn walsh_hadamard(a: &mut [C64]) {
    let n = a.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (a[j], a[j + h]);
                a[j] = x + y;
                a[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// `⟨ψ|X^x Z^z|ψ⟩` for every `z` at fixed `x`.
fn expectation_row(state: &[C64], x: usize) -> Vec<C64> {
    let mut h: Vec<C64> = (0..state.len())
        .map(|b| state[b ^ x].conj() * state[b])
        .collect();
    walsh_hadamard(&mut h);
    h
}

/// Hermitian phase of `X^x Z^z`: `i^{|x∧z|}·X^x Z^z` is Hermitian.
fn hermitian_value(e: C64, x: usize, z: usize) -> C64 {
    e * i_pow(((x & z).count_ones() & 3) as u8)
}

pub fn majorana_spectrum(state: &[C64], n: usize) -> Result<MajoranaSpectrum> {
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: ENUMERATION_LIMIT,
            what: "Majorana spectrum enumeration",
        });
    }
    let dim = 1usize << n;
    if state.len() != dim {
        return Err(Error::InvalidParameter(format!(
            "state length {} does not match 2^{n}",
            state.len()
        )));
    }
    // Power sums per x row, merged in row order so any thread count gives
    // the same bits.
    let rows: Vec<(CompensatedSum, CompensatedSum, f64, Option<Vec<C64>>)> = (0..dim)
        .into_par_iter()
        .map(|x| {
            let row = expectation_row(state, x);
            let mut s2 = CompensatedSum::new();
            let mut s4 = CompensatedSum::new();
            let mut im = 0.0f64;
            for (z, &e) in row.iter().enumerate() {
                let h = hermitian_value(e, x, z);
                im = im.max(h.im.abs());
                let c2 = h.re * h.re;
                s2.add(c2);
                s4.add(c2 * c2);
            }
            let keep = (n <= STORE_LIMIT).then_some(row);
            (s2, s4, im, keep)
        })
        .collect();
    let mut sum_sq = CompensatedSum::new();
    let mut sum_quad = CompensatedSum::new();
    let mut max_imag = 0.0f64;
    for (s2, s4, im, _) in &rows {
        sum_sq.merge(s2);
        sum_quad.merge(s4);
        max_imag = max_imag.max(*im);
    }
    let coefficients = if n <= STORE_LIMIT {
        let table: Vec<Vec<C64>> = rows.into_iter().map(|r| r.3.unwrap()).collect();
        let total = dim * dim;
        let c = (0..total)
            .into_par_iter()
            .map(|idx| {
                let v_l = (idx & (dim - 1)) as u32;
                let v_r = (idx >> n) as u32;
                let p = MajoranaString::new(n, v_l, v_r).pauli();
                (p.coefficient() * table[p.x as usize][p.z as usize]).re
            })
            .collect();
        Some(c)
    } else {
        None
    };
    Ok(MajoranaSpectrum {
        n,
        coefficients,
        sum_sq: sum_sq.value(),
        sum_quad: sum_quad.value(),
        max_imag,
    })
}

/// `M₂ = −ln(2^{−N}·Σc⁴)`.
pub fn stabilizer_renyi(spec: &MajoranaSpectrum) -> f64 {
    let m2 = -(spec.sum_quad / (1u64 << spec.n) as f64).ln();
    let bound = spec.n as f64 * std::f64::consts::LN_2;
    if m2 > bound + 1e-9 || m2 < -1e-9 {
        log::warn!("M2 = {m2} outside [0, {bound}] at N = {}", spec.n);
    }
    m2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::state::build_epr;
    use rand::{Rng, SeedableRng};

    #[test]
    fn epr_spectrum_is_stabilizer() {
        let n = 4;
        let epr = build_epr(n).unwrap();
        let s = majorana_spectrum(&epr, n).unwrap();
        for v_l in 0..16u32 {
            for v_r in 0..16u32 {
                let c = s.get(v_l, v_r).unwrap();
                if v_l == v_r {
                    let ms = MajoranaString::new(n, v_l, v_r);
                    let want = i_pow((ms.phase_exponent() & 3) as u8);
                    assert!(want.im.abs() < 1e-15);
                    assert!((c - want.re).abs() < 1e-12, "{v_l} {c}");
                } else {
                    assert!(c.abs() < 1e-12);
                }
            }
        }
        assert!(stabilizer_renyi(&s).abs() < 1e-10);
    }

    #[test]
    fn parseval_for_random_state() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for n in [2usize, 4] {
            let dim = 1 << n;
            let mut v: Vec<C64> = (0..dim)
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let nv = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= nv);
            let s = majorana_spectrum(&v, n).unwrap();
            assert!((s.sum_sq - dim as f64).abs() < 1e-9);
            assert!(s.max_imag < 1e-12);
            let direct: f64 = s.coefficients.as_ref().unwrap().iter().map(|c| c * c).sum();
            assert!((direct - dim as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_large_n() {
        assert!(majorana_spectrum(&[], 12).is_err());
    }

    #[test]
    fn walsh_hadamard_matches_definition() {
        let a: Vec<C64> = (0..8).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        let mut b = a.clone();
        walsh_hadamard(&mut b);
        for z in 0..8usize {
            let want: C64 = (0..8usize)
                .map(|k| if (z & k).count_ones() % 2 == 1 { -a[k] } else { a[k] })
                .sum();
            assert!((b[z] - want).norm() < 1e-12);
        }
    }
}
