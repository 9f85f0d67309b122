//! Test-side oracles built from first principles, sharing no code with the
//! engines they check.
#![allow(dead_code)]

use num_complex::Complex64 as C;

/// `coef · P_{k1} P_{k2} …` with `k` ascending over the set bits.
#[derive(Debug, Clone, Copy)]
pub struct Word {
    pub coef: C,
    pub bits: u32,
}

impl Word {
    pub fn new(coef: C, bits: u32) -> Self {
        Self { coef, bits }
    }

    /// Concatenate and re-sort; each transposition of distinct generators
    /// costs a sign and `P_k² = 1`.
    pub fn mul(self, o: Word) -> Word {
        let mut swaps = 0;
        for k in 0..32 {
            if o.bits >> k & 1 == 1 {
                swaps += (self.bits >> (k + 1)).count_ones();
            }
        }
        let s = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        Word::new(self.coef * o.coef * s, self.bits ^ o.bits)
    }
}

pub fn ipow(k: u32) -> C {
    [C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(-1.0, 0.0), C::new(0.0, -1.0)][(k % 4) as usize]
}

/// Hermitian normalized string over `2n` generators, left bits low.
pub fn hermitian(n: usize, v_l: u32, v_r: u32) -> Word {
    let bits = v_l | v_r << n;
    let m = bits.count_ones();
    Word::new(ipow(m * (m.wrapping_sub(1)) / 2), bits)
}

/// `⟨EPR| w |EPR⟩` from `P_{n+j}|EPR⟩ = i·P_j|EPR⟩` alone. Moving the right
/// factors onto the ket one at a time turns `R` into `i^r` times the
/// ascending left word with the same indices; a nontrivial left word has
/// zero expectation.
pub fn epr_expect(n: usize, w: Word) -> C {
    let mask = (1u32 << n) - 1;
    let (l, r) = (w.bits & mask, w.bits >> n);
    if l != r {
        return C::new(0.0, 0.0);
    }
    let sq = Word::new(C::new(1.0, 0.0), l).mul(Word::new(C::new(1.0, 0.0), l));
    debug_assert_eq!(sq.bits, 0);
    w.coef * ipow(r.count_ones()) * sq.coef
}

/// `M₂` of `e^{zP}|EPR⟩` on `n = 4` modes per side, where `P = P₀P₁P₂P₃`
/// and `H = −(J'/4)P`, so `e^{−βH/2 − iHt} = e^{zP}` with
/// `z = J'(β/8 + it/4)`. Since `P² = 1`, `e^{zP} = cosh z + sinh z·P`.
pub fn rotation_m2(jp: f64, beta: f64, t: f64) -> f64 {
    let n = 4;
    let z = C::new(jp * beta / 8.0, jp * t / 4.0);
    let one = C::new(1.0, 0.0);
    let ket = [Word::new(z.cosh(), 0), Word::new(z.sinh(), 0b1111)];
    let expect = |op: Word| -> C {
        let mut acc = C::new(0.0, 0.0);
        for a in &ket {
            let bra = Word::new(a.coef.conj(), a.bits); // P† = P
            for b in &ket {
                acc += epr_expect(n, bra.mul(op).mul(*b));
            }
        }
        acc
    };
    let norm = expect(Word::new(one, 0)).re;
    let mut quad = 0.0;
    let mut sq = 0.0;
    for v_l in 0..1u32 << n {
        for v_r in 0..1u32 << n {
            let c = expect(hermitian(n, v_l, v_r)) / norm;
            assert!(c.im.abs() < 1e-12, "Hermitian string with complex expectation");
            sq += c.re * c.re;
            quad += c.re.powi(4);
        }
    }
    assert!((sq - 16.0).abs() < 1e-9);
    -(quad / 16.0).ln()
}

/// Two levels `±J'/4`, each with half of the `2^{N/2}` states.
pub fn two_level_sff(n: usize, jp: f64, beta: f64, t: f64) -> f64 {
    let s = C::new(beta, t) * (jp / 4.0);
    let half = (1u64 << (n / 2 - 1)) as f64;
    (half * ((-s).exp() + s.exp())).norm_sqr()
}

/// Determinant by Laplace expansion over column subsets, `O(2^M·M)`.
pub fn subset_det(a: &[Vec<C>]) -> C {
    let m = a.len();
    assert!(m <= 20);
    let mut dp = vec![C::new(0.0, 0.0); 1 << m];
    dp[0] = C::new(1.0, 0.0);
    for mask in 0..(1usize << m) {
        let v = dp[mask];
        if v == C::new(0.0, 0.0) && mask != 0 {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == m {
            continue;
        }
        for col in 0..m {
            if mask >> col & 1 == 1 {
                continue;
            }
            // columns already used to the right of `col` are the inversions added
            let inv = (mask >> (col + 1)).count_ones();
            let s = if inv % 2 == 0 { 1.0 } else { -1.0 };
            dp[mask | 1 << col] += v * a[row][col] * s;
        }
    }
    dp[(1 << m) - 1]
}

/// Explicit sum over permutations, for very small `M`.
pub fn leibniz_det(a: &[Vec<C>]) -> C {
    fn rec(a: &[Vec<C>], row: usize, used: &mut Vec<bool>, sign: f64, acc: C, out: &mut C) {
        let m = a.len();
        if row == m {
            *out += acc * sign;
            return;
        }
        for c in 0..m {
            if used[c] {
                continue;
            }
            let inv = used[c + 1..].iter().filter(|&&u| u).count();
            used[c] = true;
            let s = if inv % 2 == 0 { sign } else { -sign };
            rec(a, row + 1, used, s, acc * a[row][c], out);
            used[c] = false;
        }
    }
    let mut out = C::new(0.0, 0.0);
    rec(a, 0, &mut vec![false; a.len()], 1.0, C::new(1.0, 0.0), &mut out);
    out
}
