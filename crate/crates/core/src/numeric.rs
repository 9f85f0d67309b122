//! Small numerical helpers shared by both engines.

use faer::linalg::solvers::PartialPivLu;
use faer::Mat;

use crate::C64;

/// Neumaier-compensated accumulator. Sums are order-dependent only at the
/// level of the compensation term, so chunked reductions combined in a fixed
/// order reproduce bit-for-bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Parity of a permutation given in forward-array form.
pub fn permutation_is_odd(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0usize;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0usize;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}

/// Complex log-determinant from a partial-pivoting LU factorization.
/// The imaginary part is only defined modulo 2π.
pub fn lu_logdet(lu: &PartialPivLu<C64>) -> C64 {
    let u = lu.U();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..u.nrows() {
        acc += u[(i, i)].ln();
    }
    let (fwd, _) = lu.P().arrays();
    if permutation_is_odd(fwd) {
        acc += C64::new(0.0, std::f64::consts::PI);
    }
    acc
}

/// Ratio of smallest to largest pivot magnitude; a cheap conditioning probe.
pub fn lu_pivot_ratio(lu: &PartialPivLu<C64>) -> f64 {
    let u = lu.U();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..u.nrows() {
        let a = u[(i, i)].norm();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

pub fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// `ln(Σ exp(x_i))` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}
