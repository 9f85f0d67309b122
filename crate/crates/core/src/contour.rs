//! Closed complex-time contour shared by the four replica fields.
//!
//! The loop is traversed once as
//! imaginary-u (length β/2) → forward (t) → backward (t) → imaginary-l (β/2),
//! then wraps to the start. Points sit at the midpoints of equal cells on
//! each segment. The first two segments form the `u` class and the last two
//! the `l` class; the two u–l links (forward→backward tip, and the wrap from
//! imaginary-l back to imaginary-u) carry the junction phase σ.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub beta: f64,
    pub t: f64,
    pub n_im: usize,
    pub n_re: usize,
}

impl ContourSpec {
    pub fn new(beta: f64, t: f64, n_im: usize, n_re: usize) -> Self {
        Self {
            beta,
            t,
            n_im,
            n_re,
        }
    }

    /// Total number of grid points `2·n_im + 2·n_re`.
    pub fn len(&self) -> usize {
        2 * self.n_im + 2 * self.n_re
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and non-negative, got {}",
                self.beta
            )));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t must be finite and non-negative, got {}",
                self.t
            )));
        }
        if self.n_im < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_im must be at least 2, got {}",
                self.n_im
            )));
        }
        if self.t > 0.0 && self.n_re < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_re must be at least 2 when t > 0, got {}",
                self.n_re
            )));
        }
        if self.t == 0.0 && self.n_re == 1 {
            return Err(Error::InvalidParameter(
                "n_re must be 0 or at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    ImagU,
    Forward,
    Backward,
    ImagL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchClass {
    U,
    L,
}

impl Branch {
    pub fn class(self) -> BranchClass {
        match self {
            Branch::ImagU | Branch::Forward => BranchClass::U,
            Branch::Backward | Branch::ImagL => BranchClass::L,
        }
    }

    /// Factor multiplying the interaction on this branch.
    pub fn factor(self) -> C64 {
        match self {
            Branch::ImagU | Branch::ImagL => C64::new(1.0, 0.0),
            Branch::Forward => C64::new(0.0, -1.0),
            Branch::Backward => C64::new(0.0, 1.0),
        }
    }

    pub fn is_imaginary(self) -> bool {
        matches!(self, Branch::ImagU | Branch::ImagL)
    }
}

/// Junction phase sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    Plus,
    Minus,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::Plus, Sector::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Sector::Plus => 1.0,
            Sector::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sector {
        match self {
            Sector::Plus => Sector::Minus,
            Sector::Minus => Sector::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    /// Complex time; imaginary segments run along `−iτ`.
    pub theta: C64,
    pub branch: Branch,
    /// Arc-length step of the cell centred on this point.
    pub weight: f64,
    pub factor: C64,
}

#[derive(Debug, Clone)]
pub struct ContourGrid {
    pub spec: ContourSpec,
    pub points: Vec<ContourPoint>,
    /// First `l` point after the real-time tip, and the wrap target (index 0).
    pub junction_indices: [usize; 2],
}

/// Symmetric M×M mask, true iff both points share a branch class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMask {
    m: usize,
    u_len: usize,
}

impl BlockMask {
    pub fn get(&self, a: usize, b: usize) -> bool {
        (a < self.u_len) == (b < self.u_len)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn count_true(&self) -> usize {
        let l = self.m - self.u_len;
        self.u_len * self.u_len + l * l
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        (0..self.m)
            .map(|a| (0..self.m).map(|b| self.get(a, b)).collect())
            .collect()
    }
}

pub fn build_contour(spec: ContourSpec) -> Result<ContourGrid> {
    spec.validate()?;
    let half = spec.beta / 2.0;
    let mut points = Vec::with_capacity(spec.len());
    let segments = [
        (Branch::ImagU, half, spec.n_im),
        (Branch::Forward, spec.t, spec.n_re),
        (Branch::Backward, spec.t, spec.n_re),
        (Branch::ImagL, half, spec.n_im),
    ];
    for (branch, length, n) in segments {
        if n == 0 {
            continue;
        }
        let h = length / n as f64;
        for k in 0..n {
            let s = (k as f64 + 0.5) * h;
            let theta = match branch {
                Branch::ImagU => C64::new(0.0, -s),
                Branch::Forward => C64::new(s, -half),
                Branch::Backward => C64::new(spec.t - s, -half),
                Branch::ImagL => C64::new(0.0, -(half + s)),
            };
            points.push(ContourPoint {
                theta,
                branch,
                weight: h,
                factor: branch.factor(),
            });
        }
    }
    let tip = spec.n_im + spec.n_re;
    Ok(ContourGrid {
        spec,
        points,
        junction_indices: [tip, 0],
    })
}

impl ContourGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in the `u` class.
    pub fn u_len(&self) -> usize {
        self.spec.n_im + self.spec.n_re
    }

    pub fn class(&self, a: usize) -> BranchClass {
        if a < self.u_len() {
            BranchClass::U
        } else {
            BranchClass::L
        }
    }

    pub fn block_mask(&self) -> BlockMask {
        BlockMask {
            m: self.len(),
            u_len: self.u_len(),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.weight).collect()
    }

    pub fn factors(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.factor).collect()
    }

    pub fn arc_length(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    /// Diagonal gauge `S = diag(1 on u, σ on l)` relating the two sectors.
    pub fn gauge(&self, sector: Sector) -> Vec<f64> {
        let s = sector.sign();
        (0..self.len())
            .map(|a| if a < self.u_len() { 1.0 } else { s })
            .collect()
    }

    pub fn max_step(&self) -> f64 {
        self.points.iter().map(|p| p.weight).fold(0.0, f64::max)
    }
}

/// Free two-point function `½·sgn(a − b)` along the loop order, with the
/// junction phase on u–l pairs.
pub fn free_propagator(grid: &ContourGrid, sector: Sector) -> Mat<C64> {
    let m = grid.len();
    let s = grid.gauge(sector);
    Mat::from_fn(m, m, |a, b| {
        let sg = match a.cmp(&b) {
            std::cmp::Ordering::Greater => 0.5,
            std::cmp::Ordering::Less => -0.5,
            std::cmp::Ordering::Equal => 0.0,
        };
        C64::new(sg * s[a] * s[b], 0.0)
    })
}

/// Discretized `∂_τ` on the closed loop for one junction sector.
#[derive(Debug, Clone)]
pub struct DerivativeOperator {
    pub sector: Sector,
    pub matrix: Mat<C64>,
}

/// The operator is the exact inverse of [`free_propagator`], which for an
/// even number of points has the closed form
/// `D₊(a,b) = 2·sgn(b − a)·(−1)^{b−a+1}` and `D_σ = S·D₊·S`.
/// The wrap-around antiperiodicity is built into the `sgn` ordering.
pub fn derivative_operator(grid: &ContourGrid, sector: Sector) -> Result<DerivativeOperator> {
    grid.spec.validate()?;
    let m = grid.len();
    if m % 2 != 0 {
        return Err(Error::InvalidParameter(
            "contour must have an even number of points".into(),
        ));
    }
    let s = grid.gauge(sector);
    let matrix = Mat::from_fn(m, m, |a, b| {
        if a == b {
            return C64::new(0.0, 0.0);
        }
        let d = b as i64 - a as i64;
        let sign = if d > 0 { 1.0 } else { -1.0 };
        let parity = if (d + 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        C64::new(2.0 * sign * parity * s[a] * s[b], 0.0)
    });
    Ok(DerivativeOperator { sector, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(beta: f64, t: f64, n_im: usize, n_re: usize) -> ContourGrid {
        build_contour(ContourSpec::new(beta, t, n_im, n_re)).unwrap()
    }

    #[test]
    fn thermal_circle() {
        let g = grid(2.0, 0.0, 4, 0);
        assert_eq!(g.len(), 8);
        assert!(g.points.iter().all(|p| p.branch.is_imaginary()));
        assert!((g.arc_length() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_imaginary_segments() {
        assert!(build_contour(ContourSpec::new(0.0, 1.0, 1, 4)).is_err());
        let g = grid(0.0, 1.0, 2, 4);
        assert!((g.arc_length() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_contour(ContourSpec::new(-1.0, 0.0, 4, 0)).is_err());
        assert!(build_contour(ContourSpec::new(1.0, -1.0, 4, 2)).is_err());
        assert!(build_contour(ContourSpec::new(1.0, 1.0, 4, 0)).is_err());
    }

    #[test]
    fn block_mask_count() {
        let g = grid(1.0, 1.0, 50, 50);
        assert_eq!(g.len(), 200);
        let mask = g.block_mask();
        assert_eq!(mask.count_true(), 2 * 100 * 100);
        let dense = mask.to_dense();
        let brute = dense.iter().flatten().filter(|&&x| x).count();
        assert_eq!(brute, 20000);
        for a in 0..200 {
            assert!(dense[a][a]);
            for b in 0..200 {
                assert_eq!(dense[a][b], dense[b][a]);
            }
        }
    }

    #[test]
    fn branch_order_and_factors() {
        let g = grid(1.0, 2.0, 3, 4);
        let tags: Vec<Branch> = g.points.iter().map(|p| p.branch).collect();
        assert_eq!(&tags[0..3], &[Branch::ImagU; 3]);
        assert_eq!(&tags[3..7], &[Branch::Forward; 4]);
        assert_eq!(&tags[7..11], &[Branch::Backward; 4]);
        assert_eq!(&tags[11..14], &[Branch::ImagL; 3]);
        assert_eq!(g.junction_indices, [7, 0]);
        assert_eq!(g.points[3].factor, C64::new(0.0, -1.0));
        assert_eq!(g.points[8].factor, C64::new(0.0, 1.0));
        // forward and backward points mirror each other
        assert!((g.points[3].theta - g.points[10].theta).norm() < 1e-12);
    }

    #[test]
    fn derivative_inverts_free_propagator() {
        let g = grid(1.0, 1.0, 5, 3);
        for sector in Sector::BOTH {
            let d = derivative_operator(&g, sector).unwrap().matrix;
            let g0 = free_propagator(&g, sector);
            let prod = &d * &g0;
            let m = g.len();
            for a in 0..m {
                for b in 0..m {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((prod[(a, b)] - C64::new(want, 0.0)).norm() < 1e-12);
                }
            }
            for a in 0..m {
                for b in 0..m {
                    assert!((d[(a, b)] + d[(b, a)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sectors_differ_only_across_classes() {
        let g = grid(1.0, 1.0, 3, 3);
        let dp = derivative_operator(&g, Sector::Plus).unwrap().matrix;
        let dm = derivative_operator(&g, Sector::Minus).unwrap().matrix;
        for a in 0..g.len() {
            for b in 0..g.len() {
                let diff = (dp[(a, b)] - dm[(a, b)]).norm();
                if g.class(a) == g.class(b) {
                    assert_eq!(diff, 0.0);
                }
            }
        }
    }
}
