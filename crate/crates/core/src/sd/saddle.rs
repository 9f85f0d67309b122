//! Two-sector saddle of the SRE partition function on the closed contour.
//!
//! Fields on the contour are discretized by a Nyström scheme: the kernel
//! `K_σ = G0_σ·(WΣW) + diag(κ)` acts on values at the cell midpoints, with
//! `G0_σ` the free propagator and `κ_a = −w_a² f_a² J² 2^{−q}` the
//! self-cell correction that restores second-order accuracy next to the
//! `sgn` discontinuity. Then
//!
//! ```text
//! g_σ = (1 − K_σ)⁻¹ G0_σ,   ΔL_σ = logdet(1 − K_σ) = logdet(D_σ − Σ̂) − logdet D_σ
//! ```
//!
//! and the sectors are mixed with weights `∝ exp(2·Re ΔL_σ)`.

use std::f64::consts::LN_2;

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::contour::{build_contour, ContourGrid, ContourSpec, Sector};
use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, lu_logdet, lu_pivot_ratio, max_abs_diff, CompensatedSum};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStrategy {
    Symmetric,
    Polarized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddleClass {
    Symmetric,
    Ssb,
    /// `⟨σ⟩` between the two thresholds.
    Unresolved,
}

/// How the sectors enter the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// `Σ` restricted to the block mask; the two sectors are gauge copies,
    /// so only `σ = +1` is factorized.
    Symmetric,
    /// Full-support `Σ` with only `σ = +1`: the ordinary Keldysh contour.
    Keldysh,
    /// Full-support `Σ` with both sectors weighted.
    TwoSector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaddleOptions {
    pub tol: f64,
    pub damping: f64,
    pub damping_floor: f64,
    pub max_iter: usize,
    /// A residual below `floor_factor·tol` that has not improved by 5% for
    /// `stall_window` iterations is taken as the round-off floor.
    pub floor_factor: f64,
    pub stall_window: usize,
    /// `|⟨σ⟩|` below this is symmetric.
    pub symmetric_threshold: f64,
    /// `|⟨σ⟩|` above this is symmetry broken.
    pub ssb_threshold: f64,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            damping: 0.5,
            damping_floor: 0.05,
            max_iter: 3000,
            floor_factor: 100.0,
            stall_window: 50,
            symmetric_threshold: 0.01,
            ssb_threshold: 0.5,
        }
    }
}

impl SaddleOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0)
            || !(self.damping_floor > 0.0 && self.damping_floor <= self.damping)
        {
            return Err(Error::InvalidParameter(
                "damping must lie in (0, 1] and damping_floor in (0, damping]".into(),
            ));
        }
        if !(self.floor_factor >= 1.0) {
            return Err(Error::InvalidParameter("floor_factor must be at least 1".into()));
        }
        if !(self.symmetric_threshold < self.ssb_threshold) {
            return Err(Error::InvalidParameter(
                "symmetric_threshold must be below ssb_threshold".into(),
            ));
        }
        Ok(())
    }

    pub fn classify(&self, order_parameter: f64) -> SaddleClass {
        let s = order_parameter.abs();
        if s < self.symmetric_threshold {
            SaddleClass::Symmetric
        } else if s > self.ssb_threshold {
            SaddleClass::Ssb
        } else {
            SaddleClass::Unresolved
        }
    }
}

/// Grid-dependent quantities shared by every iteration of one solve.
#[derive(Debug, Clone)]
pub struct SaddleProblem {
    pub grid: ContourGrid,
    pub q: usize,
    pub j: f64,
    w: Vec<f64>,
    f: Vec<C64>,
    kappa: Vec<C64>,
}

impl SaddleProblem {
    pub fn new(grid: ContourGrid, q: usize, j: f64) -> Result<Self> {
        if q < 2 || q % 2 != 0 {
            return Err(Error::InvalidParameter(format!("q must be even, got {q}")));
        }
        if !j.is_finite() {
            return Err(Error::InvalidParameter("J must be finite".into()));
        }
        let w = grid.weights();
        let f = grid.factors();
        let c = j * j * 2f64.powi(-(q as i32));
        let kappa = w.iter().zip(&f).map(|(&wa, &fa)| -fa * fa * (wa * wa * c)).collect();
        Ok(Self {
            grid,
            q,
            j,
            w,
            f,
            kappa,
        })
    }

    pub fn from_spec(spec: ContourSpec, q: usize, j: f64) -> Result<Self> {
        Self::new(build_contour(spec)?, q, j)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `Σ = J²·f_a f_b·G^{q−1}` elementwise.
    pub fn self_energy(&self, g: &Mat<C64>) -> Mat<C64> {
        let j2 = self.j * self.j;
        let p = self.q as u32 - 1;
        Mat::from_fn(self.len(), self.len(), |a, b| {
            if a == b {
                C64::new(0.0, 0.0)
            } else {
                self.f[a] * self.f[b] * g[(a, b)].powu(p) * j2
            }
        })
    }

    /// Self-energy generated by the free propagator, optionally masked.
    pub fn free_seed(&self, masked: bool) -> Mat<C64> {
        let s = self.self_energy(&self.free_green(Sector::Plus));
        if masked {
            self.mask(&s)
        } else {
            s
        }
    }

    pub fn free_green(&self, sector: Sector) -> Mat<C64> {
        crate::contour::free_propagator(&self.grid, sector)
    }

    pub fn mask(&self, x: &Mat<C64>) -> Mat<C64> {
        let u = self.grid.u_len();
        Mat::from_fn(self.len(), self.len(), |a, b| {
            if (a < u) == (b < u) {
                x[(a, b)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `S·X·S` with `S = diag(1 on u, −1 on l)`: the Z₂ image of a field.
    pub fn z2_flip(&self, x: &Mat<C64>) -> Mat<C64> {
        let s = self.grid.gauge(Sector::Minus);
        Mat::from_fn(self.len(), self.len(), |a, b| x[(a, b)] * (s[a] * s[b]))
    }

    /// `1 − K_σ` built in `O(M²)` from prefix sums, using
    /// `(G0₊Y)(a,b) = ½(2·Σ_{c<a} Y_cb + Y_ab − Σ_c Y_cb)` and
    /// `G0_σ = S·G0₊·S`.
    fn system_matrix(&self, sigma: &Mat<C64>, sector: Sector) -> Mat<C64> {
        let m = self.len();
        let s = self.grid.gauge(sector);
        let mut a = Mat::<C64>::zeros(m, m);
        let mut y = vec![C64::new(0.0, 0.0); m];
        for b in 0..m {
            let mut total = C64::new(0.0, 0.0);
            for c in 0..m {
                y[c] = sigma[(c, b)] * (s[c] * self.w[c] * self.w[b]);
                total += y[c];
            }
            let mut prefix = C64::new(0.0, 0.0);
            for r in 0..m {
                let k = (prefix * 2.0 + y[r] - total) * (0.5 * s[r]);
                a[(r, b)] = -k;
                prefix += y[r];
            }
            a[(b, b)] += C64::new(1.0, 0.0) - self.kappa[b];
        }
        a
    }

    /// `(ΔL_σ, g_σ)` for one sector; `g_σ` is antisymmetrized with zero
    /// diagonal.
    pub fn sector(&self, sigma: &Mat<C64>, sector: Sector) -> Result<(C64, Mat<C64>)> {
        let a = self.system_matrix(sigma, sector);
        let lu = a.partial_piv_lu();
        let ratio = lu_pivot_ratio(&lu);
        if !(ratio > 1e-14) {
            return Err(Error::IllConditioned(format!(
                "pivot ratio {ratio:.3e} in sector {sector:?}"
            )));
        }
        let logdet = lu_logdet(&lu);
        let g0 = self.free_green(sector);
        let g = lu.solve(&g0);
        let m = self.len();
        let g = Mat::from_fn(m, m, |i, k| {
            if i == k {
                C64::new(0.0, 0.0)
            } else {
                (g[(i, k)] - g[(k, i)]) * 0.5
            }
        });
        Ok((logdet, g))
    }

    /// One evaluation of the right-hand side: sector data and the weighted
    /// propagator for a given `Σ`.
    pub fn evaluate(&self, sigma: &Mat<C64>, mode: SolveMode) -> Result<Evaluation> {
        match mode {
            SolveMode::Symmetric => {
                let (l, g) = self.sector(sigma, Sector::Plus)?;
                Ok(Evaluation {
                    green: self.mask(&g),
                    logdets: [l, l],
                    weights: [0.5, 0.5],
                })
            }
            SolveMode::Keldysh => {
                let (l, g) = self.sector(sigma, Sector::Plus)?;
                let (lm, _) = self.logdet_only(sigma, Sector::Minus)?;
                Ok(Evaluation {
                    green: g,
                    logdets: [l, lm],
                    weights: [1.0, 0.0],
                })
            }
            SolveMode::TwoSector => {
                let (lp, gp) = self.sector(sigma, Sector::Plus)?;
                let (lm, gm) = self.sector(sigma, Sector::Minus)?;
                let weights = sector_weights(lp, lm);
                let m = self.len();
                let green = Mat::from_fn(m, m, |a, b| gp[(a, b)] * weights[0] + gm[(a, b)] * weights[1]);
                Ok(Evaluation {
                    green,
                    logdets: [lp, lm],
                    weights,
                })
            }
        }
    }

    fn logdet_only(&self, sigma: &Mat<C64>, sector: Sector) -> Result<(C64, ())> {
        let lu = self.system_matrix(sigma, sector).partial_piv_lu();
        Ok((lu_logdet(&lu), ()))
    }

    /// `J²·Σ_ab w_a w_b f_a f_b G_ab^q`, with the self-cell value `2^{−q}`
    /// on the diagonal.
    pub fn interaction_sum(&self, g: &Mat<C64>) -> C64 {
        let m = self.len();
        let diag = 2f64.powi(-(self.q as i32));
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for b in 0..m {
            for a in 0..m {
                let gq = if a == b {
                    C64::new(diag, 0.0)
                } else {
                    g[(a, b)].powu(self.q as u32)
                };
                let v = gq * self.f[a] * self.f[b] * (self.w[a] * self.w[b]);
                re.add(v.re);
                im.add(v.im);
            }
        }
        C64::new(re.value(), im.value()) * (self.j * self.j)
    }
}

/// Normalized `exp(2·Re L_σ)` for `σ = +1, −1`.
pub fn sector_weights(l_plus: C64, l_minus: C64) -> [f64; 2] {
    let d = 2.0 * (l_plus.re - l_minus.re);
    let wp = if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    };
    [wp, 1.0 - wp]
}

/// `⟨σ⟩ = w₊ − w₋ = tanh(Re(L₊ − L₋))`.
pub fn order_parameter_from_logdets(l_plus: C64, l_minus: C64) -> f64 {
    (l_plus.re - l_minus.re).tanh()
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub green: Mat<C64>,
    pub logdets: [C64; 2],
    pub weights: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub grid: ContourGrid,
    pub q: usize,
    pub j: f64,
    pub mode: SolveMode,
    pub green: Mat<C64>,
    pub self_energy: Mat<C64>,
    /// `ΔL_σ` for `σ = +1, −1`, relative to the free operator on this grid.
    pub sector_logdets: [C64; 2],
    pub weights: [f64; 2],
    pub order_parameter: f64,
    pub action_per_mode: f64,
    pub saddle_class: SaddleClass,
    pub iterations: usize,
    pub residual: f64,
}

/// Damped fixed-point iteration on `Σ` starting from `sigma`.
pub fn iterate(
    problem: &SaddleProblem,
    mode: SolveMode,
    sigma: Mat<C64>,
    opts: &SaddleOptions,
) -> Result<SaddleSolution> {
    opts.validate()?;
    let m = problem.len();
    if sigma.nrows() != m || sigma.ncols() != m {
        return Err(Error::InvalidParameter(format!(
            "seed is {}x{}, grid has {m} points",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let mut sigma = if mode == SolveMode::Symmetric {
        problem.mask(&sigma)
    } else {
        sigma
    };
    let mut damping = opts.damping;
    let mut prev_green: Option<Mat<C64>> = None;
    let mut last = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let (mut best, mut best_at) = (f64::INFINITY, 0);
    let mut eval;
    loop {
        eval = problem.evaluate(&sigma, mode)?;
        if let Some(pg) = &prev_green {
            residual = max_abs_diff(&eval.green, pg);
        }
        if !residual.is_finite() && prev_green.is_some() {
            return Err(Error::NotConverged {
                iterations,
                residual,
            });
        }
        if residual < opts.tol {
            break;
        }
        // round-off noise keeps producing marginal minima; only real progress counts
        if residual < 0.95 * best {
            (best, best_at) = (residual, iterations);
        } else if best < opts.tol * opts.floor_factor && iterations - best_at >= opts.stall_window {
            log::debug!("residual stalled at {residual:.2e} (best {best:.2e}), accepted as round-off floor");
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual,
            });
        }
        if residual > last {
            damping = (damping * 0.5).max(opts.damping_floor);
        }
        last = residual;
        let target = problem.self_energy(&eval.green);
        sigma = Mat::from_fn(m, m, |a, b| sigma[(a, b)] * (1.0 - damping) + target[(a, b)] * damping);
        prev_green = Some(eval.green.clone());
        iterations += 1;
    }
    log::debug!(
        "saddle {:?} t={} converged in {iterations} iterations (residual {residual:.2e})",
        mode,
        problem.grid.spec.t
    );
    let [lp, lm] = eval.logdets;
    if mode == SolveMode::TwoSector {
        let dphi = (2.0 * (lp.im - lm.im)).rem_euclid(2.0 * std::f64::consts::PI);
        let dphi = dphi.min(2.0 * std::f64::consts::PI - dphi);
        if dphi > 0.1 && eval.weights[0].min(eval.weights[1]) > 1e-6 {
            log::warn!("sector weight phases differ by {dphi:.3} rad");
        }
    }
    let order_parameter = match mode {
        SolveMode::Symmetric => 0.0,
        SolveMode::Keldysh => 1.0,
        SolveMode::TwoSector => eval.weights[0] - eval.weights[1],
    };
    let action_per_mode = action_from_parts(problem, mode, &eval);
    Ok(SaddleSolution {
        grid: problem.grid.clone(),
        q: problem.q,
        j: problem.j,
        mode,
        green: eval.green,
        self_energy: sigma,
        sector_logdets: eval.logdets,
        weights: eval.weights,
        order_parameter,
        action_per_mode,
        saddle_class: opts.classify(order_parameter),
        iterations,
        residual,
    })
}

fn action_from_parts(problem: &SaddleProblem, mode: SolveMode, eval: &Evaluation) -> f64 {
    let [lp, lm] = eval.logdets;
    let mixed = match mode {
        SolveMode::Keldysh => 2.0 * lp.re,
        _ => log_sum_exp(&[2.0 * lp.re, 2.0 * lm.re]),
    };
    let q = problem.q as f64;
    let interaction = problem.interaction_sum(&eval.green).re;
    3.0 * LN_2 + mixed - LN_2 - 2.0 * (1.0 - 1.0 / q) * interaction
}

/// Solve one `(β, t)` point from scratch.
///
/// `Symmetric` starts from the masked free self-energy. `Polarized` first
/// solves the ordinary Keldysh problem and then releases both sectors from
/// that solution.
pub fn sre_solve(
    q: usize,
    j: f64,
    spec: ContourSpec,
    strategy: SeedStrategy,
    opts: &SaddleOptions,
) -> Result<SaddleSolution> {
    let problem = SaddleProblem::from_spec(spec, q, j)?;
    match strategy {
        SeedStrategy::Symmetric => iterate(&problem, SolveMode::Symmetric, problem.free_seed(true), opts),
        SeedStrategy::Polarized => {
            let k = iterate(&problem, SolveMode::Keldysh, problem.free_seed(false), opts)?;
            iterate(&problem, SolveMode::TwoSector, k.self_energy, opts)
        }
    }
}

/// `ln Z_SRE/N` of a converged solution.
pub fn evaluate_action(sol: &SaddleSolution) -> f64 {
    sol.action_per_mode
}

/// `M₂/N = ln 2 − ln Z_SRE/N + 4f(β)`.
pub fn sre_value(sol: &SaddleSolution, ln_z_beta_per_mode: f64) -> f64 {
    LN_2 - sol.action_per_mode + 4.0 * ln_z_beta_per_mode
}

pub fn order_parameter(sol: &SaddleSolution) -> f64 {
    sol.order_parameter
}

/// Largest violation of the saddle equations when the solution is
/// substituted back: `max|G − F(Σ(G))|`.
pub fn fixed_point_residual(problem: &SaddleProblem, sol: &SaddleSolution) -> Result<f64> {
    let sigma = problem.self_energy(&sol.green);
    let sigma = if sol.mode == SolveMode::Symmetric {
        problem.mask(&sigma)
    } else {
        sigma
    };
    let eval = problem.evaluate(&sigma, sol.mode)?;
    Ok(max_abs_diff(&eval.green, &sol.green))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(beta: f64, t: f64, n: usize) -> ContourSpec {
        ContourSpec::new(beta, t, n, if t > 0.0 { n } else { 0 })
    }

    #[test]
    fn free_limit_action() {
        let sol = sre_solve(4, 0.0, spec(1.0, 1.0, 6), SeedStrategy::Symmetric, &Default::default()).unwrap();
        assert!((sol.action_per_mode - 3.0 * LN_2).abs() < 1e-14);
        assert!((sre_value(&sol, 0.5 * LN_2)).abs() < 1e-14);
        let g0 = sol.grid.len();
        assert_eq!(sol.green.nrows(), g0);
    }

    #[test]
    fn synthetic_order_parameter() {
        let lm = C64::new(0.3, 0.1);
        let lp = lm + 10.0;
        let s = order_parameter_from_logdets(lp, lm);
        assert!((s - 10f64.tanh()).abs() < 1e-15);
        let w = sector_weights(lp, lm);
        assert!((w[0] - w[1] - s).abs() < 1e-15);
        assert!((w[0] + w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn prefix_kernel_matches_dense_product() {
        let p = SaddleProblem::from_spec(ContourSpec::new(1.0, 0.7, 3, 4), 4, 1.3).unwrap();
        let m = p.len();
        let sigma = Mat::from_fn(m, m, |a, b| C64::new((a * 7 + b) as f64 * 0.01, (a as f64 - b as f64) * 0.02));
        for sector in Sector::BOTH {
            let a = p.system_matrix(&sigma, sector);
            let g0 = p.free_green(sector);
            let x = Mat::from_fn(m, m, |r, c| sigma[(r, c)] * (p.w[r] * p.w[c]));
            let k = &g0 * &x;
            for r in 0..m {
                for c in 0..m {
                    let mut want = -k[(r, c)];
                    if r == c {
                        want += C64::new(1.0, 0.0) - p.kappa[r];
                    }
                    assert!((a[(r, c)] - want).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn symmetric_solution_is_block_diagonal() {
        let sol = sre_solve(4, 1.0, spec(1.0, 1.0, 10), SeedStrategy::Symmetric, &Default::default()).unwrap();
        let u = sol.grid.u_len();
        let m = sol.grid.len();
        for a in 0..m {
            for b in 0..m {
                if (a < u) != (b < u) {
                    assert_eq!(sol.green[(a, b)], C64::new(0.0, 0.0));
                }
                assert!((sol.green[(a, b)] + sol.green[(b, a)]).norm() < 1e-9);
            }
        }
        assert_eq!(sol.saddle_class, SaddleClass::Symmetric);
        assert!(sol.residual < 1e-10);
    }
}
