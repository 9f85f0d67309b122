//! Complex-temperature Schwinger–Dyson solver on the thermal circle.
//!
//! Imaginary time is rescaled to `u ∈ [0, 1)` so that the inverse
//! temperature only enters through `J̃ = β_c·J`, which lets `β_c` be complex.
//! Fields are sampled at `L = 2·n_freq` midpoints `u_k = (k+½)/L` against
//! fermionic frequencies `ω_n = 2π(n+½)`, `n ∈ [−n_freq, n_freq)`.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalOptions {
    /// Half-width of the Matsubara window; the grid has `2·n_freq` points.
    pub n_freq: usize,
    pub tol: f64,
    pub damping: f64,
    pub damping_floor: f64,
    pub max_iter: usize,
    /// Combine `n_freq` and `n_freq/2` solutions to cancel the `1/n_freq`
    /// truncation error of the trace-log sum.
    pub richardson: bool,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self {
            n_freq: 1 << 14,
            tol: 1e-12,
            damping: 0.5,
            damping_floor: 0.01,
            max_iter: 20_000,
            richardson: true,
        }
    }
}

impl ThermalOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_freq < 16 || !self.n_freq.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "n_freq must be a power of two >= 16, got {}",
                self.n_freq
            )));
        }
        if !(self.tol > 0.0) || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(
                "tol must be positive and damping in (0, 1]".into(),
            ));
        }
        if !(self.damping_floor > 0.0 && self.damping_floor <= self.damping) {
            return Err(Error::InvalidParameter(
                "damping_floor must be in (0, damping]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalSolution {
    pub beta_complex: C64,
    pub q: usize,
    pub j: f64,
    /// `G(iω_n)` ordered by `n = −n_freq … n_freq−1`.
    pub green: Vec<C64>,
    pub self_energy: Vec<C64>,
    /// `ln Z(β_c)/N`, extrapolated when Richardson is on.
    pub ln_z_per_mode: C64,
    /// Value on the full window before extrapolation.
    pub ln_z_raw: C64,
    pub iterations: usize,
    pub residual: f64,
}

struct Transform {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `e^{−iπ(n+½)/L}` per frequency slot.
    freq_twiddle: Vec<C64>,
    /// `e^{−iπk/L}` per time slot.
    time_twiddle: Vec<C64>,
    omega: Vec<f64>,
}

impl Transform {
    fn new(n_freq: usize) -> Self {
        let len = 2 * n_freq;
        let mut planner = FftPlanner::new();
        let lf = len as f64;
        let freqs = (0..len).map(|m| m as f64 - n_freq as f64 + 0.5);
        Self {
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
            freq_twiddle: freqs
                .clone()
                .map(|nh| C64::from_polar(1.0, -PI * nh / lf))
                .collect(),
            time_twiddle: (0..len)
                .map(|k| C64::from_polar(1.0, -PI * k as f64 / lf))
                .collect(),
            omega: freqs.map(|nh| 2.0 * PI * nh).collect(),
        }
    }

    fn slot(&self, m: usize) -> usize {
        // frequency index m ↔ n = m − n_freq, stored at n mod L
        (m + self.len / 2) % self.len
    }

    /// `G(u_k) = Σ_n e^{−iω_n u_k} G_n`.
    fn to_time(&self, gn: &[C64]) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.len];
        for m in 0..self.len {
            buf[self.slot(m)] = gn[m] * self.freq_twiddle[m];
        }
        self.fwd.process(&mut buf);
        for (b, tw) in buf.iter_mut().zip(&self.time_twiddle) {
            *b *= tw;
        }
        buf
    }

    /// `X_n = ∫₀¹ du e^{iω_n u} X(u)` by the midpoint rule.
    fn to_freq(&self, xu: &[C64]) -> Vec<C64> {
        let mut buf: Vec<C64> = xu
            .iter()
            .zip(&self.time_twiddle)
            .map(|(x, tw)| x * tw.conj())
            .collect();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        (0..self.len)
            .map(|m| buf[self.slot(m)] * self.freq_twiddle[m].conj() * scale)
            .collect()
    }
}

struct Raw {
    green: Vec<C64>,
    self_energy: Vec<C64>,
    ln_z: C64,
    iterations: usize,
    residual: f64,
}

fn solve_window(
    jt2: C64,
    q: usize,
    opts: &ThermalOptions,
    n_freq: usize,
    seed: Option<&[C64]>,
) -> Result<Raw> {
    let tr = Transform::new(n_freq);
    let len = tr.len;
    let mut g: Vec<C64> = match seed {
        Some(s) if s.len() == len => s.to_vec(),
        _ => tr.omega.iter().map(|&w| 1.0 / C64::new(0.0, -w)).collect(),
    };
    let sigma_of = |g: &[C64]| -> (Vec<C64>, Vec<C64>) {
        let gu = tr.to_time(g);
        let su: Vec<C64> = gu.iter().map(|x| jt2 * x.powu(q as u32 - 1)).collect();
        (tr.to_freq(&su), gu)
    };
    let mut damping = opts.damping;
    let mut last = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (sw, _) = sigma_of(&g);
        residual = 0.0;
        for m in 0..len {
            let new = 1.0 / (C64::new(0.0, -tr.omega[m]) - sw[m]);
            residual = residual.max((new - g[m]).norm());
            g[m] = g[m] * (1.0 - damping) + new * damping;
        }
        if !residual.is_finite() {
            return Err(Error::NotConverged {
                iterations,
                residual,
            });
        }
        if residual < opts.tol {
            break;
        }
        if residual > last {
            damping = (damping * 0.5).max(opts.damping_floor);
        }
        last = residual;
    }
    if residual >= opts.tol {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    let (sw, gu) = sigma_of(&g);
    let mut tl_re = CompensatedSum::new();
    let mut tl_im = CompensatedSum::new();
    for m in 0..len {
        let v = (1.0 + sw[m] / C64::new(0.0, tr.omega[m])).ln();
        tl_re.add(v.re);
        tl_im.add(v.im);
    }
    let mut gq_re = CompensatedSum::new();
    let mut gq_im = CompensatedSum::new();
    for x in &gu {
        let v = x.powu(q as u32);
        gq_re.add(v.re);
        gq_im.add(v.im);
    }
    let trace_log = C64::new(tl_re.value(), tl_im.value());
    let mean_gq = C64::new(gq_re.value(), gq_im.value()) / len as f64;
    let ln_z = 0.5 * LN_2 + 0.5 * trace_log - 0.5 * (1.0 - 1.0 / q as f64) * jt2 * mean_gq;
    Ok(Raw {
        green: g,
        self_energy: sw,
        ln_z,
        iterations,
        residual,
    })
}

/// Solve at complex inverse temperature `beta_complex`, optionally seeded
/// with a converged `G(iω_n)` on the same window.
pub fn thermal_solve_seeded(
    beta_complex: C64,
    q: usize,
    j: f64,
    opts: &ThermalOptions,
    seed: Option<&[C64]>,
) -> Result<ThermalSolution> {
    opts.validate()?;
    if !(beta_complex.re > 0.0) && !(beta_complex.re == 0.0 && j == 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Re(beta) must be positive, got {beta_complex}"
        )));
    }
    if q < 2 || q % 2 != 0 {
        return Err(Error::InvalidParameter(format!("q must be even, got {q}")));
    }
    let jt2 = (beta_complex * j).powu(2);
    let full = solve_window(jt2, q, opts, opts.n_freq, seed)?;
    let ln_z = if opts.richardson {
        let nh = opts.n_freq / 2;
        let mid = &full.green[nh..nh + 2 * nh];
        let half = solve_window(jt2, q, opts, nh, Some(mid))?;
        2.0 * full.ln_z - half.ln_z
    } else {
        full.ln_z
    };
    Ok(ThermalSolution {
        beta_complex,
        q,
        j,
        green: full.green,
        self_energy: full.self_energy,
        ln_z_per_mode: ln_z,
        ln_z_raw: full.ln_z,
        iterations: full.iterations,
        residual: full.residual,
    })
}

pub fn thermal_solve(beta_complex: C64, q: usize, j: f64, opts: &ThermalOptions) -> Result<ThermalSolution> {
    thermal_solve_seeded(beta_complex, q, j, opts, None)
}

/// `Re ln Z(β)/N` at real `β`.
pub fn free_energy(beta: f64, q: usize, j: f64, opts: &ThermalOptions) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.5 * LN_2);
    }
    Ok(thermal_solve(C64::new(beta, 0.0), q, j, opts)?.ln_z_per_mode.re)
}

/// `S^(2)(β)/N = 2f(β) − f(2β)`.
pub fn renyi2_per_mode(beta: f64, q: usize, j: f64, opts: &ThermalOptions) -> Result<f64> {
    Ok(2.0 * free_energy(beta, q, j, opts)? - free_energy(2.0 * beta, q, j, opts)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopePoint {
    pub t: f64,
    /// `2·Re f(β/2 + it)`.
    pub ln_sff: f64,
    pub iterations: usize,
}

/// Continues the slope SFF along increasing `t`, one seeded solve per step.
#[derive(Debug, Clone)]
pub struct SlopeSweep {
    pub beta: f64,
    pub q: usize,
    pub j: f64,
    pub opts: ThermalOptions,
    /// Largest step in `t` between consecutive solves.
    pub max_step: f64,
    /// Allowed deviation of `ln_sff` from linear extrapolation of the
    /// previous two points before the branch is declared lost.
    pub jump_tol: f64,
    t: f64,
    seed: Option<Vec<C64>>,
    history: Vec<SlopePoint>,
}

impl SlopeSweep {
    pub fn new(beta: f64, q: usize, j: f64, opts: ThermalOptions) -> Self {
        Self {
            beta,
            q,
            j,
            opts,
            max_step: 0.25,
            jump_tol: 0.05,
            t: 0.0,
            seed: None,
            history: Vec::new(),
        }
    }

    fn step_to(&mut self, t: f64) -> Result<SlopePoint> {
        let bc = C64::new(self.beta / 2.0, t);
        let sol = thermal_solve_seeded(bc, self.q, self.j, &self.opts, self.seed.as_deref())?;
        let p = SlopePoint {
            t,
            ln_sff: 2.0 * sol.ln_z_per_mode.re,
            iterations: sol.iterations,
        };
        if let [.., a, b] = self.history.as_slice() {
            let slope = (b.ln_sff - a.ln_sff) / (b.t - a.t);
            let guess = b.ln_sff + slope * (t - b.t);
            if (p.ln_sff - guess).abs() > self.jump_tol {
                return Err(Error::BranchLost { t });
            }
        }
        self.seed = Some(sol.green);
        self.t = t;
        self.history.push(p);
        Ok(p)
    }

    /// Advance to `t` (≥ the current time) and return the slope there.
    pub fn advance(&mut self, t: f64) -> Result<f64> {
        if self.history.is_empty() {
            self.step_to(0.0)?;
        }
        if t < self.t {
            return Err(Error::InvalidParameter(format!(
                "slope sweep cannot move backwards from {} to {t}",
                self.t
            )));
        }
        while t - self.t > 1e-12 {
            let next = if t - self.t > self.max_step {
                self.t + self.max_step
            } else {
                t
            };
            self.step_to(next)?;
        }
        Ok(self.history.last().unwrap().ln_sff)
    }

    pub fn history(&self) -> &[SlopePoint] {
        &self.history
    }
}

/// `ln SFF_{β/2}(t)/N` on the slope saddle, continued from `t = 0`.
pub fn sff_slope(beta: f64, t: f64, q: usize, j: f64, opts: &ThermalOptions) -> Result<f64> {
    if j == 0.0 {
        return Ok(LN_2);
    }
    SlopeSweep::new(beta, q, j, *opts).advance(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n_freq: usize) -> ThermalOptions {
        ThermalOptions {
            n_freq,
            ..Default::default()
        }
    }

    #[test]
    fn transforms_round_trip() {
        let tr = Transform::new(64);
        let g: Vec<C64> = tr.omega.iter().map(|&w| C64::new(0.3, -1.0 / w)).collect();
        let back = tr.to_freq(&tr.to_time(&g));
        for (a, b) in g.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn free_propagator_in_time() {
        let tr = Transform::new(1 << 12);
        let g0: Vec<C64> = tr.omega.iter().map(|&w| 1.0 / C64::new(0.0, -w)).collect();
        let gu = tr.to_time(&g0);
        // truncated sum converges like 1/n_freq away from the ends
        let mid = gu[tr.len / 2];
        assert!((mid - C64::new(0.5, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn free_limit_is_exact() {
        let f = thermal_solve(C64::new(1.0, 0.0), 4, 0.0, &opts(256)).unwrap();
        assert!((f.ln_z_per_mode - C64::new(0.5 * LN_2, 0.0)).norm() < 1e-12);
        assert_eq!(sff_slope(1.0, 3.0, 4, 0.0, &opts(256)).unwrap(), LN_2);
    }

    #[test]
    fn moderate_coupling_reference() {
        let f = free_energy(1.0, 4, 1.0, &opts(1 << 10)).unwrap();
        assert!((f - 0.354_087_2).abs() < 2e-6, "{f}");
    }

    #[test]
    fn slope_at_zero_time() {
        let o = opts(1 << 10);
        let s = sff_slope(2.0, 0.0, 4, 1.0, &o).unwrap();
        assert!((s - 2.0 * free_energy(1.0, 4, 1.0, &o).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(thermal_solve(C64::new(-1.0, 0.0), 4, 1.0, &opts(64)).is_err());
        assert!(thermal_solve(C64::new(1.0, 0.0), 4, 1.0, &opts(100)).is_err());
    }
}
