//! Time sweeps over both saddles, dominant-saddle selection, transition
//! times and phase diagrams.

use std::f64::consts::{LN_2, PI};

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::ContourSpec;
use crate::error::{Error, Result};
use crate::fitkit::{fit_boundary, FitOptions, FitResult};
use crate::sd::saddle::{iterate, SaddleClass, SaddleOptions, SaddleProblem, SaddleSolution, SolveMode};
use crate::sd::thermal::{free_energy, SlopeSweep, ThermalOptions};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionParams {
    /// O(1) offset of the finite-`N` sum; informational only.
    pub c0_const: f64,
    /// Schwarzian coefficient per mode.
    pub schwarzian_c: f64,
}

/// `M₂^(p)/N = 2 ln 2 − 4·(ln SFF_{β/2}(t)/N − f(β))` from the slope saddle.
pub fn predicted_m2(beta: f64, t: f64, q: usize, j: f64, opts: &ThermalOptions) -> Result<f64> {
    let f = free_energy(beta, q, j, opts)?;
    let mut sweep = SlopeSweep::new(beta, q, j, *opts);
    if j == 0.0 {
        return Ok(2.0 * LN_2 - 4.0 * (LN_2 - f));
    }
    Ok(2.0 * LN_2 - 4.0 * (sweep.advance(t)? - f))
}

/// Prediction along an increasing time grid with one continued sweep.
pub fn predicted_curve(beta: f64, times: &[f64], q: usize, j: f64, opts: &ThermalOptions) -> Result<Vec<f64>> {
    let f = free_energy(beta, q, j, opts)?;
    if j == 0.0 {
        return Ok(times.iter().map(|_| 2.0 * LN_2 - 4.0 * (LN_2 - f)).collect());
    }
    let mut sweep = SlopeSweep::new(beta, q, j, *opts);
    times
        .iter()
        .map(|&t| Ok(2.0 * LN_2 - 4.0 * (sweep.advance(t)? - f)))
        .collect()
}

/// Schwarzian form of the prediction. With `with_log = false` only the
/// extensive part is returned.
pub fn schwarzian_m2p(beta: f64, t: f64, m2_0: f64, c: f64, with_log: bool) -> f64 {
    let b2 = beta * beta;
    let x = 4.0 * t * t;
    let mut v = m2_0 + 32.0 * PI * PI * c / beta * x / (b2 + x);
    if with_log {
        v += 6.0 * ((b2 + x) / b2).ln();
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveOptions {
    pub q: usize,
    pub j: f64,
    pub n_im: usize,
    pub n_re: usize,
    pub saddle: SaddleOptions,
    pub thermal: ThermalOptions,
    /// Track the symmetry-broken branch as well.
    pub ssb: bool,
    /// Bisection resolution for the transition time.
    pub resolution: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            q: 4,
            j: 1.0,
            n_im: 200,
            n_re: 200,
            saddle: SaddleOptions::default(),
            thermal: ThermalOptions::default(),
            ssb: true,
            resolution: 0.05,
        }
    }
}

/// Keeps the last converged self-energies of each branch so the next time
/// step starts on the same branch. The grid point count is fixed, so a
/// previous `Σ` is reused entry by entry.
#[derive(Debug, Clone)]
pub struct BranchTracker {
    pub beta: f64,
    pub opts: CurveOptions,
    sym: Option<Mat<C64>>,
    keldysh: Option<Mat<C64>>,
    ssb: Option<Mat<C64>>,
}

impl BranchTracker {
    pub fn new(beta: f64, opts: CurveOptions) -> Self {
        Self {
            beta,
            opts,
            sym: None,
            keldysh: None,
            ssb: None,
        }
    }

    fn problem(&self, t: f64) -> Result<SaddleProblem> {
        let spec = ContourSpec::new(self.beta, t, self.opts.n_im, self.opts.n_re);
        SaddleProblem::from_spec(spec, self.opts.q, self.opts.j)
    }

    pub fn symmetric(&mut self, t: f64) -> Result<SaddleSolution> {
        let p = self.problem(t)?;
        let seed = self.sym.clone().unwrap_or_else(|| p.free_seed(true));
        let sol = iterate(&p, SolveMode::Symmetric, seed, &self.opts.saddle)?;
        self.sym = Some(sol.self_energy.clone());
        Ok(sol)
    }

    /// Two-sector solve continued from the previous symmetry-broken
    /// solution, or released from the Keldysh saddle when there is none.
    pub fn broken(&mut self, t: f64) -> Result<SaddleSolution> {
        let p = self.problem(t)?;
        let seed = match self.ssb.clone() {
            Some(s) => s,
            None => {
                let k_seed = self.keldysh.clone().unwrap_or_else(|| p.free_seed(false));
                let k = iterate(&p, SolveMode::Keldysh, k_seed, &self.opts.saddle)?;
                self.keldysh = Some(k.self_energy.clone());
                k.self_energy
            }
        };
        let sol = iterate(&p, SolveMode::TwoSector, seed, &self.opts.saddle)?;
        self.ssb = match sol.saddle_class {
            SaddleClass::Symmetric => None,
            _ => Some(sol.self_energy.clone()),
        };
        Ok(sol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrePoint {
    pub t: f64,
    pub m2_symmetric: Option<f64>,
    pub m2_ssb: Option<f64>,
    pub m2_dominant: f64,
    /// `⟨σ⟩` of the dominant saddle.
    pub order_param: f64,
    /// `⟨σ⟩` of the two-sector solve, whatever its class.
    pub order_param_ssb: Option<f64>,
    pub lnz_symmetric: Option<f64>,
    pub lnz_ssb: Option<f64>,
    pub ssb_class: Option<SaddleClass>,
    pub dominant: SaddleClass,
}

impl SrePoint {
    /// `ln Z_SRE(sym) − ln Z_SRE(ssb)` when both branches exist.
    pub fn action_gap(&self) -> Option<f64> {
        Some(self.lnz_symmetric? - self.lnz_ssb?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SreCurve {
    pub beta: f64,
    /// `ln Z(β)/N` used to convert actions to `M₂/N`.
    pub ln_z_beta: f64,
    pub points: Vec<SrePoint>,
}

fn solve_point(tr: &mut BranchTracker, t: f64, f_beta: f64) -> Result<SrePoint> {
    let sym = tr.symmetric(t)?;
    let lnz_sym = sym.action_per_mode;
    let m2_sym = LN_2 - lnz_sym + 4.0 * f_beta;
    let (mut m2_ssb, mut lnz_ssb, mut class, mut osig) = (None, None, None, None);
    if tr.opts.ssb {
        match tr.broken(t) {
            Ok(b) => {
                class = Some(b.saddle_class);
                osig = Some(b.order_parameter);
                if b.saddle_class != SaddleClass::Symmetric {
                    lnz_ssb = Some(b.action_per_mode);
                    m2_ssb = Some(LN_2 - b.action_per_mode + 4.0 * f_beta);
                }
            }
            Err(e) if e.is_convergence_failure() => {
                log::warn!("ssb branch lost at t = {t}: {e}");
                tr.ssb = None;
            }
            Err(e) => return Err(e),
        }
    }
    let ssb_wins = matches!(lnz_ssb, Some(l) if l > lnz_sym);
    Ok(SrePoint {
        t,
        m2_symmetric: Some(m2_sym),
        m2_ssb,
        m2_dominant: if ssb_wins { m2_ssb.unwrap() } else { m2_sym },
        order_param: if ssb_wins { osig.unwrap_or(0.0) } else { 0.0 },
        order_param_ssb: osig,
        lnz_symmetric: Some(lnz_sym),
        lnz_ssb,
        ssb_class: class,
        dominant: if ssb_wins {
            class.unwrap_or(SaddleClass::Ssb)
        } else {
            SaddleClass::Symmetric
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionStatus {
    CrossingFound,
    NoneBelowTmax,
    /// The symmetry-broken branch never appeared in the window.
    Undetermined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionSweep {
    pub curve: SreCurve,
    pub t_star: Option<f64>,
    pub status: TransitionStatus,
}

/// Sweep `times` (increasing) on both branches. The first sign change of
/// the action gap is refined by bisection to `opts.resolution`.
pub fn transition_sweep(beta: f64, times: &[f64], opts: &CurveOptions) -> Result<TransitionSweep> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be increasing".into()));
    }
    let f_beta = free_energy(beta, opts.q, opts.j, &opts.thermal)?;
    let mut tr = BranchTracker::new(beta, *opts);
    let mut points = Vec::with_capacity(times.len());
    let mut t_star = None;
    let mut saw_ssb = false;
    let mut prev: Option<(SrePoint, BranchTracker)> = None;
    for &t in times {
        let p = solve_point(&mut tr, t, f_beta)?;
        log::info!(
            "beta={beta} t={t}: m2_sym={:.6} lnz_sym={:.6} lnz_ssb={:?} <sigma>={:?}",
            p.m2_symmetric.unwrap_or(f64::NAN),
            p.lnz_symmetric.unwrap_or(f64::NAN),
            p.lnz_ssb,
            p.order_param_ssb
        );
        saw_ssb |= p.lnz_ssb.is_some();
        if t_star.is_none() && opts.ssb {
            if let (Some((pp, state)), Some(gap)) = (&prev, p.action_gap()) {
                let gap_prev = pp.action_gap().unwrap_or(f64::INFINITY);
                if gap_prev > 0.0 && gap <= 0.0 {
                    t_star = Some(bisect(state.clone(), pp.t, t, f_beta, opts.resolution)?);
                }
            }
        }
        prev = Some((p, tr.clone()));
        points.push(p);
    }
    let status = match (t_star, saw_ssb) {
        (Some(_), _) => TransitionStatus::CrossingFound,
        (None, true) => TransitionStatus::NoneBelowTmax,
        (None, false) => TransitionStatus::Undetermined,
    };
    Ok(TransitionSweep {
        curve: SreCurve {
            beta,
            ln_z_beta: f_beta,
            points,
        },
        t_star,
        status,
    })
}

fn bisect(mut left: BranchTracker, mut a: f64, mut b: f64, f_beta: f64, resolution: f64) -> Result<f64> {
    while b - a > resolution {
        let mid = 0.5 * (a + b);
        let mut trial = left.clone();
        let p = solve_point(&mut trial, mid, f_beta)?;
        // a missing ssb branch means the symmetric saddle still dominates
        if p.action_gap().is_none_or(|g| g > 0.0) {
            a = mid;
            left = trial;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// `M₂/N` on both saddles along `times`.
pub fn m2_curve(beta: f64, times: &[f64], opts: &CurveOptions) -> Result<SreCurve> {
    let no_bisect = CurveOptions {
        resolution: f64::INFINITY,
        ..*opts
    };
    Ok(transition_sweep(beta, times, &no_bisect)?.curve)
}

/// Action-crossing time in `[t_lo, t_hi]`, scanned with step `dt`.
pub fn find_transition(beta: f64, t_lo: f64, t_hi: f64, dt: f64, opts: &CurveOptions) -> Result<TransitionSweep> {
    if !(dt > 0.0 && t_hi > t_lo && t_lo >= 0.0) {
        return Err(Error::InvalidParameter("need 0 <= t_lo < t_hi and dt > 0".into()));
    }
    let n = ((t_hi - t_lo) / dt).round() as usize;
    let times: Vec<f64> = (0..=n).map(|k| t_lo + (t_hi - t_lo) * k as f64 / n as f64).collect();
    transition_sweep(beta, &times, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub beta_j: f64,
    pub t_star_j: Option<f64>,
    pub status: TransitionStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub points: Vec<PhasePoint>,
    pub boundary_fit: Option<FitResult>,
    pub fit_error: Option<String>,
    /// One sweep per β, kept for plotting.
    pub sweeps: Vec<TransitionSweep>,
}

impl PhaseDiagram {
    /// True when `t*` increases with `βJ` over the crossing points.
    pub fn is_monotone(&self) -> bool {
        let mut c: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter_map(|p| Some((p.beta_j, p.t_star_j?)))
            .collect();
        c.sort_by(|x, y| x.0.total_cmp(&y.0));
        c.windows(2).all(|w| w[1].1 > w[0].1)
    }
}

/// Independent sweeps per `β` (run in parallel), then a boundary fit when
/// at least three crossings were found.
pub fn phase_diagram(betas: &[f64], t_max: f64, dt: f64, opts: &CurveOptions) -> Result<PhaseDiagram> {
    let sweeps: Vec<TransitionSweep> = betas
        .par_iter()
        .map(|&b| find_transition(b, 0.0, t_max, dt, opts))
        .collect::<Result<_>>()?;
    let points: Vec<PhasePoint> = betas
        .iter()
        .zip(&sweeps)
        .map(|(&b, s)| PhasePoint {
            beta_j: b * opts.j,
            t_star_j: s.t_star.map(|t| t * opts.j),
            status: s.status,
        })
        .collect();
    let crossings: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| Some((p.t_star_j?, p.beta_j)))
        .collect();
    let (boundary_fit, fit_error) = match fit_boundary(&crossings, &FitOptions::default()) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(PhaseDiagram {
        points,
        boundary_fit,
        fit_error,
        sweeps,
    })
}
