//! Fast self-checks of both engines against exact identities.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tfdmagic_core::contour::{build_contour, derivative_operator, free_propagator};
use tfdmagic_core::ed::{
    averaged_coefficient, build_epr, build_tfd, evolve, exact_sff, majorana_spectrum, stabilizer_renyi,
    wightman_coefficient, CouplingTensor, Evolver, Hamiltonian, MajoranaString, ModelParams,
};
use tfdmagic_core::sd::{free_energy, sre_solve, SeedStrategy, ThermalOptions};
use tfdmagic_core::{ContourSpec, Sector, C64};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn abs(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        let error = (value - reference).abs();
        Self {
            name: name.into(),
            value,
            reference,
            error,
            tolerance,
            pass: error <= tolerance,
        }
    }

    fn rel(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Self {
        let mut c = Self::abs(name, value, reference, tolerance);
        c.error /= reference.abs();
        c.pass = c.error <= tolerance;
        c
    }

    /// Records the largest residual seen; the reference is zero.
    fn worst(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self::abs(name, residual, 0.0, tolerance)
    }
}

fn ed_checks(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.model.seed);
    for n in [4usize, 6] {
        let params = ModelParams::new(n, 4, cfg.model.j_coupling, cfg.model.seed);
        let epr = build_epr(n)?;
        let (mut ident, mut wight, mut real, mut norm, mut bound) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for r in 0..3 {
            let c = CouplingTensor::sample_stream(&params, r)?;
            let h = Hamiltonian::new(&c)?;
            for beta in [0.0, 1.0] {
                let tfd = build_tfd(&h, beta, &epr)?;
                let ev = Evolver::new(&h, &tfd.state);
                for t in [0.0, 0.5, 2.0] {
                    let s = majorana_spectrum(&ev.at(t), n)?;
                    let mean = (0..1u32 << n)
                        .map(|v| {
                            let e = MajoranaString::new(n, v, v).phase_exponent();
                            let sign = if (e / 2) % 2 == 0 { 1.0 } else { -1.0 };
                            sign * s.get(v, v).expect("stored")
                        })
                        .sum::<f64>()
                        / (1u64 << n) as f64;
                    ident = ident.max((mean - averaged_coefficient(&h, beta, t)).abs());
                    for _ in 0..10 {
                        let (vl, vr) = (rng.random_range(0..1u32 << n), rng.random_range(0..1u32 << n));
                        let w = wightman_coefficient(&h, beta, t, vl, vr)?;
                        wight = wight.max((w - s.get(vl, vr).expect("stored")).abs());
                    }
                    real = real.max(s.max_imag);
                    norm = norm.max((s.sum_sq - (1u64 << n) as f64).abs());
                    let m2 = stabilizer_renyi(&s);
                    bound = bound.max((-m2).max(m2 - n as f64 * LN_2).max(0.0));
                }
            }
        }
        out.push(Check::worst(format!("diagonal_mean_identity_n{n}"), ident, 1e-10));
        out.push(Check::worst(format!("wightman_equals_spectrum_n{n}"), wight, 1e-10));
        out.push(Check::worst(format!("coefficients_real_n{n}"), real, 1e-10));
        out.push(Check::worst(format!("parseval_n{n}"), norm, 1e-9));
        out.push(Check::worst(format!("m2_bounds_n{n}"), bound, 1e-9));
        let e = majorana_spectrum(&epr, n)?;
        out.push(Check::worst(format!("epr_m2_n{n}"), stabilizer_renyi(&e).abs(), 1e-10));
        let free = Hamiltonian::new(&CouplingTensor::zero(n, 4))?;
        let worst = [0.0, 1.0, 3.0]
            .iter()
            .map(|&t| -> Result<f64, CliError> {
                Ok(stabilizer_renyi(&majorana_spectrum(&evolve(&free, t, &epr), n)?).abs())
            })
            .try_fold(0.0f64, |a, x| x.map(|x| a.max(x)))?;
        out.push(Check::worst(format!("free_m2_n{n}"), worst, 1e-10));
    }
    // single coupling: two levels at ±J'/4, each half the spectrum
    let jp = 0.7;
    let h = Hamiltonian::new(&CouplingTensor::single(4, vec![0, 1, 2, 3], jp)?)?;
    let mut sff = 0.0f64;
    for k in 0..20 {
        let (beta, t) = (0.1 * k as f64, 0.37 * k as f64);
        let s = C64::new(beta, t) * (jp / 4.0);
        let z = 2.0 * ((-s).exp() + s.exp());
        sff = sff.max((exact_sff(&h, beta, t) - z.norm_sqr()).abs());
    }
    out.push(Check::worst("two_level_sff", sff, 1e-10));
    Ok(())
}

fn sd_checks(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let q = cfg.model.q;
    let th = ThermalOptions {
        n_freq: 1 << 12,
        ..cfg.solver.thermal
    };
    out.push(Check::abs("free_energy_j0", free_energy(1.0, q, 0.0, &th)?, 0.5 * LN_2, 1e-12));
    let beta = 0.05;
    let f = free_energy(beta, q, 1.0, &th)?;
    let curvature = 2.0 * (f - 0.5 * LN_2) / (beta * beta);
    let want = 1.0 / (q as f64 * (1u64 << q) as f64);
    out.push(Check::rel("high_t_curvature", curvature, want, 1e-2));

    let grid = build_contour(ContourSpec::new(1.0, 2.0, 16, 16))?;
    let mut inv = 0.0f64;
    for s in Sector::BOTH {
        let d = derivative_operator(&grid, s)?;
        let p = &d.matrix * free_propagator(&grid, s);
        for i in 0..p.nrows() {
            for j in 0..p.ncols() {
                let id = if i == j { 1.0 } else { 0.0 };
                inv = inv.max((p[(i, j)] - C64::new(id, 0.0)).norm());
            }
        }
    }
    out.push(Check::worst("derivative_inverts_free_propagator", inv, 1e-10));

    let free = sre_solve(q, 0.0, ContourSpec::new(1.0, 2.0, 16, 16), SeedStrategy::Symmetric, &cfg.solver.saddle)?;
    let m2 = LN_2 - free.action_per_mode + 4.0 * (0.5 * LN_2);
    out.push(Check::worst("saddle_free_m2", m2.abs(), 1e-10));
    Ok(())
}

/// Runs every check and returns them all; failures are reported, not raised.
pub fn run_checks(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    ed_checks(cfg, &mut out)?;
    sd_checks(cfg, &mut out)?;
    Ok(out)
}
