//! Disorder-averaged ED sweeps with fixed per-realization streams.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::couplings::{CouplingTensor, ModelParams};
use super::hamiltonian::Hamiltonian;
use super::spectrum::{majorana_spectrum, stabilizer_renyi};
use super::state::{build_epr, build_tfd, Evolver};
use super::thermo::exact_sff;
use crate::error::Result;
use crate::numeric::CompensatedSum;

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().copied().collect::<CompensatedSum>().value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs
        .iter()
        .map(|x| (x - mean).powi(2))
        .collect::<CompensatedSum>()
        .value()
        / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run `f` on realizations `0..count`, each with its own coupling stream.
/// Results come back in realization order regardless of scheduling.
pub fn for_realizations<T, F>(params: &ModelParams, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &CouplingTensor) -> Result<T> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|r| {
            let c = CouplingTensor::sample_stream(params, r as u64)?;
            f(r, &c)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdCurvePoint {
    pub t: f64,
    pub m2_mean: f64,
    pub m2_stderr: f64,
    pub sff_mean: f64,
    pub sff_stderr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdCurve {
    pub n: usize,
    pub beta: f64,
    pub realizations: usize,
    pub points: Vec<EdCurvePoint>,
}

/// Disorder-averaged `M₂(t)` and `SFF_β(t)` for TFD states.
pub fn ed_curve(params: &ModelParams, realizations: usize, beta: f64, times: &[f64]) -> Result<EdCurve> {
    let n = params.n_majorana;
    let epr = build_epr(n)?;
    let per: Vec<Vec<(f64, f64)>> = for_realizations(params, realizations, |_, c| {
        let h = Hamiltonian::new(c)?;
        let tfd = build_tfd(&h, beta, &epr)?;
        let ev = Evolver::new(&h, &tfd.state);
        times
            .iter()
            .map(|&t| {
                let s = majorana_spectrum(&ev.at(t), n)?;
                Ok((stabilizer_renyi(&s), exact_sff(&h, beta, t)))
            })
            .collect()
    })?;
    let points = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let m2: Vec<f64> = per.iter().map(|r| r[k].0).collect();
            let sff: Vec<f64> = per.iter().map(|r| r[k].1).collect();
            let (m2_mean, m2_stderr) = mean_stderr(&m2);
            let (sff_mean, sff_stderr) = mean_stderr(&sff);
            EdCurvePoint {
                t,
                m2_mean,
                m2_stderr,
                sff_mean,
                sff_stderr,
            }
        })
        .collect();
    Ok(EdCurve {
        n,
        beta,
        realizations,
        points,
    })
}
