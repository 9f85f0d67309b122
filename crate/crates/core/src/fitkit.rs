//! Levenberg–Marquardt fits of the closed forms used to summarize saddle
//! curves and the phase boundary.

use std::f64::consts::LN_2;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `ln 2 − a·e^{−b·t}`
    Saturation,
    /// `a + b/(c + t²)`
    Lorentzian,
    /// `βJ = a + b/(c + t*²)`
    Boundary,
    Custom,
}

impl FitModel {
    pub fn n_params(self) -> usize {
        match self {
            FitModel::Saturation => 2,
            FitModel::Lorentzian | FitModel::Boundary => 3,
            FitModel::Custom => 0,
        }
    }

    /// Value and gradient with respect to the parameters.
    pub fn eval(self, p: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        match self {
            FitModel::Saturation => {
                let e = (-p[1] * x).exp();
                grad[0] = -e;
                grad[1] = p[0] * x * e;
                LN_2 - p[0] * e
            }
            FitModel::Lorentzian | FitModel::Boundary => {
                let d = p[2] + x * x;
                grad[0] = 1.0;
                grad[1] = 1.0 / d;
                grad[2] = -p[1] / (d * d);
                p[0] + p[1] / d
            }
            FitModel::Custom => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iter: usize,
    pub lambda0: f64,
    /// Relative step size below which the iteration stops.
    pub step_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            lambda0: 1e-3,
            step_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: FitModel,
    pub params: Vec<f64>,
    /// Row-major `p×p`; entries of unidentifiable parameters are infinite.
    pub covariance: Vec<Vec<f64>>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    /// Parameters the data cannot pin down (flat directions of `JᵀJ`).
    pub unidentifiable: Vec<bool>,
    pub iterations: usize,
}

impl FitResult {
    pub fn ssr(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }

    pub fn rms(&self) -> f64 {
        (self.ssr() / self.residuals.len().max(1) as f64).sqrt()
    }
}

fn jacobian<F>(model: &F, p: &[f64], xs: &[f64], ys: &[f64], wt: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>)
where
    F: Fn(&[f64], f64, &mut [f64]) -> f64,
{
    let np = p.len();
    let mut r = Vec::with_capacity(xs.len());
    let mut jac = Vec::with_capacity(xs.len());
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(wt) {
        let mut g = vec![0.0; np];
        let v = model(p, x, &mut g);
        r.push((v - y) * w);
        g.iter_mut().for_each(|gi| *gi *= w);
        jac.push(g);
    }
    (r, jac)
}

fn normal_equations(r: &[f64], jac: &[Vec<f64>], np: usize) -> (Mat<f64>, Vec<f64>) {
    let mut a = Mat::<f64>::zeros(np, np);
    let mut g = vec![0.0; np];
    for (ri, row) in r.iter().zip(jac) {
        for i in 0..np {
            g[i] += row[i] * ri;
            for k in 0..np {
                a[(i, k)] += row[i] * row[k];
            }
        }
    }
    (a, g)
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Damped Gauss–Newton with Marquardt diagonal scaling. `sigmas`, when
/// given, weights each residual by `1/σ`.
pub fn levenberg_marquardt<F>(
    model: F,
    model_id: FitModel,
    xs: &[f64],
    ys: &[f64],
    sigmas: Option<&[f64]>,
    p0: &[f64],
    opts: &FitOptions,
) -> Result<FitResult>
where
    F: Fn(&[f64], f64, &mut [f64]) -> f64,
{
    let np = p0.len();
    if np == 0 || np > 4 {
        return Err(Error::Fit(format!("models need 1..=4 parameters, got {np}")));
    }
    if xs.len() != ys.len() || xs.len() < np {
        return Err(Error::Fit(format!(
            "{} points cannot determine {np} parameters",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    let wt: Vec<f64> = match sigmas {
        Some(s) if s.len() == xs.len() => s.iter().map(|&x| 1.0 / x).collect(),
        Some(_) => return Err(Error::Fit("sigmas length mismatch".into())),
        None => vec![1.0; xs.len()],
    };
    let mut p = p0.to_vec();
    let (mut r, mut jac) = jacobian(&model, &p, xs, ys, &wt);
    let mut c = cost(&r);
    let mut lambda = opts.lambda0;
    let mut iterations = 0;
    let mut converged = c == 0.0;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let (a, g) = normal_equations(&r, &jac, np);
        let dmax = (0..np).map(|i| a[(i, i)]).fold(0.0, f64::max);
        if dmax == 0.0 {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e20 {
            let damped = Mat::from_fn(np, np, |i, k| {
                if i == k {
                    a[(i, i)] + lambda * a[(i, i)].max(1e-12 * dmax)
                } else {
                    a[(i, k)]
                }
            });
            let rhs = Mat::from_fn(np, 1, |i, _| -g[i]);
            let delta = damped.partial_piv_lu().solve(&rhs);
            let trial: Vec<f64> = (0..np).map(|i| p[i] + delta[(i, 0)]).collect();
            if trial.iter().any(|v| !v.is_finite()) {
                lambda *= 4.0;
                continue;
            }
            let (rt, jt) = jacobian(&model, &trial, xs, ys, &wt);
            let ct = cost(&rt);
            if ct <= c {
                let small = (0..np).all(|i| delta[(i, 0)].abs() <= opts.step_tol * (p[i].abs() + opts.step_tol));
                p = trial;
                r = rt;
                jac = jt;
                let stalled = c - ct <= 1e-32 * c.max(1e-300);
                c = ct;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                if small || c == 0.0 || stalled {
                    converged = true;
                }
                break;
            }
            lambda *= 2.0;
        }
        if !improved {
            // no descent direction left at machine precision
            converged = true;
        }
    }
    if !converged {
        return Err(Error::Fit(format!(
            "no convergence after {iterations} iterations"
        )));
    }
    finish(model_id, p, xs, ys, &wt, &model, iterations)
}

fn finish<F>(
    model_id: FitModel,
    p: Vec<f64>,
    xs: &[f64],
    ys: &[f64],
    wt: &[f64],
    model: &F,
    iterations: usize,
) -> Result<FitResult>
where
    F: Fn(&[f64], f64, &mut [f64]) -> f64,
{
    let np = p.len();
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("parameters diverged".into()));
    }
    let (r, jac) = jacobian(model, &p, xs, ys, wt);
    let (a, _) = normal_equations(&r, &jac, np);
    let eig = a.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let smax = (0..np).map(|k| s[k].abs()).fold(0.0, f64::max);
    let mut unidentifiable = vec![false; np];
    let mut pinv = vec![vec![0.0; np]; np];
    for k in 0..np {
        if smax == 0.0 || s[k] <= 1e-10 * smax {
            for i in 0..np {
                if u[(i, k)].abs() > 0.3 {
                    unidentifiable[i] = true;
                }
            }
            continue;
        }
        for i in 0..np {
            for l in 0..np {
                pinv[i][l] += u[(i, k)] * u[(l, k)] / s[k];
            }
        }
    }
    let dof = xs.len().saturating_sub(np);
    let ssr_w: f64 = r.iter().map(|x| x * x).sum();
    let s2 = if dof > 0 { ssr_w / dof as f64 } else { 0.0 };
    let covariance = (0..np)
        .map(|i| {
            (0..np)
                .map(|l| {
                    if unidentifiable[i] || unidentifiable[l] {
                        f64::INFINITY
                    } else {
                        pinv[i][l] * s2
                    }
                })
                .collect()
        })
        .collect();
    let residuals: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let mut g = vec![0.0; np];
            model(&p, x, &mut g) - y
        })
        .collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sst: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ssr: f64 = residuals.iter().map(|x| x * x).sum();
    let r_squared = if sst > 0.0 {
        1.0 - ssr / sst
    } else if ssr == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(FitResult {
        model_id,
        params: p,
        covariance,
        r_squared,
        residuals,
        unidentifiable,
        iterations,
    })
}

fn split(points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    points.iter().cloned().unzip()
}

fn best_of(results: Vec<Result<FitResult>>) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for r in results {
        match r {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.ssr() < b.ssr()) {
                    best = Some(f);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Fit("no fit attempted".into())))
}

/// `M₂/N = ln 2 − a·e^{−b·t}`.
pub fn fit_saturation(points: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(Error::Fit("saturation fit needs at least 4 points".into()));
    }
    let (xs, ys) = split(points);
    let model = |p: &[f64], x: f64, g: &mut [f64]| FitModel::Saturation.eval(p, x, g);
    let mut tries = vec![levenberg_marquardt(
        model,
        FitModel::Saturation,
        &xs,
        &ys,
        None,
        &[LN_2 - ys[0], 1.0],
        opts,
    )];
    // rate scan with the amplitude solved linearly
    for k in 0..12 {
        let b = 0.01 * 2f64.powi(k);
        let (num, den) = xs.iter().zip(&ys).fold((0.0, 0.0), |(n, d), (&x, &y)| {
            let e = (-b * x).exp();
            (n + (LN_2 - y) * e, d + e * e)
        });
        if den > 0.0 {
            tries.push(levenberg_marquardt(model, FitModel::Saturation, &xs, &ys, None, &[num / den, b], opts));
        }
    }
    best_of(tries)
}

fn fit_rational(model_id: FitModel, xs: &[f64], ys: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let model = move |p: &[f64], x: f64, g: &mut [f64]| model_id.eval(p, x, g);
    let x2max = xs.iter().map(|x| x * x).fold(0.0, f64::max).max(1e-6);
    let n_last = ys.len() - 1;
    let mut tries = Vec::new();
    // endpoint guess
    let c0 = 1.0f64.max(0.1 * x2max);
    let b0 = (ys[0] - ys[n_last]) * (c0 + xs[0] * xs[0]);
    tries.push(levenberg_marquardt(model, model_id, xs, ys, None, &[ys[n_last], b0, c0], opts));
    // scan `c` with (a, b) from linear least squares
    for k in 0..25 {
        let c = x2max * 10f64.powf(-5.0 + 0.3 * k as f64);
        let n = xs.len() as f64;
        let (mut sz, mut szz, mut sy, mut szy) = (0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(ys) {
            let z = 1.0 / (c + x * x);
            sz += z;
            szz += z * z;
            sy += y;
            szy += z * y;
        }
        let det = n * szz - sz * sz;
        if det.abs() < 1e-300 {
            continue;
        }
        let b = (n * szy - sz * sy) / det;
        let a = (sy - b * sz) / n;
        tries.push(levenberg_marquardt(model, model_id, xs, ys, None, &[a, b, c], opts));
    }
    best_of(tries)
}

/// `M₂/N = a + b/(c + t²)`.
pub fn fit_lorentzian(points: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(Error::Fit("Lorentzian fit needs at least 4 points".into()));
    }
    let (xs, ys) = split(points);
    fit_rational(FitModel::Lorentzian, &xs, &ys, opts)
}

/// `βJ = a + b/(c + t*²)` from `(t*, βJ)` pairs.
pub fn fit_boundary(points: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "phase boundary fit needs at least 3 crossing points, got {}",
            points.len()
        )));
    }
    let (xs, ys) = split(points);
    fit_rational(FitModel::Boundary, &xs, &ys, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_exact_recovery() {
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|k| {
                let t = 0.5 * k as f64 + 3.0;
                (t, LN_2 - 0.3 * (-0.7 * t).exp())
            })
            .collect();
        let f = fit_saturation(&pts, &FitOptions::default()).unwrap();
        assert!((f.params[0] - 0.3).abs() < 1e-8, "{:?}", f.params);
        assert!((f.params[1] - 0.7).abs() < 1e-8);
        assert!(f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn constant_data_flags_rate() {
        let pts: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, LN_2)).collect();
        let f = fit_saturation(&pts, &FitOptions::default()).unwrap();
        assert!(f.params[0].abs() < 1e-12);
        assert!(f.unidentifiable[1]);
    }

    #[test]
    fn lorentzian_and_boundary_recovery() {
        let truth = [0.6, -2.0, 3.5];
        let pts: Vec<(f64, f64)> = (0..15)
            .map(|k| {
                let t = 0.4 * k as f64;
                (t, truth[0] + truth[1] / (truth[2] + t * t))
            })
            .collect();
        for f in [
            fit_lorentzian(&pts, &FitOptions::default()).unwrap(),
            fit_boundary(&pts, &FitOptions::default()).unwrap(),
        ] {
            for i in 0..3 {
                assert!((f.params[i] - truth[i]).abs() < 1e-8, "{:?}", f.params);
            }
        }
    }

    #[test]
    fn boundary_refuses_two_points() {
        assert!(fit_boundary(&[(4.8, 1.0), (48.3, 2.0)], &FitOptions::default()).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = [0.4, 1.3, 2.2];
        for model in [FitModel::Saturation, FitModel::Lorentzian] {
            let np = model.n_params();
            for &x in &[0.3, 1.7, 4.0] {
                let mut g = vec![0.0; np];
                model.eval(&p[..np], x, &mut g);
                for i in 0..np {
                    let h = 1e-6 * p[i].abs().max(1.0);
                    let mut pp = p[..np].to_vec();
                    let mut pm = p[..np].to_vec();
                    pp[i] += h;
                    pm[i] -= h;
                    let mut tmp = vec![0.0; np];
                    let fd = (model.eval(&pp, x, &mut tmp) - model.eval(&pm, x, &mut tmp)) / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-8), "{model:?} {i}");
                }
            }
        }
    }
}
