//! One function per subcommand. Each reads a validated [`RunConfig`] and
//! writes its files through a [`Sink`].

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use tfdmagic_core::dynamics::{
    phase_diagram, predicted_curve, transition_sweep, SreCurve, TransitionStatus, TransitionSweep,
};
use tfdmagic_core::ed::ed_curve;
use tfdmagic_core::fitkit::{fit_boundary, fit_lorentzian, fit_saturation, FitModel, FitResult};
use tfdmagic_core::sd::{free_energy, SlopeSweep};

use crate::config::{FitColumn, Format, Mode, RunConfig};
use crate::error::CliError;
use crate::output::{tag, Cell, Sink, Table};
use crate::verify::run_checks;

pub const M2_HEADER: &[&str] = &["t", "m2_sym", "m2_ssb", "m2_dom", "order_param", "lnz_sre_sym", "lnz_sre_ssb"];

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    version: &'static str,
    mode: Mode,
    workers: usize,
    seeds: Seeds,
    files: Vec<String>,
    config: &'a RunConfig,
}

#[derive(Debug, Serialize)]
struct Seeds {
    model_seed: u64,
    /// Realization `r` draws from ChaCha20 stream `r` of `model_seed`.
    streams: usize,
}

/// What a finished run produced.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub verification_failed: Option<String>,
}

pub fn execute(mode: Mode, cfg: &RunConfig, workers: usize) -> Result<Outcome, CliError> {
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(CliError::validation(
                "mode_mismatch",
                format!("config asks for mode {m:?} but the {mode:?} subcommand was run"),
            ));
        }
    }
    cfg.validate(mode)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::validation("workers", e.to_string()))?;
    let mut sink = Sink::new(cfg.io.out_dir.clone(), cfg.io.format);
    let mut failed = None;
    pool.install(|| -> Result<(), CliError> {
        match mode {
            Mode::Ed => run_ed(cfg, &mut sink),
            Mode::Saddle => run_saddle(cfg, &mut sink),
            Mode::Sff => run_sff(cfg, &mut sink),
            Mode::PhaseDiagram => run_phase(cfg, &mut sink),
            Mode::Fit => run_fit(cfg, &mut sink),
            Mode::Verify => {
                failed = run_verify(cfg, &mut sink)?;
                Ok(())
            }
        }
    })?;
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        mode,
        workers,
        seeds: Seeds {
            model_seed: cfg.model.seed,
            streams: if mode == Mode::Ed { cfg.sweep.realizations } else { 0 },
        },
        files: sink
            .written
            .iter()
            .filter_map(|p| Some(p.file_name()?.to_string_lossy().into_owned()))
            .collect(),
        config: cfg,
    };
    sink.json("run.json", &meta)?;
    Ok(Outcome {
        files: sink.written,
        verification_failed: failed,
    })
}

fn run_ed(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let params = cfg.model.params();
    let times = cfg.sweep.time_grid();
    let n = params.n_majorana as f64;
    for &beta in &cfg.sweep.betas {
        let curve = ed_curve(&params, cfg.sweep.realizations, beta, &times)?;
        let mut t = Table::new(&["t", "m2_mean", "m2_stderr", "m2_per_n", "sff_mean", "sff_stderr"]);
        for p in &curve.points {
            t.push(vec![
                p.t.into(),
                p.m2_mean.into(),
                p.m2_stderr.into(),
                (p.m2_mean / n).into(),
                p.sff_mean.into(),
                p.sff_stderr.into(),
            ]);
        }
        sink.table(&format!("ed_beta{}", tag(beta)), &t)?;
    }
    Ok(())
}

pub fn m2_table(curve: &SreCurve) -> Table {
    let mut t = Table::new(M2_HEADER);
    for p in &curve.points {
        t.push(vec![
            p.t.into(),
            p.m2_symmetric.into(),
            p.m2_ssb.into(),
            p.m2_dominant.into(),
            p.order_param.into(),
            p.lnz_symmetric.into(),
            p.lnz_ssb.into(),
        ]);
    }
    t
}

fn order_table(curve: &SreCurve) -> Table {
    let mut t = Table::new(&["t", "order_param", "order_param_ssb", "ssb_class", "dominant"]);
    let name = |c| serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from));
    for p in &curve.points {
        t.push(vec![
            p.t.into(),
            p.order_param.into(),
            p.order_param_ssb.into(),
            Cell::Text(p.ssb_class.and_then(name).unwrap_or_default()),
            Cell::Text(name(p.dominant).unwrap_or_default()),
        ]);
    }
    t
}

#[derive(Debug, Serialize)]
struct TransitionRow {
    beta: f64,
    t_star: Option<f64>,
    status: TransitionStatus,
    /// `ln Z(β)/N` from the thermal solver.
    ln_z_beta: f64,
}

fn write_sweeps(cfg: &RunConfig, sweeps: &[TransitionSweep], sink: &mut Sink) -> Result<(), CliError> {
    let opts = cfg.curve_options();
    let mut rows = Vec::new();
    for s in sweeps {
        let b = tag(s.curve.beta);
        sink.table(&format!("m2_beta{b}"), &m2_table(&s.curve))?;
        sink.table(&format!("order_beta{b}"), &order_table(&s.curve))?;
        let times: Vec<f64> = s.curve.points.iter().map(|p| p.t).collect();
        let pred = predicted_curve(s.curve.beta, &times, opts.q, opts.j, &opts.thermal)?;
        let mut t = Table::new(&["t", "m2_pred"]);
        for (&x, y) in times.iter().zip(pred) {
            t.push(vec![x.into(), y.into()]);
        }
        sink.table(&format!("prediction_beta{b}"), &t)?;
        rows.push(TransitionRow {
            beta: s.curve.beta,
            t_star: s.t_star,
            status: s.status,
            ln_z_beta: s.curve.ln_z_beta,
        });
    }
    sink.json("transitions.json", &rows)
}

fn run_saddle(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let opts = cfg.curve_options();
    let times = cfg.sweep.time_grid();
    let sweeps: Vec<TransitionSweep> = cfg
        .sweep
        .betas
        .par_iter()
        .map(|&b| transition_sweep(b, &times, &opts))
        .collect::<Result<_, _>>()?;
    write_sweeps(cfg, &sweeps, sink)
}

fn run_sff(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let (q, j) = (cfg.model.q, cfg.model.j_coupling);
    let th = cfg.solver.thermal;
    let times = cfg.sweep.time_grid();
    let tables: Vec<(f64, Table)> = cfg
        .sweep
        .betas
        .par_iter()
        .map(|&beta| -> Result<_, CliError> {
            let f = free_energy(beta, q, j, &th)?;
            let mut sweep = SlopeSweep::new(beta, q, j, th);
            let mut t = Table::new(&["t", "ln_sff_per_n", "m2_pred"]);
            for &x in &times {
                let l = if j == 0.0 { std::f64::consts::LN_2 } else { sweep.advance(x)? };
                let m2 = 2.0 * std::f64::consts::LN_2 - 4.0 * (l - f);
                t.push(vec![x.into(), l.into(), m2.into()]);
            }
            Ok((beta, t))
        })
        .collect::<Result<_, _>>()?;
    for (beta, t) in tables {
        sink.table(&format!("sff_beta{}", tag(beta)), &t)?;
    }
    Ok(())
}

fn run_phase(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let opts = cfg.curve_options();
    let pd = phase_diagram(&cfg.sweep.betas, cfg.sweep.t_max, cfg.sweep.dt, &opts)?;
    let mut pts = Table::new(&["beta_j", "t_star_j", "status"]);
    let status = |s| serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from));
    for p in &pd.points {
        pts.push(vec![
            p.beta_j.into(),
            p.t_star_j.into(),
            Cell::Text(status(p.status).unwrap_or_default()),
        ]);
    }
    sink.table("boundary_points", &pts)?;
    let mut curve = Table::new(&["t_star_j", "beta_j_fit"]);
    if let Some(fit) = &pd.boundary_fit {
        let ts: Vec<f64> = pd.points.iter().filter_map(|p| p.t_star_j).collect();
        let (lo, hi) = ts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        for k in 0..100 {
            let x = lo + (hi - lo) * k as f64 / 99.0;
            let mut g = [0.0; 3];
            curve.push(vec![x.into(), FitModel::Boundary.eval(&fit.params, x, &mut g).into()]);
        }
    }
    sink.table("boundary_fit", &curve)?;
    sink.json(
        "boundary_fit.json",
        &serde_json::json!({
            "fit": pd.boundary_fit,
            "error": pd.fit_error,
            "monotone": pd.is_monotone(),
        }),
    )?;
    write_sweeps(cfg, &pd.sweeps, sink)
}

/// Reads `(x, y)` pairs from a CSV written by the saddle or phase-diagram
/// modes. Empty cells are skipped.
pub fn read_pairs(path: &Path, x_col: &str, y_col: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = |m: String| CliError::validation("fit_input", m);
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("{} has no column `{name}`", path.display())))
    };
    let (ix, iy) = (col(x_col)?, col(y_col)?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let (sx, sy) = (&rec[ix], &rec[iy]);
        if sx.is_empty() || sy.is_empty() {
            continue;
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        out.push((parse(sx)?, parse(sy)?));
    }
    Ok(out)
}

fn run_fit(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let spec = cfg.fit.as_ref().expect("validated");
    let opts = &cfg.solver.fit;
    let (points, fit): (Vec<(f64, f64)>, FitResult) = match spec.model {
        FitModel::Boundary => {
            let raw = read_pairs(&spec.input, "t_star_j", "beta_j")?;
            let pts: Vec<_> = raw.into_iter().filter(|p| p.0 >= spec.t_min && p.0 <= spec.t_max).collect();
            let f = fit_boundary(&pts, opts)?;
            (pts, f)
        }
        FitModel::Saturation | FitModel::Lorentzian => {
            let col = match spec.column {
                FitColumn::M2Sym => "m2_sym",
                FitColumn::M2Ssb => "m2_ssb",
                FitColumn::M2Dom => "m2_dom",
            };
            let raw = read_pairs(&spec.input, "t", col)?;
            let pts: Vec<_> = raw.into_iter().filter(|p| p.0 >= spec.t_min && p.0 <= spec.t_max).collect();
            let f = if spec.model == FitModel::Saturation {
                fit_saturation(&pts, opts)?
            } else {
                fit_lorentzian(&pts, opts)?
            };
            (pts, f)
        }
        FitModel::Custom => {
            return Err(CliError::validation("invalid_value", "custom models are library-only"));
        }
    };
    let mut t = Table::new(&["x", "y", "y_fit", "residual"]);
    let mut g = vec![0.0; fit.params.len()];
    for ((x, y), r) in points.iter().zip(&fit.residuals) {
        let yf = spec.model.eval(&fit.params, *x, &mut g);
        t.push(vec![(*x).into(), (*y).into(), yf.into(), (*r).into()]);
    }
    sink.table("fit_curve", &t)?;
    sink.json("fit.json", &fit)
}

fn run_verify(cfg: &RunConfig, sink: &mut Sink) -> Result<Option<String>, CliError> {
    let checks = run_checks(cfg)?;
    let mut t = Table::new(&["check", "value", "reference", "error", "tolerance", "pass"]);
    for c in &checks {
        t.push(vec![
            Cell::Text(c.name.clone()),
            c.value.into(),
            c.reference.into(),
            c.error.into(),
            c.tolerance.into(),
            Cell::Text(c.pass.to_string()),
        ]);
    }
    // the report is always CSV so it can be diffed regardless of --format
    let saved = std::mem::replace(&mut sink.format, Format::Csv);
    sink.table("verify_report", &t)?;
    sink.format = saved;
    sink.json("verify_report.json", &checks)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    Ok((!failed.is_empty()).then(|| format!("failed checks: {}", failed.join(", "))))
}
