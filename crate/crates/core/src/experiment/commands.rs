use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::table::{self, num, opt, TableSpec};
use crate::asymptotics::{anchor, compare_models, omega_estimate, DiagnosticRow, KNormalization, OmegaEstimate};
use crate::error::{Error, Result};
use crate::poisson::{log_log_slope, sum_vs_integral, SumVsIntegral};
use crate::solver::{load_model, save_model, solve, BalancedModel};
use crate::theory::{curve, TheoryCurve};

/// Slope threshold for the sum-vs-integral decay verdict.
pub const POISSON_SLOPE_LIMIT: f64 = -1.2;
/// Upper bound checked on the exponent estimates.
pub const OMEGA_BOUND: f64 = 1.02;

/// What a command wrote and what it has to say about it.
#[derive(Debug, Default, Clone)]
pub struct Report {
    pub files: Vec<PathBuf>,
    /// Verdicts and summaries for standard output.
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))
}

fn prepare(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    table::write_schema(dir)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn sorted_betas(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut b = cfg.betas.clone();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

pub fn model_file_name(beta: f64) -> String {
    format!("model_beta_{beta}.json")
}

fn summary_row(beta: f64, m: &BalancedModel, file: &str) -> Vec<String> {
    let r = &m.solve_report;
    let e1 = r.e1_residuals.iter().map(|p| p.1).fold(0.0f64, f64::max);
    vec![
        num(beta),
        r.iterations.to_string(),
        num(r.final_sup_delta),
        num(r.max_balance_residual),
        num(e1),
        num(r.damping_used),
        opt(r.tail_omega),
        file.to_string(),
    ]
}

/// Solves every β in ascending order, each warm-started from the previous
/// one, and writes one model file per β plus a summary table. A failure
/// stops the sweep; the models and summary rows already produced stay on
/// disk.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let dir = &cfg.outputs;
    prepare(dir)?;
    let hash = cfg.hash();
    let mut report = Report::default();
    let mut rows = Vec::new();
    let mut prev: Option<BalancedModel> = None;
    let pool = pool(cfg.workers)?;
    let mut failure = None;
    for beta in sorted_betas(cfg) {
        match pool.install(|| solve(beta, cfg.n_trunc, cfg.x_max, cfg.tol, cfg.max_iter, prev.as_ref())) {
            Ok(m) => {
                let file = model_file_name(beta);
                let path = dir.join(&file);
                save_model(&m, &path)?;
                report.files.push(path);
                report.lines.push(format!(
                    "beta = {beta}: {} iterations, balance residual {:.3e}",
                    m.solve_report.iterations, m.solve_report.max_balance_residual
                ));
                rows.push(summary_row(beta, &m, &file));
                prev = Some(m);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let path = table::write_table(dir, table::SOLVE_TABLE.file, &table::SOLVE_TABLE, &hash, &rows)?;
    report.files.push(path);
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// Loads the model for each β from the output directory when one with the
/// same settings exists there; solves (and saves) it otherwise.
pub fn obtain_models(cfg: &ExperimentConfig) -> Result<Vec<BalancedModel>> {
    std::fs::create_dir_all(&cfg.outputs).map_err(|e| Error::io(&cfg.outputs, e))?;
    let pool = pool(cfg.workers)?;
    let mut out: Vec<BalancedModel> = Vec::new();
    for beta in sorted_betas(cfg) {
        let path = cfg.outputs.join(model_file_name(beta));
        let cached = if path.exists() {
            load_model(&path)
                .ok()
                .filter(|m| m.beta == beta && m.n_trunc == cfg.n_trunc && m.x_max == cfg.x_max)
        } else {
            None
        };
        let m = match cached {
            Some(m) => m,
            None => {
                let m = pool.install(|| solve(beta, cfg.n_trunc, cfg.x_max, cfg.tol, cfg.max_iter, out.last()))?;
                save_model(&m, &path)?;
                m
            }
        };
        out.push(m);
    }
    Ok(out)
}

fn diagnostic_cells(beta: f64, r: &DiagnosticRow) -> Vec<String> {
    let mut v: Vec<String> = [
        beta, r.a, r.x_a, r.t_a, r.lambda_a, r.lambda_d1, r.lambda_d2, r.lambda_d3, r.lambda_d4, r.n_xa,
        r.delta_cap, r.log_h, r.nu_classic, r.nu_refined, r.u_d2, r.u_d3, r.u_d4, r.x_a1, r.delta_small,
        r.sigma_small,
    ]
    .iter()
    .map(|x| num(*x))
    .collect();
    v.push(if r.trusted { "trusted" } else { "untrusted" }.to_string());
    v
}

/// Per-anchor diagnostics of one model file. Anchors past the trusted
/// range are kept but flagged; if they cannot be evaluated at all the row
/// carries empty values.
pub fn cmd_diagnose(model_path: &Path, cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.a_grid.is_empty() {
        return Err(Error::Config {
            field: "a_grid".into(),
            reason: "grid is empty".into(),
        });
    }
    if let Some(a) = cfg.a_grid.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::Config {
            field: "a_grid".into(),
            reason: format!("value {a} is not positive"),
        });
    }
    let model = load_model(model_path)?;
    let dir = &cfg.outputs;
    prepare(dir)?;
    let results: Vec<Result<DiagnosticRow>> =
        pool(cfg.workers)?.install(|| cfg.a_grid.par_iter().map(|&a| anchor(&model, a)).collect());
    let mut report = Report::default();
    let mut rows = Vec::new();
    let empty_cols = table::DIAGNOSTICS_TABLE.columns.len() - 3;
    for (&a, r) in cfg.a_grid.iter().zip(results) {
        let untrusted = a > model.trusted_anchor();
        if untrusted {
            report.warnings.push(format!(
                "a = {a} is past the trusted range (a <= {}); row flagged untrusted",
                model.trusted_anchor()
            ));
        }
        match r {
            Ok(row) => rows.push(diagnostic_cells(model.beta, &row)),
            Err(e) if untrusted => {
                report.warnings.push(format!("a = {a} could not be evaluated: {e}"));
                let mut cells = vec![num(model.beta), num(a)];
                cells.extend(std::iter::repeat_n(String::new(), empty_cols));
                cells.push("untrusted".into());
                rows.push(cells);
            }
            Err(e) => return Err(e),
        }
    }
    let stem = model_path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let file = format!("diagnostics_{stem}.csv");
    let mut key = cfg.clone();
    key.betas = vec![model.beta];
    key.n_trunc = model.n_trunc;
    key.x_max = model.x_max;
    let path = table::write_table(dir, &file, &table::DIAGNOSTICS_TABLE, &key.hash(), &rows)?;
    report.files.push(path);
    report.lines.push(format!("{} anchors written", rows.len()));
    Ok(report)
}

/// Exponent estimates for every β, with the monotonicity and bound
/// verdicts.
pub fn cmd_omega(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let models = obtain_models(cfg)?;
    let ests: Vec<OmegaEstimate> = pool(cfg.workers)?.install(|| {
        models
            .par_iter()
            .map(|m| omega_estimate(m, &cfg.x_grid))
            .collect::<Result<_>>()
    })?;
    let mut rows = Vec::new();
    let mut seq_rows = Vec::new();
    let mut report = Report::default();
    for (m, e) in models.iter().zip(&ests) {
        rows.push(vec![
            num(m.beta),
            num(e.omega_hat),
            num(e.error_bar),
            num(e.c_beta_hat),
            num(e.omega_hat - m.beta),
        ]);
        for (x, v) in &e.sequence {
            seq_rows.push(vec![num(m.beta), num(*x), num(*v)]);
        }
        report.lines.push(format!(
            "beta = {}: omega_hat = {:.6} ± {:.1e} (conjectured {}, deviation {:+.3e}), C_hat = {:.6}",
            m.beta,
            e.omega_hat,
            e.error_bar,
            m.beta,
            e.omega_hat - m.beta,
            e.c_beta_hat
        ));
    }
    let increasing = ests.windows(2).all(|w| w[0].omega_hat < w[1].omega_hat);
    let bounded = ests.iter().all(|e| e.omega_hat <= OMEGA_BOUND);
    report.lines.push(format!("omega_hat increasing in beta: {}", verdict(increasing)));
    report.lines.push(format!("omega_hat <= {OMEGA_BOUND}: {}", verdict(bounded)));
    let hash = cfg.hash();
    let dir = &cfg.outputs;
    prepare(dir)?;
    for (spec, rows) in [(&table::OMEGA_TABLE, &rows), (&table::OMEGA_SEQUENCE_TABLE, &seq_rows)] {
        report.files.push(table::write_table(dir, spec.file, spec, &hash, rows)?);
    }
    Ok(report)
}

fn theory_rows(c: &TheoryCurve) -> Vec<Vec<String>> {
    let s = &c.fd_slopes;
    (0..c.m_grid.len())
        .map(|k| {
            let mut v: Vec<String> = [c.m_grid[k], c.p[k], c.q[k], c.p_tilde[k], c.q_tilde[k], c.big_f[k], c.big_p[k]]
                .iter()
                .map(|x| num(*x))
                .collect();
            v.push(opt(c.argmax_c[k]));
            v.push(opt(c.argmin_c[k]));
            v.extend(
                [s.p[k], s.q[k], s.big_f[k], s.big_p[k], s.p_tilde[k], s.q_tilde[k], s.tilde_ratio_sq[k]]
                    .iter()
                    .map(|x| num(*x)),
            );
            v
        })
        .collect()
}

/// The extremal-ratio curve over the m-grid.
pub fn cmd_theory(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let c = pool(cfg.workers)?.install(|| curve(&cfg.m_grid))?;
    let mut report = Report::default();
    let target = 1.0 / (2.0 * std::f64::consts::PI);
    if let Some(k) = c.m_grid.iter().position(|m| *m == 1.0) {
        let ok = (c.p[k] - target).abs() < 1e-4 && (c.q[k] - target).abs() < 1e-4;
        report.lines.push(format!(
            "p(1) = {:.7}, q(1) = {:.7}, 1/(2π) = {target:.7}: {}",
            c.p[k],
            c.q[k],
            verdict(ok)
        ));
    }
    let dir = &cfg.outputs;
    prepare(dir)?;
    let spec: &TableSpec = &table::THEORY_TABLE;
    report.files.push(table::write_table(dir, spec.file, spec, &cfg.hash(), &theory_rows(&c))?);
    Ok(report)
}

/// Sum-vs-integral gaps of the coefficient profile for every β, a and
/// moment order 0..=3, with the decay verdict on the order-0 gap.
pub fn cmd_poisson(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    cfg.validate_trusted_a_grid()?;
    let models = obtain_models(cfg)?;
    let jobs: Vec<(usize, f64, u32)> = (0..models.len())
        .flat_map(|k| cfg.a_grid.iter().flat_map(move |&a| (0..=3).map(move |j| (k, a, j))))
        .collect();
    let results: Vec<SumVsIntegral> = pool(cfg.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(k, a, j)| sum_vs_integral(&models[k], a, j))
            .collect::<Result<_>>()
    })?;
    let mut report = Report::default();
    let mut rows = Vec::new();
    for (&(k, _, _), r) in jobs.iter().zip(&results) {
        rows.push(vec![num(models[k].beta), num(r.a), r.j.to_string(), num(r.sum), num(r.integral), num(r.err)]);
    }
    let mut a_sorted = cfg.a_grid.clone();
    a_sorted.sort_by(f64::total_cmp);
    for (k, m) in models.iter().enumerate() {
        let err: Vec<f64> = a_sorted
            .iter()
            .map(|a| {
                jobs.iter()
                    .zip(&results)
                    .find(|((kk, aa, j), _)| *kk == k && aa == a && *j == 0)
                    .map(|(_, r)| r.err)
                    .unwrap_or(f64::NAN)
            })
            .collect();
        if err.len() < 2 {
            report.lines.push(format!("beta = {}: need two anchors for a slope", m.beta));
            continue;
        }
        let slope = log_log_slope(&a_sorted, &err);
        let monotone = err.windows(2).all(|w| w[1] < w[0]);
        report.lines.push(format!(
            "beta = {}: log-log slope of the j=0 gap {slope:.3} (limit {POISSON_SLOPE_LIMIT}): {}; monotone decrease: {}",
            m.beta,
            verdict(slope <= POISSON_SLOPE_LIMIT),
            verdict(monotone)
        ));
    }
    let dir = &cfg.outputs;
    prepare(dir)?;
    let spec = &table::POISSON_TABLE;
    report.files.push(table::write_table(dir, spec.file, spec, &cfg.hash(), &rows)?);
    Ok(report)
}

/// Coefficient ratios `c_i(β₂)/c_i(β₁)` for consecutive β values.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    if cfg.betas.len() < 2 {
        return Err(Error::Config {
            field: "betas".into(),
            reason: "compare needs at least two β values".into(),
        });
    }
    let models = obtain_models(cfg)?;
    let mut report = Report::default();
    let mut rows = Vec::new();
    for pair in models.windows(2) {
        let (m1, m2) = (&pair[0], &pair[1]);
        let prof = compare_models(m1, m2, cfg.compare_range, KNormalization::AsSolved)?;
        for (n, &i) in prof.indices.iter().enumerate() {
            rows.push(vec![
                num(m1.beta),
                num(m2.beta),
                i.to_string(),
                num(prof.k[n]),
                prof.dlogk.get(n).map(|d| num(*d)).unwrap_or_default(),
            ]);
        }
        report.lines.push(format!(
            "beta {} -> {}: min k = {:.6} over i in [1, {}] (k > 1: {}); ln k eventually increasing: {}",
            m1.beta,
            m2.beta,
            prof.min_k,
            cfg.compare_range,
            verdict(prof.min_k > 1.0),
            verdict(prof.eventually_increasing)
        ));
    }
    let dir = &cfg.outputs;
    prepare(dir)?;
    let spec = &table::COMPARE_TABLE;
    report.files.push(table::write_table(dir, spec.file, spec, &cfg.hash(), &rows)?);
    Ok(report)
}
