//! Model files: a JSON document with 17 significant digits per number and a
//! SHA-256 checksum over everything except the checksum itself.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::model::{BalancedModel, ConvergenceReport};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
struct Header {
    format_version: u32,
}

#[derive(Deserialize)]
struct ModelFile {
    beta: f64,
    n_trunc: usize,
    x_max: f64,
    trusted_degree: usize,
    lambda: Vec<f64>,
    report: ConvergenceReport,
    checksum: String,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn body(m: &BalancedModel) -> Result<String> {
    let r = &m.solve_report;
    let mut bad = m.lambda.iter().position(|v| !v.is_finite()).map(|i| format!("lambda[{i}]"));
    for (name, v) in [
        ("beta", m.beta),
        ("x_max", m.x_max),
        ("report.final_sup_delta", r.final_sup_delta),
        ("report.max_balance_residual", r.max_balance_residual),
        ("report.damping_used", r.damping_used),
    ] {
        if bad.is_none() && !v.is_finite() {
            bad = Some(name.to_string());
        }
    }
    if let Some(field) = bad {
        return Err(Error::invalid(format!("cannot save non-finite {field}")));
    }
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "  \"format_version\": {FORMAT_VERSION},");
    let _ = writeln!(s, "  \"beta\": {},", num(m.beta));
    let _ = writeln!(s, "  \"n_trunc\": {},", m.n_trunc);
    let _ = writeln!(s, "  \"x_max\": {},", num(m.x_max));
    let _ = writeln!(s, "  \"trusted_degree\": {},", m.trusted_degree);
    s.push_str("  \"lambda\": [\n");
    for (i, l) in m.lambda.iter().enumerate() {
        let sep = if i + 1 == m.lambda.len() { "" } else { "," };
        let _ = writeln!(s, "    {}{sep}", num(*l));
    }
    s.push_str("  ],\n");
    s.push_str("  \"report\": {\n");
    let _ = writeln!(s, "    \"iterations\": {},", r.iterations);
    let _ = writeln!(s, "    \"final_sup_delta\": {},", num(r.final_sup_delta));
    let _ = writeln!(s, "    \"max_balance_residual\": {},", num(r.max_balance_residual));
    let pairs: Vec<String> = r
        .e1_residuals
        .iter()
        .map(|(a, b)| format!("[{}, {}]", num(*a), num(*b)))
        .collect();
    let _ = writeln!(s, "    \"e1_residuals\": [{}],", pairs.join(", "));
    let _ = writeln!(s, "    \"damping_used\": {},", num(r.damping_used));
    match r.tail_omega {
        Some(w) => {
            let _ = writeln!(s, "    \"tail_omega\": {}", num(w));
        }
        None => s.push_str("    \"tail_omega\": null\n"),
    }
    s.push_str("  },\n");
    Ok(s)
}

fn digest(body: &str) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(body.as_bytes())))
}

/// Serialized form of a model, as written by [`save_model`].
pub fn to_document(m: &BalancedModel) -> Result<String> {
    let b = body(m)?;
    let sum = digest(&b);
    Ok(format!("{b}  \"checksum\": \"{sum}\"\n}}\n"))
}

pub fn from_document(text: &str) -> Result<BalancedModel> {
    let header: Header =
        serde_json::from_str(text).map_err(|e| Error::CorruptFile(format!("unreadable header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            found: header.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let f: ModelFile = serde_json::from_str(text).map_err(|e| Error::CorruptFile(e.to_string()))?;
    if f.lambda.len() != f.n_trunc + 1 {
        return Err(Error::CorruptFile(format!(
            "lambda has {} entries, n_trunc is {}",
            f.lambda.len(),
            f.n_trunc
        )));
    }
    let model = BalancedModel {
        beta: f.beta,
        n_trunc: f.n_trunc,
        lambda: f.lambda,
        x_max: f.x_max,
        trusted_degree: f.trusted_degree,
        solve_report: f.report,
    };
    let expected = digest(&body(&model).map_err(|e| Error::CorruptFile(e.to_string()))?);
    if expected != f.checksum {
        return Err(Error::CorruptFile(format!("checksum mismatch: stored {}, computed {expected}", f.checksum)));
    }
    Ok(model)
}

pub fn save_model(model: &BalancedModel, path: &Path) -> Result<()> {
    let doc = to_document(model)?;
    std::fs::write(path, doc).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<BalancedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_document(&text)
}
