use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = concat!("balancelab ", env!("CARGO_PKG_VERSION"));
pub const SCHEMA_FILE: &str = "SCHEMA.md";

pub struct TableSpec {
    pub file: &'static str,
    pub about: &'static str,
    pub columns: &'static [(&'static str, &'static str)],
}

pub const SOLVE_TABLE: TableSpec = TableSpec {
    file: "solve_summary.csv",
    about: "One row per solved β, in ascending order.",
    columns: &[
        ("beta", "divisor weight β"),
        ("iterations", "fixed-point iterations used"),
        ("final_sup_delta", "sup-norm of the last update over the trusted coefficients"),
        ("max_balance_residual", "max |c_i M_i − target| over the trusted coefficients"),
        ("max_e1_residual", "max |∫f(sx)/f(x)dx − (1/(1−s) − β)| over s = 0.1..0.9"),
        ("damping_used", "mixing weight in force at the end"),
        ("tail_omega", "exponent of the fitted coefficient tail (empty if none)"),
        ("model_file", "model file name inside the output directory"),
    ],
};

pub const DIAGNOSTICS_TABLE: TableSpec = TableSpec {
    file: "diagnostics_<model>.csv",
    about: "Per-anchor quantities for one model, one row per a.",
    columns: &[
        ("beta", "divisor weight of the model"),
        ("a", "anchor exponent"),
        ("x_a", "point where x f'/f = a"),
        ("t_a", "ln x_a"),
        ("lambda_a", "λ(a) = ln ∫x^a/f dx"),
        ("lambda_d1", "λ'(a)"),
        ("lambda_d2", "λ''(a)"),
        ("lambda_d3", "λ'''(a)"),
        ("lambda_d4", "fourth cumulant of t under x^a/f"),
        ("n_xa", "exponent n with λ'(n) = t_a"),
        ("delta_cap", "c(n_xa)/c(a) · x_a^(n_xa − a)"),
        ("log_h", "ln f(x_a) + λ(a) − a t_a"),
        ("nu_classic", "h_a(x_a)/√x_a"),
        ("nu_refined", "h_a(x_a)/√(x_a + 1/6)"),
        ("u_d2", "variance of the index at x_a"),
        ("u_d3", "third cumulant of the index at x_a"),
        ("u_d4", "fourth cumulant of the index at x_a"),
        ("x_a1", "x_(a+1)"),
        ("delta_small", "t_(a+1) − λ'(a)"),
        ("sigma_small", "a − n_xa"),
        ("status", "trusted, or untrusted when a lies past half of x_max"),
    ],
};

pub const OMEGA_TABLE: TableSpec = TableSpec {
    file: "omega.csv",
    about: "Exponent and constant of f(x) ~ C x^ω e^x per β.",
    columns: &[
        ("beta", "divisor weight β"),
        ("omega_hat", "x f'/f − x at the largest x-grid point"),
        ("error_bar", "spread of x f'/f − x over the upper half of the x-grid"),
        ("c_beta_hat", "f(x)/(x^ω̂ e^x) at the largest x-grid point"),
        ("deviation", "omega_hat − beta"),
    ],
};

pub const OMEGA_SEQUENCE_TABLE: TableSpec = TableSpec {
    file: "omega_sequence.csv",
    about: "The sequence behind omega.csv.",
    columns: &[
        ("beta", "divisor weight β"),
        ("x", "x-grid point"),
        ("u_minus_x", "x f'/f − x"),
    ],
};

pub const THEORY_TABLE: TableSpec = TableSpec {
    file: "theory.csv",
    about: "Extremal ratios of the model potential over the m-grid, with finite-difference slopes.",
    columns: &[
        ("m", "curvature ratio"),
        ("p", "sup over c of the ratio"),
        ("q", "inf over c of the ratio"),
        ("p_tilde", "p rescaled by √m"),
        ("q_tilde", "q rescaled by √m"),
        ("big_f", "(p/q)²"),
        ("big_p", "closed-form comparison function"),
        ("argmax_c", "maximizing c (empty on the boundary)"),
        ("argmin_c", "minimizing c (empty on the boundary)"),
        ("dp", "slope of p"),
        ("dq", "slope of q"),
        ("dbig_f", "slope of big_f"),
        ("dbig_p", "slope of big_p"),
        ("dp_tilde", "slope of p_tilde"),
        ("dq_tilde", "slope of q_tilde"),
        ("dtilde_ratio_sq", "slope of (p_tilde/q_tilde)²"),
    ],
};

pub const POISSON_TABLE: TableSpec = TableSpec {
    file: "poisson.csv",
    about: "Sum over integers against the integral of the normalized coefficient profile.",
    columns: &[
        ("beta", "divisor weight β"),
        ("a", "anchor exponent"),
        ("j", "moment order about n_xa"),
        ("sum", "Σ_i (i − n_xa)^j ζ_a(i)"),
        ("integral", "∫ (i − n_xa)^j ζ_a(i) di"),
        ("err", "relative gap for even j, absolute gap for odd j"),
    ],
};

pub const COMPARE_TABLE: TableSpec = TableSpec {
    file: "compare.csv",
    about: "Coefficient ratios between consecutive β values.",
    columns: &[
        ("beta_1", "smaller β"),
        ("beta_2", "larger β"),
        ("i", "coefficient index"),
        ("k", "c_i(beta_2)/c_i(beta_1)"),
        ("dlogk", "ln k(i+1) − ln k(i) (empty on the last row)"),
    ],
};

pub const ALL_TABLES: [&TableSpec; 7] = [
    &SOLVE_TABLE,
    &DIAGNOSTICS_TABLE,
    &OMEGA_TABLE,
    &OMEGA_SEQUENCE_TABLE,
    &THEORY_TABLE,
    &POISSON_TABLE,
    &COMPARE_TABLE,
];

/// Shortest round-trip decimal form, in scientific notation for very
/// small or large magnitudes.
pub fn num(v: f64) -> String {
    let m = v.abs();
    if m == 0.0 || (1e-4..1e15).contains(&m) || !m.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// As [`num`], empty for `None`.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Renders a table: provenance comment, header, rows.
pub fn render(spec: &TableSpec, config_hash: &str, rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = format!("# {TOOL_VERSION} config_sha256={config_hash}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    let to_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(spec.columns.iter().map(|c| c.0)).map_err(to_err)?;
    for row in rows {
        debug_assert_eq!(row.len(), spec.columns.len());
        w.write_record(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    drop(w);
    Ok(out)
}

pub fn write_table(dir: &Path, file: &str, spec: &TableSpec, config_hash: &str, rows: &[Vec<String>]) -> Result<PathBuf> {
    let path = dir.join(file);
    let bytes = render(spec, config_hash, rows)?;
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn schema_text() -> String {
    let mut s = String::from("# Output tables\n\nEvery CSV starts with one `#` line naming the tool version and the SHA-256 of the config, followed by a header row.\n");
    for t in ALL_TABLES {
        s.push_str(&format!("\n## {}\n\n{}\n\n| column | meaning |\n|---|---|\n", t.file, t.about));
        for (name, doc) in t.columns {
            s.push_str(&format!("| {name} | {doc} |\n"));
        }
    }
    s
}

pub fn write_schema(dir: &Path) -> Result<()> {
    let path = dir.join(SCHEMA_FILE);
    std::fs::write(&path, schema_text()).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_has_provenance_then_header() {
        let rows = vec![vec!["0".into(), "1".into(), "2".into()]];
        let spec = TableSpec {
            file: "t.csv",
            about: "",
            columns: &[("a", ""), ("b", ""), ("c", "")],
        };
        let text = String::from_utf8(render(&spec, "abc", &rows).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# balancelab ") && lines[0].ends_with("config_sha256=abc"));
        assert_eq!(lines[1], "a,b,c");
        assert_eq!(lines[2], "0,1,2");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(opt(None), "");
    }

    #[test]
    fn schema_lists_every_column() {
        let s = schema_text();
        for t in ALL_TABLES {
            for (name, _) in t.columns {
                assert!(s.contains(&format!("| {name} |")), "{name}");
            }
        }
    }
}
