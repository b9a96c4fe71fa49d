//! Text formats: edge lists, node measures, dense CSV matrices, and the CSV /
//! JSON reports written by the command-line tool.
//!
//! Edge lists hold one `i<TAB>j<TAB>omega` per line, measure files one
//! `i<TAB>mu`; indices are 0-based and lines starting with `#` are ignored.
//! Any run of whitespace is accepted as a separator. Line numbers in errors
//! are 1-based and count every physical line.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::calculus::NodeFunction;
use crate::dynamics::Trajectory;
use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::gnn::OversmoothReport;
use crate::graph::{Preset, Topology, WeightedGraph};
use crate::spectral::SpectralDecomposition;
use crate::verify::CheckRow;

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    let raw = field.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} `{raw}`"),
    })
}

fn no_trailing<'a>(mut fields: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match fields.next() {
        Some(extra) => Err(Error::Parse {
            line,
            msg: format!("unexpected field `{extra}`"),
        }),
        None => Ok(()),
    }
}

/// Parses `i j omega` lines.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    data_lines(text)
        .map(|(line, l)| {
            let mut fields = l.split_whitespace();
            let i = parse_field(fields.next(), line, "source index")?;
            let j = parse_field(fields.next(), line, "target index")?;
            let w = parse_field(fields.next(), line, "weight")?;
            no_trailing(fields, line)?;
            Ok((i, j, w))
        })
        .collect()
}

/// Parses `i mu` lines into a dense measure; every node `0..n` must appear once.
pub fn parse_measure(text: &str) -> Result<Vec<f64>> {
    let mut entries = Vec::new();
    let mut last_line = 0;
    for (line, l) in data_lines(text) {
        let mut fields = l.split_whitespace();
        let i: usize = parse_field(fields.next(), line, "node index")?;
        let mu: f64 = parse_field(fields.next(), line, "measure")?;
        no_trailing(fields, line)?;
        entries.push((line, i, mu));
        last_line = line;
    }
    let n = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    let mut mu = vec![f64::NAN; n];
    for (line, i, m) in entries {
        if !mu[i].is_nan() {
            return Err(Error::Parse {
                line,
                msg: format!("node {i} listed twice"),
            });
        }
        mu[i] = m;
    }
    if let Some(i) = mu.iter().position(|m| m.is_nan()) {
        return Err(Error::Parse {
            line: last_line + 1,
            msg: format!("no measure for node {i}"),
        });
    }
    Ok(mu)
}

/// Parses a header-free, comma-separated dense matrix.
pub fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, l) in data_lines(text) {
        let row: Vec<f64> = l
            .split(',')
            .map(|f| parse_field(Some(f.trim()), line, "number"))
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {c} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Loads a graph from an edge list plus either a measure file or a preset.
pub fn load_graph(edge_path: &Path, measure_path: Option<&Path>, preset: Option<Preset>) -> Result<WeightedGraph> {
    let edges = parse_edge_list(&read(edge_path)?)?;
    let max_index = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    match (measure_path, preset) {
        (Some(_), Some(_)) => Err(Error::ConflictingMeasure),
        (None, None) => Err(Error::MissingMeasure),
        (Some(mp), None) => {
            let mu = parse_measure(&read(mp)?)?;
            if mu.len() < max_index {
                return Err(Error::MeasureLength {
                    expected: max_index,
                    got: mu.len(),
                });
            }
            WeightedGraph::new(mu.len(), &edges, mu)
        }
        (None, Some(p)) => {
            let pairs: Vec<_> = edges.iter().map(|&(i, j, _)| (i, j)).collect();
            WeightedGraph::from_preset(&Topology::new(max_index, &pairs)?, p)
        }
    }
}

pub fn load_features(path: &Path) -> Result<NodeFunction> {
    NodeFunction::new(parse_csv_matrix(&read(path)?)?)
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_csv_matrix(&read(path)?)
}

/// 17 significant digits; parses back to the identical `f64`.
fn exact(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_edge_list(g: &WeightedGraph) -> String {
    let mut out = String::new();
    for (i, j, w) in g.edges() {
        let _ = writeln!(out, "{i}\t{j}\t{}", exact(w));
    }
    out
}

pub fn format_measure(g: &WeightedGraph) -> String {
    let mut out = String::new();
    for (i, &m) in g.mu().iter().enumerate() {
        let _ = writeln!(out, "{i}\t{}", exact(m));
    }
    out
}

pub fn format_csv_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| exact(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// `k,alpha_k`.
pub fn spectrum_csv(sd: &SpectralDecomposition) -> String {
    let mut out = String::from("k,alpha_k\n");
    for (k, a) in sd.alphas().iter().enumerate() {
        let _ = writeln!(out, "{k},{a}");
    }
    out
}

/// `m,E_m,gamma_m`.
pub fn energy_csv(report: &EnergyReport) -> String {
    let mut out = String::from("m,E_m,gamma_m\n");
    for (m, (e, g)) in &report.values {
        let _ = writeln!(out, "{m},{e},{g}");
    }
    out
}

/// `step,time_or_k,E_<m>...,bound_value,satisfied`. The bound is expressed in
/// units of `E_1`: `rate · E_1(0)`.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let mut out = String::from("step,time_or_k");
    for m in &tr.orders {
        let _ = write!(out, ",E_{m}");
    }
    out.push_str(",bound_value,satisfied\n");
    let e1_0 = tr.samples.first().and_then(|s| s.energies.get(&1).copied());
    for (step, s) in tr.samples.iter().enumerate() {
        let _ = write!(out, "{step},{}", s.abscissa);
        for m in &tr.orders {
            let _ = write!(out, ",{}", s.energies[m]);
        }
        match (s.certificate, e1_0) {
            (Some(c), Some(e0)) => {
                let _ = writeln!(out, ",{},{}", c.rate * e0, c.satisfied);
            }
            (Some(c), None) => {
                let _ = writeln!(out, ",,{}", c.satisfied);
            }
            _ => out.push_str(",,\n"),
        }
    }
    out
}

/// `depth,E_<m>...`.
pub fn gnn_csv(report: &OversmoothReport) -> String {
    let mut out = String::from("depth");
    for m in &report.orders {
        let _ = write!(out, ",E_{m}");
    }
    out.push('\n');
    for (depth, e) in report.energies_by_depth.iter().enumerate() {
        let _ = write!(out, "{depth}");
        for m in &report.orders {
            let _ = write!(out, ",{}", e[m]);
        }
        out.push('\n');
    }
    out
}

/// `{log_slope, depth_below_1e-10, theoretical_rate, ...}`.
pub fn gnn_summary_json(report: &OversmoothReport) -> String {
    let summary = serde_json::json!({
        "log_slope": report.log_slope,
        "depth_below_1e-10": report.depth_below(1e-10),
        "theoretical_rate": report.theoretical_rate,
        "decay_exponent": report.decay_exponent,
        "theoretical_exponent": report.theoretical_exponent(),
        "collapse_ratio": report.collapse_ratio(),
        "tail_fraction": report.tail_fraction,
    });
    let mut s = serde_json::to_string_pretty(&summary).expect("summary serialises");
    s.push('\n');
    s
}

/// `name,lhs,rhs,slack,pass,detail`.
pub fn checks_csv(rows: &[CheckRow]) -> String {
    let mut out = String::from("name,lhs,rhs,slack,pass,detail\n");
    for r in rows {
        let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.name,
            num(r.lhs),
            num(r.rhs),
            num(r.slack),
            r.status,
            r.detail.replace(',', ";")
        );
    }
    out
}
