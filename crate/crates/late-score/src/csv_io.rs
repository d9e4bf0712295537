//! CSV input and output.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use late_score_core::inference::ScoreAnalysis;
use late_score_core::simulation::{ReplicationResult, SummaryRow};
use late_score_core::{Dataset, ObservedUnit, ScoreSample};

use crate::error::{AppError, AppResult};

/// Column names of the analysis variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub outcome: String,
    pub treatment: String,
    pub instrument: String,
    pub covariates: Vec<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            outcome: "y".into(),
            treatment: "a".into(),
            instrument: "z".into(),
            covariates: vec!["x1".into()],
        }
    }
}

fn parse_binary(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        other => {
            let v = other.parse::<f64>().ok()?;
            if v == 1.0 {
                Some(true)
            } else if v == 0.0 {
                Some(false)
            } else {
                None
            }
        }
    }
}

/// Read the schema columns from a headed CSV file. Errors name the 1-based
/// data row and the column.
pub fn load_csv(path: &Path, schema: &Schema) -> AppResult<Dataset> {
    let parse_err = |message: String| AppError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AppError::csv(path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| AppError::csv(path, e))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(format!("no column named '{name}'")))
    };
    let iy = column(&schema.outcome)?;
    let ia = column(&schema.treatment)?;
    let iz = column(&schema.instrument)?;
    let ix: Vec<usize> = schema
        .covariates
        .iter()
        .map(|c| column(c))
        .collect::<AppResult<_>>()?;

    let mut units = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| AppError::csv(path, e))?;
        let field = |idx: usize, name: &str| {
            record
                .get(idx)
                .ok_or_else(|| parse_err(format!("row {row}, column '{name}': missing field")))
        };
        let real = |idx: usize, name: &str| -> AppResult<f64> {
            let raw = field(idx, name)?;
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_err(format!(
                    "row {row}, column '{name}': expected a finite number, got '{raw}'"
                ))),
            }
        };
        let binary = |idx: usize, name: &str| -> AppResult<bool> {
            let raw = field(idx, name)?;
            parse_binary(raw).ok_or_else(|| {
                parse_err(format!(
                    "row {row}, column '{name}': expected 0 or 1, got '{raw}'"
                ))
            })
        };
        let x = ix
            .iter()
            .zip(&schema.covariates)
            .map(|(&j, name)| real(j, name))
            .collect::<AppResult<_>>()?;
        units.push(ObservedUnit::new(
            real(iy, &schema.outcome)?,
            binary(ia, &schema.treatment)?,
            binary(iz, &schema.instrument)?,
            x,
        ));
    }
    if units.len() < 2 {
        return Err(parse_err(format!(
            "fewer than 2 rows ({} found)",
            units.len()
        )));
    }
    Ok(Dataset::new(units)?)
}

fn create(path: &Path) -> AppResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(path: &Path, mut writer: csv::Writer<File>) -> AppResult<()> {
    writer.flush().map_err(|e| AppError::io(path, e))
}

/// Write rows to `path` under `header`.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> AppResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = create(path)?;
    w.write_record(header).map_err(|e| AppError::csv(path, e))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        w.write_record(&row).map_err(|e| AppError::csv(path, e))?;
    }
    finish(path, w)
}

/// Shortest round-trip representation; `inf`, `-inf`, `NaN` for non-finite.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_bool(b: bool) -> String {
    String::from(if b { "1" } else { "0" })
}

/// `y,a,z,x1..xp`.
pub fn write_dataset(path: &Path, data: &Dataset) -> AppResult<()> {
    let mut header = vec!["y".to_string(), "a".to_string(), "z".to_string()];
    header.extend((1..=data.p()).map(|j| format!("x{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = data.units().iter().map(|u| {
        let mut row = vec![fmt_f64(u.y), fmt_bool(u.a), fmt_bool(u.z)];
        row.extend(u.x.iter().map(|&v| fmt_f64(v)));
        row
    });
    write_csv(path, &header, rows)
}

pub const REPLICATION_HEADER: &[&str] = &[
    "setting",
    "pi",
    "n",
    "rep_id",
    "truth",
    "set_tag",
    "set_lo",
    "set_hi",
    "covered_score",
    "diam_score",
    "wald_lo",
    "wald_hi",
    "covered_wald",
    "diam_wald",
    "phi_hat",
    "dn0",
    "weak_instrument",
];

pub fn write_replications(path: &Path, results: &[ReplicationResult]) -> AppResult<()> {
    let rows = results.iter().map(|r| {
        let (lo, hi) = r.set.endpoints();
        vec![
            r.setting.label().to_string(),
            fmt_f64(r.setting.pi(r.n)),
            r.n.to_string(),
            r.rep_id.to_string(),
            fmt_f64(r.truth),
            r.set.tag().to_string(),
            fmt_f64(lo),
            fmt_f64(hi),
            fmt_bool(r.covered_score),
            fmt_f64(r.diam_score),
            fmt_f64(r.wald_lo),
            fmt_f64(r.wald_hi),
            fmt_bool(r.covered_wald),
            fmt_f64(r.diam_wald),
            fmt_f64(r.phi_hat),
            fmt_f64(r.dn0),
            fmt_bool(r.weak_instrument),
        ]
    });
    write_csv(path, REPLICATION_HEADER, rows)
}

pub const SUMMARY_HEADER: &[&str] = &[
    "setting",
    "n",
    "coverage_score",
    "coverage_wald",
    "se_score",
    "se_wald",
    "median_diam_score",
    "median_diam_wald",
    "frac_infinite",
    "median_ratio",
];

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> AppResult<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.setting.label().to_string(),
            r.n.to_string(),
            fmt_f64(r.coverage_score),
            fmt_f64(r.coverage_wald),
            fmt_f64(r.se_score),
            fmt_f64(r.se_wald),
            fmt_f64(r.median_diam_score),
            fmt_f64(r.median_diam_wald),
            fmt_f64(r.frac_infinite),
            fmt_f64(r.median_ratio),
        ]
    });
    write_csv(path, SUMMARY_HEADER, rows)
}

/// `index,psi_a,psi_b`.
pub fn write_scores(path: &Path, scores: &ScoreSample) -> AppResult<()> {
    let rows = scores
        .psi_a()
        .iter()
        .zip(scores.psi_b())
        .enumerate()
        .map(|(i, (&a, &b))| vec![i.to_string(), fmt_f64(a), fmt_f64(b)]);
    write_csv(path, &["index", "psi_a", "psi_b"], rows)
}

pub const ANALYSIS_HEADER: &[&str] = &[
    "n",
    "alpha",
    "phi_hat",
    "sigma_hat",
    "wald_lo",
    "wald_hi",
    "set_tag",
    "set_lo",
    "set_hi",
    "dn0",
    "weak_instrument",
    "a",
    "b",
    "c",
    "delta",
    "diameter_ratio",
];

pub fn analysis_row(analysis: &ScoreAnalysis) -> Vec<String> {
    let q = &analysis.coeffs;
    let (phi, sigma, lo, hi) = match &analysis.drml {
        Ok(d) => (d.phi_hat, d.sigma_hat(), d.wald_lo, d.wald_hi),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };
    let (set_lo, set_hi) = analysis.set.endpoints();
    vec![
        q.n.to_string(),
        fmt_f64(q.alpha),
        fmt_f64(phi),
        fmt_f64(sigma),
        fmt_f64(lo),
        fmt_f64(hi),
        analysis.set.tag().to_string(),
        fmt_f64(set_lo),
        fmt_f64(set_hi),
        fmt_f64(analysis.dn0),
        fmt_bool(analysis.weak_instrument),
        fmt_f64(q.a),
        fmt_f64(q.b),
        fmt_f64(q.c),
        fmt_f64(q.delta),
        fmt_f64(analysis.diameter_ratio().unwrap_or(f64::NAN)),
    ]
}

pub fn write_analysis(path: &Path, analysis: &ScoreAnalysis) -> AppResult<()> {
    write_csv(path, ANALYSIS_HEADER, [analysis_row(analysis)])
}

/// Single `draw` column.
pub fn write_draws(path: &Path, draws: &[f64]) -> AppResult<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| AppError::io(path, e);
    writeln!(out, "draw").map_err(io)?;
    for &d in draws {
        writeln!(out, "{d}").map_err(io)?;
    }
    out.flush().map_err(io)
}
