use std::io::{Read, Write};

use super::{MetaResult, Payload, StudyRecord};
use crate::error::{Error, Result, StudyIssue};

/// The bundled seven-study vitamin D fixture.
pub const TABLE1_CSV: &str = include_str!("../../data/table1.csv");

const COLUMNS: [&str; 12] = [
    "index",
    "label",
    "n_cases",
    "n_controls",
    "payload_type",
    "f1",
    "f2",
    "f3",
    "f4",
    "f5",
    "f6",
    "note",
];

fn num<T: std::str::FromStr>(rec: &csv::StringRecord, col: usize) -> std::result::Result<T, String> {
    let raw = rec.get(col).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| format!("column {} = {raw:?} is not a valid number", COLUMNS[col]))
}

fn fields(rec: &csv::StringRecord, count: usize) -> std::result::Result<Vec<f64>, String> {
    let vals = (5..5 + count)
        .map(|c| num::<f64>(rec, c))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if let Some(c) = (5 + count..11).find(|&c| !rec.get(c).unwrap_or("").trim().is_empty()) {
        return Err(format!("unexpected value in column {}", COLUMNS[c]));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err("non-finite field".into());
    }
    Ok(vals)
}

fn ordered(v: [f64; 3], what: &str) -> std::result::Result<[f64; 3], String> {
    if v[0] <= v[1] && v[1] <= v[2] {
        Ok(v)
    } else {
        Err(format!("{what} values {v:?} are not ordered"))
    }
}

fn parse_row(rec: &csv::StringRecord) -> std::result::Result<StudyRecord, String> {
    let index: usize = num(rec, 0)?;
    let n_cases: usize = num(rec, 2)?;
    let n_controls: usize = num(rec, 3)?;
    if n_cases < 2 || n_controls < 2 {
        return Err(format!("arm sizes {n_cases}/{n_controls} must be at least 2"));
    }
    let kind = rec.get(4).unwrap_or("").trim().to_ascii_lowercase();
    let payload = match kind.as_str() {
        "fivenum" => {
            let f = fields(rec, 6)?;
            Payload::FiveNumber {
                cases: ordered([f[0], f[1], f[2]], "case min/median/max")?,
                controls: ordered([f[3], f[4], f[5]], "control min/median/max")?,
            }
        }
        "meansd" => {
            let f = fields(rec, 4)?;
            if !(f[1] > 0.0 && f[3] > 0.0) {
                return Err("standard deviations must be positive".into());
            }
            Payload::MeanSd {
                mean_cases: f[0],
                sd_cases: f[1],
                mean_controls: f[2],
                sd_controls: f[3],
            }
        }
        "or" => {
            let f = fields(rec, 3)?;
            if !(f[1] > 0.0 && f[1] < f[2] && f[0] > 0.0) {
                return Err(format!("odds ratio {} with CI ({}, {}) is invalid", f[0], f[1], f[2]));
            }
            Payload::OddsRatio {
                or: f[0],
                lo: f[1],
                hi: f[2],
            }
        }
        "meanrange" => {
            let f = fields(rec, 6)?;
            let arm = |m: f64, lo: f64, hi: f64, what: &str| {
                ordered([lo, m, hi], what).map(|_| [m, lo, hi])
            };
            Payload::MeanRange {
                cases: arm(f[0], f[1], f[2], "case min/mean/max")?,
                controls: arm(f[3], f[4], f[5], "control min/mean/max")?,
            }
        }
        other => return Err(format!("unknown payload type {other:?}")),
    };
    Ok(StudyRecord {
        index,
        label: rec.get(1).unwrap_or("").trim().to_string(),
        n_cases,
        n_controls,
        payload,
        note: rec.get(11).unwrap_or("").trim().to_string(),
    })
}

/// Parses a study CSV. Lines starting with `#` are skipped. Every bad row
/// is reported; nothing is returned unless all rows parse.
pub fn parse_studies<R: Read>(reader: R) -> Result<Vec<StudyRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::InvalidInput(format!("study CSV header: {e}")))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got.len() < COLUMNS.len() - 1 || got.iter().zip(COLUMNS).any(|(g, c)| *g != c) {
        return Err(Error::InvalidInput(format!(
            "study CSV header must be {}",
            COLUMNS.join(",")
        )));
    }

    let mut out = Vec::new();
    let mut issues = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let fallback = row + 1;
        match rec {
            Ok(rec) => match parse_row(&rec) {
                Ok(r) => out.push(r),
                Err(message) => issues.push(StudyIssue {
                    index: rec.get(0).and_then(|s| s.trim().parse().ok()).unwrap_or(fallback),
                    message,
                }),
            },
            Err(e) => issues.push(StudyIssue {
                index: fallback,
                message: e.to_string(),
            }),
        }
    }
    if !issues.is_empty() {
        return Err(Error::Studies(issues));
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("study CSV has no rows".into()));
    }
    Ok(out)
}

/// Writes one row per study plus a `total` row with the pooled effect.
pub fn write_effects_csv<W: Write>(result: &MetaResult, w: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("writing CSV: {e}"));
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "index",
        "label",
        "n_cases",
        "n_controls",
        "d",
        "var_d",
        "weight",
        "ci_lo",
        "ci_hi",
    ])
    .map_err(io)?;
    for s in &result.studies {
        let e = &s.effect;
        wtr.write_record([
            s.index.to_string(),
            s.label.clone(),
            s.n_cases.to_string(),
            s.n_controls.to_string(),
            format!("{:.4}", e.d),
            format!("{:.4}", e.var_d),
            format!("{:.2}", e.weight),
            format!("{:.4}", e.ci95.0),
            format!("{:.4}", e.ci95.1),
        ])
        .map_err(io)?;
    }
    let p = &result.pooled;
    let total_w: f64 = result.studies.iter().map(|s| s.effect.weight).sum();
    wtr.write_record([
        "total".to_string(),
        "Total".to_string(),
        result.studies.iter().map(|s| s.n_cases).sum::<usize>().to_string(),
        result.studies.iter().map(|s| s.n_controls).sum::<usize>().to_string(),
        format!("{:.4}", p.pooled_d),
        format!("{:.4}", p.pooled_se * p.pooled_se),
        format!("{total_w:.2}"),
        format!("{:.4}", p.pooled_ci95.0),
        format!("{:.4}", p.pooled_ci95.1),
    ])
    .map_err(io)?;
    wtr.flush()
        .map_err(|e| Error::InvalidInput(format!("writing CSV: {e}")))
}
