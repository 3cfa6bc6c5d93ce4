//! Flat CSV/JSON rows shared by every subcommand that emits data.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::MomentReport;
use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub module: String,
    pub name: String,
    pub r: f64,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub t_spec: String,
    pub value_re: f64,
    pub value_im: f64,
    pub se: Option<f64>,
    pub ref_re: Option<f64>,
    pub ref_im: Option<f64>,
    pub z: Option<f64>,
}

/// One row per word ("moment") and one per unordered word pair ("cov").
pub fn report_rows(report: &MomentReport) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for w in &report.words {
        rows.push(ReportRow {
            module: "harness".into(),
            name: "moment".into(),
            r: report.r,
            s: report.s,
            n: report.n,
            t_spec: w.word.to_string(),
            value_re: w.mean.re,
            value_im: w.mean.im,
            se: Some(w.se),
            ref_re: w.reference.map(|c| c.re),
            ref_im: w.reference.map(|c| c.im),
            z: w.z.filter(|z| z.is_finite()),
        });
    }
    for i in 0..report.words.len() {
        for j in i..report.words.len() {
            let c = report.covariance[i][j];
            rows.push(ReportRow {
                module: "harness".into(),
                name: "cov".into(),
                r: report.r,
                s: report.s,
                n: report.n,
                t_spec: format!("{} | {}", report.words[i].word, report.words[j].word),
                value_re: c.re,
                value_im: c.im,
                se: None,
                ref_re: None,
                ref_im: None,
                z: None,
            });
        }
    }
    rows
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ReportRow>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(input);
    let rows = rdr.deserialize().collect::<Result<Vec<ReportRow>, _>>()?;
    Ok(rows)
}

pub fn write_json<W: Write>(rows: &[ReportRow], out: W) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<ReportRow>, HarnessError> {
    Ok(serde_json::from_reader(input)?)
}

pub fn write_csv_file(rows: &[ReportRow], path: &Path) -> Result<(), HarnessError> {
    write_csv(rows, std::fs::File::create(path)?)
}

pub fn write_json_file(rows: &[ReportRow], path: &Path) -> Result<(), HarnessError> {
    let mut f = std::fs::File::create(path)?;
    write_json(rows, &mut f)?;
    writeln!(f)?;
    Ok(())
}
