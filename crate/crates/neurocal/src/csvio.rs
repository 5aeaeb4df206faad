//! CSV tables.

use std::path::Path;

use anyhow::{bail, Context, Result};
use neurocal_core::morphometrics::QoiMatrix;

/// A QoI matrix with one string id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiTable {
    pub ids: Vec<String>,
    pub matrix: QoiMatrix,
}

pub fn write_qoi<W: std::io::Write>(out: W, ids: &[String], m: &QoiMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string()];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(m.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_qoi_file(path: &Path, ids: &[String], m: &QoiMatrix) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_qoi(f, ids, m)
}

/// Reads a QoI CSV. A leading `id` column is optional; without it rows are
/// numbered from 0.
pub fn read_qoi(path: &Path) -> Result<QoiTable> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let has_id = headers.first().is_some_and(|h| h == "id");
    let labels: Vec<String> = headers.iter().skip(usize::from(has_id)).cloned().collect();
    if labels.is_empty() {
        bail!("{}: no QoI columns", path.display());
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        if rec.len() != headers.len() {
            bail!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                i + 1,
                rec.len(),
                headers.len()
            );
        }
        ids.push(if has_id {
            rec[0].to_string()
        } else {
            i.to_string()
        });
        let row = rec
            .iter()
            .skip(usize::from(has_id))
            .enumerate()
            .map(|(j, v)| {
                v.trim().parse::<f64>().with_context(|| {
                    format!(
                        "{}: row {} column {} is not a number",
                        path.display(),
                        i + 1,
                        labels[j]
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let matrix =
        QoiMatrix::from_rows(labels, &rows).with_context(|| format!("{}", path.display()))?;
    Ok(QoiTable { ids, matrix })
}

/// Writes rows of already-formatted fields under a header.
pub fn write_rows<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}
