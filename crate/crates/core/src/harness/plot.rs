//! Long-format plot data from trace CSV files.

use std::io;
use std::path::Path;

/// A trace read back as a string table.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub run_id: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TraceTable {
    pub fn read(run_id: impl Into<String>, path: &Path) -> csv::Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<csv::Result<_>>()?;
        Ok(Self { run_id: run_id.into(), header, rows })
    }

    pub fn from_csv_str(run_id: impl Into<String>, text: &str) -> csv::Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<csv::Result<_>>()?;
        Ok(Self { run_id: run_id.into(), header, rows })
    }
}

/// Writes `run_id,n,metric,value` rows. Values are copied verbatim. An
/// empty `metrics` list selects every column except `n`.
pub fn emit_plot_data<W: io::Write>(traces: &[TraceTable], metrics: &[String], out: W) -> csv::Result<u64> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run_id", "n", "metric", "value"])?;
    let mut written = 0;
    for t in traces {
        let n_col = t.header.iter().position(|h| h == "n");
        let cols: Vec<usize> = t
            .header
            .iter()
            .enumerate()
            .filter(|&(i, h)| Some(i) != n_col && (metrics.is_empty() || metrics.contains(h)))
            .map(|(i, _)| i)
            .collect();
        for (r, row) in t.rows.iter().enumerate() {
            let n = n_col.map_or_else(|| (r + 1).to_string(), |c| row[c].clone());
            for &c in &cols {
                w.write_record([t.run_id.as_str(), n.as_str(), t.header[c].as_str(), row[c].as_str()])?;
                written += 1;
            }
        }
    }
    w.flush()?;
    Ok(written)
}
