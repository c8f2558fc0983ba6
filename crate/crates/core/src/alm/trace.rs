use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<S> {
    pub k: usize,
    pub rho: S,
    pub lambda_norm: f64,
    /// `L` at the BCD output.
    pub l_value: S,
    pub lower_bound: Option<S>,
    pub incumbent: Option<S>,
    /// `‖(Ax − b)₊‖₂` at the BCD output.
    pub violation: f64,
    pub gap1: Option<f64>,
    pub gap2: Option<f64>,
    pub ms: u64,
}

#[derive(Serialize)]
struct Record {
    k: usize,
    rho: f64,
    lambda_norm: f64,
    #[serde(rename = "L")]
    l: f64,
    lb: Option<f64>,
    incumbent: Option<f64>,
    viol: f64,
    gap1: Option<f64>,
    gap2: Option<f64>,
    ms: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveTrace<S> {
    pub rows: Vec<TraceRow<S>>,
}

impl<S> Default for SolveTrace<S> {
    fn default() -> Self {
        Self { rows: Vec::new() }
    }
}

impl<S: Scalar> SolveTrace<S> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn records(&self) -> Vec<Record> {
        self.rows
            .iter()
            .map(|r| Record {
                k: r.k,
                rho: r.rho.to_f64_lossy(),
                lambda_norm: r.lambda_norm,
                l: r.l_value.to_f64_lossy(),
                lb: r.lower_bound.as_ref().map(Scalar::to_f64_lossy),
                incumbent: r.incumbent.as_ref().map(Scalar::to_f64_lossy),
                viol: r.violation,
                gap1: r.gap1,
                gap2: r.gap2,
                ms: r.ms,
            })
            .collect()
    }

    /// CSV with header `k,rho,lambda_norm,L,lb,incumbent,viol,gap1,gap2,ms`;
    /// missing values are empty cells.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(["k", "rho", "lambda_norm", "L", "lb", "incumbent", "viol", "gap1", "gap2", "ms"])
                .map_err(|e| Error::Export(e.to_string()))?;
        }
        for rec in self.records() {
            w.serialize(rec).map_err(|e| Error::Export(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Export(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Export(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.records()).map_err(|e| Error::Export(e.to_string()))
    }

    /// Writes CSV to `path` and JSON next to it with a `.json` extension.
    pub fn write_files(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |p: &Path, e: std::io::Error| Error::Io {
            path: p.display().to_string(),
            source: e,
        };
        std::fs::write(path, self.to_csv()?).map_err(|e| io(path, e))?;
        let json = path.with_extension("json");
        std::fs::write(&json, self.to_json()?).map_err(|e| io(&json, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, lb: Option<f64>) -> TraceRow<f64> {
        TraceRow {
            k,
            rho: 2.0,
            lambda_norm: 0.5,
            l_value: -3.0,
            lower_bound: lb,
            incumbent: None,
            violation: 1.0,
            gap1: None,
            gap2: None,
            ms: 0,
        }
    }

    #[test]
    fn csv_layout() {
        let t = SolveTrace {
            rows: vec![row(0, Some(-5.0)), row(1, None)],
        };
        let csv = t.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,rho,lambda_norm,L,lb,incumbent,viol,gap1,gap2,ms");
        assert_eq!(lines[1], "0,2.0,0.5,-3.0,-5.0,,1.0,,,0");
        assert_eq!(lines[2], "1,2.0,0.5,-3.0,,,1.0,,,0");
    }

    #[test]
    fn empty_trace_keeps_header() {
        let t = SolveTrace::<f64>::default();
        assert_eq!(t.to_csv().unwrap().trim(), "k,rho,lambda_norm,L,lb,incumbent,viol,gap1,gap2,ms");
        assert_eq!(t.to_json().unwrap(), "[]");
    }
}
