//! Long-format cylinder samples (t, theta_index, value) and their sidecar.

use std::path::{Path, PathBuf};

use delaunay4::fit::CylinderSamples;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::format_float;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub n: u32,
    /// Unit directions, indexed by theta_index.
    pub thetas: Vec<Vec<f64>>,
    /// Suggested regression window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    /// Whether the samples carry a deformation worth estimating.
    #[serde(default)]
    pub estimate_x0: bool,
}

pub fn default_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".grid.json");
    PathBuf::from(s)
}

pub fn write_csv(samples: &CylinderSamples) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::io(e.to_string());
    w.write_record(["t", "theta_index", "value"]).map_err(io)?;
    for (i, t) in samples.t.iter().enumerate() {
        for (k, v) in samples.values[i].iter().enumerate() {
            w.write_record([format_float(*t), k.to_string(), format_float(*v)])
                .map_err(io)?;
        }
    }
    w.into_inner().map_err(|e| CliError::io(e.to_string()))
}

pub fn read(csv_path: &Path, sidecar_path: &Path) -> CliResult<(CylinderSamples, Sidecar)> {
    let text = std::fs::read(sidecar_path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", sidecar_path.display())))?;
    let sidecar: Sidecar = serde_json::from_slice(&text)
        .map_err(|e| CliError::usage(format!("bad sidecar {}: {e}", sidecar_path.display())))?;
    let m = sidecar.thetas.len();
    if m == 0 {
        return Err(CliError::usage("sidecar lists no directions"));
    }
    let mut reader = csv::Reader::from_path(csv_path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", csv_path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::usage(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "theta_index", "value"] {
        return Err(CliError::usage(
            "sample file must have columns t, theta_index, value",
        ));
    }
    let mut t: Vec<f64> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(e.to_string()))?;
        let bad = |what: &str| CliError::usage(format!("row {}: bad {what}", line + 2));
        let ti: f64 = rec[0].trim().parse().map_err(|_| bad("t"))?;
        let k: usize = rec[1].trim().parse().map_err(|_| bad("theta_index"))?;
        let v: f64 = rec[2].trim().parse().map_err(|_| bad("value"))?;
        if k >= m {
            return Err(bad("theta_index"));
        }
        if values.last().is_none_or(|row| row.len() == m) {
            if k != 0 {
                return Err(CliError::usage(format!(
                    "row {}: each t must list theta_index 0..{m}",
                    line + 2
                )));
            }
            t.push(ti);
            values.push(Vec::with_capacity(m));
        }
        let row = values.last_mut().expect("pushed above");
        if k != row.len() || ti != *t.last().expect("pushed above") {
            return Err(CliError::usage(format!(
                "row {}: rows must be grouped by t in theta order",
                line + 2
            )));
        }
        row.push(v);
    }
    if values.last().is_some_and(|row| row.len() != m) {
        return Err(CliError::usage("incomplete final t block"));
    }
    Ok((
        CylinderSamples {
            t,
            thetas: sidecar.thetas.clone(),
            values,
        },
        sidecar,
    ))
}
