//! Grid functions on disk: a `node,value` CSV plus a JSON sidecar holding
//! the interpolation and, for operator images, the truncation metadata.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::{GridFunction, Interpolation, PfMetadata};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub interpolation: Interpolation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_branch: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_bound: Option<f64>,
    /// Number of operator applications that produced the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

impl GridSidecar {
    pub fn plain(interpolation: Interpolation) -> Self {
        Self { interpolation, m: None, tail_tol: None, max_branch: None, tail_bound: None, iterations: None }
    }

    pub fn from_metadata(interpolation: Interpolation, meta: &PfMetadata, iterations: usize) -> Self {
        Self {
            interpolation,
            m: Some(meta.m),
            tail_tol: Some(meta.tail_tol),
            max_branch: Some(meta.max_branch),
            tail_bound: Some(meta.tail_bound),
            iterations: Some(iterations),
        }
    }
}

/// `data.csv` → `data.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_grid_csv<W: Write>(out: W, f: &GridFunction) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "value"])?;
    for (x, v) in f.nodes().iter().zip(f.values()) {
        w.write_record([x.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `node,value` rows; a header row is optional.
pub fn read_grid_csv<R: Read>(input: R, interpolation: Interpolation) -> Result<GridFunction> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected 2 fields, got {}", line + 1, record.len())));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(v)) => {
                nodes.push(x);
                values.push(v);
            }
            _ if line == 0 => continue,
            _ => return Err(Error::Parse(format!("line {}: not a number pair", line + 1))),
        }
    }
    GridFunction::new(nodes, values, interpolation)
}

/// Writes `f` to `path` and its sidecar next to it.
pub fn save_grid(path: &Path, f: &GridFunction, sidecar: &GridSidecar) -> Result<()> {
    write_grid_csv(File::create(path)?, f)?;
    let mut side = File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(&mut side, sidecar)?;
    side.write_all(b"\n")?;
    Ok(())
}

/// Loads a grid; the interpolation comes from the sidecar when present,
/// otherwise from `fallback`.
pub fn load_grid(path: &Path, fallback: Interpolation) -> Result<(GridFunction, Option<GridSidecar>)> {
    let side = sidecar_path(path);
    let sidecar: Option<GridSidecar> = if side.exists() && side != path {
        Some(serde_json::from_reader(File::open(&side)?)?)
    } else {
        None
    };
    let interp = sidecar.as_ref().map_or(fallback, |s| s.interpolation);
    let f = read_grid_csv(File::open(path)?, interp)?;
    Ok((f, sidecar))
}
