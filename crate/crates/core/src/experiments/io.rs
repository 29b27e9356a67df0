//! File formats: field CSV (`x,re,im`), histogram CSV (`x,count`),
//! trajectory JSONL and pretty JSON reports with `.meta.json` sidecars.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::double_slit::ArrivalHistogram;
use crate::ensemble::{Ensemble, Provenance};
use crate::error::{Error, Result};
use crate::lattice::{PhasedTrajectory, SpaceTimeGrid, Trajectory, WaveFunctionField};

/// 17 significant digits: enough for an exact `f64` round trip.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn field_to_csv(field: &WaveFunctionField) -> String {
    let mut out = String::from("x,re,im\n");
    for (x, a) in field.grid().centers().into_iter().zip(field.amplitudes()) {
        let _ = writeln!(out, "{},{},{}", num(x), num(a.re), num(a.im));
    }
    out
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number")))
}

/// Reads a field written by [`field_to_csv`]; `x` must match `grid`'s cell centres.
pub fn field_from_csv(text: &str, grid: SpaceTimeGrid, time_index: usize) -> Result<WaveFunctionField> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,re,im") {
        return Err(Error::Parse("field CSV must start with header `x,re,im`".into()));
    }
    let centers = grid.centers();
    let mut amps = Vec::with_capacity(grid.n_x());
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 columns", i + 2)));
        }
        let x = parse_f64(cols[0], i + 2)?;
        let expected = centers
            .get(amps.len())
            .ok_or_else(|| Error::Parse(format!("more rows than the grid's {} cells", grid.n_x())))?;
        if (x - expected).abs() > 1e-9 * grid.dx() {
            return Err(Error::Parse(format!(
                "line {}: x = {x} is not cell centre {expected}",
                i + 2
            )));
        }
        amps.push(Complex64::new(parse_f64(cols[1], i + 2)?, parse_f64(cols[2], i + 2)?));
    }
    WaveFunctionField::new(grid, time_index, amps)
}

/// Field as JSON arrays `x`, `re`, `im`.
pub fn field_to_json(field: &WaveFunctionField) -> serde_json::Value {
    serde_json::json!({
        "time_index": field.time_index(),
        "x": field.grid().centers(),
        "re": field.amplitudes().iter().map(|a| a.re).collect::<Vec<_>>(),
        "im": field.amplitudes().iter().map(|a| a.im).collect::<Vec<_>>(),
    })
}

pub fn histogram_to_csv(h: &ArrivalHistogram) -> String {
    let mut out = String::from("x,count\n");
    for (x, c) in h.centers().into_iter().zip(&h.counts) {
        let _ = writeln!(out, "{},{c}", num(x));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryRecord {
    id: u64,
    positions: Vec<usize>,
    phases: Vec<f64>,
    weight_re: f64,
    weight_im: f64,
}

pub fn ensemble_to_jsonl(ens: &Ensemble) -> String {
    let mut out = String::new();
    for m in ens.members() {
        let w = m.amplitude_weight();
        let rec = TrajectoryRecord {
            id: m.id(),
            positions: m.positions().to_vec(),
            phases: m.phases().to_vec(),
            weight_re: w.re,
            weight_im: w.im,
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serialises"));
        out.push('\n');
    }
    out
}

pub fn ensemble_from_jsonl(reader: impl BufRead, grid: SpaceTimeGrid, provenance: Provenance) -> Result<Ensemble> {
    let mut members = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrajectoryRecord =
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("trajectory line {}: {e}", i + 1)))?;
        let t = Trajectory::new(rec.id, rec.positions, &grid, None)?;
        members.push(PhasedTrajectory::from_parts(
            t,
            rec.phases,
            Complex64::new(rec.weight_re, rec.weight_im),
        )?);
    }
    Ensemble::new(grid, members, provenance)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

/// Reproducibility record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMeta {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}
