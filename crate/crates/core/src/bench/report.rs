//! Report files: `results.csv`, per-baseline difference maps and significance
//! masks, the Multi-SSSA mean-distance map, and their grayscale renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{CellResult, GridSpec, Method};
use crate::error::{Result, SssaError};
use crate::io::{format_f64, matrix_to_csv, read_json, write_json, write_text};

pub const RESULTS_HEADER: &str =
    "na_index,dur_index,na,dmin,dmax,method,hp1,hp2,mean_dist,std_dist,t_vs_sssa,p_vs_sssa,significant";

/// Raw sweep results, kept next to the report so it can be re-rendered.
pub const CELLS_FILE: &str = "cells.json";

/// Which map formats to write besides `results.csv`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Emit {
    pub csv: bool,
    pub pgm: bool,
}

impl Emit {
    pub fn all() -> Self {
        Self { csv: true, pgm: true }
    }
}

impl FromStr for Emit {
    type Err = SssaError;

    /// Comma-separated subset of `csv,pgm`; an empty string selects neither.
    fn from_str(s: &str) -> Result<Self> {
        let mut emit = Emit::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => emit.csv = true,
                "pgm" => emit.pgm = true,
                other => {
                    return Err(SssaError::InvalidConfig(format!(
                        "unknown report format '{other}' (expected csv or pgm)"
                    )))
                }
            }
        }
        Ok(emit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutput {
    pub spec: GridSpec,
    pub cells: Vec<CellResult>,
}

pub fn write_bench_output(dir: &Path, out: &BenchOutput) -> Result<()> {
    write_json(&dir.join(CELLS_FILE), out)
}

pub fn read_bench_output(dir: &Path) -> Result<BenchOutput> {
    read_json(&dir.join(CELLS_FILE))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineMap {
    pub method: Method,
    /// Baseline mean minus Multi-SSSA mean; rows are `n_a` values, columns
    /// duration pairs. `NaN` for invalid cells.
    pub diff: Array2<f64>,
    pub significant: Array2<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetenceMap {
    /// Multi-SSSA mean test distance per cell.
    pub sssa: Array2<f64>,
    pub baselines: Vec<BaselineMap>,
}

/// Assembles the per-cell matrices for a `rows x cols` grid.
pub fn competence_map(
    cells: &[CellResult],
    shape: (usize, usize),
    baselines: &[Method],
) -> Result<CompetenceMap> {
    let (rows, cols) = shape;
    let mut grid: Vec<Option<&CellResult>> = vec![None; rows * cols];
    for c in cells {
        if c.na_index < rows && c.dur_index < cols {
            grid[c.na_index * cols + c.dur_index] = Some(c);
        }
    }
    if let Some(missing) = grid.iter().position(Option::is_none) {
        return Err(SssaError::IncompleteGrid(missing / cols, missing % cols));
    }
    let cell = |i: usize, j: usize| grid[i * cols + j].expect("checked above");

    let sssa = Array2::from_shape_fn(shape, |(i, j)| {
        cell(i, j).method(Method::MultiSssa).map_or(f64::NAN, |r| r.mean)
    });
    let baselines = baselines
        .iter()
        .map(|&m| {
            let cmp = |i, j| cell(i, j).method(m).and_then(|r| r.versus_sssa);
            BaselineMap {
                method: m,
                diff: Array2::from_shape_fn(shape, |(i, j)| cmp(i, j).map_or(f64::NAN, |c| c.mean_diff)),
                significant: Array2::from_shape_fn(shape, |(i, j)| cmp(i, j).is_some_and(|c| c.significant)),
            }
        })
        .collect();
    Ok(CompetenceMap { sssa, baselines })
}

/// One row per valid cell and method, in cell order.
pub fn results_csv(cells: &[CellResult]) -> String {
    let mut sorted: Vec<&CellResult> = cells.iter().collect();
    sorted.sort_by_key(|c| (c.na_index, c.dur_index));
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for c in sorted {
        for r in &c.methods {
            let hp2 = r.hyper.hp2.map(|v| v.to_string()).unwrap_or_default();
            let (t, p, sig) = match r.versus_sssa {
                Some(cmp) => (format_f64(cmp.t), format_f64(cmp.p), cmp.significant.to_string()),
                None => Default::default(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.na_index + 1,
                c.dur_index + 1,
                c.n_a,
                c.d_min,
                c.d_max,
                r.method,
                r.hyper.hp1,
                hp2,
                format_f64(r.mean),
                format_f64(r.std),
                t,
                p,
                sig
            )
            .expect("writing to a String");
        }
    }
    out
}

/// Sidecar of a PGM rendering: the value range mapped onto `[0, 255]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgmMeta {
    pub width: usize,
    pub height: usize,
    /// Smallest finite value, `None` when there is none.
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub source: String,
}

/// Plain P2 rendering: `round(255 (v - min) / (max - min))`, all pixels 0 when
/// `max == min`, and 0 for non-finite values.
pub fn render_pgm(m: &Array2<f64>, source: &str) -> (String, PgmMeta) {
    let finite = m.iter().copied().filter(|v| v.is_finite());
    let min = finite.clone().reduce(f64::min);
    let max = finite.reduce(f64::max);
    let (height, width) = m.dim();
    let mut out = format!("P2\n{width} {height}\n255\n");
    for row in m.rows() {
        let pixels: Vec<String> = row
            .iter()
            .map(|&v| pixel(v, min, max).to_string())
            .collect();
        out.push_str(&pixels.join(" "));
        out.push('\n');
    }
    let meta = PgmMeta {
        width,
        height,
        min,
        max,
        source: source.to_string(),
    };
    (out, meta)
}

fn pixel(v: f64, min: Option<f64>, max: Option<f64>) -> u8 {
    match (min, max) {
        (Some(lo), Some(hi)) if v.is_finite() && hi > lo => {
            (255.0 * (v - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8
        }
        _ => 0,
    }
}

/// Parses a plain P2 image into `(width, height, pixels)` in row-major order.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, Vec<u16>)> {
    let bad = |msg: &str| SssaError::Parse {
        path: PathBuf::from("<pgm>"),
        msg: msg.to_string(),
    };
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(bad("missing P2 magic"));
    }
    let mut number = |what: &str| -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(&format!("bad or missing {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    let pixels = (0..width * height)
        .map(|_| {
            let v = number("pixel")?;
            if v > maxval {
                return Err(bad("pixel above maxval"));
            }
            Ok(v as u16)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((width, height, pixels))
}

fn bool_csv(m: &Array2<bool>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes `results.csv` and the requested map formats; returns the written paths.
pub fn emit_report(out: &BenchOutput, dir: &Path, emit: Emit) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: String, text: &str| -> Result<()> {
        let path = dir.join(name);
        write_text(&path, text)?;
        written.push(path);
        Ok(())
    };
    put("results.csv".into(), &results_csv(&out.cells))?;
    if !(emit.csv || emit.pgm) {
        return Ok(written);
    }

    let map = competence_map(&out.cells, out.spec.shape(), &out.spec.baselines())?;
    let mut matrices = vec![("sssa".to_string(), &map.sssa)];
    matrices.extend(map.baselines.iter().map(|b| (b.method.name().to_string(), &b.diff)));
    for (name, m) in matrices {
        if emit.csv {
            put(format!("map_{name}.csv"), &matrix_to_csv(&m.view()))?;
        }
        if emit.pgm {
            let (pgm, meta) = render_pgm(m, &format!("map_{name}.csv"));
            put(format!("map_{name}.pgm"), &pgm)?;
            let mut json = serde_json::to_string_pretty(&meta).expect("serializable metadata");
            json.push('\n');
            put(format!("map_{name}.meta.json"), &json)?;
        }
    }
    if emit.csv {
        for b in &map.baselines {
            put(format!("mask_{}.csv", b.method), &bool_csv(&b.significant))?;
        }
    }
    Ok(written)
}
