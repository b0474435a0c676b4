//! Latency of one spiking layer on dense systolic baselines versus the
//! address-event schedule.
//!
//! A layer over `T` timesteps is the product of the `T x n_in` spike matrix
//! `X` with the `n_in x n_out` weight matrix `W`. Writing `M = T`, `K = n_in`,
//! `N = n_out`, each stationarity pins one operand in an `Sr x Sc` array and
//! streams the other:
//!
//! | style | pinned rows `R` | pinned cols `C` | streamed `L` |
//! |-------|-----------------|-----------------|--------------|
//! | OS    | `M`             | `N`             | `K`          |
//! | WS    | `K`             | `N`             | `M`          |
//! | IS    | `K`             | `M`             | `N`          |
//!
//! and one fold of the array costs `2 Sr + Sc + L - 2` cycles (preload or
//! drain, skewed fill, stream), so
//! `cycles = (2 Sr + Sc + L - 2) * ceil(R / Sr) * ceil(C / Sc)`.
//! A workload with any zero dimension still pays one fill and drain,
//! `2 Sr + Sc - 2`. Baselines ignore sparsity.
//!
//! The address-event schedule is priced by the accelerator counting model in
//! [`arch::cost`](crate::arch::cost) with one bank per array column.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arch::{cost, ArchConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        let g = Self { rows, cols };
        g.validate(usize::MAX)?;
        Ok(g)
    }

    pub fn validate(&self, pe_budget: usize) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config(format!("array {}x{} has no PEs", self.rows, self.cols)));
        }
        if self.rows.saturating_mul(self.cols) > pe_budget {
            return Err(Error::Config(format!(
                "array {}x{} exceeds the budget of {pe_budget} PEs",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn pes(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadShape {
    pub n_in: usize,
    pub n_out: usize,
    /// Fraction of inputs that stay silent in every timestep.
    pub sparsity: f64,
    pub timesteps: usize,
}

impl WorkloadShape {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::Config(format!("sparsity {} outside [0, 1]", self.sparsity)));
        }
        Ok(())
    }

    /// Inputs that spike in each timestep.
    pub fn active_inputs(&self) -> usize {
        let silent = (self.sparsity * self.n_in as f64).round() as usize;
        self.n_in - silent.min(self.n_in)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Os,
    Ws,
    Is,
    Aer,
}

impl Style {
    pub const BASELINES: [Style; 3] = [Style::Os, Style::Ws, Style::Is];

    pub fn name(self) -> &'static str {
        match self {
            Style::Os => "OS",
            Style::Ws => "WS",
            Style::Is => "IS",
            Style::Aer => "AER",
        }
    }
}

impl FromStr for Style {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "os" => Ok(Style::Os),
            "ws" => Ok(Style::Ws),
            "is" => Ok(Style::Is),
            "aer" => Ok(Style::Aer),
            _ => Err(Error::Config(format!("unknown dataflow style '{s}' (expected OS, WS, IS or AER)"))),
        }
    }
}

/// `(R, C, L)` of the table above.
pub fn mapping(style: Style, shape: &WorkloadShape) -> Result<(usize, usize, usize)> {
    let (m, k, n) = (shape.timesteps, shape.n_in, shape.n_out);
    match style {
        Style::Os => Ok((m, n, k)),
        Style::Ws => Ok((k, n, m)),
        Style::Is => Ok((k, m, n)),
        Style::Aer => Err(Error::Config("AER is not a systolic baseline".into())),
    }
}

/// Cycles of one fold streaming `len` vectors.
pub fn fold_cycles(geom: &ArrayGeometry, len: usize) -> u64 {
    (2 * geom.rows + geom.cols + len - 2) as u64
}

pub fn latency_baseline(style: Style, geom: &ArrayGeometry, shape: &WorkloadShape) -> Result<u64> {
    geom.validate(usize::MAX)?;
    shape.validate()?;
    let (r, c, l) = mapping(style, shape)?;
    if r == 0 || c == 0 || l == 0 {
        return Ok(fold_cycles(geom, 0));
    }
    let folds = r.div_ceil(geom.rows) as u64 * c.div_ceil(geom.cols) as u64;
    Ok(fold_cycles(geom, l) * folds)
}

/// Encoder sweep, row fetches, mesh fill and LIF pipeline, per timestep.
pub fn latency_aer(geom: &ArrayGeometry, shape: &WorkloadShape) -> u64 {
    let arch = ArchConfig { rows: geom.rows, cols: geom.cols, ..ArchConfig::default() };
    let per_step = cost::layer_forward(shape.n_in, shape.active_inputs(), shape.n_out, &arch);
    per_step * shape.timesteps as u64
}

pub fn latency(style: Style, geom: &ArrayGeometry, shape: &WorkloadShape) -> Result<u64> {
    match style {
        Style::Aer => {
            geom.validate(usize::MAX)?;
            shape.validate()?;
            Ok(latency_aer(geom, shape))
        }
        s => latency_baseline(s, geom, shape),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub style: Style,
    pub geometry: ArrayGeometry,
    pub shape: WorkloadShape,
    pub cycles: u64,
    /// Baseline cycles over AER cycles on the same geometry and shape.
    pub speedup_vs_aer: Option<f64>,
}

/// Every style on every geometry and shape, AER first in each group.
pub fn compare(geometries: &[ArrayGeometry], shapes: &[WorkloadShape]) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    for geom in geometries {
        for shape in shapes {
            let aer = latency(Style::Aer, geom, shape)?;
            for style in [Style::Aer, Style::Os, Style::Ws, Style::Is] {
                let cycles = latency(style, geom, shape)?;
                rows.push(CompareRow {
                    style,
                    geometry: *geom,
                    shape: *shape,
                    cycles,
                    speedup_vs_aer: (aer > 0).then(|| cycles as f64 / aer as f64),
                });
            }
        }
    }
    Ok(rows)
}

/// The 256 x 256 single-step layer at each swept sparsity, on the default
/// mesh and on the other 64-PE shapes.
pub fn default_sweep() -> (Vec<ArrayGeometry>, Vec<WorkloadShape>) {
    let geoms = vec![
        ArrayGeometry { rows: 8, cols: 8 },
        ArrayGeometry { rows: 4, cols: 16 },
        ArrayGeometry { rows: 16, cols: 4 },
    ];
    let shapes = [0.0, 0.25, 0.75]
        .into_iter()
        .map(|sparsity| WorkloadShape { n_in: 256, n_out: 256, sparsity, timesteps: 1 })
        .collect();
    (geoms, shapes)
}

pub const CSV_HEADER: [&str; 9] = ["style", "Sr", "Sc", "n_in", "n_out", "sparsity", "T", "cycles", "speedup_vs_aer"];

pub fn write_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.style.name().to_string(),
            r.geometry.rows.to_string(),
            r.geometry.cols.to_string(),
            r.shape.n_in.to_string(),
            r.shape.n_out.to_string(),
            r.shape.sparsity.to_string(),
            r.shape.timesteps.to_string(),
            r.cycles.to_string(),
            r.speedup_vs_aer.map_or(String::new(), |s| format!("{s:.4}")),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
