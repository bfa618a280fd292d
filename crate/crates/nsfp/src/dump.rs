//! Field dumps: raw little-endian f64 files with a JSON sidecar.
//!
//! Values are row-major with index order (x, y) for cell fields and
//! (x, y, q_r, q_θ) for ψ̂.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nsfp_core::grid::BoundaryCondition;
use nsfp_core::scheme::{Problem, State};
use serde::{Deserialize, Serialize};

pub const FIELDS: [&str; 5] = ["rho", "ux", "uy", "psi", "varrho"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub bc: String,
    pub nq_r: usize,
    pub nq_theta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub field: String,
    pub shape: Vec<usize>,
    pub grid: GridSpec,
    pub step: usize,
    pub t: f64,
    pub byte_order: String,
    pub dtype: String,
}

pub fn grid_spec(problem: &Problem) -> GridSpec {
    let o = &problem.ops.omega;
    let g = &problem.ops.cfg.springs[0];
    GridSpec {
        nx: o.nx,
        ny: o.ny,
        lx: o.lx,
        ly: o.ly,
        bc: match o.bc {
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::NoSlipNeumann => "no-slip",
        }
        .into(),
        nq_r: g.n_r,
        nq_theta: g.n_theta,
    }
}

/// Base path of one field at one step, without extension.
pub fn field_path(dir: &Path, prefix: &str, field: &str, step: usize) -> PathBuf {
    dir.join(format!("{prefix}_{field}_{step:06}"))
}

pub fn write_field(base: &Path, sidecar: &Sidecar, values: &[f64]) -> io::Result<()> {
    let expected: usize = sidecar.shape.iter().product();
    if values.len() != expected {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{}: {} values for shape {:?}", sidecar.field, values.len(), sidecar.shape),
        ));
    }
    let bytes: Vec<u8> = values.iter().flat_map(|x| x.to_le_bytes()).collect();
    fs::write(base.with_extension("f64"), bytes)?;
    let json = serde_json::to_string_pretty(sidecar).map_err(io::Error::other)?;
    fs::write(base.with_extension("json"), json)
}

pub fn read_field(base: &Path) -> io::Result<(Sidecar, Vec<f64>)> {
    let sidecar: Sidecar =
        serde_json::from_slice(&fs::read(base.with_extension("json"))?).map_err(io::Error::other)?;
    if sidecar.byte_order != "LE" || sidecar.dtype != "f64" {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "only LE f64 dumps are supported"));
    }
    let bytes = fs::read(base.with_extension("f64"))?;
    let expected: usize = sidecar.shape.iter().product();
    if bytes.len() != 8 * expected {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{}: {} bytes for shape {:?}", sidecar.field, bytes.len(), sidecar.shape),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    Ok((sidecar, values))
}

/// Writes all five fields of a state.
pub fn write_state(dir: &Path, prefix: &str, state: &State, problem: &Problem) -> io::Result<()> {
    let grid = grid_spec(problem);
    let cell_shape = vec![grid.nx, grid.ny];
    for field in FIELDS {
        let (values, shape): (&[f64], Vec<usize>) = match field {
            "rho" => (&state.rho, cell_shape.clone()),
            "ux" => (&state.ux, cell_shape.clone()),
            "uy" => (&state.uy, cell_shape.clone()),
            "psi" => (&state.psi.values, vec![grid.nx, grid.ny, grid.nq_r, grid.nq_theta]),
            _ => (&state.varrho, cell_shape.clone()),
        };
        let sidecar = Sidecar {
            field: field.into(),
            shape,
            grid: grid.clone(),
            step: state.step,
            t: state.t,
            byte_order: "LE".into(),
            dtype: "f64".into(),
        };
        write_field(&field_path(dir, prefix, field, state.step), &sidecar, values)?;
    }
    Ok(())
}

/// The five fields of one dumped step.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpedState {
    pub step: usize,
    pub t: f64,
    pub rho: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub psi: Vec<f64>,
    pub varrho: Vec<f64>,
}

pub fn read_state(dir: &Path, prefix: &str, step: usize) -> io::Result<DumpedState> {
    let mut fields = Vec::with_capacity(5);
    let mut t = 0.0;
    for field in FIELDS {
        let (s, v) = read_field(&field_path(dir, prefix, field, step))?;
        t = s.t;
        fields.push(v);
    }
    let mut it = fields.into_iter();
    let mut next = || it.next().expect("five fields");
    Ok(DumpedState {
        step,
        t,
        rho: next(),
        ux: next(),
        uy: next(),
        psi: next(),
        varrho: next(),
    })
}

/// Steps with a complete ψ̂ dump in `dir`, ascending.
pub fn dumped_steps(dir: &Path, prefix: &str) -> io::Result<Vec<usize>> {
    let head = format!("{prefix}_psi_");
    let mut steps: Vec<usize> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix(&head)?.strip_suffix(".json")?.parse().ok()
        })
        .collect();
    steps.sort_unstable();
    Ok(steps)
}
