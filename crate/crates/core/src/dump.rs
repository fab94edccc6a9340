//! Serialization: binary state dumps, the energy table, VTK fields and JSON
//! reports.
//!
//! A state dump is one JSON header line followed by `u` and `v` as
//! little-endian `f64` arrays in node order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::{ATParams, ATState};
use crate::energetics::{grad_w_magnitude, EnergyReport};
use crate::error::{Error, Result};
use crate::grid::{Domain, Grid, GridSpec, ScalarField};
use crate::scenarios::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub nx: usize,
    pub ny: usize,
    pub domain: [f64; 4],
    pub eps: f64,
    pub eta: f64,
    pub scenario: String,
    pub e_total: f64,
}

pub fn encode_state(state: &ATState, e_total: f64) -> Result<Vec<u8>> {
    let g = state.grid();
    let header = DumpHeader {
        nx: g.nx(),
        ny: g.ny(),
        domain: g.domain().as_array(),
        eps: state.params.eps(),
        eta: state.params.eta(),
        scenario: state.scenario.to_string(),
        e_total,
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.reserve(16 * g.node_count());
    for f in [&state.u, &state.v] {
        for x in f.values() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_state(bytes: &[u8]) -> Result<(ATState, DumpHeader)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::CorruptDump("missing header line".into()))?;
    let header: DumpHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::CorruptDump(format!("header: {e}")))?;
    let n = header
        .nx
        .checked_mul(header.ny)
        .ok_or_else(|| Error::CorruptDump("node count overflows".into()))?;
    let expected = nl + 1 + 16 * n;
    if bytes.len() != expected {
        return Err(Error::DumpSize {
            expected,
            actual: bytes.len(),
        });
    }
    let [x0, x1, y0, y1] = header.domain;
    let grid = Grid::new(GridSpec::new(header.nx, header.ny, Domain { x0, x1, y0, y1 }))?;
    let read = |offset: usize| -> Vec<f64> {
        bytes[offset..offset + 8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect()
    };
    let u = ScalarField::new(grid, read(nl + 1))?;
    let v = ScalarField::new(grid, read(nl + 1 + 8 * n))?;
    let scenario = Scenario::parse(&header.scenario)?;
    let params = ATParams::new(header.eps, header.eta)?;
    let state = ATState::new(scenario, params, u, v)?;
    Ok((state, header))
}

pub fn write_state(path: &Path, state: &ATState, e_total: f64) -> Result<()> {
    fs::write(path, encode_state(state, e_total)?).map_err(|e| Error::io(path, e))
}

pub fn read_state(path: &Path) -> Result<(ATState, DumpHeader)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_state(&bytes)
}

pub const CSV_HEADER: &str = "eps,eta,h,sweeps,E_elastic,E_pf_grad,E_pf_pot,E_total,discrepancy_L1,w_mass,r_u,r_v";

/// Energy table with every float at 17 significant digits.
pub fn energy_csv(rows: &[EnergyReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.eps,
            r.eta,
            r.h,
            r.sweeps,
            r.e_elastic,
            r.e_pf_grad,
            r.e_pf_pot,
            r.e_total,
            r.discrepancy_l1,
            r.w_mass,
            r.r_u,
            r.r_v
        );
    }
    s
}

/// Legacy ASCII VTK: `u`, `v` at nodes and `|∇w|` per cell.
pub fn fields_vtk(state: &ATState) -> String {
    let g = state.grid();
    let d = g.domain();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "phase-field state {} eps={}", state.scenario, state.params.eps());
    let _ = writeln!(s, "ASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", g.nx(), g.ny());
    let _ = writeln!(s, "ORIGIN {} {} 0", d.x0, d.y0);
    let _ = writeln!(s, "SPACING {} {} 1", g.h(), g.h());
    let _ = writeln!(s, "POINT_DATA {}", g.node_count());
    for (name, f) in [("u", &state.u), ("v", &state.v)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in f.values() {
            let _ = writeln!(s, "{x:e}");
        }
    }
    let _ = writeln!(s, "CELL_DATA {}", g.cell_count());
    let _ = writeln!(s, "SCALARS grad_w double 1\nLOOKUP_TABLE default");
    for x in grad_w_magnitude(&state.v).values() {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json_string(value)?;
    text.push('\n');
    write_text(path, &text)
}
