//! Trajectory files: one little-endian `f64` dump per snapshot plus a JSON
//! sidecar `trajectory.json`.
//!
//! A snapshot file holds the physical-space values of each listed field in
//! order, every component row-major (last axis fastest).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use radiflow_core::params::PhysicalParams;
use radiflow_core::spectral_solver::{FieldState, TorusGrid};

use crate::error::{AppError, AppResult};

pub const SIDECAR: &str = "trajectory.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsMeta {
    pub eps: f64,
    pub ell: f64,
    pub ell_s: f64,
    pub mu: f64,
    pub lam: f64,
    pub dim: usize,
}

impl From<&PhysicalParams> for ParamsMeta {
    fn from(p: &PhysicalParams) -> Self {
        ParamsMeta { eps: p.eps, ell: p.ell, ell_s: p.ell_s, mu: p.mu, lam: p.lam, dim: p.dim }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    /// `full` or the name of a limit system.
    pub system: String,
    pub grid: GridMeta,
    pub params: ParamsMeta,
    /// Field names with their component counts, e.g. `("u", 2)`.
    pub fields: Vec<(String, usize)>,
    pub times: Vec<f64>,
    pub files: Vec<String>,
}

/// Which fields of a [`FieldState`] a trajectory carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSet {
    Full,
    /// `b`, `u`, `j0`.
    Limit,
}

impl FieldSet {
    pub fn layout(&self, dim: usize) -> Vec<(String, usize)> {
        let mut v = vec![("b".to_string(), 1), ("u".to_string(), dim), ("j0".to_string(), 1)];
        if *self == FieldSet::Full {
            v.push(("j1".to_string(), dim));
        }
        v
    }
}

fn encode(grid: &TorusGrid, s: &FieldState, set: FieldSet) -> Vec<u8> {
    let (ph, _) = s.to_physical(grid);
    let mut comps: Vec<&[f64]> = vec![&ph.b];
    comps.extend(ph.u.iter().map(|c| c.as_slice()));
    comps.push(&ph.j0);
    if set == FieldSet::Full {
        comps.extend(ph.j1.iter().map(|c| c.as_slice()));
    }
    let mut out = Vec::with_capacity(comps.len() * grid.total() * 8);
    for c in comps {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_trajectory(
    dir: &Path,
    system: &str,
    grid: &TorusGrid,
    params: &PhysicalParams,
    set: FieldSet,
    states: &[FieldState],
) -> AppResult<TrajectoryMeta> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut files = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        let name = format!("snap_{i:05}.bin");
        let path = dir.join(&name);
        fs::write(&path, encode(grid, s, set)).map_err(|e| AppError::io(&path, e))?;
        files.push(name);
    }
    let meta = TrajectoryMeta {
        system: system.to_string(),
        grid: GridMeta { dim: grid.dim(), n: grid.points_per_axis(), length: grid.length() },
        params: params.into(),
        fields: set.layout(grid.dim()),
        times: states.iter().map(|s| s.t).collect(),
        files,
    };
    let path = dir.join(SIDECAR);
    let json = serde_json::to_string_pretty(&meta).map_err(|e| AppError::format(&path, e))?;
    fs::write(&path, json + "\n").map_err(|e| AppError::io(&path, e))?;
    Ok(meta)
}

pub fn read_meta(dir: &Path) -> AppResult<TrajectoryMeta> {
    let path = dir.join(SIDECAR);
    let text = fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::format(&path, e))
}

/// Reads snapshot `i` as a flat vector of values in file order.
pub fn read_snapshot(dir: &Path, meta: &TrajectoryMeta, i: usize) -> AppResult<Vec<f64>> {
    let path = dir.join(&meta.files[i]);
    let bytes = fs::read(&path).map_err(|e| AppError::io(&path, e))?;
    let comps: usize = meta.fields.iter().map(|f| f.1).sum();
    let expect = comps * meta.grid.n.pow(meta.grid.dim as u32) * 8;
    if bytes.len() != expect {
        return Err(AppError::format(&path, format!("{} bytes, expected {expect}", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{random_state, InitSpec};

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = TorusGrid::periodic(2, 8).unwrap();
        let p = PhysicalParams::new(0.1, 1.0, 1.0, 1.0, 0.0, 2).unwrap();
        let s = random_state(&g, &InitSpec { amplitude: 0.1, k_max: 2, seed: 1, with_flux: true });
        let meta = write_trajectory(dir.path(), "full", &g, &p, FieldSet::Full, &[s.clone()]).unwrap();
        assert_eq!(read_meta(dir.path()).unwrap(), meta);
        let flat = read_snapshot(dir.path(), &meta, 0).unwrap();
        let (ph, _) = s.to_physical(&g);
        assert_eq!(flat.len(), 6 * 64);
        assert_eq!(&flat[..64], ph.b.as_slice());
        assert_eq!(&flat[5 * 64..], ph.j1[1].as_slice());
    }
}
