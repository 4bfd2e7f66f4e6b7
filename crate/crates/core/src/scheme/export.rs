//! Trajectory export: one snapshot per perturbation node plus a JSON manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SchemeConstants, SchemeParams, Trajectory, Window};
use crate::caloric::{caloric_pair, TimeGrid};
use crate::error::{Error, Result};
use crate::fixedpoint::{FixedPointCertificate, ProbeReport};
use crate::spectral::snapshot::{decode, encode, sha256_hex, write_atomic};
use crate::spectral::{Grid, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub node: usize,
    pub t: f64,
    pub v2: FileEntry,
    pub h2: FileEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub start_node: usize,
    pub steps: usize,
    pub v0: FileEntry,
    pub h0: FileEntry,
    pub constants: SchemeConstants,
    pub certificate: FixedPointCertificate,
    pub probes: ProbeReport,
    pub halvings: usize,
    pub nodes: Vec<NodeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub format: String,
    pub n: usize,
    pub box_length: f64,
    pub dt: f64,
    pub steps: usize,
    pub params: SchemeParams,
    pub windows: Vec<WindowEntry>,
}

fn write_field(dir: &Path, name: String, f: &VectorField) -> Result<FileEntry> {
    let bytes = encode(f.grid(), &f.to_physical());
    write_atomic(&dir.join(&name), &bytes)?;
    Ok(FileEntry { path: name, sha256: sha256_hex(&bytes) })
}

/// Writes window initial data and the perturbation at every node into `dir`,
/// then `manifest.json`. The caloric parts are recomputable from `v0, h0`.
pub fn export_trajectory(traj: &Trajectory, dir: &Path) -> Result<TrajectoryManifest> {
    std::fs::create_dir_all(dir)?;
    let mut windows = Vec::with_capacity(traj.windows.len());
    for (w, win) in traj.windows.iter().enumerate() {
        let v0 = write_field(dir, format!("w{w:03}_v0.snap"), win.cal.v0())?;
        let h0 = write_field(dir, format!("w{w:03}_h0.snap"), win.cal.h0())?;
        let nodes = (0..=win.steps())
            .map(|m| {
                let node = win.start_node + m;
                Ok(NodeEntry {
                    node,
                    t: node as f64 * traj.dt(),
                    v2: write_field(dir, format!("w{w:03}_v2_{m:05}.snap"), &win.v2[m])?,
                    h2: write_field(dir, format!("w{w:03}_h2_{m:05}.snap"), &win.h2[m])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        windows.push(WindowEntry {
            start_node: win.start_node,
            steps: win.steps(),
            v0,
            h0,
            constants: win.constants.clone(),
            certificate: win.certificate.clone(),
            probes: win.probes.clone(),
            halvings: win.halvings,
            nodes,
        });
    }
    let grid = traj.grid();
    let manifest = TrajectoryManifest {
        format: "MHDSNAP1".into(),
        n: grid.n(),
        box_length: grid.box_length(),
        dt: traj.dt(),
        steps: traj.steps(),
        params: traj.params.clone(),
        windows,
    };
    write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

fn read_field(dir: &Path, entry: &FileEntry, grid: &Grid) -> Result<VectorField> {
    let path = dir.join(&entry.path);
    let bytes = std::fs::read(&path)?;
    let origin = path.display().to_string();
    if sha256_hex(&bytes) != entry.sha256 {
        return Err(Error::Format { path: origin, reason: "checksum mismatch".into() });
    }
    let (header, comps) = decode(&bytes, &origin)?;
    if header.n != grid.n() || header.box_length != grid.box_length() || comps.len() != 3 {
        return Err(Error::Format { path: origin, reason: "snapshot does not match the manifest grid".into() });
    }
    Ok(VectorField::from_physical(grid, [&comps[0], &comps[1], &comps[2]]))
}

/// Reads a directory written by [`export_trajectory`], verifying checksums.
/// The caloric parts are recomputed from the stored window data.
pub fn import_trajectory(dir: &Path) -> Result<Trajectory> {
    let path = dir.join("manifest.json");
    let manifest: TrajectoryManifest = serde_json::from_slice(&std::fs::read(&path)?)?;
    let grid = Grid::new(manifest.n, manifest.box_length)?;
    let mut windows = Vec::with_capacity(manifest.windows.len());
    for w in &manifest.windows {
        if w.nodes.len() != w.steps + 1 {
            return Err(Error::Format { path: path.display().to_string(), reason: "node count disagrees with steps".into() });
        }
        let v0 = read_field(dir, &w.v0, &grid)?;
        let h0 = read_field(dir, &w.h0, &grid)?;
        let cal = caloric_pair(&v0, &h0, TimeGrid::new(w.steps, manifest.dt)?)?;
        let (mut v2, mut h2) = (Vec::with_capacity(w.nodes.len()), Vec::with_capacity(w.nodes.len()));
        for node in &w.nodes {
            v2.push(read_field(dir, &node.v2, &grid)?);
            h2.push(read_field(dir, &node.h2, &grid)?);
        }
        windows.push(Window {
            start_node: w.start_node,
            cal,
            v2,
            h2,
            constants: w.constants.clone(),
            certificate: w.certificate.clone(),
            probes: w.probes.clone(),
            halvings: w.halvings,
        });
    }
    Ok(Trajectory { params: manifest.params, windows })
}
