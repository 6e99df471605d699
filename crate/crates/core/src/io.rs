//! Trajectory, clamp-force and metrics files.
//!
//! Trajectories are CSV with one row per node:
//! `time,rod,node,x,y,z,theta`, where `theta` is the twist angle of the edge
//! that starts at the node and is empty on each rod's last node. Floats are
//! written with 17 significant digits so a write/read cycle is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rod::RodState;

pub const TRAJECTORY_HEADER: &str = "time,rod,node,x,y,z,theta";
pub const FORCES_HEADER: &str = "time,rod,node,fx,fy,fz,torque";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl TrajectoryWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        Ok(TrajectoryWriter { out })
    }

    /// Appends one snapshot and flushes it.
    pub fn write(&mut self, time: f64, rods: &[RodState]) -> Result<()> {
        let t = fmt(time);
        for (r, rod) in rods.iter().enumerate() {
            for (i, x) in rod.nodes.iter().enumerate() {
                let theta = rod.twists.get(i).map(|&v| fmt(v)).unwrap_or_default();
                writeln!(self.out, "{t},{r},{i},{},{},{},{theta}", fmt(x.x), fmt(x.y), fmt(x.z))?;
            }
        }
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// One trajectory record: positions and edge twists of every rod.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub nodes: Vec<Vec<Vector3<f64>>>,
    pub twists: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn num_rods(&self) -> usize {
        self.snapshots.first().map_or(0, |s| s.nodes.len())
    }

    /// Node counts per rod of the first snapshot.
    pub fn layout(&self) -> Vec<usize> {
        self.snapshots.first().map_or_else(Vec::new, |s| s.nodes.iter().map(|r| r.len()).collect())
    }
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Io(format!("line {line}: cannot parse number `{field}`")))
}

fn parse_usize(field: &str, line: usize) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Io(format!("line {line}: cannot parse index `{field}`")))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    read_trajectory_from(BufReader::new(File::open(path)?))
}

pub fn read_trajectory_from<R: BufRead>(input: R) -> Result<Trajectory> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(TRAJECTORY_HEADER) {
        return Err(Error::Io("missing trajectory header".into()));
    }
    let mut traj = Trajectory::default();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let n = k + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Io(format!("line {n}: expected 7 fields, got {}", f.len())));
        }
        let time = parse_f64(f[0], n)?;
        let (rod, node) = (parse_usize(f[1], n)?, parse_usize(f[2], n)?);
        let x = Vector3::new(parse_f64(f[3], n)?, parse_f64(f[4], n)?, parse_f64(f[5], n)?);
        let new_snapshot = match traj.snapshots.last() {
            Some(s) => s.time != time,
            None => true,
        };
        if new_snapshot {
            traj.snapshots.push(Snapshot {
                time,
                nodes: Vec::new(),
                twists: Vec::new(),
            });
        }
        let snap = traj.snapshots.last_mut().expect("just pushed");
        if rod == snap.nodes.len() {
            snap.nodes.push(Vec::new());
            snap.twists.push(Vec::new());
        }
        if rod + 1 != snap.nodes.len() || node != snap.nodes[rod].len() {
            return Err(Error::Io(format!("line {n}: rows out of order (rod {rod}, node {node})")));
        }
        snap.nodes[rod].push(x);
        if !f[6].trim().is_empty() {
            snap.twists[rod].push(parse_f64(f[6], n)?);
        }
    }
    Ok(traj)
}

/// Clamp reactions at one step: force on each clamped node and the torque
/// about the clamped edge, as applied by the constraint to the rod.
#[derive(Clone, Debug, PartialEq)]
pub struct ClampReaction {
    pub time: f64,
    pub rod: usize,
    pub node: usize,
    pub force: Vector3<f64>,
    pub torque: Option<f64>,
}

pub struct ForceWriter<W: Write> {
    out: W,
}

impl ForceWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> ForceWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{FORCES_HEADER}")?;
        Ok(ForceWriter { out })
    }

    pub fn write(&mut self, rows: &[ClampReaction]) -> Result<()> {
        for r in rows {
            let torque = r.torque.map(fmt).unwrap_or_default();
            writeln!(
                self.out,
                "{},{},{},{},{},{},{torque}",
                fmt(r.time),
                r.rod,
                r.node,
                fmt(r.force.x),
                fmt(r.force.y),
                fmt(r.force.z)
            )?;
        }
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_forces(path: &Path) -> Result<Vec<ClampReaction>> {
    let file = File::open(path).map_err(|e| Error::MissingForceLog(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(FORCES_HEADER) {
        return Err(Error::MissingForceLog(format!("{}: missing header", path.display())));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let n = k + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Io(format!("line {n}: expected 7 fields, got {}", f.len())));
        }
        out.push(ClampReaction {
            time: parse_f64(f[0], n)?,
            rod: parse_usize(f[1], n)?,
            node: parse_usize(f[2], n)?,
            force: Vector3::new(parse_f64(f[3], n)?, parse_f64(f[4], n)?, parse_f64(f[5], n)?),
            torque: if f[6].trim().is_empty() { None } else { Some(parse_f64(f[6], n)?) },
        });
    }
    Ok(out)
}

/// Per-run convergence and timing figures.
///
/// `aipts`/`atpts_ms` average over every step; the `_contact` variants use
/// only steps where at least one pair was active.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub aipts: f64,
    pub atpts_ms: f64,
    pub total_iters: usize,
    pub wall_time_s: f64,
    pub sim_end_s: f64,
    pub steps: usize,
    pub contact_steps: usize,
    pub aipts_contact: f64,
    pub atpts_ms_contact: f64,
    pub nonconverged_steps: usize,
    pub aborted: bool,
    /// Smallest centerline distance between different rods over the run [m].
    pub min_inter_rod_distance: f64,
}

pub fn write_metrics(path: &Path, metrics: &Metrics) -> Result<()> {
    let text = serde_json::to_string_pretty(metrics).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Metrics> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rod() -> RodState {
        let nodes = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.1, 1.0 / 3.0, 0.0),
            Vector3::new(0.2, 0.0, std::f64::consts::PI),
        ];
        let mut r = RodState::new(nodes, vec![0.0; 2], None).unwrap();
        r.twists = vec![0.1 + 1e-17, -2.0 / 7.0];
        r
    }

    #[test]
    fn trajectory_round_trip_is_lossless() {
        let rods = vec![rod(), rod()];
        let mut w = TrajectoryWriter::new(Vec::new()).unwrap();
        w.write(0.0, &rods).unwrap();
        w.write(1e-3, &rods).unwrap();
        let bytes = w.into_inner();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("time,rod,node,x,y,z,theta\n"));
        assert!(text.lines().nth(3).unwrap().ends_with(','));
        let t = read_trajectory_from(&bytes[..]).unwrap();
        assert_eq!(t.snapshots.len(), 2);
        assert_eq!(t.layout(), vec![3, 3]);
        assert_eq!(t.snapshots[1].time, 1e-3);
        assert_eq!(t.snapshots[1].nodes[1], rods[1].nodes);
        assert_eq!(t.snapshots[0].twists[0], rods[0].twists);
    }

    #[test]
    fn malformed_rows_are_reported() {
        let bad = "time,rod,node,x,y,z,theta\n0,0,1,0,0,0,\n";
        assert!(matches!(read_trajectory_from(bad.as_bytes()), Err(Error::Io(_))));
        assert!(matches!(read_trajectory_from("nope\n".as_bytes()), Err(Error::Io(_))));
    }
}
