//! Flagella bundling setup: helical rods hanging from clamp sites arranged
//! on a regular polygon, each driven by rotating its clamped material frame.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::Result;
use crate::rod::{node_dof, twist_dof, RodState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Handedness {
    Right,
    Left,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlagellaScenario {
    pub num_flagella: usize,
    /// Helix radius a [m].
    pub helix_radius: f64,
    /// Helix pitch λ [m].
    pub pitch: f64,
    /// Axial extent of the helical part z₀ [m].
    pub axial_length: f64,
    /// Polygon side length ΔL [m].
    pub spacing: f64,
    /// Drive angular speed ω [rad/s]; positive turns the clamped frame
    /// counter-clockwise about +z as seen from above. The clamped tangent
    /// points along −z, so the first twist angle runs as −ωt.
    pub omega: f64,
    pub nodes_per_rod: usize,
    pub handedness: Handedness,
}

impl Default for FlagellaScenario {
    fn default() -> Self {
        FlagellaScenario {
            num_flagella: 2,
            helix_radius: 0.01,
            pitch: 0.05,
            axial_length: 0.2,
            spacing: 0.03,
            omega: 15.0,
            nodes_per_rod: 68,
            handedness: Handedness::Right,
        }
    }
}

impl FlagellaScenario {
    /// Clamp sites in the z = 0 plane on a regular polygon with side ΔL.
    pub fn clamp_sites(&self) -> Vec<Vector3<f64>> {
        let m = self.num_flagella;
        if m == 1 {
            return vec![Vector3::zeros()];
        }
        let radius = self.spacing / (2.0 * (PI / m as f64).sin());
        (0..m)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / m as f64;
                Vector3::new(radius * a.cos(), radius * a.sin(), 0.0)
            })
            .collect()
    }

    fn helix_nodes(&self) -> usize {
        self.nodes_per_rod - 2
    }

    /// Azimuth increment between consecutive helix nodes.
    fn dphi(&self) -> f64 {
        2.0 * PI * self.axial_length / self.pitch / (self.helix_nodes() - 1) as f64
    }

    /// Chord length between consecutive helix nodes.
    pub fn helix_edge_length(&self) -> f64 {
        let dphi = self.dphi();
        let chord = 2.0 * self.helix_radius * (0.5 * dphi).sin();
        let rise = self.pitch * dphi / (2.0 * PI);
        chord.hypot(rise)
    }

    /// Node positions for a rod clamped at `site`. Nodes 0 and 1 lie on the
    /// axis; one transition edge reaches the first helix node, and the
    /// remaining nodes are spaced uniformly in arc length along the helix.
    pub fn centerline(&self, site: &Vector3<f64>) -> Vec<Vector3<f64>> {
        let l = self.helix_edge_length();
        let dphi = self.dphi();
        let rise = self.pitch * dphi / (2.0 * PI);
        let sense = match self.handedness {
            Handedness::Right => -1.0,
            Handedness::Left => 1.0,
        };
        let mut nodes = vec![*site, site - Vector3::z() * l];
        let top = l + rise;
        for k in 0..self.helix_nodes() {
            let phi = dphi * k as f64;
            nodes.push(site + Vector3::new(self.helix_radius * phi.cos(), sense * self.helix_radius * phi.sin(), -top - rise * k as f64));
        }
        nodes
    }

    /// One stress-free rod per clamp site.
    pub fn build(&self) -> Result<Vec<RodState>> {
        self.clamp_sites().iter().map(|s| build_helix(self, s)).collect()
    }

    /// Prescribed DOF values at time `t`: both clamp nodes stay put and the
    /// first twist angle advances as −ωt. Indices are global, assuming the
    /// rods are concatenated in site order.
    pub fn boundary_schedule(&self, t: f64) -> Vec<(usize, f64)> {
        let per_rod = 4 * self.nodes_per_rod - 1;
        let mut out = Vec::with_capacity(7 * self.num_flagella);
        for (r, site) in self.clamp_sites().iter().enumerate() {
            let nodes = &self.centerline(site)[..2];
            for (i, x) in nodes.iter().enumerate() {
                for k in 0..3 {
                    out.push((r * per_rod + node_dof(i) + k, x[k]));
                }
            }
            out.push((r * per_rod + twist_dof(0), -self.omega * t));
        }
        out
    }
}

/// Stress-free helical rod clamped at `site`.
pub fn build_helix(scenario: &FlagellaScenario, site: &Vector3<f64>) -> Result<RodState> {
    let nodes = scenario.centerline(site);
    let twists = vec![0.0; nodes.len() - 1];
    RodState::new(nodes, twists, Some(Vector3::x()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helix_turns_and_radius() {
        let sc = FlagellaScenario::default();
        let nodes = sc.centerline(&Vector3::zeros());
        assert_eq!(nodes.len(), 68);
        for x in &nodes[2..] {
            assert!((x.xy().norm() - 0.01).abs() < 1e-12);
        }
        // Unwrap the azimuth along the helix.
        let mut sweep = 0.0;
        for w in nodes[2..].windows(2) {
            let (a, b) = (w[0].xy(), w[1].xy());
            sweep += (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
        }
        assert!((sweep.abs() - 8.0 * PI).abs() < 1e-9);
        let axial = nodes[2].z - nodes[67].z;
        assert!((axial - 0.2).abs() < 1e-12);
    }

    #[test]
    fn right_handed_helix_has_positive_torsion_sense() {
        // For a right-handed helix (t × t') · t'' > 0 along the curve.
        let sc = FlagellaScenario::default();
        let x = sc.centerline(&Vector3::zeros());
        let d1 = x[11] - x[10];
        let d2 = x[12] - x[11];
        let d3 = x[13] - x[12];
        assert!(d1.cross(&d2).dot(&d3) > 0.0);
        let left = FlagellaScenario {
            handedness: Handedness::Left,
            ..sc
        };
        let y = left.centerline(&Vector3::zeros());
        assert!((y[11] - y[10]).cross(&(y[12] - y[11])).dot(&(y[13] - y[12])) < 0.0);
    }

    #[test]
    fn arc_length_matches_helix_formula() {
        let sc = FlagellaScenario::default();
        let nodes = sc.centerline(&Vector3::zeros());
        let summed: f64 = nodes[2..].windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let exact = 4.0 * (0.05f64.powi(2) + (2.0 * PI * 0.01).powi(2)).sqrt();
        assert!((summed - exact).abs() / exact < 0.005);
    }

    #[test]
    fn clamp_sites_form_polygon() {
        let sc = FlagellaScenario {
            num_flagella: 3,
            ..FlagellaScenario::default()
        };
        let s = sc.clamp_sites();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(((s[i] - s[j]).norm() - 0.03).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schedule_fixes_clamp_and_drives_twist() {
        let sc = FlagellaScenario::default();
        let rods = sc.build().unwrap();
        let q: Vec<f64> = rods.iter().flat_map(|r| r.dofs()).collect();
        for (d, v) in sc.boundary_schedule(0.0) {
            assert_eq!(q[d], v);
        }
        let period = 2.0 * PI / sc.omega;
        let twist = sc.boundary_schedule(period).into_iter().find(|&(d, _)| d == 3).unwrap().1;
        assert!((twist + 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn built_rod_is_in_equilibrium() {
        let sc = FlagellaScenario::default();
        let rod = &sc.build().unwrap()[0];
        let m = crate::rod::MaterialParams::circular(3e6, 1e6, 1000.0, 1e-3);
        assert!(rod.internal_forces(&m).iter().all(|f| f.abs() < 1e-12));
    }
}
