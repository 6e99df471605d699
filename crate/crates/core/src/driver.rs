//! Time loop for the flagella scenario: builds the rods from a config,
//! advances them under the clamp schedule, and writes run outputs.

use std::path::Path;

use nalgebra::Vector3;

use crate::analysis::{distal_gap, min_inter_rod_distance};
use crate::config::SimConfig;
use crate::error::Result;
use crate::io::{write_metrics, ClampReaction, ForceWriter, Metrics, TrajectoryWriter};
use crate::scenario::FlagellaScenario;
use crate::solver::{step, Physics, StepStats, SystemState};

/// Number of consecutive non-converged steps that ends a run.
pub const ABORT_AFTER: usize = 2;

#[derive(Clone)]
pub struct Simulation {
    pub config: SimConfig,
    pub physics: Physics,
    pub scenario: FlagellaScenario,
    pub state: SystemState,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let scenario = config.scenario();
        let physics = config.physics();
        let rods = scenario.build()?;
        let length: f64 = rods[0].rest.edge_lengths.iter().sum();
        let k0 = config.initial_contact_stiffness(length);
        let state = SystemState::new(rods, &physics.material, k0);
        Ok(Simulation {
            config,
            physics,
            scenario,
            state,
        })
    }

    /// One step with the clamp schedule evaluated at the end of the step.
    pub fn advance(&mut self) -> Result<StepStats> {
        let prescribed = self.scenario.boundary_schedule(self.state.time + self.physics.dt());
        step(&mut self.state, &self.physics, &prescribed)
    }

    pub fn node_slices(&self) -> Vec<&[Vector3<f64>]> {
        self.state.rods.iter().map(|r| r.nodes.as_slice()).collect()
    }

    /// Clamp reactions of a finished step, grouped by clamped node.
    pub fn clamp_reactions(&self, stats: &StepStats) -> Vec<ClampReaction> {
        let offsets = self.state.offsets();
        let mut out: Vec<ClampReaction> = Vec::new();
        for &(d, value) in &stats.reactions {
            let rod = offsets.partition_point(|&o| o <= d) - 1;
            let local = d - offsets[rod];
            let (node, comp) = (local / 4, local % 4);
            let idx = match out.iter().position(|r| r.rod == rod && r.node == node) {
                Some(i) => i,
                None => {
                    out.push(ClampReaction {
                        time: self.state.time,
                        rod,
                        node,
                        force: Vector3::zeros(),
                        torque: None,
                    });
                    out.len() - 1
                }
            };
            if comp == 3 {
                out[idx].torque = Some(value);
            } else {
                out[idx].force[comp] = value;
            }
        }
        out.sort_by_key(|r| (r.rod, r.node));
        out
    }
}

/// Geometry summary at each trajectory record.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordSummary {
    pub time: f64,
    pub distal_gap: f64,
    pub min_inter_rod_distance: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub metrics: Metrics,
    pub records: Vec<RecordSummary>,
    pub steps: Vec<StepStats>,
}

struct Outputs {
    trajectory: TrajectoryWriter<std::io::BufWriter<std::fs::File>>,
    forces: ForceWriter<std::io::BufWriter<std::fs::File>>,
}

/// Runs the configured scenario. With `out_dir` set, writes
/// `trajectory.csv`, `forces.csv`, `metrics.json`, and the resolved
/// `config.toml` there.
pub fn run(config: &SimConfig, out_dir: Option<&Path>) -> Result<RunOutcome> {
    run_observed(config, out_dir, &mut |_, _| {})
}

/// [`run`] with a callback after every step, seeing the advanced
/// simulation and the step's statistics.
pub fn run_observed(config: &SimConfig, out_dir: Option<&Path>, observer: &mut dyn FnMut(&Simulation, &StepStats)) -> Result<RunOutcome> {
    let mut sim = Simulation::new(config.clone())?;
    let mut outputs = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("config.toml"), config.to_toml_string())?;
            Some(Outputs {
                trajectory: TrajectoryWriter::create(&dir.join("trajectory.csv"))?,
                forces: ForceWriter::create(&dir.join("forces.csv"))?,
            })
        }
        None => None,
    };
    let stride = config.output.stride;
    let num_steps = config.num_steps();

    let mut records = Vec::new();
    let mut record = |sim: &Simulation, outputs: &mut Option<Outputs>| -> Result<()> {
        let nodes = sim.node_slices();
        records.push(RecordSummary {
            time: sim.state.time,
            distal_gap: distal_gap(&nodes),
            min_inter_rod_distance: min_inter_rod_distance(&nodes),
        });
        if let Some(o) = outputs.as_mut() {
            o.trajectory.write(sim.state.time, &sim.state.rods)?;
        }
        Ok(())
    };
    record(&sim, &mut outputs)?;

    let mut steps = Vec::with_capacity(num_steps);
    let mut min_distance = min_inter_rod_distance(&sim.node_slices());
    let mut failures = 0;
    let mut aborted = false;
    for k in 1..=num_steps {
        let stats = sim.advance()?;
        if let Some(o) = outputs.as_mut() {
            o.forces.write(&sim.clamp_reactions(&stats))?;
        }
        min_distance = min_distance.min(min_inter_rod_distance(&sim.node_slices()));
        failures = if stats.converged { 0 } else { failures + 1 };
        observer(&sim, &stats);
        steps.push(stats);
        if k % stride == 0 {
            record(&sim, &mut outputs)?;
        }
        if failures >= ABORT_AFTER {
            aborted = true;
            break;
        }
    }

    let metrics = summarize(&steps, sim.state.time, min_distance, aborted);
    if let Some(dir) = out_dir {
        write_metrics(&dir.join("metrics.json"), &metrics)?;
    }
    Ok(RunOutcome {
        metrics,
        records,
        steps,
    })
}

pub fn summarize(steps: &[StepStats], sim_end_s: f64, min_inter_rod_distance: f64, aborted: bool) -> Metrics {
    let mean = |xs: &mut dyn Iterator<Item = f64>| {
        let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };
    let total_iters: usize = steps.iter().map(|s| s.newton_iters).sum();
    let contact: Vec<&StepStats> = steps.iter().filter(|s| s.max_active_pairs > 0).collect();
    let contact_iters: usize = contact.iter().map(|s| s.newton_iters).sum();
    Metrics {
        aipts: if steps.is_empty() { 0.0 } else { total_iters as f64 / steps.len() as f64 },
        atpts_ms: mean(&mut steps.iter().map(|s| s.wall_time_s * 1e3)),
        total_iters,
        wall_time_s: steps.iter().map(|s| s.wall_time_s).sum(),
        sim_end_s,
        steps: steps.len(),
        contact_steps: contact.len(),
        aipts_contact: if contact.is_empty() { 0.0 } else { contact_iters as f64 / contact.len() as f64 },
        atpts_ms_contact: mean(&mut contact.iter().map(|s| s.wall_time_s * 1e3)),
        nonconverged_steps: steps.iter().filter(|s| !s.converged).count(),
        aborted,
        min_inter_rod_distance,
    }
}
