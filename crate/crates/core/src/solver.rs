//! Backward-Euler time stepping with Newton iterations and a
//! Goldstein-Price line search over the free degrees of freedom.

use std::time::Instant;

use nalgebra::{DMatrix, Vector3};

use crate::contact::{contact_force_jacobian, update_contact_stiffness, ContactParams, ContactResponse};
use crate::dense;
use crate::error::{Error, Result};
use crate::friction::{friction_response, FrictionParams};
use crate::geometry::{build_candidate_set, refresh_contact_set, CandidateSet, EdgePairKey};
use crate::hydro::{hydrodynamic_forces, RssParams};
use crate::rod::{node_dof, MaterialParams, RodState};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    /// Convergence when ‖F_free‖ ≤ max(tol_rel · ‖F_free‖ at the first iteration, tol_abs).
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_newton_iters: usize,
    pub m1: f64,
    pub m2: f64,
    pub max_line_search_iters: usize,
    /// Line search stops once the bracket is narrower than this.
    pub alpha_collapse: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol_rel: 1e-4,
            tol_abs: 1e-10,
            max_newton_iters: 50,
            m1: 0.1,
            m2: 0.9,
            max_line_search_iters: 20,
            alpha_collapse: 1e-6,
        }
    }
}

/// Everything that stays fixed over a run.
#[derive(Clone, Debug)]
pub struct Physics {
    pub material: MaterialParams,
    /// Radius, tolerance and scale; the stiffness field is ignored in favour
    /// of the adaptive value carried by [`SystemState`].
    pub contact: ContactParams,
    /// Candidate margin δ̂ [m].
    pub candidate_margin: f64,
    pub friction: FrictionParams,
    pub fluid: Option<RssParams>,
    pub solver: SolverParams,
}

impl Physics {
    pub fn dt(&self) -> f64 {
        self.friction.dt
    }
}

#[derive(Clone, Debug)]
pub struct SystemState {
    pub rods: Vec<RodState>,
    pub time: f64,
    pub step_index: usize,
    /// Adaptive contact stiffness k.
    pub contact_stiffness: f64,
    /// Constant external load per global DOF.
    pub applied: Vec<f64>,
    offsets: Vec<usize>,
    mass: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub newton_iters: usize,
    pub line_search_iters: usize,
    pub wall_time_s: f64,
    pub candidates: usize,
    /// Active contact pairs seen at any iteration of the step.
    pub max_active_pairs: usize,
    pub residual: f64,
    pub converged: bool,
    /// Residual at each prescribed DOF after the step, i.e. the force the
    /// constraint applies to the rod.
    pub reactions: Vec<(usize, f64)>,
    /// ‖F_free‖ at the top of every Newton iteration.
    pub residual_history: Vec<f64>,
}

impl SystemState {
    pub fn new(rods: Vec<RodState>, material: &MaterialParams, contact_stiffness: f64) -> Self {
        let mut offsets = Vec::with_capacity(rods.len());
        let mut mass = Vec::new();
        for r in &rods {
            offsets.push(mass.len());
            mass.extend(r.lumped_mass(material));
        }
        let n = mass.len();
        SystemState {
            rods,
            time: 0.0,
            step_index: 0,
            contact_stiffness,
            applied: vec![0.0; n],
            offsets,
            mass,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.mass.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Global DOF index of the first coordinate of node `node` on rod `rod`.
    pub fn node_index(&self, rod: usize, node: usize) -> usize {
        self.offsets[rod] + node_dof(node)
    }

    pub fn dofs(&self) -> Vec<f64> {
        self.rods.iter().flat_map(|r| r.dofs()).collect()
    }

    pub fn velocities(&self) -> Vec<f64> {
        self.rods.iter().flat_map(|r| r.dof_velocities()).collect()
    }

    fn node_slices(&self) -> Vec<&[Vector3<f64>]> {
        self.rods.iter().map(|r| r.nodes.as_slice()).collect()
    }
}

/// Per-step data frozen across Newton iterations.
pub struct StepContext {
    pub q_t: Vec<f64>,
    pub v_t: Vec<f64>,
    pub hydro: Vec<f64>,
    pub candidates: CandidateSet,
    pub stiffness: f64,
    pub free: Vec<usize>,
    start: Vec<RodState>,
    x0: Vec<Vec<Vector3<f64>>>,
}

/// Residual and, optionally, its Jacobian at a trial point.
pub struct Evaluation {
    pub residual: Vec<f64>,
    pub jacobian: Option<DMatrix<f64>>,
    pub contact_force: Vec<f64>,
    pub friction_force: Vec<f64>,
    pub active_pairs: usize,
}

fn scatter(target: &mut [f64], dofs: &[usize; 4], block: &crate::contact::Vec12, sign: f64) {
    for (a, &d) in dofs.iter().enumerate() {
        for k in 0..3 {
            target[d + k] += sign * block[3 * a + k];
        }
    }
}

fn scatter_matrix(target: &mut DMatrix<f64>, dofs: &[usize; 4], block: &crate::contact::Mat12, sign: f64) {
    for (a, &da) in dofs.iter().enumerate() {
        for (b, &db) in dofs.iter().enumerate() {
            for r in 0..3 {
                for c in 0..3 {
                    target[(da + r, db + c)] += sign * block[(3 * a + r, 3 * b + c)];
                }
            }
        }
    }
}

impl StepContext {
    fn pair_dofs(&self, state: &SystemState, key: &EdgePairKey) -> [usize; 4] {
        [
            state.node_index(key.rod_a, key.edge_i),
            state.node_index(key.rod_a, key.edge_i + 1),
            state.node_index(key.rod_b, key.edge_j),
            state.node_index(key.rod_b, key.edge_j + 1),
        ]
    }

    fn pair_start(&self, key: &EdgePairKey) -> [Vector3<f64>; 4] {
        let a = &self.x0[key.rod_a];
        let b = &self.x0[key.rod_b];
        [a[key.edge_i], a[key.edge_i + 1], b[key.edge_j], b[key.edge_j + 1]]
    }

    /// Rods at trial DOFs `q`, keeping the step-start frame anchor.
    pub fn trial_rods(&self, state: &SystemState, q: &[f64]) -> Vec<RodState> {
        self.start
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut r = r.clone();
                let off = state.offsets[i];
                r.set_dofs(&q[off..off + r.num_dofs()]);
                r
            })
            .collect()
    }

    /// Inertial, elastic, hydrodynamic and applied terms only.
    fn smooth_residual(&self, state: &SystemState, physics: &Physics, rods: &[RodState], q: &[f64], grad: &mut [f64], hess: Option<&mut DMatrix<f64>>) {
        let dt = physics.dt();
        let mut hess = hess;
        for (i, rod) in rods.iter().enumerate() {
            rod.accumulate_elastic(&physics.material, grad, hess.as_deref_mut(), state.offsets[i]);
        }
        for k in 0..q.len() {
            grad[k] += state.mass[k] * (q[k] - self.q_t[k] - dt * self.v_t[k]) / (dt * dt) - self.hydro[k] - state.applied[k];
        }
        if let Some(h) = hess {
            for k in 0..q.len() {
                h[(k, k)] += state.mass[k] / (dt * dt);
            }
        }
    }

    pub fn evaluate(&self, state: &SystemState, physics: &Physics, q: &[f64], want_jacobian: bool) -> Result<Evaluation> {
        let n = q.len();
        let rods = self.trial_rods(state, q);
        let mut residual = vec![0.0; n];
        let mut jacobian = want_jacobian.then(|| DMatrix::zeros(n, n));
        self.smooth_residual(state, physics, &rods, q, &mut residual, jacobian.as_mut());

        let nodes: Vec<&[Vector3<f64>]> = rods.iter().map(|r| r.nodes.as_slice()).collect();
        let params = ContactParams {
            stiffness: self.stiffness,
            ..physics.contact.clone()
        };
        let active = refresh_contact_set(&self.candidates, &nodes, params.radius, params.delta());
        let mut contact_force = vec![0.0; n];
        let mut friction_force = vec![0.0; n];
        for (key, dist) in &active.pairs {
            let x = key.stencil(&nodes);
            let dofs = self.pair_dofs(state, key);
            let c: ContactResponse = contact_force_jacobian(&x, dist, &params)?;
            scatter(&mut contact_force, &dofs, &c.force, 1.0);
            if let Some(j) = jacobian.as_mut() {
                scatter_matrix(j, &dofs, &c.jacobian, -1.0);
            }
            if physics.friction.mu > 0.0 {
                let fr = friction_response(&x, &self.pair_start(key), &c, &physics.friction);
                scatter(&mut friction_force, &dofs, &fr.force, 1.0);
                if let Some(j) = jacobian.as_mut() {
                    scatter_matrix(j, &dofs, &fr.jacobian, -1.0);
                }
            }
        }
        for k in 0..n {
            residual[k] -= contact_force[k] + friction_force[k];
        }
        Ok(Evaluation {
            residual,
            jacobian,
            contact_force,
            friction_force,
            active_pairs: active.pairs.len(),
        })
    }

    fn free_norm(&self, r: &[f64]) -> f64 {
        self.free.iter().map(|&i| r[i] * r[i]).sum::<f64>().sqrt()
    }
}

/// Goldstein-Price bisection on φ(α) = ½‖F(q − αΔq)‖². `d0` is the slope
/// of φ at α = 0. Returns the step and the number of trial evaluations.
/// An accepted trial is returned as is; when the bracket collapses or the
/// budget runs out the midpoint of the final bracket is returned.
pub fn line_search(phi: &mut dyn FnMut(f64) -> Result<f64>, phi0: f64, d0: f64, params: &SolverParams) -> Result<(f64, usize)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut alpha = 1.0;
    let mut iters = 0;
    loop {
        let change = phi(alpha)? - phi0;
        iters += 1;
        if alpha * params.m2 * d0 <= change && change <= alpha * params.m1 * d0 {
            return Ok((alpha, iters));
        }
        if change < alpha * params.m2 * d0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        alpha = 0.5 * (lo + hi);
        if (lo - hi).abs() < params.alpha_collapse || iters >= params.max_line_search_iters {
            return Ok((alpha, iters));
        }
    }
}

/// Prepares the per-step context: hydrodynamic forces from the current
/// velocities and the initial guess with prescribed DOFs applied.
pub fn begin_step(state: &SystemState, physics: &Physics, prescribed: &[(usize, f64)]) -> Result<(StepContext, Vec<f64>)> {
    let q_t = state.dofs();
    let v_t = state.velocities();
    let n = q_t.len();
    let mut hydro = vec![0.0; n];
    if let Some(fluid) = &physics.fluid {
        let nodes = state.node_slices();
        let vels: Vec<Vec<Vector3<f64>>> = state.rods.iter().map(|r| r.node_velocities.clone()).collect();
        let vel_refs: Vec<&[Vector3<f64>]> = vels.iter().map(|v| v.as_slice()).collect();
        let dl: Vec<Vec<f64>> = state
            .rods
            .iter()
            .map(|r| {
                let lens: Vec<f64> = (0..r.num_edges()).map(|i| r.edge(i).norm()).collect();
                crate::rod::RestShape::voronoi_lengths(&lens)
            })
            .collect();
        let dl_refs: Vec<&[f64]> = dl.iter().map(|d| d.as_slice()).collect();
        let forces = hydrodynamic_forces(&nodes, &vel_refs, &dl_refs, fluid)?;
        for (rod, fs) in forces.iter().enumerate() {
            for (i, f) in fs.iter().enumerate() {
                let d = state.node_index(rod, i);
                for k in 0..3 {
                    hydro[d + k] = f[k];
                }
            }
        }
    }
    let mut fixed = vec![false; n];
    let mut q = q_t.clone();
    for &(d, v) in prescribed {
        fixed[d] = true;
        q[d] = v;
    }
    let free = (0..n).filter(|&i| !fixed[i]).collect();
    let ctx = StepContext {
        q_t,
        v_t,
        hydro,
        candidates: CandidateSet::default(),
        stiffness: state.contact_stiffness,
        free,
        start: state.rods.clone(),
        x0: state.rods.iter().map(|r| r.nodes.clone()).collect(),
    };
    Ok((ctx, q))
}

/// Candidate margin for this step: the configured δ̂ widened by the distance
/// two nodes can close in one step at the fastest current nodal speed, so
/// fast motion cannot carry a pair from outside the set into penetration.
pub fn candidate_margin(state: &SystemState, physics: &Physics) -> f64 {
    let vmax = state
        .rods
        .iter()
        .flat_map(|r| r.node_velocities.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    physics.candidate_margin + 2.0 * vmax * physics.dt()
}

/// Advances one time step. A step that exhausts the Newton budget still
/// commits its last iterate and reports `converged = false`.
pub fn step(state: &mut SystemState, physics: &Physics, prescribed: &[(usize, f64)]) -> Result<StepStats> {
    let started = Instant::now();
    let dt = physics.dt();
    let (mut ctx, mut q) = begin_step(state, physics, prescribed)?;
    let mut stats = StepStats::default();
    let mut tol = f64::INFINITY;
    let mut err = f64::INFINITY;
    let mut iter = 0;

    while err > tol || iter == 0 {
        if iter == physics.solver.max_newton_iters {
            break;
        }
        if iter == 0 {
            let trial = ctx.trial_rods(state, &q);
            let nodes: Vec<&[Vector3<f64>]> = trial.iter().map(|r| r.nodes.as_slice()).collect();
            ctx.candidates = build_candidate_set(&nodes, physics.contact.radius, candidate_margin(state, physics));
            stats.candidates = ctx.candidates.pairs.len();
            if !ctx.candidates.is_empty() {
                let mut g = vec![0.0; q.len()];
                ctx.smooth_residual(state, physics, &trial, &q, &mut g, None);
                let norms: Vec<f64> = ctx
                    .candidates
                    .nodes()
                    .iter()
                    .map(|&(rod, node)| {
                        let d = state.node_index(rod, node);
                        Vector3::new(g[d], g[d + 1], g[d + 2]).norm()
                    })
                    .collect();
                ctx.stiffness = update_contact_stiffness(&norms, physics.contact.scale, ctx.stiffness);
            }
        }

        let eval = ctx.evaluate(state, physics, &q, true)?;
        stats.max_active_pairs = stats.max_active_pairs.max(eval.active_pairs);
        let f_free: Vec<f64> = ctx.free.iter().map(|&i| eval.residual[i]).collect();
        let norm = ctx.free_norm(&eval.residual);
        stats.residual_history.push(norm);
        if iter == 0 {
            tol = (physics.solver.tol_rel * norm).max(physics.solver.tol_abs);
        }

        let jac = eval.jacobian.expect("jacobian requested");
        let nf = ctx.free.len();
        let j_free = DMatrix::from_fn(nf, nf, |r, c| jac[(ctx.free[r], ctx.free[c])]);
        let dq = dense::solve(&j_free, &f_free).ok_or(Error::SingularJacobian {
            step: state.step_index,
            iteration: iter,
        })?;

        // Slope of ½‖F(q − αΔq)‖² at α = 0.
        let jdq = &j_free * nalgebra::DVector::from_column_slice(&dq);
        let d0 = -f_free.iter().zip(jdq.iter()).map(|(a, b)| a * b).sum::<f64>();
        let phi0 = 0.5 * norm * norm;
        let free = ctx.free.clone();
        let base = q.clone();
        let mut phi = |alpha: f64| -> Result<f64> {
            let mut trial = base.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] -= alpha * dq[k];
            }
            let e = ctx.evaluate(state, physics, &trial, false)?;
            let n = ctx.free_norm(&e.residual);
            Ok(0.5 * n * n)
        };
        let (alpha, ls_iters) = line_search(&mut phi, phi0, d0, &physics.solver)?;
        stats.line_search_iters += ls_iters;
        for (k, &i) in ctx.free.iter().enumerate() {
            q[i] -= alpha * dq[k];
        }
        err = norm;
        iter += 1;
    }

    stats.newton_iters = iter;
    stats.converged = err <= tol;
    let last = ctx.evaluate(state, physics, &q, false)?;
    stats.residual = ctx.free_norm(&last.residual);
    stats.max_active_pairs = stats.max_active_pairs.max(last.active_pairs);
    stats.reactions = prescribed.iter().map(|&(d, _)| (d, last.residual[d])).collect();

    let v: Vec<f64> = q.iter().zip(&ctx.q_t).map(|(a, b)| (a - b) / dt).collect();
    let trial = ctx.trial_rods(state, &q);
    let mut next = Vec::with_capacity(state.rods.len());
    for (i, rod) in state.rods.iter().enumerate() {
        let off = state.offsets[i];
        let nd = rod.num_dofs();
        let mut moved = rod.update_frames(&trial[i].nodes)?;
        moved.set_dofs(&q[off..off + nd]);
        moved.set_dof_velocities(&v[off..off + nd]);
        next.push(moved);
    }
    state.rods = next;
    state.contact_stiffness = ctx.stiffness;
    state.time += dt;
    state.step_index += 1;
    stats.wall_time_s = started.elapsed().as_secs_f64();
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_search_accepts_full_step_on_quadratic() {
        // φ(α) = ½(1 − α)², minimised at α = 1 with slope −1 at 0.
        let mut phi = |a: f64| Ok(0.5 * (1.0 - a) * (1.0 - a));
        let (alpha, iters) = line_search(&mut phi, 0.5, -1.0, &SolverParams::default()).unwrap();
        assert_eq!((alpha, iters), (1.0, 1));
    }

    #[test]
    fn line_search_satisfies_goldstein_on_overshoot() {
        // Residual F(α) = 1 − 4α + 2α³ style overshoot: φ grows fast past the minimiser.
        let f = |a: f64| 1.0 - 3.0 * a + 6.0 * a * a * a;
        let mut phi = |a: f64| Ok(0.5 * f(a) * f(a));
        let p = SolverParams::default();
        let d0 = -3.0;
        let (alpha, _) = line_search(&mut phi, 0.5, d0, &p).unwrap();
        let change = 0.5 * f(alpha) * f(alpha) - 0.5;
        assert!(alpha * p.m2 * d0 <= change && change <= alpha * p.m1 * d0, "alpha {alpha}");
    }

    #[test]
    fn line_search_returns_midpoint_on_collapse() {
        // φ never decreases: the bracket shrinks towards zero.
        let mut phi = |_a: f64| Ok(1.0);
        let p = SolverParams {
            max_line_search_iters: 100,
            ..SolverParams::default()
        };
        let (alpha, iters) = line_search(&mut phi, 0.5, -1.0, &p).unwrap();
        assert!(alpha < 1e-6 && iters > 10);
        let mut flat = |_a: f64| Ok(1.0);
        let (alpha, iters) = line_search(&mut flat, 0.5, -1.0, &SolverParams::default()).unwrap();
        assert_eq!(iters, 20);
        assert_eq!(alpha, 0.5f64.powi(20));
    }
}
