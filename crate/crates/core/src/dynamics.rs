//! Damped gradient-flow integration of the virtual agent and the robots.
//!
//! Forces are generalized accelerations on unit-mass bodies. Each step uses
//! semi-implicit Euler with linear velocity damping:
//!
//! ```text
//! a  = F(q) − c·v
//! v' = v + a·dt
//! q' = q + v'·dt
//! ```
//!
//! The virtual agent and every robot advance together from the same pre-step
//! state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Execution, MIN_PARALLEL_ITEMS};
use crate::fields::{self, GoalLaw, Goal, InterRobotParams, Obstacle, Robot, VirtualAgent};
use crate::fpf::FpfParams;
use crate::vec2::Vec2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// Number of integration steps taken to reach this state.
    pub step: usize,
    pub time: f64,
    pub virtual_agent: VirtualAgent,
    pub robots: Vec<Robot>,
}

impl WorldState {
    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.robots.iter().map(|r| r.position)
    }
}

/// Everything the force laws need that does not change during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub fpf: FpfParams,
    pub inter_robot: InterRobotParams,
    pub goal: Goal,
    pub goal_law: GoalLaw,
    pub obstacles: Vec<Obstacle>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub damping_va: f64,
    pub damping_robot: f64,
    pub max_steps: usize,
    pub speed_tolerance: f64,
    pub force_tolerance: f64,
}

impl IntegratorConfig {
    /// `dt = 0.01`, critical damping `2·√λ` for the virtual agent, `2.0` for robots.
    pub fn with_defaults(lambda: f64) -> Self {
        IntegratorConfig {
            dt: 0.01,
            damping_va: 2.0 * lambda.sqrt(),
            damping_robot: 2.0,
            max_steps: 1_000_000,
            speed_tolerance: 1e-5,
            force_tolerance: 1e-5,
        }
    }

    /// First violated constraint as `(field, rule)`.
    pub fn check(&self) -> std::result::Result<(), (&'static str, &'static str)> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !pos(self.dt) {
            return Err(("dt", "dt > 0"));
        }
        if !nonneg(self.damping_va) {
            return Err(("damping_va", "damping_va >= 0"));
        }
        if !nonneg(self.damping_robot) {
            return Err(("damping_robot", "damping_robot >= 0"));
        }
        if self.max_steps == 0 {
            return Err(("max_steps", "max_steps > 0"));
        }
        if !pos(self.speed_tolerance) {
            return Err(("speed_tolerance", "speed_tolerance > 0"));
        }
        if !pos(self.force_tolerance) {
            return Err(("force_tolerance", "force_tolerance > 0"));
        }
        Ok(())
    }
}

/// Forces acting on every body of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Forces {
    pub virtual_agent: Vec2,
    pub robots: Vec<Vec2>,
}

pub fn compute_forces(state: &WorldState, world: &World, exec: Execution) -> Result<Forces> {
    let q_v = state.virtual_agent.position;
    let virtual_agent = fields::virtual_agent_force(&world.goal, &world.obstacles, q_v, world.goal_law)?;
    let robots = exec.try_map_min(state.robots.len(), MIN_PARALLEL_ITEMS, |i| {
        fields::robot_force(&world.fpf, &world.inter_robot, &world.obstacles, &state.robots, i, q_v)
    })?;
    Ok(Forces { virtual_agent, robots })
}

fn advance(state: &WorldState, forces: &Forces, cfg: &IntegratorConfig) -> Result<WorldState> {
    let dt = cfg.dt;
    let diverged = Error::Divergence { step: state.step };
    let integrate = |q: Vec2, v: Vec2, f: Vec2, c: f64| {
        let v_next = v + (f - v * c) * dt;
        (q + v_next * dt, v_next)
    };

    if !forces.virtual_agent.is_finite() || forces.robots.iter().any(|f| !f.is_finite()) {
        return Err(diverged);
    }
    let va = &state.virtual_agent;
    let (position, velocity) = integrate(va.position, va.velocity, forces.virtual_agent, cfg.damping_va);
    let virtual_agent = VirtualAgent { position, velocity };

    let robots: Vec<Robot> = state
        .robots
        .iter()
        .zip(&forces.robots)
        .map(|(r, &f)| {
            let (position, velocity) = integrate(r.position, r.velocity, f, cfg.damping_robot);
            Robot { position, velocity, ..*r }
        })
        .collect();

    if !(virtual_agent.position.is_finite() && virtual_agent.velocity.is_finite())
        || robots.iter().any(|r| !(r.position.is_finite() && r.velocity.is_finite()))
    {
        return Err(diverged);
    }
    Ok(WorldState { step: state.step + 1, time: state.time + dt, virtual_agent, robots })
}

/// Advance one step of length `cfg.dt`.
pub fn step(state: &WorldState, world: &World, cfg: &IntegratorConfig) -> Result<WorldState> {
    let forces = compute_forces(state, world, Execution::Sequential)?;
    advance(state, &forces, cfg)
}

/// Every body slower than `speed_tolerance` and feeling less than `force_tolerance`.
pub fn detect_convergence(state: &WorldState, forces: &Forces, cfg: &IntegratorConfig) -> bool {
    let still = |v: Vec2, f: Vec2| v.norm() < cfg.speed_tolerance && f.norm() < cfg.force_tolerance;
    still(state.virtual_agent.velocity, forces.virtual_agent)
        && state.robots.iter().zip(&forces.robots).all(|(r, &f)| still(r.velocity, f))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// Stop as soon as the whole system is at rest.
    Assemble,
    /// Stop once the virtual agent is within `epsilon_goal` of the goal and
    /// the system is at rest.
    ReachGoal { epsilon_goal: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    GoalReached,
    /// `max_steps` exhausted before the termination condition held.
    MaxSteps,
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self != Outcome::MaxSteps
    }
}

/// A full integration run. `forces[k]` are the forces acting in `trajectory[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub trajectory: Vec<WorldState>,
    pub forces: Vec<Forces>,
    pub outcome: Outcome,
}

/// Integrate from `initial` until `termination` holds or `cfg.max_steps`
/// steps have been taken. The trajectory holds the initial and final states.
pub fn run(
    initial: &WorldState,
    world: &World,
    cfg: &IntegratorConfig,
    termination: Termination,
    exec: Execution,
) -> Result<Run> {
    let mut trajectory = Vec::new();
    let mut forces = Vec::new();
    let mut state = initial.clone();
    let outcome = loop {
        let f = compute_forces(&state, world, exec)?;
        let at_rest = detect_convergence(&state, &f, cfg);
        let done = match termination {
            Termination::Assemble => at_rest.then_some(Outcome::Converged),
            Termination::ReachGoal { epsilon_goal } => {
                let near = state.virtual_agent.position.distance(world.goal.position) < epsilon_goal;
                (near && at_rest).then_some(Outcome::GoalReached)
            }
        };
        let exhausted = state.step - initial.step >= cfg.max_steps;
        let next = if done.is_none() && !exhausted { Some(advance(&state, &f, cfg)?) } else { None };
        trajectory.push(state);
        forces.push(f);
        match (done, next) {
            (Some(o), _) => break o,
            (None, None) => break Outcome::MaxSteps,
            (None, Some(s)) => state = s,
        }
    };
    Ok(Run { trajectory, forces, outcome })
}
