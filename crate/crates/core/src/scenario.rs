//! Complete experiments: seeding, formation assembly, navigation through
//! obstacle fields, and the formation-quality and safety metrics computed
//! from the resulting trajectories.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Forces, IntegratorConfig, Outcome, Termination, World, WorldState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fields::{GoalLaw, Goal, InterRobotParams, Obstacle, Robot, VirtualAgent};
use crate::fpf::{self, FpfParams};
use crate::vec2::Vec2;

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: Vec2,
    pub max: Vec2,
}

impl Region {
    pub fn contains(&self, p: Vec2) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedingSpec {
    pub region: Region,
    pub min_separation: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetySpec {
    /// Required surface gap between two robots.
    pub min_robot_clearance: f64,
    /// Required gap between a robot surface and an obstacle source point.
    pub min_obstacle_clearance: f64,
}

/// Acceptance band for a regular formation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationTolerance {
    /// Allowed radius deviation, relative to the formation radius.
    pub radius_rel: f64,
    /// Allowed deviation of each angular gap from `360°/N`, in degrees.
    pub gap_deg: f64,
}

impl Default for FormationTolerance {
    fn default() -> Self {
        FormationTolerance { radius_rel: 0.01, gap_deg: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Free-form remark carried into run summaries.
    pub note: Option<String>,
    pub fpf: FpfParams,
    pub inter_robot: InterRobotParams,
    pub n_robots: usize,
    pub body_radius: f64,
    pub seeding: SeedingSpec,
    pub virtual_start: Vec2,
    pub goal: Goal,
    pub goal_law: GoalLaw,
    pub epsilon_goal: f64,
    pub obstacles: Vec<Obstacle>,
    /// Settings for navigation runs.
    pub integrator: IntegratorConfig,
    /// Settings for the assembly phase; `integrator` when absent.
    pub assembly_integrator: Option<IntegratorConfig>,
    pub safety: SafetySpec,
    pub formation: FormationTolerance,
}

fn rule(key: impl Into<String>, rule: impl Into<String>) -> Error {
    Error::InvalidScenario { key: key.into(), rule: rule.into() }
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(rule(key, format!("{key} > 0")))
    }
}

fn finite_point(key: &str, p: Vec2) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(rule(key, "finite coordinates"))
    }
}

impl Scenario {
    /// Check every scenario invariant; the error names the first offending key.
    pub fn validate(&self) -> Result<()> {
        let report = fpf::validate_params(&self.fpf).map_err(|e| match e {
            Error::MalformedParameter { name, .. } => rule(format!("fpf.{name}"), "finite number"),
            other => other,
        })?;
        if let Some(v) = report.violations.first() {
            return Err(rule(format!("fpf.{}", v.rule.key()), v.rule.as_str()));
        }
        positive("inter_robot.k_a", self.inter_robot.k_a)?;
        positive("inter_robot.sigma_r", self.inter_robot.sigma_r)?;
        if self.n_robots == 0 {
            return Err(rule("n_robots", "n_robots >= 1"));
        }
        positive("body_radius", self.body_radius)?;

        let sd = &self.seeding;
        finite_point("seeding.region.min", sd.region.min)?;
        finite_point("seeding.region.max", sd.region.max)?;
        if sd.region.max.x < sd.region.min.x || sd.region.max.y < sd.region.min.y {
            return Err(rule("seeding.region", "max >= min"));
        }
        if !(sd.min_separation.is_finite() && sd.min_separation >= 0.0) {
            return Err(rule("seeding.min_separation", "min_separation >= 0"));
        }
        if !seeding_fits(sd, self.n_robots) {
            return Err(rule("seeding.region", "region holds n_robots points at min_separation"));
        }

        finite_point("virtual_start", self.virtual_start)?;
        finite_point("goal.position", self.goal.position)?;
        positive("goal.lambda", self.goal.lambda)?;
        positive("epsilon_goal", self.epsilon_goal)?;
        for (k, o) in self.obstacles.iter().enumerate() {
            positive(&format!("obstacles[{k}].k_r"), o.k_r)?;
            positive(&format!("obstacles[{k}].sigma_o"), o.sigma_o)?;
            if o.source_points.is_empty() {
                return Err(rule(format!("obstacles[{k}].source_points"), "at least one source point"));
            }
            if o.source_points.iter().any(|p| !p.is_finite()) {
                return Err(rule(format!("obstacles[{k}].source_points"), "finite coordinates"));
            }
        }
        self.integrator.check().map_err(|(k, r)| rule(format!("integrator.{k}"), r))?;
        if let Some(a) = &self.assembly_integrator {
            a.check().map_err(|(k, r)| rule(format!("assembly_integrator.{k}"), r))?;
        }
        positive("safety.min_robot_clearance", self.safety.min_robot_clearance)?;
        positive("safety.min_obstacle_clearance", self.safety.min_obstacle_clearance)?;
        positive("formation.radius_rel", self.formation.radius_rel)?;
        positive("formation.gap_deg", self.formation.gap_deg)?;
        Ok(())
    }

    /// Formation radius in world units, `𝓡/σ1`.
    pub fn formation_radius(&self) -> Result<f64> {
        Ok(self.fpf.scaled_radius()? / self.fpf.sigma1)
    }

    /// Largest formation RMS error still counted as "in formation".
    pub fn assembly_threshold(&self) -> Result<f64> {
        Ok(self.formation.radius_rel * self.formation_radius()?)
    }

    pub fn assembly_config(&self) -> IntegratorConfig {
        self.assembly_integrator.unwrap_or(self.integrator)
    }

    /// Force laws for navigation (`obstacles = true`) or for assembly, where
    /// the agent is held at its start and obstacles are ignored.
    pub fn world(&self, navigation: bool) -> World {
        World {
            fpf: self.fpf,
            inter_robot: self.inter_robot,
            goal: if navigation { self.goal } else { Goal { position: self.virtual_start, ..self.goal } },
            goal_law: self.goal_law,
            obstacles: if navigation { self.obstacles.clone() } else { Vec::new() },
        }
    }

    /// Robots at the seeded positions, at rest, around a resting agent.
    pub fn initial_state(&self) -> Result<WorldState> {
        let positions = seed_initial_positions(&self.seeding, self.n_robots)?;
        Ok(WorldState {
            step: 0,
            time: 0.0,
            virtual_agent: VirtualAgent { position: self.virtual_start, velocity: Vec2::ZERO },
            robots: positions
                .into_iter()
                .enumerate()
                .map(|(id, position)| Robot { id, position, velocity: Vec2::ZERO, body_radius: self.body_radius })
                .collect(),
        })
    }
}

/// Hexagonal-packing area bound: `n` discs of diameter `s` in the box grown by `s`.
fn seeding_fits(spec: &SeedingSpec, n: usize) -> bool {
    let s = spec.min_separation;
    let w = spec.region.max.x - spec.region.min.x + s;
    let h = spec.region.max.y - spec.region.min.y + s;
    n <= 1 || (n as f64) * (3f64.sqrt() / 2.0) * s * s <= w * h
}

/// Rejection attempts allowed per requested point.
const SEEDING_ATTEMPTS_PER_POINT: usize = 10_000;

/// `n` points in `spec.region`, pairwise at least `min_separation` apart.
/// Deterministic for a given seed.
pub fn seed_initial_positions(spec: &SeedingSpec, n: usize) -> Result<Vec<Vec2>> {
    let budget = SEEDING_ATTEMPTS_PER_POINT * n.max(1);
    let infeasible = |attempts| Error::InfeasibleSeeding { n, min_separation: spec.min_separation, attempts };
    if !seeding_fits(spec, n) {
        return Err(infeasible(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = (spec.region.min, spec.region.max);
    let mut points: Vec<Vec2> = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n {
        if attempts == budget {
            return Err(infeasible(attempts));
        }
        attempts += 1;
        let p = Vec2::new(lo.x + (hi.x - lo.x) * rng.gen::<f64>(), lo.y + (hi.y - lo.y) * rng.gen::<f64>());
        if points.iter().all(|q| q.distance(p) >= spec.min_separation) {
            points.push(p);
        }
    }
    Ok(points)
}

/// Radii and sorted angular gaps (degrees) of a point set about `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct Regularity {
    pub radii: Vec<f64>,
    pub angular_gaps_deg: Vec<f64>,
}

pub fn polygon_regularity(positions: &[Vec2], center: Vec2) -> Result<Regularity> {
    if positions.is_empty() {
        return Err(Error::DegeneratePolygon("no vertices".into()));
    }
    let mut radii = Vec::with_capacity(positions.len());
    let mut angles = Vec::with_capacity(positions.len());
    for (i, &p) in positions.iter().enumerate() {
        let r = p - center;
        if r.norm() == 0.0 {
            return Err(Error::DegeneratePolygon(format!("vertex {i} coincides with the centre")));
        }
        radii.push(r.norm());
        angles.push(r.angle().to_degrees());
    }
    angles.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(360.0 - (angles[angles.len() - 1] - angles[0]));
    Ok(Regularity { radii, angular_gaps_deg: gaps })
}

/// Worst deviations of a state from the regular `N`-gon of radius `radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormationCheck {
    pub max_radius_error_rel: f64,
    pub max_gap_error_deg: f64,
    pub within_tolerance: bool,
}

pub fn formation_check(state: &WorldState, radius: f64, tol: &FormationTolerance) -> Result<FormationCheck> {
    let positions: Vec<Vec2> = state.positions().collect();
    let reg = polygon_regularity(&positions, state.virtual_agent.position)?;
    let ideal_gap = 360.0 / positions.len() as f64;
    let max_radius_error_rel = reg.radii.iter().map(|r| (r - radius).abs() / radius).fold(0.0, f64::max);
    let max_gap_error_deg = reg.angular_gaps_deg.iter().map(|g| (g - ideal_gap).abs()).fold(0.0, f64::max);
    Ok(FormationCheck {
        max_radius_error_rel,
        max_gap_error_deg,
        within_tolerance: max_radius_error_rel <= tol.radius_rel && max_gap_error_deg <= tol.gap_deg,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollisionKind {
    RobotRobot { a: usize, b: usize },
    RobotObstacle { robot: usize, obstacle: usize, point: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub step: usize,
    pub time: f64,
    #[serde(flatten)]
    pub kind: CollisionKind,
    /// Centre-to-centre (or centre-to-source) distance.
    pub distance: f64,
}

/// Pairs closer than the safety thresholds. Exactly at threshold is safe.
pub fn check_collisions(state: &WorldState, obstacles: &[Obstacle], safety: &SafetySpec) -> Vec<CollisionEvent> {
    let mut events = Vec::new();
    let event = |kind, distance| CollisionEvent { step: state.step, time: state.time, kind, distance };
    for (i, a) in state.robots.iter().enumerate() {
        for b in &state.robots[i + 1..] {
            let d = a.position.distance(b.position);
            if d < a.body_radius + b.body_radius + safety.min_robot_clearance {
                events.push(event(CollisionKind::RobotRobot { a: a.id, b: b.id }, d));
            }
        }
        for (k, o) in obstacles.iter().enumerate() {
            for (p, &s) in o.source_points.iter().enumerate() {
                let d = a.position.distance(s);
                if d < a.body_radius + safety.min_obstacle_clearance {
                    events.push(event(CollisionKind::RobotObstacle { robot: a.id, obstacle: k, point: p }, d));
                }
            }
        }
    }
    events
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// RMS deviation of robot radii (about the agent) from the formation radius.
    pub formation_rms_error: f64,
    /// `+inf` for a single robot.
    pub min_inter_robot_distance: f64,
    /// Smallest robot-surface to source-point gap; `+inf` without obstacles.
    pub min_obstacle_clearance: f64,
    pub per_robot_force: Vec<Vec2>,
}

pub fn step_metrics(state: &WorldState, forces: &Forces, radius: f64, obstacles: &[Obstacle]) -> StepMetrics {
    let q_v = state.virtual_agent.position;
    let n = state.robots.len() as f64;
    let sq: f64 = state.robots.iter().map(|r| (r.position.distance(q_v) - radius).powi(2)).sum();
    let mut min_pair = f64::INFINITY;
    let mut min_obs = f64::INFINITY;
    for (i, a) in state.robots.iter().enumerate() {
        for b in &state.robots[i + 1..] {
            min_pair = min_pair.min(a.position.distance(b.position));
        }
        for s in obstacles.iter().flat_map(|o| &o.source_points) {
            min_obs = min_obs.min(a.position.distance(*s) - a.body_radius);
        }
    }
    StepMetrics {
        formation_rms_error: (sq / n).sqrt(),
        min_inter_robot_distance: min_pair,
        min_obstacle_clearance: min_obs,
        per_robot_force: forces.robots.clone(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Formation radius in world units used for the error metric.
    pub formation_radius: f64,
    pub trajectory: Vec<WorldState>,
    pub metrics_series: Vec<StepMetrics>,
    pub collision_events: Vec<CollisionEvent>,
    pub termination: Outcome,
}

impl RunResult {
    fn from_run(run: dynamics::Run, radius: f64, obstacles: &[Obstacle], safety: &SafetySpec) -> Self {
        let metrics_series = run.trajectory.iter().zip(&run.forces).map(|(s, f)| step_metrics(s, f, radius, obstacles)).collect();
        let collision_events = run.trajectory.iter().flat_map(|s| check_collisions(s, obstacles, safety)).collect();
        RunResult {
            formation_radius: radius,
            trajectory: run.trajectory,
            metrics_series,
            collision_events,
            termination: run.outcome,
        }
    }

    pub fn final_state(&self) -> &WorldState {
        self.trajectory.last().expect("a run always records its initial state")
    }

    pub fn final_metrics(&self) -> &StepMetrics {
        self.metrics_series.last().expect("one metrics entry per state")
    }

    pub fn steps(&self) -> usize {
        self.trajectory.len() - 1
    }

    pub fn is_collision_free(&self) -> bool {
        self.collision_events.is_empty()
    }
}

/// Seed the robots and let them self-organize around the resting agent.
pub fn assemble(s: &Scenario) -> Result<RunResult> {
    assemble_with(s, Execution::default())
}

pub fn assemble_with(s: &Scenario, exec: Execution) -> Result<RunResult> {
    s.validate()?;
    let radius = s.formation_radius()?;
    let initial = s.initial_state()?;
    let run = dynamics::run(&initial, &s.world(false), &s.assembly_config(), Termination::Assemble, exec)?;
    Ok(RunResult::from_run(run, radius, &[], &s.safety))
}

/// Assemble many independent scenarios (e.g. a seed sweep).
pub fn assemble_batch(scenarios: &[Scenario], exec: Execution) -> Vec<Result<RunResult>> {
    exec.map(scenarios.len(), |i| assemble_with(&scenarios[i], Execution::Sequential))
}

/// Drive an assembled formation to the goal through the scenario's obstacles.
/// The navigation trajectory restarts its clock at zero.
pub fn navigate(s: &Scenario, assembled: &WorldState) -> Result<RunResult> {
    navigate_with(s, assembled, Execution::default())
}

pub fn navigate_with(s: &Scenario, assembled: &WorldState, exec: Execution) -> Result<RunResult> {
    s.validate()?;
    let radius = s.formation_radius()?;
    let initial = WorldState { step: 0, time: 0.0, ..assembled.clone() };
    let termination = Termination::ReachGoal { epsilon_goal: s.epsilon_goal };
    let run = dynamics::run(&initial, &s.world(true), &s.integrator, termination, exec)?;
    Ok(RunResult::from_run(run, radius, &s.obstacles, &s.safety))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForceSample {
    pub time: f64,
    pub fx: f64,
    pub fy: f64,
}

/// Per-step force components acting on robot `robot_id`.
pub fn force_trace(result: &RunResult, robot_id: usize) -> Result<Vec<ForceSample>> {
    let idx = result.trajectory[0]
        .robots
        .iter()
        .position(|r| r.id == robot_id)
        .ok_or(Error::UnknownRobot(robot_id))?;
    Ok(result
        .trajectory
        .iter()
        .zip(&result.metrics_series)
        .map(|(s, m)| {
            let f = m.per_robot_force[idx];
            ForceSample { time: s.time, fx: f.x, fy: f.y }
        })
        .collect())
}

/// Split of a navigation run by obstacle proximity.
#[derive(Clone, Debug, PartialEq)]
pub struct Phases {
    /// Before any robot first comes within reach of an obstacle source.
    pub cruise: Range<usize>,
    /// From that first step to the last step any robot is within reach.
    pub passage: Range<usize>,
    /// Everything after the passage.
    pub recovery: Range<usize>,
}

/// Phases of `result`, counting a robot as near an obstacle when some
/// source point is within `reach`. `None` if no robot ever gets that close.
pub fn passage_phases(result: &RunResult, obstacles: &[Obstacle], reach: f64) -> Option<Phases> {
    let near = |s: &WorldState| {
        s.robots
            .iter()
            .any(|r| obstacles.iter().flat_map(|o| &o.source_points).any(|p| p.distance(r.position) <= reach))
    };
    let first = result.trajectory.iter().position(near)?;
    let last = result.trajectory.iter().rposition(near)?;
    Some(Phases { cruise: 0..first, passage: first..last + 1, recovery: last + 1..result.trajectory.len() })
}

/// Recompute the metrics series of a stored trajectory. Matches the series
/// recorded during the run bit for bit.
pub fn recompute_metrics(s: &Scenario, trajectory: &[WorldState], navigation: bool) -> Result<Vec<StepMetrics>> {
    let world = s.world(navigation);
    let radius = s.formation_radius()?;
    trajectory
        .iter()
        .map(|state| {
            let f = dynamics::compute_forces(state, &world, Execution::Sequential)?;
            Ok(step_metrics(state, &f, radius, &world.obstacles))
        })
        .collect()
}

/// Reference scenarios.
pub mod presets {
    use super::*;

    pub const REFERENCE_FPF: FpfParams = FpfParams::new(2.0, 1.0, 2.4);

    /// Point-source spacing along walls, `0.1/σ1`.
    pub fn wall_spacing(fpf: &FpfParams) -> f64 {
        0.1 / fpf.sigma1
    }

    /// Obstacle-free self-organization of `n` robots seeded in `[-1, 1]²`.
    pub fn assembly(n: usize, seed: u64) -> Scenario {
        let fpf = REFERENCE_FPF;
        let radius = fpf.scaled_radius().expect("reference parameters have a radius") / fpf.sigma1;
        let goal = Goal { position: Vec2::ZERO, lambda: 1.0 };
        Scenario {
            note: None,
            fpf,
            inter_robot: InterRobotParams::default_for(&fpf),
            n_robots: n,
            body_radius: 0.02 * radius,
            seeding: SeedingSpec {
                region: Region { min: Vec2::new(-1.0, -1.0), max: Vec2::new(1.0, 1.0) },
                min_separation: 0.15,
                seed,
            },
            virtual_start: Vec2::ZERO,
            goal,
            goal_law: GoalLaw::Gradient,
            epsilon_goal: 0.05,
            obstacles: Vec::new(),
            integrator: IntegratorConfig {
                dt: 0.05,
                damping_va: 2.0 * goal.lambda.sqrt(),
                damping_robot: 0.5,
                max_steps: 200_000,
                speed_tolerance: 1e-6,
                force_tolerance: 1e-6,
            },
            assembly_integrator: None,
            safety: SafetySpec { min_robot_clearance: 0.05, min_obstacle_clearance: 0.05 },
            formation: FormationTolerance::default(),
        }
    }

    /// Walls of a funnel-mouthed corridor along +x.
    ///
    /// Each wall runs from the funnel mouth at `x0` (flared out by `flare`)
    /// to the corridor entrance at `x0 + funnel`, then straight for `length`.
    #[allow(clippy::too_many_arguments)]
    pub fn corridor_walls(gap: f64, x0: f64, funnel: f64, flare: f64, length: f64, spacing: f64, k_r: f64, sigma_o: f64) -> Vec<Obstacle> {
        let h = gap / 2.0;
        [1.0, -1.0]
            .into_iter()
            .map(|side| {
                let vertices = [
                    Vec2::new(x0, side * (h + flare)),
                    Vec2::new(x0 + funnel, side * h),
                    Vec2::new(x0 + funnel + length, side * h),
                ];
                Obstacle::from_polyline(&vertices, spacing, k_r, sigma_o)
            })
            .collect()
    }

    pub const NARROW_PASSAGE_NOTE: &str =
        "qualitative reproduction: corridor geometry, goal placement and obstacle gains are chosen, not recovered";

    /// A pentagon driven 11 units along +x, through a corridor whose width
    /// is 1.5 formation radii. Geometry and gains are a qualitative
    /// reproduction; the original layout is not recoverable.
    pub fn narrow_passage() -> Scenario {
        let base = assembly(5, 7);
        let fpf = base.fpf;
        let radius = base.formation_radius().expect("reference parameters have a radius");
        let goal = Goal { position: Vec2::new(11.0, 0.0), lambda: 1e-4 };
        Scenario {
            note: Some(NARROW_PASSAGE_NOTE.into()),
            // Stiffer at short range than the default so robots squeezed
            // into the corridor keep their distance.
            inter_robot: InterRobotParams { k_a: 0.03, sigma_r: 5.0 * fpf.sigma1 },
            goal,
            obstacles: corridor_walls(1.5 * radius, 2.5, 1.5, 1.5, 3.0, wall_spacing(&fpf), 1.0, 20.0 * fpf.sigma1),
            integrator: IntegratorConfig {
                dt: 0.02,
                damping_va: 2.0 * goal.lambda.sqrt(),
                damping_robot: 0.1,
                max_steps: 200_000,
                speed_tolerance: 1e-3,
                force_tolerance: 1e-3,
            },
            assembly_integrator: Some(base.integrator),
            ..base
        }
    }

    /// Same formation and dynamics as [`narrow_passage`] without obstacles,
    /// goal `distance` units along +x.
    pub fn open_field(distance: f64) -> Scenario {
        let s = narrow_passage();
        Scenario { note: None, obstacles: Vec::new(), goal: Goal { position: Vec2::new(distance, 0.0), ..s.goal }, ..s }
    }
}
