//! Non-FPF potentials and forces: inter-robot repulsion, obstacle repulsion,
//! goal attraction, and their compositions for the virtual agent and for each
//! robot. Every force here is the negative gradient of the matching
//! `*_potential` function.

use serde::{Deserialize, Serialize};

use crate::error::{Body, Error, Result};
use crate::fpf::{self, FpfParams};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Only used for collision checking.
    pub body_radius: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VirtualAgent {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Quadratic goal attraction `½·λ·|q_v − q_G|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    pub position: Vec2,
    pub lambda: f64,
}

/// How the goal attraction term of the virtual agent force is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalLaw {
    /// `−λ·(q_v − q_G)`, the gradient of the quadratic goal potential.
    #[default]
    Gradient,
    /// `−λ·|q_v − q_G|·(q_v − q_G)`, the literal printed form; kept for
    /// comparison runs. Its potential is `λ·|q_v − q_G|³/3`.
    Printed,
}

/// A set of point sources sharing one exponential repulsion law
/// `K_r·exp(−σ_o·d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub source_points: Vec<Vec2>,
    pub k_r: f64,
    pub sigma_o: f64,
}

impl Obstacle {
    pub fn new(source_points: Vec<Vec2>, k_r: f64, sigma_o: f64) -> Self {
        Obstacle { source_points, k_r, sigma_o }
    }

    /// Discretize a polyline into point sources no more than `spacing` apart.
    /// Every vertex becomes a source; shared vertices are emitted once.
    pub fn from_polyline(vertices: &[Vec2], spacing: f64, k_r: f64, sigma_o: f64) -> Self {
        let mut pts: Vec<Vec2> = Vec::new();
        if let Some(&first) = vertices.first() {
            pts.push(first);
        }
        for w in vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = a.distance(b);
            let n = ((len / spacing).ceil() as usize).max(1);
            for i in 1..=n {
                pts.push(a + (b - a) * (i as f64 / n as f64));
            }
        }
        Obstacle::new(pts, k_r, sigma_o)
    }

    /// Distance beyond which a single source pushes with less than `force`.
    pub fn influence_radius(&self, force: f64) -> f64 {
        ((self.k_r * self.sigma_o / force).ln() / self.sigma_o).max(0.0)
    }
}

/// Inter-robot repulsion `K_a·exp(−σ_r·d_ij)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterRobotParams {
    pub k_a: f64,
    pub sigma_r: f64,
}

impl InterRobotParams {
    /// `σ_r = 2·σ1`, long enough to space three robots evenly, with a gain
    /// small enough that a ten-robot ring sits within 0.6% of the bare FPF
    /// radius.
    pub fn default_for(fpf: &FpfParams) -> Self {
        InterRobotParams { k_a: 0.01, sigma_r: 2.0 * fpf.sigma1 }
    }
}

/// Unit vector from `from` to `to` together with the distance.
#[inline]
fn direction(to: Vec2, from: Vec2, a: Body, b: Body) -> Result<(Vec2, f64)> {
    let r = to - from;
    let d = r.norm();
    if d == 0.0 {
        return Err(Error::DegenerateDistance { a, b });
    }
    Ok((r / d, d))
}

pub fn inter_robot_potential(p: &InterRobotParams, q_i: Vec2, q_j: Vec2) -> f64 {
    p.k_a * (-p.sigma_r * q_i.distance(q_j)).exp()
}

/// Force on robot `i` due to robot `j`, pointing from `j` to `i`.
pub fn inter_robot_force(p: &InterRobotParams, q_i: Vec2, q_j: Vec2) -> Result<Vec2> {
    let (u, d) = direction(q_i, q_j, Body::Point, Body::Point)?;
    Ok(u * (p.k_a * p.sigma_r * (-p.sigma_r * d).exp()))
}

pub fn obstacle_potential(obs: &Obstacle, q: Vec2) -> f64 {
    obs.source_points
        .iter()
        .map(|&s| obs.k_r * (-obs.sigma_o * q.distance(s)).exp())
        .sum()
}

fn obstacle_force_tagged(obs: &Obstacle, index: usize, q: Vec2, who: Body) -> Result<Vec2> {
    let mut f = Vec2::ZERO;
    for (k, &s) in obs.source_points.iter().enumerate() {
        let (u, d) = direction(q, s, who, Body::Source { obstacle: index, point: k })?;
        f += u * (obs.k_r * obs.sigma_o * (-obs.sigma_o * d).exp());
    }
    Ok(f)
}

/// Summed repulsion of all source points of `obs`, directed away from each.
pub fn obstacle_force(obs: &Obstacle, q: Vec2) -> Result<Vec2> {
    obstacle_force_tagged(obs, 0, q, Body::Point)
}

pub fn goal_potential(g: &Goal, q_v: Vec2, law: GoalLaw) -> f64 {
    let d = q_v.distance(g.position);
    match law {
        GoalLaw::Gradient => 0.5 * g.lambda * d * d,
        GoalLaw::Printed => g.lambda * d * d * d / 3.0,
    }
}

pub fn goal_force(g: &Goal, q_v: Vec2, law: GoalLaw) -> Vec2 {
    let r = q_v - g.position;
    match law {
        GoalLaw::Gradient => r * -g.lambda,
        GoalLaw::Printed => r * (-g.lambda * r.norm()),
    }
}

/// Total potential of the virtual agent: goal attraction plus obstacles.
pub fn virtual_agent_potential(g: &Goal, obstacles: &[Obstacle], q_v: Vec2, law: GoalLaw) -> f64 {
    goal_potential(g, q_v, law) + obstacles.iter().map(|o| obstacle_potential(o, q_v)).sum::<f64>()
}

pub fn virtual_agent_force(g: &Goal, obstacles: &[Obstacle], q_v: Vec2, law: GoalLaw) -> Result<Vec2> {
    let mut f = goal_force(g, q_v, law);
    for (k, o) in obstacles.iter().enumerate() {
        f += obstacle_force_tagged(o, k, q_v, Body::VirtualAgent)?;
    }
    Ok(f)
}

/// Total potential felt by robot `i`: FPF, repulsion from the other robots,
/// and obstacles. The goal does not act on robots directly.
pub fn robot_potential(
    fpf: &FpfParams,
    irp: &InterRobotParams,
    obstacles: &[Obstacle],
    robots: &[Robot],
    i: usize,
    q_v: Vec2,
) -> f64 {
    let q = robots[i].position;
    let mut u = fpf::eval_fpf(fpf, q, q_v);
    for (j, r) in robots.iter().enumerate() {
        if j != i {
            u += inter_robot_potential(irp, q, r.position);
        }
    }
    u + obstacles.iter().map(|o| obstacle_potential(o, q)).sum::<f64>()
}

/// `−∇_i U_i` for robot `i`. Degenerate distances name the offending pair.
pub fn robot_force(
    fpf: &FpfParams,
    irp: &InterRobotParams,
    obstacles: &[Obstacle],
    robots: &[Robot],
    i: usize,
    q_v: Vec2,
) -> Result<Vec2> {
    let q = robots[i].position;
    let mut f = fpf::fpf_force(fpf, q, q_v);
    for (j, r) in robots.iter().enumerate() {
        if j == i {
            continue;
        }
        let (u, d) = direction(q, r.position, Body::Robot(i), Body::Robot(j))?;
        f += u * (irp.k_a * irp.sigma_r * (-irp.sigma_r * d).exp());
    }
    for (k, o) in obstacles.iter().enumerate() {
        f += obstacle_force_tagged(o, k, q, Body::Robot(i))?;
    }
    Ok(f)
}
