mod common;

use fpf_formation::dynamics::{compute_forces, World, WorldState};
use fpf_formation::exec::Execution;
use fpf_formation::fields::{self, Goal, GoalLaw, InterRobotParams, Obstacle, Robot, VirtualAgent};
use fpf_formation::fpf::{self, FpfParams};
use fpf_formation::Vec2;
use proptest::prelude::*;

const P: FpfParams = FpfParams::new(2.0, 1.0, 2.4);

fn point(r: f64) -> impl Strategy<Value = Vec2> {
    (-r..r, -r..r).prop_map(|(x, y)| Vec2::new(x, y))
}

fn close(a: Vec2, b: Vec2) -> bool {
    (a - b).norm() <= 1e-12 * a.norm().max(1.0)
}

fn robots(ps: &[Vec2]) -> Vec<Robot> {
    ps.iter().enumerate().map(|(id, &position)| Robot { id, position, velocity: Vec2::ZERO, body_radius: 0.01 }).collect()
}

fn separated(ps: &[Vec2], min: f64) -> bool {
    ps.iter().enumerate().all(|(i, a)| ps[i + 1..].iter().all(|b| a.distance(*b) >= min))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn newton_pairs_are_exact(a in point(3.0), b in point(3.0), k_a in 0.01f64..2.0, sigma_r in 0.5f64..10.0) {
        prop_assume!(a.distance(b) > 1e-6);
        let p = InterRobotParams { k_a, sigma_r };
        let ij = fields::inter_robot_force(&p, a, b).unwrap();
        let ji = fields::inter_robot_force(&p, b, a).unwrap();
        prop_assert_eq!(ij, -ji);
    }

    #[test]
    fn forces_rotate_with_the_configuration(
        q_v in point(2.0),
        rel in proptest::collection::vec(point(1.5), 2..6),
        src in proptest::collection::vec(point(3.0), 1..8),
        goal in point(5.0),
        theta in 0.0f64..6.3,
        printed in any::<bool>(),
    ) {
        let ps: Vec<Vec2> = rel.iter().map(|&r| q_v + r).collect();
        prop_assume!(separated(&ps, 1e-3));
        prop_assume!(ps.iter().chain([&q_v]).all(|p| src.iter().all(|s| s.distance(*p) > 1e-3)));
        let law = if printed { GoalLaw::Printed } else { GoalLaw::Gradient };
        let rot = |p: Vec2| q_v + (p - q_v).rotated(theta);
        let irp = InterRobotParams::default_for(&P);
        let obs = [Obstacle::new(src.clone(), 1.0, 2.0)];
        let obs_r = [Obstacle::new(src.iter().map(|&s| rot(s)).collect(), 1.0, 2.0)];
        let g = Goal { position: goal, lambda: 0.3 };
        let g_r = Goal { position: rot(goal), ..g };
        let (rs, rs_r) = (robots(&ps), robots(&ps.iter().map(|&p| rot(p)).collect::<Vec<_>>()));

        for i in 0..ps.len() {
            let f = fpf::fpf_force(&P, ps[i], q_v).rotated(theta);
            prop_assert!(close(f, fpf::fpf_force(&P, rot(ps[i]), q_v)));
            let f = fields::inter_robot_force(&irp, ps[i], ps[(i + 1) % ps.len()]).unwrap().rotated(theta);
            prop_assert!(close(f, fields::inter_robot_force(&irp, rot(ps[i]), rot(ps[(i + 1) % ps.len()])).unwrap()));
            let f = fields::obstacle_force(&obs[0], ps[i]).unwrap().rotated(theta);
            prop_assert!(close(f, fields::obstacle_force(&obs_r[0], rot(ps[i])).unwrap()));
            let f = fields::robot_force(&P, &irp, &obs, &rs, i, q_v).unwrap().rotated(theta);
            prop_assert!(close(f, fields::robot_force(&P, &irp, &obs_r, &rs_r, i, q_v).unwrap()));
        }
        let f = fields::goal_force(&g, q_v, law).rotated(theta);
        prop_assert!(close(f, fields::goal_force(&g_r, q_v, law)));
        let f = fields::virtual_agent_force(&g, &obs, q_v, law).unwrap().rotated(theta);
        prop_assert!(close(f, fields::virtual_agent_force(&g_r, &obs_r, q_v, law).unwrap()));
    }

    #[test]
    fn robot_forces_ignore_the_goal(
        q_v in point(1.0),
        rel in proptest::collection::vec(point(1.5), 1..6),
        goal_a in point(10.0),
        goal_b in point(10.0),
        lambda_b in 1e-4f64..10.0,
        printed in any::<bool>(),
    ) {
        let ps: Vec<Vec2> = rel.iter().map(|&r| q_v + r).collect();
        prop_assume!(separated(&ps, 1e-3));
        let state = WorldState {
            step: 0,
            time: 0.0,
            virtual_agent: VirtualAgent { position: q_v, velocity: Vec2::ZERO },
            robots: robots(&ps),
        };
        let world = |goal, lambda, goal_law| World {
            fpf: P,
            inter_robot: InterRobotParams::default_for(&P),
            goal: Goal { position: goal, lambda },
            goal_law,
            obstacles: vec![Obstacle::new(vec![Vec2::new(3.0, 3.0)], 1.0, 2.0)],
        };
        let law_b = if printed { GoalLaw::Printed } else { GoalLaw::Gradient };
        let a = compute_forces(&state, &world(goal_a, 0.5, GoalLaw::Gradient), Execution::Sequential).unwrap();
        let b = compute_forces(&state, &world(goal_b, lambda_b, law_b), Execution::Sequential).unwrap();
        prop_assert_eq!(a.robots, b.robots);
    }

    #[test]
    fn robot_force_is_minus_gradient(
        q_v in point(1.0),
        rel in proptest::collection::vec(point(1.5), 1..6),
        src in proptest::collection::vec(point(3.0), 0..6),
        sigma_o in 0.5f64..20.0,
        i in 0usize..6,
    ) {
        let ps: Vec<Vec2> = rel.iter().map(|&r| q_v + r).collect();
        prop_assume!(separated(&ps, 0.01));
        prop_assume!(ps.iter().all(|p| src.iter().all(|s| s.distance(*p) > 0.01)));
        let i = i % ps.len();
        let irp = InterRobotParams { k_a: 0.5, sigma_r: 5.0 };
        let obs = [Obstacle::new(src, 0.7, sigma_o)];
        let rs = robots(&ps);
        let u = |q: Vec2| {
            let mut moved = rs.clone();
            moved[i].position = q;
            fields::robot_potential(&P, &irp, &obs, &moved, i, q_v)
        };
        let fd = -common::fd_gradient(u, ps[i], 1e-3 / sigma_o.max(5.0));
        let f = fields::robot_force(&P, &irp, &obs, &rs, i, q_v).unwrap();
        prop_assert!(common::rel_err(f, fd, 1e-12) < 1e-6, "F = {f:?}, fd = {fd:?}");
    }

    #[test]
    fn virtual_agent_force_is_minus_gradient(
        q in point(3.0),
        goal in point(5.0),
        lambda in 1e-4f64..2.0,
        src in proptest::collection::vec(point(3.0), 0..6),
        printed in any::<bool>(),
    ) {
        prop_assume!(src.iter().all(|s| s.distance(q) > 0.01));
        let law = if printed { GoalLaw::Printed } else { GoalLaw::Gradient };
        let g = Goal { position: goal, lambda };
        let obs = [Obstacle::new(src, 1.0, 4.0)];
        let fd = -common::fd_gradient(|x| fields::virtual_agent_potential(&g, &obs, x, law), q, 2.5e-4);
        let f = fields::virtual_agent_force(&g, &obs, q, law).unwrap();
        prop_assert!(common::rel_err(f, fd, 1e-12) < 1e-6, "F = {f:?}, fd = {fd:?}");
    }
}
