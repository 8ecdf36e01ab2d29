//! Self-checks behind `couplesim validate`.
//!
//! The kinematics checks compare the library against a second derivation
//! that walks the gear train one mesh at a time; the consensus checks run
//! the rendezvous dynamics on random swarms.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::control::{coupling_reached, rendezvous_euler_step, SwarmPositions};
use crate::engine::resolve_line_contacts;
use crate::kinematics::{
    motor_speeds_from_twist_consistent, motor_speeds_from_twist_literal, wheel_rates_from_twist,
    wheel_speed_from_motor, BodyTwist, DrivetrainParams, GearTrain,
};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

pub const KINEMATICS_SAMPLES: usize = 1000;
pub const KINEMATICS_TOLERANCE: f64 = 1e-12;
pub const CONSENSUS_COUNTS: [usize; 4] = [2, 3, 6, 9];
pub const CONSENSUS_TRIALS: usize = 100;
pub const CONSENSUS_STEP: f64 = 0.1;

/// Runs every check with randomness drawn from `seed`.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    let mut out = kinematics_checks(seed);
    out.extend(consensus_checks(seed));
    out
}

fn pitch_radius(m: f64, z: u32) -> f64 {
    0.5 * m * f64::from(z)
}

/// Rim speed, mesh by mesh: equal rim speeds at each contact, shared shaft
/// between gears 2 and 3.
fn oracle_wheel_speed(omega1: f64, g: &GearTrain) -> f64 {
    let v1 = omega1 * pitch_radius(g.module_coeff, g.z1);
    let omega2 = v1 / pitch_radius(g.module_coeff, g.z2);
    let omega3 = omega2;
    omega3 * pitch_radius(g.module_coeff, g.z3)
}

/// Wheel rates from the ground speed of each wheel contact point.
fn oracle_wheel_rates(t: BodyTwist, d: &DrivetrainParams) -> (f64, f64) {
    let half = 0.5 * d.wheel_base;
    (
        (t.v_x + t.omega * half) / d.wheel_radius,
        (t.v_x - t.omega * half) / d.wheel_radius,
    )
}

/// Motor speed that produces a given wheel-gear rim speed.
fn oracle_motor_speed(rim: f64, g: &GearTrain) -> f64 {
    let omega3 = rim / pitch_radius(g.module_coeff, g.z3);
    let v1 = omega3 * pitch_radius(g.module_coeff, g.z2);
    v1 / pitch_radius(g.module_coeff, g.z1)
}

fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

fn random_gears(rng: &mut ChaCha8Rng) -> GearTrain {
    GearTrain {
        module_coeff: rng.random_range(0.2..2.0),
        z1: rng.random_range(6..80),
        z2: rng.random_range(6..80),
        z3: rng.random_range(6..80),
        z4: rng.random_range(6..120),
    }
}

fn random_drive(rng: &mut ChaCha8Rng) -> DrivetrainParams {
    DrivetrainParams {
        wheel_base: rng.random_range(10.0..120.0),
        wheel_radius: rng.random_range(3.0..60.0),
        max_motor_speed: None,
    }
}

pub fn kinematics_checks(seed: u64) -> Vec<CheckResult> {
    let mut rng = stream_rng(seed, 1);
    let (mut e_wheel, mut e_rates, mut e_lit, mut e_con) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..KINEMATICS_SAMPLES {
        let g = random_gears(&mut rng);
        let d = random_drive(&mut rng);
        let omega1: f64 = rng.random_range(-200.0..200.0);
        let t = BodyTwist::new(
            rng.random_range(-300.0..300.0),
            rng.random_range(-10.0..10.0),
        );

        let w = oracle_wheel_speed(omega1, &g);
        e_wheel = e_wheel.max(rel_err(wheel_speed_from_motor(omega1, &g), w, w.abs()));

        // scale by the size of the summed terms so cancellation between
        // forward and turning speed does not inflate the relative error
        let term = (t.v_x.abs() + 0.5 * (t.omega * d.wheel_base).abs()) / d.wheel_radius;
        let (r, l) = wheel_rates_from_twist(t, &d);
        let (ro, lo) = oracle_wheel_rates(t, &d);
        e_rates = e_rates.max(rel_err(r, ro, term)).max(rel_err(l, lo, term));

        let (mr, ml) = motor_speeds_from_twist_consistent(t, &g, &d);
        let (mro, mlo) = (
            oracle_motor_speed(ro * d.wheel_radius, &g),
            oracle_motor_speed(lo * d.wheel_radius, &g),
        );
        let mscale = oracle_motor_speed(term * d.wheel_radius, &g).abs();
        e_con = e_con
            .max(rel_err(mr, mro, mscale))
            .max(rel_err(ml, mlo, mscale));

        let (lr, ll) = motor_speeds_from_twist_literal(t, &g, &d);
        let lscale = mscale / d.wheel_radius;
        e_lit = e_lit
            .max(rel_err(lr, mro / d.wheel_radius, lscale))
            .max(rel_err(ll, mlo / d.wheel_radius, lscale));
    }
    let check = |name: &str, e: f64| {
        CheckResult::new(
            name,
            e <= KINEMATICS_TOLERANCE,
            format!("max relative error {e:.3e} over {KINEMATICS_SAMPLES} samples"),
        )
    };
    let reference = wheel_speed_from_motor(52.0, &GearTrain::default());
    vec![
        check("wheel speed from motor", e_wheel),
        check("wheel rates from twist", e_rates),
        check("motor speeds (consistent units)", e_con),
        check("motor speeds (extra 1/R form)", e_lit),
        CheckResult::new(
            "reference gear train at 52 rad/s",
            reference == 32.0,
            format!("v4 = {reference} mm/s"),
        ),
    ]
}

fn spread(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn order(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    idx
}

pub fn consensus_checks(seed: u64) -> Vec<CheckResult> {
    let body = 50.0;
    let tol = 2.0;
    let mut out = Vec::new();
    for (k, &n) in CONSENSUS_COUNTS.iter().enumerate() {
        let mut rng = stream_rng(seed, 100 + k as u64);
        let (mut contracts, mut mean_err, mut ordered, mut coupled) = (true, 0.0f64, true, true);
        let mut worst_steps = 0;
        for _ in 0..CONSENSUS_TRIALS {
            let init: Vec<f64> = (0..n).map(|_| rng.random_range(-1000.0..1000.0)).collect();
            let m0 = mean(&init);
            let o0 = order(&init);

            // free dynamics
            let mut x = init.clone();
            for _ in 0..50 {
                let before = spread(&x);
                rendezvous_euler_step(&mut x, CONSENSUS_STEP).expect("n >= 2");
                contracts &= spread(&x) < before;
                mean_err = mean_err.max((mean(&x) - m0).abs());
                ordered &= order(&x) == o0;
            }

            // with bodies that cannot overlap
            let mut x = init.clone();
            let mut steps = 0;
            loop {
                let s = SwarmPositions::new(x.clone()).expect("finite");
                if coupling_reached(&s, body, tol) {
                    break;
                }
                if steps == 10_000 {
                    coupled = false;
                    break;
                }
                rendezvous_euler_step(&mut x, CONSENSUS_STEP).expect("n >= 2");
                resolve_line_contacts(&mut x, body);
                mean_err = mean_err.max((mean(&x) - m0).abs());
                ordered &= order(&x) == o0;
                steps += 1;
            }
            worst_steps = worst_steps.max(steps);
        }
        out.push(CheckResult::new(
            &format!("rendezvous N={n}: spread contracts"),
            contracts,
            format!("{CONSENSUS_TRIALS} random starts, 50 steps of h={CONSENSUS_STEP}"),
        ));
        out.push(CheckResult::new(
            &format!("rendezvous N={n}: mean preserved"),
            mean_err <= 1e-9,
            format!("max drift {mean_err:.3e}"),
        ));
        out.push(CheckResult::new(
            &format!("rendezvous N={n}: order preserved"),
            ordered,
            String::new(),
        ));
        out.push(CheckResult::new(
            &format!("rendezvous N={n}: coupling reached"),
            coupled,
            format!("worst case {worst_steps} steps"),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all(2024) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
