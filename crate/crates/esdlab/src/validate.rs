//! Self-check suite: cross-validates the analytic solutions, the kinetic
//! equations, the full secular generator, and the two concurrence routes
//! against each other. Backs the `validate` subcommand and doubles as a
//! library-level oracle for tests.

use crate::dynamics::{
    integrate, rotating_frame_generator, rhs_secular, SystemParams,
};
use crate::entanglement::{concurrence_general, concurrence_x};
use crate::xstate::{
    evolve_kinetic, family_solution, kinetic_rhs, make_initial, FamilySpec, XState, XStateDeriv,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Valid random X-state: random simplex populations with coherences drawn
/// inside their positivity disks.
pub fn random_xstate(rng: &mut ChaCha8Rng) -> XState {
    let mut pops = [0.0f64; 4];
    let mut sum = 0.0;
    for p in pops.iter_mut() {
        *p = rng.gen_range(0.01..1.0);
        sum += *p;
    }
    for p in pops.iter_mut() {
        *p /= sum;
    }
    let wmag = (pops[0] * pops[3]).sqrt() * rng.gen_range(0.0..1.0);
    let zmag = (pops[1] * pops[2]).sqrt() * rng.gen_range(0.0..1.0);
    XState {
        a: pops[0],
        b: pops[1],
        c: pops[2],
        d: pops[3],
        w: C64::from_polar(wmag, rng.gen_range(0.0..std::f64::consts::TAU)),
        z: C64::from_polar(zmag, rng.gen_range(0.0..std::f64::consts::TAU)),
    }
}

fn max_entry_diff(x: &XState, y: &XState) -> f64 {
    [
        (x.a - y.a).abs(),
        (x.b - y.b).abs(),
        (x.c - y.c).abs(),
        (x.d - y.d).abs(),
        (x.w - y.w).norm(),
        (x.z - y.z).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Closed-form solution vs RK4 kinetic integration for one family:
/// `draws` random (parameter, coupling) pairs, entrywise over [0, 10].
pub fn closed_form_vs_kinetic(family: &'static str, draws: usize, dt_scale: f64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let u = rng.gen_range(0.0..1.0);
        let spec = match family {
            "werner" => FamilySpec::Werner { f: 0.25 + 0.75 * u },
            "ye" => FamilySpec::Ye { alpha: u },
            "egge" => FamilySpec::EgGe { p: u },
            "eegg" => FamilySpec::EeGg { s: u },
            other => panic!("unknown family {other}"),
        };
        let omega_c = rng.gen_range(0.0..20.0);
        let gamma = 1.0;
        let base: f64 = if omega_c > 0.0 {
            (0.01f64 / omega_c).min(1e-3)
        } else {
            1e-3
        };
        let dt = base * dt_scale;
        let x0 = make_initial(&spec).unwrap();
        let samples = evolve_kinetic(&x0, gamma, omega_c, 10.0, dt).unwrap();
        for (t, x) in samples.iter().step_by(25) {
            let sol = family_solution(&spec, gamma, omega_c, *t).unwrap();
            worst = worst.max(max_entry_diff(x, &sol));
        }
    }
    CheckResult {
        name: format!("closed-form vs kinetic ({family})"),
        max_deviation: worst,
        tolerance: 1e-6,
    }
}

/// Alternative kinetic right-hand side, substitutable for mutation tests.
pub type KineticRhs<'a> = &'a dyn Fn(&XState, f64, f64) -> XStateDeriv;

/// Kinetic equations vs the X-restriction of the full secular generator on
/// random X-states. `rhs` substitutes an alternative kinetic right-hand
/// side, which lets tests prove the check catches an injected sign error.
pub fn kinetic_vs_secular(samples: usize, rhs: Option<KineticRhs>) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let params = SystemParams::symmetric(1.0, 25.0, 5.0);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random_xstate(&mut rng);
        let rho = x.to_density().unwrap();
        let full = rhs_secular(&params, &rho).unwrap();
        let kin = match rhs {
            Some(f) => f(&x, 1.0, 5.0),
            None => kinetic_rhs(&x, 1.0, 5.0),
        };
        worst = worst
            .max((full.0[0][0].re - kin.da).abs())
            .max((full.0[1][1].re - kin.db).abs())
            .max((full.0[2][2].re - kin.dc).abs())
            .max((full.0[3][3].re - kin.dd).abs())
            .max((full.0[0][3] - kin.dw).norm())
            .max((full.0[1][2] - kin.dz).norm());
    }
    CheckResult {
        name: "kinetic rhs vs secular generator".into(),
        max_deviation: worst,
        tolerance: 1e-12,
    }
}

/// X-state concurrence fast path vs the Wootters formula.
pub fn x_vs_wootters(samples: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random_xstate(&mut rng);
        let rho = x.to_density().unwrap();
        let general = concurrence_general(&rho).unwrap();
        worst = worst.max((general - concurrence_x(&x)).abs());
    }
    CheckResult {
        name: "concurrence_x vs Wootters".into(),
        max_deviation: worst,
        tolerance: 1e-8,
    }
}

/// RK4 against the exact two-channel amplitude-damping decay.
pub fn damping_vs_exact(dt_scale: f64) -> CheckResult {
    let params = SystemParams::default();
    let gen = rotating_frame_generator(&params).unwrap();
    let rho0 = crate::dynamics::DensityMatrix::basis_state(0);
    let dt = 1e-3 * dt_scale;
    let traj = integrate(|m| gen.apply(m), &rho0, 1.0, dt, "rotating-frame").unwrap();
    let mut worst = 0.0f64;
    for (t, s) in &traj.samples {
        worst = worst.max((s.population(0) - (-2.0 * t).exp()).abs());
    }
    CheckResult {
        name: "RK4 vs exact amplitude damping".into(),
        max_deviation: worst,
        tolerance: 1e-8,
    }
}

/// Concurrence invariance under the local unitary connecting the rotating
/// frame and the drive's interaction picture.
pub fn frame_invariance(samples: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random_xstate(&mut rng);
        let rho = x.to_density().unwrap();
        let t = rng.gen_range(0.0..2.0);
        let rotated = crate::dynamics::interaction_transform(&rho, t, 25.0);
        let c0 = concurrence_general(&rho).unwrap();
        let c1 = concurrence_general(&rotated).unwrap();
        worst = worst.max((c0 - c1).abs());
    }
    CheckResult {
        name: "concurrence frame invariance".into(),
        max_deviation: worst,
        tolerance: 1e-10,
    }
}

/// The full suite at the given step scale (1.0 = default steps).
pub fn run_all(dt_scale: f64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for family in ["werner", "ye", "egge", "eegg"] {
        out.push(closed_form_vs_kinetic(family, 8, dt_scale));
    }
    out.push(kinetic_vs_secular(100, None));
    out.push(x_vs_wootters(200));
    out.push(damping_vs_exact(dt_scale));
    out.push(frame_invariance(50));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes_all_checks() {
        for check in run_all(1.0) {
            assert!(
                check.passed(),
                "{}: {} > {}",
                check.name,
                check.max_deviation,
                check.tolerance
            );
        }
    }

    #[test]
    fn injected_sign_error_is_caught() {
        // Flip the sign of the coupling source in dz: the secular
        // cross-check must fail loudly.
        let broken = |x: &XState, gamma: f64, omega_c: f64| -> XStateDeriv {
            let mut d = kinetic_rhs(x, gamma, omega_c);
            d.dz -= C64::new(0.0, 1.5 * omega_c * (x.b - x.c));
            d
        };
        let check = kinetic_vs_secular(50, Some(&broken));
        assert!(!check.passed(), "mutation went undetected");
    }

    #[test]
    fn deviations_shrink_at_fourth_order() {
        let coarse = closed_form_vs_kinetic("ye", 4, 4.0);
        let fine = closed_form_vs_kinetic("ye", 4, 2.0);
        assert!(coarse.max_deviation > fine.max_deviation);
        let order = (coarse.max_deviation / fine.max_deviation).log2();
        assert!(
            order > 3.0,
            "observed order {order} ({} vs {})",
            coarse.max_deviation,
            fine.max_deviation
        );
    }
}
