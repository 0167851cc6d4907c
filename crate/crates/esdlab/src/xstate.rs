//! X-form density matrices: the eight real degrees of freedom, the kinetic
//! equations they obey under the secular master equation, the four initial
//! state families, and their closed-form time-domain solutions.
//!
//! An X-state stores populations a, b, c, d on |11>, |10>, |01>, |00> and
//! coherences w = <11|rho|00>, z = <10|rho|01>. The secular evolution closes
//! on this family, which is what makes the analytic solutions possible.

use crate::dynamics::{DensityMatrix, DynamicsError};
use crate::qmatrix::CMat4;
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Population sum / nonnegativity slack for a valid X-state.
pub const XSTATE_TOL: f64 = 1e-9;
/// Population-sum drift allowed over a kinetic integration.
pub const KINETIC_DRIFT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum XStateError {
    #[error("{family} parameter {value} outside [{min}, {max}]")]
    ParameterOutOfRange {
        family: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("matrix is not X-form (max off-X entry = {deviation:.3e})")]
    NotXForm { deviation: f64 },
    #[error("invalid X-state: {0}")]
    InvalidState(String),
    #[error("invalid integration step: {0}")]
    InvalidStep(String),
    #[error("population sum drifted to {sum} at t = {time}")]
    SumDrift { time: f64, sum: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// The eight real degrees of freedom of an X-form density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XState {
    /// Population of |11>.
    pub a: f64,
    /// Population of |10>.
    pub b: f64,
    /// Population of |01>.
    pub c: f64,
    /// Population of |00>.
    pub d: f64,
    /// Coherence <11|rho|00>.
    pub w: C64,
    /// Coherence <10|rho|01>.
    pub z: C64,
}

impl XState {
    pub fn validate(&self) -> Result<(), XStateError> {
        let sum = self.a + self.b + self.c + self.d;
        if (sum - 1.0).abs() > XSTATE_TOL {
            return Err(XStateError::InvalidState(format!(
                "population sum {sum} != 1"
            )));
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if v < -XSTATE_TOL || !v.is_finite() {
                return Err(XStateError::InvalidState(format!(
                    "population {name} = {v}"
                )));
            }
        }
        if self.w.norm_sqr() > self.a * self.d + XSTATE_TOL {
            return Err(XStateError::InvalidState(format!(
                "|w|^2 = {} exceeds a*d = {}",
                self.w.norm_sqr(),
                self.a * self.d
            )));
        }
        if self.z.norm_sqr() > self.b * self.c + XSTATE_TOL {
            return Err(XStateError::InvalidState(format!(
                "|z|^2 = {} exceeds b*c = {}",
                self.z.norm_sqr(),
                self.b * self.c
            )));
        }
        Ok(())
    }

    /// Embed into the full 4x4 density matrix.
    pub fn to_density(&self) -> Result<DensityMatrix, XStateError> {
        self.validate()?;
        let mut m = CMat4::zero();
        m.0[0][0] = C64::new(self.a, 0.0);
        m.0[1][1] = C64::new(self.b, 0.0);
        m.0[2][2] = C64::new(self.c, 0.0);
        m.0[3][3] = C64::new(self.d, 0.0);
        m.0[0][3] = self.w;
        m.0[3][0] = self.w.conj();
        m.0[1][2] = self.z;
        m.0[2][1] = self.z.conj();
        DensityMatrix::new(m).map_err(XStateError::from)
    }

    /// Read back the X components of a density matrix without checking that
    /// the off-X entries vanish.
    pub fn components_of(rho: &DensityMatrix) -> XState {
        let m = rho.matrix();
        XState {
            a: m.0[0][0].re,
            b: m.0[1][1].re,
            c: m.0[2][2].re,
            d: m.0[3][3].re,
            w: m.0[0][3],
            z: m.0[1][2],
        }
    }

    /// Extract an X-state, requiring the off-X entries to vanish within tol.
    pub fn from_density(rho: &DensityMatrix, tol: f64) -> Result<XState, XStateError> {
        let dev = off_x_norm(rho.matrix());
        if dev > tol {
            return Err(XStateError::NotXForm { deviation: dev });
        }
        Ok(Self::components_of(rho))
    }
}

/// Largest entry modulus outside the X pattern (diagonal + antidiagonal).
pub fn off_x_norm(m: &CMat4) -> f64 {
    let mut best = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i != j && i + j != 3 {
                best = best.max(m.0[i][j].norm());
            }
        }
    }
    best
}

/// The four initial-state families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilySpec {
    /// Singlet/identity mixture with fidelity f in [1/4, 1].
    Werner { f: f64 },
    /// One-parameter X family with a shared one-excitation coherence block,
    /// alpha in [0, 1] weighting the doubly-excited vs ground population.
    Ye { alpha: f64 },
    /// Diagonal single-excitation mixture (1-p)|10><10| + p|01><01|.
    EgGe { p: f64 },
    /// Diagonal zero/two-excitation mixture s|11><11| + (1-s)|00><00|.
    EeGg { s: f64 },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Werner { .. } => "werner",
            FamilySpec::Ye { .. } => "ye",
            FamilySpec::EgGe { .. } => "egge",
            FamilySpec::EeGg { .. } => "eegg",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            FamilySpec::Werner { f } => f,
            FamilySpec::Ye { alpha } => alpha,
            FamilySpec::EgGe { p } => p,
            FamilySpec::EeGg { s } => s,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            FamilySpec::Werner { .. } => (0.25, 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<(), XStateError> {
        let (min, max) = self.bounds();
        let value = self.parameter();
        if !(value >= min && value <= max) {
            return Err(XStateError::ParameterOutOfRange {
                family: self.name(),
                value,
                min,
                max,
            });
        }
        Ok(())
    }
}

/// Initial X-state of the given family.
///
/// Orientation convention: the family parameter weights the doubly-excited
/// population. For the `ye` family this places alpha/3 on |11> so that the
/// undriven sudden-death threshold sits at alpha = 1/3, and for `eegg` it
/// places s on |11>.
pub fn make_initial(spec: &FamilySpec) -> Result<XState, XStateError> {
    spec.validate()?;
    let x = match *spec {
        FamilySpec::Werner { f } => XState {
            a: (1.0 - f) / 3.0,
            b: (1.0 + 2.0 * f) / 6.0,
            c: (1.0 + 2.0 * f) / 6.0,
            d: (1.0 - f) / 3.0,
            w: C64::new(0.0, 0.0),
            z: C64::new((1.0 - 4.0 * f) / 6.0, 0.0),
        },
        FamilySpec::Ye { alpha } => XState {
            a: alpha / 3.0,
            b: 1.0 / 3.0,
            c: 1.0 / 3.0,
            d: (1.0 - alpha) / 3.0,
            w: C64::new(0.0, 0.0),
            z: C64::new(1.0 / 3.0, 0.0),
        },
        FamilySpec::EgGe { p } => XState {
            a: 0.0,
            b: 1.0 - p,
            c: p,
            d: 0.0,
            w: C64::new(0.0, 0.0),
            z: C64::new(0.0, 0.0),
        },
        FamilySpec::EeGg { s } => XState {
            a: s,
            b: 0.0,
            c: 0.0,
            d: 1.0 - s,
            w: C64::new(0.0, 0.0),
            z: C64::new(0.0, 0.0),
        },
    };
    Ok(x)
}

/// Time derivative of an X-state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XStateDeriv {
    pub da: f64,
    pub db: f64,
    pub dc: f64,
    pub dd: f64,
    pub dw: C64,
    pub dz: C64,
}

/// Kinetic equations: the restriction of the secular master equation to the
/// X family.
///
/// da/dt = (3G/8)(b + c - 2a) + (i wc/4)(w - w*)
/// db/dt = (3G/8)(a + d - 2b) + (3i wc/4)(z - z*)
/// dc/dt = (3G/8)(a + d - 2c) - (3i wc/4)(z - z*)
/// dd/dt = (3G/8)(b + c - 2d) - (i wc/4)(w - w*)
/// dz/dt = (G/8)(w + w* - 10 z) + (3i wc/4)(b - c)
/// dw/dt = (G/8)(z + z* - 10 w) + (i wc/4)(a - d)
///
/// The population coherent terms carry the same 1:3 weighting as the z and w
/// equations; anything else breaks the term-by-term match with the full
/// secular generator (see the cross-check tests).
pub fn kinetic_rhs(x: &XState, gamma: f64, omega_c: f64) -> XStateDeriv {
    debug_assert!(gamma >= 0.0);
    let g38 = 0.375 * gamma;
    let g8 = 0.125 * gamma;
    // i (w - w*) = -2 Im w  and  i (z - z*) = -2 Im z, both real.
    let iw = -2.0 * x.w.im;
    let iz = -2.0 * x.z.im;
    XStateDeriv {
        da: g38 * (x.b + x.c - 2.0 * x.a) + 0.25 * omega_c * iw,
        db: g38 * (x.a + x.d - 2.0 * x.b) + 0.75 * omega_c * iz,
        dc: g38 * (x.a + x.d - 2.0 * x.c) - 0.75 * omega_c * iz,
        dd: g38 * (x.b + x.c - 2.0 * x.d) - 0.25 * omega_c * iw,
        dz: (x.w + x.w.conj() - x.z * 10.0) * g8
            + C64::new(0.0, 0.75 * omega_c * (x.b - x.c)),
        dw: (x.z + x.z.conj() - x.w * 10.0) * g8
            + C64::new(0.0, 0.25 * omega_c * (x.a - x.d)),
    }
}

/// RK4 on the eight real components of the X-state.
pub fn evolve_kinetic(
    x0: &XState,
    gamma: f64,
    omega_c: f64,
    t_max: f64,
    dt: f64,
) -> Result<Vec<(f64, XState)>, XStateError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(XStateError::InvalidStep(format!("dt = {dt}")));
    }
    if t_max < dt {
        return Err(XStateError::InvalidStep(format!(
            "t_max = {t_max} is smaller than dt = {dt}"
        )));
    }
    if gamma < 0.0 {
        return Err(XStateError::InvalidState(format!("gamma = {gamma}")));
    }

    fn pack(x: &XState) -> [f64; 8] {
        [x.a, x.b, x.c, x.d, x.w.re, x.w.im, x.z.re, x.z.im]
    }
    fn unpack(v: &[f64; 8]) -> XState {
        XState {
            a: v[0],
            b: v[1],
            c: v[2],
            d: v[3],
            w: C64::new(v[4], v[5]),
            z: C64::new(v[6], v[7]),
        }
    }
    let deriv = |v: &[f64; 8]| -> [f64; 8] {
        let d = kinetic_rhs(&unpack(v), gamma, omega_c);
        [d.da, d.db, d.dc, d.dd, d.dw.re, d.dw.im, d.dz.re, d.dz.im]
    };
    let axpy = |v: &[f64; 8], k: &[f64; 8], h: f64| -> [f64; 8] {
        let mut out = *v;
        for i in 0..8 {
            out[i] += h * k[i];
        }
        out
    };

    let n = (t_max / dt).round().max(1.0) as usize;
    let mut samples = Vec::with_capacity(n + 1);
    samples.push((0.0, *x0));
    let mut v = pack(x0);
    for step in 1..=n {
        let k1 = deriv(&v);
        let k2 = deriv(&axpy(&v, &k1, dt / 2.0));
        let k3 = deriv(&axpy(&v, &k2, dt / 2.0));
        let k4 = deriv(&axpy(&v, &k3, dt));
        for i in 0..8 {
            v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = step as f64 * dt;
        let sum = v[0] + v[1] + v[2] + v[3];
        if (sum - 1.0).abs() > KINETIC_DRIFT_TOL {
            return Err(XStateError::SumDrift { time: t, sum });
        }
        samples.push((t, unpack(&v)));
    }
    Ok(samples)
}

/// Evaluate cosh(sqrt(k2) x) and sinh(sqrt(k2) x)/sqrt(k2) for k2 of either
/// sign, staying real throughout: for k2 < 0 this is cos(|k| x) and
/// sin(|k| x)/|k|, and for k2 = 0 it is (1, x). Because only the square
/// enters, both results are even in the choice of square-root branch.
pub fn even_hyperbolic(kappa_sq: f64, x: f64) -> (f64, f64) {
    if kappa_sq > 0.0 {
        let k = kappa_sq.sqrt();
        (f64::cosh(k * x), f64::sinh(k * x) / k)
    } else if kappa_sq < 0.0 {
        let k = (-kappa_sq).sqrt();
        (f64::cos(k * x), f64::sin(k * x) / k)
    } else {
        (1.0, x)
    }
}

fn eta_powers(gamma: f64, t: f64) -> (f64, f64, f64) {
    let eta = (-gamma * t / 2.0).exp();
    (eta, eta * eta, eta * eta * eta)
}

/// Closed-form Werner evolution. Independent of the coupling: the Werner
/// symmetry (a = d, b = c, real coherences) kills every coupling term in the
/// kinetic equations, so the signature takes no omega_c.
pub fn werner_solution(f: f64, gamma: f64, t: f64) -> Result<XState, XStateError> {
    FamilySpec::Werner { f }.validate()?;
    let (eta, e2, e3) = eta_powers(gamma, t);
    let q = 4.0 * f - 1.0;
    // Both coherences live on the eta^2/eta^3 relaxation modes and keep the
    // initial sign of z(0) = (1-4f)/6.
    Ok(XState {
        a: (3.0 - q * e3) / 12.0,
        b: (3.0 + q * e3) / 12.0,
        c: (3.0 + q * e3) / 12.0,
        d: (3.0 - q * e3) / 12.0,
        w: C64::new(-(q / 12.0) * e2 * (1.0 - eta), 0.0),
        z: C64::new(-(q / 12.0) * e2 * (1.0 + eta), 0.0),
    })
}

/// Closed-form evolution of the `ye` family. The (a - d, Im w) sector
/// rotates/damps at the rate pair governed by zeta^2 = Gamma^2 - 4 omega_c^2,
/// entering only through `even_hyperbolic`.
pub fn ye_solution(alpha: f64, gamma: f64, omega_c: f64, t: f64) -> Result<XState, XStateError> {
    FamilySpec::Ye { alpha }.validate()?;
    let (eta, e2, e3) = eta_powers(gamma, t);
    let (ch, sh) = even_hyperbolic(gamma * gamma - 4.0 * omega_c * omega_c, t / 4.0);
    let g = 2.0 * alpha - 1.0;
    let envelope = ch + gamma * sh;
    Ok(XState {
        a: (3.0 - e3 + 2.0 * g * envelope * e2) / 12.0,
        b: (3.0 + e3) / 12.0,
        c: (3.0 + e3) / 12.0,
        d: (3.0 - e3 - 2.0 * g * envelope * e2) / 12.0,
        // Real part is the coupling-free coherence relaxation; the imaginary
        // part is sourced by the population imbalance a - d.
        w: C64::new(e2 * (1.0 - eta) / 6.0, g * omega_c * sh * e2 / 3.0),
        z: C64::new(e2 * (1.0 + eta) / 6.0, 0.0),
    })
}

/// Closed-form evolution of the single-excitation diagonal family. The
/// (b - c, Im z) sector oscillates at the rate pair governed by
/// xi^2 = Gamma^2 - 36 omega_c^2.
pub fn egge_solution(p: f64, gamma: f64, omega_c: f64, t: f64) -> Result<XState, XStateError> {
    FamilySpec::EgGe { p }.validate()?;
    let (_, e2, e3) = eta_powers(gamma, t);
    let (ch, sh) = even_hyperbolic(gamma * gamma - 36.0 * omega_c * omega_c, t / 4.0);
    // Oriented so b(0) = 1 - p on |10>; the coherence z is sourced by b - c.
    let r = 1.0 - 2.0 * p;
    let envelope = ch + gamma * sh;
    Ok(XState {
        a: (1.0 - e3) / 4.0,
        b: (1.0 + e3 + 2.0 * r * envelope * e2) / 4.0,
        c: (1.0 + e3 - 2.0 * r * envelope * e2) / 4.0,
        d: (1.0 - e3) / 4.0,
        w: C64::new(0.0, 0.0),
        z: C64::new(0.0, 3.0 * omega_c * r * sh * e2),
    })
}

/// Closed-form evolution of the zero/two-excitation diagonal family. The
/// (a - d, Im w) sector carries the same zeta^2 = Gamma^2 - 4 omega_c^2 rate
/// pair as the `ye` family, which is what sets the revival period 2 pi /
/// omega_c of |w|.
pub fn eegg_solution(s: f64, gamma: f64, omega_c: f64, t: f64) -> Result<XState, XStateError> {
    FamilySpec::EeGg { s }.validate()?;
    let (_, e2, e3) = eta_powers(gamma, t);
    let (ch, sh) = even_hyperbolic(gamma * gamma - 4.0 * omega_c * omega_c, t / 4.0);
    let u = 2.0 * s - 1.0;
    let envelope = ch + gamma * sh;
    Ok(XState {
        a: (1.0 + e3 + 2.0 * u * envelope * e2) / 4.0,
        b: (1.0 - e3) / 4.0,
        c: (1.0 - e3) / 4.0,
        d: (1.0 + e3 - 2.0 * u * envelope * e2) / 4.0,
        // Purely imaginary, sourced by a - d with a(0) = s.
        w: C64::new(0.0, u * omega_c * sh * e2),
        z: C64::new(0.0, 0.0),
    })
}

/// Dispatch to the closed form of the given family.
pub fn family_solution(
    spec: &FamilySpec,
    gamma: f64,
    omega_c: f64,
    t: f64,
) -> Result<XState, XStateError> {
    match *spec {
        FamilySpec::Werner { f } => werner_solution(f, gamma, t),
        FamilySpec::Ye { alpha } => ye_solution(alpha, gamma, omega_c, t),
        FamilySpec::EgGe { p } => egge_solution(p, gamma, omega_c, t),
        FamilySpec::EeGg { s } => eegg_solution(s, gamma, omega_c, t),
    }
}
