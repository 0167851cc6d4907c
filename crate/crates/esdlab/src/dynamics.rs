//! Hamiltonians, Liouvilleans, and time integration for the two-qubit
//! density matrix.
//!
//! Three right-hand sides are provided:
//!
//! * the rotating-frame master equation with on-resonance drive terms and
//!   zero-temperature amplitude damping,
//! * the secular master equation obtained by time-averaging the dissipator
//!   in the drive's interaction picture (valid for Rabi frequency much
//!   larger than the relaxation rate),
//! * the undriven finite-temperature equation with thermal occupation
//!   numbers per reservoir.
//!
//! All rates are in units of a reference relaxation rate (Gamma = 1 by
//! default) and times in its inverse. Integration is classic fixed-step
//! fourth-order Runge-Kutta on the 32 real components of the matrix.

use crate::qmatrix::{
    embed_pauli, eigvals_hermitized, tensor, CMat2, CMat4, MatrixError, PauliAxis, Qubit,
};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Hermiticity and trace drift allowed for a valid density matrix.
pub const STATE_TOL: f64 = 1e-9;
/// Positivity floor: RK4 truncation accumulates in the smallest eigenvalue,
/// so it gets a looser tolerance than Hermiticity. Violations are errors,
/// never silently clamped (psd_sqrt is the one deliberate exception).
pub const POSITIVITY_TOL: f64 = -1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dissipator rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("secular equation precondition violated: {reason}")]
    SecularPreconditionViolated { reason: String },
    #[error("Larmor frequency must be positive, got {0}")]
    NonPositiveLarmor(f64),
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("invalid integration step: {0}")]
    InvalidStep(String),
    #[error("state invariant violated at t = {time}: {what}")]
    InvariantViolated { time: f64, what: String },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Physical rates and frequencies, all dimensionless in units of the
/// reference relaxation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub rabi1: f64,
    pub rabi2: f64,
    pub detuning1: f64,
    pub detuning2: f64,
    pub omega_xx: f64,
    pub omega_yy: f64,
    pub nbar1: f64,
    pub nbar2: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            gamma1: 1.0,
            gamma2: 1.0,
            rabi1: 0.0,
            rabi2: 0.0,
            detuning1: 0.0,
            detuning2: 0.0,
            omega_xx: 0.0,
            omega_yy: 0.0,
            nbar1: 0.0,
            nbar2: 0.0,
        }
    }
}

impl SystemParams {
    /// Symmetric parameter set: equal rates and drives on both qubits, the
    /// effective coupling split evenly between the X-X and Y-Y channels.
    pub fn symmetric(gamma: f64, rabi: f64, omega_c: f64) -> Self {
        SystemParams {
            gamma1: gamma,
            gamma2: gamma,
            rabi1: rabi,
            rabi2: rabi,
            omega_xx: omega_c / 2.0,
            omega_yy: omega_c / 2.0,
            ..Default::default()
        }
    }

    /// Effective coupling frequency in the rotating-wave approximation.
    pub fn omega_c(&self) -> f64 {
        self.omega_xx + self.omega_yy
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let nonneg = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("nbar1", self.nbar1),
            ("nbar2", self.nbar2),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(DynamicsError::InvalidParams(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        let finite = [
            self.rabi1,
            self.rabi2,
            self.detuning1,
            self.detuning2,
            self.omega_xx,
            self.omega_yy,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::InvalidParams(
                "frequencies must be finite".into(),
            ));
        }
        Ok(())
    }

    fn require_secular(&self) -> Result<(), DynamicsError> {
        if self.gamma1 != self.gamma2 {
            return Err(DynamicsError::SecularPreconditionViolated {
                reason: format!(
                    "relaxation rates must be equal (gamma1 = {}, gamma2 = {})",
                    self.gamma1, self.gamma2
                ),
            });
        }
        if self.detuning1 != 0.0 || self.detuning2 != 0.0 {
            return Err(DynamicsError::SecularPreconditionViolated {
                reason: "drives must be on resonance (zero detuning)".into(),
            });
        }
        if self.rabi1 != self.rabi2 {
            return Err(DynamicsError::SecularPreconditionViolated {
                reason: format!(
                    "Rabi frequencies must be equal (rabi1 = {}, rabi2 = {})",
                    self.rabi1, self.rabi2
                ),
            });
        }
        Ok(())
    }
}

/// A 4x4 Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(CMat4);

impl DensityMatrix {
    pub fn new(m: CMat4) -> Result<Self, DynamicsError> {
        let dev = m.herm_deviation();
        if dev > STATE_TOL {
            return Err(DynamicsError::InvariantViolated {
                time: 0.0,
                what: format!("Hermiticity deviation {dev:.3e}"),
            });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(DynamicsError::InvariantViolated {
                time: 0.0,
                what: format!("trace = {tr}"),
            });
        }
        let min = eigvals_hermitized(&m)[3];
        if min < POSITIVITY_TOL {
            return Err(DynamicsError::InvariantViolated {
                time: 0.0,
                what: format!("min eigenvalue {min:.3e}"),
            });
        }
        Ok(DensityMatrix(m))
    }

    /// Pure state |i><i| in the |11>,|10>,|01>,|00> basis.
    pub fn basis_state(index: usize) -> Self {
        let mut m = CMat4::zero();
        m.0[index][index] = C64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub(crate) fn from_validated(m: CMat4) -> Self {
        DensityMatrix(m)
    }

    pub fn matrix(&self) -> &CMat4 {
        &self.0
    }

    pub fn population(&self, index: usize) -> f64 {
        self.0 .0[index][index].re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigvals_hermitized(&self.0)[3]
    }
}

/// Uniform-grid samples of a density-matrix evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model: String,
    pub dt: f64,
    pub samples: Vec<(f64, DensityMatrix)>,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.samples.last().map(|(t, _)| *t).unwrap_or(0.0)
    }
}

/// Rotating-frame Hamiltonian: detuning and drive terms per qubit plus the
/// excitation-conserving coupling (omega_c/2)(sx sx + sy sy).
pub fn build_h_rf(params: &SystemParams) -> CMat4 {
    let sz1 = embed_pauli(PauliAxis::Z, Qubit::One);
    let sz2 = embed_pauli(PauliAxis::Z, Qubit::Two);
    let sx1 = embed_pauli(PauliAxis::X, Qubit::One);
    let sx2 = embed_pauli(PauliAxis::X, Qubit::Two);
    let xx = tensor(&crate::qmatrix::pauli_x(), &crate::qmatrix::pauli_x());
    let yy = tensor(&crate::qmatrix::pauli_y(), &crate::qmatrix::pauli_y());

    sz1 * (params.detuning1 / 2.0)
        + sz2 * (params.detuning2 / 2.0)
        + sx1 * (params.rabi1 / 2.0)
        + sx2 * (params.rabi2 / 2.0)
        + (xx + yy) * (params.omega_c() / 2.0)
}

/// Lindblad dissipator rate/2 (2 L rho L^dag - L^dag L rho - rho L^dag L).
pub fn dissipator(l: &CMat4, rate: f64, rho: &CMat4) -> Result<CMat4, DynamicsError> {
    if rate < 0.0 {
        return Err(DynamicsError::NegativeRate(rate));
    }
    if rate == 0.0 {
        return Ok(CMat4::zero());
    }
    let ld = l.dagger();
    let ldl = ld * *l;
    let out = *l * *rho * ld * 2.0 - ldl * *rho - *rho * ldl;
    Ok(out * (rate / 2.0))
}

/// Precomputed generator applying d(rho)/dt as a pure function of rho.
///
/// Terms are compiled once into the 16x16 superoperator acting on the
/// row-major vectorization of rho (A rho B maps to A (x) B^T) and stored as
/// a nonzero list, so one right-hand-side evaluation is a short sparse
/// matvec.
pub struct Generator {
    /// (output index, input index, coefficient) over vec(rho).
    nonzeros: Vec<(usize, usize, C64)>,
}

/// Builder accumulating the superoperator densely before compression.
struct GeneratorBuilder {
    l: Vec<[C64; 16]>,
}

impl GeneratorBuilder {
    fn new() -> Self {
        GeneratorBuilder {
            l: vec![[C64::new(0.0, 0.0); 16]; 16],
        }
    }

    /// Add coeff * A rho B.
    fn sandwich(&mut self, coeff: C64, a: &CMat4, b: &CMat4) {
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let aik = a.0[i][k];
                    if aik == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for l in 0..4 {
                        let blj = b.0[l][j];
                        if blj == C64::new(0.0, 0.0) {
                            continue;
                        }
                        self.l[4 * i + j][4 * k + l] += coeff * aik * blj;
                    }
                }
            }
        }
    }

    /// Add coeff * (M rho + rho M).
    fn anticommutator(&mut self, coeff: f64, m: &CMat4) {
        let id = CMat4::identity();
        self.sandwich(C64::new(coeff, 0.0), m, &id);
        self.sandwich(C64::new(coeff, 0.0), &id, m);
    }

    /// Add the coherent part -i [H, rho].
    fn hamiltonian(&mut self, h: &CMat4) {
        let id = CMat4::identity();
        self.sandwich(C64::new(0.0, -1.0), h, &id);
        self.sandwich(C64::new(0.0, 1.0), &id, h);
    }

    fn finish(self) -> Generator {
        let mut nonzeros = Vec::new();
        for (row, cols) in self.l.iter().enumerate() {
            for (col, &coeff) in cols.iter().enumerate() {
                if coeff.norm_sqr() > 0.0 {
                    nonzeros.push((row, col, coeff));
                }
            }
        }
        Generator { nonzeros }
    }
}

impl Generator {
    pub fn apply(&self, rho: &CMat4) -> CMat4 {
        let mut v = [C64::new(0.0, 0.0); 16];
        for i in 0..4 {
            for j in 0..4 {
                v[4 * i + j] = rho.0[i][j];
            }
        }
        let mut out = [C64::new(0.0, 0.0); 16];
        for &(row, col, coeff) in &self.nonzeros {
            out[row] += coeff * v[col];
        }
        let mut m = CMat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = out[4 * i + j];
            }
        }
        m
    }
}

fn qubit_ops(q: Qubit) -> (CMat4, CMat4, CMat4) {
    let plus = embed_pauli(PauliAxis::Plus, q);
    let minus = embed_pauli(PauliAxis::Minus, q);
    let z = embed_pauli(PauliAxis::Z, q);
    (plus, minus, z)
}

/// Rotating-frame master equation: -i[H_rf, rho] plus zero-temperature
/// amplitude damping on each qubit.
pub fn rotating_frame_generator(params: &SystemParams) -> Result<Generator, DynamicsError> {
    params.validate()?;
    let mut gen = GeneratorBuilder::new();
    gen.hamiltonian(&build_h_rf(params));
    for (q, gamma) in [(Qubit::One, params.gamma1), (Qubit::Two, params.gamma2)] {
        if gamma == 0.0 {
            continue;
        }
        let (plus, minus, _) = qubit_ops(q);
        gen.sandwich(C64::new(gamma, 0.0), &minus, &plus);
        gen.anticommutator(-gamma / 2.0, &(plus * minus));
    }
    Ok(gen.finish())
}

/// Secular master equation: coherent part
/// -i(omega_c/4)[2 sx sx + sy sy + sz sz, rho] plus the time-averaged
/// dissipator, written out term by term.
pub fn secular_generator(params: &SystemParams) -> Result<Generator, DynamicsError> {
    params.validate()?;
    params.require_secular()?;
    let gamma = params.gamma1;
    let omega_c = params.omega_c();

    let xx = tensor(&crate::qmatrix::pauli_x(), &crate::qmatrix::pauli_x());
    let yy = tensor(&crate::qmatrix::pauli_y(), &crate::qmatrix::pauli_y());
    let zz = tensor(&crate::qmatrix::pauli_z(), &crate::qmatrix::pauli_z());
    let h = (xx * 2.0 + yy + zz) * (omega_c / 4.0);

    let mut gen = GeneratorBuilder::new();
    gen.hamiltonian(&h);
    if gamma > 0.0 {
        let id = CMat4::identity();
        for q in [Qubit::One, Qubit::Two] {
            let (plus, minus, z) = qubit_ops(q);
            gen.sandwich(C64::new(gamma / 8.0, 0.0), &plus, &plus);
            gen.sandwich(C64::new(gamma / 8.0, 0.0), &minus, &minus);
            gen.sandwich(C64::new(gamma / 8.0, 0.0), &z, &z);
            gen.sandwich(C64::new(-gamma / 8.0, 0.0), &id, &id);
            gen.sandwich(C64::new(3.0 * gamma / 8.0, 0.0), &minus, &plus);
            gen.sandwich(C64::new(3.0 * gamma / 8.0, 0.0), &plus, &minus);
            gen.anticommutator(-3.0 * gamma / 16.0, &(plus * minus));
            gen.anticommutator(-3.0 * gamma / 16.0, &(minus * plus));
        }
    }
    Ok(gen.finish())
}

/// Undriven thermal master equation: coupling and detuning Hamiltonian plus
/// upward and downward damping weighted by the reservoir occupations.
pub fn thermal_undriven_generator(params: &SystemParams) -> Result<Generator, DynamicsError> {
    params.validate()?;
    let h_params = SystemParams {
        rabi1: 0.0,
        rabi2: 0.0,
        ..*params
    };
    let mut gen = GeneratorBuilder::new();
    gen.hamiltonian(&build_h_rf(&h_params));
    for (q, gamma, nbar) in [
        (Qubit::One, params.gamma1, params.nbar1),
        (Qubit::Two, params.gamma2, params.nbar2),
    ] {
        if gamma == 0.0 {
            continue;
        }
        let (plus, minus, _) = qubit_ops(q);
        let down = gamma * (nbar + 1.0);
        let up = gamma * nbar;
        gen.sandwich(C64::new(down, 0.0), &minus, &plus);
        gen.anticommutator(-down / 2.0, &(plus * minus));
        if up > 0.0 {
            gen.sandwich(C64::new(up, 0.0), &plus, &minus);
            gen.anticommutator(-up / 2.0, &(minus * plus));
        }
    }
    Ok(gen.finish())
}

/// d(rho)/dt in the rotating frame at the given state.
pub fn rhs_rotating_frame(params: &SystemParams, rho: &DensityMatrix) -> Result<CMat4, DynamicsError> {
    Ok(rotating_frame_generator(params)?.apply(rho.matrix()))
}

/// d(rho)/dt under the secular equation at the given state.
pub fn rhs_secular(params: &SystemParams, rho: &DensityMatrix) -> Result<CMat4, DynamicsError> {
    Ok(secular_generator(params)?.apply(rho.matrix()))
}

/// d(rho)/dt under the undriven thermal equation at the given state.
pub fn rhs_thermal_undriven(
    params: &SystemParams,
    rho: &DensityMatrix,
) -> Result<CMat4, DynamicsError> {
    Ok(thermal_undriven_generator(params)?.apply(rho.matrix()))
}

/// Bose-Einstein occupation at the given Larmor frequency and temperature,
/// in natural units (hbar = k_B = 1). Zero temperature gives zero.
pub fn nbar_from_temperature(larmor: f64, temperature: f64) -> Result<f64, DynamicsError> {
    if !(larmor > 0.0) {
        return Err(DynamicsError::NonPositiveLarmor(larmor));
    }
    if temperature < 0.0 {
        return Err(DynamicsError::InvalidParams(format!(
            "temperature must be >= 0, got {temperature}"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / ((larmor / temperature).exp() - 1.0))
}

/// Default integration step: resolves the fastest of the relaxation, drive,
/// and coupling scales. Stability requires dt * ||generator|| < 0.1.
pub fn default_dt(params: &SystemParams) -> f64 {
    let mut dt = f64::INFINITY;
    let gamma = params.gamma1.max(params.gamma2);
    if gamma > 0.0 {
        dt = dt.min(1e-3 / gamma);
    }
    let rabi = params.rabi1.abs().max(params.rabi2.abs());
    if rabi > 0.0 {
        dt = dt.min(0.01 / rabi);
    }
    let omega_c = params.omega_c().abs();
    if omega_c > 0.0 {
        dt = dt.min(0.01 / omega_c);
    }
    if dt.is_finite() {
        dt.min(1e-3)
    } else {
        1e-3
    }
}

/// Lower bound on the smallest eigenvalue: exact for X-form matrices (the
/// two 2x2 blocks), shifted down by the Frobenius norm of the off-X part
/// (Weyl perturbation bound). Never overestimates, so a passing bound makes
/// the exact eigensolve unnecessary.
fn min_eig_lower_bound(m: &CMat4) -> f64 {
    let a = m.0[0][0].re;
    let d = m.0[3][3].re;
    let b = m.0[1][1].re;
    let c = m.0[2][2].re;
    let w = m.0[0][3];
    let z = m.0[1][2];
    let outer = 0.5 * (a + d) - f64::sqrt(0.25 * (a - d) * (a - d) + w.norm_sqr());
    let inner = 0.5 * (b + c) - f64::sqrt(0.25 * (b - c) * (b - c) + z.norm_sqr());
    let mut off = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j && i + j != 3 {
                off += m.0[i][j].norm_sqr();
            }
        }
    }
    outer.min(inner) - off.sqrt()
}

fn check_state(m: &CMat4, t: f64) -> Result<(), DynamicsError> {
    if !m.is_finite() {
        return Err(DynamicsError::InvariantViolated {
            time: t,
            what: "non-finite entries".into(),
        });
    }
    let dev = m.herm_deviation();
    if dev > STATE_TOL {
        return Err(DynamicsError::InvariantViolated {
            time: t,
            what: format!("Hermiticity deviation {dev:.3e}"),
        });
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(DynamicsError::InvariantViolated {
            time: t,
            what: format!("trace drift {:.3e}", (tr - C64::new(1.0, 0.0)).norm()),
        });
    }
    if min_eig_lower_bound(m) < POSITIVITY_TOL {
        let min = eigvals_hermitized(m)[3];
        if min < POSITIVITY_TOL {
            return Err(DynamicsError::InvariantViolated {
                time: t,
                what: format!("min eigenvalue {min:.3e}"),
            });
        }
    }
    Ok(())
}

/// Classic fourth-order Runge-Kutta on a uniform grid. Every sample is
/// checked against the density-matrix invariants; a violation aborts with
/// the offending time.
pub fn integrate<F>(
    rhs: F,
    rho0: &DensityMatrix,
    t_max: f64,
    dt: f64,
    model: &str,
) -> Result<Trajectory, DynamicsError>
where
    F: Fn(&CMat4) -> CMat4,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DynamicsError::InvalidStep(format!("dt = {dt}")));
    }
    if t_max < dt {
        return Err(DynamicsError::InvalidStep(format!(
            "t_max = {t_max} is smaller than dt = {dt}"
        )));
    }
    let n = (t_max / dt).round().max(1.0) as usize;
    let mut samples = Vec::with_capacity(n + 1);
    samples.push((0.0, *rho0));
    let mut m = *rho0.matrix();
    for k in 1..=n {
        let k1 = rhs(&m);
        let k2 = rhs(&(m + k1 * (dt / 2.0)));
        let k3 = rhs(&(m + k2 * (dt / 2.0)));
        let k4 = rhs(&(m + k3 * dt));
        m = m + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let t = k as f64 * dt;
        check_state(&m, t)?;
        samples.push((t, DensityMatrix::from_validated(m)));
    }
    Ok(Trajectory {
        model: model.to_string(),
        dt,
        samples,
    })
}

/// Map from the rotating frame to the drive's interaction picture:
/// rho = U rho_rf U^dag with U = exp(i Omega t (sx_1 + sx_2)/2), a local
/// unitary, so every entanglement measure is unchanged.
pub fn interaction_transform(rho_rf: &DensityMatrix, t: f64, rabi: f64) -> DensityMatrix {
    let theta = rabi * t / 2.0;
    let u2 = CMat2([
        [C64::new(theta.cos(), 0.0), C64::new(0.0, theta.sin())],
        [C64::new(0.0, theta.sin()), C64::new(theta.cos(), 0.0)],
    ]);
    let u = tensor(&u2, &u2);
    DensityMatrix::from_validated(u * *rho_rf.matrix() * u.dagger())
}
