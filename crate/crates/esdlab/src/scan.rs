//! Parameter-space sweeps: (family parameter x coupling) grids of
//! sudden-death times and revival counts, plus the rotating-frame vs secular
//! model comparison.
//!
//! Cells are pure functions of the configuration and their grid indices, so
//! they may run in any order on any number of workers; a sequential run
//! produces bit-identical output.

use crate::dynamics::{
    default_dt, integrate, rotating_frame_generator, secular_generator,
    thermal_undriven_generator, DynamicsError, SystemParams,
};
use crate::entanglement::{
    concurrence_signal_x, concurrence_x, detect_esd, ConcurrenceTrace, EsdError,
};
use crate::qmatrix::MatrixError;
use crate::xstate::{evolve_kinetic, family_solution, make_initial, FamilySpec, XStateError};
use rayon::prelude::*;
use thiserror::Error;

/// Environment variable capping scan parallelism (0 or unset = automatic).
pub const THREADS_ENV: &str = "ESDLAB_THREADS";

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid scan config: {0}")]
    Config(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    XState(#[from] XStateError),
    #[error(transparent)]
    Esd(#[from] EsdError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Which evolution backs a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// RK4 on the kinetic equations (X-state components).
    Kinetic,
    /// Analytic family solutions evaluated on the grid.
    ClosedForm,
    /// Full 4x4 integration of the secular master equation.
    SecularFull,
    /// Full 4x4 integration of the rotating-frame master equation.
    RotatingFrame,
    /// Full 4x4 integration of the undriven thermal equation.
    ThermalUndriven,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Kinetic => "kinetic",
            Model::ClosedForm => "closed-form",
            Model::SecularFull => "secular-full",
            Model::RotatingFrame => "rotating-frame",
            Model::ThermalUndriven => "thermal-undriven",
        }
    }

    pub fn parse(s: &str) -> Option<Model> {
        match s {
            "kinetic" => Some(Model::Kinetic),
            "closed-form" => Some(Model::ClosedForm),
            "secular-full" => Some(Model::SecularFull),
            "rotating-frame" => Some(Model::RotatingFrame),
            "thermal-undriven" => Some(Model::ThermalUndriven),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Werner,
    Ye,
    EgGe,
    EeGg,
}

impl FamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::Werner => "werner",
            FamilyKind::Ye => "ye",
            FamilyKind::EgGe => "egge",
            FamilyKind::EeGg => "eegg",
        }
    }

    pub fn parse(s: &str) -> Option<FamilyKind> {
        match s {
            "werner" => Some(FamilyKind::Werner),
            "ye" => Some(FamilyKind::Ye),
            "egge" => Some(FamilyKind::EgGe),
            "eegg" => Some(FamilyKind::EeGg),
            _ => None,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            FamilyKind::Werner => (0.25, 1.0),
            _ => (0.0, 1.0),
        }
    }

    /// Name of the family parameter as it appears in configs.
    pub fn parameter_key(&self) -> &'static str {
        match self {
            FamilyKind::Werner => "f",
            FamilyKind::Ye => "alpha",
            FamilyKind::EgGe => "p",
            FamilyKind::EeGg => "s",
        }
    }

    pub fn spec(&self, value: f64) -> FamilySpec {
        match self {
            FamilyKind::Werner => FamilySpec::Werner { f: value },
            FamilyKind::Ye => FamilySpec::Ye { alpha: value },
            FamilyKind::EgGe => FamilySpec::EgGe { p: value },
            FamilyKind::EeGg => FamilySpec::EeGg { s: value },
        }
    }
}

/// Inclusive linearly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn value(&self, i: usize) -> f64 {
        if self.steps <= 1 {
            return self.min;
        }
        self.min + (self.max - self.min) * (i as f64) / ((self.steps - 1) as f64)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub family: FamilyKind,
    pub param: AxisRange,
    pub omega_c: AxisRange,
    pub model: Model,
    pub gamma: f64,
    pub rabi: f64,
    pub nbar1: f64,
    pub nbar2: f64,
    pub t_max: f64,
    /// Explicit step; None applies the default stability rule using the
    /// largest coupling (and the drive, for the rotating-frame model), so
    /// every cell in a grid shares one step.
    pub dt: Option<f64>,
    pub epsilon: f64,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), ScanError> {
        if self.param.steps < 2 || self.omega_c.steps < 2 {
            return Err(ScanError::Config(
                "each axis needs at least 2 steps".into(),
            ));
        }
        let (lo, hi) = self.family.bounds();
        if self.param.min < lo || self.param.max > hi || self.param.min > self.param.max {
            return Err(ScanError::Config(format!(
                "param range [{}, {}] outside {} bounds [{lo}, {hi}]",
                self.param.min,
                self.param.max,
                self.family.as_str()
            )));
        }
        if self.omega_c.min < 0.0 || self.omega_c.min > self.omega_c.max {
            return Err(ScanError::Config(format!(
                "omega_c range [{}, {}] invalid",
                self.omega_c.min, self.omega_c.max
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(ScanError::Config(format!("gamma = {}", self.gamma)));
        }
        if !(self.t_max > 0.0) {
            return Err(ScanError::Config(format!("t_max = {}", self.t_max)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(ScanError::Config(format!("dt = {dt}")));
            }
        }
        if !(self.epsilon >= 0.0) {
            return Err(ScanError::Config(format!("epsilon = {}", self.epsilon)));
        }
        Ok(())
    }

    /// One step for the whole grid, chosen for its fastest cell.
    pub fn effective_dt(&self) -> f64 {
        if let Some(dt) = self.dt {
            return dt;
        }
        let rabi = if self.model == Model::RotatingFrame {
            self.rabi
        } else {
            0.0
        };
        let worst = SystemParams {
            nbar1: self.nbar1,
            nbar2: self.nbar2,
            ..SystemParams::symmetric(self.gamma, rabi, self.omega_c.max.max(self.omega_c.min))
        };
        default_dt(&worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    NeverEntangled,
    PositiveAtHorizon,
    NumericFailure,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::NeverEntangled => "never_entangled",
            CellStatus::PositiveAtHorizon => "positive_at_horizon",
            CellStatus::NumericFailure => "numeric_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub t_esd: f64,
    pub revivals: usize,
    pub status: CellStatus,
}

/// Row-major (parameter-major) grid of scan cells.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub config: ScanConfig,
    pub cells: Vec<Cell>,
}

impl ScanResult {
    pub fn cell(&self, param_index: usize, omega_index: usize) -> &Cell {
        &self.cells[param_index * self.config.omega_c.steps + omega_index]
    }
}

/// Analytic concurrence-signal evaluator for crossing refinement.
pub type SignalEval = Box<dyn Fn(f64) -> f64>;

/// Concurrence trace of one cell, plus the analytic evaluator when the model
/// has one (used to refine crossings by bisection).
pub fn cell_trace(
    config: &ScanConfig,
    param: f64,
    omega_c: f64,
) -> Result<(ConcurrenceTrace, Option<SignalEval>), ScanError> {
    let spec = config.family.spec(param);
    let x0 = make_initial(&spec)?;
    let dt = config.effective_dt();
    let gamma = config.gamma;
    match config.model {
        Model::Kinetic => {
            let samples = evolve_kinetic(&x0, gamma, omega_c, config.t_max, dt)?;
            Ok((
                ConcurrenceTrace::from_xstates(&samples, dt, config.epsilon),
                None,
            ))
        }
        Model::ClosedForm => {
            let n = (config.t_max / dt).round().max(1.0) as usize;
            let mut samples = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let t = i as f64 * dt;
                samples.push((t, family_solution(&spec, gamma, omega_c, t)?));
            }
            let trace = ConcurrenceTrace::from_xstates(&samples, dt, config.epsilon);
            let eval = move |t: f64| {
                family_solution(&spec, gamma, omega_c, t)
                    .map(|x| concurrence_signal_x(&x))
                    .unwrap_or(0.0)
            };
            Ok((trace, Some(Box::new(eval))))
        }
        Model::SecularFull => {
            let params = SystemParams::symmetric(gamma, config.rabi, omega_c);
            let gen = secular_generator(&params)?;
            let traj = integrate(
                |m| gen.apply(m),
                &x0.to_density()?,
                config.t_max,
                dt,
                Model::SecularFull.as_str(),
            )?;
            Ok((
                ConcurrenceTrace::from_trajectory(&traj, config.epsilon)?,
                None,
            ))
        }
        Model::RotatingFrame => {
            let params = SystemParams::symmetric(gamma, config.rabi, omega_c);
            let gen = rotating_frame_generator(&params)?;
            let traj = integrate(
                |m| gen.apply(m),
                &x0.to_density()?,
                config.t_max,
                dt,
                Model::RotatingFrame.as_str(),
            )?;
            Ok((
                ConcurrenceTrace::from_trajectory(&traj, config.epsilon)?,
                None,
            ))
        }
        Model::ThermalUndriven => {
            let params = SystemParams {
                nbar1: config.nbar1,
                nbar2: config.nbar2,
                ..SystemParams::symmetric(gamma, 0.0, omega_c)
            };
            let gen = thermal_undriven_generator(&params)?;
            let traj = integrate(
                |m| gen.apply(m),
                &x0.to_density()?,
                config.t_max,
                dt,
                Model::ThermalUndriven.as_str(),
            )?;
            Ok((
                ConcurrenceTrace::from_trajectory(&traj, config.epsilon)?,
                None,
            ))
        }
    }
}

fn classify(trace: &ConcurrenceTrace, eval: Option<&dyn Fn(f64) -> f64>) -> Result<Cell, ScanError> {
    let report = detect_esd(trace, eval)?;
    let status = if report.positive_at_horizon {
        CellStatus::PositiveAtHorizon
    } else if trace.max_concurrence() <= trace.epsilon {
        CellStatus::NeverEntangled
    } else {
        CellStatus::Ok
    };
    Ok(Cell {
        t_esd: report.t_esd,
        revivals: report.revival_count,
        status,
    })
}

/// One grid cell. Errors become NUMERIC_FAILURE cells rather than aborting
/// the grid.
pub fn scan_cell(config: &ScanConfig, param_index: usize, omega_index: usize) -> Cell {
    let param = config.param.value(param_index);
    let omega_c = config.omega_c.value(omega_index);
    match cell_trace(config, param, omega_c)
        .and_then(|(trace, eval)| classify(&trace, eval.as_deref()))
    {
        Ok(cell) => cell,
        Err(_) => Cell {
            t_esd: 0.0,
            revivals: 0,
            status: CellStatus::NumericFailure,
        },
    }
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Sweep the whole grid. Cells are independent work units written at
/// disjoint indices; ESDLAB_THREADS caps the worker count (0 = auto).
pub fn run_scan(config: &ScanConfig) -> Result<ScanResult, ScanError> {
    config.validate()?;
    let indices: Vec<(usize, usize)> = (0..config.param.steps)
        .flat_map(|i| (0..config.omega_c.steps).map(move |j| (i, j)))
        .collect();
    let compute = |&(i, j): &(usize, usize)| scan_cell(config, i, j);
    let cells: Vec<Cell> = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ScanError::ThreadPool(e.to_string()))?
            .install(|| indices.par_iter().map(compute).collect()),
        None => indices.par_iter().map(compute).collect(),
    };
    Ok(ScanResult {
        config: config.clone(),
        cells,
    })
}

/// Sup-norm comparison between the rotating-frame evolution and the secular
/// (kinetic) evolution of the same initial state, scored on concurrence,
/// which is invariant under the local unitary connecting the two frames.
#[derive(Debug, Clone)]
pub struct ModelDeviation {
    pub sup_norm: f64,
    /// (t, rotating-frame concurrence, secular concurrence) per grid time.
    pub series: Vec<(f64, f64, f64)>,
}

/// Compare the two backends over [0, t_max]. The parameters must satisfy the
/// secular preconditions with a strictly positive drive; dt = None applies
/// the default stability rule.
pub fn compare_models(
    spec: &FamilySpec,
    params: &SystemParams,
    t_max: f64,
    dt: Option<f64>,
) -> Result<ModelDeviation, ScanError> {
    if params.rabi1 == 0.0 && params.rabi2 == 0.0 {
        return Err(ScanError::Dynamics(
            DynamicsError::SecularPreconditionViolated {
                reason: "comparison requires a positive Rabi frequency".into(),
            },
        ));
    }
    let dt = dt.unwrap_or_else(|| default_dt(params));
    let x0 = make_initial(spec)?;

    let gen = rotating_frame_generator(params)?;
    // Constructing the secular generator enforces the symmetric-rate and
    // zero-detuning preconditions even though the kinetic path is cheaper.
    let _ = secular_generator(params)?;
    let traj = integrate(
        |m| gen.apply(m),
        &x0.to_density()?,
        t_max,
        dt,
        Model::RotatingFrame.as_str(),
    )?;
    let rf = ConcurrenceTrace::from_trajectory(&traj, 0.0)?;

    let kinetic = evolve_kinetic(&x0, params.gamma1, params.omega_c(), t_max, dt)?;
    let mut series = Vec::with_capacity(rf.samples.len());
    let mut sup = 0.0f64;
    for (s, (t, x)) in rf.samples.iter().zip(&kinetic) {
        let ck = concurrence_x(x);
        sup = sup.max((s.concurrence - ck).abs());
        series.push((*t, s.concurrence, ck));
    }
    Ok(ModelDeviation {
        sup_norm: sup,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_werner_config() -> ScanConfig {
        ScanConfig {
            family: FamilyKind::Werner,
            param: AxisRange {
                min: 0.6,
                max: 1.0,
                steps: 3,
            },
            omega_c: AxisRange {
                min: 0.0,
                max: 10.0,
                steps: 3,
            },
            model: Model::Kinetic,
            gamma: 1.0,
            rabi: 25.0,
            nbar1: 0.0,
            nbar2: 0.0,
            t_max: 5.0,
            dt: None,
            epsilon: 1e-6,
        }
    }

    #[test]
    fn scan_is_deterministic() {
        let cfg = small_werner_config();
        let a = run_scan(&cfg).unwrap();
        let b = run_scan(&cfg).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(x.t_esd.to_bits(), y.t_esd.to_bits());
            assert_eq!(x.revivals, y.revivals);
            assert_eq!(x.status, y.status);
        }
    }

    #[test]
    fn single_cell_reproduces_grid_cell() {
        let cfg = small_werner_config();
        let grid = run_scan(&cfg).unwrap();
        for i in 0..cfg.param.steps {
            for j in 0..cfg.omega_c.steps {
                let lone = scan_cell(&cfg, i, j);
                let cell = grid.cell(i, j);
                assert_eq!(lone.t_esd.to_bits(), cell.t_esd.to_bits());
                assert_eq!(lone.revivals, cell.revivals);
            }
        }
    }

    #[test]
    fn werner_rows_constant_in_coupling() {
        let grid = run_scan(&small_werner_config()).unwrap();
        for i in 0..3 {
            let reference = grid.cell(i, 0).t_esd;
            for j in 1..3 {
                let v = grid.cell(i, j).t_esd;
                if reference.is_finite() {
                    assert!((v - reference).abs() < 1e-6, "row {i}: {v} vs {reference}");
                } else {
                    assert_eq!(v, reference);
                }
            }
        }
    }

    #[test]
    fn serial_env_matches_parallel() {
        let cfg = small_werner_config();
        let parallel = run_scan(&cfg).unwrap();
        std::env::set_var(THREADS_ENV, "1");
        let serial = run_scan(&cfg).unwrap();
        std::env::remove_var(THREADS_ENV);
        for (x, y) in parallel.cells.iter().zip(&serial.cells) {
            assert_eq!(x.t_esd.to_bits(), y.t_esd.to_bits());
        }
    }

    #[test]
    fn rejects_degenerate_axes() {
        let mut cfg = small_werner_config();
        cfg.param.steps = 1;
        assert!(matches!(run_scan(&cfg), Err(ScanError::Config(_))));
        let mut cfg = small_werner_config();
        cfg.param.min = 0.1; // below the Werner lower bound
        assert!(matches!(run_scan(&cfg), Err(ScanError::Config(_))));
    }

    #[test]
    fn undriven_zero_temperature_rows_are_flat() {
        // Rotating-frame model, no drive, zero occupation: t_esd does not
        // depend on the coupling for any family.
        for family in [
            FamilyKind::Werner,
            FamilyKind::Ye,
            FamilyKind::EgGe,
            FamilyKind::EeGg,
        ] {
            let (lo, hi) = family.bounds();
            let cfg = ScanConfig {
                family,
                param: AxisRange {
                    min: lo + 0.3 * (hi - lo),
                    max: lo + 0.7 * (hi - lo),
                    steps: 2,
                },
                // The uncoupled endpoint is excluded: with omega_c = 0 the
                // diagonal families never entangle at all, which is its own
                // (constant) degenerate row.
                omega_c: AxisRange {
                    min: 1.0,
                    max: 8.0,
                    steps: 3,
                },
                model: Model::RotatingFrame,
                gamma: 1.0,
                rabi: 0.0,
                nbar1: 0.0,
                nbar2: 0.0,
                t_max: 6.0,
                dt: None,
                epsilon: 1e-9,
            };
            let grid = run_scan(&cfg).unwrap();
            for i in 0..cfg.param.steps {
                let reference = grid.cell(i, 0);
                for j in 1..cfg.omega_c.steps {
                    let cell = grid.cell(i, j);
                    assert_eq!(cell.status, reference.status, "{family:?} row {i}");
                    if reference.t_esd.is_finite() {
                        assert!(
                            (cell.t_esd - reference.t_esd).abs() < 1e-5,
                            "{family:?} row {i}: {} vs {}",
                            cell.t_esd,
                            reference.t_esd
                        );
                    } else {
                        assert_eq!(cell.t_esd, reference.t_esd);
                    }
                }
            }
        }
    }

    #[test]
    fn compare_models_rejects_zero_drive() {
        let params = SystemParams::symmetric(1.0, 0.0, 5.0);
        let err = compare_models(&FamilySpec::Werner { f: 1.0 }, &params, 1.0, None);
        assert!(matches!(
            err,
            Err(ScanError::Dynamics(
                DynamicsError::SecularPreconditionViolated { .. }
            ))
        ));
    }

    #[test]
    fn compare_models_werner_moderate_drive() {
        let params = SystemParams::symmetric(1.0, 25.0, 5.0);
        let dev = compare_models(&FamilySpec::Werner { f: 1.0 }, &params, 2.0, None).unwrap();
        assert!(dev.sup_norm <= 0.05, "sup = {}", dev.sup_norm);
        assert!(dev.sup_norm > 0.0);
    }
}
