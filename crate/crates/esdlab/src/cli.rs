//! Command-line front end: flat JSON run configs, flag overrides that mirror
//! the config keys exactly, and CSV/JSON export of traces and scan grids.
//!
//! Exit codes: 0 success, 1 validation failure, 2 config error, 3 numeric
//! failure.

use crate::dynamics::{
    default_dt, integrate, rotating_frame_generator, secular_generator,
    thermal_undriven_generator, DynamicsError, SystemParams,
};
use crate::entanglement::{concurrence_general, f_function, g_function};
use crate::scan::{run_scan, AxisRange, CellStatus, FamilyKind, Model, ScanConfig, ScanError};
use crate::xstate::{evolve_kinetic, family_solution, make_initial, off_x_norm, XState};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or environment; exit code 2.
    Config(String),
    /// Numeric invariant violation during a run; exit code 3.
    Numeric(String),
    /// One or more validation checks failed; exit code 1.
    ValidationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("config error: {m}"),
            CliError::Numeric(m) => format!("numeric failure: {m}"),
            CliError::ValidationFailed => "validation failed".into(),
        }
    }
}

fn numeric_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

fn scan_err(e: ScanError) -> CliError {
    match e {
        ScanError::Config(m) => CliError::Config(m),
        other => CliError::Numeric(other.to_string()),
    }
}

/// Merged key-value document: file keys overlaid by flag keys.
#[derive(Debug)]
pub struct Doc {
    values: BTreeMap<String, Value>,
}

const PHYSICS_KEYS: &[&str] = &[
    "model",
    "family",
    "f",
    "alpha",
    "p",
    "s",
    "gamma",
    "gamma1",
    "gamma2",
    "rabi",
    "rabi1",
    "rabi2",
    "detuning1",
    "detuning2",
    "omega_c",
    "omega_xx",
    "omega_yy",
    "nbar",
    "nbar1",
    "nbar2",
    "t_max",
    "dt",
    "epsilon",
    "output",
    "format",
];

const SCAN_ONLY_KEYS: &[&str] = &[
    "param_min",
    "param_max",
    "param_steps",
    "omega_c_min",
    "omega_c_max",
    "omega_c_steps",
];

impl Doc {
    pub fn load(
        config_path: Option<&PathBuf>,
        flags: Vec<(&'static str, Value)>,
        allowed: &[&str],
    ) -> Result<Doc, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let parsed: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!(
                    "{}:{}:{}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?;
            let obj = parsed.as_object().ok_or_else(|| {
                CliError::Config(format!(
                    "{}: config must be a flat JSON object",
                    path.display()
                ))
            })?;
            for (key, value) in obj {
                if !allowed.contains(&key.as_str()) {
                    return Err(CliError::Config(format!(
                        "{}: unknown key \"{key}\"",
                        path.display()
                    )));
                }
                values.insert(key.clone(), value.clone());
            }
        }
        for (key, value) in flags {
            values.insert(key.to_string(), value);
        }
        Ok(Doc { values })
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_f64()
                .map(Some)
                .ok_or_else(|| CliError::Config(format!("key \"{key}\": not a finite number"))),
            Some(other) => Err(CliError::Config(format!(
                "key \"{key}\": expected a number, got {other}"
            ))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(|v| Some(v as usize))
                .ok_or_else(|| CliError::Config(format!("key \"{key}\": not a nonnegative integer"))),
            Some(other) => Err(CliError::Config(format!(
                "key \"{key}\": expected an integer, got {other}"
            ))),
        }
    }

    fn take_string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(CliError::Config(format!(
                "key \"{key}\": expected a string, got {other}"
            ))),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(key) = self.values.keys().next() {
            let hint = if ["f", "alpha", "p", "s"].contains(&key.as_str()) {
                "; the scan parameter axis is set by param_min/param_max/param_steps"
            } else {
                ""
            };
            return Err(CliError::Config(format!(
                "key \"{key}\" is not used by this command{hint}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct CommonConfig {
    pub model: Model,
    pub family: FamilyKind,
    pub params: SystemParams,
    pub t_max: f64,
    pub dt: Option<f64>,
    pub epsilon: f64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

fn parse_model(doc: &mut Doc) -> Result<Model, CliError> {
    match doc.take_string("model")? {
        None => Ok(Model::Kinetic),
        Some(s) => Model::parse(&s).ok_or_else(|| {
            CliError::Config(format!(
                "key \"model\": \"{s}\" is not one of kinetic, closed-form, secular-full, rotating-frame, thermal-undriven"
            ))
        }),
    }
}

fn parse_family(doc: &mut Doc) -> Result<FamilyKind, CliError> {
    match doc.take_string("family")? {
        None => Err(CliError::Config(
            "key \"family\" is required (werner, ye, egge, eegg)".into(),
        )),
        Some(s) => FamilyKind::parse(&s).ok_or_else(|| {
            CliError::Config(format!(
                "key \"family\": \"{s}\" is not one of werner, ye, egge, eegg"
            ))
        }),
    }
}

/// Resolve the ten physical-rate keys into a SystemParams. Symmetric keys
/// (gamma, rabi, nbar, omega_c) apply first, per-qubit keys refine them.
fn parse_params(doc: &mut Doc) -> Result<SystemParams, CliError> {
    let mut params = SystemParams::default();
    if let Some(g) = doc.take_f64("gamma")? {
        params.gamma1 = g;
        params.gamma2 = g;
    }
    if let Some(v) = doc.take_f64("gamma1")? {
        params.gamma1 = v;
    }
    if let Some(v) = doc.take_f64("gamma2")? {
        params.gamma2 = v;
    }
    let mut rabi_set = false;
    if let Some(r) = doc.take_f64("rabi")? {
        params.rabi1 = r;
        params.rabi2 = r;
        rabi_set = true;
    }
    if let Some(v) = doc.take_f64("rabi1")? {
        params.rabi1 = v;
        rabi_set = true;
    }
    if let Some(v) = doc.take_f64("rabi2")? {
        params.rabi2 = v;
        rabi_set = true;
    }
    if !rabi_set {
        // Default drive strength used throughout the phase diagrams.
        params.rabi1 = 25.0;
        params.rabi2 = 25.0;
    }
    if let Some(v) = doc.take_f64("detuning1")? {
        params.detuning1 = v;
    }
    if let Some(v) = doc.take_f64("detuning2")? {
        params.detuning2 = v;
    }
    if let Some(wc) = doc.take_f64("omega_c")? {
        params.omega_xx = wc / 2.0;
        params.omega_yy = wc / 2.0;
    }
    if let Some(v) = doc.take_f64("omega_xx")? {
        params.omega_xx = v;
    }
    if let Some(v) = doc.take_f64("omega_yy")? {
        params.omega_yy = v;
    }
    if let Some(n) = doc.take_f64("nbar")? {
        params.nbar1 = n;
        params.nbar2 = n;
    }
    if let Some(v) = doc.take_f64("nbar1")? {
        params.nbar1 = v;
    }
    if let Some(v) = doc.take_f64("nbar2")? {
        params.nbar2 = v;
    }
    params
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(params)
}

fn parse_common(doc: &mut Doc) -> Result<CommonConfig, CliError> {
    let model = parse_model(doc)?;
    let family = parse_family(doc)?;
    let params = parse_params(doc)?;
    let t_max = doc.take_f64("t_max")?.unwrap_or(10.0);
    if !(t_max > 0.0) {
        return Err(CliError::Config(format!("key \"t_max\": {t_max} must be > 0")));
    }
    let dt = doc.take_f64("dt")?;
    if let Some(dt) = dt {
        if !(dt > 0.0) {
            return Err(CliError::Config(format!("key \"dt\": {dt} must be > 0")));
        }
    }
    let epsilon = doc.take_f64("epsilon")?.unwrap_or(1e-6);
    if !(epsilon >= 0.0) {
        return Err(CliError::Config(format!(
            "key \"epsilon\": {epsilon} must be >= 0"
        )));
    }
    let output = doc
        .take_string("output")?
        .filter(|s| s != "-")
        .map(PathBuf::from);
    let format = match doc.take_string("format")?.as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(CliError::Config(format!(
                "key \"format\": \"{other}\" is not csv or json"
            )))
        }
    };
    Ok(CommonConfig {
        model,
        family,
        params,
        t_max,
        dt,
        epsilon,
        output,
        format,
    })
}

/// The family parameter comes from the key matching the family (f, alpha,
/// p, s); supplying a mismatched key is a config error.
fn parse_family_param(doc: &mut Doc, family: FamilyKind) -> Result<f64, CliError> {
    let expected = family.parameter_key();
    let mut value = None;
    for key in ["f", "alpha", "p", "s"] {
        if let Some(v) = doc.take_f64(key)? {
            if key != expected {
                return Err(CliError::Config(format!(
                    "key \"{key}\" does not apply to family {}; use \"{expected}\"",
                    family.as_str()
                )));
            }
            value = Some(v);
        }
    }
    let value = value.ok_or_else(|| {
        CliError::Config(format!(
            "key \"{expected}\" is required for family {}",
            family.as_str()
        ))
    })?;
    let spec = family.spec(value);
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(value)
}

/// Model-specific symmetry requirements, reported against the offending key.
fn check_model_params(model: Model, params: &SystemParams) -> Result<(), CliError> {
    let needs_symmetric = matches!(
        model,
        Model::Kinetic | Model::ClosedForm | Model::SecularFull
    );
    if needs_symmetric {
        if params.gamma1 != params.gamma2 {
            return Err(CliError::Config(format!(
                "keys \"gamma1\"/\"gamma2\" must match for the {} model",
                model.as_str()
            )));
        }
        if params.rabi1 != params.rabi2 {
            return Err(CliError::Config(format!(
                "keys \"rabi1\"/\"rabi2\" must match for the {} model",
                model.as_str()
            )));
        }
        if params.detuning1 != 0.0 || params.detuning2 != 0.0 {
            return Err(CliError::Config(format!(
                "keys \"detuning1\"/\"detuning2\" must be zero for the {} model",
                model.as_str()
            )));
        }
    }
    Ok(())
}

/// Step actually used for a run: explicit dt wins, otherwise the stability
/// rule resolving the fastest scale the chosen model contains.
fn resolve_dt(model: Model, params: &SystemParams, dt: Option<f64>) -> f64 {
    if let Some(dt) = dt {
        return dt;
    }
    let relevant = if model == Model::RotatingFrame {
        *params
    } else {
        SystemParams {
            rabi1: 0.0,
            rabi2: 0.0,
            ..*params
        }
    };
    default_dt(&relevant)
}

/// One output row of an evolve run.
pub struct TraceRow {
    pub t: f64,
    pub x: XState,
    pub f: f64,
    pub g: f64,
    pub concurrence: f64,
}

pub const TRACE_COLUMNS: [&str; 12] = [
    "t", "a", "b", "c", "d", "re_w", "im_w", "re_z", "im_z", "F", "G", "concurrence",
];

fn xstate_rows(samples: &[(f64, XState)]) -> Vec<TraceRow> {
    samples
        .iter()
        .map(|(t, x)| {
            let f = f_function(x);
            let g = g_function(x);
            TraceRow {
                t: *t,
                x: *x,
                f,
                g,
                concurrence: (2.0 * f.max(g).max(0.0)).clamp(0.0, 1.0),
            }
        })
        .collect()
}

/// Compute the full trace for an evolve run.
pub fn evolve_rows(cfg: &CommonConfig, param: f64) -> Result<Vec<TraceRow>, CliError> {
    check_model_params(cfg.model, &cfg.params)?;
    let spec = cfg.family.spec(param);
    let x0 = make_initial(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let dt = resolve_dt(cfg.model, &cfg.params, cfg.dt);
    let gamma = cfg.params.gamma1;
    let omega_c = cfg.params.omega_c();
    match cfg.model {
        Model::Kinetic => {
            let samples =
                evolve_kinetic(&x0, gamma, omega_c, cfg.t_max, dt).map_err(numeric_err)?;
            Ok(xstate_rows(&samples))
        }
        Model::ClosedForm => {
            let n = (cfg.t_max / dt).round().max(1.0) as usize;
            let mut samples = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let t = i as f64 * dt;
                samples.push((
                    t,
                    family_solution(&spec, gamma, omega_c, t).map_err(numeric_err)?,
                ));
            }
            Ok(xstate_rows(&samples))
        }
        Model::SecularFull | Model::RotatingFrame | Model::ThermalUndriven => {
            let gen = match cfg.model {
                Model::SecularFull => secular_generator(&cfg.params),
                Model::RotatingFrame => rotating_frame_generator(&cfg.params),
                _ => thermal_undriven_generator(&SystemParams {
                    rabi1: 0.0,
                    rabi2: 0.0,
                    ..cfg.params
                }),
            }
            .map_err(|e| match e {
                DynamicsError::SecularPreconditionViolated { .. }
                | DynamicsError::InvalidParams(_) => CliError::Config(e.to_string()),
                other => numeric_err(other),
            })?;
            let rho0 = x0.to_density().map_err(numeric_err)?;
            let traj = integrate(|m| gen.apply(m), &rho0, cfg.t_max, dt, cfg.model.as_str())
                .map_err(numeric_err)?;
            traj.samples
                .iter()
                .map(|(t, rho)| {
                    let x = XState::components_of(rho);
                    let f = f_function(&x);
                    let g = g_function(&x);
                    let concurrence = if off_x_norm(rho.matrix()) < 1e-12 {
                        (2.0 * f.max(g).max(0.0)).clamp(0.0, 1.0)
                    } else {
                        concurrence_general(rho).map_err(numeric_err)?
                    };
                    Ok(TraceRow {
                        t: *t,
                        x,
                        f,
                        g,
                        concurrence,
                    })
                })
                .collect()
        }
    }
}

/// Shortest round-trip decimal representation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v}")
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
        None => Ok(Box::new(std::io::BufWriter::new(std::io::stdout()))),
    }
}

fn write_all(path: Option<&PathBuf>, body: &str) -> Result<(), CliError> {
    let mut out = open_output(path)?;
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Config(format!("write failed: {e}")))
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 96);
    s.push_str(&TRACE_COLUMNS.join(","));
    s.push('\n');
    for r in rows {
        let fields = [
            r.t, r.x.a, r.x.b, r.x.c, r.x.d, r.x.w.re, r.x.w.im, r.x.z.re, r.x.z.im, r.f, r.g,
            r.concurrence,
        ];
        let line: Vec<String> = fields.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn trace_json(rows: &[TraceRow]) -> String {
    let columns: Vec<Value> = TRACE_COLUMNS.iter().map(|c| Value::from(*c)).collect();
    let data: Vec<Value> = rows
        .iter()
        .map(|r| {
            Value::from(vec![
                r.t, r.x.a, r.x.b, r.x.c, r.x.d, r.x.w.re, r.x.w.im, r.x.z.re, r.x.z.im, r.f,
                r.g, r.concurrence,
            ])
        })
        .collect();
    let mut obj = serde_json::Map::new();
    obj.insert("columns".into(), Value::from(columns));
    obj.insert("rows".into(), Value::from(data));
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).unwrap();
    s.push('\n');
    s
}

/// `evolve`: write the per-time trace of one run.
pub fn cmd_evolve(mut doc: Doc) -> Result<(), CliError> {
    let cfg = parse_common(&mut doc)?;
    let param = parse_family_param(&mut doc, cfg.family)?;
    doc.finish()?;
    let rows = evolve_rows(&cfg, param)?;
    let body = match cfg.format {
        OutputFormat::Csv => trace_csv(&rows),
        OutputFormat::Json => trace_json(&rows),
    };
    write_all(cfg.output.as_ref(), &body)
}

pub const SCAN_COLUMNS: [&str; 5] = ["param", "omega_c", "t_esd", "revivals", "status"];

pub fn scan_csv(result: &crate::scan::ScanResult) -> String {
    let cfg = &result.config;
    let mut s = String::new();
    s.push_str(&SCAN_COLUMNS.join(","));
    s.push('\n');
    for i in 0..cfg.param.steps {
        for j in 0..cfg.omega_c.steps {
            let cell = result.cell(i, j);
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(cfg.param.value(i)),
                fmt_f64(cfg.omega_c.value(j)),
                fmt_f64(cell.t_esd),
                cell.revivals,
                cell.status.as_str()
            ));
        }
    }
    s
}

fn scan_json(result: &crate::scan::ScanResult) -> String {
    let cfg = &result.config;
    let mut cells = Vec::new();
    for i in 0..cfg.param.steps {
        for j in 0..cfg.omega_c.steps {
            let cell = result.cell(i, j);
            let mut obj = serde_json::Map::new();
            obj.insert("param".into(), Value::from(cfg.param.value(i)));
            obj.insert("omega_c".into(), Value::from(cfg.omega_c.value(j)));
            obj.insert(
                "t_esd".into(),
                if cell.t_esd.is_finite() {
                    Value::from(cell.t_esd)
                } else {
                    Value::from("inf")
                },
            );
            obj.insert("revivals".into(), Value::from(cell.revivals));
            obj.insert("status".into(), Value::from(cell.status.as_str()));
            cells.push(Value::Object(obj));
        }
    }
    let mut root = serde_json::Map::new();
    root.insert("family".into(), Value::from(cfg.family.as_str()));
    root.insert("model".into(), Value::from(cfg.model.as_str()));
    root.insert("cells".into(), Value::from(cells));
    let mut s = serde_json::to_string_pretty(&Value::Object(root)).unwrap();
    s.push('\n');
    s
}

/// `scan`: sweep (family parameter x omega_c) and write the grid,
/// parameter-major.
pub fn cmd_scan(mut doc: Doc) -> Result<(), CliError> {
    let cfg = parse_common(&mut doc)?;
    check_model_params(cfg.model, &cfg.params)?;
    if cfg.params.gamma1 != cfg.params.gamma2 {
        return Err(CliError::Config(
            "keys \"gamma1\"/\"gamma2\" must match for scans".into(),
        ));
    }
    let (lo, hi) = cfg.family.bounds();
    let param_min = doc.take_f64("param_min")?.unwrap_or(lo);
    let param_max = doc.take_f64("param_max")?.unwrap_or(hi);
    let param_steps = doc.take_usize("param_steps")?.unwrap_or(101);
    let omega_c_min = doc.take_f64("omega_c_min")?.unwrap_or(0.0);
    let omega_c_max = doc.take_f64("omega_c_max")?.unwrap_or(20.0);
    let omega_c_steps = doc.take_usize("omega_c_steps")?.unwrap_or(101);
    doc.finish()?;

    let scan_config = ScanConfig {
        family: cfg.family,
        param: AxisRange {
            min: param_min,
            max: param_max,
            steps: param_steps,
        },
        omega_c: AxisRange {
            min: omega_c_min,
            max: omega_c_max,
            steps: omega_c_steps,
        },
        model: cfg.model,
        gamma: cfg.params.gamma1,
        rabi: cfg.params.rabi1,
        nbar1: cfg.params.nbar1,
        nbar2: cfg.params.nbar2,
        t_max: cfg.t_max,
        dt: cfg.dt,
        epsilon: cfg.epsilon,
    };
    let result = run_scan(&scan_config).map_err(scan_err)?;
    if result.cells.iter().any(|c| c.status == CellStatus::NumericFailure) {
        // Grid completes regardless; the flag column records the failures.
        eprintln!("warning: some cells reported numeric_failure");
    }
    let body = match cfg.format {
        OutputFormat::Csv => scan_csv(&result),
        OutputFormat::Json => scan_json(&result),
    };
    write_all(cfg.output.as_ref(), &body)
}

/// `validate`: run the oracle suite and report one line per check.
pub fn cmd_validate(dt_scale: f64) -> Result<(), CliError> {
    let checks = crate::validate::run_all(dt_scale);
    let mut all_ok = true;
    for check in &checks {
        let verdict = if check.passed() { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} (max deviation {:.3e}, tolerance {:.1e})",
            check.name, check.max_deviation, check.tolerance
        );
        all_ok &= check.passed();
    }
    if all_ok {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

/// `families`: list the initial-state families and their parameter ranges.
pub fn cmd_families() {
    println!("werner  f in [0.25, 1]  singlet/identity mixture; concurrence 2f-1 at t=0");
    println!("ye      alpha in [0, 1]  shared one-excitation coherence block, alpha/3 on |11>");
    println!("egge    p in [0, 1]      diagonal mixture (1-p)|10><10| + p|01><01|");
    println!("eegg    s in [0, 1]      diagonal mixture s|11><11| + (1-s)|00><00|");
}

/// Allowed keys for the evolve subcommand.
pub fn evolve_allowed_keys() -> Vec<&'static str> {
    PHYSICS_KEYS.to_vec()
}

/// Allowed keys for the scan subcommand: everything except the scalar
/// family parameters, which a scan replaces with the param axis.
pub fn scan_allowed_keys() -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = PHYSICS_KEYS
        .iter()
        .copied()
        .filter(|k| !["f", "alpha", "p", "s"].contains(k))
        .collect();
    keys.extend_from_slice(SCAN_ONLY_KEYS);
    keys
}

/// Finish consuming a doc, rejecting leftovers (keys that do not apply).
pub fn finish_doc(doc: Doc) -> Result<(), CliError> {
    doc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_from_json(json: &str, allowed: &[&str]) -> Result<Doc, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, json).unwrap();
        Doc::load(Some(&path), vec![], allowed)
    }

    #[test]
    fn unknown_key_is_named() {
        let err = doc_from_json(r#"{"family":"werner","bogus":1}"#, PHYSICS_KEYS).unwrap_err();
        assert!(err.message().contains("bogus"), "{}", err.message());
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn malformed_json_is_line_anchored() {
        let err = doc_from_json("{\n  \"family\": werner\n}", PHYSICS_KEYS).unwrap_err();
        assert!(err.message().contains(":2:"), "{}", err.message());
    }

    #[test]
    fn wrong_type_is_named() {
        let mut doc = doc_from_json(r#"{"gamma":"fast"}"#, PHYSICS_KEYS).unwrap();
        let err = doc.take_f64("gamma").unwrap_err();
        assert!(err.message().contains("gamma"));
    }

    #[test]
    fn family_param_key_must_match() {
        let mut doc =
            doc_from_json(r#"{"family":"werner","p":0.3}"#, PHYSICS_KEYS).unwrap();
        let _ = parse_model(&mut doc).unwrap();
        let family = parse_family(&mut doc).unwrap();
        let err = parse_family_param(&mut doc, family).unwrap_err();
        assert!(err.message().contains("\"p\""), "{}", err.message());
    }

    #[test]
    fn flags_override_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{"family":"werner","f":0.5}"#).unwrap();
        let mut doc = Doc::load(
            Some(&path),
            vec![("f", Value::from(1.0))],
            PHYSICS_KEYS,
        )
        .unwrap();
        assert_eq!(doc.take_f64("f").unwrap(), Some(1.0));
    }

    #[test]
    fn fmt_round_trips() {
        for v in [0.1, 1.0 / 3.0, 2.5e-17, -0.0, 123456.789012345, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn evolve_rows_kinetic_werner() {
        let mut doc = doc_from_json(
            r#"{"family":"werner","f":1,"gamma":1,"omega_c":5,"model":"kinetic","t_max":2}"#,
            PHYSICS_KEYS,
        )
        .unwrap();
        let cfg = parse_common(&mut doc).unwrap();
        let param = parse_family_param(&mut doc, cfg.family).unwrap();
        finish_doc(doc).unwrap();
        let rows = evolve_rows(&cfg, param).unwrap();
        let last_entangled = rows
            .iter()
            .rev()
            .find(|r| r.concurrence > 1e-6)
            .expect("should start entangled");
        assert!(
            (last_entangled.t - 0.84).abs() < 0.01,
            "t = {}",
            last_entangled.t
        );
    }
}
