//! Concurrence and sudden-death bookkeeping.
//!
//! For X-states the concurrence reduces to 2 max(0, F, G) with
//! F = |z| - sqrt(a d) and G = |w| - sqrt(b c). The general Wootters formula
//! (via the Hermitian square-root route) serves both as the oracle for the
//! fast path and as the evaluator for states the driven evolution pushes off
//! the X form.

use crate::dynamics::{DensityMatrix, Trajectory};
use crate::qmatrix::{eigvals_hermitized, pauli_y, psd_sqrt, tensor, MatrixError};
use crate::xstate::{off_x_norm, XState};
use thiserror::Error;

/// Off-X entry size below which a density matrix is treated as an exact
/// X-state and scored by the fast path.
const X_FASTPATH_TOL: f64 = 1e-12;

/// Fraction of the grid step to which crossings are refined by bisection.
const BISECT_FRACTION: f64 = 1.0 / 1024.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EsdError {
    #[error("concurrence trace is empty")]
    EmptyTrace,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// F = |z| - sqrt(a d). Never exceeds 1/2 for a valid state.
pub fn f_function(x: &XState) -> f64 {
    x.z.norm() - (x.a * x.d).max(0.0).sqrt()
}

/// G = |w| - sqrt(b c). Never exceeds 1/2 for a valid state.
pub fn g_function(x: &XState) -> f64 {
    x.w.norm() - (x.b * x.c).max(0.0).sqrt()
}

/// Concurrence of an X-state: 2 max(0, F, G), clamped to [0, 1].
pub fn concurrence_x(x: &XState) -> f64 {
    (2.0 * f_function(x).max(g_function(x)).max(0.0)).clamp(0.0, 1.0)
}

/// Unclamped concurrence signal of an X-state: 2 max(F, G). Negative past
/// a sudden death, which keeps it smooth where the clamped concurrence has
/// a kink.
pub fn concurrence_signal_x(x: &XState) -> f64 {
    2.0 * f_function(x).max(g_function(x))
}

/// Unclamped Wootters signal: l1 - l2 - l3 - l4 with the l_i the descending
/// square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy), computed
/// through the Hermitian product sqrt(rho) rho~ sqrt(rho).
pub fn concurrence_general_signal(rho: &DensityMatrix) -> Result<f64, MatrixError> {
    let yy = tensor(&pauli_y(), &pauli_y());
    let spin_flipped = yy * rho.matrix().conj() * yy;
    let s = psd_sqrt(rho.matrix())?;
    let m = (s * spin_flipped * s).hermitized();
    let vals = eigvals_hermitized(&m);
    let l: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok(l[0] - l[1] - l[2] - l[3])
}

/// Wootters concurrence of an arbitrary two-qubit state.
pub fn concurrence_general(rho: &DensityMatrix) -> Result<f64, MatrixError> {
    Ok(concurrence_general_signal(rho)?.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub concurrence: f64,
    pub f: f64,
    pub g: f64,
    /// Unclamped concurrence precursor: 2 max(F, G) for X-states, the raw
    /// eigenvalue difference for Wootters samples. Smooth through deaths,
    /// which is what crossing refinement interpolates.
    pub signal: f64,
}

/// Uniform-grid concurrence samples with the death-detection tolerance they
/// will be scanned at.
#[derive(Debug, Clone)]
pub struct ConcurrenceTrace {
    pub samples: Vec<TraceSample>,
    pub dt: f64,
    pub epsilon: f64,
}

impl ConcurrenceTrace {
    /// Build from an X-state trajectory; concurrence is the exact X formula.
    pub fn from_xstates(samples: &[(f64, XState)], dt: f64, epsilon: f64) -> Self {
        let samples = samples
            .iter()
            .map(|(t, x)| {
                let f = f_function(x);
                let g = g_function(x);
                let signal = 2.0 * f.max(g);
                TraceSample {
                    t: *t,
                    concurrence: signal.clamp(0.0, 1.0),
                    f,
                    g,
                    signal,
                }
            })
            .collect();
        ConcurrenceTrace {
            samples,
            dt,
            epsilon,
        }
    }

    /// Build from a density-matrix trajectory. Samples that remain X-form
    /// use the exact X formula; anything else goes through the Wootters
    /// oracle (F and G still report the X components for the record).
    pub fn from_trajectory(traj: &Trajectory, epsilon: f64) -> Result<Self, EsdError> {
        let mut samples = Vec::with_capacity(traj.samples.len());
        for (t, rho) in &traj.samples {
            let x = XState::components_of(rho);
            let f = f_function(&x);
            let g = g_function(&x);
            let signal = if off_x_norm(rho.matrix()) < X_FASTPATH_TOL {
                2.0 * f.max(g)
            } else {
                concurrence_general_signal(rho)?
            };
            samples.push(TraceSample {
                t: *t,
                concurrence: signal.clamp(0.0, 1.0),
                f,
                g,
                signal,
            });
        }
        Ok(ConcurrenceTrace {
            samples,
            dt: traj.dt,
            epsilon,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn max_concurrence(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.concurrence)
            .fold(0.0, f64::max)
    }

    /// Piecewise-cubic (Catmull-Rom) interpolation of the unclamped signal.
    pub fn interpolate(&self, t: f64) -> f64 {
        let n = self.samples.len();
        if n == 1 {
            return self.samples[0].signal;
        }
        let t0 = self.samples[0].t;
        let idx = ((t - t0) / self.dt).floor();
        let i = (idx.max(0.0) as usize).min(n - 2);
        let s = ((t - self.samples[i].t) / self.dt).clamp(0.0, 1.0);
        let at = |k: isize| -> f64 {
            let k = k.clamp(0, (n - 1) as isize) as usize;
            self.samples[k].signal
        };
        let (p0, p1, p2, p3) = (at(i as isize - 1), at(i as isize), at(i as isize + 1), at(i as isize + 2));
        p1 + 0.5
            * s
            * (p2 - p0
                + s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + s * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingKind {
    /// Concurrence fell below the tolerance.
    Death,
    /// Concurrence rose above the tolerance (a sudden-birth event).
    Birth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEvent {
    pub time: f64,
    pub kind: CrossingKind,
}

/// Outcome of scanning a concurrence trace for deaths and revivals.
///
/// `t_esd` is the end of the last positive interval; 0 for a state that
/// never entangles, and +infinity (with `positive_at_horizon` set) when the
/// concurrence is still above tolerance at the end of the trace, preserving
/// the sudden-death / exponential-decay distinction.
#[derive(Debug, Clone, PartialEq)]
pub struct EsdReport {
    pub t_esd: f64,
    /// Number of sudden-birth events: upward crossings of the tolerance at
    /// t > 0. For an initially entangled state this equals the number of
    /// positive intervals after the first.
    pub revival_count: usize,
    pub death_birth_times: Vec<CrossingEvent>,
    pub positive_at_horizon: bool,
    pub horizon: f64,
}

/// Locate the deaths and births of entanglement along a trace.
///
/// Sign changes of (concurrence - epsilon) between grid samples are refined
/// by bisection to dt/1024, using the analytic evaluator when one exists and
/// cubic interpolation of the trace otherwise. Bisection runs on the
/// unclamped signal, whose crossings of epsilon coincide with the
/// concurrence's but which stays smooth through deaths; an evaluator should
/// therefore also return the unclamped signal.
pub fn detect_esd(
    trace: &ConcurrenceTrace,
    evaluator: Option<&dyn Fn(f64) -> f64>,
) -> Result<EsdReport, EsdError> {
    if trace.samples.is_empty() {
        return Err(EsdError::EmptyTrace);
    }
    let eps = trace.epsilon;
    let horizon = trace.horizon();
    let value = |t: f64| -> f64 {
        match evaluator {
            Some(f) => f(t),
            None => trace.interpolate(t),
        }
    };

    let mut events = Vec::new();
    let mut positive = trace.samples[0].signal > eps;
    for pair in trace.samples.windows(2) {
        let now = pair[1].signal > eps;
        if now != positive {
            // Bisect the bracketing interval down to dt/1024.
            let (mut lo, mut hi) = (pair[0].t, pair[1].t);
            let target = trace.dt * BISECT_FRACTION;
            let lo_above = value(lo) > eps;
            while hi - lo > target {
                let mid = 0.5 * (lo + hi);
                if (value(mid) > eps) == lo_above {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            events.push(CrossingEvent {
                time: 0.5 * (lo + hi),
                kind: if now {
                    CrossingKind::Birth
                } else {
                    CrossingKind::Death
                },
            });
            positive = now;
        }
    }

    let positive_at_horizon = positive;
    let revival_count = events
        .iter()
        .filter(|e| e.kind == CrossingKind::Birth)
        .count();
    let t_esd = if positive_at_horizon {
        f64::INFINITY
    } else {
        events
            .iter()
            .rev()
            .find(|e| e.kind == CrossingKind::Death)
            .map(|e| e.time)
            .unwrap_or(0.0)
    };

    Ok(EsdReport {
        t_esd,
        revival_count,
        death_birth_times: events,
        positive_at_horizon,
        horizon,
    })
}
