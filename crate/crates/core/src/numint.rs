//! Initial-value integration: an embedded Dormand-Prince 4(5) pair with
//! adaptive step control (default) and a fixed-step classical RK4, both with
//! dense output on a uniform grid via cubic Hermite interpolation of the
//! accepted steps.

use crate::dynsys::{DynamicalSystem, VectorField};
use crate::expr::{EvalError, Point, VarSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Embedded 4(5) pair, adaptive step.
    AdaptiveRk45,
    /// Classical RK4 with step = `initial_step`.
    FixedRk4,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    pub atol: f64,
    pub rtol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    /// Upper bound on the step size. Dense output is cubic Hermite, one
    /// order below the stepper, so accuracy of interpolated observables is
    /// governed by this cap rather than by the tolerances alone.
    pub max_step: f64,
    pub max_steps: usize,
    /// Number of uniform output grid points (>= 2).
    pub grid_size: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::AdaptiveRk45,
            atol: 1e-10,
            rtol: 1e-10,
            initial_step: 1e-3,
            min_step: 1e-14,
            max_step: 0.01,
            max_steps: 1_000_000,
            grid_size: 200,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.atol = tol;
        self.rtol = tol;
        self
    }

    pub fn with_grid(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NumIntError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("exceeded {max} steps at t = {t}")]
    MaxSteps { t: f64, max: usize },
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: EvalError },
    #[error("bad integrator configuration: {0}")]
    BadConfig(&'static str),
}

/// Dense solution samples on a uniform grid over the requested span.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn end_point(&self) -> Point {
        Point::new(self.states.last().unwrap().clone(), *self.t.last().unwrap())
    }
}

/// Integrate a dynamical system from `u0.u` at `u0.t + t_span.0`... the span
/// is absolute: integration runs from `t_span.0` to `t_span.1` with initial
/// state `u0.u` (the point's own `t` is ignored in favour of `t_span.0`).
pub fn integrate(
    ds: &DynamicalSystem,
    u0: &Point,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory, NumIntError> {
    let vs = ds.vars().clone();
    let rhs_exprs = ds.rhs().to_vec();
    let mut rhs = move |t: f64, y: &[f64], out: &mut [f64]| -> Result<(), EvalError> {
        let pt = Point::new(y.to_vec(), t);
        for (o, e) in out.iter_mut().zip(&rhs_exprs) {
            *o = e.eval(&vs, &pt)?;
        }
        Ok(())
    };
    integrate_raw(&mut rhs, &u0.u, t_span, cfg)
}

/// Flow of a vector field in its group parameter `s`, holding time fixed at
/// the start point's `t`. Returns the transported point.
pub fn flow_map(
    vs: &VarSet,
    field: &VectorField,
    start: &Point,
    s: f64,
    cfg: &IntegratorConfig,
) -> Result<Point, NumIntError> {
    let t_fixed = start.t;
    let phi = field.phi.clone();
    let vs_owned = vs.clone();
    let mut rhs = move |_s: f64, y: &[f64], out: &mut [f64]| -> Result<(), EvalError> {
        let pt = Point::new(y.to_vec(), t_fixed);
        for (o, e) in out.iter_mut().zip(&phi) {
            *o = e.eval(&vs_owned, &pt)?;
        }
        Ok(())
    };
    let traj = integrate_raw(&mut rhs, &start.u, (0.0, s), cfg)?;
    Ok(Point::new(traj.states.last().unwrap().clone(), t_fixed))
}

type Rhs<'a> = dyn FnMut(f64, &[f64], &mut [f64]) -> Result<(), EvalError> + 'a;

struct Node {
    t: f64,
    y: Vec<f64>,
    f: Vec<f64>,
}

pub(crate) fn integrate_raw(
    rhs: &mut Rhs,
    y0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory, NumIntError> {
    if cfg.grid_size < 2 {
        return Err(NumIntError::BadConfig("grid_size must be at least 2"));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(cfg.atol)
        || !positive(cfg.rtol)
        || !positive(cfg.min_step)
        || !positive(cfg.initial_step)
    {
        return Err(NumIntError::BadConfig("tolerances and steps must be positive"));
    }
    let (t0, t1) = t_span;
    let n = y0.len();
    if t0 == t1 {
        let t = vec![t0; cfg.grid_size];
        let states = vec![y0.to_vec(); cfg.grid_size];
        return Ok(Trajectory {
            t,
            states,
            accepted_steps: 0,
            rejected_steps: 0,
        });
    }

    let mut f0 = vec![0.0; n];
    rhs(t0, y0, &mut f0).map_err(|source| NumIntError::Rhs { t: t0, source })?;
    let mut nodes = vec![Node {
        t: t0,
        y: y0.to_vec(),
        f: f0,
    }];

    let (accepted, rejected) = match cfg.method {
        Method::AdaptiveRk45 => adaptive_rk45(rhs, &mut nodes, t_span, cfg)?,
        Method::FixedRk4 => fixed_rk4(rhs, &mut nodes, t_span, cfg)?,
    };

    Ok(dense_output(&nodes, t_span, cfg.grid_size, accepted, rejected))
}

// Dormand-Prince 5(4) coefficients (FSAL: the 7th stage is the derivative
// at the accepted point).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the 5th- and 4th-order weights: the error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

fn adaptive_rk45(
    rhs: &mut Rhs,
    nodes: &mut Vec<Node>,
    (t0, t1): (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(usize, usize), NumIntError> {
    let n = nodes[0].y.len();
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let h_cap = cfg.max_step.min(span);
    let mut h = cfg.initial_step.min(h_cap) * dir;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut steps = 0usize;

    let mut k = vec![vec![0.0; n]; 7];
    let mut y_stage = vec![0.0; n];

    loop {
        let node = nodes.last().unwrap();
        let t = node.t;
        if (t - t1) * dir >= 0.0 {
            break;
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(NumIntError::MaxSteps {
                t,
                max: cfg.max_steps,
            });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() < cfg.min_step {
            return Err(NumIntError::StepUnderflow { t });
        }

        k[0].copy_from_slice(&node.f);
        let mut stage_failed = false;
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc += A[stage][j] * kj[i];
                }
                y_stage[i] = node.y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(stage);
            let _ = head;
            if rhs(t + C[stage] * h, &y_stage, &mut tail[0]).is_err() {
                stage_failed = true;
                break;
            }
        }
        if stage_failed {
            // Probed outside the domain: retry with a shorter step.
            rejected += 1;
            h *= 0.5;
            continue;
        }
        // The 7th stage was evaluated at the candidate y_new (row 6 of A).
        let y_new = y_stage.clone();

        let mut err_norm = 0.0f64;
        for i in 0..n {
            if !y_new[i].is_finite() {
                return Err(NumIntError::NonFinite { t });
            }
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let scale = cfg.atol + cfg.rtol * node.y[i].abs().max(y_new[i].abs());
            err_norm = err_norm.max((e / scale).abs());
        }

        if err_norm <= 1.0 {
            accepted += 1;
            nodes.push(Node {
                t: t + h,
                y: y_new,
                f: k[6].clone(),
            });
        } else {
            rejected += 1;
        }

        let scale = if err_norm == 0.0 {
            MAX_SCALE
        } else {
            (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        };
        h *= scale;
        if h.abs() > h_cap {
            h = h_cap * dir;
        }
    }
    Ok((accepted, rejected))
}

fn fixed_rk4(
    rhs: &mut Rhs,
    nodes: &mut Vec<Node>,
    (t0, t1): (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(usize, usize), NumIntError> {
    let n = nodes[0].y.len();
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let h_nominal = cfg.initial_step * dir;
    let mut steps = 0usize;
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    loop {
        let node = nodes.last().unwrap();
        let t = node.t;
        if (t - t1) * dir >= 0.0 {
            break;
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(NumIntError::MaxSteps {
                t,
                max: cfg.max_steps,
            });
        }
        let mut h = h_nominal;
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let fail = |source| NumIntError::Rhs { t, source };
        let k1 = node.f.clone();
        for i in 0..n {
            tmp[i] = node.y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2).map_err(fail)?;
        for i in 0..n {
            tmp[i] = node.y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3).map_err(fail)?;
        for i in 0..n {
            tmp[i] = node.y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4).map_err(fail)?;
        let y_new: Vec<f64> = (0..n)
            .map(|i| node.y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if y_new.iter().any(|v| !v.is_finite()) {
            return Err(NumIntError::NonFinite { t });
        }
        let mut f_new = vec![0.0; n];
        rhs(t + h, &y_new, &mut f_new).map_err(fail)?;
        nodes.push(Node {
            t: t + h,
            y: y_new,
            f: f_new,
        });
    }
    Ok((nodes.len() - 1, 0))
}

/// Cubic Hermite interpolation of the accepted steps onto a uniform grid.
fn dense_output(
    nodes: &[Node],
    (t0, t1): (f64, f64),
    grid_size: usize,
    accepted: usize,
    rejected: usize,
) -> Trajectory {
    let n = nodes[0].y.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t_grid = Vec::with_capacity(grid_size);
    let mut states = Vec::with_capacity(grid_size);
    let mut seg = 0usize;
    for g in 0..grid_size {
        let frac = g as f64 / (grid_size - 1) as f64;
        let tg = t0 + (t1 - t0) * frac;
        while seg + 2 < nodes.len() && (nodes[seg + 1].t - tg) * dir < 0.0 {
            seg += 1;
        }
        let a = &nodes[seg];
        let b = &nodes[seg + 1.min(nodes.len() - 1 - seg)];
        let h = b.t - a.t;
        let y = if h == 0.0 || tg == a.t {
            a.y.clone()
        } else if tg == b.t {
            b.y.clone()
        } else {
            // Incremental form y0 + h01 (y1 - y0) + ...: exact on constant
            // segments and free of the y0/y1 cancellation.
            let theta = (tg - a.t) / h;
            let h10 = theta * (1.0 - theta) * (1.0 - theta);
            let h01 = theta * theta * (3.0 - 2.0 * theta);
            let h11 = theta * theta * (theta - 1.0);
            (0..n)
                .map(|i| {
                    a.y[i] + h01 * (b.y[i] - a.y[i]) + h * (h10 * a.f[i] + h11 * b.f[i])
                })
                .collect()
        };
        t_grid.push(tg);
        states.push(y);
    }
    Trajectory {
        t: t_grid,
        states,
        accepted_steps: accepted,
        rejected_steps: rejected,
    }
}
