//! Adaptive Dormand–Prince 5(4) integration sampled on a prescribed time grid.
//!
//! Steps are shortened to land exactly on grid times, so samples carry the
//! full order of the method without interpolation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 200_000 }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-2, ..Self::default() }
    }
}

/// Verdict of the step monitor on a candidate state.
pub enum Control {
    Continue,
    /// Treat the step as rejected and retry with a smaller one.
    Reject,
    Stop(Error),
}

/// Where an integration stopped early.
#[derive(Debug)]
pub struct Halt {
    pub t: f64,
    pub y: Vec<f64>,
    pub error: Error,
}

#[derive(Debug)]
pub struct OdeRun {
    /// One state per grid time reached, starting with the initial state.
    pub samples: Vec<Vec<f64>>,
    pub halt: Option<Halt>,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn axpy(y: &[f64], h: f64, ks: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, &c) in ks.iter().zip(coeffs) {
        if c != 0.0 {
            for (o, ki) in out.iter_mut().zip(k) {
                *o += h * c * ki;
            }
        }
    }
    out
}

/// One attempted step: the new state and the scaled error norm.
fn attempt<F>(rhs: &mut F, t: f64, y: &[f64], k1: &[f64], h: f64, opts: &OdeOptions) -> Result<(Vec<f64>, Vec<f64>, f64)>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut ks: Vec<Vec<f64>> = vec![k1.to_vec()];
    for s in 1..7 {
        let ys = axpy(y, h, &ks, &A[s][..s]);
        let k = rhs(t + C[s] * h, &ys)?;
        if s == 6 {
            let err = ks
                .iter()
                .chain(std::iter::once(&k))
                .zip(&E)
                .fold(vec![0.0; y.len()], |mut acc, (k, &e)| {
                    for (a, ki) in acc.iter_mut().zip(k) {
                        *a += h * e * ki;
                    }
                    acc
                });
            let norm = (err
                .iter()
                .zip(y.iter().zip(&ys))
                .map(|(e, (a, b))| (e / (opts.atol + opts.rtol * a.abs().max(b.abs()))).powi(2))
                .sum::<f64>()
                / y.len() as f64)
                .sqrt();
            if !norm.is_finite() {
                return Err(Error::StepFailure { t, reason: "non-finite error estimate".into() });
            }
            return Ok((ys, k, norm));
        }
        ks.push(k);
    }
    unreachable!()
}

/// Integrates `y' = rhs(t, y)` from `grid[0]` through the monotone `grid`.
/// Evaluation errors of `rhs` count as rejected steps; `monitor` inspects
/// every candidate state before it is accepted.
pub fn integrate<F, M>(mut rhs: F, y0: &[f64], grid: &[f64], opts: &OdeOptions, mut monitor: M) -> OdeRun
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    M: FnMut(f64, &[f64]) -> Control,
{
    let mut samples = vec![y0.to_vec()];
    let halt = |t: f64, y: &[f64], error: Error| Some(Halt { t, y: y.to_vec(), error });
    if grid.len() < 2 {
        return OdeRun { samples, halt: None };
    }
    let span = grid[grid.len() - 1] - grid[0];
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    if grid.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) {
        let error = Error::InvalidInput("time grid must be monotone".into());
        return OdeRun { samples, halt: halt(grid[0], y0, error) };
    }

    let mut t = grid[0];
    let mut y = y0.to_vec();
    let mut k1 = match rhs(t, &y) {
        Ok(k) => k,
        Err(e) => return OdeRun { samples, halt: halt(t, &y, e) },
    };
    let mut h = dir * (span.abs() * 1e-3).clamp(1e-8, 1e-2);
    let mut last_failure = String::from("step size underflow");
    let mut steps = 0;
    for &target in &grid[1..] {
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                let error = Error::StepFailure { t, reason: "step budget exhausted".into() };
                return OdeRun { samples, halt: halt(t, &y, error) };
            }
            let h_min = 1e-14 * t.abs().max(1.0);
            if h.abs() < h_min {
                let error = Error::StepFailure { t, reason: last_failure };
                return OdeRun { samples, halt: halt(t, &y, error) };
            }
            let lands = (t + h - target) * dir >= 0.0;
            let step = if lands { target - t } else { h };
            match attempt(&mut rhs, t, &y, &k1, step, opts) {
                Err(e) => {
                    last_failure = e.to_string();
                    h *= 0.25;
                }
                Ok((_, _, err)) if err > 1.0 => {
                    h = step * (0.9 * err.powf(-0.2)).max(0.2);
                }
                Ok((y_new, k_new, err)) => {
                    let t_new = if lands { target } else { t + step };
                    match monitor(t_new, &y_new) {
                        Control::Reject => {
                            last_failure = "state rejected by monitor".into();
                            h = step * 0.25;
                        }
                        Control::Stop(error) => return OdeRun { samples, halt: halt(t_new, &y_new, error) },
                        Control::Continue => {
                            t = t_new;
                            y = y_new;
                            k1 = k_new;
                            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                            // a step cut short to hit the grid does not shrink the next one
                            let proposed = step * grow;
                            h = if lands && proposed.abs() < h.abs() { h } else { proposed };
                        }
                    }
                }
            }
        }
        samples.push(y.clone());
    }
    OdeRun { samples, halt: None }
}
