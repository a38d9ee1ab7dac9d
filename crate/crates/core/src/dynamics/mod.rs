//! Reduced flows of the commuting Hamiltonians, computed two ways: by
//! projecting the free flow upstairs onto the eigenvalues of `D D†`, and by
//! integrating Hamilton's equations in the local Darboux chart or in the
//! global complex model.
//!
//! Sign convention. With `ω = Σ dq̂ ∧ dp̂` the equations of motion are
//!
//! ```text
//! dp̂/dt = ∂H/∂q̂,   dq̂/dt = −∂H/∂p̂
//! ```
//!
//! and in the global model, with weights `w_j = 1` for `j < n` and
//! `w_n = 1 − |z_n|²`, `ż_j = i w_j ∂H/∂z̄_j`. Both were fixed by agreement
//! with the projection method, which involves no convention at all.
//!
//! Local gradients are exact; global ones use the five-point stencil of
//! [`fd`] with step `10⁻³`, shortened near the rim of the disk.

pub mod fd;
pub mod ode;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::global::K_global;
use crate::group::GroupPoint;
use crate::hamiltonians::{h_k_gradient_local, lax, lax_local, LaxMatrix};
use crate::linalg::{cartan_position, herm_exp_action, C64};
use crate::local::{in_closed_chamber, wall_distances, z_of_local, CouplingParams, GlobalPoint, LocalPoint};

use fd::{try_gradient, Stencil};
pub use ode::OdeOptions;
use ode::{integrate, Control, OdeRun};

/// Distance to a chamber wall at which the local integration stops.
pub const BOUNDARY_THRESHOLD: f64 = 1e-8;
/// `|z_n|` beyond which the global integration is declared to have left the disk.
pub const DISK_THRESHOLD: f64 = 1.0 - 1e-12;
const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "chart", rename_all = "snake_case")]
pub enum State {
    Local(LocalPoint),
    Global { re: Vec<f64>, im: Vec<f64> },
}

impl State {
    pub fn global(z: &GlobalPoint) -> Self {
        State::Global { re: z.z.iter().map(|c| c.re).collect(), im: z.z.iter().map(|c| c.im).collect() }
    }

    /// `[p̂, q̂]` or `[Re z, Im z]`.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            State::Local(pt) => pt.to_vec(),
            State::Global { re, im } => re.iter().chain(im).cloned().collect(),
        }
    }

    pub fn lax(&self, params: &CouplingParams) -> Result<LaxMatrix> {
        match self {
            State::Local(pt) => lax_local(params, pt),
            State::Global { .. } => lax(params, &GlobalPoint::from_slice(&self.coordinates())?),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// `h_1 … h_n` at every sample.
    pub conserved: Vec<Vec<f64>>,
}

impl Trajectory {
    fn from_states(params: &CouplingParams, times: Vec<f64>, states: Vec<State>) -> Result<Self> {
        let conserved = states
            .iter()
            .map(|s| Ok(s.lax(params)?.power_traces(params.n)))
            .collect::<Result<_>>()?;
        Ok(Self { times, states, conserved })
    }

    /// `max_{t,j} |h_j(t) − h_j(0)| / (1 + |h_j(0)|)`.
    pub fn max_relative_drift(&self) -> f64 {
        let Some(first) = self.conserved.first() else { return 0.0 };
        self.conserved
            .iter()
            .flat_map(|row| row.iter().zip(first).map(|(h, h0)| (h - h0).abs() / (1.0 + h0.abs())))
            .fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `n + 1` equally spaced times from 0 to `t_max`.
pub fn uniform_grid(t_max: f64, samples: usize) -> Vec<f64> {
    if samples == 0 || t_max == 0.0 {
        return vec![0.0];
    }
    (0..=samples).map(|i| t_max * i as f64 / samples as f64).collect()
}

fn check_k(n: usize, k: usize) -> Result<u32> {
    if k == 0 || k > n {
        Err(Error::InvalidInput(format!("k = {k} must lie in 1..={n}")))
    } else {
        Ok(k as u32)
    }
}

/// `K(t) = g_L(0) exp(−i t Lᵏ) b_R(0)⁻¹`: the flow of `h_k` upstairs, which
/// keeps `b_R` fixed.
///
/// The generator is taken traceless, `Lᵏ − tr(Lᵏ)/2n`, so that `K(t)` stays
/// unimodular; the dropped scalar phase is invisible to every gauge-invariant
/// quantity.
pub fn free_flow(k0: &GroupPoint, k: usize, t: f64) -> Result<GroupPoint> {
    let power = check_k(k0.n(), k)?;
    if t == 0.0 {
        return Ok(k0.clone());
    }
    let l = k0.b_r().adjoint() * k0.b_r();
    let trace = LaxMatrix { l: l.clone() }.h(k) * 2.0 * k as f64;
    let phase = C64::from_polar(1.0, t * trace / l.nrows() as f64);
    let g = k0.g_l() * herm_exp_action(&l, power, t)? * phase;
    GroupPoint::from_right_factors(g, k0.b_r().clone())
}

/// `p̂(t)` read off from the Cartan position of `g_L(t)` along the free flow
/// started at `K_global(z0)`.
pub fn projected_p_trajectory(params: &CouplingParams, z0: &GlobalPoint, k: usize, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_k(params.n, k)?;
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("time grid must be increasing".into()));
    }
    let k0 = K_global(params, z0)?;
    grid.iter()
        .map(|&t| {
            let p_hat = cartan_position(free_flow(&k0, k, t)?.g_l())?.p_hat;
            if !in_closed_chamber(params.x, &p_hat, 1e-9) {
                return Err(Error::DomainViolation(format!("projected position {p_hat:?} left the chamber at t = {t}")));
            }
            Ok(p_hat)
        })
        .collect()
}

/// Hamilton's equations of `h_k` in the local chart, packed as `[p̂, q̂]`.
/// The gradient is exact: difference quotients lose accuracy near the walls,
/// where `h_k` behaves like the square root of the wall distance.
pub fn local_vector_field(params: &CouplingParams, k: usize, y: &[f64]) -> Result<Vec<f64>> {
    let n = params.n;
    let gap = wall_distances(params.x, &y[..n]).into_iter().fold(f64::INFINITY, f64::min);
    if !(gap > 0.0) {
        return Err(Error::DomainViolation(format!("wall distance {gap:.3e}")));
    }
    let (_, grad) = h_k_gradient_local(params, &LocalPoint::from_slice(y)?, k)?;
    let (dp, dq) = grad.split_at(n);
    Ok(dq.iter().cloned().chain(dp.iter().map(|g| -g)).collect())
}

fn global_hamiltonian(params: &CouplingParams, k: usize, y: &[f64]) -> Result<f64> {
    Ok(lax(params, &GlobalPoint::from_slice(y)?)?.h(k))
}

/// Hamilton's equations of `h_k` in the global model, packed as `[Re z, Im z]`.
pub fn global_vector_field(params: &CouplingParams, k: usize, y: &[f64]) -> Result<Vec<f64>> {
    let n = params.n;
    let r2 = y[n - 1].powi(2) + y[2 * n - 1].powi(2);
    let margin = 1.0 - r2.sqrt();
    if !(margin > 0.0) {
        return Err(Error::DomainViolation("z_n outside the unit disk".into()));
    }
    let h = FD_STEP.min(margin / 4.0);
    let grad = try_gradient(|y| global_hamiltonian(params, k, y), y, h, Stencil::Central4)?;
    let mut out = vec![0.0; 2 * n];
    for j in 0..n {
        // ż = i w ∂H/∂z̄ with ∂/∂z̄ = (∂_a + i ∂_b)/2
        let w = if j == n - 1 { 1.0 - r2 } else { 1.0 };
        out[j] = -w * grad[n + j] / 2.0;
        out[n + j] = w * grad[j] / 2.0;
    }
    Ok(out)
}

fn local_monitor(params: &CouplingParams) -> impl FnMut(f64, &[f64]) -> Control + '_ {
    move |t, y| {
        let gap = wall_distances(params.x, &y[..params.n]).into_iter().fold(f64::INFINITY, f64::min);
        if gap < 0.0 {
            Control::Reject
        } else if gap < BOUNDARY_THRESHOLD {
            match LocalPoint::from_slice(y) {
                Ok(pt) => Control::Stop(Error::BoundaryReached { t, state: Box::new(pt) }),
                Err(e) => Control::Stop(e),
            }
        } else {
            Control::Continue
        }
    }
}

fn global_monitor(n: usize) -> impl FnMut(f64, &[f64]) -> Control {
    move |t, y| {
        let r = y[n - 1].hypot(y[2 * n - 1]);
        if r >= 1.0 {
            Control::Reject
        } else if r >= DISK_THRESHOLD {
            Control::Stop(Error::EscapeDisk { t })
        } else {
            Control::Continue
        }
    }
}

fn check_start(params: &CouplingParams, n: usize, k: usize) -> Result<()> {
    params.validate()?;
    if n != params.n {
        return Err(Error::InvalidInput(format!("initial point has {n} components, expected {}", params.n)));
    }
    check_k(n, k).map(|_| ())
}

fn local_run(params: &CouplingParams, pt0: &LocalPoint, k: usize, grid: &[f64], opts: &OdeOptions) -> Result<OdeRun> {
    check_start(params, pt0.n(), k)?;
    let gap = wall_distances(params.x, &pt0.p_hat).into_iter().fold(f64::INFINITY, f64::min);
    if !(gap > BOUNDARY_THRESHOLD) {
        return Err(Error::DomainViolation(format!("initial point is not interior (wall distance {gap:.3e})")));
    }
    Ok(integrate(|_, y| local_vector_field(params, k, y), &pt0.to_vec(), grid, opts, local_monitor(params)))
}

fn local_states(samples: &[Vec<f64>]) -> Result<Vec<State>> {
    samples.iter().map(|y| Ok(State::Local(LocalPoint::from_slice(y)?))).collect()
}

/// Integrates the flow of `h_k` in the local chart over `grid`, stopping
/// with [`Error::BoundaryReached`] when the chamber boundary comes within
/// [`BOUNDARY_THRESHOLD`].
pub fn local_ode(params: &CouplingParams, pt0: &LocalPoint, k: usize, grid: &[f64], opts: &OdeOptions) -> Result<Trajectory> {
    let run = local_run(params, pt0, k, grid, opts)?;
    if let Some(halt) = run.halt {
        return Err(halt.error);
    }
    Trajectory::from_states(params, grid.to_vec(), local_states(&run.samples)?)
}

/// Like [`local_ode`], but on reaching the boundary the state is carried
/// into the global model and integration continues there.
pub fn local_ode_with_handoff(
    params: &CouplingParams,
    pt0: &LocalPoint,
    k: usize,
    grid: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    let run = local_run(params, pt0, k, grid, opts)?;
    let mut states = local_states(&run.samples)?;
    if let Some(halt) = run.halt {
        let Error::BoundaryReached { t, state } = halt.error else { return Err(halt.error) };
        let z = z_of_local(params, &state)?;
        let done = states.len();
        let rest: Vec<f64> = std::iter::once(t).chain(grid[done..].iter().cloned()).collect();
        let tail = global_ode(params, &z, k, &rest, opts)?;
        states.extend(tail.states.into_iter().skip(1));
    }
    Trajectory::from_states(params, grid.to_vec(), states)
}

/// Integrates the flow of `h_k` in the global model over `grid`, which may
/// run forwards or backwards in time.
pub fn global_ode(params: &CouplingParams, z0: &GlobalPoint, k: usize, grid: &[f64], opts: &OdeOptions) -> Result<Trajectory> {
    check_start(params, z0.n(), k)?;
    let n = params.n;
    let run = integrate(|_, y| global_vector_field(params, k, y), &z0.to_vec(), grid, opts, global_monitor(n));
    if let Some(halt) = run.halt {
        return Err(halt.error);
    }
    let states = run
        .samples
        .iter()
        .map(|y| Ok(State::global(&GlobalPoint::from_slice(y)?)))
        .collect::<Result<_>>()?;
    Trajectory::from_states(params, grid.to_vec(), states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::global::K_global;
    use crate::hamiltonians::h_k;
    use crate::local::{local_of_z, wrap_angle};
    use crate::momentum::constraint_residual;
    use crate::sampling::{random_global, random_near_corner, DEFAULT_PARAMS, DYNAMICS_PARAMS as PARAMS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_dev(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn free_flow_keeps_b_r_and_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let params = CouplingParams { n: 3, ..DEFAULT_PARAMS };
        let z = random_global(3, &mut rng);
        let k0 = K_global(&params, &z).unwrap();
        assert_eq!(free_flow(&k0, 1, 0.0).unwrap().matrix(), k0.matrix());
        let h0 = LaxMatrix::from_group(&k0).power_traces(3);
        for k in 1..=3 {
            let kt = free_flow(&k0, k, 0.8).unwrap();
            assert!((kt.b_r() - k0.b_r()).norm() < 1e-12);
            assert!(constraint_residual(&kt, &params) < 1e-9);
            let ht = LaxMatrix::from_group(&kt).power_traces(3);
            for (a, b) in ht.iter().zip(&h0) {
                assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
            }
        }
        assert!(free_flow(&k0, 4, 0.1).is_err());
    }

    #[test]
    fn projection_starts_at_initial_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let params = CouplingParams { n: 3, ..DEFAULT_PARAMS };
        let z = random_global(3, &mut rng);
        let p = projected_p_trajectory(&params, &z, 2, &uniform_grid(2.0, 40)).unwrap();
        let p0 = crate::local::p_hat_of_z(&params, &z);
        assert!(max_dev(&p[0], &p0) < 1e-10);
        assert!(p.iter().all(|p| in_closed_chamber(params.x, p, 1e-9)));
    }

    #[test]
    fn local_flow_matches_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let opts = OdeOptions::with_rtol(1e-12);
        for (n, k) in [(2, 1), (2, 2), (3, 1)] {
            let params = CouplingParams { n, ..PARAMS };
            let pt = random_near_corner(params.x, n, &mut rng);
            let grid = uniform_grid(1.0, 10);
            let traj = local_ode(&params, &pt, k, &grid, &opts).unwrap();
            let proj = projected_p_trajectory(&params, &z_of_local(&params, &pt).unwrap(), k, &grid).unwrap();
            for (s, p) in traj.states.iter().zip(&proj) {
                let State::Local(q) = s else { panic!("local state expected") };
                assert!(max_dev(&q.p_hat, p) < 1e-6, "n = {n}, k = {k}");
            }
            assert!(traj.max_relative_drift() < 1e-8, "{}", traj.max_relative_drift());
        }
    }

    #[test]
    fn energy_is_conserved_at_default_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let pt = random_near_corner(PARAMS.x, 2, &mut rng);
        let traj = local_ode(&PARAMS, &pt, 1, &uniform_grid(1.0, 10), &OdeOptions::default()).unwrap();
        let h: Vec<f64> = traj.conserved.iter().map(|c| c[0]).collect();
        assert!(h.iter().all(|v| (v - h[0]).abs() < 1e-8));
    }

    #[test]
    fn reflection_in_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let pt = random_near_corner(PARAMS.x, 2, &mut rng);
        let grid = uniform_grid(0.5, 5);
        let a = local_ode(&PARAMS, &pt, 1, &grid, &OdeOptions::default()).unwrap();
        let b = local_ode(&CouplingParams { x: -PARAMS.x, ..PARAMS }, &pt, 1, &grid, &OdeOptions::default()).unwrap();
        for (s, r) in a.states.iter().zip(&b.states) {
            assert!(max_dev(&s.coordinates(), &r.coordinates()) < 1e-9);
        }
    }

    #[test]
    fn global_flow_matches_local_chart() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let pt = random_near_corner(PARAMS.x, 2, &mut rng);
        let grid = uniform_grid(0.5, 5);
        let opts = OdeOptions::with_rtol(1e-12);
        let loc = local_ode(&PARAMS, &pt, 1, &grid, &opts).unwrap();
        let glob = global_ode(&PARAMS, &z_of_local(&PARAMS, &pt).unwrap(), 1, &grid, &opts).unwrap();
        for (s, g) in loc.states.iter().zip(&glob.states) {
            let State::Local(l) = s else { panic!("local state expected") };
            let back = local_of_z(&PARAMS, &GlobalPoint::from_slice(&g.coordinates()).unwrap()).unwrap();
            assert!(max_dev(&l.p_hat, &back.p_hat) < 1e-6);
            for (a, b) in l.q_hat.iter().zip(&back.q_hat) {
                assert!(wrap_angle(a - b).abs() < 1e-6, "{:?} vs {:?}", l.q_hat, back.q_hat);
            }
        }
    }

    #[test]
    fn global_flow_crosses_zero_components_and_reverses() {
        let z0 = GlobalPoint::new(vec![C64::new(0.0, 0.0), C64::new(0.3, 0.1)]).unwrap();
        let grid = uniform_grid(1.0, 10);
        let traj = global_ode(&PARAMS, &z0, 1, &grid, &OdeOptions::default()).unwrap();
        assert!(traj.max_relative_drift() < 1e-8);
        let end = GlobalPoint::from_slice(&traj.states.last().unwrap().coordinates()).unwrap();
        let back = global_ode(&PARAMS, &end, 1, &[1.0, 0.0], &OdeOptions::default()).unwrap();
        assert!(max_dev(&back.states[1].coordinates(), &z0.to_vec()) < 1e-7);
        assert!((h_k(&PARAMS, &end, 1).unwrap() - h_k(&PARAMS, &z0, 1).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_starts() {
        let params = DEFAULT_PARAMS;
        let wall = LocalPoint::new(vec![0.0, -1.0], vec![0.1, 0.2]).unwrap();
        assert!(local_ode(&params, &wall, 1, &[0.0, 1.0], &OdeOptions::default()).is_err());
        let pt = LocalPoint::new(vec![-0.2, -1.0], vec![0.1, 0.2]).unwrap();
        assert!(local_ode(&params, &pt, 3, &[0.0, 1.0], &OdeOptions::default()).is_err());
        let traj = local_ode(&params, &pt, 1, &[0.0], &OdeOptions::default()).unwrap();
        assert_eq!(traj.states, vec![State::Local(pt)]);
    }
}
