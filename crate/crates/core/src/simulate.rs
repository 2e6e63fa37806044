//! Time integration of the transformed delay systems and of the original
//! instantaneous-control model.
//!
//! All η-domain runs use classical RK4 on a grid whose step divides the unit
//! delay, so every discrete lag lands on a stored node or on a segment midpoint
//! that is filled by cubic Hermite interpolation. Distributed delays are not
//! handled by quadrature over the grid: each running integral
//! S(η) = ∫_{η−1}^{η} x is carried as an extra state with S′ = x(η) − x(η−1),
//! which keeps the whole scheme fourth order.

use std::collections::VecDeque;
use std::f64::consts::TAU;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::params::{spindle_gain, stationary_delay, stationary_state, PhysicalParams, StationaryState};
use crate::rootfind::{self, Bracket, Tolerance};
use crate::Variant;

/// State size beyond which a run counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Width (in delay units) of the sliding sup-norm used by the growth fit.
pub const GROWTH_WINDOW: f64 = 8.0;

type Mat4 = [[f64; 4]; 4];

fn mat_vec(a: &Mat4, x: &[f64]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(a) {
        *o = row.iter().zip(x).map(|(r, v)| r * v).sum();
    }
    out
}

fn axpy<const D: usize>(y: &[f64; D], s: f64, k: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|i| y[i] + s * k[i])
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn hermite<const D: usize>(y0: &[f64; D], y1: &[f64; D], d0: &[f64; D], d1: &[f64; D], t: f64, h: f64) -> [f64; D] {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    std::array::from_fn(|i| h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i])
}

const GL_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] =
    [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
const GL_PANELS: usize = 8;

/// Composite Gauss–Legendre quadrature of a vector-valued function.
fn quad<const D: usize>(f: impl Fn(f64) -> [f64; D], a: f64, b: f64) -> [f64; D] {
    let mut acc = [0.0; D];
    let w = (b - a) / GL_PANELS as f64;
    for p in 0..GL_PANELS {
        let mid = a + (p as f64 + 0.5) * w;
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let v = f(mid + 0.5 * w * x);
            for (s, vi) in acc.iter_mut().zip(v) {
                *s += 0.5 * w * wt * vi;
            }
        }
    }
    acc
}

/// Uniform solution grid with node derivatives, backed by a history closure
/// for non-positive arguments.
struct Dense<'a, const D: usize> {
    step: f64,
    vals: Vec<[f64; D]>,
    ders: Vec<[f64; D]>,
    hist: Box<dyn Fn(f64) -> [f64; D] + 'a>,
}

impl<const D: usize> Dense<'_, D> {
    fn at(&self, s: f64) -> [f64; D] {
        if s <= 0.0 {
            return (self.hist)(s);
        }
        let u = s / self.step;
        let last = self.vals.len() - 1;
        let i = (u.floor() as usize).min(last);
        let t = u - i as f64;
        if i == last || i + 1 >= self.ders.len() || t == 0.0 {
            return self.vals[i];
        }
        hermite(&self.vals[i], &self.vals[i + 1], &self.ders[i], &self.ders[i + 1], t, self.step)
    }
}

/// Classical RK4 over `n_steps` steps. `size` measures the deviation used
/// for the divergence check; `anchor` may correct each new node before it is
/// stored.
fn march<'a, const D: usize>(
    y0: [f64; D],
    hist: Box<dyn Fn(f64) -> [f64; D] + 'a>,
    step: f64,
    n_steps: usize,
    mut rhs: impl FnMut(f64, &[f64; D], &Dense<'a, D>) -> Result<[f64; D]>,
    size: impl Fn(&[f64; D]) -> f64,
    mut anchor: impl FnMut(usize, &mut [f64; D], &Dense<'a, D>),
) -> Result<Dense<'a, D>> {
    let mut dense = Dense { step, vals: Vec::with_capacity(n_steps + 1), ders: Vec::with_capacity(n_steps + 1), hist };
    dense.vals.push(y0);
    let half = 0.5 * step;
    for n in 0..n_steps {
        let t = n as f64 * step;
        let y = dense.vals[n];
        let k1 = rhs(t, &y, &dense)?;
        dense.ders.push(k1);
        let k2 = rhs(t + half, &axpy(&y, half, &k1), &dense)?;
        let k3 = rhs(t + half, &axpy(&y, half, &k2), &dense)?;
        let k4 = rhs(t + step, &axpy(&y, step, &k3), &dense)?;
        let mut next: [f64; D] =
            std::array::from_fn(|i| y[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        anchor(n + 1, &mut next, &dense);
        let s = size(&next);
        if !(s <= DIVERGENCE_LIMIT) {
            return Err(Error::SimulationDiverged { eta: t + step, limit: DIVERGENCE_LIMIT });
        }
        dense.vals.push(next);
    }
    let last = dense.vals[n_steps];
    let d = rhs(n_steps as f64 * step, &last, &dense)?;
    dense.ders.push(d);
    Ok(dense)
}

/// Steps per unit delay; the step must divide 1 and be at most 1/2.
fn steps_per_delay(step: f64) -> Result<usize> {
    let n = (1.0 / step).round();
    if !(step > 0.0 && step.is_finite()) || (n * step - 1.0).abs() > 1e-9 || n < 2.0 {
        return Err(Error::Domain(format!("step must be 1/N with N >= 2, got {step}")));
    }
    Ok(n as usize)
}

fn step_count(eta_end: f64, step: f64) -> Result<usize> {
    if !(eta_end > 0.0 && eta_end.is_finite()) {
        return Err(Error::Domain(format!("end time must be positive, got {eta_end}")));
    }
    Ok((eta_end / step - 1e-9).ceil() as usize)
}

/// Linearisation of a transformed system about its stationary state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    pub variant: Variant,
    pub k_star: f64,
    pub m: Mat4,
    pub n: Mat4,
    pub p: Mat4,
    pub q: Mat4,
    /// k*³ν/(2πR), the weight of P (delayed law only).
    pub p_weight: f64,
    /// c·k*³ν/(2πR), the weight of Q.
    pub q_weight: f64,
    /// k*²/(2πR), slope of the delay in the running integrals.
    delay_slope: f64,
    gain: f64,
}

impl LinearizedSystem {
    /// Uses the gain that puts the stationary delay at 2π/Ω₀.
    pub fn new(variant: Variant, phys: &PhysicalParams) -> Result<Self> {
        Self::with_gain(variant, phys, spindle_gain(phys)?)
    }

    pub fn with_gain(variant: Variant, phys: &PhysicalParams, c: f64) -> Result<Self> {
        let ks = stationary_delay(phys, c)?;
        let chip = (phys.nu * ks).powf(phys.q - 1.0);
        let a_x = phys.q * phys.cutting_x * phys.omega_cut * chip / phys.m;
        let a_y = phys.q * phys.cutting_y * phys.omega_cut * chip / phys.m;
        let mm = phys.m;
        let m = [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-phys.k_x / mm, a_x, -phys.c_x / mm, 0.0],
            [0.0, -phys.k_y / mm - a_y, 0.0, -phys.c_y / mm],
        ];
        let column = |col: usize| {
            let mut b = [[0.0; 4]; 4];
            b[2][col] = -a_x;
            b[3][col] = a_y;
            b
        };
        let scale = TAU * phys.radius;
        Ok(Self {
            variant,
            k_star: ks,
            m,
            n: column(1),
            p: column(2),
            q: column(0),
            p_weight: ks.powi(3) * phys.nu / scale,
            q_weight: c * ks.powi(3) * phys.nu / scale,
            delay_slope: ks * ks / scale,
            gain: c,
        })
    }

    /// Length of history the system reads: 2 for the delayed law, 1 otherwise.
    pub fn history_depth(&self) -> f64 {
        match self.variant {
            Variant::Delayed => 2.0,
            Variant::Instant => 1.0,
        }
    }

    /// dx/dη from x, x(η−1) and the running integrals S(η), S(η−1).
    fn field(&self, x: &[f64], x_lag: &[f64], s: &[f64], s_lag: &[f64]) -> [f64; 4] {
        let mx = mat_vec(&self.m, x);
        let nx = mat_vec(&self.n, x_lag);
        let mut out: [f64; 4] = std::array::from_fn(|i| self.k_star * (mx[i] + nx[i]));
        match self.variant {
            Variant::Delayed => {
                let ps = mat_vec(&self.p, s);
                let qs = mat_vec(&self.q, s_lag);
                for i in 0..4 {
                    out[i] += -self.p_weight * ps[i] + self.q_weight * qs[i];
                }
            }
            Variant::Instant => {
                let qs = mat_vec(&self.q, s);
                for i in 0..4 {
                    out[i] += self.q_weight * qs[i];
                }
            }
        }
        out
    }

    /// Linearised delay deviation k(η) − k*.
    fn delay_deviation(&self, s: &[f64], s_lag: &[f64]) -> f64 {
        match self.variant {
            Variant::Delayed => -self.delay_slope * (self.gain * s_lag[0] - s[2]),
            Variant::Instant => -self.delay_slope * self.gain * s[0],
        }
    }
}

/// Where a trajectory's grid lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Transformed time η, one unit per delay.
    Eta,
    /// Physical time t.
    Time,
}

/// A sampled run. States are deviations (x₁..x₄) from the stationary state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub domain: Domain,
    pub grid: Vec<f64>,
    pub states: Vec<[f64; 4]>,
    pub derivatives: Vec<[f64; 4]>,
    /// Delay k(η) (or τ(t)) at each node.
    pub k_values: Vec<f64>,
    /// t(η) for η-domain nonlinear runs, η(t) for t-domain runs.
    pub clock: Option<Vec<f64>>,
    pub stationary: Option<StationaryState>,
    /// Exponential rate of the state norm over the last third of the run.
    pub growth_rate: Option<f64>,
}

impl Trajectory {
    fn assemble<const D: usize>(
        domain: Domain,
        dense: &Dense<'_, D>,
        offset: [f64; 4],
        k_values: Vec<f64>,
        clock: Option<Vec<f64>>,
        stationary: Option<StationaryState>,
    ) -> Self {
        let grid: Vec<f64> = (0..dense.vals.len()).map(|i| i as f64 * dense.step).collect();
        let states: Vec<[f64; 4]> = dense.vals.iter().map(|v| std::array::from_fn(|i| v[i] - offset[i])).collect();
        let derivatives = dense.ders.iter().map(|d| std::array::from_fn(|i| d[i])).collect();
        let growth_rate = fit_growth_rate(&grid, &states, GROWTH_WINDOW);
        Self { domain, grid, states, derivatives, k_values, clock, stationary, growth_rate }
    }

    pub fn final_state(&self) -> [f64; 4] {
        *self.states.last().expect("trajectories hold at least one node")
    }

    /// CSV with header `eta,x1,x2,x3,x4,k` (first column `t` in the time
    /// domain), 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        let first = match self.domain {
            Domain::Eta => "eta",
            Domain::Time => "t",
        };
        writeln!(w, "{first},x1,x2,x3,x4,k")?;
        for ((g, x), k) in self.grid.iter().zip(&self.states).zip(&self.k_values) {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", g, x[0], x[1], x[2], x[3], k)?;
        }
        Ok(())
    }
}

/// Least-squares slope of log of the sliding-window sup of ‖x‖ over the last
/// third of the grid. `None` when the run is too short or the norm vanishes.
pub fn fit_growth_rate(grid: &[f64], states: &[[f64; 4]], window: f64) -> Option<f64> {
    if grid.len() < 3 {
        return None;
    }
    let step = grid[1] - grid[0];
    let width = ((window / step).round() as usize).max(1);
    let norms: Vec<f64> = states.iter().map(|x| norm(x)).collect();
    let start = (2 * grid.len() / 3).max(width - 1);
    if start + 2 > grid.len() {
        return None;
    }
    // monotone deque of indices with decreasing norms
    let mut dq: VecDeque<usize> = VecDeque::new();
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..grid.len() {
        while dq.back().is_some_and(|&j| norms[j] <= norms[i]) {
            dq.pop_back();
        }
        dq.push_back(i);
        while dq.front().is_some_and(|&j| j + width <= i) {
            dq.pop_front();
        }
        if i >= start {
            let sup = norms[dq[0]];
            if !(sup > 0.0 && sup.is_finite()) {
                return None;
            }
            let (x, y) = (grid[i], sup.ln());
            n += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
    }
    let denom = n * sxx - sx * sx;
    (denom > 0.0).then(|| (n * sxy - sx * sy) / denom)
}

/// Constant history, as used for all perturbation tests.
pub fn constant_history(x: [f64; 4]) -> impl Fn(f64) -> [f64; 4] + Clone {
    move |_| x
}

/// Integrates the linearised system from a deviation history on
/// [−history_depth, 0].
pub fn integrate_linear(
    sys: &LinearizedSystem,
    history: impl Fn(f64) -> [f64; 4],
    eta_end: f64,
    step: f64,
) -> Result<Trajectory> {
    let per_delay = steps_per_delay(step)?;
    let n_steps = step_count(eta_end, step)?;
    let step = 1.0 / per_delay as f64;
    let history = &history;
    let augmented = move |s: f64| -> [f64; 8] {
        let x = history(s);
        let run = quad(history, s - 1.0, s);
        std::array::from_fn(|i| if i < 4 { x[i] } else { run[i - 4] })
    };
    let y0 = augmented(0.0);
    let field = |y: &[f64; 8], lag: &[f64; 8]| -> [f64; 8] {
        let dx = sys.field(&y[..4], &lag[..4], &y[4..], &lag[4..]);
        std::array::from_fn(|i| if i < 4 { dx[i] } else { y[i - 4] - lag[i - 4] })
    };
    // S′ = x − x(η−1) also admits S + const, so truncation errors would leave
    // a neutral offset that never decays. Each new node therefore takes S from
    // an end-corrected trapezoid rule over the stored grid instead.
    let anchor = |b: usize, y: &mut [f64; 8], d: &Dense<'_, 8>| {
        let start = b as isize - per_delay as isize;
        let lag = if start >= 0 { d.vals[start as usize] } else { (d.hist)(start as f64 * step) };
        let slope_b = field(y, &lag);
        let i0 = start.max(0) as usize;
        let mut run = [0.0; 4];
        for (k, r) in run.iter_mut().enumerate() {
            let inner: f64 = d.vals[i0 + 1..b].iter().map(|v| v[k]).sum();
            let trap = step * (0.5 * d.vals[i0][k] + inner + 0.5 * y[k]);
            *r = trap + step * step / 12.0 * (d.ders[i0][k] - slope_b[k]);
        }
        if start < 0 {
            let past = quad(history, start as f64 * step, 0.0);
            for (r, p) in run.iter_mut().zip(past) {
                *r += p;
            }
        }
        y[4..].copy_from_slice(&run);
    };
    let dense = march(
        y0,
        Box::new(augmented),
        step,
        n_steps,
        |eta, y, d| Ok(field(y, &d.at(eta - 1.0))),
        |y| norm(&y[..4]),
        anchor,
    )?;
    let k_values = dense
        .vals
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let lag = d_lag(&dense, i, per_delay);
            sys.k_star + sys.delay_deviation(&y[4..], &lag[4..])
        })
        .collect();
    Ok(Trajectory::assemble(Domain::Eta, &dense, [0.0; 4], k_values, None, None))
}

/// The augmented state one delay before node `i`.
fn d_lag<const D: usize>(dense: &Dense<'_, D>, i: usize, per_delay: usize) -> [f64; D] {
    if i >= per_delay {
        dense.vals[i - per_delay]
    } else {
        (dense.hist)((i as f64 - per_delay as f64) * dense.step)
    }
}

/// Right-hand side (r, ρ, j, l)′ of a transformed nonlinear system before the
/// time-warp factor, and the warp factor itself.
///
/// `now` is the absolute state at η; `r_lag`, `rho_lag` and `j_now` feed the
/// warp. The delayed law warps by 2πR/(c r(η−1) − j(η)), the instant law by
/// 2πR/(c r(η)).
#[allow(clippy::too_many_arguments)]
pub fn transformed_field(
    variant: Variant,
    phys: &PhysicalParams,
    c: f64,
    eta: f64,
    now: &[f64; 4],
    r_lag: f64,
    rho_lag: f64,
    k: f64,
) -> Result<[f64; 4]> {
    let w = warp(variant, phys, c, eta, now, r_lag)?;
    let v = cutting_field(phys, eta, now, rho_lag, k)?;
    Ok(v.map(|vi| vi * w))
}

fn warp(variant: Variant, phys: &PhysicalParams, c: f64, eta: f64, now: &[f64; 4], r_lag: f64) -> Result<f64> {
    let den = match variant {
        Variant::Delayed => c * r_lag - now[2],
        Variant::Instant => c * now[0],
    };
    if !(den > 0.0) {
        return Err(Error::TransformViolated {
            eta,
            condition: match variant {
                Variant::Delayed => "c r(eta-1) - j(eta) > 0",
                Variant::Instant => "r(eta) > 0",
            },
        });
    }
    Ok(TAU * phys.radius / den)
}

fn cutting_field(phys: &PhysicalParams, eta: f64, now: &[f64; 4], rho_lag: f64, k: f64) -> Result<[f64; 4]> {
    let [r, rho, j, l] = *now;
    let thickness = phys.nu * k + rho - rho_lag;
    if !(thickness > 0.0) {
        return Err(Error::NegativeChipThickness { eta, thickness });
    }
    let force = phys.omega_cut * thickness.powf(phys.q) / phys.m;
    Ok([
        j,
        l,
        -(phys.c_x / phys.m) * j - (phys.k_x / phys.m) * r + phys.cutting_x * force,
        -(phys.c_y / phys.m) * l - (phys.k_y / phys.m) * rho - phys.cutting_y * force,
    ])
}

fn absolute(st: &StationaryState, dev: [f64; 4]) -> [f64; 4] {
    [st.r_star + dev[0], st.rho_star + dev[1], st.j_star + dev[2], st.l_star + dev[3]]
}

/// Integrates a transformed nonlinear system from a deviation history on
/// [−2, 0] (delayed) or [−1, 0] (instant). The state carries k(η) and t(η),
/// with k′ = w(η) − w(η−1) and t′ = w(η) for the warp w = dt/dη.
pub fn integrate_nonlinear_transformed(
    variant: Variant,
    phys: &PhysicalParams,
    c: f64,
    history: impl Fn(f64) -> [f64; 4],
    eta_end: f64,
    step: f64,
) -> Result<Trajectory> {
    let per_delay = steps_per_delay(step)?;
    let n_steps = step_count(eta_end, step)?;
    let step = 1.0 / per_delay as f64;
    let st = stationary_state(phys, c)?;
    let abs_hist = move |s: f64| absolute(&st, history(s));
    // warp from history; the delayed law reads r one further delay back
    let hist_warp = |s: f64| -> Result<f64> {
        let now = abs_hist(s);
        let r_lag = abs_hist(s - 1.0)[0];
        warp(variant, phys, c, s, &now, r_lag)
    };
    // validate history on the quadrature window, then integrate k(0)
    for i in 0..=64 {
        hist_warp(-(i as f64) / 64.0)?;
    }
    let k0 = quad(|s| [hist_warp(s).unwrap_or(f64::NAN)], -1.0, 0.0)[0];
    let a0 = abs_hist(0.0);
    let y0 = [a0[0], a0[1], a0[2], a0[3], k0, 0.0];
    // k and t are never read from the history, only r, ρ and j
    let hist6 = move |s: f64| {
        let a = abs_hist(s);
        [a[0], a[1], a[2], a[3], f64::NAN, f64::NAN]
    };
    let dense = march(
        y0,
        Box::new(hist6),
        step,
        n_steps,
        |eta, y, d| {
            let lag1 = d.at(eta - 1.0);
            let now = [y[0], y[1], y[2], y[3]];
            let w = warp(variant, phys, c, eta, &now, lag1[0])?;
            let w_prev = match variant {
                Variant::Delayed => {
                    let lag2 = d.at(eta - 2.0);
                    warp(variant, phys, c, eta - 1.0, &[lag1[0], lag1[1], lag1[2], lag1[3]], lag2[0])?
                }
                Variant::Instant => warp(variant, phys, c, eta - 1.0, &[lag1[0], lag1[1], lag1[2], lag1[3]], 0.0)?,
            };
            let v = cutting_field(phys, eta, &now, lag1[1], y[4])?;
            Ok([v[0] * w, v[1] * w, v[2] * w, v[3] * w, w - w_prev, w])
        },
        |y| norm(&[y[0] - st.r_star, y[1] - st.rho_star, y[2], y[3]]),
        |_, _, _| {},
    )?;
    let k_values = dense.vals.iter().map(|y| y[4]).collect();
    let clock = dense.vals.iter().map(|y| y[5]).collect();
    Ok(Trajectory::assemble(
        Domain::Eta,
        &dense,
        [st.r_star, st.rho_star, st.j_star, st.l_star],
        k_values,
        Some(clock),
        Some(st),
    ))
}

/// A finished t-domain run of the original instantaneous-control model,
/// kept dense so it can be queried between nodes.
struct OriginalRun<'a> {
    dense: Dense<'a, 5>,
    st: StationaryState,
}

/// Point s with H(s) = `level`, where H is the cumulative threshold integral
/// (component 4 of the state); H increases strictly while x > 0.
fn threshold_point(dense: &Dense<'_, 5>, level: f64, upto: usize) -> Result<f64> {
    let h_at = |s: f64| dense.at(s)[4];
    if level >= 0.0 {
        let nodes = &dense.vals[..=upto];
        let i = nodes.partition_point(|v| v[4] < level);
        if i == 0 {
            return Ok(0.0);
        }
        if i > upto {
            return Err(Error::TransformViolated {
                eta: upto as f64 * dense.step,
                condition: "delay longer than two steps",
            });
        }
        let (t0, t1) = ((i - 1) as f64 * dense.step, i as f64 * dense.step);
        let (f0, f1) = (nodes[i - 1][4] - level, nodes[i][4] - level);
        if f1 == 0.0 {
            return Ok(t1);
        }
        if f0 == 0.0 {
            return Ok(t0);
        }
        let b = Bracket::from_values(t0, t1, f0, f1)?;
        let tol = Tolerance { x: 1e-15 * t1.max(1.0), f: 0.0, max_iter: 200 };
        rootfind::solve_bracketed(|s| h_at(s) - level, b, tol)
    } else {
        let mut lo = -1.0;
        let mut expansions = 0;
        loop {
            let v = h_at(lo) - level;
            if v == 0.0 {
                return Ok(lo);
            }
            if v < 0.0 {
                break;
            }
            lo *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Domain("history too short to resolve the delay".into()));
            }
        }
        let b = Bracket::new(|s| h_at(s) - level, lo, 0.0)?;
        let tol = Tolerance { x: 1e-15 * lo.abs().max(1.0), f: 0.0, max_iter: 200 };
        rootfind::solve_bracketed(|s| h_at(s) - level, b, tol)
    }
}

impl OriginalRun<'_> {
    fn last_node(&self) -> usize {
        self.dense.vals.len() - 1
    }

    fn state_at(&self, t: f64) -> [f64; 5] {
        self.dense.at(t)
    }

    fn delay_at(&self, t: f64) -> Result<f64> {
        let level = self.state_at(t)[4] - 1.0;
        Ok(t - threshold_point(&self.dense, level, self.last_node())?)
    }
}

fn run_original_instant<'a>(
    phys: &'a PhysicalParams,
    c: f64,
    history: impl Fn(f64) -> [f64; 4] + 'a,
    t_end: f64,
    step: f64,
) -> Result<OriginalRun<'a>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let n_steps = step_count(t_end, step)?;
    let st = stationary_state(phys, c)?;
    let rate = c / (TAU * phys.radius);
    let abs_hist = move |s: f64| absolute(&st, history(s));
    // H(s) = −∫_s^0 (c/2πR) x for s ≤ 0
    let hist5 = move |s: f64| {
        let a = abs_hist(s);
        let cum = if s < 0.0 { -rate * quad(|u| [abs_hist(u)[0]], s, 0.0)[0] } else { 0.0 };
        [a[0], a[1], a[2], a[3], cum]
    };
    let y0 = hist5(0.0);
    let dense = march(
        y0,
        Box::new(hist5),
        step,
        n_steps,
        |t, y, d| {
            if !(y[0] > 0.0) {
                return Err(Error::TransformViolated { eta: t, condition: "x(t) > 0" });
            }
            let upto = d.vals.len() - 1;
            let s = threshold_point(d, y[4] - 1.0, upto)?;
            if s > t - step {
                return Err(Error::TransformViolated { eta: t, condition: "delay longer than two steps" });
            }
            let tau = t - s;
            let lag = d.at(s);
            let v = cutting_field(phys, t, &[y[0], y[1], y[2], y[3]], lag[1], tau)?;
            Ok([v[0], v[1], v[2], v[3], rate * y[0]])
        },
        |y| norm(&[y[0] - st.r_star, y[1] - st.rho_star, y[2], y[3]]),
        |_, _, _| {},
    )?;
    Ok(OriginalRun { dense, st })
}

/// Integrates the original instantaneous-control model in physical time,
/// inverting the threshold condition H(t) − H(t − τ) = 1 for the delay.
pub fn integrate_original_instant(
    phys: &PhysicalParams,
    c: f64,
    history: impl Fn(f64) -> [f64; 4],
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    let run = run_original_instant(phys, c, history, t_end, step)?;
    let k_values = (0..run.dense.vals.len()).map(|i| run.delay_at(i as f64 * step)).collect::<Result<Vec<_>>>()?;
    let clock = run.dense.vals.iter().map(|y| y[4]).collect();
    let st = run.st;
    Ok(Trajectory::assemble(
        Domain::Time,
        &run.dense,
        [st.r_star, st.rho_star, st.j_star, st.l_star],
        k_values,
        Some(clock),
        Some(st),
    ))
}

/// Largest discrepancies between matched t-domain and η-domain runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainComparison {
    /// State difference relative to the absolute state norm.
    pub state_rel: f64,
    /// State difference relative to the largest deviation from stationarity.
    pub deviation_rel: f64,
    pub delay_rel: f64,
    /// |η(t(η)) − η|, the round trip through both clocks.
    pub clock_err: f64,
    pub compared_nodes: usize,
}

/// Runs the instantaneous law in both domains from the same constant
/// deviation and compares them at η-nodes with η ≥ 1.
pub fn compare_instant_domains(
    phys: &PhysicalParams,
    c: f64,
    deviation: [f64; 4],
    eta_end: f64,
    eta_step: f64,
    t_step: f64,
) -> Result<DomainComparison> {
    let eta_run =
        integrate_nonlinear_transformed(Variant::Instant, phys, c, constant_history(deviation), eta_end, eta_step)?;
    let clock = eta_run.clock.as_ref().expect("nonlinear runs record t(eta)");
    let t_end = clock.last().copied().unwrap_or(0.0) + 2.0 * t_step;
    let t_run = run_original_instant(phys, c, constant_history(deviation), t_end, t_step)?;
    let st = t_run.st;
    let max_dev = eta_run.states.iter().map(|x| norm(x)).fold(0.0, f64::max);
    let mut out =
        DomainComparison { state_rel: 0.0, deviation_rel: 0.0, delay_rel: 0.0, clock_err: 0.0, compared_nodes: 0 };
    for (i, &eta) in eta_run.grid.iter().enumerate() {
        if eta < 1.0 {
            continue;
        }
        let t = clock[i];
        let y = t_run.state_at(t);
        let abs_eta = absolute(&st, eta_run.states[i]);
        let diff = norm(&[y[0] - abs_eta[0], y[1] - abs_eta[1], y[2] - abs_eta[2], y[3] - abs_eta[3]]);
        out.state_rel = out.state_rel.max(diff / norm(&abs_eta));
        if max_dev > 0.0 {
            out.deviation_rel = out.deviation_rel.max(diff / max_dev);
        }
        let tau = t_run.delay_at(t)?;
        let k = eta_run.k_values[i];
        out.delay_rel = out.delay_rel.max((tau - k).abs() / k);
        out.clock_err = out.clock_err.max((y[4] - eta).abs());
        out.compared_nodes += 1;
    }
    Ok(out)
}
