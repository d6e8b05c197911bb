//! Dormand–Prince 5(4) integration with continuous output.
//!
//! Every accepted step stores the five coefficient vectors of the quartic
//! Hairer–Wanner interpolant, so a [`Trajectory`] can be evaluated anywhere in
//! its span at fifth-order accuracy. Integration may run in either direction;
//! [`integrate_two_sided`] starts at an interior point and sweeps both ways.
//!
//! A caller-supplied admissibility predicate is checked on every candidate
//! step. An inadmissible candidate is rejected and the step shrunk; once the
//! step cannot shrink further the trajectory ends with [`Termination::Boundary`].

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Initial step magnitude; estimated from the right-hand side when `None`.
    pub initial_step: Option<f64>,
    /// Upper bound on the step magnitude.
    pub max_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            initial_step: None,
            max_step: f64::INFINITY,
        }
    }
}

/// Why a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// The admissibility predicate failed arbitrarily close to `t`.
    Boundary {
        t: f64,
    },
    StepUnderflow {
        t: f64,
    },
    MaxSteps {
        t: f64,
    },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

/// One-directional dense solution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    t0: f64,
    y0: Vec<f64>,
    /// Step start times, in integration order.
    starts: Vec<f64>,
    steps: Vec<f64>,
    /// `5 * dim` interpolation coefficients per step.
    rcont: Vec<f64>,
    termination: Termination,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        match self.starts.last() {
            Some(&t) => t + self.steps[self.steps.len() - 1],
            None => self.t0,
        }
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    fn forward(&self) -> bool {
        self.t_end() >= self.t0
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = if self.forward() {
            (self.t0, self.t_end())
        } else {
            (self.t_end(), self.t0)
        };
        t >= a && t <= b
    }

    /// Node times and states: the initial point followed by every step end.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, Vec<f64>)> + '_ {
        std::iter::once((self.t0, self.y0.clone())).chain((0..self.steps.len()).map(move |i| {
            let r = &self.rcont[i * 5 * self.dim..(i + 1) * 5 * self.dim];
            let y = (0..self.dim).map(|j| r[j] + r[self.dim + j]).collect();
            (self.starts[i] + self.steps[i], y)
        }))
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.steps.len();
        // starts are monotone in the direction of integration
        let idx = if self.forward() {
            self.starts.partition_point(|&s| s <= t)
        } else {
            self.starts.partition_point(|&s| s >= t)
        };
        idx.saturating_sub(1).min(n - 1)
    }

    fn eval_step(&self, i: usize, t: f64, out: &mut [f64]) {
        let d = self.dim;
        let r = &self.rcont[i * 5 * d..(i + 1) * 5 * d];
        let s = (t - self.starts[i]) / self.steps[i];
        let s1 = 1.0 - s;
        for j in 0..d {
            out[j] = r[j]
                + s * (r[d + j] + s1 * (r[2 * d + j] + s * (r[3 * d + j] + s1 * r[4 * d + j])));
        }
    }

    /// Interpolated state at `t`, or `None` outside the solved span.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Option<()> {
        if !self.contains(t) {
            return None;
        }
        if self.steps.is_empty() {
            out.copy_from_slice(&self.y0);
            return Some(());
        }
        let i = self.locate(t);
        self.eval_step(i, t, out);
        Some(())
    }

    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out).map(|_| out)
    }

    /// Times where `component` vanishes, located by bisection on the
    /// interpolant inside each step that brackets a sign change. Node values
    /// that are exactly zero are reported as-is.
    pub fn roots(&self, component: usize) -> Vec<f64> {
        let d = self.dim;
        let mut roots = Vec::new();
        if self.y0[component] == 0.0 {
            roots.push(self.t0);
        }
        let mut buf = vec![0.0; d];
        for i in 0..self.steps.len() {
            let r = &self.rcont[i * 5 * d..(i + 1) * 5 * d];
            let ya = r[component];
            let yb = r[component] + r[d + component];
            let (ta, tb) = (self.starts[i], self.starts[i] + self.steps[i]);
            if yb == 0.0 {
                roots.push(tb);
                continue;
            }
            if ya == 0.0 || (ya > 0.0) == (yb > 0.0) {
                continue;
            }
            let (mut lo, mut hi, mut flo) = (ta, tb, ya);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                self.eval_step(i, mid, &mut buf);
                let fm = buf[component];
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        roots
    }
}

fn rms_error(err: &[f64], y0: &[f64], y1: &[f64], opts: &IntegratorOptions) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Starting step following Hairer, Nørsett & Wanner (II.4).
fn initial_step<F>(
    f: &F,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    dir: f64,
    opts: &IntegratorOptions,
    hmax: f64,
) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let sk: Vec<f64> = y0
        .iter()
        .map(|y| opts.abs_tol + opts.rel_tol * y.abs())
        .collect();
    let norm = |v: &[f64]| {
        (v.iter().zip(&sk).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(hmax);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, k)| y + dir * h * k).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + dir * h, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h;
    let d = d1.max(d2);
    let h1 = if d <= 1e-15 {
        (1e-6f64).max(h * 1e-3)
    } else {
        (0.01 / d).powf(0.2)
    };
    (100.0 * h).min(h1).min(hmax)
}

/// Integrate `y' = f(t, y)` from `t0` toward `t_end` (either direction).
pub fn integrate<F, G>(
    f: &F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
    admissible: &G,
) -> Trajectory
where
    F: Fn(f64, &[f64], &mut [f64]),
    G: Fn(&[f64]) -> bool,
{
    let d = y0.len();
    let mut traj = Trajectory {
        dim: d,
        t0,
        y0: y0.to_vec(),
        starts: Vec::new(),
        steps: Vec::new(),
        rcont: Vec::new(),
        termination: Termination::Completed,
    };
    let span = (t_end - t0).abs();
    if span == 0.0 {
        return traj;
    }
    let dir = (t_end - t0).signum();

    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut k5 = vec![0.0; d];
    let mut k6 = vec![0.0; d];
    let mut k7 = vec![0.0; d];
    let mut ys = vec![0.0; d];
    let mut y1 = vec![0.0; d];
    let mut err = vec![0.0; d];
    let mut y = y0.to_vec();
    let mut t = t0;

    f(t, &y, &mut k1);
    let mut h = match opts.initial_step {
        Some(h) => h.abs().min(span).min(opts.max_step),
        None => initial_step(f, t0, y0, &k1, dir, opts, span.min(opts.max_step)),
    };
    let mut last_rejected = false;

    loop {
        if traj.steps.len() >= opts.max_steps {
            traj.termination = Termination::MaxSteps { t };
            break;
        }
        let remaining = (t_end - t).abs();
        if remaining <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            break;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            traj.termination = Termination::StepUnderflow { t };
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = dir * h;

        for j in 0..d {
            ys[j] = y[j] + hs * A21 * k1[j];
        }
        f(t + C2 * hs, &ys, &mut k2);
        for j in 0..d {
            ys[j] = y[j] + hs * (A31 * k1[j] + A32 * k2[j]);
        }
        f(t + C3 * hs, &ys, &mut k3);
        for j in 0..d {
            ys[j] = y[j] + hs * (A41 * k1[j] + A42 * k2[j] + A43 * k3[j]);
        }
        f(t + C4 * hs, &ys, &mut k4);
        for j in 0..d {
            ys[j] = y[j] + hs * (A51 * k1[j] + A52 * k2[j] + A53 * k3[j] + A54 * k4[j]);
        }
        f(t + C5 * hs, &ys, &mut k5);
        for j in 0..d {
            ys[j] =
                y[j] + hs * (A61 * k1[j] + A62 * k2[j] + A63 * k3[j] + A64 * k4[j] + A65 * k5[j]);
        }
        let t_new = if last { t_end } else { t + hs };
        f(t_new, &ys, &mut k6);
        for j in 0..d {
            y1[j] =
                y[j] + hs * (A71 * k1[j] + A73 * k3[j] + A74 * k4[j] + A75 * k5[j] + A76 * k6[j]);
        }
        f(t_new, &y1, &mut k7);
        for j in 0..d {
            err[j] =
                hs * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
        }
        let e = rms_error(&err, &y, &y1, opts);
        let finite = e.is_finite() && y1.iter().all(|v| v.is_finite());

        if !finite || !admissible(&y1) {
            // shrink toward the boundary; give up once the step is negligible
            h *= 0.5;
            last_rejected = true;
            if h < 1e-12 * t.abs().max(1.0) {
                traj.termination = Termination::Boundary { t };
                break;
            }
            continue;
        }

        if e <= 1.0 {
            let base = traj.rcont.len();
            traj.rcont.resize(base + 5 * d, 0.0);
            let r = &mut traj.rcont[base..];
            for j in 0..d {
                let ydiff = y1[j] - y[j];
                let bspl = hs * k1[j] - ydiff;
                r[j] = y[j];
                r[d + j] = ydiff;
                r[2 * d + j] = bspl;
                r[3 * d + j] = ydiff - hs * k7[j] - bspl;
                r[4 * d + j] = hs
                    * (D1 * k1[j] + D3 * k3[j] + D4 * k4[j] + D5 * k5[j] + D6 * k6[j] + D7 * k7[j]);
            }
            traj.starts.push(t);
            traj.steps.push(t_new - t);
            t = t_new;
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            if last {
                break;
            }
            let mut fac = SAFETY * e.max(1e-10).powf(-0.2);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(opts.max_step);
            last_rejected = false;
        } else {
            h *= (SAFETY * e.powf(-0.2)).max(FAC_MIN);
            last_rejected = true;
        }
    }
    traj
}

/// Solution grown in both directions from an interior initial point.
#[derive(Debug, Clone)]
pub struct TwoSidedTrajectory {
    pub backward: Trajectory,
    pub forward: Trajectory,
}

impl TwoSidedTrajectory {
    pub fn t_min(&self) -> f64 {
        self.backward.t_end()
    }

    pub fn t_max(&self) -> f64 {
        self.forward.t_end()
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min() && t <= self.t_max()
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Option<()> {
        if t >= self.forward.t_start() {
            self.forward.eval_into(t, out)
        } else {
            self.backward.eval_into(t, out)
        }
    }

    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.forward.dim()];
        self.eval_into(t, &mut out).map(|_| out)
    }

    /// All nodes in increasing `t`, the shared initial point appearing once.
    pub fn nodes(&self) -> Vec<(f64, Vec<f64>)> {
        let mut out: Vec<_> = self.backward.nodes().collect();
        out.reverse();
        out.extend(self.forward.nodes().skip(1));
        out
    }

    /// Sorted roots of `component` over both halves.
    pub fn roots(&self, component: usize) -> Vec<f64> {
        let mut r = self.backward.roots(component);
        r.reverse();
        for t in self.forward.roots(component) {
            if r.last() != Some(&t) {
                r.push(t);
            }
        }
        r
    }
}

pub fn integrate_two_sided<F, G>(
    f: &F,
    t0: f64,
    y0: &[f64],
    span: (f64, f64),
    opts: &IntegratorOptions,
    admissible: &G,
) -> TwoSidedTrajectory
where
    F: Fn(f64, &[f64], &mut [f64]),
    G: Fn(&[f64]) -> bool,
{
    TwoSidedTrajectory {
        backward: integrate(f, t0, y0, span.0, opts, admissible),
        forward: integrate(f, t0, y0, span.1, opts, admissible),
    }
}
