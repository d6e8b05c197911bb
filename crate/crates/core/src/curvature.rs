//! The curvature ODE `k k'' = (7/4)(k')² + (4c/3)k² - 4k⁴` of the profile
//! curve and its prime integral.
//!
//! Solutions are grown in both directions from `u = 0`. The prime constant is
//! fixed by the initial data and only monitored along the solution, never
//! projected back.

use crate::error::CurvatureError;
use crate::ode::{integrate_two_sided, IntegratorOptions, Termination, TwoSidedTrajectory};

/// Integration stops once `k` drops below this.
pub const MIN_CURVATURE: f64 = 1e-8;
/// Relative slack allowed on `P(k) >= 0` before a state counts as inadmissible.
pub const PRIME_SLACK: f64 = 1e-8;

fn check_k(k: f64) -> Result<(), CurvatureError> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(CurvatureError::NonPositiveCurvature(k))
    }
}

fn check_model(c: i32) -> Result<(), CurvatureError> {
    if (-1..=1).contains(&c) {
        Ok(())
    } else {
        Err(CurvatureError::InvalidModel(c))
    }
}

/// `k''` as a function of `(k, k')`.
pub fn ode_rhs(k: f64, kp: f64, c: i32) -> Result<f64, CurvatureError> {
    check_k(k)?;
    check_model(c)?;
    Ok(rhs_unchecked(k, kp, c as f64))
}

#[inline]
pub(crate) fn rhs_unchecked(k: f64, kp: f64, c: f64) -> f64 {
    (1.75 * kp * kp + (4.0 * c / 3.0) * k * k - 4.0 * k.powi(4)) / k
}

/// The prime-integral polynomial `P(k) = -(16c/9)k² - 16k⁴ + C k^{7/2}`.
pub fn prime_polynomial(k: f64, constant: f64, c: i32) -> f64 {
    let c = c as f64;
    -(16.0 * c / 9.0) * k * k - 16.0 * k.powi(4) + constant * k.powf(3.5)
}

/// The constant `C` determined by a state `(k, k')`.
pub fn prime_constant(k: f64, kp: f64, c: i32) -> Result<f64, CurvatureError> {
    check_k(k)?;
    check_model(c)?;
    Ok(prime_constant_unchecked(k, kp, c as f64))
}

#[inline]
pub(crate) fn prime_constant_unchecked(k: f64, kp: f64, c: f64) -> f64 {
    (kp * kp + (16.0 * c / 9.0) * k * k + 16.0 * k.powi(4)) / k.powf(3.5)
}

/// Curvature of the circles traced by the second principal direction,
/// `(3/4) √|C| k^{3/4}`.
pub fn kappa2(k: f64, constant: f64) -> Result<f64, CurvatureError> {
    check_k(k)?;
    if constant == 0.0 {
        return Err(CurvatureError::DegenerateConstant);
    }
    Ok(0.75 * constant.abs().sqrt() * k.powf(0.75))
}

/// `W = (9/16)(k'/k)² + 9k² - 1`; its sign selects the H³ branch.
pub fn w_value(k: f64, kp: f64) -> Result<f64, CurvatureError> {
    check_k(k)?;
    let r = kp / k;
    Ok(0.5625 * r * r + 9.0 * k * k - 1.0)
}

fn bisect(q: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let q_lo = q(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let qm = q(mid);
        if qm == 0.0 {
            return mid;
        }
        if (qm > 0.0) == (q_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The interval of `k > 0` where `P(k) >= 0`.
///
/// `P(k)/k²` has a single interior maximum for `C > 0` and is decreasing for
/// `C <= 0`, so the admissible set is always a single interval. A lower
/// endpoint of `0` means the interval is open there.
pub fn admissible_interval(constant: f64, c: i32) -> Result<(f64, f64), CurvatureError> {
    check_model(c)?;
    if !constant.is_finite() {
        return Err(CurvatureError::NoSolution { constant, c });
    }
    let cf = c as f64;
    let q = |k: f64| -16.0 * cf / 9.0 - 16.0 * k * k + constant * k.powf(1.5);
    let none = Err(CurvatureError::NoSolution { constant, c });

    if constant > 0.0 {
        let km = (3.0 * constant / 64.0).powi(2);
        let qm = q(km);
        if qm < 0.0 {
            return none;
        }
        if qm == 0.0 {
            return Ok((km, km));
        }
        let lo = if c > 0 { bisect(q, 0.0, km) } else { 0.0 };
        let mut far = 2.0 * km.max(1.0);
        while q(far) >= 0.0 {
            far *= 2.0;
        }
        Ok((lo, bisect(q, km, far)))
    } else if c < 0 {
        // Q(0) = 16/9 and Q decreases
        let mut far = 1.0;
        while q(far) >= 0.0 {
            far *= 2.0;
        }
        Ok((0.0, bisect(q, 0.0, far)))
    } else {
        none
    }
}

/// Which end of the admissible interval a turning point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalEnd {
    Lower,
    Upper,
}

/// A detected zero of `k'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint {
    pub u: f64,
    pub k: f64,
    /// `P(k)` at the event; vanishes at an exact turning point.
    pub prime_value: f64,
    pub nearest_end: IntervalEnd,
    /// Distance from `k` to the nearest admissible endpoint.
    pub endpoint_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub u: f64,
    pub k: f64,
    pub kp: f64,
}

/// Dense solution of the curvature ODE on `[u_min, u_max] ∋ 0`.
#[derive(Debug, Clone)]
pub struct CurvatureSolution {
    c: i32,
    constant: f64,
    interval: (f64, f64),
    options: IntegratorOptions,
    requested_span: (f64, f64),
    trajectory: TwoSidedTrajectory,
}

impl CurvatureSolution {
    pub fn curvature_sign(&self) -> i32 {
        self.c
    }

    pub fn prime_constant(&self) -> f64 {
        self.constant
    }

    pub fn admissible_interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn rel_tol(&self) -> f64 {
        self.options.rel_tol
    }

    /// Integrator settings used for this solution.
    pub fn options(&self) -> &IntegratorOptions {
        &self.options
    }

    pub fn requested_span(&self) -> (f64, f64) {
        self.requested_span
    }

    /// The span actually covered; narrower than requested when truncated.
    pub fn span(&self) -> (f64, f64) {
        (self.trajectory.t_min(), self.trajectory.t_max())
    }

    pub fn terminations(&self) -> (Termination, Termination) {
        (
            self.trajectory.backward.termination(),
            self.trajectory.forward.termination(),
        )
    }

    pub fn is_truncated(&self) -> bool {
        let (a, b) = self.terminations();
        !(a.is_completed() && b.is_completed())
    }

    /// `(k, k')` at `u`, or `None` outside the solved span.
    pub fn eval(&self, u: f64) -> Option<(f64, f64)> {
        let mut y = [0.0; 2];
        self.trajectory.eval_into(u, &mut y).map(|_| (y[0], y[1]))
    }

    /// Integrator nodes in increasing `u`.
    pub fn samples(&self) -> Vec<CurvatureSample> {
        self.trajectory
            .nodes()
            .into_iter()
            .map(|(u, y)| CurvatureSample {
                u,
                k: y[0],
                kp: y[1],
            })
            .collect()
    }

    /// `prime_constant(k(u), k'(u)) - C` at `u`.
    pub fn drift_at(&self, u: f64) -> Option<f64> {
        self.eval(u)
            .map(|(k, kp)| prime_constant_unchecked(k, kp, self.c as f64) - self.constant)
    }

    /// Largest `|prime_constant - C|` over the samples.
    pub fn max_drift(&self) -> f64 {
        self.samples()
            .iter()
            .map(|s| (prime_constant_unchecked(s.k, s.kp, self.c as f64) - self.constant).abs())
            .fold(0.0, f64::max)
    }

    /// The drift allowance `100 · rel_tol · |C|`.
    pub fn drift_bound(&self) -> f64 {
        100.0 * self.options.rel_tol * self.constant.abs()
    }

    pub fn turning_points(&self) -> Vec<TurningPoint> {
        let (lo, hi) = self.interval;
        self.trajectory
            .roots(1)
            .into_iter()
            .filter_map(|u| {
                let (k, _) = self.eval(u)?;
                let (dl, dh) = ((k - lo).abs(), (k - hi).abs());
                let (nearest_end, endpoint_distance) = if dl < dh {
                    (IntervalEnd::Lower, dl)
                } else {
                    (IntervalEnd::Upper, dh)
                };
                Some(TurningPoint {
                    u,
                    k,
                    prime_value: prime_polynomial(k, self.constant, self.c),
                    nearest_end,
                    endpoint_distance,
                })
            })
            .collect()
    }
}

/// True while a state stays away from `k = 0` and inside `P(k) >= 0` up to slack.
pub(crate) fn state_admissible(k: f64, constant: f64, c: i32) -> bool {
    if !(k >= MIN_CURVATURE) {
        return false;
    }
    let p = prime_polynomial(k, constant, c);
    p >= -PRIME_SLACK * (constant * k.powf(3.5)).max(1.0)
}

/// Integrate from `(k0, k0')` at `u = 0` across `span` with relative tolerance `rel_tol`.
pub fn solve_curvature(
    c: i32,
    k0: f64,
    kp0: f64,
    span: (f64, f64),
    rel_tol: f64,
) -> Result<CurvatureSolution, CurvatureError> {
    let opts = IntegratorOptions {
        rel_tol,
        ..IntegratorOptions::default()
    };
    solve_curvature_with(c, k0, kp0, span, &opts)
}

pub fn solve_curvature_with(
    c: i32,
    k0: f64,
    kp0: f64,
    span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<CurvatureSolution, CurvatureError> {
    check_k(k0)?;
    check_model(c)?;
    if !(span.0 <= 0.0 && span.1 >= 0.0 && span.0.is_finite() && span.1.is_finite()) {
        return Err(CurvatureError::InvalidSpan(span.0, span.1));
    }
    if !(opts.rel_tol > 0.0 && opts.rel_tol.is_finite()) {
        return Err(CurvatureError::InvalidTolerance(opts.rel_tol));
    }
    if !kp0.is_finite() {
        return Err(CurvatureError::NoSolution {
            constant: f64::NAN,
            c,
        });
    }
    let constant = prime_constant_unchecked(k0, kp0, c as f64);
    let interval = admissible_interval(constant, c)?;
    let cf = c as f64;
    let rhs = |_u: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = rhs_unchecked(y[0], y[1], cf);
    };
    let admissible = |y: &[f64]| state_admissible(y[0], constant, c);
    let trajectory = integrate_two_sided(&rhs, 0.0, &[k0, kp0], span, opts, &admissible);
    Ok(CurvatureSolution {
        c,
        constant,
        interval,
        options: *opts,
        requested_span: span,
        trajectory,
    })
}
