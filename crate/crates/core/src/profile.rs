//! Profile curves of the rotational biconservative surfaces.
//!
//! In R³ the profile is the graph `u(ρ)` of the closed-form solution to
//! `3ρρ'' = 1 + (ρ')²`. In S³ and H³ it is an arclength curve `σ` in a totally
//! geodesic S² or H², recovered by integrating its Frenet frame jointly with
//! the curvature ODE. The initial frame is chosen so that the linear
//! constraints `⟨σ, C₁⟩`, `⟨σ, C₂⟩` tying the profile to the rotation axis
//! hold at `u = 0`; the frame equations then propagate them.

use std::f64::consts::SQRT_2;

use crate::ambient::{orthonormal_complement, AmbientVector, Signature, SpaceForm};
use crate::curvature::{self, CurvatureSolution};
use crate::error::ProfileError;
use crate::ode::{integrate_two_sided, TwoSidedTrajectory};

/// The R³ profile `ρ ↦ u(ρ)` with `u'(ρ) = (Cρ^{2/3} - 1)^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevolutionProfile {
    constant: f64,
    rho_min: f64,
    rho_max: f64,
}

impl RevolutionProfile {
    pub fn new(constant: f64, rho_max: f64) -> Result<Self, ProfileError> {
        if !(constant > 0.0 && constant.is_finite()) {
            return Err(ProfileError::NonPositiveConstant(constant));
        }
        let rho_min = constant.powf(-1.5);
        if !(rho_max > rho_min && rho_max.is_finite()) {
            return Err(ProfileError::OutsideDomain {
                rho: rho_max,
                lower: rho_min,
                upper: f64::INFINITY,
            });
        }
        Ok(RevolutionProfile {
            constant,
            rho_min,
            rho_max,
        })
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Domain `(C^{-3/2}, ρ_max]`; the lower end is included only by [`Self::u`].
    pub fn domain(&self) -> (f64, f64) {
        (self.rho_min, self.rho_max)
    }

    fn check(&self, rho: f64) -> Result<(), ProfileError> {
        if rho >= self.rho_min && rho <= self.rho_max {
            Ok(())
        } else {
            Err(ProfileError::OutsideDomain {
                rho,
                lower: self.rho_min,
                upper: self.rho_max,
            })
        }
    }

    /// Closed-form height `u(ρ)`, finite at `ρ = C^{-3/2}`.
    pub fn u(&self, rho: f64) -> Result<f64, ProfileError> {
        self.check(rho)?;
        Ok(self.u_unchecked(rho))
    }

    fn u_unchecked(&self, rho: f64) -> f64 {
        let c = self.constant;
        let s = rho.cbrt();
        let root = (c * s * s - 1.0).max(0.0).sqrt();
        let log_arg = 2.0 * (c * s + (c * c * s * s - c).max(0.0).sqrt());
        1.5 / c * (s * root + log_arg.ln() / c.sqrt())
    }

    /// `du/dρ`; infinite at the lower end of the domain.
    pub fn u_prime(&self, rho: f64) -> Result<f64, ProfileError> {
        self.check(rho)?;
        Ok(1.0 / (self.constant * rho.cbrt().powi(2) - 1.0).sqrt())
    }

    /// Range of `u` over the domain.
    pub fn u_range(&self) -> (f64, f64) {
        (
            self.u_unchecked(self.rho_min),
            self.u_unchecked(self.rho_max),
        )
    }

    /// Inverse `ρ(u)` by safeguarded Newton inside the monotone bracket.
    pub fn rho(&self, u: f64) -> Result<f64, ProfileError> {
        let (u_lo, u_hi) = self.u_range();
        if !(u >= u_lo && u <= u_hi) {
            return Err(ProfileError::OutsideDomain {
                rho: f64::NAN,
                lower: self.rho_min,
                upper: self.rho_max,
            });
        }
        let (mut lo, mut hi) = (self.rho_min, self.rho_max);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = self.u_unchecked(x) - u;
            if g == 0.0 {
                return Ok(x);
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let dg = 1.0 / (self.constant * x.cbrt().powi(2) - 1.0).sqrt();
            let newton = x - g / dg;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// `dρ/du = √(Cρ^{2/3} - 1)`.
    pub fn rho_prime(&self, rho: f64) -> f64 {
        (self.constant * rho.cbrt().powi(2) - 1.0).max(0.0).sqrt()
    }

    /// `d²ρ/du² = (C/3) ρ^{-1/3}`.
    pub fn rho_second(&self, rho: f64) -> f64 {
        self.constant / 3.0 / rho.cbrt()
    }

    /// Mean curvature function `f = 2/(3√C ρ^{4/3})` of the surface of revolution.
    pub fn mean_curvature(&self, rho: f64) -> f64 {
        2.0 / (3.0 * self.constant.sqrt() * rho.cbrt().powi(4))
    }

    /// Gaussian curvature `K = -1/(3Cρ^{8/3})`.
    pub fn gauss_curvature(&self, rho: f64) -> f64 {
        -1.0 / (3.0 * self.constant * rho.cbrt().powi(8))
    }
}

/// Which totally geodesic surface carries the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Branch {
    S2,
    H2Elliptic,
    H2Parabolic,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::S2 => "S2",
            Branch::H2Elliptic => "H2_elliptic",
            Branch::H2Parabolic => "H2_parabolic",
        }
    }

    pub fn model(&self) -> SpaceForm {
        match self {
            Branch::S2 => SpaceForm::SPHERE,
            _ => SpaceForm::HYPERBOLIC,
        }
    }

    /// Branch implied by the model and the sign of the prime constant.
    pub fn resolve(c: i32, constant: f64) -> Option<Branch> {
        match c {
            1 if constant > 0.0 => Some(Branch::S2),
            -1 if constant > 0.0 => Some(Branch::H2Elliptic),
            -1 if constant < 0.0 => Some(Branch::H2Parabolic),
            _ => None,
        }
    }

    /// The fixed constant vectors `(C₁, C₂)` of the branch.
    pub fn constant_vectors(&self) -> (AmbientVector, AmbientVector) {
        match self {
            Branch::S2 => {
                let s = Signature::EUCLIDEAN_4;
                (s.basis(2), s.basis(3))
            }
            Branch::H2Elliptic => {
                let s = Signature::LORENTZ_4;
                (s.basis(1), s.basis(0))
            }
            Branch::H2Parabolic => {
                let s = Signature::LORENTZ_4;
                (
                    s.from_array([1.0, 0.0, 0.0, 1.0]),
                    s.from_array([0.0, 1.0, 0.0, 1.0]),
                )
            }
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// state layout: k, k', σ, σ', n
const K: usize = 0;
const KP: usize = 1;
const SIG: usize = 2;
const TAN: usize = 6;
const NOR: usize = 10;
const STATE_DIM: usize = 14;

/// Curve data at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameState {
    pub u: f64,
    pub k: f64,
    pub kp: f64,
    pub sigma: AmbientVector,
    pub tangent: AmbientVector,
    /// Unit normal of `σ` inside its geodesic 2-space.
    pub normal: AmbientVector,
}

/// Maximum deviations of the profile invariants over the integrator nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ProfileInvariants {
    pub model: f64,
    pub unit_speed: f64,
    pub frame_orthonormality: f64,
    pub constraint_c1: f64,
    pub constraint_c2: f64,
    /// `|k_frame - k_solution|`: the jointly integrated curvature against the
    /// stand-alone curvature solution.
    pub curvature_agreement: f64,
}

/// Frame-integrated profile in a totally geodesic S² ⊂ S³ or H² ⊂ H³.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    branch: Branch,
    constant: f64,
    c1: AmbientVector,
    c2: AmbientVector,
    solution: CurvatureSolution,
    trajectory: TwoSidedTrajectory,
}

fn infeasible(what: &str, value: f64) -> ProfileError {
    ProfileError::Infeasible(format!("{what} (value {value:e})"))
}

/// Initial `(σ, σ', n)` satisfying the branch constraints at `(k, k')`.
fn initial_frame(
    branch: Branch,
    k: f64,
    kp: f64,
    constant: f64,
) -> Result<[AmbientVector; 3], ProfileError> {
    let kappa = curvature::kappa2(k, constant)?;
    let m = 1.0 / kappa;
    let dm = -0.75 * kp / k * m;
    match branch {
        Branch::S2 => {
            let s = Signature::EUCLIDEAN_4;
            let sz = m;
            let sx2 = 1.0 - sz * sz;
            if !(sx2 > 0.0) {
                return Err(infeasible("1 - 16/(9C) k^(-3/2) > 0 violated", sx2));
            }
            let sx = sx2.sqrt();
            let sigma = s.from_array([sx, 0.0, sz, 0.0]);
            let tz = dm;
            let tx = -tz * sz / sx;
            let ty2 = 1.0 - tx * tx - tz * tz;
            if !(ty2 >= 0.0) {
                return Err(infeasible("unit-speed condition unsolvable", ty2));
            }
            let tangent = s.from_array([tx, ty2.sqrt(), tz, 0.0]);
            let normal = orthonormal_complement(&[sigma, tangent, s.basis(3)], &s.basis(2))?;
            Ok([sigma, tangent, normal])
        }
        Branch::H2Elliptic => {
            let s = Signature::LORENTZ_4;
            let s2 = m;
            let s4 = (1.0 + m * m).sqrt();
            let sigma = s.from_array([0.0, s2, 0.0, s4]);
            let t2 = dm;
            let t4 = t2 * s2 / s4;
            let t32 = 1.0 - t2 * t2 + t4 * t4;
            if !(t32 >= 0.0) {
                return Err(infeasible("unit-speed condition unsolvable", t32));
            }
            let tangent = s.from_array([0.0, t2, t32.sqrt(), t4]);
            let normal = orthonormal_complement(&[sigma, tangent, s.basis(0)], &s.basis(1))?;
            Ok([sigma, tangent, normal])
        }
        Branch::H2Parabolic => {
            // σ = α p + y e₄ with p = (e₁ + e₂)/√2, inside ⟨r, e₁ - e₂⟩ = 0
            let s = Signature::LORENTZ_4;
            let disc = m * m - 1.0;
            if !(disc > 0.0) {
                return Err(infeasible("kappa2 < 1 violated", kappa));
            }
            let y = SQRT_2 * m + disc.sqrt();
            let alpha = SQRT_2 * y - m;
            let p = |a: f64| a / SQRT_2;
            let sigma = s.from_array([p(alpha), p(alpha), 0.0, y]);
            let tau = -dm;
            let t4 = -alpha * tau / (SQRT_2 * alpha - y);
            let beta = SQRT_2 * t4 + tau;
            let t32 = 1.0 - beta * beta + t4 * t4;
            if !(t32 >= 0.0) {
                return Err(infeasible("unit-speed condition unsolvable", t32));
            }
            let tangent = s.from_array([p(beta), p(beta), t32.sqrt(), t4]);
            let xi = s.from_array([1.0, 1.0, 0.0, 2.0]).scale(1.0 / SQRT_2);
            let normal = orthonormal_complement(
                &[sigma, tangent, s.from_array([1.0, -1.0, 0.0, 0.0])],
                &(-xi),
            )?;
            Ok([sigma, tangent, normal])
        }
    }
}

fn pack(k: f64, kp: f64, frame: &[AmbientVector; 3]) -> [f64; STATE_DIM] {
    let mut y = [0.0; STATE_DIM];
    y[K] = k;
    y[KP] = kp;
    for (block, v) in [SIG, TAN, NOR].iter().zip(frame) {
        y[*block..*block + 4].copy_from_slice(&v.to_array());
    }
    y
}

/// Rebuild the profile of `branch` from a curvature solution.
///
/// The frame is integrated jointly with `(k, k')` using the solution's own
/// integrator settings over the span the solution covers.
pub fn reconstruct_profile(
    solution: &CurvatureSolution,
    branch: Branch,
) -> Result<ProfileCurve, ProfileError> {
    let c = solution.curvature_sign();
    let constant = solution.prime_constant();
    if branch.model().curvature() != c {
        return Err(ProfileError::BranchMismatch {
            branch: branch.name(),
            reason: format!("model curvature c = {c}"),
        });
    }
    if Branch::resolve(c, constant) != Some(branch) {
        return Err(ProfileError::BranchMismatch {
            branch: branch.name(),
            reason: format!("prime constant C = {constant}"),
        });
    }
    let (k0, kp0) = solution
        .eval(0.0)
        .expect("curvature solutions contain u = 0");
    let frame = initial_frame(branch, k0, kp0, constant)?;
    let y0 = pack(k0, kp0, &frame);
    let cf = c as f64;
    let rhs = |_u: f64, y: &[f64], dy: &mut [f64]| {
        let k = y[K];
        dy[K] = y[KP];
        dy[KP] = curvature::rhs_unchecked(k, y[KP], cf);
        for i in 0..4 {
            dy[SIG + i] = y[TAN + i];
            dy[TAN + i] = k * y[NOR + i] - cf * y[SIG + i];
            dy[NOR + i] = -k * y[TAN + i];
        }
    };
    let admissible = |y: &[f64]| curvature::state_admissible(y[K], constant, c);
    let trajectory = integrate_two_sided(
        &rhs,
        0.0,
        &y0,
        solution.span(),
        solution.options(),
        &admissible,
    );
    let (c1, c2) = branch.constant_vectors();
    Ok(ProfileCurve {
        branch,
        constant,
        c1,
        c2,
        solution: solution.clone(),
        trajectory,
    })
}

impl ProfileCurve {
    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn model(&self) -> SpaceForm {
        self.branch.model()
    }

    pub fn prime_constant(&self) -> f64 {
        self.constant
    }

    pub fn constant_vectors(&self) -> (AmbientVector, AmbientVector) {
        (self.c1, self.c2)
    }

    pub fn curvature_solution(&self) -> &CurvatureSolution {
        &self.solution
    }

    pub fn span(&self) -> (f64, f64) {
        (self.trajectory.t_min(), self.trajectory.t_max())
    }

    pub fn is_truncated(&self) -> bool {
        let (a, b) = self.span();
        let (ra, rb) = self.solution.requested_span();
        a > ra || b < rb
    }

    fn unpack(&self, u: f64, y: &[f64]) -> FrameState {
        let sig = self.model().ambient();
        let v = |i: usize| sig.from_array([y[i], y[i + 1], y[i + 2], y[i + 3]]);
        FrameState {
            u,
            k: y[K],
            kp: y[KP],
            sigma: v(SIG),
            tangent: v(TAN),
            normal: v(NOR),
        }
    }

    /// Frame at `u`, or `None` outside the integrated span.
    pub fn frame(&self, u: f64) -> Option<FrameState> {
        let mut y = [0.0; STATE_DIM];
        self.trajectory.eval_into(u, &mut y)?;
        Some(self.unpack(u, &y))
    }

    /// Integrator nodes in increasing `u`.
    pub fn samples(&self) -> Vec<FrameState> {
        self.trajectory
            .nodes()
            .into_iter()
            .map(|(u, y)| self.unpack(u, &y))
            .collect()
    }

    /// Target values of `(⟨σ, C₁⟩, ⟨σ, C₂⟩)` at curvature `k`.
    pub fn constraint_targets(&self, k: f64) -> (f64, f64) {
        let inv = 4.0 / (3.0 * self.constant.abs().sqrt() * k.powf(0.75));
        match self.branch {
            Branch::S2 | Branch::H2Elliptic => (inv, 0.0),
            Branch::H2Parabolic => (-inv / SQRT_2, -inv / SQRT_2),
        }
    }

    /// Signed constraint residuals `⟨σ, Cᵢ⟩ - target` of a frame.
    pub fn constraint_residuals(&self, fs: &FrameState) -> (f64, f64) {
        let (t1, t2) = self.constraint_targets(fs.k);
        (fs.sigma.dot(&self.c1) - t1, fs.sigma.dot(&self.c2) - t2)
    }

    pub fn invariants(&self) -> ProfileInvariants {
        let target = self.model().constraint_target().unwrap_or(0.0);
        let mut inv = ProfileInvariants::default();
        for fs in self.samples() {
            let (r1, r2) = self.constraint_residuals(&fs);
            let (s, t, n) = (fs.sigma, fs.tangent, fs.normal);
            let ortho = [s.dot(&t), s.dot(&n), t.dot(&n), n.dot(&n) - 1.0]
                .iter()
                .fold(0.0f64, |a, b| a.max(b.abs()));
            let k_ref = self
                .solution
                .eval(fs.u)
                .map_or(f64::NAN, |(k, _)| (k - fs.k).abs());
            inv.model = inv.model.max((s.dot(&s) - target).abs());
            inv.unit_speed = inv.unit_speed.max((t.dot(&t) - 1.0).abs());
            inv.frame_orthonormality = inv.frame_orthonormality.max(ortho);
            inv.constraint_c1 = inv.constraint_c1.max(r1.abs());
            inv.constraint_c2 = inv.constraint_c2.max(r2.abs());
            inv.curvature_agreement = inv.curvature_agreement.max(k_ref);
        }
        inv
    }
}

/// The S² profile written as `x(k)` on a monotone arc of `k`, integrated from
/// the first-order equation
///
/// `dx/dk = 12x / (k(9Ck^{3/2} - 16)) ± 36 √(9Ck^{3/2}(1 - x²) - 16) / ((9Ck^{3/2} - 16) √(9Ck^{3/2} - 144k² - 16))`
///
/// with a fixed-step classical Runge–Kutta scheme. It shares no code with the
/// frame integration and serves as an independent check of it.
#[derive(Debug, Clone)]
pub struct DxDkCurve {
    constant: f64,
    sign: f64,
    ks: Vec<f64>,
    xs: Vec<f64>,
    slopes: Vec<f64>,
}

/// Both branches `(+, -)` of `dx/dk` at `(x, k)`.
pub fn dxdk_slopes(x: f64, k: f64, constant: f64) -> Result<(f64, f64), ProfileError> {
    let a = 9.0 * constant * k.powf(1.5);
    let den = a - 16.0;
    if den == 0.0 {
        return Err(ProfileError::SplitRange(format!(
            "9Ck^(3/2) = 16 at k = {k}"
        )));
    }
    let speed = a - 144.0 * k * k - 16.0;
    if !(speed > 0.0) {
        return Err(ProfileError::SplitRange(format!("k' vanishes at k = {k}")));
    }
    let arg = a * (1.0 - x * x) - 16.0;
    if arg < 0.0 {
        return Err(infeasible("9Ck^(3/2)(1 - x^2) - 16 >= 0 violated", arg));
    }
    let first = 12.0 * x / (k * den);
    let second = 36.0 * arg.sqrt() / (den * speed.sqrt());
    Ok((first + second, first - second))
}

/// Integrate `x(k)` from `(k_range.0, x0)` to `k_range.1` with `steps` RK4 steps
/// on the branch of sign `sign`.
pub fn profile_oracle_dxdk(
    x0: f64,
    k_range: (f64, f64),
    constant: f64,
    sign: f64,
    steps: usize,
) -> Result<DxDkCurve, ProfileError> {
    let (ka, kb) = k_range;
    if !(ka > 0.0 && kb > 0.0 && ka != kb && steps > 0) {
        return Err(ProfileError::SplitRange(format!(
            "degenerate k-range [{ka}, {kb}]"
        )));
    }
    // the endpoints of a monotone arc cannot straddle a root of P or of 9Ck^{3/2} - 16
    let p = |k: f64| curvature::prime_polynomial(k, constant, 1);
    let q = |k: f64| 9.0 * constant * k.powf(1.5) - 16.0;
    let probes = 64;
    for i in 0..=probes {
        let k = ka + (kb - ka) * i as f64 / probes as f64;
        if p(k) <= 0.0 {
            return Err(ProfileError::SplitRange(format!(
                "k' vanishes inside the range near k = {k}"
            )));
        }
        if i > 0 && (q(k) > 0.0) != (q(ka) > 0.0) {
            return Err(ProfileError::SplitRange(format!(
                "9Ck^(3/2) - 16 changes sign near k = {k}"
            )));
        }
    }
    let slope = |k: f64, x: f64| -> Result<f64, ProfileError> {
        let (plus, minus) = dxdk_slopes(x, k, constant)?;
        Ok(if sign >= 0.0 { plus } else { minus })
    };
    let h = (kb - ka) / steps as f64;
    let mut ks = Vec::with_capacity(steps + 1);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut slopes = Vec::with_capacity(steps + 1);
    let (mut k, mut x) = (ka, x0);
    ks.push(k);
    xs.push(x);
    slopes.push(slope(k, x)?);
    for i in 0..steps {
        let s1 = slopes[i];
        let s2 = slope(k + 0.5 * h, x + 0.5 * h * s1)?;
        let s3 = slope(k + 0.5 * h, x + 0.5 * h * s2)?;
        let s4 = slope(k + h, x + h * s3)?;
        x += h / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
        k = ka + (i + 1) as f64 * h;
        ks.push(k);
        xs.push(x);
        slopes.push(slope(k, x)?);
    }
    Ok(DxDkCurve {
        constant,
        sign: sign.signum(),
        ks,
        xs,
        slopes,
    })
}

impl DxDkCurve {
    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn k_range(&self) -> (f64, f64) {
        (self.ks[0], self.ks[self.ks.len() - 1])
    }

    /// `x(k)` by cubic Hermite interpolation between the RK4 nodes.
    pub fn x(&self, k: f64) -> Option<f64> {
        let (a, b) = self.k_range();
        let h = (b - a) / (self.ks.len() - 1) as f64;
        let pos = (k - a) / h;
        let n = self.ks.len() - 1;
        if !(pos >= -1e-9 && pos <= n as f64 + 1e-9) {
            return None;
        }
        let i = (pos.floor() as usize).min(n - 1);
        let t = pos - i as f64;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        Some(
            (2.0 * t3 - 3.0 * t2 + 1.0) * x0
                + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * x1
                + (t3 - t2) * m1,
        )
    }

    /// `|y(k)| = √(1 - x² - (16/(9C)) k^{-3/2})`.
    pub fn y_abs(&self, k: f64) -> Option<f64> {
        let x = self.x(k)?;
        Some(
            (1.0 - x * x - 16.0 / (9.0 * self.constant) / k.powf(1.5))
                .max(0.0)
                .sqrt(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::solve_curvature;
    use crate::ode::IntegratorOptions;

    #[test]
    fn revolution_closed_form_values() {
        let prof = RevolutionProfile::new(1.0, 8.0).unwrap();
        let expected = 1.5 * (2.0 * 3f64.sqrt() + (2.0 * (2.0 + 3f64.sqrt())).ln());
        assert!((prof.u(8.0).unwrap() - expected).abs() < 1e-13);
        assert!((prof.u(1.0).unwrap() - 1.5 * 2f64.ln()).abs() < 1e-14);
        assert!((prof.u(1.0 + 1e-12).unwrap() - 1.5 * 2f64.ln()).abs() < 1e-5);
        assert!(prof.u(0.5).is_err());
        assert!(prof.u(8.5).is_err());
        assert!(RevolutionProfile::new(0.0, 8.0).is_err());
        assert!(RevolutionProfile::new(1.0, 1.0).is_err());
    }

    #[test]
    fn revolution_inverse_round_trip() {
        for c in [1.0, 1.5, 2.0] {
            let prof = RevolutionProfile::new(c, 8.0).unwrap();
            for rho in [prof.domain().0 * 1.001, 1.2, 2.0, 5.0, 8.0] {
                let u = prof.u(rho).unwrap();
                let back = prof.rho(u).unwrap();
                assert!(
                    (back - rho).abs() < 1e-10 * rho,
                    "C={c} rho={rho} back={back}"
                );
            }
        }
    }

    #[test]
    fn revolution_derivative_matches_closed_form() {
        let prof = RevolutionProfile::new(1.5, 8.0).unwrap();
        for rho in [1.0, 3.0, 7.0] {
            let h = 1e-5;
            let fd = (prof.u(rho + h).unwrap() - prof.u(rho - h).unwrap()) / (2.0 * h);
            assert!((fd - prof.u_prime(rho).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn revolution_meridian_curvature_obeys_flat_prime_integral() {
        // k = f/2 along the meridian, differentiated in arclength
        let c = 1.5;
        let prof = RevolutionProfile::new(c, 8.0).unwrap();
        let expected = 16.0 / 9.0 * (3.0 * c.sqrt()).powf(1.5);
        for rho in [1.5, 2.5, 6.0] {
            let k = prof.mean_curvature(rho) / 2.0;
            let dk_drho = -4.0 / 3.0 * k / rho;
            let ds_drho = (1.0 + prof.u_prime(rho).unwrap().powi(2)).sqrt();
            let kp = dk_drho / ds_drho;
            let got = curvature::prime_constant(k, kp, 0).unwrap();
            assert!(
                (got - expected).abs() < 1e-10 * expected,
                "{got} vs {expected}"
            );
        }
    }

    fn tight() -> IntegratorOptions {
        IntegratorOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..IntegratorOptions::default()
        }
    }

    fn sphere_profile() -> ProfileCurve {
        let sol =
            crate::curvature::solve_curvature_with(1, 1.0, 1.0, (-1.0, 1.0), &tight()).unwrap();
        reconstruct_profile(&sol, Branch::S2).unwrap()
    }

    #[test]
    fn sphere_initial_constraint() {
        let prof = sphere_profile();
        let fs = prof.frame(0.0).unwrap();
        assert!((fs.sigma.get(2) - 4.0 / 13.0).abs() < 1e-15);
        assert_eq!(fs.sigma.get(1), 0.0);
        assert!(fs.tangent.get(1) > 0.0);
    }

    #[test]
    fn sphere_profile_invariants() {
        let prof = sphere_profile();
        assert!(!prof.is_truncated());
        let inv = prof.invariants();
        assert!(inv.model < 1e-8, "{inv:?}");
        assert!(inv.unit_speed < 1e-8, "{inv:?}");
        assert!(inv.constraint_c1 < 1e-6, "{inv:?}");
        assert!(inv.constraint_c2 < 1e-8, "{inv:?}");
        assert!(inv.frame_orthonormality < 1e-8, "{inv:?}");
        assert!(inv.curvature_agreement < 1e-8, "{inv:?}");
    }

    #[test]
    fn hyperbolic_profile_invariants() {
        for (k0, kp0, branch) in [
            (1.0, 1.0, Branch::H2Elliptic),
            (0.25, 0.2, Branch::H2Parabolic),
        ] {
            let sol =
                crate::curvature::solve_curvature_with(-1, k0, kp0, (-1.0, 1.0), &tight()).unwrap();
            let prof = reconstruct_profile(&sol, branch).unwrap();
            let inv = prof.invariants();
            assert!(inv.model < 1e-8, "{branch}: {inv:?}");
            assert!(inv.unit_speed < 1e-8, "{branch}: {inv:?}");
            assert!(
                inv.constraint_c1 < 1e-6 && inv.constraint_c2 < 1e-6,
                "{branch}: {inv:?}"
            );
            for fs in prof.samples() {
                assert!(fs.sigma.get(3) > 0.0);
            }
        }
    }

    #[test]
    fn parabolic_initial_constraint_value() {
        let sol = solve_curvature(-1, 0.25, 0.2, (-0.1, 0.1), 1e-10).unwrap();
        let prof = reconstruct_profile(&sol, Branch::H2Parabolic).unwrap();
        let fs = prof.frame(0.0).unwrap();
        let c = -248.0f64 / 225.0;
        let expected = -2.0 * SQRT_2 / (3.0 * (-c).sqrt() * 0.25f64.powf(0.75));
        let (c1, c2) = prof.constant_vectors();
        assert!((fs.sigma.dot(&c1) - expected).abs() < 1e-14);
        assert!((fs.sigma.dot(&c2) - expected).abs() < 1e-14);
        assert!(
            (expected + 2.540_002_540_003_81).abs() < 1e-12,
            "{expected}"
        );
    }

    #[test]
    fn geodesic_curvature_from_second_differences() {
        let prof = sphere_profile();
        let h = 1e-3;
        for u in [-0.8, -0.3, 0.2, 0.7] {
            let a = prof.frame(u - h).unwrap().sigma;
            let b = prof.frame(u).unwrap();
            let c = prof.frame(u + h).unwrap().sigma;
            let acc = (a + c - b.sigma.scale(2.0)).scale(1.0 / (h * h));
            // σ'' + σ is the covariant acceleration inside S²
            let kg = (acc + b.sigma).norm();
            assert!((kg - b.k).abs() < 1e-5, "u={u}: {kg} vs {}", b.k);
        }
    }

    #[test]
    fn branch_checks() {
        let sol = solve_curvature(1, 1.0, 1.0, (-0.1, 0.1), 1e-10).unwrap();
        assert!(matches!(
            reconstruct_profile(&sol, Branch::H2Elliptic),
            Err(ProfileError::BranchMismatch { .. })
        ));
        let sol = solve_curvature(-1, 0.25, 0.2, (-0.1, 0.1), 1e-10).unwrap();
        assert!(matches!(
            reconstruct_profile(&sol, Branch::H2Elliptic),
            Err(ProfileError::BranchMismatch { .. })
        ));
        assert_eq!(Branch::resolve(-1, 137.0 / 9.0), Some(Branch::H2Elliptic));
        assert_eq!(Branch::resolve(-1, -1.0), Some(Branch::H2Parabolic));
        assert_eq!(Branch::resolve(1, -1.0), None);
    }

    #[test]
    fn oracle_rejects_turning_point() {
        let c = 169.0 / 9.0;
        let (_, hi) = crate::curvature::admissible_interval(c, 1).unwrap();
        let r = profile_oracle_dxdk(0.5, (0.9, hi * 1.01), c, 1.0, 100);
        assert!(matches!(r, Err(ProfileError::SplitRange(_))));
        assert!(matches!(
            profile_oracle_dxdk(0.5, (0.9, 0.9), c, 1.0, 100),
            Err(ProfileError::SplitRange(_))
        ));
    }

    #[test]
    fn oracle_slope_never_vanishes() {
        // a zero slope would force x = ±3k/√(1 + 9k²)
        let c = 169.0 / 9.0;
        let prof = sphere_profile();
        for fs in prof.samples() {
            if fs.kp.abs() < 1e-3 || fs.sigma.get(1).abs() < 1e-3 {
                continue;
            }
            let (p, m) = dxdk_slopes(fs.sigma.get(0), fs.k, c).unwrap();
            assert!(p != 0.0 && m != 0.0);
        }
    }
}
