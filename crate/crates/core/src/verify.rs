//! Numerical differential geometry of an evaluable patch.
//!
//! Nothing here knows how a patch was built. From the analytic first partials
//! of [`ParametricSurface::jet`] we obtain:
//!
//! * second partials by central differences of the first partials, with one
//!   Richardson step (`h`, `h/2`);
//! * the unit normal `η` as the orthonormal complement of `{X_u, X_v}` in R³,
//!   or `{X_u, X_v, X}` in S³ and H³;
//! * `h_ij = ⟨X_ij, η⟩`, `A = g⁻¹h`, `f = tr A`, `K = det A + c`;
//! * derivatives of `f` by a second, coarser level of central differences
//!   applied to `f` itself, again Richardson-extrapolated.
//!
//! The Laplacian is reported with the geometer's sign, `Δ = -tr ∇²`.
//!
//! Normals are oriented once per patch: `f > 0` at the grid point nearest the
//! centre, then propagated across the grid so that neighbouring normals agree.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::{orthonormal_complement, AmbientVector, SpaceForm};
use crate::curvature;
use crate::error::VerifyError;
use crate::surface::{Jet, ParametricSurface, Rect};

pub const SCHEMA: &str = "biconservative-verification/1";
pub const LAPLACIAN_CONVENTION: &str = "geometer sign: Delta = -trace(Hess)";

pub mod names {
    pub const BICONSERVATIVE: &str = "biconservative";
    pub const GAUSS: &str = "gauss_identity";
    pub const NORM_A2: &str = "norm_a2_identity";
    pub const EIGENVALUES: &str = "eigenvalues";
    pub const PDE: &str = "pde";
    pub const X2F: &str = "x2f";
    pub const MEAN_CURVATURE_REF: &str = "mean_curvature_reference";
    pub const GAUSS_REF: &str = "gauss_reference";
    pub const LAPLACIAN_PROFILE: &str = "laplacian_profile";
    pub const NORMAL: &str = "normal_orthogonality";
    pub const MODEL: &str = "model_membership";
    pub const NORMAL_BITENSION: &str = "normal_bitension";
}

/// Default inner step relative to the parameter diagonal. Fourth differences
/// of `f` lose to roundoff below it and to truncation above it.
pub const DEFAULT_STEP_FACTOR: f64 = 1.5e-4;

/// Finite-difference and gating parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub nu: usize,
    pub nv: usize,
    /// Inner step for second partials; [`DEFAULT_STEP_FACTOR`] times the
    /// rectangle diagonal when `None`.
    pub fd_step: Option<f64>,
    /// Outer step for derivatives of `f`, as a multiple of the inner step.
    pub outer_factor: f64,
    pub richardson: bool,
    /// A point is non-CMC when `|grad f| > cmc_gate · (1 + |f|)`.
    pub cmc_gate: f64,
    /// Principal directions are skipped when `|λ₁ - λ₂|` is below this.
    pub eigen_gap: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            nu: 64,
            nv: 64,
            fd_step: None,
            outer_factor: 20.0,
            richardson: true,
            cmc_gate: 1e-6,
            eigen_gap: 1e-8,
        }
    }
}

impl VerifyOptions {
    pub fn inner_step(&self, rect: &Rect) -> f64 {
        self.fd_step
            .unwrap_or(DEFAULT_STEP_FACTOR * rect.diagonal())
    }
}

type M2 = [[f64; 2]; 2];

fn inv2(m: &M2) -> (M2, f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (
        [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ],
        det,
    )
}

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn apply2(a: &M2, x: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

fn quad2(g: &M2, x: [f64; 2], y: [f64; 2]) -> f64 {
    let gy = apply2(g, y);
    x[0] * gy[0] + x[1] * gy[1]
}

/// Pointwise shape data, without derivatives of `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeData {
    pub jet: Jet,
    /// `[X_uu, X_uv, X_vv]`.
    pub second: [AmbientVector; 3],
    pub g: M2,
    pub g_inv: M2,
    pub eta: AmbientVector,
    pub h: M2,
    pub a: M2,
    pub f: f64,
    pub gauss: f64,
    pub norm_a2: f64,
    /// Principal values with `λ₁ ≤ λ₂`.
    pub lambda: (f64, f64),
}

/// Full geometry at one point, including first and second derivatives of `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry {
    pub u: f64,
    pub v: f64,
    pub c: i32,
    pub shape: ShapeData,
    /// `(f_u, f_v)`.
    pub df: [f64; 2],
    /// `[f_uu, f_uv, f_vv]`.
    pub d2f: [f64; 3],
    /// Coordinates of `grad f`.
    pub grad_f: [f64; 2],
    /// `grad f` pushed into the ambient space.
    pub grad_f_ambient: AmbientVector,
    pub grad_f_norm: f64,
    /// `Δf` with the geometer's sign.
    pub laplacian_f: f64,
    /// Unit (in `g`) principal direction of `λ₂`, when the eigenvalues separate.
    pub x2: Option<[f64; 2]>,
    /// Unit principal direction of `λ₁`.
    pub x1: Option<[f64; 2]>,
}

struct Evaluator<'a, S: ParametricSurface + ?Sized> {
    patch: &'a S,
    model: SpaceForm,
    domain: Rect,
    h: f64,
    outer: f64,
    richardson: bool,
}

impl<'a, S: ParametricSurface + ?Sized> Evaluator<'a, S> {
    fn new(patch: &'a S, opts: &VerifyOptions) -> Self {
        let h = opts.inner_step(&patch.rect());
        Evaluator {
            patch,
            model: patch.model(),
            domain: patch.domain(),
            h,
            outer: opts.outer_factor * h,
            richardson: opts.richardson,
        }
    }

    fn jet(&self, u: f64, v: f64) -> Result<Jet, VerifyError> {
        if !self.domain.contains(u, v) {
            return Err(VerifyError::StencilOutsideDomain { u, v });
        }
        self.patch
            .jet(u, v)
            .ok_or(VerifyError::StencilOutsideDomain { u, v })
    }

    fn normal(&self, jet: &Jet, orient: &AmbientVector) -> Result<AmbientVector, VerifyError> {
        Ok(if self.model.curvature() == 0 {
            orthonormal_complement(&[jet.xu, jet.xv], orient)?
        } else {
            orthonormal_complement(&[jet.xu, jet.xv, jet.x], orient)?
        })
    }

    fn second_level(&self, u: f64, v: f64, h: f64) -> Result<[AmbientVector; 3], VerifyError> {
        let (up, um) = (self.jet(u + h, v)?, self.jet(u - h, v)?);
        let (vp, vm) = (self.jet(u, v + h)?, self.jet(u, v - h)?);
        let s = 0.5 / h;
        let xuu = (up.xu - um.xu).scale(s);
        let xvv = (vp.xv - vm.xv).scale(s);
        let xuv = ((vp.xu - vm.xu) + (up.xv - um.xv)).scale(0.5 * s);
        Ok([xuu, xuv, xvv])
    }

    fn second(&self, u: f64, v: f64) -> Result<[AmbientVector; 3], VerifyError> {
        let coarse = self.second_level(u, v, self.h)?;
        if !self.richardson {
            return Ok(coarse);
        }
        let fine = self.second_level(u, v, 0.5 * self.h)?;
        Ok([0, 1, 2].map(|i| (fine[i].scale(4.0) - coarse[i]).scale(1.0 / 3.0)))
    }

    fn shape(&self, u: f64, v: f64, orient: &AmbientVector) -> Result<ShapeData, VerifyError> {
        let jet = self.jet(u, v)?;
        let g = [
            [jet.xu.dot(&jet.xu), jet.xu.dot(&jet.xv)],
            [jet.xv.dot(&jet.xu), jet.xv.dot(&jet.xv)],
        ];
        let (g_inv, det) = inv2(&g);
        if !(det > 1e-10 * g[0][0] * g[1][1]) {
            return Err(VerifyError::Conditioning { u, v, det });
        }
        let eta = self.normal(&jet, orient)?;
        let second = self.second(u, v)?;
        let hs = second.map(|x| x.dot(&eta));
        let h = [[hs[0], hs[1]], [hs[1], hs[2]]];
        let a = mul2(&g_inv, &h);
        let f = a[0][0] + a[1][1];
        let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let norm_a2 = a[0][0] * a[0][0] + 2.0 * a[0][1] * a[1][0] + a[1][1] * a[1][1];
        let half = 0.5 * (a[0][0] - a[1][1]);
        let disc = (half * half + a[0][1] * a[1][0]).max(0.0).sqrt();
        Ok(ShapeData {
            jet,
            second,
            g,
            g_inv,
            eta,
            h,
            a,
            f,
            gauss: det_a + self.model.curvature() as f64,
            norm_a2,
            lambda: (0.5 * f - disc, 0.5 * f + disc),
        })
    }

    fn f_at(&self, u: f64, v: f64, orient: &AmbientVector) -> Result<f64, VerifyError> {
        self.shape(u, v, orient).map(|s| s.f)
    }

    /// `([f_u, f_v], [f_uu, f_uv, f_vv])` on the 9-point stencil of half-width `h`.
    fn f_derivatives_level(
        &self,
        u: f64,
        v: f64,
        h: f64,
        f0: f64,
        orient: &AmbientVector,
    ) -> Result<([f64; 2], [f64; 3]), VerifyError> {
        let f = |a: f64, b: f64| self.f_at(u + a * h, v + b * h, orient);
        let (fpu, fmu, fpv, fmv) = (f(1.0, 0.0)?, f(-1.0, 0.0)?, f(0.0, 1.0)?, f(0.0, -1.0)?);
        let (fpp, fpm, fmp, fmm) = (f(1.0, 1.0)?, f(1.0, -1.0)?, f(-1.0, 1.0)?, f(-1.0, -1.0)?);
        let d1 = [(fpu - fmu) / (2.0 * h), (fpv - fmv) / (2.0 * h)];
        let d2 = [
            (fpu - 2.0 * f0 + fmu) / (h * h),
            (fpp - fpm - fmp + fmm) / (4.0 * h * h),
            (fpv - 2.0 * f0 + fmv) / (h * h),
        ];
        Ok((d1, d2))
    }

    fn point(
        &self,
        u: f64,
        v: f64,
        orient: &AmbientVector,
        opts: &VerifyOptions,
    ) -> Result<PointGeometry, VerifyError> {
        let shape = self.shape(u, v, orient)?;
        let eta = shape.eta;
        let (mut df, mut d2f) = self.f_derivatives_level(u, v, self.outer, shape.f, &eta)?;
        if self.richardson {
            let (df2, d2f2) = self.f_derivatives_level(u, v, 0.5 * self.outer, shape.f, &eta)?;
            df = [0, 1].map(|i| (4.0 * df2[i] - df[i]) / 3.0);
            d2f = [0, 1, 2].map(|i| (4.0 * d2f2[i] - d2f[i]) / 3.0);
        }
        let gi = &shape.g_inv;
        let grad_f = apply2(gi, df);
        let grad_f_norm = quad2(gi, df, df).max(0.0).sqrt();
        let grad_f_ambient = shape.jet.xu.scale(grad_f[0]) + shape.jet.xv.scale(grad_f[1]);

        // Christoffel symbols Γᵏ_ij = g^{kl} ⟨X_ij, X_l⟩
        let tangents = [shape.jet.xu, shape.jet.xv];
        let mut lap_lb = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let xij = shape.second[i + j];
                let low = [xij.dot(&tangents[0]), xij.dot(&tangents[1])];
                let gamma = apply2(gi, low);
                let fij = d2f[i + j];
                lap_lb += gi[i][j] * (fij - gamma[0] * df[0] - gamma[1] * df[1]);
            }
        }

        let (l1, l2) = shape.lambda;
        let (x1, x2) = if (l2 - l1).abs() > opts.eigen_gap {
            (
                principal_direction(&shape.a, &shape.g, l1),
                principal_direction(&shape.a, &shape.g, l2),
            )
        } else {
            (None, None)
        };
        Ok(PointGeometry {
            u,
            v,
            c: self.model.curvature(),
            shape,
            df,
            d2f,
            grad_f,
            grad_f_ambient,
            grad_f_norm,
            laplacian_f: -lap_lb,
            x1,
            x2,
        })
    }
}

fn principal_direction(a: &M2, g: &M2, lambda: f64) -> Option<[f64; 2]> {
    let c1 = [a[0][1], lambda - a[0][0]];
    let c2 = [lambda - a[1][1], a[1][0]];
    let n1 = c1[0].hypot(c1[1]);
    let n2 = c2[0].hypot(c2[1]);
    let w = if n1 >= n2 { c1 } else { c2 };
    let len = quad2(g, w, w).sqrt();
    if !(len > 0.0) {
        return None;
    }
    Some([w[0] / len, w[1] / len])
}

/// Geometry at `(u, v)` with the normal oriented so that `f ≥ 0` there.
pub fn fundamental_forms<S: ParametricSurface + ?Sized>(
    patch: &S,
    u: f64,
    v: f64,
    fd_step: f64,
) -> Result<PointGeometry, VerifyError> {
    let opts = VerifyOptions {
        fd_step: Some(fd_step),
        ..VerifyOptions::default()
    };
    let ev = Evaluator::new(patch, &opts);
    let jet = ev.jet(u, v)?;
    let zero = patch.model().ambient().zero();
    let raw = ev.normal(&jet, &zero)?;
    let orient = if ev.shape(u, v, &raw)?.f < 0.0 {
        -raw
    } else {
        raw
    };
    ev.point(u, v, &orient, &opts)
}

impl PointGeometry {
    pub fn is_non_cmc(&self, gate: f64) -> bool {
        self.grad_f_norm > gate * (1.0 + self.shape.f.abs())
    }
}

/// `|2A(grad f) + f grad f|_g / (1 + |f| |grad f|)`.
pub fn biconservative_residual(pg: &PointGeometry) -> f64 {
    let ag = apply2(&pg.shape.a, pg.grad_f);
    let f = pg.shape.f;
    let w = [
        2.0 * ag[0] + f * pg.grad_f[0],
        2.0 * ag[1] + f * pg.grad_f[1],
    ];
    quad2(&pg.shape.g, w, w).max(0.0).sqrt() / (1.0 + f.abs() * pg.grad_f_norm)
}

/// `(|K + 3f²/4 - c|, ||A|² - 5f²/2|, max(|λ₁ + f/2|, |λ₂ - 3f/2|))`.
pub fn curvature_identity_residuals(pg: &PointGeometry) -> (f64, f64, f64) {
    let s = &pg.shape;
    let f = s.f;
    let r_k = (s.gauss + 0.75 * f * f - pg.c as f64).abs();
    let r_a2 = (s.norm_a2 - 2.5 * f * f).abs();
    let r_eig = (s.lambda.0 + 0.5 * f)
        .abs()
        .max((s.lambda.1 - 1.5 * f).abs());
    (r_k, r_a2, r_eig)
}

/// `|f Δf + |grad f|² - (16/9) K (K - c)|`.
pub fn pde_residual(pg: &PointGeometry) -> f64 {
    let k = pg.shape.gauss;
    (pg.shape.f * pg.laplacian_f + pg.grad_f_norm.powi(2) - 16.0 / 9.0 * k * (k - pg.c as f64))
        .abs()
}

/// `Δf - f|A|² + 2c f`, the normal part of the bitension field.
pub fn normal_bitension_residual(pg: &PointGeometry) -> f64 {
    let f = pg.shape.f;
    pg.laplacian_f - f * pg.shape.norm_a2 + 2.0 * pg.c as f64 * f
}

/// `|df(X₂)|`, or `None` when the principal directions are not resolved.
pub fn x2f_residual(pg: &PointGeometry) -> Option<f64> {
    pg.x2.map(|w| (pg.df[0] * w[0] + pg.df[1] * w[1]).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub argmax: [f64; 2],
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundStats {
    /// Minimum of the absolute value over the grid.
    pub min: f64,
    pub argmin: [f64; 2],
    pub count: usize,
}

/// Upper bounds on residual maxima and lower bounds on quantities that must stay
/// away from zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub upper: BTreeMap<String, f64>,
    pub lower: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn with_upper(mut self, name: &str, tol: f64) -> Self {
        self.upper.insert(name.to_string(), tol);
        self
    }

    pub fn with_lower(mut self, name: &str, bound: f64) -> Self {
        self.lower.insert(name.to_string(), bound);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdMetadata {
    pub inner_step: f64,
    pub outer_step: f64,
    pub richardson: bool,
    /// Formal order of the differentiation scheme.
    pub order: u32,
    pub laplacian_convention: String,
    pub cmc_gate: f64,
}

/// Per-point values kept for mesh channels; not serialized.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub u: f64,
    pub v: f64,
    pub f: f64,
    pub gauss: f64,
    pub values: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub case: String,
    pub model: String,
    pub grid: GridSpec,
    pub tolerances: Tolerances,
    pub residuals: BTreeMap<String, ResidualStats>,
    pub lower_bounds: BTreeMap<String, LowerBoundStats>,
    /// Grid points where the non-CMC gate held.
    pub non_cmc_points: usize,
    pub pass: bool,
    pub failures: Vec<String>,
    pub fd_metadata: FdMetadata,
    #[serde(skip)]
    pub points: Vec<PointRecord>,
}

impl VerificationReport {
    pub fn max(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).map(|s| s.max)
    }

    pub fn min_abs(&self, name: &str) -> Option<f64> {
        self.lower_bounds.get(name).map(|s| s.min)
    }
}

/// All residual values of one point.
pub fn point_residuals<S: ParametricSurface + ?Sized>(
    patch: &S,
    pg: &PointGeometry,
    opts: &VerifyOptions,
) -> BTreeMap<&'static str, f64> {
    let mut out = BTreeMap::new();
    let s = &pg.shape;
    let jet = &s.jet;
    out.insert(names::BICONSERVATIVE, biconservative_residual(pg));
    let mut normal = (s.eta.dot(&jet.xu) / jet.xu.norm())
        .abs()
        .max((s.eta.dot(&jet.xv) / jet.xv.norm()).abs());
    if let Some(target) = patch.model().constraint_target() {
        normal = normal.max(s.eta.dot(&jet.x).abs());
        out.insert(names::MODEL, (jet.x.dot(&jet.x) - target).abs());
    }
    out.insert(names::NORMAL, normal);
    out.insert(names::NORMAL_BITENSION, normal_bitension_residual(pg));
    if pg.is_non_cmc(opts.cmc_gate) {
        let (rk, ra2, reig) = curvature_identity_residuals(pg);
        out.insert(names::GAUSS, rk);
        out.insert(names::NORM_A2, ra2);
        out.insert(names::EIGENVALUES, reig);
        out.insert(names::PDE, pde_residual(pg));
        if let Some(x) = x2f_residual(pg) {
            out.insert(names::X2F, x);
        }
    }
    if let Some(f_ref) = patch.reference_mean_curvature(pg.u, pg.v) {
        out.insert(names::MEAN_CURVATURE_REF, (s.f - f_ref).abs());
    }
    if let Some(k_ref) = patch.reference_gauss_curvature(pg.u, pg.v) {
        out.insert(names::GAUSS_REF, (s.gauss - k_ref).abs());
    }
    if let Some((k, kp)) = patch.profile_curvature(pg.u) {
        // along a unit-speed profile: -Δf = 2k'' - (3/2) k'^2 / k
        let kpp = curvature::rhs_unchecked(k, kp, pg.c as f64);
        let expected = 2.0 * kpp - 1.5 * kp * kp / k;
        out.insert(
            names::LAPLACIAN_PROFILE,
            (-pg.laplacian_f - expected).abs() / (1.0 + expected.abs()),
        );
    }
    out
}

/// Orient the grid normals: `f > 0` at the grid point nearest the centre, then
/// breadth-first agreement with already-oriented neighbours.
fn orient_grid<S: ParametricSurface + ?Sized>(
    ev: &Evaluator<'_, S>,
    grid: &[(f64, f64)],
    nu: usize,
    nv: usize,
) -> Result<Vec<AmbientVector>, VerifyError> {
    let zero = ev.model.ambient().zero();
    let raw: Vec<AmbientVector> = grid
        .par_iter()
        .map(|&(u, v)| ev.jet(u, v).and_then(|j| ev.normal(&j, &zero)))
        .collect::<Result<_, _>>()?;
    let start = (nu / 2) * nv + nv / 2;
    let (u, v) = grid[start];
    let mut oriented: Vec<Option<AmbientVector>> = vec![None; grid.len()];
    let s = ev.shape(u, v, &raw[start])?;
    oriented[start] = Some(if s.f < 0.0 { -raw[start] } else { raw[start] });
    let mut queue = VecDeque::from([start]);
    while let Some(idx) = queue.pop_front() {
        let (i, j) = (idx / nv, idx % nv);
        let reference = oriented[idx].expect("queued points are oriented");
        let mut neighbours = Vec::with_capacity(4);
        if i > 0 {
            neighbours.push(idx - nv);
        }
        if i + 1 < nu {
            neighbours.push(idx + nv);
        }
        if j > 0 {
            neighbours.push(idx - 1);
        }
        if j + 1 < nv {
            neighbours.push(idx + 1);
        }
        for n in neighbours {
            if oriented[n].is_none() {
                let eta = raw[n];
                oriented[n] = Some(if eta.dot(&reference) < 0.0 { -eta } else { eta });
                queue.push_back(n);
            }
        }
    }
    Ok(oriented
        .into_iter()
        .map(|e| e.expect("grid is connected"))
        .collect())
}

/// Verify `patch` on an `nu × nv` grid over its rectangle.
pub fn verify<S: ParametricSurface + ?Sized>(
    patch: &S,
    case: &str,
    opts: &VerifyOptions,
    tolerances: &Tolerances,
) -> Result<VerificationReport, VerifyError> {
    let (nu, nv) = (opts.nu, opts.nv);
    if nu < 2 || nv < 2 {
        return Err(VerifyError::GridTooSmall(nu, nv));
    }
    let ev = Evaluator::new(patch, opts);
    let rect = patch.rect();
    let grid = rect.grid(nu, nv);
    let normals = orient_grid(&ev, &grid, nu, nv)?;
    let points: Vec<(PointGeometry, BTreeMap<&'static str, f64>)> = grid
        .par_iter()
        .zip(normals.par_iter())
        .map(|(&(u, v), eta)| {
            let pg = ev.point(u, v, eta, opts)?;
            let res = point_residuals(patch, &pg, opts);
            Ok((pg, res))
        })
        .collect::<Result<_, VerifyError>>()?;

    let mut residuals: BTreeMap<String, ResidualStats> = BTreeMap::new();
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    let mut lower_bounds: BTreeMap<String, LowerBoundStats> = BTreeMap::new();
    let mut non_cmc_points = 0;
    for (pg, res) in &points {
        if pg.is_non_cmc(opts.cmc_gate) {
            non_cmc_points += 1;
        }
        for (&name, &value) in res {
            if name == names::NORMAL_BITENSION {
                let e = lower_bounds
                    .entry(name.to_string())
                    .or_insert(LowerBoundStats {
                        min: f64::INFINITY,
                        argmin: [pg.u, pg.v],
                        count: 0,
                    });
                e.count += 1;
                if !e.min.is_nan() && (value.is_nan() || value.abs() < e.min) {
                    e.min = value.abs();
                    e.argmin = [pg.u, pg.v];
                }
                continue;
            }
            let e = residuals.entry(name.to_string()).or_insert(ResidualStats {
                max: f64::NEG_INFINITY,
                mean: 0.0,
                argmax: [pg.u, pg.v],
                count: 0,
            });
            e.count += 1;
            if !e.max.is_nan() && (value.is_nan() || value > e.max) {
                e.max = value;
                e.argmax = [pg.u, pg.v];
            }
            *sums.entry(name.to_string()).or_insert(0.0) += value;
        }
    }
    for (name, stats) in residuals.iter_mut() {
        stats.mean = sums[name] / stats.count as f64;
    }

    let mut failures = Vec::new();
    for (name, &tol) in &tolerances.upper {
        match residuals.get(name) {
            Some(s) if s.max <= tol => {}
            Some(s) => failures.push(format!("{name}: max {:e} exceeds {tol:e}", s.max)),
            None => failures.push(format!("{name}: no gated points to evaluate")),
        }
    }
    for (name, &bound) in &tolerances.lower {
        match lower_bounds.get(name) {
            Some(s) if s.min > bound => {}
            Some(s) => failures.push(format!(
                "{name}: min |value| {:e} not above {bound:e}",
                s.min
            )),
            None => failures.push(format!("{name}: not evaluated")),
        }
    }

    let records = points
        .iter()
        .map(|(pg, res)| PointRecord {
            u: pg.u,
            v: pg.v,
            f: pg.shape.f,
            gauss: pg.shape.gauss,
            values: res.clone(),
        })
        .collect();
    Ok(VerificationReport {
        schema: SCHEMA.to_string(),
        case: case.to_string(),
        model: patch.model().name().to_string(),
        grid: GridSpec { nu, nv, rect },
        tolerances: tolerances.clone(),
        residuals,
        lower_bounds,
        non_cmc_points,
        pass: failures.is_empty(),
        failures,
        fd_metadata: FdMetadata {
            inner_step: ev.h,
            outer_step: ev.outer,
            richardson: opts.richardson,
            order: if opts.richardson { 4 } else { 2 },
            laplacian_convention: LAPLACIAN_CONVENTION.to_string(),
            cmc_gate: opts.cmc_gate,
        },
        points: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::fixtures;

    fn at_center<S: ParametricSurface>(s: &S) -> PointGeometry {
        let (u, v) = s.rect().center();
        fundamental_forms(s, u, v, 1e-4 * s.rect().diagonal()).unwrap()
    }

    #[test]
    fn plane_is_flat_and_minimal() {
        let pg = at_center(&fixtures::plane());
        assert!(pg.shape.f.abs() < 1e-12);
        assert!(pg.shape.gauss.abs() < 1e-12);
    }

    #[test]
    fn cylinder_values() {
        let pg = at_center(&fixtures::cylinder());
        assert!((pg.shape.f - 1.0).abs() < 1e-10);
        assert!(pg.shape.gauss.abs() < 1e-10);
        assert!((pg.shape.lambda.0).abs() < 1e-10 && (pg.shape.lambda.1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sphere_values() {
        let pg = at_center(&fixtures::sphere());
        assert!((pg.shape.f - 2.0).abs() < 1e-10);
        assert!((pg.shape.gauss - 1.0).abs() < 1e-10);
        assert!(pg.grad_f_norm < 1e-8);
        assert!(biconservative_residual(&pg) < 1e-8);
        assert!(!pg.is_non_cmc(1e-6));
        // inward normal
        assert!(pg.shape.eta.dot(&pg.shape.jet.x) < 0.0);
    }

    #[test]
    fn curved_fixtures() {
        let pg = at_center(&fixtures::great_sphere());
        assert!(pg.shape.f.abs() < 1e-10);
        assert!((pg.shape.gauss - 1.0).abs() < 1e-10);
        assert!(normal_bitension_residual(&pg).abs() < 1e-10);

        let pg = at_center(&fixtures::biharmonic_sphere());
        assert!((pg.shape.f - 2.0).abs() < 1e-9);
        assert!((pg.shape.gauss - 2.0).abs() < 1e-9);
        let tau = normal_bitension_residual(&pg);
        assert!(tau.abs() < 1e-6, "{tau}");

        let pg = at_center(&fixtures::geodesic_plane_h3());
        assert!(pg.shape.f.abs() < 1e-10);
        assert!((pg.shape.gauss + 1.0).abs() < 1e-10);
    }

    #[test]
    fn fixture_reports_on_grid() {
        let opts = VerifyOptions {
            nu: 8,
            nv: 8,
            ..VerifyOptions::default()
        };
        let tol = Tolerances::default()
            .with_upper(names::BICONSERVATIVE, 1e-8)
            .with_upper(names::NORMAL, 1e-10);
        for (name, rep) in [
            (
                "plane",
                verify(&fixtures::plane(), "plane", &opts, &tol).unwrap(),
            ),
            (
                "sphere",
                verify(&fixtures::sphere(), "sphere", &opts, &tol).unwrap(),
            ),
            (
                "great",
                verify(&fixtures::great_sphere(), "great", &opts, &tol).unwrap(),
            ),
        ] {
            assert!(rep.pass, "{name}: {:?}", rep.failures);
            assert_eq!(rep.non_cmc_points, 0, "{name}");
            assert!(!rep.residuals.contains_key(names::EIGENVALUES));
        }
    }

    #[test]
    fn orientation_is_consistent_over_grid() {
        let opts = VerifyOptions {
            nu: 6,
            nv: 6,
            ..VerifyOptions::default()
        };
        let rep = verify(&fixtures::sphere(), "sphere", &opts, &Tolerances::default()).unwrap();
        assert!(rep.points.iter().all(|p| (p.f - 2.0).abs() < 1e-9));
    }

    #[test]
    fn second_differences_converge_at_second_order_without_richardson() {
        let s = fixtures::sphere();
        let err = |h: f64| {
            let opts = VerifyOptions {
                fd_step: Some(h),
                richardson: false,
                ..VerifyOptions::default()
            };
            let ev = Evaluator::new(&s, &opts);
            let jet = ev.jet(0.3, 0.5).unwrap();
            let eta = ev.normal(&jet, &(-jet.x)).unwrap();
            (ev.shape(0.3, 0.5, &eta).unwrap().f - 2.0).abs()
        };
        let ratio = err(2e-2) / err(1e-2);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn stencil_outside_domain_is_an_error() {
        let s = fixtures::plane();
        assert!(matches!(
            fundamental_forms(&s, 1.25, 0.0, 0.05),
            Err(VerifyError::StencilOutsideDomain { .. })
        ));
        let opts = VerifyOptions {
            nu: 1,
            nv: 8,
            ..VerifyOptions::default()
        };
        assert!(matches!(
            verify(&s, "plane", &opts, &Tolerances::default()),
            Err(VerifyError::GridTooSmall(1, 8))
        ));
    }
}
