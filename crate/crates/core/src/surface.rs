//! Evaluable surface patches `X(u, v)` with analytic first partials.
//!
//! The four rotational cases are assembled from profile data:
//!
//! | case          | parametrization                                            |
//! |---------------|------------------------------------------------------------|
//! | R³ revolution | `(ρ cos v, ρ sin v, u(ρ))`                                 |
//! | S³            | `σ + (1/κ₂)(C₁(cos v - 1) + C₂ sin v)`                     |
//! | H³ elliptic   | `σ + (1/κ₂)(C₁(cos v - 1) + C₂ sin v)`                     |
//! | H³ parabolic  | `σ + (1/(√2 κ₂))(C₁(eᵛ - 1) + C₂(e⁻ᵛ - 1))`                |
//!
//! Every patch implements [`ParametricSurface`], which is all the verifier
//! sees. The [`fixtures`] module provides classical surfaces with known
//! curvatures for testing the verifier itself.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::ambient::{orthonormal_complement, AmbientVector, Signature, SpaceForm};
use crate::curvature;
use crate::error::SurfaceError;
use crate::profile::{Branch, ProfileCurve, RevolutionProfile};

/// Parameter rectangle `[u0, u1] × [v0, v1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Rect {
    pub fn new(u: (f64, f64), v: (f64, f64)) -> Self {
        Rect {
            u0: u.0,
            u1: u.1,
            v0: v.0,
            v1: v.1,
        }
    }

    pub fn diagonal(&self) -> f64 {
        (self.u1 - self.u0).hypot(self.v1 - self.v0)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.u0 + self.u1), 0.5 * (self.v0 + self.v1))
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u0 && u <= self.u1 && v >= self.v0 && v <= self.v1
    }

    /// `nu × nv` grid including both edges, row-major in `u`.
    pub fn grid(&self, nu: usize, nv: usize) -> Vec<(f64, f64)> {
        let lin = |a: f64, b: f64, i: usize, n: usize| {
            if n == 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        (0..nu)
            .flat_map(|i| {
                (0..nv).map(move |j| (lin(self.u0, self.u1, i, nu), lin(self.v0, self.v1, j, nv)))
            })
            .collect()
    }
}

/// Position and first partials at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub x: AmbientVector,
    pub xu: AmbientVector,
    pub xv: AmbientVector,
}

pub trait ParametricSurface: Sync {
    fn model(&self) -> SpaceForm;

    /// The declared parameter rectangle.
    fn rect(&self) -> Rect;

    /// Where [`Self::jet`] may be evaluated; contains [`Self::rect`].
    fn domain(&self) -> Rect {
        self.rect()
    }

    fn jet(&self, u: f64, v: f64) -> Option<Jet>;

    /// Closed-form mean curvature function, if the builder knows one.
    fn reference_mean_curvature(&self, _u: f64, _v: f64) -> Option<f64> {
        None
    }

    fn reference_gauss_curvature(&self, _u: f64, _v: f64) -> Option<f64> {
        None
    }

    /// `(k, k')` of a unit-speed profile parametrized by `u`, if any.
    fn profile_curvature(&self, _u: f64) -> Option<(f64, f64)> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceCase {
    R3Revolution,
    S3,
    H3Elliptic,
    H3Parabolic,
}

impl SurfaceCase {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceCase::R3Revolution => "r3_revolution",
            SurfaceCase::S3 => "s3",
            SurfaceCase::H3Elliptic => "h3_elliptic",
            SurfaceCase::H3Parabolic => "h3_parabolic",
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Revolution(RevolutionProfile),
    Profile(ProfileCurve),
}

/// One of the four rotational biconservative patches.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    case: SurfaceCase,
    model: SpaceForm,
    rect: Rect,
    domain: Rect,
    constant: f64,
    c1: AmbientVector,
    c2: AmbientVector,
    source: Source,
}

fn check_rect(rect: Rect, domain: Rect) -> Result<(), SurfaceError> {
    let ok = rect.u0 < rect.u1
        && rect.v0 < rect.v1
        && rect.u0 >= domain.u0
        && rect.u1 <= domain.u1
        && rect.v0 >= domain.v0
        && rect.v1 <= domain.v1;
    if ok {
        Ok(())
    } else {
        Err(SurfaceError::OutsideDomain(
            rect.u0, rect.u1, domain.u0, domain.u1,
        ))
    }
}

/// Surface of revolution `X(ρ, v) = (ρ cos v, ρ sin v, u(ρ))`; `rect.u` ranges over `ρ`.
pub fn build_r3_revolution(
    prof: RevolutionProfile,
    rect: Rect,
) -> Result<SurfacePatch, SurfaceError> {
    let (lo, hi) = prof.domain();
    // the lower end has a vertical tangent, so it is excluded
    if !(rect.u0 > lo) {
        return Err(SurfaceError::OutsideDomain(rect.u0, rect.u1, lo, hi));
    }
    let domain = Rect {
        u0: lo,
        u1: hi,
        v0: f64::NEG_INFINITY,
        v1: f64::INFINITY,
    };
    check_rect(rect, domain)?;
    let s = Signature::EUCLIDEAN_3;
    Ok(SurfacePatch {
        case: SurfaceCase::R3Revolution,
        model: SpaceForm::EUCLIDEAN,
        rect,
        domain,
        constant: prof.constant(),
        c1: s.basis(0),
        c2: s.basis(1),
        source: Source::Revolution(prof),
    })
}

fn build_curved(
    prof: &ProfileCurve,
    rect: Rect,
    builder: &'static str,
    allowed: &[Branch],
) -> Result<SurfacePatch, SurfaceError> {
    if !allowed.contains(&prof.branch()) {
        return Err(SurfaceError::BranchMismatch {
            builder,
            branch: prof.branch().name(),
        });
    }
    let (a, b) = prof.span();
    let domain = Rect {
        u0: a,
        u1: b,
        v0: f64::NEG_INFINITY,
        v1: f64::INFINITY,
    };
    check_rect(rect, domain)?;
    let case = match prof.branch() {
        Branch::S2 => SurfaceCase::S3,
        Branch::H2Elliptic => SurfaceCase::H3Elliptic,
        Branch::H2Parabolic => SurfaceCase::H3Parabolic,
    };
    let (c1, c2) = prof.constant_vectors();
    Ok(SurfacePatch {
        case,
        model: prof.model(),
        rect,
        domain,
        constant: prof.prime_constant(),
        c1,
        c2,
        source: Source::Profile(prof.clone()),
    })
}

/// The S³ patch swept by circles of radius `1/κ₂` around `C₁`, `C₂`.
pub fn build_s3(prof: &ProfileCurve, rect: Rect) -> Result<SurfacePatch, SurfaceError> {
    build_curved(prof, rect, "s3", &[Branch::S2])
}

/// The H³ patch of either branch.
pub fn build_h3(prof: &ProfileCurve, rect: Rect) -> Result<SurfacePatch, SurfaceError> {
    build_curved(prof, rect, "h3", &[Branch::H2Elliptic, Branch::H2Parabolic])
}

impl SurfacePatch {
    pub fn case(&self) -> SurfaceCase {
        self.case
    }

    pub fn prime_constant(&self) -> f64 {
        self.constant
    }

    pub fn constant_vectors(&self) -> (AmbientVector, AmbientVector) {
        (self.c1, self.c2)
    }

    pub fn profile(&self) -> Option<&ProfileCurve> {
        match &self.source {
            Source::Profile(p) => Some(p),
            Source::Revolution(_) => None,
        }
    }

    pub fn revolution_profile(&self) -> Option<&RevolutionProfile> {
        match &self.source {
            Source::Revolution(p) => Some(p),
            Source::Profile(_) => None,
        }
    }

    /// Centre and radius of the `v`-circle through `u` (circle cases only).
    pub fn circle(&self, u: f64) -> Option<(AmbientVector, f64)> {
        match (&self.source, self.case) {
            (Source::Profile(p), SurfaceCase::S3 | SurfaceCase::H3Elliptic) => {
                let fs = p.frame(u)?;
                let m = 1.0 / curvature::kappa2(fs.k, self.constant).ok()?;
                Some((fs.sigma - self.c1.scale(m), m))
            }
            (Source::Revolution(p), _) => {
                let h = p.u(u).ok()?;
                Some((Signature::EUCLIDEAN_3.from_array([0.0, 0.0, h, 0.0]), u))
            }
            _ => None,
        }
    }
}

impl ParametricSurface for SurfacePatch {
    fn model(&self) -> SpaceForm {
        self.model
    }

    fn rect(&self) -> Rect {
        self.rect
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn jet(&self, u: f64, v: f64) -> Option<Jet> {
        match &self.source {
            Source::Revolution(p) => {
                if !(u > self.domain.u0 && u <= self.domain.u1) {
                    return None;
                }
                let s = Signature::EUCLIDEAN_3;
                let (sv, cv) = v.sin_cos();
                let h = p.u(u).ok()?;
                let hp = p.u_prime(u).ok()?;
                Some(Jet {
                    x: s.from_array([u * cv, u * sv, h, 0.0]),
                    xu: s.from_array([cv, sv, hp, 0.0]),
                    xv: s.from_array([-u * sv, u * cv, 0.0, 0.0]),
                })
            }
            Source::Profile(p) => {
                let fs = p.frame(u)?;
                if !(fs.k > 0.0) {
                    return None;
                }
                let m = 1.0 / (0.75 * self.constant.abs().sqrt() * fs.k.powf(0.75));
                let dlog = -0.75 * fs.kp / fs.k;
                let (c1, c2) = (self.c1, self.c2);
                if self.case == SurfaceCase::H3Parabolic {
                    let s = m / SQRT_2;
                    let (ep, em) = (v.exp(), (-v).exp());
                    let w = c1.scale(ep - 1.0) + c2.scale(em - 1.0);
                    Some(Jet {
                        x: fs.sigma + w.scale(s),
                        xu: fs.tangent + w.scale(s * dlog),
                        xv: (c1.scale(ep) - c2.scale(em)).scale(s),
                    })
                } else {
                    let (sv, cv) = v.sin_cos();
                    let w = c1.scale(cv - 1.0) + c2.scale(sv);
                    Some(Jet {
                        x: fs.sigma + w.scale(m),
                        xu: fs.tangent + w.scale(m * dlog),
                        xv: (c2.scale(cv) - c1.scale(sv)).scale(m),
                    })
                }
            }
        }
    }

    fn reference_mean_curvature(&self, u: f64, _v: f64) -> Option<f64> {
        match &self.source {
            Source::Revolution(p) => Some(p.mean_curvature(u)),
            Source::Profile(p) => p.frame(u).map(|fs| 2.0 * fs.k),
        }
    }

    fn reference_gauss_curvature(&self, u: f64, _v: f64) -> Option<f64> {
        match &self.source {
            Source::Revolution(p) => Some(p.gauss_curvature(u)),
            Source::Profile(_) => None,
        }
    }

    fn profile_curvature(&self, u: f64) -> Option<(f64, f64)> {
        match &self.source {
            Source::Revolution(_) => None,
            Source::Profile(p) => p.frame(u).map(|fs| (fs.k, fs.kp)),
        }
    }
}

/// The rotation field `T(r) = ⟨r, C₁⟩C₂ - ⟨r, C₂⟩C₁` of a patch.
pub fn killing_field(patch: &SurfacePatch, r: &AmbientVector) -> AmbientVector {
    let (c1, c2) = patch.constant_vectors();
    c2.scale(r.dot(&c1)) - c1.scale(r.dot(&c2))
}

/// Largest normal component of the rotation field over an `nu × nv` grid.
///
/// Zero means the patch is invariant under the one-parameter group the field
/// generates.
pub fn killing_tangency_check(
    patch: &SurfacePatch,
    nu: usize,
    nv: usize,
) -> Result<f64, SurfaceError> {
    let model = patch.model();
    let mut worst = 0.0f64;
    for (u, v) in patch.rect().grid(nu, nv) {
        let jet = patch.jet(u, v).ok_or(SurfaceError::OutsideDomain(
            u,
            u,
            patch.domain.u0,
            patch.domain.u1,
        ))?;
        let t = killing_field(patch, &jet.x);
        let eta = if model.curvature() == 0 {
            orthonormal_complement(&[jet.xu, jet.xv], &jet.xu)?
        } else {
            orthonormal_complement(&[jet.xu, jet.xv, jet.x], &jet.xu)?
        };
        worst = worst.max(t.dot(&eta).abs()).max(if model.curvature() == 0 {
            0.0
        } else {
            t.dot(&jet.x).abs()
        });
    }
    Ok(worst)
}

/// Classical surfaces with known curvatures.
pub mod fixtures {
    use super::*;

    /// A fixture given by closed-form position and partials.
    pub struct Fixture {
        model: SpaceForm,
        rect: Rect,
        map: fn(f64, f64) -> [[f64; 4]; 3],
    }

    impl ParametricSurface for Fixture {
        fn model(&self) -> SpaceForm {
            self.model
        }

        fn rect(&self) -> Rect {
            self.rect
        }

        fn domain(&self) -> Rect {
            let pad = 0.1 * self.rect.diagonal();
            Rect {
                u0: self.rect.u0 - pad,
                u1: self.rect.u1 + pad,
                v0: self.rect.v0 - pad,
                v1: self.rect.v1 + pad,
            }
        }

        fn jet(&self, u: f64, v: f64) -> Option<Jet> {
            let [x, xu, xv] = (self.map)(u, v);
            let s = self.model.ambient();
            Some(Jet {
                x: s.from_array(x),
                xu: s.from_array(xu),
                xv: s.from_array(xv),
            })
        }
    }

    /// The plane `z = 0` in R³.
    pub fn plane() -> Fixture {
        Fixture {
            model: SpaceForm::EUCLIDEAN,
            rect: Rect::new((-1.0, 1.0), (-1.0, 1.0)),
            map: |u, v| [[u, v, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]],
        }
    }

    /// The unit cylinder around the z-axis.
    pub fn cylinder() -> Fixture {
        Fixture {
            model: SpaceForm::EUCLIDEAN,
            rect: Rect::new((-1.0, 1.0), (0.0, 2.0)),
            map: |u, v| {
                let (s, c) = v.sin_cos();
                [[c, s, u, 0.0], [0.0, 0.0, 1.0, 0.0], [-s, c, 0.0, 0.0]]
            },
        }
    }

    /// The unit sphere in R³, by latitude `u` and longitude `v`.
    pub fn sphere() -> Fixture {
        Fixture {
            model: SpaceForm::EUCLIDEAN,
            rect: Rect::new((-1.0, 1.0), (0.0, 2.0)),
            map: |u, v| {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                [
                    [cu * cv, cu * sv, su, 0.0],
                    [-su * cv, -su * sv, cu, 0.0],
                    [-cu * sv, cu * cv, 0.0, 0.0],
                ]
            },
        }
    }

    fn s3_sphere(r: f64, u: f64, v: f64) -> [[f64; 4]; 3] {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let h = (1.0 - r * r).sqrt();
        [
            [r * cu * cv, r * cu * sv, r * su, h],
            [-r * su * cv, -r * su * sv, r * cu, 0.0],
            [-r * cu * sv, r * cu * cv, 0.0, 0.0],
        ]
    }

    /// A totally geodesic 2-sphere in S³ (minimal).
    pub fn great_sphere() -> Fixture {
        Fixture {
            model: SpaceForm::SPHERE,
            rect: Rect::new((-1.0, 1.0), (0.0, 2.0)),
            map: |u, v| s3_sphere(1.0, u, v),
        }
    }

    /// The 2-sphere of radius `1/√2` in S³: CMC, not minimal, and biharmonic.
    pub fn biharmonic_sphere() -> Fixture {
        Fixture {
            model: SpaceForm::SPHERE,
            rect: Rect::new((-1.0, 1.0), (0.0, 2.0)),
            map: |u, v| s3_sphere(std::f64::consts::FRAC_1_SQRT_2, u, v),
        }
    }

    /// The totally geodesic H² = H³ ∩ {x₃ = 0}, in polar coordinates away
    /// from the centre.
    pub fn geodesic_plane_h3() -> Fixture {
        Fixture {
            model: SpaceForm::HYPERBOLIC,
            rect: Rect::new((0.25, 1.25), (0.0, 2.0)),
            map: |u, v| {
                let (su, cu) = (u.sinh(), u.cosh());
                let (sv, cv) = v.sin_cos();
                [
                    [su * cv, su * sv, 0.0, cu],
                    [cu * cv, cu * sv, 0.0, su],
                    [-su * sv, su * cv, 0.0, 0.0],
                ]
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::solve_curvature_with;
    use crate::ode::IntegratorOptions;
    use crate::profile::reconstruct_profile;

    fn opts() -> IntegratorOptions {
        IntegratorOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..IntegratorOptions::default()
        }
    }

    fn patch(c: i32, k0: f64, kp0: f64, branch: Branch, v: (f64, f64)) -> SurfacePatch {
        let sol = solve_curvature_with(c, k0, kp0, (-1.05, 1.05), &opts()).unwrap();
        let prof = reconstruct_profile(&sol, branch).unwrap();
        let rect = Rect::new((-1.0, 1.0), v);
        if c == 1 {
            build_s3(&prof, rect).unwrap()
        } else {
            build_h3(&prof, rect).unwrap()
        }
    }

    fn all_curved() -> Vec<SurfacePatch> {
        vec![
            patch(1, 1.0, 1.0, Branch::S2, (0.0, std::f64::consts::TAU)),
            patch(
                -1,
                1.0,
                1.0,
                Branch::H2Elliptic,
                (0.0, std::f64::consts::TAU),
            ),
            patch(-1, 0.25, 0.2, Branch::H2Parabolic, (-1.0, 1.0)),
        ]
    }

    #[test]
    fn r3_reference_values() {
        let prof = RevolutionProfile::new(1.0, 8.5).unwrap();
        let p =
            build_r3_revolution(prof, Rect::new((1.5, 8.0), (0.0, std::f64::consts::TAU))).unwrap();
        let f = p.reference_mean_curvature(8.0, 0.0).unwrap();
        let k = p.reference_gauss_curvature(8.0, 0.0).unwrap();
        assert!((f - 1.0 / 24.0).abs() < 1e-16);
        assert!((k + 1.0 / 768.0).abs() < 1e-16);
        assert!((k + 0.75 * f * f).abs() < 1e-16);
        let a = p.jet(3.0, 0.0).unwrap().x;
        let b = p.jet(3.0, std::f64::consts::TAU).unwrap().x;
        assert!((a - b).euclidean_norm() < 1e-14);
    }

    #[test]
    fn r3_domain_edge_rejected() {
        let prof = RevolutionProfile::new(1.0, 8.0).unwrap();
        assert!(build_r3_revolution(prof, Rect::new((1.0, 8.0), (0.0, 1.0))).is_err());
        assert!(build_r3_revolution(prof, Rect::new((1.5, 9.0), (0.0, 1.0))).is_err());
    }

    #[test]
    fn v_zero_recovers_profile() {
        for p in all_curved() {
            let prof = p.profile().unwrap();
            for u in [-0.9, 0.0, 0.4] {
                assert_eq!(p.jet(u, 0.0).unwrap().x, prof.frame(u).unwrap().sigma);
            }
        }
    }

    #[test]
    fn patches_lie_on_model() {
        for p in all_curved() {
            let model = p.model();
            for (u, v) in p.rect().grid(10, 10) {
                let x = p.jet(u, v).unwrap().x;
                assert!(
                    model.on_model(&x, 1e-8).unwrap(),
                    "{:?} at ({u},{v})",
                    p.case()
                );
            }
        }
    }

    #[test]
    fn circle_radius_is_inverse_kappa2() {
        for p in all_curved().into_iter().take(2) {
            for u in [-0.7, 0.1, 0.8] {
                let (centre, r) = p.circle(u).unwrap();
                let k = p.profile().unwrap().frame(u).unwrap().k;
                assert!(
                    (r - 1.0 / curvature::kappa2(k, p.prime_constant()).unwrap()).abs() < 1e-14
                );
                for v in [0.3, 2.0, 4.5] {
                    let d = p.jet(u, v).unwrap().x - centre;
                    assert!((d.norm() - r).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn analytic_partials_match_central_differences() {
        for p in all_curved() {
            let (u, v) = (0.3, 0.4);
            let j = p.jet(u, v).unwrap();
            let err = |h: f64| {
                let du =
                    (p.jet(u + h, v).unwrap().x - p.jet(u - h, v).unwrap().x).scale(0.5 / h) - j.xu;
                let dv =
                    (p.jet(u, v + h).unwrap().x - p.jet(u, v - h).unwrap().x).scale(0.5 / h) - j.xv;
                du.euclidean_norm().max(dv.euclidean_norm())
            };
            let ratio = err(1e-2) / err(5e-3);
            assert!((ratio - 4.0).abs() < 0.3, "{:?}: ratio {ratio}", p.case());
        }
    }

    #[test]
    fn killing_field_is_tangent() {
        for p in all_curved() {
            let r = killing_tangency_check(&p, 16, 16).unwrap();
            assert!(r < 1e-6, "{:?}: {r}", p.case());
        }
        let prof = RevolutionProfile::new(1.0, 8.0).unwrap();
        let p = build_r3_revolution(prof, Rect::new((1.5, 8.0), (0.0, 6.0))).unwrap();
        assert!(killing_tangency_check(&p, 8, 8).unwrap() < 1e-12);
    }

    #[test]
    fn killing_field_at_profile_is_second_partial_direction() {
        let p = &all_curved()[0];
        let j = p.jet(0.2, 0.0).unwrap();
        let t = killing_field(p, &j.x);
        // T(σ) and ∂X/∂v are parallel at v = 0
        let cross = t.dot(&j.xv).powi(2) - t.dot(&t) * j.xv.dot(&j.xv);
        assert!(cross.abs() < 1e-12);
        let zero = Signature::EUCLIDEAN_4.from_array([1.0, 0.0, 0.0, 0.0]);
        assert_eq!(killing_field(p, &zero).euclidean_norm(), 0.0);
    }

    #[test]
    fn branch_mismatch_is_rejected() {
        let p = &all_curved()[1];
        let prof = p.profile().unwrap();
        let rect = Rect::new((-1.0, 1.0), (0.0, 1.0));
        assert!(matches!(
            build_s3(prof, rect),
            Err(SurfaceError::BranchMismatch { .. })
        ));
        let s = &all_curved()[0];
        assert!(matches!(
            build_h3(s.profile().unwrap(), rect),
            Err(SurfaceError::BranchMismatch { .. })
        ));
    }
}
