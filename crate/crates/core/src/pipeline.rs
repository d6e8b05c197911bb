//! End-to-end pipelines from initial data to profiles, patches, meshes and
//! verification reports.
//!
//! Every numeric default lives in [`defaults`] and every tolerance in
//! [`TolProfile`], so tests and the CLI pin the same numbers.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{solve_curvature_with, CurvatureSolution};
use crate::error::{Error, SurfaceError};
use crate::io::{format_f64, CsvTable};
use crate::mesh::{sample_mesh, Mesh, Projection};
use crate::ode::IntegratorOptions;
use crate::profile::{reconstruct_profile, Branch, ProfileCurve, RevolutionProfile};
use crate::surface::{
    build_h3, build_r3_revolution, build_s3, ParametricSurface, Rect, SurfacePatch,
};
use crate::verify::{names, verify, Tolerances, VerificationReport, VerifyOptions};

/// Centralized numeric defaults.
pub mod defaults {
    use std::f64::consts::TAU;

    /// `k(0)`, `k'(0)` of the curved pipelines.
    pub const K0: f64 = 1.0;
    pub const KP0: f64 = 1.0;
    /// Arclength span of the curved profiles.
    pub const SPAN: (f64, f64) = (-1.0, 1.0);
    /// Extra arclength integrated beyond each end of the span, so that
    /// verification stencils stay inside the profile.
    pub const SPAN_PAD: f64 = 0.05;
    /// Prime constant and `ρ` range of the R³ pipeline.
    pub const R3_CONSTANT: f64 = 1.0;
    pub const R3_RHO: (f64, f64) = (1.5, 8.0);
    /// Rotation parameter range of the circle cases.
    pub const V_RANGE_CIRCLE: (f64, f64) = (0.0, TAU);
    /// Parameter range along the horocycles of the parabolic case.
    pub const V_RANGE_PARABOLIC: (f64, f64) = (-1.0, 1.0);
    pub const GRID: usize = 64;
    /// Relative tolerance of the standalone curvature solve.
    pub const SOLVE_REL_TOL: f64 = 1e-10;
    /// Integrator settings for profiles that feed a surface; the verifier
    /// differentiates the profile numerically, so it is solved tighter.
    pub const SURFACE_REL_TOL: f64 = 1e-12;
    pub const SURFACE_ABS_TOL: f64 = 1e-14;
    /// Step cap for surface profiles. The dense output is only C¹ across
    /// steps, and fourth differences of the mean curvature see those kinks.
    pub const SURFACE_MAX_STEP: f64 = 1e-3;
    /// Sample count of `u(ρ)` tables.
    pub const PROFILE_SAMPLES: usize = 257;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    R3,
    S3,
    H3,
}

impl Model {
    pub fn curvature(&self) -> i32 {
        match self {
            Model::R3 => 0,
            Model::S3 => 1,
            Model::H3 => -1,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::R3 => "r3",
            Model::S3 => "s3",
            Model::H3 => "h3",
        })
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "r3" => Ok(Model::R3),
            "s3" => Ok(Model::S3),
            "h3" => Ok(Model::H3),
            _ => Err(format!("unknown model '{s}', expected r3, s3 or h3")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    #[default]
    Auto,
    Elliptic,
    Parabolic,
}

impl FromStr for BranchChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(BranchChoice::Auto),
            "elliptic" => Ok(BranchChoice::Elliptic),
            "parabolic" => Ok(BranchChoice::Parabolic),
            _ => Err(format!(
                "unknown branch '{s}', expected auto, elliptic or parabolic"
            )),
        }
    }
}

/// Named residual tolerance sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TolProfile {
    /// `R3` for the R³ model, `Curved` otherwise.
    #[default]
    Auto,
    /// Closed-form R³ pipeline.
    R3,
    /// Frame-integrated S³ and H³ pipelines.
    Curved,
}

impl FromStr for TolProfile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(TolProfile::Auto),
            "r3" => Ok(TolProfile::R3),
            "curved" => Ok(TolProfile::Curved),
            _ => Err(format!(
                "unknown tolerance profile '{s}', expected auto, r3 or curved"
            )),
        }
    }
}

impl TolProfile {
    pub fn resolve(self, model: Model) -> TolProfile {
        match (self, model) {
            (TolProfile::Auto, Model::R3) => TolProfile::R3,
            (TolProfile::Auto, _) => TolProfile::Curved,
            (p, _) => p,
        }
    }

    pub fn tolerances(self, model: Model) -> Tolerances {
        let t = Tolerances::default().with_upper(names::NORMAL, 1e-10);
        match self.resolve(model) {
            TolProfile::R3 => t
                .with_upper(names::BICONSERVATIVE, 1e-8)
                .with_upper(names::GAUSS, 1e-8)
                .with_upper(names::NORM_A2, 1e-8)
                .with_upper(names::EIGENVALUES, 1e-8)
                .with_upper(names::X2F, 1e-8)
                .with_upper(names::MEAN_CURVATURE_REF, 1e-8)
                .with_upper(names::GAUSS_REF, 1e-8)
                .with_upper(names::PDE, 1e-6),
            _ => t
                .with_upper(names::BICONSERVATIVE, 1e-5)
                .with_upper(names::GAUSS, 1e-5)
                .with_upper(names::NORM_A2, 1e-5)
                .with_upper(names::EIGENVALUES, 1e-5)
                .with_upper(names::X2F, 1e-5)
                .with_upper(names::MEAN_CURVATURE_REF, 1e-5)
                .with_upper(names::LAPLACIAN_PROFILE, 1e-4)
                .with_upper(names::PDE, 1e-4)
                .with_upper(names::MODEL, 1e-8),
        }
    }
}

/// Optional settings, as read from a TOML file or collected from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub model: Option<Model>,
    pub branch: Option<BranchChoice>,
    pub k0: Option<f64>,
    pub dk0: Option<f64>,
    /// Prime constant of the R³ pipeline.
    #[serde(rename = "C")]
    pub constant: Option<f64>,
    /// Arclength span (curved) or `ρ` range (R³).
    pub span: Option<(f64, f64)>,
    pub v_range: Option<(f64, f64)>,
    pub nu: Option<usize>,
    pub nv: Option<usize>,
    pub fd_step: Option<f64>,
    pub tol_profile: Option<TolProfile>,
    pub projection: Option<String>,
    /// Parameter list of a sweep: `C` for R³, `k0` otherwise.
    pub sweep: Option<Vec<f64>>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Fields set in `top` replace those of `self`.
    pub fn overlay(self, top: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            model: top.model.or(self.model),
            branch: top.branch.or(self.branch),
            k0: top.k0.or(self.k0),
            dk0: top.dk0.or(self.dk0),
            constant: top.constant.or(self.constant),
            span: top.span.or(self.span),
            v_range: top.v_range.or(self.v_range),
            nu: top.nu.or(self.nu),
            nv: top.nv.or(self.nv),
            fd_step: top.fd_step.or(self.fd_step),
            tol_profile: top.tol_profile.or(self.tol_profile),
            projection: top.projection.or(self.projection),
            sweep: top.sweep.or(self.sweep),
        }
    }
}

/// A validated pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub model: Model,
    pub branch: BranchChoice,
    pub k0: f64,
    pub kp0: f64,
    pub constant: f64,
    pub span: (f64, f64),
    /// `None` picks the range of the resolved branch.
    pub v_range: Option<(f64, f64)>,
    pub nu: usize,
    pub nv: usize,
    pub fd_step: Option<f64>,
    pub tol_profile: TolProfile,
    pub projection: Projection,
    pub sweep: Vec<f64>,
}

impl PipelineConfig {
    /// Defaults for `model`.
    pub fn new(model: Model) -> Self {
        Self::from_layer(ConfigLayer {
            model: Some(model),
            ..ConfigLayer::default()
        })
        .expect("defaults are valid")
    }

    /// Fill unset fields from [`defaults`] and validate.
    pub fn from_layer(layer: ConfigLayer) -> Result<Self, Error> {
        let model = layer
            .model
            .ok_or_else(|| Error::Config("model is required".into()))?;
        let branch = layer.branch.unwrap_or_default();
        let projection = match &layer.projection {
            Some(p) => p.parse().map_err(Error::Config)?,
            None => Projection::default_for(model.curvature()),
        };
        let cfg = PipelineConfig {
            model,
            branch,
            k0: layer.k0.unwrap_or(defaults::K0),
            kp0: layer.dk0.unwrap_or(defaults::KP0),
            constant: layer.constant.unwrap_or(defaults::R3_CONSTANT),
            span: layer.span.unwrap_or(if model == Model::R3 {
                defaults::R3_RHO
            } else {
                defaults::SPAN
            }),
            v_range: layer.v_range,
            nu: layer.nu.unwrap_or(defaults::GRID),
            nv: layer.nv.unwrap_or(defaults::GRID),
            fd_step: layer.fd_step,
            tol_profile: layer.tol_profile.unwrap_or_default(),
            projection,
            sweep: layer.sweep.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Config(m));
        match (self.model, self.branch) {
            (Model::H3, _) | (_, BranchChoice::Auto) => {}
            (m, b) => {
                return bad(format!("branch {b:?} applies only to h3, not {m}").to_lowercase())
            }
        }
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return bad(format!("k0 must be positive, got {}", self.k0));
        }
        if !self.kp0.is_finite() {
            return bad(format!("dk0 must be finite, got {}", self.kp0));
        }
        if self.nu < 2 || self.nv < 2 {
            return bad(format!(
                "grid must be at least 2x2, got {}x{}",
                self.nu, self.nv
            ));
        }
        let (a, b) = self.span;
        if !(a < b && a.is_finite() && b.is_finite()) {
            return bad(format!("span [{a}, {b}] is empty"));
        }
        if self.model != Model::R3 && !(a <= 0.0 && b >= 0.0) {
            return bad(format!("span [{a}, {b}] must contain u = 0"));
        }
        if self.model == Model::R3 && !(self.constant > 0.0 && self.constant.is_finite()) {
            return bad(format!(
                "the R3 pipeline needs C > 0, got {}",
                self.constant
            ));
        }
        if let Some((c, d)) = self.v_range {
            if !(c < d && c.is_finite() && d.is_finite()) {
                return bad(format!("v-range [{c}, {d}] is empty"));
            }
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("fd-step must be positive, got {h}"));
            }
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol_profile.tolerances(self.model)
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            nu: self.nu,
            nv: self.nv,
            fd_step: self.fd_step,
            ..VerifyOptions::default()
        }
    }

    fn padded_span(&self) -> (f64, f64) {
        (
            self.span.0 - defaults::SPAN_PAD,
            self.span.1 + defaults::SPAN_PAD,
        )
    }
}

fn surface_options() -> IntegratorOptions {
    IntegratorOptions {
        rel_tol: defaults::SURFACE_REL_TOL,
        abs_tol: defaults::SURFACE_ABS_TOL,
        max_step: defaults::SURFACE_MAX_STEP,
        ..IntegratorOptions::default()
    }
}

/// Integrate the curvature ODE over the configured span.
pub fn solve(cfg: &PipelineConfig) -> Result<CurvatureSolution, Error> {
    let opts = IntegratorOptions {
        rel_tol: defaults::SOLVE_REL_TOL,
        ..IntegratorOptions::default()
    };
    let span = if cfg.model == Model::R3 {
        defaults::SPAN
    } else {
        cfg.span
    };
    solve_curvature_with(cfg.model.curvature(), cfg.k0, cfg.kp0, span, &opts)
        .map_err(|e| Error::stage("solve", e))
}

/// `(u, k, k', C_drift)` at the integrator nodes, with `C` and the stopping
/// reasons in the preamble.
pub fn solve_table(cfg: &PipelineConfig, sol: &CurvatureSolution) -> CsvTable {
    let (lo, hi) = sol.admissible_interval();
    let (back, fwd) = sol.terminations();
    let mut t = CsvTable::new(&["u", "k", "kp", "C_drift"])
        .meta("model", cfg.model)
        .meta("c", sol.curvature_sign())
        .meta("k0", format_f64(cfg.k0))
        .meta("dk0", format_f64(cfg.kp0))
        .meta("C", format_f64(sol.prime_constant()))
        .meta(
            "admissible_interval",
            format!("[{}, {}]", format_f64(lo), format_f64(hi)),
        )
        .meta(
            "span",
            format!(
                "[{}, {}]",
                format_f64(sol.span().0),
                format_f64(sol.span().1)
            ),
        )
        .meta("termination", format!("{back:?} / {fwd:?}"))
        .meta("max_drift", format_f64(sol.max_drift()))
        .meta("drift_bound", format_f64(sol.drift_bound()));
    if let Some(b) = resolve_branch(cfg, sol.prime_constant()).ok().flatten() {
        t = t.meta("branch", b);
    }
    for s in sol.samples() {
        let drift = sol.drift_at(s.u).unwrap_or(f64::NAN);
        t.push(vec![s.u, s.k, s.kp, drift]);
    }
    t
}

/// Branch for a curved model and prime constant, honouring an explicit choice.
/// `None` for R³.
pub fn resolve_branch(cfg: &PipelineConfig, constant: f64) -> Result<Option<Branch>, Error> {
    let c = cfg.model.curvature();
    if c == 0 {
        return Ok(None);
    }
    let implied = Branch::resolve(c, constant).ok_or_else(|| {
        Error::Config(format!(
            "no {} branch for prime constant C = {constant}",
            cfg.model
        ))
    })?;
    let wanted = match cfg.branch {
        BranchChoice::Auto => implied,
        BranchChoice::Elliptic => Branch::H2Elliptic,
        BranchChoice::Parabolic => Branch::H2Parabolic,
    };
    if wanted != implied {
        return Err(Error::Config(format!(
            "branch {} requested but the initial data give C = {constant}, which selects {}",
            wanted.name(),
            implied.name()
        )));
    }
    Ok(Some(wanted))
}

/// The profile of either kind of pipeline.
#[derive(Debug, Clone)]
pub enum Profile {
    Revolution(RevolutionProfile),
    Curve(ProfileCurve),
}

pub fn build_profile(cfg: &PipelineConfig) -> Result<Profile, Error> {
    if cfg.model == Model::R3 {
        let rho_max = cfg.span.1 + defaults::SPAN_PAD * (cfg.span.1 - cfg.span.0);
        let p = RevolutionProfile::new(cfg.constant, rho_max)
            .map_err(|e| Error::stage("profile", e))?;
        return Ok(Profile::Revolution(p));
    }
    let c = cfg.model.curvature();
    let sol = solve_curvature_with(c, cfg.k0, cfg.kp0, cfg.padded_span(), &surface_options())
        .map_err(|e| Error::stage("profile", e))?;
    let branch = resolve_branch(cfg, sol.prime_constant())?.expect("curved models have a branch");
    let curve = reconstruct_profile(&sol, branch).map_err(|e| Error::stage("profile", e))?;
    Ok(Profile::Curve(curve))
}

/// Tabulated profile: `(ρ, u, du/dρ)` for R³, frame samples otherwise.
pub fn profile_table(cfg: &PipelineConfig, profile: &Profile) -> CsvTable {
    match profile {
        Profile::Revolution(p) => u_rho_table(p, cfg.span, defaults::PROFILE_SAMPLES),
        Profile::Curve(c) => {
            let mut t = CsvTable::new(&[
                "u",
                "k",
                "kp",
                "x1",
                "x2",
                "x3",
                "x4",
                "t1",
                "t2",
                "t3",
                "t4",
                "c1_residual",
                "c2_residual",
            ])
            .meta("model", cfg.model)
            .meta("branch", c.branch())
            .meta("C", format_f64(c.prime_constant()));
            let (a, b) = cfg.span;
            for fs in c.samples().into_iter().filter(|fs| fs.u >= a && fs.u <= b) {
                let (r1, r2) = c.constraint_residuals(&fs);
                let mut row = vec![fs.u, fs.k, fs.kp];
                row.extend(fs.sigma.to_array());
                row.extend(fs.tangent.to_array());
                row.extend([r1, r2]);
                t.push(row);
            }
            t
        }
    }
}

/// `(ρ, u, du/dρ)` on `n` uniform samples of `range`.
pub fn u_rho_table(p: &RevolutionProfile, range: (f64, f64), n: usize) -> CsvTable {
    let mut t = CsvTable::new(&["rho", "u", "du_drho"])
        .meta("model", Model::R3)
        .meta("C", format_f64(p.constant()));
    for i in 0..n {
        let rho = range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64;
        let u = p.u(rho).unwrap_or(f64::NAN);
        let du = p.u_prime(rho).unwrap_or(f64::NAN);
        t.push(vec![rho, u, du]);
    }
    t
}

pub fn build_patch(cfg: &PipelineConfig, profile: &Profile) -> Result<SurfacePatch, Error> {
    let err = |e: SurfaceError| Error::stage("surface", e);
    match profile {
        Profile::Revolution(p) => {
            let rect = Rect::new(cfg.span, cfg.v_range.unwrap_or(defaults::V_RANGE_CIRCLE));
            build_r3_revolution(*p, rect).map_err(err)
        }
        Profile::Curve(c) => {
            let default_v = match c.branch() {
                Branch::H2Parabolic => defaults::V_RANGE_PARABOLIC,
                _ => defaults::V_RANGE_CIRCLE,
            };
            let rect = Rect::new(cfg.span, cfg.v_range.unwrap_or(default_v));
            if c.branch() == Branch::S2 {
                build_s3(c, rect)
            } else {
                build_h3(c, rect)
            }
            .map_err(err)
        }
    }
}

pub fn verify_patch(
    cfg: &PipelineConfig,
    patch: &SurfacePatch,
) -> Result<VerificationReport, Error> {
    verify(
        patch,
        patch.case().name(),
        &cfg.verify_options(),
        &cfg.tolerances(),
    )
    .map_err(|e| Error::stage("verify", e))
}

/// Profile, patch and verification report of one configuration.
#[derive(Debug, Clone)]
pub struct VerifiedSurface {
    pub profile: Profile,
    pub patch: SurfacePatch,
    pub report: VerificationReport,
}

pub fn run_verify(cfg: &PipelineConfig) -> Result<VerifiedSurface, Error> {
    let profile = build_profile(cfg)?;
    let patch = build_patch(cfg, &profile)?;
    let report = verify_patch(cfg, &patch)?;
    Ok(VerifiedSurface {
        profile,
        patch,
        report,
    })
}

/// [`run_verify`] plus a projected mesh carrying `f`, `K` and the residuals
/// as vertex channels.
pub fn run_surface(cfg: &PipelineConfig) -> Result<(VerifiedSurface, Mesh), Error> {
    let out = run_verify(cfg)?;
    let mut mesh = sample_mesh(&out.patch, cfg.nu, cfg.nv, cfg.projection)
        .map_err(|e| Error::stage("mesh", e))?;
    let pts = &out.report.points;
    mesh.set_channel("f", pts.iter().map(|p| p.f).collect());
    mesh.set_channel("K", pts.iter().map(|p| p.gauss).collect());
    let mut keys: Vec<&'static str> = pts.iter().flat_map(|p| p.values.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    for key in keys {
        mesh.set_channel(
            key,
            pts.iter()
                .map(|p| p.values.get(key).copied().unwrap_or(f64::NAN))
                .collect(),
        );
    }
    Ok((out, mesh))
}

/// One parameter of a sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: f64,
    pub config: PipelineConfig,
    pub outcome: Result<VerifiedSurface, String>,
}

/// Sweep residual columns of the summary table.
pub const SWEEP_COLUMNS: [&str; 4] = [
    names::BICONSERVATIVE,
    names::GAUSS,
    names::PDE,
    names::MEAN_CURVATURE_REF,
];

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    pub fn all_passed(&self) -> bool {
        self.entries
            .iter()
            .all(|e| matches!(&e.outcome, Ok(v) if v.report.pass))
    }

    /// One row per entry: parameter, residual maxima, `ok` (1 = ran) and `pass`.
    pub fn summary(&self, model: Model) -> CsvTable {
        let param = if model == Model::R3 { "C" } else { "k0" };
        let mut cols = vec![param];
        cols.extend(SWEEP_COLUMNS);
        cols.extend(["ok", "pass"]);
        let mut t = CsvTable::new(&cols).meta("model", model);
        for e in &self.entries {
            let mut row = vec![e.value];
            match &e.outcome {
                Ok(v) => {
                    row.extend(
                        SWEEP_COLUMNS
                            .iter()
                            .map(|n| v.report.max(n).unwrap_or(f64::NAN)),
                    );
                    row.extend([1.0, if v.report.pass { 1.0 } else { 0.0 }]);
                }
                Err(_) => {
                    row.extend(SWEEP_COLUMNS.iter().map(|_| f64::NAN));
                    row.extend([0.0, 0.0]);
                }
            }
            t.push(row);
        }
        t
    }
}

/// Run one pipeline per value of `cfg.sweep` (`C` for R³, `k0` otherwise).
/// Entries are independent and run in parallel; failures are recorded.
pub fn run_sweep(cfg: &PipelineConfig) -> Result<SweepResult, Error> {
    if cfg.sweep.is_empty() {
        return Err(Error::Config("sweep list is empty".into()));
    }
    let entries = cfg
        .sweep
        .par_iter()
        .map(|&value| {
            let mut c = cfg.clone();
            c.sweep.clear();
            if cfg.model == Model::R3 {
                c.constant = value;
            } else {
                c.k0 = value;
            }
            let outcome = c
                .validate()
                .and_then(|_| run_verify(&c))
                .map_err(|e| e.to_string());
            SweepEntry {
                value,
                config: c,
                outcome,
            }
        })
        .collect();
    Ok(SweepResult { entries })
}

impl Profile {
    pub fn revolution(&self) -> Option<&RevolutionProfile> {
        match self {
            Profile::Revolution(p) => Some(p),
            Profile::Curve(_) => None,
        }
    }

    pub fn curve(&self) -> Option<&ProfileCurve> {
        match self {
            Profile::Curve(c) => Some(c),
            Profile::Revolution(_) => None,
        }
    }
}

impl VerifiedSurface {
    pub fn model(&self) -> &'static str {
        self.patch.model().name()
    }
}
