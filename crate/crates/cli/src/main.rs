//! `bicons`: build and verify biconservative surfaces from the command line.
//!
//! Exit codes: 0 when every verification passed, 1 when one failed, 2 for
//! usage or configuration errors, 3 for numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biconservative::io::{format_f64, report_json, write_mesh, write_text, CsvTable};
use biconservative::pipeline::{
    profile_table, run_surface, run_sweep, run_verify, solve, solve_table, u_rho_table,
    BranchChoice, ConfigLayer, Model, PipelineConfig, TolProfile,
};
use biconservative::verify::VerificationReport;
use biconservative::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bicons",
    version,
    about = "Biconservative surfaces in R3, S3 and H3"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the curvature ODE and write (u, k, k', C_drift) as CSV.
    Solve(Common),
    /// Tabulate the profile curve as CSV.
    Profile(Common),
    /// Build the surface, write a mesh (.obj or .ply) and a JSON report.
    Surface(Common),
    /// Build and verify the surface; write the JSON report.
    Verify(Common),
    /// One verified pipeline per value of C (r3) or k0 (s3, h3).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated parameter list.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Option<Vec<f64>>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// TOML file with any of the options below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_from_str::<Model>)]
    model: Option<Model>,
    #[arg(long, value_parser = parse_from_str::<BranchChoice>)]
    branch: Option<BranchChoice>,
    #[arg(long, allow_hyphen_values = true)]
    k0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    dk0: Option<f64>,
    /// Prime constant of the R3 pipeline.
    #[arg(long = "C", allow_hyphen_values = true)]
    constant: Option<f64>,
    /// `a,b`: arclength span (s3, h3) or rho range (r3).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    span: Option<(f64, f64)>,
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long)]
    nv: Option<usize>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    v_range: Option<(f64, f64)>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long, value_parser = parse_from_str::<TolProfile>)]
    tol_profile: Option<TolProfile>,
    /// identity, stereographic[:±eN] or poincare.
    #[arg(long)]
    projection: Option<String>,
    /// Output file (solve, profile, surface) or directory (sweep).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected 'a,b', got '{s}'"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    Ok((p(a)?, p(b)?))
}

impl Common {
    fn config(&self, sweep: Option<Vec<f64>>) -> Result<PipelineConfig, Error> {
        let file = match &self.config {
            Some(path) => ConfigLayer::from_file(path)?,
            None => ConfigLayer::default(),
        };
        let flags = ConfigLayer {
            model: self.model,
            branch: self.branch,
            k0: self.k0,
            dk0: self.dk0,
            constant: self.constant,
            span: self.span,
            v_range: self.v_range,
            nu: self.nu,
            nv: self.nv,
            fd_step: self.fd_step,
            tol_profile: self.tol_profile,
            projection: self.projection.clone(),
            sweep,
        };
        PipelineConfig::from_layer(file.overlay(flags))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn summarize(report: &VerificationReport) {
    eprintln!(
        "{} on {}x{}: {}",
        report.case,
        report.grid.nu,
        report.grid.nv,
        if report.pass { "pass" } else { "FAIL" }
    );
    for (name, s) in &report.residuals {
        eprintln!("  {name:<26} max {:.3e}", s.max);
    }
    for (name, s) in &report.lower_bounds {
        eprintln!("  {name:<26} min|.| {:.3e}", s.min);
    }
    for f in &report.failures {
        eprintln!("  failed: {f}");
    }
}

fn verdict(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve(c) => {
            let cfg = c.config(None)?;
            let sol = solve(&cfg)?;
            emit(c.out.as_deref(), &solve_table(&cfg, &sol).to_csv_string())?;
            eprintln!(
                "C = {}, max drift {:.3e} (bound {:.3e})",
                format_f64(sol.prime_constant()),
                sol.max_drift(),
                sol.drift_bound()
            );
            Ok(verdict(sol.max_drift() <= sol.drift_bound()))
        }
        Command::Profile(c) => {
            let cfg = c.config(None)?;
            let profile = biconservative::pipeline::build_profile(&cfg)?;
            emit(
                c.out.as_deref(),
                &profile_table(&cfg, &profile).to_csv_string(),
            )?;
            Ok(0)
        }
        Command::Verify(c) => {
            let cfg = c.config(None)?;
            let out = run_verify(&cfg)?;
            summarize(&out.report);
            emit(
                c.report.as_deref().or(c.out.as_deref()),
                &report_json(&out.report),
            )?;
            Ok(verdict(out.report.pass))
        }
        Command::Surface(c) => {
            let mesh_path = c
                .out
                .clone()
                .ok_or_else(|| Error::Config("surface needs --out <mesh.obj|mesh.ply>".into()))?;
            biconservative::io::MeshFormat::from_path(&mesh_path)?;
            let cfg = c.config(None)?;
            let (out, mesh) = run_surface(&cfg)?;
            summarize(&out.report);
            let written = write_mesh(&mesh_path, &mesh)?;
            let report_path = c
                .report
                .clone()
                .unwrap_or_else(|| mesh_path.with_extension("json"));
            write_text(&report_path, &report_json(&out.report))?;
            for p in written.iter().chain([&report_path]) {
                eprintln!("wrote {}", p.display());
            }
            Ok(verdict(out.report.pass))
        }
        Command::Sweep { common: c, values } => {
            let dir = c
                .out
                .clone()
                .ok_or_else(|| Error::Config("sweep needs --out <directory>".into()))?;
            let cfg = c.config(values)?;
            let result = run_sweep(&cfg)?;
            for (i, e) in result.entries.iter().enumerate() {
                match &e.outcome {
                    Ok(v) => {
                        write_text(
                            &dir.join(format!("run_{i:03}.json")),
                            &report_json(&v.report),
                        )?;
                        if let Some(p) = v.profile.revolution() {
                            let table = u_rho_table(
                                p,
                                e.config.span,
                                biconservative::pipeline::defaults::PROFILE_SAMPLES,
                            );
                            write_text(
                                &dir.join(format!("u_rho_{i:03}.csv")),
                                &table.to_csv_string(),
                            )?;
                        }
                        eprintln!(
                            "{} = {}: {}",
                            param_name(cfg.model),
                            e.value,
                            if v.report.pass { "pass" } else { "FAIL" }
                        );
                    }
                    Err(msg) => eprintln!("{} = {}: error: {msg}", param_name(cfg.model), e.value),
                }
            }
            let summary: CsvTable = result.summary(cfg.model);
            write_text(&dir.join("summary.csv"), &summary.to_csv_string())?;
            Ok(verdict(result.all_passed()))
        }
    }
}

fn param_name(model: Model) -> &'static str {
    if model == Model::R3 {
        "C"
    } else {
        "k0"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
