//! The four workflows behind the CLI subcommands.

use std::path::PathBuf;

use log::info;
use serde::Serialize;

use collapsar_core::{
    blowup_time, integrate_emden, integrate_profile_opts, verify_solution_opts, EmdenKind,
    EmdenProfile, Error as CoreError, IntegratorStats, PhysicalParams, ProfileOptions,
    ProfileSolution, ResidualReport, ScalingFunction, SolutionCase, SupportKind,
};

use crate::artifacts::{write_csv, write_json, write_text};
use crate::config::{Format, RunConfig, ThresholdConfig};
use crate::svg::{HeatMap, LinePlot};
use crate::CliError;

/// Resolved output destination and formats.
pub struct OutputContext {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl OutputContext {
    pub fn resolve(
        cfg: &RunConfig,
        out_override: Option<PathBuf>,
        format_override: Option<Vec<Format>>,
    ) -> Result<OutputContext, CliError> {
        let dir = out_override
            .or_else(|| cfg.output.directory.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputContext {
            dir,
            formats: format_override.unwrap_or_else(|| cfg.output.formats.clone()),
        })
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn core_error(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidArgument(_) | CoreError::InvalidParams(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Numerical(other.to_string()),
    }
}

fn profile_options(cfg: &RunConfig) -> ProfileOptions {
    ProfileOptions {
        z_max: cfg.grid.z_max,
        rel_tol: cfg.grid.rel_tol,
        abs_tol: cfg.grid.abs_tol,
        z0: cfg.grid.z0,
        eps_cut: cfg.grid.eps_cut,
    }
}

fn require_theorem_case(case: SolutionCase) -> Result<(), CliError> {
    match case {
        SolutionCase::Case1a | SolutionCase::Case1b | SolutionCase::Case2 => Ok(()),
        _ => Err(CliError::Config(format!(
            "case {} is handled by the `legacy` subcommand",
            case.label()
        ))),
    }
}

#[derive(Serialize)]
struct Generator {
    name: &'static str,
    version: &'static str,
}

fn generator() -> Generator {
    Generator {
        name: "collapsar",
        version: env!("CARGO_PKG_VERSION"),
    }
}

#[derive(Serialize)]
struct ProfileMeta<'a> {
    generator: Generator,
    case: SolutionCase,
    params: &'a PhysicalParams,
    z_mu: Option<f64>,
    support_kind: SupportKind,
    integrator_stats: IntegratorStats,
    n_nodes: usize,
    total_profile_mass: f64,
    z_max: f64,
    z0: f64,
    eps_cut: f64,
}

/// Integrates the profile and writes profile.csv / profile.json /
/// profile.svg.
pub fn cmd_solve(cfg: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    require_theorem_case(cfg.case)?;
    let params = cfg.physical_params()?;
    let opts = profile_options(cfg);
    let profile = integrate_profile_opts(&params, cfg.case, &opts).map_err(core_error)?;
    info!(
        "profile integrated: {} nodes, support {:?}, Z_mu {:?}",
        profile.z_nodes.len(),
        profile.support_kind,
        profile.z_mu
    );
    write_profile_artifacts(&profile, &params, cfg, out)
}

fn write_profile_artifacts(
    profile: &ProfileSolution,
    params: &PhysicalParams,
    cfg: &RunConfig,
    out: &OutputContext,
) -> Result<(), CliError> {
    if out.wants(Format::Csv) {
        let rows: Vec<Vec<f64>> = (0..profile.z_nodes.len())
            .map(|i| {
                vec![
                    profile.z_nodes[i],
                    profile.f_values[i],
                    profile.fprime_values[i],
                    profile.m_values[i],
                ]
            })
            .collect();
        write_csv(&out.path("profile.csv"), "z,f,fprime,M", &rows)?;
    }
    if out.wants(Format::Json) {
        write_json(
            &out.path("profile.json"),
            &ProfileMeta {
                generator: generator(),
                case: profile.case,
                params,
                z_mu: profile.z_mu,
                support_kind: profile.support_kind,
                integrator_stats: profile.stats,
                n_nodes: profile.z_nodes.len(),
                total_profile_mass: profile.total_profile_mass(),
                z_max: cfg.grid.z_max,
                z0: cfg.grid.z0,
                eps_cut: cfg.grid.eps_cut,
            },
        )?;
    }
    if out.wants(Format::Svg) {
        let plot = LinePlot {
            title: format!("profile f(z), {}", profile.case.label()),
            x_label: "z".into(),
            y_label: "f".into(),
            points: profile
                .z_nodes
                .iter()
                .zip(&profile.f_values)
                .map(|(&z, &f)| (z, f))
                .collect(),
            markers: profile
                .z_mu
                .map(|z| vec![(z, format!("Z_mu = {z:.6}"))])
                .unwrap_or_default(),
        };
        write_text(&out.path("profile.svg"), &plot.render())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PassReport {
    mass: bool,
    momentum: bool,
    overall: bool,
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    generator: Generator,
    case: SolutionCase,
    params: &'a PhysicalParams,
    thresholds: &'a ThresholdConfig,
    pass: PassReport,
    #[serde(flatten)]
    report: &'a ResidualReport,
}

/// Runs the end-to-end verification and writes residuals.csv /
/// summary.json / residual_heatmap.svg. Exit code 4 when a threshold is
/// exceeded, after the artifacts are written.
pub fn cmd_verify(cfg: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    require_theorem_case(cfg.case)?;
    let params = cfg.physical_params()?;
    let opts = profile_options(cfg);

    let scaling = ScalingFunction::closed_form(&params, cfg.case).map_err(core_error)?;
    let t_hi = cfg.grid.t_max.unwrap_or_else(|| {
        blowup_time(&scaling).map(|t| 0.9 * t).unwrap_or(1.0)
    });
    let n_t = cfg.grid.t_samples.max(1);
    let t_grid: Vec<f64> = if n_t == 1 {
        vec![0.0]
    } else {
        (0..n_t).map(|i| t_hi * i as f64 / (n_t - 1) as f64).collect()
    };

    let report = verify_solution_opts(&params, cfg.case, &t_grid, cfg.grid.r_samples, &opts)
        .map_err(core_error)?;
    info!(
        "residual norms: mass max {:.3e}, momentum max {:.3e}",
        report.mass_residual_max, report.momentum_residual_max
    );

    let pass = PassReport {
        mass: report.mass_residual_max <= cfg.thresholds.mass_scaled_max,
        momentum: report.momentum_residual_max <= cfg.thresholds.momentum_scaled_max,
        overall: report.mass_residual_max <= cfg.thresholds.mass_scaled_max
            && report.momentum_residual_max <= cfg.thresholds.momentum_scaled_max,
    };
    let overall = pass.overall;

    if out.wants(Format::Csv) {
        let rows: Vec<Vec<f64>> = report
            .samples
            .iter()
            .map(|s| {
                vec![
                    s.t,
                    s.r,
                    s.mass_raw,
                    s.mass_scaled,
                    s.momentum_raw,
                    s.momentum_scaled,
                ]
            })
            .collect();
        write_csv(
            &out.path("residuals.csv"),
            "t,r,mass_raw,mass_scaled,momentum_raw,momentum_scaled",
            &rows,
        )?;
    }
    if out.wants(Format::Json) {
        write_json(
            &out.path("summary.json"),
            &VerifySummary {
                generator: generator(),
                case: cfg.case,
                params: &params,
                thresholds: &cfg.thresholds,
                pass,
                report: &report,
            },
        )?;
    }
    if out.wants(Format::Svg) {
        let heat = HeatMap {
            title: format!("scaled momentum residual, {}", cfg.case.label()),
            t_values: report.t_grid.clone(),
            r_fractions: report.r_fractions.clone(),
            values: report.samples.iter().map(|s| s.momentum_scaled).collect(),
        };
        write_text(&out.path("residual_heatmap.svg"), &heat.render())?;
    }

    if overall {
        Ok(())
    } else {
        Err(CliError::Threshold(format!(
            "residual thresholds exceeded: mass {:.3e} (max {:.3e}), momentum {:.3e} (max {:.3e})",
            report.mass_residual_max,
            cfg.thresholds.mass_scaled_max,
            report.momentum_residual_max,
            cfg.thresholds.momentum_scaled_max
        )))
    }
}

#[derive(Serialize)]
struct BlowupRow {
    t: f64,
    a: f64,
    central_density: f64,
    amplification: f64,
}

#[derive(Serialize)]
struct BlowupReport<'a> {
    generator: Generator,
    case: SolutionCase,
    params: &'a PhysicalParams,
    status: &'static str,
    blowup_time: Option<f64>,
    table: Vec<BlowupRow>,
}

/// Reports the blowup time (if any) and the central-density amplification
/// approaching it.
pub fn cmd_blowup(cfg: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    require_theorem_case(cfg.case)?;
    let params = cfg.physical_params()?;
    let scaling = ScalingFunction::closed_form(&params, cfg.case).map_err(core_error)?;
    let t_blowup = blowup_time(&scaling);

    let status = match (t_blowup, cfg.case) {
        (Some(_), _) => "finite-time blowup",
        (None, SolutionCase::Case2) => "no blowup (exponential scaling)",
        (None, _) => "no blowup",
    };

    let times: Vec<f64> = match t_blowup {
        // T·(1 − 10^{−k}): t = 0 first, then a geometric approach to T.
        Some(t_b) => (0..=6).map(|k| t_b * (1.0 - 10f64.powi(-k))).collect(),
        None => (0..=6).map(|k| k as f64 / 6.0).collect(),
    };
    let n = params.n_dim as i32;
    let rho0 = params.alpha_ic / params.n.powi(n);
    let mut table = Vec::with_capacity(times.len());
    for &t in &times {
        let (a, _, _) = scaling.a_eval(t).map_err(core_error)?;
        let central_density = params.alpha_ic / a.powi(n);
        table.push(BlowupRow {
            t,
            a,
            central_density,
            amplification: central_density / rho0,
        });
    }

    if out.wants(Format::Json) {
        write_json(
            &out.path("blowup.json"),
            &BlowupReport {
                generator: generator(),
                case: cfg.case,
                params: &params,
                status,
                blowup_time: t_blowup,
                table,
            },
        )?;
    }
    if out.wants(Format::Svg) {
        let t_hi = t_blowup.map(|t| 0.999 * t).unwrap_or(1.0);
        let points: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let t = t_hi * i as f64 / 200.0;
                let (a, _, _) = scaling.a_eval(t).expect("t below blowup");
                (t, a)
            })
            .collect();
        let plot = LinePlot {
            title: format!("scaling factor a(t), {}", cfg.case.label()),
            x_label: "t".into(),
            y_label: "a".into(),
            points,
            markers: t_blowup
                .map(|t| vec![(t, format!("T = {t:.6}"))])
                .unwrap_or_default(),
        };
        write_text(&out.path("scaling.svg"), &plot.render())?;
    }
    info!("blowup status: {status}");
    Ok(())
}

#[derive(Serialize)]
struct LegacyMeta<'a> {
    generator: Generator,
    case: SolutionCase,
    kind: EmdenKind,
    n_dim: u32,
    k_pressure: f64,
    mu: f64,
    coeff: f64,
    alpha_ic: f64,
    z_mu: Option<f64>,
    integrator_stats: IntegratorStats,
    n_nodes: usize,
    params: &'a PhysicalParams,
}

/// Integrates the legacy Emden-type profile and writes the same artifact
/// shapes as `solve`.
pub fn cmd_legacy(cfg: &RunConfig, out: &OutputContext) -> Result<(), CliError> {
    let kind = match cfg.case {
        SolutionCase::LegacyGW => EmdenKind::PowerLaw,
        SolutionCase::Legacy2D => EmdenKind::Exponential2D,
        other => {
            return Err(CliError::Config(format!(
                "legacy command requires case legacy_gw or legacy_2d (got {})",
                other.label()
            )))
        }
    };
    let params = cfg.physical_params()?;
    let profile = integrate_emden(
        kind,
        cfg.params.n_dim,
        cfg.params.k,
        cfg.params.mu,
        cfg.params.alpha,
        cfg.grid.z_max,
        cfg.grid.rel_tol,
    )
    .map_err(core_error)?;
    let z_mu = profile.first_zero();
    info!(
        "legacy profile integrated: {} nodes, Z_mu {:?}",
        profile.z_nodes.len(),
        z_mu
    );
    write_legacy_artifacts(&profile, &params, cfg, z_mu, out)
}

fn write_legacy_artifacts(
    profile: &EmdenProfile,
    params: &PhysicalParams,
    cfg: &RunConfig,
    z_mu: Option<f64>,
    out: &OutputContext,
) -> Result<(), CliError> {
    if out.wants(Format::Csv) {
        let rows: Vec<Vec<f64>> = (0..profile.z_nodes.len())
            .map(|i| {
                vec![
                    profile.z_nodes[i],
                    profile.y_values[i],
                    profile.yprime_values[i],
                ]
            })
            .collect();
        write_csv(&out.path("profile.csv"), "z,y,yprime", &rows)?;
    }
    if out.wants(Format::Json) {
        write_json(
            &out.path("profile.json"),
            &LegacyMeta {
                generator: generator(),
                case: cfg.case,
                kind: profile.kind,
                n_dim: profile.n_dim,
                k_pressure: cfg.params.k,
                mu: profile.mu,
                coeff: profile.coeff,
                alpha_ic: profile.alpha_ic,
                z_mu,
                integrator_stats: profile.stats,
                n_nodes: profile.z_nodes.len(),
                params,
            },
        )?;
    }
    if out.wants(Format::Svg) {
        let plot = LinePlot {
            title: format!("legacy profile y(z), {}", cfg.case.label()),
            x_label: "z".into(),
            y_label: "y".into(),
            points: profile
                .z_nodes
                .iter()
                .zip(&profile.y_values)
                .map(|(&z, &y)| (z, y))
                .collect(),
            markers: z_mu
                .map(|z| vec![(z, format!("Z_mu = {z:.6}"))])
                .unwrap_or_default(),
        };
        write_text(&out.path("profile.svg"), &plot.render())?;
    }
    Ok(())
}
