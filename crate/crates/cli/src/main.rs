//! `saltns`: simulate the 2D stochastic Navier-Stokes system with
//! transport-stretching noise on the torus or the unit disk, and certify
//! the operator identities, inequality ratio studies, projection explosion
//! and Ito-Stratonovich conversion that back it.

mod config;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail};
use clap::{Parser, Subcommand};

use saltns_core::field::StokesBasis;
use saltns_core::io::{self, OutputDir, RunManifest};
use saltns_core::rng::split_seed;
use saltns_core::sde::{run as sde_run, NoiseMode};
use saltns_core::verify::conversion::{conversion_study, ConversionConfig};
use saltns_core::verify::explosion::{explosion_demo, PolarGrid};
use saltns_core::verify::identities::{identity_suite, IdentityConfig};
use saltns_core::verify::ratios::{all_ratio_studies, RatioStudyConfig, REGISTERED};
use saltns_core::verify::VerificationReport;

use config::Geometry;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "saltns", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Galerkin system from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a verification suite and write its report bundle.
    Verify {
        /// identities | ratios | explosion | conversion | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// List registered suites and ratio-study ids, then exit.
        #[arg(long)]
        list: bool,
    },
    /// Galerkin projection explosion demonstration on the disk.
    Explode {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated truncation list.
        #[arg(long, default_value = "4,16,64,256")]
        n_list: String,
    },
    /// Strong-difference study between the corrected Ito and the
    /// Stratonovich schemes on shared paths.
    ConvertStudy {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value = "6,7,8,9,10")]
        dt_exponents: String,
        #[arg(long, default_value_t = 16)]
        paths: usize,
    },
    /// Dump the eigen table / mode manifest of the configured basis.
    BasisDump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn out_root(explicit: Option<PathBuf>, fallback: &str) -> PathBuf {
    let base = explicit.unwrap_or_else(|| PathBuf::from(fallback));
    let root = std::env::var("SALTNS_OUTPUT_ROOT").unwrap_or_default();
    if root.is_empty() || base.is_absolute() {
        base
    } else {
        PathBuf::from(root).join(base)
    }
}

fn now_stamp() -> String {
    use std::time::{SystemTime, UNIX_EPOCH};
    format!(
        "unix:{}",
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0)
    )
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Simulate { config } => simulate(&config),
        Command::Verify {
            suite,
            out,
            seed,
            list,
        } => verify(&suite, out, seed, list),
        Command::Explode { out, n_list } => explode(out, &n_list),
        Command::ConvertStudy {
            out,
            seed,
            dt_exponents,
            paths,
        } => convert_study(out, seed, &dt_exponents, paths),
        Command::BasisDump { config, out } => basis_dump(&config, out),
    }
}

fn simulate(path: &std::path::Path) -> anyhow::Result<i32> {
    let started = now_stamp();
    let t0 = Instant::now();
    let cfg = config::load(path)?;
    let built = config::build_system(&cfg)?;
    for w in &built.warnings {
        eprintln!("warning: {w}");
    }
    let ic = config::initial_condition(&cfg)?;
    let paths = cfg.file.ensemble.paths.unwrap_or(1).max(1);
    if let Some(workers) = cfg.file.run.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .ok();
    }

    let mut out = OutputDir::create(&cfg.output)?;
    if let Some(xi_csv) = &built.xi_table_csv {
        out.write("xi_family.csv", xi_csv.as_bytes())?;
    }
    match &built.geometry {
        Geometry::Torus(b) => out.write("basis.txt", io::torus_manifest(b).as_bytes())?,
        Geometry::Disk(b) => out.write("eigen_table.csv", io::disk_table_to_csv(b).as_bytes())?,
    }

    let mut seeds = Vec::new();
    let mut any_blowup = false;
    use rayon::prelude::*;
    let runs: Vec<anyhow::Result<(usize, u64, saltns_core::sde::Trajectory, Vec<u32>)>> = (0
        ..paths)
        .into_par_iter()
        .map(|p| {
            let path_seed = if paths == 1 {
                cfg.seed
            } else {
                split_seed(cfg.seed, "ensemble", p as u64)
            };
            let run_cfg = config::sde_config(&cfg, &built, path_seed)?;
            let eigs = built.system.eigenvalues();
            let u0 = ic.build(eigs, run_cfg.truncation, path_seed);
            let traj = sde_run(built.system.as_ref(), &run_cfg, &u0)?;
            Ok((p, path_seed, traj, run_cfg.record_s_halves.clone()))
        })
        .collect();
    for r in runs {
        let (p, path_seed, traj, s_halves) = r?;
        seeds.push(path_seed);
        any_blowup |= traj.blew_up;
        let csv = io::trajectory_to_csv(&traj, &s_halves);
        out.write(&format!("trajectory_{p:03}.csv"), csv.as_bytes())?;
        if !traj.events.is_empty() {
            out.write(
                &format!("events_{p:03}.txt"),
                traj.events.join("\n").as_bytes(),
            )?;
        }
        let field = saltns_core::field::SpectralField::new(
            match &built.geometry {
                Geometry::Torus(b) => b.id().clone(),
                Geometry::Disk(b) => b.id().clone(),
            },
            traj.final_state.clone(),
        )?;
        out.write(
            &format!("final_state_{p:03}.bin"),
            &io::field_to_binary(&field),
        )?;
    }

    let mut manifest = RunManifest {
        tool_version: VERSION.into(),
        config_echo: cfg.raw_text.clone(),
        seeds,
        basis_hash: built.basis_hash.clone(),
        xi_stamp: built.xi_stamp.clone(),
        started,
        finished: format!("{}; wall_s = {:.3}", now_stamp(), t0.elapsed().as_secs_f64()),
        files: vec![],
    };
    let manifest_path = out.finish(&mut manifest)?;
    println!("wrote {}", manifest_path.display());
    if any_blowup {
        eprintln!("blow-up event recorded");
        if cfg.file.run.fail_on_blowup {
            return Ok(1);
        }
    }
    Ok(0)
}

fn write_reports(
    out: Option<PathBuf>,
    fallback: &str,
    reports: &[VerificationReport],
    extra: &[(String, String)],
    seed: u64,
) -> anyhow::Result<i32> {
    for r in reports {
        println!("{}", r.one_line());
    }
    if let Some(dir) = Some(out_root(out, fallback)) {
        let mut od = OutputDir::create(&dir)?;
        for r in reports {
            od.write(&format!("{}.txt", r.check_id), r.render().as_bytes())?;
        }
        od.write(
            "summary.csv",
            saltns_core::verify::summary_csv(reports).as_bytes(),
        )?;
        for (name, text) in extra {
            od.write(name, text.as_bytes())?;
        }
        let mut manifest = RunManifest {
            tool_version: VERSION.into(),
            config_echo: format!("seed = {seed}"),
            seeds: vec![seed],
            basis_hash: String::new(),
            xi_stamp: String::new(),
            started: now_stamp(),
            finished: now_stamp(),
            files: vec![],
        };
        od.finish(&mut manifest)?;
    }
    let failed = reports.iter().any(|r| r.gating() && !r.passed());
    Ok(if failed { 1 } else { 0 })
}

fn verify(suite: &str, out: Option<PathBuf>, seed: u64, list: bool) -> anyhow::Result<i32> {
    if list {
        println!("suites: identities, ratios, explosion, conversion, all");
        println!("ratio studies: {}", REGISTERED.join(", "));
        return Ok(0);
    }
    let mut reports = Vec::new();
    let mut extra: Vec<(String, String)> = Vec::new();
    match suite {
        "identities" => {
            reports.extend(identity_suite(&IdentityConfig {
                seed,
                ..IdentityConfig::default()
            })?);
        }
        "ratios" => {
            reports.extend(all_ratio_studies(&RatioStudyConfig {
                calibration_seed: seed,
                fresh_seed: seed + 1,
                ..RatioStudyConfig::default()
            })?);
        }
        "explosion" => {
            let basis = saltns_core::disk::build_disk_basis(8, 16, None, None)?;
            let grid = PolarGrid::new(256, 64);
            let outc = explosion_demo(&basis, &[4, 16, 64, 256], &grid)?;
            extra.push((
                "explosion_table.csv".into(),
                explosion_table_csv(&outc.violating_table.rows, &outc.control_table.rows),
            ));
            reports.extend(outc.reports);
        }
        "conversion" => {
            let (r, rows) = acceptance_conversion(seed)?;
            extra.push((
                "conversion_rows.csv".into(),
                saltns_core::verify::conversion::conversion_rows_csv(&rows),
            ));
            reports.push(r);
        }
        "all" => {
            reports.extend(identity_suite(&IdentityConfig {
                seed,
                ..IdentityConfig::default()
            })?);
            reports.extend(all_ratio_studies(&RatioStudyConfig {
                calibration_seed: seed,
                fresh_seed: seed + 1,
                ..RatioStudyConfig::default()
            })?);
            let basis = saltns_core::disk::build_disk_basis(8, 16, None, None)?;
            let grid = PolarGrid::new(256, 64);
            let outc = explosion_demo(&basis, &[4, 16, 64, 256], &grid)?;
            reports.extend(outc.reports);
            let (r, _) = acceptance_conversion(seed)?;
            reports.push(r);
            reports.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        }
        other => {
            bail!(
                "unknown suite `{other}`; registered suites: identities, ratios, explosion, conversion, all"
            );
        }
    }
    write_reports(out, &format!("out/verify-{suite}"), &reports, &extra, seed)
}

/// The shipped full-noise conversion configuration (torus, four correlates,
/// small amplitudes, nonlinear term on).
fn acceptance_conversion(
    seed: u64,
) -> anyhow::Result<(VerificationReport, Vec<(f64, f64)>)> {
    use saltns_core::noise::make_torus_xi;
    use saltns_core::ops::{GalerkinSystem, TorusWorkspace};
    use saltns_core::sde::InitialCondition;
    use std::sync::Arc;
    let basis = Arc::new(saltns_core::torus::build_torus_basis(2, 8, 32)?);
    let fam = make_torus_xi(&basis, 4, 3.0, 0.05, seed, 2, 2)?;
    let ws = TorusWorkspace::new(basis.clone(), &fam.members, &fam.stamp.to_string())?;
    let cfg = ConversionConfig {
        dt_exponents: vec![6, 7, 8, 9, 10],
        horizon: 1.0,
        paths: 16,
        seed,
        truncation: ws.n_modes(),
        nu: 0.05,
        beta: 1,
        enable_nonlinear: true,
        noise: NoiseMode::Salt,
        imex: true,
    };
    let u0 = InitialCondition::RandomBand {
        amplitude: 1.0,
        decay: 1.5,
    }
    .build(ws.eigenvalues(), cfg.truncation, split_seed(seed, "conversion-ic", 0));
    let out = conversion_study(&ws, &cfg, &u0)?;
    Ok((out.report, out.rows))
}

fn explosion_table_csv(viol: &[(usize, f64)], ctrl: &[(usize, f64)]) -> String {
    let mut s = String::from("n,violating_w22,control_w22\n");
    for (i, (n, v)) in viol.iter().enumerate() {
        s.push_str(&format!("{n},{v:?},{:?}\n", ctrl.get(i).map(|c| c.1).unwrap_or(f64::NAN)));
    }
    s
}

fn explode(out: Option<PathBuf>, n_list: &str) -> anyhow::Result<i32> {
    let ns: Vec<usize> = n_list
        .split(',')
        .map(|s| s.trim().parse().map_err(|e| anyhow!("n_list: {e}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let basis = saltns_core::disk::build_disk_basis(8, 16, None, None)?;
    let grid = PolarGrid::new(256, 64);
    let outc = explosion_demo(&basis, &ns, &grid)?;
    let extra = vec![(
        "explosion_table.csv".to_string(),
        explosion_table_csv(&outc.violating_table.rows, &outc.control_table.rows),
    )];
    write_reports(out, "out/explosion", &outc.reports, &extra, 0)
}

fn convert_study(
    out: Option<PathBuf>,
    seed: u64,
    dt_exponents: &str,
    paths: usize,
) -> anyhow::Result<i32> {
    let exps: Vec<u32> = dt_exponents
        .split(',')
        .map(|s| s.trim().parse().map_err(|e| anyhow!("dt_exponents: {e}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    use saltns_core::noise::make_torus_xi;
    use saltns_core::ops::{GalerkinSystem, TorusWorkspace};
    use saltns_core::sde::InitialCondition;
    use std::sync::Arc;
    let basis = Arc::new(saltns_core::torus::build_torus_basis(2, 8, 32)?);
    let fam = make_torus_xi(&basis, 4, 3.0, 0.05, seed, 2, 2)?;
    let ws = TorusWorkspace::new(basis.clone(), &fam.members, &fam.stamp.to_string())?;
    let cfg = ConversionConfig {
        dt_exponents: exps,
        horizon: 1.0,
        paths,
        seed,
        truncation: ws.n_modes(),
        nu: 0.05,
        beta: 1,
        enable_nonlinear: true,
        noise: NoiseMode::Salt,
        imex: true,
    };
    let u0 = InitialCondition::RandomBand {
        amplitude: 1.0,
        decay: 1.5,
    }
    .build(ws.eigenvalues(), cfg.truncation, split_seed(seed, "conversion-ic", 0));
    let outc = conversion_study(&ws, &cfg, &u0)?;
    let extra = vec![(
        "conversion_rows.csv".to_string(),
        saltns_core::verify::conversion::conversion_rows_csv(&outc.rows),
    )];
    write_reports(out, "out/conversion", &[outc.report], &extra, seed)
}

fn basis_dump(path: &std::path::Path, out: Option<PathBuf>) -> anyhow::Result<i32> {
    let cfg = config::load(path)?;
    let built = config::build_system(&cfg)?;
    let dir = out_root(out, &format!("{}", cfg.output.display()));
    let mut od = OutputDir::create(&dir)?;
    match &built.geometry {
        Geometry::Torus(b) => {
            od.write("basis.txt", io::torus_manifest(b).as_bytes())?;
        }
        Geometry::Disk(b) => {
            od.write("eigen_table.csv", io::disk_table_to_csv(b).as_bytes())?;
        }
    }
    let mut manifest = RunManifest {
        tool_version: VERSION.into(),
        config_echo: cfg.raw_text.clone(),
        seeds: vec![cfg.seed],
        basis_hash: built.basis_hash.clone(),
        xi_stamp: built.xi_stamp.clone(),
        started: now_stamp(),
        finished: now_stamp(),
        files: vec![],
    };
    let p = od.finish(&mut manifest)?;
    println!("wrote {}", p.display());
    Ok(0)
}
