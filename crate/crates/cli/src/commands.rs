//! The four subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::Serialize;
use svi_core::convergence::{coupled_errors, estimate_order, ErrorRow, OrderFit};
use svi_core::diagnostics::DriftReport;
use svi_core::models::NoiseHamiltonianSpec;
use svi_core::noise::WienerGrid;
use svi_core::trajectory::{Model, RunStats, Simulation, Trajectory};

use crate::config::RunConfig;
use crate::output::{self, FailureRecord, Header};
use crate::CliError;

/// Settings shared by every subcommand after the file is parsed.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl Context {
    fn header(&self) -> Header {
        Header::new(self.config.hash(), self.config.run.seed)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn diagnostics(&self, model: &Model) -> Vec<crate::config::Diagnostic> {
        self.config
            .output
            .diagnostics
            .clone()
            .unwrap_or_else(|| output::applicable(model))
    }
}

/// Increments of ensemble member `index`; member 0 is the plain run.
fn grid(sim: &Simulation, seed: u64, index: u64) -> Result<WienerGrid, CliError> {
    Ok(if sim.channels() == 0 {
        WienerGrid::zeros(sim.steps, 0, sim.dt)?
    } else {
        WienerGrid::generate_stream(seed, index, sim.steps, sim.channels(), sim.dt)?
    })
}

fn write_run(ctx: &Context, sim: &Simulation, t: &Trajectory, csv: &Path) -> Result<(), CliError> {
    let mut out = output::create(csv)?;
    output::write_trajectory(
        &mut out,
        &ctx.header(),
        &sim.model,
        t,
        ctx.config.output.every,
        &ctx.diagnostics(&sim.model),
    )
    .and_then(|_| out.flush())
    .map_err(|e| CliError::io(csv, e))
}

fn failure_error(t: &Trajectory) -> Option<CliError> {
    t.failure
        .as_ref()
        .map(|f| CliError::Solver(format!("step {}: {}", f.step, f.error)))
}

pub fn simulate(ctx: &Context) -> Result<(), CliError> {
    let sim = ctx.config.simulation()?;
    let t = sim.run(&grid(&sim, ctx.config.run.seed, 0)?, ctx.config.run.increments)?;
    write_run(ctx, &sim, &t, &ctx.path(&ctx.config.output.trajectory))?;
    output::write_json(
        &ctx.path(&ctx.config.output.summary),
        &output::summary(ctx.header(), &sim.model, &t),
    )?;
    match failure_error(&t) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct MemberSummary {
    member: usize,
    drift: DriftReport,
    stats: RunStats,
    failure: Option<FailureRecord>,
}

#[derive(Serialize)]
struct EnsembleSummary {
    header: Header,
    members: Vec<MemberSummary>,
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}"))),
    }
}

pub fn ensemble(ctx: &Context) -> Result<(), CliError> {
    let block = ctx
        .config
        .ensemble
        .as_ref()
        .ok_or_else(|| CliError::Config("the configuration has no [ensemble] block".into()))?;
    if block.members == 0 {
        return Err(CliError::Config("ensemble.members must be at least 1".into()));
    }
    let sim = ctx.config.simulation()?;
    let seed = ctx.config.run.seed;
    let runs: Vec<Result<Trajectory, CliError>> = in_pool(ctx.workers, || {
        (0..block.members)
            .into_par_iter()
            .map(|m| {
                let t = sim.run(&grid(&sim, seed, m as u64)?, ctx.config.run.increments)?;
                write_run(ctx, &sim, &t, &ctx.path(&format!("member_{m:03}.csv")))?;
                Ok(t)
            })
            .collect()
    })?;

    let mut snapshots = String::from("member,t,mu_x,mu_y,mu_z\n");
    let mut members = Vec::new();
    let mut failed = Vec::new();
    for (m, run) in runs.into_iter().enumerate() {
        let t = run?;
        if let Some(f) = &t.failure {
            warn!("member {m} stopped at step {}: {}", f.step, f.error);
            failed.push(m);
        }
        for &time in &block.snapshots {
            let k = (time / sim.dt).round() as usize;
            match t.records.get(k) {
                Some(r) => snapshots.push_str(&format!("{m},{:?},{:?},{:?},{:?}\n", r.t, r.mu.x, r.mu.y, r.mu.z)),
                None if k > sim.steps => warn!("snapshot t = {time} is past the horizon"),
                None => {}
            }
        }
        members.push(MemberSummary {
            member: m,
            drift: output::drift(&sim.model, &t),
            stats: t.stats,
            failure: t.failure.as_ref().map(|f| FailureRecord {
                step: f.step,
                error: f.error.to_string(),
            }),
        });
    }
    let path = ctx.path("snapshots.csv");
    let mut out = output::create(&path)?;
    ctx.header()
        .write_comment(&mut out)
        .and_then(|_| out.write_all(snapshots.as_bytes()))
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(&path, e))?;
    output::write_json(
        &ctx.path("ensemble.json"),
        &EnsembleSummary {
            header: ctx.header(),
            members,
        },
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Solver(format!("ensemble members {failed:?} did not finish")))
    }
}

#[derive(Serialize)]
struct ConvergenceReport {
    header: Header,
    reference_dt: f64,
    horizon: f64,
    rows: Vec<ErrorRow>,
    fit: Option<OrderFit>,
    fit_error: Option<String>,
    caveat: Option<&'static str>,
}

pub fn converge(ctx: &Context) -> Result<(), CliError> {
    let study = ctx.config.study(ctx.workers)?;
    let table = coupled_errors(&study)?;
    let path = ctx.path("convergence.csv");
    let mut out = output::create(&path)?;
    ctx.header()
        .write_comment(&mut out)
        .and_then(|_| table.write_csv(&mut out))
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(&path, e))?;
    let fit = estimate_order(&table);
    let caveat = (study.base.channels() > 1).then_some(
        "several noise channels: the fine reference shares the scheme's bias, so the slope does not certify the order against the true solution",
    );
    output::write_json(
        &ctx.path("convergence.json"),
        &ConvergenceReport {
            header: ctx.header(),
            reference_dt: table.reference_dt,
            horizon: table.horizon,
            rows: table.rows.clone(),
            fit: fit.as_ref().ok().copied(),
            fit_error: fit.as_ref().err().map(|e| e.to_string()),
            caveat,
        },
    )?;
    let fit = fit.map_err(|e| CliError::Solver(format!("order estimate failed: {e}")))?;
    println!("slope {:.4} intercept {:.4} r² {:.4} ({} rows)", fit.slope, fit.intercept, fit.r_squared, fit.rows_used);
    Ok(())
}

/// One audited invariant.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub drift: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn keeps_pi_z(sim: &Simulation) -> bool {
    let Model::HeavyTop(top) = &sim.model else {
        return false;
    };
    let m = top.inertia().0;
    let a = top.lever_arm();
    let symmetric = m[0][0] == m[1][1] && [m[0][1], m[0][2], m[1][2]].iter().all(|&v| v == 0.0);
    let commuting = sim.noise.iter().all(|n| {
        matches!(
            n,
            NoiseHamiltonianSpec::MomentumZ { .. }
                | NoiseHamiltonianSpec::GammaZ { .. }
                | NoiseHamiltonianSpec::MomentumNormSq { .. }
        )
    });
    symmetric && a.x == 0.0 && a.y == 0.0 && commuting
}

/// Invariants that apply to `sim`, with their tolerances.
pub fn audit(ctx: &Context, sim: &Simulation, report: &DriftReport) -> Vec<CheckLine> {
    let tol = ctx.config.check;
    let deterministic = sim.noise.is_empty();
    let mut wanted: Vec<(&str, f64)> = match &sim.model {
        Model::RigidBody(_) => vec![
            ("orbit_radius", tol.orbit_radius),
            ("spatial_momentum_x", tol.spatial_momentum),
            ("spatial_momentum_y", tol.spatial_momentum),
            ("spatial_momentum_z", tol.spatial_momentum),
        ],
        Model::HeavyTop(_) => vec![
            ("momentum_map", tol.momentum_map),
            ("gamma_norm_sq", tol.gamma_norm),
            ("pi_dot_gamma", tol.pi_dot_gamma),
        ],
    };
    if deterministic {
        let e = match sim.model {
            Model::RigidBody(_) => tol.energy,
            Model::HeavyTop(_) => tol.heavy_top_energy,
        };
        wanted.push(("energy", e));
    }
    if keeps_pi_z(sim) {
        wanted.push(("pi_z", tol.pi_z));
    }
    wanted
        .into_iter()
        .map(|(name, tolerance)| {
            let drift = report.get(name).map_or(f64::NAN, |d| d.max_deviation);
            CheckLine {
                name: name.into(),
                drift,
                tolerance,
                pass: drift <= tolerance,
            }
        })
        .collect()
}

pub fn check(ctx: &Context) -> Result<(), CliError> {
    let sim = ctx.config.simulation()?;
    // The bound is checked up front at the initial state; later violations
    // (momentum growing under noise) are reported, and fatal only under
    // a strict guard.
    let q = sim.guard_quantity(sim.dt)?;
    if q > 0.5 {
        return Err(CliError::Solver(svi_core::Error::StepSize { quantity: q }.to_string()));
    }
    let t = sim.run(&grid(&sim, ctx.config.run.seed, 0)?, ctx.config.run.increments)?;
    if let Some(e) = failure_error(&t) {
        return Err(e);
    }
    if t.stats.guard_violations > 0 {
        println!(
            "NOTE contraction guard exceeded on {} of {} steps (max {:e})",
            t.stats.guard_violations,
            t.stats.steps,
            t.stats.max_guard.unwrap_or(f64::NAN)
        );
    }
    let lines = audit(ctx, &sim, &output::drift(&sim.model, &t));
    for l in &lines {
        println!(
            "{} {} drift {:e} (tolerance {:e})",
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.drift,
            l.tolerance
        );
    }
    let failed: Vec<String> = lines
        .iter()
        .filter(|l| !l.pass)
        .map(|l| format!("{} drift {:e} > {:e}", l.name, l.drift, l.tolerance))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(failed.join("; ")))
    }
}
