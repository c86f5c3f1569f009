//! Trajectory CSV, JSON summaries and the provenance header.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use svi_core::diagnostics::{
    casimirs_ht, drift_report, heavytop_momentum_map, orbit_radius, spatial_momentum, DriftReport,
};
use svi_core::models::rb_energy;
use svi_core::trajectory::{Model, Record, RunStats, Trajectory};
use svi_core::{Mat3, Vec3};

use crate::config::Diagnostic;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Header {
    pub fn new(config_sha256: String, seed: u64) -> Header {
        Header {
            version: env!("CARGO_PKG_VERSION"),
            config_sha256,
            seed,
        }
    }

    pub fn write_comment<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# svi {}", self.version)?;
        writeln!(out, "# config_sha256 {}", self.config_sha256)?;
        writeln!(out, "# seed {}", self.seed)
    }
}

pub fn create(path: &Path) -> Result<io::BufWriter<fs::File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::File::create(path)
        .map(io::BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).expect("summaries serialize");
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))
}

pub fn applicable(model: &Model) -> Vec<Diagnostic> {
    match model {
        Model::RigidBody(_) => vec![Diagnostic::OrbitRadius, Diagnostic::Energy, Diagnostic::SpatialMomentum],
        Model::HeavyTop(_) => vec![Diagnostic::Energy, Diagnostic::MomentumMap, Diagnostic::Casimirs],
    }
}

fn energy(model: &Model, r: &Record) -> f64 {
    match model {
        Model::RigidBody(body) => rb_energy(body, r.mu),
        Model::HeavyTop(top) => top.energy(r.mu, r.alpha.expect("heavy-top records carry Γ")),
    }
}

/// Momentum map about the gravity axis; `(RΠ)_z` for the usual `α₀ = e_z`.
fn momentum_map(model: &Model, r: &Record) -> f64 {
    match model {
        Model::HeavyTop(top) if top.alpha0() != Vec3::Z => {
            let a = top.alpha0();
            spatial_momentum(&r.g, r.mu).dot(a) / a.norm()
        }
        _ => heavytop_momentum_map(&r.g, r.mu),
    }
}

fn columns(d: Diagnostic) -> &'static [&'static str] {
    match d {
        Diagnostic::OrbitRadius => &["orbit_radius"],
        Diagnostic::Energy => &["energy"],
        Diagnostic::SpatialMomentum => &["m_x", "m_y", "m_z"],
        Diagnostic::MomentumMap => &["p_phi"],
        Diagnostic::Casimirs => &["gamma_norm_sq", "pi_dot_gamma"],
    }
}

fn values(model: &Model, d: Diagnostic, r: &Record) -> Vec<f64> {
    match d {
        Diagnostic::OrbitRadius => vec![orbit_radius(r.mu)],
        Diagnostic::Energy => vec![energy(model, r)],
        Diagnostic::SpatialMomentum => spatial_momentum(&r.g, r.mu).to_array().to_vec(),
        Diagnostic::MomentumMap => vec![momentum_map(model, r)],
        Diagnostic::Casimirs => {
            let (a, b) = casimirs_ht(r.mu, r.alpha.expect("heavy-top records carry Γ"));
            vec![a, b]
        }
    }
}

fn push(line: &mut String, v: f64) {
    line.push(',');
    line.push_str(&format!("{v:?}"));
}

/// CSV with the header block, one row per `every`-th record.
pub fn write_trajectory<W: Write>(
    out: &mut W,
    header: &Header,
    model: &Model,
    t: &Trajectory,
    every: usize,
    diagnostics: &[Diagnostic],
) -> io::Result<()> {
    header.write_comment(out)?;
    let mut names = vec!["step", "t", "mu_x", "mu_y", "mu_z"];
    names.extend(["r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33"]);
    let heavy = matches!(model, Model::HeavyTop(_));
    if heavy {
        names.extend(["gamma_x", "gamma_y", "gamma_z"]);
    }
    for &d in diagnostics {
        names.extend(columns(d));
    }
    writeln!(out, "{}", names.join(","))?;
    let last = t.records.len() - 1;
    for (k, r) in t.records.iter().enumerate() {
        if k % every != 0 && k != last {
            continue;
        }
        let mut line = r.step.to_string();
        push(&mut line, r.t);
        r.mu.to_array().into_iter().for_each(|v| push(&mut line, v));
        r.g.matrix().entries().into_iter().for_each(|v| push(&mut line, v));
        if let Some(a) = r.alpha {
            a.to_array().into_iter().for_each(|v| push(&mut line, v));
        }
        for &d in diagnostics {
            values(model, d, r).into_iter().for_each(|v| push(&mut line, v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Per-step series of the quantities the scheme is expected to conserve
/// (or not) for this model.
pub fn drift(model: &Model, t: &Trajectory) -> DriftReport {
    let series = |f: &dyn Fn(&Record) -> f64| t.records.iter().map(f).collect::<Vec<f64>>();
    let named: Vec<(&str, Vec<f64>)> = match model {
        Model::RigidBody(_) => vec![
            ("orbit_radius", series(&|r| orbit_radius(r.mu))),
            ("energy", series(&|r| energy(model, r))),
            ("spatial_momentum_x", series(&|r| spatial_momentum(&r.g, r.mu).x)),
            ("spatial_momentum_y", series(&|r| spatial_momentum(&r.g, r.mu).y)),
            ("spatial_momentum_z", series(&|r| spatial_momentum(&r.g, r.mu).z)),
        ],
        Model::HeavyTop(_) => vec![
            ("energy", series(&|r| energy(model, r))),
            ("momentum_map", series(&|r| momentum_map(model, r))),
            ("gamma_norm_sq", series(&|r| casimirs_ht(r.mu, r.alpha.expect("Γ")).0)),
            ("pi_dot_gamma", series(&|r| casimirs_ht(r.mu, r.alpha.expect("Γ")).1)),
            ("pi_z", series(&|r| r.mu.z)),
        ],
    };
    let refs: Vec<(&str, &[f64])> = named.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    drift_report(&refs).expect("trajectories hold the initial state")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalState {
    pub step: usize,
    pub t: f64,
    pub mu: Vec3,
    pub rotation: Mat3,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub step: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub header: Header,
    pub final_state: FinalState,
    pub drift: DriftReport,
    pub stats: RunStats,
    pub failure: Option<FailureRecord>,
}

pub fn summary(header: Header, model: &Model, t: &Trajectory) -> Summary {
    let r = t.last();
    Summary {
        header,
        final_state: FinalState {
            step: r.step,
            t: r.t,
            mu: r.mu,
            rotation: *r.g.matrix(),
            gamma: r.alpha,
        },
        drift: drift(model, t),
        stats: t.stats,
        failure: t.failure.as_ref().map(|f| FailureRecord {
            step: f.step,
            error: f.error.to_string(),
        }),
    }
}
