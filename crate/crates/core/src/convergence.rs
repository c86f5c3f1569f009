//! Strong mean-square convergence measured on coupled fine/coarse paths.

use std::io::{self, Write};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::GuardMode;
use crate::noise::WienerGrid;
use crate::trajectory::{IncrementMode, Simulation, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub dt: f64,
    pub rms_error: f64,
    pub samples: usize,
}

/// Root-mean-square sup-norm errors against a fine reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
    pub reference_dt: f64,
    pub horizon: f64,
}

impl ErrorTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "dt,rms_error,samples")?;
        for r in &self.rows {
            writeln!(out, "{:?},{:?},{}", r.dt, r.rms_error, r.samples)?;
        }
        Ok(())
    }
}

/// Study layout. `base` supplies the model, noise, initial state and
/// solver controls; its `dt` and `steps` are replaced per run.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub base: Simulation,
    pub dt_fine: f64,
    pub factors: Vec<usize>,
    pub horizon: f64,
    pub samples: usize,
    pub seed: u64,
    /// Increments fed to the reference run.
    pub reference: IncrementMode,
    /// Increments fed to the coarse runs, normally `Truncated`.
    pub coarse: IncrementMode,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Study {
    pub fn fine_steps(&self) -> Result<usize> {
        if !(self.dt_fine > 0.0 && self.horizon > 0.0) {
            return Err(Error::Configuration("dt_fine and the horizon must be positive".into()));
        }
        let steps = (self.horizon / self.dt_fine).round();
        if steps < 1.0 || (steps * self.dt_fine - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(Error::Configuration(format!(
                "horizon {} is not a whole number of fine steps {}",
                self.horizon, self.dt_fine
            )));
        }
        Ok(steps as usize)
    }

    fn validate(&self) -> Result<usize> {
        let steps = self.fine_steps()?;
        if self.samples == 0 {
            return Err(Error::Configuration("at least one sample is required".into()));
        }
        if self.factors.is_empty() {
            return Err(Error::Configuration("no coarsening factors given".into()));
        }
        for &m in &self.factors {
            if m == 0 || steps % m != 0 {
                return Err(Error::Configuration(format!(
                    "factor {m} does not divide the {steps} fine steps"
                )));
            }
        }
        let coarsest = *self.factors.iter().max().expect("non-empty") as f64 * self.dt_fine;
        let q = self.base.guard_quantity(coarsest)?;
        if q > 0.5 {
            return Err(Error::Configuration(format!(
                "contraction guard {q} > 0.5 at dt = {coarsest}; use smaller factors"
            )));
        }
        Ok(steps)
    }
}

/// Sum in a fixed binary tree so the result does not depend on how samples
/// were scheduled.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn sup_error(fine: &Trajectory, coarse: &Trajectory, factor: usize) -> f64 {
    coarse
        .records
        .iter()
        .enumerate()
        .map(|(j, r)| (r.mu - fine.records[j * factor].mu).norm())
        .fold(0.0, f64::max)
}

fn sample_errors(study: &Study, steps: usize, index: usize) -> Result<Vec<f64>> {
    let mut base = study.base.clone();
    base.controls.guard = GuardMode::Strict;
    let channels = base.channels();
    let grid = if channels == 0 {
        WienerGrid::zeros(steps, 0, study.dt_fine)?
    } else {
        WienerGrid::generate_stream(study.seed, index as u64, steps, channels, study.dt_fine)?
    };
    // Raw increments are not covered by the strict guard's truncation
    // bound, so runs fed them only warn.
    let mut fine_sim = base.with_dt(study.dt_fine, steps);
    if study.reference == IncrementMode::Raw {
        fine_sim.controls.guard = GuardMode::Warn;
    }
    let fine = fine_sim.run(&grid, study.reference)?.into_result()?;
    study
        .factors
        .iter()
        .map(|&m| {
            let coarse_grid = grid.coarsen(m)?;
            let mut sim = base.with_dt(m as f64 * study.dt_fine, steps / m);
            if study.coarse == IncrementMode::Raw {
                sim.controls.guard = GuardMode::Warn;
            }
            let coarse = sim.run(&coarse_grid, study.coarse)?.into_result()?;
            Ok(sup_error(&fine, &coarse, m))
        })
        .collect()
}

/// `sqrt(E[sup_k ‖Π_k − Π_ref(t_k)‖²])` for each coarsening factor.
pub fn coupled_errors(study: &Study) -> Result<ErrorTable> {
    let steps = study.validate()?;
    let compute = || -> Result<Vec<Vec<f64>>> {
        (0..study.samples)
            .into_par_iter()
            .map(|s| sample_errors(study, steps, s))
            .collect()
    };
    let per_sample = match study.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Configuration(format!("cannot start worker pool: {e}")))?
            .install(compute)?,
        None => compute()?,
    };
    let rows = study
        .factors
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let squares: Vec<f64> = per_sample.iter().map(|e| e[i] * e[i]).collect();
            ErrorRow {
                dt: m as f64 * study.dt_fine,
                rms_error: (pairwise_sum(&squares) / study.samples as f64).sqrt(),
                samples: study.samples,
            }
        })
        .collect();
    Ok(ErrorTable {
        rows,
        reference_dt: study.dt_fine,
        horizon: study.horizon,
    })
}

/// Least-squares fit of `log₂ e = slope·log₂ dt + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rows_used: usize,
}

pub fn estimate_order(table: &ErrorTable) -> Result<OrderFit> {
    let mut points = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        if r.rms_error > 0.0 && r.rms_error.is_finite() && r.dt > 0.0 {
            points.push((r.dt.log2(), r.rms_error.log2()));
        } else {
            warn!("excluding row dt = {} with error {} from the order fit", r.dt, r.rms_error);
        }
    }
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "order fit needs at least two rows with positive error, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("order fit needs at least two distinct step sizes".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(OrderFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        rows_used: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::StepControls;
    use crate::lie::{Rotation, Vec3};
    use crate::models::{NoiseHamiltonianSpec, RigidBody};
    use crate::noise;
    use crate::trajectory::Model;
    use rand_core::RngCore;

    fn table(points: &[(f64, f64)]) -> ErrorTable {
        ErrorTable {
            rows: points
                .iter()
                .map(|&(dt, e)| ErrorRow {
                    dt,
                    rms_error: e,
                    samples: 1,
                })
                .collect(),
            reference_dt: 0.001,
            horizon: 1.0,
        }
    }

    #[test]
    fn exact_power_laws() {
        let dts = [0.01, 0.02, 0.04, 0.08];
        let fit = estimate_order(&table(&dts.map(|d| (d, 3.0 * d)))).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
        let fit = estimate_order(&table(&dts.map(|d| (d, d.sqrt())))).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jittered_slope() {
        let mut rng = noise::stream(7, 0);
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let dt = 0.005 * 2f64.powi(i);
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                (dt, dt * (1.0 + 0.05 * (2.0 * u - 1.0)))
            })
            .collect();
        let fit = estimate_order(&table(&pts)).unwrap();
        assert!((0.9..=1.1).contains(&fit.slope), "{}", fit.slope);
    }

    #[test]
    fn zero_rows_are_excluded() {
        let fit = estimate_order(&table(&[(0.01, 0.0), (0.02, 0.02), (0.04, 0.04)])).unwrap();
        assert_eq!(fit.rows_used, 2);
        assert!(estimate_order(&table(&[(0.01, 0.0), (0.02, 0.02)])).is_err());
    }

    #[test]
    fn pairwise_sum_is_exact_on_small_integers() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    fn study(noise: Vec<NoiseHamiltonianSpec>) -> Study {
        Study {
            base: Simulation {
                model: Model::RigidBody(RigidBody::diagonal(1.0, 2.0, 3.0).unwrap()),
                noise,
                mu0: Vec3::new(-0.5878, 0.0, 0.8090),
                g0: Rotation::IDENTITY,
                dt: 0.01,
                steps: 0,
                controls: StepControls::default(),
            },
            dt_fine: 0.01,
            factors: vec![1, 2, 4],
            horizon: 0.64,
            samples: 4,
            seed: 11,
            reference: IncrementMode::Truncated,
            coarse: IncrementMode::Truncated,
            workers: Some(2),
        }
    }

    #[test]
    fn factor_one_has_zero_error() {
        let t = coupled_errors(&study(vec![NoiseHamiltonianSpec::MomentumX { k: 0.02 }])).unwrap();
        assert_eq!(t.rows[0].rms_error, 0.0);
        assert!(t.rows[1].rms_error > 0.0);
    }

    #[test]
    fn tables_are_reproducible() {
        let mut s = study(vec![NoiseHamiltonianSpec::MomentumX { k: 0.02 }]);
        s.reference = IncrementMode::Raw;
        let a = coupled_errors(&s).unwrap();
        s.workers = Some(1);
        let b = coupled_errors(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_layouts_are_rejected() {
        let mut s = study(vec![]);
        s.factors = vec![3];
        assert!(matches!(coupled_errors(&s), Err(Error::Configuration(_))));
        s.factors = vec![];
        assert!(coupled_errors(&s).is_err());
        s.factors = vec![2];
        s.horizon = 0.645;
        assert!(coupled_errors(&s).is_err());
        let mut s = study(vec![]);
        s.factors = vec![64];
        s.horizon = 64.0;
        s.base.mu0 = Vec3::new(0.0, 0.0, 10.0);
        assert!(matches!(coupled_errors(&s), Err(Error::Configuration(m)) if m.contains("smaller factors")));
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        table(&[(0.01, 0.5)]).write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "dt,rms_error,samples\n0.01,0.5,1\n");
    }
}
