//! Wiener increments: seeded generation, truncation and coarsening.
//!
//! Streams come from ChaCha20 keyed by `seed_from_u64(seed)` with the stream
//! word set to the trajectory index, so every `(seed, index)` pair owns a
//! disjoint, platform-independent sequence. Normals are produced by the
//! Box–Muller transform evaluated with `libm`, two normals per pair of
//! 53-bit uniforms, filled step-major (all channels of step 0, then step 1).
//!
//! Increments are stored as integer multiples of 2⁻⁴⁰. Sums of increments are
//! then exact in any order, which is what lets [`WienerGrid::coarsen`]
//! preserve the total displacement of every channel bit for bit.

use std::io::{self, Write};

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

const QUANTUM_BITS: i32 = 40;

fn quantum() -> f64 {
    libm::ldexp(1.0, -QUANTUM_BITS)
}

/// Independent per-trajectory random stream.
pub fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform in (0, 1].
fn open_uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * libm::ldexp(1.0, -53)
}

/// Pair of independent standard normals.
fn normal_pair(rng: &mut impl RngCore) -> (f64, f64) {
    let u1 = open_uniform(rng);
    let u2 = open_uniform(rng);
    let radius = libm::sqrt(-2.0 * libm::log(u1));
    let angle = 2.0 * std::f64::consts::PI * u2;
    (radius * libm::cos(angle), radius * libm::sin(angle))
}

/// K × N matrix of raw (untruncated) Wiener increments at step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerGrid {
    dt: f64,
    steps: usize,
    channels: usize,
    quanta: Vec<i64>,
}

impl WienerGrid {
    /// Stream 0 of `seed`.
    pub fn generate(seed: u64, steps: usize, channels: usize, dt: f64) -> Result<WienerGrid> {
        Self::generate_stream(seed, 0, steps, channels, dt)
    }

    pub fn generate_stream(
        seed: u64,
        index: u64,
        steps: usize,
        channels: usize,
        dt: f64,
    ) -> Result<WienerGrid> {
        validate_shape(steps, channels, dt)?;
        let mut rng = stream(seed, index);
        Ok(Self::sample(&mut rng, steps, channels, dt))
    }

    fn sample(rng: &mut impl RngCore, steps: usize, channels: usize, dt: f64) -> WienerGrid {
        let total = steps * channels;
        let sd = dt.sqrt();
        let inv_quantum = 1.0 / quantum();
        let mut quanta = Vec::with_capacity(total + 1);
        while quanta.len() < total {
            let (a, b) = normal_pair(rng);
            quanta.push(libm::round(a * sd * inv_quantum) as i64);
            quanta.push(libm::round(b * sd * inv_quantum) as i64);
        }
        quanta.truncate(total);
        WienerGrid {
            dt,
            steps,
            channels,
            quanta,
        }
    }

    /// Grid with every increment zero (deterministic runs).
    pub fn zeros(steps: usize, channels: usize, dt: f64) -> Result<WienerGrid> {
        validate_shape(steps, channels.max(1), dt)?;
        Ok(WienerGrid {
            dt,
            steps,
            channels,
            quanta: vec![0; steps * channels],
        })
    }

    /// Grid from explicit values, rounded onto the 2⁻⁴⁰ lattice.
    pub fn from_rows(dt: f64, rows: &[Vec<f64>]) -> Result<WienerGrid> {
        let channels = rows.first().map_or(0, Vec::len);
        validate_shape(rows.len(), channels, dt)?;
        let mut quanta = Vec::with_capacity(rows.len() * channels);
        for row in rows {
            if row.len() != channels {
                return Err(Error::InvalidArgument("ragged increment rows".into()));
            }
            for &w in row {
                if !w.is_finite() {
                    return Err(Error::InvalidArgument("non-finite increment".into()));
                }
                quanta.push(libm::round(w / quantum()) as i64);
            }
        }
        Ok(WienerGrid {
            dt,
            steps: rows.len(),
            channels,
            quanta,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, step: usize, channel: usize) -> f64 {
        self.quanta[step * self.channels + channel] as f64 * quantum()
    }

    /// Increments of one step, one per channel.
    pub fn row(&self, step: usize) -> Vec<f64> {
        let q = quantum();
        self.quanta[step * self.channels..(step + 1) * self.channels]
            .iter()
            .map(|&n| n as f64 * q)
            .collect()
    }

    /// All entries, step-major.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let q = quantum();
        self.quanta.iter().map(move |&n| n as f64 * q)
    }

    /// `W_i(T) − W_i(0)` for every channel.
    pub fn totals(&self) -> Vec<f64> {
        let q = quantum();
        (0..self.channels)
            .map(|c| {
                let sum: i64 = (0..self.steps).map(|k| self.quanta[k * self.channels + c]).sum();
                sum as f64 * q
            })
            .collect()
    }

    /// Sums every `m` consecutive increments, giving the same paths at step `m·dt`.
    pub fn coarsen(&self, m: usize) -> Result<WienerGrid> {
        if m == 0 || !self.steps.is_multiple_of(m) {
            return Err(Error::InvalidArgument(format!(
                "coarsening factor {m} does not divide {} steps",
                self.steps
            )));
        }
        let steps = self.steps / m;
        let mut quanta = vec![0i64; steps * self.channels];
        for k in 0..self.steps {
            for c in 0..self.channels {
                quanta[(k / m) * self.channels + c] += self.quanta[k * self.channels + c];
            }
        }
        Ok(WienerGrid {
            dt: self.dt * m as f64,
            steps,
            channels: self.channels,
            quanta,
        })
    }

    /// One row per step, one column per channel (`w0,w1,...`).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<String> = (0..self.channels).map(|c| format!("w{c}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.steps {
            let row: Vec<String> = self.row(k).iter().map(|w| format!("{w:?}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn validate_shape(steps: usize, channels: usize, dt: f64) -> Result<()> {
    if steps == 0 || channels == 0 {
        return Err(Error::InvalidArgument(format!(
            "increment grid needs at least one step and one channel (got {steps}×{channels})"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive (got {dt})")));
    }
    Ok(())
}

/// Clipping level `D_Δt` for truncated increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevel(f64);

impl TruncationLevel {
    pub fn new(d: f64) -> Result<TruncationLevel> {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::InvalidArgument(format!("truncation level must be finite and ≥ 0 (got {d})")));
        }
        Ok(TruncationLevel(d))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Clips `w` to `[−d, d]`.
    pub fn truncate(self, w: f64) -> f64 {
        truncate(w, self)
    }
}

/// `D_Δt = sqrt(4 |ln Δt| Δt)`, defined for `0 < Δt < 1`.
pub fn default_level(dt: f64) -> Result<TruncationLevel> {
    if !(dt > 0.0 && dt < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "default truncation level needs 0 < dt < 1 (got {dt})"
        )));
    }
    TruncationLevel::new((4.0 * dt.ln().abs() * dt).sqrt())
}

pub fn truncate(w: f64, level: TruncationLevel) -> f64 {
    let d = level.0;
    if w > d {
        d
    } else if w < -d {
        -d
    } else {
        w
    }
}
