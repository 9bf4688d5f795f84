use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::TimeSeries;
use crate::error::{Error, Result};
use crate::testbench::ChirpSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodeOptions {
    pub f_low: f64,
    pub f_high: f64,
    pub n_bins: usize,
    /// Window length in cycles of the bin frequency...
    pub window_cycles: f64,
    /// ...but never shorter than this (s).
    pub min_window: f64,
    /// Bins whose clipped window holds fewer cycles are dropped.
    pub min_cycles: f64,
}

impl Default for BodeOptions {
    fn default() -> Self {
        BodeOptions {
            f_low: 2.0,
            f_high: 20.0,
            n_bins: 24,
            window_cycles: 3.0,
            min_window: 0.2,
            min_cycles: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedBin {
    pub frequency: f64,
    pub reason: String,
}

/// Empirical frequency response. `frequency[k]` is the sweep frequency at
/// the centre of bin `k`'s (possibly clipped) window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BodeCurve {
    pub frequency: Vec<f64>,
    pub magnitude_db: Vec<f64>,
    pub phase_deg: Vec<f64>,
    /// Chirp cycles inside each bin's window.
    pub cycles: Vec<f64>,
    pub dropped: Vec<DroppedBin>,
}

impl BodeCurve {
    pub fn len(&self) -> usize {
        self.frequency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequency.is_empty()
    }

    /// Index of the largest magnitude.
    pub fn peak(&self) -> Option<usize> {
        (0..self.len()).max_by(|&a, &b| self.magnitude_db[a].total_cmp(&self.magnitude_db[b]))
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "frequency_hz,magnitude_db,phase_deg,cycles")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.frequency[k], self.magnitude_db[k], self.phase_deg[k], self.cycles[k]
            )?;
        }
        Ok(())
    }
}

pub fn log_spaced(f_low: f64, f_high: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![f_low];
    }
    let (a, b) = (f_low.ln(), f_high.ln());
    (0..n)
        .map(|k| {
            if k == n - 1 {
                f_high
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Least-squares fit `s ≈ a cos φ + b sin φ + c` over samples `lo..hi`,
/// returning amplitude and phase θ of `A cos(φ + θ)`.
fn sine_fit(series: &TimeSeries, chirp: &ChirpSpec, lo: usize, hi: usize) -> Result<(f64, f64)> {
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for k in lo..hi {
        let phi = chirp.phase(series.time(k));
        let basis = Vector3::new(phi.cos(), phi.sin(), 1.0);
        gram += basis * basis.transpose();
        rhs += basis * series.values[k];
    }
    let coef = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("singular sine-fit normal equations".into()))?
        .solve(&rhs);
    Ok((coef[0].hypot(coef[1]), (-coef[1]).atan2(coef[0])))
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Windowed sine-fit estimate of `response / command` along a known chirp.
///
/// Each bin's window is centred where the sweep passes the bin frequency,
/// `max(window_cycles / f, min_window)` long and clipped to the record.
/// The chirp phase is used as the regression basis, so the fit follows the
/// frequency change inside the window.
pub fn estimate_bode(
    command: &TimeSeries,
    response: &TimeSeries,
    chirp: &ChirpSpec,
    options: &BodeOptions,
) -> Result<BodeCurve> {
    chirp.validate()?;
    if command.len() != response.len()
        || command.start != response.start
        || command.dt != response.dt
    {
        return Err(Error::contract(
            "command and response must share one sampling grid",
        ));
    }
    if !(command.dt > 0.0) || command.len() < 3 {
        return Err(Error::contract(
            "series need a positive step and at least three samples",
        ));
    }
    if !(0.0 < options.f_low && options.f_low < options.f_high) || options.n_bins == 0 {
        return Err(Error::contract("invalid Bode band or bin count"));
    }
    if options.f_high >= 0.5 / command.dt {
        return Err(Error::contract(format!(
            "band edge {} Hz is not below Nyquist {} Hz",
            options.f_high,
            0.5 / command.dt
        )));
    }

    let t_first = command.start;
    let t_last = command.time(command.len() - 1);
    let mut curve = BodeCurve::default();
    for f in log_spaced(options.f_low, options.f_high, options.n_bins) {
        let centre = chirp.time_at_frequency(f);
        let half = 0.5 * (options.window_cycles / f).max(options.min_window);
        let (a, b) = ((centre - half).max(t_first), (centre + half).min(t_last));
        let cycles = if b > a {
            (chirp.phase(b) - chirp.phase(a)) / (2.0 * PI)
        } else {
            0.0
        };
        if cycles < options.min_cycles - 1e-9 {
            curve.dropped.push(DroppedBin {
                frequency: f,
                reason: format!("window holds {cycles:.2} cycles"),
            });
            continue;
        }
        let lo = ((a - t_first) / command.dt).ceil() as usize;
        let hi = (((b - t_first) / command.dt).floor() as usize + 1).min(command.len());
        let (a_cmd, th_cmd) = sine_fit(command, chirp, lo, hi)?;
        let (a_resp, th_resp) = sine_fit(response, chirp, lo, hi)?;
        if !(a_cmd > 0.0) {
            curve.dropped.push(DroppedBin {
                frequency: f,
                reason: "command has no component at this frequency".into(),
            });
            continue;
        }
        let phase = wrap_pi(th_resp - th_cmd).to_degrees();
        let phase = match curve.phase_deg.last() {
            Some(&prev) => phase + 360.0 * ((prev - phase) / 360.0).round(),
            None => phase,
        };
        curve
            .frequency
            .push(chirp.instantaneous_frequency(0.5 * (a + b)));
        curve.magnitude_db.push(20.0 * (a_resp / a_cmd).log10());
        curve.phase_deg.push(phase);
        curve.cycles.push(cycles);
    }
    if curve.is_empty() {
        return Err(Error::InsufficientData("every Bode bin was dropped".into()));
    }
    Ok(curve)
}
