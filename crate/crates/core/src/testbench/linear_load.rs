use std::f64::consts::PI;

use super::{ChirpSpec, EventTag, RigConfig, RigMode, SimTrace, TraceEvent};
use crate::error::{Error, Result};
use crate::pulley::EfficiencyTable;
use crate::wire::{self, WireModelKind, WireState};

/// Pretension that makes the mean load-side tension equal the load's weight,
/// so the free load oscillates about its starting point instead of drifting
/// onto a stroke stop.
pub fn balanced_pretension(config: &RigConfig, chirp: &ChirpSpec, chain_efficiency: f64) -> f64 {
    (config.load_mass * config.gravity / chain_efficiency - chirp.offset()).max(0.0)
}

/// Strain at which the wire statically carries `tension`.
fn static_strain(model: WireModelKind, config: &RigConfig, tension: f64) -> (f64, f64) {
    let w = &config.wire;
    match model {
        WireModelKind::KelvinVoigt => (tension / w.axial_stiffness, 0.0),
        WireModelKind::FourElement => {
            let internal = tension / w.axial_stiffness;
            (internal + tension / w.secondary_stiffness, internal)
        }
    }
}

/// Time-domain run of the winding module pulling the loading unit through
/// the pulley chain while the tension command follows `chirp`.
///
/// State: winding-drum take-up `x_m` (reflected mass `motor_mass`), load
/// height `x` (free mode only), servo force, and the wire's internal strain.
/// Integration is semi-implicit Euler: velocities first, then positions.
pub fn run_linear_load(
    config: &RigConfig,
    chirp: &ChirpSpec,
    table: &EfficiencyTable,
) -> Result<SimTrace> {
    let free = match config.mode {
        RigMode::LinearLoadFree => true,
        RigMode::LinearLoadFixed => false,
        other => {
            return Err(Error::contract(format!(
                "run_linear_load needs a linear-load mode, got {other:?}"
            )))
        }
    };
    config.validate()?;
    chirp.validate()?;

    let chain = if config.pulley_chain.is_empty() {
        1.0
    } else {
        config.chain_efficiency(table, chirp.offset())?
    };
    let dt = config.dt;
    let steps = (chirp.duration.min(config.duration) / dt).round() as usize;
    let servo_gain = config
        .servo_bandwidth_hz
        .map(|bw| 1.0 - (-2.0 * PI * bw * dt).exp())
        .unwrap_or(1.0);
    let blowup = 10.0 * config.motor_max_tension;
    let model = config.wire_model;
    let spec = &config.wire;
    let m_load = config.load_mass;
    let weight = m_load * config.gravity;

    // start in static equilibrium with the initial command
    let mut servo = chirp.value(0.0) + config.pretension;
    let (strain0, internal0) = static_strain(model, config, servo);
    let span = config.wire_length;
    let geometric0 = span * (1.0 + strain0);
    let mut state = WireState {
        internal_strain: internal0,
        ..WireState::at_rest(span)
    };
    let (mut x_m, mut v_m) = (0.0_f64, 0.0_f64);
    let (mut x, mut v) = (0.0_f64, 0.0_f64);
    let mut was_taut = servo > 0.0;

    let mut trace = SimTrace::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let command = chirp.value(t);

        state.natural_length = span - x_m;
        state.stretched_length = geometric0 - x;
        let natural_rate = -v_m;
        let stretched_rate = -v;
        state.strain_rate = (stretched_rate * state.natural_length
            - state.stretched_length * natural_rate)
            / (state.natural_length * state.natural_length);

        let t_in = wire::tension(model, spec, &state);
        let t_out = chain * t_in;
        if !t_in.is_finite() || t_in.abs() > blowup {
            return Err(Error::NumericalInstability {
                time: t,
                detail: format!("wire tension {t_in} N exceeds {blowup} N"),
            });
        }
        // an unstable drum usually escapes into slack instead of tension
        if !(x_m.abs() < span) {
            return Err(Error::NumericalInstability {
                time: t,
                detail: format!("drum travel {x_m} m exceeds the {span} m wire span"),
            });
        }
        let taut = t_in > 0.0;
        if was_taut && !taut {
            trace.events.push(TraceEvent {
                time: t,
                tag: EventTag::SlackOnset,
            });
        }
        was_taut = taut;

        trace.time.push(t);
        trace.commanded_tension.push(command);
        trace.actual_tension_in.push(t_in);
        trace.actual_tension_out.push(t_out);
        trace.load_position.push(x);
        trace.load_velocity.push(v);
        trace.wire_total_length.push(state.stretched_length);
        if k == steps {
            break;
        }

        let a_m = (servo - t_in - config.motor_damping * v_m) / config.motor_mass;
        v_m += a_m * dt;
        x_m += v_m * dt;
        if free {
            let a = (t_out - weight - config.load_damping * v) / m_load;
            v += a * dt;
            x += v * dt;
            if x > config.stroke_limit {
                x = config.stroke_limit;
                v = 0.0;
                trace.events.push(TraceEvent {
                    time: (k + 1) as f64 * dt,
                    tag: EventTag::StrokeUpper,
                });
            } else if x < -config.stroke_limit {
                x = -config.stroke_limit;
                v = 0.0;
                trace.events.push(TraceEvent {
                    time: (k + 1) as f64 * dt,
                    tag: EventTag::StrokeLower,
                });
            }
        }
        state = wire::step_internal(model, spec, &state, dt)?;
        let target = chirp.value(t + dt) + config.pretension;
        servo += servo_gain * (target - servo);
    }
    Ok(trace)
}
