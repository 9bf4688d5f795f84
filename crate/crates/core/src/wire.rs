//! Constitutive laws for wire tension: Kelvin–Voigt and the four-element
//! (series spring + Kelvin–Voigt stage) model, both with a hard no-compression
//! clamp, plus logarithmic creep for pre-stretch simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulley::WireSpec;

/// Largest step accepted by [`step_internal`] (s).
pub const MAX_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireModelKind {
    KelvinVoigt,
    /// Series spring (`secondary_stiffness`) feeding a parallel
    /// spring/damper stage (`axial_stiffness`, `axial_damping`).
    FourElement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireState {
    /// Unloaded length, including accumulated plastic elongation (m).
    pub natural_length: f64,
    pub stretched_length: f64,
    pub strain_rate: f64,
    /// Strain carried by the spring/damper stage of the four-element model.
    pub internal_strain: f64,
    pub plastic_elongation: f64,
}

impl WireState {
    pub fn at_rest(natural_length: f64) -> Self {
        WireState {
            natural_length,
            stretched_length: natural_length,
            strain_rate: 0.0,
            internal_strain: 0.0,
            plastic_elongation: 0.0,
        }
    }

    pub fn strain(&self) -> f64 {
        (self.stretched_length - self.natural_length) / self.natural_length
    }

    pub fn is_slack(&self) -> bool {
        self.strain() <= 0.0
    }

    /// Moves creep into the natural length. Negative elongations are ignored
    /// so that plastic elongation never decreases.
    pub fn apply_plastic_elongation(&mut self, delta: f64) {
        if delta > 0.0 {
            self.natural_length += delta;
            self.plastic_elongation += delta;
        }
    }
}

pub fn tension(model: WireModelKind, spec: &WireSpec, state: &WireState) -> f64 {
    let strain = state.strain();
    if strain <= 0.0 {
        return 0.0;
    }
    match model {
        WireModelKind::KelvinVoigt => {
            (spec.axial_stiffness * strain + spec.axial_damping * state.strain_rate).max(0.0)
        }
        WireModelKind::FourElement => {
            (spec.secondary_stiffness * (strain - state.internal_strain)).max(0.0)
        }
    }
}

/// Relaxation time of the four-element stage, `c / (k1 + k2)`.
pub fn relaxation_time(spec: &WireSpec) -> f64 {
    spec.axial_damping / (spec.axial_stiffness + spec.secondary_stiffness)
}

/// Advances the four-element internal strain by one backward-Euler step at
/// the current total strain. Kelvin–Voigt has no internal state.
pub fn step_internal(
    model: WireModelKind,
    spec: &WireSpec,
    state: &WireState,
    dt: f64,
) -> Result<WireState> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(Error::contract(format!(
            "time step {dt} s outside (0, {MAX_STEP}]"
        )));
    }
    let mut next = *state;
    if model == WireModelKind::KelvinVoigt {
        return Ok(next);
    }
    let (k1, k2, c) = (
        spec.axial_stiffness,
        spec.secondary_stiffness,
        spec.axial_damping,
    );
    let strain = state.strain();
    let x = state.internal_strain;

    // c ẋ = k2 (ε - x) - k1 x while the series spring is taut
    let taut = if c > 0.0 {
        (x + dt / c * k2 * strain) / (1.0 + dt * (k1 + k2) / c)
    } else {
        k2 * strain / (k1 + k2)
    };
    next.internal_strain = if strain > 0.0 && taut < strain {
        taut
    } else if c > 0.0 {
        // series spring unloaded: the stage relaxes on its own
        x / (1.0 + dt * k1 / c)
    } else {
        0.0
    };
    Ok(next)
}

/// Coefficients of `Δ = α · L₀ · (T / T_ref) · ln(1 + t / t₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreepParams {
    pub alpha: f64,
    /// Time scale t₀ (s).
    pub time_scale: f64,
    /// Tension T_ref at which `alpha` applies (N).
    pub reference_tension: f64,
}

impl CreepParams {
    /// Fits `alpha` so that one observed (tension, duration, length,
    /// elongation) datum is reproduced exactly.
    pub fn fit(
        tension: f64,
        duration: f64,
        initial_length: f64,
        elongation: f64,
        time_scale: f64,
        reference_tension: f64,
    ) -> Result<Self> {
        if !(tension > 0.0 && duration > 0.0 && initial_length > 0.0 && time_scale > 0.0) {
            return Err(Error::domain(
                "creep calibration needs positive tension, duration, length and time scale",
            ));
        }
        let alpha = elongation
            / (initial_length * (tension / reference_tension) * (1.0 + duration / time_scale).ln());
        Ok(CreepParams {
            alpha,
            time_scale,
            reference_tension,
        })
    }

    /// 3 mm Dyneema: 510 N on 8.2 m for 12 h gives 0.40 m.
    pub fn dyneema() -> Self {
        Self::fit(510.0, 12.0 * 3600.0, 8.2, 0.40, 600.0, 510.0)
            .expect("constant calibration datum is valid")
    }
}

pub fn creep_elongation(
    tension: f64,
    duration: f64,
    initial_length: f64,
    params: &CreepParams,
) -> Result<f64> {
    if !(duration >= 0.0) {
        return Err(Error::contract(format!(
            "creep duration {duration} s is negative"
        )));
    }
    if !(tension >= 0.0) {
        return Err(Error::contract(format!(
            "creep tension {tension} N is negative"
        )));
    }
    if !(initial_length > 0.0) {
        return Err(Error::contract("initial length must be positive"));
    }
    Ok(params.alpha
        * initial_length
        * (tension / params.reference_tension)
        * (duration / params.time_scale).ln_1p())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kv_spec() -> WireSpec {
        WireSpec {
            name: "test".into(),
            diameter_mm: 1.0,
            axial_stiffness: 50_000.0,
            axial_damping: 200.0,
            secondary_stiffness: 150_000.0,
            rated_max_tension: 1000.0,
        }
    }

    fn state(strain: f64, rate: f64) -> WireState {
        WireState {
            natural_length: 2.0,
            stretched_length: 2.0 * (1.0 + strain),
            strain_rate: rate,
            internal_strain: 0.0,
            plastic_elongation: 0.0,
        }
    }

    #[test]
    fn rest_and_slack() {
        let s = kv_spec();
        assert_eq!(
            tension(WireModelKind::KelvinVoigt, &s, &state(0.0, 0.0)),
            0.0
        );
        for rate in [-1.0, 0.0, 5.0] {
            assert_eq!(
                tension(WireModelKind::KelvinVoigt, &s, &state(-0.01, rate)),
                0.0
            );
            assert_eq!(
                tension(WireModelKind::FourElement, &s, &state(-0.01, rate)),
                0.0
            );
        }
    }

    #[test]
    fn kelvin_voigt_hand_value() {
        let t = tension(WireModelKind::KelvinVoigt, &kv_spec(), &state(0.002, 0.01));
        assert!((t - 102.0).abs() < 1e-9);
    }

    #[test]
    fn kelvin_voigt_step_is_identity() {
        let st = state(0.003, 0.1);
        assert_eq!(
            step_internal(WireModelKind::KelvinVoigt, &kv_spec(), &st, 1e-3).unwrap(),
            st
        );
    }

    #[test]
    fn step_guards_dt() {
        let st = state(0.0, 0.0);
        assert!(matches!(
            step_internal(WireModelKind::FourElement, &kv_spec(), &st, 0.0),
            Err(Error::Contract(_))
        ));
        assert!(step_internal(WireModelKind::FourElement, &kv_spec(), &st, 2e-3).is_err());
    }

    #[test]
    fn four_element_relaxes_to_series_partition() {
        let s = kv_spec();
        let eps = 0.004;
        let tau = relaxation_time(&s);
        let dt = 1e-5;
        let mut st = state(eps, 0.0);
        let steps = (5.0 * tau / dt).ceil() as usize;
        for _ in 0..steps {
            st = step_internal(WireModelKind::FourElement, &s, &st, dt).unwrap();
        }
        // analytic: x(t) = x∞ (1 - exp(-t/τ))
        let x_inf = eps * s.secondary_stiffness / (s.axial_stiffness + s.secondary_stiffness);
        assert!((st.internal_strain - x_inf).abs() / x_inf < 0.01);
        // the series spring amplifies the remaining internal error by k2/k1
        for _ in 0..steps {
            st = step_internal(WireModelKind::FourElement, &s, &st, dt).unwrap();
        }
        let static_law = eps * s.axial_stiffness * s.secondary_stiffness
            / (s.axial_stiffness + s.secondary_stiffness);
        let t = tension(WireModelKind::FourElement, &s, &st);
        assert!((t - static_law).abs() / static_law < 0.01);
    }

    #[test]
    fn four_element_tracks_analytic_trajectory() {
        let s = kv_spec();
        let eps = 0.002;
        let tau = relaxation_time(&s);
        let x_inf = eps * s.secondary_stiffness / (s.axial_stiffness + s.secondary_stiffness);
        let dt = tau / 2000.0;
        let mut st = state(eps, 0.0);
        let mut t = 0.0;
        while t < 3.0 * tau {
            st = step_internal(WireModelKind::FourElement, &s, &st, dt).unwrap();
            t += dt;
            let exact = x_inf * (1.0 - (-t / tau).exp());
            assert!((st.internal_strain - exact).abs() < 2e-3 * x_inf);
        }
    }

    #[test]
    fn creep_zero_cases() {
        let p = CreepParams::dyneema();
        assert_eq!(creep_elongation(510.0, 0.0, 8.2, &p).unwrap(), 0.0);
        assert_eq!(creep_elongation(0.0, 3600.0, 8.2, &p).unwrap(), 0.0);
        assert!(matches!(
            creep_elongation(510.0, -1.0, 8.2, &p),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn creep_calibration_datum() {
        let d = creep_elongation(510.0, 12.0 * 3600.0, 8.2, &CreepParams::dyneema()).unwrap();
        assert!((d - 0.40).abs() < 1e-3, "{d}");
    }

    #[test]
    fn creep_moves_slack_boundary() {
        let s = kv_spec();
        let mut st = state(0.003, 0.0);
        let before = tension(WireModelKind::KelvinVoigt, &s, &st);
        let d =
            creep_elongation(300.0, 3600.0, st.natural_length, &CreepParams::dyneema()).unwrap();
        st.apply_plastic_elongation(d);
        let after = tension(WireModelKind::KelvinVoigt, &s, &st);
        assert!(after < before);
        assert_eq!(st.plastic_elongation, d);
        st.apply_plastic_elongation(-1.0);
        assert_eq!(st.plastic_elongation, d);
    }

    proptest! {
        #[test]
        fn tension_never_negative(
            strain in -0.05f64..0.05, rate in -10.0f64..10.0, internal in -0.05f64..0.05
        ) {
            let s = kv_spec();
            let mut st = state(strain, rate);
            st.internal_strain = internal;
            prop_assert!(tension(WireModelKind::KelvinVoigt, &s, &st) >= 0.0);
            prop_assert!(tension(WireModelKind::FourElement, &s, &st) >= 0.0);
        }

        #[test]
        fn kelvin_voigt_linear_on_taut_branch(
            e1 in 1e-4f64..0.01, e2 in 1e-4f64..0.01,
            r1 in -0.01f64..0.01, r2 in -0.01f64..0.01,
            a in 0.1f64..2.0, b in 0.1f64..2.0,
        ) {
            let s = kv_spec();
            let t1 = tension(WireModelKind::KelvinVoigt, &s, &state(e1, r1));
            let t2 = tension(WireModelKind::KelvinVoigt, &s, &state(e2, r2));
            let t12 = tension(WireModelKind::KelvinVoigt, &s, &state(a * e1 + b * e2, a * r1 + b * r2));
            let taut = |e: f64, r: f64| s.axial_stiffness * e + s.axial_damping * r > 0.0;
            if taut(e1, r1) && taut(e2, r2) && taut(a * e1 + b * e2, a * r1 + b * r2) {
                prop_assert!((t12 - (a * t1 + b * t2)).abs() < 1e-6 * (1.0 + t12.abs()));
            }
        }

        #[test]
        fn creep_monotone(t1 in 0.0f64..1000.0, dt in 0.0f64..500.0, d1 in 0.0f64..1e5, dd in 0.0f64..1e5) {
            let p = CreepParams::dyneema();
            let base = creep_elongation(t1, d1, 8.2, &p).unwrap();
            prop_assert!(creep_elongation(t1 + dt, d1, 8.2, &p).unwrap() >= base);
            prop_assert!(creep_elongation(t1, d1 + dd, 8.2, &p).unwrap() >= base);
        }
    }
}
