use proptest::prelude::*;
use wirebench_core::catalog;
use wirebench_core::pulley::{
    build_eta_matrix, EfficiencyTable, EtaMatrix, PulleySpec, SyntheticLossModel,
};
use wirebench_core::qp::TensionWeights;
use wirebench_core::testbench::{
    balanced_pretension, run_efficiency_rig, run_force_control, run_linear_load, ChirpSpec,
    EventTag, ForceRamp, PlantNoise, RigConfig, RigMode,
};

fn table() -> EfficiencyTable {
    SyntheticLossModel::default()
        .table(
            &catalog::efficiency_rig_wires(),
            &PulleySpec::RIG_DIAMETERS_MM,
            &[200.0, 400.0],
        )
        .unwrap()
}

fn short_chirp(duration: f64) -> ChirpSpec {
    ChirpSpec {
        duration,
        ..Default::default()
    }
}

#[test]
fn linear_load_is_deterministic() {
    let t = table();
    let cfg = RigConfig {
        mode: RigMode::LinearLoadFree,
        pretension: 5.0,
        ..Default::default()
    };
    let c = short_chirp(8.0);
    let a = run_linear_load(&cfg, &c, &t).unwrap();
    let b = run_linear_load(&cfg, &c, &t).unwrap();
    assert_eq!(a, b);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn trace_sequences_line_up() {
    let cfg = RigConfig::default();
    let tr = run_linear_load(&cfg, &short_chirp(2.0), &table()).unwrap();
    let n = tr.len();
    assert_eq!(n, 4001);
    for s in [
        &tr.commanded_tension,
        &tr.actual_tension_in,
        &tr.actual_tension_out,
        &tr.load_position,
        &tr.load_velocity,
        &tr.wire_total_length,
    ] {
        assert_eq!(s.len(), n);
    }
    for k in 1..n {
        assert!(tr.time[k] > tr.time[k - 1]);
        assert!((tr.time[k] - tr.time[k - 1] - cfg.dt).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stroke_is_never_exceeded(
        mass in 2.0f64..20.0,
        pretension in 0.0f64..100.0,
        stroke in 0.05f64..0.5,
    ) {
        let cfg = RigConfig {
            mode: RigMode::LinearLoadFree,
            load_mass: mass,
            pretension,
            stroke_limit: stroke,
            load_damping: 0.0,
            ..Default::default()
        };
        let tr = run_linear_load(&cfg, &short_chirp(4.0), &table()).unwrap();
        for k in 0..tr.len() {
            let x = tr.load_position[k];
            prop_assert!(x.abs() <= stroke);
            if k > 0 && x.abs() == stroke && tr.load_velocity[k] == 0.0 {
                let tag = if x > 0.0 { EventTag::StrokeUpper } else { EventTag::StrokeLower };
                prop_assert!(tr.events.iter().any(|e| e.time == tr.time[k] && e.tag == tag));
            }
        }
        let clamps = tr.events.iter().filter(|e| e.tag != EventTag::SlackOnset).count();
        let pinned = (1..tr.len())
            .filter(|&k| tr.load_position[k].abs() == stroke && tr.load_velocity[k] == 0.0)
            .count();
        prop_assert_eq!(clamps, pinned);
    }

    #[test]
    fn efficiency_rig_only_attenuates(
        seed in any::<u64>(),
        noise in 0.0f64..0.05,
        d in 0usize..8,
    ) {
        let cfg = RigConfig {
            mode: RigMode::EfficiencyRig,
            pulley_chain: vec![PulleySpec::new(PulleySpec::RIG_DIAMETERS_MM[d]).unwrap(); 2],
            seed,
            ..Default::default()
        };
        let s = run_efficiency_rig(&cfg, &table(), &[200.0, 400.0], 20, noise).unwrap();
        prop_assert!(s.iter().all(|&(a, b)| b <= a && b > 0.0));
    }
}

/// Per step, the load's mechanical energy grows by no more than the wire
/// does work on it.
#[test]
fn free_load_energy_is_bounded_by_wire_work() {
    let chirp = short_chirp(10.0);
    let mut cfg = RigConfig {
        mode: RigMode::LinearLoadFree,
        pulley_chain: vec![],
        servo_bandwidth_hz: None,
        load_damping: 0.0,
        ..Default::default()
    };
    cfg.pretension = balanced_pretension(&cfg, &chirp, 1.0);
    let tr = run_linear_load(&cfg, &chirp, &EfficiencyTable::default()).unwrap();
    assert!(tr.events.is_empty(), "{:?}", &tr.events[..1]);
    let (m, g, dt) = (cfg.load_mass, cfg.gravity, cfg.dt);
    let energy = |k: usize| 0.5 * m * tr.load_velocity[k].powi(2) + m * g * tr.load_position[k];
    for k in 0..tr.len() - 1 {
        let de = (energy(k + 1) - energy(k)) / dt;
        let l_dot = (tr.wire_total_length[k + 1] - tr.wire_total_length[k]) / dt;
        let bound = tr.actual_tension_out[k] * l_dot.abs() + 1e-9;
        assert!(de <= bound, "step {k}: {de} > {bound}");
    }
}

#[test]
fn fixed_mode_resonates_near_six_hertz() {
    use wirebench_core::analysis::{estimate_bode, BodeOptions, TimeSeries};
    let t = table();
    let chirp = ChirpSpec::default();
    let cfg = RigConfig {
        pretension: 100.0,
        ..Default::default()
    };
    let tr = run_linear_load(&cfg, &chirp, &t).unwrap();
    assert!(tr.events.is_empty());
    let b = estimate_bode(
        &TimeSeries::new(0.0, cfg.dt, tr.commanded_tension),
        &TimeSeries::new(0.0, cfg.dt, tr.actual_tension_out),
        &chirp,
        &BodeOptions::default(),
    )
    .unwrap();
    let p = b.peak().unwrap();
    assert!((5.0..=7.0).contains(&b.frequency[p]), "{}", b.frequency[p]);
    assert!(b.magnitude_db[p] >= 3.0);
}

fn force_run(
    eta: &EtaMatrix,
    plant: &EtaMatrix,
    compensate: bool,
    seed: u64,
) -> wirebench_core::testbench::ForceControlTrace {
    run_force_control(
        &catalog::reference_robot(),
        &catalog::reference_posture(),
        eta,
        plant,
        &ForceRamp::default(),
        compensate,
        &TensionWeights::default(),
        &PlantNoise {
            relative_sd: 0.002,
            seed,
        },
    )
    .unwrap()
}

#[test]
fn lossless_plant_realizes_the_command() {
    let ones = EtaMatrix::lossless(4, 2);
    let tr = force_run(&ones, &ones, false, 3);
    assert!(tr.rmse < 0.5, "{}", tr.rmse);
}

#[test]
fn exact_belief_compensation() {
    let r = catalog::reference_robot();
    let e = table()
        .lookup(catalog::VECTRAN_1MM, 12.0, 200.0)
        .unwrap()
        .efficiency;
    let eta = build_eta_matrix(r.pulley_counts(), e).unwrap();
    for seed in 0..5 {
        let on = force_run(&eta, &eta, true, seed).rmse;
        let off = force_run(&eta, &eta, false, seed).rmse;
        assert!(on <= 0.5, "{on}");
        assert!(off > on);
    }
}

#[test]
fn lossless_belief_degenerates_bit_for_bit() {
    let r = catalog::reference_robot();
    let plant = build_eta_matrix(r.pulley_counts(), 0.98).unwrap();
    let ones = EtaMatrix::lossless(4, 2);
    assert_eq!(
        force_run(&ones, &plant, true, 9),
        force_run(&ones, &plant, false, 9)
    );
}
