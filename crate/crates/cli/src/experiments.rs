//! The five subcommands. Each returns its data alongside the report so the
//! results can be checked without parsing files.

use std::fmt::Write as _;

use anyhow::Context;
use nalgebra::DVector;
use wirebench_core::analysis::{
    estimate_bode, BodeCurve, BodeOptions, ExperimentReport, TimeSeries,
};
use wirebench_core::catalog;
use wirebench_core::pulley::{
    build_eta_matrix, ingest_efficiency_trials, EfficiencyEntry, EfficiencyTable, Provenance,
    PulleySpec, SyntheticLossModel,
};
use wirebench_core::qp::{solve_tension, solve_tension_compensated, TensionDistribution};
use wirebench_core::routing::joint_torque_from_force;
use wirebench_core::testbench::{
    balanced_pretension, derive_seed, run_efficiency_rig, run_force_control, run_linear_load,
    scale_loss, ForceControlTrace, PlantNoise, RigConfig, RigMode, SimTrace,
};
use wirebench_core::wire::creep_elongation;

use crate::scenario::{load_robot, Scenario};
use crate::{config_hash, Compensate, ConfigError, Outputs};

fn report_for(name: &str, s: &Scenario) -> ExperimentReport {
    ExperimentReport::new(name, config_hash(s), s.seed)
}

fn synthetic_all_wires(s: &Scenario) -> anyhow::Result<EfficiencyTable> {
    Ok(SyntheticLossModel::default().table(
        &catalog::all_wires(),
        &PulleySpec::RIG_DIAMETERS_MM,
        &s.efficiency.tensions_n,
    )?)
}

fn wire(name: &str) -> anyhow::Result<wirebench_core::WireSpec> {
    catalog::wire_by_name(name).ok_or_else(|| ConfigError(format!("unknown wire '{name}'")).into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRow {
    pub wire: String,
    pub pulley_diameter_mm: f64,
    pub tension_n: f64,
    pub mean: f64,
    pub std_dev: f64,
    /// Mean of `1 - T_out / T_in` across the two-pulley chain.
    pub loss_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneVerdict {
    pub wire: String,
    pub tension_n: f64,
    pub non_decreasing: bool,
}

pub struct EfficiencyOutcome {
    pub input: EfficiencyTable,
    pub recovered: EfficiencyTable,
    pub rows: Vec<EfficiencyRow>,
    pub verdicts: Vec<MonotoneVerdict>,
    pub report: ExperimentReport,
}

pub fn efficiency(s: &Scenario, out: &mut Outputs) -> anyhow::Result<EfficiencyOutcome> {
    let cfg = &s.efficiency;
    let wires = cfg
        .wires
        .iter()
        .map(|w| wire(w))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let input = match &cfg.table {
        Some(path) => {
            let f = std::fs::File::open(path)
                .map_err(|e| ConfigError(format!("efficiency.table {}: {e}", path.display())))?;
            EfficiencyTable::read_csv(f)?
        }
        None => SyntheticLossModel::default().table(&wires, &cfg.diameters_mm, &cfg.tensions_n)?,
    };

    let mut rows = Vec::new();
    let mut trials_csv = String::from("wire,pulley_diameter_mm,tension_n,trial,t_in_n,t_out_n\n");
    let mut entries = Vec::new();
    let mut index = 0u64;
    for w in &wires {
        for &d in &cfg.diameters_mm {
            for &t in &cfg.tensions_n {
                let rig = RigConfig {
                    mode: RigMode::EfficiencyRig,
                    pulley_chain: vec![PulleySpec::new(d)?; 2],
                    wire: w.clone(),
                    seed: derive_seed(s.seed, index),
                    ..Default::default()
                };
                index += 1;
                let trials = run_efficiency_rig(&rig, &input, &[t], cfg.trials, cfg.noise)?;
                for (k, (a, b)) in trials.iter().enumerate() {
                    let _ = writeln!(trials_csv, "{},{d},{t},{k},{a},{b}", w.name);
                }
                let summary = ingest_efficiency_trials(&trials, 2)?;
                let loss =
                    trials.iter().map(|(a, b)| 1.0 - b / a).sum::<f64>() / trials.len() as f64;
                // reported to the table's 1e-9 resolution
                let mean = (summary.mean * 1e9).round() / 1e9;
                rows.push(EfficiencyRow {
                    wire: w.name.clone(),
                    pulley_diameter_mm: d,
                    tension_n: t,
                    mean,
                    std_dev: summary.std_dev,
                    loss_ratio: loss,
                });
                entries.push(EfficiencyEntry {
                    wire: w.name.clone(),
                    pulley_diameter_mm: d,
                    tension_n: t,
                    efficiency: mean,
                    provenance: Provenance::Simulated,
                });
            }
        }
    }
    let recovered = EfficiencyTable::from_entries(entries)?;

    let mut verdicts = Vec::new();
    for w in &wires {
        for &t in &cfg.tensions_n {
            let mut series: Vec<&EfficiencyRow> = rows
                .iter()
                .filter(|r| r.wire == w.name && r.tension_n == t)
                .collect();
            series.sort_by(|a, b| a.pulley_diameter_mm.total_cmp(&b.pulley_diameter_mm));
            verdicts.push(MonotoneVerdict {
                wire: w.name.clone(),
                tension_n: t,
                non_decreasing: series.windows(2).all(|p| p[1].mean >= p[0].mean),
            });
        }
    }

    let mut table_csv = Vec::new();
    recovered.write_csv(&mut table_csv)?;
    let mut summary_csv = String::from(
        "wire,pulley_diameter_mm,tension_n,mean_efficiency,sd_efficiency,loss_ratio\n",
    );
    for r in &rows {
        let _ = writeln!(
            summary_csv,
            "{},{},{},{},{},{}",
            r.wire, r.pulley_diameter_mm, r.tension_n, r.mean, r.std_dev, r.loss_ratio
        );
    }
    let mut mono_csv = String::from("wire,tension_n,non_decreasing_in_diameter\n");
    for v in &verdicts {
        let _ = writeln!(mono_csv, "{},{},{}", v.wire, v.tension_n, v.non_decreasing);
    }

    let mut report = report_for("efficiency", s);
    let smallest = cfg
        .diameters_mm
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let at_smallest: Vec<f64> = rows
        .iter()
        .filter(|r| r.pulley_diameter_mm == smallest)
        .map(|r| r.loss_ratio)
        .collect();
    let lo = at_smallest.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = at_smallest
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let src = format!("efficiency_summary.csv @ {smallest} mm");
    report.metric(&src, "min_two_pulley_loss_ratio", lo, "");
    report.metric(&src, "max_two_pulley_loss_ratio", hi, "");
    for v in &verdicts {
        report.notes.push(format!(
            "{} @ {} N: efficiency non-decreasing in pulley diameter: {}",
            v.wire,
            v.tension_n,
            if v.non_decreasing { "PASS" } else { "FAIL" }
        ));
    }
    for w in recovered.monotonicity_warnings(&wires) {
        report.notes.push(format!("warning: {w:?}"));
    }
    report
        .artifacts
        .push(out.write("efficiency_table.csv", &table_csv)?);
    report
        .artifacts
        .push(out.write("efficiency_summary.csv", summary_csv.as_bytes())?);
    report
        .artifacts
        .push(out.write("efficiency_monotonicity.csv", mono_csv.as_bytes())?);
    report
        .artifacts
        .push(out.write("efficiency_trials.csv", trials_csv.as_bytes())?);
    Ok(EfficiencyOutcome {
        input,
        recovered,
        rows,
        verdicts,
        report,
    })
}

pub struct RigRun {
    pub pretension: f64,
    pub bode: BodeCurve,
    pub trace: SimTrace,
}

pub struct FreqResponseOutcome {
    pub fixed: RigRun,
    pub free: RigRun,
    pub report: ExperimentReport,
}

fn decimated(trace: &SimTrace, every: usize) -> SimTrace {
    let pick = |v: &Vec<f64>| v.iter().step_by(every).copied().collect::<Vec<_>>();
    SimTrace {
        time: pick(&trace.time),
        commanded_tension: pick(&trace.commanded_tension),
        actual_tension_in: pick(&trace.actual_tension_in),
        actual_tension_out: pick(&trace.actual_tension_out),
        load_position: pick(&trace.load_position),
        load_velocity: pick(&trace.load_velocity),
        wire_total_length: pick(&trace.wire_total_length),
        events: trace.events.clone(),
    }
}

/// First frequency at which the phase falls through −90°, interpolated.
pub fn phase_crossing(b: &BodeCurve, level: f64) -> Option<f64> {
    (1..b.len()).find_map(|k| {
        let (p0, p1) = (b.phase_deg[k - 1], b.phase_deg[k]);
        (p0 > level && p1 <= level).then(|| {
            let w = (p0 - level) / (p0 - p1);
            b.frequency[k - 1] + w * (b.frequency[k] - b.frequency[k - 1])
        })
    })
}

pub fn freq_response(s: &Scenario, out: &mut Outputs) -> anyhow::Result<FreqResponseOutcome> {
    let table = synthetic_all_wires(s)?;
    let options = BodeOptions {
        f_low: s.chirp.f_low,
        f_high: s.chirp.f_high,
        n_bins: s.freq_response.n_bins,
        ..Default::default()
    };
    let run = |mode: RigMode| -> anyhow::Result<RigRun> {
        let mut cfg = RigConfig {
            mode,
            ..s.rig.clone()
        };
        cfg.pretension = match (mode, s.freq_response.free_pretension) {
            (RigMode::LinearLoadFree, Some(p)) => p,
            (RigMode::LinearLoadFree, None) => {
                let chain = cfg.chain_efficiency(&table, s.chirp.offset())?;
                balanced_pretension(&cfg, &s.chirp, chain)
            }
            _ => s.freq_response.fixed_pretension,
        };
        let trace =
            run_linear_load(&cfg, &s.chirp, &table).with_context(|| format!("{mode:?} run"))?;
        let bode = estimate_bode(
            &TimeSeries::new(0.0, cfg.dt, trace.commanded_tension.clone()),
            &TimeSeries::new(0.0, cfg.dt, trace.actual_tension_out.clone()),
            &s.chirp,
            &options,
        )?;
        Ok(RigRun {
            pretension: cfg.pretension,
            bode,
            trace,
        })
    };
    let fixed = run(RigMode::LinearLoadFixed)?;
    let free = run(RigMode::LinearLoadFree)?;

    let mut report = report_for("freq-response", s);
    for (label, r) in [("fixed", &fixed), ("free", &free)] {
        let src = format!("bode_{label}.csv");
        let b = &r.bode;
        let p = b.peak().expect("estimate_bode returns at least one bin");
        report.metric(&src, "pretension", r.pretension, "N");
        report.metric(&src, "low_frequency", b.frequency[0], "Hz");
        report.metric(&src, "low_frequency_magnitude", b.magnitude_db[0], "dB");
        report.metric(&src, "peak_magnitude", b.magnitude_db[p], "dB");
        report.metric(&src, "peak_frequency", b.frequency[p], "Hz");
        if let Some(f) = phase_crossing(b, -90.0) {
            report.metric(&src, "phase_minus_90_crossing", f, "Hz");
        }
        report.metric(
            &format!("trace_{label}"),
            "events",
            r.trace.events.len() as f64,
            "",
        );
        for d in &b.dropped {
            report.notes.push(format!(
                "{label}: bin {:.3} Hz dropped ({})",
                d.frequency, d.reason
            ));
        }
    }
    report.metric(
        "bode_free.csv - bode_fixed.csv",
        "low_frequency_magnitude_difference",
        free.bode.magnitude_db[0] - fixed.bode.magnitude_db[0],
        "dB",
    );

    for (label, r) in [("fixed", &fixed), ("free", &free)] {
        let mut buf = Vec::new();
        r.bode.write_csv(&mut buf)?;
        report
            .artifacts
            .push(out.write(&format!("bode_{label}.csv"), &buf)?);
        let every = s.freq_response.trace_decimation;
        if every > 0 {
            let mut buf = Vec::new();
            decimated(&r.trace, every).write_csv(&mut buf)?;
            report
                .artifacts
                .push(out.write(&format!("trace_{label}.csv"), &buf)?);
        }
        let mut ev = String::from("t,event\n");
        for e in &r.trace.events {
            let _ = writeln!(ev, "{},{}", e.time, e.tag.as_str());
        }
        report
            .artifacts
            .push(out.write(&format!("events_{label}.csv"), ev.as_bytes())?);
    }
    Ok(FreqResponseOutcome {
        fixed,
        free,
        report,
    })
}

pub struct PrestretchOutcome {
    /// (hours, elongation m)
    pub schedule: Vec<(f64, f64)>,
    /// Elongation after 12 h at 510 N on 8.2 m under the active parameters.
    pub datum: f64,
    pub datum_matched: bool,
    pub report: ExperimentReport,
}

pub fn prestretch(s: &Scenario, out: &mut Outputs) -> anyhow::Result<PrestretchOutcome> {
    let p = &s.prestretch;
    let steps = (p.hours * 60.0 / p.step_minutes).round() as usize;
    let mut schedule = Vec::with_capacity(steps + 1);
    let mut csv = String::from("time_h,elongation_m,length_m\n");
    for k in 0..=steps {
        let hours = (k as f64 * p.step_minutes / 60.0).min(p.hours);
        let d = creep_elongation(p.tension_n, hours * 3600.0, p.initial_length_m, &p.creep)?;
        let _ = writeln!(csv, "{hours},{d},{}", p.initial_length_m + d);
        schedule.push((hours, d));
    }
    let datum = creep_elongation(510.0, 12.0 * 3600.0, 8.2, &p.creep)?;
    let datum_matched = (datum - 0.40).abs() <= 1e-3;

    let mut report = report_for("prestretch", s);
    let (h, d) = *schedule.last().expect("schedule has its start point");
    report.metric("prestretch_schedule.csv", "final_time", h, "h");
    report.metric("prestretch_schedule.csv", "final_elongation", d, "m");
    report.metric("creep parameters", "elongation_510N_12h_8.2m", datum, "m");
    report.notes.push(format!(
        "reference datum (0.40 m after 12 h at 510 N on 8.2 m) matched: {}",
        if datum_matched { "yes" } else { "no" }
    ));
    report
        .artifacts
        .push(out.write("prestretch_schedule.csv", csv.as_bytes())?);
    Ok(PrestretchOutcome {
        schedule,
        datum,
        datum_matched,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceRun {
    pub repetition: usize,
    pub seed: u64,
    pub plant: String,
    pub compensate: bool,
    pub rmse: f64,
}

pub struct ForceControlOutcome {
    pub runs: Vec<ForceRun>,
    /// (repetition, plant, (off − on) / off)
    pub reductions: Vec<(usize, String, f64)>,
    pub report: ExperimentReport,
}

impl ForceControlOutcome {
    pub fn rmse(&self, rep: usize, plant: &str, compensate: bool) -> Option<f64> {
        self.runs
            .iter()
            .find(|r| r.repetition == rep && r.plant == plant && r.compensate == compensate)
            .map(|r| r.rmse)
    }
}

fn force_trace_csv(tr: &ForceControlTrace) -> String {
    let m = tr.tensions.first().map_or(0, |t| t.len());
    let mut s = String::from("t,cmd_fx_n,cmd_fy_n,fx_n,fy_n");
    for i in 0..m {
        let _ = write!(s, ",t{i}_n");
    }
    s.push('\n');
    for k in 0..tr.time.len() {
        let (c, r) = (tr.commanded[k], tr.realized[k]);
        let _ = write!(s, "{},{},{},{},{}", tr.time[k], c[0], c[1], r[0], r[1]);
        for t in tr.tensions[k].iter() {
            let _ = write!(s, ",{t}");
        }
        s.push('\n');
    }
    s
}

pub fn force_control(
    s: &Scenario,
    compensate: Compensate,
    out: &mut Outputs,
) -> anyhow::Result<ForceControlOutcome> {
    let fc = &s.force_control;
    let robot = load_robot(fc.robot.as_ref())?;
    let q = fc
        .posture
        .clone()
        .map(DVector::from_vec)
        .unwrap_or_else(catalog::reference_posture);
    let table = synthetic_all_wires(s)?;
    let e = table
        .lookup(&fc.wire, fc.pulley_diameter_mm, fc.table_tension_n)?
        .efficiency;
    let counts = robot.pulley_counts();
    let belief = build_eta_matrix(counts, e)?;
    let plants = [
        ("belief".to_owned(), 1.0),
        (
            format!("loss_x{}", 1.0 - fc.perturbation),
            1.0 - fc.perturbation,
        ),
        (
            format!("loss_x{}", 1.0 + fc.perturbation),
            1.0 + fc.perturbation,
        ),
    ];

    let mut runs = Vec::new();
    let mut reductions = Vec::new();
    let mut traces = Vec::new();
    for rep in 0..fc.repetitions {
        let seed = derive_seed(s.seed, rep as u64);
        let noise = PlantNoise {
            relative_sd: fc.noise,
            seed,
        };
        for (name, factor) in &plants {
            let plant = scale_loss(counts, e, *factor)?;
            for &c in compensate.modes() {
                let tr = run_force_control(
                    &robot,
                    &q,
                    &belief,
                    &plant,
                    &fc.ramp,
                    c,
                    &fc.tension,
                    &noise,
                )?;
                runs.push(ForceRun {
                    repetition: rep,
                    seed,
                    plant: name.clone(),
                    compensate: c,
                    rmse: tr.rmse,
                });
                if rep == 0 && *factor == 1.0 {
                    traces.push((c, tr));
                }
            }
        }
    }
    if compensate == Compensate::Both {
        for rep in 0..fc.repetitions {
            for (name, _) in &plants {
                let find = |c: bool| {
                    runs.iter()
                        .find(|r| r.repetition == rep && &r.plant == name && r.compensate == c)
                        .map(|r| r.rmse)
                        .expect("both modes ran")
                };
                let (off, on) = (find(false), find(true));
                reductions.push((
                    rep,
                    name.clone(),
                    wirebench_core::analysis::percentage_reduction(off, on),
                ));
            }
        }
    }

    let mut csv = String::from("repetition,seed,plant,compensate,rmse_n\n");
    for r in &runs {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.repetition,
            r.seed,
            r.plant,
            if r.compensate { "on" } else { "off" },
            r.rmse
        );
    }
    let mut red_csv = String::from("repetition,plant,reduction\n");
    for (rep, plant, red) in &reductions {
        let _ = writeln!(red_csv, "{rep},{plant},{red}");
    }

    let mut report = report_for("force-control", s);
    report.metric("belief", "per_pulley_efficiency", e, "");
    for (name, _) in &plants {
        for &c in compensate.modes() {
            let v: Vec<f64> = runs
                .iter()
                .filter(|r| &r.plant == name && r.compensate == c)
                .map(|r| r.rmse)
                .collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let label = if c { "on" } else { "off" };
            report.metric(
                &format!("force_control_runs.csv plant={name}"),
                &format!("mean_rmse_{label}"),
                mean,
                "N",
            );
        }
        let r: Vec<f64> = reductions
            .iter()
            .filter(|x| &x.1 == name)
            .map(|x| x.2)
            .collect();
        if !r.is_empty() {
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            report.metric(
                &format!("force_control_reduction.csv plant={name}"),
                "mean_reduction",
                100.0 * mean,
                "%",
            );
            let positive = r.iter().filter(|&&x| x > 0.0).count();
            report.notes.push(format!(
                "plant {name}: reduction positive in {positive} of {} repetitions",
                r.len()
            ));
        }
    }
    report
        .artifacts
        .push(out.write("force_control_runs.csv", csv.as_bytes())?);
    if !reductions.is_empty() {
        report
            .artifacts
            .push(out.write("force_control_reduction.csv", red_csv.as_bytes())?);
    }
    for (c, tr) in &traces {
        let name = format!("force_control_trace_{}.csv", if *c { "on" } else { "off" });
        report
            .artifacts
            .push(out.write(&name, force_trace_csv(tr).as_bytes())?);
    }
    Ok(ForceControlOutcome {
        runs,
        reductions,
        report,
    })
}

pub struct SolveOutcome {
    pub solutions: Vec<(bool, TensionDistribution)>,
    pub report: ExperimentReport,
}

pub fn solve(
    s: &Scenario,
    compensate: Compensate,
    out: &mut Outputs,
) -> anyhow::Result<SolveOutcome> {
    let cfg = &s.solve;
    let robot = load_robot(cfg.robot.as_ref())?;
    let q = cfg
        .posture
        .clone()
        .map(DVector::from_vec)
        .unwrap_or_else(catalog::reference_posture);
    let pair = robot.jacobians(&q)?;
    let tau = joint_torque_from_force(&pair.j_r, &DVector::from_column_slice(&cfg.force))?;
    let lambda = cfg.tension.lambda_diag(robot.n_joints())?;
    let m = robot.m_wires();
    let t_min = robot.tension_min().map(|t| t.max(cfg.tension.t_min));
    let t_max = robot.tension_max().map(|t| t.min(cfg.tension.t_max));
    if t_min.iter().zip(t_max.iter()).any(|(a, b)| a > b) {
        return Err(ConfigError("solve.tension bounds do not overlap the robot's".into()).into());
    }
    let eta = build_eta_matrix(robot.pulley_counts(), cfg.eta_p)?;

    let mut solutions = Vec::new();
    let mut csv = String::from("compensate,wire,t_ref_n\n");
    let mut report = report_for("solve", s);
    for &c in compensate.modes() {
        let d = if c {
            solve_tension_compensated(
                &tau,
                &pair.g,
                &eta,
                &lambda,
                &t_min,
                &t_max,
                cfg.tension.tol,
            )?
        } else {
            solve_tension(&tau, &pair.g, &lambda, &t_min, &t_max, cfg.tension.tol)?
        };
        let label = if c { "on" } else { "off" };
        for i in 0..m {
            let _ = writeln!(
                csv,
                "{label},{},{}",
                robot.wires()[i].name,
                d.solution.t_ref[i]
            );
            report.metric(
                &format!("compensate={label}"),
                &format!("T_{}", robot.wires()[i].name),
                d.solution.t_ref[i],
                "N",
            );
        }
        for j in 0..robot.n_joints() {
            report.metric(
                &format!("compensate={label}"),
                &format!("tau_ref_{j}"),
                tau[j],
                "N m",
            );
            report.metric(
                &format!("compensate={label}"),
                &format!("tau_achieved_{j}"),
                d.achieved_torque[j],
                "N m",
            );
        }
        report.metric(
            &format!("compensate={label}"),
            "kkt_residual",
            d.solution.kkt_residual,
            "",
        );
        report.metric(
            &format!("compensate={label}"),
            "iterations",
            d.solution.iterations as f64,
            "",
        );
        solutions.push((c, d));
    }
    report
        .artifacts
        .push(out.write("solve.csv", csv.as_bytes())?);
    Ok(SolveOutcome { solutions, report })
}
