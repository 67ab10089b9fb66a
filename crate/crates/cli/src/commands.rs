use std::collections::BTreeMap;

use serde::Serialize;
use zlip_core::model::{propagate_planar, DomainId, DomainInputs, PlanarState};
use zlip_core::mpc::{build_problem, solve, AblationMode, MpcNow, MpcSolution};
use zlip_core::orbit::{find_period1_orbit, find_period2_orbit, ReferenceOrbit, StanceSide};
use zlip_core::sim::{
    push_envelope_sweep, recovery_metrics, run_scenario, ImpactRecord, Push, RecoveryMetrics, StepRecord,
    SweepTable, TrajectoryLog,
};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{log_rows, phase_plot, sweep_rows, velocity_plot, OutDir};

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

#[derive(Serialize)]
struct OrbitReport<'a> {
    config: &'a RunConfig,
    /// Sagittal period-1 fixed point at the OA pre-impact instant.
    xi_star: zlip_core::model::ZlipState,
    xi_star_left: zlip_core::model::ZlipState,
    xi_star_right: zlip_core::model::ZlipState,
    /// Nominal placements of a step onto the left / right foot.
    u_sw_left: [f64; 2],
    u_sw_right: [f64; 2],
    residual_sagittal: f64,
    residual_coronal: f64,
    iterations_sagittal: usize,
    iterations_coronal: usize,
    step_velocity_left: [f64; 2],
    step_velocity_right: [f64; 2],
}

#[derive(Serialize)]
struct OrbitRow {
    stance: StanceSide,
    domain: DomainId,
    instant: &'static str,
    p_x: f64,
    l_x: f64,
    zmp_x: f64,
    p_y: f64,
    l_y: f64,
    zmp_y: f64,
}

pub fn orbit(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let (cmd, params) = (cfg.command(), cfg.params());
    let p1 = find_period1_orbit(&cmd, &params)?;
    let p2 = find_period2_orbit(&cmd, &params)?;
    let orbit = ReferenceOrbit::compute(&cmd, &params)?;
    let report = OrbitReport {
        config: cfg,
        xi_star: orbit.xi_star,
        xi_star_left: orbit.xi_star_left,
        xi_star_right: orbit.xi_star_right,
        u_sw_left: orbit.nominal.left.inputs.u_sw,
        u_sw_right: orbit.nominal.right.inputs.u_sw,
        residual_sagittal: p1.residual,
        residual_coronal: p2.residual,
        iterations_sagittal: p1.iterations,
        iterations_coronal: p2.iterations,
        step_velocity_left: orbit.step_velocity_left,
        step_velocity_right: orbit.step_velocity_right,
    };
    println!(
        "xi* = (p {:.6}, L {:.6}, zmp {:.6})  residual {:.2e}",
        orbit.xi_star.p, orbit.xi_star.l, orbit.xi_star.p_zmp, p1.residual
    );
    for (name, x) in [("left", orbit.xi_star_left), ("right", orbit.xi_star_right)] {
        println!("xi*_{name} = (p {:.6}, L {:.6}, zmp {:.6})", x.p, x.l, x.p_zmp);
    }
    println!(
        "u*_left = {:?}  u*_right = {:?}  coronal residual {:.2e}",
        report.u_sw_left, report.u_sw_right, p2.residual
    );
    if cfg.wants(Format::Json) {
        out.write_json("orbit.json", "orbit", &report)?;
    }
    if cfg.wants(Format::Csv) {
        let mut rows = Vec::new();
        for stance in [StanceSide::Left, StanceSide::Right] {
            let block = orbit.block(stance);
            for d in DomainId::BLOCK_ORDER {
                for (instant, x) in [("post", block.post[d.block_index()]), ("pre", block.pre[d.block_index()])] {
                    rows.push(OrbitRow {
                        stance,
                        domain: d,
                        instant,
                        p_x: x.sagittal.p,
                        l_x: x.sagittal.l,
                        zmp_x: x.sagittal.p_zmp,
                        p_y: x.coronal.p,
                        l_y: x.coronal.l,
                        zmp_y: x.coronal.p_zmp,
                    });
                }
            }
        }
        out.write_csv("orbit.csv", &rows)?;
    }
    Ok(())
}

/// Planner input on the reference orbit shifted by the `[solve]` offsets.
pub fn solve_input(cfg: &RunConfig, orbit: &ReferenceOrbit) -> Result<MpcNow, CliError> {
    let s = &cfg.solve;
    let nominal = orbit.command.duration(s.domain);
    if s.t_passed > nominal {
        return Err(CliError::Config(format!(
            "[solve] t_passed {} exceeds the nominal {} duration {nominal}",
            s.t_passed, s.domain
        )));
    }
    let side = if s.domain == DomainId::Oa { s.stance.flip() } else { s.stance };
    let step = orbit.nominal.step(side);
    let mut x: PlanarState = propagate_planar(
        &orbit.block(side).post[s.domain.block_index()],
        &DomainInputs { zmp_rate: step.rate(s.domain), duration: s.t_passed },
        [0.0; 2],
        &orbit.params,
    )?;
    let z0 = orbit.params.z0;
    x.sagittal.p += s.dp[0];
    x.coronal.p += s.dp[1];
    x.sagittal.l += z0 * s.dv[0];
    x.coronal.l += z0 * s.dv[1];
    let mut now = MpcNow::from_state(x, s.domain, s.t_passed, s.stance);
    match s.domain {
        DomainId::Oa => now.u_sw_current = Some(step.inputs.u_sw),
        DomainId::Ua => now.step_elapsed = orbit.command.t_fa + s.t_passed,
        DomainId::Fa => {}
    }
    Ok(now)
}

#[derive(Serialize)]
struct Timing {
    repeats: usize,
    median_s: f64,
    max_s: f64,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    config: &'a RunConfig,
    status: zlip_core::mpc::MpcStatus,
    input: MpcNow,
    timing: Timing,
    solution: &'a MpcSolution,
}

pub fn solve_once(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let orbit = ReferenceOrbit::compute(&cfg.command(), &cfg.params())?;
    let now = solve_input(cfg, &orbit)?;
    let problem = build_problem(&now, &orbit, &cfg.mpc)?.apply_ablation(cfg.scenario.ablation);
    let mut times = Vec::with_capacity(cfg.solve.repeats);
    let mut solution = solve(&problem, None);
    times.push(solution.diagnostics.wall_time_s);
    for _ in 1..cfg.solve.repeats {
        solution = solve(&problem, None);
        times.push(solution.diagnostics.wall_time_s);
    }
    let timing = Timing {
        repeats: times.len(),
        median_s: median(times.clone()),
        max_s: times.iter().copied().fold(0.0, f64::max),
    };
    let d = &solution.diagnostics;
    println!(
        "status {}  cost {:.3e}  violation {:.1e}  iterations {}  median solve {:.2} ms",
        serde_json::to_value(solution.status).map_err(|e| CliError::Runtime(e.to_string()))?.as_str().unwrap_or("?"),
        d.cost,
        d.violation,
        d.iterations,
        1e3 * timing.median_s
    );
    println!("time to impact {:.4} s, placements {:?}", solution.now.t2imp, solution.u_sw);
    let report = SolveReport { config: cfg, status: solution.status, input: now, timing, solution: &solution };
    // the solution dump has no tabular form, so it is written regardless of format
    out.write_json("solution.json", "solve", &report)?;
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    count: usize,
    accepted: usize,
    median_wall_time_s: f64,
    max_wall_time_s: f64,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    metrics: RecoveryMetrics,
    solves: SolveSummary,
    impacts: &'a [ImpactRecord],
    steps: &'a [StepRecord],
}

fn summarize<'a>(log: &'a TrajectoryLog, cfg: &RunConfig) -> RunSummary<'a> {
    let times: Vec<f64> = log.solves.iter().map(|s| s.wall_time_s).collect();
    RunSummary {
        metrics: recovery_metrics(log, &cfg.scenario.thresholds),
        solves: SolveSummary {
            count: log.solves.len(),
            accepted: log.solves.iter().filter(|s| s.accepted).count(),
            max_wall_time_s: times.iter().copied().fold(0.0, f64::max),
            median_wall_time_s: median(times),
        },
        impacts: &log.impacts,
        steps: &log.steps,
    }
}

fn describe(mode: AblationMode, m: &RecoveryMetrics) -> String {
    let outcome = match (&m.aborted, m.success) {
        (Some(why), _) => format!("failed: {why}"),
        (None, true) => format!("recovered in {} steps", m.settling_steps),
        (None, false) => "not recovered".to_string(),
    };
    format!(
        "{:<18} {outcome}; peak deviation {:.3} m/s, violations {}",
        mode.to_string(),
        m.peak_velocity_deviation, m.constraint_violations
    )
}

fn write_log(cfg: &RunConfig, out: &OutDir, log: &TrajectoryLog, suffix: &str, title: &str) -> Result<(), CliError> {
    if cfg.wants(Format::Csv) {
        out.write_csv(&format!("log{suffix}.csv"), &log_rows(log))?;
    }
    if cfg.wants(Format::Svg) {
        out.write(&format!("com_velocity{suffix}.svg"), &velocity_plot(log, title))?;
        out.write(&format!("phase{suffix}.svg"), &phase_plot(log, title))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    run: RunSummary<'a>,
}

pub fn simulate(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let log = run_scenario(&cfg.scenario())?;
    let summary = summarize(&log, cfg);
    println!("{}", describe(cfg.scenario.ablation, &summary.metrics));
    write_log(cfg, out, &log, "", &format!("simulate ({})", cfg.scenario.ablation))?;
    if cfg.wants(Format::Json) {
        out.write_json("metrics.json", "simulate", &SimulateReport { config: cfg, run: summary })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AblationReport<'a> {
    config: &'a RunConfig,
    modes: BTreeMap<String, RunSummary<'a>>,
}

pub fn ablation(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let base = cfg.scenario();
    let logs = AblationMode::ALL
        .iter()
        .map(|&mode| Ok((mode, run_scenario(&base.clone().with_ablation(mode))?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut modes = BTreeMap::new();
    for (mode, log) in &logs {
        let summary = summarize(log, cfg);
        println!("{}", describe(*mode, &summary.metrics));
        write_log(cfg, out, log, &format!("_{mode}"), &format!("ablation ({mode})"))?;
        modes.insert(mode.to_string(), summary);
    }
    if cfg.wants(Format::Json) {
        out.write_json("metrics.json", "ablation", &AblationReport { config: cfg, modes })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    config: &'a RunConfig,
    table: &'a SweepTable,
}

pub fn sweep(cfg: &RunConfig, out: &OutDir) -> Result<(), CliError> {
    let w = &cfg.sweep;
    let mut base = cfg.scenario();
    // only the timing of this push is used; the sweep sets the force
    base.pushes = vec![Push { start: w.push_start, duration: w.push_duration, force: [0.0; 2] }];
    let table = push_envelope_sweep(&base, w.direction, &w.magnitudes, &w.modes, &cfg.scenario.thresholds)?;
    for e in &table.envelopes {
        let fmt = |v: Option<f64>| v.map_or("none".to_string(), |m| format!("{m} N"));
        println!(
            "{:<18} recovered up to {} (every magnitude up to {})",
            e.mode.to_string(),
            fmt(e.max_recovered),
            fmt(e.monotone_boundary)
        );
    }
    if cfg.wants(Format::Csv) {
        out.write_csv("sweep.csv", &sweep_rows(&table))?;
    }
    if cfg.wants(Format::Json) {
        out.write_json("sweep.json", "sweep", &SweepReport { config: cfg, table: &table })?;
    }
    Ok(())
}
