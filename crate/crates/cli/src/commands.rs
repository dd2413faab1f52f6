use std::fs;
use std::path::{Path, PathBuf};

use fmin_core::geometry::{
    check_embedded, close_profile, profile_residual, revolve, EmbeddingViolation,
};
use fmin_core::shooting::{
    bisect_torus, bracket_from_probes, probe_schedule, r0, sweep_row, Probe, ShootError,
};
use fmin_core::{shoot, WeightFunction};
use rayon::prelude::*;

use crate::cli::{
    Cli, Command, OracleArgs, ProblemArgs, ShootArgs, SweepArgs, TorusArgs, ValidateArgs,
};
use crate::config::{Resolved, RunConfig, OUT_ENV};
use crate::error::CliError;
use crate::formats::{self, SweepRecord};
use crate::oracle::{self, Suite};
use crate::report::{
    MeshSummary, OracleSummary, RunReport, ShotSummary, Stopwatch, Summary, SweepSummary,
    TorusSummary, WeightSummary,
};

pub const RESULTS_LOG: &str = "results.jsonl";

/// Runs one invocation and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    let clock = Stopwatch::start();
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(out) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        config.out = PathBuf::from(out);
    }
    if cli.jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let ctx = Context {
        jobs: cli.jobs,
        clock,
    };
    match cli.command {
        Command::ValidateWeight(args) => validate_weight(config, args),
        Command::Shoot(args) => cmd_shoot(config, args, &ctx),
        Command::FindTorus(args) => cmd_find_torus(config, args, &ctx),
        Command::Sweep(args) => cmd_sweep(config, args, &ctx),
        Command::Oracle(args) => cmd_oracle(config, args),
    }
}

struct Context {
    jobs: usize,
    clock: Stopwatch,
}

impl Context {
    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::new(crate::error::ExitKind::Internal, e))
    }

    /// Writes `report.json` (optional) and appends the log line.
    fn finish(
        &self,
        report: &RunReport,
        out: &Path,
        with_report_file: bool,
    ) -> Result<(), CliError> {
        if with_report_file {
            formats::write_atomic(&out.join("report.json"), report.to_json_pretty().as_bytes())?;
        }
        formats::append_line(
            &out.join(RESULTS_LOG),
            &report.to_log_line(self.clock.stop()),
        )?;
        print!("{}", report.to_json_pretty());
        Ok(())
    }
}

fn apply_problem(config: &mut RunConfig, a: &ProblemArgs) {
    if let Some(n) = a.n {
        config.n = n;
    }
    if let Some(w) = &a.weight {
        config.weight = w.clone();
    }
    if let Some(v) = a.rel_tol {
        config.integrator.rel_tol = v;
    }
    if let Some(v) = a.abs_tol {
        config.integrator.abs_tol = v;
    }
    if let Some(v) = a.max_time {
        config.integrator.max_time = v;
    }
    if let Some(v) = a.on_axis_tol {
        config.shooting.on_axis_tol = v;
    }
}

fn prepare_out(config: &RunConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&config.out)?;
    Ok(config.out.clone())
}

fn validate_weight(mut config: RunConfig, args: ValidateArgs) -> Result<u8, CliError> {
    if let Some(w) = args.weight {
        config.weight = w;
    }
    if !(args.smax > 0.0 && args.smax.is_finite()) || args.samples < 2 {
        return Err(CliError::usage(
            "--smax must be positive and --samples at least 2",
        ));
    }
    let wf = WeightFunction::parse(&config.weight)
        .map_err(|e| CliError::usage(format!("weight {:?}: {e}", config.weight)))?;
    let v = wf.validate(args.smax, args.samples);
    let summary = WeightSummary {
        weight: wf.to_string(),
        admissible: v.admissible,
        violations: v.violations.iter().map(|x| x.describe()).collect(),
        s_max: v.s_max,
        samples: v.samples,
        min_fprime: [v.min_fprime.0, v.min_fprime.1],
        max_fprime: [v.max_fprime.0, v.max_fprime.1],
        min_fsecond: [v.min_fsecond.0, v.min_fsecond.1],
        max_fsecond: [v.max_fsecond.0, v.max_fsecond.1],
        max_inconsistency: v.max_inconsistency,
    };
    for line in &summary.violations {
        eprintln!("inadmissible: {line}");
    }
    let report = RunReport::new("validate-weight", &config, Summary::Weight(summary));
    print!("{}", report.to_json_pretty());
    Ok(if v.admissible { 0 } else { 1 })
}

fn cmd_shoot(mut config: RunConfig, args: ShootArgs, ctx: &Context) -> Result<u8, CliError> {
    apply_problem(&mut config, &args.problem);
    if !(args.radius > 0.0 && args.radius.is_finite()) {
        return Err(CliError::usage(format!(
            "--R must be positive, got {}",
            args.radius
        )));
    }
    let Resolved {
        params, options, ..
    } = config.resolve()?;
    let shot = shoot(args.radius, &params, &options, config.shooting.on_axis_tol)?;
    let out = prepare_out(&config)?;
    formats::write_atomic(
        &out.join("trajectory.csv"),
        formats::profile_csv(shot.traj.states()).as_bytes(),
    )?;
    let stats = shot.traj.stats();
    let summary = ShotSummary {
        radius: shot.radius,
        classification: shot.classification.name(),
        t1: shot.event_state.t,
        event_state: shot.event_state.into(),
        truncation: shot.truncation.map(|t| t.name()),
        residual: shot.residual(),
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
        files: vec!["trajectory.csv".into(), "report.json".into()],
    };
    let report = RunReport::new("shoot", &config, Summary::Shot(summary));
    ctx.finish(&report, &out, true)?;
    Ok(0)
}

fn parse_pair(text: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts[..] {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok([a, b]),
            _ => Err(CliError::usage(format!(
                "bracket {text:?}: expected two numbers"
            ))),
        },
        _ => Err(CliError::usage(format!("bracket {text:?}: expected lo,hi"))),
    }
}

fn cmd_find_torus(mut config: RunConfig, args: TorusArgs, ctx: &Context) -> Result<u8, CliError> {
    apply_problem(&mut config, &args.problem);
    if let Some(b) = &args.bracket {
        config.shooting.bracket = parse_pair(b)?;
    }
    if let Some(tol) = args.tol {
        config.shooting.r_tol = tol;
    }
    if let Some(v) = args.samples {
        config.export.samples = v;
    }
    if let Some(v) = args.segments {
        config.export.segments = v;
    }
    let Resolved {
        params,
        options,
        settings,
    } = config.resolve()?;
    let tol = settings.on_axis_tol;

    let r0 = r0(&params)?;
    let schedule = probe_schedule(
        r0,
        settings.low_hint,
        settings.high_hint,
        settings.max_probes,
    );
    let probes: Vec<Probe> = ctx.pool()?.install(|| {
        schedule
            .par_iter()
            .map(|&radius| {
                shoot(radius, &params, &options, tol).map(|s| Probe {
                    radius,
                    classification: s.classification,
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let Some(bracket) = bracket_from_probes(&probes) else {
        return Err(ShootError::NoBracket { probes }.into());
    };
    // keep only the probes a sequential scan would have made
    let probe_count = probes
        .iter()
        .position(|p| p.radius == bracket.1)
        .map_or(probes.len(), |i| i + 1);
    let history: Vec<Probe> = probes[..probe_count].to_vec();
    let solution = bisect_torus(&params, &options, &settings, bracket, history)?;

    let cp = close_profile(&solution.half_profile, &params, config.export.samples, tol)?;
    let residual = profile_residual(&cp, &params);
    let embedding = check_embedded(&cp)?;

    let out = prepare_out(&config)?;
    let mut files = vec!["profile.csv".to_string()];
    formats::write_atomic(
        &out.join("profile.csv"),
        formats::profile_csv(&cp.points).as_bytes(),
    )?;
    let mesh = if params.n() == 2 {
        let mesh = revolve(&cp, config.export.segments)?;
        formats::write_atomic(&out.join("torus.obj"), formats::obj(&mesh).as_bytes())?;
        files.push("torus.obj".into());
        Some(MeshSummary {
            vertices: mesh.vertices.len(),
            faces: mesh.faces.len(),
            euler_characteristic: mesh.euler_characteristic(),
        })
    } else {
        None
    };
    formats::write_atomic(
        &out.join("profile.svg"),
        formats::svg(&cp, &params).as_bytes(),
    )?;
    files.push("profile.svg".into());
    files.push("report.json".into());

    let summary = TorusSummary {
        r_star: solution.r_star,
        closure_error: solution.closure_error,
        bracket: [solution.bracket.0, solution.bracket.1],
        r0,
        probes: probe_count,
        bisection_shots: solution.history.len() - probe_count,
        boundary_switches: solution.boundary_switches(),
        half_length: solution.half_profile.t_end(),
        samples: cp.len(),
        min_r: cp.min_r(),
        turning: cp.turning(),
        max_residual: residual.max,
        embedded: embedding.embedded,
        embedding_violation: embedding.violation.map(|v| match v {
            EmbeddingViolation::SegmentsIntersect { i, j } => {
                format!("segments {i} and {j} intersect")
            }
            EmbeddingViolation::TouchesAxis { index, r } => format!("sample {index} has r={r}"),
        }),
        mesh,
        files,
    };
    let embedded = summary.embedded;
    let report = RunReport::new("find-torus", &config, Summary::Torus(Box::new(summary)));
    ctx.finish(&report, &out, true)?;
    Ok(if embedded { 0 } else { 1 })
}

/// Radii from `--R-list` or `--R-range lo:hi:linear|geometric:count`.
pub fn parse_radii(list: Option<&str>, range: Option<&str>) -> Result<Vec<f64>, CliError> {
    let radii: Vec<f64> = if let Some(list) = list {
        list.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::usage(format!("--R-list entry {s:?} is not a number")))
            })
            .collect::<Result<_, _>>()?
    } else if let Some(range) = range {
        let parts: Vec<&str> = range.split(':').collect();
        let [lo, hi, kind, count] = parts[..] else {
            return Err(CliError::usage(format!(
                "--R-range {range:?}: expected lo:hi:kind:count"
            )));
        };
        let bad = || CliError::usage(format!("--R-range {range:?}: malformed"));
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let count: usize = count.parse().map_err(|_| bad())?;
        if count == 0 || !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(CliError::usage(format!(
                "--R-range {range:?}: need 0 < lo <= hi and count >= 1"
            )));
        }
        let frac = |i: usize| {
            if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            }
        };
        match kind {
            "linear" => (0..count).map(|i| lo + (hi - lo) * frac(i)).collect(),
            "geometric" => {
                let ratio = if count == 1 {
                    1.0
                } else {
                    (hi / lo).powf(1.0 / (count - 1) as f64)
                };
                (0..count)
                    .map(|i| {
                        if i + 1 == count && count > 1 {
                            hi
                        } else {
                            lo * ratio.powi(i as i32)
                        }
                    })
                    .collect()
            }
            _ => {
                return Err(CliError::usage(format!(
                    "--R-range kind {kind:?}: linear or geometric"
                )))
            }
        }
    } else {
        return Err(CliError::usage("one of --R-list or --R-range is required"));
    };
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(CliError::usage("radii must be positive"));
    }
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::usage("radii must be sorted"));
    }
    Ok(radii)
}

fn cmd_sweep(mut config: RunConfig, args: SweepArgs, ctx: &Context) -> Result<u8, CliError> {
    apply_problem(&mut config, &args.problem);
    let radii = parse_radii(args.r_list.as_deref(), args.r_range.as_deref())?;
    let Resolved {
        params, options, ..
    } = config.resolve()?;
    let tol = config.shooting.on_axis_tol;
    let rows: Vec<SweepRecord> = ctx.pool()?.install(|| {
        radii
            .par_iter()
            .map(|&r| sweep_row(r, &params, &options, tol).map_err(|e| e.to_string()))
            .collect()
    });
    let out = prepare_out(&config)?;
    formats::write_atomic(
        &out.join("sweep.csv"),
        formats::sweep_csv(&radii, &rows).as_bytes(),
    )?;
    let delta = rows
        .iter()
        .filter_map(|r| r.as_ref().ok().map(|r| r.event_state.r))
        .reduce(f64::min);
    let summary = SweepSummary {
        radii: radii.clone(),
        classifications: rows
            .iter()
            .map(|r| r.as_ref().map_or("Error", |r| r.classification.name()))
            .collect(),
        errors: rows.iter().map(|r| r.as_ref().err().cloned()).collect(),
        delta,
        files: vec!["sweep.csv".into(), RESULTS_LOG.into()],
    };
    let failed = rows.iter().any(|r| r.is_err());
    let report = RunReport::new("sweep", &config, Summary::Sweep(summary));
    ctx.finish(&report, &out, false)?;
    Ok(if failed { 1 } else { 0 })
}

fn cmd_oracle(mut config: RunConfig, args: OracleArgs) -> Result<u8, CliError> {
    apply_problem(&mut config, &args.problem);
    let Resolved {
        params, options, ..
    } = config.resolve()?;
    let tol = config.shooting.on_axis_tol;
    let n = config.n;
    let mut checks = Vec::new();
    if matches!(args.suite, Suite::Sphere | Suite::All) {
        checks.extend(oracle::sphere(n, &options, tol)?);
    }
    if matches!(args.suite, Suite::Cylinder | Suite::All) {
        checks.extend(oracle::cylinder(n, &options)?);
    }
    if matches!(args.suite, Suite::Lemmas | Suite::All) {
        checks.extend(oracle::lemmas(&params, &options, tol)?);
    }
    for c in &checks {
        eprintln!(
            "{} {} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.detail
        );
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = RunReport::new(
        "oracle",
        &config,
        Summary::Oracle(OracleSummary { passed, checks }),
    );
    print!("{}", report.to_json_pretty());
    Ok(if passed { 0 } else { 1 })
}
