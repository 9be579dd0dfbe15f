//! Argument parsing and command dispatch for the `fairalloc` binary.
//!
//! Every command loads one scenario file, resolves its settings (flags take
//! precedence over the scenario's `defaults` block) and produces a [`Report`]
//! that renders to CSV or JSON. Reports embed the tool version, the SHA-256 of
//! the scenario text and the resolved settings.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairalloc::certificates::{chernoff_delta, exact_lower_deviation, threshold_for};
use fairalloc::montecarlo::{DEFAULT_SAMPLES, DEFAULT_SEED};
use fairalloc::scenario_io::{
    curve_table, evaluation_table, format_float, LoadedScenario, ReportMeta, Table,
};
use fairalloc::{
    alpha_fair_optimal, emit_availability_curve, evaluate, load_scenario, max_utilization,
    mc_check, mean_weighted, min_parameter_threshold, pof, scenario_certificate,
    theoretical_bounds, Allocation, CertificateMethod, Error, OptimizerSettings, Scenario,
};
use serde_json::{json, Map, Value};

/// Slack used for the `within_bounds` flag of the `pof` report.
const POF_BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "fairalloc",
    version,
    about = "Fair allocation of a resource under stochastic demand"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Scenario JSON file
    #[arg(long, global = true, value_name = "PATH")]
    pub scenario: Option<PathBuf>,

    /// Fairness tolerance; overrides `defaults.alpha`
    #[arg(long, global = true, value_name = "X")]
    pub alpha: Option<f64>,

    /// Lower-deviation ε; overrides `defaults.epsilon`
    #[arg(long, global = true, value_name = "X")]
    pub epsilon: Option<f64>,

    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Monte Carlo sample count
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<u64>,

    /// Write the report here instead of standard output
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean-weighted allocation and its evaluation
    Allocate,
    /// Exact evaluation of an allocation (mean-weighted by default)
    Evaluate(AllocationArgs),
    /// Max-utilization allocation, plus the best α-fair one when α is set
    Optimize(OptimizerArgs),
    /// Lower-tail certificate per group
    Certify(CertifyArgs),
    /// Price of fairness for the resolved α
    Pof(OptimizerArgs),
    /// Availability and expected minimum over a grid of allocations
    Curve(CurveArgs),
    /// Compare exact metrics against Monte Carlo estimates
    McCheck(AllocationArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Allocate => "allocate",
            Command::Evaluate(_) => "evaluate",
            Command::Optimize(_) => "optimize",
            Command::Certify(_) => "certify",
            Command::Pof(_) => "pof",
            Command::Curve(_) => "curve",
            Command::McCheck(_) => "mc-check",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AllocationArgs {
    /// Comma-separated allocation, one entry per group
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        value_name = "V,.."
    )]
    pub allocation: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Floor grid points swept by the α-fair search
    #[arg(long, value_name = "N")]
    pub ell_grid: Option<usize>,

    /// Golden-section steps after the sweep
    #[arg(long, value_name = "N")]
    pub refine_iterations: Option<usize>,

    /// Bisection tolerance on allocations
    #[arg(long, value_name = "X")]
    pub v_tolerance: Option<f64>,

    #[arg(long, value_name = "N")]
    pub max_bisection_steps: Option<usize>,
}

impl OptimizerArgs {
    fn settings(&self) -> Result<OptimizerSettings, CliError> {
        let d = OptimizerSettings::default();
        let s = OptimizerSettings {
            v_tolerance: self.v_tolerance.unwrap_or(d.v_tolerance),
            ell_grid: self.ell_grid.unwrap_or(d.ell_grid),
            refine_iterations: self.refine_iterations.unwrap_or(d.refine_iterations),
            max_bisection_steps: self.max_bisection_steps.unwrap_or(d.max_bisection_steps),
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// exact, chernoff-binomial, chernoff-normal or chernoff-poisson
    #[arg(long, default_value = "exact")]
    pub method: String,

    /// Per-group δ to certify against; enables the threshold and pass columns
    #[arg(long, value_name = "X")]
    pub target_delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// Right end of the grid; defaults to twice the largest group mean
    #[arg(long, value_name = "X")]
    pub v_max: Option<f64>,

    #[arg(long, default_value_t = 201)]
    pub steps: usize,
}

/// A failed command, classified by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad input or arguments; exit status 1.
    Validation(String),
    /// The optimizer could not produce an answer; exit status 2.
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Solver(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::Infeasible { .. } => {
                CliError::Solver(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// The output of one command, ready to render.
#[derive(Debug, Clone)]
pub struct Report {
    pub meta: ReportMeta,
    pub table: Table,
    pub result: Value,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.table.to_csv(&self.meta),
            Format::Json => {
                let doc = json!({ "meta": self.meta, "result": self.result });
                let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

struct Context {
    loaded: LoadedScenario,
    settings: Map<String, Value>,
    alpha: Option<f64>,
    epsilon: Option<f64>,
    seed: u64,
    samples: u64,
}

impl Context {
    fn scenario(&self) -> &Scenario {
        &self.loaded.scenario
    }

    fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.settings.insert(key.into(), value.into());
    }
}

fn load(global: &GlobalArgs) -> Result<Context, CliError> {
    let path = global
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Validation("--scenario PATH is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let loaded = load_scenario(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let d = &loaded.defaults;
    let alpha = global.alpha.or(d.alpha);
    let epsilon = global.epsilon.or(d.epsilon);
    let seed = global.seed.or(d.seed).unwrap_or(DEFAULT_SEED);
    let samples = global.samples.or(d.samples).unwrap_or(DEFAULT_SAMPLES);
    for (name, value) in [("alpha", alpha), ("epsilon", epsilon)] {
        if value.is_some_and(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!("--{name} must be finite")));
        }
    }
    let mut settings = Map::new();
    settings.insert("scenario".into(), path.display().to_string().into());
    settings.insert("format".into(), global.format.name().into());
    Ok(Context {
        loaded,
        settings,
        alpha,
        epsilon,
        seed,
        samples,
    })
}

fn optimizer_settings_json(s: &OptimizerSettings) -> Value {
    json!({
        "v_tolerance": s.v_tolerance,
        "ell_grid": s.ell_grid,
        "refine_iterations": s.refine_iterations,
        "max_bisection_steps": s.max_bisection_steps,
    })
}

fn chosen_allocation(ctx: &mut Context, args: &AllocationArgs) -> Result<Allocation, CliError> {
    let alloc = match &args.allocation {
        Some(values) => Allocation::new(ctx.scenario(), values.clone())?,
        None => mean_weighted(ctx.scenario()),
    };
    ctx.set(
        "allocation",
        match &args.allocation {
            Some(_) => json!(alloc.values()),
            None => json!("mean_weighted"),
        },
    );
    Ok(alloc)
}

fn evaluation(ctx: &mut Context, alloc: &Allocation) -> Result<(Table, Value), CliError> {
    let mut report = evaluate(ctx.scenario(), alloc)?;
    if let Some(eps) = ctx.epsilon {
        let cert = scenario_certificate(ctx.scenario(), eps, CertificateMethod::ExactCdf)?;
        report = report.with_bounds(theoretical_bounds(&cert, ctx.scenario(), ctx.alpha));
        ctx.set("epsilon", eps);
        ctx.set("certificate_method", CertificateMethod::ExactCdf.name());
        if let Some(a) = ctx.alpha {
            ctx.set("alpha", a);
        }
    }
    let table = evaluation_table(&report);
    Ok((table, json!({ "allocation": alloc, "evaluation": report })))
}

fn allocation_summary(
    scenario: &Scenario,
    label: &str,
    alloc: &Allocation,
    table: &mut Table,
) -> Result<Value, CliError> {
    let report = evaluate(scenario, alloc)?;
    for g in &report.groups {
        table.push(vec![
            label.into(),
            g.name.clone(),
            format_float(g.allocation),
            format_float(g.expected_min),
            format_float(g.availability),
            format_float(report.utilization),
            format_float(report.fairness),
        ]);
    }
    Ok(json!({
        "allocation": alloc,
        "utilization": report.utilization,
        "fairness": report.fairness,
        "availabilities": report.groups.iter().map(|g| g.availability).collect::<Vec<_>>(),
    }))
}

fn cmd_optimize(ctx: &mut Context, args: &OptimizerArgs) -> Result<(Table, Value), CliError> {
    let settings = args.settings()?;
    ctx.set("optimizer", optimizer_settings_json(&settings));
    let mut table = Table::new(["allocation", "group", "v", "expected_min", "q", "U", "Q"]);
    let best = max_utilization(ctx.scenario(), &settings)?;
    let best_json = allocation_summary(ctx.scenario(), "max_utilization", &best, &mut table)?;
    let fair_json = match ctx.alpha {
        Some(alpha) => {
            ctx.set("alpha", alpha);
            let fair = alpha_fair_optimal(ctx.scenario(), alpha, &settings)?;
            allocation_summary(ctx.scenario(), "alpha_fair", &fair, &mut table)?
        }
        None => Value::Null,
    };
    Ok((
        table,
        json!({ "max_utilization": best_json, "alpha_fair": fair_json }),
    ))
}

fn cmd_certify(ctx: &mut Context, args: &CertifyArgs) -> Result<(Table, Value), CliError> {
    let eps = ctx.epsilon.ok_or_else(|| {
        CliError::Validation("certify needs --epsilon (or defaults.epsilon)".into())
    })?;
    let method: CertificateMethod = args.method.parse()?;
    if let Some(t) = args.target_delta {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Validation(format!(
                "--target-delta must lie in (0, 1), got {t}"
            )));
        }
    }
    ctx.set("epsilon", eps);
    ctx.set("method", method.name());
    if let Some(t) = args.target_delta {
        ctx.set("target_delta", t);
    }
    let cert = scenario_certificate(ctx.scenario(), eps, method)?;
    let mut table = Table::new([
        "group",
        "family",
        "mean",
        "method",
        "delta_exact",
        "delta_chernoff",
        "parameter",
        "threshold",
        "target_delta",
        "pass",
    ]);
    let mut groups = Vec::new();
    for (g, &delta) in ctx.scenario().groups().iter().zip(&cert.per_group_deltas) {
        let d = &g.distribution;
        let exact = exact_lower_deviation(d, eps)?;
        let family = threshold_for(d);
        let chernoff = family.map(|_| chernoff_delta(d, eps)).transpose()?;
        let threshold = match (family, args.target_delta) {
            (Some((fam, _)), Some(t)) => Some(min_parameter_threshold(fam, eps, t)?),
            _ => None,
        };
        let pass = args.target_delta.map(|t| delta <= t);
        let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
        table.push(vec![
            g.name.clone(),
            d.family().name().into(),
            format_float(d.mean()),
            method.name().into(),
            format_float(exact),
            opt(chernoff),
            opt(family.map(|(_, p)| p)),
            opt(threshold),
            opt(args.target_delta),
            pass.map(|b| b.to_string()).unwrap_or_default(),
        ]);
        groups.push(json!({
            "name": g.name,
            "family": d.family().name(),
            "mean": d.mean(),
            "delta": delta,
            "delta_exact": exact,
            "delta_chernoff": chernoff,
            "parameter": family.map(|(_, p)| p),
            "threshold": threshold,
            "pass": pass,
        }));
    }
    let all_pass = args.target_delta.map(|t| cert.delta <= t);
    Ok((
        table,
        json!({
            "certificate": cert,
            "target_delta": args.target_delta,
            "pass": all_pass,
            "groups": groups,
        }),
    ))
}

fn cmd_pof(ctx: &mut Context, args: &OptimizerArgs) -> Result<(Table, Value), CliError> {
    let alpha = ctx.alpha.ok_or_else(|| {
        CliError::Validation(
            "pof needs an explicit --alpha (or defaults.alpha in the scenario)".into(),
        )
    })?;
    let settings = args.settings()?;
    ctx.set("alpha", alpha);
    ctx.set("optimizer", optimizer_settings_json(&settings));
    let cert = match ctx.epsilon {
        Some(eps) => {
            ctx.set("epsilon", eps);
            ctx.set("certificate_method", CertificateMethod::ExactCdf.name());
            Some(scenario_certificate(
                ctx.scenario(),
                eps,
                CertificateMethod::ExactCdf,
            )?)
        }
        None => None,
    };
    let result = pof(ctx.scenario(), alpha, &settings, cert.as_ref())?;
    let within = result.within_bounds(POF_BOUND_SLACK);
    let mut table = Table::new([
        "alpha",
        "epsilon",
        "delta",
        "U_max",
        "U_alpha_fair",
        "Q_alpha_fair",
        "pof",
        "bound_1_over_1_minus_alpha",
        "bound_1_plus_2alpha",
        "within_bounds",
    ]);
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    table.push(vec![
        format_float(alpha),
        opt(cert.as_ref().map(|c| c.epsilon)),
        opt(cert.as_ref().map(|c| c.delta)),
        format_float(result.unconstrained_utilization),
        format_float(result.constrained_utilization),
        format_float(result.alpha_fair_fairness),
        format_float(result.pof),
        format_float(result.bound_1_over_1_minus_alpha),
        opt(result.bound_1_plus_2alpha),
        within.to_string(),
    ]);
    let mut value = serde_json::to_value(&result).expect("pof result serializes");
    value["within_bounds"] = within.into();
    Ok((table, value))
}

fn cmd_curve(ctx: &mut Context, args: &CurveArgs) -> Result<(Table, Value), CliError> {
    let v_max = args
        .v_max
        .unwrap_or_else(|| 2.0 * ctx.scenario().means().into_iter().fold(0.0, f64::max));
    ctx.set("v_max", v_max);
    ctx.set("steps", args.steps);
    let curves = ctx
        .scenario()
        .groups()
        .iter()
        .map(|g| {
            Ok((
                g.name.clone(),
                emit_availability_curve(&g.distribution, v_max, args.steps)?,
            ))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let value = json!({
        "curves": curves
            .iter()
            .map(|(name, points)| json!({ "group": name, "points": points }))
            .collect::<Vec<_>>(),
    });
    Ok((curve_table(&curves), value))
}

fn cmd_mc_check(ctx: &mut Context, args: &AllocationArgs) -> Result<(Table, Value), CliError> {
    let alloc = chosen_allocation(ctx, args)?;
    ctx.set("seed", ctx.seed);
    ctx.set("samples", ctx.samples);
    let rows = mc_check(ctx.scenario(), &alloc, ctx.samples, ctx.seed)?;
    let mut table = Table::new(["quantity", "exact", "mc_value", "se", "z_score", "pass"]);
    for r in &rows {
        table.push(vec![
            r.quantity.clone(),
            format_float(r.exact),
            format_float(r.mc_value),
            format_float(r.se),
            format_float(r.z_score),
            r.pass.to_string(),
        ]);
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok((
        table,
        json!({ "allocation": alloc, "rows": rows, "pass": all_pass }),
    ))
}

/// Runs a parsed command and returns its report without writing anything.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let mut ctx = load(&cli.global)?;
    let (table, result) = match &cli.command {
        Command::Allocate => {
            ctx.set("allocation", "mean_weighted");
            let alloc = mean_weighted(ctx.scenario());
            evaluation(&mut ctx, &alloc)?
        }
        Command::Evaluate(args) => {
            let alloc = chosen_allocation(&mut ctx, args)?;
            evaluation(&mut ctx, &alloc)?
        }
        Command::Optimize(args) => cmd_optimize(&mut ctx, args)?,
        Command::Certify(args) => cmd_certify(&mut ctx, args)?,
        Command::Pof(args) => cmd_pof(&mut ctx, args)?,
        Command::Curve(args) => cmd_curve(&mut ctx, args)?,
        Command::McCheck(args) => cmd_mc_check(&mut ctx, args)?,
    };
    let warnings = ctx.scenario().warnings();
    Ok(Report {
        meta: ReportMeta::new(
            cli.command.name(),
            &ctx.loaded.digest,
            Value::Object(ctx.settings),
        ),
        table,
        result,
        warnings,
    })
}

/// Parses `args`, runs the command and writes the report. Diagnostics go to
/// standard error; the return value is the process exit status.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli).and_then(|report| emit(&cli.global, &report)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit(global: &GlobalArgs, report: &Report) -> Result<(), CliError> {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = report.render(global.format);
    match &global.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Validation(format!("cannot write to stdout: {e}"))),
    }
}
