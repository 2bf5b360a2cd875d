#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use conclab::audit::{concave_approximation, min_defect, FieldEvaluator, Mode, SamplerConfig};
use conclab::domain::DiscretizedDomain;
use conclab::io::{read_field_binary, to_json, write_field_binary, write_field_csv, Config, CONFIG_REFERENCE};
use conclab::operators::{principal_eigenpair, Field};
use conclab::parabolic::{solve_trajectory, RunOptions, TimeGrid};
use conclab::props::run_property_suite;
use conclab::scenarios::{catalog, run_scenario, run_suite, scenario, scenario_ids, AuditSpec, Scenario, Verdict, VerificationReport};
use conclab::stationary::{solve_stationary, StationaryOptions};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "conclab", version, about = "Concavity laboratory for semilinear heat equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured problem and dump every snapshot.
    Solve(RunArgs),
    /// Solve the stationary problem and dump its solution.
    Stationary(RunArgs),
    /// Minimize the concavity function of a dumped field.
    Audit(FieldArgs),
    /// Concave envelope of a dumped field with its approximation certificate.
    Envelope(FieldArgs),
    /// Run one catalog scenario, or a scenario built from a config file.
    Verify(VerifyArgs),
    /// Run the whole catalog.
    Suite(SuiteArgs),
    /// Randomized inequality checks.
    Props(PropsArgs),
    /// Print the config key reference.
    Keys,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Grid spacing.
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// Time step (defaults to h).
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Time horizon.
    #[arg(long = "T", allow_negative_numbers = true)]
    horizon: Option<f64>,
    /// Time rescaling exponent in [1, 2].
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Power-concavity exponent, or `auto`.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<String>,
    /// Concavity exponent claimed for the weight.
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Inner-region depth, or `auto`.
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Field dumps: `json` writes binary dumps only, `csv` adds plot-ready CSV.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    o: Overrides,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    config: PathBuf,
    /// Binary field dump written by `solve` or `stationary`.
    #[arg(long)]
    field: PathBuf,
    /// Audit `log u` instead of `u^α`.
    #[arg(long)]
    log: bool,
    #[command(flatten)]
    o: Overrides,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    scenario: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    o: Overrides,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, required = true)]
    all: bool,
    #[command(flatten)]
    o: Overrides,
}

#[derive(Args)]
struct PropsArgs {
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[command(flatten)]
    o: Overrides,
}

/// Bad flag value; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(flag: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    Usage(format!("invalid value for --{flag}: {msg}")).into()
}

fn positive(flag: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(usage(flag, format!("must be positive, got {x}"))),
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Alpha {
    Auto,
    Value(f64),
}

impl Overrides {
    fn validate(&self) -> Result<()> {
        positive("h", self.h)?;
        positive("dt", self.dt)?;
        positive("T", self.horizon)?;
        if let Some(b) = self.beta {
            if !(1.0..=2.0).contains(&b) {
                return Err(usage("beta", format!("must lie in [1, 2], got {b}")));
            }
        }
        if let Some(t) = self.theta {
            if !(t >= 1.0) {
                return Err(usage("theta", format!("must be at least 1, got {t}")));
            }
        }
        self.alpha()?;
        self.rho()?;
        Ok(())
    }

    fn alpha(&self) -> Result<Option<Alpha>> {
        match self.alpha.as_deref() {
            None => Ok(None),
            Some("auto") => Ok(Some(Alpha::Auto)),
            Some(s) => match s.parse::<f64>() {
                Ok(a) if a > 0.0 && a <= 1.0 => Ok(Some(Alpha::Value(a))),
                Ok(a) => Err(usage("alpha", format!("must lie in (0, 1], got {a}"))),
                Err(_) => Err(usage("alpha", format!("expected a number or `auto`, got `{s}`"))),
            },
        }
    }

    fn rho(&self) -> Result<Option<f64>> {
        match self.rho.as_deref() {
            None | Some("auto") => Ok(None),
            Some(s) => match s.parse::<f64>() {
                Ok(r) if r > 0.0 => Ok(Some(r)),
                _ => Err(usage("rho", format!("expected a positive number or `auto`, got `{s}`"))),
            },
        }
    }

    fn apply_to_config(&self, c: &mut Config) -> Result<()> {
        if let Some(h) = self.h {
            c.grid.h = h;
        }
        if self.dt.is_some() {
            c.grid.dt = self.dt;
        }
        if let Some(t) = self.horizon {
            c.grid.horizon = t;
        }
        if let Some(b) = self.beta {
            c.grid.beta = b;
        }
        if let Some(t) = self.theta {
            c.weight.theta = Some(t);
        }
        match self.alpha()? {
            Some(Alpha::Auto) => c.audit.alpha = None,
            Some(Alpha::Value(a)) => c.audit.alpha = Some(a),
            None => {}
        }
        c.validate()?;
        Ok(())
    }

    fn apply_to_scenario(&self, s: &mut Scenario) -> Result<()> {
        if self.dt.is_some() {
            s.grid.dt = self.dt;
        }
        if let Some(t) = self.horizon {
            s.grid.horizon = t;
            s.problem.horizon = t;
        }
        if let Some(t) = self.theta {
            s.problem.weight.theta = Some(t);
        }
        if let Some(r) = self.rho()? {
            s.rho = Some(r);
        }
        if let AuditSpec::Spacetime { alpha, beta } = &mut s.audit {
            if let Some(b) = self.beta {
                *beta = b;
                s.problem.beta = b;
            }
            match self.alpha()? {
                Some(Alpha::Value(a)) => *alpha = a,
                Some(Alpha::Auto) => *alpha = conclab::io::auto_alpha(&s.problem)?,
                None => {}
            }
        }
        Ok(())
    }
}

fn load_config(path: &Path, o: &Overrides) -> Result<Config> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut c = Config::parse(&text)?;
    o.apply_to_config(&mut c)?;
    Ok(c)
}

struct Output {
    dir: PathBuf,
    summary: String,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output { dir: dir.to_path_buf(), summary: String::new() })
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        fs::write(self.dir.join(name), to_json(value)?)?;
        Ok(())
    }

    fn field(&self, stem: &str, dom: &DiscretizedDomain, f: &Field, format: Format) -> Result<()> {
        write_field_binary(dom, f, fs::File::create(self.dir.join(format!("{stem}.bin")))?)?;
        if format == Format::Csv {
            write_field_csv(dom, f, fs::File::create(self.dir.join(format!("{stem}.csv")))?)?;
        }
        Ok(())
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.summary.push_str(s.as_ref());
        self.summary.push('\n');
    }

    fn finish(self) -> Result<()> {
        print!("{}", self.summary);
        fs::write(self.dir.join("summary.txt"), self.summary)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct SolveReport {
    seed: u64,
    config: Config,
    times: Vec<f64>,
    sup_norms: Vec<f64>,
    monotone: bool,
    tau_mono: f64,
    seeded_at: Option<f64>,
    stationary_residual: Option<f64>,
    files: Vec<String>,
}

fn cmd_solve(a: RunArgs) -> Result<i32> {
    a.o.validate()?;
    let c = load_config(&a.config, &a.o)?;
    let problem = c.problem();
    let dom = DiscretizedDomain::build(c.domain.clone(), c.grid.h)?;
    let eig = principal_eigenpair(&dom)?;
    let gs = c.grid_spec();
    let mut tg = TimeGrid::standard(gs.dt(), gs.horizon);
    tg.substeps = gs.substeps;
    let with_slice = c.audit.stationary_slice && problem.stationary_time().is_finite();
    let traj = solve_trajectory(&problem, &dom, &tg, Some(&eig), &RunOptions { stationary_slice: with_slice, seed_scale: 1.0 })?;
    let mut out = Output::new(&a.o.out)?;
    let mut files = Vec::new();
    for k in 0..traj.times.len() {
        let stem = format!("u_{k:04}");
        out.field(&stem, &dom, &traj.field(k), a.o.format)?;
        files.push(stem);
    }
    if let Some(st) = &traj.stationary {
        out.field("u_inf", &dom, &st.v, a.o.format)?;
        files.push("u_inf".into());
    }
    let report = SolveReport {
        seed: a.o.seed,
        config: c,
        times: traj.times.clone(),
        sup_norms: traj.fields.iter().map(|f| conclab::operators::sup_norm(f)).collect(),
        monotone: traj.monotone,
        tau_mono: traj.tau_mono,
        seeded_at: traj.seeded_at,
        stationary_residual: traj.stationary.as_ref().map(|s| s.residual),
        files,
    };
    out.json("report.json", &report)?;
    out.line(format!("solve: {} snapshots up to t = {}", report.times.len(), report.times.last().copied().unwrap_or(0.0)));
    out.line(format!("  final sup norm {:.6e}, monotone {}", report.sup_norms.last().copied().unwrap_or(0.0), report.monotone));
    if let Some(r) = report.stationary_residual {
        out.line(format!("  stationary slice residual {r:.3e}"));
    }
    out.finish()?;
    Ok(0)
}

fn cmd_stationary(a: RunArgs) -> Result<i32> {
    a.o.validate()?;
    let c = load_config(&a.config, &a.o)?;
    let dom = DiscretizedDomain::build(c.domain.clone(), c.grid.h)?;
    let r = solve_stationary(&c.problem(), &dom, &StationaryOptions::default())?;
    let mut out = Output::new(&a.o.out)?;
    out.field("v", &dom, &r.v, a.o.format)?;
    #[derive(Serialize)]
    struct Report {
        seed: u64,
        residual: f64,
        iterations: usize,
        sup_norm: f64,
        nonunique_warning: bool,
    }
    out.json(
        "report.json",
        &Report { seed: a.o.seed, residual: r.residual, iterations: r.iterations, sup_norm: r.sup_norm, nonunique_warning: r.nonunique_warning },
    )?;
    out.line(format!("stationary: sup norm {:.6e}, residual {:.3e}, {} iterations", r.sup_norm, r.residual, r.iterations));
    if r.nonunique_warning {
        out.line("  warning: b(x,s)/s is not strictly decreasing; the positive solution may not be unique");
    }
    out.finish()?;
    Ok(0)
}

fn load_dump(a: &FieldArgs) -> Result<(Config, DiscretizedDomain, Field)> {
    let bytes = fs::read(&a.field).with_context(|| format!("reading {}", a.field.display()))?;
    let dump = read_field_binary(&bytes[..])?;
    let mut o = a.o.clone();
    o.h = Some(dump.h);
    let c = load_config(&a.config, &o)?;
    let dom = DiscretizedDomain::build(c.domain.clone(), dump.h)?;
    let f = dump.to_field(&dom)?;
    Ok((c, dom, f))
}

fn cmd_audit(a: FieldArgs) -> Result<i32> {
    a.o.validate()?;
    let (c, dom, f) = load_dump(&a)?;
    let alpha = if a.log {
        0.0
    } else {
        match c.audit.alpha {
            Some(x) => x,
            None => conclab::io::auto_alpha(&c.problem()).unwrap_or(1.0),
        }
    };
    let margin = a.o.rho()?.unwrap_or(2.0 * dom.h);
    let ev = FieldEvaluator::from_field(&dom, &f, alpha, margin)?;
    let d = min_defect(&ev, Mode::Space, &SamplerConfig::default())?;
    let mut out = Output::new(&a.o.out)?;
    out.json("report.json", &d)?;
    let what = if a.log { "log u".to_string() } else { format!("u^{alpha}") };
    out.line(format!("audit of {what}: min C* = {:.6e}, tau_audit = {:.3e}", d.min, d.tau_audit));
    let verdict = if d.consistent_with_concavity() { "consistent with concavity" } else { "concavity violated beyond tolerance" };
    out.line(format!("  {verdict}; argmin x1 = {:?}, x3 = {:?}, lambda = {}", d.argmin.x1, d.argmin.x3, d.argmin.lambda));
    out.finish()?;
    Ok(0)
}

fn cmd_envelope(a: FieldArgs) -> Result<i32> {
    a.o.validate()?;
    let (_, dom, f) = load_dump(&a)?;
    let env = concave_approximation(&dom, &f)?;
    let mut out = Output::new(&a.o.out)?;
    out.field("g", &dom, &env.g, a.o.format)?;
    out.json("report.json", &env)?;
    let cert = &env.certificate;
    out.line(format!("envelope: {} planes, sup |f - g| = {:.6e}", env.planes.len(), env.distance));
    out.line(format!("  k_n = {}, delta = {:.6e}, bound satisfied: {}", cert.k_n, cert.delta, cert.satisfied));
    out.finish()?;
    Ok(0)
}

fn describe(r: &VerificationReport, out: &mut Output) {
    out.line(format!("{}: {:?}", r.scenario, r.verdict));
    for a in &r.assertions {
        let mut line = format!("  {:<20} {:?} margin {:.3e}", a.name, a.verdict, a.margin);
        if let Some(n) = &a.note {
            let _ = write!(line, " ({n})");
        }
        out.line(line);
    }
}

fn verdict_code(v: Verdict) -> i32 {
    if v == Verdict::Fail {
        1
    } else {
        0
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    a.o.validate()?;
    let h = a.o.h.unwrap_or(1.0 / 64.0);
    let mut s = match (&a.scenario, &a.config) {
        (Some(id), _) => {
            let mut s = scenario(id, h).ok_or_else(|| usage("scenario", format!("unknown id `{id}`; known: {}", scenario_ids().join(", "))))?;
            a.o.apply_to_scenario(&mut s)?;
            s
        }
        (None, Some(path)) => {
            let c = load_config(path, &a.o)?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into());
            c.scenario(&stem)?
        }
        (None, None) => unreachable!("clap requires one of --scenario, --config"),
    };
    if let Some(r) = a.o.rho()? {
        s.rho = Some(r);
    }
    let r = run_scenario(&s)?;
    let mut out = Output::new(&a.o.out)?;
    out.json(&format!("{}.json", r.scenario), &r)?;
    describe(&r, &mut out);
    out.finish()?;
    Ok(verdict_code(r.verdict))
}

fn cmd_suite(a: SuiteArgs) -> Result<i32> {
    a.o.validate()?;
    let h = a.o.h.unwrap_or(1.0 / 64.0);
    let mut scenarios = catalog(h);
    for s in &mut scenarios {
        a.o.apply_to_scenario(s)?;
    }
    let (results, summary) = run_suite(&scenarios);
    let mut out = Output::new(&a.o.out)?;
    for (s, r) in scenarios.iter().zip(&results) {
        match r {
            Ok(r) => {
                out.json(&format!("{}.json", s.id), r)?;
                describe(r, &mut out);
            }
            Err(e) => out.line(format!("{}: error: {e}", s.id)),
        }
    }
    out.json("suite.json", &summary)?;
    out.line(format!("suite exit code {}", summary.exit_code));
    out.finish()?;
    Ok(summary.exit_code)
}

fn cmd_props(a: PropsArgs) -> Result<i32> {
    a.o.validate()?;
    if a.draws == 0 {
        return Err(usage("draws", "must be at least 1"));
    }
    let r = run_property_suite(a.o.seed, a.draws);
    let mut out = Output::new(&a.o.out)?;
    out.json("props.json", &r)?;
    out.line(format!("property suite: seed {}, {} draws per check", r.seed, r.draws));
    for c in &r.checks {
        out.line(format!(
            "  {:<30} evaluated {:>6}  skipped {:>6}  violations {}  worst margin {:.3e}",
            c.name, c.evaluated, c.skipped, c.violations, c.worst_margin
        ));
    }
    out.finish()?;
    Ok(if r.total_violations() == 0 { 0 } else { 1 })
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Stationary(a) => cmd_stationary(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Envelope(a) => cmd_envelope(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Props(a) => cmd_props(a),
        Command::Keys => {
            print!("{CONFIG_REFERENCE}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            if e.downcast_ref::<Usage>().is_some() {
                eprintln!("error: {e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}
