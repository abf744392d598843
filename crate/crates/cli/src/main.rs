use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use flowsection::catalog::{catalog_entries, catalog_get, System};
use flowsection::category::{self, WeakMorphism};
use flowsection::config::SystemConfig;
use flowsection::suspension::{
    suspension_eval, suspension_law_check, suspension_return_check, TorusPoint,
};
use flowsection::{
    parse, sampling, suspend_system, CheckReport, Error, GlobalSectionSystem, MapSystem, Point,
    Tolerances,
};

mod exit {
    pub const LAW_FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;
}

/// Time span for sampled flow-law times.
const LAW_TIME_SPAN: f64 = 3.0;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "flowsection",
    version,
    about = "Poincaré maps, suspensions and adjunction checks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Tolerance for law residuals.
    #[arg(long, global = true)]
    tol_law: Option<f64>,
    /// Bisection tolerance for crossing times.
    #[arg(long, global = true)]
    tol_time: Option<f64>,
    /// Number of random samples per check.
    #[arg(long, global = true, default_value_t = 100)]
    samples: usize,
    /// Seed for every random sample.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Longest flow time searched for a section crossing.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// March step of the crossing search.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Write the JSON document here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SystemRef {
    /// Catalog name (see `catalog`) or `@path/to/config.json`.
    #[arg(long)]
    system: String,
    /// Catalog parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    FlowLaws,
    Poincare,
    Suspension,
    Adjunction,
    Naturality,
    Rate,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
enum Command {
    /// Sample a trajectory on a uniform time grid (flows) or iterate a map.
    Orbit {
        #[command(flatten)]
        system: SystemRef,
        /// Initial point, comma separated.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Point,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Number of iterates for map systems.
        #[arg(long, default_value_t = 10)]
        iterations: u32,
    },
    /// Return time and Poincaré image for section points.
    ReturnMap {
        #[command(flatten)]
        system: SystemRef,
        /// Section point, comma separated; repeatable. Without any, `--samples`
        /// random section points are used.
        #[arg(long = "point", value_parser = parse_point, allow_hyphen_values = true)]
        points: Vec<Point>,
    },
    /// Build the suspension flow of a map and sample a trajectory on it.
    Suspend {
        #[command(flatten)]
        system: SystemRef,
        /// Base point of the mapping torus, comma separated.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Point,
        #[arg(long, default_value_t = 0.0)]
        height: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 0.25)]
        step: f64,
    },
    /// Run a verification suite.
    Verify {
        #[command(flatten)]
        system: SystemRef,
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// List the catalog with parameters and defaults.
    Catalog,
    /// Promote a weak morphism to the rate-preserving one with the same
    /// restriction to the sections.
    Promote {
        /// Source system: catalog name or `@config.json`.
        #[arg(long)]
        source: String,
        #[arg(long = "source-param", value_parser = parse_kv)]
        source_params: Vec<(String, f64)>,
        /// Target system: catalog name or `@config.json`.
        #[arg(long)]
        target: String,
        #[arg(long = "target-param", value_parser = parse_kv)]
        target_params: Vec<(String, f64)>,
        /// Component of the space map `h`, one per target coordinate; the
        /// identity when omitted.
        #[arg(long = "h", allow_hyphen_values = true)]
        h: Vec<String>,
        /// Time reparametrization in the source coordinates and `t`; `t` when omitted.
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
        /// Parameter of the `h` and `tau` expressions, `name=value`; repeatable.
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, f64)>,
    },
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("`{c}`: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Point)
}

/// A failed run: the exit code, a message for stderr, and optionally a
/// document to emit anyway.
struct Failure {
    code: u8,
    message: String,
    results: Option<Value>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Precondition(_) => exit::LAW_FAILURE,
            Error::NoCrossing { .. }
            | Error::OutOfBounds { .. }
            | Error::NonFinite { .. }
            | Error::Eval(_) => exit::NUMERICAL,
            _ => exit::CONFIG,
        };
        let results = match &e {
            Error::Precondition(report) => Some(json!({ "gate_failed": report })),
            _ => None,
        };
        Failure {
            code,
            message: e.to_string(),
            results,
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: exit::CONFIG,
        message: message.into(),
        results: None,
    }
}

struct Outcome {
    results: Value,
    code: u8,
}

fn tolerances(c: &Common) -> Result<Tolerances, Failure> {
    let d = Tolerances::default();
    let tol = Tolerances {
        tol_law: c.tol_law.unwrap_or(d.tol_law),
        tol_time: c.tol_time.unwrap_or(d.tol_time),
        max_horizon: c.horizon.unwrap_or(d.max_horizon),
        dt: c.dt.unwrap_or(d.dt),
        ..d
    };
    tol.validate()?;
    Ok(tol)
}

fn load(reference: &str, params: &[(String, f64)], tol: &Tolerances) -> Result<System, Failure> {
    let system = if let Some(path) = reference.strip_prefix('@') {
        if !params.is_empty() {
            return Err(config_error(
                "parameters of config-file systems belong in the file",
            ));
        }
        let text =
            std::fs::read_to_string(path).map_err(|e| config_error(format!("{path}: {e}")))?;
        SystemConfig::from_json(&text)?.build()?
    } else {
        let map: BTreeMap<String, f64> = params.iter().cloned().collect();
        catalog_get(reference, &map)?
    };
    Ok(match system {
        System::Sectioned(s) => System::Sectioned(Arc::new((*s).clone().with_tolerances(*tol)?)),
        other => other,
    })
}

fn sectioned(system: System, what: &str) -> Result<Arc<GlobalSectionSystem>, Failure> {
    match system {
        System::Sectioned(s) => Ok(s),
        other => Err(config_error(format!(
            "{what} needs a flow with a section, got a {}",
            other.kind()
        ))),
    }
}

fn time_grid(t0: f64, t1: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step.is_finite() && step > 0.0) || !t0.is_finite() || !t1.is_finite() || t1 < t0 {
        return Err(config_error(format!(
            "bad time grid {t0}..{t1} step {step}"
        )));
    }
    let n = ((t1 - t0) / step * (1.0 - 1e-12)).ceil() as usize;
    Ok((0..=n)
        .map(|i| if i == n { t1 } else { t0 + i as f64 * step })
        .collect())
}

fn check_dim(point: &Point, dim: usize) -> Result<(), Failure> {
    if point.dim() != dim {
        return Err(config_error(format!(
            "point has {} coordinate(s), the space has {dim}",
            point.dim()
        )));
    }
    Ok(())
}

fn orbit(
    system: System,
    point: &Point,
    t0: f64,
    t1: f64,
    step: f64,
    iterations: u32,
) -> Result<Outcome, Failure> {
    let rows = match &system {
        System::Map(m) => {
            check_dim(point, m.dim())?;
            let x = m.canonicalize(&point.0)?;
            let mut rows = vec![json!({ "n": 0, "point": x })];
            let mut y = x;
            for n in 1..=iterations {
                y = m.forward(&y)?;
                rows.push(json!({ "n": n, "point": y }));
            }
            rows
        }
        System::Flow(_) | System::Sectioned(_) => {
            let fl = match &system {
                System::Flow(f) => f,
                System::Sectioned(s) => s.flow(),
                System::Map(_) => unreachable!(),
            };
            check_dim(point, fl.space().dim())?;
            let grid = time_grid(t0, t1, step)?;
            let x = fl.canonicalize(&point.0)?;
            if !fl.contains(&x)? {
                return Err(config_error(format!(
                    "initial point {:?} is outside the phase space",
                    x.0
                )));
            }
            grid.iter()
                .map(|&t| Ok(json!({ "t": t, "point": fl.eval(&x, t)? })))
                .collect::<Result<Vec<_>, Failure>>()?
        }
    };
    Ok(Outcome {
        results: json!({ "trajectory": rows }),
        code: 0,
    })
}

fn return_map(
    sys: &GlobalSectionSystem,
    points: Vec<Point>,
    samples: usize,
    seed: u64,
) -> Result<Outcome, Failure> {
    let dim = sys.flow().space().dim();
    for p in &points {
        check_dim(p, dim)?;
    }
    let points = if points.is_empty() {
        sampling::section_points(sys, samples, seed)?
    } else {
        points
    };
    let mut failed = false;
    let rows: Vec<Value> = points
        .iter()
        .map(|x| match sys.first_return(x) {
            Ok((t, p)) => json!({ "x": x, "return_time": t, "image": p }),
            Err(e) => {
                failed = true;
                json!({ "x": x, "error": e.to_string() })
            }
        })
        .collect();
    Ok(Outcome {
        results: json!({ "system": sys.name(), "points": rows }),
        code: if failed { exit::NUMERICAL } else { 0 },
    })
}

fn suspend(
    m: &MapSystem,
    point: &Point,
    height: f64,
    t1: f64,
    step: f64,
) -> Result<Outcome, Failure> {
    check_dim(point, m.dim())?;
    if !(0.0..1.0).contains(&height) {
        return Err(config_error(format!(
            "height must lie in [0, 1), got {height}"
        )));
    }
    let grid = time_grid(0.0, t1, step)?;
    let s = suspend_system(m)?;
    let p = TorusPoint::new(m.canonicalize(&point.0)?, height);
    let rows = grid
        .iter()
        .map(|&t| Ok(json!({ "t": t, "point": suspension_eval(m, &p, t)? })))
        .collect::<Result<Vec<_>, Failure>>()?;
    let section = TorusPoint::new(p.base.clone(), 0.0).to_point();
    let (period, image) = s.first_return(&section)?;
    Ok(Outcome {
        results: json!({
            "system": s.name(),
            "return_time": period,
            "return_image": TorusPoint::from_point(&image),
            "trajectory": rows,
        }),
        code: 0,
    })
}

fn torus_points(samples: &[(Point, f64, f64)]) -> Vec<(Point, f64, f64)> {
    samples
        .iter()
        .map(|(x, t, s)| (TorusPoint::new(x.clone(), *t).to_point(), *s, -0.5 * s))
        .collect()
}

fn verify(
    system: System,
    suite: Suite,
    n: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<CheckReport>, Failure> {
    let law = tol.tol_law;
    let reports = match (suite, system) {
        (Suite::FlowLaws, System::Map(m)) => {
            vec![m.inverse_check(&sampling::map_points(&m, n, seed)?, law)]
        }
        (Suite::FlowLaws, System::Flow(f)) => {
            vec![flowsection::check_flow_laws(
                &f,
                &sampling::flow_law_samples(&f, n, LAW_TIME_SPAN, seed)?,
                law,
            )]
        }
        (Suite::FlowLaws, System::Sectioned(s)) => vec![flowsection::check_flow_laws(
            s.flow(),
            &sampling::flow_law_samples(s.flow(), n, LAW_TIME_SPAN, seed)?,
            law,
        )],
        (Suite::Poincare, system) => {
            let s = sectioned(system, "the poincare suite")?;
            let phase = sampling::flow_points(s.flow(), n, seed)?;
            vec![
                s.recurrence_check(&phase, tol.max_horizon),
                s.inverse_identity_check(&sampling::section_points(&s, n, seed)?, law),
            ]
        }
        (Suite::Suspension, system) => {
            let m = match system {
                System::Map(m) => m,
                System::Sectioned(s) => MapSystem::poincare(s),
                System::Flow(_) => {
                    return Err(config_error(
                        "the suspension suite needs a map or a flow with a section",
                    ))
                }
            };
            let torus = sampling::map_torus_samples(&m, n, LAW_TIME_SPAN, seed)?;
            vec![
                suspension_law_check(&m, &torus_points(&torus), law),
                suspension_return_check(&m, &sampling::map_points(&m, n, seed)?, law)?,
            ]
        }
        (Suite::Adjunction, System::Map(m)) => {
            let sm = Arc::new(suspend_system(&m)?);
            vec![
                category::triangle_identity_1(
                    &m,
                    &sampling::map_torus_samples(&m, n, LAW_TIME_SPAN, seed)?,
                    law,
                )?,
                category::triangle_identity_2(&sm, &sampling::section_points(&sm, n, seed)?, law)?,
            ]
        }
        (Suite::Adjunction, system) => {
            let s = sectioned(system, "the adjunction suite")?;
            let pm = MapSystem::poincare(s.clone());
            let torus = sampling::torus_samples(&s, n, LAW_TIME_SPAN, seed)?;
            let k = category::counit_morphism(&s)?;
            let timed: Vec<(Point, f64)> = torus
                .iter()
                .map(|(x, t, u)| (TorusPoint::new(x.clone(), *t).to_point(), *u))
                .collect();
            let flat: Vec<TorusPoint> = torus
                .iter()
                .map(|(x, t, _)| TorusPoint::new(x.clone(), *t))
                .collect();
            vec![
                category::weak_morphism_check(&k, &timed, law),
                category::counit_bijectivity_check(
                    &s,
                    &sampling::flow_points(s.flow(), n, seed)?,
                    &flat,
                    law,
                )?,
                category::triangle_identity_1(
                    &pm,
                    &sampling::map_torus_samples(&pm, n, LAW_TIME_SPAN, seed)?,
                    law,
                )?,
                category::triangle_identity_2(&s, &sampling::section_points(&s, n, seed)?, law)?,
            ]
        }
        (Suite::Naturality, System::Map(m)) => {
            let id = category::MapMorphism::identity(m.clone());
            vec![category::naturality_check_l(
                &id,
                &sampling::map_points(&m, n, seed)?,
                law,
            )?]
        }
        (Suite::Naturality, system) => {
            let s = sectioned(system, "the naturality suite")?;
            let id = WeakMorphism::identity(s.clone());
            vec![category::naturality_check_k(
                &id,
                &sampling::torus_samples(&s, n, LAW_TIME_SPAN, seed)?,
                law,
            )?]
        }
        (Suite::Rate, system) => {
            let s = match system {
                System::Map(m) => Arc::new(suspend_system(&m)?),
                other => sectioned(other, "the rate suite")?,
            };
            let samples = sampling::torus_samples(&s, n, LAW_TIME_SPAN, seed)?;
            let k = category::counit_morphism(&s)?;
            let counit_samples = sampling::torus_samples(k.source(), n, LAW_TIME_SPAN, seed)?;
            vec![
                category::rate_preserving_check(&WeakMorphism::identity(s.clone()), &samples, law)?,
                category::rate_preserving_check(&k, &counit_samples, law)?,
                category::rate_scaling_check(&k, &counit_samples, law)?,
            ]
        }
    };
    Ok(reports.into_iter().map(|r| r.with_seed(seed)).collect())
}

#[allow(clippy::too_many_arguments)]
fn promote(
    source: Arc<GlobalSectionSystem>,
    target: Arc<GlobalSectionSystem>,
    h: &[String],
    tau: Option<&str>,
    params: &[(String, f64)],
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<Outcome, Failure> {
    let h = if h.is_empty() {
        None
    } else {
        Some(
            h.iter()
                .map(|e| parse(e))
                .collect::<Result<Vec<_>, _>>()
                .map_err(Error::from)?,
        )
    };
    let tau = tau.map(parse).transpose().map_err(Error::from)?;
    let w = WeakMorphism::from_exprs(
        source.clone(),
        target,
        h,
        tau,
        params.iter().cloned().collect(),
    )?;
    let timed = sampling::timed_points(source.flow(), n, LAW_TIME_SPAN, seed)?;
    let section = sampling::section_points(&source, n, seed)?;
    let promoted = category::promote_to_rate_preserving(&w, &timed, &section, tol)?;
    let rows = timed
        .iter()
        .map(|(x, t)| {
            Ok(json!({ "x": x, "t": t, "h": promoted.apply(x)?, "tau": promoted.time(x, *t)? }))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let report = category::rate_preserving_check(
        &promoted,
        &sampling::torus_samples(&source, n, LAW_TIME_SPAN, seed)?,
        tol,
    )?
    .with_seed(seed);
    let code = if report.pass { 0 } else { exit::LAW_FAILURE };
    Ok(Outcome {
        results: json!({ "table": rows, "rate_preserving": report }),
        code,
    })
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let c = &cli.common;
    let tol = tolerances(c)?;
    match &cli.command {
        Command::Orbit {
            system,
            point,
            t0,
            t1,
            step,
            iterations,
        } => orbit(
            load(&system.system, &system.params, &tol)?,
            point,
            *t0,
            *t1,
            *step,
            *iterations,
        ),
        Command::ReturnMap { system, points } => {
            let s = sectioned(load(&system.system, &system.params, &tol)?, "return-map")?;
            return_map(&s, points.clone(), c.samples, c.seed)
        }
        Command::Suspend {
            system,
            point,
            height,
            t1,
            step,
        } => match load(&system.system, &system.params, &tol)? {
            System::Map(m) => suspend(&m, point, *height, *t1, *step),
            other => Err(config_error(format!(
                "suspend needs a map, got a {}",
                other.kind()
            ))),
        },
        Command::Verify { system, suite } => {
            let reports = verify(
                load(&system.system, &system.params, &tol)?,
                *suite,
                c.samples,
                c.seed,
                &tol,
            )?;
            let code = if reports.iter().all(|r| r.pass) {
                0
            } else {
                exit::LAW_FAILURE
            };
            Ok(Outcome {
                results: json!({ "suite": suite, "pass": code == 0, "reports": reports }),
                code,
            })
        }
        Command::Catalog => Ok(Outcome {
            results: json!({ "entries": catalog_entries(), "suspensions": "suspension:<map name> for every map entry" }),
            code: 0,
        }),
        Command::Promote {
            source,
            source_params,
            target,
            target_params,
            h,
            tau,
            params,
        } => {
            let src = sectioned(load(source, source_params, &tol)?, "promote")?;
            let tgt = sectioned(load(target, target_params, &tol)?, "promote")?;
            promote(
                src,
                tgt,
                h,
                tau.as_deref(),
                params,
                c.samples,
                c.seed,
                tol.tol_law,
            )
        }
    }
}

fn emit(cli: &Cli, results: Value) -> Result<(), String> {
    let doc = json!({
        "meta": {
            "command": cli.command,
            "config": cli.common,
            "seed": cli.common.seed,
            "version": env!("CARGO_PKG_VERSION"),
        },
        "results": results,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    text.push('\n');
    match &cli.common.output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (results, code) = match run(&cli) {
        Ok(out) => (Some(out.results), out.code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            (f.results, f.code)
        }
    };
    if let Some(results) = results {
        if let Err(e) = emit(&cli, results) {
            eprintln!("error: {e}");
            return ExitCode::from(exit::CONFIG);
        }
    }
    ExitCode::from(code)
}
