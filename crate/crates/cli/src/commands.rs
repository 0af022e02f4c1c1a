//! Command implementations, generic over the working precision.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use aderdg_core::analysis::{convergence_study, StudyOptions};
use aderdg_core::integrator::{solve_ivp, tabulate_subgrid, IntegratorOptions, SubnodePlacement};
use aderdg_core::problems::{get_problem, list_problems, ProblemSpec};
use aderdg_core::stability::{linspace, logspace, raster_region, ray_profile};
use aderdg_core::{SchemeTables, SolverOptions, TimeMesh};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::config::{ConvergeArgs, Placement, SolveArgs, StabilityArgs, TableFormat, TablesArgs};
use crate::error::CliError;
use crate::output::{csv_line, emit, Emit};

/// Counters reported on standard error after a command.
#[derive(Debug, Default)]
pub struct Summary {
    pub fields: Vec<(&'static str, String)>,
}

impl Summary {
    fn push(&mut self, key: &'static str, value: impl ToString) {
        self.fields.push((key, value.to_string()));
    }

    pub fn line(&self, command: &str, started: Instant) -> String {
        let mut s = String::from(command);
        for (k, v) in &self.fields {
            let _ = write!(s, " {k}={v}");
        }
        let _ = write!(s, " wall={:.3}s", started.elapsed().as_secs_f64());
        s
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Calls `$f::<S>(args)` with the scalar chosen by `precision`.
macro_rules! dispatch {
    ($precision:expr, $f:ident, $($arg:expr),*) => {
        match $precision {
            $crate::config::Precision::F64 => $f::<f64>($($arg),*),
            #[cfg(feature = "extended")]
            $crate::config::Precision::Extended => $f::<aderdg_core::scalar::Extended>($($arg),*),
            #[cfg(not(feature = "extended"))]
            $crate::config::Precision::Extended => Err($crate::error::CliError::Config(
                "this build has no extended precision; rebuild with the `extended` feature".into(),
            )),
        }
    };
}
pub(crate) use dispatch;

fn raw<S: Emit>(v: S) -> Box<RawValue> {
    RawValue::from_string(v.text()).expect("finite scalar formats as a JSON number")
}

fn raw_vec<S: Emit>(v: &[S]) -> Vec<Box<RawValue>> {
    v.iter().map(|&x| raw(x)).collect()
}

fn raw_rows<S: Emit>(m: &aderdg_core::DenseMatrix<S>) -> Vec<Vec<Box<RawValue>>> {
    (0..m.rows()).map(|i| raw_vec(m.row(i))).collect()
}

#[derive(Serialize)]
struct TablesJson {
    degree: usize,
    precision: &'static str,
    nodes: Vec<Box<RawValue>>,
    weights: Vec<Box<RawValue>>,
    barycentric_weights: Vec<Box<RawValue>>,
    mass: Vec<Box<RawValue>>,
    phi_at_0: Vec<Box<RawValue>>,
    phi_at_1: Vec<Box<RawValue>>,
    #[serde(rename = "D")]
    d: Vec<Vec<Box<RawValue>>>,
    #[serde(rename = "K")]
    k: Vec<Vec<Box<RawValue>>>,
    #[serde(rename = "K_inv")]
    k_inv: Vec<Vec<Box<RawValue>>>,
    #[serde(rename = "B")]
    b: Vec<Vec<Box<RawValue>>>,
}

pub fn tables<S: Emit>(args: &TablesArgs) -> Result<Summary, CliError> {
    let t = SchemeTables::<S>::build(args.degree)?;
    let text = match args.format {
        TableFormat::Json => {
            let doc = TablesJson {
                degree: t.degree(),
                precision: S::NAME,
                nodes: raw_vec(t.nodes()),
                weights: raw_vec(t.weights()),
                barycentric_weights: raw_vec(t.bary_weights()),
                mass: raw_vec(t.mass()),
                phi_at_0: raw_vec(t.phi_at_0()),
                phi_at_1: raw_vec(t.phi_at_1()),
                d: raw_rows(t.diff_matrix()),
                k: raw_rows(t.k()),
                k_inv: raw_rows(t.k_inv()),
                b: raw_rows(t.b()),
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("tables serialize");
            s.push('\n');
            s
        }
        TableFormat::Csv => {
            let mut s = csv_line(
                ["p", "tau", "w", "M"]
                    .into_iter()
                    .map(String::from)
                    .chain((0..t.len()).map(|q| format!("B_{q}"))),
            );
            for p in 0..t.len() {
                s.push_str(&csv_line(
                    [
                        p.to_string(),
                        t.nodes()[p].text(),
                        t.weights()[p].text(),
                        t.mass()[p].text(),
                    ]
                    .into_iter()
                    .chain(t.b().row(p).iter().map(|v| v.text())),
                ));
            }
            s
        }
    };
    emit(args.out.as_deref(), &text)?;
    let mut sum = Summary::default();
    sum.push("degree", args.degree);
    sum.push("precision", S::NAME);
    Ok(sum)
}

fn load_problem<S: Emit>(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<ProblemSpec<S>, CliError> {
    get_problem::<S>(name, params).map_err(|e| match e {
        aderdg_core::Error::UnknownProblem(n) => config(format!(
            "unknown problem '{n}'; available: {}",
            aderdg_core::problems::PROBLEM_NAMES.join(", ")
        )),
        other => other.into(),
    })
}

fn solver_options<S: Emit>(
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> Result<SolverOptions<S>, CliError> {
    let mut o = SolverOptions::<S>::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(config(format!("--tol must be positive, got {t}")));
        }
        o.tol = S::of(t);
    }
    if let Some(m) = max_iter {
        if m == 0 {
            return Err(config("--max-iter must be at least 1"));
        }
        o.picard_max_iter = m;
        o.newton_max_iter = m;
    }
    Ok(o)
}

pub fn solve<S: Emit>(args: &SolveArgs) -> Result<Summary, CliError> {
    let params = crate::config::collect_params(&args.param, &args.param_table)?;
    let spec = load_problem::<S>(&args.problem, &params)?;
    let mesh = match &args.mesh {
        Some(m) => TimeMesh::<S>::parse(m)?,
        None => spec.default_meshes.last().cloned().ok_or_else(|| {
            config(format!(
                "problem '{}' has no default mesh; pass --mesh",
                args.problem
            ))
        })?,
    };
    let mut opts = IntegratorOptions::<S>::new(args.degree).solver(args.solver);
    opts.solver_opts = solver_options(args.tol, args.max_iter)?;
    let traj = solve_ivp(&spec.problem, &mesh, &opts)?;

    let k = traj.dim();
    let mut out = csv_line(
        std::iter::once("t".to_string())
            .chain((1..=k).map(|i| format!("u_{i}")))
            .chain(std::iter::once("kind".to_string())),
    );
    let row = |t: S, u: &[S], kind: &str| {
        csv_line(
            std::iter::once(t.text())
                .chain(u.iter().map(|v| v.text()))
                .chain(std::iter::once(kind.to_string())),
        )
    };
    let sub = if args.subnodes > 0 {
        let placement = match args.placement {
            Placement::Centered => SubnodePlacement::CellCentered,
            Placement::Endpoints => SubnodePlacement::Endpoints,
        };
        Some(tabulate_subgrid(&traj, args.subnodes, placement)?)
    } else {
        None
    };
    let nodes = mesh.nodes();
    for (n, &t) in nodes[..mesh.num_elements()].iter().enumerate() {
        out.push_str(&row(t, traj.node_value(n), "node"));
        if let Some(g) = &sub {
            for i in n * args.subnodes..(n + 1) * args.subnodes {
                out.push_str(&row(g.times[i], g.values.row(i), "sub"));
            }
        }
    }
    let last = mesh.num_elements();
    out.push_str(&row(nodes[last], traj.node_value(last), "node"));
    emit(args.out.as_deref(), &out)?;

    let mut sum = Summary::default();
    sum.push("problem", &args.problem);
    sum.push("degree", args.degree);
    sum.push("precision", S::NAME);
    sum.push("solver", args.solver);
    sum.push("elements", mesh.num_elements());
    sum.push("iterations", traj.stats.iterations);
    sum.push("rhs_evals", traj.stats.rhs_evals);
    sum.push("jac_evals", traj.stats.jac_evals);
    sum.push("escalations", traj.escalations);
    Ok(sum)
}

fn parse_fields(spec: &str, flag: &str, expect: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != expect {
        return Err(config(format!("--{flag} '{spec}': expected {what}")));
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| config(format!("--{flag} '{spec}': '{p}' is not a number")))
        })
        .collect()
}

fn parse_count(x: f64, flag: &str) -> Result<usize, CliError> {
    if x >= 1.0 && x.fract() == 0.0 && x <= 1e7 {
        Ok(x as usize)
    } else {
        Err(config(format!(
            "--{flag}: counts must be positive integers, got {x}"
        )))
    }
}

/// Parses `log:lo:hi:count` or `lin:lo:hi:count`.
pub fn parse_radii<S: Emit>(spec: &str) -> Result<Vec<S>, CliError> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| {
        config(format!(
            "--radii '{spec}': expected log:lo:hi:count or lin:lo:hi:count"
        ))
    })?;
    let f = parse_fields(rest, "radii", 3, "log:lo:hi:count or lin:lo:hi:count")?;
    let count = parse_count(f[2], "radii")?;
    if !(f[0] > 0.0 && f[1] > f[0]) {
        return Err(config(format!("--radii '{spec}': need 0 < lo < hi")));
    }
    match kind {
        "log" => Ok(logspace(S::of(f[0]), S::of(f[1]), count)),
        "lin" => Ok(linspace(S::of(f[0]), S::of(f[1]), count)),
        other => Err(config(format!(
            "--radii '{spec}': unknown spacing '{other}' (log or lin)"
        ))),
    }
}

pub fn stability<S: Emit>(args: &StabilityArgs) -> Result<Summary, CliError> {
    let t = SchemeTables::<S>::build(args.degree)?;
    let mut sum = Summary::default();
    sum.push("degree", args.degree);
    sum.push("precision", S::NAME);
    let text = if let Some(mult) = args.ray {
        if args.window.is_some() {
            return Err(config("--window and --ray are exclusive"));
        }
        let radii = parse_radii::<S>(&args.radii)?;
        let arg = S::of(mult) * S::PI();
        let prof = ray_profile(&t, arg, &radii)?;
        let mut s = String::from("r,absR\n");
        for (r, a) in radii.iter().zip(&prof) {
            s.push_str(&csv_line([r.text(), a.text()]));
        }
        sum.push("mode", "ray");
        sum.push("points", radii.len());
        s
    } else {
        let w = parse_fields(
            args.window.as_deref().unwrap_or("-10:10:-10:10"),
            "window",
            4,
            "reMin:reMax:imMin:imMax",
        )?;
        let r = parse_fields(&args.res, "res", 2, "W:H")?;
        let (nx, ny) = (parse_count(r[0], "res")?, parse_count(r[1], "res")?);
        if !(w[1] >= w[0] && w[3] >= w[2]) {
            return Err(config(format!(
                "--window: bounds must be min:max, got {w:?}"
            )));
        }
        let raster = raster_region(
            &t,
            (S::of(w[0]), S::of(w[1])),
            (S::of(w[2]), S::of(w[3])),
            (nx, ny),
        )?;
        let mut s = String::from("re,im,absR\n");
        let mut poles = 0usize;
        for (x, y, a) in raster.samples() {
            poles += usize::from(a.is_infinite());
            s.push_str(&csv_line([x.text(), y.text(), a.text()]));
        }
        sum.push("mode", "raster");
        sum.push("points", nx * ny);
        sum.push("stable", raster.stable.iter().filter(|b| **b).count());
        sum.push("poles", poles);
        s
    };
    emit(args.out.as_deref(), &text)?;
    Ok(sum)
}

pub fn converge<S: Emit>(args: &ConvergeArgs) -> Result<Summary, CliError> {
    let params = crate::config::collect_params(&args.param, &args.param_table)?;
    let spec = load_problem::<S>(&args.problem, &params)?;
    let p = &spec.problem;
    let meshes = if args.meshes.is_empty() {
        if spec.node_counts.is_empty() {
            return Err(config(format!(
                "problem '{}' has no uniform ladder; pass --meshes L1,L2,...",
                args.problem
            )));
        }
        spec.default_meshes.clone()
    } else {
        args.meshes
            .iter()
            .map(|&l| TimeMesh::with_node_count(l, p.t0(), p.t_end()))
            .collect::<aderdg_core::Result<Vec<_>>>()?
    };
    if args.jobs == 0 {
        return Err(config("--jobs must be at least 1"));
    }
    if args.subnodes == 0 {
        return Err(config("--subnodes must be at least 1"));
    }
    let mut opts = StudyOptions::<S>::new(args.degree);
    opts.integrator = opts.integrator.solver(args.solver);
    opts.subnodes = args.subnodes;
    opts.noise_floor = args.noise_floor;
    opts.jobs = args.jobs;
    let report = convergence_study(p, &meshes, &opts)?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(args.out.as_deref(), &text)?;

    let mut sum = Summary::default();
    sum.push("problem", &args.problem);
    sum.push("degree", args.degree);
    sum.push("precision", S::NAME);
    sum.push("meshes", meshes.len());
    sum.push("node_order_L1", format!("{:.3}", report.orders.node.l1));
    sum.push("local_order_L1", format!("{:.3}", report.orders.local.l1));
    sum.push("iterations", report.stats.iterations);
    sum.push("rhs_evals", report.stats.rhs_evals);
    sum.push("jac_evals", report.stats.jac_evals);
    Ok(sum)
}

pub fn problems_list() -> Result<Summary, CliError> {
    let mut s = String::from("name      dim  domain        parameters            description\n");
    for p in list_problems() {
        let _ = writeln!(
            s,
            "{:<9} {:<4} {:<13} {:<21} {}",
            p.name, p.dim, p.domain, p.params, p.description
        );
    }
    emit(None, &s)?;
    Ok(Summary::default())
}
