//! Error norms, order fitting and the mesh-ladder convergence harness.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{
    solve_ivp_with_tables, tabulate_subgrid, IntegratorOptions, SubnodePlacement, TimeMesh,
    Trajectory,
};
use crate::ode::OdeProblem;
use crate::predictor::SolveStats;
use crate::scalar::{max_abs_diff, Scalar};
use crate::tables::SchemeTables;

/// Rows with an error below this are left out of order fits (binary64).
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-12;

/// `max_k |u_k - u_k^exact|`.
pub fn pointwise_error<S: Scalar>(u: &[S], exact: &[S]) -> S {
    max_abs_diff(u, exact)
}

/// Discrete L1, L2 and L-infinity norms of the pointwise error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "Linf")]
    pub linf: f64,
}

impl ErrorNorms {
    pub fn get(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => self.l1,
            Norm::L2 => self.l2,
            Norm::Linf => self.linf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    pub fn label(self) -> &'static str {
        match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
            Norm::Linf => "Linf",
        }
    }
}

/// Norms plus, optionally, the pointwise errors they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport<S: Scalar> {
    pub l1: S,
    pub l2: S,
    pub linf: S,
    /// `(t, eps(t))` samples.
    pub pointwise: Option<Vec<(S, S)>>,
}

impl<S: Scalar> ErrorReport<S> {
    fn from_samples(samples: Vec<(S, S, S)>, keep: bool) -> Self {
        let (mut l1, mut l2, mut linf) = (S::zero(), S::zero(), S::zero());
        for &(_, w, e) in &samples {
            l1 = l1 + w * e;
            l2 = l2 + w * e * e;
            linf = linf.max(e);
        }
        Self {
            l1,
            l2: l2.sqrt(),
            linf,
            pointwise: keep.then(|| samples.into_iter().map(|(t, _, e)| (t, e)).collect()),
        }
    }

    pub fn norms(&self) -> ErrorNorms {
        ErrorNorms {
            l1: self.l1.to_f64_lossy(),
            l2: self.l2.to_f64_lossy(),
            linf: self.linf.to_f64_lossy(),
        }
    }
}

/// Node and local error norms of a trajectory against `exact`.
///
/// Node sums weight `eps(t_n)` by the width of the element ending at `t_n`;
/// the max runs over all nodes. Local sums use `M` cell-centred sub-nodes per
/// element weighted by `dt_n / M`, with the max over sub-nodes.
pub fn global_errors_with<S, E>(
    traj: &Trajectory<S>,
    exact: E,
    m: usize,
    keep_pointwise: bool,
) -> Result<(ErrorReport<S>, ErrorReport<S>)>
where
    S: Scalar,
    E: Fn(S) -> Vec<S>,
{
    if m == 0 {
        return Err(Error::Invalid("sub-node count must be at least 1".into()));
    }
    let mesh = &traj.mesh;
    let mut node = Vec::with_capacity(mesh.nodes().len());
    for (n, &t) in mesh.nodes().iter().enumerate() {
        let w = if n == 0 { S::zero() } else { mesh.dt(n - 1) };
        node.push((t, w, pointwise_error(traj.node_value(n), &exact(t))));
    }

    let sub = tabulate_subgrid(traj, m, SubnodePlacement::CellCentered)?;
    let mm = S::of_usize(m);
    let local = sub
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let w = mesh.dt(sub.element[i]) / mm;
            (t, w, pointwise_error(sub.values.row(i), &exact(t)))
        })
        .collect();

    Ok((
        ErrorReport::from_samples(node, keep_pointwise),
        ErrorReport::from_samples(local, keep_pointwise),
    ))
}

/// [`global_errors_with`] using the problem's exact solution.
pub fn global_errors<S: Scalar>(
    traj: &Trajectory<S>,
    problem: &OdeProblem<S>,
    m: usize,
) -> Result<(ErrorReport<S>, ErrorReport<S>)> {
    let exact = problem
        .exact_fn()
        .ok_or_else(|| Error::MissingExact(problem.name().to_string()))?;
    global_errors_with(traj, |t| exact(t), m, false)
}

/// Least-squares slope of `ln e` against `ln dt`.
pub fn fit_order(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Invalid(format!(
            "order fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return Err(Error::Invalid(
            "order fit needs positive step sizes and errors".into(),
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-24 * mx.abs().max(1.0) {
        return Err(Error::DegenerateFit);
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    #[serde(rename = "eG")]
    pub e_g: ErrorNorms,
    #[serde(rename = "eL")]
    pub e_l: ErrorNorms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedOrders {
    pub node: ErrorNorms,
    pub local: ErrorNorms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalOrders {
    pub node: usize,
    pub local: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub degree: usize,
    pub rows: Vec<ConvergenceRow>,
    pub orders: FittedOrders,
    pub theoretical: TheoreticalOrders,
    /// Solver counters summed over every mesh.
    #[serde(skip)]
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions<S: Scalar> {
    pub integrator: IntegratorOptions<S>,
    /// Sub-nodes per element for the local error.
    pub subnodes: usize,
    pub noise_floor: f64,
    /// Worker threads for the independent mesh solves.
    pub jobs: usize,
}

impl<S: Scalar> StudyOptions<S> {
    pub fn new(degree: usize) -> Self {
        Self {
            integrator: IntegratorOptions::new(degree),
            subnodes: 1000,
            noise_floor: DEFAULT_NOISE_FLOOR,
            jobs: 1,
        }
    }
}

fn fit_column(
    rows: &[ConvergenceRow],
    pick: impl Fn(&ConvergenceRow) -> f64,
    label: &'static str,
    floor: f64,
) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.dt, pick(r)))
        .filter(|&(_, e)| e >= floor && e.is_finite())
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData {
            norm: label,
            usable: pts.len(),
            floor,
        });
    }
    fit_order(&pts)
}

fn fit_all(rows: &[ConvergenceRow], local: bool, floor: f64) -> Result<ErrorNorms> {
    let mut out = [0.0; 3];
    for (slot, norm) in out.iter_mut().zip(Norm::ALL) {
        let label = match (local, norm) {
            (false, Norm::L1) => "node L1",
            (false, Norm::L2) => "node L2",
            (false, Norm::Linf) => "node Linf",
            (true, Norm::L1) => "local L1",
            (true, Norm::L2) => "local L2",
            (true, Norm::Linf) => "local Linf",
        };
        *slot = fit_column(
            rows,
            |r| {
                if local {
                    r.e_l.get(norm)
                } else {
                    r.e_g.get(norm)
                }
            },
            label,
            floor,
        )?;
    }
    Ok(ErrorNorms {
        l1: out[0],
        l2: out[1],
        linf: out[2],
    })
}

/// Fits node and local orders over rows whose error is at or above `floor`.
pub fn assemble_report(
    degree: usize,
    rows: Vec<ConvergenceRow>,
    floor: f64,
    stats: SolveStats,
) -> Result<ConvergenceReport> {
    let orders = FittedOrders {
        node: fit_all(&rows, false, floor)?,
        local: fit_all(&rows, true, floor)?,
    };
    Ok(ConvergenceReport {
        degree,
        rows,
        orders,
        theoretical: TheoreticalOrders {
            node: 2 * degree + 1,
            local: degree + 1,
        },
        stats,
    })
}

fn check_ladder<S: Scalar>(meshes: &[TimeMesh<S>]) -> Result<()> {
    let Some(first) = meshes.first() else {
        return Err(Error::Invalid(
            "convergence study needs at least one mesh".into(),
        ));
    };
    let span = (first.end() - first.start()).abs().max(S::one());
    let tol = S::of(1e-9) * span;
    for (i, m) in meshes.iter().enumerate() {
        if (m.start() - first.start()).abs() > tol || (m.end() - first.end()).abs() > tol {
            return Err(Error::Invalid(format!(
                "mesh {i} covers a different domain"
            )));
        }
        let h = m.dt(0);
        if (0..m.num_elements()).any(|n| (m.dt(n) - h).abs() > tol) {
            return Err(Error::Invalid(format!("mesh {i} is not uniform")));
        }
    }
    Ok(())
}

type RowResult = Result<(ConvergenceRow, SolveStats)>;

/// Solves one mesh and returns its error row.
pub fn study_row<S: Scalar>(
    tables: &Arc<SchemeTables<S>>,
    problem: &OdeProblem<S>,
    mesh: &TimeMesh<S>,
    opts: &StudyOptions<S>,
) -> Result<(ConvergenceRow, SolveStats)> {
    let traj = solve_ivp_with_tables(tables.clone(), problem, mesh, &opts.integrator)?;
    let (node, local) = global_errors(&traj, problem, opts.subnodes)?;
    Ok((
        ConvergenceRow {
            dt: mesh.max_dt().to_f64_lossy(),
            e_g: node.norms(),
            e_l: local.norms(),
        },
        traj.stats,
    ))
}

/// Solves `problem` on each uniform mesh of the ladder and fits orders.
///
/// Meshes are independent, so up to `opts.jobs` of them run at once; rows
/// keep the order of `meshes` regardless.
pub fn convergence_study<S: Scalar>(
    problem: &OdeProblem<S>,
    meshes: &[TimeMesh<S>],
    opts: &StudyOptions<S>,
) -> Result<ConvergenceReport> {
    check_ladder(meshes)?;
    if !problem.has_exact() {
        return Err(Error::MissingExact(problem.name().to_string()));
    }
    let tables = Arc::new(SchemeTables::build(opts.integrator.degree)?);
    let results: Vec<RowResult> = if opts.jobs <= 1 || meshes.len() == 1 {
        meshes
            .iter()
            .map(|m| study_row(&tables, problem, m, opts))
            .collect()
    } else {
        let slots: Mutex<Vec<Option<RowResult>>> =
            Mutex::new((0..meshes.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..opts.jobs.min(meshes.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= meshes.len() {
                        break;
                    }
                    let r = study_row(&tables, problem, &meshes[i], opts);
                    slots.lock().expect("worker panicked")[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .expect("worker panicked")
            .into_iter()
            .map(|r| r.expect("every mesh is solved"))
            .collect()
    };

    let mut rows = Vec::with_capacity(results.len());
    let mut stats = SolveStats {
        converged: true,
        ..SolveStats::default()
    };
    for r in results {
        let (row, s) = r?;
        stats.accumulate(&s);
        rows.push(row);
    }
    assemble_report(opts.integrator.degree, rows, opts.noise_floor, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::solve_ivp;
    use crate::problems::get_problem;
    use std::collections::BTreeMap;

    #[test]
    fn pointwise_examples() {
        assert_eq!(pointwise_error(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(pointwise_error(&[1.0, 2.0], &[1.5, 2.0]), 0.5);
        assert_eq!(pointwise_error(&[1.0, -3.0], &[0.0, 0.0]), 3.0);
    }

    #[test]
    fn fit_examples() {
        assert!((fit_order(&[(0.1, 1e-3), (0.05, 1.25e-4)]).unwrap() - 3.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&h| (h, 7.0 * h * h))
            .collect();
        assert!((fit_order(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            fit_order(&[(0.1, 1.0), (0.1, 2.0)]),
            Err(Error::DegenerateFit)
        ));
        assert!(fit_order(&[(0.1, 1.0)]).is_err());
        assert!(fit_order(&[(0.1, 0.0), (0.2, 1.0)]).is_err());
    }

    fn constant_trajectory(c: f64) -> (Trajectory<f64>, OdeProblem<f64>) {
        let p = OdeProblem::new("zero", vec![c], 0.0, 3.0, |_, _, f| f[0] = 0.0).unwrap();
        let mesh = TimeMesh::uniform(6, 0.0, 3.0).unwrap();
        (solve_ivp(&p, &mesh, &IntegratorOptions::new(2)).unwrap(), p)
    }

    #[test]
    fn exact_solution_has_zero_error() {
        let (traj, _) = constant_trajectory(1.0);
        let (g, l) = global_errors_with(&traj, |_| vec![1.0], 10, false).unwrap();
        assert_eq!((g.l1, g.l2, g.linf), (0.0, 0.0, 0.0));
        assert!(l.linf <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn constant_error_norms() {
        let c = 0.25;
        let (traj, _) = constant_trajectory(1.0 + c);
        let (g, l) = global_errors_with(&traj, |_| vec![1.0], 10, true).unwrap();
        for r in [&g, &l] {
            assert!((r.l1 - c * 3.0).abs() < 1e-14);
            assert!((r.l2 - c * 3f64.sqrt()).abs() < 1e-14);
            assert!((r.linf - c).abs() < 1e-15);
        }
        assert_eq!(l.pointwise.as_ref().unwrap().len(), 60);
        assert_eq!(g.pointwise.as_ref().unwrap().len(), 7);
    }

    #[test]
    fn missing_exact_is_reported() {
        let (traj, p) = constant_trajectory(1.0);
        assert!(matches!(
            global_errors(&traj, &p, 5),
            Err(Error::MissingExact(_))
        ));
    }

    #[test]
    fn node_linf_matches_recomputation() {
        let spec = get_problem::<f64>("harm_osc", &BTreeMap::new()).unwrap();
        let p = &spec.problem;
        let mesh = &spec.default_meshes[0];
        let traj = solve_ivp(p, mesh, &IntegratorOptions::new(2)).unwrap();
        let (g, _) = global_errors(&traj, p, 20).unwrap();
        let mut worst: f64 = 0.0;
        for (n, &t) in mesh.nodes().iter().enumerate() {
            let u = traj.node_value(n);
            worst = worst
                .max((u[0] - t.cos()).abs())
                .max((u[1] + t.sin()).abs());
        }
        assert_eq!(g.linf, worst);
    }

    #[test]
    fn ladder_must_be_uniform_and_aligned() {
        let spec = get_problem::<f64>("harm_osc", &BTreeMap::new()).unwrap();
        let bad = vec![
            spec.default_meshes[0].clone(),
            TimeMesh::uniform(10, 0.0, 1.0).unwrap(),
        ];
        assert!(convergence_study(&spec.problem, &bad, &StudyOptions::new(1)).is_err());
        let graded =
            vec![TimeMesh::graded(&[(2, 0.0, 1.0), (5, 1.0, spec.problem.t_end())]).unwrap()];
        assert!(convergence_study(&spec.problem, &graded, &StudyOptions::new(1)).is_err());
    }

    #[test]
    fn parallel_study_matches_serial() {
        let spec = get_problem::<f64>("exp_diss", &BTreeMap::new()).unwrap();
        let mut opts = StudyOptions::new(1);
        opts.subnodes = 50;
        let serial = convergence_study(&spec.problem, &spec.default_meshes, &opts).unwrap();
        opts.jobs = 4;
        let parallel = convergence_study(&spec.problem, &spec.default_meshes, &opts).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.theoretical.node, 3);
        assert_eq!(serial.theoretical.local, 2);
    }

    #[test]
    fn errors_decrease_along_ladder() {
        for name in [
            "harm_osc", "exp_diss", "bratu", "third1", "third2", "third3",
        ] {
            let spec = get_problem::<f64>(name, &BTreeMap::new()).unwrap();
            let mut opts = StudyOptions::new(2);
            opts.subnodes = 20;
            let r = convergence_study(&spec.problem, &spec.default_meshes, &opts).unwrap();
            for w in r.rows.windows(2) {
                assert!(w[1].e_g.l1 <= w[0].e_g.l1, "{name}");
                assert!(w[1].e_l.linf <= w[0].e_l.linf, "{name}");
            }
        }
    }

    #[test]
    fn insufficient_rows_name_the_floor() {
        let rows = vec![
            ConvergenceRow {
                dt: 0.1,
                e_g: ErrorNorms {
                    l1: 1e-3,
                    l2: 1e-3,
                    linf: 1e-3,
                },
                e_l: ErrorNorms {
                    l1: 1e-3,
                    l2: 1e-3,
                    linf: 1e-3,
                },
            },
            ConvergenceRow {
                dt: 0.05,
                e_g: ErrorNorms {
                    l1: 1e-14,
                    l2: 1e-14,
                    linf: 1e-14,
                },
                e_l: ErrorNorms {
                    l1: 1e-4,
                    l2: 1e-4,
                    linf: 1e-4,
                },
            },
        ];
        match assemble_report(1, rows, 1e-12, SolveStats::default()) {
            Err(Error::InsufficientData { floor, usable, .. }) => {
                assert_eq!(floor, 1e-12);
                assert_eq!(usable, 1);
            }
            other => panic!("expected insufficient data, got {other:?}"),
        }
    }

    #[test]
    fn report_serializes_with_short_keys() {
        let row = ConvergenceRow {
            dt: 0.5,
            e_g: ErrorNorms {
                l1: 1.0,
                l2: 2.0,
                linf: 3.0,
            },
            e_l: ErrorNorms {
                l1: 1.0,
                l2: 2.0,
                linf: 3.0,
            },
        };
        let json = serde_json::to_string(&row).unwrap();
        assert_eq!(
            json,
            r#"{"dt":0.5,"eG":{"L1":1.0,"L2":2.0,"Linf":3.0},"eL":{"L1":1.0,"L2":2.0,"Linf":3.0}}"#
        );
    }
}
