//! Element-by-element time marching and dense output.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::ode::OdeProblem;
use crate::predictor::{
    newton_solve, picard_solve, ElementCoefficients, SolveStats, SolverKind, SolverOptions,
};
use crate::scalar::Scalar;
use crate::tables::SchemeTables;

/// Strictly increasing grid `t_0 < t_1 < ... < t_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh<S: Scalar> {
    nodes: Vec<S>,
}

impl<S: Scalar> TimeMesh<S> {
    pub fn new(nodes: Vec<S>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Invalid("a mesh needs at least two nodes".into()));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid("mesh nodes must be finite".into()));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid(format!(
                "mesh nodes must be strictly increasing (nodes {i} and {})",
                i + 1
            )));
        }
        Ok(Self { nodes })
    }

    /// `cells` equal elements on `[a, b]`. The last node is exactly `b`.
    pub fn uniform(cells: usize, a: S, b: S) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Invalid("a mesh needs at least one cell".into()));
        }
        let h = (b - a) / S::of_usize(cells);
        let mut nodes: Vec<S> = (0..cells).map(|i| a + h * S::of_usize(i)).collect();
        nodes.push(b);
        Self::new(nodes)
    }

    /// Uniform mesh with `nodes` grid nodes (so `nodes - 1` cells).
    pub fn with_node_count(nodes: usize, a: S, b: S) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Invalid(format!(
                "need at least 2 nodes, got {nodes}"
            )));
        }
        Self::uniform(nodes - 1, a, b)
    }

    /// Piecewise-uniform mesh; each segment is `(cells, a, b)` and segments
    /// must be contiguous.
    pub fn graded(segments: &[(usize, S, S)]) -> Result<Self> {
        let Some(&(_, first, _)) = segments.first() else {
            return Err(Error::Invalid(
                "graded mesh needs at least one segment".into(),
            ));
        };
        let mut nodes = vec![first];
        let mut end = first;
        for (i, &(cells, a, b)) in segments.iter().enumerate() {
            if a != end {
                return Err(Error::Invalid(format!(
                    "graded segment {i} starts at {a} but the previous one ends at {end}"
                )));
            }
            let seg = Self::uniform(cells, a, b)?;
            nodes.extend_from_slice(&seg.nodes[1..]);
            end = b;
        }
        Self::new(nodes)
    }

    /// Parses `uniform:CELLS:a:b` or `graded:CELLS:a:b,CELLS:b:c,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Invalid(format!("mesh spec '{spec}': {msg}"));
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| bad("expected uniform:CELLS:a:b or graded:CELLS:a:b,..."))?;
        let segment = |s: &str| -> Result<(usize, S, S)> {
            let parts: Vec<&str> = s.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad("each segment is CELLS:a:b"));
            }
            let cells = parts[0]
                .parse::<usize>()
                .map_err(|_| bad("cell count must be a positive integer"))?;
            let num = |x: &str| -> Result<S> {
                x.parse::<f64>()
                    .map(S::of)
                    .map_err(|_| bad(&format!("'{x}' is not a number")))
            };
            Ok((cells, num(parts[1])?, num(parts[2])?))
        };
        match kind.trim() {
            "uniform" => {
                let (cells, a, b) = segment(rest)?;
                Self::uniform(cells, a, b)
            }
            "graded" => {
                let segs = rest.split(',').map(segment).collect::<Result<Vec<_>>>()?;
                Self::graded(&segs)
            }
            other => Err(bad(&format!("unknown mesh kind '{other}'"))),
        }
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> S {
        self.nodes[0]
    }

    pub fn end(&self) -> S {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn dt(&self, element: usize) -> S {
        self.nodes[element + 1] - self.nodes[element]
    }

    pub fn max_dt(&self) -> S {
        (0..self.num_elements()).fold(S::zero(), |m, i| m.max(self.dt(i)))
    }

    /// Element containing `t`; elements are half-open except the last one.
    pub fn locate(&self, t: S) -> Option<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return None;
        }
        let i = self.nodes.partition_point(|&x| x <= t);
        Some(i.saturating_sub(1).min(self.num_elements() - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions<S: Scalar> {
    pub degree: usize,
    pub solver: SolverKind,
    pub solver_opts: SolverOptions<S>,
    /// Reuse the predictor's final `F` values in the corrector.
    pub cache_rhs: bool,
}

impl<S: Scalar> IntegratorOptions<S> {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            solver: SolverKind::Auto,
            solver_opts: SolverOptions::default(),
            cache_rhs: true,
        }
    }

    pub fn solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }
}

/// Node values and per-element local solutions of one run.
#[derive(Debug, Clone)]
pub struct Trajectory<S: Scalar> {
    pub tables: Arc<SchemeTables<S>>,
    pub mesh: TimeMesh<S>,
    /// Row `n` is `u_n`.
    pub node_values: DenseMatrix<S>,
    pub elements: Vec<ElementCoefficients<S>>,
    pub stats: SolveStats,
    /// Elements on which `auto` mode had to fall back to Newton.
    pub escalations: usize,
}

impl<S: Scalar> Trajectory<S> {
    pub fn degree(&self) -> usize {
        self.tables.degree()
    }

    pub fn dim(&self) -> usize {
        self.node_values.cols()
    }

    pub fn node_value(&self, n: usize) -> &[S] {
        self.node_values.row(n)
    }

    pub fn final_value(&self) -> &[S] {
        self.node_values.row(self.node_values.rows() - 1)
    }
}

/// Corrector `u_{n+1} = u_n + dt sum_p w_p F(q_p, t_p)`.
///
/// Returns the new node value and the number of right-hand-side calls made,
/// which is zero when the element carries cached `F` values.
pub fn advance_node<S: Scalar>(
    tables: &SchemeTables<S>,
    problem: &OdeProblem<S>,
    u_n: &[S],
    element: &ElementCoefficients<S>,
) -> Result<(Vec<S>, usize)> {
    let k = u_n.len();
    let w = tables.weights();
    let mut out = u_n.to_vec();
    let mut evals = 0;
    let mut scratch = vec![S::zero(); k];
    for p in 0..tables.len() {
        let f = match &element.rhs_cache {
            Some(cache) => cache.row(p),
            None => {
                let t = element.t_left + element.dt * tables.nodes()[p];
                problem.eval_rhs(t, element.coeffs.row(p), &mut scratch);
                evals += 1;
                &scratch[..]
            }
        };
        for (o, &fv) in out.iter_mut().zip(f) {
            *o = *o + element.dt * w[p] * fv;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteNode {
            element: element.element_index,
            t: element.t_right().to_f64_lossy(),
        });
    }
    Ok((out, evals))
}

fn with_element(err: Error, index: usize) -> Error {
    match err {
        Error::Divergence {
            method,
            t_left,
            t_right,
            stats,
            ..
        } => Error::Divergence {
            method,
            element: index,
            t_left,
            t_right,
            stats,
        },
        other => other,
    }
}

/// Solves one element with the configured strategy. Returns the element,
/// its stats, and whether Newton had to take over from Picard.
pub fn solve_element<S: Scalar>(
    tables: &SchemeTables<S>,
    problem: &OdeProblem<S>,
    u_n: &[S],
    t_left: S,
    dt: S,
    solver: SolverKind,
    opts: &SolverOptions<S>,
) -> Result<(ElementCoefficients<S>, SolveStats, bool)> {
    match solver {
        SolverKind::Picard => {
            picard_solve(tables, problem, u_n, t_left, dt, opts).map(|(e, s)| (e, s, false))
        }
        SolverKind::Newton => {
            newton_solve(tables, problem, u_n, t_left, dt, opts).map(|(e, s)| (e, s, false))
        }
        SolverKind::Auto => match picard_solve(tables, problem, u_n, t_left, dt, opts) {
            Ok((e, s)) => Ok((e, s, false)),
            Err(Error::Divergence { stats: picard, .. }) => {
                match newton_solve(tables, problem, u_n, t_left, dt, opts) {
                    Ok((e, mut s)) => {
                        let residual = s.residual_norm;
                        s.accumulate(&picard);
                        s.residual_norm = residual;
                        Ok((e, s, true))
                    }
                    Err(Error::Divergence {
                        method,
                        element,
                        t_left,
                        t_right,
                        mut stats,
                    }) => {
                        stats.accumulate(&picard);
                        Err(Error::Divergence {
                            method,
                            element,
                            t_left,
                            t_right,
                            stats,
                        })
                    }
                    Err(e) => Err(e),
                }
            }
            Err(e) => Err(e),
        },
    }
}

/// Marches `problem` across `mesh`, which must start at `problem.t0()` and
/// end no later than `problem.t_end()`.
pub fn solve_ivp<S: Scalar>(
    problem: &OdeProblem<S>,
    mesh: &TimeMesh<S>,
    opts: &IntegratorOptions<S>,
) -> Result<Trajectory<S>> {
    let tables = Arc::new(SchemeTables::build(opts.degree)?);
    solve_ivp_with_tables(tables, problem, mesh, opts)
}

/// As [`solve_ivp`], reusing prebuilt tables (their degree overrides `opts.degree`).
pub fn solve_ivp_with_tables<S: Scalar>(
    tables: Arc<SchemeTables<S>>,
    problem: &OdeProblem<S>,
    mesh: &TimeMesh<S>,
    opts: &IntegratorOptions<S>,
) -> Result<Trajectory<S>> {
    let span = problem.t_end() - problem.t0();
    let slack = S::of(1e-12) * span.abs().max(S::one());
    if (mesh.start() - problem.t0()).abs() > slack {
        return Err(Error::Invalid(format!(
            "mesh starts at {} but the initial value is given at {}",
            mesh.start(),
            problem.t0()
        )));
    }
    if mesh.end() > problem.t_end() + slack {
        return Err(Error::Invalid(format!(
            "mesh ends at {} beyond the problem domain end {}",
            mesh.end(),
            problem.t_end()
        )));
    }

    let k = problem.dim();
    let l = mesh.num_elements();
    let mut node_values = DenseMatrix::zeros(l + 1, k);
    node_values.row_mut(0).copy_from_slice(problem.u0());
    let mut elements = Vec::with_capacity(l);
    let mut stats = SolveStats {
        converged: true,
        ..SolveStats::default()
    };
    let mut escalations = 0;
    let mut u = problem.u0().to_vec();

    for n in 0..l {
        let (t_left, dt) = (mesh.nodes()[n], mesh.dt(n));
        let (mut element, s, escalated) = solve_element(
            &tables,
            problem,
            &u,
            t_left,
            dt,
            opts.solver,
            &opts.solver_opts,
        )
        .map_err(|e| with_element(e, n))?;
        element.element_index = n;
        if !opts.cache_rhs {
            element.rhs_cache = None;
        }
        stats.accumulate(&s);
        escalations += usize::from(escalated);

        let (next, evals) = advance_node(&tables, problem, &u, &element)?;
        stats.rhs_evals += evals;
        node_values.row_mut(n + 1).copy_from_slice(&next);
        u = next;
        elements.push(element);
    }

    Ok(Trajectory {
        tables,
        mesh: mesh.clone(),
        node_values,
        elements,
        stats,
        escalations,
    })
}

/// Local solution `q_n((t - t_n) / dt_n)` on the element containing `t`.
pub fn dense_eval<S: Scalar>(traj: &Trajectory<S>, t: S) -> Result<Vec<S>> {
    let n = traj.mesh.locate(t).ok_or_else(|| Error::OutOfRange {
        t: t.to_f64_lossy(),
        t0: traj.mesh.start().to_f64_lossy(),
        t1: traj.mesh.end().to_f64_lossy(),
    })?;
    let e = &traj.elements[n];
    Ok(e.eval(&traj.tables, (t - e.t_left) / e.dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubnodePlacement {
    /// `xi_m = (m + 0.5) / M`; no point is shared between elements.
    #[default]
    CellCentered,
    /// `xi_m = m / (M - 1)`, both element ends included (`M = 1` gives the left end).
    Endpoints,
}

impl SubnodePlacement {
    pub fn points<S: Scalar>(self, m: usize) -> Vec<S> {
        match self {
            SubnodePlacement::CellCentered => (0..m)
                .map(|i| (S::of_usize(i) + S::of(0.5)) / S::of_usize(m))
                .collect(),
            SubnodePlacement::Endpoints if m == 1 => vec![S::zero()],
            SubnodePlacement::Endpoints => (0..m)
                .map(|i| S::of_usize(i) / S::of_usize(m - 1))
                .collect(),
        }
    }
}

/// Local solution sampled at `M` sub-nodes per element.
#[derive(Debug, Clone)]
pub struct Subgrid<S: Scalar> {
    pub times: Vec<S>,
    /// Row `i` is `u_L(times[i])`.
    pub values: DenseMatrix<S>,
    /// Element index of each row.
    pub element: Vec<usize>,
}

/// One `M x (N+1)` basis matrix times each element's `(N+1) x K` coefficients.
pub fn tabulate_subgrid<S: Scalar>(
    traj: &Trajectory<S>,
    m: usize,
    placement: SubnodePlacement,
) -> Result<Subgrid<S>> {
    if m == 0 {
        return Err(Error::Invalid("sub-node count must be at least 1".into()));
    }
    let xi: Vec<S> = placement.points(m);
    let phi = traj.tables.basis_matrix(&xi);
    let l = traj.elements.len();
    let k = traj.dim();
    let mut times = Vec::with_capacity(l * m);
    let mut values = DenseMatrix::zeros(l * m, k);
    let mut element = Vec::with_capacity(l * m);
    for (n, e) in traj.elements.iter().enumerate() {
        let block = phi.matmul(&e.coeffs)?;
        for (i, &x) in xi.iter().enumerate() {
            times.push(e.t_left + e.dt * x);
            values.row_mut(n * m + i).copy_from_slice(block.row(i));
            element.push(n);
        }
    }
    Ok(Subgrid {
        times,
        values,
        element,
    })
}

/// `max_k |q_n(1) - u_{n+1}|` per element: the mismatch between the local
/// solution's right end and the corrected node value.
pub fn element_jumps<S: Scalar>(traj: &Trajectory<S>) -> Vec<S> {
    traj.elements
        .iter()
        .enumerate()
        .map(|(n, e)| {
            let right = e.eval(&traj.tables, S::one());
            crate::scalar::max_abs_diff(&right, traj.node_value(n + 1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn polynomial_problem(coef: Vec<f64>) -> OdeProblem<f64> {
        OdeProblem::new("poly", vec![0.0], 0.0, 10.0, move |t, _, out| {
            out[0] = coef.iter().rev().fold(0.0, |acc, c| acc * t + c);
        })
        .unwrap()
    }

    fn oscillator() -> OdeProblem<f64> {
        OdeProblem::new(
            "osc",
            vec![1.0, 0.0],
            0.0,
            2.0 * std::f64::consts::PI,
            |_, u, out| {
                out[0] = u[1];
                out[1] = -u[0];
            },
        )
        .unwrap()
        .with_jacobian(|_, _, j| {
            j[(0, 0)] = 0.0;
            j[(0, 1)] = 1.0;
            j[(1, 0)] = -1.0;
            j[(1, 1)] = 0.0;
        })
        .with_exact(|t| vec![t.cos(), -t.sin()])
    }

    #[test]
    fn mesh_constructors() {
        let m = TimeMesh::<f64>::uniform(4, 0.0, 1.0).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = TimeMesh::<f64>::parse("graded:2:0:1,4:1:2").unwrap();
        assert_eq!(g.num_elements(), 6);
        assert_eq!(g.nodes()[2], 1.0);
        assert_eq!(g.end(), 2.0);
        assert_eq!(
            TimeMesh::<f64>::with_node_count(6, 0.0, 5.0).unwrap().dt(0),
            1.0
        );
        assert!(TimeMesh::<f64>::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeMesh::<f64>::new(vec![0.0]).is_err());
        assert!(TimeMesh::<f64>::parse("graded:2:0:1,4:1.5:2").is_err());
        assert!(TimeMesh::<f64>::parse("random:3:0:1").is_err());
        assert!(TimeMesh::<f64>::parse("uniform:x:0:1").is_err());
    }

    #[test]
    fn locate_is_half_open_except_last() {
        let m = TimeMesh::<f64>::uniform(4, 0.0, 1.0).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.25), Some(1));
        assert_eq!(m.locate(1.0), Some(3));
        assert_eq!(m.locate(1.5), None);
        assert_eq!(m.locate(-0.1), None);
    }

    #[test]
    fn corrector_examples() {
        let t = SchemeTables::<f64>::build(3).unwrap();
        let zero = polynomial_problem(vec![0.0]);
        let e = ElementCoefficients {
            coeffs: crate::predictor::initial_guess(&[2.0], 3),
            element_index: 0,
            t_left: 0.0,
            dt: 0.7,
            rhs_cache: None,
        };
        let (u, evals) = advance_node(&t, &zero, &[2.0], &e).unwrap();
        assert_eq!(u, vec![2.0]);
        assert_eq!(evals, 4);

        let c = polynomial_problem(vec![1.5]);
        let (u, _) = advance_node(&t, &c, &[2.0], &e).unwrap();
        assert!((u[0] - (2.0 + 1.5 * 0.7)).abs() <= 1e-15);
    }

    #[test]
    fn backward_euler_anchor() {
        let p = OdeProblem::new("d", vec![1.0], 0.0, 1.0, |_, u, out| out[0] = -u[0]).unwrap();
        let h = 0.1;
        let mesh = TimeMesh::uniform(10, 0.0, 1.0).unwrap();
        let opts = IntegratorOptions::new(0).solver(SolverKind::Newton);
        let traj = solve_ivp(&p, &mesh, &opts).unwrap();
        let mut u: f64 = 1.0;
        for n in 1..=10 {
            u /= 1.0 + h;
            assert!((traj.node_value(n)[0] - u).abs() <= 1e-15);
        }
    }

    #[test]
    fn constant_slope_is_exact() {
        let p = polynomial_problem(vec![1.0]);
        let mesh = TimeMesh::new(vec![0.0, 0.3, 1.1, 1.2, 2.5]).unwrap();
        for n in 0..5 {
            let traj = solve_ivp(&p, &mesh, &IntegratorOptions::new(n)).unwrap();
            for (i, &t) in mesh.nodes().iter().enumerate() {
                assert!((traj.node_value(i)[0] - t).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn oscillator_reaches_roundoff() {
        let p = oscillator();
        let mesh = TimeMesh::with_node_count(6, 0.0, p.t_end()).unwrap();
        let traj = solve_ivp(&p, &mesh, &IntegratorOptions::new(8)).unwrap();
        let exact = p.exact(p.t_end()).unwrap();
        assert!(crate::scalar::max_abs_diff(traj.final_value(), &exact) <= 1e-12);

        let sub = tabulate_subgrid(&traj, 200, SubnodePlacement::CellCentered).unwrap();
        for (i, &t) in sub.times.iter().enumerate() {
            let ex = p.exact(t).unwrap();
            assert!(crate::scalar::max_abs_diff(sub.values.row(i), &ex) <= 1e-7);
        }
    }

    #[test]
    fn dense_eval_hits_coefficients_at_nodes() {
        let p = oscillator();
        let mesh = TimeMesh::uniform(7, 0.0, 3.0).unwrap();
        let traj = solve_ivp(&p, &mesh, &IntegratorOptions::new(4)).unwrap();
        let e = &traj.elements[3];
        for (i, &tau) in traj.tables.nodes().iter().enumerate() {
            let v = dense_eval(&traj, e.t_left + e.dt * tau).unwrap();
            assert!(crate::scalar::max_abs_diff(&v, e.coeffs.row(i)) <= 1e-14);
        }
        assert!(matches!(
            dense_eval(&traj, 3.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn subgrid_shapes() {
        let p = polynomial_problem(vec![0.0])
            .with_initial(0.0, vec![4.0])
            .unwrap();
        let mesh = TimeMesh::uniform(5, 0.0, 1.0).unwrap();
        let traj = solve_ivp(&p, &mesh, &IntegratorOptions::new(0)).unwrap();
        let sub = tabulate_subgrid(&traj, 1, SubnodePlacement::CellCentered).unwrap();
        assert_eq!(sub.times.len(), 5);
        assert!((sub.times[0] - 0.1).abs() < 1e-15);
        assert!(sub.values.as_slice().iter().all(|&v| v == 4.0));
        let ends = tabulate_subgrid(&traj, 3, SubnodePlacement::Endpoints).unwrap();
        assert_eq!(ends.times.len(), 15);
        assert_eq!(ends.times[2], 0.2);
        assert!(tabulate_subgrid(&traj, 0, SubnodePlacement::CellCentered).is_err());
    }

    #[test]
    fn one_step_property() {
        let p = oscillator();
        let mesh = TimeMesh::new(vec![0.0, 0.7, 1.5]).unwrap();
        let opts = IntegratorOptions::new(3);
        let whole = solve_ivp(&p, &mesh, &opts).unwrap();
        let first = solve_ivp(&p, &TimeMesh::new(vec![0.0, 0.7]).unwrap(), &opts).unwrap();
        let restarted = p
            .clone()
            .with_initial(0.7, first.final_value().to_vec())
            .unwrap();
        let second = solve_ivp(&restarted, &TimeMesh::new(vec![0.7, 1.5]).unwrap(), &opts).unwrap();
        assert!(crate::scalar::max_abs_diff(whole.final_value(), second.final_value()) <= 1e-14);
    }

    #[test]
    fn caching_does_not_change_results_only_counts() {
        let p = oscillator();
        let mesh = TimeMesh::uniform(5, 0.0, 2.0).unwrap();
        let cached = solve_ivp(
            &p,
            &mesh,
            &IntegratorOptions::new(3).solver(SolverKind::Picard),
        )
        .unwrap();
        let mut o = IntegratorOptions::new(3).solver(SolverKind::Picard);
        o.cache_rhs = false;
        let fresh = solve_ivp(&p, &mesh, &o).unwrap();
        assert_eq!(fresh.stats.rhs_evals, cached.stats.rhs_evals + 5 * 4);
        assert!(crate::scalar::max_abs_diff(fresh.final_value(), cached.final_value()) <= 1e-15);
    }

    #[test]
    fn local_solution_meets_next_node() {
        let p = oscillator();
        for cells in [5, 20] {
            let mesh = TimeMesh::uniform(cells, 0.0, p.t_end()).unwrap();
            let traj = solve_ivp(&p, &mesh, &IntegratorOptions::new(2)).unwrap();
            assert_eq!(element_jumps(&traj).len(), cells);
            assert!(element_jumps(&traj).into_iter().all(|j| j <= 1e-12));
        }
    }

    #[test]
    fn mesh_must_start_at_initial_time() {
        let p = oscillator();
        let mesh = TimeMesh::uniform(4, 0.5, 1.0).unwrap();
        assert!(solve_ivp(&p, &mesh, &IntegratorOptions::new(1)).is_err());
        let long = TimeMesh::uniform(4, 0.0, 10.0).unwrap();
        assert!(solve_ivp(&p, &long, &IntegratorOptions::new(1)).is_err());
    }

    proptest! {
        #[test]
        fn dense_output_of_linear_slope(t in 0.0f64..=2.0, n in 2usize..=5) {
            // u' = 2t: t^2 lies in the trial space once N >= 2.
            let p = polynomial_problem(vec![0.0, 2.0]);
            let mesh = TimeMesh::uniform(3, 0.0, 2.0).unwrap();
            let traj = solve_ivp(&p, &mesh, &IntegratorOptions::new(n)).unwrap();
            let v = dense_eval(&traj, t).unwrap()[0];
            prop_assert!((v - t * t).abs() <= 1e-12);
        }

        #[test]
        fn reinterpolation_is_idempotent(tau in 0.0f64..=1.0) {
            let p = oscillator();
            let mesh = TimeMesh::uniform(2, 0.0, 1.0).unwrap();
            let traj = solve_ivp(&p, &mesh, &IntegratorOptions::new(5)).unwrap();
            let e = &traj.elements[1];
            let samples: Vec<Vec<f64>> = traj.tables.nodes().iter().map(|&x| e.eval(&traj.tables, x)).collect();
            let phi = traj.tables.basis_eval_all(tau);
            let direct = e.eval(&traj.tables, tau);
            for c in 0..2 {
                let re: f64 = phi.iter().zip(&samples).map(|(p, s)| p * s[c]).sum();
                prop_assert!((re - direct[c]).abs() <= 1e-12);
            }
        }
    }
}
