//! Registry of test problems with exact solutions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::integrator::TimeMesh;
use crate::ode::OdeProblem;
use crate::scalar::Scalar;

/// A registered problem with its default mesh ladder.
#[derive(Debug, Clone)]
pub struct ProblemSpec<S: Scalar> {
    pub name: &'static str,
    pub problem: OdeProblem<S>,
    /// Node counts `L` of the default uniform ladder (`dt = (t_end - t0) / (L - 1)`).
    /// Empty for problems whose default meshes are graded.
    pub node_counts: Vec<usize>,
    pub default_meshes: Vec<TimeMesh<S>>,
    pub notes: String,
}

/// Summary row for listings.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub dim: usize,
    pub domain: &'static str,
    pub params: &'static str,
    pub description: &'static str,
}

pub const PROBLEM_NAMES: [&str; 7] = [
    "harm_osc", "exp_diss", "bratu", "third1", "third2", "third3", "flame",
];

pub fn list_problems() -> Vec<ProblemInfo> {
    vec![
        ProblemInfo {
            name: "harm_osc",
            dim: 2,
            domain: "[0, 2pi]",
            params: "",
            description: "harmonic oscillator u1' = u2, u2' = -u1",
        },
        ProblemInfo {
            name: "exp_diss",
            dim: 2,
            domain: "[0, 2pi]",
            params: "",
            description: "exponential growth/decay u1' = u2, u2' = u1",
        },
        ProblemInfo {
            name: "bratu",
            dim: 2,
            domain: "[0, 1]",
            params: "",
            description: "Bratu initial value problem x'' = 2 exp(x)",
        },
        ProblemInfo {
            name: "third1",
            dim: 3,
            domain: "[0, 1]",
            params: "",
            description: "linear third-order equation, x = t^2 exp(-2t) - t^2 + 3",
        },
        ProblemInfo {
            name: "third2",
            dim: 3,
            domain: "[0, 1]",
            params: "",
            description: "nonlinear third-order equation, x = ln(1 + t)",
        },
        ProblemInfo {
            name: "third3",
            dim: 3,
            domain: "[1, 2]",
            params: "",
            description: "nonlinear third-order equation, x = sin(4 pi t)",
        },
        ProblemInfo {
            name: "flame",
            dim: 1,
            domain: "[0, 2/delta]",
            params: "delta (default 1e-4)",
            description: "flame propagation u' = u^2 - u^3, u(0) = delta",
        },
    ]
}

fn ladder(first: usize, step: usize) -> Vec<usize> {
    (0..6).map(|i| first + i * step).collect()
}

fn uniform_ladder<S: Scalar>(counts: &[usize], t0: S, t1: S) -> Result<Vec<TimeMesh<S>>> {
    counts
        .iter()
        .map(|&l| TimeMesh::with_node_count(l, t0, t1))
        .collect()
}

fn no_params(name: &str, params: &BTreeMap<String, f64>) -> Result<()> {
    match params.keys().next() {
        Some(k) => Err(Error::Parameter(format!(
            "problem '{name}' takes no parameter '{k}'"
        ))),
        None => Ok(()),
    }
}

fn finish<S: Scalar>(
    name: &'static str,
    problem: OdeProblem<S>,
    node_counts: Vec<usize>,
    notes: &str,
) -> Result<ProblemSpec<S>> {
    let default_meshes = uniform_ladder(&node_counts, problem.t0(), problem.t_end())?;
    Ok(ProblemSpec {
        name,
        problem,
        node_counts,
        default_meshes,
        notes: notes.to_string(),
    })
}

/// Looks up a problem by name. The only parameter in use is `delta` for `flame`.
pub fn get_problem<S: Scalar>(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<ProblemSpec<S>> {
    let c = S::of;
    match name {
        "harm_osc" => {
            no_params(name, params)?;
            let p = OdeProblem::new(
                name,
                vec![c(1.0), c(0.0)],
                c(0.0),
                c(2.0) * S::PI(),
                |_, u, f| {
                    f[0] = u[1];
                    f[1] = -u[0];
                },
            )?
            .with_jacobian(|_, _, j| {
                j[(0, 0)] = S::zero();
                j[(0, 1)] = S::one();
                j[(1, 0)] = -S::one();
                j[(1, 1)] = S::zero();
            })
            .with_exact(|t: S| vec![t.cos(), -t.sin()]);
            finish("harm_osc", p, ladder(6, 5), "")
        }
        "exp_diss" => {
            no_params(name, params)?;
            let p = OdeProblem::new(
                name,
                vec![c(0.0), c(1.0)],
                c(0.0),
                c(2.0) * S::PI(),
                |_, u, f| {
                    f[0] = u[1];
                    f[1] = u[0];
                },
            )?
            .with_jacobian(|_, _, j| {
                j[(0, 0)] = S::zero();
                j[(0, 1)] = S::one();
                j[(1, 0)] = S::one();
                j[(1, 1)] = S::zero();
            })
            .with_exact(|t: S| vec![t.sinh(), t.cosh()]);
            finish("exp_diss", p, ladder(6, 5), "")
        }
        "bratu" => {
            no_params(name, params)?;
            let two = c(2.0);
            let p = OdeProblem::new(
                name,
                vec![c(0.0), c(0.0)],
                c(0.0),
                c(1.0),
                move |_, u, f| {
                    f[0] = u[1];
                    f[1] = two * u[0].exp();
                },
            )?
            .with_jacobian(move |_, u, j| {
                j[(0, 0)] = S::zero();
                j[(0, 1)] = S::one();
                j[(1, 0)] = two * u[0].exp();
                j[(1, 1)] = S::zero();
            })
            .with_exact(move |t: S| vec![-two * t.cos().ln(), two * t.tan()]);
            finish("bratu", p, ladder(31, 10), "")
        }
        "third1" => {
            no_params(name, params)?;
            let p = OdeProblem::new(
                name,
                vec![c(3.0), c(0.0), c(0.0)],
                c(0.0),
                c(1.0),
                move |t, u, f| {
                    f[0] = u[1];
                    f[1] = u[2];
                    f[2] = c(2.0) * u[2] + c(3.0) * u[1] - c(10.0) * u[0]
                        + (c(34.0) * t - c(16.0)) * (c(-2.0) * t).exp()
                        - c(10.0) * t * t
                        + c(6.0) * t
                        + c(34.0);
                },
            )?
            .with_jacobian(move |_, _, j| {
                *j = crate::linalg::DenseMatrix::from_rows(&[
                    vec![S::zero(), S::one(), S::zero()],
                    vec![S::zero(), S::zero(), S::one()],
                    vec![c(-10.0), c(3.0), c(2.0)],
                ]);
            })
            .with_exact(move |t: S| {
                let e = (c(-2.0) * t).exp();
                vec![
                    t * t * e - t * t + c(3.0),
                    c(2.0) * t * ((S::one() - t) * e - S::one()),
                    c(2.0) * ((S::one() - c(4.0) * t + c(2.0) * t * t) * e - S::one()),
                ]
            });
            finish(
                "third1",
                p,
                ladder(16, 5),
                "initial value u1(0) = 3 follows the scalar statement and the exact solution; \
                 the system form elsewhere prints u1(0) = 1, which contradicts x(0) = 3. \
                 The exact u2 is the derivative of u1, 2t((1 - t)e^(-2t) - 1).",
            )
        }
        "third2" => {
            no_params(name, params)?;
            let p = OdeProblem::new(
                name,
                vec![c(0.0), c(1.0), c(-1.0)],
                c(0.0),
                c(1.0),
                move |t, u, f| {
                    f[0] = u[1];
                    f[1] = u[2];
                    f[2] = c(4.0) / (S::one() + t).powi(3) - c(2.0) * (c(-3.0) * u[0]).exp();
                },
            )?
            .with_jacobian(move |_, u, j| {
                *j = crate::linalg::DenseMatrix::from_rows(&[
                    vec![S::zero(), S::one(), S::zero()],
                    vec![S::zero(), S::zero(), S::one()],
                    vec![c(6.0) * (c(-3.0) * u[0]).exp(), S::zero(), S::zero()],
                ]);
            })
            .with_exact(move |t: S| {
                let s = S::one() + t;
                vec![s.ln(), s.recip(), -(s * s).recip()]
            });
            finish("third2", p, ladder(16, 5), "")
        }
        "third3" => {
            no_params(name, params)?;
            let pi = S::PI();
            let four_pi = c(4.0) * pi;
            let p = OdeProblem::new(
                name,
                vec![c(0.0), four_pi, c(0.0)],
                c(1.0),
                c(2.0),
                move |t, u, f| {
                    f[0] = u[1];
                    f[1] = u[2];
                    f[2] = u[0] * u[2] - c(2.0) / t * u[1]
                        + c(16.0) * pi * pi * u[0] * u[0]
                        + (c(8.0) * pi / t - c(64.0) * pi * pi * pi) * (four_pi * t).cos();
                },
            )?
            .with_jacobian(move |t, u, j| {
                *j = crate::linalg::DenseMatrix::from_rows(&[
                    vec![S::zero(), S::one(), S::zero()],
                    vec![S::zero(), S::zero(), S::one()],
                    vec![u[2] + c(32.0) * pi * pi * u[0], c(-2.0) / t, u[0]],
                ]);
            })
            .with_exact(move |t: S| {
                let (s, co) = (four_pi * t).sin_cos();
                vec![s, four_pi * co, -four_pi * four_pi * s]
            });
            finish(
                "third3",
                p,
                ladder(16, 5),
                "initial data are imposed at t = 1, the left end of the domain [1, 2]",
            )
        }
        "flame" => {
            let mut delta = 1e-4;
            for (k, &v) in params {
                match k.as_str() {
                    "delta" => delta = v,
                    other => {
                        return Err(Error::Parameter(format!(
                            "problem 'flame' takes no parameter '{other}'"
                        )))
                    }
                }
            }
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Parameter(format!(
                    "flame needs 0 < delta < 1, got {delta}"
                )));
            }
            let d = c(delta);
            let p = OdeProblem::new(name, vec![d], c(0.0), c(2.0) / d, |_, u, f| {
                f[0] = u[0] * u[0] - u[0] * u[0] * u[0];
            })?
            .with_jacobian(move |_, u, j| j[(0, 0)] = c(2.0) * u[0] - c(3.0) * u[0] * u[0])
            .with_exact(move |t: S| vec![flame_exact(t, d)]);
            Ok(ProblemSpec {
                name: "flame",
                default_meshes: flame_meshes(d)?,
                problem: p,
                node_counts: vec![],
                notes: "graded meshes: coarse / fine / coarse over [0, 0.4/delta], [0.4/delta, 0.6/delta], \
                        [0.6/delta, 2/delta] (0.495 and 0.505 for delta = 1e-5); counts are cells"
                    .to_string(),
            })
        }
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

/// The four graded meshes for the flame problem (coarse / fine / coarse).
pub fn flame_meshes<S: Scalar>(delta: S) -> Result<Vec<TimeMesh<S>>> {
    let extreme = (delta.to_f64_lossy() - 1e-5).abs() < 1e-12;
    let (lo, hi, coarse) = if extreme {
        (S::of(0.495), S::of(0.505), [40usize, 48, 60, 80])
    } else {
        (S::of(0.4), S::of(0.6), [10usize, 12, 15, 20])
    };
    let fine = [1000usize, 1200, 1500, 2000];
    let (a, b, end) = (lo / delta, hi / delta, S::of(2.0) / delta);
    coarse
        .iter()
        .zip(&fine)
        .map(|(&c, &f)| TimeMesh::graded(&[(c, S::zero(), a), (f, a, b), (c, b, end)]))
        .collect()
}

/// Principal-branch Lambert W in log form: the `w > 0` with `w + ln w = y`,
/// i.e. `W(e^y)`, without forming `e^y`.
pub fn lambert_w_principal<S: Scalar>(y: S) -> S {
    if y < S::of(-40.0) {
        // W(x) = x - x^2 + ..., and x = e^y is below 5e-18 here.
        return y.exp();
    }
    let w0 = if y > S::of(2.0) {
        y - y.max(S::of(2.0)).ln()
    } else {
        y.exp() / (S::one() + y.exp())
    };
    // Newton on v = ln w: h(v) = e^v + v - y is convex and increasing, so the
    // iteration cannot leave the domain.
    let mut v = w0.ln();
    let tol = S::of(4.0) * S::eps() * v.abs().max(S::one());
    for _ in 0..50 {
        let ev = v.exp();
        let dv = (ev + v - y) / (ev + S::one());
        v = v - dv;
        if dv.abs() <= tol {
            break;
        }
    }
    v.exp()
}

/// Exact flame solution `1 / (W(a e^(a - t)) + 1)`, `a = 1/delta - 1`.
pub fn flame_exact<S: Scalar>(t: S, delta: S) -> S {
    let a = delta.recip() - S::one();
    let w = lambert_w_principal(a.ln() + a - t);
    (w + S::one()).recip()
}
