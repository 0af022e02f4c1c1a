//! Linear stability of the scheme on `u' = lambda u`, `z = lambda dt`.
//!
//! With `q = (E - zB)^-1 1 u_n` from the predictor and the Gauss corrector,
//! `u_{n+1} = R(z) u_n` where `R(z) = 1 + z w^T (E - zB)^-1 1`. By the matrix
//! determinant lemma this equals `det(E - zB + z 1 w^T) / det(E - zB)`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{determinant, DenseMatrix, LinalgError};
use crate::scalar::Scalar;
use crate::tables::SchemeTables;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityEvaluation<S: Scalar> {
    pub z: Complex<S>,
    /// `None` at a pole of `R`.
    pub r: Option<Complex<S>>,
    /// `|R(z)|`, `+inf` at a pole.
    pub abs_r: S,
}

fn shifted<S: Scalar>(tables: &SchemeTables<S>, z: Complex<S>) -> DenseMatrix<Complex<S>> {
    let b = tables.b();
    DenseMatrix::from_fn(tables.len(), tables.len(), |p, q| {
        let id = if p == q {
            Complex::new(S::one(), S::zero())
        } else {
            Complex::new(S::zero(), S::zero())
        };
        id - z * b[(p, q)]
    })
}

fn pole<S: Scalar>(z: Complex<S>) -> Error {
    Error::Pole {
        re: z.re.to_f64_lossy(),
        im: z.im.to_f64_lossy(),
    }
}

/// Resolvent form `1 + z w^T (E - zB)^-1 1`.
pub fn stability_r<S: Scalar>(tables: &SchemeTables<S>, z: Complex<S>) -> Result<Complex<S>> {
    let a = shifted(tables, z);
    let ones = vec![Complex::new(S::one(), S::zero()); tables.len()];
    let x = match a.lu() {
        Ok(lu) => lu.solve(&ones)?,
        Err(LinalgError::Singular { .. }) => return Err(pole(z)),
        Err(e) => return Err(e.into()),
    };
    let wx = tables
        .weights()
        .iter()
        .zip(&x)
        .fold(Complex::new(S::zero(), S::zero()), |acc, (&w, &v)| {
            acc + v * w
        });
    Ok(Complex::new(S::one(), S::zero()) + z * wx)
}

/// Determinant form `det(E - zB + z 1 w^T) / det(E - zB)`.
pub fn stability_r_det<S: Scalar>(tables: &SchemeTables<S>, z: Complex<S>) -> Result<Complex<S>> {
    let den_m = shifted(tables, z);
    let w = tables.weights();
    let num_m = DenseMatrix::from_fn(tables.len(), tables.len(), |p, q| den_m[(p, q)] + z * w[q]);
    let den = determinant(&den_m)?;
    if den.norm() == S::zero() || den_m.lu().is_err() {
        return Err(pole(z));
    }
    Ok(determinant(&num_m)? / den)
}

/// `R(z)` with poles turned into `abs_r = +inf` instead of an error.
pub fn evaluate<S: Scalar>(tables: &SchemeTables<S>, z: Complex<S>) -> StabilityEvaluation<S> {
    match stability_r(tables, z) {
        Ok(r) => StabilityEvaluation {
            z,
            r: Some(r),
            abs_r: r.norm(),
        },
        Err(_) => StabilityEvaluation {
            z,
            r: None,
            abs_r: S::infinity(),
        },
    }
}

/// `|R|` sampled on a rectangular grid.
#[derive(Debug, Clone)]
pub struct StabilityRaster<S: Scalar> {
    pub re: Vec<S>,
    pub im: Vec<S>,
    /// Row-major over `(im, re)`: entry `i * re.len() + j` is at `re[j] + i im[i]`.
    pub abs_r: Vec<S>,
    /// `|R| < 1`.
    pub stable: Vec<bool>,
}

impl<S: Scalar> StabilityRaster<S> {
    pub fn at(&self, im_index: usize, re_index: usize) -> S {
        self.abs_r[im_index * self.re.len() + re_index]
    }

    /// `(re, im, |R|)` in row-major order.
    pub fn samples(&self) -> impl Iterator<Item = (S, S, S)> + '_ {
        self.im.iter().enumerate().flat_map(move |(i, &y)| {
            self.re
                .iter()
                .enumerate()
                .map(move |(j, &x)| (x, y, self.abs_r[i * self.re.len() + j]))
        })
    }
}

/// `count` evenly spaced points from `lo` to `hi` inclusive (`lo` alone if `count == 1`).
pub fn linspace<S: Scalar>(lo: S, hi: S, count: usize) -> Vec<S> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / S::of_usize(count - 1);
            let mut v: Vec<S> = (0..count - 1).map(|i| lo + h * S::of_usize(i)).collect();
            v.push(hi);
            v
        }
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace<S: Scalar>(lo: S, hi: S, count: usize) -> Vec<S> {
    let ten = S::of(10.0);
    let mut v: Vec<S> = linspace(lo.log10(), hi.log10(), count)
        .into_iter()
        .map(|e| ten.powf(e))
        .collect();
    if let Some(first) = v.first_mut() {
        *first = lo;
    }
    if count > 1 {
        v[count - 1] = hi;
    }
    v
}

pub fn raster_region<S: Scalar>(
    tables: &SchemeTables<S>,
    re_range: (S, S),
    im_range: (S, S),
    resolution: (usize, usize),
) -> Result<StabilityRaster<S>> {
    let (w, h) = resolution;
    if w == 0 || h == 0 {
        return Err(Error::Invalid("raster resolution must be positive".into()));
    }
    if !(re_range.1 >= re_range.0) || !(im_range.1 >= im_range.0) {
        return Err(Error::Invalid(
            "raster window bounds must be ordered min:max".into(),
        ));
    }
    let re = linspace(re_range.0, re_range.1, w);
    let im = linspace(im_range.0, im_range.1, h);
    let mut abs_r = Vec::with_capacity(w * h);
    for &y in &im {
        for &x in &re {
            abs_r.push(evaluate(tables, Complex::new(x, y)).abs_r);
        }
    }
    let stable = abs_r.iter().map(|&a| a < S::one()).collect();
    Ok(StabilityRaster {
        re,
        im,
        abs_r,
        stable,
    })
}

/// `|R(r e^{i arg})|` for each radius; `+inf` at poles.
pub fn ray_profile<S: Scalar>(tables: &SchemeTables<S>, arg: S, radii: &[S]) -> Result<Vec<S>> {
    if radii.iter().any(|r| !(*r > S::zero())) {
        return Err(Error::Invalid("ray radii must be positive".into()));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("ray radii must be increasing".into()));
    }
    let dir = Complex::new(arg.cos(), arg.sin());
    Ok(radii
        .iter()
        .map(|&r| evaluate(tables, dir * r).abs_r)
        .collect())
}

/// Least-squares slope of `ln |R|` against `ln r`.
pub fn log_log_slope<S: Scalar>(radii: &[S], values: &[S]) -> S {
    let xs: Vec<S> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<S> = values.iter().map(|v| v.ln()).collect();
    let n = S::of_usize(xs.len());
    let mx = xs.iter().fold(S::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(S::zero(), |a, &y| a + y) / n;
    let (mut sxy, mut sxx) = (S::zero(), S::zero());
    for (&x, &y) in xs.iter().zip(&ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn tables(n: usize) -> SchemeTables<f64> {
        SchemeTables::build(n).unwrap()
    }

    #[test]
    fn empty_step() {
        for n in 0..5 {
            let t = tables(n);
            assert_eq!(stability_r(&t, C::new(0.0, 0.0)).unwrap(), C::new(1.0, 0.0));
            assert_eq!(
                stability_r_det(&t, C::new(0.0, 0.0)).unwrap(),
                C::new(1.0, 0.0)
            );
        }
    }

    #[test]
    fn backward_euler_function() {
        let t = tables(0);
        assert!((stability_r(&t, C::new(-1.0, 0.0)).unwrap() - 0.5).norm() <= 1e-15);
        let pole_z = C::new(1.0 / t.b()[(0, 0)], 0.0);
        assert!(matches!(stability_r(&t, pole_z), Err(Error::Pole { .. })));
        assert!(matches!(
            stability_r_det(&t, pole_z),
            Err(Error::Pole { .. })
        ));
        assert!(evaluate(&t, pole_z).abs_r.is_infinite());
    }

    #[test]
    fn strong_damping_degree_one() {
        let t = tables(1);
        assert!(stability_r(&t, C::new(-1e6, 0.0)).unwrap().norm() <= 1e-5);
    }

    #[test]
    fn forms_agree_degree_three() {
        let t = tables(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let z = C::new(-rng.gen_range(0.0..50.0), rng.gen_range(-50.0..50.0));
            let a = stability_r(&t, z).unwrap();
            let b = stability_r_det(&t, z).unwrap();
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn decade_ratios_degree_two() {
        let t = tables(2);
        let r: Vec<f64> = [1e2, 1e4, 1e6]
            .iter()
            .map(|&m| stability_r(&t, C::new(-m, 0.0)).unwrap().norm())
            .collect();
        // Two decades of |z| per pair; |R| ~ 3/|z| is not yet asymptotic at 1e2.
        assert!(((r[1] / r[0]).log10() + 2.0).abs() < 0.1);
        assert!(((r[2] / r[1]).log10() + 2.0).abs() < 0.01);
    }

    #[test]
    fn matches_exponential_to_order() {
        // |R(z) - e^z| ~ |z|^(2N+2) for small z. Radii are chosen per degree so
        // the error stays well above binary64 round-off; higher degrees are
        // covered by the extended-precision variant.
        let windows: [[f64; 3]; 3] = [[1e-3, 1e-2, 1e-1], [1e-2, 3e-2, 1e-1], [0.1, 0.2, 0.4]];
        for (n, radii) in windows.iter().enumerate() {
            let t = tables(n);
            let errs: Vec<f64> = radii
                .iter()
                .map(|&r| {
                    let z = C::new(-r, 0.3 * r);
                    (stability_r(&t, z).unwrap() - z.exp()).norm()
                })
                .collect();
            let slope = log_log_slope(radii, &errs);
            assert!(
                (slope - (2 * n + 2) as f64).abs() < 0.3,
                "N={n} slope {slope}"
            );
        }
    }

    #[cfg(feature = "extended")]
    #[test]
    fn matches_exponential_to_order_extended() {
        use crate::scalar::Extended;
        for n in 0..=4usize {
            let t = SchemeTables::<Extended>::build(n).unwrap();
            let radii: Vec<Extended> = [1e-3, 1e-2, 1e-1]
                .iter()
                .map(|&r| Extended::of(r))
                .collect();
            let errs: Vec<Extended> = radii
                .iter()
                .map(|&r| {
                    let z = Complex::new(-r, r * Extended::of(0.3));
                    (stability_r(&t, z).unwrap() - z.exp()).norm()
                })
                .collect();
            let slope = log_log_slope(&radii, &errs);
            let expect = (2 * n + 2).min(12) as f64;
            assert!(
                (slope.to_f64_lossy() - expect).abs() < 0.3,
                "N={n} slope {slope}"
            );
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let t = tables(6);
        let radii = logspace(1e-2, 1e6, 40);
        let a = ray_profile(&t, 0.75 * std::f64::consts::PI, &radii).unwrap();
        let b = ray_profile(&t, 1.25 * std::f64::consts::PI, &radii).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn unstable_on_positive_axis() {
        let t = tables(1);
        let radii = logspace(1e-2, 1e2, 50);
        let p = ray_profile(&t, 2.0 * std::f64::consts::PI, &radii).unwrap();
        assert!(p.iter().any(|&v| v > 1.0));
    }

    #[test]
    fn raster_degree_zero_disk() {
        let t = tables(0);
        let r = raster_region(&t, (-1.0, 3.0), (-2.0, 2.0), (41, 41)).unwrap();
        for (i, &y) in r.im.iter().enumerate() {
            for (j, &x) in r.re.iter().enumerate() {
                let inside = (C::new(x, y) - 1.0).norm() < 1.0;
                let stable = r.stable[i * r.re.len() + j];
                let on_edge = ((C::new(x, y) - 1.0).norm() - 1.0).abs() < 1e-12;
                if !on_edge {
                    assert_eq!(stable, !inside, "z = {x}+{y}i");
                }
            }
        }
        assert_eq!(r.samples().count(), 41 * 41);
    }

    #[test]
    fn raster_rejects_bad_input() {
        let t = tables(1);
        assert!(raster_region(&t, (0.0, 1.0), (0.0, 1.0), (0, 3)).is_err());
        assert!(raster_region(&t, (1.0, 0.0), (0.0, 1.0), (3, 3)).is_err());
        assert!(ray_profile(&t, 1.0, &[1.0, 0.5]).is_err());
        assert!(ray_profile(&t, 1.0, &[0.0, 0.5]).is_err());
    }

    #[test]
    fn spacing_helpers() {
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
        let l: Vec<f64> = logspace(1e-2, 1e2, 5);
        assert!((l[2] - 1.0).abs() < 1e-14 && l[4] == 1e2);
    }
}
