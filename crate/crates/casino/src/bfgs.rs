//! Quasi-Newton minimizer: BFGS inverse-Hessian updates, backtracking
//! Armijo line search, and central-difference gradients.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    /// Stop when the gradient norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Central-difference step.
    pub grad_step: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            tol: 1e-8,
            max_iter: 200,
            grad_step: 1e-6,
            armijo_c: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// True when the gradient-norm tolerance was reached.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn central_gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite objective while differentiating at {x:?}"
            )));
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
fn bfgs_update(h: &mut Vec<Vec<f64>>, s: &[f64], y: &[f64], rho: f64) {
    let n = s.len();
    let hy = mat_vec(h, y);
    // y^T H y
    let yhy = dot(y, &hy);
    let mut new = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            new[i][j] = h[i][j] - rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
    *h = new;
}

/// Minimizes a scalar objective from `x0`.
///
/// Stops on gradient norm below `tol`, on `max_iter`, or when the line
/// search can no longer make progress; errors if the objective is
/// non-finite at the start or stays non-finite through backtracking.
pub fn bfgs_minimize(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    opts: &BfgsOptions,
) -> Result<BfgsResult> {
    let n = x0.len();
    if n == 0 {
        return Err(Error::EmptyInput("bfgs_minimize on empty x0".into()));
    }
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(Error::Numeric(format!(
            "objective not finite at starting point {x0:?}"
        )));
    }
    let mut g = central_gradient(&f, &x, opts.grad_step)?;
    let mut h = identity(n);
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        let gnorm = norm(&g);
        if gnorm < opts.tol {
            return Ok(BfgsResult {
                x,
                value: fx,
                iterations: iter,
                grad_norm: gnorm,
                converged: true,
            });
        }
        let mut direction: Vec<f64> = mat_vec(&h, &g).iter().map(|v| -v).collect();
        let mut slope = dot(&direction, &g);
        if slope >= 0.0 {
            // curvature went bad; restart from steepest descent
            h = identity(n);
            direction = g.iter().map(|v| -v).collect();
            slope = dot(&direction, &g);
        }

        // backtracking Armijo
        let mut alpha = 1.0f64;
        let mut x_new;
        let mut f_new;
        let mut saw_non_finite = false;
        loop {
            x_new = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + alpha * di)
                .collect::<Vec<f64>>();
            f_new = f(&x_new);
            if f_new.is_finite() {
                if f_new <= fx + opts.armijo_c * alpha * slope {
                    break;
                }
            } else {
                saw_non_finite = true;
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                if saw_non_finite {
                    return Err(Error::Numeric(format!(
                        "objective non-finite throughout line search; last iterate {x:?} with value {fx}"
                    )));
                }
                // no further progress possible
                return Ok(BfgsResult {
                    x,
                    value: fx,
                    iterations: iter,
                    grad_norm: gnorm,
                    converged: false,
                });
            }
        }

        let g_new = central_gradient(&f, &x_new, opts.grad_step)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if iter == 0 && sy > 0.0 {
            let yy = dot(&y, &y);
            if yy > 0.0 {
                let scale = sy / yy;
                h = identity(n);
                for (i, row) in h.iter_mut().enumerate() {
                    row[i] = scale;
                }
            }
        }
        if sy > 1e-12 * norm(&s) * norm(&y) {
            bfgs_update(&mut h, &s, &y, 1.0 / sy);
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    let gnorm = norm(&g);
    Ok(BfgsResult {
        x,
        value: fx,
        iterations,
        grad_norm: gnorm,
        converged: gnorm < opts.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn scalar_quadratic() {
        let r = bfgs_minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &BfgsOptions::default()).unwrap();
        assert!((r.x[0] - 3.0).abs() < 1e-6, "got {:?}", r.x);
    }

    #[test]
    fn rosenbrock_classic() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = bfgs_minimize(
            f,
            &[-1.2, 1.0],
            &BfgsOptions {
                max_iter: 500,
                ..BfgsOptions::default()
            },
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4, "got {:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-4, "got {:?}", r.x);
    }

    /// Gaussian elimination with partial pivoting; the closed-form oracle.
    pub(crate) fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(row, &bi)| {
                let mut r = row.clone();
                r.push(bi);
                r
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
                .unwrap();
            m.swap(col, pivot);
            for row in col + 1..n {
                let factor = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut acc = m[row][n];
            for k in row + 1..n {
                acc -= m[row][k] * x[k];
            }
            x[row] = acc / m[row][row];
        }
        x
    }

    pub(crate) fn random_spd(rng: &mut StdRng, n: usize) -> Vec<Vec<f64>> {
        // A = B^T B + diag boost keeps conditioning sane
        let b: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    a[i][j] += b[k][i] * b[k][j];
                }
            }
            a[i][i] += 0.5;
        }
        a
    }

    #[test]
    fn quadratic_matches_closed_form() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(2..=4);
            let a = random_spd(&mut rng, n);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            // f(x) = 0.5 x^T A x - b^T x, minimized at A x = b
            let a_f = a.clone();
            let b_f = b.clone();
            let f = move |x: &[f64]| {
                let ax = mat_vec(&a_f, x);
                0.5 * dot(x, &ax) - dot(&b_f, x)
            };
            let x0 = vec![0.0; n];
            let r = bfgs_minimize(f, &x0, &BfgsOptions::default()).unwrap();
            let expect = solve_linear(&a, &b);
            let err: f64 = r
                .x
                .iter()
                .zip(&expect)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-6, "n = {n}: err = {err}");
        }
    }

    #[test]
    fn non_finite_start_errors() {
        let r = bfgs_minimize(|x| (x[0]).ln(), &[-1.0], &BfgsOptions::default());
        assert!(r.is_err());
    }
}
