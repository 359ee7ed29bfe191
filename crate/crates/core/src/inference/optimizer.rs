//! BFGS maximisation with Armijo backtracking.

/// Stopping rules for [`bfgs_maximize`].
#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop when `‖∇f‖∞` falls below this.
    pub gradient_tol: f64,
    /// Stop when the step changes no coordinate by more than this.
    pub step_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tol: 1e-8,
            step_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximises `f`, which returns `(value, gradient)` or `None` where it cannot
/// be evaluated (treated as −∞ by the line search).
pub fn bfgs_maximize<F>(f: F, x0: &[f64], opts: &BfgsOptions) -> Option<BfgsResult>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut gx) = f(&x)?;
    // Inverse Hessian approximation of −f.
    let mut h = identity(n);
    let mut first_step = true;

    for iter in 0..opts.max_iterations {
        if max_abs(&gx) < opts.gradient_tol {
            return Some(BfgsResult {
                x,
                value: fx,
                iterations: iter,
                converged: true,
            });
        }
        // Ascent direction d = H·∇f.
        let mut d = mat_vec(&h, &gx);
        let mut slope = dot(&d, &gx);
        if !(slope > 0.0) {
            h = identity(n);
            d = gx.clone();
            slope = dot(&d, &gx);
        }

        let mut step = if first_step {
            (1.0 / max_abs(&d)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            if let Some((ft, gt)) = f(&trial) {
                if ft.is_finite() && ft >= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            return Some(BfgsResult {
                x,
                value: fx,
                iterations: iter,
                converged: max_abs(&gx) < opts.gradient_tol.sqrt(),
            });
        };
        first_step = false;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        // Curvature pair for −f.
        let y: Vec<f64> = gx.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let small_step = max_abs(&s) < opts.step_tol;
        x = x_new;
        fx = f_new;
        gx = g_new;
        if small_step {
            return Some(BfgsResult {
                x,
                value: fx,
                iterations: iter + 1,
                converged: true,
            });
        }
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            bfgs_update(&mut h, &s, &y, sy);
        }
    }
    Some(BfgsResult {
        x,
        value: fx,
        iterations: opts.max_iterations,
        converged: max_abs(&gx) < opts.gradient_tol,
    })
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
