use nalgebra::{DMatrix, DVector};

use super::{CountrySeries, DiffusionError, LogisticParams};

/// Residuals (model minus data) and their Jacobian at a parameter vector,
/// or `None` outside the admissible region.
pub(crate) type Eval<'a> = dyn Fn(&[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> + 'a;

/// Levenberg-Marquardt with Marquardt diagonal scaling. Returns the final
/// parameters and the residual sum of squares.
pub(crate) fn levenberg_marquardt(p0: &[f64], eval: &Eval<'_>, max_iter: usize) -> Option<(Vec<f64>, f64)> {
    let mut p = p0.to_vec();
    let (mut r, mut j) = eval(&p)?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for d in 0..p.len() {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some((r2, j2)) = eval(&trial) {
                let c2 = r2.norm_squared();
                if c2 <= cost {
                    let small = step.iter().zip(&p).all(|(s, v)| s.abs() <= 1e-13 * (v.abs() + 1e-13));
                    let flat = cost - c2 <= 1e-30 + 1e-15 * cost;
                    p = trial;
                    r = r2;
                    j = j2;
                    cost = c2;
                    lambda = (lambda / 3.0).max(1e-15);
                    accepted = true;
                    if small || (flat && lambda < 1e-6) {
                        return Some((p, cost));
                    }
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    Some((p, cost))
}

/// Month of closest approach to `level` and the logit-linear slope of
/// `ipc / k0` over time. The slope is `None` when not positive and finite.
pub(crate) fn initial_guess(s: &CountrySeries, k0: f64) -> (f64, Option<f64>) {
    let beta = s
        .t
        .iter()
        .zip(&s.ipc)
        .min_by(|a, b| (a.1 - k0 / 2.0).abs().total_cmp(&(b.1 - k0 / 2.0).abs()))
        .map(|(t, _)| *t)
        .unwrap_or(0.0);
    let z: Vec<f64> = s
        .ipc
        .iter()
        .map(|y| {
            let p = (y / k0).clamp(1e-3, 1.0 - 1e-3);
            (p / (1.0 - p)).ln()
        })
        .collect();
    let n = s.t.len() as f64;
    let mt = s.t.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let stz: f64 = s.t.iter().zip(&z).map(|(t, z)| (t - mt) * (z - mz)).sum();
    let stt: f64 = s.t.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = stz / stt;
    (beta, (slope.is_finite() && slope > 1e-5).then_some(slope))
}

pub(crate) fn logistic_shape(t: f64, tau: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (-(t - beta) / tau).exp())
}

/// Fits `(K, alpha, beta)` to one series by least squares.
/// Returns the parameters and the root mean squared error.
pub fn fit_fixed_effects(s: &CountrySeries) -> Result<(LogisticParams, f64), DiffusionError> {
    if s.len() < 3 {
        return Err(DiffusionError::Nls(format!("{}: {} observations for 3 parameters", s.country, s.len())));
    }
    let max = s.ipc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k0 = 1.05 * max;
    let (beta0, slope) = initial_guess(s, k0);
    let tau0 = 1.0 / slope.unwrap_or(0.05);
    let eval = |p: &[f64]| {
        let (k, tau, beta) = (p[0], p[1], p[2]);
        if !(tau > 0.0) || !(k > 0.0) {
            return None;
        }
        let n = s.len();
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 3);
        for (i, (&t, &y)) in s.t.iter().zip(&s.ipc).enumerate() {
            let g = logistic_shape(t, tau, beta);
            let dg = g * (1.0 - g);
            r[i] = k * g - y;
            j[(i, 0)] = g;
            j[(i, 1)] = -k * dg * (t - beta) / (tau * tau);
            j[(i, 2)] = -k * dg / tau;
        }
        Some((r, j))
    };
    let (p, cost) = levenberg_marquardt(&[k0, tau0, beta0], &eval, 1000)
        .ok_or_else(|| DiffusionError::Nls(format!("{}: inadmissible starting point", s.country)))?;
    let params = LogisticParams::new(p[0], 1.0 / p[1], p[2])?;
    Ok((params, (cost / s.len() as f64).sqrt()))
}
