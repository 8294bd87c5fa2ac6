//! Penalized least-squares smoothing with optional bisquare robustness.
//!
//! Minimises `sum w (y - z)^2 + s |L z|^2` where `L` is the second-difference
//! operator with reflective (Neumann) boundaries, the same penalty that a DCT
//! based smoother diagonalises. The system is solved directly.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothOptions {
    pub s: f64,
    pub robust: bool,
    pub robust_iterations: usize,
}

impl SmoothOptions {
    pub fn plain(s: f64) -> Self {
        Self { s, robust: false, robust_iterations: 0 }
    }

    pub fn robust(s: f64) -> Self {
        Self { s, robust: true, robust_iterations: 3 }
    }
}

fn penalty(n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    if n == 1 {
        return l;
    }
    for i in 0..n {
        if i > 0 {
            l[(i, i - 1)] = 1.0;
        }
        if i + 1 < n {
            l[(i, i + 1)] = 1.0;
        }
        l[(i, i)] = if i == 0 || i + 1 == n { -1.0 } else { -2.0 };
    }
    l.transpose() * l
}

fn solve(y: &[f64], w: &[f64], p: &DMatrix<f64>, s: f64) -> Vec<f64> {
    let n = y.len();
    let mut a = p * s;
    let mut b = DVector::zeros(n);
    for i in 0..n {
        a[(i, i)] += w[i];
        b[i] = w[i] * y[i];
    }
    match a.clone().cholesky() {
        Some(c) => c.solve(&b).iter().copied().collect(),
        // Singular only when every weight is zero.
        None => vec![0.0; n],
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn bisquare_weights(r: &[f64], w: &[f64], h: f64) -> Vec<f64> {
    let used: Vec<f64> = r.iter().zip(w).filter(|(_, w)| **w > 0.0).map(|(r, _)| *r).collect();
    let med = median(used.clone());
    let mad = median(used.iter().map(|v| (v - med).abs()).collect());
    if mad <= f64::EPSILON * used.iter().fold(1.0f64, |a, v| a.max(v.abs())) {
        return vec![1.0; r.len()];
    }
    let scale = 1.4826 * mad * (1.0 - h).sqrt();
    r.iter()
        .map(|ri| {
            let u = (ri / scale / 4.685).abs();
            if u < 1.0 {
                (1.0 - u * u).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

/// Smooths `y`. Zero weights mark missing samples, which are interpolated.
pub fn smooth(y: &[f64], weights: Option<&[f64]>, opts: SmoothOptions) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return y.to_vec();
    }
    let w0: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let y: Vec<f64> = y.iter().zip(&w0).map(|(v, w)| if *w > 0.0 { *v } else { 0.0 }).collect();
    let p = penalty(n);
    let mut z = solve(&y, &w0, &p, opts.s);
    if opts.robust {
        let h0 = (1.0 + 16.0 * opts.s).sqrt();
        let h = (1.0 + h0).sqrt() / (std::f64::consts::SQRT_2 * h0);
        for _ in 0..opts.robust_iterations {
            let r: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
            let wr = bisquare_weights(&r, &w0, h);
            let w: Vec<f64> = w0.iter().zip(&wr).map(|(a, b)| a * b).collect();
            z = solve(&y, &w, &p, opts.s);
        }
    }
    z
}
