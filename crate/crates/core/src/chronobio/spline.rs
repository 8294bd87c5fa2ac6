//! Natural cubic interpolating splines.

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    /// `x` must be strictly increasing with at least two knots.
    pub fn new(x: &[f64], y: &[f64]) -> Option<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| !(w[1] > w[0])) {
            return None;
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives (Thomas algorithm).
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 1..n - 1 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        Some(Self { x: x.to_vec(), y: y.to_vec(), m })
    }

    fn interval(&self, t: f64) -> usize {
        match self.x.partition_point(|v| *v <= t) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i] + b * self.y[i + 1] + ((a.powi(3) - a) * self.m[i] + (b.powi(3) - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Location of the largest value on `[x_0, x_n]`, evaluated exactly via
    /// the roots of each piece's derivative. Earliest wins on ties.
    pub fn argmax(&self) -> f64 {
        self.extremum(1.0)
    }

    pub fn argmin(&self) -> f64 {
        self.extremum(-1.0)
    }

    fn extremum(&self, sign: f64) -> f64 {
        let mut best = (self.x[0], sign * self.y[0]);
        let mut consider = |t: f64, v: f64| {
            if v > best.1 {
                best = (t, v);
            }
        };
        for i in 0..self.x.len() - 1 {
            let (x0, x1) = (self.x[i], self.x[i + 1]);
            let h = x1 - x0;
            let (m0, m1) = (self.m[i], self.m[i + 1]);
            // S'(t) in u = t - x0:
            // (m1 - m0)/(2h) u^2 + m0 u + (y1 - y0)/h - h (2 m0 + m1)/6
            let qa = (m1 - m0) / (2.0 * h);
            let qb = m0;
            let qc = (self.y[i + 1] - self.y[i]) / h - h * (2.0 * m0 + m1) / 6.0;
            let mut roots = Vec::with_capacity(2);
            if qa.abs() < 1e-300 {
                if qb != 0.0 {
                    roots.push(-qc / qb);
                }
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    roots.push((-qb - sq) / (2.0 * qa));
                    roots.push((-qb + sq) / (2.0 * qa));
                }
            }
            roots.sort_by(f64::total_cmp);
            for u in roots {
                if u > 0.0 && u < h {
                    consider(x0 + u, sign * self.eval(x0 + u));
                }
            }
            consider(x1, sign * self.y[i + 1]);
        }
        best.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolates_knots_and_lines() {
        let x = [0.0, 1.0, 2.5, 4.0];
        let y = [1.0, 3.0, 6.0, 9.0];
        let s = NaturalSpline::new(&x, &y).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_relative_eq!(s.eval(*a), *b, epsilon = 1e-12);
        }
        let line = NaturalSpline::new(&x, &[0.0, 2.0, 5.0, 8.0]).unwrap();
        assert_relative_eq!(line.eval(3.3), 6.6, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_peak_is_found_between_knots() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| -(v - 4.5f64).powi(2)).collect();
        let s = NaturalSpline::new(&x, &y).unwrap();
        assert_relative_eq!(s.argmax(), 4.5, epsilon = 1e-9);
        assert_relative_eq!(s.argmin(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dense_grid_oracle_agrees() {
        let x: Vec<f64> = (0..12).map(|i| 15.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (v / 30.0).sin() * (1.0 + v / 200.0)).collect();
        let s = NaturalSpline::new(&x, &y).unwrap();
        let grid = (0..=16500).map(|k| k as f64 * 0.01);
        let (gmax, _) = grid.clone().map(|t| (t, s.eval(t))).fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let (gmin, _) = grid.map(|t| (t, s.eval(t))).fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!((s.argmax() - gmax).abs() < 0.02);
        assert!((s.argmin() - gmin).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(NaturalSpline::new(&[0.0], &[1.0]).is_none());
        assert!(NaturalSpline::new(&[0.0, 0.0], &[1.0, 2.0]).is_none());
    }
}
