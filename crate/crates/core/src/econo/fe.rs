//! Slope estimation with absorbed fixed effects.
//!
//! Region intercepts and trends are removed exactly within each region.
//! The remaining dummies (constant, years, country-years) are residualised
//! on the region blocks and projected out through an orthonormal basis, so
//! collinear dummy sets are handled without choosing reference categories.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{EconoError, PanelObservation, RegressionSpec, Sector};
use crate::calendar::EPOCH_YEAR;

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: f64,
    /// HC1 heteroskedasticity-consistent standard error.
    pub robust_se: f64,
    pub classical_se: f64,
    /// Share of the total variation of the regressand explained by the
    /// regressor together with all absorbed effects.
    pub r_squared: f64,
    /// Share of the variation left after absorption explained by the regressor.
    pub within_r_squared: f64,
    pub n_obs: usize,
    pub n_regions: usize,
    /// Regressor plus the rank of the absorbed effects.
    pub n_params: usize,
    /// Rows dropped because the outcome or IP per capita was not positive.
    pub dropped_nonpositive: usize,
    /// Rows dropped because the lagged regressor was unavailable.
    pub dropped_no_lag: usize,
    /// Residuals vanish: the regressor explains the outcome exactly.
    pub perfect_fit: bool,
}

struct Prepared {
    region: Vec<usize>,
    region_ids: Vec<String>,
    country_year: Vec<usize>,
    year: Vec<i32>,
    y: Vec<f64>,
    x: Vec<f64>,
    dropped_nonpositive: usize,
    dropped_no_lag: usize,
}

fn prepare(
    panel: &[PanelObservation],
    lag: u32,
    outcome: &dyn Fn(&PanelObservation) -> Option<f64>,
) -> Result<Prepared, EconoError> {
    let mut ip: HashMap<(&str, i32), f64> = HashMap::with_capacity(panel.len());
    for o in panel {
        if !(o.gdp_pc.is_finite() && o.gdp_pc > 0.0) {
            return Err(EconoError::InvalidObservation {
                region_id: o.region_id.clone(),
                year: o.year,
                message: format!("GDP per capita must be positive, got {}", o.gdp_pc),
            });
        }
        if ip.insert((&o.region_id, o.year), o.ip_pc).is_some() {
            return Err(EconoError::Duplicate { region_id: o.region_id.clone(), year: o.year });
        }
    }
    let mut regions: BTreeMap<&str, usize> = BTreeMap::new();
    let mut country_years: BTreeMap<(&str, i32), usize> = BTreeMap::new();
    let mut p = Prepared {
        region: vec![],
        region_ids: vec![],
        country_year: vec![],
        year: vec![],
        y: vec![],
        x: vec![],
        dropped_nonpositive: 0,
        dropped_no_lag: 0,
    };
    for o in panel {
        let Some(v) = outcome(o) else { continue };
        let Some(&ipv) = ip.get(&(o.region_id.as_str(), o.year - lag as i32)) else {
            p.dropped_no_lag += 1;
            continue;
        };
        if !(v > 0.0 && ipv > 0.0) || !v.is_finite() || !ipv.is_finite() {
            p.dropped_nonpositive += 1;
            continue;
        }
        let n = regions.len();
        let r = *regions.entry(&o.region_id).or_insert(n);
        let n = country_years.len();
        p.country_year.push(*country_years.entry((&o.country, o.year)).or_insert(n));
        p.region.push(r);
        p.year.push(o.year);
        p.y.push(v.ln());
        p.x.push(ipv.ln());
    }
    p.region_ids = vec![String::new(); regions.len()];
    for (id, i) in regions {
        p.region_ids[i] = id.to_string();
    }
    if p.y.is_empty() {
        return Err(EconoError::EmptySample("dropping unusable rows".into()));
    }
    Ok(p)
}

/// Exact within-region projection onto intercept and/or linear trend.
struct RegionBlocks {
    rows: Vec<Vec<usize>>,
    /// Per region, the inverse Gram matrix of its block design.
    inv: Vec<[[f64; 2]; 2]>,
    intercept: bool,
    trend: bool,
}

fn t_of(year: i32) -> f64 {
    f64::from(year - EPOCH_YEAR)
}

impl RegionBlocks {
    fn new(p: &Prepared, spec: &RegressionSpec) -> Result<Self, EconoError> {
        let mut rows = vec![Vec::new(); p.region_ids.len()];
        for (i, r) in p.region.iter().enumerate() {
            rows[*r].push(i);
        }
        let (intercept, trend) = (spec.region_effects, spec.region_trends);
        let mut inv = Vec::with_capacity(rows.len());
        for (r, idx) in rows.iter().enumerate() {
            let n = idx.len() as f64;
            let st: f64 = idx.iter().map(|i| t_of(p.year[*i])).sum();
            let stt: f64 = idx.iter().map(|i| t_of(p.year[*i]).powi(2)).sum();
            let m = match (intercept, trend) {
                (true, true) => {
                    let det = n * stt - st * st;
                    if det <= RANK_TOL * n * stt.max(1.0) {
                        return Err(EconoError::RankDeficient {
                            term: "region trends",
                            detail: format!("region {} is observed in a single year", p.region_ids[r]),
                        });
                    }
                    [[stt / det, -st / det], [-st / det, n / det]]
                }
                (true, false) => [[1.0 / n, 0.0], [0.0, 0.0]],
                (false, true) => {
                    if stt <= 0.0 {
                        return Err(EconoError::RankDeficient {
                            term: "region trends",
                            detail: format!("region {} has no trend variation", p.region_ids[r]),
                        });
                    }
                    [[0.0, 0.0], [0.0, 1.0 / stt]]
                }
                (false, false) => [[0.0; 2]; 2],
            };
            inv.push(m);
        }
        Ok(Self { rows, inv, intercept, trend })
    }

    fn rank(&self) -> usize {
        self.rows.len() * (usize::from(self.intercept) + usize::from(self.trend))
    }

    fn residualize(&self, v: &mut [f64], year: &[i32]) {
        if !self.intercept && !self.trend {
            return;
        }
        for (idx, m) in self.rows.iter().zip(&self.inv) {
            let s0: f64 = idx.iter().map(|i| v[*i]).sum();
            let s1: f64 = idx.iter().map(|i| v[*i] * t_of(year[*i])).sum();
            let a = m[0][0] * s0 + m[0][1] * s1;
            let b = m[1][0] * s0 + m[1][1] * s1;
            for &i in idx {
                v[i] -= a + b * t_of(year[i]);
            }
        }
    }
}

/// Dummy columns not handled by the region blocks.
fn other_dummies(p: &Prepared, spec: &RegressionSpec) -> Vec<Vec<f64>> {
    let n = p.y.len();
    let mut cols = Vec::new();
    if !spec.region_effects {
        cols.push(vec![1.0; n]);
    }
    if spec.year_effects {
        let years: std::collections::BTreeSet<i32> = p.year.iter().copied().collect();
        for y in years {
            cols.push(p.year.iter().map(|v| f64::from(u8::from(*v == y))).collect());
        }
    }
    if spec.country_year_effects {
        let k = p.country_year.iter().max().map_or(0, |m| m + 1);
        for c in 0..k {
            cols.push(p.country_year.iter().map(|v| f64::from(u8::from(*v == c))).collect());
        }
    }
    cols
}

/// Indices of a maximal independent subset of `cols`, taken greedily in
/// order, with an orthonormal basis of their span. Gram-Schmidt with one
/// reorthogonalisation pass; a column is dependent when less than
/// `RANK_TOL` of its norm survives.
fn independent_columns(cols: &[Vec<f64>], n: usize) -> (Vec<usize>, DMatrix<f64>) {
    let mut kept = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (j, c) in cols.iter().enumerate() {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, a) in v.iter_mut().zip(q) {
                    *x -= d * a;
                }
            }
        }
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > RANK_TOL * norm {
            v.iter_mut().for_each(|x| *x /= r);
            basis.push(v);
            kept.push(j);
        }
    }
    let m = DMatrix::from_fn(n, basis.len(), |i, j| basis[j][i]);
    (kept, m)
}

/// Orthonormal basis of the column space.
fn orthonormal_basis(cols: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    independent_columns(cols, n).1
}

fn project_out(basis: &DMatrix<f64>, v: &mut [f64]) {
    if basis.ncols() == 0 {
        return;
    }
    let dv = DVector::from_column_slice(v);
    let proj = basis * (basis.transpose() * &dv);
    for (a, b) in v.iter_mut().zip(proj.iter()) {
        *a -= b;
    }
}

fn finish(
    p: &Prepared,
    y_abs: &[f64],
    x_abs: &[f64],
    absorbed_rank: usize,
) -> Result<FitResult, EconoError> {
    let n = p.y.len();
    let xbar = p.x.iter().sum::<f64>() / n as f64;
    let sxx_total: f64 = p.x.iter().map(|v| (v - xbar).powi(2)).sum();
    let ssx: f64 = x_abs.iter().map(|v| v * v).sum();
    if ssx <= 1e-12 * sxx_total.max(p.x.iter().map(|v| v * v).sum()) || ssx == 0.0 {
        return Err(EconoError::RankDeficient {
            term: "ln_ip",
            detail: "the regressor has no variation left after absorbing the effects".into(),
        });
    }
    let k = absorbed_rank + 1;
    if n <= k {
        return Err(EconoError::NoDegreesOfFreedom { n_obs: n, n_params: k });
    }
    let beta = x_abs.iter().zip(y_abs).map(|(a, b)| a * b).sum::<f64>() / ssx;
    let e: Vec<f64> = y_abs.iter().zip(x_abs).map(|(y, x)| y - beta * x).collect();
    let ee: f64 = e.iter().map(|v| v * v).sum();
    let df = (n - k) as f64;
    let meat: f64 = x_abs.iter().zip(&e).map(|(x, e)| (x * e).powi(2)).sum();
    let ybar = p.y.iter().sum::<f64>() / n as f64;
    let tss: f64 = p.y.iter().map(|v| (v - ybar).powi(2)).sum();
    let wss: f64 = y_abs.iter().map(|v| v * v).sum();
    Ok(FitResult {
        beta,
        robust_se: (n as f64 / df * meat).sqrt() / ssx,
        classical_se: (ee / df / ssx).sqrt(),
        r_squared: if tss > 0.0 { 1.0 - ee / tss } else { 1.0 },
        within_r_squared: if wss > 0.0 { 1.0 - ee / wss } else { 1.0 },
        n_obs: n,
        n_regions: p.region_ids.len(),
        n_params: k,
        dropped_nonpositive: p.dropped_nonpositive,
        dropped_no_lag: p.dropped_no_lag,
        perfect_fit: ee <= 1e-20 * tss.max(f64::MIN_POSITIVE),
    })
}

fn fit_absorbed(p: &Prepared, spec: &RegressionSpec) -> Result<FitResult, EconoError> {
    let n = p.y.len();
    let blocks = RegionBlocks::new(p, spec)?;
    let mut dummies = other_dummies(p, spec);
    for c in &mut dummies {
        blocks.residualize(c, &p.year);
    }
    let basis = orthonormal_basis(&dummies, n);
    let (mut y, mut x) = (p.y.clone(), p.x.clone());
    for v in [&mut y, &mut x] {
        blocks.residualize(v, &p.year);
        project_out(&basis, v);
    }
    finish(p, &y, &x, blocks.rank() + basis.ncols())
}

fn gdp(o: &PanelObservation) -> Option<f64> {
    Some(o.gdp_pc)
}

/// Slope of `ln(gdp_pc)` on `ln(ip_pc)` with the effects in `spec` absorbed.
pub fn fit_fe(panel: &[PanelObservation], spec: &RegressionSpec) -> Result<FitResult, EconoError> {
    let p = prepare(panel, spec.lag, &gdp)?;
    fit_absorbed(&p, spec)
}

/// Same model as [`fit_fe`], estimated by least squares on an explicit
/// design with every dummy and trend column.
pub fn fit_fe_dummies(panel: &[PanelObservation], spec: &RegressionSpec) -> Result<FitResult, EconoError> {
    let p = prepare(panel, spec.lag, &gdp)?;
    let n = p.y.len();
    let mut cols = other_dummies(&p, spec);
    for r in 0..p.region_ids.len() {
        let member: Vec<f64> = p.region.iter().map(|v| f64::from(u8::from(*v == r))).collect();
        if spec.region_trends {
            cols.push(member.iter().zip(&p.year).map(|(m, y)| m * t_of(*y)).collect());
        }
        if spec.region_effects {
            cols.push(member);
        }
    }
    let basis = orthonormal_basis(&cols, n);
    if spec.region_trends {
        // A region seen in one year makes its trend column collinear.
        RegionBlocks::new(&p, spec)?;
    }
    // Explicit design with the regressor first; dependent dummy columns are
    // dropped and the rest solved by Householder QR.
    let mut design = Vec::with_capacity(cols.len() + 1);
    design.push(p.x.clone());
    design.extend(cols);
    let (kept, _) = independent_columns(&design, n);
    if kept.first() != Some(&0) {
        return Err(EconoError::RankDeficient {
            term: "ln_ip",
            detail: "the regressor is collinear with the dummies".into(),
        });
    }
    let x = DMatrix::from_fn(n, kept.len(), |i, j| design[kept[j]][i]);
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * DVector::from_column_slice(&p.y);
    let coef = qr.r().solve_upper_triangular(&qty).ok_or_else(|| EconoError::RankDeficient {
        term: "design",
        detail: "singular triangular factor".into(),
    })?;
    let beta = coef[0];
    // Residualised regressor and outcome via the absorbed projection, for
    // standard errors and R² on the same definitions.
    let (mut ya, mut xa) = (p.y.clone(), p.x.clone());
    project_out(&basis, &mut ya);
    project_out(&basis, &mut xa);
    let mut r = finish(&p, &ya, &xa, basis.ncols())?;
    let fitted = &x * &coef;
    let ee: f64 = p.y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let df = (n - r.n_params) as f64;
    let ssx: f64 = xa.iter().map(|v| v * v).sum();
    r.beta = beta;
    r.classical_se = (ee / df / ssx).sqrt();
    Ok(r)
}

/// Slope of a sector's `ln(GVA per worker)` on `ln(ip_pc)` with region and
/// year effects.
pub fn fit_sectoral(panel: &[PanelObservation], sector: Sector, min_rows: usize) -> Result<FitResult, EconoError> {
    let outcome = |o: &PanelObservation| o.gva[sector.index()];
    let p = prepare(panel, 0, &outcome)?;
    if p.y.len() < min_rows {
        return Err(EconoError::TooFewRows { sector: sector.key(), rows: p.y.len(), min: min_rows });
    }
    fit_absorbed(&p, &RegressionSpec::region_fe())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obs(region: &str, country: &str, year: i32, ln_gdp: f64, ln_ip: f64) -> PanelObservation {
        PanelObservation {
            region_id: region.into(),
            country: country.into(),
            year,
            gdp_pc: ln_gdp.exp(),
            ip_pc: ln_ip.exp(),
            gva: [None; 7],
        }
    }

    /// y = mu_i + beta x + theta_ct + tau_i t + noise.
    fn planted(seed: u64, beta: f64, noise: f64) -> Vec<PanelObservation> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for c in 0..3 {
            let theta: Vec<f64> = (0..7).map(|_| rng.random_range(-0.2..0.2)).collect();
            for r in 0..5 {
                let (mu, tau) = (rng.random_range(9.0..11.0), rng.random_range(-0.05..0.05));
                for (k, year) in (2006..2013).enumerate() {
                    let x = rng.random_range(-3.0..0.0);
                    let e = noise * rng.random_range(-1.0..1.0);
                    let y = mu + beta * x + theta[k] + tau * t_of(year) + e;
                    out.push(obs(&format!("R{c}{r}"), &format!("C{c}"), year, y, x));
                }
            }
        }
        out
    }

    #[test]
    fn noise_free_full_spec_is_exact() {
        let p = planted(1, 0.5, 0.0);
        let r = fit_fe(&p, &RegressionSpec::full()).unwrap();
        assert_relative_eq!(r.beta, 0.5, epsilon = 1e-8);
        assert!(r.perfect_fit);
        assert_eq!(r.n_obs, 105);
        assert_eq!(r.n_regions, 15);
        // Per country, the year dummies sum to the regions' intercepts and
        // their year-weighted sum equals the regions' trends.
        assert_eq!(r.n_params, 15 + 15 + (21 - 2 * 3) + 1);
    }

    #[test]
    fn absorption_matches_explicit_dummies() {
        let p = planted(2, 0.3, 0.05);
        for spec in [RegressionSpec::pooled(), RegressionSpec::region_fe(), RegressionSpec::full()] {
            let a = fit_fe(&p, &spec).unwrap();
            let b = fit_fe_dummies(&p, &spec).unwrap();
            assert_relative_eq!(a.beta, b.beta, epsilon = 1e-8);
            assert_relative_eq!(a.classical_se, b.classical_se, epsilon = 1e-8);
            assert_eq!(a.n_params, b.n_params);
        }
    }

    #[test]
    fn explicit_normal_equations_oracle() {
        // Pooled with year effects on a tiny panel, solved by hand-built
        // normal equations with 2006 as reference year.
        let p = planted(3, 0.4, 0.1);
        let r = fit_fe(&p, &RegressionSpec::pooled()).unwrap();
        let rows: Vec<Vec<f64>> = p
            .iter()
            .map(|o| {
                let mut v = vec![o.ip_pc.ln(), 1.0];
                v.extend((2007..2013).map(|y| f64::from(u8::from(o.year == y))));
                v
            })
            .collect();
        let k = rows[0].len();
        let xtx = DMatrix::from_fn(k, k, |a, b| rows.iter().map(|r| r[a] * r[b]).sum());
        let xty = DVector::from_fn(k, |a, _| rows.iter().zip(&p).map(|(r, o)| r[a] * o.gdp_pc.ln()).sum());
        let coef = xtx.lu().solve(&xty).unwrap();
        assert_relative_eq!(r.beta, coef[0], epsilon = 1e-10);
    }

    #[test]
    fn hc1_equals_classical_when_squared_residuals_are_equal() {
        // Residuals of +-c orthogonal to the design: x values symmetric and
        // residual signs chosen so sum(x e) = 0 and x^2 constant.
        let mut p = Vec::new();
        let xs = [1.0, -1.0, 1.0, -1.0];
        let es = [0.1, 0.1, -0.1, -0.1];
        for (i, (x, e)) in xs.iter().zip(es).enumerate() {
            p.push(obs(&format!("R{i}"), "C", 2006 + i as i32, 2.0 + 0.7 * x + e, *x));
        }
        let spec = RegressionSpec { year_effects: false, ..Default::default() };
        let r = fit_fe(&p, &spec).unwrap();
        assert_relative_eq!(r.beta, 0.7, epsilon = 1e-12);
        // HC1 rescales HC0 by n/(n-k); with equal e^2 and x^2 both
        // estimators coincide.
        assert_relative_eq!(r.robust_se, r.classical_se, epsilon = 1e-8);
    }

    #[test]
    fn outcome_shift_is_absorbed() {
        let p = planted(4, 0.2, 0.05);
        let shifted: Vec<_> = p.iter().map(|o| PanelObservation { gdp_pc: o.gdp_pc * 3.0, ..o.clone() }).collect();
        for spec in [RegressionSpec::pooled(), RegressionSpec::full()] {
            let a = fit_fe(&p, &spec).unwrap();
            let b = fit_fe(&shifted, &spec).unwrap();
            assert_relative_eq!(a.beta, b.beta, epsilon = 1e-10);
        }
    }

    #[test]
    fn single_year_regions_break_trends() {
        let p: Vec<_> = (0..6).map(|i| obs(&format!("R{i}"), "C", 2006 + i, 1.0 + f64::from(i), f64::from(i * i))).collect();
        let err = fit_fe(&p, &RegressionSpec::full()).unwrap_err();
        assert!(matches!(err, EconoError::RankDeficient { term: "region trends", .. }), "{err}");
        let err = fit_fe(&p, &RegressionSpec::region_fe()).unwrap_err();
        assert!(matches!(err, EconoError::RankDeficient { term: "ln_ip", .. }), "{err}");
    }

    #[test]
    fn lag_uses_previous_year() {
        let mut p = planted(5, 0.0, 0.0);
        // Make y depend on last year's x.
        let prev: HashMap<(String, i32), f64> = p.iter().map(|o| ((o.region_id.clone(), o.year), o.ip_pc)).collect();
        for o in &mut p {
            if let Some(x) = prev.get(&(o.region_id.clone(), o.year - 1)) {
                o.gdp_pc = (5.0 + 0.25 * x.ln() + 0.01 * f64::from(o.year - 2006)).exp();
            }
        }
        let r = fit_fe(&p, &RegressionSpec::region_fe().with_lag(1)).unwrap();
        assert_eq!(r.dropped_no_lag, 15);
        assert_relative_eq!(r.beta, 0.25, epsilon = 1e-8);
    }

    #[test]
    fn sectoral_recovers_planted_gamma() {
        let mut p = planted(6, 0.1, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mu: HashMap<String, f64> = p.iter().map(|o| (o.region_id.clone(), rng.random_range(10.0..12.0))).collect();
        for o in &mut p {
            let lambda = 0.02 * f64::from(o.year - 2006);
            o.gva[Sector::ProfAdmin.index()] = Some((mu[&o.region_id] - 0.03 * o.ip_pc.ln() + lambda).exp());
            o.gva[Sector::RealEstate.index()] = Some(o.ip_pc);
        }
        let r = fit_sectoral(&p, Sector::ProfAdmin, 10).unwrap();
        assert_relative_eq!(r.beta, -0.03, epsilon = 1e-8);
        let same = fit_sectoral(&p, Sector::RealEstate, 10).unwrap();
        assert!(same.perfect_fit);
        assert_relative_eq!(same.beta, 1.0, epsilon = 1e-10);
        assert!(matches!(fit_sectoral(&p, Sector::InfoComm, 10), Err(EconoError::EmptySample(_))));
        assert!(matches!(fit_sectoral(&p, Sector::ProfAdmin, 1000), Err(EconoError::TooFewRows { .. })));
    }

    #[test]
    fn nonpositive_ip_is_dropped_and_counted() {
        let mut p = planted(7, 0.3, 0.0);
        p[0].ip_pc = 0.0;
        let r = fit_fe(&p, &RegressionSpec::pooled()).unwrap();
        assert_eq!(r.dropped_nonpositive, 1);
        assert_eq!(r.n_obs, 104);
        p[1].gdp_pc = -1.0;
        assert!(matches!(fit_fe(&p, &RegressionSpec::pooled()), Err(EconoError::InvalidObservation { .. })));
    }
}
