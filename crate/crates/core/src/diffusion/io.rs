//! Diffusion input and output files.
//!
//! Input series: `country,month_index,ipc` with an optional `n_cities`.
//! Fit: `row,country,k,alpha,beta,delta_alpha,delta_beta,n_obs,rmse`, one
//! `mean_field` row followed by one `country` row per fitted country.
//! Ranking: `country,n_cities,rank_2006,rank_2012,change,category,
//! asymptotic_limit,growth_rate,year_1pct,year_99pct`.
//! Curves: `country,month_index,observed,fitted` (`observed` may be empty);
//! the mean-field curve uses the country name `mean_field`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{logistic, CountrySeries, MixedEffectsFit, SaturationSummary};
use crate::tabular::{self, Table};

pub const SERIES_COLUMNS: [&str; 3] = ["country", "month_index", "ipc"];
pub const FIT_COLUMNS: [&str; 9] = ["row", "country", "k", "alpha", "beta", "delta_alpha", "delta_beta", "n_obs", "rmse"];
pub const RANKING_COLUMNS: [&str; 10] = [
    "country",
    "n_cities",
    "rank_2006",
    "rank_2012",
    "change",
    "category",
    "asymptotic_limit",
    "growth_rate",
    "year_1pct",
    "year_99pct",
];

/// Reads a long-format series file into per-country series sorted by
/// country code and month.
pub fn read_series<R: Read>(input: R) -> tabular::Result<Vec<CountrySeries>> {
    let mut table = Table::new(input, &SERIES_COLUMNS)?;
    let mut by_country: BTreeMap<String, (Vec<(f64, f64)>, usize)> = BTreeMap::new();
    table.for_each_row(|row| {
        let t: i32 = row.parse("month_index")?;
        let ipc: f64 = row.parse("ipc")?;
        let n_cities = match row.optional("n_cities") {
            Some(text) if !text.is_empty() => {
                text.parse::<usize>().map_err(|e| row.field_error("n_cities", e.to_string()))?
            }
            _ => 0,
        };
        let e = by_country.entry(row.str("country").to_string()).or_default();
        e.0.push((f64::from(t), ipc));
        e.1 = e.1.max(n_cities);
        Ok(())
    })?;
    Ok(by_country
        .into_iter()
        .map(|(country, (mut obs, n_cities))| {
            obs.sort_by(|a, b| a.0.total_cmp(&b.0));
            CountrySeries { country, t: obs.iter().map(|o| o.0).collect(), ipc: obs.iter().map(|o| o.1).collect(), n_cities }
        })
        .collect())
}

pub fn write_series<W: Write>(out: W, series: &[CountrySeries]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "country,month_index,ipc,n_cities")?;
    for s in series {
        for (t, y) in s.t.iter().zip(&s.ipc) {
            writeln!(w, "{},{},{},{}", s.country, t, y, s.n_cities)?;
        }
    }
    w.flush()
}

pub fn write_fit<W: Write>(out: W, fit: &MixedEffectsFit) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", FIT_COLUMNS.join(","))?;
    let m = fit.mean_field;
    let n: usize = fit.per_country.iter().map(|c| c.n_obs).sum();
    writeln!(w, "mean_field,,{},{},{},0,0,{},{}", m.k, m.alpha, m.beta, n, fit.rmse)?;
    for c in &fit.per_country {
        let p = c.params;
        writeln!(
            w,
            "country,{},{},{},{},{},{},{},{}",
            c.country, p.k, p.alpha, p.beta, c.delta_alpha, c.delta_beta, c.n_obs, c.rmse
        )?;
    }
    w.flush()
}

pub fn write_ranking<W: Write>(out: W, rows: &[SaturationSummary]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{}", RANKING_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{:.3},{:.3},{},{}",
            r.country,
            r.n_cities,
            r.rank_2006,
            r.rank_2012,
            r.rank_change,
            r.category,
            r.params.k,
            r.params.alpha,
            r.year_1pct,
            r.year_99pct
        )?;
    }
    w.flush()
}

/// Fitted curves on every month in `months`, with observations alongside.
pub fn write_curves<W: Write>(
    out: W,
    fit: &MixedEffectsFit,
    series: &[CountrySeries],
    months: std::ops::Range<i32>,
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "country,month_index,observed,fitted")?;
    for m in months.clone() {
        writeln!(w, "mean_field,{m},,{}", logistic(f64::from(m), &fit.mean_field))?;
    }
    for c in &fit.per_country {
        let obs: BTreeMap<i64, f64> = series
            .iter()
            .find(|s| s.country == c.country)
            .map(|s| s.t.iter().zip(&s.ipc).map(|(t, y)| (*t as i64, *y)).collect())
            .unwrap_or_default();
        for m in months.clone() {
            let o = obs.get(&i64::from(m)).map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{m},{o},{}", c.country, logistic(f64::from(m), &c.params))?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_groups_and_sorts() {
        let text = "country,month_index,ipc\nBBB,1,0.2\nAAA,3,0.5\nBBB,0,0.1\n";
        let s = read_series(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].country, "AAA");
        assert_eq!(s[1].t, vec![0.0, 1.0]);
        assert_eq!(s[1].ipc, vec![0.1, 0.2]);
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        assert_eq!(read_series(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn ranking_header_follows_table_layout() {
        let mut buf = Vec::new();
        write_ranking(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "country,n_cities,rank_2006,rank_2012,change,category,asymptotic_limit,growth_rate,year_1pct,year_99pct\n"
        );
    }
}
