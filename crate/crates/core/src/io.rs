//! CSV ingestion of return series and option chains with per-row diagnostics.
//!
//! Malformed rows are skipped and reported; a file with more than 1% bad rows is
//! rejected as a whole. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::black::OptionKind;
use crate::error::{Error, Result};
use crate::filters::ReturnSeries;
use crate::replication::{OptionChain, OptionQuote};

/// Fraction of bad rows above which a file is rejected.
pub const MAX_BAD_FRACTION: f64 = 0.01;

/// Days per year for expiry year fractions (ACT/365).
pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowIssue {
    /// 1-based line number in the file.
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// A parsed value together with the rows that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<V> {
    pub value: V,
    pub issues: Vec<RowIssue>,
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).flexible(true).from_reader(r)
}

fn header_index(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
}

fn check_bad_fraction(source: &str, good: usize, issues: &[RowIssue]) -> Result<()> {
    let total = good + issues.len();
    if total == 0 {
        return Err(Error::Data(format!("{source}: no data rows")));
    }
    if issues.len() as f64 > MAX_BAD_FRACTION * total as f64 {
        let shown: Vec<String> = issues.iter().take(5).map(ToString::to_string).collect();
        return Err(Error::Data(format!(
            "{source}: {} of {total} rows malformed (limit {:.0}%): {}",
            issues.len(),
            MAX_BAD_FRACTION * 100.0,
            shown.join("; ")
        )));
    }
    Ok(())
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("bad date '{s}': {e}"))
}

fn parse_num(s: &str, what: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("bad {what} '{s}'")),
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}

/// Reads `(date, price)` or `(date, return)`; the value column is chosen by header name.
pub fn read_returns_from<R: Read>(source: &str, r: R) -> Result<Loaded<ReturnSeries<f64>>> {
    let mut rdr = reader(r);
    let headers = rdr.headers().map_err(|e| Error::Data(format!("{source}: {e}")))?.clone();
    let date_col = header_index(&headers, &["date"]).ok_or_else(|| Error::Data(format!("{source}: missing 'date' column")))?;
    let (val_col, is_price) = match (header_index(&headers, &["price", "close"]), header_index(&headers, &["return", "ret"])) {
        (Some(c), _) => (c, true),
        (None, Some(c)) => (c, false),
        _ => return Err(Error::Data(format!("{source}: need a 'price' or 'return' column"))),
    };
    let mut rows = Vec::new();
    let mut issues = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                issues.push(RowIssue { line, message: e.to_string() });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        let parsed = (|| {
            let d = parse_date(rec.get(date_col).ok_or("missing date")?)?;
            let v = parse_num(rec.get(val_col).ok_or("missing value")?, if is_price { "price" } else { "return" })?;
            if is_price && v <= 0.0 {
                return Err(format!("price {v} must be positive"));
            }
            if !is_price && v <= -1.0 {
                return Err(format!("return {v} implies a non-positive price"));
            }
            if let Some(&(prev, _, _)) = rows.last() {
                if d <= prev {
                    return Err(format!("date {d} not after {prev}"));
                }
            }
            Ok((d, v, line))
        })();
        match parsed {
            Ok(row) => rows.push(row),
            Err(message) => issues.push(RowIssue { line, message }),
        }
    }
    check_bad_fraction(source, rows.len(), &issues)?;
    let dates: Vec<NaiveDate> = rows.iter().map(|r| r.0).collect();
    let vals: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let series = if is_price { ReturnSeries::from_prices(dates, vals) } else { ReturnSeries::new(dates, vals) };
    let value = series.map_err(|e| Error::Data(format!("{source}: {e}")))?;
    Ok(Loaded { value, issues })
}

pub fn read_returns(path: &Path) -> Result<Loaded<ReturnSeries<f64>>> {
    read_returns_from(&path.display().to_string(), open(path)?)
}

/// Market context for turning dated quotes into chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainContext {
    pub as_of: NaiveDate,
    /// Used when the file has no `rate` column.
    pub rate: f64,
    /// Spot for `F = S e^{rT}` when the file has no `forward` column; without it the
    /// forward is implied from put-call parity.
    pub spot: Option<f64>,
}

struct ChainRow {
    expiry: NaiveDate,
    quote: OptionQuote<f64>,
    forward: Option<f64>,
    rate: Option<f64>,
}

/// Reads `expiry_date, strike, kind, mid[, implied_vol][, delta][, forward][, rate]`
/// into one chain per expiry, ordered by expiry.
pub fn read_chains_from<R: Read>(source: &str, r: R, ctx: &ChainContext) -> Result<Loaded<Vec<OptionChain<f64>>>> {
    let mut rdr = reader(r);
    let headers = rdr.headers().map_err(|e| Error::Data(format!("{source}: {e}")))?.clone();
    let need = |names: &[&str]| header_index(&headers, names).ok_or_else(|| Error::Data(format!("{source}: missing '{}' column", names[0])));
    let c_exp = need(&["expiry_date", "expiry"])?;
    let c_strike = need(&["strike"])?;
    let c_kind = need(&["kind", "cp_flag", "type"])?;
    let c_mid = need(&["mid", "price"])?;
    let c_iv = header_index(&headers, &["implied_vol", "iv"]);
    let c_delta = header_index(&headers, &["delta"]);
    let c_fwd = header_index(&headers, &["forward"]);
    let c_rate = header_index(&headers, &["rate"]);
    let mut rows = Vec::new();
    let mut issues = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                issues.push(RowIssue { line: e.position().map_or(0, |p| p.line()), message: e.to_string() });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        let opt = |c: Option<usize>, what: &str| -> std::result::Result<Option<f64>, String> {
            match c.and_then(|c| rec.get(c)) {
                None | Some("") => Ok(None),
                Some(s) => parse_num(s, what).map(Some),
            }
        };
        let parsed = (|| {
            let expiry = parse_date(rec.get(c_exp).ok_or("missing expiry")?)?;
            if expiry <= ctx.as_of {
                return Err(format!("expiry {expiry} not after valuation date {}", ctx.as_of));
            }
            let strike = parse_num(rec.get(c_strike).ok_or("missing strike")?, "strike")?;
            let kind: OptionKind = rec.get(c_kind).ok_or("missing kind")?.parse().map_err(|e: Error| e.to_string())?;
            let mid = parse_num(rec.get(c_mid).ok_or("missing mid")?, "mid")?;
            if strike <= 0.0 || mid < 0.0 {
                return Err(format!("strike {strike} must be positive and mid {mid} non-negative"));
            }
            let quote = OptionQuote { strike, kind, mid, implied_vol: opt(c_iv, "implied_vol")?, delta: opt(c_delta, "delta")? };
            Ok(ChainRow { expiry, quote, forward: opt(c_fwd, "forward")?, rate: opt(c_rate, "rate")? })
        })();
        match parsed {
            Ok(row) => rows.push(row),
            Err(message) => issues.push(RowIssue { line, message }),
        }
    }
    check_bad_fraction(source, rows.len(), &issues)?;
    let mut by_expiry: BTreeMap<NaiveDate, Vec<ChainRow>> = BTreeMap::new();
    for r in rows {
        by_expiry.entry(r.expiry).or_default().push(r);
    }
    let mut chains = Vec::with_capacity(by_expiry.len());
    for (expiry, rows) in by_expiry {
        let t = (expiry - ctx.as_of).num_days() as f64 / DAYS_PER_YEAR;
        let rate = rows.iter().find_map(|r| r.rate).unwrap_or(ctx.rate);
        let quotes: Vec<OptionQuote<f64>> = rows.iter().map(|r| r.quote).collect();
        let forward = match (rows.iter().find_map(|r| r.forward), ctx.spot) {
            (Some(f), _) => f,
            (None, Some(s)) => s * (rate * t).exp(),
            (None, None) => parity_forward(&quotes, rate, t)
                .ok_or_else(|| Error::Data(format!("{source}: expiry {expiry}: no forward column, no spot, and no put-call pairs")))?,
        };
        let chain = OptionChain::new(t, forward, rate, quotes).map_err(|e| Error::Data(format!("{source}: expiry {expiry}: {e}")))?;
        chains.push(chain);
    }
    Ok(Loaded { value: chains, issues })
}

pub fn read_chains(path: &Path, ctx: &ChainContext) -> Result<Loaded<Vec<OptionChain<f64>>>> {
    read_chains_from(&path.display().to_string(), open(path)?, ctx)
}

/// Median of `K + e^{rT}(C − P)` over strikes quoted on both sides.
fn parity_forward(quotes: &[OptionQuote<f64>], rate: f64, t: f64) -> Option<f64> {
    let growth = (rate * t).exp();
    let mut est: Vec<f64> = quotes
        .iter()
        .filter(|c| c.kind == OptionKind::Call)
        .filter_map(|c| {
            quotes.iter().find(|p| p.kind == OptionKind::Put && p.strike == c.strike).map(|p| c.strike + growth * (c.mid - p.mid))
        })
        .filter(|f| *f > 0.0)
        .collect();
    if est.is_empty() {
        return None;
    }
    est.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(est[est.len() / 2])
}
