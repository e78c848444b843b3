//! Market-model abnormal returns around disclosure dates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ESTIMATION_WINDOW: usize = 10;
pub const MIN_ESTIMATION_WINDOW: usize = 5;
pub const DEFAULT_MIN_WORDS: usize = 200;
pub const DEFAULT_MIN_PRICE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub instrument_id: String,
    observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    /// Dates must be strictly increasing and prices positive and finite.
    pub fn new(instrument_id: impl Into<String>, observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let instrument_id = instrument_id.into();
        for w in observations.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidInput(format!(
                    "{instrument_id}: dates not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        if let Some((d, p)) = observations.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidInput(format!("{instrument_id}: non-positive price {p} on {d}")));
        }
        Ok(PriceSeries {
            instrument_id,
            observations,
        })
    }

    /// Reads a `date,price` CSV with ISO-8601 dates.
    pub fn load_csv(path: &Path, instrument_id: impl Into<String>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        check_header(path, &mut reader, &["date", "price"])?;
        let mut observations = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| csv_error(path, e))?;
            let date = parse_date(path, line, &record[0])?;
            let price: f64 = record[1]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line, format!("field \"price\": invalid number {:?}", &record[1])))?;
            if !(price.is_finite() && price > 0.0) {
                return Err(Error::parse(path, line, format!("field \"price\": must be positive, got {price}")));
            }
            if let Some(&(prev, _)) = observations.last() {
                if date <= prev {
                    return Err(Error::parse(path, line, format!("date {date} does not follow {prev}")));
                }
            }
            observations.push((date, price));
        }
        PriceSeries::new(instrument_id, observations)
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

fn check_header<R: std::io::Read>(path: &Path, reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn parse_date(path: &Path, line: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| Error::parse(path, line, format!("field \"date\": invalid ISO-8601 date {s:?}")))
}

/// `r_t = p_t / p_{t-1} - 1`, dated at `t`.
pub fn simple_returns(series: &PriceSeries) -> Result<Vec<(NaiveDate, f64)>> {
    if series.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: at least 2 prices are needed for a return",
            series.instrument_id
        )));
    }
    Ok(series
        .observations
        .windows(2)
        .map(|w| (w[1].0, w[1].1 / w[0].1 - 1.0))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketModelFit {
    pub alpha: f64,
    pub beta: f64,
    pub abnormal_return: f64,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    /// Estimation-window residuals `r_stock - (alpha + beta * r_market)`.
    pub residuals: Vec<f64>,
}

/// Market-model abnormal return on `event_date`.
///
/// Both price series are first restricted to their common trading days, so a
/// return always spans the same two days for stock and market. The market
/// model is estimated by OLS over the `estimation_window` returns ending the
/// trading day before the event.
pub fn abnormal_return(
    stock: &PriceSeries,
    market: &PriceSeries,
    event_date: NaiveDate,
    estimation_window: usize,
) -> Result<MarketModelFit> {
    if estimation_window < MIN_ESTIMATION_WINDOW {
        return Err(Error::Config(format!(
            "estimation window must be at least {MIN_ESTIMATION_WINDOW} trading days, got {estimation_window}"
        )));
    }
    let market_prices: BTreeMap<NaiveDate, f64> = market.observations.iter().copied().collect();
    let common: Vec<(NaiveDate, f64, f64)> = stock
        .observations
        .iter()
        .filter_map(|&(d, p)| market_prices.get(&d).map(|&m| (d, p, m)))
        .collect();
    let Some(k) = common.iter().position(|&(d, _, _)| d == event_date) else {
        return Err(Error::Coverage(format!(
            "{} / {}: {event_date} is not a common trading day",
            stock.instrument_id, market.instrument_id
        )));
    };
    // Returns are indexed by the later day; the event return is at k and the
    // window covers k - window ..= k - 1, each needing the previous price.
    if k < estimation_window + 1 {
        let have = k.saturating_sub(1);
        let from = common.first().map(|c| c.0.to_string()).unwrap_or_default();
        return Err(Error::Coverage(format!(
            "{} / {}: {estimation_window} returns needed before {event_date}, only {have} available since {from}",
            stock.instrument_id, market.instrument_id
        )));
    }
    let ret = |i: usize| -> (f64, f64) {
        (
            common[i].1 / common[i - 1].1 - 1.0,
            common[i].2 / common[i - 1].2 - 1.0,
        )
    };
    let window: Vec<(f64, f64)> = (k - estimation_window..k).map(ret).collect();
    let n = estimation_window as f64;
    let ms = window.iter().map(|w| w.0).sum::<f64>() / n;
    let mm = window.iter().map(|w| w.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(s, m) in &window {
        sxx += (m - mm) * (m - mm);
        sxy += (m - mm) * (s - ms);
    }
    if sxx <= 0.0 {
        return Err(Error::Estimation(format!(
            "{}: market returns have zero variance in the window before {event_date}",
            market.instrument_id
        )));
    }
    let beta = sxy / sxx;
    let alpha = ms - beta * mm;
    let (rs, rm) = ret(k);
    Ok(MarketModelFit {
        alpha,
        beta,
        abnormal_return: rs - (alpha + beta * rm),
        window_start: common[k - estimation_window].0,
        window_end: common[k - 1].0,
        residuals: window.iter().map(|&(s, m)| s - (alpha + beta * m)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub doc_id: String,
    pub instrument_id: String,
    pub event_date: NaiveDate,
    pub word_count: usize,
    pub price_at_event: f64,
}

/// Reads `doc_id,instrument_id,event_date,word_count,price`.
pub fn load_events(path: &Path) -> Result<Vec<EventSpec>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    check_header(
        path,
        &mut reader,
        &["doc_id", "instrument_id", "event_date", "word_count", "price"],
    )?;
    let mut events = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let r = record.map_err(|e| csv_error(path, e))?;
        let word_count = r[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("field \"word_count\": invalid count {:?}", &r[3])))?;
        let price_at_event: f64 = r[4]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("field \"price\": invalid number {:?}", &r[4])))?;
        events.push(EventSpec {
            doc_id: r[0].trim().to_owned(),
            instrument_id: r[1].trim().to_owned(),
            event_date: parse_date(path, line, &r[2])?,
            word_count,
            price_at_event,
        });
    }
    Ok(events)
}

/// Keeps events with at least `min_words` words and a price of at least
/// `min_price` (both bounds inclusive).
pub fn filter_events(events: &[EventSpec], min_words: usize, min_price: f64) -> Vec<EventSpec> {
    events
        .iter()
        .filter(|e| e.word_count >= min_words && e.price_at_event >= min_price)
        .cloned()
        .collect()
}

/// Abnormal returns for every event, in event order.
pub fn abnormal_returns(
    events: &[EventSpec],
    prices: &BTreeMap<String, PriceSeries>,
    market: &PriceSeries,
    estimation_window: usize,
) -> Vec<(String, Result<f64>)> {
    events
        .par_iter()
        .map(|e| {
            let r = prices
                .get(&e.instrument_id)
                .ok_or_else(|| Error::Coverage(format!("no price series for instrument {:?}", e.instrument_id)))
                .and_then(|s| abnormal_return(s, market, e.event_date, estimation_window))
                .map(|f| f.abnormal_return);
            (e.doc_id.clone(), r)
        })
        .collect()
}

/// `doc_id,abnormal_return` CSV, usable as a response file.
pub fn responses_csv(rows: &[(String, f64)]) -> String {
    let mut out = String::from("doc_id,abnormal_return\n");
    for (id, ar) in rows {
        let _ = writeln!(out, "{id},{ar}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64)
    }

    fn series(id: &str, prices: &[f64]) -> PriceSeries {
        PriceSeries::new(id, prices.iter().enumerate().map(|(i, &p)| (day(i), p)).collect()).unwrap()
    }

    fn market_prices(n: usize) -> Vec<f64> {
        let mut p = vec![100.0];
        for i in 1..n {
            let r = 0.01 * ((i * 7 % 5) as f64 - 2.0) + 0.003 * (i % 3) as f64;
            p.push(p[i - 1] * (1.0 + r));
        }
        p
    }

    #[test]
    fn returns_examples() {
        let r = simple_returns(&series("s", &[100.0, 110.0, 99.0])).unwrap();
        assert!((r[0].1 - 0.10).abs() < 1e-15);
        assert!((r[1].1 + 0.10).abs() < 1e-15);
        assert_eq!(r[0].0, day(1));
        assert!(simple_returns(&series("s", &[5.0, 5.0, 5.0])).unwrap().iter().all(|x| x.1 == 0.0));
        assert!(PriceSeries::new("s", vec![(day(0), 0.0)]).is_err());
    }

    #[test]
    fn stock_equal_to_market() {
        let m = series("m", &market_prices(15));
        let f = abnormal_return(&m, &m, day(12), 10).unwrap();
        assert!(f.alpha.abs() < 1e-15 && (f.beta - 1.0).abs() < 1e-12);
        assert!(f.abnormal_return.abs() < 1e-15);
        assert_eq!(f.window_start, day(2));
        assert_eq!(f.window_end, day(11));
    }

    #[test]
    fn coverage_and_variance_errors() {
        let m = series("m", &market_prices(15));
        assert!(matches!(abnormal_return(&m, &m, day(10), 10), Err(Error::Coverage(_))));
        assert!(matches!(abnormal_return(&m, &m, day(40), 10), Err(Error::Coverage(_))));
        assert!(matches!(abnormal_return(&m, &m, day(12), 4), Err(Error::Config(_))));
        let flat = series("f", &[10.0; 15]);
        assert!(matches!(abnormal_return(&m, &flat, day(12), 10), Err(Error::Estimation(_))));
    }

    #[test]
    fn missing_days_use_intersection() {
        let mp = market_prices(20);
        let m = series("m", &mp);
        // Drop day 5 from the stock; the same day disappears from the market side.
        let obs: Vec<(NaiveDate, f64)> = mp.iter().enumerate().filter(|(i, _)| *i != 5).map(|(i, &p)| (day(i), p)).collect();
        let s = PriceSeries::new("s", obs).unwrap();
        let f = abnormal_return(&s, &m, day(15), 10).unwrap();
        assert!(f.abnormal_return.abs() < 1e-14);
        assert_eq!(f.window_start, day(4));
    }

    #[test]
    fn filter_bounds_inclusive() {
        let e = |w: usize, p: f64| EventSpec {
            doc_id: format!("{w}-{p}"),
            instrument_id: "x".into(),
            event_date: day(0),
            word_count: w,
            price_at_event: p,
        };
        let kept = filter_events(&[e(199, 10.0), e(500, 4.99), e(200, 5.0)], DEFAULT_MIN_WORDS, DEFAULT_MIN_PRICE);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].word_count, 200);
    }
}
