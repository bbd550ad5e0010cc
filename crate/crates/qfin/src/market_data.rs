//! Price CSV ingestion, weekly resampling, date windowing, and the map
//! into log-price coordinates.

use chrono::{Datelike, NaiveDate};
use qfin_core::CoordinateSeries;

use crate::error::{Error, Result};

const DAYS_PER_YEAR: f64 = 365.25;

/// Dated price rows, strictly increasing dates, all prices positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
    /// Where the rows came from (file name or a caller-supplied label).
    pub source: String,
    /// Rows dropped during ingestion (missing or non-positive price).
    pub rejected: usize,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>, source: String) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::Format(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if dates.len() < 2 {
            return Err(Error::EmptyInput);
        }
        for w in dates.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateDate(w[0]));
            }
            if w[1] < w[0] {
                return Err(Error::Format(format!(
                    "dates not ascending at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(p) = prices.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::Format(format!("non-positive price {p}")));
        }
        Ok(Self {
            dates,
            prices,
            source,
            rejected: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }
}

/// Load a price CSV with a header row naming at least `Date` and a price
/// column. `column` overrides the default selection of `Adj Close` when
/// present, else `Close`. Rows are sorted by date; rows whose price is
/// missing or non-positive are dropped and counted in `rejected`.
pub fn load_price_csv(text: &str, column: Option<&str>, source: &str) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let date_idx = find("Date").ok_or_else(|| Error::Format("no Date column".into()))?;
    let price_idx = match column {
        Some(name) => find(name).ok_or_else(|| Error::Format(format!("no {name} column")))?,
        None => find("Adj Close")
            .or_else(|| find("Close"))
            .ok_or_else(|| Error::Format("no Adj Close or Close column".into()))?,
    };

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut rejected = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(format!("bad row: {e}")))?;
        let date_field = record
            .get(date_idx)
            .ok_or_else(|| Error::Format("row missing date field".into()))?;
        let date = NaiveDate::parse_from_str(date_field.trim(), "%Y-%m-%d")
            .map_err(|_| Error::Format(format!("unparseable date '{date_field}'")))?;
        let price = record.get(price_idx).and_then(|f| f.trim().parse::<f64>().ok());
        match price {
            Some(p) if p > 0.0 && p.is_finite() => rows.push((date, p)),
            _ => rejected += 1,
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    rows.sort_by_key(|(d, _)| *d);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateDate(w[0].0));
        }
    }
    let (dates, prices): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let mut series = PriceSeries::new(dates, prices, source.to_string())?;
    series.rejected = rejected;
    Ok(series)
}

/// One row per ISO calendar week carrying that week's last available price
/// on its actual (last trading day) date. Idempotent.
pub fn resample_weekly(series: &PriceSeries) -> Result<PriceSeries> {
    let mut dates = Vec::new();
    let mut prices = Vec::new();
    let mut current: Option<(i32, u32)> = None;
    for (date, price) in series.dates.iter().zip(&series.prices) {
        let week = date.iso_week();
        let key = (week.year(), week.week());
        if current == Some(key) {
            // same week: later row wins (input is date-sorted)
            *dates.last_mut().unwrap() = *date;
            *prices.last_mut().unwrap() = *price;
        } else {
            current = Some(key);
            dates.push(*date);
            prices.push(*price);
        }
    }
    let mut out = PriceSeries::new(dates, prices, series.source.clone())?;
    out.rejected = series.rejected;
    Ok(out)
}

/// Rows with `start <= date <= end`, order preserved.
pub fn slice_by_date(series: &PriceSeries, start: NaiveDate, end: NaiveDate) -> Result<PriceSeries> {
    if start > end {
        return Err(Error::Parameter(format!(
            "start {start} after end {end}"
        )));
    }
    let mut dates = Vec::new();
    let mut prices = Vec::new();
    for (date, price) in series.dates.iter().zip(&series.prices) {
        if *date >= start && *date <= end {
            dates.push(*date);
            prices.push(*price);
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptySlice { start, end });
    }
    let mut out = PriceSeries::new(dates, prices, series.source.clone())?;
    out.rejected = series.rejected;
    Ok(out)
}

/// `x = ln price`, `t` in years since the first row (1 yr = 365.25 days).
pub fn to_log_coordinates(series: &PriceSeries) -> Result<CoordinateSeries> {
    let first = series.dates[0];
    let t: Vec<f64> = series
        .dates
        .iter()
        .map(|d| (*d - first).num_days() as f64 / DAYS_PER_YEAR)
        .collect();
    let x: Vec<f64> = series.prices.iter().map(|p| p.ln()).collect();
    Ok(CoordinateSeries::new(t, x)?)
}
