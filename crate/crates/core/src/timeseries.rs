//! Monthly series ingestion, min-max scaling and sliding-window datasets.
//!
//! Months are `(year, month)` pairs with arithmetic on the index
//! `year * 12 + (month - 1)`. A [`TimeSeries`] is a start month plus a dense
//! run of values, so the "no gaps" invariant holds by construction once the
//! CSV parser has checked it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::nn::Sample;

/// Default number of past months feeding one prediction.
pub const DEFAULT_WINDOW_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    pub fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_index(index: i64) -> Self {
        Self {
            year: index.div_euclid(12) as i32,
            month: index.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_index(self.index() + months)
    }

    pub fn next(self) -> Self {
        self.offset(1)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("invalid month `{s}`, expected YYYY-MM");
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).ok_or_else(bad)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Consecutive monthly observations in kWh/t.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: YearMonth,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from a start month and consecutive values.
    ///
    /// Every value must be finite and positive. A single point is accepted so
    /// that a split can yield a one-month test range; the CSV reader requires
    /// at least two rows.
    pub fn new(start: YearMonth, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SeriesTooShort { needed: 1, got: 0 });
        }
        for (i, &value) in values.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidValue { month: start.offset(i as i64), value });
            }
        }
        Ok(Self { start, values })
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn end(&self) -> YearMonth {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn months(&self) -> impl Iterator<Item = YearMonth> + '_ {
        (0..self.values.len()).map(|i| self.start.offset(i as i64))
    }

    pub fn points(&self) -> impl Iterator<Item = (YearMonth, f64)> + '_ {
        self.months().zip(self.values.iter().copied())
    }

    pub fn get(&self, month: YearMonth) -> Option<f64> {
        let offset = month.index() - self.start.index();
        usize::try_from(offset).ok().and_then(|i| self.values.get(i).copied())
    }

    /// The trailing `count` months, or `None` when the series is shorter.
    pub fn tail(&self, count: usize) -> Option<&[f64]> {
        self.values.len().checked_sub(count).map(|from| &self.values[from..])
    }

    /// Appends values for the months following [`TimeSeries::end`].
    pub fn extended(&self, more: &[f64]) -> Result<Self> {
        let mut values = self.values.clone();
        values.extend_from_slice(more);
        Self::new(self.start, values)
    }

    /// Renders the canonical `month,value` CSV form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("month,value\n");
        for (month, value) in self.points() {
            out.push_str(&format!("{month},{value}\n"));
        }
        out
    }
}

/// Parses `month,value` CSV text.
///
/// Blank lines and lines starting with `#` are skipped. Rows may arrive in
/// any order; the result is sorted and must cover consecutive months.
pub fn parse_series_csv(text: &str) -> Result<TimeSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    match lines.next() {
        Some((_, header)) if header.trim() == "month,value" => {}
        _ => return Err(Error::MissingHeader),
    }

    let mut rows = Vec::new();
    for (line, raw) in lines {
        let malformed = |message: String| Error::MalformedRow { line, message };
        let (m, v) = raw
            .split_once(',')
            .ok_or_else(|| malformed(format!("expected `YYYY-MM,value`, got `{raw}`")))?;
        let month: YearMonth = m.trim().parse().map_err(malformed)?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| malformed(format!("invalid number `{}`", v.trim())))?;
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidValue { month, value });
        }
        rows.push((month, value));
    }

    if rows.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: rows.len() });
    }
    rows.sort_by_key(|&(m, _)| m);
    for pair in rows.windows(2) {
        let (prev, cur) = (pair[0].0, pair[1].0);
        if prev == cur {
            return Err(Error::DuplicateMonth(cur));
        }
        if cur.index() != prev.index() + 1 {
            return Err(Error::MonthGap(prev.next()));
        }
    }
    TimeSeries::new(rows[0].0, rows.into_iter().map(|(_, v)| v).collect())
}

/// Min-max scaling bounds in kWh/t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: f64,
    pub max: f64,
}

impl NormalizationParams {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if min.is_finite() && max.is_finite() && min < max {
            Ok(Self { min, max })
        } else {
            Err(Error::InvalidRange { min, max })
        }
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn normalize(&self, value: f64) -> f64 {
        (value - self.min) / self.span()
    }

    pub fn denormalize(&self, scaled: f64) -> f64 {
        scaled * self.span() + self.min
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.min..=self.max).contains(&value)
    }
}

pub fn fit_normalization(series: &TimeSeries) -> Result<NormalizationParams> {
    let (min, max) = series
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min == max {
        return Err(Error::DegenerateRange(min));
    }
    NormalizationParams::new(min, max)
}

pub fn normalize(value: f64, params: &NormalizationParams) -> f64 {
    params.normalize(value)
}

pub fn denormalize(scaled: f64, params: &NormalizationParams) -> f64 {
    params.denormalize(scaled)
}

/// Supervised view of a series: each sample maps `window_len` past months to
/// the next month, all in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub window_len: usize,
    pub samples: Vec<Sample>,
    pub norm: NormalizationParams,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn make_windows(
    series: &TimeSeries,
    window_len: usize,
    params: &NormalizationParams,
) -> Result<WindowedDataset> {
    if window_len == 0 {
        return Err(Error::InvalidConfig("window_len must be at least 1".into()));
    }
    if series.len() <= window_len {
        return Err(Error::SeriesTooShort { needed: window_len + 1, got: series.len() });
    }
    let scaled: Vec<f64> = series.values().iter().map(|&v| params.normalize(v)).collect();
    if let Some(pos) = scaled.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::WindowOutOfRange {
            sample: pos.saturating_sub(window_len),
            value: scaled[pos],
        });
    }
    let samples = scaled
        .windows(window_len + 1)
        .map(|w| Sample {
            inputs: w[..window_len].to_vec(),
            targets: vec![w[window_len]],
        })
        .collect();
    Ok(WindowedDataset { window_len, samples, norm: *params })
}

/// Splits into months before `boundary` and months from `boundary` on.
pub fn split_train_test(series: &TimeSeries, boundary: YearMonth) -> Result<(TimeSeries, TimeSeries)> {
    if boundary <= series.start() || boundary > series.end() {
        return Err(Error::BoundaryOutOfRange {
            boundary,
            first: series.start(),
            last: series.end(),
        });
    }
    let at = (boundary.index() - series.start().index()) as usize;
    let (head, tail) = series.values().split_at(at);
    Ok((
        TimeSeries::new(series.start(), head.to_vec())?,
        TimeSeries::new(boundary, tail.to_vec())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ym(s: &str) -> YearMonth {
        s.parse().unwrap()
    }

    fn monthly(start: &str, values: &[f64]) -> TimeSeries {
        TimeSeries::new(ym(start), values.to_vec()).unwrap()
    }

    #[test]
    fn parses_forty_eight_rows() {
        let mut text = String::from("month,value\n");
        for i in 0..48 {
            text.push_str(&format!("{},{}\n", ym("2011-01").offset(i), 36.22 + i as f64 * 0.01));
        }
        let s = parse_series_csv(&text).unwrap();
        assert_eq!(s.len(), 48);
        assert_eq!(s.start(), ym("2011-01"));
        assert_eq!(s.end(), ym("2014-12"));
    }

    #[test]
    fn keeps_value_at_its_month() {
        let text = "month,value\r\n2011-07,35.9\r\n2011-08,36.22\r\n2011-09,36.0\r\n";
        let s = parse_series_csv(text).unwrap();
        assert_eq!(s.get(ym("2011-08")), Some(36.22));
    }

    #[test]
    fn sorts_rows() {
        let s = parse_series_csv("month,value\n2011-02,2\n2011-01,1\n").unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
    }

    #[test]
    fn reports_gap_month() {
        let err = parse_series_csv("month,value\n2011-01,36.2\n2011-03,36.3").unwrap_err();
        assert_eq!(err, Error::MonthGap(ym("2011-02")));
    }

    #[test]
    fn rejects_bad_rows() {
        assert_eq!(parse_series_csv("mon,val\n2011-01,1\n"), Err(Error::MissingHeader));
        assert!(matches!(
            parse_series_csv("month,value\n2011-01,1\n2011-02\n"),
            Err(Error::MalformedRow { line: 3, .. })
        ));
        assert!(matches!(
            parse_series_csv("month,value\n2011-13,1\n2012-01,1\n"),
            Err(Error::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse_series_csv("month,value\n2011-01,abc\n"),
            Err(Error::MalformedRow { line: 2, .. })
        ));
        assert_eq!(
            parse_series_csv("month,value\n2011-01,1\n2011-01,2\n"),
            Err(Error::DuplicateMonth(ym("2011-01")))
        );
        assert!(matches!(
            parse_series_csv("month,value\n2011-01,0\n2011-02,1\n"),
            Err(Error::InvalidValue { .. })
        ));
        assert!(matches!(
            parse_series_csv("month,value\n2011-01,NaN\n2011-02,1\n"),
            Err(Error::InvalidValue { .. })
        ));
        assert!(matches!(parse_series_csv("month,value\n2011-01,1\n"), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn skips_comments() {
        let s = parse_series_csv("# SYNTHETIC\nmonth,value\n# note\n2011-01,1\n2011-02,2\n").unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn normalization_extremes() {
        let s = monthly("2011-01", &[36.0, 34.23, 36.87, 35.0]);
        let p = fit_normalization(&s).unwrap();
        assert_eq!((p.min, p.max), (34.23, 36.87));
        assert_eq!(normalize(34.23, &p), 0.0);
        assert_eq!(normalize(36.87, &p), 1.0);
        assert!((normalize(35.55, &p) - 0.5).abs() < 1e-12);

        let p = NormalizationParams::new(0.0, 10.0).unwrap();
        assert_eq!(normalize(5.0, &p), 0.5);
        assert!(normalize(12.0, &p) > 1.0);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = monthly("2011-01", &[5.0; 6]);
        assert_eq!(fit_normalization(&s), Err(Error::DegenerateRange(5.0)));
    }

    #[test]
    fn window_counts() {
        let values: Vec<f64> = (0..48).map(|i| 30.0 + (i as f64).sin()).collect();
        let s = monthly("2011-01", &values);
        let p = fit_normalization(&s).unwrap();
        assert_eq!(make_windows(&s, 12, &p).unwrap().len(), 36);

        let s13 = monthly("2011-01", &values[..13]);
        let p13 = fit_normalization(&s13).unwrap();
        let ds = make_windows(&s13, 12, &p13).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples[0].targets, vec![p13.normalize(values[12])]);

        let s12 = monthly("2011-01", &values[..12]);
        assert!(matches!(make_windows(&s12, 12, &p), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn split_examples() {
        let s = monthly("2011-01", &[35.0; 60]);
        let (train, test) = split_train_test(&s, ym("2015-01")).unwrap();
        assert_eq!((train.len(), test.len()), (48, 12));
        assert_eq!(test.start(), ym("2015-01"));

        let (train, test) = split_train_test(&s, ym("2015-12")).unwrap();
        assert_eq!((train.len(), test.len()), (59, 1));

        assert!(matches!(split_train_test(&s, ym("2011-01")), Err(Error::BoundaryOutOfRange { .. })));
        assert!(matches!(split_train_test(&s, ym("2016-01")), Err(Error::BoundaryOutOfRange { .. })));
    }

    #[test]
    fn month_arithmetic() {
        assert_eq!(ym("2014-12").next(), ym("2015-01"));
        assert_eq!(ym("2015-01").offset(-1), ym("2014-12"));
        assert_eq!(ym("2011-08").to_string(), "2011-08");
        assert!("2011-8".parse::<YearMonth>().is_err());
    }

    proptest! {
        #[test]
        fn normalize_round_trip(lo in 1.0f64..100.0, width in 1e-3f64..100.0, t in 0.0f64..=1.0) {
            let p = NormalizationParams::new(lo, lo + width).unwrap();
            let v = lo + t * width;
            let back = p.denormalize(p.normalize(v));
            prop_assert!((back - v).abs() <= 1e-12 * v.abs());
        }

        #[test]
        fn window_count_matches(len in 13usize..200, window in 1usize..13) {
            let values: Vec<f64> = (0..len).map(|i| 10.0 + (i as f64 * 0.7).sin()).collect();
            let s = TimeSeries::new(ym("2000-01"), values.clone()).unwrap();
            let p = fit_normalization(&s).unwrap();
            let ds = make_windows(&s, window, &p).unwrap();
            prop_assert_eq!(ds.len(), len - window);
            for (i, sample) in ds.samples.iter().enumerate() {
                prop_assert_eq!(sample.targets[0], p.normalize(values[i + window]));
                prop_assert_eq!(sample.inputs[0], p.normalize(values[i]));
            }
        }

        #[test]
        fn csv_round_trip(values in proptest::collection::vec(0.01f64..1e4, 2..60), year in 1990i32..2030) {
            let s = TimeSeries::new(YearMonth::new(year, 1).unwrap(), values).unwrap();
            let text = s.to_csv();
            let parsed = parse_series_csv(&text).unwrap();
            prop_assert_eq!(parsed.to_csv(), text);
            prop_assert_eq!(parsed, s);
        }

        #[test]
        fn split_partitions(len in 2usize..80, cut in 1usize..79) {
            prop_assume!(cut < len);
            let values: Vec<f64> = (0..len).map(|i| 1.0 + i as f64).collect();
            let s = TimeSeries::new(ym("2010-05"), values.clone()).unwrap();
            let (a, b) = split_train_test(&s, s.start().offset(cut as i64)).unwrap();
            let joined: Vec<f64> = a.values().iter().chain(b.values()).copied().collect();
            prop_assert_eq!(joined, values);
            prop_assert_eq!(a.end().next(), b.start());
        }

        #[test]
        fn parser_never_panics(text in "\\PC*") {
            let _ = parse_series_csv(&text);
        }
    }
}
