//! The bundled demo series, 2011-01 through 2015-12.
//!
//! Nine months carry published values (2011-08, 2012-11, 2013-12, 2014-04,
//! 2015-01..04, 2015-07). Every other month is SYNTHETIC:
//!
//! ```text
//! value(year, month) = PROFILE[month] + noise,  noise ~ U(-NOISE, NOISE)
//! ```
//!
//! with the noise drawn in chronological order from `ChaCha8Rng` seeded with
//! [`NOISE_SEED`] and the result rounded to two decimals.
//! `data/sample_consumption.csv` is this module's [`render_csv`] output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::timeseries::{parse_series_csv, TimeSeries, YearMonth};

/// Seasonal level per calendar month, kWh/t.
pub const PROFILE: [f64; 12] = [36.55, 36.60, 36.55, 35.80, 35.55, 35.30, 35.35, 36.10, 35.95, 36.15, 36.45, 34.70];
pub const NOISE: f64 = 0.05;
pub const NOISE_SEED: u64 = 2011;

/// `(year, month, value)` of the months with published values.
pub const ANCHORS: [(i32, u32, f64); 9] = [
    (2011, 8, 36.22),
    (2012, 11, 36.67),
    (2013, 12, 34.23),
    (2014, 4, 36.36),
    (2015, 1, 36.82),
    (2015, 2, 36.87),
    (2015, 3, 36.84),
    (2015, 4, 35.16),
    (2015, 7, 35.38),
];

pub const FIRST: (i32, u32) = (2011, 1);
pub const MONTHS: usize = 60;

pub const SAMPLE_CSV: &str = include_str!("../data/sample_consumption.csv");

/// Rebuilds the sample values from the generator and the anchors.
pub fn generate() -> Vec<(YearMonth, f64)> {
    let start = YearMonth::new(FIRST.0, FIRST.1).expect("valid month");
    let mut rng = ChaCha8Rng::seed_from_u64(NOISE_SEED);
    (0..MONTHS)
        .map(|i| {
            let month = start.offset(i as i64);
            let noise = rng.gen_range(-NOISE..=NOISE);
            let synthetic = ((PROFILE[month.month() as usize - 1] + noise) * 100.0).round() / 100.0;
            let value = ANCHORS
                .iter()
                .find(|&&(y, m, _)| y == month.year() && m == month.month())
                .map_or(synthetic, |&(_, _, v)| v);
            (month, value)
        })
        .collect()
}

pub fn render_csv() -> String {
    let mut out = String::from(
        "# Monthly electricity consumption, kWh/t, 2011-01..2015-12.\n\
         # SYNTHETIC except 2011-08, 2012-11, 2013-12, 2014-04, 2015-01..04 and 2015-07,\n\
         # which are published values. Synthetic months are a fixed monthly profile plus\n\
         # uniform noise; see the `sample` module for the generator.\n\
         month,value\n",
    );
    for (month, value) in generate() {
        out.push_str(&format!("{month},{value:.2}\n"));
    }
    out
}

/// The bundled series.
pub fn sample_series() -> TimeSeries {
    parse_series_csv(SAMPLE_CSV).expect("bundled sample parses")
}
