//! Day-of-week, per-user activity, hashtag and heatmap aggregations. Each
//! aggregate merges by field-wise addition.

mod heatmap;

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use chrono::{Datelike, Duration};
use serde::Serialize;
use thiserror::Error;

use crate::corpus::Tweet;
use crate::textprep::{normalize, tokenize};

pub use heatmap::{heatmap_grid, HeatmapGrid, DEFAULT_GRID};

/// Brazil standard time, UTC−3.
pub const DEFAULT_UTC_OFFSET_MINUTES: i64 = -180;

pub const WEEKDAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grids differ in bounds or shape")]
    GridMismatch,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Tweet counts per weekday, Monday first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DayOfWeekHistogram {
    pub counts: [u64; 7],
}

impl DayOfWeekHistogram {
    pub fn add(&mut self, t: &Tweet, utc_offset_minutes: i64) {
        let local = t.created_at + Duration::minutes(utc_offset_minutes);
        self.counts[local.weekday().num_days_from_monday() as usize] += 1;
    }

    pub fn merge(&mut self, other: &DayOfWeekHistogram) {
        self.counts.iter_mut().zip(other.counts).for_each(|(a, b)| *a += b);
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_json(&self) -> String {
        let body: Vec<String> = WEEKDAYS.iter().zip(self.counts).map(|(d, c)| format!("  \"{d}\": {c}")).collect();
        format!("{{\n{}\n}}", body.join(",\n"))
    }

    /// `day,count` rows, Monday first.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), AnalyticsError> {
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(["day", "count"])?;
        for (d, c) in WEEKDAYS.iter().zip(self.counts) {
            writer.write_record([d.to_string(), c.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

pub fn day_of_week_histogram<'a, I>(tweets: I, utc_offset_minutes: i64) -> DayOfWeekHistogram
where
    I: IntoIterator<Item = &'a Tweet>,
{
    let mut h = DayOfWeekHistogram::default();
    for t in tweets {
        h.add(t, utc_offset_minutes);
    }
    h
}

/// Per-user tweet counts; tweets without an author are tallied apart.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserCounts {
    per_user: HashMap<u64, u64>,
    unattributed: u64,
}

impl UserCounts {
    pub fn add(&mut self, t: &Tweet) {
        match t.user_id {
            Some(u) => *self.per_user.entry(u).or_insert(0) += 1,
            None => self.unattributed += 1,
        }
    }

    pub fn merge(&mut self, other: &UserCounts) {
        for (&u, &n) in &other.per_user {
            *self.per_user.entry(u).or_insert(0) += n;
        }
        self.unattributed += other.unattributed;
    }

    pub fn summary(&self) -> UserActivitySummary {
        let mut histogram = BTreeMap::new();
        for &n in self.per_user.values() {
            *histogram.entry(n).or_insert(0u64) += 1;
        }
        let band = |lo: u64, hi: u64| histogram.range(lo..=hi).map(|(_, u)| u).sum::<u64>();
        UserActivitySummary {
            band_lt10: band(1, 9),
            band_10_100: band(10, 100),
            band_gt100: band(101, u64::MAX),
            distinct_users: self.per_user.len() as u64,
            attributed_tweets: self.per_user.values().sum(),
            unattributed: self.unattributed,
            histogram,
        }
    }
}

/// Bands are `[1,10)`, `[10,100]` and `(100,∞)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserActivitySummary {
    /// tweets-per-user → number of users
    pub histogram: BTreeMap<u64, u64>,
    pub band_lt10: u64,
    pub band_10_100: u64,
    pub band_gt100: u64,
    pub distinct_users: u64,
    pub attributed_tweets: u64,
    pub unattributed: u64,
}

impl UserActivitySummary {
    pub fn band_lt10_fraction(&self) -> f64 {
        if self.distinct_users == 0 {
            0.0
        } else {
            self.band_lt10 as f64 / self.distinct_users as f64
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// `tweets,users` rows for a log-log plot.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), AnalyticsError> {
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(["tweets", "users"])?;
        for (t, u) in &self.histogram {
            writer.write_record([t.to_string(), u.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

pub fn tweets_per_user_distribution<'a, I>(tweets: I) -> UserActivitySummary
where
    I: IntoIterator<Item = &'a Tweet>,
{
    let mut counts = UserCounts::default();
    for t in tweets {
        counts.add(t);
    }
    counts.summary()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HashtagCounts {
    counts: HashMap<String, u64>,
}

impl HashtagCounts {
    pub fn add_text(&mut self, raw: &str) {
        for tok in tokenize(&normalize(raw)) {
            if tok.starts_with('#') {
                *self.counts.entry(tok).or_insert(0) += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &HashtagCounts) {
        for (h, &n) in &other.counts {
            *self.counts.entry(h.clone()).or_insert(0) += n;
        }
    }

    /// Descending by count, ties in lexicographic order.
    pub fn top(&self, k: usize) -> Vec<(String, u64)> {
        let mut all: Vec<(String, u64)> = self.counts.iter().map(|(h, &n)| (h.clone(), n)).collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }
}

pub fn top_hashtags<'a, I>(texts: I, k: usize) -> Vec<(String, u64)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts = HashtagCounts::default();
    for t in texts {
        counts.add_text(t);
    }
    counts.top(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, TimeZone, Utc};
    use proptest::prelude::*;

    fn tweet(id: u64, at: DateTime<Utc>, user: Option<u64>) -> Tweet {
        Tweet {
            id,
            text: String::new(),
            lang: "pt".into(),
            created_at: at,
            coordinates: None,
            place_box: None,
            place_name: None,
            user_id: user,
        }
    }

    #[test]
    fn weekday_examples() {
        let monday = tweet(1, Utc.with_ymd_and_hms(2017, 3, 13, 12, 0, 0).unwrap(), None);
        assert_eq!(day_of_week_histogram([&monday], 0).counts, [1, 0, 0, 0, 0, 0, 0]);
        let early = tweet(2, Utc.with_ymd_and_hms(2017, 3, 13, 1, 0, 0).unwrap(), None);
        assert_eq!(day_of_week_histogram([&early], -180).counts, [0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(day_of_week_histogram(&[], 0).total(), 0);
    }

    #[test]
    fn user_bands() {
        let at = Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap();
        let mut ts = Vec::new();
        for (user, n) in [(1u64, 1), (2, 10), (3, 101)] {
            ts.extend((0..n).map(|i| tweet(i, at, Some(user))));
        }
        ts.push(tweet(0, at, None));
        let s = tweets_per_user_distribution(&ts);
        assert_eq!((s.band_lt10, s.band_10_100, s.band_gt100, s.distinct_users), (1, 1, 1, 3));
        assert_eq!(s.attributed_tweets, 112);
        assert_eq!(s.unattributed, 1);

        let single: Vec<Tweet> = (0..7).map(|i| tweet(i, at, Some(9))).collect();
        assert_eq!(tweets_per_user_distribution(&single).histogram, BTreeMap::from([(7, 1)]));
    }

    #[test]
    fn hashtag_ranking() {
        assert_eq!(
            top_hashtags(["#rio #rio", "#sp"], 10),
            vec![("#rio".to_string(), 2), ("#sp".to_string(), 1)]
        );
        assert!(top_hashtags(["sem tags"], 5).is_empty());
        assert_eq!(top_hashtags(["#b #a #c #a"], 1), vec![("#a".to_string(), 2)]);
        assert_eq!(top_hashtags(["#B #a #b"], 2), vec![("#b".to_string(), 2), ("#a".to_string(), 1)]);
    }

    #[test]
    fn exports() {
        let h = DayOfWeekHistogram { counts: [1, 2, 3, 4, 5, 6, 7] };
        let mut out = Vec::new();
        h.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("day,count\nmon,1\ntue,2\n"));
        let v: serde_json::Value = serde_json::from_str(&h.to_json()).unwrap();
        assert_eq!(v["sun"], 7);
        assert!(h.to_json().find("mon").unwrap() < h.to_json().find("sun").unwrap());
    }

    /// Weekday index from Unix days: 1970-01-01 was a Thursday.
    fn oracle_weekday(unix_seconds: i64, offset_minutes: i64) -> usize {
        let local = unix_seconds + offset_minutes * 60;
        (local.div_euclid(86_400) + 3).rem_euclid(7) as usize
    }

    proptest! {
        #[test]
        fn weekday_matches_unix_day_arithmetic(secs in 0i64..4_000_000_000, offset in -1440i64..1440) {
            let t = tweet(0, Utc.timestamp_opt(secs, 0).unwrap(), None);
            let h = day_of_week_histogram([&t], offset);
            prop_assert_eq!(h.counts[oracle_weekday(secs, offset)], 1);
            prop_assert_eq!(h, day_of_week_histogram([&t], offset + 10_080));
        }
    }
}
