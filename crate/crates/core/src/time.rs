//! UTC timestamp helpers shared by the CSV formats.
//!
//! All timestamps in this crate are UTC unix seconds (`i64`); files carry
//! them as ISO-8601 strings like `2016-12-01T07:00:00Z`.

use chrono::{DateTime, Datelike, SecondsFormat, TimeZone, Timelike, Utc};

/// Seconds per hour; hour-aligned timestamps are multiples of this.
pub const HOUR_S: i64 = 3600;

/// Parse an ISO-8601 timestamp (`2016-12-01T07:00:00Z` or with an offset)
/// into UTC unix seconds.
pub fn parse_utc(s: &str) -> Result<i64, String> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|dt| dt.timestamp())
        .map_err(|e| format!("invalid timestamp {s:?}: {e}"))
}

/// Format UTC unix seconds as `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_utc(ts: i64) -> String {
    match Utc.timestamp_opt(ts, 0) {
        chrono::LocalResult::Single(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
        _ => format!("{ts}?"),
    }
}

/// True if the timestamp falls exactly on an hour boundary.
pub fn is_hour_aligned(ts: i64) -> bool {
    ts.rem_euclid(HOUR_S) == 0
}

/// Hour of day (0..=23) of a UTC timestamp.
pub fn hour_of_day(ts: i64) -> u32 {
    Utc.timestamp_opt(ts, 0).unwrap().hour()
}

/// Weekday of a UTC timestamp, 0 = Monday .. 6 = Sunday.
pub fn weekday(ts: i64) -> u32 {
    Utc.timestamp_opt(ts, 0)
        .unwrap()
        .weekday()
        .num_days_from_monday()
}

/// Month of a UTC timestamp, 1..=12.
pub fn month(ts: i64) -> u32 {
    Utc.timestamp_opt(ts, 0).unwrap().month()
}
