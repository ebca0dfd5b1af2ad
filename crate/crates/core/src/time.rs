//! UTC timestamp and duration helpers shared by the CSV and CLI layers.

use chrono::{DateTime, NaiveDateTime, TimeDelta, Utc};

pub type Timestamp = DateTime<Utc>;

const CANONICAL: &str = "%Y-%m-%dT%H:%M:%SZ";

/// Parses an ISO-8601 UTC instant. Offsets other than `Z`/`+00:00` are rejected.
pub fn parse_utc(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        if dt.offset().local_minus_utc() != 0 {
            return None;
        }
        return Some(dt.with_timezone(&Utc));
    }
    // Minute-precision form such as 2022-05-13T08:00Z.
    let body = s.strip_suffix('Z')?;
    NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M")
        .ok()
        .map(|n| n.and_utc())
}

pub fn format_utc(t: Timestamp) -> String {
    t.format(CANONICAL).to_string()
}

pub fn hours(h: i64) -> TimeDelta {
    TimeDelta::hours(h)
}

pub fn minutes(m: i64) -> TimeDelta {
    TimeDelta::minutes(m)
}

/// True when `t` sits on the epoch-anchored grid of step `step`.
pub fn is_aligned(t: Timestamp, step: TimeDelta) -> bool {
    let s = step.num_seconds();
    s > 0 && t.timestamp().rem_euclid(s) == 0 && t.timestamp_subsec_nanos() == 0
}

/// Start of the epoch-anchored bucket of width `step` containing `t`.
pub fn floor_to(t: Timestamp, step: TimeDelta) -> Timestamp {
    let s = step.num_seconds();
    let secs = t.timestamp() - t.timestamp().rem_euclid(s);
    DateTime::from_timestamp(secs, 0).expect("in range")
}

/// Number of whole `step`s in `span`, or `None` when `step` does not divide it.
pub fn ratio(span: TimeDelta, step: TimeDelta) -> Option<i64> {
    let (a, b) = (span.num_seconds(), step.num_seconds());
    if b <= 0 || a < 0 || a % b != 0 {
        None
    } else {
        Some(a / b)
    }
}

/// Parses durations like `5m`, `1h`, `3d`, `1w`, or a bare number of hours.
pub fn parse_duration(s: &str) -> Option<TimeDelta> {
    let s = s.trim();
    let (num, unit) = match s.find(|c: char| !c.is_ascii_digit()) {
        Some(i) => s.split_at(i),
        None => (s, "h"),
    };
    let n: i64 = num.parse().ok()?;
    match unit {
        "s" => Some(TimeDelta::seconds(n)),
        "m" | "min" => Some(TimeDelta::minutes(n)),
        "h" => Some(TimeDelta::hours(n)),
        "d" => Some(TimeDelta::days(n)),
        "w" => Some(TimeDelta::weeks(n)),
        _ => None,
    }
}

/// Compact rendering used in labels: `5m`, `1h`, `24h`.
pub fn format_duration(d: TimeDelta) -> String {
    let s = d.num_seconds();
    if s % 3600 == 0 {
        format!("{}h", s / 3600)
    } else if s % 60 == 0 {
        format!("{}m", s / 60)
    } else {
        format!("{s}s")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_precisions() {
        let a = parse_utc("2022-05-13T08:00Z").unwrap();
        let b = parse_utc("2022-05-13T08:00:00Z").unwrap();
        assert_eq!(a, b);
        assert_eq!(format_utc(a), "2022-05-13T08:00:00Z");
        assert!(parse_utc("2022-05-13T08:00:00+02:00").is_none());
        assert!(parse_utc("2022-05-13 08:00").is_none());
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("5m"), Some(minutes(5)));
        assert_eq!(parse_duration("6"), Some(hours(6)));
        assert_eq!(parse_duration("1w"), Some(hours(168)));
        assert_eq!(format_duration(hours(24)), "24h");
        assert_eq!(ratio(hours(1), minutes(5)), Some(12));
        assert_eq!(ratio(hours(1), minutes(7)), None);
    }
}
