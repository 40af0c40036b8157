//! Wall-clock abstraction so TTLs and timestamps can be driven by tests.

use std::fmt;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};

/// UTC instant at one-second resolution, rendered as RFC 3339 (`...Z`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Timestamp(i64);

impl Timestamp {
    pub fn from_unix(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub fn unix(self) -> i64 {
        self.0
    }

    pub fn plus_secs(self, secs: u64) -> Self {
        Timestamp(self.0 + secs as i64)
    }

    pub fn datetime(self) -> DateTime<Utc> {
        Utc.timestamp_opt(self.0, 0).single().expect("timestamp in range")
    }

    pub fn date(self) -> NaiveDate {
        self.datetime().date_naive()
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        DateTime::parse_from_rfc3339(s)
            .map(|dt| Timestamp(dt.timestamp()))
            .map_err(|e| format!("bad timestamp {s:?}: {e}"))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.datetime().to_rfc3339_opts(SecondsFormat::Secs, true))
    }
}

impl TryFrom<String> for Timestamp {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Timestamp::parse(&s)
    }
}

impl From<Timestamp> for String {
    fn from(t: Timestamp) -> String {
        t.to_string()
    }
}

/// Whole years from `birth` to `today`.
pub fn age_in_years(birth: NaiveDate, today: NaiveDate) -> u32 {
    use chrono::Datelike;
    let mut years = today.year() - birth.year();
    if (today.month(), today.day()) < (birth.month(), birth.day()) {
        years -= 1;
    }
    years.max(0) as u32
}

pub trait Clock: Send + Sync + fmt::Debug {
    fn now(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp(Utc::now().timestamp())
    }
}

/// Clock that only moves when told to. Clones share the same instant.
#[derive(Debug, Clone)]
pub struct ManualClock(Arc<AtomicI64>);

impl ManualClock {
    pub fn new(start: Timestamp) -> Self {
        ManualClock(Arc::new(AtomicI64::new(start.0)))
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs as i64, Ordering::SeqCst);
    }

    pub fn set(&self, t: Timestamp) {
        self.0.store(t.0, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        Timestamp(self.0.load(Ordering::SeqCst))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_rfc3339_seconds() {
        let t = Timestamp::from_unix(1_622_505_600);
        assert_eq!(t.to_string(), "2021-06-01T00:00:00Z");
        assert_eq!(Timestamp::parse("2021-06-01T00:00:00Z").unwrap(), t);
    }

    #[test]
    fn age_respects_birthday() {
        let d = |y, m, dd| NaiveDate::from_ymd_opt(y, m, dd).unwrap();
        assert_eq!(age_in_years(d(1994, 6, 1), d(2021, 6, 1)), 27);
        assert_eq!(age_in_years(d(1994, 6, 2), d(2021, 6, 1)), 26);
    }

    #[test]
    fn manual_clock_is_shared() {
        let c = ManualClock::new(Timestamp::from_unix(0));
        let c2 = c.clone();
        c.advance(5);
        assert_eq!(c2.now().unix(), 5);
    }
}
